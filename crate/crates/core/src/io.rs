//! File emitters and readers: records CSV, report JSON, SVG plots, PGM
//! renders, trajectory CSV and the normalization cache.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::complexity::Lyapunov;
use crate::eca::{BitState, WideState};
use crate::ensemble::{BoxStats, EnsembleReport, ExecutionRecord, HeatRow, LogHistogram, ScatterPoint};
use crate::error::{Error, Result};
use crate::variants::{Snapshot, Variant};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed write leaves nothing behind.
pub fn write_atomically(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let mut w = BufWriter::new(tmp);
    body(&mut w)?;
    let tmp = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Resolved configuration echoed into every output.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(command: &str) -> Self {
        Metadata {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    fn comment_lines(&self) -> String {
        let mut s = format!("# {} {} {}\n", self.tool, self.version, self.command);
        for (k, v) in &self.config {
            let _ = writeln!(s, "# {k} = {v}");
        }
        s
    }
}

pub const RECORD_COLUMNS: [&str; 25] = [
    "variant",
    "w_o",
    "w_e",
    "mu",
    "seed",
    "init_rule_o",
    "rule_e",
    "init_state_o",
    "init_state_e",
    "t_P",
    "t_r",
    "t_r_rule",
    "t_a",
    "inn",
    "ue",
    "oee",
    "attractor_ue",
    "n_rule_transitions",
    "innovation_I",
    "compressed_bits",
    "norm_bits",
    "C",
    "k",
    "censored",
    "attractor_rules",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn record_fields(r: &ExecutionRecord) -> Vec<String> {
    let k = match r.k {
        Some(Lyapunov::Rate(k)) => k.to_string(),
        Some(Lyapunov::Extinct) => "extinct".into(),
        None => String::new(),
    };
    let rules = r
        .attractor_rules
        .iter()
        .map(|(rule, n)| format!("{rule}:{n}"))
        .collect::<Vec<_>>()
        .join(";");
    vec![
        r.variant.to_string(),
        r.w_o.to_string(),
        r.w_e.to_string(),
        r.mu.to_string(),
        r.seed.to_string(),
        r.init_rule_o.to_string(),
        opt(r.rule_e),
        r.init_state_o.to_hex(),
        opt(r.init_state_e.map(|s| s.to_hex())),
        r.t_p.to_string(),
        opt(r.t_r),
        opt(r.t_r_rule),
        opt(r.t_a),
        opt(r.inn),
        opt(r.ue),
        opt(r.oee),
        opt(r.attractor_ue),
        opt(r.n_rule_transitions),
        opt(r.innovation_i),
        opt(r.compressed_bits),
        opt(r.norm_bits),
        opt(r.c),
        k,
        r.censored.to_string(),
        rules,
    ]
}

pub fn write_records(records: &[ExecutionRecord], meta: &Metadata, out: &mut dyn Write) -> Result<()> {
    out.write_all(meta.comment_lines().as_bytes()).map_err(|e| Error::io("<records>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush().map_err(|e| Error::io("<records>", e))?;
    Ok(())
}

pub fn write_records_csv(records: &[ExecutionRecord], meta: &Metadata, path: &Path) -> Result<()> {
    write_atomically(path, |w| write_records(records, meta, w))
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Format(format!("bad {name} value {s:?}")))
}

fn parse_opt<T: std::str::FromStr>(s: &str, name: &str) -> Result<Option<T>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, name).map(Some)
    }
}

fn parse_record(row: &csv::StringRecord) -> Result<ExecutionRecord> {
    if row.len() != RECORD_COLUMNS.len() {
        return Err(Error::Format(format!(
            "expected {} columns, found {}",
            RECORD_COLUMNS.len(),
            row.len()
        )));
    }
    let f = |i: usize| &row[i];
    let variant: Variant = parse_field(f(0), "variant")?;
    let w_o: usize = parse_field(f(1), "w_o")?;
    let w_e: usize = parse_field(f(2), "w_e")?;
    let init_state_e = if f(8).is_empty() { None } else { Some(BitState::from_hex(f(8), w_e)?) };
    let k = match f(22) {
        "" => None,
        "extinct" => Some(Lyapunov::Extinct),
        s => Some(Lyapunov::Rate(parse_field(s, "k")?)),
    };
    let attractor_rules = if f(24).is_empty() {
        Vec::new()
    } else {
        f(24)
            .split(';')
            .map(|pair| {
                let (rule, n) = pair
                    .split_once(':')
                    .ok_or_else(|| Error::Format(format!("bad attractor rule entry {pair:?}")))?;
                Ok((parse_field(rule, "attractor rule")?, parse_field(n, "attractor count")?))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ExecutionRecord {
        variant,
        w_o,
        w_e,
        mu: parse_field(f(3), "mu")?,
        seed: parse_field(f(4), "seed")?,
        init_rule_o: parse_field(f(5), "init_rule_o")?,
        rule_e: parse_opt(f(6), "rule_e")?,
        init_state_o: BitState::from_hex(f(7), w_o)?,
        init_state_e,
        t_p: parse_field(f(9), "t_P")?,
        t_r: parse_opt(f(10), "t_r")?,
        t_r_rule: parse_opt(f(11), "t_r_rule")?,
        t_a: parse_opt(f(12), "t_a")?,
        inn: parse_opt(f(13), "inn")?,
        ue: parse_opt(f(14), "ue")?,
        oee: parse_opt(f(15), "oee")?,
        attractor_ue: parse_opt(f(16), "attractor_ue")?,
        n_rule_transitions: parse_opt(f(17), "n_rule_transitions")?,
        innovation_i: parse_opt(f(18), "innovation_I")?,
        compressed_bits: parse_opt(f(19), "compressed_bits")?,
        norm_bits: parse_opt(f(20), "norm_bits")?,
        c: parse_opt(f(21), "C")?,
        k,
        censored: parse_field(f(23), "censored")?,
        attractor_rules,
    })
}

pub fn read_records(input: impl std::io::Read) -> Result<Vec<ExecutionRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(Error::Format("records header does not match the expected columns".into()));
    }
    r.records().map(|row| parse_record(&row?)).collect()
}

pub fn read_records_csv(path: &Path) -> Result<Vec<ExecutionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(BufReader::new(file))
}

/// Notes on places where the implementation departs from printed formulas.
pub const ERRATA: [&str; 3] = [
    "sample space is 88^2 * 2^w_o * 2^w_e; the printed exponents 2^(8 w_e) * 2^(8 w_o) do not match state spaces of size 2^w",
    "C divides compressed bits by the ensemble maximum over random ECA of the full system width, not by max(C_i(s), length(s))",
    "Case III flips a rule bit when xi < mu",
];

#[derive(Serialize)]
struct ReportFile<'a> {
    metadata: ReportMetadata<'a>,
    report: &'a EnsembleReport,
}

#[derive(Serialize)]
struct ReportMetadata<'a> {
    #[serde(flatten)]
    meta: &'a Metadata,
    sample_space: Option<String>,
    published_space: Option<f64>,
    errata: &'a [&'a str],
}

pub fn write_report_json(
    report: &EnsembleReport,
    meta: &Metadata,
    sample_space: Option<u128>,
    published_space: Option<f64>,
    path: &Path,
) -> Result<()> {
    let file = ReportFile {
        metadata: ReportMetadata {
            meta,
            sample_space: sample_space.map(|s| s.to_string()),
            published_space,
            errata: &ERRATA,
        },
        report,
    };
    write_atomically(path, |w| {
        serde_json::to_writer_pretty(&mut *w, &file)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

/// Binary P5 greymap, one pixel per cell: 0 white, 1 black.
pub fn write_pgm(rows: &[WideState], out: &mut dyn Write) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.width());
    if rows.iter().any(|r| r.width() != width) {
        return Err(Error::Format("rows of a render must share one width".into()));
    }
    let io_err = |e| Error::io("<pgm>", e);
    write!(out, "P5\n{} {}\n255\n", width, rows.len()).map_err(io_err)?;
    for row in rows {
        let px: Vec<u8> = row.cells().iter().map(|&c| if c == 1 { 255 } else { 0 }).collect();
        out.write_all(&px).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_pgm_file(rows: &[WideState], path: &Path) -> Result<()> {
    write_atomically(path, |w| write_pgm(rows, w))
}

/// Trajectory of a single run: one row per snapshot.
pub fn write_trajectory(snapshots: &[Snapshot], meta: &Metadata, out: &mut dyn Write) -> Result<()> {
    out.write_all(meta.comment_lines().as_bytes()).map_err(|e| Error::io("<trajectory>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "s_o", "r_o", "s_e", "r_e"])?;
    for s in snapshots {
        w.write_record([
            s.t.to_string(),
            s.s_o.to_string(),
            s.r_o.number().to_string(),
            opt(s.s_e),
            opt(s.r_e.map(|r| r.number())),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trajectory>", e))?;
    Ok(())
}

pub fn write_trajectory_csv(snapshots: &[Snapshot], meta: &Metadata, path: &Path) -> Result<()> {
    write_atomically(path, |w| write_trajectory(snapshots, meta, w))
}

/// One line of the normalization cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormEntry {
    pub w: usize,
    pub samples: u64,
    pub steps: u64,
    pub seed: u64,
    pub max_bits: u64,
}

pub fn read_norm_cache(path: &Path) -> Result<Vec<NormEntry>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Format(format!("{}:{}: expected `w samples steps seed max_bits`", path.display(), n + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| bad());
        out.push(NormEntry {
            w: num(f[0])? as usize,
            samples: num(f[1])?,
            steps: num(f[2])?,
            seed: num(f[3])?,
            max_bits: num(f[4])?,
        });
    }
    Ok(out)
}

/// Writes the entries sorted and deduplicated by their key.
pub fn write_norm_cache(entries: &[NormEntry], path: &Path) -> Result<()> {
    let mut map = BTreeMap::new();
    for e in entries {
        map.insert((e.w, e.samples, e.steps, e.seed), e.max_bits);
    }
    write_atomically(path, |w| {
        for ((width, samples, steps, seed), max_bits) in map {
            writeln!(w, "{width} {samples} {steps} {seed} {max_bits}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

pub fn lookup_norm(entries: &[NormEntry], w: usize, samples: u64, steps: u64, seed: u64) -> Option<u64> {
    entries
        .iter()
        .find(|e| (e.w, e.samples, e.steps, e.seed) == (w, samples, steps, seed))
        .map(|e| e.max_bits)
}

// Minimal SVG plots.

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        SVG_W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0, x1, y1) = (MARGIN, SVG_H - MARGIN, SVG_W - MARGIN / 2.0, MARGIN / 2.0);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        SVG_H - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn plot_w() -> f64 {
    SVG_W - 1.5 * MARGIN
}

fn plot_h() -> f64 {
    SVG_H - 1.5 * MARGIN
}

/// Bars of a base-2 histogram of `t / t_P`; bar `b` spans `[2^b, 2^{b+1})`.
pub fn svg_histogram(title: &str, h: &LogHistogram) -> String {
    let mut s = svg_open(title);
    axes(&mut s, "log2(t / t_P) bin", "executions");
    let mut bars: Vec<(String, u64)> = Vec::new();
    if h.zero > 0 {
        bars.push(("0".into(), h.zero));
    }
    bars.extend(h.bins.iter().map(|(b, n)| (b.to_string(), *n)));
    let max = bars.iter().map(|b| b.1).max().unwrap_or(1).max(1) as f64;
    let bw = plot_w() / bars.len().max(1) as f64;
    for (i, (label, n)) in bars.iter().enumerate() {
        let hgt = *n as f64 / max * plot_h();
        let x = MARGIN + i as f64 * bw;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{hgt:.1}\" fill=\"steelblue\"><title>{n}</title></rect>",
            SVG_H - MARGIN - hgt,
            bw * 0.9
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{label}</text>",
            x + bw * 0.45,
            SVG_H - MARGIN + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Box plots on a log2 axis, with a reference line at ratio 1.
pub fn svg_box_plots(title: &str, boxes: &[(String, BoxStats)]) -> String {
    let mut s = svg_open(title);
    axes(&mut s, "", "log2(t / t_P)");
    let vals: Vec<f64> = boxes
        .iter()
        .flat_map(|(_, b)| [b.min, b.max])
        .filter(|v| *v > 0.0)
        .map(f64::log2)
        .chain([0.0])
        .collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min).floor();
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil().max(lo + 1.0);
    let y = |v: f64| {
        let l = if v > 0.0 { v.log2() } else { lo };
        SVG_H - MARGIN - (l - lo) / (hi - lo) * plot_h()
    };
    let _ = writeln!(
        s,
        "<line x1=\"{MARGIN}\" y1=\"{0:.1}\" x2=\"{1}\" y2=\"{0:.1}\" stroke=\"black\" stroke-dasharray=\"4\"/>",
        y(1.0),
        SVG_W - MARGIN / 2.0
    );
    let bw = plot_w() / boxes.len().max(1) as f64;
    for (i, (label, b)) in boxes.iter().enumerate() {
        let cx = MARGIN + (i as f64 + 0.5) * bw;
        let half = bw * 0.25;
        let _ = writeln!(
            s,
            "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            y(b.whisker_low),
            y(b.whisker_high)
        );
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"lightsteelblue\" stroke=\"black\"/>",
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{2:.1}\" x2=\"{:.1}\" y2=\"{2:.1}\" stroke=\"black\" stroke-width=\"2\"/>",
            cx - half,
            cx + half,
            y(b.median)
        );
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            SVG_H - MARGIN + 14.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Relative innovation against recurrence time; OEE points in red.
pub fn svg_scatter(title: &str, points: &[ScatterPoint]) -> String {
    let mut s = svg_open(title);
    axes(&mut s, "t_r", "I");
    let max_t = points.iter().map(|p| p.t_r).max().unwrap_or(1).max(1) as f64;
    let max_i = points.iter().map(|p| p.innovation_i).fold(0.0, f64::max).max(1e-9);
    for p in points {
        let x = MARGIN + p.t_r as f64 / max_t * plot_w();
        let y = SVG_H - MARGIN - p.innovation_i / max_i * plot_h();
        let colour = if p.oee { "red" } else { "gray" };
        let _ = writeln!(s, "<circle cx=\"{x:.1}\" cy=\"{y:.1}\" r=\"2\" fill=\"{colour}\"/>");
    }
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{}\">{max_t}</text><text x=\"5\" y=\"{}\">{max_i:.3}</text>",
        SVG_H - MARGIN + 14.0,
        MARGIN / 2.0 + 4.0
    );
    s.push_str("</svg>\n");
    s
}

/// Heat map with one row per labelled distribution; shade is the fraction.
pub fn svg_heatmap(title: &str, x_label: &str, rows: &[(String, HeatRow)]) -> String {
    let mut s = svg_open(title);
    axes(&mut s, x_label, "");
    let max = rows
        .iter()
        .flat_map(|(_, r)| r.fractions.iter().copied())
        .fold(0.0, f64::max)
        .max(1e-12);
    let rh = plot_h() / rows.len().max(1) as f64;
    for (j, (label, row)) in rows.iter().enumerate() {
        let cw = plot_w() / row.counts.len().max(1) as f64;
        let y = MARGIN / 2.0 + j as f64 * rh;
        for (i, f) in row.fractions.iter().enumerate() {
            let shade = 255 - (f / max * 255.0).round() as u8;
            let _ = writeln!(
                s,
                "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"{cw:.1}\" height=\"{rh:.1}\" fill=\"rgb({shade},{shade},255)\"><title>{f}</title></rect>",
                MARGIN + i as f64 * cw
            );
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>", MARGIN - 4.0, y + rh / 2.0, escape(label));
        let _ = writeln!(
            s,
            "<text x=\"{MARGIN}\" y=\"{0}\">{1}</text><text x=\"{2}\" y=\"{0}\" text-anchor=\"end\">{3}</text>",
            SVG_H - MARGIN + 14.0,
            row.lo,
            SVG_W - MARGIN / 2.0,
            row.hi
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_svg(svg: &str, path: &Path) -> Result<()> {
    write_atomically(path, |w| w.write_all(svg.as_bytes()).map_err(|e| Error::io(path, e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eca::RuleTable;

    #[test]
    fn empty_records_give_header_only() {
        let mut buf = Vec::new();
        write_records(&[], &Metadata::new("ensemble").with("seed", 1), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec![RECORD_COLUMNS.join(",")]);
        assert!(read_records(text.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn pgm_of_identity_rule_repeats_rows() {
        let start = WideState::new(vec![0, 1, 1, 0, 1]).unwrap();
        let rows: Vec<WideState> = (0..4).map(|_| start.step(RuleTable::IDENTITY)).collect();
        let mut buf = Vec::new();
        write_pgm(&rows, &mut buf).unwrap();
        let header = b"P5\n5 4\n255\n";
        assert_eq!(&buf[..header.len()], header);
        let px = &buf[header.len()..];
        assert_eq!(px.len(), 20);
        assert_eq!(&px[..5], &[0, 255, 255, 0, 255]);
        assert!(px.chunks(5).all(|r| r == &px[..5]));
    }

    #[test]
    fn atomic_write_leaves_nothing_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        let res = write_atomically(&path, |w| {
            w.write_all(b"partial").unwrap();
            Err(Error::Format("boom".into()))
        });
        assert!(res.is_err());
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn norm_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("norm.txt");
        let e = NormEntry { w: 8, samples: 10, steps: 100, seed: 0, max_bits: 1234 };
        write_norm_cache(&[e, e], &path).unwrap();
        let back = read_norm_cache(&path).unwrap();
        assert_eq!(back, vec![e]);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "8 10 100 0 1234\n");
        assert_eq!(lookup_norm(&back, 8, 10, 100, 0), Some(1234));
        std::fs::write(&path, "8 10 100\n").unwrap();
        assert!(read_norm_cache(&path).is_err());
    }

    #[test]
    fn malformed_csv_is_a_format_error() {
        let text = format!("{}\ncase1,3\n", RECORD_COLUMNS.join(","));
        let err = read_records(text.as_bytes()).unwrap_err();
        assert!(err.is_data_error());
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn svgs_are_well_formed() {
        let mut h = LogHistogram::default();
        h.add(3, 3);
        h.add(20, 3);
        let svg = svg_histogram("t_r / t_P", &h);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect x=").count(), 2);
    }
}
