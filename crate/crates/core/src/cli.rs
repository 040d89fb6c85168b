//! The `oee` command line.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity::{normalization_constant, NORM_DEFAULT_SAMPLES, NORM_DEFAULT_STEPS};
use crate::eca::{canonical_rules, BitState, ClassTable, RuleTable, WideState};
use crate::ensemble::{
    aggregate, env_width_for_ratio, innovation_window, published_space, run_ensemble_normalized,
    sample_space_size, draw_plan, SamplePlan,
};
use crate::error::{Error, Result};
use crate::innovation::{is_eca_reproducible, CounterfactualSet};
use crate::io::{self, Metadata, NormEntry};
use crate::recurrence::projected_recurrence;
use crate::variants::{run_steps, run_trajectory, run_wide, Variant, VariantConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "oee", version, about = "Open-ended evolution in coupled elementary cellular automata")]
pub struct Cli {
    /// Flat `key = value` file whose entries act as defaults for the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one configuration and write its trajectory.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Sample an ensemble and write records plus a report.
    #[command(args_override_self = true)]
    Ensemble(EnsembleArgs),
    /// Build or verify the counterfactual trajectory cache.
    #[command(args_override_self = true)]
    Oracle(OracleArgs),
    /// Build the compressibility normalization cache.
    #[command(args_override_self = true)]
    Norm(NormArgs),
    /// Recompute a report and plots from a records file.
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Draw a wide run as a greymap.
    #[command(args_override_self = true)]
    Render(RenderArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, default_value = "case1")]
    pub variant: Variant,
    #[arg(long, default_value_t = 4)]
    pub wo: usize,
    /// Environment width; case2 always uses 8.
    #[arg(long)]
    pub we: Option<usize>,
    #[arg(long)]
    pub rule_o: Option<u8>,
    #[arg(long)]
    pub rule_e: Option<u8>,
    /// Organism state as a binary string, cell 0 first.
    #[arg(long)]
    pub state_o: Option<String>,
    #[arg(long)]
    pub state_e: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    /// Seeds unspecified rules and states, and the case3 noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed number of steps; otherwise run until the stop condition.
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, default_value = "trajectory.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub variant: Variant,
    #[arg(long)]
    pub wo: usize,
    #[arg(long, conflicts_with = "ratio")]
    pub we: Option<usize>,
    /// Environment width as a ratio of `wo`, e.g. `3/2`; rounds down.
    #[arg(long)]
    pub ratio: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, default_value_t = NORM_DEFAULT_SAMPLES)]
    pub norm_samples: u64,
    #[arg(long, default_value_t = NORM_DEFAULT_STEPS)]
    pub norm_steps: u64,
    #[arg(long, default_value_t = 0)]
    pub norm_seed: u64,
    #[arg(long)]
    pub norm_cache: Option<PathBuf>,
    /// `average` or `single:<cell>`.
    #[arg(long, default_value = "average")]
    pub perturb: String,
    #[arg(long)]
    pub class_table: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "records.csv")]
    pub out: PathBuf,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 3)]
    pub wo: usize,
    #[arg(long)]
    pub cache: PathBuf,
    /// Compare the fast check against the cache on this many case1 windows.
    #[arg(long, default_value_t = 0)]
    pub verify: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct NormArgs {
    /// System widths to normalize; repeat or separate with commas.
    #[arg(long, value_delimiter = ',', required = true)]
    pub width: Vec<usize>,
    #[arg(long, default_value_t = NORM_DEFAULT_SAMPLES)]
    pub samples: u64,
    #[arg(long, default_value_t = NORM_DEFAULT_STEPS)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub class_table: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[arg(long, default_value = "case1")]
    pub variant: Variant,
    #[arg(long, default_value_t = 101)]
    pub wo: usize,
    #[arg(long)]
    pub we: Option<usize>,
    #[arg(long)]
    pub rule_o: Option<u8>,
    #[arg(long)]
    pub rule_e: Option<u8>,
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 400)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "render.pgm")]
    pub out: PathBuf,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("config line {}: bad key {:?}", n + 1, k.trim())));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Inserts config entries right after the subcommand so that flags given on
/// the command line, which come later, take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| Error::Config("--config needs a path".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let path = PathBuf::from(path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let Some(sub) = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(rest);
    };
    let at = sub + 2;
    let mut injected = Vec::new();
    for (k, v) in parse_config(&text)? {
        injected.push(OsString::from(format!("--{k}")));
        injected.push(OsString::from(v));
    }
    rest.splice(at..at, injected);
    Ok(rest)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("OEE_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("OEE_THREADS = {v:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match thread_count(threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

fn load_classes(path: &Option<PathBuf>) -> Result<ClassTable> {
    match path {
        Some(p) => ClassTable::load(p),
        None => Ok(ClassTable::bundled().clone()),
    }
}

fn parse_ratio(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("ratio {s:?} is not of the form a/b"));
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a == 0 || b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_state(s: &str, width: usize) -> Result<BitState> {
    let st: BitState = s.parse()?;
    if st.width() != width {
        return Err(Error::WidthMismatch(width, st.width()));
    }
    Ok(st)
}

fn random_rule(rng: &mut ChaCha8Rng) -> u8 {
    let rules = canonical_rules();
    rules[rng.random_range(0..rules.len())]
}

fn random_cells(rng: &mut ChaCha8Rng, width: usize) -> Vec<u8> {
    (0..width).map(|_| rng.random_range(0..2u8)).collect()
}

fn env_width(variant: Variant, we: Option<usize>, wo: usize) -> Result<usize> {
    match variant {
        Variant::Case2 => match we {
            None | Some(8) => Ok(8),
            Some(w) => Err(Error::Config(format!("case2 needs w_e = 8, got {w}"))),
        },
        Variant::Case1 => Ok(we.unwrap_or(wo)),
        _ => match we {
            None | Some(0) => Ok(0),
            Some(_) => Err(Error::Config(format!("{variant} takes no environment"))),
        },
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let we = env_width(a.variant, a.we, a.wo)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let rule_o = RuleTable::from_number(a.rule_o.unwrap_or_else(|| random_rule(&mut rng)) as i64)?;
    let s_o = match &a.state_o {
        Some(s) => parse_state(s, a.wo)?,
        None => BitState::from_cells(&random_cells(&mut rng, a.wo))?,
    };
    let env = if a.variant.has_environment() {
        let rule_e = RuleTable::from_number(a.rule_e.unwrap_or_else(|| random_rule(&mut rng)) as i64)?;
        let s_e = match &a.state_e {
            Some(s) => parse_state(s, we)?,
            None => BitState::from_cells(&random_cells(&mut rng, we))?,
        };
        Some(crate::variants::Environment { state: s_e, rule: rule_e })
    } else {
        None
    };
    let config = VariantConfig::build(a.variant, s_o, rule_o, env, a.mu, a.seed)?;
    let snapshots = match a.steps {
        Some(n) => run_steps(&config, n),
        None => {
            let traj = run_trajectory(&config, a.cap.unwrap_or_else(|| config.default_cap()))?;
            match traj.cycle {
                Some(c) => {
                    let r = projected_recurrence(&traj.organism_states(), c);
                    println!("cycle: pre_period {} period {} t_r {}", c.pre_period, c.period, r.t_rec);
                }
                None if traj.cap_hit => println!("cap reached after {} steps", traj.steps()),
                None => println!("homogeneous after {} steps", traj.steps()),
            }
            traj.snapshots
        }
    };
    let meta = Metadata::new("run")
        .with("variant", a.variant)
        .with("w_o", a.wo)
        .with("w_e", we)
        .with("rule_o", rule_o.number())
        .with("state_o", s_o)
        .with("mu", a.mu)
        .with("seed", a.seed)
        .with("steps", a.steps.map_or("auto".into(), |s| s.to_string()));
    let meta = match env {
        Some(e) => meta.with("rule_e", e.rule.number()).with("state_e", e.state),
        None => meta,
    };
    io::write_trajectory_csv(&snapshots, &meta, &a.out)?;
    if let Some(p) = &a.pgm {
        let rows: Vec<WideState> = snapshots.iter().map(|s| s.s_o.into()).collect();
        io::write_pgm_file(&rows, p)?;
    }
    Ok(())
}

fn resolve_norm(plan: &SamplePlan, cache: &Option<PathBuf>) -> Result<u64> {
    let w = plan.system_width();
    let key = (plan.norm_samples, plan.norm_steps, plan.norm_seed);
    let mut entries = match cache {
        Some(p) if p.exists() => io::read_norm_cache(p)?,
        _ => Vec::new(),
    };
    if let Some(bits) = io::lookup_norm(&entries, w, key.0, key.1, key.2) {
        return Ok(bits);
    }
    let bits = normalization_constant(w, key.0, key.1, key.2)?;
    if let Some(p) = cache {
        entries.push(NormEntry { w, samples: key.0, steps: key.1, seed: key.2, max_bits: bits });
        io::write_norm_cache(&entries, p)?;
    }
    Ok(bits)
}

/// Builds the plan an `ensemble` invocation describes.
pub fn ensemble_plan(a: &EnsembleArgs) -> Result<SamplePlan> {
    let we = match (&a.ratio, a.variant) {
        (Some(r), Variant::Case1) => env_width_for_ratio(a.wo, parse_ratio(r)?),
        (Some(_), v) => return Err(Error::Config(format!("--ratio applies to case1, not {v}"))),
        (None, v) => env_width(v, a.we, a.wo)?,
    };
    let mut plan = SamplePlan::new(a.variant, a.wo, we, a.samples, a.seed);
    if a.variant == Variant::Case3 {
        plan.mu = a.mu;
    }
    plan.step_cap = a.cap;
    plan.norm_samples = a.norm_samples;
    plan.norm_steps = a.norm_steps;
    plan.norm_seed = a.norm_seed;
    plan.perturb = a.perturb.parse()?;
    plan.validate()?;
    Ok(plan)
}

fn plan_metadata(command: &str, plan: &SamplePlan) -> Metadata {
    Metadata::new(command)
        .with("variant", plan.variant)
        .with("w_o", plan.w_o)
        .with("w_e", plan.w_e)
        .with("mu", plan.mu)
        .with("samples", plan.samples)
        .with("seed", plan.master_seed)
        .with("cap", plan.step_cap.map_or("default".into(), |c| c.to_string()))
        .with("norm_samples", plan.norm_samples)
        .with("norm_steps", plan.norm_steps)
        .with("norm_seed", plan.norm_seed)
        .with("perturb", plan.perturb.label())
}

fn cmd_ensemble(a: EnsembleArgs) -> Result<()> {
    let plan = ensemble_plan(&a)?;
    let classes = load_classes(&a.class_table)?;
    let mut meta = plan_metadata("ensemble", &plan);
    if let Some(p) = &a.class_table {
        meta = meta.with("class_table", p.display());
    }
    let records = with_pool(a.threads, || {
        let norm = resolve_norm(&plan, &a.norm_cache)?;
        run_ensemble_normalized(&plan, norm)
    })?;
    io::write_records_csv(&records, &meta, &a.out)?;
    let report = aggregate(&records, &classes)?;
    io::write_report_json(
        &report,
        &meta,
        Some(sample_space_size(plan.variant, plan.w_o, plan.w_e)),
        published_space(plan.variant, plan.w_o, plan.w_e),
        &a.report,
    )?;
    println!(
        "{} {}x{}: OEE {:.2}%  INN {:.2}%  UE {:.2}%  censored {}",
        plan.variant, plan.w_o, plan.w_e, report.oee_percent, report.inn_percent, report.ue_percent, report.censored
    );
    Ok(())
}

/// Agreement counts between the fast check and cache containment over the
/// innovation windows of `samples` case1 draws at `w_o = w_e = width`.
pub fn verify_oracle(set: &CounterfactualSet, samples: u64, seed: u64) -> Result<(u64, u64)> {
    let width = set.width();
    let plan = SamplePlan::new(Variant::Case1, width, width, samples, seed);
    let mut agree = 0;
    let mut total = 0;
    for tuple in draw_plan(&plan)? {
        let config = tuple.config(&plan)?;
        let Some(window) = innovation_window(&config, config.default_cap())? else {
            continue;
        };
        total += 1;
        if is_eca_reproducible(&window)?.is_some() == set.contains(&window)? {
            agree += 1;
        }
    }
    Ok((agree, total))
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let set = CounterfactualSet::load_or_build(&a.cache, a.wo)?;
    println!("cache {}: width {}, {} runs", a.cache.display(), set.width(), set.runs().len());
    if a.verify > 0 {
        let (agree, total) = verify_oracle(&set, a.verify, a.seed)?;
        println!("agreement {agree}/{total}");
        if agree != total {
            return Err(Error::Format(format!("oracle disagreement on {} windows", total - agree)));
        }
    }
    Ok(())
}

fn cmd_norm(a: NormArgs) -> Result<()> {
    let mut entries = if a.cache.exists() { io::read_norm_cache(&a.cache)? } else { Vec::new() };
    with_pool(a.threads, || {
        for &w in &a.width {
            let bits = normalization_constant(w, a.samples, a.steps, a.seed)?;
            println!("width {w}: {bits} bits");
            entries.push(NormEntry { w, samples: a.samples, steps: a.steps, seed: a.seed, max_bits: bits });
        }
        Ok(())
    })?;
    io::write_norm_cache(&entries, &a.cache)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let records = io::read_records_csv(&a.records)?;
    let classes = load_classes(&a.class_table)?;
    let report = aggregate(&records, &classes)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io { path: a.out_dir.clone(), source: e })?;
    let meta = Metadata::new("analyze").with("records", a.records.display());
    let first = &records[0];
    let out = |name: &str| a.out_dir.join(name);
    io::write_report_json(
        &report,
        &meta,
        Some(sample_space_size(first.variant, first.w_o, first.w_e)),
        published_space(first.variant, first.w_o, first.w_e),
        &out("report.json"),
    )?;
    io::write_svg(&io::svg_histogram("t_r / t_P", &report.t_r_histogram), &out("t_r_histogram.svg"))?;
    io::write_svg(&io::svg_histogram("t_a / t_P", &report.t_a_histogram), &out("t_a_histogram.svg"))?;
    let boxes: Vec<(String, _)> = [("t_r / t_P", report.t_r_box), ("t_a / t_P", report.t_a_box)]
        .into_iter()
        .filter_map(|(l, b)| b.map(|b| (l.to_string(), b)))
        .collect();
    io::write_svg(&io::svg_box_plots("recurrence and attractor size", &boxes), &out("box_plots.svg"))?;
    io::write_svg(&io::svg_scatter("innovation vs recurrence", &report.scatter), &out("innovation_scatter.svg"))?;
    let c_rows = vec![("all".to_string(), report.c_heat_all.clone()), ("OEE".to_string(), report.c_heat_oee.clone())];
    io::write_svg(&io::svg_heatmap("compressibility", "C", &c_rows), &out("c_heatmap.svg"))?;
    let k_rows = vec![("all".to_string(), report.k_heat_all.clone()), ("OEE".to_string(), report.k_heat_oee.clone())];
    io::write_svg(&io::svg_heatmap("Lyapunov exponent", "k", &k_rows), &out("k_heatmap.svg"))?;
    println!("{} records, OEE {:.2}%, INN {:.2}%", report.total, report.oee_percent, report.inn_percent);
    Ok(())
}

/// Organism rows of a render; unspecified rules and states come from `seed`.
pub fn render_rows(a: &RenderArgs) -> Result<Vec<WideState>> {
    let we = env_width(a.variant, a.we, a.wo)?;
    if a.wo < 3 {
        return Err(Error::InvalidWidth { width: a.wo, min: 3, max: usize::MAX });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let rule_o = RuleTable::from_number(a.rule_o.unwrap_or_else(|| random_rule(&mut rng)) as i64)?;
    let organism = WideState::new(random_cells(&mut rng, a.wo))?;
    let env = if a.variant.has_environment() {
        let rule_e = RuleTable::from_number(a.rule_e.unwrap_or_else(|| random_rule(&mut rng)) as i64)?;
        Some((WideState::new(random_cells(&mut rng, we))?, rule_e))
    } else {
        None
    };
    run_wide(a.variant, organism, rule_o, env, a.mu, a.seed, a.steps)
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let rows = render_rows(&a)?;
    io::write_pgm_file(&rows, &a.out)
}

fn exit_code(e: &Error) -> i32 {
    if e.is_data_error() {
        EXIT_DATA
    } else {
        EXIT_USAGE
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ensemble(a) => cmd_ensemble(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Norm(a) => cmd_norm(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let kv = parse_config("# comment\nsamples = 10\n\nnorm_steps=4 # trailing\n").unwrap();
        assert_eq!(kv, vec![("samples".into(), "10".into()), ("norm-steps".into(), "4".into())]);
        assert!(parse_config("samples 10").is_err());
    }

    #[test]
    fn config_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        std::fs::write(&cfg, "samples = 7\nseed = 9\n").unwrap();
        let args: Vec<OsString> = ["oee", "--config", cfg.to_str().unwrap(), "ensemble", "--variant", "eca", "--wo", "3", "--samples", "5"]
            .iter()
            .map(OsString::from)
            .collect();
        let cli = Cli::try_parse_from(expand_config(args).unwrap()).unwrap();
        let Command::Ensemble(a) = cli.command else { panic!() };
        assert_eq!((a.samples, a.seed), (5, 9));
    }

    #[test]
    fn ratios() {
        assert_eq!(parse_ratio("3/2").unwrap(), (3, 2));
        assert_eq!(parse_ratio("2").unwrap(), (2, 1));
        assert!(parse_ratio("0/2").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[test]
    fn render_shape() {
        let a = RenderArgs {
            variant: Variant::Case1,
            wo: 101,
            we: Some(101),
            rule_o: None,
            rule_e: None,
            mu: 0.5,
            steps: 400,
            seed: 7,
            out: "unused.pgm".into(),
        };
        let rows = render_rows(&a).unwrap();
        assert_eq!(rows.len(), 400);
        assert!(rows.iter().all(|r| r.width() == 101));
    }
}
