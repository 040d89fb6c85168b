//! LZW compressibility `C` and the perturbation growth rate `k`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eca::{step, BitState, RuleTable};
use crate::error::{Error, Result};
use crate::variants::{System, VariantConfig};

/// Row-major cell bits, one row per time step, no separators.
pub fn serialize_trajectory(states: &[BitState]) -> Vec<u8> {
    let mut out = Vec::with_capacity(states.iter().map(|s| s.width()).sum());
    for s in states {
        out.extend(s.cells());
    }
    out
}

fn bits_for(dict_size: usize) -> u64 {
    debug_assert!(dict_size >= 2);
    (usize::BITS - (dict_size - 1).leading_zeros()) as u64
}

/// Binary-alphabet LZW dictionary stored as a trie: node `n` has children
/// `next[n][0]` and `next[n][1]`, 0 meaning absent. Codes 0 and 1 are the
/// single symbols.
struct Trie {
    next: Vec<[u32; 2]>,
}

impl Trie {
    fn new() -> Self {
        Trie { next: vec![[0, 0], [0, 0]] }
    }

    fn len(&self) -> usize {
        self.next.len()
    }
}

/// Greedy longest-match LZW codes over `{0, 1}` with an unbounded dictionary.
pub fn lzw_encode(symbols: &[u8]) -> Vec<u32> {
    let mut codes = Vec::new();
    lzw_walk(symbols, |code, _| codes.push(code));
    codes
}

/// Total output size when each code is written with `ceil(log2(dictionary
/// size))` bits at the moment it is emitted.
pub fn lzw_compress_bits(symbols: &[u8]) -> u64 {
    let mut total = 0u64;
    lzw_walk(symbols, |_, dict_size| total += bits_for(dict_size));
    total
}

fn lzw_walk(symbols: &[u8], mut emit: impl FnMut(u32, usize)) {
    let Some((&first, rest)) = symbols.split_first() else {
        return;
    };
    assert!(first <= 1, "symbols must be 0 or 1");
    let mut trie = Trie::new();
    let mut cur = first as u32;
    for &c in rest {
        assert!(c <= 1, "symbols must be 0 or 1");
        let child = trie.next[cur as usize][c as usize];
        if child != 0 {
            cur = child;
        } else {
            emit(cur, trie.len());
            let new = trie.len() as u32;
            trie.next.push([0, 0]);
            trie.next[cur as usize][c as usize] = new;
            cur = c as u32;
        }
    }
    emit(cur, trie.len());
}

/// Inverse of [`lzw_encode`].
pub fn lzw_decode(codes: &[u32]) -> Result<Vec<u8>> {
    let bad = |c: u32| Error::Format(format!("invalid LZW code {c}"));
    let mut entries: Vec<Vec<u8>> = vec![vec![0], vec![1]];
    let mut out = Vec::new();
    let Some((&first, rest)) = codes.split_first() else {
        return Ok(out);
    };
    let mut prev = entries.get(first as usize).ok_or_else(|| bad(first))?.clone();
    out.extend_from_slice(&prev);
    for &code in rest {
        let entry = if (code as usize) < entries.len() {
            entries[code as usize].clone()
        } else if code as usize == entries.len() {
            let mut e = prev.clone();
            e.push(prev[0]);
            e
        } else {
            return Err(bad(code));
        };
        let mut added = prev.clone();
        added.push(entry[0]);
        entries.push(added);
        out.extend_from_slice(&entry);
        prev = entry;
    }
    Ok(out)
}

/// Steps used for a normalization run: `min(steps, 2^{2w})`.
pub fn normalization_steps(w: usize, steps: u64) -> u64 {
    let full = 1u64.checked_shl(2 * w as u32).filter(|_| 2 * w < 64).unwrap_or(u64::MAX);
    steps.min(full)
}

/// Desk-scale defaults for the normalization ensemble.
pub const NORM_DEFAULT_SAMPLES: u64 = 10_000;
pub const NORM_DEFAULT_STEPS: u64 = 65_536;

fn norm_sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Compressed size of one random isolated ECA of width `w`, sample `index`.
pub fn normalization_sample(w: usize, steps: u64, seed: u64, index: u64) -> Result<u64> {
    let mut rng = norm_sample_rng(seed, index);
    let rule = RuleTable::new(rng.random());
    let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
    let mut state = BitState::new(rng.random::<u64>() & mask, w)?;
    let rows = normalization_steps(w, steps) + 1;
    let mut symbols = Vec::with_capacity(rows as usize * w);
    for _ in 0..rows {
        symbols.extend(state.cells());
        state = step(rule, state);
    }
    Ok(lzw_compress_bits(&symbols))
}

/// Largest compressed size over `samples` random isolated ECA of width `w`,
/// each run for `min(steps, 2^{2w})` steps. Memoized per argument tuple.
pub fn normalization_constant(w: usize, samples: u64, steps: u64, seed: u64) -> Result<u64> {
    type Memo = Mutex<HashMap<(usize, u64, u64, u64), u64>>;
    static MEMO: OnceLock<Memo> = OnceLock::new();
    if samples == 0 {
        return Err(Error::Config("normalization needs at least one sample".into()));
    }
    BitState::zeros(w)?;
    let memo = MEMO.get_or_init(Default::default);
    if let Some(&v) = memo.lock().unwrap().get(&(w, samples, steps, seed)) {
        return Ok(v);
    }
    let max = (0..samples)
        .into_par_iter()
        .map(|i| normalization_sample(w, steps, seed, i))
        .try_reduce(|| 0, |a, b| Ok(a.max(b)))?;
    memo.lock().unwrap().insert((w, samples, steps, seed), max);
    Ok(max)
}

/// `compressed bits / norm_bits`; larger means simpler.
pub fn compressibility(states: &[BitState], norm_bits: u64) -> f64 {
    lzw_compress_bits(&serialize_trajectory(states)) as f64 / norm_bits as f64
}

/// Growth rate of a single-cell perturbation.
#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub enum Lyapunov {
    Rate(f64),
    /// The perturbation vanished after one step.
    Extinct,
}

impl Lyapunov {
    pub fn rate(self) -> Option<f64> {
        match self {
            Lyapunov::Rate(k) => Some(k),
            Lyapunov::Extinct => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub compressed_bits: u64,
    pub norm_bits: u64,
    pub c: f64,
    pub k: Lyapunov,
}

/// Hamming distances `y(1..=horizon)` between a run and its copy with organism
/// cell `perturb_bit` flipped. Both copies share the environment and noise.
pub fn divergence(config: &VariantConfig, perturb_bit: usize, horizon: u64) -> Result<Vec<u32>> {
    if perturb_bit >= config.w_o() {
        return Err(Error::Config(format!(
            "perturbed cell {perturb_bit} is outside an organism of width {}",
            config.w_o()
        )));
    }
    let mut perturbed_cfg = *config;
    perturbed_cfg.organism = config.organism.with_cell_flipped(perturb_bit);
    let mut base = System::new(*config);
    let mut perturbed = System::new(perturbed_cfg);
    Ok((0..horizon)
        .map(|_| base.advance().s_o.hamming(perturbed.advance().s_o))
        .collect())
}

/// Least-squares `k` for `y(t) = e^{kt}` (no intercept) over `t = 1, 2, ...`,
/// stopping before the first zero and after the first saturated value.
pub fn fit_rate(y: &[u32], width: usize) -> Lyapunov {
    if y.first().is_none_or(|&v| v == 0) {
        return Lyapunov::Extinct;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        if v == 0 {
            break;
        }
        let t = (i + 1) as f64;
        num += t * (v as f64).ln();
        den += t * t;
        if v as usize >= width {
            break;
        }
    }
    Lyapunov::Rate(num / den)
}

pub fn lyapunov(config: &VariantConfig, perturb_bit: usize, horizon: u64) -> Result<Lyapunov> {
    if horizon < 2 {
        return Err(Error::Config(format!("Lyapunov horizon {horizon} is below 2")));
    }
    let y = divergence(config, perturb_bit, horizon)?;
    Ok(fit_rate(&y, config.w_o()))
}

/// Mean rate over every perturbation position; extinct positions are skipped.
pub fn lyapunov_mean(config: &VariantConfig, horizon: u64) -> Result<Lyapunov> {
    let mut rates = Vec::new();
    for p in 0..config.w_o() {
        if let Lyapunov::Rate(k) = lyapunov(config, p, horizon)? {
            rates.push(k);
        }
    }
    if rates.is_empty() {
        return Ok(Lyapunov::Extinct);
    }
    Ok(Lyapunov::Rate(rates.iter().sum::<f64>() / rates.len() as f64))
}

/// Which perturbation the Lyapunov estimate uses.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    Single(usize),
    Average,
}

impl PerturbMode {
    pub fn estimate(self, config: &VariantConfig, horizon: u64) -> Result<Lyapunov> {
        match self {
            PerturbMode::Single(p) => lyapunov(config, p, horizon),
            PerturbMode::Average => lyapunov_mean(config, horizon),
        }
    }

    pub fn label(self) -> String {
        match self {
            PerturbMode::Single(p) => format!("single:{p}"),
            PerturbMode::Average => "average".into(),
        }
    }
}

impl std::str::FromStr for PerturbMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "average" => Ok(PerturbMode::Average),
            Some(("single", p)) => p
                .parse()
                .map(PerturbMode::Single)
                .map_err(|_| Error::Config(format!("bad perturbed cell {p:?}"))),
            _ => Err(Error::Config(format!("perturbation {s:?} is neither `average` nor `single:<cell>`"))),
        }
    }
}

/// Default horizon `min(t_r, 2^{w_o})`, raised to the minimum of 2.
pub fn default_horizon(t_r: u64, w_o: usize) -> u64 {
    t_r.min(1u64 << w_o.min(63)).max(2)
}
