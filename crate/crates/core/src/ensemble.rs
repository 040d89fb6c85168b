//! Sampling plans, per-execution evaluation and ensemble aggregation.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::complexity::{
    default_horizon, lzw_compress_bits, normalization_constant, serialize_trajectory, Lyapunov, PerturbMode,
    NORM_DEFAULT_SAMPLES, NORM_DEFAULT_STEPS,
};
use crate::eca::{canonical_rules, BitState, ClassTable, RuleTable, WolframClass};
use crate::error::{Error, Result};
use crate::innovation::{inn_flag, rule_transitions};
use crate::recurrence::{poincare_time, projected_recurrence};
use crate::variants::{run_steps, run_trajectory, Environment, Variant, VariantConfig, CASE2_ENV_WIDTH};

/// Environment-to-organism width ratios used for Case I, as `(num, den)`.
pub const CASE1_RATIOS: [(usize, usize); 5] = [(1, 2), (1, 1), (3, 2), (2, 1), (5, 2)];

/// `floor(ratio * w_o)`.
pub fn env_width_for_ratio(w_o: usize, ratio: (usize, usize)) -> usize {
    w_o * ratio.0 / ratio.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub variant: Variant,
    pub w_o: usize,
    /// Effective environment width; 0 for variants without one.
    pub w_e: usize,
    pub mu: f64,
    pub samples: u64,
    pub master_seed: u64,
    /// `None` uses the variant's default cap.
    pub step_cap: Option<u64>,
    pub norm_samples: u64,
    pub norm_steps: u64,
    pub norm_seed: u64,
    pub perturb: PerturbMode,
}

impl SamplePlan {
    pub fn new(variant: Variant, w_o: usize, w_e: usize, samples: u64, master_seed: u64) -> Self {
        let w_e = match variant {
            Variant::Case2 => CASE2_ENV_WIDTH,
            Variant::Case1 => w_e,
            _ => 0,
        };
        SamplePlan {
            variant,
            w_o,
            w_e,
            mu: if variant == Variant::Case3 { 0.5 } else { 0.0 },
            samples,
            master_seed,
            step_cap: None,
            norm_samples: NORM_DEFAULT_SAMPLES,
            norm_steps: NORM_DEFAULT_STEPS,
            norm_seed: 0,
            perturb: PerturbMode::Average,
        }
    }

    /// Case I plan with `w_e = floor(ratio * w_o)`.
    pub fn case1_ratio(w_o: usize, ratio: (usize, usize), samples: u64, master_seed: u64) -> Self {
        Self::new(Variant::Case1, w_o, env_width_for_ratio(w_o, ratio), samples, master_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=64).contains(&self.w_o) {
            return Err(Error::InvalidWidth { width: self.w_o, min: 3, max: 64 });
        }
        match self.variant {
            Variant::Case1 if !(1..=64).contains(&self.w_e) => {
                return Err(Error::InvalidWidth { width: self.w_e, min: 1, max: 64 })
            }
            Variant::Case2 if self.w_e != CASE2_ENV_WIDTH => {
                return Err(Error::Config(format!("case2 needs w_e = 8, got {}", self.w_e)))
            }
            Variant::Eca | Variant::Case3 if self.w_e != 0 => {
                return Err(Error::Config(format!("{} takes no environment", self.variant)))
            }
            _ => {}
        }
        if self.variant == Variant::Case3 && !(0.0..1.0).contains(&self.mu) {
            return Err(Error::Config(format!("mu = {} is outside [0, 1)", self.mu)));
        }
        if self.w_o + self.w_e > 64 {
            return Err(Error::Config("w_o + w_e exceeds 64 cells".into()));
        }
        if self.step_cap == Some(0) {
            return Err(Error::Config("step cap must be at least 1".into()));
        }
        if self.norm_samples == 0 {
            return Err(Error::Config("normalization needs at least one sample".into()));
        }
        if let PerturbMode::Single(p) = self.perturb {
            if p >= self.w_o {
                return Err(Error::Config(format!("perturbed cell {p} is outside w_o = {}", self.w_o)));
            }
        }
        let space = sample_space_size(self.variant, self.w_o, self.w_e);
        if self.variant != Variant::Case3 && self.samples as u128 > space {
            return Err(Error::Config(format!(
                "{} samples requested from a space of {space} distinct tuples",
                self.samples
            )));
        }
        Ok(())
    }

    /// Width of the whole system used for the compressibility normalization.
    pub fn system_width(&self) -> usize {
        self.w_o + self.w_e
    }
}

/// Number of distinct initial tuples with rules drawn from the canonical set.
pub fn sample_space_size(variant: Variant, w_o: usize, w_e: usize) -> u128 {
    let n = canonical_rules().len() as u128;
    match variant {
        Variant::Case1 | Variant::Case2 => (n * n) << (w_o + w_e),
        Variant::Eca | Variant::Case3 => n << w_o,
    }
}

/// Sizes of the sampled space as published in the original sampling tables,
/// keyed by `(variant, w_o, w_e)`.
pub fn published_space(variant: Variant, w_o: usize, w_e: usize) -> Option<f64> {
    let case1: [[f64; 5]; 5] = [
        [2.1e6, 4.19e6, 8.34e6, 3.36e7, 6.71e7],
        [4.19e6, 1.68e7, 6.71e7, 2.68e8, 1.074e9],
        [1.68e7, 6.71e7, 2.68e8, 2.15e9, 8.59e8],
        [3.36e7, 2.68e8, 2.15e9, 1.72e10, 1.37e11],
        [1.34e8, 1.07e9, 8.59e9, 1.37e11, 1.1e12],
    ];
    if !(3..=7).contains(&w_o) {
        return None;
    }
    let row = w_o - 3;
    match variant {
        Variant::Case1 => CASE1_RATIOS
            .iter()
            .position(|&r| env_width_for_ratio(w_o, r) == w_e)
            .map(|col| case1[row][col]),
        Variant::Case2 => Some([1.34e8, 2.68e8, 5.37e8, 1.07e9, 2.15e9][row]),
        Variant::Case3 => Some([5.24e5, 1.05e6, 2.1e6, 4.19e6, 8.39e6][row]),
        Variant::Eca => None,
    }
}

/// The initial condition of one execution.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct InitialTuple {
    pub rule_o: u8,
    pub rule_e: Option<u8>,
    pub state_o: BitState,
    pub state_e: Option<BitState>,
    /// Noise seed; 0 for deterministic variants.
    pub seed: u64,
}

impl InitialTuple {
    pub fn config(&self, plan: &SamplePlan) -> Result<VariantConfig> {
        let environment = match (self.state_e, self.rule_e) {
            (Some(state), Some(rule)) => Some(Environment { state, rule: RuleTable::new(rule) }),
            _ => None,
        };
        VariantConfig::build(plan.variant, self.state_o, RuleTable::new(self.rule_o), environment, plan.mu, self.seed)
    }
}

fn mask(w: usize) -> u64 {
    if w == 64 {
        u64::MAX
    } else {
        (1u64 << w) - 1
    }
}

fn tuple_from_index(plan: &SamplePlan, mut idx: u128) -> Result<InitialTuple> {
    let rules = canonical_rules();
    let n = rules.len() as u128;
    let so = (idx % (1u128 << plan.w_o)) as u64;
    idx >>= plan.w_o;
    let (se, re) = if plan.variant.has_environment() {
        let se = (idx % (1u128 << plan.w_e)) as u64;
        idx >>= plan.w_e;
        let re = rules[(idx % n) as usize];
        idx /= n;
        (Some(BitState::new(se, plan.w_e)?), Some(re))
    } else {
        (None, None)
    };
    Ok(InitialTuple {
        rule_o: rules[(idx % n) as usize],
        rule_e: re,
        state_o: BitState::new(so, plan.w_o)?,
        state_e: se,
        seed: 0,
    })
}

fn random_tuple(plan: &SamplePlan, rng: &mut ChaCha8Rng) -> Result<InitialTuple> {
    let rules = canonical_rules();
    let rule_o = rules[rng.random_range(0..rules.len())];
    let state_o = BitState::new(rng.random::<u64>() & mask(plan.w_o), plan.w_o)?;
    let (rule_e, state_e) = if plan.variant.has_environment() {
        let re = rules[rng.random_range(0..rules.len())];
        let se = BitState::new(rng.random::<u64>() & mask(plan.w_e), plan.w_e)?;
        (Some(re), Some(se))
    } else {
        (None, None)
    };
    let seed = if plan.variant == Variant::Case3 { rng.random() } else { 0 };
    Ok(InitialTuple { rule_o, rule_e, state_o, state_e, seed })
}

/// Draws `plan.samples` initial tuples from the plan's seeded stream.
///
/// Deterministic variants never repeat a tuple; Case III may repeat a tuple
/// but gives every execution its own noise seed.
pub fn draw_plan(plan: &SamplePlan) -> Result<Vec<InitialTuple>> {
    plan.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.master_seed);
    let count = plan.samples as usize;
    if plan.variant == Variant::Case3 {
        return (0..count).map(|_| random_tuple(plan, &mut rng)).collect();
    }
    let space = sample_space_size(plan.variant, plan.w_o, plan.w_e);
    if (count as u128) * 2 > space {
        let mut indices: Vec<u64> = (0..space as u64).collect();
        let (chosen, _) = indices.partial_shuffle(&mut rng, count);
        return chosen.iter().map(|&i| tuple_from_index(plan, i as u128)).collect();
    }
    let mut seen = HashSet::with_capacity_and_hasher(count, FxBuildHasher);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = random_tuple(plan, &mut rng)?;
        if seen.insert(t) {
            out.push(t);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionRecord {
    pub variant: Variant,
    pub w_o: usize,
    pub w_e: usize,
    pub mu: f64,
    pub seed: u64,
    pub init_rule_o: u8,
    pub rule_e: Option<u8>,
    pub init_state_o: BitState,
    pub init_state_e: Option<BitState>,
    pub t_p: u128,
    pub t_r: Option<u64>,
    pub t_r_rule: Option<u64>,
    pub t_a: Option<u64>,
    pub inn: Option<bool>,
    pub ue: Option<bool>,
    pub oee: Option<bool>,
    pub attractor_ue: Option<bool>,
    pub n_rule_transitions: Option<u64>,
    pub innovation_i: Option<f64>,
    pub compressed_bits: Option<u64>,
    pub norm_bits: Option<u64>,
    pub c: Option<f64>,
    pub k: Option<Lyapunov>,
    pub censored: bool,
    /// `(rule, occurrences)` over the full-system attractor cycle, by rule.
    pub attractor_rules: Vec<(u8, u64)>,
}

impl ExecutionRecord {
    fn skeleton(plan: &SamplePlan, tuple: &InitialTuple, t_p: u128) -> Self {
        ExecutionRecord {
            variant: plan.variant,
            w_o: plan.w_o,
            w_e: plan.w_e,
            mu: plan.mu,
            seed: tuple.seed,
            init_rule_o: tuple.rule_o,
            rule_e: tuple.rule_e,
            init_state_o: tuple.state_o,
            init_state_e: tuple.state_e,
            t_p,
            t_r: None,
            t_r_rule: None,
            t_a: None,
            inn: None,
            ue: None,
            oee: None,
            attractor_ue: None,
            n_rule_transitions: None,
            innovation_i: None,
            compressed_bits: None,
            norm_bits: None,
            c: None,
            k: None,
            censored: true,
            attractor_rules: Vec::new(),
        }
    }

    pub fn is_oee(&self) -> bool {
        self.oee == Some(true)
    }

    /// Total rule slots in the attractor cycle.
    pub fn attractor_slots(&self) -> u64 {
        self.attractor_rules.iter().map(|&(_, n)| n).sum()
    }
}

/// Organism state window judged for innovation: `[0, t_r]` for
/// deterministic runs, `[0, t_c + t_P]` for stochastic ones.
pub fn innovation_window(config: &VariantConfig, cap: u64) -> Result<Option<Vec<BitState>>> {
    let traj = run_trajectory(config, cap)?;
    if traj.cap_hit {
        return Ok(None);
    }
    let states = traj.organism_states();
    match traj.cycle {
        Some(cycle) => {
            let t_r = projected_recurrence(&states, cycle).t_rec as usize;
            Ok(Some(states[..=t_r].to_vec()))
        }
        None => {
            let t_c = traj.steps();
            let extra = 1u64 << config.w_o();
            Ok(Some(run_steps(config, t_c + extra).into_iter().map(|s| s.s_o).collect()))
        }
    }
}

/// Runs one execution through recurrence, innovation and complexity.
pub fn evaluate(plan: &SamplePlan, tuple: &InitialTuple, norm_bits: u64) -> Result<ExecutionRecord> {
    let config = tuple.config(plan)?;
    let t_p = poincare_time(plan.w_o)?;
    let mut rec = ExecutionRecord::skeleton(plan, tuple, t_p);
    let cap = plan.step_cap.unwrap_or_else(|| config.default_cap());
    let traj = run_trajectory(&config, cap)?;
    if traj.cap_hit {
        return Ok(rec);
    }
    let states = traj.organism_states();
    let rules = traj.rules();
    let (t_r, window) = match traj.cycle {
        Some(cycle) => {
            let s = projected_recurrence(&states, cycle);
            let r = projected_recurrence(&rules, cycle);
            rec.t_r_rule = Some(r.t_rec);
            rec.t_a = Some(cycle.period);
            rec.attractor_ue = Some(cycle.period as u128 > t_p);
            let start = cycle.pre_period as usize;
            let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
            for r in &rules[start..start + cycle.period as usize] {
                *counts.entry(r.number()).or_default() += 1;
            }
            rec.attractor_rules = counts.into_iter().collect();
            (s.t_rec, states[..=s.t_rec as usize].to_vec())
        }
        None => {
            let t_c = traj.steps();
            let extra = 1u64 << plan.w_o;
            let window = run_steps(&config, t_c + extra).into_iter().map(|s| s.s_o).collect();
            (t_c, window)
        }
    };
    rec.t_r = Some(t_r);
    let inn = inn_flag(&window)?;
    let ue = t_r as u128 > t_p || rec.t_r_rule.is_some_and(|t| t as u128 > t_p);
    rec.inn = Some(inn);
    rec.ue = Some(ue);
    rec.oee = Some(inn && ue);
    let n_r = rule_transitions(&rules[..=(t_r as usize).min(rules.len() - 1)]);
    rec.n_rule_transitions = Some(n_r);
    rec.innovation_i = Some(n_r as f64 / (plan.w_o as f64).exp2());
    let bits = lzw_compress_bits(&serialize_trajectory(&states[..=t_r as usize]));
    rec.compressed_bits = Some(bits);
    rec.norm_bits = Some(norm_bits);
    rec.c = Some(bits as f64 / norm_bits as f64);
    rec.k = Some(plan.perturb.estimate(&config, default_horizon(t_r, plan.w_o))?);
    rec.censored = false;
    Ok(rec)
}

/// Executes the plan on the current rayon pool; records keep draw order.
pub fn run_ensemble(plan: &SamplePlan) -> Result<Vec<ExecutionRecord>> {
    let tuples = draw_plan(plan)?;
    let norm = normalization_constant(plan.system_width(), plan.norm_samples, plan.norm_steps, plan.norm_seed)?;
    tuples.par_iter().map(|t| evaluate(plan, t, norm)).collect()
}

/// [`run_ensemble`] with a normalization constant supplied by the caller.
pub fn run_ensemble_normalized(plan: &SamplePlan, norm_bits: u64) -> Result<Vec<ExecutionRecord>> {
    let tuples = draw_plan(plan)?;
    tuples.par_iter().map(|t| evaluate(plan, t, norm_bits)).collect()
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(plan: &SamplePlan, threads: usize) -> Result<Vec<ExecutionRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_ensemble(plan))
}

/// Quartiles and 1.5 IQR whiskers clipped to the data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub whisker_low: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_high: f64,
    pub max: f64,
    pub n: u64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    Some(BoxStats {
        min: v[0],
        whisker_low: *v.iter().find(|&&x| x >= lo_fence).unwrap(),
        q1,
        median,
        q3,
        whisker_high: *v.iter().rev().find(|&&x| x <= hi_fence).unwrap(),
        max: v[v.len() - 1],
        n: v.len() as u64,
    })
}

/// Counts of `t / t_P` in base-2 bins: key `b` holds `2^b <= t/t_P < 2^{b+1}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LogHistogram {
    /// Executions with `t = 0`.
    pub zero: u64,
    pub bins: BTreeMap<i32, u64>,
}

impl LogHistogram {
    pub fn add(&mut self, t: u64, w_o: usize) {
        if t == 0 {
            self.zero += 1;
        } else {
            let b = (63 - t.leading_zeros()) as i32 - w_o as i32;
            *self.bins.entry(b).or_default() += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.zero + self.bins.values().sum::<u64>()
    }

    fn merge(&mut self, other: &LogHistogram) {
        self.zero += other.zero;
        for (&b, &n) in &other.bins {
            *self.bins.entry(b).or_default() += n;
        }
    }
}

/// Spearman rank correlation with a two-sided Student-t p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    pub p_value: f64,
    pub n: u64,
}

/// Ranks starting at 1, ties sharing their mean rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// `None` below three points or when either variable is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<Correlation> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 3 {
        return None;
    }
    let rho = pearson(&mid_ranks(x), &mid_ranks(y));
    if rho.is_nan() {
        return None;
    }
    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Some(Correlation { rho, p_value, n: n as u64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetagenomeEntry {
    pub rank: u32,
    pub rule: u8,
    pub count: u64,
    pub class: WolframClass,
}

/// Rules by decreasing count (ties by rule number), zero counts omitted.
pub fn rank_rules(counts: &[u64; 256], classes: &ClassTable) -> Vec<MetagenomeEntry> {
    let mut rules: Vec<u8> = (0..=255u8).filter(|&r| counts[r as usize] > 0).collect();
    rules.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
    rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| MetagenomeEntry {
            rank: i as u32 + 1,
            rule: r,
            count: counts[r as usize],
            class: classes.class_of(r),
        })
        .collect()
}

/// Attractor-cycle rule counts over all records and over OEE records.
pub fn metagenome_counts(records: &[ExecutionRecord]) -> ([u64; 256], [u64; 256]) {
    let mut all = [0u64; 256];
    let mut oee = [0u64; 256];
    for r in records {
        for &(rule, n) in &r.attractor_rules {
            all[rule as usize] += n;
            if r.is_oee() {
                oee[rule as usize] += n;
            }
        }
    }
    (all, oee)
}

pub fn metagenome(records: &[ExecutionRecord], classes: &ClassTable) -> (Vec<MetagenomeEntry>, Vec<MetagenomeEntry>) {
    let (all, oee) = metagenome_counts(records);
    (rank_rules(&all, classes), rank_rules(&oee, classes))
}

/// Total metagenome count per Wolfram class, indexed I..IV.
pub fn class_totals(entries: &[MetagenomeEntry]) -> [u64; 4] {
    let mut out = [0u64; 4];
    for e in entries {
        out[e.class.index() as usize - 1] += e.count;
    }
    out
}

pub const C_BINS: (f64, f64, usize) = (0.0, 1.0, 20);
pub const K_BINS: (f64, f64, usize) = (0.0, 4.2, 21);

/// One heat-map row: value counts in equal-width bins, out-of-range values
/// clamped into the edge bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRow {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    /// `counts` divided by the number of non-censored records.
    pub fractions: Vec<f64>,
}

impl HeatRow {
    fn empty((lo, hi, n): (f64, f64, usize)) -> Self {
        HeatRow { lo, hi, counts: vec![0; n], fractions: vec![0.0; n] }
    }

    fn add(&mut self, v: f64) {
        let n = self.counts.len();
        let b = ((v - self.lo) / (self.hi - self.lo) * n as f64).floor();
        let b = if b.is_nan() { 0 } else { (b.max(0.0) as usize).min(n - 1) };
        self.counts[b] += 1;
    }

    fn merge(&mut self, other: &HeatRow) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn normalize(&mut self, total: u64) {
        self.fractions = self.counts.iter().map(|&c| c as f64 / total as f64).collect();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub t_r: u64,
    pub innovation_i: f64,
    pub oee: bool,
}

/// Mergeable partial sums; [`ReportAccumulator::finish`] builds the report.
#[derive(Clone, Debug)]
pub struct ReportAccumulator {
    total: u64,
    censored: u64,
    oee: u64,
    inn: u64,
    ue: u64,
    attractor_ue: u64,
    t_r_hist: LogHistogram,
    t_a_hist: LogHistogram,
    t_r_ratios: Vec<f64>,
    t_a_ratios: Vec<f64>,
    t_r_counts: BTreeMap<u64, u64>,
    scatter: Vec<ScatterPoint>,
    metagenome_all: [u64; 256],
    metagenome_oee: [u64; 256],
    c_all: HeatRow,
    c_oee: HeatRow,
    k_all: HeatRow,
    k_oee: HeatRow,
    c_sum: Vec<f64>,
    c_sum_oee: Vec<f64>,
    k_sum: Vec<f64>,
    k_sum_oee: Vec<f64>,
    extinct: u64,
}

impl Default for ReportAccumulator {
    fn default() -> Self {
        ReportAccumulator {
            total: 0,
            censored: 0,
            oee: 0,
            inn: 0,
            ue: 0,
            attractor_ue: 0,
            t_r_hist: LogHistogram::default(),
            t_a_hist: LogHistogram::default(),
            t_r_ratios: Vec::new(),
            t_a_ratios: Vec::new(),
            t_r_counts: BTreeMap::new(),
            scatter: Vec::new(),
            metagenome_all: [0; 256],
            metagenome_oee: [0; 256],
            c_all: HeatRow::empty(C_BINS),
            c_oee: HeatRow::empty(C_BINS),
            k_all: HeatRow::empty(K_BINS),
            k_oee: HeatRow::empty(K_BINS),
            c_sum: Vec::new(),
            c_sum_oee: Vec::new(),
            k_sum: Vec::new(),
            k_sum_oee: Vec::new(),
            extinct: 0,
        }
    }
}

fn add_mean(acc: &mut Vec<f64>, v: f64) {
    acc.push(v);
}

/// Sums in sorted order so the result does not depend on record order.
fn mean(mut vals: Vec<f64>) -> Option<f64> {
    vals.sort_by(f64::total_cmp);
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

impl ReportAccumulator {
    pub fn add(&mut self, r: &ExecutionRecord) {
        self.total += 1;
        if r.censored {
            self.censored += 1;
            return;
        }
        let oee = r.is_oee();
        self.oee += oee as u64;
        self.inn += (r.inn == Some(true)) as u64;
        self.ue += (r.ue == Some(true)) as u64;
        self.attractor_ue += (r.attractor_ue == Some(true)) as u64;
        let t_p = r.t_p as f64;
        if let Some(t) = r.t_r {
            self.t_r_hist.add(t, r.w_o);
            self.t_r_ratios.push(t as f64 / t_p);
            *self.t_r_counts.entry(t).or_default() += 1;
            if let Some(i) = r.innovation_i {
                self.scatter.push(ScatterPoint { t_r: t, innovation_i: i, oee });
            }
        }
        if let Some(t) = r.t_a {
            self.t_a_hist.add(t, r.w_o);
            self.t_a_ratios.push(t as f64 / t_p);
        }
        for &(rule, n) in &r.attractor_rules {
            self.metagenome_all[rule as usize] += n;
            if oee {
                self.metagenome_oee[rule as usize] += n;
            }
        }
        if let Some(c) = r.c {
            self.c_all.add(c);
            add_mean(&mut self.c_sum, c);
            if oee {
                self.c_oee.add(c);
                add_mean(&mut self.c_sum_oee, c);
            }
        }
        match r.k {
            Some(Lyapunov::Rate(k)) => {
                self.k_all.add(k);
                add_mean(&mut self.k_sum, k);
                if oee {
                    self.k_oee.add(k);
                    add_mean(&mut self.k_sum_oee, k);
                }
            }
            Some(Lyapunov::Extinct) => self.extinct += 1,
            None => {}
        }
    }

    pub fn merge(mut self, other: &ReportAccumulator) -> Self {
        self.total += other.total;
        self.censored += other.censored;
        self.oee += other.oee;
        self.inn += other.inn;
        self.ue += other.ue;
        self.attractor_ue += other.attractor_ue;
        self.t_r_hist.merge(&other.t_r_hist);
        self.t_a_hist.merge(&other.t_a_hist);
        self.t_r_ratios.extend_from_slice(&other.t_r_ratios);
        self.t_a_ratios.extend_from_slice(&other.t_a_ratios);
        for (&t, &n) in &other.t_r_counts {
            *self.t_r_counts.entry(t).or_default() += n;
        }
        self.scatter.extend_from_slice(&other.scatter);
        for i in 0..256 {
            self.metagenome_all[i] += other.metagenome_all[i];
            self.metagenome_oee[i] += other.metagenome_oee[i];
        }
        self.c_all.merge(&other.c_all);
        self.c_oee.merge(&other.c_oee);
        self.k_all.merge(&other.k_all);
        self.k_oee.merge(&other.k_oee);
        for (a, b) in [
            (&mut self.c_sum, &other.c_sum),
            (&mut self.c_sum_oee, &other.c_sum_oee),
            (&mut self.k_sum, &other.k_sum),
            (&mut self.k_sum_oee, &other.k_sum_oee),
        ] {
            a.extend_from_slice(b);
        }
        self.extinct += other.extinct;
        self
    }

    pub fn finish(mut self, classes: &ClassTable) -> Result<EnsembleReport> {
        let counted = self.total - self.censored;
        if counted == 0 {
            return Err(Error::EmptyReport);
        }
        let pct = |n: u64| 100.0 * n as f64 / counted as f64;
        self.scatter.sort_by(|a, b| {
            a.t_r.cmp(&b.t_r).then(a.innovation_i.total_cmp(&b.innovation_i)).then(a.oee.cmp(&b.oee))
        });
        let xs: Vec<f64> = self.scatter.iter().map(|p| p.innovation_i).collect();
        let ys: Vec<f64> = self.scatter.iter().map(|p| p.t_r as f64).collect();
        for row in [&mut self.c_all, &mut self.c_oee, &mut self.k_all, &mut self.k_oee] {
            row.normalize(counted);
        }
        self.t_r_ratios.sort_by(f64::total_cmp);
        self.t_a_ratios.sort_by(f64::total_cmp);
        Ok(EnsembleReport {
            total: self.total,
            censored: self.censored,
            counted,
            oee: self.oee,
            inn: self.inn,
            ue: self.ue,
            attractor_ue: self.attractor_ue,
            oee_percent: pct(self.oee),
            inn_percent: pct(self.inn),
            ue_percent: pct(self.ue),
            attractor_ue_percent: pct(self.attractor_ue),
            t_r_histogram: self.t_r_hist,
            t_a_histogram: self.t_a_hist,
            t_r_box: box_stats(&self.t_r_ratios),
            t_a_box: box_stats(&self.t_a_ratios),
            t_r_counts: self.t_r_counts,
            spearman_i_t_r: spearman(&xs, &ys),
            scatter: self.scatter,
            metagenome_all: rank_rules(&self.metagenome_all, classes),
            metagenome_oee: rank_rules(&self.metagenome_oee, classes),
            c_heat_all: self.c_all,
            c_heat_oee: self.c_oee,
            k_heat_all: self.k_all,
            k_heat_oee: self.k_oee,
            mean_c_all: mean(self.c_sum),
            mean_c_oee: mean(self.c_sum_oee),
            mean_k_all: mean(self.k_sum),
            mean_k_oee: mean(self.k_sum_oee),
            extinct: self.extinct,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub total: u64,
    pub censored: u64,
    pub counted: u64,
    pub oee: u64,
    pub inn: u64,
    pub ue: u64,
    pub attractor_ue: u64,
    pub oee_percent: f64,
    pub inn_percent: f64,
    pub ue_percent: f64,
    pub attractor_ue_percent: f64,
    /// `t_r / t_P`, base-2 bins.
    pub t_r_histogram: LogHistogram,
    pub t_a_histogram: LogHistogram,
    pub t_r_box: Option<BoxStats>,
    pub t_a_box: Option<BoxStats>,
    /// Exact frequency of each `t_r`.
    pub t_r_counts: BTreeMap<u64, u64>,
    pub spearman_i_t_r: Option<Correlation>,
    pub scatter: Vec<ScatterPoint>,
    pub metagenome_all: Vec<MetagenomeEntry>,
    pub metagenome_oee: Vec<MetagenomeEntry>,
    pub c_heat_all: HeatRow,
    pub c_heat_oee: HeatRow,
    pub k_heat_all: HeatRow,
    pub k_heat_oee: HeatRow,
    pub mean_c_all: Option<f64>,
    pub mean_c_oee: Option<f64>,
    pub mean_k_all: Option<f64>,
    pub mean_k_oee: Option<f64>,
    /// Records whose perturbation died out at once; excluded from `k`.
    pub extinct: u64,
}

pub fn accumulate(records: &[ExecutionRecord]) -> ReportAccumulator {
    let mut acc = ReportAccumulator::default();
    for r in records {
        acc.add(r);
    }
    acc
}

pub fn aggregate(records: &[ExecutionRecord], classes: &ClassTable) -> Result<EnsembleReport> {
    accumulate(records).finish(classes)
}

/// Least-squares line through `(t_r, ln frequency)` over `t_r >= 1` values
/// seen at least `min_count` times; returns `(slope, r_squared, points)`.
pub fn log_frequency_fit(t_r_counts: &BTreeMap<u64, u64>, min_count: u64) -> Option<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = t_r_counts
        .iter()
        .filter(|&(&t, &n)| t >= 1 && n >= min_count)
        .map(|(&t, &n)| (t as f64, (n as f64).ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2, pts.len()))
}

/// Class tags for `(simple, complex)` metagenome mass: I+II versus III+IV.
pub fn simple_vs_complex(entries: &[MetagenomeEntry]) -> (u64, u64) {
    let t = class_totals(entries);
    (t[0] + t[1], t[2] + t[3])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_plan(variant: Variant, w_o: usize, w_e: usize, samples: u64) -> SamplePlan {
        let mut p = SamplePlan::new(variant, w_o, w_e, samples, 11);
        p.norm_samples = 4;
        p.norm_steps = 64;
        p
    }

    #[test]
    fn space_sizes() {
        assert_eq!(sample_space_size(Variant::Case1, 3, 3), 495_616);
        assert_eq!(sample_space_size(Variant::Case2, 3, 8), 15_859_712);
        assert_eq!(sample_space_size(Variant::Case3, 3, 0), 704);
        assert_eq!(sample_space_size(Variant::Eca, 4, 0), 1408);
    }

    #[test]
    fn ratios_round_down() {
        let got: Vec<usize> = CASE1_RATIOS.iter().map(|&r| env_width_for_ratio(3, r)).collect();
        assert_eq!(got, vec![1, 3, 4, 6, 7]);
        assert_eq!(published_space(Variant::Case1, 3, 3), Some(4.19e6));
        assert_eq!(published_space(Variant::Case2, 3, 8), Some(1.34e8));
    }

    #[test]
    fn exhaustive_draw_has_no_duplicates() {
        let plan = tiny_plan(Variant::Eca, 3, 0, 704);
        let tuples = draw_plan(&plan).unwrap();
        let set: HashSet<_> = tuples.iter().collect();
        assert_eq!(set.len(), 704);
        assert!(tuples.iter().all(|t| crate::eca::canonical_rule(t.rule_o) == t.rule_o));
        let mut too_many = plan.clone();
        too_many.samples = 705;
        assert!(draw_plan(&too_many).is_err());
    }

    #[test]
    fn draws_are_reproducible_and_canonical() {
        let plan = tiny_plan(Variant::Case1, 4, 4, 300);
        let a = draw_plan(&plan).unwrap();
        assert_eq!(a, draw_plan(&plan).unwrap());
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 300);
        for t in &a {
            assert_eq!(crate::eca::canonical_rule(t.rule_o), t.rule_o);
            assert_eq!(crate::eca::canonical_rule(t.rule_e.unwrap()), t.rule_e.unwrap());
        }
        let case3 = tiny_plan(Variant::Case3, 3, 0, 2000);
        assert_eq!(draw_plan(&case3).unwrap().len(), 2000);
    }

    #[test]
    fn eca_records_never_innovate() {
        let plan = tiny_plan(Variant::Eca, 3, 0, 704);
        let recs = run_ensemble(&plan).unwrap();
        for r in &recs {
            assert_eq!(r.inn, Some(false));
            assert_eq!(r.oee, Some(false));
            assert!(r.t_r.unwrap() <= 8);
        }
        let rep = aggregate(&recs, ClassTable::bundled()).unwrap();
        assert_eq!(rep.oee_percent, 0.0);
        assert_eq!(rep.t_r_histogram.total(), 704);
    }

    #[test]
    fn flags_are_consistent() {
        let plan = tiny_plan(Variant::Case1, 3, 3, 500);
        for r in run_ensemble(&plan).unwrap() {
            assert_eq!(r.oee, Some(r.inn.unwrap() && r.ue.unwrap()));
            assert_eq!(r.attractor_slots(), r.t_a.unwrap());
        }
    }

    #[test]
    fn censored_records_are_kept_but_not_counted() {
        let mut plan = tiny_plan(Variant::Case1, 4, 4, 50);
        plan.step_cap = Some(3);
        let recs = run_ensemble(&plan).unwrap();
        assert_eq!(recs.len(), 50);
        let censored = recs.iter().filter(|r| r.censored).count() as u64;
        assert!(censored > 0);
        assert!(recs.iter().filter(|r| r.censored).all(|r| r.oee.is_none()));
        match aggregate(&recs, ClassTable::bundled()) {
            Ok(rep) => assert_eq!(rep.counted, 50 - censored),
            Err(e) => assert!(matches!(e, Error::EmptyReport)),
        }
        let all_censored: Vec<_> = recs.into_iter().filter(|r| r.censored).collect();
        assert!(matches!(aggregate(&all_censored, ClassTable::bundled()), Err(Error::EmptyReport)));
    }

    #[test]
    fn merge_equals_union() {
        let plan = tiny_plan(Variant::Case1, 3, 3, 400);
        let recs = run_ensemble(&plan).unwrap();
        let classes = ClassTable::bundled();
        let whole = aggregate(&recs, classes).unwrap();
        let (a, b) = recs.split_at(137);
        let merged = accumulate(b).merge(&accumulate(a)).finish(classes).unwrap();
        assert_eq!(whole, merged);
    }

    #[test]
    fn single_oee_record() {
        let plan = tiny_plan(Variant::Case1, 3, 3, 2000);
        let recs = run_ensemble(&plan).unwrap();
        let one = recs.iter().find(|r| r.is_oee()).unwrap().clone();
        let rep = aggregate(&[one], ClassTable::bundled()).unwrap();
        assert_eq!(rep.oee_percent, 100.0);
    }

    #[test]
    fn metagenome_of_identity_attractors() {
        let mut rec = ExecutionRecord::skeleton(
            &tiny_plan(Variant::Case1, 3, 3, 1),
            &InitialTuple {
                rule_o: 204,
                rule_e: Some(0),
                state_o: BitState::zeros(3).unwrap(),
                state_e: Some(BitState::zeros(3).unwrap()),
                seed: 0,
            },
            8,
        );
        rec.attractor_rules = vec![(204, 3)];
        let (all, oee) = metagenome(&[rec.clone(), rec], ClassTable::bundled());
        assert_eq!(all.len(), 1);
        assert_eq!((all[0].rank, all[0].rule, all[0].count), (1, 204, 6));
        assert!(oee.is_empty());
    }

    #[test]
    fn ranks_and_spearman() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let c = spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert_eq!(c.rho, 1.0);
        let c = spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(c.rho, -1.0);
        assert!(spearman(&x, &[1.0; 5]).is_none());
        // rho = 0.8, n = 5: t = 0.8 * sqrt(3 / 0.36) = 2.3094, two-sided p = 0.1041
        let c = spearman(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert!((c.rho - 0.8).abs() < 1e-12);
        assert!((c.p_value - 0.1041).abs() < 1e-3);
    }

    #[test]
    fn box_and_histogram() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.whisker_high, 4.0);
        assert_eq!(b.max, 100.0);
        let mut h = LogHistogram::default();
        for t in [0, 1, 7, 8, 15, 16, 17] {
            h.add(t, 3);
        }
        assert_eq!(h.zero, 1);
        assert_eq!(h.bins, BTreeMap::from([(-3, 1), (-1, 1), (0, 2), (1, 2)]));
        assert_eq!(h.total(), 7);
    }

    #[test]
    fn exponential_counts_fit_perfectly() {
        let counts: BTreeMap<u64, u64> = (1..10).map(|t| (t, (1000.0 * (-0.5 * t as f64).exp()).round() as u64)).collect();
        let (slope, r2, _) = log_frequency_fit(&counts, 1).unwrap();
        assert!((slope + 0.5).abs() < 0.02);
        assert!(r2 > 0.999);
    }
}
