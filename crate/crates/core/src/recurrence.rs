//! Exact cycle detection on full-system snapshots, projected recurrence
//! times of the organism, and the unbounded-evolution verdicts.

use std::collections::HashMap;
use std::hash::Hash;

use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pre-period and period of an eventually periodic snapshot sequence.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct CycleInfo {
    pub pre_period: u64,
    pub period: u64,
}

impl CycleInfo {
    /// Time of the first repeated snapshot.
    pub fn repeat_time(&self) -> u64 {
        self.pre_period + self.period
    }

    /// Attractor size `t_a`.
    pub fn attractor_size(&self) -> u64 {
        self.period
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CycleOutcome {
    Found(CycleInfo),
    /// The source ran `steps` steps without repeating.
    Censored { steps: u64 },
}

/// Time-stamped first visits; reports the earlier time when a key repeats.
pub struct FirstVisitMap<K> {
    seen: HashMap<K, u64, FxBuildHasher>,
}

impl<K: Hash + Eq> FirstVisitMap<K> {
    pub fn new() -> Self {
        FirstVisitMap { seen: HashMap::with_hasher(FxBuildHasher) }
    }

    /// Records `key` at time `t` unless already present; returns the first
    /// visit time of a repeated key.
    pub fn visit(&mut self, key: K, t: u64) -> Option<u64> {
        match self.seen.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => Some(*e.get()),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(t);
                None
            }
        }
    }
}

impl<K: Hash + Eq> Default for FirstVisitMap<K> {
    fn default() -> Self {
        Self::new()
    }
}

/// Finds the minimal `(P, Λ)` of a deterministic snapshot source.
///
/// `source` yields the snapshot keys for `t = 0, 1, 2, ...`. At most
/// `cap` steps are taken, i.e. keys up to `t = cap` are inspected.
pub fn detect_cycle<K, I>(source: I, cap: u64) -> CycleOutcome
where
    K: Hash + Eq,
    I: IntoIterator<Item = K>,
{
    let mut map = FirstVisitMap::new();
    let mut last = 0;
    for (t, key) in source.into_iter().enumerate() {
        let t = t as u64;
        if t > cap {
            break;
        }
        last = t;
        if let Some(first) = map.visit(key, t) {
            return CycleOutcome::Found(CycleInfo { pre_period: first, period: t - first });
        }
    }
    CycleOutcome::Censored { steps: last }
}

/// `2^w`, the recurrence bound of an isolated system of width `w`.
pub fn poincare_time(w: usize) -> Result<u128> {
    if !(3..=64).contains(&w) {
        return Err(Error::InvalidWidth { width: w, min: 3, max: 64 });
    }
    Ok(1u128 << w)
}

/// Recurrence of a projection of an eventually periodic trajectory.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ProjectedRecurrence {
    pub pre_period: u64,
    pub period: u64,
    /// `pre_period + period`: the first time the projected sequence has
    /// completed a full repetition.
    pub t_rec: u64,
}

/// Recurrence of `seq` given the full-system cycle it was projected from.
///
/// `seq` must hold at least `P + Λ` values; later values are implied by the
/// full-system periodicity.
pub fn projected_recurrence<T: PartialEq>(seq: &[T], cycle: CycleInfo) -> ProjectedRecurrence {
    let p_full = cycle.pre_period as usize;
    let lam_full = cycle.period as usize;
    assert!(lam_full >= 1, "period must be positive");
    assert!(seq.len() >= p_full + lam_full, "sequence shorter than P + Λ");
    let at = |t: usize| {
        if t < p_full + lam_full {
            &seq[t]
        } else {
            &seq[p_full + (t - p_full) % lam_full]
        }
    };
    let period = (1..=lam_full)
        .filter(|&d| lam_full.is_multiple_of(d))
        .find(|&d| (p_full..p_full + lam_full).all(|t| at(t + d) == at(t)))
        .expect("the full period always qualifies");
    let mut pre = p_full;
    while pre > 0 && at(pre - 1 + period) == at(pre - 1) {
        pre -= 1;
    }
    ProjectedRecurrence {
        pre_period: pre as u64,
        period: period as u64,
        t_rec: (pre + period) as u64,
    }
}

/// First index holding a homogeneous organism state, if any.
pub fn case3_convergence_time<S: Copy>(states: &[S], is_homogeneous: impl Fn(S) -> bool) -> Option<u64> {
    states.iter().position(|&s| is_homogeneous(s)).map(|t| t as u64)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub t_p: u128,
    /// State recurrence `t_r` (convergence time for stochastic runs).
    pub t_r: Option<u64>,
    /// Rule recurrence `t_r'`; absent for stochastic runs.
    pub t_r_rule: Option<u64>,
    /// Full-system attractor size; absent for stochastic runs.
    pub t_a: Option<u64>,
    pub censored: bool,
}

impl RecurrenceReport {
    pub fn censored(t_p: u128) -> Self {
        RecurrenceReport { t_p, t_r: None, t_r_rule: None, t_a: None, censored: true }
    }
}

/// `t_r > t_P` or `t_r' > t_P`; `None` when the run was censored.
pub fn ue_flag(report: &RecurrenceReport) -> Option<bool> {
    if report.censored {
        return None;
    }
    let exceeds = |t: Option<u64>| t.is_some_and(|t| t as u128 > report.t_p);
    Some(exceeds(report.t_r) || exceeds(report.t_r_rule))
}

/// `t_a > t_P`.
pub fn attractor_ue_flag(cycle: Option<CycleInfo>, t_p: u128) -> Option<bool> {
    cycle.map(|c| c.attractor_size() as u128 > t_p)
}
