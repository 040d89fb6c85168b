//! Innovation: whether an organism's state window could have been produced
//! by a single fixed ECA rule, plus the rule-transition count `I`.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rustc_hash::FxBuildHasher;
use serde::{Deserialize, Serialize};

use crate::eca::{step, BitState, RuleTable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct InnReport {
    pub inn: bool,
    /// Smallest rule reproducing the window; present iff `inn` is false.
    pub witness_rule: Option<u8>,
    pub n_rule_transitions: u64,
    pub innovation_i: f64,
}

/// Smallest rule `n` with `step(n, states[t]) == states[t + 1]` for every
/// consecutive pair, or `None` when no single rule is consistent.
///
/// Each transition pins the output of every neighbourhood it exhibits, so the
/// window is reproducible iff those pins never conflict; unpinned outputs are
/// left at 0 to get the smallest witness.
pub fn is_eca_reproducible(states: &[BitState]) -> Result<Option<u8>> {
    let Some(first) = states.first() else {
        return Ok(Some(0));
    };
    let mut must_one = 0u8;
    let mut must_zero = 0u8;
    for pair in states.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        if prev.width() != first.width() || next.width() != first.width() {
            let bad = if prev.width() != first.width() { prev } else { next };
            return Err(Error::WidthMismatch(first.width(), bad.width()));
        }
        for (t, mask) in prev.neighborhood_masks().into_iter().enumerate() {
            if mask & next.bits() != 0 {
                must_one |= 1 << t;
            }
            if mask & !next.bits() != 0 {
                must_zero |= 1 << t;
            }
        }
        if must_one & must_zero != 0 {
            return Ok(None);
        }
    }
    Ok(Some(must_one))
}

/// `true` when the window cannot be reproduced by any fixed rule.
pub fn inn_flag(states: &[BitState]) -> Result<bool> {
    Ok(is_eca_reproducible(states)?.is_none())
}

/// Number of `t` with `rules[t + 1] != rules[t]`.
pub fn rule_transitions(rules: &[RuleTable]) -> u64 {
    rules.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

/// `n_r / 2^{w_o}`.
pub fn innovation_metric(rules: &[RuleTable], w_o: usize) -> f64 {
    rule_transitions(rules) as f64 / (w_o as f64).exp2()
}

pub fn inn_report(states: &[BitState], rules: &[RuleTable], w_o: usize) -> Result<InnReport> {
    let witness = is_eca_reproducible(states)?;
    let n_r = rule_transitions(rules);
    Ok(InnReport {
        inn: witness.is_none(),
        witness_rule: witness,
        n_rule_transitions: n_r,
        innovation_i: n_r as f64 / (w_o as f64).exp2(),
    })
}

pub const ORACLE_MAX_WIDTH: usize = 5;
const ORACLE_MAGIC: &[u8; 4] = b"OEEC";
const ORACLE_VERSION: u8 = 1;

/// One isolated run, stored up to and including its first repeated state.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EnumeratedRun {
    pub rule: u8,
    pub states: Vec<BitState>,
    loop_start: usize,
}

impl EnumeratedRun {
    fn new(rule: u8, states: Vec<BitState>) -> Result<Self> {
        let last = *states.last().ok_or_else(|| Error::Format("empty enumerated run".into()))?;
        let loop_start = states[..states.len() - 1]
            .iter()
            .position(|&s| s == last)
            .ok_or_else(|| Error::Format("enumerated run does not end on a repeat".into()))?;
        Ok(EnumeratedRun { rule, states, loop_start })
    }

    pub fn initial(&self) -> BitState {
        self.states[0]
    }

    /// State at time `k` of the infinite run.
    pub fn at(&self, k: usize) -> BitState {
        let distinct = self.states.len() - 1;
        if k < distinct {
            self.states[k]
        } else {
            let period = distinct - self.loop_start;
            self.states[self.loop_start + (k - self.loop_start) % period]
        }
    }

    fn distinct(&self) -> &[BitState] {
        &self.states[..self.states.len() - 1]
    }
}

type Occurrences = HashMap<u64, Vec<(u32, u32)>, FxBuildHasher>;

/// Every isolated ECA trajectory of one width: 256 rules times all initial
/// states, each kept to its first repetition.
pub struct CounterfactualSet {
    width: usize,
    runs: Vec<EnumeratedRun>,
    /// Per rule, state -> (run index, position) occurrences.
    index: Vec<Occurrences>,
}

impl CounterfactualSet {
    pub fn build(width: usize) -> Result<Self> {
        check_oracle_width(width)?;
        let mut runs = Vec::with_capacity(256 << width);
        for rule in 0..=255u8 {
            for bits in 0..(1u64 << width) {
                let mut states = vec![BitState::new(bits, width)?];
                loop {
                    let next = step(RuleTable::new(rule), *states.last().unwrap());
                    let repeat = states.contains(&next);
                    states.push(next);
                    if repeat {
                        break;
                    }
                }
                runs.push(EnumeratedRun::new(rule, states)?);
            }
        }
        Ok(Self::from_runs(width, runs))
    }

    fn from_runs(width: usize, runs: Vec<EnumeratedRun>) -> Self {
        let mut index: Vec<Occurrences> =
            (0..256).map(|_| HashMap::with_hasher(FxBuildHasher)).collect();
        for (i, run) in runs.iter().enumerate() {
            for (pos, s) in run.distinct().iter().enumerate() {
                index[run.rule as usize].entry(s.bits()).or_default().push((i as u32, pos as u32));
            }
        }
        CounterfactualSet { width, runs, index }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn runs(&self) -> &[EnumeratedRun] {
        &self.runs
    }

    /// Whether `window` occurs contiguously in some enumerated run.
    pub fn contains(&self, window: &[BitState]) -> Result<bool> {
        Ok(self.containing_rule(window)?.is_some())
    }

    /// Smallest rule having a run that contains `window` contiguously.
    pub fn containing_rule(&self, window: &[BitState]) -> Result<Option<u8>> {
        if let Some(bad) = window.iter().find(|s| s.width() != self.width) {
            return Err(Error::WidthMismatch(self.width, bad.width()));
        }
        let Some(first) = window.first() else {
            return Ok(Some(0));
        };
        for rule in 0..256usize {
            let Some(hits) = self.index[rule].get(&first.bits()) else {
                continue;
            };
            for &(run, pos) in hits {
                let run = &self.runs[run as usize];
                if window.iter().enumerate().all(|(j, s)| run.at(pos as usize + j) == *s) {
                    return Ok(Some(rule as u8));
                }
            }
        }
        Ok(None)
    }

    /// Serializes as `OEEC`, version, width, run count, then per run: rule,
    /// initial state, state count, states. States take `ceil(width / 8)`
    /// little-endian bytes; counts are little-endian `u32`.
    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let nb = state_bytes(self.width);
        w.write_all(ORACLE_MAGIC)?;
        w.write_all(&[ORACLE_VERSION, self.width as u8])?;
        w.write_all(&(self.runs.len() as u32).to_le_bytes())?;
        for run in &self.runs {
            w.write_all(&[run.rule])?;
            w.write_all(&run.initial().bits().to_le_bytes()[..nb])?;
            w.write_all(&(run.states.len() as u32).to_le_bytes())?;
            for s in &run.states {
                w.write_all(&s.bits().to_le_bytes()[..nb])?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let fmt = |what: &str| Error::Format(format!("oracle cache: {what}"));
        let mut head = [0u8; 6];
        r.read_exact(&mut head).map_err(|_| fmt("truncated header"))?;
        if &head[..4] != ORACLE_MAGIC {
            return Err(fmt("bad magic"));
        }
        if head[4] != ORACLE_VERSION {
            return Err(fmt(&format!("unsupported version {}", head[4])));
        }
        let width = head[5] as usize;
        check_oracle_width(width).map_err(|_| fmt(&format!("bad width {width}")))?;
        let nb = state_bytes(width);
        let read_u32 = |r: &mut dyn Read| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| fmt("truncated record"))?;
            Ok(u32::from_le_bytes(b))
        };
        let read_state = |r: &mut dyn Read| -> Result<BitState> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b[..nb]).map_err(|_| fmt("truncated state"))?;
            BitState::new(u64::from_le_bytes(b), width).map_err(|_| fmt("state wider than header"))
        };
        let count = read_u32(&mut r)? as usize;
        if count != 256 << width {
            return Err(fmt(&format!("expected {} runs, found {count}", 256 << width)));
        }
        let mut runs = Vec::with_capacity(count);
        for _ in 0..count {
            let mut rule = [0u8; 1];
            r.read_exact(&mut rule).map_err(|_| fmt("truncated record"))?;
            let initial = read_state(&mut r)?;
            let len = read_u32(&mut r)? as usize;
            if len < 2 || len > (1 << width) + 1 {
                return Err(fmt(&format!("implausible run length {len}")));
            }
            let states = (0..len).map(|_| read_state(&mut r)).collect::<Result<Vec<_>>>()?;
            if states[0] != initial {
                return Err(fmt("initial state disagrees with first state"));
            }
            runs.push(EnumeratedRun::new(rule[0], states).map_err(|_| fmt("run without repeat"))?);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(|e| fmt(&e.to_string()))? != 0 {
            return Err(fmt("trailing bytes"));
        }
        Ok(Self::from_runs(width, runs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomically(path, |w| self.write_to(w).map_err(|e| Error::io(path, e)))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }

    /// Loads the cache at `path`, rebuilding and saving it when absent or stale.
    pub fn load_or_build(path: &Path, width: usize) -> Result<Self> {
        if path.exists() {
            if let Ok(set) = Self::load(path) {
                if set.width == width {
                    return Ok(set);
                }
            }
        }
        let set = Self::build(width)?;
        set.save(path)?;
        Ok(set)
    }
}

fn state_bytes(width: usize) -> usize {
    width.div_ceil(8).max(1)
}

fn check_oracle_width(width: usize) -> Result<()> {
    if !(1..=ORACLE_MAX_WIDTH).contains(&width) {
        return Err(Error::InvalidWidth { width, min: 1, max: ORACLE_MAX_WIDTH });
    }
    Ok(())
}

pub fn brute_force_counterfactual(width: usize) -> Result<CounterfactualSet> {
    CounterfactualSet::build(width)
}
