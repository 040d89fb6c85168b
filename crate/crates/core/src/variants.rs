//! Time-dependent rule updates for the organism and the coupled stepping loop.
//!
//! Every variant computes `r_o(t+1)` from time-`t` quantities first and then
//! applies it: `s_o(t+1) = step(r_o(t+1), s_o(t))`. Environments are plain
//! ECA driven by a fixed rule and never see the organism.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eca::{step, BitState, RuleTable, TripletCounts, WideState};
use crate::error::{Error, Result};
use crate::recurrence::{CycleInfo, FirstVisitMap};

/// Default step cap for stochastic runs.
pub const CASE3_DEFAULT_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Fixed-rule control, `r_o(t+1) = r_o(t)`.
    Eca,
    /// State-dependent: `r_o(t+1) = f(s_o(t), r_o(t), s_e(t))`.
    Case1,
    /// Environment-driven: `r_o(t+1) = s_e(t)` read as a rule number.
    Case2,
    /// Noise-driven: each rule bit flips with probability `mu` per step.
    Case3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Eca, Variant::Case1, Variant::Case2, Variant::Case3];

    pub fn is_deterministic(self) -> bool {
        self != Variant::Case3
    }

    pub fn has_environment(self) -> bool {
        matches!(self, Variant::Case1 | Variant::Case2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Eca => "eca",
            Variant::Case1 => "case1",
            Variant::Case2 => "case2",
            Variant::Case3 => "case3",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eca" | "isolated" => Ok(Variant::Eca),
            "case1" | "i" => Ok(Variant::Case1),
            "case2" | "ii" => Ok(Variant::Case2),
            "case3" | "iii" => Ok(Variant::Case3),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

/// Width of the environment for the environment-driven variant.
pub const CASE2_ENV_WIDTH: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Environment {
    pub state: BitState,
    pub rule: RuleTable,
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct VariantConfig {
    pub variant: Variant,
    pub organism: BitState,
    pub rule_o: RuleTable,
    pub environment: Option<Environment>,
    /// Per-bit flip threshold; only read by [`Variant::Case3`].
    pub mu: f64,
    /// Noise stream key; only read by [`Variant::Case3`].
    pub seed: u64,
}

impl VariantConfig {
    pub fn isolated(organism: BitState, rule_o: RuleTable) -> Result<Self> {
        Self::build(Variant::Eca, organism, rule_o, None, 0.0, 0)
    }

    pub fn case1(organism: BitState, rule_o: RuleTable, env: BitState, rule_e: RuleTable) -> Result<Self> {
        Self::build(Variant::Case1, organism, rule_o, Some(Environment { state: env, rule: rule_e }), 0.0, 0)
    }

    pub fn case2(organism: BitState, rule_o: RuleTable, env: BitState, rule_e: RuleTable) -> Result<Self> {
        Self::build(Variant::Case2, organism, rule_o, Some(Environment { state: env, rule: rule_e }), 0.0, 0)
    }

    pub fn case3(organism: BitState, rule_o: RuleTable, mu: f64, seed: u64) -> Result<Self> {
        Self::build(Variant::Case3, organism, rule_o, None, mu, seed)
    }

    pub fn build(
        variant: Variant,
        organism: BitState,
        rule_o: RuleTable,
        environment: Option<Environment>,
        mu: f64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = VariantConfig { variant, organism, rule_o, environment, mu, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.organism.width() < 3 {
            return Err(Error::InvalidWidth { width: self.organism.width(), min: 3, max: 64 });
        }
        match (self.variant.has_environment(), &self.environment) {
            (true, None) => {
                return Err(Error::Config(format!("{} needs an environment", self.variant)))
            }
            (false, Some(_)) => {
                return Err(Error::Config(format!("{} takes no environment", self.variant)))
            }
            _ => {}
        }
        if self.variant == Variant::Case2 {
            let w_e = self.environment.unwrap().state.width();
            if w_e != CASE2_ENV_WIDTH {
                return Err(Error::Config(format!("case2 needs environment width 8, got {w_e}")));
            }
        }
        if self.variant == Variant::Case3 && !(0.0..1.0).contains(&self.mu) {
            return Err(Error::Config(format!("mu = {} is outside [0, 1)", self.mu)));
        }
        Ok(())
    }

    pub fn w_o(&self) -> usize {
        self.organism.width()
    }

    /// Environment width, 0 when there is none.
    pub fn w_e(&self) -> usize {
        self.environment.map_or(0, |e| e.state.width())
    }

    pub fn initial_snapshot(&self) -> Snapshot {
        Snapshot {
            t: 0,
            s_o: self.organism,
            r_o: self.rule_o,
            s_e: self.environment.map(|e| e.state),
            r_e: self.environment.map(|e| e.rule),
        }
    }

    /// Number of distinct snapshots plus one; a deterministic run repeats
    /// before this many steps.
    pub fn default_cap(&self) -> u64 {
        match self.variant {
            Variant::Case3 => CASE3_DEFAULT_CAP,
            _ => {
                let bits = (self.w_o() + self.w_e()) as u32 + 8;
                1u64.checked_shl(bits).filter(|&v| v != 0 && bits < 64).map_or(u64::MAX, |v| v + 1)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Snapshot {
    pub t: u64,
    pub s_o: BitState,
    pub r_o: RuleTable,
    pub s_e: Option<BitState>,
    pub r_e: Option<RuleTable>,
}

/// The time-varying part of a snapshot; `r_e` and widths never change.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SnapshotKey {
    s_o: u64,
    s_e: u64,
    r_o: u8,
}

impl Snapshot {
    pub fn key(&self) -> SnapshotKey {
        SnapshotKey {
            s_o: self.s_o.bits(),
            s_e: self.s_e.map_or(0, |s| s.bits()),
            r_o: self.r_o.number(),
        }
    }
}

/// Slots whose triplet occurs in the organism and is at least as frequent
/// there as in the environment.
pub fn case1_flip_decisions(organism: &TripletCounts, environment: &TripletCounts) -> [bool; 8] {
    std::array::from_fn(|i| organism.counts[i] > 0 && organism.frequency_ge(environment, i))
}

pub fn case1_update_from_counts(r_o: RuleTable, organism: &TripletCounts, environment: &TripletCounts) -> RuleTable {
    let flips = case1_flip_decisions(organism, environment);
    let mask = flips
        .iter()
        .enumerate()
        .fold(0u8, |m, (i, &f)| if f { m | (1 << (7 - i)) } else { m });
    r_o.flip_mask(mask)
}

pub fn case1_rule_update(s_o: BitState, r_o: RuleTable, s_e: BitState) -> RuleTable {
    case1_update_from_counts(r_o, &TripletCounts::of(s_o), &TripletCounts::of(s_e))
}

/// Reads an 8-cell environment as a rule number, leftmost cell answering `111`.
pub fn case2_rule_update(s_e: BitState) -> Result<RuleTable> {
    if s_e.width() != CASE2_ENV_WIDTH {
        return Err(Error::Config(format!("case2 needs environment width 8, got {}", s_e.width())));
    }
    Ok(RuleTable::new(s_e.bits() as u8))
}

/// Draws one `ξ ∈ [0, 1)` per slot, in slot order, and flips the slot when `ξ < mu`.
pub fn case3_rule_update<R: Rng + ?Sized>(r_o: RuleTable, mu: f64, rng: &mut R) -> RuleTable {
    let mut mask = 0u8;
    for i in 0..8 {
        let xi: f64 = rng.random();
        if xi < mu {
            mask |= 1 << (7 - i);
        }
    }
    r_o.flip_mask(mask)
}

pub type NoiseRng = ChaCha8Rng;

pub fn noise_stream(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn system_step(config: &VariantConfig, snap: &Snapshot, rng: &mut NoiseRng) -> Snapshot {
    let r_next = match config.variant {
        Variant::Eca => snap.r_o,
        Variant::Case1 => case1_rule_update(snap.s_o, snap.r_o, snap.s_e.expect("case1 has an environment")),
        Variant::Case2 => RuleTable::new(snap.s_e.expect("case2 has an environment").bits() as u8),
        Variant::Case3 => case3_rule_update(snap.r_o, config.mu, rng),
    };
    Snapshot {
        t: snap.t + 1,
        s_o: step(r_next, snap.s_o),
        r_o: r_next,
        s_e: snap.s_e.zip(snap.r_e).map(|(s, r)| step(r, s)),
        r_e: snap.r_e,
    }
}

/// A running system that owns its noise stream.
pub struct System {
    config: VariantConfig,
    current: Snapshot,
    rng: NoiseRng,
}

impl System {
    pub fn new(config: VariantConfig) -> Self {
        System { current: config.initial_snapshot(), rng: noise_stream(config.seed), config }
    }

    pub fn current(&self) -> &Snapshot {
        &self.current
    }

    pub fn advance(&mut self) -> &Snapshot {
        self.current = system_step(&self.config, &self.current, &mut self.rng);
        &self.current
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub cap_hit: bool,
    /// Full-system cycle, for deterministic runs that repeated.
    pub cycle: Option<CycleInfo>,
}

impl Trajectory {
    pub fn organism_states(&self) -> Vec<BitState> {
        self.snapshots.iter().map(|s| s.s_o).collect()
    }

    pub fn rules(&self) -> Vec<RuleTable> {
        self.snapshots.iter().map(|s| s.r_o).collect()
    }

    pub fn steps(&self) -> u64 {
        self.snapshots.len() as u64 - 1
    }
}

/// Runs until the stop condition fires or `cap` steps have elapsed.
///
/// Deterministic variants stop at the first repeated snapshot, which is
/// included; the stochastic variant stops at the first homogeneous organism.
pub fn run_trajectory(config: &VariantConfig, cap: u64) -> Result<Trajectory> {
    config.validate()?;
    if cap < 1 {
        return Err(Error::Config("step cap must be at least 1".into()));
    }
    let mut system = System::new(*config);
    let mut snapshots = vec![*system.current()];
    if config.variant.is_deterministic() {
        let mut seen = FirstVisitMap::new();
        seen.visit(system.current().key(), 0);
        for t in 1..=cap {
            let snap = *system.advance();
            snapshots.push(snap);
            if let Some(first) = seen.visit(snap.key(), t) {
                let cycle = CycleInfo { pre_period: first, period: t - first };
                return Ok(Trajectory { snapshots, cap_hit: false, cycle: Some(cycle) });
            }
        }
    } else {
        if config.organism.is_homogeneous() {
            return Ok(Trajectory { snapshots, cap_hit: false, cycle: None });
        }
        for _ in 1..=cap {
            let snap = *system.advance();
            snapshots.push(snap);
            if snap.s_o.is_homogeneous() {
                return Ok(Trajectory { snapshots, cap_hit: false, cycle: None });
            }
        }
    }
    Ok(Trajectory { snapshots, cap_hit: true, cycle: None })
}

/// Exactly `steps` steps, no stop condition; returns `steps + 1` snapshots.
pub fn run_steps(config: &VariantConfig, steps: u64) -> Vec<Snapshot> {
    let mut system = System::new(*config);
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(*system.current());
    for _ in 0..steps {
        out.push(*system.advance());
    }
    out
}

/// Organism rows `t = 0..steps` of a system of any width, for rendering.
pub fn run_wide(
    variant: Variant,
    organism: WideState,
    rule_o: RuleTable,
    environment: Option<(WideState, RuleTable)>,
    mu: f64,
    seed: u64,
    steps: u64,
) -> Result<Vec<WideState>> {
    if variant.has_environment() != environment.is_some() {
        return Err(Error::Config(format!("{variant} environment mismatch")));
    }
    if variant == Variant::Case2 && environment.as_ref().is_some_and(|(e, _)| e.width() != CASE2_ENV_WIDTH) {
        return Err(Error::Config("case2 needs environment width 8".into()));
    }
    let mut rng = noise_stream(seed);
    let (mut s_o, mut r_o, mut env) = (organism, rule_o, environment);
    let mut rows = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        rows.push(s_o.clone());
        r_o = match (variant, &env) {
            (Variant::Eca, _) => r_o,
            (Variant::Case1, Some((s_e, _))) => {
                case1_update_from_counts(r_o, &TripletCounts::of_wide(&s_o), &TripletCounts::of_wide(s_e))
            }
            (Variant::Case2, Some((s_e, _))) => {
                RuleTable::new(s_e.cells().iter().fold(0u8, |acc, &c| (acc << 1) | c))
            }
            (Variant::Case3, _) => case3_rule_update(r_o, mu, &mut rng),
            _ => unreachable!("environment presence checked above"),
        };
        s_o = s_o.step(r_o);
        if let Some((s_e, r_e)) = env.as_mut() {
            *s_e = s_e.step(*r_e);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(s: &str) -> BitState {
        s.parse().unwrap()
    }

    #[test]
    fn case1_all_zero_flips_slot_000() {
        let r = case1_rule_update(st("000"), RuleTable::new(30), st("00000"));
        assert_eq!(r.number(), 31);
    }

    #[test]
    fn case1_absent_triplets_never_flip() {
        // o = 0001 shows 100, 000, 001, 010 once each; e = 000000 is all 000.
        // 000 loses (1/4 < 1); the other present triplets beat 0 and flip;
        // absent ones stay put even though 0 >= 0.
        let r = case1_rule_update(st("0001"), RuleTable::new(30), st("000000"));
        let expected = RuleTable::new(30).flip_slot(3).flip_slot(5).flip_slot(6);
        assert_eq!(r, expected);
    }

    #[test]
    fn case1_ties_flip_and_losses_do_not() {
        let o = TripletCounts::new([0, 0, 2, 0, 0, 2, 0, 0], 4).unwrap();
        let e = TripletCounts::new([0, 0, 3, 0, 0, 3, 0, 0], 6).unwrap();
        assert_eq!(case1_flip_decisions(&o, &e), [false, false, true, false, false, true, false, false]);
        assert_eq!(case1_update_from_counts(RuleTable::new(30), &o, &e).number(), 30 ^ 0b0010_0100);

        let o_sparse = TripletCounts::new([0, 0, 1, 0, 1, 1, 0, 1], 4).unwrap();
        let e_rich = TripletCounts::new([0, 0, 2, 0, 2, 2, 0, 0], 6).unwrap();
        // only 000 survives: 1/4 against an absent environment triplet
        assert_eq!(case1_update_from_counts(RuleTable::new(30), &o_sparse, &e_rich).number(), 31);
    }

    #[test]
    fn case2_reads_environment_msb_first() {
        assert_eq!(case2_rule_update(st("00011110")).unwrap().number(), 30);
        assert_eq!(case2_rule_update(st("00000000")).unwrap().number(), 0);
        assert_eq!(case2_rule_update(st("11111111")).unwrap().number(), 255);
        assert!(case2_rule_update(st("0001111")).is_err());
    }

    #[test]
    fn case3_extremes() {
        let mut rng = noise_stream(9);
        for _ in 0..100 {
            assert_eq!(case3_rule_update(RuleTable::new(77), 0.0, &mut rng).number(), 77);
        }
        let almost_one = 1.0 - f64::EPSILON;
        let mut flipped = 0;
        for _ in 0..100 {
            if case3_rule_update(RuleTable::new(77), almost_one, &mut rng).number() == !77u8 {
                flipped += 1;
            }
        }
        assert_eq!(flipped, 100);
    }

    #[test]
    fn case3_consumes_eight_draws_per_update() {
        let mut a = noise_stream(3);
        let mut b = noise_stream(3);
        case3_rule_update(RuleTable::new(1), 0.5, &mut a);
        for _ in 0..8 {
            let _: f64 = b.random();
        }
        let x: f64 = a.random();
        let y: f64 = b.random();
        assert_eq!(x, y);
    }

    #[test]
    fn case2_zero_environment_kills_organism() {
        let cfg = VariantConfig::case2(st("1011"), RuleTable::new(30), st("00000000"), RuleTable::new(0)).unwrap();
        let mut rng = noise_stream(0);
        let next = system_step(&cfg, &cfg.initial_snapshot(), &mut rng);
        assert_eq!(next.r_o.number(), 0);
        assert_eq!(next.s_o.bits(), 0);
    }

    #[test]
    fn identity_rule_is_a_fixed_point() {
        let cfg = VariantConfig::isolated(st("10110"), RuleTable::IDENTITY).unwrap();
        let traj = run_trajectory(&cfg, 10).unwrap();
        assert_eq!(traj.cycle, Some(CycleInfo { pre_period: 0, period: 1 }));
        assert!(traj.snapshots.iter().all(|s| s.s_o == st("10110")));
    }

    #[test]
    fn rule_zero_collapses_in_one_step() {
        let cfg = VariantConfig::isolated(st("10110"), RuleTable::ZERO).unwrap();
        let traj = run_trajectory(&cfg, 10).unwrap();
        assert_eq!(traj.cycle, Some(CycleInfo { pre_period: 1, period: 1 }));
        assert_eq!(traj.snapshots[1].s_o.bits(), 0);
        assert_eq!(traj.snapshots[2].s_o.bits(), 0);
    }

    #[test]
    fn case3_identity_never_converges() {
        let cfg = VariantConfig::case3(st("0110"), RuleTable::IDENTITY, 0.0, 5).unwrap();
        let traj = run_trajectory(&cfg, 500).unwrap();
        assert!(traj.cap_hit);
        assert_eq!(traj.steps(), 500);
    }

    #[test]
    fn config_validation() {
        assert!(VariantConfig::case2(st("101"), RuleTable::new(1), st("0101"), RuleTable::new(1)).is_err());
        assert!(VariantConfig::case3(st("101"), RuleTable::new(1), 1.0, 0).is_err());
        assert!(VariantConfig::case3(st("101"), RuleTable::new(1), -0.1, 0).is_err());
        assert!(VariantConfig::isolated(st("10"), RuleTable::new(1)).is_err());
        assert!(VariantConfig::case1(st("101"), RuleTable::new(1), st("1"), RuleTable::new(1)).is_ok());
        let cfg = VariantConfig::case1(st("101"), RuleTable::new(1), st("101"), RuleTable::new(1)).unwrap();
        assert_eq!(cfg.default_cap(), 256 * 64 + 1);
        assert!(run_trajectory(&cfg, 0).is_err());
    }

    #[test]
    fn deterministic_runs_repeat_within_the_pigeonhole_cap() {
        let cfg = VariantConfig::case1(st("1101"), RuleTable::new(110), st("100101"), RuleTable::new(30)).unwrap();
        let traj = run_trajectory(&cfg, cfg.default_cap()).unwrap();
        assert!(!traj.cap_hit);
        assert!(traj.steps() < cfg.default_cap());
        let again = run_trajectory(&cfg, cfg.default_cap()).unwrap();
        assert_eq!(traj.snapshots, again.snapshots);
    }

    #[test]
    fn wide_runner_matches_packed_case1() {
        let cfg = VariantConfig::case1(st("0110100"), RuleTable::new(110), st("10011"), RuleTable::new(30)).unwrap();
        let packed = run_steps(&cfg, 12);
        let env = Some((WideState::from(st("10011")), RuleTable::new(30)));
        let wide = run_wide(Variant::Case1, WideState::from(st("0110100")), RuleTable::new(110), env, 0.0, 0, 13).unwrap();
        for (p, w) in packed.iter().zip(&wide) {
            assert_eq!(WideState::from(p.s_o), *w);
        }
        assert!(run_wide(Variant::Case1, WideState::from(st("011")), RuleTable::new(1), None, 0.0, 0, 3).is_err());
    }
}
