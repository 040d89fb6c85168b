//! Elementary cellular automaton primitives.
//!
//! Rules use Wolfram numbering. Triplets are listed in the order
//! `111, 110, 101, 100, 011, 010, 001, 000`, so output slot `i` of a
//! [`RuleTable`] answers triplet [`TRIPLETS`]`[i]` and slot 0 is the most
//! significant bit of the rule number.
//!
//! A [`BitState`] packs up to 64 cells into a word. Cell 0 is the leftmost
//! cell and lives in the most significant used bit, so reading the word as a
//! number gives the cells in reading order (`00011110` is 30).

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Triplet values in rule-table order.
pub const TRIPLETS: [u8; 8] = [0b111, 0b110, 0b101, 0b100, 0b011, 0b010, 0b001, 0b000];

pub const MIN_WIDTH: usize = 1;
pub const MAX_WIDTH: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleTable(u8);

impl RuleTable {
    pub const ZERO: RuleTable = RuleTable(0);
    pub const IDENTITY: RuleTable = RuleTable(204);

    pub const fn new(number: u8) -> Self {
        RuleTable(number)
    }

    /// Checked construction from an arbitrary integer.
    pub fn from_number(n: i64) -> Result<Self> {
        u8::try_from(n).map(RuleTable).map_err(|_| Error::RuleOutOfRange(n))
    }

    pub fn from_outputs(outputs: [u8; 8]) -> Result<Self> {
        let mut n = 0u8;
        for (i, &o) in outputs.iter().enumerate() {
            match o {
                0 => {}
                1 => n |= 1 << (7 - i),
                other => {
                    return Err(Error::Config(format!(
                        "rule output {other} at slot {i} is not binary"
                    )))
                }
            }
        }
        Ok(RuleTable(n))
    }

    pub const fn number(self) -> u8 {
        self.0
    }

    pub fn outputs(self) -> [u8; 8] {
        std::array::from_fn(|i| self.slot(i))
    }

    /// Output stored in table slot `i` (0-based, [`TRIPLETS`] order).
    pub fn slot(self, i: usize) -> u8 {
        (self.0 >> (7 - i)) & 1
    }

    /// Output for a triplet given as a 3-bit value `left<<2 | center<<1 | right`.
    pub fn apply(self, triplet: u8) -> u8 {
        (self.0 >> (triplet & 7)) & 1
    }

    pub fn flip_slot(self, i: usize) -> Self {
        RuleTable(self.0 ^ (1 << (7 - i)))
    }

    /// Flip every slot whose bit is set in `mask` (bit `7 - i` addresses slot `i`).
    pub fn flip_mask(self, mask: u8) -> Self {
        RuleTable(self.0 ^ mask)
    }

    pub fn mirror(self) -> Self {
        let mut n = 0u8;
        for t in 0u8..8 {
            let reversed = ((t & 1) << 2) | (t & 2) | ((t >> 2) & 1);
            n |= self.apply(reversed) << t;
        }
        RuleTable(n)
    }

    pub fn complement(self) -> Self {
        let mut n = 0u8;
        for t in 0u8..8 {
            n |= (1 - self.apply(!t & 7)) << t;
        }
        RuleTable(n)
    }

    pub fn hamming(self, other: RuleTable) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Display for RuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn rule_from_number(n: i64) -> Result<RuleTable> {
    RuleTable::from_number(n)
}

pub fn rule_to_number(rule: RuleTable) -> u8 {
    rule.number()
}

/// Minimum rule number in the mirror/complement orbit of `n`.
pub fn canonical_rule(n: u8) -> u8 {
    let r = RuleTable(n);
    let m = r.mirror();
    [r, m, r.complement(), m.complement()]
        .iter()
        .map(|r| r.number())
        .min()
        .unwrap()
}

/// The 88 orbit representatives, ascending.
pub fn canonical_rules() -> &'static [u8] {
    static REPS: OnceLock<Vec<u8>> = OnceLock::new();
    REPS.get_or_init(|| {
        (0..=255u8)
            .map(canonical_rule)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    })
}

fn width_mask(width: usize) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BitState {
    bits: u64,
    width: u8,
}

impl BitState {
    pub fn new(bits: u64, width: usize) -> Result<Self> {
        if !(MIN_WIDTH..=MAX_WIDTH).contains(&width) {
            return Err(Error::InvalidWidth { width, min: MIN_WIDTH, max: MAX_WIDTH });
        }
        if bits & !width_mask(width) != 0 {
            return Err(Error::StateOverflow { value: bits, width });
        }
        Ok(BitState { bits, width: width as u8 })
    }

    pub fn zeros(width: usize) -> Result<Self> {
        Self::new(0, width)
    }

    pub fn ones(width: usize) -> Result<Self> {
        Self::new(width_mask(width.min(MAX_WIDTH)), width)
    }

    pub fn from_cells(cells: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for &c in cells {
            if c > 1 {
                return Err(Error::Format(format!("cell value {c} is not binary")));
            }
            bits = (bits << 1) | c as u64;
        }
        if cells.len() > MAX_WIDTH {
            return Err(Error::InvalidWidth { width: cells.len(), min: MIN_WIDTH, max: MAX_WIDTH });
        }
        Self::new(bits, cells.len())
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn width(self) -> usize {
        self.width as usize
    }

    #[inline]
    fn mask(self) -> u64 {
        width_mask(self.width())
    }

    pub fn cell(self, p: usize) -> u8 {
        assert!(p < self.width(), "cell {p} out of range for width {}", self.width);
        ((self.bits >> (self.width() - 1 - p)) & 1) as u8
    }

    pub fn cells(self) -> Vec<u8> {
        (0..self.width()).map(|p| self.cell(p)).collect()
    }

    pub fn with_cell_flipped(self, p: usize) -> Self {
        assert!(p < self.width(), "cell {p} out of range for width {}", self.width);
        BitState { bits: self.bits ^ (1 << (self.width() - 1 - p)), width: self.width }
    }

    /// Word whose bit for cell `p` holds the value of cell `p - 1`.
    #[inline]
    fn left_neighbors(self) -> u64 {
        let w = self.width();
        (self.bits >> 1) | ((self.bits & 1) << (w - 1))
    }

    /// Word whose bit for cell `p` holds the value of cell `p + 1`.
    #[inline]
    fn right_neighbors(self) -> u64 {
        let w = self.width();
        ((self.bits << 1) | (self.bits >> (w - 1))) & self.mask()
    }

    /// Mask of the cells whose neighbourhood equals `triplet`.
    #[inline]
    fn triplet_mask(self, triplet: u8, l: u64, r: u64) -> u64 {
        let pick = |bit: u8, word: u64| if bit == 1 { word } else { !word };
        pick((triplet >> 2) & 1, l) & pick((triplet >> 1) & 1, self.bits) & pick(triplet & 1, r) & self.mask()
    }

    /// For each triplet value `t` (`left<<2 | center<<1 | right`), the mask
    /// of cells whose neighbourhood is `t`.
    pub fn neighborhood_masks(self) -> [u64; 8] {
        let l = self.left_neighbors();
        let r = self.right_neighbors();
        std::array::from_fn(|t| self.triplet_mask(t as u8, l, r))
    }

    pub fn reversed(self) -> Self {
        let w = self.width();
        BitState { bits: self.bits.reverse_bits() >> (64 - w), width: self.width }
    }

    pub fn complemented(self) -> Self {
        BitState { bits: !self.bits & self.mask(), width: self.width }
    }

    /// Cyclic rotation moving every cell `k` positions to the right.
    pub fn rotated(self, k: usize) -> Self {
        let w = self.width();
        let k = k % w;
        if k == 0 {
            return self;
        }
        let bits = ((self.bits >> k) | (self.bits << (w - k))) & self.mask();
        BitState { bits, width: self.width }
    }

    pub fn is_homogeneous(self) -> bool {
        self.bits == 0 || self.bits == self.mask()
    }

    pub fn hamming(self, other: BitState) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.bits)
    }

    pub fn from_hex(s: &str, width: usize) -> Result<Self> {
        let bits = u64::from_str_radix(s.trim_start_matches("0x"), 16)
            .map_err(|e| Error::Format(format!("bad hex state {s:?}: {e}")))?;
        Self::new(bits, width)
    }
}

impl fmt::Display for BitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.width() {
            write!(f, "{}", self.cell(p))?;
        }
        Ok(())
    }
}

impl FromStr for BitState {
    type Err = Error;

    /// Parses a string of `0`/`1` characters, leftmost cell first.
    fn from_str(s: &str) -> Result<Self> {
        let cells = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Format(format!("bad cell character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BitState::from_cells(&cells)
    }
}

/// One synchronous update with periodic boundaries.
pub fn step(rule: RuleTable, state: BitState) -> BitState {
    let l = state.left_neighbors();
    let r = state.right_neighbors();
    let mut out = 0u64;
    for t in 0u8..8 {
        if rule.apply(t) == 1 {
            out |= state.triplet_mask(t, l, r);
        }
    }
    BitState { bits: out, width: state.width }
}

/// Per-triplet window counts of a state, in [`TRIPLETS`] order.
///
/// Frequencies are `count / width`; comparisons cross-multiply so they stay exact.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TripletCounts {
    pub counts: [u32; 8],
    pub width: u32,
}

impl TripletCounts {
    pub fn new(counts: [u32; 8], width: u32) -> Result<Self> {
        if width == 0 || counts.iter().sum::<u32>() != width {
            return Err(Error::Format(format!(
                "triplet counts {counts:?} do not sum to width {width}"
            )));
        }
        Ok(TripletCounts { counts, width })
    }

    pub fn of(state: BitState) -> Self {
        let l = state.left_neighbors();
        let r = state.right_neighbors();
        let counts =
            std::array::from_fn(|i| state.triplet_mask(TRIPLETS[i], l, r).count_ones());
        TripletCounts { counts, width: state.width() as u32 }
    }

    pub fn of_wide(state: &WideState) -> Self {
        let mut counts = [0u32; 8];
        let w = state.width();
        for p in 0..w {
            let t = state.neighborhood(p);
            counts[7 - t as usize] += 1;
        }
        TripletCounts { counts, width: w as u32 }
    }

    /// `(count, width)` pairs; each is the exact frequency `count / width`.
    pub fn frequencies(&self) -> [(u32, u32); 8] {
        std::array::from_fn(|i| (self.counts[i], self.width))
    }

    pub fn frequency(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.width as f64
    }

    /// `freq_self(i) >= freq_other(i)`, exactly.
    pub fn frequency_ge(&self, other: &TripletCounts, i: usize) -> bool {
        self.counts[i] as u64 * other.width as u64 >= other.counts[i] as u64 * self.width as u64
    }
}

pub fn triplet_frequencies(state: BitState) -> TripletCounts {
    TripletCounts::of(state)
}

/// Unpacked row of arbitrary width, used for rendering wide systems.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WideState {
    cells: Vec<u8>,
}

impl WideState {
    pub fn new(cells: Vec<u8>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidWidth { width: 0, min: 1, max: usize::MAX });
        }
        if let Some(c) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::Format(format!("cell value {c} is not binary")));
        }
        Ok(WideState { cells })
    }

    pub fn width(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    fn neighborhood(&self, p: usize) -> u8 {
        let w = self.cells.len();
        let left = self.cells[(p + w - 1) % w];
        let right = self.cells[(p + 1) % w];
        (left << 2) | (self.cells[p] << 1) | right
    }

    pub fn step(&self, rule: RuleTable) -> WideState {
        let cells = (0..self.width()).map(|p| rule.apply(self.neighborhood(p))).collect();
        WideState { cells }
    }
}

impl From<BitState> for WideState {
    fn from(s: BitState) -> Self {
        WideState { cells: s.cells() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum WolframClass {
    I,
    II,
    III,
    IV,
}

impl WolframClass {
    pub fn from_index(n: u8) -> Option<Self> {
        match n {
            1 => Some(WolframClass::I),
            2 => Some(WolframClass::II),
            3 => Some(WolframClass::III),
            4 => Some(WolframClass::IV),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        self as u8 + 1
    }

    /// Classes I and II.
    pub fn is_simple(self) -> bool {
        matches!(self, WolframClass::I | WolframClass::II)
    }
}

impl fmt::Display for WolframClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WolframClass::I => "I",
            WolframClass::II => "II",
            WolframClass::III => "III",
            WolframClass::IV => "IV",
        };
        f.write_str(s)
    }
}

const BUNDLED_CLASSES: &str = include_str!("../data/wolfram_classes.txt");

/// Rule number to Wolfram class for all 256 rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTable {
    classes: [WolframClass; 256],
}

impl ClassTable {
    /// Parses `<rule> <class>` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut slots: [Option<WolframClass>; 256] = [None; 256];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::ClassTable(format!("line {}: {line:?}", lineno + 1));
            let mut fields = line.split_whitespace();
            let rule: u8 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
            let class = fields
                .next()
                .and_then(|f| f.parse::<u8>().ok())
                .and_then(WolframClass::from_index)
                .ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            if slots[rule as usize].replace(class).is_some() {
                return Err(Error::ClassTable(format!("rule {rule} listed twice")));
            }
        }
        let mut classes = [WolframClass::I; 256];
        for (n, slot) in slots.iter().enumerate() {
            classes[n] = slot.ok_or_else(|| Error::ClassTable(format!("rule {n} missing")))?;
        }
        Ok(ClassTable { classes })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn bundled() -> &'static ClassTable {
        static TABLE: OnceLock<ClassTable> = OnceLock::new();
        TABLE.get_or_init(|| ClassTable::parse(BUNDLED_CLASSES).expect("bundled class table is valid"))
    }

    pub fn class_of(&self, rule: u8) -> WolframClass {
        self.classes[rule as usize]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, c) in self.classes.iter().enumerate() {
            out.push_str(&format!("{n} {}\n", c.index()));
        }
        out
    }
}

pub fn wolfram_class(n: u8) -> WolframClass {
    ClassTable::bundled().class_of(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_step(rule: RuleTable, s: BitState) -> BitState {
        let c = s.cells();
        let w = c.len();
        let next: Vec<u8> = (0..w)
            .map(|p| {
                let t = (c[(p + w - 1) % w] << 2) | (c[p] << 1) | c[(p + 1) % w];
                rule.outputs()[TRIPLETS.iter().position(|&x| x == t).unwrap()]
            })
            .collect();
        BitState::from_cells(&next).unwrap()
    }

    #[test]
    fn rule_30_outputs() {
        assert_eq!(rule_from_number(30).unwrap().outputs(), [0, 0, 0, 1, 1, 1, 1, 0]);
        assert_eq!(rule_from_number(0).unwrap().outputs(), [0; 8]);
        assert_eq!(rule_from_number(62).unwrap().outputs(), [0, 0, 1, 1, 1, 1, 1, 0]);
        assert_eq!(rule_to_number(RuleTable::from_outputs([0, 0, 1, 1, 1, 1, 1, 0]).unwrap()), 62);
    }

    #[test]
    fn rejects_out_of_range_rules() {
        assert!(rule_from_number(256).is_err());
        assert!(rule_from_number(-1).is_err());
        assert!(RuleTable::from_outputs([0, 0, 0, 0, 0, 0, 0, 2]).is_err());
    }

    #[test]
    fn step_examples() {
        let s: BitState = "00100".parse().unwrap();
        assert_eq!(step(RuleTable::new(30), s).to_string(), "01110");
        assert_eq!(naive_step(RuleTable::new(30), s).to_string(), "01110");
        assert_eq!(step(RuleTable::ZERO, s), BitState::zeros(5).unwrap());
        assert_eq!(step(RuleTable::IDENTITY, s), s);
    }

    #[test]
    fn step_matches_naive_lookup_exhaustively_at_width_5() {
        for rule in 0..=255u8 {
            for bits in 0..32u64 {
                let s = BitState::new(bits, 5).unwrap();
                assert_eq!(step(RuleTable::new(rule), s), naive_step(RuleTable::new(rule), s));
            }
        }
    }

    #[test]
    fn tiny_widths_wrap_onto_themselves() {
        // width 1: every neighbourhood is 000 or 111
        let one = BitState::new(1, 1).unwrap();
        assert_eq!(step(RuleTable::new(0b1000_0000), one), one);
        assert_eq!(step(RuleTable::new(0b0111_1111), one).bits(), 0);
        let two: BitState = "10".parse().unwrap();
        assert_eq!(step(RuleTable::new(30), two), naive_step(RuleTable::new(30), two));
    }

    #[test]
    fn canonical_orbits() {
        assert_eq!(canonical_rules().len(), 88);
        assert_eq!(canonical_rule(255), 0);
        assert_eq!(canonical_rule(110), 110);
        assert_eq!(canonical_rule(124), 110);
        assert_eq!(canonical_rule(137), 110);
        for n in 0..=255u8 {
            assert_eq!(canonical_rule(canonical_rule(n)), canonical_rule(n));
            let r = RuleTable::new(n);
            assert_eq!(r.mirror().mirror(), r);
            assert_eq!(r.complement().complement(), r);
        }
    }

    #[test]
    fn bundled_classes() {
        assert_eq!(wolfram_class(110), WolframClass::IV);
        assert_eq!(wolfram_class(30), WolframClass::III);
        assert_eq!(wolfram_class(0), WolframClass::I);
        assert_eq!(wolfram_class(204), WolframClass::II);
        for n in 0..=255u8 {
            assert_eq!(wolfram_class(n), wolfram_class(canonical_rule(n)), "rule {n}");
        }
        let round = ClassTable::parse(&ClassTable::bundled().to_text()).unwrap();
        assert_eq!(&round, ClassTable::bundled());
    }

    #[test]
    fn class_table_errors() {
        assert!(ClassTable::parse("0 1\n").is_err());
        let mut text = ClassTable::bundled().to_text();
        text.push_str("0 2\n");
        assert!(ClassTable::parse(&text).is_err());
        assert!(ClassTable::parse(&ClassTable::bundled().to_text().replace("110 4", "110 5")).is_err());
    }

    #[test]
    fn triplet_frequency_examples() {
        let zeros = TripletCounts::of(BitState::zeros(7).unwrap());
        assert_eq!(zeros.counts, [0, 0, 0, 0, 0, 0, 0, 7]);
        let alt = TripletCounts::of("0101".parse().unwrap());
        // windows: 101, 010, 101, 010
        assert_eq!(alt.counts, [0, 0, 2, 0, 0, 2, 0, 0]);
        assert_eq!(alt.frequency(2), 0.5);
        assert_eq!(alt.frequency(5), 0.5);
    }

    #[test]
    fn triplet_counts_match_wide_counts() {
        for bits in 0..64u64 {
            let s = BitState::new(bits, 6).unwrap();
            assert_eq!(TripletCounts::of(s), TripletCounts::of_wide(&s.into()));
        }
    }

    #[test]
    fn wide_step_matches_packed_step() {
        for rule in [30u8, 90, 110, 54, 0, 255] {
            let s: BitState = "1011001110001".parse().unwrap();
            let wide = WideState::from(s).step(RuleTable::new(rule));
            assert_eq!(wide.cells(), step(RuleTable::new(rule), s).cells().as_slice());
        }
    }

    #[test]
    fn state_parsing_and_bounds() {
        assert!(BitState::new(8, 3).is_err());
        assert!(BitState::new(0, 0).is_err());
        assert!(BitState::new(0, 65).is_err());
        let s: BitState = "00011110".parse().unwrap();
        assert_eq!(s.bits(), 30);
        assert_eq!(BitState::from_hex(&s.to_hex(), 8).unwrap(), s);
        assert!("012".parse::<BitState>().is_err());
        let full = BitState::ones(64).unwrap();
        assert!(full.is_homogeneous());
        assert_eq!(step(RuleTable::new(30), full).bits(), 0);
    }
}
