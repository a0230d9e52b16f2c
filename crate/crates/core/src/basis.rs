//! Enumeration and indexing of the second-quantized configuration space.
//!
//! A configuration holds five photon occupation numbers, eight electron
//! orbital-slot bits and one nuclear bit:
//!
//! ```text
//! |p1>_{ω↑} |p2>_{ω↓} |p3>_{Ω↑} |p4>_{Ω↓} |p5>_{Ωs}
//!   |l1>_{at1,or0,↑} |l2>_{at1,or0,↓} |l3>_{at1,or-1,↑} |l4>_{at1,or-1,↓}
//!   |l5>_{at2,or0,↑} |l6>_{at2,or0,↓} |l7>_{at2,or-1,↑} |l8>_{at2,or-1,↓}
//!   |k>_n
//! ```
//!
//! Canonical order: photons vary slowest (p1 first), then the slot pattern
//! `l1 l2 … l8` read as a big-endian binary number, then `k`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ops::SparseOperator;
use crate::{Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_DIMENSION_CAP: usize = 1_000_000;

pub const NUM_MODES: usize = 5;
pub const NUM_SLOTS: usize = 8;

/// Photon modes in the order they appear in a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// ω↑: molecular transition, spin up.
    MolecularUp,
    /// ω↓: molecular transition, spin down.
    MolecularDown,
    /// Ω↑: atomic transition, spin up.
    AtomicUp,
    /// Ω↓: atomic transition, spin down.
    AtomicDown,
    /// Ωˢ: atomic spin flip.
    Spin,
}

impl Mode {
    pub const ALL: [Mode; NUM_MODES] = [
        Mode::MolecularUp,
        Mode::MolecularDown,
        Mode::AtomicUp,
        Mode::AtomicDown,
        Mode::Spin,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short identifier used in config files and CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            Mode::MolecularUp => "omega_up",
            Mode::MolecularDown => "omega_down",
            Mode::AtomicUp => "big_omega_up",
            Mode::AtomicDown => "big_omega_down",
            Mode::Spin => "big_omega_spin",
        }
    }

    pub fn from_key(key: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.key() == key)
    }

    /// Molecular modes couple to the molecular orbitals, the rest to atoms.
    pub fn group(self) -> ModeGroup {
        match self {
            Mode::MolecularUp | Mode::MolecularDown => ModeGroup::Molecular,
            _ => ModeGroup::Atomic,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::MolecularUp => "ω↑",
            Mode::MolecularDown => "ω↓",
            Mode::AtomicUp => "Ω↑",
            Mode::AtomicDown => "Ω↓",
            Mode::Spin => "Ωˢ",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeGroup {
    Atomic,
    Molecular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::First, Atom::Second];
}

/// Atomic orbital: excited `or0` or ground `or-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orbital {
    Excited,
    Ground,
}

/// One of the eight electron slots `l1 … l8`, stored as a zero-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot(u8);

impl Slot {
    pub fn new(atom: Atom, orbital: Orbital, spin: Spin) -> Slot {
        let a = match atom {
            Atom::First => 0,
            Atom::Second => 4,
        };
        let o = match orbital {
            Orbital::Excited => 0,
            Orbital::Ground => 2,
        };
        let s = match spin {
            Spin::Up => 0,
            Spin::Down => 1,
        };
        Slot(a + o + s)
    }

    /// Slot from its zero-based position (`l1` is 0).
    pub fn from_index(i: usize) -> Option<Slot> {
        (i < NUM_SLOTS).then_some(Slot(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn atom(self) -> Atom {
        if self.0 < 4 {
            Atom::First
        } else {
            Atom::Second
        }
    }

    pub fn orbital(self) -> Orbital {
        if self.0 % 4 < 2 {
            Orbital::Excited
        } else {
            Orbital::Ground
        }
    }

    pub fn spin(self) -> Spin {
        if self.0 % 2 == 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    /// Bit inside the big-endian slot pattern (`l1` is the most significant).
    fn mask(self) -> u8 {
        0x80 >> self.0
    }

    /// Molecular excited orbital Φ₁ of the given spin. When the nuclei are
    /// together the excited slots of atom 1 carry Φ₁.
    pub fn antibonding(spin: Spin) -> Slot {
        Slot::new(Atom::First, Orbital::Excited, spin)
    }

    /// Molecular ground orbital Φ₀ of the given spin, carried by the excited
    /// slots of atom 2.
    pub fn bonding(spin: Spin) -> Slot {
        Slot::new(Atom::Second, Orbital::Excited, spin)
    }
}

/// Truncation and particle content of the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Highest Fock level kept per mode, in [`Mode::ALL`] order.
    pub photon_max: [u8; NUM_MODES],
    pub electron_count: u8,
}

impl ModeSpec {
    pub fn uniform(n_max: u8, electron_count: u8) -> ModeSpec {
        ModeSpec {
            photon_max: [n_max; NUM_MODES],
            electron_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.electron_count as usize > NUM_SLOTS {
            return Err(Error::InvalidParameter(format!(
                "electron_count {} exceeds the {NUM_SLOTS} available slots",
                self.electron_count
            )));
        }
        Ok(())
    }

    /// Product of photon level counts times slot combinations times the
    /// nuclear bit.
    pub fn dimension(&self) -> u128 {
        let photons: u128 = self.photon_max.iter().map(|&n| n as u128 + 1).product();
        photons * binomial(NUM_SLOTS as u128, self.electron_count as u128) * 2
    }
}

impl Default for ModeSpec {
    fn default() -> Self {
        ModeSpec::uniform(1, 2)
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// One configuration of photons, electrons and nuclei.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub photons: [u8; NUM_MODES],
    /// Big-endian occupation pattern, bit 7 is `l1`.
    pub slots: u8,
    /// 0: nuclei together in one cavity, 1: nuclei apart.
    pub nucleus: u8,
}

impl BasisState {
    pub fn new(photons: [u8; NUM_MODES], occupied: &[Slot], nucleus: u8) -> BasisState {
        let slots = occupied.iter().fold(0u8, |acc, s| acc | s.mask());
        BasisState {
            photons,
            slots,
            nucleus,
        }
    }

    pub fn photon(&self, mode: Mode) -> u8 {
        self.photons[mode.index()]
    }

    pub fn with_photon(mut self, mode: Mode, n: u8) -> BasisState {
        self.photons[mode.index()] = n;
        self
    }

    pub fn occupied(&self, slot: Slot) -> bool {
        self.slots & slot.mask() != 0
    }

    pub fn with_slot(mut self, slot: Slot, occupied: bool) -> BasisState {
        if occupied {
            self.slots |= slot.mask();
        } else {
            self.slots &= !slot.mask();
        }
        self
    }

    pub fn with_nucleus(mut self, k: u8) -> BasisState {
        self.nucleus = k;
        self
    }

    pub fn electron_count(&self) -> u32 {
        self.slots.count_ones()
    }

    /// Occupied slots in `l1 … l8` order.
    pub fn occupied_slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..NUM_SLOTS as u8)
            .map(Slot)
            .filter(move |s| self.occupied(*s))
    }

    /// Whether the state satisfies the truncation and particle number of `spec`.
    pub fn fits(&self, spec: &ModeSpec) -> bool {
        self.photons
            .iter()
            .zip(spec.photon_max.iter())
            .all(|(p, m)| p <= m)
            && self.electron_count() == spec.electron_count as u32
            && self.nucleus <= 1
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|p=")?;
        for p in self.photons {
            write!(f, "{p}")?;
        }
        write!(f, ";l={:08b};k={}>", self.slots, self.nucleus)
    }
}

/// Ordered list of configurations with a bijective lookup.
#[derive(Debug, Clone)]
pub struct BasisIndex {
    spec: ModeSpec,
    states: Vec<BasisState>,
    lookup: HashMap<BasisState, usize>,
    id: u64,
}

impl BasisIndex {
    fn from_states(spec: ModeSpec, states: Vec<BasisState>) -> BasisIndex {
        let lookup = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let id = fingerprint(&spec, &states);
        BasisIndex {
            spec,
            states,
            lookup,
            id,
        }
    }

    pub fn spec(&self) -> &ModeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Identifier shared by every operator built over this index.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn index_of(&self, state: &BasisState) -> Result<usize> {
        self.lookup
            .get(state)
            .copied()
            .ok_or_else(|| Error::StateNotFound(state.to_string()))
    }

    /// Lookup that returns `None` instead of an error; used by operator
    /// builders where leaving the basis means a zero matrix element.
    pub fn find(&self, state: &BasisState) -> Option<usize> {
        self.lookup.get(state).copied()
    }

    pub fn state_of(&self, i: usize) -> Result<BasisState> {
        self.states.get(i).copied().ok_or(Error::IndexOutOfRange {
            index: i,
            dim: self.states.len(),
        })
    }

    /// Sub-index keeping the given positions, in canonical order.
    pub fn subset(&self, keep: impl IntoIterator<Item = usize>) -> BasisIndex {
        let mut kept: Vec<usize> = keep.into_iter().collect();
        kept.sort_unstable();
        kept.dedup();
        let states = kept.into_iter().map(|i| self.states[i]).collect();
        BasisIndex::from_states(self.spec, states)
    }
}

impl PartialEq for BasisIndex {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.states == other.states
    }
}

fn fingerprint(spec: &ModeSpec, states: &[BasisState]) -> u64 {
    // FNV-1a over the spec and the ordered states.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |b: u8| {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    };
    spec.photon_max.iter().for_each(|&b| eat(b));
    eat(spec.electron_count);
    for s in states {
        s.photons.iter().for_each(|&b| eat(b));
        eat(s.slots);
        eat(s.nucleus);
    }
    h
}

/// Enumerate every configuration allowed by `spec`, refusing bases larger
/// than [`DEFAULT_DIMENSION_CAP`].
pub fn enumerate_basis(spec: &ModeSpec) -> Result<BasisIndex> {
    enumerate_basis_capped(spec, DEFAULT_DIMENSION_CAP)
}

pub fn enumerate_basis_capped(spec: &ModeSpec, cap: usize) -> Result<BasisIndex> {
    spec.validate()?;
    let dim = spec.dimension();
    if dim > cap as u128 {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    let patterns: Vec<u8> = (0u16..=255)
        .map(|p| p as u8)
        .filter(|p| p.count_ones() == spec.electron_count as u32)
        .collect();

    let mut states = Vec::with_capacity(dim as usize);
    let mut photons = [0u8; NUM_MODES];
    loop {
        for &slots in &patterns {
            for nucleus in 0..=1 {
                states.push(BasisState {
                    photons,
                    slots,
                    nucleus,
                });
            }
        }
        // Odometer with the last mode varying fastest.
        let mut m = NUM_MODES;
        loop {
            if m == 0 {
                return Ok(BasisIndex::from_states(*spec, states));
            }
            m -= 1;
            if photons[m] < spec.photon_max[m] {
                photons[m] += 1;
                break;
            }
            photons[m] = 0;
        }
    }
}

/// Closure of `seeds` under the sparsity patterns of `generators`.
///
/// Every generator must be expressed over `idx`. The returned sub-basis keeps
/// canonical order and contains all seeds.
pub fn reachable_subspace(
    idx: &BasisIndex,
    generators: &[&SparseOperator],
    seeds: &[BasisState],
) -> Result<BasisIndex> {
    for g in generators {
        g.check_basis(idx.id())?;
    }
    let transposed: Vec<SparseOperator> = generators.iter().map(|g| g.transpose()).collect();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        let i = idx.index_of(s)?;
        if seen.insert(i) {
            queue.push_back(i);
        }
    }
    while let Some(j) = queue.pop_front() {
        // Row j of the transpose lists the targets of column j.
        for g in &transposed {
            for (i, _) in g.row(j) {
                if seen.insert(i) {
                    queue.push_back(i);
                }
            }
        }
    }
    Ok(idx.subset(seen))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_counts() {
        assert_eq!(enumerate_basis(&ModeSpec::uniform(0, 2)).unwrap().len(), 56);
        assert_eq!(enumerate_basis(&ModeSpec::uniform(0, 0)).unwrap().len(), 2);
        assert_eq!(ModeSpec::uniform(1, 2).dimension(), 1792);
    }

    #[test]
    fn canonical_order() {
        let idx = enumerate_basis(&ModeSpec::uniform(1, 2)).unwrap();
        let first = idx.state_of(0).unwrap();
        assert_eq!(first.photons, [0; 5]);
        assert_eq!(first.slots, 0b0000_0011);
        assert_eq!(first.nucleus, 0);
        assert_eq!(idx.index_of(&first).unwrap(), 0);
        assert!(idx.states().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn slot_geometry() {
        let s = Slot::new(Atom::Second, Orbital::Ground, Spin::Down);
        assert_eq!(s.index(), 7);
        assert_eq!(s.atom(), Atom::Second);
        assert_eq!(s.orbital(), Orbital::Ground);
        assert_eq!(s.spin(), Spin::Down);
        assert_eq!(Slot::antibonding(Spin::Up).index(), 0);
        assert_eq!(Slot::bonding(Spin::Down).index(), 5);
    }

    #[test]
    fn rejects_wrong_electron_number() {
        let idx = enumerate_basis(&ModeSpec::uniform(0, 2)).unwrap();
        let three = BasisState::new(
            [0; 5],
            &[Slot(0), Slot(1), Slot(2)],
            0,
        );
        assert!(matches!(idx.index_of(&three), Err(Error::StateNotFound(_))));
        assert!(idx.state_of(56).is_err());
    }

    #[test]
    fn cap_is_enforced() {
        let spec = ModeSpec::uniform(9, 4);
        assert!(matches!(
            enumerate_basis(&spec),
            Err(Error::DimensionOverflow { .. })
        ));
        assert!(ModeSpec { photon_max: [0; 5], electron_count: 9 }.validate().is_err());
    }
}
