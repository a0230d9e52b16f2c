//! Named-state populations, dark singlets and density-matrix health checks.
//!
//! All populations are photon-marginalized: a configuration is classified by
//! its electron slots and nuclear bit only.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::basis::{Atom, BasisIndex, BasisState, Mode, Orbital, Slot, Spin, NUM_MODES};
use crate::linalg::{hermitian_eigenvalues, hermiticity_residual, trace, C64, ZERO};
use crate::model::lowering_operators;
use crate::ops::{photon_op, Ladder, SparseOperator};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateClass {
    /// Both electrons in the bonding orbital, nuclei together.
    H2,
    /// One electron per atom, nuclei apart.
    HH,
    /// Both electrons on one atom, nuclei apart.
    HMinusHPlus,
    Other,
}

impl StateClass {
    pub const ALL: [StateClass; 4] = [StateClass::H2, StateClass::HH, StateClass::HMinusHPlus, StateClass::Other];

    pub fn label(self) -> &'static str {
        match self {
            StateClass::H2 => "H2",
            StateClass::HH => "H,H",
            StateClass::HMinusHPlus => "H-,H+",
            StateClass::Other => "other",
        }
    }

    /// CSV column name.
    pub fn column(self) -> &'static str {
        match self {
            StateClass::H2 => "pop_h2",
            StateClass::HH => "pop_hh",
            StateClass::HMinusHPlus => "pop_hmhp",
            StateClass::Other => "pop_other",
        }
    }
}

/// How the nuclear bit enters classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classifier {
    /// Molecular classes require k=0, atomic ones k=1.
    #[default]
    NuclearAware,
    /// Slots only. Used for classical motion, where the nuclear bit is
    /// frozen and the schedules decide which picture applies.
    SlotOnly,
}

fn bonding_pair() -> u8 {
    BasisState::new([0; NUM_MODES], &[Slot::bonding(Spin::Up), Slot::bonding(Spin::Down)], 0).slots
}

fn atomic_class(s: &BasisState) -> StateClass {
    let mut on = [0u32; 2];
    for sl in s.occupied_slots() {
        on[(sl.atom() == Atom::Second) as usize] += 1;
    }
    match on {
        [1, 1] => StateClass::HH,
        [2, 0] | [0, 2] => StateClass::HMinusHPlus,
        _ => StateClass::Other,
    }
}

pub fn classify(s: &BasisState) -> StateClass {
    classify_with(s, Classifier::NuclearAware)
}

pub fn classify_with(s: &BasisState, mode: Classifier) -> StateClass {
    let molecular = s.slots == bonding_pair();
    match mode {
        Classifier::NuclearAware => match s.nucleus {
            0 if molecular => StateClass::H2,
            0 => StateClass::Other,
            _ => atomic_class(s),
        },
        Classifier::SlotOnly if molecular => StateClass::H2,
        Classifier::SlotOnly => atomic_class(s),
    }
}

/// `Σ_s ⟨s|ρ|s⟩` over states of the given class.
pub fn population(rho: &ArrayView2<C64>, idx: &BasisIndex, class: StateClass, mode: Classifier) -> f64 {
    idx.states()
        .iter()
        .enumerate()
        .filter(|(_, s)| classify_with(s, mode) == class)
        .map(|(i, _)| rho[[i, i]].re)
        .sum()
}

/// Populations of every class in [`StateClass::ALL`] order.
pub fn populations(rho: &ArrayView2<C64>, idx: &BasisIndex, mode: Classifier) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, s) in idx.states().iter().enumerate() {
        let c = classify_with(s, mode);
        let k = StateClass::ALL.iter().position(|x| *x == c).unwrap();
        out[k] += rho[[i, i]].re;
    }
    out
}

/// An antisymmetric two-configuration singlet `(|a⟩ − |b⟩)/√2` of
/// atomic slots; k=1 unless a nuclear bit is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DarkState {
    pub name: &'static str,
    pub first: [Slot; 2],
    pub second: [Slot; 2],
    /// Photon mode whose symmetric absorption it is dark to.
    pub channel: Mode,
}

impl DarkState {
    /// Normalized vector for one photon configuration; `sign = -1` gives
    /// the singlet, `+1` the bright partner. `None` if either component is
    /// missing from the basis.
    pub fn vector(&self, idx: &BasisIndex, photons: [u8; NUM_MODES], sign: f64) -> Option<Array1<C64>> {
        self.vector_at(idx, photons, 1, sign)
    }

    pub fn vector_at(&self, idx: &BasisIndex, photons: [u8; NUM_MODES], nucleus: u8, sign: f64) -> Option<Array1<C64>> {
        let (a, b) = self.indices(idx, photons, nucleus)?;
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = Array1::from_elem(idx.len(), ZERO);
        v[a] = C64::from(c);
        v[b] = C64::from(sign * c);
        Some(v)
    }

    fn indices(&self, idx: &BasisIndex, photons: [u8; NUM_MODES], nucleus: u8) -> Option<(usize, usize)> {
        Some((
            idx.find(&BasisState::new(photons, &self.first, nucleus))?,
            idx.find(&BasisState::new(photons, &self.second, nucleus))?,
        ))
    }
}

/// Nuclear bits on which the atomic singlets count: k=1 when the bit
/// tracks the nuclei, either value when classification ignores it.
fn dark_nuclei(mode: Classifier) -> &'static [u8] {
    match mode {
        Classifier::NuclearAware => &[1],
        Classifier::SlotOnly => &[0, 1],
    }
}

fn ground(atom: Atom, spin: Spin) -> Slot {
    Slot::new(atom, Orbital::Ground, spin)
}

fn excited(atom: Atom, spin: Spin) -> Slot {
    Slot::new(atom, Orbital::Excited, spin)
}

/// D₁ (dark to the spin-flip photon) and D₂ (dark to Ω↓).
pub fn dark_states() -> [DarkState; 2] {
    use Atom::*;
    use Spin::*;
    [
        DarkState {
            name: "D1",
            first: [ground(First, Up), ground(Second, Down)],
            second: [ground(First, Down), ground(Second, Up)],
            channel: Mode::Spin,
        },
        DarkState {
            name: "D2",
            first: [excited(First, Down), ground(Second, Down)],
            second: [ground(First, Down), excited(Second, Down)],
            channel: Mode::AtomicDown,
        },
    ]
}

/// Every dark vector supported by `idx`: both singlets for each photon
/// configuration (and nuclear bit, per `mode`) present.
pub fn dark_state_vectors(idx: &BasisIndex, mode: Classifier) -> Vec<(DarkState, [u8; NUM_MODES], u8, Array1<C64>)> {
    let mut out = Vec::new();
    for d in dark_states() {
        for (p, k) in dark_configurations(idx, mode) {
            if let Some(v) = d.vector_at(idx, p, k, -1.0) {
                out.push((d, p, k, v));
            }
        }
    }
    out
}

fn dark_configurations(idx: &BasisIndex, mode: Classifier) -> Vec<([u8; NUM_MODES], u8)> {
    let mut photon_sets: Vec<[u8; NUM_MODES]> = idx.states().iter().map(|s| s.photons).collect();
    photon_sets.sort_unstable();
    photon_sets.dedup();
    photon_sets
        .into_iter()
        .flat_map(|p| dark_nuclei(mode).iter().map(move |&k| (p, k)))
        .collect()
}

/// `‖a_m†(σ_{m,1} + σ_{m,2})·v‖` for the given photon mode.
pub fn verify_singlet(v: &Array1<C64>, idx: &BasisIndex, mode: Mode) -> Result<f64> {
    let sigma = SparseOperator::sum(lowering_operators(mode, idx).iter())?
        .unwrap_or_else(|| SparseOperator::zero(idx.len(), idx.id()));
    let ad = photon_op(mode, Ladder::Create, idx);
    let w = ad.compose(&sigma)?.apply(&v.view())?;
    Ok(w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

/// Total weight of `ρ` on the dark singlets, summed over photon
/// configurations (and over k when `mode` ignores the nuclear bit).
pub fn dark_population(rho: &ArrayView2<C64>, idx: &BasisIndex, mode: Classifier) -> f64 {
    let mut total = 0.0;
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for d in dark_states() {
        for (p, k) in dark_configurations(idx, mode) {
            // ⟨D|ρ|D⟩ with D = c(|a⟩ − |b⟩), read straight off four entries
            if let Some((a, b)) = d.indices(idx, p, k) {
                total += c * c * (rho[[a, a]] + rho[[b, b]] - rho[[a, b]] - rho[[b, a]]).re;
            }
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub trace: f64,
    pub trace_imag: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub purity: f64,
}

pub fn diagnostics(rho: &ArrayView2<C64>) -> Result<Diagnostics> {
    let tr = trace(rho);
    let min_eigenvalue = hermitian_eigenvalues(rho)?.iter().copied().fold(f64::INFINITY, f64::min);
    let purity = rho
        .indexed_iter()
        .map(|((i, j), z)| (z * rho[[j, i]]).re)
        .sum::<f64>();
    Ok(Diagnostics {
        trace: tr.re,
        trace_imag: tr.im,
        hermiticity: hermiticity_residual(rho),
        min_eigenvalue,
        purity,
    })
}
