//! Physical parameters, coupling schedules and Hamiltonian assembly.
//!
//! The Hamiltonian is kept as a sum of fixed operators with scalar weights:
//!
//! ```text
//! H(t) = H_free + Σ_m g_m(t) V_m + Σ_j ζ_j T_j
//! ```
//!
//! where `H_free` holds every bare-energy term, `V_m` is the (gated) RWA
//! interaction of mode `m` at unit coupling and `T_j` the tunnelling
//! projector terms at unit intensity. Time dependence then only touches the
//! weights.

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::basis::{Atom, BasisIndex, Mode, ModeGroup, Spin, NUM_MODES};
use crate::ops::{
    atomic_transition, molecular_transition, nuclear_op, nuclear_projector, photon_op, spin_transition,
    Ladder, SparseOperator, Transition,
};
use crate::{Error, Result};

/// Strong-coupling threshold on η = g/(ħω).
pub const SC_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    Association,
    Dissociation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motion {
    /// Nuclei tunnel; couplings are static and gated by the nuclear bit.
    Quantum,
    /// Tunnelling forbidden; the nuclear bit is frozen and the coupling
    /// schedules carry the motion.
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hbar: f64,
    /// Mode (and matching transition) frequencies, [`Mode::ALL`] order.
    pub freq: [f64; NUM_MODES],
    pub coupling: [f64; NUM_MODES],
    /// ζ₀, ζ₁, ζ₂.
    pub zeta: [f64; 3],
    /// Leakage rate per mode.
    pub gamma: [f64; NUM_MODES],
    /// Influx ratio per mode, γ_in = μ·γ.
    pub mu: [f64; NUM_MODES],
}

impl ModelParams {
    /// The published parameter pack with no influx.
    pub fn paper_defaults() -> ModelParams {
        ModelParams {
            hbar: 1.0,
            freq: [5e9, 5e9, 1e10, 1e10, 1e9],
            coupling: [5e7, 5e7, 1e8, 1e8, 1e7],
            zeta: [0.0, 1e8, 1e9],
            gamma: [1e7; NUM_MODES],
            mu: [0.0; NUM_MODES],
        }
    }

    /// Pump the modes feeding the process: the atomic group for
    /// association, the molecular pair for dissociation.
    pub fn with_process_influx(mut self, process: Process, mu: f64) -> ModelParams {
        for m in Mode::ALL {
            let pumped = match process {
                Process::Association => m.group() == ModeGroup::Atomic,
                Process::Dissociation => m.group() == ModeGroup::Molecular,
            };
            self.mu[m.index()] = if pumped { mu } else { 0.0 };
        }
        self
    }

    pub fn freq_of(&self, m: Mode) -> f64 {
        self.freq[m.index()]
    }

    pub fn coupling_of(&self, m: Mode) -> f64 {
        self.coupling[m.index()]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return bad(format!("hbar must be positive, got {}", self.hbar));
        }
        let groups: [(&str, &[f64]); 4] = [
            ("freq", &self.freq),
            ("coupling", &self.coupling),
            ("zeta", &self.zeta),
            ("gamma", &self.gamma),
        ];
        for (name, vals) in groups {
            if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return bad(format!("{name} entries must be finite and non-negative, got {v}"));
            }
        }
        if let Some(v) = self.mu.iter().find(|v| !(v.is_finite() && (0.0..1.0).contains(*v))) {
            return bad(format!("influx ratio mu must lie in [0, 1), got {v}"));
        }
        Ok(())
    }

    /// Default integrator step: resolve the fastest coherent scale and keep
    /// the explicit dissipative step small.
    pub fn default_dt(&self, motion: Motion) -> f64 {
        let zeta2 = match motion {
            Motion::Quantum => self.zeta[2],
            Motion::Classical => 0.0,
        };
        let fast = self.coupling.iter().copied().fold(zeta2, f64::max);
        let gmax = self.gamma.iter().copied().fold(0.0, f64::max);
        let coherent = if fast > 0.0 { 0.1 * self.hbar / fast } else { f64::INFINITY };
        let dissipative = if gmax > 0.0 { 0.01 / gmax } else { f64::INFINITY };
        let dt = coherent.min(dissipative);
        if dt.is_finite() {
            dt
        } else {
            0.1 / self.freq.iter().copied().fold(1.0, f64::max)
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::paper_defaults()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleShape {
    Static,
    Straight,
    Trigonometric,
}

/// Time profile of one mode's coupling strength during classical motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    pub mode: Mode,
    pub shape: ScheduleShape,
    pub direction: Process,
    pub g_max: f64,
    pub t_total: f64,
}

impl CouplingSchedule {
    pub fn group(&self) -> ModeGroup {
        self.mode.group()
    }

    /// Dimensionless profile on `x = t/T ∈ [0, 1]`.
    pub fn factor(&self, x: f64) -> f64 {
        let falling = || match self.shape {
            ScheduleShape::Static => 1.0,
            ScheduleShape::Straight => 1.0 - x,
            ScheduleShape::Trigonometric => ((PI * x).cos() + 1.0) / 2.0,
        };
        let rising = || match self.shape {
            ScheduleShape::Static => 1.0,
            ScheduleShape::Straight => x,
            ScheduleShape::Trigonometric => ((PI * x - PI / 2.0).sin() + 1.0) / 2.0,
        };
        match (self.direction, self.group()) {
            (Process::Association, ModeGroup::Atomic) | (Process::Dissociation, ModeGroup::Molecular) => falling(),
            _ => rising(),
        }
    }

    /// Coupling at time `t`, with `t` clamped to `[0, T]`.
    pub fn value(&self, t: f64) -> f64 {
        if self.shape == ScheduleShape::Static {
            return self.g_max;
        }
        let x = if self.t_total > 0.0 { t / self.t_total } else { 1.0 };
        self.g_max * self.factor(x.clamp(0.0, 1.0))
    }
}

/// The full set of schedules for one classical run: every mode follows its
/// group's profile with `g_max` taken from `base`.
pub fn schedules_for(
    base: &ModelParams,
    process: Process,
    shape: ScheduleShape,
    t_total: f64,
) -> Vec<CouplingSchedule> {
    Mode::ALL
        .iter()
        .map(|&mode| CouplingSchedule {
            mode,
            shape,
            direction: process,
            g_max: base.coupling_of(mode),
            t_total,
        })
        .collect()
}

/// `base` with scheduled couplings evaluated at `t`. Times outside the
/// schedule window are clamped with a warning.
pub fn couplings_at(t: f64, schedules: &[CouplingSchedule], base: &ModelParams) -> ModelParams {
    let mut p = base.clone();
    for s in schedules {
        if s.shape != ScheduleShape::Static && !(0.0..=s.t_total).contains(&t) {
            warn!("t = {t:e} outside schedule window [0, {:e}]; clamping", s.t_total);
        }
        p.coupling[s.mode.index()] = s.value(t);
    }
    p
}

/// The Hamiltonian split into fixed operators; see the module docs.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    pub free: SparseOperator,
    /// Interaction at unit coupling per mode, [`Mode::ALL`] order.
    pub interaction: Vec<SparseOperator>,
    /// Tunnelling term at unit intensity for ζ₀, ζ₁, ζ₂ (zero operators in
    /// classical motion).
    pub tunnel: Vec<SparseOperator>,
}

impl HamiltonianParts {
    pub fn new(params: &ModelParams, idx: &BasisIndex, motion: Motion) -> Result<HamiltonianParts> {
        let b = Builder::new(idx, motion);
        let mut free = b.zero();
        let mut interaction = Vec::with_capacity(NUM_MODES);
        for m in Mode::ALL {
            let (energy, inter) = b.mode_terms(m, params)?;
            free = free.add(&energy)?;
            interaction.push(inter);
        }
        let tunnel = match motion {
            Motion::Quantum => b.tunnel_terms()?.to_vec(),
            Motion::Classical => vec![b.zero(), b.zero(), b.zero()],
        };
        Ok(HamiltonianParts {
            free,
            interaction,
            tunnel,
        })
    }

    pub fn assemble(&self, params: &ModelParams) -> Result<SparseOperator> {
        let mut h = self.free.clone();
        for (m, v) in self.interaction.iter().enumerate() {
            if params.coupling[m] != 0.0 {
                h = h.add(&v.scale_re(params.coupling[m]))?;
            }
        }
        for (j, t) in self.tunnel.iter().enumerate() {
            if params.zeta[j] != 0.0 {
                h = h.add(&t.scale_re(params.zeta[j]))?;
            }
        }
        Ok(h)
    }

    /// Restrict every part to a sub-basis of the one it was built on.
    pub fn restrict(&self, full: &BasisIndex, sub: &BasisIndex) -> Result<HamiltonianParts> {
        let r = |ops: &[SparseOperator]| ops.iter().map(|o| o.restrict(full, sub)).collect::<Result<Vec<_>>>();
        Ok(HamiltonianParts {
            free: self.free.restrict(full, sub)?,
            interaction: r(&self.interaction)?,
            tunnel: r(&self.tunnel)?,
        })
    }

    /// Every operator with a possibly nonzero weight, for reachability.
    pub fn generators(&self) -> Vec<&SparseOperator> {
        std::iter::once(&self.free)
            .chain(self.interaction.iter())
            .chain(self.tunnel.iter())
            .collect()
    }
}

struct Builder<'a> {
    idx: &'a BasisIndex,
    motion: Motion,
}

impl<'a> Builder<'a> {
    fn new(idx: &'a BasisIndex, motion: Motion) -> Self {
        Builder { idx, motion }
    }

    fn zero(&self) -> SparseOperator {
        SparseOperator::zero(self.idx.len(), self.idx.id())
    }

    /// Nuclear-sector gate; classical motion removes it.
    fn gate(&self, k: u8) -> SparseOperator {
        match self.motion {
            Motion::Quantum => nuclear_projector(k, self.idx),
            Motion::Classical => SparseOperator::identity(self.idx.len(), self.idx.id()),
        }
    }

    fn number(op: &SparseOperator) -> Result<SparseOperator> {
        op.adjoint().compose(op)
    }

    /// `a†σ + aσ†` for one lowering operator σ.
    fn exchange(a: &SparseOperator, sigma: &SparseOperator) -> Result<SparseOperator> {
        let t = a.adjoint().compose(sigma)?;
        t.add(&t.adjoint())
    }

    /// Lowering operators driven by mode `m`, and the sector they live in.
    fn lowering(&self, m: Mode) -> (Vec<SparseOperator>, u8) {
        let idx = self.idx;
        match m {
            Mode::MolecularUp => (vec![molecular_transition(Spin::Up, Transition::Lower, idx)], 0),
            Mode::MolecularDown => (vec![molecular_transition(Spin::Down, Transition::Lower, idx)], 0),
            Mode::AtomicUp | Mode::AtomicDown => {
                let spin = if m == Mode::AtomicUp { Spin::Up } else { Spin::Down };
                (
                    Atom::BOTH
                        .iter()
                        .map(|&a| atomic_transition(a, spin, Transition::Lower, idx))
                        .collect(),
                    1,
                )
            }
            Mode::Spin => (
                Atom::BOTH
                    .iter()
                    .map(|&a| spin_transition(a, Transition::Lower, idx))
                    .collect(),
                1,
            ),
        }
    }

    /// Bare energy and unit-coupling interaction of one mode, gated.
    fn mode_terms(&self, m: Mode, p: &ModelParams) -> Result<(SparseOperator, SparseOperator)> {
        let a = photon_op(m, Ladder::Annihilate, self.idx);
        let (sigmas, k) = self.lowering(m);
        let gate = self.gate(k);
        let e = p.hbar * p.freq_of(m);
        let photon_energy = Self::number(&a)?.scale_re(e);
        let mut electron_energy = self.zero();
        let mut inter = self.zero();
        for s in &sigmas {
            electron_energy = electron_energy.add(&Self::number(s)?.scale_re(e))?;
            inter = inter.add(&Self::exchange(&a, s)?)?;
        }
        let energy = match m {
            // The free spin-photon field stays on in both sectors.
            Mode::Spin => photon_energy.add(&electron_energy.compose(&gate)?)?,
            _ => photon_energy.add(&electron_energy)?.compose(&gate)?,
        };
        Ok((energy, inter.compose(&gate)?))
    }

    /// ζ₀, ζ₁, ζ₂ tunnelling terms at unit intensity.
    fn tunnel_terms(&self) -> Result<[SparseOperator; 3]> {
        let idx = self.idx;
        let su = molecular_transition(Spin::Up, Transition::Lower, idx);
        let sd = molecular_transition(Spin::Down, Transition::Lower, idx);
        // N: Φ₁ occupied and Φ₀ free; M: the reverse.
        let n_up = su.adjoint().compose(&su)?;
        let n_dn = sd.adjoint().compose(&sd)?;
        let m_up = su.compose(&su.adjoint())?;
        let m_dn = sd.compose(&sd.adjoint())?;
        let flip = nuclear_op(Transition::Lower, idx).add(&nuclear_op(Transition::Raise, idx))?;
        let term = |x: &SparseOperator, y: &SparseOperator| x.compose(y)?.compose(&flip);
        let z2 = term(&n_up, &n_dn)?;
        let z1 = term(&m_up, &n_dn)?.add(&term(&n_up, &m_dn)?)?;
        let z0 = term(&m_up, &m_dn)?;
        Ok([z0, z1, z2])
    }
}

/// The electronic lowering operators a mode drives (`σ_{ω}` for molecular
/// modes, `σ_{·,1}` and `σ_{·,2}` for atomic ones), ungated.
pub fn lowering_operators(mode: Mode, idx: &BasisIndex) -> Vec<SparseOperator> {
    Builder::new(idx, Motion::Quantum).lowering(mode).0
}

fn weighted(parts: &[(SparseOperator, f64)], idx: &BasisIndex) -> Result<SparseOperator> {
    parts
        .iter()
        .try_fold(SparseOperator::zero(idx.len(), idx.id()), |acc, (op, w)| acc.add(&op.scale_re(*w)))
}

/// Associative (molecular) Hamiltonian.
pub fn build_h_a(params: &ModelParams, idx: &BasisIndex) -> Result<SparseOperator> {
    build_modes(params, idx, &[Mode::MolecularUp, Mode::MolecularDown], true)
}

/// Dissociative (atomic) Hamiltonian.
pub fn build_h_d(params: &ModelParams, idx: &BasisIndex) -> Result<SparseOperator> {
    build_modes(params, idx, &[Mode::AtomicUp, Mode::AtomicDown], true)
}

/// Spin-flip Hamiltonian.
pub fn build_h_spin(params: &ModelParams, idx: &BasisIndex) -> Result<SparseOperator> {
    build_modes(params, idx, &[Mode::Spin], true)
}

fn build_modes(params: &ModelParams, idx: &BasisIndex, modes: &[Mode], quantum: bool) -> Result<SparseOperator> {
    let motion = if quantum { Motion::Quantum } else { Motion::Classical };
    let b = Builder::new(idx, motion);
    let mut parts = Vec::new();
    for &m in modes {
        let (energy, inter) = b.mode_terms(m, params)?;
        parts.push((energy, 1.0));
        parts.push((inter, params.coupling_of(m)));
    }
    weighted(&parts, idx)
}

/// Tunnelling Hamiltonian.
pub fn build_h_tun(params: &ModelParams, idx: &BasisIndex) -> Result<SparseOperator> {
    let [z0, z1, z2] = Builder::new(idx, Motion::Quantum).tunnel_terms()?;
    weighted(
        &[(z0, params.zeta[0]), (z1, params.zeta[1]), (z2, params.zeta[2])],
        idx,
    )
}

/// Total Hamiltonian at time `t` with scheduled couplings applied.
pub fn build_total(
    t: f64,
    params: &ModelParams,
    schedules: &[CouplingSchedule],
    idx: &BasisIndex,
    motion: Motion,
) -> Result<SparseOperator> {
    let p = couplings_at(t, schedules, params);
    HamiltonianParts::new(&p, idx, motion)?.assemble(&p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaReport {
    pub eta: f64,
    pub sc_ok: bool,
}

/// Largest g/(ħω) over modes with nonzero coupling and frequency.
pub fn eta_check(params: &ModelParams) -> EtaReport {
    let eta = Mode::ALL
        .iter()
        .filter(|m| params.coupling_of(**m) > 0.0 && params.freq_of(**m) > 0.0)
        .map(|&m| params.coupling_of(m) / (params.hbar * params.freq_of(m)))
        .fold(0.0, f64::max);
    let sc_ok = eta < SC_THRESHOLD;
    if !sc_ok {
        warn!("η = {eta} violates the strong-coupling condition η < {SC_THRESHOLD}; the rotating-wave approximation is not justified");
    }
    EtaReport { eta, sc_ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_basis, BasisState, ModeSpec, Orbital, Slot};
    use crate::linalg::{hermiticity_residual, C64};

    fn idx() -> BasisIndex {
        enumerate_basis(&ModeSpec::uniform(1, 2)).unwrap()
    }

    fn assert_hermitian(h: &SparseOperator) {
        let d = h.to_dense();
        assert!(hermiticity_residual(&d.view()) == 0.0);
    }

    fn zero_on_sector(h: &SparseOperator, idx: &BasisIndex, k: u8) {
        for (i, j, _) in h.entries() {
            assert!(idx.states()[i].nucleus != k && idx.states()[j].nucleus != k);
        }
    }

    #[test]
    fn builders_hermitian_and_gated() {
        let p = ModelParams::paper_defaults();
        let idx = idx();
        let ha = build_h_a(&p, &idx).unwrap();
        let hd = build_h_d(&p, &idx).unwrap();
        assert_hermitian(&ha);
        assert_hermitian(&hd);
        assert_hermitian(&build_h_tun(&p, &idx).unwrap());
        assert_hermitian(&build_h_spin(&p, &idx).unwrap());
        zero_on_sector(&ha, &idx, 1);
        zero_on_sector(&hd, &idx, 0);
    }

    #[test]
    fn spin_interaction_gated_free_field_not() {
        let p = ModelParams::paper_defaults();
        let idx = idx();
        let parts = HamiltonianParts::new(&p, &idx, Motion::Quantum).unwrap();
        zero_on_sector(&parts.interaction[Mode::Spin.index()], &idx, 0);
        let s = BasisState::new([0, 0, 0, 0, 1], &[Slot::bonding(Spin::Up), Slot::bonding(Spin::Down)], 0);
        let i = idx.index_of(&s).unwrap();
        let hs = build_h_spin(&p, &idx).unwrap();
        assert_eq!(hs.get(i, i), C64::new(1e9, 0.0));
    }

    #[test]
    fn uncoupled_h_a_is_diagonal() {
        let mut p = ModelParams::paper_defaults();
        p.coupling = [0.0; 5];
        let ha = build_h_a(&p, &idx()).unwrap();
        assert!(ha.entries().all(|(i, j, _)| i == j));
    }

    #[test]
    fn tunnel_elements() {
        let mut p = ModelParams::paper_defaults();
        let idx = idx();
        let both = BasisState::new([0; 5], &[Slot::antibonding(Spin::Up), Slot::antibonding(Spin::Down)], 1);
        let i = idx.index_of(&both).unwrap();
        let j = idx.index_of(&both.with_nucleus(0)).unwrap();
        let h = build_h_tun(&p, &idx).unwrap();
        assert_eq!(h.get(i, j), C64::new(1e9, 0.0));
        assert_eq!(h.get(j, i), C64::new(1e9, 0.0));
        // ζ₀ pattern: both Φ₀ occupied, contributes nothing by default
        let ground = BasisState::new([0; 5], &[Slot::bonding(Spin::Up), Slot::bonding(Spin::Down)], 1);
        let g = idx.index_of(&ground).unwrap();
        assert_eq!(h.row(g).count(), 0);
        // equal intensities: flip on every pattern confined to the Φ slots
        p.zeta = [3.0; 3];
        let h = build_h_tun(&p, &idx).unwrap();
        let phi = [
            Slot::antibonding(Spin::Up),
            Slot::antibonding(Spin::Down),
            Slot::bonding(Spin::Up),
            Slot::bonding(Spin::Down),
        ];
        for (r, s) in idx.states().iter().enumerate() {
            let in_phi = s.occupied_slots().all(|sl| phi.contains(&sl));
            let spin_paired = s.occupied(phi[0]) != s.occupied(phi[2]) && s.occupied(phi[1]) != s.occupied(phi[3]);
            let c = idx.index_of(&s.with_nucleus(1 - s.nucleus)).unwrap();
            let expect = if in_phi && spin_paired { 3.0 } else { 0.0 };
            assert_eq!(h.get(r, c).re, expect, "{s}");
        }
    }

    #[test]
    fn h_d_splitting_at_resonance() {
        // |1 photon Ω↓, electron at ground⟩ ↔ |0 photons, electron excited⟩
        let p = ModelParams::paper_defaults();
        let idx = idx();
        let hd = build_h_d(&p, &idx).unwrap();
        let spect = Slot::new(Atom::Second, Orbital::Ground, Spin::Up);
        let lo = BasisState::new([0, 0, 0, 1, 0], &[Slot::new(Atom::First, Orbital::Ground, Spin::Down), spect], 1);
        let hi = BasisState::new([0; 5], &[Slot::new(Atom::First, Orbital::Excited, Spin::Down), spect], 1);
        let (i, j) = (idx.index_of(&lo).unwrap(), idx.index_of(&hi).unwrap());
        let (a, b, c) = (hd.get(i, i).re, hd.get(j, j).re, hd.get(i, j).re);
        let split = ((a - b).powi(2) + 4.0 * c * c).sqrt();
        assert!((split - 2.0 * p.coupling_of(Mode::AtomicDown)).abs() < 1e-6);
    }

    #[test]
    fn schedule_endpoints() {
        let base = ModelParams::paper_defaults();
        let t = 2.0;
        let sched = schedules_for(&base, Process::Association, ScheduleShape::Straight, t);
        let p0 = couplings_at(0.0, &sched, &base);
        let p1 = couplings_at(t, &sched, &base);
        assert_eq!(p0.coupling_of(Mode::AtomicUp), 1e8);
        assert_eq!(p0.coupling_of(Mode::MolecularUp), 0.0);
        assert_eq!(p1.coupling_of(Mode::AtomicUp), 0.0);
        assert_eq!(p1.coupling_of(Mode::MolecularDown), 5e7);
        let trig = schedules_for(&base, Process::Association, ScheduleShape::Trigonometric, t);
        let mid = couplings_at(1.0, &trig, &base);
        assert!((mid.coupling_of(Mode::AtomicUp) - 5e7).abs() < 1e-6);
        assert!((mid.coupling_of(Mode::MolecularUp) - 2.5e7).abs() < 1e-6);
        let dis = schedules_for(&base, Process::Dissociation, ScheduleShape::Straight, t);
        assert_eq!(couplings_at(0.0, &dis, &base).coupling_of(Mode::Spin), 0.0);
        assert_eq!(couplings_at(5.0, &dis, &base).coupling_of(Mode::Spin), 1e7);
    }

    #[test]
    fn eta_regime() {
        let p = ModelParams::paper_defaults();
        assert_eq!(eta_check(&p), EtaReport { eta: 0.01, sc_ok: true });
        let mut q = p.clone();
        q.coupling = [0.0; 5];
        assert_eq!(eta_check(&q).eta, 0.0);
        q.coupling[2] = 0.2 * q.freq[2];
        assert!(!eta_check(&q).sc_ok);
    }

    #[test]
    fn default_step() {
        let p = ModelParams::paper_defaults();
        assert!((p.default_dt(Motion::Quantum) - 1e-10).abs() < 1e-25);
        assert!((p.default_dt(Motion::Classical) - 1e-9).abs() < 1e-24);
        let mut bad = p.clone();
        bad.mu[0] = 1.0;
        assert!(bad.validate().is_err());
    }
}
