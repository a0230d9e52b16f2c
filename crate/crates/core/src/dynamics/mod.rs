//! Markovian master equation and the two-step integrator.
//!
//! One step of length `dt` is
//!
//! ```text
//! ρ̃ = U ρ U†,  U = exp(−iH dt/ħ)          (exact unitary part, via ptsim)
//! ρ' = ρ̃ + (dt/ħ) L(ρ̃)                      (explicit Euler on the dissipator)
//! ```
//!
//! [`evolve`] runs this on a dense ρ and is the reference path. The
//! [`sector`] engine runs the same step on the symmetry blocks of ρ and can
//! fast-forward static stretches by squaring the step map.

pub mod sector;
mod thermal;

pub use thermal::{gibbs_state, mu_from_temperature, temperature_from_mu};

use log::warn;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, Classifier, Diagnostics, StateClass};
use crate::basis::{BasisIndex, BasisState, Mode};
use crate::linalg::{dagger, CMatrix, C64};
use crate::model::{couplings_at, CouplingSchedule, HamiltonianParts, ModelParams, Motion, ScheduleShape};
use crate::ops::{photon_op, Ladder, SparseOperator};
use crate::ptsim::{expm_ptsim, PtsimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis_id: u64,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(basis_id: u64, matrix: CMatrix) -> Result<DensityMatrix> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Shape(format!("{}x{} density matrix", matrix.nrows(), matrix.ncols())));
        }
        Ok(DensityMatrix { basis_id, matrix })
    }

    /// `|s⟩⟨s|` for a basis configuration.
    pub fn pure_state(idx: &BasisIndex, s: &BasisState) -> Result<DensityMatrix> {
        let i = idx.index_of(s)?;
        let mut m = CMatrix::zeros((idx.len(), idx.len()));
        m[[i, i]] = C64::from(1.0);
        Ok(DensityMatrix {
            basis_id: idx.id(),
            matrix: m,
        })
    }

    /// `|ψ⟩⟨ψ|` for a state vector (not renormalized).
    pub fn from_vector(basis_id: u64, psi: &ndarray::Array1<C64>) -> DensityMatrix {
        let n = psi.len();
        DensityMatrix {
            basis_id,
            matrix: CMatrix::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj()),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, C64> {
        self.matrix.view()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn check_basis(&self, op: &SparseOperator) -> Result<()> {
        op.check_basis(self.basis_id)?;
        if op.dim() != self.dim() {
            return Err(Error::Shape(format!("operator {} vs state {}", op.dim(), self.dim())));
        }
        Ok(())
    }

    pub fn diagnostics(&self) -> Result<Diagnostics> {
        analysis::diagnostics(&self.view())
    }
}

/// One leakage channel with optional thermal influx.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub mode: Mode,
    /// Photon annihilation operator of the mode.
    pub op: SparseOperator,
    pub gamma: f64,
    /// Influx ratio, γ_in = μ·γ.
    pub mu: f64,
}

impl JumpChannel {
    pub fn new(mode: Mode, op: SparseOperator, gamma: f64, mu: f64) -> Result<JumpChannel> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("channel {mode}: gamma = {gamma}")));
        }
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::InvalidParameter(format!("channel {mode}: mu = {mu} not in [0, 1)")));
        }
        Ok(JumpChannel { mode, op, gamma, mu })
    }

    pub fn influx_rate(&self) -> f64 {
        self.mu * self.gamma
    }

    pub fn restrict(&self, full: &BasisIndex, sub: &BasisIndex) -> Result<JumpChannel> {
        Ok(JumpChannel {
            op: self.op.restrict(full, sub)?,
            ..self.clone()
        })
    }
}

/// One channel per photon mode with rates and ratios from `params`.
pub fn photon_channels(params: &ModelParams, idx: &BasisIndex) -> Result<Vec<JumpChannel>> {
    Mode::ALL
        .iter()
        .map(|&m| {
            JumpChannel::new(
                m,
                photon_op(m, Ladder::Annihilate, idx),
                params.gamma[m.index()],
                params.mu[m.index()],
            )
        })
        .collect()
}

/// `{ρ, K}` for sparse `K`.
fn anticommutator(rho: &ArrayView2<C64>, k: &SparseOperator) -> Result<CMatrix> {
    Ok(k.mul_dense(rho)? + k.dense_mul(rho)?)
}

fn lindblad_term(a: &SparseOperator, rate: f64, rho: &ArrayView2<C64>) -> Result<CMatrix> {
    let ada = a.adjoint().compose(a)?;
    let jump = a.sandwich(rho)?;
    let anti = anticommutator(rho, &ada)?;
    Ok((jump - anti * C64::from(0.5)) * C64::from(rate))
}

/// `γ(AρA† − ½{ρ, A†A})`.
pub fn dissipator(ch: &JumpChannel, rho: &DensityMatrix) -> Result<CMatrix> {
    rho.check_basis(&ch.op)?;
    lindblad_term(&ch.op, ch.gamma, &rho.view())
}

/// `μγ(A†ρA − ½{ρ, AA†})`.
pub fn influx(ch: &JumpChannel, rho: &DensityMatrix) -> Result<CMatrix> {
    rho.check_basis(&ch.op)?;
    if ch.influx_rate() == 0.0 {
        return Ok(CMatrix::zeros((rho.dim(), rho.dim())));
    }
    lindblad_term(&ch.op.adjoint(), ch.influx_rate(), &rho.view())
}

/// Sum of every dissipator and influx term.
pub fn lindblad_rhs(channels: &[JumpChannel], rho: &DensityMatrix) -> Result<CMatrix> {
    let mut out = CMatrix::zeros((rho.dim(), rho.dim()));
    for ch in channels {
        if ch.gamma > 0.0 {
            out += &dissipator(ch, rho)?;
        }
        if ch.influx_rate() > 0.0 {
            out += &influx(ch, rho)?;
        }
    }
    Ok(out)
}

/// `exp(−iH dt/ħ)` for a dense Hermitian `H`.
pub fn propagator(h: &ArrayView2<C64>, dt: f64, hbar: f64, cfg: PtsimConfig) -> Result<CMatrix> {
    let a = h.mapv(|z| z * C64::new(0.0, -1.0 / hbar));
    expm_ptsim(&a.view(), dt, cfg)
}

fn conjugate(u: &CMatrix, rho: &ArrayView2<C64>) -> CMatrix {
    u.dot(rho).dot(&dagger(&u.view()))
}

/// `ρ̃ = UρU†` with `U = exp(−iH dt/ħ)`.
pub fn unitary_step(
    rho: &DensityMatrix,
    h: &SparseOperator,
    dt: f64,
    hbar: f64,
    cfg: PtsimConfig,
) -> Result<DensityMatrix> {
    rho.check_basis(h)?;
    let u = propagator(&h.to_dense().view(), dt, hbar, cfg)?;
    Ok(DensityMatrix {
        basis_id: rho.basis_id,
        matrix: conjugate(&u, &rho.view()),
    })
}

/// `ρ = ρ̃ + (dt/ħ)·L(ρ̃)`.
pub fn dissipative_step(
    rho: &DensityMatrix,
    channels: &[JumpChannel],
    dt: f64,
    hbar: f64,
) -> Result<DensityMatrix> {
    let l = lindblad_rhs(channels, rho)?;
    Ok(DensityMatrix {
        basis_id: rho.basis_id,
        matrix: &rho.matrix + &(l * C64::from(dt / hbar)),
    })
}

/// Everything that generates the dynamics on one (possibly pruned) basis.
#[derive(Debug, Clone)]
pub struct System {
    pub idx: BasisIndex,
    pub parts: HamiltonianParts,
    pub params: ModelParams,
    pub schedules: Vec<CouplingSchedule>,
    pub channels: Vec<JumpChannel>,
    pub motion: Motion,
}

impl System {
    pub fn new(
        idx: BasisIndex,
        params: ModelParams,
        schedules: Vec<CouplingSchedule>,
        motion: Motion,
    ) -> Result<System> {
        params.validate()?;
        let parts = HamiltonianParts::new(&params, &idx, motion)?;
        let channels = photon_channels(&params, &idx)?;
        Ok(System {
            idx,
            parts,
            params,
            schedules,
            channels,
            motion,
        })
    }

    /// Parameters with couplings at time `t`. Past the ramp the couplings
    /// are held at their final values.
    pub fn params_at(&self, t: f64) -> ModelParams {
        let end = self.ramp_end();
        let t = if end > 0.0 && t > end { end } else { t };
        couplings_at(t, &self.schedules, &self.params)
    }

    pub fn hamiltonian(&self, t: f64) -> Result<SparseOperator> {
        self.parts.assemble(&self.params_at(t))
    }

    /// Time after which the Hamiltonian no longer changes.
    pub fn ramp_end(&self) -> f64 {
        self.schedules
            .iter()
            .filter(|s| s.shape != ScheduleShape::Static)
            .map(|s| s.t_total)
            .fold(0.0, f64::max)
    }

    /// Part weights that can be nonzero at some time, in the order free,
    /// interactions, tunnelling.
    fn part_active(&self) -> Vec<bool> {
        let mut g_any = self.params.coupling;
        for s in &self.schedules {
            g_any[s.mode.index()] = s.g_max;
        }
        std::iter::once(true)
            .chain(g_any.iter().map(|g| *g != 0.0))
            .chain(self.params.zeta.iter().map(|z| *z != 0.0 && self.motion == Motion::Quantum))
            .collect()
    }

    /// Part weights at time `t`, matching [`System::part_active`] order.
    fn part_weights(&self, t: f64) -> Vec<f64> {
        let p = self.params_at(t);
        std::iter::once(1.0)
            .chain(p.coupling.iter().copied())
            .chain(p.zeta.iter().map(|z| if self.motion == Motion::Quantum { *z } else { 0.0 }))
            .collect()
    }

    fn part_ops(&self) -> Vec<&SparseOperator> {
        self.parts.generators()
    }

    /// Operators whose sparsity can move population: the active Hamiltonian
    /// parts, `A` for leaking channels and `A†` for pumped ones.
    pub fn generators(&self) -> Vec<SparseOperator> {
        let active = self.part_active();
        let mut out: Vec<SparseOperator> = self
            .part_ops()
            .into_iter()
            .zip(active)
            .filter(|(_, a)| *a)
            .map(|(o, _)| o.clone())
            .collect();
        for ch in &self.channels {
            if ch.gamma > 0.0 {
                out.push(ch.op.clone());
            }
            if ch.influx_rate() > 0.0 {
                out.push(ch.op.adjoint());
            }
        }
        out
    }

    /// The same system restricted to the subspace reachable from `seeds`.
    pub fn pruned(&self, seeds: &[BasisState]) -> Result<System> {
        let gens = self.generators();
        let refs: Vec<&SparseOperator> = gens.iter().collect();
        let sub = crate::basis::reachable_subspace(&self.idx, &refs, seeds)?;
        Ok(System {
            parts: self.parts.restrict(&self.idx, &sub)?,
            channels: self
                .channels
                .iter()
                .map(|c| c.restrict(&self.idx, &sub))
                .collect::<Result<_>>()?,
            idx: sub,
            params: self.params.clone(),
            schedules: self.schedules.clone(),
            motion: self.motion,
        })
    }

    /// Re-express a state given on a larger basis on this system's basis.
    /// Weight outside the subspace is an error.
    pub fn embed(&self, from: &BasisIndex, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let map: Vec<usize> = self
            .idx
            .states()
            .iter()
            .map(|s| from.index_of(s))
            .collect::<Result<_>>()?;
        let n = self.idx.len();
        let m = CMatrix::from_shape_fn((n, n), |(i, j)| rho.matrix[[map[i], map[j]]]);
        let kept: f64 = (0..n).map(|i| m[[i, i]].re).sum();
        let total: f64 = (0..rho.dim()).map(|i| rho.matrix[[i, i]].re).sum();
        if (kept - total).abs() > 1e-14 {
            return Err(Error::InvalidParameter("initial state leaves the reachable subspace".into()));
        }
        DensityMatrix::new(self.idx.id(), m)
    }
}

/// Quantities recorded along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    Population(StateClass),
    DarkPopulation,
    Trace,
    Hermiticity,
    MinEigenvalue,
    Purity,
}

impl Observable {
    pub fn column(&self) -> &'static str {
        match self {
            Observable::Population(c) => c.column(),
            Observable::DarkPopulation => "pop_dark",
            Observable::Trace => "trace",
            Observable::Hermiticity => "herm_residual",
            Observable::MinEigenvalue => "min_eig",
            Observable::Purity => "purity",
        }
    }

    /// The standard column set.
    pub fn standard() -> Vec<Observable> {
        let mut v: Vec<Observable> = StateClass::ALL.iter().map(|c| Observable::Population(*c)).collect();
        v.extend([
            Observable::DarkPopulation,
            Observable::Trace,
            Observable::Hermiticity,
            Observable::MinEigenvalue,
        ]);
        v
    }

    pub fn from_column(name: &str) -> Option<Observable> {
        let mut all = Observable::standard();
        all.push(Observable::Purity);
        all.into_iter().find(|o| o.column() == name)
    }
}

/// Evaluate observables on a dense ρ with precomputed diagnostics.
pub fn evaluate(
    obs: &[Observable],
    rho: &ArrayView2<C64>,
    idx: &BasisIndex,
    classifier: Classifier,
    diag: &Diagnostics,
) -> Vec<f64> {
    obs.iter()
        .map(|o| match o {
            Observable::Population(c) => analysis::population(rho, idx, *c, classifier),
            Observable::DarkPopulation => analysis::dark_population(rho, idx, classifier),
            Observable::Trace => diag.trace,
            Observable::Hermiticity => diag.hermiticity,
            Observable::MinEigenvalue => diag.min_eigenvalue,
            Observable::Purity => diag.purity,
        })
        .collect()
}

/// Per-record invariant thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub trace: f64,
    pub hermiticity: f64,
    /// Most negative eigenvalue tolerated before a warning.
    pub min_eigenvalue: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            trace: 1e-9,
            hermiticity: 1e-12,
            min_eigenvalue: -1e-8,
        }
    }
}

impl Tolerances {
    /// Hard failures abort; negative eigenvalues only count.
    pub fn check(&self, t: f64, d: &Diagnostics) -> Result<bool> {
        if !(d.trace.is_finite() && d.hermiticity.is_finite() && d.min_eigenvalue.is_finite()) {
            return Err(Error::InvariantBreach {
                time: t,
                message: "non-finite density matrix".into(),
            });
        }
        if (d.trace - 1.0).abs() > self.trace || d.trace_imag.abs() > self.trace {
            return Err(Error::InvariantBreach {
                time: t,
                message: format!("trace drifted to {} + {}i", d.trace, d.trace_imag),
            });
        }
        if d.hermiticity > self.hermiticity {
            return Err(Error::InvariantBreach {
                time: t,
                message: format!("hermiticity residual {:e}", d.hermiticity),
            });
        }
        let ok = d.min_eigenvalue >= self.min_eigenvalue;
        if !ok {
            warn!("t = {t:e}: min eigenvalue {:e} below {:e}; consider a smaller dt", d.min_eigenvalue, self.min_eigenvalue);
        }
        Ok(ok)
    }
}

/// Uniform recording grid `t_k = k·stride·dt`, `k = 0..=records`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub stride: u64,
    pub records: usize,
}

impl TimeGrid {
    /// Grid reaching at least `t_end` with `stride` steps per record.
    pub fn covering(dt: f64, t_end: f64, stride: u64) -> Result<TimeGrid> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= 0.0) || stride == 0 {
            return Err(Error::InvalidParameter(format!("bad horizon t_end={t_end}, stride={stride}")));
        }
        let steps = (t_end / dt - 1e-9).ceil().max(0.0) as u64;
        Ok(TimeGrid {
            dt,
            stride,
            records: steps.div_ceil(stride) as usize,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as u64 * self.stride) as f64 * self.dt
    }

    pub fn steps(&self) -> u64 {
        self.records as u64 * self.stride
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Trajectory {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Records whose smallest eigenvalue fell below tolerance.
    pub positivity_warnings: usize,
    pub worst_min_eigenvalue: f64,
    pub worst_trace_error: f64,
    pub worst_hermiticity: f64,
    /// Whether an automatic horizon found a plateau; `None` for fixed grids.
    pub plateau: Option<bool>,
    pub notes: Vec<String>,
}

impl Trajectory {
    pub fn new(obs: &[Observable]) -> Trajectory {
        Trajectory {
            columns: obs.iter().map(|o| o.column().to_string()).collect(),
            worst_min_eigenvalue: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn push(&mut self, t: f64, values: Vec<f64>, d: &Diagnostics, positive: bool) {
        if let Some(&last) = self.times.last() {
            debug_assert!(t > last, "time grid must increase");
        }
        self.times.push(t);
        self.rows.push(values);
        self.positivity_warnings += (!positive) as usize;
        self.worst_min_eigenvalue = self.worst_min_eigenvalue.min(d.min_eigenvalue);
        self.worst_trace_error = self.worst_trace_error.max((d.trace - 1.0).abs());
        self.worst_hermiticity = self.worst_hermiticity.max(d.hermiticity);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name)?.last().copied()
    }

    /// First recorded time at which `name` reaches `level`, linearly
    /// interpolated between records.
    pub fn crossing_time(&self, name: &str, level: f64) -> Option<f64> {
        let y = self.column(name)?;
        for k in 0..y.len() {
            if y[k] >= level {
                if k == 0 {
                    return Some(self.times[0]);
                }
                let (t0, t1, y0, y1) = (self.times[k - 1], self.times[k], y[k - 1], y[k]);
                return Some(t0 + (level - y0) / (y1 - y0) * (t1 - t0));
            }
        }
        None
    }

    /// Value of column `name` at time `t` by linear interpolation.
    pub fn sample(&self, name: &str, t: f64) -> Option<f64> {
        let y = self.column(name)?;
        let k = self.times.partition_point(|&x| x < t);
        if k == 0 {
            return y.first().copied();
        }
        if k >= y.len() {
            return y.last().copied();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        Some(y[k - 1] + (t - t0) / (t1 - t0) * (y[k] - y[k - 1]))
    }
}

/// Options shared by the engines.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    pub ptsim: PtsimConfig,
    pub observables: Vec<Observable>,
    pub classifier: Classifier,
    pub tolerances: Tolerances,
}

/// Dense reference integration over `grid`. Caches `U` while the
/// Hamiltonian is static; otherwise samples it at each step midpoint.
pub fn evolve(rho0: &DensityMatrix, system: &System, grid: &TimeGrid, opts: &EvolveOptions) -> Result<Trajectory> {
    if rho0.basis_id != system.idx.id() {
        return Err(Error::BasisMismatch {
            expected: system.idx.id(),
            found: rho0.basis_id,
        });
    }
    let hbar = system.params.hbar;
    let dt = grid.dt;
    let ramp_end = system.ramp_end();
    let mut traj = Trajectory::new(&opts.observables);
    let mut rho = rho0.clone();
    let record = |traj: &mut Trajectory, t: f64, rho: &DensityMatrix| -> Result<()> {
        let d = rho.diagnostics()?;
        let positive = opts.tolerances.check(t, &d)?;
        let vals = evaluate(&opts.observables, &rho.view(), &system.idx, opts.classifier, &d);
        traj.push(t, vals, &d, positive);
        Ok(())
    };
    record(&mut traj, 0.0, &rho)?;
    let mut cached: Option<CMatrix> = None;
    let mut step = 0u64;
    for k in 1..=grid.records {
        for _ in 0..grid.stride {
            let t_mid = (step as f64 + 0.5) * dt;
            let u = if (step as f64) * dt >= ramp_end {
                if cached.is_none() {
                    let h = system.hamiltonian(t_mid)?;
                    cached = Some(propagator(&h.to_dense().view(), dt, hbar, opts.ptsim)?);
                }
                cached.clone().unwrap()
            } else {
                propagator(&system.hamiltonian(t_mid)?.to_dense().view(), dt, hbar, opts.ptsim)?
            };
            let tilde = DensityMatrix {
                basis_id: rho.basis_id,
                matrix: conjugate(&u, &rho.view()),
            };
            rho = dissipative_step(&tilde, &system.channels, dt, hbar)?;
            step += 1;
        }
        record(&mut traj, grid.time(k), &rho)?;
    }
    Ok(traj)
}
