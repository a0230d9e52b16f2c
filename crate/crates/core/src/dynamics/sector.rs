//! Block-sparse integrator.
//!
//! The Hamiltonian conserves a set of photon/electron charges and every jump
//! operator shifts them by a fixed amount, so a density matrix that starts
//! block-diagonal in those sectors stays block-diagonal. The blocks are found
//! structurally: union-find over the Hamiltonian's nonzeros, then merging
//! until every jump operator maps each block into a single block.
//!
//! Two ways of advancing the blocks:
//!
//! * direct stepping, the same unitary + Euler step as the dense path, with
//!   `U` recomputed per step only while couplings change;
//! * fast-forward for static stretches: the step is linear in the real
//!   parameters of the Hermitian blocks, so it is a real `M×M` matrix `Φ`
//!   (`M = Σ n_b²`) built by stepping each parameter basis element once.
//!   `Φ^k` is then formed by repeated squaring. This is still the paper's
//!   integrator at step `dt`, only composed in closed form.

use std::cell::RefCell;
use std::collections::BTreeMap;

use log::{debug, info};
use ndarray::{s, Array1, Array2, ArrayView1};

use crate::analysis::{populations, Classifier, Diagnostics, StateClass};
use crate::linalg::{dagger, hermitian_eigenvalues, hermiticity_residual, CMatrix, C64, ZERO};
use crate::{Error, Result};

use super::{evaluate, propagator, DensityMatrix, EvolveOptions, System, TimeGrid, Trajectory};

/// Partition of the working basis into dynamically closed blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    local: Vec<usize>,
}

impl Layout {
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Number of real parameters of a block-diagonal Hermitian matrix.
    pub fn real_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.len() * b.len()).sum()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        self.0[hi] = lo;
        true
    }
}

/// Block structure of `system`.
pub fn sector_layout(system: &System) -> Layout {
    let n = system.idx.len();
    let mut uf = UnionFind((0..n).collect());
    let active = system.part_active();
    for (op, on) in system.part_ops().into_iter().zip(active) {
        if on {
            for (i, j, _) in op.entries() {
                uf.union(i, j);
            }
        }
    }
    let mut jumps = Vec::new();
    for ch in &system.channels {
        if ch.gamma > 0.0 {
            jumps.push(ch.op.clone());
        }
        if ch.influx_rate() > 0.0 {
            jumps.push(ch.op.adjoint());
        }
    }
    // Merge the images of each block until every jump is block-to-block.
    loop {
        let mut changed = false;
        for a in &jumps {
            let mut image: BTreeMap<usize, usize> = BTreeMap::new();
            for (i, j, _) in a.entries() {
                let src = uf.find(j);
                let dst = uf.find(i);
                match image.get(&src) {
                    Some(&d) => changed |= uf.union(d, dst),
                    None => {
                        image.insert(src, dst);
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of = vec![0; n];
    let mut local = vec![0; n];
    for i in 0..n {
        let r = uf.find(i);
        let b = *roots.entry(r).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        block_of[i] = b;
        local[i] = blocks[b].len();
        blocks[b].push(i);
    }
    Layout {
        blocks,
        block_of,
        local,
    }
}

type Triplets = Vec<(usize, usize, C64)>;

struct BlockJump {
    target: usize,
    rate: f64,
    /// (row in target, col in source, amplitude)
    map: Triplets,
}

/// Horizon for [`evolve_sectors`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Fixed(TimeGrid),
    /// Extend the static tail by doubling until the populations settle.
    Auto(AutoHorizon),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoHorizon {
    /// Records in the final tail window; rounded up to a power of two.
    pub records: usize,
    /// Records spent on a scheduled ramp, if any.
    pub ramp_records: usize,
    /// Shortest tail window that may be declared a plateau.
    pub t_min: f64,
    /// Give up extending beyond this tail length.
    pub t_cap: f64,
    /// Largest population change allowed over the last half and last tenth
    /// of the window.
    pub tol: f64,
}

impl Default for AutoHorizon {
    fn default() -> Self {
        AutoHorizon {
            records: 1024,
            ramp_records: 1024,
            t_min: 1e-5,
            t_cap: 64.0,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Direct,
    FastForward,
    /// Fast-forward static stretches longer than a few thousand steps.
    #[default]
    Auto,
}

/// Outcome of a sector run.
#[derive(Debug, Clone)]
pub struct SectorRun {
    pub trajectory: Trajectory,
    pub final_state: DensityMatrix,
    pub block_sizes: Vec<usize>,
}

type BlockState = Vec<CMatrix>;

pub struct SectorEngine<'a> {
    system: &'a System,
    layout: Layout,
    /// Dense blocks of each Hamiltonian part; `None` where inactive or zero.
    part_blocks: Vec<Vec<Option<CMatrix>>>,
    jumps: Vec<Vec<BlockJump>>,
    damping: Vec<Triplets>,
    offsets: Vec<usize>,
    class_diag: Vec<Vec<usize>>,
    dt: f64,
    opts: EvolveOptions,
    sink: RefCell<Option<RowSink<'a>>>,
}

/// Called with every recorded row before invariants are checked, so a run
/// that aborts still leaves its rows behind.
pub type RowSink<'a> = Box<dyn FnMut(f64, &[f64]) + 'a>;

impl<'a> SectorEngine<'a> {
    pub fn new(system: &'a System, opts: &EvolveOptions) -> Result<SectorEngine<'a>> {
        if !(opts.dt.is_finite() && opts.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", opts.dt)));
        }
        let layout = sector_layout(system);
        let nb = layout.blocks.len();
        let sub = |op: &crate::ops::SparseOperator, b: usize| -> Option<CMatrix> {
            let idx = &layout.blocks[b];
            let mut m = CMatrix::zeros((idx.len(), idx.len()));
            let mut any = false;
            for (li, &gi) in idx.iter().enumerate() {
                for (gj, v) in op.row(gi) {
                    if layout.block_of[gj] == b {
                        m[[li, layout.local[gj]]] = v;
                        any = true;
                    }
                }
            }
            any.then_some(m)
        };
        let active = system.part_active();
        let part_blocks = system
            .part_ops()
            .into_iter()
            .zip(active)
            .map(|(op, on)| (0..nb).map(|b| if on { sub(op, b) } else { None }).collect())
            .collect();

        let mut jumps: Vec<Vec<BlockJump>> = (0..nb).map(|_| Vec::new()).collect();
        let mut damping: Vec<Triplets> = vec![Vec::new(); nb];
        for ch in &system.channels {
            for (op, rate) in [(ch.op.clone(), ch.gamma), (ch.op.adjoint(), ch.influx_rate())] {
                if rate == 0.0 {
                    continue;
                }
                let mut per: BTreeMap<usize, BlockJump> = BTreeMap::new();
                for (i, j, v) in op.entries() {
                    let (src, dst) = (layout.block_of[j], layout.block_of[i]);
                    let e = per.entry(src).or_insert(BlockJump {
                        target: dst,
                        rate,
                        map: Vec::new(),
                    });
                    debug_assert_eq!(e.target, dst);
                    e.map.push((layout.local[i], layout.local[j], v));
                }
                for (src, bj) in per {
                    jumps[src].push(bj);
                }
                let k = op.adjoint().compose(&op)?;
                for (i, j, v) in k.entries() {
                    let b = layout.block_of[i];
                    debug_assert_eq!(b, layout.block_of[j]);
                    damping[b].push((layout.local[i], layout.local[j], v * (rate / 2.0)));
                }
            }
        }
        let mut offsets = Vec::with_capacity(nb + 1);
        offsets.push(0);
        for b in &layout.blocks {
            offsets.push(offsets.last().unwrap() + b.len() * b.len());
        }
        let mut class_diag = vec![Vec::new(); StateClass::ALL.len()];
        for (b, idx) in layout.blocks.iter().enumerate() {
            let n = idx.len();
            for (li, &gi) in idx.iter().enumerate() {
                let c = crate::analysis::classify_with(&system.idx.states()[gi], opts.classifier);
                let k = StateClass::ALL.iter().position(|x| *x == c).unwrap();
                class_diag[k].push(offsets[b] + li * n + li);
            }
        }
        debug!(
            "sector layout: {} states in {} blocks, real dimension {}",
            system.idx.len(),
            nb,
            offsets[nb]
        );
        Ok(SectorEngine {
            system,
            layout,
            part_blocks,
            jumps,
            damping,
            offsets,
            class_diag,
            dt: opts.dt,
            opts: opts.clone(),
            sink: RefCell::new(None),
        })
    }

    pub fn with_sink(self, sink: RowSink<'a>) -> Self {
        *self.sink.borrow_mut() = Some(sink);
        self
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn real_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn hbar(&self) -> f64 {
        self.system.params.hbar
    }

    /// Per-block propagators for the step starting at `t`.
    fn propagators(&self, t: f64) -> Result<Vec<CMatrix>> {
        let w = self.system.part_weights(t + 0.5 * self.dt);
        (0..self.layout.blocks.len())
            .map(|b| {
                let n = self.layout.blocks[b].len();
                let mut h = CMatrix::zeros((n, n));
                for (p, blocks) in self.part_blocks.iter().enumerate() {
                    if let (Some(m), true) = (&blocks[b], w[p] != 0.0) {
                        h.scaled_add(C64::from(w[p]), m);
                    }
                }
                propagator(&h.view(), self.dt, self.hbar(), self.opts.ptsim)
            })
            .collect()
    }

    fn zero_state(&self) -> BlockState {
        self.layout
            .blocks
            .iter()
            .map(|b| CMatrix::zeros((b.len(), b.len())))
            .collect()
    }

    /// Add one full step of block `b`'s contents to `out`.
    fn step_block(&self, b: usize, rho: &CMatrix, u: &CMatrix, out: &mut BlockState) {
        let rt = u.dot(rho).dot(&dagger(&u.view()));
        let f = self.dt / self.hbar();
        {
            let o = &mut out[b];
            *o += &rt;
            for &(k, j, v) in &self.damping[b] {
                // −f(G ρ̃ + ρ̃ G)
                let (row, col) = (rt.row(j).to_owned(), rt.column(k).to_owned());
                o.row_mut(k).scaled_add(-f * v, &row);
                o.column_mut(j).scaled_add(-f * v, &col);
            }
        }
        for jump in &self.jumps[b] {
            let o = &mut out[jump.target];
            let g = f * jump.rate;
            for &(r1, c1, v1) in &jump.map {
                for &(r2, c2, v2) in &jump.map {
                    o[[r1, r2]] += v1 * rt[[c1, c2]] * v2.conj() * g;
                }
            }
        }
    }

    fn step(&self, state: &BlockState, us: &[CMatrix]) -> BlockState {
        let mut out = self.zero_state();
        for (b, rho) in state.iter().enumerate() {
            self.step_block(b, rho, &us[b], &mut out);
        }
        out
    }

    pub fn split(&self, rho: &DensityMatrix) -> Result<BlockState> {
        if rho.basis_id() != self.system.idx.id() {
            return Err(Error::BasisMismatch {
                expected: self.system.idx.id(),
                found: rho.basis_id(),
            });
        }
        let m = rho.matrix();
        let mut out = self.zero_state();
        for ((i, j), z) in m.indexed_iter() {
            if *z == ZERO {
                continue;
            }
            let (bi, bj) = (self.layout.block_of[i], self.layout.block_of[j]);
            if bi != bj {
                return Err(Error::InvalidParameter(
                    "initial state has coherences between dynamically disconnected sectors".into(),
                ));
            }
            out[bi][[self.layout.local[i], self.layout.local[j]]] = *z;
        }
        Ok(out)
    }

    pub fn assemble(&self, state: &BlockState) -> DensityMatrix {
        let n = self.system.idx.len();
        let mut m = CMatrix::zeros((n, n));
        for (b, idx) in self.layout.blocks.iter().enumerate() {
            for (li, &gi) in idx.iter().enumerate() {
                for (lj, &gj) in idx.iter().enumerate() {
                    m[[gi, gj]] = state[b][[li, lj]];
                }
            }
        }
        DensityMatrix::new(self.system.idx.id(), m).expect("square")
    }

    /// Real coordinates: per block, entry `(i, j)` holds `ρ_ii` on the
    /// diagonal, `Re ρ_ij` for `i < j` and `Im ρ_ji` for `i > j`.
    pub fn to_real(&self, state: &BlockState) -> Array1<f64> {
        let mut x = Array1::zeros(self.real_dim());
        for (b, m) in state.iter().enumerate() {
            let n = m.nrows();
            let o = self.offsets[b];
            for i in 0..n {
                for j in 0..n {
                    x[o + i * n + j] = match i.cmp(&j) {
                        std::cmp::Ordering::Equal => m[[i, i]].re,
                        std::cmp::Ordering::Less => 0.5 * (m[[i, j]].re + m[[j, i]].re),
                        std::cmp::Ordering::Greater => 0.5 * (m[[j, i]].im - m[[i, j]].im),
                    };
                }
            }
        }
        x
    }

    pub fn from_real(&self, x: &ArrayView1<f64>) -> BlockState {
        self.layout
            .blocks
            .iter()
            .enumerate()
            .map(|(b, idx)| {
                let n = idx.len();
                let o = self.offsets[b];
                CMatrix::from_shape_fn((n, n), |(i, j)| match i.cmp(&j) {
                    std::cmp::Ordering::Equal => C64::new(x[o + i * n + i], 0.0),
                    std::cmp::Ordering::Less => C64::new(x[o + i * n + j], x[o + j * n + i]),
                    std::cmp::Ordering::Greater => C64::new(x[o + j * n + i], -x[o + i * n + j]),
                })
            })
            .collect()
    }

    /// The one-step map on real coordinates for a static Hamiltonian.
    pub fn step_map(&self, us: &[CMatrix]) -> Array2<f64> {
        let m = self.real_dim();
        let mut phi = Array2::<f64>::zeros((m, m));
        let mut scratch = self.zero_state();
        for (b, idx) in self.layout.blocks.iter().enumerate() {
            let n = idx.len();
            for i in 0..n {
                for j in 0..n {
                    let mut e = CMatrix::zeros((n, n));
                    match i.cmp(&j) {
                        std::cmp::Ordering::Equal => e[[i, i]] = C64::from(1.0),
                        std::cmp::Ordering::Less => {
                            e[[i, j]] = C64::from(1.0);
                            e[[j, i]] = C64::from(1.0);
                        }
                        std::cmp::Ordering::Greater => {
                            // Im part of (j, i): ρ_ji = i, ρ_ij = −i
                            e[[j, i]] = C64::i();
                            e[[i, j]] = -C64::i();
                        }
                    }
                    for blk in scratch.iter_mut() {
                        blk.fill(ZERO);
                    }
                    self.step_block(b, &e, &us[b], &mut scratch);
                    phi.column_mut(self.offsets[b] + i * n + j).assign(&self.to_real(&scratch));
                }
            }
        }
        phi
    }

    /// Real-vector positions of every diagonal element.
    fn trace_positions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.class_diag.concat();
        v.sort_unstable();
        v
    }

    fn class_populations(&self, x: &ArrayView1<f64>) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (k, pos) in self.class_diag.iter().enumerate() {
            out[k] = pos.iter().map(|&p| x[p]).sum();
        }
        out
    }

    fn diagnostics(&self, state: &BlockState) -> Result<Diagnostics> {
        let mut d = Diagnostics {
            trace: 0.0,
            trace_imag: 0.0,
            hermiticity: 0.0,
            min_eigenvalue: f64::INFINITY,
            purity: 0.0,
        };
        for m in state {
            let tr: C64 = m.diag().sum();
            d.trace += tr.re;
            d.trace_imag += tr.im;
            d.hermiticity = d.hermiticity.max(hermiticity_residual(&m.view()));
            let w = hermitian_eigenvalues(&m.view())?;
            d.min_eigenvalue = w.iter().copied().fold(d.min_eigenvalue, f64::min);
            d.purity += m.indexed_iter().map(|((i, j), z)| (z * m[[j, i]]).re).sum::<f64>();
        }
        Ok(d)
    }

    fn record(&self, traj: &mut Trajectory, t: f64, state: &BlockState) -> Result<()> {
        let d = self.diagnostics(state)?;
        let rho = self.assemble(state);
        let vals = evaluate(&self.opts.observables, &rho.view(), &self.system.idx, self.opts.classifier, &d);
        if let Some(sink) = self.sink.borrow_mut().as_mut() {
            sink(t, &vals);
        }
        let positive = self.opts.tolerances.check(t, &d)?;
        traj.push(t, vals, &d, positive);
        Ok(())
    }

    /// Run from `rho0` over `horizon`.
    pub fn run(&self, rho0: &DensityMatrix, horizon: Horizon, strategy: Strategy) -> Result<SectorRun> {
        let mut traj = Trajectory::new(&self.opts.observables);
        let mut state = self.split(rho0)?;
        self.record(&mut traj, 0.0, &state)?;

        let ramp_steps = steps_for(self.system.ramp_end(), self.dt);
        let (total_steps, stride) = match horizon {
            Horizon::Fixed(g) => (Some(g.steps()), g.stride),
            Horizon::Auto(a) => (None, (ramp_steps / a.ramp_records.max(1) as u64).max(1)),
        };

        // Scheduled ramp: direct stepping with U per step.
        let mut step = 0u64;
        let ramp_stop = total_steps.map_or(ramp_steps, |n| n.min(ramp_steps));
        while step < ramp_stop {
            let us = self.propagators(step as f64 * self.dt)?;
            state = self.step(&state, &us);
            step += 1;
            if step % stride == 0 || (total_steps.is_none() && step == ramp_stop) {
                self.record(&mut traj, step as f64 * self.dt, &state)?;
            }
        }
        if ramp_steps > 0 {
            info!("ramp finished after {step} steps");
        }

        // Static tail.
        let us = self.propagators(step as f64 * self.dt)?;
        match horizon {
            Horizon::Fixed(g) => {
                let remaining = g.steps() - step;
                let ff = match strategy {
                    Strategy::Direct => false,
                    Strategy::FastForward => remaining > 0,
                    Strategy::Auto => remaining > 4096,
                };
                if ff {
                    state = self.fixed_fast_forward(&mut traj, state, step, g, &us)?;
                } else {
                    while step < g.steps() {
                        state = self.step(&state, &us);
                        step += 1;
                        if step % g.stride == 0 {
                            self.record(&mut traj, step as f64 * self.dt, &state)?;
                        }
                    }
                }
            }
            Horizon::Auto(a) => {
                state = self.auto_tail(&mut traj, state, step, a, &us)?;
            }
        }
        Ok(SectorRun {
            trajectory: traj,
            final_state: self.assemble(&state),
            block_sizes: self.layout.sizes(),
        })
    }

    fn fixed_fast_forward(
        &self,
        traj: &mut Trajectory,
        state: BlockState,
        start: u64,
        g: TimeGrid,
        us: &[CMatrix],
    ) -> Result<BlockState> {
        let diag = self.trace_positions();
        let mut phi = self.step_map(us);
        pin_trace(&mut phi, &diag);
        let mut x = self.to_real(&state);
        let first = start.div_ceil(g.stride) * g.stride;
        if first > start {
            x = apply_power(&phi, first - start, x, &diag);
            if first <= g.steps() {
                self.record(traj, first as f64 * self.dt, &self.from_real(&x.view()))?;
            }
        } else if start > 0 && traj.times.last() != Some(&(start as f64 * self.dt)) {
            self.record(traj, start as f64 * self.dt, &state)?;
        }
        let p = matrix_power(&phi, g.stride, &diag);
        let mut step = first;
        while step + g.stride <= g.steps() {
            x = p.dot(&x);
            step += g.stride;
            self.record(traj, step as f64 * self.dt, &self.from_real(&x.view()))?;
        }
        Ok(self.from_real(&x.view()))
    }

    fn auto_tail(
        &self,
        traj: &mut Trajectory,
        state: BlockState,
        start: u64,
        a: AutoHorizon,
        us: &[CMatrix],
    ) -> Result<BlockState> {
        let r = a.records.max(2).next_power_of_two();
        let t0 = start as f64 * self.dt;
        let diag = self.trace_positions();
        let mut phi = self.step_map(us);
        pin_trace(&mut phi, &diag);
        info!("step map built: {0}x{0}", phi.nrows());
        let m = phi.nrows();
        // Grid of r+1 states spaced `spacing` steps apart.
        let mut grid = Array2::<f64>::zeros((m, r + 1));
        grid.column_mut(0).assign(&self.to_real(&state));
        for k in 1..=r {
            let next = phi.dot(&grid.column(k - 1));
            grid.column_mut(k).assign(&next);
        }
        // `power` = Φ^(r·spacing)
        let mut power = phi;
        for _ in 0..r.trailing_zeros() {
            power = power.dot(&power);
            pin_trace(&mut power, &diag);
        }
        let mut spacing: u64 = 1;
        let converged = loop {
            let window = (r as u64 * spacing) as f64 * self.dt;
            let pops: Vec<[f64; 4]> = (0..=r).map(|k| self.class_populations(&grid.column(k))).collect();
            let settled = window >= a.t_min && plateau_reached(&pops, a.tol);
            debug!("tail window {window:e}: H2 {:.6}, plateau {settled}", pops[r][0]);
            if settled {
                break true;
            }
            if window * 2.0 > a.t_cap {
                break false;
            }
            // Coarsen: keep even columns, extend with Φ^(r·spacing)·(even columns).
            let evens: Array2<f64> = grid.slice(s![.., 2..;2]).to_owned();
            let ext = power.dot(&evens);
            let mut next = Array2::<f64>::zeros((m, r + 1));
            next.slice_mut(s![.., ..=r / 2]).assign(&grid.slice(s![.., ..;2]));
            next.slice_mut(s![.., r / 2 + 1..]).assign(&ext);
            grid = next;
            spacing *= 2;
            power = power.dot(&power);
            pin_trace(&mut power, &diag);
        };
        let window = (r as u64 * spacing) as f64 * self.dt;
        traj.plateau = Some(converged);
        traj.notes.push(if converged {
            format!("plateau reached; tail window {window:e} after t = {t0:e}")
        } else {
            format!("no plateau within the tail cap {:e}; stopped at window {window:e}", a.t_cap)
        });
        for k in 0..=r {
            if k == 0 && !traj.times.is_empty() && traj.times.last() == Some(&t0) {
                continue;
            }
            let t = t0 + (k as u64 * spacing) as f64 * self.dt;
            self.record(traj, t, &self.from_real(&grid.column(k)))?;
        }
        Ok(self.from_real(&grid.column(r)))
    }
}

fn steps_for(t: f64, dt: f64) -> u64 {
    if t <= 0.0 {
        0
    } else {
        (t / dt - 1e-9).ceil() as u64
    }
}

/// Plateau test on populations sampled uniformly over a window: the named
/// populations must move by less than `tol` over the last half, and the
/// leading one by less than `tol` over the last tenth. The half-window
/// difference must also be shrinking relative to the previous quarter, which
/// rejects slow steady creep.
pub fn plateau_reached(pops: &[[f64; 4]], tol: f64) -> bool {
    let r = pops.len() - 1;
    if r < 4 {
        return false;
    }
    let last = pops[r];
    let lead = (0..3).max_by(|&a, &b| last[a].total_cmp(&last[b])).unwrap();
    let tenth = pops[(r * 9).div_ceil(10)];
    if (last[lead] - tenth[lead]).abs() >= tol {
        return false;
    }
    (0..3).all(|c| {
        let d2 = (last[c] - pops[r / 2][c]).abs();
        let d1 = (pops[r / 2][c] - pops[r / 4][c]).abs();
        d2 < tol && (d2 <= 0.5 * d1 || d2 < 0.1 * tol)
    })
}

/// Restore `cᵀP = cᵀ` for the trace functional `c` (ones at `diag`).
///
/// The step map preserves the trace exactly, but a rounding error in `cᵀΦ`
/// doubles with every squaring, so `Φ^(2^k)` drifts by about `2^k·ε`. The
/// rank-one correction spreads the defect evenly over the diagonal rows; it
/// is of rounding size and leaves the dynamics otherwise untouched.
pub fn pin_trace(p: &mut Array2<f64>, diag: &[usize]) {
    if diag.is_empty() {
        return;
    }
    let mut defect = Array1::<f64>::zeros(p.ncols());
    for &d in diag {
        defect += &p.row(d);
        defect[d] -= 1.0;
    }
    defect /= diag.len() as f64;
    for &d in diag {
        p.row_mut(d).zip_mut_with(&defect, |x, e| *x -= e);
    }
}

/// `Φ^n` by binary exponentiation, pinning the trace after every product
/// when `diag` is non-empty.
pub fn matrix_power(phi: &Array2<f64>, mut n: u64, diag: &[usize]) -> Array2<f64> {
    let m = phi.nrows();
    let mut result: Option<Array2<f64>> = None;
    let mut base = phi.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => {
                    let mut r = r.dot(&base);
                    pin_trace(&mut r, diag);
                    r
                }
            });
        }
        n >>= 1;
        if n > 0 {
            base = base.dot(&base);
            pin_trace(&mut base, diag);
        }
    }
    result.unwrap_or_else(|| Array2::eye(m))
}

/// `Φ^n x` without forming `Φ^n` when `n` is small.
pub fn apply_power(phi: &Array2<f64>, n: u64, mut x: Array1<f64>, diag: &[usize]) -> Array1<f64> {
    if n <= 64 {
        for _ in 0..n {
            x = phi.dot(&x);
        }
        return x;
    }
    let mut base = phi.clone();
    let mut n = n;
    while n > 0 {
        if n & 1 == 1 {
            x = base.dot(&x);
        }
        n >>= 1;
        if n > 0 {
            base = base.dot(&base);
            pin_trace(&mut base, diag);
        }
    }
    x
}

/// Convenience wrapper: build the engine and run.
pub fn evolve_sectors(
    system: &System,
    rho0: &DensityMatrix,
    horizon: Horizon,
    strategy: Strategy,
    opts: &EvolveOptions,
) -> Result<SectorRun> {
    SectorEngine::new(system, opts)?.run(rho0, horizon, strategy)
}

/// Photon-marginalized populations of a dense state, for callers that hold
/// one from a sector run.
pub fn final_populations(run: &SectorRun, system: &System, classifier: Classifier) -> [f64; 4] {
    populations(&run.final_state.view(), &system.idx, classifier)
}
