//! Analytic and independently computed references.

use h2cavity::analysis::{dark_states, verify_singlet};
use h2cavity::basis::{enumerate_basis, Atom, BasisState, Mode, ModeSpec, Orbital, Slot, Spin};
use h2cavity::dynamics::{
    dissipative_step, evolve, gibbs_state, lindblad_rhs, mu_from_temperature, unitary_step, DensityMatrix,
    JumpChannel, System, TimeGrid,
};
use h2cavity::linalg::max_abs;
use h2cavity::model::{ModelParams, Motion};
use h2cavity::ops::{single_mode_ladder, Ladder};
use h2cavity::ptsim::PtsimConfig;
use h2cavity::runner;
use h2cavity::scenario::{HorizonSpec, Scenario};

/// One electron, one Ω↑ photon level, no dissipation: the excited
/// population follows cos²(g t/ħ).
#[test]
fn rabi_two_level() {
    let mut spec = ModeSpec::uniform(0, 1);
    spec.photon_max[Mode::AtomicUp.index()] = 1;
    let idx = enumerate_basis(&spec).unwrap();
    let mut params = ModelParams::paper_defaults();
    params.coupling = [0.0, 0.0, 1e8, 0.0, 0.0];
    params.zeta = [0.0; 3];
    params.gamma = [0.0; 5];
    params.mu = [0.0; 5];
    let g = params.coupling[2];
    let excited = BasisState::new([0; 5], &[Slot::new(Atom::First, Orbital::Excited, Spin::Up)], 1);
    let sys = System::new(idx, params.clone(), Vec::new(), Motion::Quantum).unwrap();
    let e = sys.idx.index_of(&excited).unwrap();
    let rho0 = DensityMatrix::pure_state(&sys.idx, &excited).unwrap();
    let dt = params.default_dt(Motion::Quantum);
    let period = std::f64::consts::PI / g;
    let h = sys.hamiltonian(0.0).unwrap();
    let steps = TimeGrid::covering(dt, period, 1).unwrap().steps();
    assert!(steps as f64 * dt >= period);
    let mut rho = rho0;
    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        rho = unitary_step(&rho, &h, dt, params.hbar, PtsimConfig::default()).unwrap();
        rho = dissipative_step(&rho, &sys.channels, dt, params.hbar).unwrap();
        let want = (g * k as f64 * dt).cos().powi(2);
        worst = worst.max((rho.matrix()[[e, e]].re - want).abs());
    }
    assert!(worst <= 1e-6, "Rabi error {worst:e}");
}

/// Single mode, decay plus influx at μ = exp(−ħω/KT): the truncated Gibbs
/// state is stationary, including at the hard cutoff.
#[test]
fn thermal_fixed_point() {
    for (n_max, t, omega) in [(1, 1.0, 1.0), (4, 0.7, 1.3), (8, 2.0, 0.5)] {
        let mu = mu_from_temperature(t, omega, 1.0, 1.0).unwrap();
        let a = single_mode_ladder(n_max, Ladder::Annihilate);
        let ch = JumpChannel::new(Mode::Spin, a.clone(), 0.3, mu).unwrap();
        let rho = gibbs_state(t, omega, n_max, 1.0, 1.0).unwrap();
        let rhs = lindblad_rhs(&[ch], &rho).unwrap();
        assert!(max_abs(&rhs.view()) <= 1e-12, "n_max {n_max}: {:e}", max_abs(&rhs.view()));
        let m = rho.matrix();
        for p in 0..n_max {
            assert!((m[[p + 1, p + 1]].re / m[[p, p]].re - mu).abs() <= 1e-12);
        }
    }
}

#[test]
fn dark_state_algebra() {
    let idx = enumerate_basis(&ModeSpec::uniform(1, 2)).unwrap();
    for d in dark_states() {
        let minus = d.vector(&idx, [0; 5], -1.0).unwrap();
        let plus = d.vector(&idx, [0; 5], 1.0).unwrap();
        let r_minus = verify_singlet(&minus, &idx, d.channel).unwrap();
        let r_plus = verify_singlet(&plus, &idx, d.channel).unwrap();
        assert!(r_minus <= 1e-14, "{}: {r_minus:e}", d.name);
        assert!(r_plus >= 0.5, "{}: {r_plus}", d.name);
    }
}

/// Final populations at dt, dt/2, dt/4 over a fixed horizon: successive
/// differences halve (Richardson slope ≈ 1 for the first-order splitting).
#[test]
fn dt_halving_is_first_order() {
    let mut sc = Scenario::builtin("assoc-quantum").unwrap();
    let t_end = 4000.0 * sc.dt();
    sc.t_end = HorizonSpec::Until(t_end);
    let mut finals = Vec::new();
    for k in 0..3 {
        let mut s = sc.clone();
        s.dt = Some(sc.dt() / f64::from(1 << k));
        s.stride = 4000 << k;
        let (p, r) = runner::simulate(&s).unwrap();
        assert!((r.trajectory.times.last().unwrap() - t_end).abs() < 1e-18);
        let pops = h2cavity::analysis::populations(&r.final_state.view(), &p.system.idx, s.classifier());
        let dark = r.trajectory.last("pop_dark").unwrap();
        finals.push([pops[0], pops[1], pops[2], pops[3], dark]);
    }
    let mut checked = 0;
    for c in 0..5 {
        let d1 = (finals[0][c] - finals[1][c]).abs();
        let d2 = (finals[1][c] - finals[2][c]).abs();
        if d1 < 1e-11 {
            continue; // rounding level, no step error to resolve
        }
        let slope = (d1 / d2).log2();
        assert!((slope - 1.0).abs() < 0.2, "column {c}: slope {slope}, d1 {d1:e}, d2 {d2:e}");
        eprintln!("column {c}: slope {slope:.3}");
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn dense_trace_and_hermiticity_hold_without_symmetrising() {
    let sc = Scenario::builtin("dissoc-quantum").unwrap();
    let p = runner::prepare(&sc).unwrap();
    let grid = TimeGrid::covering(p.opts.dt, 200.0 * p.opts.dt, 20).unwrap();
    let tr = evolve(&p.rho0, &p.system, &grid, &p.opts).unwrap();
    assert!(tr.worst_trace_error <= 1e-9);
    assert!(tr.worst_hermiticity <= 1e-12);
    assert!(tr.worst_min_eigenvalue >= -1e-8);
}
