//! Property tests for algebraic and structural invariants.

use h2cavity::basis::{enumerate_basis, BasisIndex, Mode, ModeSpec};
use h2cavity::dynamics::{dissipator, influx, lindblad_rhs, photon_channels, DensityMatrix};
use h2cavity::linalg::{dagger, hermiticity_residual, identity, max_abs_diff, trace, CMatrix, C64};
use h2cavity::model::{schedules_for, HamiltonianParts, ModelParams, Motion, Process, ScheduleShape};
use h2cavity::ops::{photon_op, Ladder, SparseOperator};
use h2cavity::ptsim::{expm_oracle, expm_ptsim, unitarity_residual, PtsimConfig};
use h2cavity::scenario::Scenario;
use ndarray::Array2;
use proptest::prelude::*;
use std::sync::OnceLock;

fn small_idx() -> &'static BasisIndex {
    static IDX: OnceLock<BasisIndex> = OnceLock::new();
    IDX.get_or_init(|| {
        enumerate_basis(&ModeSpec {
            photon_max: [1, 0, 1, 0, 1],
            electron_count: 2,
        })
        .unwrap()
    })
}

fn complex_matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| Array2::from_shape_vec((n, n), v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

/// Random density matrix `MM†/tr` on the small basis.
fn density(n: usize) -> impl Strategy<Value = CMatrix> {
    complex_matrix(n).prop_map(|m| {
        let r = m.dot(&dagger(&m.view()));
        let t = trace(&r.view());
        r / t
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lindblad_terms_are_traceless_and_hermitian(m in density(small_idx().len())) {
        let idx = small_idx();
        let mut params = ModelParams::paper_defaults();
        params.mu = [0.3, 0.0, 0.5, 0.1, 0.9];
        let rho = DensityMatrix::new(idx.id(), m).unwrap();
        let scale = 1e7;
        for ch in photon_channels(&params, idx).unwrap() {
            for term in [dissipator(&ch, &rho).unwrap(), influx(&ch, &rho).unwrap()] {
                prop_assert!(trace(&term.view()).norm() <= 1e-15 * scale);
                prop_assert!(hermiticity_residual(&term.view()) <= 1e-15 * scale);
            }
        }
        let all = lindblad_rhs(&photon_channels(&params, idx).unwrap(), &rho).unwrap();
        prop_assert!(trace(&all.view()).norm() <= 1e-14 * scale);
    }

    #[test]
    fn hamiltonian_is_hermitian(g in prop::array::uniform5(0.0f64..2e8), z in prop::array::uniform3(0.0f64..2e9), classical in any::<bool>()) {
        let idx = small_idx();
        let mut params = ModelParams::paper_defaults();
        params.coupling = g;
        params.zeta = z;
        let motion = if classical { Motion::Classical } else { Motion::Quantum };
        let h = HamiltonianParts::new(&params, idx, motion).unwrap().assemble(&params).unwrap();
        let hd = h.to_dense();
        prop_assert_eq!(hermiticity_residual(&hd.view()), 0.0);
        prop_assert_eq!(h.adjoint().to_dense(), hd);
    }

    #[test]
    fn sparse_algebra_matches_dense(a in complex_matrix(6), b in complex_matrix(6), x in complex_matrix(6)) {
        let sp = |m: &CMatrix| {
            let t: Vec<_> = m.indexed_iter().map(|((i, j), v)| (i, j, *v)).collect();
            SparseOperator::from_triplets(6, 0, t).unwrap()
        };
        let (sa, sb) = (sp(&a), sp(&b));
        prop_assert!(max_abs_diff(&sa.compose(&sb).unwrap().to_dense().view(), &a.dot(&b).view()) <= 1e-14);
        prop_assert!(max_abs_diff(&sa.adjoint().to_dense().view(), &dagger(&a.view()).view()) == 0.0);
        prop_assert!(max_abs_diff(&sa.sandwich(&x.view()).unwrap().view(), &a.dot(&x).dot(&dagger(&a.view())).view()) <= 1e-14);
        prop_assert!(max_abs_diff(&sa.mul_dense(&x.view()).unwrap().view(), &a.dot(&x).view()) <= 1e-14);
        prop_assert!(max_abs_diff(&sa.dense_mul(&x.view()).unwrap().view(), &x.dot(&a).view()) <= 1e-14);
    }

    #[test]
    fn ptsim_is_unitary_and_matches_oracle(m in complex_matrix(8), frac in 0.05f64..1.0) {
        let h = (&m + &dagger(&m.view())) * C64::from(0.5);
        let a = h.mapv(|z| z * C64::new(0.0, -1.0));
        let norm = h2cavity::linalg::one_norm(&a.view());
        let dt = frac / norm;
        let u = expm_ptsim(&a.view(), dt, PtsimConfig::default()).unwrap();
        prop_assert!(unitarity_residual(&u.view()) <= 1e-12);
        prop_assert!(max_abs_diff(&u.view(), &expm_oracle(&a.view(), dt).unwrap().view()) <= 1e-12);
        // group property
        let half = expm_ptsim(&a.view(), dt / 2.0, PtsimConfig::default()).unwrap();
        prop_assert!(max_abs_diff(&half.dot(&half).view(), &u.view()) <= 1e-12);
        // inverse
        let back = expm_ptsim(&a.view(), -dt, PtsimConfig::default()).unwrap();
        prop_assert!(max_abs_diff(&back.dot(&u).view(), &identity(8).view()) <= 1e-12);
    }

    #[test]
    fn schedules_stay_in_range(t in -0.2f64..1.2, assoc in any::<bool>(), trig in any::<bool>()) {
        let params = ModelParams::paper_defaults();
        let process = if assoc { Process::Association } else { Process::Dissociation };
        let shape = if trig { ScheduleShape::Trigonometric } else { ScheduleShape::Straight };
        for s in schedules_for(&params, process, shape, 1.0) {
            let v = s.value(t);
            prop_assert!((0.0..=s.g_max).contains(&v));
        }
    }

    #[test]
    fn ladder_commutator_below_cutoff(mode_i in 0usize..5) {
        let idx = small_idx();
        let mode = Mode::ALL[mode_i];
        let a = photon_op(mode, Ladder::Annihilate, idx);
        let ad = photon_op(mode, Ladder::Create, idx);
        let comm = a.compose(&ad).unwrap().sub(&ad.compose(&a).unwrap()).unwrap().to_dense();
        let n_max = idx.spec().photon_max[mode_i];
        for (i, s) in idx.states().iter().enumerate() {
            let p = s.photon(mode);
            let want = if n_max == 0 { 0.0 } else if p < n_max { 1.0 } else { -(n_max as f64) };
            prop_assert_eq!(comm[[i, i]], C64::from(want));
        }
    }

    #[test]
    fn basis_index_roundtrip(i in 0usize..1792) {
        let idx = full_idx();
        let s = idx.state_of(i).unwrap();
        prop_assert_eq!(idx.index_of(&s).unwrap(), i);
        prop_assert_eq!(s.electron_count(), 2);
    }

    #[test]
    fn config_roundtrip(dt in 1e-12f64..1e-9, mu in 0.0f64..0.99, n in 1u8..3, name in 0usize..4) {
        let mut sc = Scenario::builtin(h2cavity::scenario::BUILTINS[name]).unwrap();
        sc.dt = Some(dt);
        sc.params.mu[Mode::Spin.index()] = mu;
        sc.spec.photon_max[0] = n;
        let back = Scenario::from_config(&sc.to_config()).unwrap();
        prop_assert_eq!(back, sc);
    }
}

fn full_idx() -> &'static BasisIndex {
    static IDX: OnceLock<BasisIndex> = OnceLock::new();
    IDX.get_or_init(|| enumerate_basis(&ModeSpec::default()).unwrap())
}

#[test]
fn canonical_order_is_sorted() {
    // Photons slowest, then the big-endian slot byte, then k.
    let idx = full_idx();
    assert_eq!(idx.len(), 1792);
    for w in idx.states().windows(2) {
        assert!((w[0].photons, w[0].slots, w[0].nucleus) < (w[1].photons, w[1].slots, w[1].nucleus));
    }
}
