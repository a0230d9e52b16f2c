//! Matrix exponential by precise time-step integration.
//!
//! `exp(AΔt) = (exp(Aε))^{2^N}` with `ε = Δt/2^N`. The seed is the 4-term
//! Taylor increment `T₀ = Aε + (Aε)²/2 + (Aε)³/6 + (Aε)⁴/24` and the squaring
//! is carried on the increment alone, `T ← 2T + T·T`, so the identity never
//! swamps the tiny correction. Only at the end is `I + T` formed.

use log::debug;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::linalg::{all_finite, dagger, hermiticity_residual, identity, max_abs, one_norm, CMatrix, C64};
use crate::{Error, Result};

pub const MAX_DEPTH: u32 = 62;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PtsimConfig {
    /// Doubling depth N.
    pub depth: u32,
}

impl PtsimConfig {
    pub fn new(depth: u32) -> Result<PtsimConfig> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "PTSIM depth {depth} exceeds {MAX_DEPTH}"
            )));
        }
        Ok(PtsimConfig { depth })
    }
}

impl Default for PtsimConfig {
    fn default() -> Self {
        PtsimConfig { depth: 20 }
    }
}

/// Depth actually used for `A` and `dt`: the configured one, raised until
/// `‖A‖₁·|dt|/2^N ≤ 1`.
pub fn effective_depth(a: &ArrayView2<C64>, dt: f64, cfg: PtsimConfig) -> u32 {
    let scaled = one_norm(a) * dt.abs();
    let mut n = cfg.depth;
    while n < MAX_DEPTH && scaled / 2f64.powi(n as i32) > 1.0 {
        n += 1;
    }
    if n != cfg.depth {
        debug!("ptsim depth raised from {} to {n} (‖A‖Δt = {scaled:e})", cfg.depth);
    }
    n
}

/// `exp(A·dt)`.
pub fn expm_ptsim(a: &ArrayView2<C64>, dt: f64, cfg: PtsimConfig) -> Result<CMatrix> {
    Ok(identity(a.nrows()) + ptsim_increment(a, dt, cfg)?)
}

/// `exp(A·dt) − I`, accumulated without ever adding the identity.
pub fn ptsim_increment(a: &ArrayView2<C64>, dt: f64, cfg: PtsimConfig) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("{}x{} is not square", n, a.ncols())));
    }
    if !all_finite(a) || !dt.is_finite() {
        return Err(Error::NonFinite("ptsim input"));
    }
    let depth = effective_depth(a, dt, cfg);
    let eps = dt / 2f64.powi(depth as i32);
    let b = a.mapv(|z| z * eps);

    // Horner: B(I + B(I/2 + B(I/6 + B/24)))
    let id = identity(n);
    let mut t = &b / C64::from(24.0) + &id / C64::from(6.0);
    t = b.dot(&t) + &id / C64::from(2.0);
    t = b.dot(&t) + &id;
    t = b.dot(&t);

    for _ in 0..depth {
        let sq = t.dot(&t);
        t = t * C64::from(2.0) + sq;
    }
    if !all_finite(&t.view()) {
        return Err(Error::NonFinite("ptsim result"));
    }
    Ok(t)
}

/// Reference exponential for tests and diagnostics.
///
/// Hermitian and skew-Hermitian inputs go through an eigendecomposition
/// (error ≈ n·ε_mach·max|λ|Δt). Anything else uses scaling and squaring of a
/// Taylor series summed until terms drop below 1e-18 relative.
pub fn expm_oracle(a: &ArrayView2<C64>, dt: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("{}x{} is not square", n, a.ncols())));
    }
    if n == 0 {
        return Ok(CMatrix::zeros((0, 0)));
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    if hermiticity_residual(a) <= 1e-14 * scale {
        let (w, v) = crate::linalg::hermitian_eigh(a)?;
        return Ok(spectral(&w.mapv(|x| C64::from((x * dt).exp())), &v));
    }
    let ia = a.mapv(|z| z * C64::i());
    if hermiticity_residual(&ia.view()) <= 1e-14 * scale {
        // A = -iK with K = iA Hermitian; exp(A dt) = V e^{-i w dt} V†
        let (w, v) = crate::linalg::hermitian_eigh(&ia.view())?;
        return Ok(spectral(&w.mapv(|x| C64::new(0.0, -x * dt).exp()), &v));
    }
    Ok(taylor_oracle(a, dt))
}

fn spectral(d: &ndarray::Array1<C64>, v: &CMatrix) -> CMatrix {
    let mut vd = v.clone();
    for (mut col, &x) in vd.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|z| z * x);
    }
    vd.dot(&dagger(&v.view()))
}

fn taylor_oracle(a: &ArrayView2<C64>, dt: f64) -> CMatrix {
    let n = a.nrows();
    let norm = one_norm(a) * dt.abs();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a.mapv(|z| z * (dt / 2f64.powi(s)));
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..200 {
        term = term.dot(&b) / C64::from(k as f64);
        sum += &term;
        if max_abs(&term.view()) < 1e-18 * max_abs(&sum.view()) {
            break;
        }
    }
    for _ in 0..s {
        sum = sum.dot(&sum);
    }
    sum
}

/// `max |U†U − I|`.
pub fn unitarity_residual(u: &ArrayView2<C64>) -> f64 {
    let g = dagger(u).dot(u) - identity(u.nrows());
    max_abs(&g.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let m = Array2::from_shape_fn((n, n), |_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let h = (&m + &dagger(&m.view())) * C64::from(0.5);
        h.mapv(|z| z * C64::i())
    }

    #[test]
    fn zero_gives_identity() {
        let a = CMatrix::zeros((5, 5));
        assert_eq!(expm_ptsim(&a.view(), 1.0, PtsimConfig::default()).unwrap(), identity(5));
    }

    #[test]
    fn diagonal_matches_scalar_exp() {
        let d = [0.3, -1.2, 0.0, 2.5];
        let a = Array2::from_diag(&ndarray::arr1(&d).mapv(C64::from));
        let e = expm_ptsim(&a.view(), 0.7, PtsimConfig::default()).unwrap();
        for (i, x) in d.iter().enumerate() {
            let want = (x * 0.7f64).exp();
            assert!((e[[i, i]].re - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn skew_hermitian_vs_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_skew(8, &mut rng);
        let dt = 1.0 / one_norm(&a.view());
        let p = expm_ptsim(&a.view(), dt, PtsimConfig::default()).unwrap();
        let o = expm_oracle(&a.view(), dt).unwrap();
        assert!(max_abs_diff(&p.view(), &o.view()) <= 1e-10);
        assert!(unitarity_residual(&p.view()) <= 1e-10);
        // the Taylor path of the oracle agrees with its spectral path
        let t = taylor_oracle(&a.view(), dt);
        assert!(max_abs_diff(&t.view(), &o.view()) <= 1e-12);
    }

    #[test]
    fn guard_raises_depth() {
        let a = Array2::from_diag_elem(2, C64::new(0.0, 1e9));
        assert_eq!(effective_depth(&a.view(), 1.0, PtsimConfig { depth: 4 }), 30);
        // with the raised depth the seed argument is at most 1, so the
        // result stays finite and non-expanding
        let e = expm_ptsim(&a.view(), 1e-3, PtsimConfig { depth: 0 }).unwrap();
        assert!(e.iter().all(|z| z.norm().is_finite() && z.norm() <= 1.0 + 1e-12));
        assert!(PtsimConfig::new(63).is_err());
    }

    #[test]
    fn unitarity_residual_cases() {
        assert_eq!(unitarity_residual(&identity(3).view()), 0.0);
        let two = identity(3) * C64::from(2.0);
        assert_eq!(unitarity_residual(&two.view()), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = CMatrix::zeros((2, 3));
        assert!(matches!(expm_ptsim(&a.view(), 1.0, PtsimConfig::default()), Err(Error::Shape(_))));
        let mut b = CMatrix::zeros((2, 2));
        b[[0, 1]] = C64::new(f64::NAN, 0.0);
        assert!(matches!(expm_ptsim(&b.view(), 1.0, PtsimConfig::default()), Err(Error::NonFinite(_))));
    }
}
