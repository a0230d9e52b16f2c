//! Truncated Gibbs states and the influx-ratio/temperature relation
//! `μ = exp(−ħω/KT)`.

use crate::linalg::{CMatrix, C64};
use crate::{Error, Result};

use super::DensityMatrix;

/// Diagonal single-mode Gibbs state over levels `0..=n_max`, tagged with
/// basis id 0. `temperature = 0` gives the vacuum.
pub fn gibbs_state(temperature: f64, omega: f64, n_max: usize, hbar: f64, boltzmann: f64) -> Result<DensityMatrix> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::InvalidParameter(format!("temperature {temperature}")));
    }
    let mu = mu_from_temperature(temperature, omega, boltzmann, hbar)?;
    let weights: Vec<f64> = (0..=n_max).scan(1.0, |w, _| {
        let cur = *w;
        *w *= mu;
        Some(cur)
    }).collect();
    let z: f64 = weights.iter().sum();
    let mut m = CMatrix::zeros((n_max + 1, n_max + 1));
    for (p, w) in weights.iter().enumerate() {
        m[[p, p]] = C64::from(w / z);
    }
    DensityMatrix::new(0, m)
}

/// `exp(−ħω/KT)`; zero at `T = 0`.
pub fn mu_from_temperature(temperature: f64, omega: f64, boltzmann: f64, hbar: f64) -> Result<f64> {
    if !(temperature >= 0.0 && boltzmann > 0.0 && omega > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need T ≥ 0, K > 0, ω > 0, ħ > 0 (got T={temperature}, K={boltzmann}, ω={omega}, ħ={hbar})"
        )));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok((-hbar * omega / (boltzmann * temperature)).exp())
}

/// `ħω/(K ln(1/μ))`; zero at `μ = 0`, rejects `μ ≥ 1`.
pub fn temperature_from_mu(mu: f64, omega: f64, boltzmann: f64, hbar: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!(
            "influx ratio mu = {mu} has no finite temperature; need 0 ≤ mu < 1"
        )));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    Ok(hbar * omega / (boltzmann * (1.0 / mu).ln()))
}
