//! Gaussian mollification `m = f * G_ħ` of Wigner functions, computed as the
//! Fourier multiplier `e^{-ħ^{2α}|ζ|²/2}`. With `α = 1/2` this is the Husimi
//! function of the state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{apply_multiplier, Domain, GridFunction, KPhaseGrid};
use crate::wigner::ratio_to_f64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    /// Width exponent: the Gaussian has variance `ħ^{2α}` per axis.
    pub alpha: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        MollifierSpec { alpha: 0.5 }
    }
}

impl MollifierSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::arg(format!(
                "mollifier exponent must be positive, got {alpha}"
            )));
        }
        Ok(MollifierSpec { alpha })
    }

    pub fn variance(&self, hbar: f64) -> f64 {
        hbar.powf(2.0 * self.alpha)
    }
}

/// `f * G` on any phase grid; mass is preserved exactly.
pub fn mollify<G: Domain>(
    f: &GridFunction<G, f64>,
    hbar: f64,
    spec: MollifierSpec,
) -> Result<GridFunction<G, f64>> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(Error::arg("ħ must be positive"));
    }
    let var = spec.variance(hbar);
    Ok(apply_multiplier(f, |zeta| {
        let z2: f64 = zeta.iter().map(|z| z * z).sum();
        (-0.5 * var * z2).exp()
    }))
}

/// `N(N-1)⋯(N-k+1)/N^k`.
pub fn husimi_k_prefactor(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    let num = ((n - k + 1)..=n).fold(num_bigint::BigUint::from(1u32), |a, m| {
        a * num_bigint::BigUint::from(m)
    });
    let den = num_bigint::BigUint::from(n).pow(k as u32);
    Ok(ratio_to_f64(&num, &den))
}

/// `m^{(k)}_N`: the prefactor times the k-fold tensor mollification of
/// `f^{(k)}_N`, so `(2π)^{-dk}∫m^{(k)} = N⋯(N-k+1)/N^k`.
pub fn husimi_k(
    fk: &GridFunction<KPhaseGrid, f64>,
    n_particles: usize,
    hbar: f64,
    spec: MollifierSpec,
) -> Result<GridFunction<KPhaseGrid, f64>> {
    let c = husimi_k_prefactor(n_particles, fk.grid().k())?;
    Ok(mollify(fk, hbar, spec)?.map(|v| v * c))
}
