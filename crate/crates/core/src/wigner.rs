//! Wigner transforms `W^ħ[γ](x,p) = ∫ γ(x - y/2, x + y/2) e^{-ip·y/ħ} dy`,
//! the harmonic Laguerre closed form, Weyl operators and the order-2
//! transform.
//!
//! The kernel along the anti-diagonal is read off orbitals that are
//! spectrally refined until `x ± y/2` falls on grid points, and the `y`
//! integral is evaluated on the requested momentum grid with a chirp-z
//! transform, so no interpolation error enters.

use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityKernel, KParticleDensity};
use crate::error::{Error, Result};
use crate::grids::fft::{refine_periodic, ChirpZ};
use crate::grids::{
    fourier_shift, Domain, GridFunction, KPhaseGrid, PhaseSpaceFunction, PhaseSpaceGrid,
    SpatialGrid,
};

const MAX_REFINEMENT: usize = 64;
const TAIL_CUTOFF: f64 = 1e-17;

/// Parameters of `O_{ξ,η} = exp(iξ·x̂ + iη·p̂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylPoint {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl WeylPoint {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        if xi.len() != eta.len() || xi.is_empty() {
            return Err(Error::arg("ξ and η must have the same positive dimension"));
        }
        if xi.iter().chain(&eta).any(|v| !v.is_finite()) {
            return Err(Error::arg("Weyl point components must be finite"));
        }
        Ok(WeylPoint { xi, eta })
    }

    pub fn origin(d: usize) -> Self {
        WeylPoint {
            xi: vec![0.0; d],
            eta: vec![0.0; d],
        }
    }
}

/// Refined anti-diagonal sampler shared by all pairs of one transform.
struct Engine {
    refined: Vec<Vec<Complex64>>,
    delta: f64,
    lo: usize,
    hi: usize,
    /// refined index of each phase-space x point
    centers: Vec<usize>,
    chirp: ChirpZ,
    s_max: usize,
    /// `e^{2iL_p sδ/ħ}` for `s = -s_max..=s_max`
    base: Vec<Complex64>,
    theta: f64,
}

impl Engine {
    fn new(
        grid: &SpatialGrid,
        vectors: &[&[Complex64]],
        pgrid: &PhaseSpaceGrid,
        hbar: f64,
    ) -> Result<Self> {
        if grid.d() != 1 || pgrid.d() != 1 {
            return Err(Error::UnsupportedDimension {
                op: "wigner_transform",
                d: grid.d().max(pgrid.d()),
            });
        }
        if !grid.contains_grid(pgrid.spatial()) {
            return Err(Error::InvalidGrid(
                "phase-space x points must be points of the orbital grid".into(),
            ));
        }
        let h = grid.spacing();
        let l_p = pgrid.momentum().half_width();
        // the y-transform has period πħ/δ in p; it must cover [-L_p, L_p)
        let need = 2.0 * l_p * h / (std::f64::consts::PI * hbar);
        let q = (need.ceil().max(1.0) as usize).next_power_of_two();
        if q > MAX_REFINEMENT {
            return Err(Error::Resolution(format!(
                "momentum box {l_p} needs {q}-fold refinement of the orbital grid at ħ = {hbar}"
            )));
        }
        let delta = h / q as f64;
        let refined: Vec<Vec<Complex64>> =
            vectors.par_iter().map(|v| refine_periodic(v, q)).collect();
        let m = grid.n() * q;
        let mut envelope = vec![0.0f64; m];
        for v in &refined {
            envelope
                .iter_mut()
                .zip(v)
                .for_each(|(e, a)| *e = e.max(a.norm()));
        }
        let peak = envelope.iter().copied().fold(0.0, f64::max);
        let lo = envelope
            .iter()
            .position(|&e| e > TAIL_CUTOFF * peak)
            .unwrap_or(0);
        let hi = envelope
            .iter()
            .rposition(|&e| e > TAIL_CUTOFF * peak)
            .unwrap_or(0);
        let centers: Vec<usize> = (0..pgrid.spatial().n())
            .map(|j| ((pgrid.spatial().point(j) + grid.half_width()) / delta).round() as usize)
            .collect();
        let s_max = centers
            .iter()
            .map(|&c| {
                if c < lo || c > hi {
                    0
                } else {
                    (c - lo).min(hi - c)
                }
            })
            .max()
            .unwrap_or(0);
        let theta = 2.0 * pgrid.momentum().spacing() * delta / hbar;
        let chirp = ChirpZ::new(2 * s_max + 1, pgrid.momentum().n(), theta);
        let base = (0..=2 * s_max)
            .map(|k| {
                let s = k as f64 - s_max as f64;
                Complex64::from_polar(1.0, 2.0 * l_p * s * delta / hbar)
            })
            .collect();
        Ok(Engine {
            refined,
            delta,
            lo,
            hi,
            centers,
            chirp,
            s_max,
            base,
            theta,
        })
    }

    /// One x-row of `Σ w W[|a⟩⟨b|]` over the momentum grid.
    fn row(
        &self,
        j: usize,
        pairs: &[(usize, usize, f64)],
        work: &mut Vec<Complex64>,
        out: &mut [Complex64],
    ) {
        let c = self.centers[j];
        if c < self.lo || c > self.hi {
            out.iter_mut().for_each(|v| *v = Complex64::default());
            return;
        }
        let s_row = (c - self.lo).min(self.hi - c);
        let mut a = vec![Complex64::default(); 2 * s_row + 1];
        for &(ia, ib, w) in pairs {
            let fa = &self.refined[ia];
            let fb = &self.refined[ib];
            for (k, slot) in a.iter_mut().enumerate() {
                let s = k as isize - s_row as isize;
                let left = (c as isize - s) as usize;
                let right = (c as isize + s) as usize;
                *slot += fa[left] * fb[right].conj() * w;
            }
        }
        let offset = self.s_max - s_row;
        for (k, v) in a.iter_mut().enumerate() {
            *v *= self.base[k + offset];
        }
        self.chirp.apply(&a, work, out);
        let two_delta = 2.0 * self.delta;
        for (m, v) in out.iter_mut().enumerate() {
            let angle = (self.theta * m as f64 * s_row as f64).rem_euclid(std::f64::consts::TAU);
            *v *= Complex64::from_polar(two_delta, angle);
        }
    }

    fn transform(&self, pairs: &[(usize, usize, f64)], n_x: usize, n_p: usize) -> Vec<Complex64> {
        debug_assert!(self.chirp.inputs() >= 1);
        let mut out = vec![Complex64::default(); n_x * n_p];
        out.par_chunks_mut(n_p)
            .enumerate()
            .for_each_init(Vec::new, |work, (j, row)| {
                self.row(j, pairs, work, row);
            });
        out
    }
}

/// Complex samples of `W^ħ[γ]`; the imaginary part measures non-Hermiticity
/// and quadrature error.
pub fn wigner_transform_complex(
    gamma: &DensityKernel,
    pgrid: &PhaseSpaceGrid,
) -> Result<GridFunction<PhaseSpaceGrid, Complex64>> {
    let vectors: Vec<&[Complex64]> = gamma.vectors().iter().map(|v| v.as_slice()).collect();
    let engine = Engine::new(gamma.grid(), &vectors, pgrid, gamma.hbar())?;
    let pairs: Vec<(usize, usize, f64)> = gamma
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, i, w))
        .collect();
    let values = engine.transform(&pairs, pgrid.spatial().n(), pgrid.momentum().n());
    Ok(GridFunction::from_parts(pgrid.clone(), values))
}

/// `W^ħ[γ]` on `pgrid` (real part; Hermitian kernels give real transforms).
pub fn wigner_transform(
    gamma: &DensityKernel,
    pgrid: &PhaseSpaceGrid,
) -> Result<PhaseSpaceFunction> {
    Ok(wigner_transform_complex(gamma, pgrid)?.map(|v| v.re))
}

/// Cross transforms `W[|φ_i⟩⟨φ_j|]` for all ordered orbital pairs, indexed
/// `[i * n + j]`.
pub fn cross_wigner_all(
    grid: &SpatialGrid,
    orbitals: &[Vec<Complex64>],
    hbar: f64,
    pgrid: &PhaseSpaceGrid,
) -> Result<Vec<GridFunction<PhaseSpaceGrid, Complex64>>> {
    let vectors: Vec<&[Complex64]> = orbitals.iter().map(|v| v.as_slice()).collect();
    let engine = Engine::new(grid, &vectors, pgrid, hbar)?;
    let n = orbitals.len();
    Ok((0..n * n)
        .map(|ij| {
            let pair = [(ij / n, ij % n, 1.0)];
            let values = engine.transform(&pair, pgrid.spatial().n(), pgrid.momentum().n());
            GridFunction::from_parts(pgrid.clone(), values)
        })
        .collect())
}

/// `f_N(x,p) = 2 Σ_{n<N} (-1)^n e^{-r²/ħ} L_n(2r²/ħ)`, `r² = x² + p²`: the
/// Wigner function of the lowest `N` harmonic-oscillator levels.
pub fn laguerre_oracle(
    n_particles: usize,
    hbar: f64,
    pgrid: &PhaseSpaceGrid,
) -> Result<PhaseSpaceFunction> {
    if pgrid.d() != 1 {
        return Err(Error::UnsupportedDimension {
            op: "laguerre_oracle",
            d: pgrid.d(),
        });
    }
    Ok(GridFunction::from_fn(pgrid.clone(), |z| {
        laguerre_value(n_particles, hbar, z[0] * z[0] + z[1] * z[1])
    }))
}

/// Evaluates the alternating sum with `ℓ_n = e^{-u/2} L_n(u)` kept scaled.
pub fn laguerre_value(n_particles: usize, hbar: f64, r2: f64) -> f64 {
    let u = 2.0 * r2 / hbar;
    let mut prev = 0.0;
    let mut cur = (-0.5 * u).exp();
    let mut sum = 0.0;
    for n in 0..n_particles {
        sum += if n % 2 == 0 { cur } else { -cur };
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 - u) * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    2.0 * sum
}

/// `(Oφ)(x) = e^{iħξ·η/2} e^{iξ·x} φ(x + ħη)`, translation by Fourier shift.
pub fn weyl_apply(
    point: &WeylPoint,
    phi: &[Complex64],
    grid: &SpatialGrid,
    hbar: f64,
) -> Result<Vec<Complex64>> {
    let d = grid.d();
    if point.xi.len() != d {
        return Err(Error::arg(format!(
            "Weyl point has dimension {}, grid has {d}",
            point.xi.len()
        )));
    }
    if phi.len() != grid.len() {
        return Err(Error::arg("orbital length does not match grid"));
    }
    let shift: Vec<f64> = point.eta.iter().map(|e| hbar * e).collect();
    if let Some(s) = shift.iter().find(|s| s.abs() > grid.half_width()) {
        return Err(Error::arg(format!(
            "translation {s} exceeds the half box {}",
            grid.half_width()
        )));
    }
    let f = GridFunction::from_parts(grid.clone(), phi.to_vec());
    let moved = if shift.iter().all(|&s| s == 0.0) {
        f
    } else {
        fourier_shift(&f, &shift)
    };
    let xi_eta: f64 = point.xi.iter().zip(&point.eta).map(|(a, b)| a * b).sum();
    let global = Complex64::from_polar(1.0, 0.5 * hbar * xi_eta);
    let pts = grid.points();
    let mut out = moved.into_values();
    for (idx, v) in out.iter_mut().enumerate() {
        let mut rest = idx;
        let mut phase = 0.0;
        for a in (0..d).rev() {
            phase += point.xi[a] * pts[rest % grid.n()];
            rest /= grid.n();
        }
        *v *= global * Complex64::from_polar(1.0, phase);
    }
    Ok(out)
}

/// `(1/N) Tr[O γ]` summed over the factors of `γ`.
pub fn weyl_trace(gamma: &DensityKernel, point: &WeylPoint) -> Result<Complex64> {
    let grid = gamma.grid();
    let vol = grid.cell_volume();
    let parts: Result<Vec<Complex64>> = gamma
        .vectors()
        .par_iter()
        .zip(gamma.weights())
        .map(|(v, &w)| {
            let ov = weyl_apply(point, v, grid, gamma.hbar())?;
            let s: Complex64 = v.iter().zip(&ov).map(|(a, b)| a.conj() * b).sum();
            Ok(s * (w * vol))
        })
        .collect();
    Ok(parts?.into_iter().sum::<Complex64>() / gamma.n_particles() as f64)
}

/// Groenewold's formula: the Fourier transform of `f = W^ħ[γ]` at
/// `ζ = (ξ, η)` as a normalized trace. Under the transform convention
/// `ĝ(ζ) = (2π)^{-n/2}∫e^{-iζ·z}g` this is the trace against `O_{-ξ,η}`.
pub fn groenewold(gamma: &DensityKernel, zeta: &WeylPoint) -> Result<Complex64> {
    let flipped = WeylPoint {
        xi: zeta.xi.iter().map(|v| -v).collect(),
        eta: zeta.eta.clone(),
    };
    weyl_trace(gamma, &flipped)
}

/// `f̂(ξ, η)` for one `η` and every `ξ` of the centered dual axis of the
/// orbital grid (d = 1).
pub fn groenewold_row(gamma: &DensityKernel, eta: f64) -> Result<Vec<Complex64>> {
    let grid = gamma.grid();
    if grid.d() != 1 {
        return Err(Error::UnsupportedDimension {
            op: "groenewold_row",
            d: grid.d(),
        });
    }
    let hbar = gamma.hbar();
    let shift = hbar * eta;
    if shift.abs() > grid.half_width() {
        return Err(Error::arg(format!(
            "translation {shift} exceeds the half box"
        )));
    }
    let n = grid.n();
    let mut g = vec![Complex64::default(); n];
    for (v, &w) in gamma.vectors().iter().zip(gamma.weights()) {
        let f = GridFunction::from_parts(grid.clone(), v.clone());
        let moved = fourier_shift(&f, &[shift]);
        g.iter_mut()
            .zip(v.iter().zip(moved.values()))
            .for_each(|(acc, (a, b))| *acc += a.conj() * b * w);
    }
    // ∫ e^{-iξx} g(x) dx on the centered dual axis
    let axis = grid.axis();
    let scale = (2.0 * std::f64::consts::PI).sqrt() / gamma.n_particles() as f64;
    let spec = crate::grids::forward_centered(&[axis], g);
    Ok(spec
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let xi = axis.frequency(k);
            v * scale * Complex64::from_polar(1.0, -0.5 * hbar * xi * eta)
        })
        .collect())
}

/// `N^k (N-k)!/N!` as an exact ratio, returned as `f64`.
pub fn wigner_k_prefactor(n: usize, k: usize) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    let num = BigUint::from(n).pow(k as u32);
    let den = ((n - k + 1)..=n).fold(BigUint::from(1u32), |a, m| a * BigUint::from(m));
    Ok(ratio_to_f64(&num, &den))
}

pub(crate) fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    // scale to keep 60+ significant bits before the single rounding
    let bits = num.bits().max(den.bits()) as i64;
    let shift = (120 - (bits - den.bits() as i64)).max(0) as u32;
    let q: BigUint = (num << shift) / den;
    let qb = q.bits();
    let drop = qb.saturating_sub(64);
    let top = (&q >> drop).iter_u64_digits().next().unwrap_or(0) as f64;
    top * 2f64.powi(drop as i32 - shift as i32)
}

const K_GRID_LIMIT: usize = 48;

/// `f^{(k)}_N = N^k ((N-k)!/N!) W_k^ħ[γ^{(k)}]` on the k-fold phase grid
/// (`k ∈ {1, 2}`, d = 1). For `k = 2` the transform of the Wick form is
/// `tr A(z1) tr A(z2) - tr(A(z1) A(z2))` with `A_ij = W[|φ_i⟩⟨φ_j|]`.
pub fn wigner_k(
    gk: &KParticleDensity,
    kgrid: &KPhaseGrid,
) -> Result<GridFunction<KPhaseGrid, f64>> {
    let state = gk.state();
    let k = gk.k();
    if kgrid.k() != k {
        return Err(Error::arg("grid order differs from density order"));
    }
    let base = kgrid.base();
    if base.d() != 1 {
        return Err(Error::UnsupportedDimension {
            op: "wigner_k",
            d: base.d(),
        });
    }
    if k > 2 {
        return Err(Error::arg("dense order-k transforms exist for k in {1, 2}"));
    }
    let n_sub = base.spatial().n().max(base.momentum().n());
    if k == 2 && n_sub > K_GRID_LIMIT {
        return Err(Error::MemoryGuard(format!(
            "order-2 grid with {n_sub} points per axis (limit {K_GRID_LIMIT})"
        )));
    }
    let n = state.n();
    let prefactor = wigner_k_prefactor(n, k)?;
    if k == 1 {
        let f = wigner_transform(&crate::density::gamma1(state), base)?;
        let values = f.values().iter().map(|v| v * prefactor).collect();
        return Ok(GridFunction::from_parts(kgrid.clone(), values));
    }
    let cross = cross_wigner_all(state.grid(), state.orbitals(), state.hbar(), base)?;
    let m = base.len();
    // A(z) as n×n blocks per phase point
    let a: Vec<Vec<Complex64>> = (0..m)
        .map(|z| (0..n * n).map(|ij| cross[ij].values()[z]).collect())
        .collect();
    let traces: Vec<Complex64> = a
        .iter()
        .map(|blk| (0..n).map(|i| blk[i * n + i]).sum())
        .collect();
    let mut values = vec![0.0; m * m];
    values.par_chunks_mut(m).enumerate().for_each(|(z1, row)| {
        let a1 = &a[z1];
        for (z2, out) in row.iter_mut().enumerate() {
            let a2 = &a[z2];
            let mut ex = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    ex += a1[i * n + j] * a2[j * n + i];
                }
            }
            *out = prefactor * (traces[z1] * traces[z2] - ex).re;
        }
    });
    Ok(GridFunction::from_parts(kgrid.clone(), values))
}
