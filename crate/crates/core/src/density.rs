//! Reduced density matrices of Slater states and their exact combinatorics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigUint;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grids::{gradient_norm_sq, Domain, SpatialFunction, SpatialGrid};
use crate::orbitals::{inner, SlaterState};

/// Self-adjoint trace-class kernel `γ(x,x') = Σ_i w_i φ_i(x) conj(φ_i(x'))`.
///
/// Kept in factored form; `to_dense` materializes the matrix `γ(x_i, x_j)`.
#[derive(Clone, Debug)]
pub struct DensityKernel {
    grid: SpatialGrid,
    vectors: Vec<Vec<Complex64>>,
    weights: Vec<f64>,
    n_particles: usize,
    hbar: f64,
}

impl DensityKernel {
    pub fn from_factors(
        grid: SpatialGrid,
        vectors: Vec<Vec<Complex64>>,
        weights: Vec<f64>,
        n_particles: usize,
        hbar: f64,
    ) -> Result<Self> {
        if vectors.len() != weights.len() {
            return Err(Error::arg("one weight per vector required"));
        }
        if vectors.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::arg("kernel vector length does not match grid"));
        }
        if weights.iter().any(|w| !w.is_finite()) || !(hbar > 0.0) || n_particles == 0 {
            return Err(Error::arg("invalid kernel weights, hbar or particle count"));
        }
        Ok(DensityKernel {
            grid,
            vectors,
            weights,
            n_particles,
            hbar,
        })
    }

    /// Factorizes a dense Hermitian matrix `γ(x_i, x_j)` (row-major).
    pub fn from_dense(
        grid: SpatialGrid,
        values: &[Complex64],
        n_particles: usize,
        hbar: f64,
    ) -> Result<Self> {
        let n = grid.len();
        if values.len() != n * n {
            return Err(Error::arg("dense kernel must be (grid points)²"));
        }
        let vol = grid.cell_volume();
        let m = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (values[i * n + j] + values[j * n + i].conj()) * vol
        });
        let eig = SymmetricEigen::new(m);
        let max = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut vectors = Vec::new();
        let mut weights = Vec::new();
        let scale = 1.0 / vol.sqrt();
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.abs() > 1e-13 * max.max(1.0) {
                vectors.push(
                    eig.eigenvectors
                        .column(k)
                        .iter()
                        .map(|v| v * scale)
                        .collect(),
                );
                weights.push(lambda);
            }
        }
        DensityKernel::from_factors(grid, vectors, weights, n_particles, hbar)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= c);
        out
    }

    /// Row-major `γ(x_i, x_j)`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut out = vec![Complex64::default(); n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (v, &w) in self.vectors.iter().zip(&self.weights) {
                let a = v[i] * w;
                for (r, b) in row.iter_mut().zip(v) {
                    *r += a * b.conj();
                }
            }
        });
        out
    }

    /// Gram matrix of the factor vectors.
    fn gram(&self) -> Vec<Vec<Complex64>> {
        self.vectors
            .par_iter()
            .map(|a| {
                self.vectors
                    .iter()
                    .map(|b| inner(&self.grid, a, b))
                    .collect()
            })
            .collect()
    }

    /// Quadrature trace `Σ_j γ(x_j, x_j) h^d`.
    pub fn trace(&self) -> f64 {
        self.vectors
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * inner(&self.grid, v, v).re)
            .sum()
    }

    /// `‖γ‖_HS² = Σ_ij w_i w_j |⟨φ_i, φ_j⟩|²`.
    pub fn hs_norm_sq(&self) -> f64 {
        let g = self.gram();
        let mut s = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                s += self.weights[i] * self.weights[j] * v.norm_sqr();
            }
        }
        s
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sq().sqrt()
    }

    /// `‖γ∘γ - γ‖_HS` with `γ∘γ` the quadrature composition, evaluated
    /// exactly in the span of the factors: `Tr[(WGW - W) G (WGW - W) G]`.
    pub fn projection_defect(&self) -> f64 {
        let g = self.gram();
        let r = self.weights.len();
        let w = &self.weights;
        let a: Vec<Vec<Complex64>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let d = if i == j { w[i] } else { 0.0 };
                        w[i] * g[i][j] * w[j] - d
                    })
                    .collect()
            })
            .collect();
        // Tr[(A G)²]
        let ag: Vec<Vec<Complex64>> = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| (0..r).map(|k| a[i][k] * g[k][j]).sum())
                    .collect()
            })
            .collect();
        let mut tr = Complex64::default();
        for i in 0..r {
            for k in 0..r {
                tr += ag[i][k] * ag[k][i];
            }
        }
        tr.re.max(0.0).sqrt()
    }

    /// The same defect through the dense matrix product `Γ h Γ - Γ`.
    pub fn dense_projection_defect(&self) -> f64 {
        let n = self.grid.len();
        let vol = self.grid.cell_volume();
        let g = self.to_dense();
        let gm = DMatrix::from_row_slice(n, n, &g);
        let comp = &gm * &gm * Complex64::new(vol, 0.0) - &gm;
        comp.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * vol
    }

    /// Operator eigenvalues (ascending) in the span of the factors.
    pub fn spectrum(&self) -> Vec<f64> {
        let g = self.gram();
        let r = self.weights.len();
        let gm = DMatrix::from_fn(r, r, |i, j| g[i][j]);
        let ge = SymmetricEigen::new(gm);
        // G^{1/2} W G^{1/2}
        let sqrt_vals = ge
            .eigenvalues
            .map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
        let s = &ge.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * ge.eigenvectors.adjoint();
        let wm = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            r,
            self.weights.iter().map(|&w| Complex64::new(w, 0.0)),
        ));
        let h = &s * wm * &s;
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let mut vals: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        vals
    }
}

/// `γ(x,x') = Σ_{i<N} φ_i(x) conj(φ_i(x'))`.
pub fn gamma1(state: &SlaterState) -> DensityKernel {
    DensityKernel {
        grid: state.grid().clone(),
        vectors: state.orbitals().to_vec(),
        weights: vec![1.0; state.n()],
        n_particles: state.n(),
        hbar: state.hbar(),
    }
}

/// `ρ(x) = γ(x,x)/N`.
pub fn density_from_gamma(gamma: &DensityKernel) -> SpatialFunction {
    let mut rho = vec![0.0; gamma.grid.len()];
    for (v, w) in gamma.vectors.iter().zip(&gamma.weights) {
        rho.iter_mut()
            .zip(v)
            .for_each(|(r, a)| *r += w * a.norm_sqr());
    }
    let inv = 1.0 / gamma.n_particles as f64;
    rho.iter_mut().for_each(|r| *r *= inv);
    SpatialFunction::from_parts(gamma.grid.clone(), rho)
}

/// `Tr((x̂² + p̂²)γ)` with spectral derivatives.
pub fn moment_trace_kernel(gamma: &DensityKernel) -> Result<f64> {
    let d = gamma.grid.d();
    if d > 2 {
        return Err(Error::UnsupportedDimension {
            op: "moment_trace",
            d,
        });
    }
    let r2 = gamma.grid.radius_sq();
    let vol = gamma.grid.cell_volume();
    let hbar = gamma.hbar;
    Ok(gamma
        .vectors
        .par_iter()
        .zip(&gamma.weights)
        .map(|(v, w)| {
            let pos: f64 = v
                .iter()
                .zip(&r2)
                .map(|(a, x)| a.norm_sqr() * x)
                .sum::<f64>()
                * vol;
            w * (pos + hbar * hbar * gradient_norm_sq(&gamma.grid, v))
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum())
}

pub fn moment_trace(state: &SlaterState) -> Result<f64> {
    moment_trace_kernel(&gamma1(state))
}

fn factorial_ratio(n: usize, k: usize) -> BigUint {
    // N!/(N-k)!
    ((n - k + 1)..=n).fold(BigUint::from(1u32), |acc, m| acc * BigUint::from(m))
}

fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::from(1u32), |acc, m| acc * BigUint::from(m))
}

/// `‖γ^{(k)}‖_HS² = k!·N!/(N-k)!`.
pub fn gamma_k_hs_sq(n: usize, k: usize) -> Result<BigUint> {
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    Ok(factorial(k) * factorial_ratio(n, k))
}

/// `Tr γ^{(k)} = N!/(N-k)!`.
pub fn gamma_k_trace(n: usize, k: usize) -> Result<BigUint> {
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    Ok(factorial_ratio(n, k))
}

/// Order-k reduced density of a Slater state, represented by its orbitals.
#[derive(Clone, Debug)]
pub struct KParticleDensity {
    state: SlaterState,
    k: usize,
}

impl KParticleDensity {
    pub fn new(state: SlaterState, k: usize) -> Result<Self> {
        if k == 0 || k > state.n() {
            return Err(Error::arg(format!("order {k} not in 1..={}", state.n())));
        }
        Ok(KParticleDensity { state, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn state(&self) -> &SlaterState {
        &self.state
    }

    pub fn trace_exact(&self) -> BigUint {
        gamma_k_trace(self.state.n(), self.k).expect("validated order")
    }

    pub fn hs_sq_exact(&self) -> BigUint {
        gamma_k_hs_sq(self.state.n(), self.k).expect("validated order")
    }
}

const DENSE_K_LIMIT: usize = 64;
const DENSE_K_BYTES: usize = 1 << 30;

/// Samples of `φ` (periodic, band-limited on `from`) at the points of `to`.
pub(crate) fn sample_on(from: &SpatialGrid, phi: &[Complex64], to: &SpatialGrid) -> Vec<Complex64> {
    if from.contains_grid(to) {
        let h = from.spacing();
        return (0..to.n())
            .map(|j| {
                let idx = ((to.point(j) + from.half_width()) / h).round() as usize;
                phi[idx]
            })
            .collect();
    }
    // trigonometric interpolation through the discrete transform
    let n = from.n();
    let mut spec = phi.to_vec();
    crate::grids::fft::plan(n, rustfft::FftDirection::Forward).process(&mut spec);
    let axis = from.axis();
    (0..to.n())
        .map(|j| {
            let t = to.point(j) + from.half_width();
            let mut acc = Complex64::default();
            for (k, c) in spec.iter().enumerate() {
                let signed = if k < n / 2 {
                    k as f64
                } else {
                    k as f64 - n as f64
                };
                if 2 * k == n {
                    acc += c * (signed * axis.dual_spacing() * t).cos();
                } else {
                    acc += c * Complex64::from_polar(1.0, signed * axis.dual_spacing() * t);
                }
            }
            acc / n as f64
        })
        .collect()
}

/// Dense order-k kernel on `subgrid^k × subgrid^k`, row-major in
/// `(x_1..x_k ; x_1'..x_k')`.
#[derive(Clone, Debug)]
pub struct DenseKernelK {
    grid: SpatialGrid,
    k: usize,
    values: Vec<Complex64>,
}

impl DenseKernelK {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn side(&self) -> usize {
        self.grid.n().pow(self.k as u32)
    }

    /// Quadrature trace over the diagonal.
    pub fn trace(&self) -> f64 {
        let m = self.side();
        let vol = self.grid.spacing().powi(self.k as i32);
        (0..m).map(|i| self.values[i * m + i].re).sum::<f64>() * vol
    }

    pub fn hs_norm_sq(&self) -> f64 {
        let vol = self.grid.spacing().powi(self.k as i32);
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * vol * vol
    }

    /// `‖K∘K - k!·K‖_HS / ‖K‖_HS` with quadrature composition.
    pub fn wedge_identity_defect(&self) -> Result<f64> {
        let m = self.side();
        if m > 1024 {
            return Err(Error::MemoryGuard(format!(
                "composition of a {m}×{m} kernel"
            )));
        }
        let vol = self.grid.spacing().powi(self.k as i32);
        let km = DMatrix::from_row_slice(m, m, &self.values);
        let fact = (1..=self.k).product::<usize>() as f64;
        let defect = &km * &km * Complex64::new(vol, 0.0) - &km * Complex64::new(fact, 0.0);
        let num = defect.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let den = km.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        Ok(num / den)
    }
}

/// Materializes `γ^{(k)}` for `k ∈ {1, 2}` on a coarse subgrid. For `k = 2`
/// this is `γ(x1,x1')γ(x2,x2') - γ(x1,x2')γ(x2,x1')`, which equals
/// `2·Σ_{l<m} |φ_l∧φ_m⟩⟨φ_l∧φ_m|` for orthonormal orbitals.
pub fn gamma_k_kernel(
    state: &SlaterState,
    k: usize,
    subgrid: &SpatialGrid,
) -> Result<DenseKernelK> {
    if state.grid().d() != 1 || subgrid.d() != 1 {
        return Err(Error::UnsupportedDimension {
            op: "gamma_k_kernel",
            d: state.grid().d().max(subgrid.d()),
        });
    }
    if !(1..=2).contains(&k) {
        return Err(Error::arg(format!(
            "dense kernels exist for k in {{1, 2}}, got {k}"
        )));
    }
    let n = subgrid.n();
    let bytes = n.pow(2 * k as u32).saturating_mul(16);
    if n > DENSE_K_LIMIT || bytes > DENSE_K_BYTES {
        return Err(Error::MemoryGuard(format!(
            "order-{k} kernel on {n} points needs {bytes} bytes"
        )));
    }
    if k > state.n() {
        return Err(Error::arg(format!("order {k} exceeds N = {}", state.n())));
    }
    let sub: Vec<Vec<Complex64>> = state
        .orbitals()
        .par_iter()
        .map(|o| sample_on(state.grid(), o, subgrid))
        .collect();
    let mut g1 = vec![Complex64::default(); n * n];
    for o in &sub {
        for i in 0..n {
            for j in 0..n {
                g1[i * n + j] += o[i] * o[j].conj();
            }
        }
    }
    if k == 1 {
        return Ok(DenseKernelK {
            grid: subgrid.clone(),
            k,
            values: g1,
        });
    }
    let m = n * n;
    let mut values = vec![Complex64::default(); m * m];
    values.par_chunks_mut(m).enumerate().for_each(|(row, out)| {
        let (x1, x2) = (row / n, row % n);
        for y1 in 0..n {
            for y2 in 0..n {
                out[y1 * n + y2] =
                    g1[x1 * n + y1] * g1[x2 * n + y2] - g1[x1 * n + y2] * g1[x2 * n + y1];
            }
        }
    });
    Ok(DenseKernelK {
        grid: subgrid.clone(),
        k,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbitals::hermite_basis;

    #[test]
    fn exact_combinatorics_examples() {
        assert_eq!(gamma_k_hs_sq(5, 1).unwrap(), BigUint::from(5u32));
        assert_eq!(gamma_k_hs_sq(8, 2).unwrap(), BigUint::from(112u32));
        assert_eq!(gamma_k_hs_sq(3, 3).unwrap(), BigUint::from(36u32));
        assert!(gamma_k_hs_sq(3, 4).is_err());
        assert_eq!(gamma_k_trace(8, 2).unwrap(), BigUint::from(56u32));
    }

    #[test]
    fn harmonic_kernel_identities() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let s = hermite_basis(16, 1.0 / 16.0, &g).unwrap();
        let gamma = gamma1(&s);
        assert!((gamma.trace() - 16.0).abs() < 1e-8);
        assert!(gamma.projection_defect() < 1e-8);
        assert!((gamma.hs_norm() - 4.0).abs() < 1e-8);
        let spec = gamma.spectrum();
        assert!(spec.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let rho = density_from_gamma(&gamma);
        assert!((crate::grids::integrate(&rho) - 1.0).abs() < 1e-8);
        assert!((moment_trace(&s).unwrap() - 16.0).abs() < 1e-6);
    }

    #[test]
    fn ground_state_density_and_moment() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let s = hermite_basis(1, 1.0, &g).unwrap();
        let rho = density_from_gamma(&gamma1(&s));
        for (x, r) in g.points().iter().zip(rho.values()) {
            assert!((r - (-x * x).exp() / std::f64::consts::PI.sqrt()).abs() < 1e-14);
        }
        assert!((moment_trace(&s).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_route_agrees_with_factored_route() {
        let g = SpatialGrid::new(1, 6.0, 128).unwrap();
        let s = hermite_basis(4, 0.25, &g).unwrap();
        let gamma = gamma1(&s);
        assert!(gamma.dense_projection_defect() < 1e-8);
        let dense = gamma.to_dense();
        let back = DensityKernel::from_dense(g, &dense, 4, 0.25).unwrap();
        assert_eq!(back.weights().len(), 4);
        assert!(back.weights().iter().all(|w| (w - 1.0).abs() < 1e-10));
        assert!((back.trace() - 4.0).abs() < 1e-10);
        let half = gamma.scaled(0.5);
        assert!(
            (half.projection_defect() - 0.5).abs() < 1e-8,
            "{}",
            half.projection_defect()
        );
    }

    #[test]
    fn two_body_kernel_on_subgrid() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let s = hermite_basis(8, 0.125, &g).unwrap();
        let sub = SpatialGrid::new(1, 4.0, 64).unwrap();
        let k2 = gamma_k_kernel(&s, 2, &sub).unwrap();
        assert!((k2.trace() / 56.0 - 1.0).abs() < 0.01, "{}", k2.trace());
        assert!(
            (k2.hs_norm_sq() / 112.0 - 1.0).abs() < 0.02,
            "{}",
            k2.hs_norm_sq()
        );
        let k1 = gamma_k_kernel(&s, 1, &sub).unwrap();
        let dense = gamma1(&s).to_dense();
        for i in 0..64 {
            for j in 0..64 {
                let (a, b) = (4 * i + 128, 4 * j + 128);
                assert!((k1.values()[i * 64 + j] - dense[a * 512 + b]).norm() < 1e-14);
            }
        }
        assert!(gamma_k_kernel(&s, 2, &SpatialGrid::new(1, 4.0, 128).unwrap()).is_err());
        assert!(gamma_k_kernel(&s, 3, &sub).is_err());
    }

    #[test]
    fn wedge_identity_on_small_subgrid() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let s = hermite_basis(2, 0.5, &g).unwrap();
        let sub = SpatialGrid::new(1, 4.0, 32).unwrap();
        let k2 = gamma_k_kernel(&s, 2, &sub).unwrap();
        assert!(k2.wedge_identity_defect().unwrap() < 1e-8);
    }

    #[test]
    fn off_grid_sampling_uses_trigonometric_interpolation() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let s = hermite_basis(1, 1.0, &g).unwrap();
        let sub = SpatialGrid::coarse(1, 3.1, 40).unwrap();
        let vals = sample_on(&g, &s.orbitals()[0], &sub);
        for (j, v) in vals.iter().enumerate() {
            let x = sub.point(j);
            let exact = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((v.re - exact).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }
}
