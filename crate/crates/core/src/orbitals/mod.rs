//! Orthonormal orbital families: Hermite functions, finite-difference trap
//! eigenstates and a Hartree self-consistent loop.

mod potentials;
mod tridiag;

use num_complex::Complex64;
use rayon::prelude::*;

pub use potentials::{ConvolutionKernel, InteractionSpec, TrapSpec};

use crate::error::{Error, Result};
use crate::grids::{gradient_norm_sq, Domain, SpatialGrid};
use tridiag::SymTridiagonal;

const GRAM_TOL: f64 = 1e-10;

/// `ħ = N^{-1/d}`.
pub fn semiclassical_hbar(n: usize, d: usize) -> f64 {
    let n = n as f64;
    match d {
        1 => 1.0 / n,
        2 => 1.0 / n.sqrt(),
        3 => 1.0 / n.cbrt(),
        _ => n.powf(-1.0 / d as f64),
    }
}

/// `N` orthonormal orbitals on a spatial grid.
#[derive(Clone, Debug)]
pub struct SlaterState {
    grid: SpatialGrid,
    orbitals: Vec<Vec<Complex64>>,
    hbar: f64,
    levels: Option<Vec<f64>>,
}

pub(crate) fn inner(grid: &SpatialGrid, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    s * grid.cell_volume()
}

impl SlaterState {
    pub fn new(grid: SpatialGrid, orbitals: Vec<Vec<Complex64>>, hbar: f64) -> Result<Self> {
        let state = SlaterState {
            grid,
            orbitals,
            hbar,
            levels: None,
        };
        state.validate()?;
        Ok(state)
    }

    /// Gram–Schmidt (twice) on arbitrary linearly independent vectors.
    pub fn orthonormalize(grid: SpatialGrid, raw: Vec<Vec<Complex64>>, hbar: f64) -> Result<Self> {
        let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(raw.len());
        for mut v in raw {
            if v.len() != grid.len() {
                return Err(Error::arg("orbital length does not match grid"));
            }
            for _ in 0..2 {
                for q in &out {
                    let c = inner(&grid, q, &v);
                    v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
                }
            }
            let norm = inner(&grid, &v, &v).re.sqrt();
            if norm < 1e-8 {
                return Err(Error::arg("orbitals are linearly dependent"));
            }
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
        SlaterState::new(grid, out, hbar)
    }

    fn validate(&self) -> Result<()> {
        let n = self.orbitals.len();
        if n == 0 {
            return Err(Error::arg("a Slater state needs at least one orbital"));
        }
        let expected = semiclassical_hbar(n, self.grid.d());
        if (self.hbar / expected - 1.0).abs() > 1e-12 {
            return Err(Error::arg(format!(
                "hbar = {} is not N^(-1/d) = {expected} for N = {n}",
                self.hbar
            )));
        }
        if self.orbitals.iter().any(|o| o.len() != self.grid.len()) {
            return Err(Error::arg("orbital length does not match grid"));
        }
        let dev = self.gram_deviation();
        if dev > GRAM_TOL {
            return Err(Error::arg(format!(
                "orbitals not orthonormal (Gram deviation {dev:e})"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.orbitals.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn orbitals(&self) -> &[Vec<Complex64>] {
        &self.orbitals
    }

    /// One-body eigenvalues when the state came from an eigensolver.
    pub fn levels(&self) -> Option<&[f64]> {
        self.levels.as_deref()
    }

    pub fn gram(&self) -> Vec<Vec<Complex64>> {
        self.orbitals
            .par_iter()
            .map(|a| {
                self.orbitals
                    .iter()
                    .map(|b| inner(&self.grid, a, b))
                    .collect()
            })
            .collect()
    }

    /// `max_ij |G_ij - δ_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let g = self.gram();
        let mut worst = 0.0f64;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }

    /// `ρ_N = γ(x,x)/N`.
    pub fn density(&self) -> Vec<f64> {
        let mut rho = vec![0.0; self.grid.len()];
        for o in &self.orbitals {
            rho.iter_mut().zip(o).for_each(|(r, v)| *r += v.norm_sqr());
        }
        let inv = 1.0 / self.n() as f64;
        rho.iter_mut().for_each(|r| *r *= inv);
        rho
    }
}

fn require_1d(grid: &SpatialGrid, op: &'static str) -> Result<()> {
    if grid.d() != 1 {
        return Err(Error::UnsupportedDimension { op, d: grid.d() });
    }
    Ok(())
}

/// `ψ_n(x) = (πħ)^{-1/4}(2^n n!)^{-1/2} H_n(x/√ħ) e^{-x²/2ħ}`, `n < N`.
pub fn hermite_basis(n_particles: usize, hbar: f64, grid: &SpatialGrid) -> Result<SlaterState> {
    require_1d(grid, "hermite_basis")?;
    if n_particles == 0 || n_particles > grid.n() / 4 {
        return Err(Error::Resolution(format!(
            "N = {n_particles} needs N <= n/4 = {}",
            grid.n() / 4
        )));
    }
    let pts = grid.points();
    let norm0 = (std::f64::consts::PI * hbar).powf(-0.25);
    let mut orbitals = vec![vec![Complex64::default(); grid.n()]; n_particles];
    for (j, &x) in pts.iter().enumerate() {
        let u = x / hbar.sqrt();
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * u * u).exp();
        for (n, orb) in orbitals.iter_mut().enumerate() {
            orb[j] = Complex64::new(cur, 0.0);
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * u * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
    }
    let mut state = SlaterState::new(grid.clone(), orbitals, hbar)?;
    state.levels = Some(
        (0..n_particles)
            .map(|n| hbar * (2 * n + 1) as f64)
            .collect(),
    );
    Ok(state)
}

/// Lowest `N` Dirichlet eigenpairs of `-ħ²∂² + u` with the second-order
/// stencil; orbitals normalized on the grid, node at the left edge.
fn lowest_states(
    u: &[f64],
    n_particles: usize,
    grid: &SpatialGrid,
    hbar: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = grid.n();
    if n_particles == 0 || n_particles >= n {
        return Err(Error::Resolution(format!(
            "N = {n_particles} exceeds the {} resolvable levels",
            n - 1
        )));
    }
    let h = grid.spacing();
    let t = hbar * hbar / (h * h);
    let diag: Vec<f64> = (1..n).map(|j| 2.0 * t + u[j]).collect();
    let off = vec![-t; n - 2];
    let tri = SymTridiagonal::new(diag, off);
    let values = tri.lowest_eigenvalues(n_particles);
    let mut vectors: Vec<Vec<f64>> = tri
        .eigenvectors(&values)
        .into_iter()
        .map(|v| {
            let mut full = vec![0.0; n];
            full[1..].copy_from_slice(&v);
            full
        })
        .collect();
    split_parity(u, &values, &mut vectors);
    let scale = h.sqrt();
    for v in vectors.iter_mut() {
        v.iter_mut().for_each(|a| *a /= scale);
        fix_sign(v);
    }
    Ok((values, vectors))
}

/// Replaces degenerate clusters of a reflection-symmetric potential by
/// parity eigenvectors, even first.
fn split_parity(u: &[f64], values: &[f64], vectors: &mut [Vec<f64>]) {
    let n = u.len();
    let umax = u.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let symmetric = (1..n).all(|j| (u[j] - u[n - j]).abs() <= 1e-12 * umax);
    if !symmetric {
        return;
    }
    let reflect = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|j| if j == 0 { 0.0 } else { v[n - j] })
            .collect()
    };
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] <= 1e-9 * scale {
            end += 1;
        }
        if end - start > 1 {
            let mut even: Vec<Vec<f64>> = Vec::new();
            let mut odd: Vec<Vec<f64>> = Vec::new();
            for v in &vectors[start..end] {
                let r = reflect(v);
                let e: Vec<f64> = v.iter().zip(&r).map(|(a, b)| 0.5 * (a + b)).collect();
                let o: Vec<f64> = v.iter().zip(&r).map(|(a, b)| 0.5 * (a - b)).collect();
                push_orthonormal(&mut even, e);
                push_orthonormal(&mut odd, o);
            }
            if even.len() + odd.len() == end - start {
                for (slot, v) in vectors[start..end]
                    .iter_mut()
                    .zip(even.into_iter().chain(odd))
                {
                    *slot = v;
                }
            }
        }
        start = end;
    }
}

fn push_orthonormal(basis: &mut Vec<Vec<f64>>, mut v: Vec<f64>) {
    for _ in 0..2 {
        for q in basis.iter() {
            let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
    }
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 1e-6 {
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
}

/// Positive beyond the outermost node on the right.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(j) = v.iter().rposition(|x| x.abs() > 1e-3 * max) {
        if v[j] < 0.0 {
            v.iter_mut().for_each(|a| *a = -*a);
        }
    }
}

fn to_complex(v: Vec<f64>) -> Vec<Complex64> {
    v.into_iter().map(|a| Complex64::new(a, 0.0)).collect()
}

/// The `N` lowest finite-difference eigenstates of `-ħ²∂² + U` with hard
/// walls at the box edges.
pub fn solve_trap(
    trap: &TrapSpec,
    n_particles: usize,
    grid: &SpatialGrid,
    hbar: f64,
) -> Result<SlaterState> {
    require_1d(grid, "solve_trap")?;
    let u = trap.sample(grid)?;
    let (levels, vectors) = lowest_states(&u, n_particles, grid, hbar)?;
    let mut state = SlaterState::new(
        grid.clone(),
        vectors.into_iter().map(to_complex).collect(),
        hbar,
    )?;
    state.levels = Some(levels);
    Ok(state)
}

/// Result of the Hartree loop.
#[derive(Clone, Debug)]
pub struct ScfOutcome {
    pub state: SlaterState,
    /// `ρ_N` of `state`.
    pub density: Vec<f64>,
    /// `U + V * ρ` that produced `state`.
    pub effective_potential: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖ρ_out - ρ_in‖_{L¹}` per iteration.
    pub history: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct ScfParams {
    pub mixing: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ScfParams {
    fn default() -> Self {
        ScfParams {
            mixing: 0.3,
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

/// Hartree fixed point: orbitals of `U + V * ρ_N`, with linear density
/// mixing. On failure the best iterate is returned inside the error.
pub fn scf_slater(
    trap: &TrapSpec,
    interaction: &InteractionSpec,
    n_particles: usize,
    grid: &SpatialGrid,
    params: ScfParams,
) -> Result<ScfOutcome> {
    require_1d(grid, "scf_slater")?;
    if !(params.mixing > 0.0 && params.mixing <= 1.0) {
        return Err(Error::arg(format!(
            "mixing {} not in (0, 1]",
            params.mixing
        )));
    }
    let hbar = semiclassical_hbar(n_particles, 1);
    let u = trap.sample(grid)?;
    let kernel = interaction.kernel(grid)?;
    let h = grid.spacing();
    let density_of = |vectors: &[Vec<f64>]| -> Vec<f64> {
        let mut rho = vec![0.0; grid.n()];
        for v in vectors {
            rho.iter_mut().zip(v).for_each(|(r, a)| *r += a * a);
        }
        rho.iter_mut().for_each(|r| *r /= n_particles as f64);
        rho
    };

    let (_, start) = lowest_states(&u, n_particles, grid, hbar)?;
    let mut rho = density_of(&start);
    let mut history = Vec::new();
    let mut best: Option<ScfOutcome> = None;
    for it in 1..=params.max_iter {
        let u_eff: Vec<f64> = match &kernel {
            Some(k) => u.iter().zip(k.convolve(&rho)).map(|(a, b)| a + b).collect(),
            None => u.clone(),
        };
        let (levels, vectors) = lowest_states(&u_eff, n_particles, grid, hbar)?;
        let rho_out = density_of(&vectors);
        let residual: f64 = rho_out
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * h;
        history.push(residual);
        let converged = residual < params.tol;
        if converged || best.as_ref().is_none_or(|b| residual < b.residual) {
            let mut state = SlaterState::new(
                grid.clone(),
                vectors.into_iter().map(to_complex).collect(),
                hbar,
            )?;
            state.levels = Some(levels);
            best = Some(ScfOutcome {
                state,
                density: rho_out.clone(),
                effective_potential: u_eff,
                residual,
                iterations: it,
                converged,
                history: Vec::new(),
            });
        }
        if converged {
            let mut out = best.expect("set above");
            out.iterations = it;
            out.history = history;
            return Ok(out);
        }
        let m = params.mixing;
        rho.iter_mut()
            .zip(&rho_out)
            .for_each(|(r, o)| *r = (1.0 - m) * *r + m * o);
    }
    let mut out = best.expect("at least one iteration");
    out.history = history;
    Err(Error::ScfNotConverged(Box::new(out)))
}

/// Terms of `⟨Ψ_N, H_N Ψ_N⟩` for a Slater determinant.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    /// `Tr(p̂² γ)`.
    pub kinetic: f64,
    /// `Tr(U γ)`.
    pub potential: f64,
    /// `(1/2N) ∬ V γ(x,x) γ(y,y)`.
    pub direct: f64,
    /// `(1/2N) ∬ V |γ(x,y)|²`, entering with a minus sign.
    pub exchange: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.direct - self.exchange
    }
}

pub fn slater_energy_terms(
    state: &SlaterState,
    trap: &TrapSpec,
    interaction: &InteractionSpec,
) -> Result<EnergyBreakdown> {
    let grid = state.grid();
    let hbar = state.hbar();
    let u = trap.sample(grid)?;
    let vol = grid.cell_volume();
    let kinetic: f64 = state
        .orbitals()
        .par_iter()
        .map(|o| hbar * hbar * gradient_norm_sq(grid, o))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let potential: f64 = state
        .orbitals()
        .iter()
        .map(|o| o.iter().zip(&u).map(|(v, w)| v.norm_sqr() * w).sum::<f64>() * vol)
        .sum();
    let mut out = EnergyBreakdown {
        kinetic,
        potential,
        ..Default::default()
    };
    let Some(kernel) = interaction.kernel(grid)? else {
        return Ok(out);
    };
    let n = state.n();
    let prefactor = 1.0 / (2.0 * n as f64);
    let diag: Vec<Complex64> = state
        .density()
        .iter()
        .map(|r| Complex64::new(r * n as f64, 0.0))
        .collect();
    out.direct = prefactor * kernel.quadratic_form(&diag);
    let orbs = state.orbitals();
    let exchange: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let pair: Vec<Complex64> = orbs[i]
                        .iter()
                        .zip(&orbs[j])
                        .map(|(a, b)| a * b.conj())
                        .collect();
                    let w = kernel.quadratic_form(&pair);
                    if i == j {
                        w
                    } else {
                        2.0 * w
                    }
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    out.exchange = prefactor * exchange;
    Ok(out)
}

/// `Tr((p̂² + U)γ) + (1/2N)∬ V(x-y)[γ(x,x)γ(y,y) - |γ(x,y)|²]`.
pub fn slater_energy(
    state: &SlaterState,
    trap: &TrapSpec,
    interaction: &InteractionSpec,
) -> Result<f64> {
    Ok(slater_energy_terms(state, trap, interaction)?.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::laplacian;

    #[test]
    fn hermite_ground_state_value() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let s = hermite_basis(1, 1.0, &g).unwrap();
        let v = s.orbitals()[0][128].re;
        assert!((v - std::f64::consts::PI.powf(-0.25)).abs() < 1e-14);
        assert!((v - 0.751_125_544_464_942_5).abs() < 1e-12);
    }

    #[test]
    fn hermite_resolution_guard() {
        let g = SpatialGrid::new(1, 4.0, 256).unwrap();
        assert!(matches!(
            hermite_basis(65, 1.0 / 65.0, &g),
            Err(Error::Resolution(_))
        ));
        assert!(hermite_basis(32, 1.0 / 32.0, &g).is_ok());
    }

    #[test]
    fn hermite_eigen_residual_is_spectral() {
        let g = SpatialGrid::new(1, 8.0, 1024).unwrap();
        let n = 16;
        let hbar = 1.0 / n as f64;
        let s = hermite_basis(n, hbar, &g).unwrap();
        let x = g.points();
        for (k, o) in s.orbitals().iter().enumerate() {
            let lap = laplacian(&g, o);
            let e = hbar * (2 * k + 1) as f64;
            let res: f64 = (0..g.n())
                .map(|j| (-hbar * hbar * lap[j] + (x[j] * x[j] - e) * o[j]).norm_sqr())
                .sum::<f64>()
                * g.spacing();
            assert!(res.sqrt() < 1e-6, "level {k}: {}", res.sqrt());
        }
    }

    #[test]
    fn fd_spectrum_of_harmonic_trap() {
        let g = SpatialGrid::new(1, 8.0, 4096).unwrap();
        let s = solve_trap(&TrapSpec::Harmonic, 4, &g, 0.25).unwrap();
        for (k, e) in s.levels().unwrap().iter().enumerate() {
            assert!((e - 0.25 * (2 * k + 1) as f64).abs() < 1e-4, "{e}");
        }
        let exact = hermite_basis(4, 0.25, &g).unwrap();
        for (a, b) in s.orbitals().iter().zip(exact.orbitals()) {
            let d: f64 = a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v).norm_sqr())
                .sum::<f64>()
                * g.spacing();
            assert!(d.sqrt() < 1e-4, "{}", d.sqrt());
        }
    }

    #[test]
    fn particle_in_a_box_levels() {
        let g = SpatialGrid::new(1, 1.0, 2048).unwrap();
        let zero = TrapSpec::Custom {
            samples: vec![0.0; 2048],
        };
        let hbar = 1.0 / 3.0;
        let s = solve_trap(&zero, 3, &g, hbar).unwrap();
        for (k, e) in s.levels().unwrap().iter().enumerate() {
            let exact = (std::f64::consts::PI * (k + 1) as f64 / 2.0).powi(2) * hbar * hbar;
            assert!((e / exact - 1.0).abs() < 1e-5);
        }
        assert!(solve_trap(
            &TrapSpec::Harmonic,
            64,
            &SpatialGrid::new(1, 8.0, 64).unwrap(),
            1.0 / 64.0
        )
        .is_err());
    }

    #[test]
    fn symmetric_double_well_orders_even_before_odd() {
        let g = SpatialGrid::new(1, 6.0, 1024).unwrap();
        // deep separated wells: the lowest pair is numerically degenerate
        let u: Vec<f64> = g
            .points()
            .iter()
            .map(|x| 40.0 * (x * x - 9.0).powi(2) / 81.0)
            .collect();
        let s = solve_trap(&TrapSpec::Custom { samples: u }, 2, &g, 0.5).unwrap();
        let n = g.n();
        let parity = |o: &[Complex64]| -> f64 {
            (1..n).map(|j| (o[j] * o[n - j]).re).sum::<f64>() * g.spacing()
        };
        assert!(parity(&s.orbitals()[0]) > 0.99);
        assert!(parity(&s.orbitals()[1]) < -0.99);
    }

    #[test]
    fn scf_without_interaction_is_solve_trap() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let out = scf_slater(
            &TrapSpec::Harmonic,
            &InteractionSpec::None,
            8,
            &g,
            ScfParams::default(),
        )
        .unwrap();
        let direct = solve_trap(&TrapSpec::Harmonic, 8, &g, 0.125).unwrap();
        assert_eq!(out.state.orbitals(), direct.orbitals());
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn harmonic_energy_is_n() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        for n in [1usize, 5, 32] {
            let s = hermite_basis(n, 1.0 / n as f64, &g).unwrap();
            let e = slater_energy(&s, &TrapSpec::Harmonic, &InteractionSpec::None).unwrap();
            assert!((e - n as f64).abs() < 1e-9 * n as f64, "{e}");
        }
    }

    #[test]
    fn single_particle_has_no_self_interaction() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let s = hermite_basis(1, 1.0, &g).unwrap();
        let v = InteractionSpec::Gaussian {
            strength: 2.0,
            width: 0.5,
        };
        let t = slater_energy_terms(&s, &TrapSpec::Harmonic, &v).unwrap();
        assert!(t.direct > 0.0);
        assert!((t.direct - t.exchange).abs() < 1e-14);
    }

    #[test]
    fn mixing_out_of_range_is_rejected() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let p = ScfParams {
            mixing: 0.0,
            ..Default::default()
        };
        assert!(scf_slater(&TrapSpec::Harmonic, &InteractionSpec::None, 4, &g, p).is_err());
    }

    #[test]
    fn scf_reports_best_iterate_when_stopped_early() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let v = InteractionSpec::Gaussian {
            strength: 1.0,
            width: 1.0,
        };
        let p = ScfParams {
            mixing: 0.3,
            max_iter: 3,
            tol: 1e-14,
        };
        match scf_slater(&TrapSpec::Harmonic, &v, 8, &g, p) {
            Err(Error::ScfNotConverged(best)) => {
                assert!(!best.converged);
                assert_eq!(best.history.len(), 3);
                assert!(best.residual <= best.history[0]);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
