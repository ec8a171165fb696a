//! Thomas–Fermi functional
//! `ℰ(ρ) = (d/(d+2)) C_TF ∫ρ^{1+2/d} + ∫Uρ + ½∬ρ(x)V(x-y)ρ(y)`,
//! its minimizer, the classical state `f_ρ(x,p) = 1(|p|² ≤ C_TF ρ(x)^{2/d})`
//! and the Vlasov energy.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::dump::{dump_spatial_function, DumpMeta};
use crate::grids::fft::ChirpZ;
use crate::grids::{
    fourier_phase, Domain, GridFunction, PhaseSpaceFunction, PhaseSpaceGrid, SpatialFunction,
    SpatialGrid, Spectrum,
};
use crate::orbitals::{ConvolutionKernel, InteractionSpec, TrapSpec};

/// `Γ(x)` for the half-integer and integer arguments that occur here.
fn gamma_half(x: f64) -> f64 {
    // x ∈ {1/2, 1, 3/2, ...}
    let mut g = if (x.fract() - 0.5).abs() < 1e-12 {
        std::f64::consts::PI.sqrt()
    } else {
        1.0
    };
    let mut t = if g == 1.0 { 1.0 } else { 0.5 };
    while t < x - 1e-12 {
        g *= t;
        t += 1.0;
    }
    g
}

/// `|S_{d-1}| = 2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(d as f64 / 2.0) / gamma_half(d as f64 / 2.0)
}

/// `C_TF = 4π²(d/|S_{d-1}|)^{2/d}`.
pub fn ctf(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::arg("dimension must be at least 1"));
    }
    let pi = std::f64::consts::PI;
    Ok(4.0 * pi * pi * (d as f64 / sphere_area(d)).powf(2.0 / d as f64))
}

/// `(μ, e_TF)` for `U = |x|²`, `V = 0`.
pub fn harmonic_closed_form(d: usize) -> Result<(f64, f64)> {
    let c = ctf(d)?;
    let df = d as f64;
    let pi = std::f64::consts::PI;
    let mu = (c.powf(df / 2.0) * gamma_half(df + 1.0)
        / (pi.powf(df / 2.0) * gamma_half(df / 2.0 + 1.0)))
    .powf(1.0 / df);
    Ok((mu, df * mu / (df + 1.0)))
}

fn check_density(rho: &SpatialFunction) -> Result<()> {
    if let Some(v) = rho.values().iter().find(|v| **v < 0.0) {
        return Err(Error::arg(format!("density has a negative value {v}")));
    }
    Ok(())
}

fn interaction_kernel(
    v: &InteractionSpec,
    grid: &SpatialGrid,
) -> Result<Option<ConvolutionKernel>> {
    v.kernel(grid)
}

/// Terms of `ℰ(ρ)`: pressure, trap, interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfTerms {
    pub pressure: f64,
    pub trap: f64,
    pub interaction: f64,
}

impl TfTerms {
    pub fn total(&self) -> f64 {
        self.pressure + self.trap + self.interaction
    }
}

pub fn tf_energy_terms(
    rho: &SpatialFunction,
    u: &TrapSpec,
    v: &InteractionSpec,
) -> Result<TfTerms> {
    check_density(rho)?;
    let grid = rho.grid();
    let d = grid.d();
    let df = d as f64;
    let vol = grid.cell_volume();
    let c = ctf(d)?;
    let us = u.sample(grid)?;
    let pressure = df / (df + 2.0)
        * c
        * rho
            .values()
            .iter()
            .map(|r| r.powf(1.0 + 2.0 / df))
            .sum::<f64>()
        * vol;
    let trap = rho
        .values()
        .iter()
        .zip(&us)
        .map(|(r, u)| r * u)
        .sum::<f64>()
        * vol;
    let interaction = match interaction_kernel(v, grid)? {
        None => 0.0,
        Some(k) => {
            let g: Vec<Complex64> = rho
                .values()
                .iter()
                .map(|&r| Complex64::new(r, 0.0))
                .collect();
            0.5 * k.quadratic_form(&g)
        }
    };
    Ok(TfTerms {
        pressure,
        trap,
        interaction,
    })
}

pub fn tf_energy(rho: &SpatialFunction, u: &TrapSpec, v: &InteractionSpec) -> Result<f64> {
    Ok(tf_energy_terms(rho, u, v)?.total())
}

#[derive(Clone, Debug)]
pub struct TFSolution {
    pub rho: SpatialFunction,
    pub mu: f64,
    pub e_tf: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `ℰ` after each fixed-point step
    pub energy_history: Vec<f64>,
}

#[derive(Serialize)]
struct TfSummary<'a> {
    mu: f64,
    e_tf: f64,
    residual: f64,
    iterations: usize,
    grid: DumpMeta,
    energy_history: &'a [f64],
}

impl TFSolution {
    pub fn grid(&self) -> &SpatialGrid {
        self.rho.grid()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TfSummary {
            mu: self.mu,
            e_tf: self.e_tf,
            residual: self.residual,
            iterations: self.iterations,
            grid: DumpMeta::spatial(self.grid(), "rho_tf"),
            energy_history: &self.energy_history,
        })
        .expect("plain data serializes")
    }

    /// `<dir>/tf_solution.json` plus the `rho_tf` dump.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("tf_solution.json"),
            serde_json::to_string_pretty(&self.to_json())?,
        )?;
        dump_spatial_function(&dir.join("rho_tf"), &self.rho, "rho_tf")
    }

    /// Radius of `{ρ > threshold}` along the first axis (d = 1 diagnostics).
    pub fn support(&self, threshold: f64) -> Option<(f64, f64)> {
        let pts = self.grid().points();
        let n = self.grid().n();
        let first = (0..n).find(|&j| self.rho.values()[j] > threshold)?;
        let last = (0..n).rev().find(|&j| self.rho.values()[j] > threshold)?;
        Some((pts[first], pts[last]))
    }
}

const SUPPORT_THRESHOLD: f64 = 1e-8;
const MAX_ITER: usize = 10_000;

/// `C^{-d/2}(μ - W)_+^{d/2}` with `μ` chosen for unit mass.
fn saturate(w: &[f64], c: f64, d: usize, vol: f64) -> Result<(Vec<f64>, f64)> {
    let half = d as f64 / 2.0;
    let scale = c.powf(-half);
    let mass = |mu: f64| {
        w.iter()
            .map(|&wi| if mu > wi { (mu - wi).powf(half) } else { 0.0 })
            .sum::<f64>()
            * scale
            * vol
    };
    let lo0 = w.iter().copied().fold(f64::INFINITY, f64::min);
    let top = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mass(top) < 1.0 {
        return Err(Error::Infeasible(format!(
            "unit mass needs a chemical potential above the largest potential value {top:.4} on the grid; enlarge the box"
        )));
    }
    let (mut lo, mut hi) = (lo0, lo0 + 1.0);
    while mass(hi) < 1.0 {
        hi = lo0 + 2.0 * (hi - lo0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let mut rho: Vec<f64> = w
        .iter()
        .map(|&wi| {
            if mu > wi {
                scale * (mu - wi).powf(half)
            } else {
                0.0
            }
        })
        .collect();
    let m: f64 = rho.iter().sum::<f64>() * vol;
    rho.iter_mut().for_each(|r| *r /= m);
    Ok((rho, mu))
}

/// Minimizes `ℰ` over `ρ ≥ 0`, `∫ρ = 1` on `grid` by damped fixed-point
/// iteration; `d = grid.d()`.
pub fn tf_solve(
    u: &TrapSpec,
    v: &InteractionSpec,
    grid: &SpatialGrid,
    tol: f64,
) -> Result<TFSolution> {
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    let d = grid.d();
    let c = ctf(d)?;
    let vol = grid.cell_volume();
    let us = u.sample(grid)?;
    let kernel = interaction_kernel(v, grid)?;
    let effective = |rho: &[f64]| -> Vec<f64> {
        match &kernel {
            None => us.clone(),
            Some(k) => k
                .convolve(rho)
                .iter()
                .zip(&us)
                .map(|(a, b)| a + b)
                .collect(),
        }
    };
    let energy =
        |rho: &[f64]| tf_energy(&GridFunction::from_parts(grid.clone(), rho.to_vec()), u, v);

    // the non-interacting minimizer is the starting point
    let (mut rho, mut mu) = saturate(&us, c, d, vol)?;
    let mut theta = 0.5;
    let mut history = vec![energy(&rho)?];
    let mut rises = 0;
    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    while iterations < MAX_ITER {
        iterations += 1;
        let (target, mu_t) = saturate(&effective(&rho), c, d, vol)?;
        last_update = rho
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * vol;
        mu = mu_t;
        if last_update < tol {
            rho = target;
            history.push(energy(&rho)?);
            break;
        }
        rho.iter_mut()
            .zip(&target)
            .for_each(|(r, t)| *r = (1.0 - theta) * *r + theta * t);
        let e = energy(&rho)?;
        if e > *history.last().expect("seeded") {
            rises += 1;
            if rises >= 2 {
                theta *= 0.5;
                rises = 0;
            }
        } else {
            rises = 0;
        }
        history.push(e);
    }
    if last_update >= tol {
        return Err(Error::NoConvergence {
            what: "Thomas-Fermi fixed point",
            iterations,
            residual: last_update,
        });
    }
    let w = effective(&rho);
    let residual = rho
        .iter()
        .zip(&w)
        .filter(|(r, _)| **r > SUPPORT_THRESHOLD)
        .map(|(r, wi)| (c * r.powf(2.0 / d as f64) + wi - mu).abs())
        .fold(0.0, f64::max);
    let rho = GridFunction::from_parts(grid.clone(), rho);
    let e_tf = *history.last().expect("seeded");
    Ok(TFSolution {
        rho,
        mu,
        e_tf,
        residual,
        iterations,
        energy_history: history,
    })
}

/// `f_ρ` sampled on a phase grid together with the density it came from.
#[derive(Clone, Debug)]
pub struct ClassicalState {
    rho: SpatialFunction,
    f: PhaseSpaceFunction,
}

/// `f_ρ(x,p) = 1(|p|² ≤ C_TF ρ(x)^{2/d})`. In d = 1 `ρ` is interpolated
/// linearly; in d = 2 the phase-space x points must be points of `ρ`'s grid.
pub fn classical_state(rho: &SpatialFunction, pgrid: &PhaseSpaceGrid) -> Result<ClassicalState> {
    check_density(rho)?;
    let d = pgrid.d();
    if rho.grid().d() != d {
        return Err(Error::arg("density and phase grid dimensions differ"));
    }
    let c = ctf(d)?;
    let xs = pgrid.spatial();
    let rho_x: Vec<f64> = if d == 1 {
        xs.points().iter().map(|&x| rho.interpolate(x)).collect()
    } else {
        if !rho.grid().contains_grid(xs) {
            return Err(Error::InvalidGrid(
                "phase-space x points must lie on the density grid".into(),
            ));
        }
        let src = rho.grid();
        let stride = (xs.spacing() / src.spacing()).round() as usize;
        let offset = ((xs.half_width() - src.half_width()).abs() / src.spacing()).round() as usize;
        let mut out = Vec::with_capacity(xs.len());
        for i in 0..xs.n() {
            for j in 0..xs.n() {
                out.push(rho.values()[(offset + i * stride) * src.n() + offset + j * stride]);
            }
        }
        out
    };
    let pf2: Vec<f64> = rho_x.iter().map(|r| c * r.powf(2.0 / d as f64)).collect();
    let np = pgrid.momentum().n();
    let nx = xs.n();
    let ps = pgrid.momentum().points();
    let values: Vec<f64> = if d == 1 {
        (0..nx * np)
            .map(|idx| {
                let p = ps[idx % np];
                if pf2[idx / np] > 0.0 && p * p <= pf2[idx / np] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        let per_x = np * np;
        (0..nx * nx * per_x)
            .map(|idx| {
                let rest = idx % per_x;
                let p2 = ps[rest / np].powi(2) + ps[rest % np].powi(2);
                if pf2[idx / per_x] > 0.0 && p2 <= pf2[idx / per_x] {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    Ok(ClassicalState {
        rho: rho.clone(),
        f: GridFunction::from_parts(pgrid.clone(), values),
    })
}

impl ClassicalState {
    pub fn function(&self) -> &PhaseSpaceFunction {
        &self.f
    }

    pub fn rho(&self) -> &SpatialFunction {
        &self.rho
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        self.f.grid()
    }

    /// `f̂` on the centered dual of the phase grid. In d = 1 the momentum
    /// integral is done exactly,
    /// `f̂(ξ,η) = (2π)^{-1}∫ e^{-iξx} 2 sin(η p_F(x))/η dx`,
    /// with the x integral on the density grid, which must share the box
    /// of the phase grid. Otherwise the sampled indicator is transformed.
    pub fn fourier(&self) -> Spectrum<PhaseSpaceGrid> {
        let pgrid = self.grid();
        let src = self.rho.grid();
        if pgrid.d() != 1 || (src.half_width() - pgrid.spatial().half_width()).abs() > 1e-12 {
            return fourier_phase(&self.f);
        }
        let c = ctf(1).expect("d = 1");
        let pts = src.points();
        let pf: Vec<f64> = self
            .rho
            .values()
            .iter()
            .map(|r| (c * r * r).sqrt())
            .collect();
        let (Some(lo), Some(hi)) = (
            pf.iter().position(|&v| v > 0.0),
            pf.iter().rposition(|&v| v > 0.0),
        ) else {
            return Spectrum::from_parts(pgrid.clone(), vec![Complex64::default(); pgrid.len()]);
        };
        let xa = pgrid.x_axis();
        let pa = pgrid.p_axis();
        let (nx, np) = (xa.n, pa.n);
        let hf = src.spacing();
        let x0 = pts[lo];
        let xi0 = xa.frequency(0);
        let dxi = xa.dual_spacing();
        let inputs = hi - lo + 1;
        let chirp = ChirpZ::new(inputs, nx, dxi * hf);
        // e^{-iξ_k x_j} = e^{-iξ_k x_0} e^{-iξ_0 j h} e^{-iΔξ h k j}
        let pre: Vec<Complex64> = (0..inputs)
            .map(|j| Complex64::from_polar(1.0, -xi0 * j as f64 * hf))
            .collect();
        let post: Vec<Complex64> = (0..nx)
            .map(|k| {
                Complex64::from_polar(hf / (2.0 * std::f64::consts::PI), -xa.frequency(k) * x0)
            })
            .collect();
        let mut values = vec![Complex64::default(); nx * np];
        let mut work = Vec::new();
        let mut row = vec![Complex64::default(); nx];
        let mut input = vec![Complex64::default(); inputs];
        for m in 0..np {
            let eta = pa.frequency(m);
            for (j, slot) in input.iter_mut().enumerate() {
                let p = pf[lo + j];
                let g = if eta == 0.0 {
                    2.0 * p
                } else {
                    2.0 * (eta * p).sin() / eta
                };
                *slot = pre[j] * g;
            }
            chirp.apply(&input, &mut work, &mut row);
            for k in 0..nx {
                values[k * np + m] = row[k] * post[k];
            }
        }
        Spectrum::from_parts(pgrid.clone(), values)
    }
}

/// `(2π)^{-d}∫p²f + ∫ρ_f U + ½∬ρ_f V ρ_f`, `ρ_f = (2π)^{-d}∫f dp`.
pub fn vlasov_energy(f: &PhaseSpaceFunction, u: &TrapSpec, v: &InteractionSpec) -> Result<f64> {
    let pgrid = f.grid();
    let d = pgrid.d();
    let xs = pgrid.spatial();
    let ps = pgrid.momentum();
    let two_pi_d = (2.0 * std::f64::consts::PI).powi(d as i32);
    let per_x = ps.len();
    let p2 = ps.radius_sq();
    let dp = ps.cell_volume();
    let mut rho = vec![0.0; xs.len()];
    let mut kinetic = 0.0;
    for (i, r) in rho.iter_mut().enumerate() {
        let row = &f.values()[i * per_x..(i + 1) * per_x];
        *r = row.iter().sum::<f64>() * dp / two_pi_d;
        kinetic += row.iter().zip(&p2).map(|(a, b)| a * b).sum::<f64>();
    }
    kinetic *= pgrid.cell_volume() / two_pi_d;
    let rho_f = GridFunction::from_parts(xs.clone(), rho);
    let terms = tf_energy_terms(&rho_f, u, v)?;
    Ok(kinetic + terms.trap + terms.interaction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::{integrate, make_phase_grid};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn constants() {
        assert!((ctf(1).unwrap() - PI * PI).abs() < 1e-12);
        assert!((ctf(2).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((ctf(3).unwrap() - 15.19).abs() < 5e-3);
        let (mu, e) = harmonic_closed_form(1).unwrap();
        assert!((mu - 2.0).abs() < 1e-12 && (e - 1.0).abs() < 1e-12);
        // d = 2: ρ = (μ - r²)/(4π), mass πμ²/(8π) = 1
        let (mu2, _) = harmonic_closed_form(2).unwrap();
        assert!((mu2 - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn energy_of_closed_form_minimizer() {
        let g = SpatialGrid::new(1, 8.0, 8192).unwrap();
        let rho = GridFunction::from_fn(g, |x| (2.0 - x[0] * x[0]).max(0.0).sqrt() / PI);
        let t = tf_energy_terms(&rho, &TrapSpec::Harmonic, &InteractionSpec::None).unwrap();
        assert!(
            (t.pressure - 0.5).abs() < 1e-4 && (t.trap - 0.5).abs() < 1e-4,
            "{t:?}"
        );
        assert!((t.total() - 1.0).abs() < 1e-4);
        let neg = GridFunction::from_fn(SpatialGrid::new(1, 2.0, 8).unwrap(), |x| x[0]);
        assert!(tf_energy(&neg, &TrapSpec::Harmonic, &InteractionSpec::None).is_err());
    }

    #[test]
    fn harmonic_solve() {
        let g = SpatialGrid::new(1, 8.0, 1024).unwrap();
        let s = tf_solve(&TrapSpec::Harmonic, &InteractionSpec::None, &g, 1e-10).unwrap();
        assert!((s.mu - 2.0).abs() < 1e-3, "{}", s.mu);
        assert!((s.e_tf - 1.0).abs() < 1e-3);
        assert!((s.rho.values()[512] - 2f64.sqrt() / PI).abs() < 1e-3);
        assert!((integrate(&s.rho) - 1.0).abs() < 1e-10);
        let (a, b) = s.support(0.0).unwrap();
        assert!((a + 2f64.sqrt()).abs() <= g.spacing() && (b - 2f64.sqrt()).abs() <= g.spacing());
        assert!(s.residual < 1e-9);
        let fine = tf_solve(
            &TrapSpec::Harmonic,
            &InteractionSpec::None,
            &SpatialGrid::new(1, 8.0, 2048).unwrap(),
            1e-10,
        )
        .unwrap();
        assert!((fine.e_tf - s.e_tf).abs() < 1e-4);
    }

    #[test]
    fn higher_dimensional_closed_forms() {
        for (d, n) in [(2usize, 256usize), (3, 64)] {
            let g = SpatialGrid::new(d, 4.0, n).unwrap();
            let s = tf_solve(&TrapSpec::Harmonic, &InteractionSpec::None, &g, 1e-10).unwrap();
            let (mu, e) = harmonic_closed_form(d).unwrap();
            assert!((s.mu - mu).abs() / mu < 2e-2, "d={d}: {} vs {mu}", s.mu);
            assert!((s.e_tf - e).abs() / e < 2e-2, "d={d}: {} vs {e}", s.e_tf);
        }
        let g = SpatialGrid::new(2, 4.0, 16).unwrap();
        let v = InteractionSpec::Gaussian {
            strength: 1.0,
            width: 1.0,
        };
        assert!(matches!(
            tf_solve(&TrapSpec::Harmonic, &v, &g, 1e-8),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn infeasible_box() {
        let g = SpatialGrid::new(1, 0.5, 64).unwrap();
        let u = TrapSpec::Polynomial {
            coefficients: vec![0.0, 0.0, 10.0],
        };
        assert!(matches!(
            tf_solve(&u, &InteractionSpec::None, &g, 1e-8),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn interacting_solve_is_minimal() {
        let g = SpatialGrid::new(1, 8.0, 512).unwrap();
        let v = InteractionSpec::Gaussian {
            strength: 1.0,
            width: 1.0,
        };
        let s = tf_solve(&TrapSpec::Harmonic, &v, &g, 1e-10).unwrap();
        assert!(s.e_tf > 1.0);
        assert!(s.residual < 1e-8, "{}", s.residual);
        let h = &s.energy_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let terms = tf_energy_terms(&s.rho, &TrapSpec::Harmonic, &v).unwrap();
        assert!(terms.interaction >= 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut p: Vec<f64> = s
                .rho
                .values()
                .iter()
                .map(|r| (r + 0.02 * rng.gen_range(-1.0..1.0) * (r + 1e-3)).max(0.0))
                .collect();
            let m: f64 = p.iter().sum::<f64>() * g.spacing();
            p.iter_mut().for_each(|v| *v /= m);
            let e = tf_energy(
                &GridFunction::new(g.clone(), p).unwrap(),
                &TrapSpec::Harmonic,
                &v,
            )
            .unwrap();
            assert!(e >= s.e_tf);
        }
    }

    #[test]
    fn classical_state_of_harmonic_minimizer() {
        let g = SpatialGrid::new(1, 8.0, 1024).unwrap();
        let s = tf_solve(&TrapSpec::Harmonic, &InteractionSpec::None, &g, 1e-10).unwrap();
        let pg = make_phase_grid(1, 8.0, 8.0, 1024, 1024).unwrap();
        let cs = classical_state(&s.rho, &pg).unwrap();
        let f = cs.function();
        assert!(f.values().iter().all(|&v| v == 0.0 || v == 1.0));
        for p in [1.0f64, 2.0, 4.0] {
            let lp = (f.values().iter().sum::<f64>() * pg.cell_volume()).powf(1.0 / p);
            assert!((lp / (2.0 * PI).powf(1.0 / p) - 1.0).abs() < 5e-3, "{lp}");
        }
        let vl = vlasov_energy(f, &TrapSpec::Harmonic, &InteractionSpec::None).unwrap();
        assert!((vl - s.e_tf).abs() < 1e-3, "{vl} vs {}", s.e_tf);
        let zero = GridFunction::zeros(pg);
        assert_eq!(
            vlasov_energy(&zero, &TrapSpec::Harmonic, &InteractionSpec::None).unwrap(),
            0.0
        );
    }

    fn bessel_j1(z: f64) -> f64 {
        let mut term = z / 2.0;
        let mut sum = term;
        for m in 1..60 {
            term *= -(z * z / 4.0) / (m as f64 * (m + 1) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn semi_analytic_transform_of_disk() {
        // disk of radius √2: f̂(ζ) = √2 J_1(√2|ζ|)/|ζ|
        let fine = SpatialGrid::new(1, 8.0, 16384).unwrap();
        let s = tf_solve(&TrapSpec::Harmonic, &InteractionSpec::None, &fine, 1e-10).unwrap();
        let pg = make_phase_grid(1, 8.0, 8.0, 512, 512).unwrap();
        let cs = classical_state(&s.rho, &pg).unwrap();
        let spec = cs.fourier();
        let (xa, pa) = (pg.x_axis(), pg.p_axis());
        let r = 2f64.sqrt();
        let mut worst = 0.0f64;
        // keep √2|ζ| below ~16 where the power series is accurate
        for k in (236..=276).step_by(2) {
            for m in (236..=276).step_by(3) {
                let z = xa.frequency(k).hypot(pa.frequency(m));
                let exact = if z == 0.0 {
                    1.0
                } else {
                    r * bessel_j1(r * z) / z
                };
                worst = worst.max((spec.values()[k * 512 + m] - exact).norm());
            }
        }
        assert!(worst < 1e-4, "{worst}");
        let sampled = fourier_phase(cs.function());
        assert!((sampled.at_origin() - spec.at_origin()).norm() < 1e-2);
    }
}
