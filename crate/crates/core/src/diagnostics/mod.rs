//! N-sweeps over Slater ground states: convergence of Wigner and Husimi
//! functions to the classical state, exact identities, moments, k-particle
//! norms and energies, collected into tables with pass/fail verdicts.

mod config;
mod report;

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{GridSection, ModulusSpec, NormsSection, OutputSection, RunConfig, RunSection};
pub use report::{
    format_series, strictly_decreasing, trend_assertion, Assertion, ReportRow, ReportTable,
    TREND_FLOOR,
};

use crate::density::{gamma1, gamma_k_hs_sq, gamma_k_trace, moment_trace, KParticleDensity};
use crate::error::{Error, Result};
use crate::grids::dump::{dump_phase_function, dump_spatial_function};
use crate::grids::{
    fourier_phase, integrate, make_phase_grid, Domain, GridFunction, KPhaseGrid, PhaseSpaceGrid,
    SpatialGrid, Spectrum,
};
use crate::husimi::{mollify, MollifierSpec};
use crate::norms::{
    holder_seminorm_gaussian, lp_norm, power_translation_defects, sobolev_norm_spectrum,
    translation_modulus, NormSpec,
};
use crate::orbitals::{
    hermite_basis, scf_slater, semiclassical_hbar, slater_energy_terms, solve_trap, SlaterState,
    TrapSpec,
};
use crate::thomas_fermi::{
    classical_state, harmonic_closed_form, tf_energy, tf_solve, vlasov_energy, TFSolution,
};
use crate::wigner::{
    groenewold, groenewold_row, ratio_to_f64, wigner_k, wigner_transform_complex, WeylPoint,
};

/// Exact-identity tolerances.
pub const TOL_TRACE: f64 = 1e-8;
pub const TOL_PROJECTION: f64 = 1e-8;
pub const TOL_HS: f64 = 1e-8;
pub const TOL_UNITARITY: f64 = 1e-6;
pub const TOL_GROENEWOLD: f64 = 1e-8;
pub const TOL_MASS: f64 = 1e-8;
pub const TOL_HUSIMI: f64 = 1e-6;
pub const TOL_L2_IDENTITY: f64 = 1e-2;
pub const TOL_MOLLIFIER: f64 = 1e-3;
pub const TOL_ENERGY: f64 = 1e-6;
pub const TOL_ENERGY_RATIO: f64 = 5e-2;
pub const TOL_TF: f64 = 1e-3;
pub const TOL_EULER_LAGRANGE: f64 = 1e-6;
pub const TOL_MOMENT_TRACE: f64 = 1e-6;
pub const MOMENT_RATIO_MAX: f64 = 2.0;

fn two_pi() -> f64 {
    2.0 * PI
}

/// Slater ground state at `n` for the configured trap: the Hermite basis
/// for the harmonic benchmark, finite differences otherwise, and the
/// Hartree loop when an interaction is present.
pub fn build_state(config: &RunConfig, n: usize) -> Result<SlaterState> {
    build_state_traced(config, n).map(|(s, _)| s)
}

/// As [`build_state`], also returning the self-consistent loop's final
/// residual and iteration count when one ran.
pub fn build_state_traced(
    config: &RunConfig,
    n: usize,
) -> Result<(SlaterState, Option<(f64, usize)>)> {
    let run = || -> Result<(SlaterState, Option<(f64, usize)>)> {
        let grid = config.orbital_grid(n)?;
        let hbar = semiclassical_hbar(n, config.run.d);
        if config.uses_hermite() {
            Ok((hermite_basis(n, hbar, &grid)?, None))
        } else if config.interaction.is_none() {
            Ok((solve_trap(&config.trap, n, &grid, hbar)?, None))
        } else {
            let o = scf_slater(
                &config.trap,
                &config.interaction,
                n,
                &grid,
                config.scf_params(),
            )?;
            Ok((o.state, Some((o.residual, o.iterations))))
        }
    };
    run().map_err(|e| e.at_n(n))
}

/// The limiting density on the fine grid, solved once per configuration.
pub fn solve_limit(config: &RunConfig) -> Result<TFSolution> {
    tf_solve(
        &config.trap,
        &config.interaction,
        &config.tf_grid()?,
        config.run.tf_tol,
    )
}

fn spectra_diff(
    a: &Spectrum<PhaseSpaceGrid>,
    b: &Spectrum<PhaseSpaceGrid>,
) -> Spectrum<PhaseSpaceGrid> {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    Spectrum::from_parts(a.grid().clone(), values)
}

fn moment_norm(f: &GridFunction<PhaseSpaceGrid, f64>, m: u32) -> f64 {
    let g = f.grid();
    let xs = g.spatial().points();
    let ps = g.momentum().points();
    let np = ps.len();
    let sum: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let w = (xs[idx / np].abs() + ps[idx % np].abs()).powi(m as i32);
            (w * v).powi(2)
        })
        .sum();
    (sum * g.cell_volume()).sqrt()
}

/// Column names of the sweep table for `config`.
pub fn sweep_columns(config: &RunConfig) -> Vec<String> {
    let mut c: Vec<String> = [
        "N",
        "hbar",
        "grid_points",
        "trace",
        "projection_defect",
        "hs_norm",
        "wigner_unitarity",
        "wigner_imag_max",
        "groenewold_origin",
        "groenewold_sup",
        "groenewold_row_defect",
        "husimi_mass",
        "husimi_min",
        "husimi_max",
        "wigner_min",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for p in &config.norms.lp {
        c.push(format!("fN_L{p}"));
        c.push(format!("fN_L{p}_gap"));
        c.push(format!("fN_minus_f_L{p}"));
        c.push(format!("mN_minus_f_L{p}"));
    }
    for s in &config.norms.sobolev {
        c.push(format!("fN_minus_f_{}", s.label()));
    }
    for s in &config.norms.mollifier_s {
        c.push(format!("fN_minus_mN_Wm{s}_inf"));
        c.push(format!("mollifier_bound_s{s}"));
    }
    c.push("moment_trace_per_N".into());
    c.push(format!("moment_norm_m{}", config.norms.moment_m));
    if config.norms.modulus.enabled {
        c.push("translation_modulus".into());
    }
    c.extend(
        ["energy_per_N", "e_tf", "energy_ratio"]
            .iter()
            .map(|s| s.to_string()),
    );
    c
}

struct RowContext<'a> {
    config: &'a RunConfig,
    tf: &'a TFSolution,
    holder: Vec<f64>,
    dump_dir: Option<&'a Path>,
}

fn sweep_row(ctx: &RowContext, n: usize) -> Result<(Vec<f64>, String)> {
    let config = ctx.config;
    let d = config.run.d;
    let hbar = semiclassical_hbar(n, d);
    let pg = config.phase_grid(n)?;
    let state = build_state(config, n)?;
    let gamma = gamma1(&state);
    let mut row = vec![n as f64, hbar, pg.spatial().n() as f64];
    row.push(gamma.trace());
    row.push(gamma.projection_defect());
    let hs = gamma.hs_norm();
    row.push(hs);

    let wc = wigner_transform_complex(&gamma, &pg)?;
    let imag = wc.values().iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
    let f = wc.map(|v| v.re);
    drop(wc);
    let f_l2 = lp_norm(&f, 2.0)?;
    row.push(f_l2 * f_l2 / ((two_pi() * hbar).powi(d as i32) * hs * hs));
    row.push(imag);

    let spec_f = fourier_phase(&f);
    row.push(groenewold(&gamma, &WeylPoint::origin(d))?.re);
    row.push(spec_f.values().iter().fold(0.0f64, |a, v| a.max(v.norm())));
    row.push(groenewold_row_defect(&gamma, &spec_f)?);

    let alpha = config.norms.mollifier_alpha;
    let m_n = mollify(&f, hbar, MollifierSpec::new(alpha)?)?;
    row.push(integrate(&m_n) / two_pi().powi(d as i32));
    row.push(m_n.min());
    row.push(m_n.max());
    row.push(f.min());

    let classical = classical_state(&ctx.tf.rho, &pg)?;
    let fc = classical.function();
    for &p in &config.norms.lp {
        let norm = lp_norm(&f, p)?;
        row.push(norm);
        row.push(norm - two_pi().powf(d as f64 / p));
        row.push(lp_norm(&f.sub(fc), p)?);
        row.push(lp_norm(&m_n.sub(fc), p)?);
    }
    let spec_c = classical.fourier();
    let diff = spectra_diff(&spec_f, &spec_c);
    drop(spec_c);
    for s in &config.norms.sobolev {
        let NormSpec::Sobolev { s, q } = *s else {
            unreachable!("validated")
        };
        row.push(sobolev_norm_spectrum(&diff, s, q)?);
    }
    drop(diff);
    let var = MollifierSpec::new(alpha)?.variance(hbar);
    let z2 = spec_f.frequency_sq();
    for (&s, &c) in config.norms.mollifier_s.iter().zip(&ctx.holder) {
        let gap = spec_f
            .values()
            .iter()
            .zip(&z2)
            .map(|(v, k2)| -(-0.5 * var * k2).exp_m1() * v.norm() * (1.0 + k2).powf(-0.5 * s))
            .fold(0.0, f64::max);
        row.push(gap);
        row.push(c * hbar.powf(alpha * s));
    }
    row.push(moment_trace(&state)? / n as f64);
    row.push(moment_norm(&f, config.norms.moment_m));
    if config.norms.modulus.enabled {
        let m = &config.norms.modulus;
        let value = if m.p == 2.0 {
            modulus_from_spectrum(&spec_f, m.r, m.q, hbar)
        } else {
            translation_modulus(&f, m.p, m.r, m.q, hbar)?
        };
        row.push(value);
    }
    drop(spec_f);

    let (energy, how) = match (config.interaction.is_none(), state.levels()) {
        (true, Some(levels)) => (levels.iter().sum::<f64>() / n as f64, "energy:levels"),
        _ => (
            slater_energy_terms(&state, &config.trap, &config.interaction)?.total() / n as f64,
            "energy:quadrature",
        ),
    };
    row.push(energy);
    row.push(ctx.tf.e_tf);
    row.push(energy / ctx.tf.e_tf);

    if let Some(dir) = ctx.dump_dir {
        dump_phase_function(&dir.join(format!("wigner_N{n}")), &f, "wigner")?;
        dump_phase_function(&dir.join(format!("husimi_N{n}")), &m_n, "husimi")?;
        dump_phase_function(&dir.join(format!("classical_N{n}")), fc, "classical")?;
        let rho = GridFunction::new(state.grid().clone(), state.density())?;
        dump_spatial_function(&dir.join(format!("density_N{n}")), &rho, "density")?;
    }
    Ok((row, format!("grid;{how}")))
}

/// `‖ ‖f - f(·+ħz)‖_{L²}/|z|^r ‖_{L^q(dz)}` reusing a computed transform.
fn modulus_from_spectrum(spec: &Spectrum<PhaseSpaceGrid>, r: f64, q: f64, hbar: f64) -> f64 {
    use crate::norms::{modulus_sample, MODULUS_DIRECTIONS, MODULUS_MAX_RADIUS, MODULUS_RADII};
    let zs = modulus_sample(hbar);
    let shifts: Vec<[f64; 2]> = zs.iter().map(|z| [hbar * z[0], hbar * z[1]]).collect();
    let defects = power_translation_defects(spec, &shifts);
    let vals = defects
        .iter()
        .zip(&zs)
        .map(|(v, z)| v / z[0].hypot(z[1]).powf(r));
    if q.is_infinite() {
        return vals.fold(0.0, f64::max);
    }
    let dlog = (MODULUS_MAX_RADIUS / hbar).ln() / (MODULUS_RADII - 1) as f64;
    let dth = 2.0 * PI / MODULUS_DIRECTIONS as f64;
    let sum: f64 = vals
        .zip(&zs)
        .enumerate()
        .map(|(idx, (v, z))| {
            let i = idx % MODULUS_RADII;
            let end = if i == 0 || i == MODULUS_RADII - 1 {
                0.5
            } else {
                1.0
            };
            v.powf(q) * (z[0] * z[0] + z[1] * z[1]) * end * dlog * dth
        })
        .sum();
    sum.powf(1.0 / q)
}

/// Largest difference between the trace route and the grid transform of
/// `f_N` over a few momentum-dual rows.
fn groenewold_row_defect(
    gamma: &crate::density::DensityKernel,
    spec: &Spectrum<PhaseSpaceGrid>,
) -> Result<f64> {
    let pg = spec.grid();
    let (xa, pa) = (pg.x_axis(), pg.p_axis());
    let n_o = gamma.grid().n();
    let offset = (n_o - xa.n) / 2;
    let reach = 0.5 * gamma.grid().half_width() / gamma.hbar();
    let mut worst = 0.0f64;
    for frac in [0.5, 0.53, 0.6, 0.75] {
        let m = (frac * pa.n as f64) as usize;
        let eta = pa.frequency(m);
        if eta.abs() > reach {
            continue;
        }
        let row = groenewold_row(gamma, eta)?;
        for k in 0..xa.n {
            worst = worst.max((row[k + offset] - spec.values()[k * pa.n + m]).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TfInfo {
    pub mu: f64,
    pub e_tf: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Sweep table, its verdicts and the limiting-state summary.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub table: ReportTable,
    pub tf: TfInfo,
    pub assertions: Vec<Assertion>,
    pub timings: Vec<Timing>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Builds every row of the sweep (rows in parallel), against the
/// classical state of the Thomas–Fermi minimizer.
pub fn converge_suite(config: &RunConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    if config.run.d != 1 {
        return Err(Error::UnsupportedDimension {
            op: "converge_suite",
            d: config.run.d,
        });
    }
    let t0 = Instant::now();
    let tf = solve_limit(config)?;
    let mut timings = vec![Timing {
        stage: "thomas_fermi".into(),
        seconds: t0.elapsed().as_secs_f64(),
    }];
    let holder = config
        .norms
        .mollifier_s
        .iter()
        .map(|&s| holder_seminorm_gaussian(s))
        .collect::<Result<Vec<f64>>>()?;
    let dump_dir = if config.output.dumps {
        let dir = Path::new(&config.output.dir);
        std::fs::create_dir_all(dir)?;
        dump_spatial_function(&dir.join("rho_tf"), &tf.rho, "rho_tf")?;
        Some(dir)
    } else {
        None
    };
    let ctx = RowContext {
        config,
        tf: &tf,
        holder,
        dump_dir,
    };
    let list = config.n_list();
    let rows: Vec<(usize, f64, Result<(Vec<f64>, String)>)> = list
        .par_iter()
        .map(|&n| {
            let t = Instant::now();
            let r = sweep_row(&ctx, n).map_err(|e| match e {
                e @ Error::AtParticleNumber { .. } => e,
                e => e.at_n(n),
            });
            (n, t.elapsed().as_secs_f64(), r)
        })
        .collect();
    let mut table = ReportTable::new("sweep", sweep_columns(config));
    for (n, secs, r) in rows {
        let (values, prov) = r?;
        table.push(values, &prov);
        timings.push(Timing {
            stage: format!("row N={n}"),
            seconds: secs,
        });
    }
    let assertions = assess_sweep(config, &table);
    Ok(ConvergenceReport {
        table,
        tf: TfInfo {
            mu: tf.mu,
            e_tf: tf.e_tf,
            residual: tf.residual,
            iterations: tf.iterations,
        },
        assertions,
        timings,
    })
}

fn each_row(table: &ReportTable, col: &str, ok: impl Fn(f64) -> bool) -> Option<(bool, Vec<f64>)> {
    let v = table.column(col)?;
    Some((v.iter().all(|&x| ok(x)), v))
}

/// Verdicts over a sweep table; absent columns are skipped.
pub fn assess_sweep(config: &RunConfig, table: &ReportTable) -> Vec<Assertion> {
    let mut out = Vec::new();
    let d = config.run.d as i32;
    let ns = table.column("N").unwrap_or_default();
    let mut per_row = |name: &str, col: &str, ok: &dyn Fn(f64, f64) -> bool, what: &str| {
        if let Some(v) = table.column(col) {
            let passed = v.iter().zip(&ns).all(|(&x, &n)| ok(x, n));
            out.push(Assertion::new(
                name,
                passed,
                format!("{col} {} ({what})", format_series(&v)),
            ));
        }
    };
    per_row(
        "trace",
        "trace",
        &|x, n| (x - n).abs() <= TOL_TRACE,
        "Tr γ = N",
    );
    per_row(
        "projection",
        "projection_defect",
        &|x, _| x <= TOL_PROJECTION,
        "‖γ² - γ‖_HS",
    );
    per_row(
        "hs_norm",
        "hs_norm",
        &|x, n| (x - n.sqrt()).abs() <= TOL_HS,
        "‖γ‖_HS = √N",
    );
    per_row(
        "wigner_unitarity",
        "wigner_unitarity",
        &|x, _| (x - 1.0).abs() <= TOL_UNITARITY,
        "ratio 1",
    );
    per_row(
        "groenewold_origin",
        "groenewold_origin",
        &|x, _| (x - 1.0).abs() <= TOL_GROENEWOLD,
        "f̂(0) = 1",
    );
    per_row(
        "groenewold_bound",
        "groenewold_sup",
        &|x, _| x <= 1.0 + TOL_GROENEWOLD,
        "|f̂| <= 1",
    );
    per_row(
        "husimi_mass",
        "husimi_mass",
        &|x, _| (x - 1.0).abs() <= TOL_MASS,
        "(2π)^{-d}∫m = 1",
    );
    per_row(
        "husimi_lower",
        "husimi_min",
        &|x, _| x >= -TOL_HUSIMI,
        "m >= 0",
    );
    per_row(
        "husimi_upper",
        "husimi_max",
        &|x, _| x <= 1.0 + TOL_HUSIMI,
        "m <= 1",
    );
    if config.norms.lp.contains(&2.0) {
        let target = two_pi().powf(d as f64 / 2.0);
        per_row(
            "l2_identity",
            "fN_L2",
            &|x, _| (x / target - 1.0).abs() <= TOL_L2_IDENTITY,
            "‖f_N‖_L2 = (2π)^{d/2}",
        );
    }
    for &p in &config.norms.lp {
        if let Some(v) = table.column(&format!("mN_minus_f_L{p}")) {
            out.push(trend_assertion(
                &format!("husimi_convergence_L{p}"),
                &v,
                v[0],
                Some(0.5),
            ));
        }
    }
    for s in &config.norms.sobolev {
        let col = format!("fN_minus_f_{}", s.label());
        if let Some(v) = table.column(&col) {
            out.push(trend_assertion(
                &format!("wigner_weak_convergence_{}", s.label()),
                &v,
                v[0],
                None,
            ));
        }
    }
    for &s in &config.norms.mollifier_s {
        if let (Some(gap), Some(bound)) = (
            table.column(&format!("fN_minus_mN_Wm{s}_inf")),
            table.column(&format!("mollifier_bound_s{s}")),
        ) {
            let passed = gap.iter().zip(&bound).all(|(g, b)| *g <= b + TOL_MOLLIFIER);
            out.push(Assertion::new(
                &format!("mollifier_bound_s{s}"),
                passed,
                format!(
                    "gap {} vs bound {}",
                    format_series(&gap),
                    format_series(&bound)
                ),
            ));
        }
    }
    if let (Some(gap), Some(diff)) = (table.column("fN_L1_gap"), table.column("fN_minus_f_L1")) {
        let a = strictly_decreasing(&gap, two_pi().powi(d));
        let b = strictly_decreasing(&diff, diff[0]);
        out.push(Assertion::new(
            "l1_gap_equivalence",
            a && b,
            format!(
                "gap ‖f_N‖_L1 - (2π)^d {} decreasing: {a}; ‖f_N - f‖_L1 {} decreasing: {b}",
                format_series(&gap),
                format_series(&diff)
            ),
        ));
    }
    let moment_col = format!("moment_norm_m{}", config.norms.moment_m);
    if let Some(v) = table.column(&moment_col) {
        let ratio =
            v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(Assertion::new(
            "moment_bound",
            ratio <= MOMENT_RATIO_MAX,
            format!("{moment_col} {} max/min {ratio:.4}", format_series(&v)),
        ));
    }
    if config.is_harmonic_benchmark() {
        if let Some((ok, v)) = each_row(table, "moment_trace_per_N", |x| {
            (x - 1.0).abs() <= TOL_MOMENT_TRACE
        }) {
            out.push(Assertion::new(
                "moment_trace",
                ok,
                format!("Tr((x²+p²)γ)/N {}", format_series(&v)),
            ));
        }
        if let Some((ok, v)) = each_row(table, "energy_per_N", |x| (x - 1.0).abs() <= TOL_ENERGY) {
            out.push(Assertion::new(
                "energy_per_particle",
                ok,
                format!("E/N {}", format_series(&v)),
            ));
        }
    }
    out
}

/// Per-N `‖f_N‖_{L^p} - (2π)^{d/p}` next to `‖f_N - f‖_{L^p}`.
pub fn lp_gap_table(report: &ReportTable, p: f64, d: usize) -> Result<ReportTable> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::arg(format!("p must lie in [1, 2], got {p}")));
    }
    let missing = || Error::arg(format!("report lacks the L{p} columns"));
    let ns = report.column("N").ok_or_else(missing)?;
    let norms = report.column(&format!("fN_L{p}")).ok_or_else(missing)?;
    let diffs = report
        .column(&format!("fN_minus_f_L{p}"))
        .ok_or_else(missing)?;
    let target = two_pi().powf(d as f64 / p);
    let mut t = ReportTable::new(
        "lp_gap",
        vec![
            "N".into(),
            "p".into(),
            "fN_Lp".into(),
            "target".into(),
            "gap".into(),
            "fN_minus_f_Lp".into(),
        ],
    );
    for i in 0..ns.len() {
        t.push(
            vec![ns[i], p, norms[i], target, norms[i] - target, diffs[i]],
            "grid",
        );
    }
    Ok(t)
}

/// Moment norms per N with the bounded-ratio verdict and the admissible
/// exponent range `(2/(1 + 2m/d), 2]`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentsDiagnostic {
    pub m: u32,
    pub d: usize,
    pub n: Vec<f64>,
    pub norms: Vec<f64>,
    pub ratio: f64,
    pub bounded: bool,
    pub interval_low: f64,
    pub interval_label: String,
}

pub fn admissible_interval(m: u32, d: usize) -> (f64, String) {
    let low = 2.0 / (1.0 + 2.0 * m as f64 / d as f64);
    let label = if low < 1.0 {
        "p ∈ [1,2]".to_string()
    } else {
        format!("p ∈ ({},2]", trim_float(low))
    };
    (low, label)
}

fn trim_float(v: f64) -> String {
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn moments_diagnostic(report: &ReportTable, m: u32, d: usize) -> Result<MomentsDiagnostic> {
    let col = format!("moment_norm_m{m}");
    let norms = report
        .column(&col)
        .ok_or_else(|| Error::arg(format!("report lacks {col}")))?;
    let n = report
        .column("N")
        .ok_or_else(|| Error::arg("report lacks N"))?;
    let ratio = norms.iter().copied().fold(0.0, f64::max)
        / norms.iter().copied().fold(f64::INFINITY, f64::min);
    let (interval_low, interval_label) = admissible_interval(m, d);
    Ok(MomentsDiagnostic {
        m,
        d,
        n,
        norms,
        ratio,
        bounded: ratio <= MOMENT_RATIO_MAX,
        interval_low,
        interval_label,
    })
}

/// `‖f^{(k)}_N‖²_{L²} / (2π)^{dk} = k! N^k (N-k)!/N!` as an exact ratio.
pub fn fk_l2_sq_ratio(n: usize, k: usize) -> Result<(BigUint, BigUint)> {
    if k == 0 || k > n {
        return Err(Error::arg(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    let kfact = (1..=k).fold(BigUint::from(1u32), |a, m| a * BigUint::from(m));
    let num = kfact * BigUint::from(n).pow(k as u32);
    let den = ((n - k + 1)..=n).fold(BigUint::from(1u32), |a, m| a * BigUint::from(m));
    Ok((num, den))
}

pub fn fk_l2_formula(n: usize, k: usize, d: usize) -> Result<f64> {
    let (num, den) = fk_l2_sq_ratio(n, k)?;
    Ok(two_pi().powf((d * k) as f64 / 2.0) * ratio_to_f64(&num, &den).sqrt())
}

/// Order-2 grid check of `‖f^{(2)}_N‖_{L²}` (d = 1).
#[derive(Clone, Debug)]
pub struct KGridCheck {
    pub orbital_half_width: f64,
    pub orbital_points: usize,
    pub half_width: f64,
    pub points: usize,
    pub max_n: usize,
}

impl KGridCheck {
    pub fn from_config(config: &RunConfig) -> Self {
        KGridCheck {
            orbital_half_width: config.grid.half_width_x,
            orbital_points: config.grid.n,
            half_width: config.grid.k_half_width,
            points: config.grid.k_points,
            max_n: config.grid.k_check_max_n,
        }
    }

    pub fn norm(&self, n: usize) -> Result<f64> {
        let og = SpatialGrid::new(1, self.orbital_half_width, self.orbital_points)?;
        let state = hermite_basis(n, semiclassical_hbar(n, 1), &og)?;
        let axis = SpatialGrid::coarse(1, self.half_width, self.points)?;
        let base = PhaseSpaceGrid::new(axis.clone(), axis)?;
        let kg = KPhaseGrid::new(base, 2)?;
        let f2 = wigner_k(&KParticleDensity::new(state, 2)?, &kg)?;
        lp_norm(&f2, 2.0)
    }
}

/// k-particle table: exact `‖γ^{(k)}‖²_HS`, the closed-form
/// `‖f^{(k)}_N‖_{L²}`, its limit `((2π)^{dk} k!)^{1/2}`, the gap to
/// `(2π)^{dk/2}` and the lower bound `(2π)^{dk/2}(√(k!) - 1)`; for k = 2,
/// d = 1 and small N a grid row is added.
pub fn kparticle_table(
    n_list: &[usize],
    k: usize,
    d: usize,
    check: Option<&KGridCheck>,
) -> Result<ReportTable> {
    if k == 0 {
        return Err(Error::arg("k must be positive"));
    }
    let mut t = ReportTable::new(
        "kparticle",
        [
            "N",
            "k",
            "hs_sq",
            "trace",
            "fk_L2",
            "limit",
            "gap",
            "gap_bound",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    let kfact: f64 = (1..=k).map(|v| v as f64).product();
    let base = two_pi().powf((d * k) as f64 / 2.0);
    let limit = base * kfact.sqrt();
    let bound = base * (kfact.sqrt() - 1.0);
    for &n in n_list {
        if k > n {
            t.notes.push(format!("N = {n}: skipped, k = {k} exceeds N"));
            continue;
        }
        let hs = gamma_k_hs_sq(n, k)?;
        let tr = gamma_k_trace(n, k)?;
        let big = |b: &BigUint| ratio_to_f64(b, &BigUint::from(1u32));
        let value = fk_l2_formula(n, k, d)?;
        t.push(
            vec![
                n as f64,
                k as f64,
                big(&hs),
                big(&tr),
                value,
                limit,
                value - base,
                bound,
            ],
            "formula",
        );
        if let Some(c) = check {
            if k == 2 && d == 1 && n <= c.max_n {
                let g = c.norm(n)?;
                t.push(
                    vec![
                        n as f64,
                        k as f64,
                        big(&hs),
                        big(&tr),
                        g,
                        limit,
                        g - base,
                        bound,
                    ],
                    "grid",
                );
            }
        }
    }
    Ok(t)
}

/// `⟨H_N⟩/N` per N against the Thomas–Fermi energy.
pub fn energy_suite(config: &RunConfig) -> Result<(ReportTable, Vec<Assertion>)> {
    config.validate()?;
    if config.run.d != 1 {
        return Err(Error::UnsupportedDimension {
            op: "energy_suite",
            d: config.run.d,
        });
    }
    let tf = solve_limit(config)?;
    let cols = [
        "N",
        "energy_per_N",
        "kinetic_per_N",
        "potential_per_N",
        "direct_per_N",
        "exchange_per_N",
        "e_tf",
        "ratio",
        "scf_residual",
        "scf_iterations",
    ];
    let mut t = ReportTable::new("energy", cols.iter().map(|s| s.to_string()).collect());
    let rows: Vec<Result<Vec<f64>>> = config
        .n_list()
        .par_iter()
        .map(|&n| {
            let (state, scf) = build_state_traced(config, n)?;
            let (res, it) = scf.map_or((0.0, 0.0), |(r, i)| (r, i as f64));
            let terms = slater_energy_terms(&state, &config.trap, &config.interaction)
                .map_err(|e| e.at_n(n))?;
            let nf = n as f64;
            let e = terms.total() / nf;
            Ok(vec![
                nf,
                e,
                terms.kinetic / nf,
                terms.potential / nf,
                terms.direct / nf,
                terms.exchange / nf,
                tf.e_tf,
                e / tf.e_tf,
                res,
                it,
            ])
        })
        .collect();
    for r in rows {
        t.push(r?, "grid");
    }
    let mut a = Vec::new();
    let ratio = t.column("ratio").unwrap_or_default();
    if config.is_harmonic_benchmark() {
        let e = t.column("energy_per_N").unwrap_or_default();
        a.push(Assertion::new(
            "energy_per_particle",
            e.iter().all(|x| (x - 1.0).abs() <= TOL_ENERGY),
            format!("E/N {}", format_series(&e)),
        ));
    }
    let direct = t.column("direct_per_N").unwrap_or_default();
    a.push(Assertion::new(
        "direct_term_nonnegative",
        direct.iter().all(|&x| x >= 0.0),
        format!("direct/N {}", format_series(&direct)),
    ));
    if !config.interaction.is_none() {
        let res = t.column("scf_residual").unwrap_or_default();
        a.push(Assertion::new(
            "scf_converged",
            res.iter().all(|&r| r < config.run.scf_tol),
            format!("residual {}", format_series(&res)),
        ));
    }
    let last = ratio.last().copied().unwrap_or(f64::NAN);
    a.push(Assertion::new(
        "energy_ratio_final",
        (last - 1.0).abs() <= TOL_ENERGY_RATIO,
        format!(
            "E/(N e_TF) {} (largest N within {TOL_ENERGY_RATIO})",
            format_series(&ratio)
        ),
    ));
    Ok((t, a))
}

/// Thomas–Fermi checks: mass, Euler–Lagrange residual, minimality against
/// random feasible perturbations drawn from `seed`, the harmonic closed
/// form when it applies, and the Vlasov identity in d = 1.
pub fn tf_checks(config: &RunConfig, tf: &TFSolution) -> Result<Vec<Assertion>> {
    let mut out = Vec::new();
    let d = config.run.d;
    let mass = integrate(&tf.rho);
    out.push(Assertion::new(
        "tf_mass",
        (mass - 1.0).abs() <= 1e-10,
        format!("∫ρ = {mass:.15}"),
    ));
    out.push(Assertion::new(
        "tf_euler_lagrange",
        tf.residual < TOL_EULER_LAGRANGE,
        format!("residual {:.3e} (< {TOL_EULER_LAGRANGE:e})", tf.residual),
    ));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.run.seed);
    let grid = tf.rho.grid();
    let vol = grid.cell_volume();
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let mut p: Vec<f64> = tf
            .rho
            .values()
            .iter()
            .map(|r| (r + 0.05 * rng.gen_range(-1.0..1.0) * (r + 1e-3)).max(0.0))
            .collect();
        let m: f64 = p.iter().sum::<f64>() * vol;
        p.iter_mut().for_each(|v| *v /= m);
        let e = tf_energy(
            &GridFunction::new(grid.clone(), p)?,
            &config.trap,
            &config.interaction,
        )?;
        worst = worst.min(e - tf.e_tf);
    }
    out.push(Assertion::new(
        "tf_minimality",
        worst >= 0.0,
        format!("smallest energy excess over 20 perturbations {worst:.3e}"),
    ));
    if config.trap == TrapSpec::Harmonic && config.interaction.is_none() {
        let (mu, e) = harmonic_closed_form(d)?;
        out.push(Assertion::new(
            "tf_closed_form_mu",
            (tf.mu - mu).abs() <= TOL_TF,
            format!("μ = {:.9} (closed form {mu:.9})", tf.mu),
        ));
        out.push(Assertion::new(
            "tf_closed_form_energy",
            (tf.e_tf - e).abs() <= TOL_TF,
            format!("e_TF = {:.9} (closed form {e:.9})", tf.e_tf),
        ));
        if d == 1 {
            let rho0 = tf.rho.interpolate(0.0);
            let want = 2f64.sqrt() / PI;
            out.push(Assertion::new(
                "tf_closed_form_density",
                (rho0 - want).abs() <= TOL_TF,
                format!("ρ(0) = {rho0:.9} (closed form {want:.9})"),
            ));
        }
    }
    if d == 1 {
        let pts = VLASOV_POINTS;
        let pg = make_phase_grid(
            1,
            config.grid.half_width_x,
            config.grid.half_width_p,
            pts,
            pts,
        )?;
        let f = classical_state(&tf.rho, &pg)?;
        let v = vlasov_energy(f.function(), &config.trap, &config.interaction)?;
        out.push(Assertion::new(
            "tf_vlasov_identity",
            (v - tf.e_tf).abs() <= TOL_TF,
            format!(
                "Vlasov energy {v:.9} vs e_TF {:.9} on a {pts}² grid",
                tf.e_tf
            ),
        ));
    }
    Ok(out)
}

/// Phase grid points per axis for the Vlasov energy check.
pub const VLASOV_POINTS: usize = 1024;

/// Solves for the limiting density and runs [`tf_checks`].
pub fn tf_suite(config: &RunConfig) -> Result<(TFSolution, Vec<Assertion>)> {
    config.validate()?;
    let tf = solve_limit(config)?;
    let checks = tf_checks(config, &tf)?;
    Ok((tf, checks))
}

fn phase_rows<F>(config: &RunConfig, name: &str, columns: &[&str], row: F) -> Result<ReportTable>
where
    F: Fn(usize, &PhaseSpaceGrid, &SlaterState) -> Result<Vec<f64>> + Sync,
{
    config.validate()?;
    let rows: Vec<Result<Vec<f64>>> = config
        .n_list()
        .par_iter()
        .map(|&n| {
            let pg = config.phase_grid(n)?;
            let state = build_state(config, n)?;
            row(n, &pg, &state).map_err(|e| match e {
                e @ Error::AtParticleNumber { .. } => e,
                e => e.at_n(n),
            })
        })
        .collect();
    let mut t = ReportTable::new(name, columns.iter().map(|s| s.to_string()).collect());
    for r in rows {
        t.push(r?, "grid");
    }
    Ok(t)
}

/// Wigner functions of the Slater ground states: mass, unitarity, the L²
/// identity and the range of values; `f_N` dumps go to `dump_dir`.
pub fn wigner_suite(
    config: &RunConfig,
    dump_dir: Option<&Path>,
) -> Result<(ReportTable, Vec<Assertion>)> {
    let cols = [
        "N",
        "hbar",
        "grid_points",
        "fN_mass",
        "wigner_unitarity",
        "wigner_imag_max",
        "fN_L2",
        "wigner_min",
        "wigner_max",
    ];
    let d = config.run.d as i32;
    let t = phase_rows(config, "wigner", &cols, |n, pg, state| {
        let gamma = gamma1(state);
        let hs = gamma.hs_norm();
        let wc = wigner_transform_complex(&gamma, pg)?;
        let imag = wc.values().iter().fold(0.0f64, |a, v| a.max(v.im.abs()));
        let f = wc.map(|v| v.re);
        drop(wc);
        let hbar = state.hbar();
        let l2 = lp_norm(&f, 2.0)?;
        if let Some(dir) = dump_dir {
            dump_phase_function(&dir.join(format!("wigner_N{n}")), &f, "wigner")?;
        }
        Ok(vec![
            n as f64,
            hbar,
            pg.spatial().n() as f64,
            integrate(&f) / two_pi().powi(d),
            l2 * l2 / ((two_pi() * hbar).powi(d) * hs * hs),
            imag,
            l2,
            f.min(),
            f.max(),
        ])
    })?;
    let mut a = Vec::new();
    let target = two_pi().powf(d as f64 / 2.0);
    let check = |name: &str, col: &str, ok: &dyn Fn(f64) -> bool, what: &str| {
        let v = t.column(col).unwrap_or_default();
        Assertion::new(
            name,
            v.iter().all(|&x| ok(x)),
            format!("{col} {} ({what})", format_series(&v)),
        )
    };
    a.push(check(
        "wigner_mass",
        "fN_mass",
        &|x| (x - 1.0).abs() <= TOL_MASS,
        "(2π)^{-d}∫f_N = 1",
    ));
    a.push(check(
        "wigner_unitarity",
        "wigner_unitarity",
        &|x| (x - 1.0).abs() <= TOL_UNITARITY,
        "ratio 1",
    ));
    a.push(check(
        "l2_identity",
        "fN_L2",
        &|x| (x / target - 1.0).abs() <= TOL_L2_IDENTITY,
        "‖f_N‖_L2 = (2π)^{d/2}",
    ));
    Ok((t, a))
}

/// Husimi functions `m_N = 𝒢 * f_N`: mass and the pointwise bounds
/// `0 <= m_N <= 1`; `m_N` dumps go to `dump_dir`.
pub fn husimi_suite(
    config: &RunConfig,
    dump_dir: Option<&Path>,
) -> Result<(ReportTable, Vec<Assertion>)> {
    let cols = [
        "N",
        "hbar",
        "grid_points",
        "husimi_mass",
        "husimi_min",
        "husimi_max",
        "mN_L2",
    ];
    let d = config.run.d as i32;
    let spec = MollifierSpec::new(config.norms.mollifier_alpha)?;
    let t = phase_rows(config, "husimi", &cols, |n, pg, state| {
        let gamma = gamma1(state);
        let f = wigner_transform_complex(&gamma, pg)?.map(|v| v.re);
        let m = mollify(&f, state.hbar(), spec)?;
        drop(f);
        if let Some(dir) = dump_dir {
            dump_phase_function(&dir.join(format!("husimi_N{n}")), &m, "husimi")?;
        }
        Ok(vec![
            n as f64,
            state.hbar(),
            pg.spatial().n() as f64,
            integrate(&m) / two_pi().powi(d),
            m.min(),
            m.max(),
            lp_norm(&m, 2.0)?,
        ])
    })?;
    let col = |c: &str| t.column(c).unwrap_or_default();
    let (mass, lo, hi) = (col("husimi_mass"), col("husimi_min"), col("husimi_max"));
    let a = vec![
        Assertion::new(
            "husimi_mass",
            mass.iter().all(|x| (x - 1.0).abs() <= TOL_MASS),
            format!("(2π)^{{-d}}∫m_N {}", format_series(&mass)),
        ),
        Assertion::new(
            "husimi_lower",
            lo.iter().all(|&x| x >= -TOL_HUSIMI),
            format!("min m_N {}", format_series(&lo)),
        ),
        Assertion::new(
            "husimi_upper",
            hi.iter().all(|&x| x <= 1.0 + TOL_HUSIMI),
            format!("max m_N {}", format_series(&hi)),
        ),
    ];
    Ok((t, a))
}

/// k-particle verdicts: each grid row within `TOL_KGRID` of the formula
/// row at the same `N` and `k`, and for k = 2 the gap at the largest `N`
/// within `TOL_KGAP` of its limit `(2π)^{d}(√2 - 1)`.
pub fn assess_kparticle(table: &ReportTable) -> Vec<Assertion> {
    let mut out = Vec::new();
    let (n, k, val, bound, gap) = (
        table.column_index("N"),
        table.column_index("k"),
        table.column_index("fk_L2"),
        table.column_index("gap_bound"),
        table.column_index("gap"),
    );
    let (Some(n), Some(k), Some(val), Some(bound), Some(gap)) = (n, k, val, bound, gap) else {
        return out;
    };
    let formula = table.filtered("formula");
    let grid = table.filtered("grid");
    if !grid.rows.is_empty() {
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        for g in &grid.rows {
            if let Some(f) = formula
                .rows
                .iter()
                .find(|f| f.values[n] == g.values[n] && f.values[k] == g.values[k])
            {
                let rel = (g.values[val] / f.values[val] - 1.0).abs();
                worst = worst.max(rel);
                detail.push(format!(
                    "N={} k={}: grid {:.6} formula {:.6}",
                    g.values[n], g.values[k], g.values[val], f.values[val]
                ));
            }
        }
        out.push(Assertion::new(
            "kparticle_grid_check",
            worst <= TOL_KGRID,
            format!(
                "{}; worst relative difference {worst:.3e}",
                detail.join("; ")
            ),
        ));
    }
    let k2: Vec<&ReportRow> = formula.rows.iter().filter(|r| r.values[k] == 2.0).collect();
    if let Some(last) = k2.iter().max_by(|a, b| a.values[n].total_cmp(&b.values[n])) {
        let rel = (last.values[gap] / last.values[bound] - 1.0).abs();
        out.push(Assertion::new(
            "kparticle_gap_limit",
            rel <= TOL_KGAP,
            format!(
                "N={}: gap {:.6} vs limit {:.6} (relative {rel:.3e})",
                last.values[n], last.values[gap], last.values[bound]
            ),
        ));
    }
    out
}

pub const TOL_KGRID: f64 = 5e-2;
pub const TOL_KGAP: f64 = 1e-1;

/// All orders in `run.k_list` over the sweep, with grid rows for k = 2
/// when `d = 1`.
pub fn kparticle_suite(config: &RunConfig) -> Result<(ReportTable, Vec<Assertion>)> {
    config.validate()?;
    let check = KGridCheck::from_config(config);
    let check = (config.run.d == 1).then_some(&check);
    let mut all: Option<ReportTable> = None;
    for &k in &config.run.k_list {
        let t = kparticle_table(&config.n_list(), k, config.run.d, check)?;
        match all.as_mut() {
            None => all = Some(t),
            Some(a) => {
                a.rows.extend(t.rows);
                a.notes.extend(t.notes);
            }
        }
    }
    let t = all.ok_or_else(|| Error::arg("k_list is empty"))?;
    let a = assess_kparticle(&t);
    Ok((t, a))
}

/// Values quoted on plots as exact limits.
pub fn reference_lines(config: &RunConfig) -> serde_json::Value {
    let d = config.run.d;
    let lp: serde_json::Map<String, serde_json::Value> = config
        .norms
        .lp
        .iter()
        .map(|p| {
            (
                format!("L{p}"),
                serde_json::json!(two_pi().powf(d as f64 / p)),
            )
        })
        .collect();
    let k: serde_json::Map<String, serde_json::Value> = config
        .run
        .k_list
        .iter()
        .map(|&k| {
            let kf: f64 = (1..=k).map(|v| v as f64).product();
            (
                format!("k{k}"),
                serde_json::json!(two_pi().powf((d * k) as f64 / 2.0) * kf.sqrt()),
            )
        })
        .collect();
    serde_json::json!({ "lp_norm_of_classical_state": lp, "kparticle_l2_limit": k })
}

/// Mass of a complex field on the phase grid, `(2π)^{-d}∫`.
pub fn phase_mass(f: &GridFunction<PhaseSpaceGrid, Complex64>) -> Complex64 {
    integrate(f) / two_pi().powi(f.grid().d() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_k_norms() {
        let v = fk_l2_formula(8, 2, 1).unwrap();
        assert!((v - 2.0 * PI * 2f64.sqrt() * (8.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert!((v - 9.49928).abs() < 1e-5);
        let t = kparticle_table(&[1, 8, 128], 2, 1, None).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.notes.len(), 1);
        let limit = t.column("limit").unwrap()[0];
        assert!((limit - 8.886).abs() < 1e-3);
        let bound = t.column("gap_bound").unwrap()[0];
        assert!((bound - 2.603).abs() < 1e-3);
        let gap = t.column("gap").unwrap()[1];
        assert!(gap >= bound);
        let one = kparticle_table(&[5], 1, 1, None).unwrap();
        assert_eq!(one.column("gap").unwrap()[0], 0.0);
        assert_eq!(one.column("fk_L2").unwrap()[0], two_pi().sqrt());
    }

    #[test]
    fn admissible_intervals() {
        assert_eq!(admissible_interval(1, 1).1, "p ∈ [1,2]");
        let (low, label) = admissible_interval(1, 3);
        assert!((low - 1.2).abs() < 1e-15);
        assert_eq!(label, "p ∈ (1.2,2]");
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.run.n_list = vec![8, 8];
        assert!(c.validate().is_err());
        c.run.n_list = vec![8];
        c.grid.n = 100;
        assert!(c.validate().is_err());
        let c = RunConfig::default();
        assert_eq!(c.points_for(8), 512);
        assert_eq!(c.points_for(128), 2048);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"inf\""));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RunConfig>(r#"{"run": {"bogus": 1}}"#).is_err());
    }

    #[test]
    fn quick_sweep_identities() {
        let mut c = RunConfig::default();
        c.run.n_list = vec![2, 4, 8];
        c.grid.n = 256;
        c.grid.tf_points = 4096;
        let r = converge_suite(&c).unwrap();
        assert!(r.table.all_finite());
        for name in [
            "trace",
            "projection",
            "hs_norm",
            "wigner_unitarity",
            "groenewold_origin",
            "groenewold_bound",
            "husimi_mass",
        ] {
            let a = r.assertions.iter().find(|a| a.name == name).unwrap();
            assert!(a.passed, "{a:?}");
        }
        let defect = r.table.column("groenewold_row_defect").unwrap();
        assert!(defect.iter().all(|&x| x < 1e-8), "{defect:?}");
        let e = r.table.column("energy_per_N").unwrap();
        assert!(e.iter().all(|x| (x - 1.0).abs() < 1e-12));
        let c2 = lp_gap_table(&r.table, 2.0, 1).unwrap();
        assert!(c2
            .column("gap")
            .unwrap()
            .iter()
            .all(|g| g.abs() < 0.01 * two_pi().sqrt()));
        assert!(lp_gap_table(&r.table, 3.0, 1).is_err());
        let m = moments_diagnostic(&r.table, 1, 1).unwrap();
        assert!(m.ratio >= 1.0 && m.interval_label == "p ∈ [1,2]");
    }

    #[test]
    fn harmonic_tf_suite() {
        let (tf, checks) = tf_suite(&RunConfig::default()).unwrap();
        assert!((tf.mu - 2.0).abs() < 1e-3);
        for a in &checks {
            assert!(a.passed, "{a:?}");
        }
        assert_eq!(checks.len(), 7);
    }
}
