//! One PASS/FAIL line per acceptance criterion. Exits non-zero when any
//! criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use fermiphase::density::{gamma1, gamma_k_hs_sq, moment_trace};
use fermiphase::diagnostics::{
    converge_suite, energy_suite, fk_l2_formula, format_series, kparticle_table,
    moments_diagnostic, strictly_decreasing, tf_suite, trend_assertion, Assertion,
    ConvergenceReport, KGridCheck, RunConfig,
};
use fermiphase::norms::commutator_identity_check;
use fermiphase::orbitals::{hermite_basis, semiclassical_hbar, InteractionSpec};
use fermiphase::wigner::{laguerre_oracle, wigner_transform};
use num_bigint::BigUint;

const IDENTITY_TOL: f64 = 1e-8;
const UNITARITY_TOL: f64 = 1e-6;
const TF_TOL: f64 = 1e-3;
const EULER_LAGRANGE_TOL: f64 = 1e-6;
const ENERGY_TOL: f64 = 1e-6;
const L2_REL_TOL: f64 = 1e-2;
const ORACLE_TOL: f64 = 1e-6;
const ORACLE_MAX_N: usize = 32;
const TREND_MAX_RATIO: f64 = 0.5;
const MOLLIFIER_SLACK: f64 = 1e-3;
const HUSIMI_TOL: f64 = 1e-6;
const MOMENT_TRACE_TOL: f64 = 1e-6;
const MOMENT_RATIO_MAX: f64 = 2.0;
const COMMUTATOR_REL_TOL: f64 = 1e-4;
const COMMUTATOR_N: [usize; 2] = [16, 64];
const COMMUTATOR_Z: [(f64, f64); 3] = [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
const COMBINATORICS_MAX_N: usize = 20;
const KGRID_REL_TOL: f64 = 5e-2;
const KGAP_REL_TOL: f64 = 1e-1;
const KGAP_N: usize = 128;
const SCF_RESIDUAL: f64 = 1e-8;
const SCF_ENERGY_REL_TOL: f64 = 5e-2;
const SCF_N: usize = 64;

type Verdict = Result<(bool, String), String>;

fn column(report: &ConvergenceReport, name: &str) -> Result<Vec<f64>, String> {
    report
        .table
        .column(name)
        .ok_or_else(|| format!("missing column {name}"))
}

fn exact_identities(report: &ConvergenceReport) -> Verdict {
    let ns = column(report, "N")?;
    let mut bad = Vec::new();
    let mut check = |col: &str, ok: &dyn Fn(f64, f64) -> bool| -> Result<(), String> {
        let v = column(report, col)?;
        if !v.iter().zip(&ns).all(|(&x, &n)| ok(x, n)) {
            bad.push(format!("{col} {}", format_series(&v)));
        }
        Ok(())
    };
    check("trace", &|x, n| (x - n).abs() <= IDENTITY_TOL)?;
    check("projection_defect", &|x, _| x <= IDENTITY_TOL)?;
    check("hs_norm", &|x, n| (x - n.sqrt()).abs() <= IDENTITY_TOL)?;
    check("wigner_unitarity", &|x, _| (x - 1.0).abs() <= UNITARITY_TOL)?;
    check("groenewold_origin", &|x, _| (x - 1.0).abs() <= IDENTITY_TOL)?;
    check("groenewold_sup", &|x, _| x <= 1.0 + IDENTITY_TOL)?;
    check("husimi_mass", &|x, _| (x - 1.0).abs() <= IDENTITY_TOL)?;
    if bad.is_empty() {
        Ok((true, format!("7 identities at N = {ns:?}")))
    } else {
        Ok((false, bad.join(" | ")))
    }
}

fn thomas_fermi(config: &RunConfig) -> Verdict {
    let (tf, checks) = tf_suite(config).map_err(|e| e.to_string())?;
    let mut ok = (tf.mu - 2.0).abs() <= TF_TOL
        && (tf.e_tf - 1.0).abs() <= TF_TOL
        && tf.residual < EULER_LAGRANGE_TOL;
    let rho0 = tf.rho.interpolate(0.0);
    ok &= (rho0 - 2f64.sqrt() / PI).abs() <= TF_TOL;
    let vlasov = checks
        .iter()
        .find(|a| a.name == "tf_vlasov_identity")
        .ok_or("no Vlasov check")?;
    ok &= vlasov.passed;
    Ok((
        ok,
        format!(
            "mu {:.9}, e_TF {:.9}, rho(0) {rho0:.9}, residual {:.2e}; {}",
            tf.mu, tf.e_tf, tf.residual, vlasov.detail
        ),
    ))
}

fn energy(report: &ConvergenceReport) -> Verdict {
    let e = column(report, "energy_per_N")?;
    let etf = column(report, "e_tf")?;
    let ok = e.iter().all(|x| (x - 1.0).abs() <= ENERGY_TOL)
        && etf.iter().all(|x| (x - 1.0).abs() <= TF_TOL);
    Ok((
        ok,
        format!("E/N {}; e_TF {:.12}", format_series(&e), etf[0]),
    ))
}

fn l2_and_oracle(config: &RunConfig, report: &ConvergenceReport) -> Verdict {
    let l2 = column(report, "fN_L2")?;
    let target = (2.0 * PI).sqrt();
    let l2_ok = l2.iter().all(|x| (x / target - 1.0).abs() <= L2_REL_TOL);
    let mut worst = 0.0f64;
    let mut checked = Vec::new();
    for n in config.n_list().into_iter().filter(|&n| n <= ORACLE_MAX_N) {
        let hbar = semiclassical_hbar(n, 1);
        let pg = config.phase_grid(n).map_err(|e| e.to_string())?;
        let og = config.orbital_grid(n).map_err(|e| e.to_string())?;
        let state = hermite_basis(n, hbar, &og).map_err(|e| e.to_string())?;
        let f = wigner_transform(&gamma1(&state), &pg).map_err(|e| e.to_string())?;
        let oracle = laguerre_oracle(n, hbar, &pg).map_err(|e| e.to_string())?;
        let d = f
            .values()
            .iter()
            .zip(oracle.values())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(d);
        checked.push(n);
    }
    let ok = l2_ok && worst <= ORACLE_TOL && !checked.is_empty();
    Ok((
        ok,
        format!(
            "‖f_N‖_L2 {} vs {target:.6}; oracle sup difference {worst:.2e} at N = {checked:?}",
            format_series(&l2)
        ),
    ))
}

fn trends(config: &RunConfig, report: &ConvergenceReport) -> Verdict {
    let mut verdicts = Vec::new();
    for p in [1.0, 2.0, 4.0] {
        let v = column(report, &format!("mN_minus_f_L{p}"))?;
        verdicts.push(trend_assertion(
            &format!("‖m_N - f‖_L{p}"),
            &v,
            v[0],
            Some(TREND_MAX_RATIO),
        ));
    }
    for s in ["0.5", "1"] {
        let v = column(report, &format!("fN_minus_f_Wm{s}_inf"))?;
        verdicts.push(trend_assertion(
            &format!("|f_N - f|_{{{s},∞}}"),
            &v,
            v[0],
            None,
        ));
    }
    for s in &config.norms.mollifier_s {
        let gap = column(report, &format!("fN_minus_mN_Wm{s}_inf"))?;
        let bound = column(report, &format!("mollifier_bound_s{s}"))?;
        let ok = gap
            .iter()
            .zip(&bound)
            .all(|(g, b)| *g <= b + MOLLIFIER_SLACK);
        verdicts.push(Assertion::new(
            &format!("|f_N - m_N|_{{{s},∞}}"),
            ok,
            format!("{} vs bound {}", format_series(&gap), format_series(&bound)),
        ));
    }
    let failing: Vec<String> = verdicts
        .iter()
        .filter(|a| !a.passed)
        .map(|a| format!("{}: {}", a.name, a.detail))
        .collect();
    if failing.is_empty() {
        Ok((true, format!("{} trend and bound checks", verdicts.len())))
    } else {
        Ok((false, failing.join(" | ")))
    }
}

fn l1_gap(report: &ConvergenceReport) -> Verdict {
    let gap = column(report, "fN_L1_gap")?;
    let diff = column(report, "fN_minus_f_L1")?;
    let a = strictly_decreasing(&gap, 2.0 * PI);
    let b = strictly_decreasing(&diff, diff[0]);
    Ok((
        a && b,
        format!(
            "‖f_N‖_L1 - 2π {} decreasing: {a}; ‖f_N - f‖_L1 {} decreasing: {b}",
            format_series(&gap),
            format_series(&diff)
        ),
    ))
}

fn husimi_bounds(report: &ConvergenceReport) -> Verdict {
    let lo = column(report, "husimi_min")?;
    let hi = column(report, "husimi_max")?;
    let ok = lo.iter().all(|&x| x >= -HUSIMI_TOL) && hi.iter().all(|&x| x <= 1.0 + HUSIMI_TOL);
    Ok((
        ok,
        format!("min {} max {}", format_series(&lo), format_series(&hi)),
    ))
}

fn moments(config: &RunConfig, report: &ConvergenceReport) -> Verdict {
    let mut worst = 0.0f64;
    for n in config.n_list() {
        let og = config.orbital_grid(n).map_err(|e| e.to_string())?;
        let state = hermite_basis(n, semiclassical_hbar(n, 1), &og).map_err(|e| e.to_string())?;
        let t = moment_trace(&state).map_err(|e| e.to_string())?;
        worst = worst.max((t - n as f64).abs());
    }
    let m = moments_diagnostic(&report.table, 1, 1).map_err(|e| e.to_string())?;
    let ok = worst <= MOMENT_TRACE_TOL && m.ratio <= MOMENT_RATIO_MAX;
    Ok((
        ok,
        format!(
            "max |Tr((x²+p²)γ) - N| {worst:.2e}; ‖(|x|+|p|)f_N‖ {} max/min {:.4}",
            format_series(&m.norms),
            m.ratio
        ),
    ))
}

fn commutator(config: &RunConfig) -> Verdict {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for n in COMMUTATOR_N {
        let og = config.orbital_grid(n).map_err(|e| e.to_string())?;
        let pg = config.phase_grid(n).map_err(|e| e.to_string())?;
        let state = hermite_basis(n, semiclassical_hbar(n, 1), &og).map_err(|e| e.to_string())?;
        let gamma = gamma1(&state);
        for z in COMMUTATOR_Z {
            let (lhs, rhs) =
                commutator_identity_check(&gamma, z, &pg).map_err(|e| e.to_string())?;
            let rel = (lhs - rhs).abs() / rhs.abs();
            worst = worst.max(rel);
            parts.push(format!("N={n} z={z:?}: {lhs:.6e}/{rhs:.6e}"));
        }
    }
    Ok((
        worst <= COMMUTATOR_REL_TOL,
        format!("worst relative {worst:.2e}; {}", parts.join(", ")),
    ))
}

fn combinatorics(config: &RunConfig) -> Verdict {
    let mut exact = true;
    for n in 1..=COMBINATORICS_MAX_N {
        for k in 1..=n {
            let falling: u128 = (0..k).map(|j| (n - j) as u128).product();
            let kfact: u128 = (1..=k as u128).product();
            exact &=
                gamma_k_hs_sq(n, k).map_err(|e| e.to_string())? == BigUint::from(kfact * falling);
        }
    }
    let formula = fk_l2_formula(8, 2, 1).map_err(|e| e.to_string())?;
    let closed = 2.0 * PI * 2f64.sqrt() * (8.0f64 / 7.0).sqrt();
    let formula_ok = (formula - closed).abs() <= 1e-12 * closed;
    let check = KGridCheck::from_config(config);
    let grid = check.norm(8).map_err(|e| e.to_string())?;
    let grid_ok = check.points == 48 && (grid / formula - 1.0).abs() <= KGRID_REL_TOL;
    let t = kparticle_table(&[KGAP_N], 2, 1, None).map_err(|e| e.to_string())?;
    let gap = t.column("gap").ok_or("no gap column")?[0];
    let limit = 2.0 * PI * (2f64.sqrt() - 1.0);
    let gap_ok = (gap / limit - 1.0).abs() <= KGAP_REL_TOL;
    Ok((
        exact && formula_ok && grid_ok && gap_ok,
        format!(
            "HS² exact for N <= {COMBINATORICS_MAX_N}: {exact}; ‖f^(2)_8‖ formula {formula:.6} (2π√2√(8/7) = {closed:.6}), \
             {}-point grid {grid:.6}; gap at N={KGAP_N} {gap:.6} vs {limit:.6}",
            check.points
        ),
    ))
}

fn interacting() -> Verdict {
    let mut config = RunConfig::default();
    config.interaction = InteractionSpec::Gaussian {
        strength: 1.0,
        width: 1.0,
    };
    config.run.n_list = vec![SCF_N];
    let (t, _) = energy_suite(&config).map_err(|e| e.to_string())?;
    let get = |c: &str| t.column(c).map(|v| v[0]).ok_or(format!("no {c}"));
    let (res, e, etf, direct) = (
        get("scf_residual")?,
        get("energy_per_N")?,
        get("e_tf")?,
        get("direct_per_N")?,
    );
    let ok = res < SCF_RESIDUAL && (e / etf - 1.0).abs() <= SCF_ENERGY_REL_TOL && direct >= 0.0;
    Ok((ok, format!("N={SCF_N}: residual {res:.2e}, E/N {e:.6}, e_TF {etf:.6}, ratio {:.4}, direct/N {direct:.4}", e / etf)))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let config = RunConfig::default();
    let report = converge_suite(&config);
    let from_report = |f: &dyn Fn(&ConvergenceReport) -> Verdict| -> Verdict {
        match &report {
            Ok(r) => f(r),
            Err(e) => Err(format!("sweep failed: {e}")),
        }
    };
    let criteria: Vec<(&str, Verdict)> = vec![
        ("exact_identities", from_report(&exact_identities)),
        ("thomas_fermi_closed_form", thomas_fermi(&config)),
        ("energy_per_particle", from_report(&energy)),
        (
            "wigner_l2_identity_and_oracle",
            from_report(&|r| l2_and_oracle(&config, r)),
        ),
        (
            "convergence_trends_and_mollifier_bound",
            from_report(&|r| trends(&config, r)),
        ),
        ("husimi_pointwise_bounds", from_report(&husimi_bounds)),
        ("l1_gap_equivalence", from_report(&l1_gap)),
        ("moment_bounds", from_report(&|r| moments(&config, r))),
        ("commutator_identity", commutator(&config)),
        ("kparticle_combinatorics", combinatorics(&config)),
        ("interacting_scf_energy", interacting()),
    ];
    let mut failed = 0;
    for (name, verdict) in &criteria {
        let (ok, detail) = match verdict {
            Ok(v) => v.clone(),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
