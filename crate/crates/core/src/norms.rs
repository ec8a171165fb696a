//! Lᵖ norms, negative Sobolev norms `|g|_{s,q} = ‖⟨ζ⟩^{-s} ĝ‖_{L^q}`, the
//! Hölder seminorm of the Gaussian multiplier, translation moduli and the
//! phase-space translation/commutator identity.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityKernel;
use crate::error::{Error, Result};
use crate::grids::{
    fourier_phase, fourier_shift, Domain, GridFunction, PhaseSpaceFunction, PhaseSpaceGrid,
    Spectrum,
};
use crate::wigner::{weyl_apply, WeylPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NormSpec {
    Lp {
        p: f64,
    },
    /// `q = ∞` is `f64::INFINITY`, written `inf` in TOML and `"inf"` in JSON.
    Sobolev {
        s: f64,
        #[serde(with = "inf_float")]
        q: f64,
    },
}

/// `f64` that may be `+∞`, kept lossless through JSON.
pub mod inf_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" || t == "infinity" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {t:?}"
            ))),
        }
    }
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::Lp { p } => check_p(p),
            NormSpec::Sobolev { s, q } => check_sq(s, q),
        }
    }

    /// Short column label, e.g. `L2` or `Wm0.5_inf`.
    pub fn label(&self) -> String {
        match *self {
            NormSpec::Lp { p } => format!("L{p}"),
            NormSpec::Sobolev { s, q } if q.is_infinite() => format!("Wm{s}_inf"),
            NormSpec::Sobolev { s, q } => format!("Wm{s}_{q}"),
        }
    }

    pub fn evaluate<G: Domain>(&self, f: &GridFunction<G, f64>) -> Result<f64> {
        match *self {
            NormSpec::Lp { p } => lp_norm(f, p),
            NormSpec::Sobolev { s, q } => sobolev_norm(f, s, q),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg(format!("need 1 <= p < ∞, got {p}")));
    }
    Ok(())
}

fn check_sq(s: f64, q: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::arg(format!(
            "Sobolev order must be positive, got {s}"
        )));
    }
    if !(q >= 2.0) {
        return Err(Error::arg(format!("need q in [2, ∞], got {q}")));
    }
    Ok(())
}

/// `(∫|f|^p)^{1/p}` by the rectangle rule.
pub fn lp_norm<G: Domain>(f: &GridFunction<G, f64>, p: f64) -> Result<f64> {
    check_p(p)?;
    let sum: f64 = if p == 1.0 {
        f.values().iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        f.values().iter().map(|v| v * v).sum()
    } else {
        f.values().iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * f.grid().cell_volume()).powf(1.0 / p))
}

pub fn sup_norm<G: Domain>(f: &GridFunction<G, f64>) -> f64 {
    f.values().iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// `|g|_{s,q}` from samples of `ĝ` on the dual grid.
pub fn sobolev_norm_spectrum<G: Domain>(spec: &Spectrum<G>, s: f64, q: f64) -> Result<f64> {
    check_sq(s, q)?;
    let z2 = spec.frequency_sq();
    let weighted = spec
        .values()
        .par_iter()
        .zip(&z2)
        .map(|(v, k2)| v.norm() * (1.0 + k2).powf(-0.5 * s));
    if q.is_infinite() {
        return Ok(weighted.reduce(|| 0.0, f64::max));
    }
    // ordered sum keeps results independent of the thread count
    let sum: f64 = weighted
        .map(|w| w.powf(q))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok((sum * spec.dual_cell_volume()).powf(1.0 / q))
}

pub fn sobolev_norm<G: Domain>(f: &GridFunction<G, f64>, s: f64, q: f64) -> Result<f64> {
    check_sq(s, q)?;
    sobolev_norm_spectrum(&fourier_phase(f), s, q)
}

/// `|Ĝ₁|_{C^{0,s}}` for `Ĝ₁(ζ) = e^{-|ζ|²/2}` in any dimension.
///
/// The multiplier is radial and decreasing, so the supremum over pairs is
/// attained on collinear pairs and reduces to
/// `sup_{0≤a, t>0} (G(a) - G(a+t))/t^s`, `G(r) = e^{-r²/2}`.
pub fn holder_seminorm_gaussian(s: f64) -> Result<f64> {
    let coarse = holder_seminorm_gaussian_sampled(s, 512)?;
    let ratio = |a: f64, t: f64| holder_ratio(s, a, t);
    let best_t = |a: f64| {
        let (lo, hi) = (-24.0f64, 3.0f64);
        let (tl, v) = scan_then_golden(|lt| ratio(a, lt.exp()), lo, hi, 200);
        (tl.exp(), v)
    };
    let (_, v) = scan_then_golden(|a| best_t(a).1, 0.0, 6.0, 120);
    Ok(v.max(coarse))
}

fn holder_ratio(s: f64, a: f64, t: f64) -> f64 {
    let g = |r: f64| (-0.5 * r * r).exp();
    // G(a) - G(a+t) = G(a)(1 - e^{-at - t²/2})
    -g(a) * (-(a * t + 0.5 * t * t)).exp_m1() / t.powf(s)
}

fn scan_then_golden(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
    let step = (hi - lo) / samples as f64;
    let (mut arg, mut best) = (lo, f(lo));
    for i in 1..=samples {
        let x = lo + i as f64 * step;
        let v = f(x);
        if v > best {
            best = v;
            arg = x;
        }
    }
    let (mut a, mut b) = ((arg - step).max(lo), (arg + step).min(hi));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let v = f(mid);
    if v > best {
        (mid, v)
    } else {
        (arg, best)
    }
}

/// Plain grid maximum of the reduced ratio over `a = 6i/n`, `t = 20j/n`.
/// Grids with `n` doubled contain the coarser ones, so the estimate is
/// non-decreasing along `n = n₀·2^k`.
pub fn holder_seminorm_gaussian_sampled(s: f64, n: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::arg(format!(
            "Hölder exponent must lie in (0, 1], got {s}"
        )));
    }
    if n == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    Ok((0..=n)
        .into_par_iter()
        .map(|i| {
            let a = 6.0 * i as f64 / n as f64;
            (1..=n)
                .map(|j| holder_ratio(s, a, 20.0 * j as f64 / n as f64))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

pub const MODULUS_DIRECTIONS: usize = 32;
pub const MODULUS_RADII: usize = 16;
pub const MODULUS_MAX_RADIUS: f64 = 4.0;

/// The `z` sample: `MODULUS_DIRECTIONS` angles times `MODULUS_RADII` radii
/// log-spaced in `[ħ, 4]`.
pub fn modulus_sample(hbar: f64) -> Vec<[f64; 2]> {
    let ratio = (MODULUS_MAX_RADIUS / hbar).ln();
    let mut out = Vec::with_capacity(MODULUS_DIRECTIONS * MODULUS_RADII);
    for j in 0..MODULUS_DIRECTIONS {
        let th = std::f64::consts::TAU * j as f64 / MODULUS_DIRECTIONS as f64;
        for i in 0..MODULUS_RADII {
            let r = hbar * (ratio * i as f64 / (MODULUS_RADII - 1) as f64).exp();
            out.push([r * th.cos(), r * th.sin()]);
        }
    }
    out
}

/// `‖f - f(· + a)‖_{L²}` for many `a` from one transform, by Parseval:
/// `2Σ|f̂|²(1 - cos(ζ·a))`.
pub fn l2_translation_defects(f: &PhaseSpaceFunction, shifts: &[[f64; 2]]) -> Vec<f64> {
    power_translation_defects(&fourier_phase(f), shifts)
}

pub(crate) fn power_translation_defects(
    spec: &Spectrum<PhaseSpaceGrid>,
    shifts: &[[f64; 2]],
) -> Vec<f64> {
    let g = spec.grid();
    let (xa, pa) = (g.x_axis(), g.p_axis());
    let (nx, np) = (xa.n, pa.n);
    let power: Vec<f64> = spec.values().iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    let xi = xa.frequencies();
    let eta = pa.frequencies();
    let cell = spec.dual_cell_volume();
    shifts
        .par_iter()
        .map(|a| {
            let (ce, se): (Vec<f64>, Vec<f64>) = eta
                .iter()
                .map(|e| ((e * a[1]).cos(), (e * a[1]).sin()))
                .unzip();
            let mut acc = 0.0;
            for k in 0..nx {
                let row = &power[k * np..(k + 1) * np];
                let (mut c, mut s) = (0.0, 0.0);
                for m in 0..np {
                    c += row[m] * ce[m];
                    s += row[m] * se[m];
                }
                let (sk, ck) = (xi[k] * a[0]).sin_cos();
                acc += ck * c - sk * s;
            }
            (2.0 * (total - acc) * cell).max(0.0).sqrt()
        })
        .collect()
}

/// `‖ ‖f - f(· + ħz)‖_{L^p} / |z|^r ‖_{L^q(dz)}` over `modulus_sample(ħ)`;
/// `q = ∞` takes the maximum, finite `q` uses the polar quadrature
/// `dz = |z|² dlog|z| dθ` on the sample (d = 1).
pub fn translation_modulus(
    f: &PhaseSpaceFunction,
    p: f64,
    r: f64,
    q: f64,
    hbar: f64,
) -> Result<f64> {
    check_p(p)?;
    if f.grid().d() != 1 {
        return Err(Error::UnsupportedDimension {
            op: "translation_modulus",
            d: f.grid().d(),
        });
    }
    if !(q >= 1.0) || !(r >= 0.0) || !(hbar > 0.0 && hbar < MODULUS_MAX_RADIUS) {
        return Err(Error::arg("need q >= 1, r >= 0 and 0 < ħ < 4"));
    }
    let zs = modulus_sample(hbar);
    let shifts: Vec<[f64; 2]> = zs.iter().map(|z| [hbar * z[0], hbar * z[1]]).collect();
    let defects: Vec<f64> = if p == 2.0 {
        l2_translation_defects(f, &shifts)
    } else {
        shifts
            .par_iter()
            .map(|a| {
                let moved = fourier_shift(f, a);
                let diff = f.zip_with(&moved.map(|v| v.re), |x, y| x - y);
                lp_norm(&diff, p).expect("p checked")
            })
            .collect()
    };
    let vals = defects
        .iter()
        .zip(&zs)
        .map(|(v, z)| v / z[0].hypot(z[1]).powf(r));
    if q.is_infinite() {
        return Ok(vals.fold(0.0, f64::max));
    }
    let dlog = (MODULUS_MAX_RADIUS / hbar).ln() / (MODULUS_RADII - 1) as f64;
    let dth = std::f64::consts::TAU / MODULUS_DIRECTIONS as f64;
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
    Ok(sum.powf(1.0 / q))
}

/// Both sides of
/// `‖f - f(· + ħz₀)‖_{L²} = (2πħ)^{d/2} ‖[O_{p₀,-x₀}, γ]‖_HS`, `f = W^ħ[γ]`,
/// `z₀ = (x₀, p₀)`: the left side from the sampled Wigner function, the right
/// side from Weyl operators on the orbital grid (d = 1, orthonormal factors).
pub fn commutator_identity_check(
    gamma: &DensityKernel,
    z0: (f64, f64),
    pgrid: &PhaseSpaceGrid,
) -> Result<(f64, f64)> {
    let hbar = gamma.hbar();
    let (x0, p0) = z0;
    if z0 == (0.0, 0.0) {
        return Ok((0.0, 0.0));
    }
    let f = crate::wigner::wigner_transform(gamma, pgrid)?;
    let lhs = l2_translation_defects(&f, &[[hbar * x0, hbar * p0]])[0];
    let grid = gamma.grid();
    let op = WeylPoint::new(vec![p0], vec![-x0])?;
    let moved: Vec<Vec<Complex64>> = gamma
        .vectors()
        .par_iter()
        .map(|v| weyl_apply(&op, v, grid, hbar))
        .collect::<Result<_>>()?;
    let w = gamma.weights();
    let vol = grid.cell_volume();
    let mut cross = 0.0;
    for (i, oi) in moved.iter().enumerate() {
        for (j, vj) in gamma.vectors().iter().enumerate() {
            let ov: Complex64 = vj
                .iter()
                .zip(oi)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                * vol;
            cross += w[i] * w[j] * ov.norm_sqr();
        }
    }
    let diag: f64 = w.iter().map(|x| x * x).sum();
    let hs_sq = (2.0 * diag - 2.0 * cross).max(0.0);
    let rhs = (2.0 * std::f64::consts::PI * hbar).sqrt() * hs_sq.sqrt();
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::gamma1;
    use crate::grids::make_phase_grid;
    use crate::orbitals::hermite_basis;
    use crate::wigner::{laguerre_oracle, wigner_transform};
    use std::f64::consts::PI;

    #[test]
    fn disk_norms() {
        let pg = make_phase_grid(1, 4.0, 4.0, 512, 512).unwrap();
        let f = GridFunction::from_fn(pg, |z| {
            if z[0] * z[0] + z[1] * z[1] <= 2.0 {
                1.0
            } else {
                0.0
            }
        });
        let l1 = lp_norm(&f, 1.0).unwrap();
        assert!((l1 - 2.0 * PI).abs() < 1e-2);
        assert!((lp_norm(&f, 2.0).unwrap().powi(2) - l1).abs() < 1e-12);
        assert!((lp_norm(&f, 4.0).unwrap().powi(4) - l1).abs() < 1e-10);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn harmonic_l2_norm_and_sobolev_bounds() {
        let pg = make_phase_grid(1, 8.0, 8.0, 1024, 1024).unwrap();
        let f = laguerre_oracle(64, 1.0 / 64.0, &pg).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() / (2.0 * PI).sqrt() - 1.0).abs() < 1e-2);
        let mut prev = f64::INFINITY;
        for s in [0.25, 0.5, 1.0, 2.0] {
            let sup = sobolev_norm(&f, s, f64::INFINITY).unwrap();
            assert!(sup <= 1.0 + 1e-8);
            let two = sobolev_norm(&f, s, 2.0).unwrap();
            assert!(two <= prev);
            prev = two;
        }
        assert!(sobolev_norm(&f, 0.5, 1.0).is_err());
    }

    #[test]
    fn holder_constant() {
        let v1 = holder_seminorm_gaussian(1.0).unwrap();
        assert!((v1 - (-0.5f64).exp()).abs() < 1e-8, "{v1}");
        let half = holder_seminorm_gaussian(0.5).unwrap();
        assert!(half.is_finite() && half > 0.0);
        let mut prev = 0.0;
        for n in [16, 32, 64, 128, 256] {
            let v = holder_seminorm_gaussian_sampled(0.5, n).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(half >= prev);
        assert!(holder_seminorm_gaussian(1.5).is_err());
    }

    #[test]
    fn translation_modulus_of_gaussian() {
        let pg = make_phase_grid(1, 8.0, 8.0, 256, 256).unwrap();
        let f = GridFunction::from_fn(pg.clone(), |z| (-(z[0] * z[0] + z[1] * z[1])).exp());
        // ‖∇f‖_{L¹} = ∫ 2r e^{-r²} 2πr dr = π^{3/2}
        let hbar = 0.05;
        let m = translation_modulus(&f, 1.0, 1.0, f64::INFINITY, hbar).unwrap();
        assert!(m <= hbar * PI.powf(1.5) * 1.001, "{m}");
        let c = GridFunction::from_fn(pg, |_| 1.0);
        assert!(translation_modulus(&c, 2.0, 0.5, f64::INFINITY, hbar).unwrap() < 1e-10);
        // the two L² routes agree
        let p2 = translation_modulus(&f, 2.0, 0.5, 3.0, hbar).unwrap();
        let shifts: Vec<[f64; 2]> = modulus_sample(hbar)
            .iter()
            .map(|z| [hbar * z[0], hbar * z[1]])
            .collect();
        let a = l2_translation_defects(&f, &shifts[40..41]);
        let moved = fourier_shift(&f, &shifts[40]).map(|v| v.re);
        let b = lp_norm(&f.sub(&moved), 2.0).unwrap();
        assert!((a[0] - b).abs() < 1e-10 * b.max(1e-3));
        assert!(p2.is_finite());
    }

    #[test]
    fn commutator_identity() {
        let pg = make_phase_grid(1, 8.0, 8.0, 512, 512).unwrap();
        let s = hermite_basis(16, 1.0 / 16.0, pg.spatial()).unwrap();
        let gamma = gamma1(&s);
        let (l, r) = commutator_identity_check(&gamma, (1.0, 0.0), &pg).unwrap();
        assert!((l - r).abs() / r < 1e-4, "{l} vs {r}");
        let (l, r) = commutator_identity_check(&gamma, (0.3, -0.7), &pg).unwrap();
        assert!((l - r).abs() / r < 1e-4, "{l} vs {r}");
        assert_eq!(
            commutator_identity_check(&gamma, (0.0, 0.0), &pg).unwrap(),
            (0.0, 0.0)
        );
        let f = wigner_transform(&gamma, &pg).unwrap();
        let sup = sup_norm(&f);
        let l1 = lp_norm(&f, 1.0).unwrap();
        assert!(lp_norm(&f, 4.0).unwrap() <= l1.powf(0.25) * sup.powf(0.75) + 1e-12);
    }
}
