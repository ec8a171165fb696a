use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grids::{fft, Domain, SpatialGrid};

/// External trap `U`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapSpec {
    /// `U(x) = |x|²`.
    Harmonic,
    /// `U(x) = Σ_k c_k |x|^k`.
    Polynomial { coefficients: Vec<f64> },
    /// Samples on the grid the trap is used with, row-major.
    Custom { samples: Vec<f64> },
}

impl TrapSpec {
    pub fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        let values = match self {
            TrapSpec::Harmonic => grid.radius_sq(),
            TrapSpec::Polynomial { coefficients } => grid
                .radius_sq()
                .into_iter()
                .map(|r2| {
                    let r = r2.sqrt();
                    coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c)
                })
                .collect(),
            TrapSpec::Custom { samples } => {
                if samples.len() != grid.len() {
                    return Err(Error::arg(format!(
                        "custom trap has {} samples, grid has {} points",
                        samples.len(),
                        grid.len()
                    )));
                }
                samples.clone()
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("trap potential must be finite on the grid"));
        }
        Ok(values)
    }

    /// Evaluates the closed-form traps at one point given `|x|²`.
    pub fn eval_radius_sq(&self, r2: f64) -> Option<f64> {
        match self {
            TrapSpec::Harmonic => Some(r2),
            TrapSpec::Polynomial { coefficients } => {
                let r = r2.sqrt();
                Some(coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c))
            }
            TrapSpec::Custom { .. } => None,
        }
    }
}

/// Pair interaction `V`, even with `V̂ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    #[default]
    None,
    /// `strength · exp(-x²/(2 width²))`.
    Gaussian { strength: f64, width: f64 },
    /// `strength / sqrt(x² + softening²)`.
    SoftCoulomb { strength: f64, softening: f64 },
    /// Samples at offsets `(k - n/2)·spacing`, `k = 0..n`.
    Custom { samples: Vec<f64> },
}

const TAPER_START: f64 = 0.75;
const POSITIVITY_TOL: f64 = 1e-10;

impl InteractionSpec {
    pub fn is_none(&self) -> bool {
        matches!(self, InteractionSpec::None)
    }

    pub fn eval(&self, r: f64) -> Option<f64> {
        match *self {
            InteractionSpec::None => Some(0.0),
            InteractionSpec::Gaussian { strength, width } => {
                Some(strength * (-r * r / (2.0 * width * width)).exp())
            }
            InteractionSpec::SoftCoulomb {
                strength,
                softening,
            } => Some(strength / (r * r + softening * softening).sqrt()),
            InteractionSpec::Custom { .. } => None,
        }
    }

    /// Periodic convolution kernel on `grid`; `None` for no interaction.
    pub fn kernel(&self, grid: &SpatialGrid) -> Result<Option<ConvolutionKernel>> {
        if self.is_none() {
            return Ok(None);
        }
        if grid.d() != 1 {
            return Err(Error::UnsupportedDimension {
                op: "pair interaction",
                d: grid.d(),
            });
        }
        let n = grid.n();
        let h = grid.spacing();
        let l = grid.half_width();
        // wrapped order: offset k·h for k < n/2, (k - n)·h above
        let offset = |k: usize| {
            if k < n / 2 {
                k as f64 * h
            } else {
                (k as f64 - n as f64) * h
            }
        };
        let mut samples = vec![0.0; n];
        match self {
            InteractionSpec::Custom { samples: s } => {
                if s.len() != n {
                    return Err(Error::arg(format!(
                        "custom interaction has {} samples, grid has {n}",
                        s.len()
                    )));
                }
                for k in 1..n / 2 {
                    if (s[n / 2 + k] - s[n / 2 - k]).abs() > 1e-12 * s[n / 2].abs().max(1.0) {
                        return Err(Error::arg("interaction samples must be even"));
                    }
                }
                for (k, v) in samples.iter_mut().enumerate() {
                    *v = s[(k + n / 2) % n];
                }
            }
            InteractionSpec::Gaussian { width, .. } if *width <= 0.0 => {
                return Err(Error::arg("gaussian width must be positive"));
            }
            InteractionSpec::SoftCoulomb { softening, .. } if *softening <= 0.0 => {
                return Err(Error::arg("soft-Coulomb softening must be positive"));
            }
            _ => {
                for (k, v) in samples.iter_mut().enumerate() {
                    let r = offset(k).abs();
                    *v = self.eval(r).expect("closed form") * taper(r, l);
                }
            }
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::fft_axis(&mut buf, &[n], 0, FftDirection::Forward);
        let mut hat: Vec<f64> = buf.iter().map(|v| v.re).collect();
        let scale = hat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let worst = hat.iter().copied().fold(f64::INFINITY, f64::min);
        if worst < -POSITIVITY_TOL * scale {
            match self {
                InteractionSpec::Custom { .. } | InteractionSpec::Gaussian { .. } => {
                    return Err(Error::arg(format!(
                        "interaction transform has a negative value {worst:e} (max {scale:e})"
                    )));
                }
                // truncation ripple of the slowly decaying tail; project it out
                _ => hat.iter_mut().for_each(|v| *v = v.max(0.0)),
            }
        }
        Ok(Some(ConvolutionKernel { n, spacing: h, hat }))
    }
}

fn taper(r: f64, l: f64) -> f64 {
    let start = TAPER_START * l;
    if r <= start {
        1.0
    } else if r >= l {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - start) / (l - start)).cos())
    }
}

/// `V` on a periodic 1-D grid, stored as its discrete transform.
#[derive(Clone, Debug)]
pub struct ConvolutionKernel {
    n: usize,
    spacing: f64,
    hat: Vec<f64>,
}

impl ConvolutionKernel {
    /// Discrete transform of the wrapped samples (natural order).
    pub fn hat(&self) -> &[f64] {
        &self.hat
    }

    /// `(V * g)(x_i) = Σ_j V(x_i - x_j) g_j h`.
    pub fn convolve(&self, g: &[f64]) -> Vec<f64> {
        let buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.convolve_complex(&buf).iter().map(|v| v.re).collect()
    }

    pub fn convolve_complex(&self, g: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(g.len(), self.n, "convolution grid mismatch");
        let mut buf = g.to_vec();
        fft::fft_axis(&mut buf, &[self.n], 0, FftDirection::Forward);
        let scale = self.spacing / self.n as f64;
        for (v, k) in buf.iter_mut().zip(&self.hat) {
            *v *= k * scale;
        }
        fft::fft_axis(&mut buf, &[self.n], 0, FftDirection::Inverse);
        buf
    }

    /// `∬ g(x) V(x - y) conj(g(y))`, real and nonnegative.
    pub fn quadratic_form(&self, g: &[Complex64]) -> f64 {
        let mut buf = g.to_vec();
        fft::fft_axis(&mut buf, &[self.n], 0, FftDirection::Forward);
        let scale = self.spacing * self.spacing / self.n as f64;
        buf.iter()
            .zip(&self.hat)
            .map(|(v, k)| v.norm_sqr() * k)
            .sum::<f64>()
            * scale
    }
}
