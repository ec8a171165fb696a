//! Thin wrappers over `rustfft`: multi-axis transforms of row-major buffers,
//! trigonometric resampling and a chirp-z evaluator for arbitrary output grids.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn plan(n: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction))
}

/// Unnormalized transform along every axis of a row-major buffer.
pub(crate) fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "buffer does not match shape");
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, direction);
    }
}

pub(crate) fn fft_axis(
    data: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    direction: FftDirection,
) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let fft = plan(n, direction);
    let inner: usize = shape[axis + 1..].iter().product();
    if inner == 1 {
        fft.process(data);
        return;
    }
    let block = n * inner;
    let mut lines = vec![Complex64::default(); block];
    for chunk in data.chunks_mut(block) {
        for (j, row) in chunk.chunks(inner).enumerate() {
            for (i, v) in row.iter().enumerate() {
                lines[i * n + j] = *v;
            }
        }
        fft.process(&mut lines);
        for (j, row) in chunk.chunks_mut(inner).enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = lines[i * n + j];
            }
        }
    }
}

/// Trigonometric interpolation of a periodic sample vector onto `q` times as
/// many points (same period).
pub(crate) fn refine_periodic(samples: &[Complex64], q: usize) -> Vec<Complex64> {
    let n = samples.len();
    if q == 1 {
        return samples.to_vec();
    }
    let m = n * q;
    let mut spec = samples.to_vec();
    plan(n, FftDirection::Forward).process(&mut spec);
    let mut padded = vec![Complex64::default(); m];
    let half = n / 2;
    for k in 0..half {
        padded[k] = spec[k];
    }
    for k in half + 1..n {
        padded[m - n + k] = spec[k];
    }
    // split the Nyquist bin so real inputs stay real
    padded[half] = spec[half] * 0.5;
    padded[m - half] += spec[half] * 0.5;
    plan(m, FftDirection::Inverse).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= scale);
    padded
}

/// Evaluates `X_m = sum_k x_k exp(-i theta m k)` for `m < outputs` with
/// Bluestein's algorithm.
pub(crate) struct ChirpZ {
    inputs: usize,
    outputs: usize,
    len: usize,
    chirp: Vec<Complex64>,
    filter: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ChirpZ {
    pub(crate) fn new(inputs: usize, outputs: usize, theta: f64) -> Self {
        let len = (inputs + outputs - 1).next_power_of_two();
        let span = inputs.max(outputs);
        let half = 0.5 * theta;
        let phase = |k: usize| -> Complex64 {
            let k = k as f64;
            let angle = (half * k * k).rem_euclid(std::f64::consts::TAU);
            Complex64::from_polar(1.0, -angle)
        };
        let chirp: Vec<Complex64> = (0..span).map(phase).collect();
        let mut filter = vec![Complex64::default(); len];
        for j in 0..outputs {
            filter[j] = chirp[j].conj();
        }
        for j in 1..inputs {
            filter[len - j] = chirp[j].conj();
        }
        let forward = plan(len, FftDirection::Forward);
        let inverse = plan(len, FftDirection::Inverse);
        forward.process(&mut filter);
        ChirpZ {
            inputs,
            outputs,
            len,
            chirp,
            filter,
            forward,
            inverse,
        }
    }

    pub(crate) fn inputs(&self) -> usize {
        self.inputs
    }

    /// `x.len()` may be shorter than the planned input length (zero padded).
    pub(crate) fn apply(&self, x: &[Complex64], work: &mut Vec<Complex64>, out: &mut [Complex64]) {
        debug_assert!(x.len() <= self.inputs);
        debug_assert_eq!(out.len(), self.outputs);
        work.clear();
        work.resize(self.len, Complex64::default());
        for (k, v) in x.iter().enumerate() {
            work[k] = v * self.chirp[k];
        }
        self.forward.process(work);
        for (w, f) in work.iter_mut().zip(&self.filter) {
            *w *= f;
        }
        self.inverse.process(work);
        let scale = 1.0 / self.len as f64;
        for (m, o) in out.iter_mut().enumerate() {
            *o = work[m] * self.chirp[m] * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let a = sign * std::f64::consts::TAU * (j * k) as f64 / n as f64;
                        v * Complex64::from_polar(1.0, a)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn nd_transform_matches_separable_naive_dft() {
        let shape = [4usize, 6];
        let data: Vec<Complex64> = (0..24)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &shape, FftDirection::Forward);
        let mut rows: Vec<Complex64> = Vec::new();
        for r in data.chunks(6) {
            rows.extend(naive_dft(r, -1.0));
        }
        let mut expected = rows.clone();
        for c in 0..6 {
            let col: Vec<Complex64> = (0..4).map(|r| rows[r * 6 + c]).collect();
            for (r, v) in naive_dft(&col, -1.0).into_iter().enumerate() {
                expected[r * 6 + c] = v;
            }
        }
        for (a, b) in fast.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn chirp_z_matches_direct_sum() {
        let x: Vec<Complex64> = (0..37)
            .map(|i| Complex64::new((i as f64).cos(), 0.3 * i as f64 / 37.0))
            .collect();
        let theta = 0.0917;
        let cz = ChirpZ::new(40, 23, theta);
        let mut out = vec![Complex64::default(); 23];
        cz.apply(&x, &mut Vec::new(), &mut out);
        for (m, o) in out.iter().enumerate() {
            let direct: Complex64 = x
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -theta * (m * k) as f64))
                .sum();
            assert!((o - direct).norm() < 1e-11, "m = {m}");
        }
    }

    #[test]
    fn refinement_interpolates_trigonometric_polynomials() {
        let n = 16;
        let f = |t: f64| (3.0 * t).cos() + 0.5 * (2.0 * t).sin();
        let samples: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(f(std::f64::consts::TAU * j as f64 / n as f64), 0.0))
            .collect();
        let fine = refine_periodic(&samples, 4);
        for (j, v) in fine.iter().enumerate() {
            let t = std::f64::consts::TAU * j as f64 / (4 * n) as f64;
            assert!((v.re - f(t)).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }
}
