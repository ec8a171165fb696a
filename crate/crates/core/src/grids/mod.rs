//! Uniform tensor grids, rectangle-rule quadrature and the phase-space Fourier
//! transform `ĝ(ζ) = (2π)^{-n/2} ∫ e^{-iζ·z} g(z) dz`.

pub mod dump;
pub(crate) mod fft;

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One periodic axis `[-half_width, half_width)` with `n` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub half_width: f64,
    pub n: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Centered dual frequency `(k - n/2) π / half_width`.
    pub fn frequency(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dual_spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }

    pub fn dual_spacing(&self) -> f64 {
        PI / self.half_width
    }

    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }
}

/// Anything that lays values out on a row-major product of axes.
pub trait Domain: Clone + Send + Sync {
    fn axes(&self) -> Vec<Axis>;

    fn shape(&self) -> Vec<usize> {
        self.axes().iter().map(|a| a.n).collect()
    }

    fn len(&self) -> usize {
        self.axes().iter().map(|a| a.n).product()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell_volume(&self) -> f64 {
        self.axes().iter().map(|a| a.spacing()).product()
    }

    fn dual_cell_volume(&self) -> f64 {
        self.axes().iter().map(|a| a.dual_spacing()).product()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    d: usize,
    half_width: f64,
    n: usize,
}

impl SpatialGrid {
    /// Standard grid: `n` a power of two, at least 8.
    pub fn new(d: usize, half_width: f64, n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 8 {
            return Err(Error::InvalidGrid(format!(
                "point count {n} must be a power of two >= 8"
            )));
        }
        Self::coarse(d, half_width, n)
    }

    /// Any even `n >= 8`; used for the coarse order-k grids.
    pub fn coarse(d: usize, half_width: f64, n: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in 1..=3")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be positive"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "point count {n} must be even and >= 8"
            )));
        }
        Ok(SpatialGrid { d, half_width, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn axis(&self) -> Axis {
        Axis {
            half_width: self.half_width,
            n: self.n,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        self.axis().coord(j)
    }

    /// Coordinates along one axis.
    pub fn points(&self) -> Vec<f64> {
        self.axis().coords()
    }

    /// `|x|²` at every grid point, row-major.
    pub fn radius_sq(&self) -> Vec<f64> {
        let pts = self.points();
        let mut out = vec![0.0; self.len()];
        for (idx, r2) in out.iter_mut().enumerate() {
            let mut rest = idx;
            for _ in 0..self.d {
                let x = pts[rest % self.n];
                *r2 += x * x;
                rest /= self.n;
            }
        }
        out
    }

    /// Whether every point of `other` is a point of `self`.
    pub fn contains_grid(&self, other: &SpatialGrid) -> bool {
        let h = self.spacing();
        let ratio = other.spacing() / h;
        let offset = (other.half_width - self.half_width) / h;
        let near_int = |v: f64| (v - v.round()).abs() < 1e-9;
        other.d == self.d
            && other.half_width <= self.half_width * (1.0 + 1e-12)
            && near_int(ratio)
            && ratio.round() >= 1.0
            && near_int(offset)
    }
}

impl Domain for SpatialGrid {
    fn axes(&self) -> Vec<Axis> {
        vec![self.axis(); self.d]
    }
}

/// Product grid over `(x, p)`, `x` axes first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    spatial: SpatialGrid,
    momentum: SpatialGrid,
}

impl PhaseSpaceGrid {
    pub fn new(spatial: SpatialGrid, momentum: SpatialGrid) -> Result<Self> {
        if spatial.d != momentum.d {
            return Err(Error::InvalidGrid(
                "x and p grids differ in dimension".into(),
            ));
        }
        if spatial.d > 2 {
            return Err(Error::UnsupportedDimension {
                op: "phase-space grid",
                d: spatial.d,
            });
        }
        Ok(PhaseSpaceGrid { spatial, momentum })
    }

    pub fn d(&self) -> usize {
        self.spatial.d
    }

    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn momentum(&self) -> &SpatialGrid {
        &self.momentum
    }

    pub fn x_axis(&self) -> Axis {
        self.spatial.axis()
    }

    pub fn p_axis(&self) -> Axis {
        self.momentum.axis()
    }
}

impl Domain for PhaseSpaceGrid {
    fn axes(&self) -> Vec<Axis> {
        let mut axes = vec![self.spatial.axis(); self.spatial.d];
        axes.extend(vec![self.momentum.axis(); self.momentum.d]);
        axes
    }
}

/// The k-fold product of a phase-space grid, ordered `(z_1, ..., z_k)` with
/// each `z_i = (x_i, p_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KPhaseGrid {
    base: PhaseSpaceGrid,
    k: usize,
}

impl KPhaseGrid {
    pub fn new(base: PhaseSpaceGrid, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::arg("order k must be at least 1"));
        }
        Ok(KPhaseGrid { base, k })
    }

    pub fn base(&self) -> &PhaseSpaceGrid {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Domain for KPhaseGrid {
    fn axes(&self) -> Vec<Axis> {
        let one = self.base.axes();
        (0..self.k).flat_map(|_| one.iter().copied()).collect()
    }
}

pub fn make_phase_grid(
    d: usize,
    l_x: f64,
    l_p: f64,
    n_x: usize,
    n_p: usize,
) -> Result<PhaseSpaceGrid> {
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension {
            op: "phase-space grid",
            d,
        });
    }
    PhaseSpaceGrid::new(
        SpatialGrid::new(d, l_x, n_x)?,
        SpatialGrid::new(d, l_p, n_p)?,
    )
}

/// Sample types a grid function may carry.
pub trait Scalar: Copy + Send + Sync + std::fmt::Debug + 'static {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn modulus(self) -> f64;
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::default()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn to_complex(self) -> Complex64 {
        self
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Samples on a grid, row-major in the grid's axis order.
#[derive(Clone, Debug)]
pub struct GridFunction<G, T = f64> {
    grid: G,
    values: Vec<T>,
}

pub type PhaseSpaceFunction = GridFunction<PhaseSpaceGrid, f64>;
pub type SpatialFunction = GridFunction<SpatialGrid, f64>;

impl<G: Domain, T: Scalar> GridFunction<G, T> {
    pub fn new(grid: G, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite sample at index {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub(crate) fn from_parts(grid: G, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    /// Samples `f` at every grid point; the closure receives the coordinates.
    pub fn from_fn(grid: G, mut f: impl FnMut(&[f64]) -> T) -> Self {
        let axes = grid.axes();
        let coords: Vec<Vec<f64>> = axes.iter().map(|a| a.coords()).collect();
        let mut point = vec![0.0; axes.len()];
        let mut values = Vec::with_capacity(grid.len());
        for idx in 0..grid.len() {
            let mut rest = idx;
            for a in (0..axes.len()).rev() {
                point[a] = coords[a][rest % axes[a].n];
                rest /= axes[a].n;
            }
            values.push(f(&point));
        }
        GridFunction { grid, values }
    }

    pub fn zeros(grid: G) -> Self {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![T::zero(); n],
        }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> GridFunction<G, U> {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with<U: Scalar>(
        &self,
        other: &GridFunction<G, T>,
        f: impl Fn(T, T) -> U,
    ) -> GridFunction<G, U> {
        assert_eq!(self.values.len(), other.values.len(), "grid mismatch");
        GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

impl<G: Domain> GridFunction<G, f64> {
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }
}

impl SpatialFunction {
    /// Linear interpolation in one dimension; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        debug_assert_eq!(self.grid.d, 1);
        let h = self.grid.spacing();
        let t = (x + self.grid.half_width) / h;
        if !(0.0..=(self.grid.n - 1) as f64).contains(&t) {
            return 0.0;
        }
        let j = (t.floor() as usize).min(self.grid.n - 2);
        let w = t - j as f64;
        (1.0 - w) * self.values[j] + w * self.values[j + 1]
    }
}

/// Rectangle-rule integral over the whole grid.
pub fn integrate<G: Domain, T: Scalar>(f: &GridFunction<G, T>) -> T {
    let sum = f.values.iter().fold(T::zero(), |acc, &v| acc.add(v));
    sum.scale(f.grid.cell_volume())
}

/// Samples of a transform on the centered dual grid of `grid`.
#[derive(Clone, Debug)]
pub struct Spectrum<G> {
    grid: G,
    values: Vec<Complex64>,
}

impl<G: Domain> Spectrum<G> {
    pub(crate) fn from_parts(grid: G, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Spectrum { grid, values }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Value at ζ = 0.
    pub fn at_origin(&self) -> Complex64 {
        let axes = self.grid.axes();
        let mut idx = 0;
        for a in &axes {
            idx = idx * a.n + a.n / 2;
        }
        self.values[idx]
    }

    /// `|ζ|²` at every dual point, row-major.
    pub fn frequency_sq(&self) -> Vec<f64> {
        frequency_sq(&self.grid.axes())
    }

    pub fn dual_cell_volume(&self) -> f64 {
        self.grid.dual_cell_volume()
    }

    /// Multi-index of a flat dual index.
    pub fn index(&self, flat: usize) -> Vec<usize> {
        let axes = self.grid.axes();
        let mut out = vec![0; axes.len()];
        let mut rest = flat;
        for a in (0..axes.len()).rev() {
            out[a] = rest % axes[a].n;
            rest /= axes[a].n;
        }
        out
    }
}

pub(crate) fn frequency_sq(axes: &[Axis]) -> Vec<f64> {
    let total: usize = axes.iter().map(|a| a.n).product();
    let mut out = vec![0.0; total];
    let mut stride = total;
    for a in axes {
        stride /= a.n;
        let freqs = a.frequencies();
        for (idx, v) in out.iter_mut().enumerate() {
            let z = freqs[(idx / stride) % a.n];
            *v += z * z;
        }
    }
    out
}

/// Per-axis centered sign pattern `(-1)^{k - n/2}` from the offset `-L` of
/// the grid origin: `e^{iζ_k L} = e^{i(k - n/2)π}`.
fn centered_sign(axes: &[Axis], idx: usize) -> f64 {
    let mut rest = idx;
    let mut parity = 0usize;
    for a in axes.iter().rev() {
        let k = rest % a.n;
        rest /= a.n;
        parity += (k + a.n / 2) % 2;
    }
    if parity.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Index permutation between natural FFT order and centered order on every
/// axis (an involution for even counts).
fn fftshift_index(axes: &[Axis], idx: usize) -> usize {
    let mut rest = idx;
    let mut out = 0;
    let mut stride = 1;
    for a in axes.iter().rev() {
        let k = rest % a.n;
        rest /= a.n;
        out += ((k + a.n / 2) % a.n) * stride;
        stride *= a.n;
    }
    out
}

pub(crate) fn forward_centered(axes: &[Axis], mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
    fft::fft_nd(&mut buf, &shape, FftDirection::Forward);
    let dim = axes.len() as i32;
    let cell: f64 = axes.iter().map(|a| a.spacing()).product();
    let scale = cell * (2.0 * PI).powi(-dim).sqrt();
    let mut out = vec![Complex64::default(); buf.len()];
    for (k, o) in out.iter_mut().enumerate() {
        *o = buf[fftshift_index(axes, k)] * (scale * centered_sign(axes, k));
    }
    out
}

pub(crate) fn inverse_centered(axes: &[Axis], values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vec![Complex64::default(); values.len()];
    for (k, v) in values.iter().enumerate() {
        buf[fftshift_index(axes, k)] = v * centered_sign(axes, k);
    }
    let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
    fft::fft_nd(&mut buf, &shape, FftDirection::Inverse);
    let dim = axes.len() as i32;
    let dual: f64 = axes.iter().map(|a| a.dual_spacing()).product();
    let scale = dual * (2.0 * PI).powi(-dim).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Discrete `ĝ` on the centered dual grid, continuum normalization.
pub fn fourier_phase<G: Domain, T: Scalar>(f: &GridFunction<G, T>) -> Spectrum<G> {
    let axes = f.grid.axes();
    let buf: Vec<Complex64> = f.values.iter().map(|v| v.to_complex()).collect();
    Spectrum {
        grid: f.grid.clone(),
        values: forward_centered(&axes, buf),
    }
}

pub fn inverse_fourier_phase<G: Domain>(s: &Spectrum<G>) -> GridFunction<G, Complex64> {
    let axes = s.grid.axes();
    GridFunction {
        grid: s.grid.clone(),
        values: inverse_centered(&axes, &s.values),
    }
}

/// Applies a real Fourier multiplier `m(ζ)` (given on natural FFT order
/// frequencies) and returns the real part; `m` must be even for real output.
pub(crate) fn apply_multiplier<G: Domain>(
    f: &GridFunction<G, f64>,
    m: impl Fn(&[f64]) -> f64,
) -> GridFunction<G, f64> {
    let axes = f.grid.axes();
    let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft_nd(&mut buf, &shape, FftDirection::Forward);
    let freqs: Vec<Vec<f64>> = axes.iter().map(natural_frequencies).collect();
    let mut zeta = vec![0.0; axes.len()];
    for (idx, v) in buf.iter_mut().enumerate() {
        let mut rest = idx;
        for a in (0..axes.len()).rev() {
            zeta[a] = freqs[a][rest % axes[a].n];
            rest /= axes[a].n;
        }
        *v *= m(&zeta);
    }
    fft::fft_nd(&mut buf, &shape, FftDirection::Inverse);
    let scale = 1.0 / f.grid.len() as f64;
    GridFunction {
        grid: f.grid.clone(),
        values: buf.iter().map(|v| v.re * scale).collect(),
    }
}

/// Translates `f` by `shift` (so the result is `f(z + shift)`) with an exact
/// Fourier phase; periodic in the box.
pub fn fourier_shift<G: Domain, T: Scalar>(
    f: &GridFunction<G, T>,
    shift: &[f64],
) -> GridFunction<G, Complex64> {
    let axes = f.grid.axes();
    assert_eq!(shift.len(), axes.len(), "shift dimension mismatch");
    let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
    let mut buf: Vec<Complex64> = f.values.iter().map(|v| v.to_complex()).collect();
    fft::fft_nd(&mut buf, &shape, FftDirection::Forward);
    let phases: Vec<Vec<Complex64>> = axes
        .iter()
        .zip(shift)
        .map(|(a, &s)| {
            (0..a.n)
                .map(|k| {
                    if 2 * k == a.n {
                        // Nyquist bin: the real cosine keeps real data real
                        Complex64::new((a.n as f64 / 2.0 * a.dual_spacing() * s).cos(), 0.0)
                    } else {
                        let signed = if k < a.n / 2 {
                            k as f64
                        } else {
                            k as f64 - a.n as f64
                        };
                        Complex64::from_polar(1.0, signed * a.dual_spacing() * s)
                    }
                })
                .collect()
        })
        .collect();
    for (idx, v) in buf.iter_mut().enumerate() {
        let mut rest = idx;
        for a in (0..axes.len()).rev() {
            *v *= phases[a][rest % axes[a].n];
            rest /= axes[a].n;
        }
    }
    fft::fft_nd(&mut buf, &shape, FftDirection::Inverse);
    let scale = 1.0 / f.grid.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    GridFunction {
        grid: f.grid.clone(),
        values: buf,
    }
}

/// Signed angular frequencies in natural FFT order.
fn natural_frequencies(a: &Axis) -> Vec<f64> {
    (0..a.n)
        .map(|k| {
            let signed = if k < a.n / 2 {
                k as f64
            } else {
                k as f64 - a.n as f64
            };
            signed * a.dual_spacing()
        })
        .collect()
}

/// `Σ_a ‖∂_a g‖²` over the grid, by Parseval.
pub fn gradient_norm_sq(grid: &SpatialGrid, values: &[Complex64]) -> f64 {
    let axes = grid.axes();
    let shape = grid.shape();
    let mut buf = values.to_vec();
    fft::fft_nd(&mut buf, &shape, FftDirection::Forward);
    let k2 = natural_frequency_sq(&axes);
    let sum: f64 = buf.iter().zip(&k2).map(|(v, k)| v.norm_sqr() * k).sum();
    sum * grid.cell_volume() / grid.len() as f64
}

/// Spectral Laplacian of a periodic sample vector.
pub fn laplacian(grid: &SpatialGrid, values: &[Complex64]) -> Vec<Complex64> {
    let axes = grid.axes();
    let shape = grid.shape();
    let mut buf = values.to_vec();
    fft::fft_nd(&mut buf, &shape, FftDirection::Forward);
    let k2 = natural_frequency_sq(&axes);
    let scale = 1.0 / grid.len() as f64;
    for (v, k) in buf.iter_mut().zip(&k2) {
        *v *= -k * scale;
    }
    fft::fft_nd(&mut buf, &shape, FftDirection::Inverse);
    buf
}

fn natural_frequency_sq(axes: &[Axis]) -> Vec<f64> {
    let total: usize = axes.iter().map(|a| a.n).product();
    let mut out = vec![0.0; total];
    let mut stride = total;
    for a in axes {
        stride /= a.n;
        let freqs = natural_frequencies(a);
        for (idx, v) in out.iter_mut().enumerate() {
            let z = freqs[(idx / stride) % a.n];
            *v += z * z;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_grid_spacings_and_nyquist() {
        let g = make_phase_grid(1, 8.0, 8.0, 256, 256).unwrap();
        assert_eq!(g.x_axis().spacing(), 0.0625);
        assert_eq!(g.p_axis().spacing(), 0.0625);
        assert!((g.x_axis().nyquist() - 50.265_482_457_436_69).abs() < 1e-12);
        // the grid keeps the TF support radius inside the box
        assert!(g.x_axis().half_width > 2f64.sqrt());
        assert_eq!(g.x_axis().frequency(0), -g.x_axis().nyquist());
    }

    #[test]
    fn grid_construction_errors() {
        assert!(make_phase_grid(1, 8.0, 8.0, 100, 256).is_err());
        assert!(make_phase_grid(1, 8.0, 8.0, 4, 4).is_err());
        assert!(make_phase_grid(1, -1.0, 8.0, 256, 256).is_err());
        assert!(make_phase_grid(1, 8.0, 0.0, 256, 256).is_err());
        assert!(make_phase_grid(3, 8.0, 8.0, 16, 16).is_err());
        assert!(SpatialGrid::coarse(1, 3.0, 48).is_ok());
        assert!(SpatialGrid::new(1, 3.0, 48).is_err());
    }

    #[test]
    fn gaussian_and_disk_integrals() {
        let g = make_phase_grid(1, 8.0, 8.0, 256, 256).unwrap();
        let gauss =
            PhaseSpaceFunction::from_fn(g.clone(), |z| 2.0 * (-z[0] * z[0] - z[1] * z[1]).exp());
        assert!((integrate(&gauss) - 2.0 * PI).abs() < 1e-8);
        let disk = PhaseSpaceFunction::from_fn(g.clone(), |z| {
            if z[0] * z[0] + z[1] * z[1] <= 2.0 {
                1.0
            } else {
                0.0
            }
        });
        assert!((integrate(&disk) - 2.0 * PI).abs() < 20.0 * g.x_axis().spacing());
        assert_eq!(integrate(&PhaseSpaceFunction::zeros(g)), 0.0);
    }

    #[test]
    fn gaussian_density_is_self_dual() {
        let g = make_phase_grid(1, 10.0, 10.0, 128, 128).unwrap();
        let f = PhaseSpaceFunction::from_fn(g, |z| {
            (-(z[0] * z[0] + z[1] * z[1]) / 2.0).exp() / (2.0 * PI)
        });
        let s = fourier_phase(&f);
        let zsq = s.frequency_sq();
        for (v, z2) in s.values().iter().zip(&zsq) {
            let expected = (-z2 / 2.0).exp() / (2.0 * PI);
            assert!((v - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_of_band_limited_gaussian() {
        let g = SpatialGrid::new(1, 8.0, 256).unwrap();
        let f = SpatialFunction::from_fn(g, |x| (-x[0] * x[0]).exp());
        let s = fourier_shift(&f, &[0.3137]);
        for (j, v) in s.values().iter().enumerate() {
            let x = f.grid().point(j) + 0.3137;
            assert!((v.re - (-x * x).exp()).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn grid_inclusion() {
        let fine = SpatialGrid::new(1, 8.0, 512).unwrap();
        let coarse = SpatialGrid::coarse(1, 3.0, 48).unwrap();
        assert!(fine.contains_grid(&coarse));
        let off = SpatialGrid::coarse(1, 3.01, 48).unwrap();
        assert!(!fine.contains_grid(&off));
    }
}
