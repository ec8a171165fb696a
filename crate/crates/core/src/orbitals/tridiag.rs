//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection and inverse iteration.

pub(crate) struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

const CLUSTER_REL: f64 = 1e-9;

impl SymTridiagonal {
    pub(crate) fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    pub(crate) fn dim(&self) -> usize {
        self.diag.len()
    }

    fn gershgorin(&self) -> (f64, f64) {
        let m = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..m {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < m { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE * 1e10;
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.dim() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `count` smallest eigenvalues in ascending order.
    pub(crate) fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let (glo, ghi) = self.gershgorin();
        let pad = 1e-12 * (glo.abs().max(ghi.abs()) + 1.0);
        (0..count)
            .map(|k| {
                let (mut lo, mut hi) = (glo - pad, ghi + pad);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > k {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Solves `(T - shift) y = rhs` in place with partial pivoting.
    fn solve_shifted(&self, shift: f64, rhs: &mut [f64]) {
        let m = self.dim();
        let tiny = f64::EPSILON * (self.gershgorin().1.abs() + 1.0) * 1e-3;
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut du = self.off.clone();
        let mut dl = self.off.clone();
        for i in 0..m - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                rhs[i + 1] -= fact * rhs[i];
                dl[i] = 0.0;
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < m {
                    dl[i] = du[i + 1];
                    du[i + 1] = -fact * dl[i];
                } else {
                    dl[i] = 0.0;
                }
                du[i] = temp;
                let t = rhs[i];
                rhs[i] = rhs[i + 1];
                rhs[i + 1] = t - fact * rhs[i + 1];
            }
        }
        if d[m - 1] == 0.0 {
            d[m - 1] = tiny;
        }
        rhs[m - 1] /= d[m - 1];
        if m >= 2 {
            rhs[m - 2] = (rhs[m - 2] - du[m - 2] * rhs[m - 1]) / d[m - 2];
        }
        for i in (0..m.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - dl[i] * rhs[i + 2]) / d[i];
        }
    }

    /// Eigenvectors (unit Euclidean norm) for ascending eigenvalues,
    /// orthogonalized within clusters of near-equal eigenvalues.
    pub(crate) fn eigenvectors(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let m = self.dim();
        let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        for (k, &lambda) in values.iter().enumerate() {
            if k > 0 && lambda - values[k - 1] > CLUSTER_REL * scale {
                cluster_start = k;
            }
            let mut v: Vec<f64> = (0..m)
                .map(|j| 1.0 + 0.5 * ((j as f64) * 0.618_034 + k as f64).sin())
                .collect();
            for _ in 0..4 {
                self.solve_shifted(lambda, &mut v);
                for prev in &vectors[cluster_start..k] {
                    for _ in 0..2 {
                        let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                        v.iter_mut().zip(prev).for_each(|(a, b)| *a -= dot * b);
                    }
                }
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= norm);
            }
            vectors.push(v);
        }
        vectors
    }

    /// `‖T v - λ v‖` for diagnostics.
    #[cfg(test)]
    pub(crate) fn residual(&self, lambda: f64, v: &[f64]) -> f64 {
        let m = self.dim();
        (0..m)
            .map(|i| {
                let mut t = (self.diag[i] - lambda) * v[i];
                if i > 0 {
                    t += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < m {
                    t += self.off[i] * v[i + 1];
                }
                t * t
            })
            .sum::<f64>()
            .sqrt()
    }
}
