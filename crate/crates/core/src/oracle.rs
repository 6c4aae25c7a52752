//! Brute-force references for the test suite.
//!
//! Nothing here goes through the FFT path: transforms are explicit N^2 x N^2
//! matrix products, integrals are plain collocation sums of a closure, and the
//! root finder is plain bisection. Only the wavenumber conventions (layout,
//! Nyquist handling of odd derivatives) are shared with the fast code.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dense oracle limited to even n in 2..=16, got {n}")]
    Size { n: usize },
    #[error("oversample factor must be 2, 4 or 8, got {0}")]
    Oversample(usize),
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("mean-zero input required, mean is {0:e}")]
    NonZeroMean(f64),
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
}

/// Dense DFT-matrix implementation of the spectral operators for n <= 16.
pub struct DenseSpectralOracle {
    n: usize,
    /// Row m (wavevector), column j (point): e^{-i n_m . x_j}.
    matrix: Vec<Complex64>,
}

impl DenseSpectralOracle {
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n < 2 || n > 16 || n % 2 != 0 {
            return Err(OracleError::Size { n });
        }
        let size = n * n;
        let h = 2.0 * PI / n as f64;
        let mut matrix = Vec::with_capacity(size * size);
        for m in 0..size {
            let (w1, w2) = (signed(m % n, n) as f64, signed(m / n, n) as f64);
            for j in 0..size {
                let (x1, x2) = ((j % n) as f64 * h, (j / n) as f64 * h);
                let phase = -(w1 * x1 + w2 * x2);
                matrix.push(Complex64::new(phase.cos(), phase.sin()));
            }
        }
        Ok(DenseSpectralOracle { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, len: usize) -> Result<(), OracleError> {
        let expected = self.n * self.n;
        if len != expected {
            return Err(OracleError::Length { expected, got: len });
        }
        Ok(())
    }

    /// Coefficients (1/N^2) sum_j f(x_j) e^{-i n.x_j}, direct sum.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<Complex64>, OracleError> {
        self.check(values.len())?;
        let size = self.n * self.n;
        let scale = 1.0 / size as f64;
        Ok((0..size)
            .map(|m| {
                let row = &self.matrix[m * size..(m + 1) * size];
                row.iter().zip(values).map(|(w, v)| w * v).sum::<Complex64>() * scale
            })
            .collect())
    }

    /// Synthesis sum_n c(n) e^{i n.x_j}, real part.
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Vec<f64>, OracleError> {
        self.check(coeffs.len())?;
        let size = self.n * self.n;
        Ok((0..size)
            .map(|j| {
                (0..size)
                    .map(|m| (coeffs[m] * self.matrix[m * size + j].conj()).re)
                    .sum()
            })
            .collect())
    }

    fn apply_symbol(
        &self,
        values: &[f64],
        symbol: impl Fn(usize, usize) -> Complex64,
    ) -> Result<Vec<f64>, OracleError> {
        let n = self.n;
        let coeffs: Vec<Complex64> = self
            .transform(values)?
            .into_iter()
            .enumerate()
            .map(|(m, c)| c * symbol(m % n, m / n))
            .collect();
        self.synthesize(&coeffs)
    }

    /// Derivative of the given order along axis 0 (x1) or 1 (x2).
    pub fn derivative(&self, values: &[f64], axis: usize, order: u32) -> Result<Vec<f64>, OracleError> {
        let n = self.n;
        self.apply_symbol(values, |k1, k2| {
            let k = if axis == 0 { k1 } else { k2 };
            let w = if order % 2 == 1 && k == n / 2 {
                0.0
            } else {
                signed(k, n) as f64
            };
            Complex64::new(0.0, w).powu(order)
        })
    }

    pub fn laplacian(&self, values: &[f64]) -> Result<Vec<f64>, OracleError> {
        let n = self.n;
        self.apply_symbol(values, |k1, k2| Complex64::new(-norm_sq(k1, k2, n), 0.0))
    }

    pub fn bilaplacian(&self, values: &[f64]) -> Result<Vec<f64>, OracleError> {
        let n = self.n;
        self.apply_symbol(values, |k1, k2| Complex64::new(norm_sq(k1, k2, n).powi(2), 0.0))
    }

    pub fn inverse_laplacian(&self, values: &[f64]) -> Result<Vec<f64>, OracleError> {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if mean.abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(OracleError::NonZeroMean(mean));
        }
        let n = self.n;
        self.apply_symbol(values, |k1, k2| {
            if k1 == 0 && k2 == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(1.0 / norm_sq(k1, k2, n), 0.0)
            }
        })
    }

    /// Leray projection with the odd-derivative wavevector.
    pub fn leray(&self, u1: &[f64], u2: &[f64]) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
        let n = self.n;
        let a = self.transform(u1)?;
        let b = self.transform(u2)?;
        let mut p1 = a.clone();
        let mut p2 = b.clone();
        for m in 0..n * n {
            let odd = |k: usize| if k == n / 2 { 0.0 } else { signed(k, n) as f64 };
            let (k1, k2) = (odd(m % n), odd(m / n));
            let kk = k1 * k1 + k2 * k2;
            if kk == 0.0 {
                continue;
            }
            let dot = a[m] * k1 + b[m] * k2;
            p1[m] = a[m] - dot * (k1 / kk);
            p2[m] = b[m] - dot * (k2 / kk);
        }
        Ok((self.synthesize(&p1)?, self.synthesize(&p2)?))
    }

    /// Exact convolution of two coefficient tables followed by the square
    /// mask max(|n1|,|n2|) <= cut. Inputs must vanish outside the cut band
    /// for the result to be alias-free on this grid.
    pub fn product_coeffs(
        &self,
        f: &[Complex64],
        g: &[Complex64],
        cut: usize,
    ) -> Result<Vec<Complex64>, OracleError> {
        self.check(f.len())?;
        self.check(g.len())?;
        let n = self.n;
        let cut = cut as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for p in 0..n * n {
            let (p1, p2) = (signed(p % n, n), signed(p / n, n));
            for q in 0..n * n {
                let (q1, q2) = (signed(q % n, n), signed(q / n, n));
                let (s1, s2) = (p1 + q1, p2 + q2);
                if s1.abs() > cut || s2.abs() > cut {
                    continue;
                }
                let idx = s2.rem_euclid(n as i64) as usize * n + s1.rem_euclid(n as i64) as usize;
                out[idx] += f[p] * g[q];
            }
        }
        Ok(out)
    }
}

fn signed(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

fn norm_sq(k1: usize, k2: usize, n: usize) -> f64 {
    let (a, b) = (signed(k1, n) as f64, signed(k2, n) as f64);
    a * a + b * b
}

/// Collocation sum of `f` on the grid with `base_n * oversample` points per
/// axis, times the cell area.
pub fn quadrature(
    base_n: usize,
    oversample: usize,
    f: impl Fn(f64, f64) -> f64,
) -> Result<f64, OracleError> {
    if ![2, 4, 8].contains(&oversample) {
        return Err(OracleError::Oversample(oversample));
    }
    let m = base_n * oversample;
    let h = 2.0 * PI / m as f64;
    let mut sum = 0.0;
    for j2 in 0..m {
        for j1 in 0..m {
            sum += f(j1 as f64 * h, j2 as f64 * h);
        }
    }
    Ok(sum * h * h)
}

/// (2pi)^{-2} \int f e^{-i n.x} dx by the same collocation sum.
pub fn fourier_coefficient(
    base_n: usize,
    oversample: usize,
    n1: i64,
    n2: i64,
    f: impl Fn(f64, f64) -> f64,
) -> Result<Complex64, OracleError> {
    let re = quadrature(base_n, oversample, |x1, x2| {
        f(x1, x2) * (n1 as f64 * x1 + n2 as f64 * x2).cos()
    })?;
    let im = quadrature(base_n, oversample, |x1, x2| {
        -f(x1, x2) * (n1 as f64 * x1 + n2 as f64 * x2).sin()
    })?;
    Ok(Complex64::new(re, im) / (4.0 * PI * PI))
}

/// Plain bisection for a monotone `f` with a sign change on [lo, hi].
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64, OracleError> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(OracleError::NoSignChange { lo, hi });
    }
    let increasing = fb > fa;
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if (b - a) <= tol || mid == a || mid == b {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == increasing {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_guard() {
        assert!(DenseSpectralOracle::new(18).is_err());
        assert!(DenseSpectralOracle::new(7).is_err());
    }

    #[test]
    fn cosine_table() {
        let o = DenseSpectralOracle::new(8).unwrap();
        let h = 2.0 * PI / 8.0;
        let v: Vec<f64> = (0..64).map(|j| ((j % 8) as f64 * h).cos()).collect();
        let c = o.transform(&v).unwrap();
        for (m, z) in c.iter().enumerate() {
            let expect = if m == 1 || m == 7 { 0.5 } else { 0.0 };
            assert!((z.re - expect).abs() < 1e-14 && z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn linearity() {
        let o = DenseSpectralOracle::new(8).unwrap();
        let a: Vec<f64> = (0..64).map(|j| ((j * 7919) % 13) as f64 / 13.0).collect();
        let b: Vec<f64> = (0..64).map(|j| ((j * 104_729) % 17) as f64 / 17.0 - 0.5).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (ta, tb, ts) = (o.transform(&a).unwrap(), o.transform(&b).unwrap(), o.transform(&sum).unwrap());
        for i in 0..64 {
            assert!((ta[i] + tb[i] - ts[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_basics() {
        assert!((quadrature(8, 2, |_, _| 1.0).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        assert!((quadrature(8, 4, |x, _| x.cos().powi(2)).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
        assert!(quadrature(8, 3, |_, _| 1.0).is_err());
    }

    #[test]
    fn bisect_basics() {
        assert!(bisect(|y| y, -1.0, 1.0, 1e-15).unwrap().abs() < 1e-15);
        assert!(bisect(|y| y * y + 1.0, -1.0, 1.0, 1e-12).is_err());
        let target = 0.3f64.atanh() - 2.0 * 0.3;
        // decreasing branch of the potential derivative on [0, 0.6]
        let r = bisect(|y: f64| y.atanh() - 2.0 * y - target, 0.0, 0.6, 1e-15).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }
}
