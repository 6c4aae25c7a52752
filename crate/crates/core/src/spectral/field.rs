use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};

use rustfft::num_complex::Complex64;

use super::{Grid, SpectralError};

/// Which coordinate direction a derivative acts along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Real band-limited field on the torus, stored by its Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Field with constant value `c`.
    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// Forward transform of point values on the collocation grid.
    pub fn from_values(grid: &Grid, values: &[f64]) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite { index });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            coeffs: grid.forward(values),
        })
    }

    /// Samples `f(x1, x2)` at the collocation points and transforms.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self, SpectralError> {
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.point(i);
                f(x1, x2)
            })
            .collect();
        Self::from_values(grid, &values)
    }

    /// Build directly from coefficients. Hermitian symmetry is the caller's
    /// responsibility; only the real part is kept on synthesis.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        if let Some(index) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(SpectralError::NonFinite { index });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Sum of `amplitude * cos(n.x) + ...` over a mode list `(n1, n2, cos_amp, sin_amp)`.
    pub fn from_modes(grid: &Grid, modes: &[(i64, i64, f64, f64)]) -> Result<Self, SpectralError> {
        let mut f = Self::zeros(grid);
        for &(n1, n2, a, b) in modes {
            if n1 == 0 && n2 == 0 {
                f.coeffs[0] += Complex64::new(a, 0.0);
                continue;
            }
            let plus = grid
                .index_of(n1, n2)
                .ok_or(SpectralError::ModeOutOfRange { n1, n2 })?;
            let minus = grid
                .index_of(-n1, -n2)
                .ok_or(SpectralError::ModeOutOfRange { n1, n2 })?;
            // a cos + b sin = (a - i b)/2 e^{i n.x} + (a + i b)/2 e^{-i n.x}
            f.coeffs[plus] += Complex64::new(a / 2.0, -b / 2.0);
            f.coeffs[minus] += Complex64::new(a / 2.0, b / 2.0);
        }
        Ok(f)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavevector (zero if not representable).
    pub fn coeff(&self, n1: i64, n2: i64) -> Complex64 {
        self.grid
            .index_of(n1, n2)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// Point values on the collocation grid.
    pub fn to_values(&self) -> Vec<f64> {
        self.grid.inverse(&self.coeffs)
    }

    /// Spectral interpolation onto a grid `factor` times finer.
    pub fn fine_values(&self, factor: usize) -> Vec<f64> {
        if factor <= 1 {
            return self.to_values();
        }
        let fine = Grid::fine(self.grid.n() * factor);
        fine.inverse(&self.padded_coeffs(&fine))
    }

    /// Coefficients zero-padded onto a finer grid. Nyquist modes are split
    /// evenly between +N/2 and -N/2 so the interpolant stays real.
    pub(crate) fn padded_coeffs(&self, fine: &Grid) -> Vec<Complex64> {
        let n = self.grid.n();
        let m = fine.n();
        let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
        let images = |k: usize| -> Vec<i64> {
            if self.grid.is_nyquist(k) {
                vec![(n / 2) as i64, -((n / 2) as i64)]
            } else {
                vec![self.grid.wavenumber(k)]
            }
        };
        for k2 in 0..n {
            let w2 = images(k2);
            for k1 in 0..n {
                let c = self.coeffs[k2 * n + k1];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w1 = images(k1);
                let share = c / ((w1.len() * w2.len()) as f64);
                for &a in &w2 {
                    for &b in &w1 {
                        let i2 = a.rem_euclid(m as i64) as usize;
                        let i1 = b.rem_euclid(m as i64) as usize;
                        out[i2 * m + i1] += share;
                    }
                }
            }
        }
        out
    }

    /// Inverse of [`fine_values`](Self::fine_values): transform values sampled on a
    /// grid `factor` times finer and keep the modes representable here
    /// (Nyquist lines dropped).
    pub fn from_fine_values(grid: &Grid, factor: usize, values: &[f64]) -> Result<Self, SpectralError> {
        if factor <= 1 {
            let mut f = Self::from_values(grid, values)?;
            f.zero_nyquist();
            return Ok(f);
        }
        let fine = Grid::fine(grid.n() * factor);
        if values.len() != fine.len() {
            return Err(SpectralError::LengthMismatch {
                expected: fine.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite { index });
        }
        let fine_coeffs = fine.forward(values);
        let n = grid.n();
        let m = fine.n();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k2 in 0..n {
            if grid.is_nyquist(k2) {
                continue;
            }
            let i2 = grid.wavenumber(k2).rem_euclid(m as i64) as usize;
            for k1 in 0..n {
                if grid.is_nyquist(k1) {
                    continue;
                }
                let i1 = grid.wavenumber(k1).rem_euclid(m as i64) as usize;
                coeffs[k2 * n + k1] = fine_coeffs[i2 * m + i1];
            }
        }
        Ok(ScalarField {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// f_hat(0). The imaginary part of a real field's mean is round-off only.
    pub fn mean(&self) -> f64 {
        debug_assert!(self.coeffs[0].im.abs() <= 1e-12 * (1.0 + self.coeffs[0].re.abs()));
        self.coeffs[0].re
    }

    fn check_grid(&self, other: &ScalarField) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch {
                left: self.grid.n(),
                right: other.grid.n(),
            });
        }
        Ok(())
    }

    /// Coefficient-wise multiplication by a real symbol of the flat index.
    pub(crate) fn map_symbol(&self, symbol: impl Fn(usize) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * symbol(i))
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Partial derivative of the given order: multiplication by (i n_a)^order.
    /// Odd orders drop the Nyquist line of that axis.
    pub fn derivative(&self, axis: Axis, order: u32) -> Result<Self, SpectralError> {
        if order == 0 {
            return Err(SpectralError::InvalidOrder);
        }
        let n = self.grid.n();
        let grid = &self.grid;
        let factor = |k: usize| -> Complex64 {
            let w = if order % 2 == 1 {
                grid.odd_wavenumber(k)
            } else {
                grid.wavenumber(k) as f64
            };
            Complex64::new(0.0, w).powu(order)
        };
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = match axis {
                    Axis::X1 => i % n,
                    Axis::X2 => i / n,
                };
                c * factor(k)
            })
            .collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// First derivative along `axis`.
    pub fn d(&self, axis: Axis) -> Self {
        self.derivative(axis, 1).expect("order 1 is valid")
    }

    pub fn gradient(&self) -> VectorField {
        VectorField::new(self.d(Axis::X1), self.d(Axis::X2)).expect("same grid")
    }

    /// Multiplication by -|n|^2.
    pub fn laplacian(&self) -> Self {
        let g = &self.grid;
        self.map_symbol(|i| -g.norm_sq(i))
    }

    /// Multiplication by |n|^4.
    pub fn bilaplacian(&self) -> Self {
        let g = &self.grid;
        self.map_symbol(|i| g.norm_sq(i).powi(2))
    }

    /// (-Delta)^{-1} on mean-zero fields; the output has zero mean.
    pub fn inverse_laplacian(&self) -> Result<Self, SpectralError> {
        let mean = self.coeffs[0].re;
        let l2 = self.l2_norm();
        if mean.abs() > 1e-10 * l2 && mean.abs() > f64::MIN_POSITIVE {
            return Err(SpectralError::NonZeroMean { mean });
        }
        Ok(self.inverse_laplacian_of_fluctuation())
    }

    /// (-Delta)^{-1} applied to the mean-free part, without the mean check.
    pub fn inverse_laplacian_of_fluctuation(&self) -> Self {
        let g = &self.grid;
        self.map_symbol(|i| if i == 0 { 0.0 } else { 1.0 / g.norm_sq(i) })
    }

    /// Closed-ball Galerkin cutoff: keep modes with |m| <= radius.
    pub fn cutoff(&self, radius: usize) -> Self {
        let g = &self.grid;
        let r2 = (radius * radius) as f64;
        self.map_symbol(|i| if g.norm_sq(i) <= r2 { 1.0 } else { 0.0 })
    }

    /// 2/3-rule mask: zero modes with max(|n1|,|n2|) > dealias_cut.
    pub fn dealiased(&self) -> Self {
        let g = &self.grid;
        self.map_symbol(|i| if g.in_dealias_band(i) { 1.0 } else { 0.0 })
    }

    pub fn zero_nyquist(&mut self) {
        let n = self.grid.n();
        for k in 0..n {
            self.coeffs[(n / 2) * n + k] = Complex64::new(0.0, 0.0);
            self.coeffs[k * n + n / 2] = Complex64::new(0.0, 0.0);
        }
    }

    /// ((2pi)^2 sum_n (1 + |n|^2)^s |f_hat(n)|^2)^{1/2}.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let g = &self.grid;
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (1.0 + g.norm_sq(i)).powf(s) * c.norm_sqr())
            .sum();
        (4.0 * PI * PI * sum).sqrt()
    }

    /// Homogeneous H^{-1} norm ((2pi)^2 sum_{n != 0} |f_hat|^2 / |n|^2)^{1/2}.
    pub fn homogeneous_h_minus_one(&self) -> f64 {
        let g = &self.grid;
        let sum: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c.norm_sqr() / g.norm_sq(i))
            .sum();
        (4.0 * PI * PI * sum).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Parseval: (2pi)^2 sum |f_hat|^2.
    pub fn l2_norm_sq(&self) -> f64 {
        4.0 * PI * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Integral of f g over the torus by Parseval.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        4.0 * PI * PI
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
    }

    /// Max |f| over the collocation grid refined by `oversample` (1 = collocation).
    pub fn linf(&self, oversample: usize) -> f64 {
        self.fine_values(oversample)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// (min, max) over the refined collocation grid.
    pub fn min_max(&self, oversample: usize) -> (f64, f64) {
        self.fine_values(oversample)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Pointwise product followed by the dealiasing mask.
    pub fn dealias_product(&self, other: &ScalarField) -> Result<Self, SpectralError> {
        self.check_grid(other)?;
        let a = self.to_values();
        let b = other.to_values();
        let prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(ScalarField {
            grid: self.grid.clone(),
            coeffs: self.grid.forward(&prod),
        }
        .dealiased())
    }

    /// Apply a pointwise map in physical space and return the dealiased result.
    pub fn map_pointwise(&self, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        let values: Vec<f64> = self.to_values().into_iter().map(f).collect();
        Ok(Self::from_values(&self.grid, &values)?.dealiased())
    }

    /// e^{-t Delta^2}: multiplication by e^{-t |n|^4}.
    pub fn biharmonic_semigroup(&self, t: f64) -> Result<Self, SpectralError> {
        if !(t >= 0.0) {
            return Err(SpectralError::NegativeTime { t });
        }
        let g = &self.grid;
        Ok(self.map_symbol(|i| (-t * g.norm_sq(i).powi(2)).exp()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_symbol(|_| a)
    }

    /// self + a * other
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Self {
        assert_eq!(self.grid, other.grid, "axpy across grids");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x + y * a)
            .collect();
        ScalarField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Largest |f_hat(n) - conj(f_hat(-n))| over stored modes.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0_f64;
        for k2 in 0..n {
            for k1 in 0..n {
                let m1 = (n - k1) % n;
                let m2 = (n - k2) % n;
                let d = self.coeffs[k2 * n + k1] - self.coeffs[m2 * n + m1].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.norm()))
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scaled(-1.0)
    }
}

/// Pair of scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self, SpectralError> {
        u1.check_grid(&u2)?;
        Ok(VectorField { u1, u2 })
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn divergence(&self) -> ScalarField {
        &self.u1.d(Axis::X1) + &self.u2.d(Axis::X2)
    }

    /// Leray projection onto divergence-free fields:
    /// u_hat <- u_hat - (k.u_hat) k / |k|^2 with k the odd-derivative
    /// wavevector (Nyquist components set to zero); zero mode untouched.
    pub fn leray_project(&self) -> VectorField {
        let g = self.grid();
        let n = g.n();
        let mut out = self.clone();
        let (c1, c2) = (self.u1.coeffs(), self.u2.coeffs());
        let mut o1 = c1.to_vec();
        let mut o2 = c2.to_vec();
        for i in 0..g.len() {
            let k1 = g.odd_wavenumber(i % n);
            let k2 = g.odd_wavenumber(i / n);
            let kk = k1 * k1 + k2 * k2;
            if kk == 0.0 {
                continue;
            }
            let dot = c1[i] * k1 + c2[i] * k2;
            o1[i] = c1[i] - dot * (k1 / kk);
            o2[i] = c2[i] - dot * (k2 / kk);
        }
        out.u1.coeffs = o1;
        out.u2.coeffs = o2;
        out
    }

    /// max_n |k.u_hat(n)| relative to max_n |u_hat(n)|.
    pub fn relative_divergence(&self) -> f64 {
        let scale = self.u1.max_coeff().max(self.u2.max_coeff());
        if scale == 0.0 {
            return 0.0;
        }
        self.divergence().max_coeff() / scale
    }

    pub fn is_divergence_free(&self) -> bool {
        self.relative_divergence() <= 1e-10
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            u1: f(&self.u1),
            u2: f(&self.u2),
        }
    }

    pub fn axpy(&self, a: f64, other: &VectorField) -> VectorField {
        VectorField {
            u1: self.u1.axpy(a, &other.u1),
            u2: self.u2.axpy(a, &other.u2),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.u1.l2_norm_sq() + self.u2.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (self.u1.sobolev_norm(s).powi(2) + self.u2.sobolev_norm(s).powi(2)).sqrt()
    }

    /// Component means (the momentum per unit area).
    pub fn mean(&self) -> (f64, f64) {
        (self.u1.mean(), self.u2.mean())
    }

    /// max over collocation points of |u|.
    pub fn linf(&self) -> f64 {
        let a = self.u1.to_values();
        let b = self.u2.to_values();
        a.iter()
            .zip(&b)
            .fold(0.0_f64, |m, (x, y)| m.max((x * x + y * y).sqrt()))
    }
}
