//! Uniform N x N collocation grid on the torus [0, 2pi)^2 and its FFT plans.
//!
//! Physical arrays are row-major with the row index running over x2 and the
//! column index over x1, i.e. `values[j2 * n + j1] = f(2pi j1 / n, 2pi j2 / n)`.
//! Fourier coefficients use the same layout with the wavenumber
//! `n_a = k_a` for `k_a <= n/2` and `n_a = k_a - n` otherwise.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SpectralError;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans_for(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Collocation grid with `n` points (and modes) per axis.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    dealias_cut: usize,
    plans: Arc<Plans>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dealias_cut == other.dealias_cut
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("dealias_cut", &self.dealias_cut)
            .finish()
    }
}

impl Grid {
    /// Grid with the default 2/3-rule cut `floor(n / 3)`.
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        Self::with_dealias_cut(n, n / 3)
    }

    pub fn with_dealias_cut(n: usize, dealias_cut: usize) -> Result<Self, SpectralError> {
        if n < 8 || n % 2 != 0 {
            return Err(SpectralError::InvalidGrid { n });
        }
        if dealias_cut > n / 2 {
            return Err(SpectralError::InvalidDealiasCut { n, cut: dealias_cut });
        }
        Ok(Grid {
            n,
            dealias_cut,
            plans: plans_for(n),
        })
    }

    /// Grid used internally for oversampled evaluation; size only needs to be even.
    pub(crate) fn fine(n: usize) -> Self {
        Grid {
            n,
            dealias_cut: n / 3,
            plans: plans_for(n),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dealias_cut(&self) -> usize {
        self.dealias_cut
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Grid spacing 2pi / n.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Signed wavenumber stored at array index `k`.
    #[inline]
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k <= self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Wavenumber used by odd-order derivatives: the Nyquist index maps to 0
    /// so that derivatives of real fields stay real.
    #[inline]
    pub fn odd_wavenumber(&self, k: usize) -> f64 {
        if k == self.n / 2 {
            0.0
        } else {
            self.wavenumber(k) as f64
        }
    }

    #[inline]
    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.n / 2
    }

    /// Array index of the signed wavenumber, if it is representable.
    pub fn index_of(&self, n1: i64, n2: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let wrap = |m: i64| -> Option<usize> {
            if m > half || m <= -half {
                None
            } else {
                Some(m.rem_euclid(self.n as i64) as usize)
            }
        };
        Some(wrap(n2)? * self.n + wrap(n1)?)
    }

    /// |n|^2 at flat index.
    #[inline]
    pub fn norm_sq(&self, idx: usize) -> f64 {
        let n1 = self.wavenumber(idx % self.n) as f64;
        let n2 = self.wavenumber(idx / self.n) as f64;
        n1 * n1 + n2 * n2
    }

    /// True when the mode survives the dealiasing mask `max(|n1|,|n2|) <= cut`.
    #[inline]
    pub fn in_dealias_band(&self, idx: usize) -> bool {
        let cut = self.dealias_cut as i64;
        self.wavenumber(idx % self.n).abs() <= cut && self.wavenumber(idx / self.n).abs() <= cut
    }

    /// Collocation point coordinates at flat index.
    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let h = self.spacing();
        ((idx % self.n) as f64 * h, (idx / self.n) as f64 * h)
    }

    /// Forward transform with the convention f_hat(n) = (1/N^2) sum_j f(x_j) e^{-i n.x_j}.
    pub(crate) fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform_2d(&mut buf, true);
        let scale = 1.0 / (self.len() as f64);
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    /// Inverse transform; returns the real part of the synthesis.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.transform_2d(&mut buf, false);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform_2d(&self, buf: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward {
            &self.plans.forward
        } else {
            &self.plans.inverse
        };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // along x1: rows are contiguous
        plan.process_with_scratch(buf, &mut scratch);
        // along x2
        let mut column = vec![Complex64::new(0.0, 0.0); n];
        for j1 in 0..n {
            for j2 in 0..n {
                column[j2] = buf[j2 * n + j1];
            }
            plan.process_with_scratch(&mut column, &mut scratch);
            for j2 in 0..n {
                buf[j2 * n + j1] = column[j2];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(9).is_err());
        assert!(Grid::with_dealias_cut(16, 9).is_err());
        let g = Grid::new(64).unwrap();
        assert_eq!(g.dealias_cut(), 21);
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|k| g.wavenumber(k)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.index_of(-1, 0), Some(7));
        assert_eq!(g.index_of(0, 1), Some(8));
        assert_eq!(g.index_of(-4, 0), None);
        assert_eq!(g.odd_wavenumber(4), 0.0);
    }
}
