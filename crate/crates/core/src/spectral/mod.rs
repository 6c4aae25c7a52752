//! Fourier representation of periodic fields on [0, 2pi)^2.
//!
//! Coefficients follow f_hat(n) = (2pi)^{-2} \int f(x) e^{-i n.x} dx, so
//! `||f||_{L^2}^2 = (2pi)^2 sum |f_hat(n)|^2`. All operators are Fourier
//! multipliers; nonlinear products go through physical space and are masked
//! by the 2/3 rule.

mod field;
mod grid;

pub use field::{Axis, ScalarField, VectorField};
pub use grid::Grid;
pub use rustfft::num_complex::Complex64;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {n} must be even and at least 8")]
    InvalidGrid { n: usize },
    #[error("dealias cut {cut} exceeds n/2 for n = {n}")]
    InvalidDealiasCut { n: usize, cut: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: usize, right: usize },
    #[error("inverse Laplacian needs a mean-zero input, mean is {mean:e}")]
    NonZeroMean { mean: f64 },
    #[error("semigroup time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },
    #[error("derivative order must be at least 1")]
    InvalidOrder,
    #[error("mode ({n1}, {n2}) is not representable on this grid")]
    ModeOutOfRange { n1: i64, n2: i64 },
}

/// Refinement factor for the sup-norm evaluation used by separation checks.
pub const SEPARATION_OVERSAMPLE: usize = 2;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn random_field(grid: &Grid, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, &values).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn zero_samples_give_zero_coefficients() {
        let g = Grid::new(16).unwrap();
        let f = ScalarField::from_values(&g, &vec![0.0; g.len()]).unwrap();
        assert!(f.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn cosine_has_two_half_coefficients() {
        let g = Grid::new(16).unwrap();
        let f = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        for (i, c) in f.coeffs().iter().enumerate() {
            let n1 = g.wavenumber(i % 16);
            let n2 = g.wavenumber(i / 16);
            let expect = if n2 == 0 && n1.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c.re - expect).abs() < 1e-14 && c.im.abs() < 1e-14, "mode ({n1},{n2}) = {c}");
        }
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = Grid::new(8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert_eq!(
            ScalarField::from_values(&g, &v),
            Err(SpectralError::NonFinite { index: 5 })
        );
    }

    #[test]
    fn round_trip_on_many_grids() {
        for n in [8, 16, 32, 64, 128, 256] {
            let g = Grid::new(n).unwrap();
            let f = random_field(&g, n as u64);
            let back = ScalarField::from_values(&g, &f.to_values()).unwrap();
            let d = max_diff(&f.to_values(), &back.to_values());
            assert!(d <= 1e-12, "n = {n}: {d}");
            assert!(f.hermitian_defect() < 1e-14);
        }
    }

    #[test]
    fn parseval() {
        let g = Grid::new(32).unwrap();
        let f = random_field(&g, 3);
        let quad: f64 = f.to_values().iter().map(|v| v * v).sum::<f64>() * g.spacing().powi(2);
        assert!((quad - f.l2_norm_sq()).abs() < 1e-10 * quad);
    }

    #[test]
    fn derivatives_of_cosines() {
        let g = Grid::new(16).unwrap();
        let c1 = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        let s1 = ScalarField::from_fn(&g, |x, _| -x.sin()).unwrap();
        assert!(max_diff(&c1.d(Axis::X1).to_values(), &s1.to_values()) < 1e-13);
        let c2 = ScalarField::from_modes(&g, &[(2, 0, 1.0, 0.0)]).unwrap();
        assert!(max_diff(&c2.laplacian().to_values(), &c2.scaled(-4.0).to_values()) < 1e-12);
        assert!(max_diff(&c2.bilaplacian().to_values(), &c2.scaled(16.0).to_values()) < 1e-12);
        let second = c2.derivative(Axis::X1, 2).unwrap();
        assert!(max_diff(&second.to_values(), &c2.laplacian().to_values()) < 1e-12);
        assert_eq!(c2.derivative(Axis::X1, 0), Err(SpectralError::InvalidOrder));
    }

    #[test]
    fn inverse_laplacian_cases() {
        let g = Grid::new(16).unwrap();
        let c1 = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        let inv = c1.inverse_laplacian().unwrap();
        assert!(max_diff(&inv.to_values(), &c1.to_values()) < 1e-14);
        let c2 = ScalarField::from_modes(&g, &[(2, 0, 1.0, 0.0)]).unwrap();
        let inv2 = c2.inverse_laplacian().unwrap();
        assert!(max_diff(&inv2.to_values(), &c2.scaled(0.25).to_values()) < 1e-14);
        let shifted = ScalarField::from_fn(&g, |x, _| 1.0 + x.cos()).unwrap();
        match shifted.inverse_laplacian() {
            Err(SpectralError::NonZeroMean { mean }) => assert!((mean - 1.0).abs() < 1e-14),
            other => panic!("expected mean error, got {other:?}"),
        }
        // -Delta (-Delta)^{-1} f = f on mean-zero part
        let mut f = random_field(&g, 9);
        f.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        let back = f.inverse_laplacian().unwrap().laplacian().scaled(-1.0);
        assert!(max_diff(&back.to_values(), &f.to_values()) < 1e-12);
    }

    #[test]
    fn means() {
        let g = Grid::new(8).unwrap();
        assert!((ScalarField::constant(&g, 2.5).mean() - 2.5).abs() < 1e-15);
        let c = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        assert!(c.mean().abs() < 1e-15);
        let s = ScalarField::from_fn(&g, |x, _| 1.0 + x.cos()).unwrap();
        assert!((s.mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn leray_examples() {
        let g = Grid::new(16).unwrap();
        let grad = VectorField::new(
            ScalarField::from_fn(&g, |x, _| -x.sin()).unwrap(),
            ScalarField::zeros(&g),
        )
        .unwrap();
        assert!(grad.leray_project().l2_norm() < 1e-13);
        let shear = VectorField::new(
            ScalarField::from_fn(&g, |_, y| y.cos()).unwrap(),
            ScalarField::zeros(&g),
        )
        .unwrap();
        let p = shear.leray_project();
        assert!(max_diff(&p.u1.to_values(), &shear.u1.to_values()) < 1e-14);
        assert!(p.u2.l2_norm() < 1e-14);
    }

    #[test]
    fn leray_random() {
        let g = Grid::new(32).unwrap();
        let u = VectorField::new(random_field(&g, 1), random_field(&g, 2)).unwrap();
        let p = u.leray_project();
        let pp = p.leray_project();
        assert!(p.relative_divergence() <= 1e-12);
        assert!(max_diff(&p.u1.to_values(), &pp.u1.to_values()) < 1e-12);
        assert!(max_diff(&p.u2.to_values(), &pp.u2.to_values()) < 1e-12);
        assert_eq!(p.mean(), u.mean());
    }

    #[test]
    fn cutoff_examples() {
        let g = Grid::new(16).unwrap();
        let c2 = ScalarField::from_modes(&g, &[(2, 0, 1.0, 0.0)]).unwrap();
        assert!(c2.cutoff(1).l2_norm() == 0.0);
        assert_eq!(c2.cutoff(2), c2);
        let f = random_field(&g, 4);
        // 8 * sqrt(2) ~ 11.31
        assert_eq!(f.cutoff(12), f);
        let once = f.cutoff(5);
        assert_eq!(once.cutoff(5), once);
        let a = f.d(Axis::X1).cutoff(5);
        let b = f.cutoff(5).d(Axis::X1);
        assert_eq!(a, b);
        let mut prev = f64::INFINITY;
        for r in 0..12 {
            let e = (&f.cutoff(r) - &f).sobolev_norm(1.0);
            assert!(e <= prev);
            prev = e;
        }
    }

    #[test]
    fn sobolev_of_cosine() {
        let g = Grid::new(16).unwrap();
        assert_eq!(ScalarField::zeros(&g).sobolev_norm(3.0), 0.0);
        let c = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        assert!((c.sobolev_norm(0.0) - (2.0 * PI * PI).sqrt()).abs() < 1e-13);
        for s in [-1.0, 0.5, 1.0, 2.0, 3.5] {
            let expect = 2.0 * PI * 2f64.powf((s - 1.0) / 2.0);
            assert!((c.sobolev_norm(s) - expect).abs() < 1e-12 * expect, "s = {s}");
        }
    }

    #[test]
    fn product_of_cosines() {
        let g = Grid::new(16).unwrap();
        let c = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        let z = ScalarField::zeros(&g);
        assert_eq!(c.dealias_product(&z).unwrap().l2_norm(), 0.0);
        let sq = c.dealias_product(&c).unwrap();
        let expect = ScalarField::from_fn(&g, |x, _| 0.5 + 0.5 * (2.0 * x).cos()).unwrap();
        assert!(max_diff(&sq.to_values(), &expect.to_values()) < 1e-14);
        let other = Grid::new(8).unwrap();
        assert!(c.dealias_product(&ScalarField::zeros(&other)).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let g = Grid::new(16).unwrap();
        let c1 = ScalarField::from_fn(&g, |x, _| x.cos()).unwrap();
        let c2 = ScalarField::from_modes(&g, &[(2, 0, 1.0, 0.0)]).unwrap();
        let t = 0.3;
        let e1 = c1.biharmonic_semigroup(t).unwrap();
        assert!(max_diff(&e1.to_values(), &c1.scaled((-t).exp()).to_values()) < 1e-14);
        let e2 = c2.biharmonic_semigroup(t).unwrap();
        assert!(max_diff(&e2.to_values(), &c2.scaled((-16.0 * t).exp()).to_values()) < 1e-14);
        assert!(c1.biharmonic_semigroup(-1.0).is_err());
        let f = random_field(&g, 11);
        let ab = f.biharmonic_semigroup(0.01).unwrap().biharmonic_semigroup(0.02).unwrap();
        let c = f.biharmonic_semigroup(0.03).unwrap();
        assert!(max_diff(&ab.to_values(), &c.to_values()) < 1e-12);
        assert_eq!(c.mean(), f.mean());
        for s in [0.0, 1.0, 2.0] {
            assert!(c.sobolev_norm(s) <= f.sobolev_norm(s));
        }
    }

    #[test]
    fn semigroup_converges_as_t_shrinks() {
        let g = Grid::new(32).unwrap();
        let f = ScalarField::from_modes(&g, &[(1, 0, 0.4, 0.0), (2, 3, 0.1, 0.2), (0, 4, 0.0, 0.1)]).unwrap();
        let mut prev = f64::INFINITY;
        for e in 1..=6 {
            let t = 10f64.powi(-e);
            let d = (&f.biharmonic_semigroup(t).unwrap() - &f).linf(1);
            assert!(d < prev, "t = {t}: {d} vs {prev}");
            prev = d;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn oversampled_interpolation_is_exact_for_band_limited() {
        let g = Grid::new(16).unwrap();
        let f = ScalarField::from_modes(&g, &[(1, 2, 0.3, -0.1), (3, -1, 0.2, 0.05)]).unwrap();
        let fine = f.fine_values(4);
        let m = 64;
        let h = 2.0 * PI / m as f64;
        for (i, v) in fine.iter().enumerate() {
            let (x1, x2) = ((i % m) as f64 * h, (i / m) as f64 * h);
            let exact = 0.3 * (x1 + 2.0 * x2).cos() - 0.1 * (x1 + 2.0 * x2).sin()
                + 0.2 * (3.0 * x1 - x2).cos()
                + 0.05 * (3.0 * x1 - x2).sin();
            assert!((v - exact).abs() < 1e-13);
        }
        let back = ScalarField::from_fine_values(&g, 4, &fine).unwrap();
        assert!(max_diff(&back.to_values(), &f.to_values()) < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn transform_round_trip(values in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let g = Grid::new(8).unwrap();
            let f = ScalarField::from_values(&g, &values).unwrap();
            prop_assert!(max_diff(&f.to_values(), &values) <= 1e-12);
        }

        #[test]
        fn leray_is_idempotent(seed in 0u64..1000) {
            let g = Grid::new(16).unwrap();
            let u = VectorField::new(random_field(&g, seed), random_field(&g, seed + 7)).unwrap();
            let p = u.leray_project();
            let pp = p.leray_project();
            prop_assert!(max_diff(&p.u1.to_values(), &pp.u1.to_values()) < 1e-12);
            prop_assert!(p.relative_divergence() <= 1e-12);
        }
    }
}
