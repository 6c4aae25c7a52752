use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use super::DynamicsError;
use crate::spectral::{Complex64, Grid, ScalarField, VectorField, SEPARATION_OVERSAMPLE};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Explicit real modes (n1, n2, cos amplitude, sin amplitude).
    Modes(Vec<(i64, i64, f64, f64)>),
    /// Gaussian coefficients on |n| <= band, drawn from ChaCha20 seeded with
    /// `seed`, then rescaled to the target sup norm.
    RandomBand { seed: u64, band: usize, target_linf: f64 },
    /// Two tanh discs of the + phase in a - background, centred at
    /// (pi/2, pi) and (3pi/2, pi).
    TwoBubble { radius: f64, width: f64, target_linf: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityInit {
    Zero,
    /// amplitude * (sin x1 cos x2, -cos x1 sin x2)
    TaylorGreen { amplitude: f64 },
}

fn rescale_to(theta: ScalarField, target: f64) -> ScalarField {
    let norm = theta.linf(SEPARATION_OVERSAMPLE);
    if norm == 0.0 {
        theta
    } else {
        theta.scaled(target / norm)
    }
}

fn remove_mean(mut f: ScalarField) -> ScalarField {
    f.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    f
}

/// Random mean-zero field with Hermitian-symmetric Gaussian coefficients. The
/// draw order walks a fixed square of wavevectors so the same seed gives the
/// same low modes on every grid.
pub fn random_band_field(grid: &Grid, seed: u64, band: usize) -> Result<ScalarField, DynamicsError> {
    if band == 0 || band >= grid.n() / 2 {
        return Err(DynamicsError::InitialCondition(format!(
            "band {band} must lie in [1, {})",
            grid.n() / 2
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
    let b = band as i64;
    for n2 in 0..=b {
        for n1 in -b..=b {
            if n2 == 0 && n1 <= 0 {
                continue;
            }
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            if n1 * n1 + n2 * n2 > b * b {
                continue;
            }
            let c = Complex64::new(re, im);
            let i = grid.index_of(n1, n2).expect("band below Nyquist");
            let j = grid.index_of(-n1, -n2).expect("band below Nyquist");
            coeffs[i] = c;
            coeffs[j] = c.conj();
        }
    }
    Ok(ScalarField::from_coeffs(grid, coeffs)?)
}

/// Builds theta_0 and enforces |theta_0|_inf <= 1 - delta0 by rescaling.
pub fn build_theta(grid: &Grid, ic: &InitialCondition, delta0: f64) -> Result<ScalarField, DynamicsError> {
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(DynamicsError::InitialCondition(format!(
            "delta0 = {delta0} must lie in (0, 1)"
        )));
    }
    let cap = 1.0 - delta0;
    let check_target = |t: f64| {
        if t > 0.0 && t.is_finite() {
            Ok(t.min(cap))
        } else {
            Err(DynamicsError::InitialCondition(format!(
                "target sup norm must be positive, got {t}"
            )))
        }
    };
    let theta = match ic {
        InitialCondition::Modes(modes) => {
            let f = remove_mean(ScalarField::from_modes(grid, modes)?);
            if f.linf(SEPARATION_OVERSAMPLE) > cap {
                rescale_to(f, cap)
            } else {
                f
            }
        }
        InitialCondition::RandomBand {
            seed,
            band,
            target_linf,
        } => rescale_to(random_band_field(grid, *seed, *band)?, check_target(*target_linf)?),
        InitialCondition::TwoBubble {
            radius,
            width,
            target_linf,
        } => {
            if !(*radius > 0.0 && *width > 0.0) {
                return Err(DynamicsError::InitialCondition(
                    "two_bubble radius and width must be positive".into(),
                ));
            }
            let pi = std::f64::consts::PI;
            let centres = [(pi / 2.0, pi), (1.5 * pi, pi)];
            let wrap = |d: f64| {
                let d = d.rem_euclid(2.0 * pi);
                d.min(2.0 * pi - d)
            };
            let raw = ScalarField::from_fn(grid, |x1, x2| {
                centres.iter().fold(-1.0, |acc, &(c1, c2)| {
                    let r = wrap(x1 - c1).hypot(wrap(x2 - c2));
                    acc + 1.0 + ((radius - r) / width).tanh()
                })
            })?;
            rescale_to(remove_mean(raw.dealiased()), check_target(*target_linf)?)
        }
    };
    Ok(theta)
}

pub fn build_velocity(grid: &Grid, v: &VelocityInit) -> Result<VectorField, DynamicsError> {
    match *v {
        VelocityInit::Zero => Ok(VectorField::zeros(grid)),
        VelocityInit::TaylorGreen { amplitude } => Ok(VectorField::new(
            ScalarField::from_fn(grid, |x, y| amplitude * x.sin() * y.cos())?,
            ScalarField::from_fn(grid, |x, y| -amplitude * x.cos() * y.sin())?,
        )?),
    }
}
