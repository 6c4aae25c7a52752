//! Property measurements shared by the `verify` command and the acceptance
//! suite.
//!
//! Every function returns raw measurements (worst errors, margins, ratios);
//! callers decide what threshold to apply.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::diagnostics::{log_sobolev_ratio, mean_phi_check, orlicz_ratio, DiagnosticsError};
use crate::dynamics::{korteweg_forms_oversampled, random_band_field, DynamicsError, SchemeConfig};
use crate::envelope::{ode_energy_identity_residual, ode_step, EnvelopeError};
use crate::oracle::{bisect, DenseSpectralOracle, OracleError};
use crate::potential::{assumption_check, young_exp, young_log, AssumptionReport, PotentialError, PotentialParams};
use crate::spectral::{Axis, Grid, ScalarField, SpectralError, VectorField, SEPARATION_OVERSAMPLE};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Worst disagreement between the FFT operators and the dense oracle, per
/// operator, over `fields` random fields on the N = `n` grid.
pub fn spectral_oracle_errors(n: usize, fields: usize, seed: u64) -> Result<Vec<(&'static str, f64)>, CheckError> {
    let grid = Grid::new(n)?;
    let oracle = DenseSpectralOracle::new(n)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha20Rng| -> Vec<f64> { (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let names = [
        "transform",
        "synthesis",
        "d/dx1",
        "d/dx2",
        "d2/dx1^2",
        "d3/dx2^3",
        "laplacian",
        "bilaplacian",
        "inverse laplacian",
        "leray projection",
        "dealiased product",
    ];
    let mut worst = vec![0.0_f64; names.len()];
    for _ in 0..fields {
        let v = draw(&mut rng);
        let f = ScalarField::from_values(&grid, &v)?;
        let dense = oracle.transform(&v)?;
        let e = f.coeffs().iter().zip(&dense).fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        worst[0] = worst[0].max(e);
        worst[1] = worst[1].max(max_abs_diff(&f.to_values(), &oracle.synthesize(&dense)?));
        let derivs = [(Axis::X1, 0, 1), (Axis::X2, 1, 1), (Axis::X1, 0, 2), (Axis::X2, 1, 3)];
        for (slot, (axis, ax, order)) in derivs.into_iter().enumerate() {
            let fast = f.derivative(axis, order)?.to_values();
            worst[2 + slot] = worst[2 + slot].max(max_abs_diff(&fast, &oracle.derivative(&v, ax, order)?));
        }
        worst[6] = worst[6].max(max_abs_diff(&f.laplacian().to_values(), &oracle.laplacian(&v)?));
        worst[7] = worst[7].max(max_abs_diff(&f.bilaplacian().to_values(), &oracle.bilaplacian(&v)?));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let centred: Vec<f64> = v.iter().map(|x| x - mean).collect();
        let fc = ScalarField::from_values(&grid, &centred)?;
        worst[8] = worst[8].max(max_abs_diff(
            &fc.inverse_laplacian()?.to_values(),
            &oracle.inverse_laplacian(&centred)?,
        ));
        let w = draw(&mut rng);
        let u = VectorField::new(f.clone(), ScalarField::from_values(&grid, &w)?)?.leray_project();
        let (p1, p2) = oracle.leray(&v, &w)?;
        worst[9] = worst[9].max(max_abs_diff(&u.u1.to_values(), &p1).max(max_abs_diff(&u.u2.to_values(), &p2)));
        let (a, b) = (f.dealiased(), fc.dealiased());
        let fast = a.dealias_product(&b)?;
        let exact = oracle.product_coeffs(a.coeffs(), b.coeffs(), grid.dealias_cut())?;
        worst[10] = worst[10].max(max_abs_diff(&fast.to_values(), &oracle.synthesize(&exact)?));
    }
    Ok(names.into_iter().zip(worst).collect())
}

/// L2 distance between the two projected Korteweg forms for a random field
/// with modes |n| <= N/4 scaled to sup norm `linf`.
pub fn korteweg_identity_error(
    grid: &Grid,
    cfg: &SchemeConfig,
    seed: u64,
    linf: f64,
    oversample: usize,
) -> Result<f64, CheckError> {
    let raw = random_band_field(grid, seed, grid.n() / 4)?;
    let theta = raw.scaled(linf / raw.linf(SEPARATION_OVERSAMPLE));
    let (mu_form, stress_form) = korteweg_forms_oversampled(&theta, cfg, oversample)?;
    Ok(mu_form.axpy(-1.0, &stress_form).l2_norm())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSuite {
    pub assumption: AssumptionReport,
    /// min over pairs of (A(p) + A~(q) - pq) / max(1, pq).
    pub young_margin: f64,
    /// max over q of |A(ln(1+q)) + A~(q) - q ln(1+q)|.
    pub young_equality_error: f64,
    /// min over s of s ln(1+s) - A~(s).
    pub young_log_bound_margin: f64,
    /// Worst relative central-difference mismatch for Phi' = phi.
    pub fd_density_error: f64,
    /// Worst relative central-difference mismatch for phi' = phi_prime.
    pub fd_derivative_error: f64,
    /// min of the shifted convex density over the samples (must be >= 0).
    pub convex_density_min: f64,
}

/// Potential assumptions, Young pairing and finite-difference consistency.
pub fn potential_suite(
    p: &PotentialParams,
    assumption_samples: usize,
    pairs: usize,
    seed: u64,
) -> Result<PotentialSuite, CheckError> {
    let assumption = assumption_check(p, assumption_samples);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut young_margin = f64::INFINITY;
    let mut young_equality_error = 0.0_f64;
    let mut young_log_bound_margin = f64::INFINITY;
    for _ in 0..pairs {
        let a: f64 = rng.random_range(0.0..=50.0);
        let b: f64 = rng.random_range(0.0..=50.0);
        let margin = young_exp(a)? + young_log(b)? - a * b;
        young_margin = young_margin.min(margin / (a * b).max(1.0));
        let q: f64 = rng.random_range(1e-6..=50.0);
        let pq = q.ln_1p();
        young_equality_error = young_equality_error.max((young_exp(pq)? + young_log(q)? - pq * q).abs());
        let s: f64 = rng.random_range(0.0..=50.0);
        young_log_bound_margin = young_log_bound_margin.min(s * s.ln_1p() - young_log(s)?);
    }

    let mut fd_density_error = 0.0_f64;
    let mut fd_derivative_error = 0.0_f64;
    let mut convex_density_min = f64::INFINITY;
    let points = 2001;
    for i in 0..points {
        let s = -0.999 + 1.998 * i as f64 / (points - 1) as f64;
        let h = 1e-4 * (1.0 - s.abs());
        let fd = (p.density(s + h)? - p.density(s - h)?) / (2.0 * h);
        let exact = p.derivative(s)?;
        fd_density_error = fd_density_error.max((fd - exact).abs() / exact.abs().max(1.0));
        let fd = (p.derivative(s + h)? - p.derivative(s - h)?) / (2.0 * h);
        let exact = p.second_derivative(s)?;
        fd_derivative_error = fd_derivative_error.max((fd - exact).abs() / exact.abs().max(1.0));
        convex_density_min = convex_density_min.min(p.convex_density(s)?);
    }
    Ok(PotentialSuite {
        assumption,
        young_margin,
        young_equality_error,
        young_log_bound_margin,
        fd_density_error,
        fd_derivative_error,
        convex_density_min,
    })
}

/// Largest t such that sum_{n != 0} (1 - e^{-t|n|^4}) |theta0_hat(n)| <= gap.
///
/// That sum bounds |e^{-t Delta^2} theta0 - theta0|_inf, so up to the
/// returned time the semigroup cannot raise the sup norm by more than `gap`.
/// Returns infinity when the bound holds for all t.
pub fn semigroup_separation_time(theta0: &ScalarField, gap: f64) -> Result<f64, CheckError> {
    let g = theta0.grid();
    let terms: Vec<(f64, f64)> = theta0
        .coeffs()
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (g.norm_sq(i).powi(2), c.norm()))
        .collect();
    let excess = |t: f64| terms.iter().map(|(q, a)| -(-t * q).exp_m1() * a).sum::<f64>() - gap;
    if excess(f64::INFINITY) <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut hi = 1e-12;
    while excess(hi) <= 0.0 {
        hi *= 2.0;
    }
    let t = bisect(excess, 0.0, hi, 1e-15 * hi.max(1.0))?;
    Ok(if excess(t) > 0.0 { t * (1.0 - 1e-12) } else { t })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupReport {
    /// Worst |e^{-t Delta^2} f - e^{-t|n|^4} f| for single modes.
    pub single_mode_error: f64,
    /// Worst |S(t) S(s) f - S(t + s) f|_inf.
    pub composition_error: f64,
    /// |S(t) theta0 - theta0|_inf at t = 1e-1, ..., 1e-6.
    pub short_time_drift: Vec<(f64, f64)>,
    pub t1: f64,
    /// Worst |S(t) theta0|_inf - |theta0|_inf - gap over t sampled in [0, T1].
    pub t1_margin: f64,
}

/// Exactness, composition and the short-time sup-norm bound of the
/// biharmonic semigroup for the datum `theta0` with separation `delta0`.
pub fn semigroup_report(theta0: &ScalarField, delta0: f64) -> Result<SemigroupReport, CheckError> {
    let g = theta0.grid();
    let times = [0.0, 1e-3, 0.1, 0.7, 2.0];
    let mut single_mode_error = 0.0_f64;
    for (n1, n2) in [(1, 0), (2, 0), (1, 1), (0, 3)] {
        let f = ScalarField::from_modes(g, &[(n1, n2, 1.0, 0.0)])?;
        let q = ((n1 * n1 + n2 * n2) as f64).powi(2);
        for t in times {
            let exact = f.scaled((-t * q).exp());
            single_mode_error = single_mode_error.max(max_abs_diff(
                &f.biharmonic_semigroup(t)?.to_values(),
                &exact.to_values(),
            ));
        }
    }
    let mut composition_error = 0.0_f64;
    for &t in &times {
        for &s in &times {
            let two = theta0.biharmonic_semigroup(s)?.biharmonic_semigroup(t)?;
            let one = theta0.biharmonic_semigroup(t + s)?;
            composition_error = composition_error.max(max_abs_diff(&two.to_values(), &one.to_values()));
        }
    }
    let short_time_drift = (1..=6)
        .map(|k| {
            let t = 10f64.powi(-k);
            theta0
                .biharmonic_semigroup(t)
                .map(|s| (t, (&s - theta0).linf(SEPARATION_OVERSAMPLE)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let gap = delta0 / 4.0;
    let t1 = semigroup_separation_time(theta0, gap)?;
    let base = theta0.linf(SEPARATION_OVERSAMPLE);
    let horizon = if t1.is_finite() { t1 } else { 10.0 };
    let mut t1_margin = f64::NEG_INFINITY;
    for k in 0..=64 {
        let t = horizon * k as f64 / 64.0;
        let sup = theta0.biharmonic_semigroup(t)?.linf(SEPARATION_OVERSAMPLE);
        t1_margin = t1_margin.max(sup - base - gap);
    }
    Ok(SemigroupReport {
        single_mode_error,
        composition_error,
        short_time_drift,
        t1,
        t1_margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeIdentityReport {
    /// Residuals of the stationary cases (y = 0, h = 0) and (y = 0.3, h = phi(0.3)).
    pub stationary: Vec<f64>,
    /// (dt, residual) for a forced trajectory under successive halvings.
    pub forced: Vec<(f64, f64)>,
}

impl OdeIdentityReport {
    /// residual(dt/2) / residual(dt) for each halving.
    pub fn forced_ratios(&self) -> Vec<f64> {
        self.forced.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }
}

fn ode_trajectory(
    y0: f64,
    h: impl Fn(f64) -> f64,
    eps: f64,
    dt: f64,
    steps: usize,
    p: &PotentialParams,
) -> Result<(Vec<f64>, Vec<f64>), CheckError> {
    let mut ys = vec![y0];
    let mut hs = vec![h(0.0)];
    for k in 1..=steps {
        let hk = h(k as f64 * dt);
        ys.push(ode_step(ys[k - 1], hk, eps, dt, p)?);
        hs.push(hk);
    }
    Ok((ys, hs))
}

/// Energy identity of the comparison ODE: stationary cases and a forced
/// trajectory on [0, horizon] with `halvings` dt halvings.
pub fn ode_identity_report(
    p: &PotentialParams,
    eps: f64,
    dt: f64,
    horizon: f64,
    halvings: usize,
) -> Result<OdeIdentityReport, CheckError> {
    let mut stationary = Vec::new();
    for y in [0.0, 0.3, -0.7] {
        let hy = p.derivative(y)?;
        let (ys, hs) = ode_trajectory(y, |_| hy, eps, dt, 100, p)?;
        stationary.push(ode_energy_identity_residual(&ys, &hs, eps, dt, p)?);
    }
    let forcing = |t: f64| 1.5 * (2.0 * std::f64::consts::PI * t / horizon).sin() + 0.5;
    let mut forced = Vec::new();
    for k in 0..=halvings {
        let step = dt / 2f64.powi(k as i32);
        let steps = (horizon / step).round() as usize;
        let (ys, hs) = ode_trajectory(0.0, forcing, eps, step, steps, p)?;
        forced.push((step, ode_energy_identity_residual(&ys, &hs, eps, step, p)?));
    }
    Ok(OdeIdentityReport { stationary, forced })
}

/// Worst identity residual of the mean-of-phi check over `fields` random
/// mean-zero fields with sup norms drawn from [0.3, 0.95].
pub fn mean_phi_residual(
    grid: &Grid,
    p: &PotentialParams,
    fields: usize,
    seed: u64,
    oversample: usize,
) -> Result<f64, CheckError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for k in 0..fields {
        let band = 2 + k % 6;
        let raw = random_band_field(grid, seed.wrapping_add(k as u64), band)?;
        let target: f64 = rng.random_range(0.3..0.95);
        let theta = raw.scaled(target / raw.linf(oversample.max(SEPARATION_OVERSAMPLE)));
        worst = worst.max(mean_phi_check(&theta, p, oversample)?.identity_residual);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorMaxima {
    pub n: usize,
    pub orlicz: f64,
    pub log_sobolev: f64,
}

/// Maxima of the Orlicz (beta = 1) and log-Sobolev (s = 2) ratios over a
/// fixed family of band-limited fields, evaluated on each grid size.
///
/// The family does not depend on N: field k has band 2 + k % 5 and L2 norm
/// 1 + k % 10.
pub fn monitor_maxima(sizes: &[usize], fields: usize, seed: u64) -> Result<Vec<MonitorMaxima>, CheckError> {
    sizes
        .iter()
        .map(|&n| {
            let grid = Grid::new(n)?;
            let mut out = MonitorMaxima {
                n,
                orlicz: f64::NEG_INFINITY,
                log_sobolev: f64::NEG_INFINITY,
            };
            for k in 0..fields {
                let raw = random_band_field(&grid, seed.wrapping_add(k as u64), 2 + k % 5)?;
                let f = raw.scaled((1 + k % 10) as f64 / raw.l2_norm());
                out.orlicz = out.orlicz.max(orlicz_ratio(&f, 1.0));
                out.log_sobolev = out.log_sobolev.max(log_sobolev_ratio(&f, 2.0)?);
            }
            Ok(out)
        })
        .collect()
}

/// (max - min) / max of a list of positive maxima.
pub fn relative_spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / hi
}
