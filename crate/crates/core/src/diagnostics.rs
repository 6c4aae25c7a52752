//! Scalar observables of a simulation state
//!
//! Energies, the discrete dissipation law, separation from the pure phases,
//! the relaxed-problem state norm and a few empirical monitors for
//! inequalities whose constants are not known explicitly. Integrands that
//! compose the potential with theta are evaluated on an oversampled grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{chemical_potential, DynamicsError, SchemeConfig, SimState};
use crate::potential::{ClampTally, PotentialError, PotentialParams};
use crate::spectral::{Axis, ScalarField, SpectralError, VectorField, SEPARATION_OVERSAMPLE};

const AREA: f64 = 4.0 * PI * PI;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("diagnostic precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] Box<DynamicsError>),
}

impl From<DynamicsError> for DiagnosticsError {
    fn from(e: DynamicsError) -> Self {
        DiagnosticsError::Dynamics(Box::new(e))
    }
}

impl From<DiagnosticsError> for DynamicsError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Dynamics(inner) => *inner,
            DiagnosticsError::Potential(p) => DynamicsError::Potential(p),
            DiagnosticsError::Spectral(s) => DynamicsError::Spectral(s),
            DiagnosticsError::Precondition(m) => DynamicsError::Config(m),
        }
    }
}

/// One sampled row of the diagnostics time series. Field order is the CSV
/// column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub e_kin: f64,
    pub e_free: f64,
    pub e_total: f64,
    pub dissipation: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub delta: f64,
    pub grad_mu_l2: f64,
    pub mean_phi: f64,
    pub sobolev_h1_theta: f64,
    pub sobolev_h1_u: f64,
    pub d0eps_norm: f64,
    pub clamp_events: u64,
    pub energy_residual: f64,
}

impl DiagnosticsRecord {
    pub const FIELDS: [&'static str; 16] = [
        "t",
        "mass",
        "e_kin",
        "e_free",
        "e_total",
        "dissipation",
        "theta_min",
        "theta_max",
        "delta",
        "grad_mu_l2",
        "mean_phi",
        "sobolev_h1_theta",
        "sobolev_h1_u",
        "d0eps_norm",
        "clamp_events",
        "energy_residual",
    ];
}

/// Collocation sum times the cell area on a grid refined by `oversample`.
fn integrate(values: &[f64]) -> f64 {
    let m = (values.len() as f64).sqrt();
    values.iter().sum::<f64>() * AREA / (m * m)
}

/// (kappa/2) |grad theta|^2 + kappa^{-1} int Phi(theta).
pub fn free_energy(theta: &ScalarField, cfg: &SchemeConfig, oversample: usize) -> Result<f64, DiagnosticsError> {
    let grad = theta.gradient().l2_norm_sq();
    let p = &cfg.potential;
    let dens = theta
        .fine_values(oversample)
        .into_iter()
        .map(|s| p.density(s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(0.5 * cfg.kappa * grad + integrate(&dens) / cfg.kappa)
}

pub fn kinetic_energy(u: &VectorField) -> f64 {
    0.5 * u.l2_norm_sq()
}

/// Returns (m |grad mu|^2 + int 2 nu(theta) |Du|^2, |grad mu|_{L^2}).
pub fn dissipation(
    theta: &ScalarField,
    u: &VectorField,
    cfg: &SchemeConfig,
    oversample: usize,
) -> Result<(f64, f64), DiagnosticsError> {
    let mu = chemical_potential(theta, cfg, &ClampTally::new())?;
    let grad_mu = mu.gradient().l2_norm_sq();
    let viscous = if u.l2_norm_sq() == 0.0 {
        0.0
    } else {
        let th = theta.fine_values(oversample);
        let d11 = u.u1.d(Axis::X1).fine_values(oversample);
        let d22 = u.u2.d(Axis::X2).fine_values(oversample);
        let d12 = (&u.u1.d(Axis::X2) + &u.u2.d(Axis::X1)).fine_values(oversample);
        let integrand: Vec<f64> = (0..th.len())
            .map(|i| {
                let sym = d11[i] * d11[i] + d22[i] * d22[i] + 0.5 * d12[i] * d12[i];
                2.0 * cfg.viscosity.eval(th[i]) * sym
            })
            .collect();
        integrate(&integrand)
    };
    Ok((cfg.mobility * grad_mu + viscous, grad_mu.sqrt()))
}

pub fn total_energy(state: &SimState, cfg: &SchemeConfig, oversample: usize) -> Result<f64, DiagnosticsError> {
    Ok(kinetic_energy(&state.u) + free_energy(&state.theta, cfg, oversample)?)
}

/// |(E(n+1) - E(n)) / dt + D(n+1)|.
pub fn energy_law_residual(
    state_n: &SimState,
    state_np1: &SimState,
    cfg: &SchemeConfig,
    oversample: usize,
) -> Result<f64, DiagnosticsError> {
    let dt = state_np1.t - state_n.t;
    if !(dt > 0.0) {
        return Err(DiagnosticsError::Precondition(format!(
            "states must be ordered in time (dt = {dt})"
        )));
    }
    let e0 = total_energy(state_n, cfg, oversample)?;
    let e1 = total_energy(state_np1, cfg, oversample)?;
    let (d, _) = dissipation(&state_np1.theta, &state_np1.u, cfg, oversample)?;
    Ok(((e1 - e0) / dt + d).abs())
}

/// The four squared summands of the relaxed-problem state norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D0EpsNorm {
    pub h2_sq: f64,
    pub phi_l2_sq: f64,
    /// eps |varphi|^2 with varphi = (eps + (-Delta)^{-1})^{-1} [Delta f - phi(f) + mean phi(f)].
    pub eps_varphi_sq: f64,
    pub varphi_hm1_sq: f64,
}

impl D0EpsNorm {
    pub fn norm(&self) -> f64 {
        (self.h2_sq + self.phi_l2_sq + self.eps_varphi_sq + self.varphi_hm1_sq).sqrt()
    }
}

fn check_separated(f: &ScalarField, strict: bool) -> Result<(), DiagnosticsError> {
    let scale = 1.0 + f.max_coeff();
    if f.mean().abs() > 1e-10 * scale {
        return Err(DiagnosticsError::Precondition(format!(
            "field must have zero mean, got {:e}",
            f.mean()
        )));
    }
    let sup = f.linf(1);
    if sup > 1.0 || (strict && sup >= 1.0) {
        return Err(DiagnosticsError::Precondition(format!("|f|_inf = {sup} out of range")));
    }
    Ok(())
}

pub fn d0_eps_norm(
    f: &ScalarField,
    eps: f64,
    p: &PotentialParams,
    oversample: usize,
) -> Result<D0EpsNorm, DiagnosticsError> {
    if !(eps >= 0.0) {
        return Err(DiagnosticsError::Precondition(format!("eps = {eps} must be >= 0")));
    }
    check_separated(f, true)?;
    let grid = f.grid();
    let phi_vals = f
        .fine_values(oversample)
        .into_iter()
        .map(|s| p.derivative(s))
        .collect::<Result<Vec<_>, _>>()?;
    let phi_l2_sq = integrate(&phi_vals.iter().map(|v| v * v).collect::<Vec<_>>());
    let phi = ScalarField::from_fine_values(grid, oversample, &phi_vals)?;
    let mut bracket = f.laplacian().axpy(-1.0, &phi);
    bracket.coeffs_mut()[0] = Default::default();
    let varphi = bracket.map_symbol(|i| {
        if i == 0 {
            0.0
        } else {
            let q = grid.norm_sq(i);
            q / (eps * q + 1.0)
        }
    });
    Ok(D0EpsNorm {
        h2_sq: f.sobolev_norm(2.0).powi(2),
        phi_l2_sq,
        eps_varphi_sq: eps * varphi.l2_norm_sq(),
        varphi_hm1_sq: varphi.homogeneous_h_minus_one().powi(2),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhiReport {
    /// |int phi(theta) theta - int (phi(theta) - mean phi) theta|
    pub identity_residual: f64,
    /// |mean phi(theta)| / (|phi(theta) - mean phi|_{L^1} + 1)
    pub ratio: f64,
    pub mean_phi: f64,
    pub fluctuation_l1: f64,
}

pub fn mean_phi_check(theta: &ScalarField, p: &PotentialParams, oversample: usize) -> Result<MeanPhiReport, DiagnosticsError> {
    check_separated(theta, true)?;
    let th = theta.fine_values(oversample);
    let phi = th.iter().map(|&s| p.derivative(s)).collect::<Result<Vec<_>, _>>()?;
    let mean_phi = integrate(&phi) / AREA;
    let lhs = integrate(&phi.iter().zip(&th).map(|(a, b)| a * b).collect::<Vec<_>>());
    let rhs = integrate(&phi.iter().zip(&th).map(|(a, b)| (a - mean_phi) * b).collect::<Vec<_>>());
    let fluctuation_l1 = integrate(&phi.iter().map(|a| (a - mean_phi).abs()).collect::<Vec<_>>());
    Ok(MeanPhiReport {
        identity_residual: (lhs - rhs).abs(),
        ratio: mean_phi.abs() / (fluctuation_l1 + 1.0),
        mean_phi,
        fluctuation_l1,
    })
}

/// Trapezoid in time of int |phi'(theta)|^p over sampled (t, theta) pairs.
pub fn phi_prime_lp(
    samples: &[(f64, ScalarField)],
    exponent: f64,
    params: &PotentialParams,
    oversample: usize,
) -> Result<f64, DiagnosticsError> {
    if !(exponent >= 1.0 && exponent.is_finite()) {
        return Err(DiagnosticsError::Precondition(format!(
            "exponent {exponent} must be finite and >= 1"
        )));
    }
    let slice = |f: &ScalarField| -> Result<f64, DiagnosticsError> {
        let vals = f
            .fine_values(oversample)
            .into_iter()
            .map(|s| params.second_derivative(s).map(|d| d.abs().powf(exponent)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(integrate(&vals))
    };
    let values = samples.iter().map(|(_, f)| slice(f)).collect::<Result<Vec<_>, _>>()?;
    Ok(samples
        .windows(2)
        .zip(values.windows(2))
        .map(|(s, v)| 0.5 * (s[1].0 - s[0].0) * (v[0] + v[1]))
        .sum())
}

/// log(int e^{beta |v|}) / (1 + |v|_{H^1}^2), evaluated with log-sum-exp.
pub fn orlicz_ratio(v: &ScalarField, beta: f64) -> f64 {
    let vals = v.to_values();
    let exps: Vec<f64> = vals.iter().map(|x| beta * x.abs()).collect();
    let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - top).exp()).sum();
    let log_integral = top + (sum * AREA / vals.len() as f64).ln();
    log_integral / (1.0 + v.sobolev_norm(1.0).powi(2))
}

/// |f|_inf / ((1 + |f|_{H^1}) sqrt(log(e + |f|_{H^s}))), s > 1.
pub fn log_sobolev_ratio(f: &ScalarField, s: f64) -> Result<f64, DiagnosticsError> {
    if !(s > 1.0) {
        return Err(DiagnosticsError::Precondition(format!("need s > 1, got {s}")));
    }
    let denom = (1.0 + f.sobolev_norm(1.0)) * (std::f64::consts::E + f.sobolev_norm(s)).ln().sqrt();
    Ok(f.linf(SEPARATION_OVERSAMPLE) / denom)
}

/// Builds the record for `state`; `prev` (one step earlier) feeds the
/// energy-law residual, which is zero for the first record.
pub fn record(
    state: &SimState,
    prev: Option<&SimState>,
    cfg: &SchemeConfig,
    oversample: usize,
    clamp_events: u64,
) -> Result<DiagnosticsRecord, DiagnosticsError> {
    let theta = &state.theta;
    let e_kin = kinetic_energy(&state.u);
    let e_free = free_energy(theta, cfg, oversample)?;
    let (dissipation, grad_mu_l2) = dissipation(theta, &state.u, cfg, oversample)?;
    let (theta_min, theta_max) = theta.min_max(SEPARATION_OVERSAMPLE);
    let p = &cfg.potential;
    let phi_vals = theta
        .fine_values(oversample)
        .into_iter()
        .map(|s| p.derivative(s))
        .collect::<Result<Vec<_>, _>>()?;
    let mean_phi = integrate(&phi_vals) / AREA;
    let d0eps_norm = d0_eps_norm(theta, cfg.epsilon, p, oversample)?.norm();
    let energy_residual = match prev {
        Some(prev) => energy_law_residual(prev, state, cfg, oversample)?,
        None => 0.0,
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: theta.mean(),
        e_kin,
        e_free,
        e_total: e_kin + e_free,
        dissipation,
        theta_min,
        theta_max,
        delta: 1.0 - theta_min.abs().max(theta_max.abs()),
        grad_mu_l2,
        mean_phi,
        sobolev_h1_theta: theta.sobolev_norm(1.0),
        sobolev_h1_u: state.u.sobolev_norm(1.0),
        d0eps_norm,
        clamp_events,
        energy_residual,
    })
}
