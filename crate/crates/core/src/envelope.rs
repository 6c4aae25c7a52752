//! Comparison envelopes for the order parameter
//!
//! The scalar ODE `eps y' + phi(y) = h` with constant-in-space forcing bounds
//! the solution of the relaxed Cahn-Hilliard equation from above and below
//! when `h` dominates
//!
//! ```text
//! h_tilde = mean(phi(theta)) - (-Delta)^{-1} theta_t - (-Delta)^{-1} div(u theta)
//! ```
//!
//! in sup norm. This module evaluates `h_tilde`, advances the two envelope
//! ODEs by backward Euler and checks `y_minus <= theta <= y_plus`.

use thiserror::Error;

use crate::dynamics::{phi_field, SchemeConfig, SimState};
use crate::potential::{PotentialError, PotentialParams};
use crate::spectral::{ScalarField, SpectralError};

/// Slack added to both envelopes when checking the field against them.
pub const ENVELOPE_SLACK: f64 = 1e-6;

const BRACKET_EDGE: f64 = 1e-15;
const ROOT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("envelope contract violated: {0}")]
    Contract(String),
    #[error("invalid envelope argument: {0}")]
    InvalidArgument(String),
    #[error("no root in (-1, 1) for forcing h = {h} (eps/dt = {ratio})")]
    SingularForcing { h: f64, ratio: f64 },
    #[error("eps/dt = {ratio} does not exceed alpha = {alpha}; backward Euler map is not monotone")]
    NotMonotone { ratio: f64, alpha: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl From<crate::dynamics::DynamicsError> for EnvelopeError {
    fn from(e: crate::dynamics::DynamicsError) -> Self {
        EnvelopeError::Contract(e.to_string())
    }
}

/// h_tilde for the current state; `dtheta_dt` is the time derivative of theta.
pub fn compute_h_tilde(
    state: &SimState,
    dtheta_dt: &ScalarField,
    cfg: &SchemeConfig,
) -> Result<ScalarField, EnvelopeError> {
    let theta = &state.theta;
    let scale = 1.0 + dtheta_dt.max_coeff();
    if dtheta_dt.mean().abs() > 1e-10 * scale {
        return Err(EnvelopeError::Contract(format!(
            "time derivative has mean {:e}",
            dtheta_dt.mean()
        )));
    }
    let ut1 = state.u.u1.dealias_product(theta)?;
    let ut2 = state.u.u2.dealias_product(theta)?;
    let conv = &ut1.d(crate::spectral::Axis::X1) + &ut2.d(crate::spectral::Axis::X2);
    if conv.mean().abs() > 1e-10 * (1.0 + conv.max_coeff()) {
        return Err(EnvelopeError::Contract(format!(
            "convective term has mean {:e}",
            conv.mean()
        )));
    }
    let mean_phi = phi_field(theta, cfg)?.phi.mean();
    let h = ScalarField::constant(theta.grid(), mean_phi)
        .axpy(-1.0, &dtheta_dt.inverse_laplacian_of_fluctuation())
        .axpy(-1.0, &conv.inverse_laplacian_of_fluctuation());
    Ok(h)
}

/// Solves eps (z - y) / dt + phi(z) = h for z in (-1, 1).
pub fn ode_step(y: f64, h: f64, eps: f64, dt: f64, p: &PotentialParams) -> Result<f64, EnvelopeError> {
    if !(eps > 0.0 && dt > 0.0) {
        return Err(EnvelopeError::InvalidArgument(format!(
            "eps = {eps} and dt = {dt} must be positive"
        )));
    }
    if !(y.abs() < 1.0) || !h.is_finite() {
        return Err(EnvelopeError::InvalidArgument(format!(
            "need |y| < 1 and finite h (y = {y}, h = {h})"
        )));
    }
    let ratio = eps / dt;
    if ratio <= p.alpha() {
        return Err(EnvelopeError::NotMonotone {
            ratio,
            alpha: p.alpha(),
        });
    }
    let g = |z: f64| ratio * (z - y) + p.derivative_unchecked(z) - h;
    let dg = |z: f64| ratio + p.second_derivative_unchecked(z);
    let mut lo = -1.0 + BRACKET_EDGE;
    let mut hi = 1.0 - BRACKET_EDGE;
    if g(lo) > 0.0 || g(hi) < 0.0 {
        return Err(EnvelopeError::SingularForcing { h, ratio });
    }
    let mut z = y;
    for _ in 0..400 {
        let gz = g(z);
        if gz.abs() <= ROOT_RESIDUAL {
            return Ok(z);
        }
        if gz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - gz / dg(z);
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == z || hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            return Ok(next);
        }
        z = next;
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub t: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub y_minus: f64,
    pub y_plus: f64,
}

/// Upper and lower envelope trajectories of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeState {
    pub y_minus: f64,
    pub y_plus: f64,
    pub epsilon: f64,
    pub history: Vec<EnvelopeSample>,
}

impl EnvelopeState {
    /// Starts at y_plus = |theta_0|_inf, y_minus = -|theta_0|_inf.
    pub fn new(theta0_linf: f64, epsilon: f64) -> Result<Self, EnvelopeError> {
        if !(theta0_linf >= 0.0 && theta0_linf < 1.0) {
            return Err(EnvelopeError::InvalidArgument(format!(
                "initial sup norm {theta0_linf} must lie in [0, 1)"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(EnvelopeError::InvalidArgument(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        Ok(EnvelopeState {
            y_minus: -theta0_linf,
            y_plus: theta0_linf,
            epsilon,
            history: vec![EnvelopeSample {
                t: 0.0,
                h_plus: f64::NAN,
                h_minus: f64::NAN,
                y_minus: -theta0_linf,
                y_plus: theta0_linf,
            }],
        })
    }

    /// Number of backward-Euler substeps that keeps eps/dt_sub >= 2 alpha.
    pub fn substeps(&self, dt: f64, p: &PotentialParams) -> usize {
        ((2.0 * p.alpha() * dt / self.epsilon).ceil() as usize).max(1)
    }

    /// Advances both envelopes over one step of length dt ending at `t`,
    /// holding the forcing constant.
    pub fn advance(
        &mut self,
        t: f64,
        dt: f64,
        h_plus: f64,
        h_minus: f64,
        p: &PotentialParams,
    ) -> Result<(), EnvelopeError> {
        let n = self.substeps(dt, p);
        let sub = dt / n as f64;
        for _ in 0..n {
            self.y_plus = ode_step(self.y_plus, h_plus, self.epsilon, sub, p)?;
            self.y_minus = ode_step(self.y_minus, h_minus, self.epsilon, sub, p)?;
        }
        self.history.push(EnvelopeSample {
            t,
            h_plus,
            h_minus,
            y_minus: self.y_minus,
            y_plus: self.y_plus,
        });
        Ok(())
    }

    /// Trapezoidal (int |phi(y_minus)|^2 dt, int |phi(y_plus)|^2 dt) over the history.
    pub fn integrated_phi_sq(&self, p: &PotentialParams) -> (f64, f64) {
        let mut acc = (0.0, 0.0);
        for w in self.history.windows(2) {
            let dt = w[1].t - w[0].t;
            let sq = |y: f64| p.derivative_unchecked(y).powi(2);
            acc.0 += 0.5 * dt * (sq(w[0].y_minus) + sq(w[1].y_minus));
            acc.1 += 0.5 * dt * (sq(w[0].y_plus) + sq(w[1].y_plus));
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub theta_min: f64,
    pub theta_max: f64,
    pub y_minus: f64,
    pub y_plus: f64,
    pub pass: bool,
    /// Field value that broke the bound, if any.
    pub witness: Option<f64>,
}

/// y_minus - slack <= theta <= y_plus + slack on the collocation grid.
pub fn envelope_check(theta: &ScalarField, env: &EnvelopeState, slack: f64) -> EnvelopeReport {
    let (theta_min, theta_max) = theta.min_max(1);
    let low_ok = env.y_minus - slack <= theta_min;
    let high_ok = theta_max <= env.y_plus + slack;
    let witness = if !high_ok {
        Some(theta_max)
    } else if !low_ok {
        Some(theta_min)
    } else {
        None
    };
    EnvelopeReport {
        theta_min,
        theta_max,
        y_minus: env.y_minus,
        y_plus: env.y_plus,
        pass: low_ok && high_ok,
        witness,
    }
}

/// |eps Phi(y_K) + int |phi(y)|^2 - eps Phi(y_0) - int h phi(y)| with
/// trapezoidal time quadrature; `h[k]` is the forcing at the time of `traj[k]`.
pub fn ode_energy_identity_residual(
    traj: &[f64],
    h: &[f64],
    eps: f64,
    dt: f64,
    p: &PotentialParams,
) -> Result<f64, EnvelopeError> {
    if traj.len() != h.len() || traj.is_empty() {
        return Err(EnvelopeError::InvalidArgument(format!(
            "trajectory ({}) and forcing ({}) must be nonempty and equally long",
            traj.len(),
            h.len()
        )));
    }
    let mut dissipated = 0.0;
    let mut work = 0.0;
    for k in 1..traj.len() {
        let (a, b) = (p.derivative(traj[k - 1])?, p.derivative(traj[k])?);
        dissipated += 0.5 * dt * (a * a + b * b);
        work += 0.5 * dt * (h[k - 1] * a + h[k] * b);
    }
    let start = p.density(traj[0])?;
    let end = p.density(*traj.last().unwrap())?;
    Ok((eps * end + dissipated - eps * start - work).abs())
}
