//! Time integration of the periodic Navier-Stokes-Cahn-Hilliard system
//!
//! ```text
//! u_t + u.grad u - div(2 nu(theta) Du) + grad g = mu grad theta,   div u = 0
//! theta_t - eps Delta theta_t + u.grad theta = m Delta mu
//! mu = kappa^{-1} phi(theta) - kappa Delta theta
//! ```
//!
//! The Cahn-Hilliard part uses a stabilized semi-implicit scheme (bilaplacian
//! and the eps term implicit, phi explicit with an S Delta (theta^{n+1} - theta^n)
//! correction). The momentum equation treats the constant part of the
//! viscosity implicitly and everything else explicitly, then projects. Every
//! implicit operator is a Fourier multiplier, so each step is diagonal.

mod init;
mod run;
mod step;

pub use init::{build_theta, build_velocity, random_band_field, InitialCondition, VelocityInit};
pub use run::{run, EnvelopeOptions, RunOptions, RunSummary, Sink};
pub use step::{
    ch_step, chemical_potential, coupled_step, korteweg_force, korteweg_forms_oversampled,
    korteweg_stress_form, ns_step, phi_field, PhiEvaluation, StepEvents,
};

use thiserror::Error;

use crate::potential::{ClampPolicy, PotentialError, PotentialParams};
use crate::spectral::{ScalarField, SpectralError, VectorField};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("initial condition rejected: {0}")]
    InitialCondition(String),
    #[error(transparent)]
    Envelope(#[from] crate::envelope::EnvelopeError),
    #[error("sink failed: {0}")]
    Sink(String),
}

/// nu(s) = nu_a + nu_b s, positive on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViscosityModel {
    Constant { nu: f64 },
    Affine { nu_a: f64, nu_b: f64 },
}

impl ViscosityModel {
    pub fn constant(nu: f64) -> Result<Self, DynamicsError> {
        Self::Constant { nu }.validated()
    }

    pub fn affine(nu_a: f64, nu_b: f64) -> Result<Self, DynamicsError> {
        Self::Affine { nu_a, nu_b }.validated()
    }

    fn validated(self) -> Result<Self, DynamicsError> {
        if !(self.nu_min() > 0.0) || !self.nu_max().is_finite() {
            return Err(DynamicsError::Config(format!(
                "viscosity must stay positive on [-1, 1] (nu_min = {})",
                self.nu_min()
            )));
        }
        Ok(self)
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ViscosityModel::Constant { nu } => nu,
            ViscosityModel::Affine { nu_a, nu_b } => nu_a + nu_b * s,
        }
    }

    /// Lower bound of nu on [-1, 1].
    pub fn nu_min(&self) -> f64 {
        match *self {
            ViscosityModel::Constant { nu } => nu,
            ViscosityModel::Affine { nu_a, nu_b } => nu_a - nu_b.abs(),
        }
    }

    pub fn nu_max(&self) -> f64 {
        match *self {
            ViscosityModel::Constant { nu } => nu,
            ViscosityModel::Affine { nu_a, nu_b } => nu_a + nu_b.abs(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            ViscosityModel::Constant { .. } => true,
            ViscosityModel::Affine { nu_b, .. } => nu_b == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    /// Stabilization constant S.
    pub stabilization: f64,
    /// Coefficient of -eps Delta theta_t; 0 gives the fourth-order equation.
    pub epsilon: f64,
    /// Galerkin cutoff radius, if any.
    pub galerkin_n: Option<usize>,
    pub kappa: f64,
    pub mobility: f64,
    pub viscosity: ViscosityModel,
    pub potential: PotentialParams,
    /// Include the capillary force mu grad theta in the momentum equation.
    pub korteweg: bool,
    pub clamp: ClampPolicy,
}

impl SchemeConfig {
    /// Defaults: S = 2 alpha, eps = 0, kappa = m = 1, nu = 1, Korteweg force on.
    pub fn new(dt: f64, potential: PotentialParams) -> Self {
        SchemeConfig {
            dt,
            stabilization: 2.0 * potential.alpha(),
            epsilon: 0.0,
            galerkin_n: None,
            kappa: 1.0,
            mobility: 1.0,
            viscosity: ViscosityModel::Constant { nu: 1.0 },
            potential,
            korteweg: true,
            clamp: ClampPolicy::Saturate,
        }
    }

    /// Checks hard invariants; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>, DynamicsError> {
        let bad = |m: String| Err(DynamicsError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.stabilization >= 0.0) {
            return bad(format!("S must be nonnegative, got {}", self.stabilization));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.kappa > 0.0) || !(self.mobility > 0.0) {
            return bad("kappa and mobility must be positive".into());
        }
        if self.galerkin_n == Some(0) {
            return bad("galerkin_n must be positive".into());
        }
        self.viscosity.validated()?;
        let mut warnings = Vec::new();
        if self.stabilization < self.potential.alpha() {
            warnings.push(format!(
                "S = {} is below alpha = {}; energy stability is not expected",
                self.stabilization,
                self.potential.alpha()
            ));
        }
        Ok(warnings)
    }
}

/// Evolving solution: order parameter and velocity at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub theta: ScalarField,
    pub u: VectorField,
    pub step: u64,
    /// theta one step earlier (equal to `theta` at the initial time).
    pub prev_theta: ScalarField,
}

impl SimState {
    pub fn new(theta: ScalarField, u: VectorField) -> Result<Self, DynamicsError> {
        if theta.grid() != u.grid() {
            return Err(SpectralError::GridMismatch {
                left: theta.grid().n(),
                right: u.grid().n(),
            }
            .into());
        }
        Ok(SimState {
            t: 0.0,
            prev_theta: theta.clone(),
            theta,
            u,
            step: 0,
        })
    }

    /// Backward difference (theta - prev_theta) / dt.
    pub fn dtheta_dt(&self, dt: f64) -> ScalarField {
        (&self.theta - &self.prev_theta).scaled(1.0 / dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viscosity_positivity() {
        assert!(ViscosityModel::affine(1.0, 0.5).is_ok());
        assert!(ViscosityModel::affine(1.0, -1.0).is_err());
        assert!(ViscosityModel::constant(0.0).is_err());
        let v = ViscosityModel::affine(1.0, -0.25).unwrap();
        assert_eq!(v.nu_min(), 0.75);
        assert_eq!(v.eval(1.0), 0.75);
        assert_eq!(v.eval(-1.0), 1.25);
    }

    #[test]
    fn scheme_defaults_and_warnings() {
        let p = PotentialParams::new(1.0, 2.0).unwrap();
        let mut cfg = SchemeConfig::new(1e-3, p);
        assert_eq!(cfg.stabilization, 4.0);
        assert!(cfg.validate().unwrap().is_empty());
        cfg.stabilization = 1.0;
        assert_eq!(cfg.validate().unwrap().len(), 1);
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
    }
}
