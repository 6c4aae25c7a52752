//! Logarithmic (Flory-Huggins) free-energy density on [-1, 1]
//!
//! ```text
//! density(s)           = (a0/2) [(1+s) ln(1+s) + (1-s) ln(1-s)] - (a/2) s^2
//! derivative(s)        = a0 atanh(s) - a s
//! second_derivative(s) = a0 / (1 - s^2) - a
//! ```
//!
//! with `0 < a0 < a`. The derivative blows up at +-1; evaluations that come
//! within `clamp_margin` of the singularity are pulled inward and counted.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("invalid potential parameters: {0} (need 0 < alpha0 < alpha)")]
    InvalidParams(String),
    #[error("invalid clamp margin {0} (need 0 < margin < 1e-3)")]
    InvalidClampMargin(f64),
    #[error("density is +infinity outside [-1, 1]: s = {s}")]
    Domain { s: f64 },
    #[error("logarithmic singularity reached at s = {s}")]
    Singular { s: f64 },
    #[error("argument must be nonnegative, got {s}")]
    NegativeArgument { s: f64 },
}

/// How to treat arguments at or beyond the singular values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClampPolicy {
    /// |s| >= 1 is an error; arguments within the margin are clamped.
    Strict,
    /// Everything beyond 1 - margin is clamped. Used for collocation values,
    /// where a transient overshoot must not abort a run.
    Saturate,
}

/// Order-independent tally of clamp events.
#[derive(Debug, Default)]
pub struct ClampTally(AtomicU64);

impl ClampTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, n: u64) {
        if n > 0 {
            self.0.fetch_add(n, Ordering::Relaxed);
        }
    }

    pub fn count(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for ClampTally {
    fn clone(&self) -> Self {
        ClampTally(AtomicU64::new(self.count()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    alpha0: f64,
    alpha: f64,
    clamp_margin: f64,
}

pub const DEFAULT_CLAMP_MARGIN: f64 = 1e-12;

impl PotentialParams {
    pub fn new(alpha0: f64, alpha: f64) -> Result<Self, PotentialError> {
        if !(alpha0 > 0.0 && alpha > alpha0 && alpha.is_finite()) {
            return Err(PotentialError::InvalidParams(format!(
                "alpha0 = {alpha0}, alpha = {alpha}"
            )));
        }
        Ok(PotentialParams {
            alpha0,
            alpha,
            clamp_margin: DEFAULT_CLAMP_MARGIN,
        })
    }

    pub fn with_clamp_margin(mut self, margin: f64) -> Result<Self, PotentialError> {
        if !(margin > 0.0 && margin < 1e-3) {
            return Err(PotentialError::InvalidClampMargin(margin));
        }
        self.clamp_margin = margin;
        Ok(self)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn clamp_margin(&self) -> f64 {
        self.clamp_margin
    }

    /// Explicit constants (C1, C2, C3) of the growth bound
    /// |phi'(s)| <= C1 e^{C2 |phi(s)|} + C3.
    pub fn growth_constants(&self) -> (f64, f64, f64) {
        let c2 = 2.0 / self.alpha0;
        let c1 = (2.0 * self.alpha / self.alpha0 + self.alpha0.ln()).exp();
        (c1, c2, self.alpha)
    }

    /// Pulls `s` inside (-1 + margin, 1 - margin). Returns the argument to use
    /// and whether it was moved.
    pub fn clamp(&self, s: f64, policy: ClampPolicy) -> Result<(f64, bool), PotentialError> {
        if s.is_nan() {
            return Err(PotentialError::Singular { s });
        }
        if policy == ClampPolicy::Strict && s.abs() >= 1.0 {
            return Err(PotentialError::Singular { s });
        }
        let edge = 1.0 - self.clamp_margin;
        if s.abs() > edge {
            Ok((edge.copysign(s), true))
        } else {
            Ok((s, false))
        }
    }

    fn inside(&self, s: f64) -> Result<f64, PotentialError> {
        self.clamp(s, ClampPolicy::Strict).map(|(v, _)| v)
    }

    /// Free-energy density, with 0 ln 0 = 0 at the endpoints.
    pub fn density(&self, s: f64) -> Result<f64, PotentialError> {
        if !(s.abs() <= 1.0) {
            return Err(PotentialError::Domain { s });
        }
        Ok(0.5 * self.alpha0 * entropy(s) - 0.5 * self.alpha * s * s)
    }

    /// First derivative of the density.
    pub fn derivative(&self, s: f64) -> Result<f64, PotentialError> {
        let s = self.inside(s)?;
        Ok(self.derivative_unchecked(s))
    }

    #[inline]
    pub(crate) fn derivative_unchecked(&self, s: f64) -> f64 {
        self.alpha0 * odd_atanh(s) - self.alpha * s
    }

    /// Second derivative of the density; bounded below by -alpha.
    pub fn second_derivative(&self, s: f64) -> Result<f64, PotentialError> {
        let s = self.inside(s)?;
        Ok(self.second_derivative_unchecked(s))
    }

    #[inline]
    pub(crate) fn second_derivative_unchecked(&self, s: f64) -> f64 {
        self.alpha0 / ((1.0 - s) * (1.0 + s)) - self.alpha
    }

    /// derivative(s) - derivative(0) + alpha s: the strictly increasing part.
    pub fn monotone_part(&self, s: f64) -> Result<f64, PotentialError> {
        let s = self.inside(s)?;
        Ok(self.alpha0 * odd_atanh(s))
    }

    /// Antiderivative of [`monotone_part`](Self::monotone_part) vanishing at 0;
    /// nonnegative on (-1, 1).
    pub fn convex_density(&self, s: f64) -> Result<f64, PotentialError> {
        let s = self.inside(s)?;
        Ok(0.5 * self.alpha0 * entropy(s))
    }

    /// Right-hand side of the growth bound at `s`, in log form:
    /// ln(C1) + C2 |phi(s)|, so that the bound reads |phi'| <= e^{this} + C3.
    pub fn growth_exponent(&self, s: f64) -> Result<f64, PotentialError> {
        let phi = self.derivative(s)?;
        Ok(2.0 / self.alpha0 * phi.abs() + 2.0 * self.alpha / self.alpha0 + self.alpha0.ln())
    }
}

/// atanh evaluated on |s| and signed afterwards, which keeps full relative
/// accuracy near -1 as well as near +1.
#[inline]
fn odd_atanh(s: f64) -> f64 {
    let a = s.abs();
    (0.5 * (2.0 * a / (1.0 - a)).ln_1p()).copysign(s)
}

/// (1+s) ln(1+s) + (1-s) ln(1-s) with the endpoint convention.
fn entropy(s: f64) -> f64 {
    let term = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
    if s.abs() < 0.5 {
        (1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p()
    } else {
        term(1.0 + s) + term(1.0 - s)
    }
}

/// A(s) = e^s - s - 1 for s >= 0.
pub fn young_exp(s: f64) -> Result<f64, PotentialError> {
    if !(s >= 0.0) {
        return Err(PotentialError::NegativeArgument { s });
    }
    Ok(s.exp_m1() - s)
}

/// Conjugate of [`young_exp`]: (1+s) ln(1+s) - s for s >= 0.
pub fn young_log(s: f64) -> Result<f64, PotentialError> {
    if !(s >= 0.0) {
        return Err(PotentialError::NegativeArgument { s });
    }
    Ok((1.0 + s) * s.ln_1p() - s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub samples: usize,
    /// min over samples of ln(e^{exponent} + C3) - ln|phi'(s)|; must be >= 0.
    pub worst_growth_margin: f64,
    pub worst_growth_witness: f64,
    /// min over samples of phi'(s) + alpha; must be > 0.
    pub worst_lower_margin: f64,
    pub worst_lower_witness: f64,
    pub passed: bool,
    pub failure_witness: Option<f64>,
}

/// Sample points on (-1, 1), refined logarithmically toward both endpoints
/// down to a distance of 1e-9.
pub fn log_refined_samples(n: usize) -> Vec<f64> {
    let half = (n / 2).max(1);
    let lo = (1e-9f64).ln();
    let mut out = Vec::with_capacity(2 * half);
    for i in 0..half {
        // distance from the endpoint ranges over [1e-9, 1]
        let frac = i as f64 / (half.max(2) - 1) as f64;
        let dist = (lo * (1.0 - frac)).exp();
        let s = 1.0 - dist;
        out.push(s);
        out.push(-s);
    }
    out.truncate(n.max(1));
    out
}

/// Checks phi' >= -alpha and the explicit growth bound on log-refined samples.
pub fn assumption_check(p: &PotentialParams, n_samples: usize) -> AssumptionReport {
    let (_, _, c3) = p.growth_constants();
    let mut report = AssumptionReport {
        samples: 0,
        worst_growth_margin: f64::INFINITY,
        worst_growth_witness: 0.0,
        worst_lower_margin: f64::INFINITY,
        worst_lower_witness: 0.0,
        passed: true,
        failure_witness: None,
    };
    for s in log_refined_samples(n_samples) {
        report.samples += 1;
        let (Ok(dd), Ok(exponent)) = (p.second_derivative(s), p.growth_exponent(s)) else {
            report.passed = false;
            report.failure_witness.get_or_insert(s);
            continue;
        };
        // margin of phi' >= -alpha is exactly alpha0 / (1 - s^2)
        let lower = dd + p.alpha();
        if lower < report.worst_lower_margin {
            report.worst_lower_margin = lower;
            report.worst_lower_witness = s;
        }
        // ln(e^x + c3) computed without overflow
        let rhs_ln = exponent.max(c3.ln()) + (-(exponent - c3.ln()).abs()).exp().ln_1p();
        let growth = rhs_ln - dd.abs().ln();
        if growth < report.worst_growth_margin {
            report.worst_growth_margin = growth;
            report.worst_growth_witness = s;
        }
        if !(lower > 0.0) || growth < 0.0 {
            report.passed = false;
            report.failure_witness.get_or_insert(s);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PotentialParams {
        PotentialParams::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(PotentialParams::new(2.0, 2.0).is_err());
        assert!(PotentialParams::new(2.0, 1.0).is_err());
        assert!(PotentialParams::new(0.0, 1.0).is_err());
        assert!(params().with_clamp_margin(1e-2).is_err());
        assert!(params().with_clamp_margin(0.0).is_err());
    }

    #[test]
    fn density_values() {
        let p = params();
        assert_eq!(p.density(0.0).unwrap(), 0.0);
        let at_one = p.density(1.0).unwrap();
        assert!((at_one - (2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((at_one + 0.306_852_8).abs() < 1e-7);
        for s in [0.1, 0.5, 0.9, 0.999_999] {
            assert_eq!(p.density(s).unwrap(), p.density(-s).unwrap());
        }
        assert_eq!(p.density(1.5), Err(PotentialError::Domain { s: 1.5 }));
    }

    #[test]
    fn derivative_values() {
        let p = params();
        assert_eq!(p.derivative(0.0).unwrap(), 0.0);
        let v = p.derivative(0.5).unwrap();
        assert!((v - (0.5 * 3f64.ln() - 1.0)).abs() < 1e-15);
        assert!((v + 0.450_693_9).abs() < 1e-7);
        assert_eq!(p.second_derivative(0.0).unwrap(), -1.0);
        assert!(matches!(p.derivative(1.0), Err(PotentialError::Singular { .. })));
        assert!(matches!(p.derivative(-1.2), Err(PotentialError::Singular { .. })));
    }

    #[test]
    fn clamping_is_reported() {
        let p = params();
        let (s, moved) = p.clamp(1.0 - 1e-14, ClampPolicy::Strict).unwrap();
        assert!(moved);
        assert_eq!(s, 1.0 - 1e-12);
        assert_eq!(p.clamp(0.3, ClampPolicy::Strict).unwrap(), (0.3, false));
        assert!(p.clamp(1.0, ClampPolicy::Strict).is_err());
        assert_eq!(p.clamp(-1.3, ClampPolicy::Saturate).unwrap(), (-(1.0 - 1e-12), true));
        let tally = ClampTally::new();
        tally.record(2);
        tally.record(0);
        assert_eq!(tally.count(), 2);
    }

    #[test]
    fn shifted_variants() {
        let p = params();
        assert_eq!(p.monotone_part(0.0).unwrap(), 0.0);
        assert_eq!(p.convex_density(0.0).unwrap(), 0.0);
        assert!((p.monotone_part(0.5).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        for s in [-0.99, -0.3, 0.2, 0.7] {
            let direct = p.derivative(s).unwrap() - p.derivative(0.0).unwrap() + p.alpha() * s;
            assert!((p.monotone_part(s).unwrap() - direct).abs() < 1e-13);
            let via_density = p.density(s).unwrap() + 0.5 * p.alpha() * s * s;
            assert!((p.convex_density(s).unwrap() - via_density).abs() < 1e-14);
        }
    }

    #[test]
    fn convex_density_nonnegative_on_a_million_points() {
        let p = params();
        let n = 1_000_000;
        for i in 1..n {
            let s = -1.0 + 2.0 * i as f64 / n as f64;
            assert!(p.convex_density(s).unwrap() >= 0.0, "s = {s}");
        }
    }

    #[test]
    fn finite_differences() {
        let p = params();
        let h = 1e-6;
        let mut s = -0.999;
        while s <= 0.999 {
            let fd1 = (p.density(s + h).unwrap() - p.density(s - h).unwrap()) / (2.0 * h);
            let fd2 = (p.derivative(s + h).unwrap() - p.derivative(s - h).unwrap()) / (2.0 * h);
            let d1 = p.derivative(s).unwrap();
            let d2 = p.second_derivative(s).unwrap();
            assert!((fd1 - d1).abs() <= 1e-6 * (1.0 + d1.abs()), "s = {s}");
            assert!((fd2 - d2).abs() <= 1e-6 * (1.0 + d2.abs()), "s = {s}");
            s += 0.001;
        }
    }

    #[test]
    fn odd_and_even_symmetry() {
        let p = params();
        for i in 0..1000 {
            let s = i as f64 / 1000.0;
            let (a, b) = (p.derivative(s).unwrap(), p.derivative(-s).unwrap());
            assert_eq!(a, -b);
            let (a, b) = (p.second_derivative(s).unwrap(), p.second_derivative(-s).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn assumption_holds_for_valid_params() {
        for (a0, a) in [(1.0, 2.0), (0.1, 3.0), (2.5, 2.6)] {
            let p = PotentialParams::new(a0, a).unwrap();
            let r = assumption_check(&p, 100_000);
            assert!(r.passed, "{a0} {a}: {r:?}");
            assert!(r.worst_lower_margin > 0.0);
            // lower margin is alpha0/(1-s^2) >= alpha0, attained near s = 0
            assert!(r.worst_lower_margin >= a0 * (1.0 - 1e-12));
        }
        let samples = log_refined_samples(1000);
        let closest = samples.iter().fold(1.0_f64, |m, s| m.min(1.0 - s.abs()));
        assert!(closest <= 1.01e-9);
    }

    #[test]
    fn young_pair() {
        assert_eq!(young_exp(0.0).unwrap(), 0.0);
        assert_eq!(young_log(0.0).unwrap(), 0.0);
        assert!(young_exp(-0.1).is_err());
        assert!(young_log(-0.1).is_err());
        for q in [0.01, 0.5, 1.0, 3.0, 40.0] {
            let pp = f64::ln_1p(q);
            let gap = young_exp(pp).unwrap() + young_log(q).unwrap() - pp * q;
            assert!(gap.abs() < 1e-12 * (1.0 + pp * q), "q = {q}: {gap}");
        }
        let sum = young_exp(1.0).unwrap() + young_log(1.0).unwrap();
        assert!((sum - (std::f64::consts::E - 2.0 + 2.0 * 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!(1.0 <= sum && (sum - 1.1046).abs() < 1e-4);
    }
}
