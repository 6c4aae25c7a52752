use log::{info, warn};

use super::{coupled_step, DynamicsError, SchemeConfig, SimState};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::envelope::{compute_h_tilde, envelope_check, EnvelopeReport, EnvelopeState, ENVELOPE_SLACK};

/// Receives every sampled record together with the state it describes.
pub trait Sink {
    fn record(&mut self, record: &DiagnosticsRecord, state: &SimState) -> Result<(), String>;
}

impl<F: FnMut(&DiagnosticsRecord, &SimState) -> Result<(), String>> Sink for F {
    fn record(&mut self, record: &DiagnosticsRecord, state: &SimState) -> Result<(), String> {
        self(record, state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    /// Relaxation coefficient of the comparison ODE.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_end: f64,
    /// Emit a record every this many steps (plus the first and last step).
    pub sample_every: usize,
    /// Required separation of the initial datum: |theta_0|_inf <= 1 - delta0.
    pub delta0: f64,
    /// Oversampling factor for integrands involving the potential.
    pub oversample: usize,
    pub envelope: Option<EnvelopeOptions>,
}

impl RunOptions {
    pub fn new(t_end: f64) -> Self {
        RunOptions {
            t_end,
            sample_every: 10,
            delta0: 0.1,
            oversample: 4,
            envelope: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SimState,
    pub records: Vec<DiagnosticsRecord>,
    pub steps: u64,
    pub clamp_events: u64,
    /// Collocation points found with |theta| >= 1, summed over steps.
    pub bound_violations: u64,
    pub cfl_warnings: u64,
    pub envelope: Option<EnvelopeState>,
    pub envelope_reports: Vec<EnvelopeReport>,
    /// Sampled (t, theta) pairs, kept for time-integrated diagnostics.
    pub theta_samples: Vec<(f64, crate::spectral::ScalarField)>,
}

fn validate_initial(state: &SimState, delta0: f64) -> Result<(), DynamicsError> {
    let reject = |m: String| Err(DynamicsError::InitialCondition(m));
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return reject(format!("delta0 = {delta0} must lie in (0, 1)"));
    }
    let sup = state.theta.linf(1);
    if sup > 1.0 - delta0 + 1e-12 {
        return reject(format!(
            "|theta_0|_inf = {sup} exceeds 1 - delta0 = {}",
            1.0 - delta0
        ));
    }
    let mean = state.theta.mean();
    if mean.abs() > 1e-12 {
        return reject(format!("theta_0 has mean {mean:e}, expected 0"));
    }
    if !state.u.is_divergence_free() {
        return reject(format!(
            "u_0 is not divergence-free (relative divergence {:e})",
            state.u.relative_divergence()
        ));
    }
    Ok(())
}

/// Steps `state0` to `t_end` (rounded to a whole number of steps), sampling
/// diagnostics into `sinks`.
pub fn run(
    state0: SimState,
    cfg: &SchemeConfig,
    opts: &RunOptions,
    sinks: &mut [&mut dyn Sink],
) -> Result<RunSummary, DynamicsError> {
    for w in cfg.validate()? {
        warn!("{w}");
    }
    validate_initial(&state0, opts.delta0)?;
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(DynamicsError::Config(format!("t_end = {} must be nonnegative", opts.t_end)));
    }
    let n_steps = (opts.t_end / cfg.dt).round() as u64;
    let every = opts.sample_every.max(1) as u64;
    info!(
        "run: N = {}, dt = {:e}, steps = {n_steps}",
        state0.theta.grid().n(),
        cfg.dt
    );

    let mut envelope = match opts.envelope {
        Some(e) => Some(EnvelopeState::new(state0.theta.linf(1), e.epsilon)?),
        None => None,
    };
    let mut summary = RunSummary {
        final_state: state0.clone(),
        records: Vec::new(),
        steps: 0,
        clamp_events: 0,
        bound_violations: 0,
        cfl_warnings: 0,
        envelope: None,
        envelope_reports: Vec::new(),
        theta_samples: Vec::new(),
    };

    let mut emit = |state: &SimState,
                    prev: Option<&SimState>,
                    summary: &mut RunSummary,
                    envelope: &Option<EnvelopeState>|
     -> Result<(), DynamicsError> {
        let rec = diagnostics::record(state, prev, cfg, opts.oversample, summary.clamp_events)?;
        for sink in sinks.iter_mut() {
            sink.record(&rec, state).map_err(DynamicsError::Sink)?;
        }
        if let Some(env) = envelope {
            summary
                .envelope_reports
                .push(envelope_check(&state.theta, env, ENVELOPE_SLACK));
        }
        summary.records.push(rec);
        summary.theta_samples.push((state.t, state.theta.clone()));
        Ok(())
    };

    emit(&state0, None, &mut summary, &envelope)?;
    let mut state = state0;
    for k in 1..=n_steps {
        let (next, ev) = coupled_step(&state, cfg)?;
        summary.clamp_events += ev.clamped;
        summary.bound_violations += ev.beyond_bounds;
        if ev.cfl_warning {
            summary.cfl_warnings += 1;
        }
        if ev.beyond_bounds > 0 {
            warn!(
                "step {k}: {} collocation values with |theta| >= 1",
                ev.beyond_bounds
            );
        }
        if let Some(env) = envelope.as_mut() {
            let h = compute_h_tilde(&next, &next.dtheta_dt(cfg.dt), cfg)?;
            let hmax = h.linf(1);
            env.advance(next.t, cfg.dt, hmax, -hmax, &cfg.potential)?;
        }
        if k % every == 0 || k == n_steps {
            emit(&next, Some(&state), &mut summary, &envelope)?;
        }
        state = next;
    }
    summary.steps = n_steps;
    summary.final_state = state;
    summary.envelope = envelope;
    if summary.clamp_events > 0 {
        warn!("{} clamp events during the run", summary.clamp_events);
    }
    Ok(summary)
}
