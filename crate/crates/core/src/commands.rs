//! The command-line operations: `run`, `convergence`, `envelope`, `verify`
//! and `oracle-check`.
//!
//! Each returns the list of check results; an `Err` means the command could
//! not be carried out at all (bad configuration, I/O, precondition).

use std::fs;
use std::path::Path;
use std::thread;

use anyhow::{Context, Result};
use log::info;

use crate::checks;
use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::{run, RunOptions, RunSummary, SchemeConfig, SimState, Sink};
use crate::io::{write_csv, write_heatmap, write_snapshot, CheckResult, RunConfig, Snapshot};
use crate::spectral::{Grid, ScalarField};

pub const MASS_TOLERANCE: f64 = 1e-13;
pub const ENERGY_ROUNDOFF: f64 = 1e-12;
pub const DT_RATIO_WINDOW: (f64, f64) = (0.4, 0.6);
pub const EPS_RATIO_WINDOW: (f64, f64) = (0.35, 0.65);
pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const KORTEWEG_TOLERANCE: f64 = 1e-8;
pub const SEMIGROUP_TOLERANCE: f64 = 1e-12;
pub const YOUNG_EQUALITY_TOLERANCE: f64 = 1e-12;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const ODE_STATIONARY_TOLERANCE: f64 = 1e-12;
pub const MEAN_PHI_TOLERANCE: f64 = 1e-9;
pub const MONITOR_SPREAD: f64 = 0.2;

/// Configuration used by `verify` when none is given.
pub const DEFAULT_CONFIG: &str = "grid.N = 64\npotential.alpha0 = 1\npotential.alpha = 2\nrun.t_end = 0.1\n";

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    lo <= x && x <= hi
}

/// Largest upward step between consecutive values, relative to the values.
pub fn worst_energy_increase(energies: &[f64]) -> f64 {
    energies
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether the run has no velocity and no capillary forcing (Cahn-Hilliard only).
pub fn is_pure_cahn_hilliard(state: &SimState, cfg: &SchemeConfig) -> bool {
    !cfg.korteweg && state.u.l2_norm() == 0.0
}

struct OutputSink<'a> {
    dir: &'a Path,
    snapshots: bool,
    heatmaps: bool,
}

impl Sink for OutputSink<'_> {
    fn record(&mut self, _: &DiagnosticsRecord, state: &SimState) -> std::result::Result<(), String> {
        if self.snapshots {
            let path = self.dir.join(format!("snapshot_{:08}.nsch", state.step));
            write_snapshot(&path, &Snapshot::from_state(state)).map_err(|e| e.to_string())?;
        }
        if self.heatmaps {
            let path = self.dir.join(format!("theta_{:08}.pgm", state.step));
            write_heatmap(&path, &state.theta).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        Ok(())
    }
}

/// Checks that every run must satisfy: mass, separation, clamp events.
pub fn run_checks(command: &str, summary: &RunSummary) -> Vec<CheckResult> {
    let recs = &summary.records;
    let m0 = recs[0].mass;
    let drift = recs.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max);
    let min_delta = recs.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min);
    vec![
        CheckResult::new(
            command,
            "mass conservation",
            drift <= MASS_TOLERANCE,
            format!("max |m(theta) - m(theta_0)| over {} samples", recs.len()),
        )
        .measured(drift, MASS_TOLERANCE),
        CheckResult::new(
            command,
            "separation",
            min_delta > 0.0 && summary.bound_violations == 0,
            format!(
                "min delta = {min_delta:.6} on the 2x grid, {} collocation values with |theta| >= 1",
                summary.bound_violations
            ),
        ),
        CheckResult::new(
            command,
            "clamp events",
            summary.clamp_events == 0,
            format!("{} clamped potential evaluations", summary.clamp_events),
        ),
    ]
}

/// `run <config>`: simulate, write the requested outputs, check invariants.
pub fn run_command(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let state0 = cfg.initial_state()?;
    let pure_ch = is_pure_cahn_hilliard(&state0, &cfg.scheme);
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating output directory {}", cfg.output_dir.display()))?;
    let mut sink = OutputSink {
        dir: &cfg.output_dir,
        snapshots: cfg.emit.snapshots,
        heatmaps: cfg.emit.heatmaps,
    };
    let summary = run(state0, &cfg.scheme, &cfg.run_options(), &mut [&mut sink])?;
    if cfg.emit.csv {
        let path = cfg.output_dir.join("diagnostics.csv");
        write_csv(&path, &summary.records)?;
        info!("wrote {}", path.display());
    }
    let mut results = run_checks("run", &summary);
    if pure_ch {
        let energies: Vec<f64> = summary.records.iter().map(|r| r.e_total).collect();
        let rise = worst_energy_increase(&energies);
        results.push(
            CheckResult::new("run", "energy decay", rise <= ENERGY_ROUNDOFF, "largest relative E_total increase between samples")
                .measured(rise, ENERGY_ROUNDOFF),
        );
    }
    if summary.cfl_warnings > 0 {
        log::warn!("{} steps exceeded the advective CFL bound", summary.cfl_warnings);
    }
    Ok(results)
}

/// `envelope <config>`: run with envelope tracking and check every sample.
pub fn envelope_command(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let mut cfg = cfg.clone();
    if cfg.scheme.kappa != 1.0 || cfg.scheme.mobility != 1.0 {
        anyhow::bail!("envelope tracking assumes scheme.kappa = scheme.mobility = 1");
    }
    if !cfg.envelope_enabled {
        cfg.envelope_enabled = true;
        if !(cfg.envelope_epsilon > 0.0) {
            anyhow::bail!("envelope tracking needs scheme.epsilon > 0 or envelope.epsilon_ode > 0");
        }
    }
    let asserted = cfg.scheme.epsilon > 0.0;
    let summary = run(cfg.initial_state()?, &cfg.scheme, &cfg.run_options(), &mut [])?;
    let mut results = Vec::new();
    for (rec, rep) in summary.records.iter().zip(&summary.envelope_reports) {
        let detail = format!(
            "t = {:.6}: {:.9} <= theta <= {:.9} within [{:.9}, {:.9}]{}",
            rec.t,
            rep.theta_min,
            rep.theta_max,
            rep.y_minus,
            rep.y_plus,
            if asserted { "" } else { " (reported only: scheme.epsilon = 0)" }
        );
        results.push(CheckResult::new("envelope", "envelope sample", rep.pass || !asserted, detail));
    }
    if let Some(env) = &summary.envelope {
        let (lo, hi) = env.integrated_phi_sq(&cfg.scheme.potential);
        let finite = lo.is_finite() && hi.is_finite();
        results.push(CheckResult::new(
            "envelope",
            "integrated phi(y)^2",
            finite,
            format!("lower envelope {lo:.6e}, upper envelope {hi:.6e}"),
        ));
    }
    results.extend(run_checks("envelope", &summary));
    Ok(results)
}

/// Final state and final energy-law residual of one run with `scheme`.
fn final_of(state0: &SimState, scheme: &SchemeConfig, opts: &RunOptions) -> Result<(ScalarField, f64)> {
    let mut opts = opts.clone();
    opts.sample_every = usize::MAX;
    opts.envelope = None;
    let s = run(state0.clone(), scheme, &opts, &mut [])?;
    let last = s.records.last().map(|r| r.energy_residual).unwrap_or(0.0);
    Ok((s.final_state.theta, last))
}

/// Study tables printed by `convergence`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTables {
    /// (dt, final energy-law residual, |theta_dt - theta_{dt/2}|_{L2}).
    pub dt_rows: Vec<(f64, f64, Option<f64>)>,
    /// (eps, |theta_eps - theta_0|_{L2}).
    pub eps_rows: Vec<(f64, f64)>,
}

impl ConvergenceTables {
    pub fn residual_ratios(&self) -> Vec<f64> {
        self.dt_rows.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }

    pub fn self_convergence_ratios(&self) -> Vec<f64> {
        let errs: Vec<f64> = self.dt_rows.iter().filter_map(|r| r.2).collect();
        errs.windows(2).map(|w| w[1] / w[0]).collect()
    }

    pub fn eps_ratios(&self) -> Vec<f64> {
        self.eps_rows.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }
}

/// Runs the dt-halving and eps-halving studies concurrently.
pub fn convergence_tables(cfg: &RunConfig, halvings: usize) -> Result<ConvergenceTables> {
    let state0 = cfg.initial_state()?;
    let opts = cfg.run_options();
    let base = &cfg.scheme;
    let eps0 = if base.epsilon > 0.0 { base.epsilon } else { 1e-2 };
    let dt_schemes: Vec<SchemeConfig> = (0..=halvings)
        .map(|k| SchemeConfig {
            dt: base.dt / 2f64.powi(k as i32),
            ..base.clone()
        })
        .collect();
    let eps_schemes: Vec<SchemeConfig> = std::iter::once(0.0)
        .chain((0..=halvings).map(|k| eps0 / 2f64.powi(k as i32)))
        .map(|epsilon| SchemeConfig {
            epsilon,
            ..base.clone()
        })
        .collect();
    let (dt_out, eps_out) = thread::scope(|s| {
        let spawn = |schemes: &[SchemeConfig]| {
            schemes
                .iter()
                .cloned()
                .map(|sc| {
                    let (st, op) = (&state0, &opts);
                    s.spawn(move || final_of(st, &sc, op))
                })
                .collect::<Vec<_>>()
        };
        let dt_handles = spawn(&dt_schemes);
        let eps_handles = spawn(&eps_schemes);
        let join = |hs: Vec<thread::ScopedJoinHandle<'_, Result<(ScalarField, f64)>>>| {
            hs.into_iter()
                .map(|h| h.join().expect("study thread panicked"))
                .collect::<Result<Vec<_>>>()
        };
        (join(dt_handles), join(eps_handles))
    });
    let (dt_out, eps_out) = (dt_out?, eps_out?);
    let dt_rows = dt_out
        .iter()
        .enumerate()
        .map(|(k, (theta, res))| {
            let err = dt_out.get(k + 1).map(|(next, _)| (theta - next).l2_norm());
            (dt_schemes[k].dt, *res, err)
        })
        .collect();
    let reference = &eps_out[0].0;
    let eps_rows = eps_out[1..]
        .iter()
        .zip(&eps_schemes[1..])
        .map(|((theta, _), sc)| (sc.epsilon, (theta - reference).l2_norm()))
        .collect();
    Ok(ConvergenceTables { dt_rows, eps_rows })
}

/// Renders the ratio tables for standard output.
pub fn format_tables(t: &ConvergenceTables) -> String {
    let mut out = String::from("dt study\n        dt      residual  factor   |theta_dt - theta_dt/2|  factor\n");
    for (k, (dt, res, err)) in t.dt_rows.iter().enumerate() {
        let factor = |a: f64, b: f64| format!("{:>7.3}", a / b);
        let rf = if k > 0 { factor(t.dt_rows[k - 1].1, *res) } else { "      -".into() };
        let ef = match (k.checked_sub(1).and_then(|j| t.dt_rows[j].2), err) {
            (Some(prev), Some(e)) => factor(prev, *e),
            _ => "      -".into(),
        };
        let e = err.map_or("-".to_string(), |e| format!("{e:.6e}"));
        out += &format!("{dt:>10.3e}  {res:.6e}  {rf}   {e:>22}  {ef}\n");
    }
    out += "eps study\n       eps  |theta_eps - theta_0|  factor\n";
    for (k, (eps, err)) in t.eps_rows.iter().enumerate() {
        let f = if k > 0 { format!("{:>7.3}", t.eps_rows[k - 1].1 / err) } else { "      -".into() };
        out += &format!("{eps:>10.3e}  {err:>20.6e}  {f}\n");
    }
    out
}

/// `convergence <config> --halvings k`.
pub fn convergence_command(cfg: &RunConfig, halvings: usize) -> Result<(String, Vec<CheckResult>)> {
    if halvings == 0 {
        anyhow::bail!("--halvings must be at least 1");
    }
    let tables = convergence_tables(cfg, halvings)?;
    let mut results = Vec::new();
    for (k, r) in tables.residual_ratios().into_iter().enumerate() {
        results.push(
            CheckResult::new(
                "convergence",
                "energy residual halving",
                within(r, DT_RATIO_WINDOW),
                format!("residual(dt/2)/residual(dt) at halving {}", k + 1),
            )
            .measured(r, DT_RATIO_WINDOW.1),
        );
    }
    for (k, r) in tables.self_convergence_ratios().into_iter().enumerate() {
        results.push(
            CheckResult::new(
                "convergence",
                "dt self-convergence",
                within(r, DT_RATIO_WINDOW),
                format!("successive-difference ratio at halving {}", k + 1),
            )
            .measured(r, DT_RATIO_WINDOW.1),
        );
    }
    for (k, r) in tables.eps_ratios().into_iter().enumerate() {
        results.push(
            CheckResult::new(
                "convergence",
                "eps convergence",
                within(r, EPS_RATIO_WINDOW),
                format!("e(eps/2)/e(eps) at halving {}", k + 1),
            )
            .measured(r, EPS_RATIO_WINDOW.1),
        );
    }
    Ok((format_tables(&tables), results))
}

/// `oracle-check`: FFT operators against the dense N = 8 oracle.
pub fn oracle_check_command() -> Result<Vec<CheckResult>> {
    Ok(checks::spectral_oracle_errors(8, 100, 0x5eed)?
        .into_iter()
        .map(|(name, err)| {
            CheckResult::new("oracle-check", name, err <= ORACLE_TOLERANCE, "max pointwise error over 100 random fields, N = 8")
                .measured(err, ORACLE_TOLERANCE)
        })
        .collect())
}

/// `verify [config]`: the property suite for the configured potential and
/// initial datum.
pub fn verify_command(cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let cmd = "verify";
    let p = &cfg.scheme.potential;
    let mut out = oracle_check_command()?
        .into_iter()
        .map(|mut r| {
            r.command = cmd.into();
            r.check = format!("spectral oracle: {}", r.check);
            r
        })
        .collect::<Vec<_>>();

    let suite = checks::potential_suite(p, 1_000_000, 100_000, 0x9071)?;
    let a = &suite.assumption;
    out.push(CheckResult::new(
        cmd,
        "potential growth bound",
        a.passed,
        format!(
            "{} log-refined samples, worst log-margin {:.4} at s = {}, worst phi' + alpha = {:.4}",
            a.samples, a.worst_growth_margin, a.worst_growth_witness, a.worst_lower_margin
        ),
    ));
    out.push(
        CheckResult::new(cmd, "young inequality", suite.young_margin >= 0.0 && suite.young_log_bound_margin >= 0.0, "min relative margin over 1e5 random pairs in [0, 50]^2")
            .measured(suite.young_margin, 0.0),
    );
    out.push(
        CheckResult::new(cmd, "young equality case", suite.young_equality_error <= YOUNG_EQUALITY_TOLERANCE, "p = ln(1 + q)")
            .measured(suite.young_equality_error, YOUNG_EQUALITY_TOLERANCE),
    );
    let fd = suite.fd_density_error.max(suite.fd_derivative_error);
    out.push(
        CheckResult::new(cmd, "potential finite differences", fd <= FD_TOLERANCE, "relative central-difference error on |s| <= 0.999")
            .measured(fd, FD_TOLERANCE),
    );

    let kg = Grid::new(128)?;
    let mut kerr = 0.0_f64;
    for seed in 0..4 {
        kerr = kerr.max(checks::korteweg_identity_error(&kg, &cfg.scheme, seed, 0.5, 4)?);
    }
    out.push(
        CheckResult::new(cmd, "korteweg identity", kerr <= KORTEWEG_TOLERANCE, "N = 128, modes |n| <= 32, sup norm 0.5, 4x oversampled")
            .measured(kerr, KORTEWEG_TOLERANCE),
    );

    let eps = if cfg.envelope_epsilon > 0.0 { cfg.envelope_epsilon } else { 1e-2 };
    let ode = checks::ode_identity_report(p, eps, 5e-4, 0.1, 3)?;
    let stationary = ode.stationary.iter().cloned().fold(0.0, f64::max);
    out.push(
        CheckResult::new(cmd, "ode identity (stationary)", stationary <= ODE_STATIONARY_TOLERANCE, "constant trajectories")
            .measured(stationary, ODE_STATIONARY_TOLERANCE),
    );
    for (k, r) in ode.forced_ratios().into_iter().enumerate() {
        out.push(
            CheckResult::new(cmd, "ode identity (forced)", within(r, DT_RATIO_WINDOW), format!("residual ratio at halving {}", k + 1))
                .measured(r, DT_RATIO_WINDOW.1),
        );
    }

    let theta0 = cfg.initial_state()?.theta;
    let semi = checks::semigroup_report(&theta0, cfg.delta0)?;
    out.push(
        CheckResult::new(cmd, "semigroup single mode", semi.single_mode_error <= SEMIGROUP_TOLERANCE, "e^{-t|n|^4} scaling")
            .measured(semi.single_mode_error, SEMIGROUP_TOLERANCE),
    );
    out.push(
        CheckResult::new(cmd, "semigroup composition", semi.composition_error <= SEMIGROUP_TOLERANCE, "S(t)S(s) = S(t+s)")
            .measured(semi.composition_error, SEMIGROUP_TOLERANCE),
    );
    out.push(CheckResult::new(
        cmd,
        "semigroup separation time",
        semi.t1 > 0.0 && semi.t1_margin <= 0.0,
        format!("T1 = {:.6e} for the configured datum, worst excess {:.3e}", semi.t1, semi.t1_margin),
    ));

    let mp = checks::mean_phi_residual(&cfg.grid, p, 20, 0x3ea9, cfg.oversample)?;
    out.push(
        CheckResult::new(cmd, "mean-phi identity", mp <= MEAN_PHI_TOLERANCE, "20 random separated mean-zero fields")
            .measured(mp, MEAN_PHI_TOLERANCE),
    );

    let maxima = checks::monitor_maxima(&[32, 64, 128], 1000, 0x0d1c)?;
    let orl: Vec<f64> = maxima.iter().map(|m| m.orlicz).collect();
    let ls: Vec<f64> = maxima.iter().map(|m| m.log_sobolev).collect();
    let spread = checks::relative_spread(&orl).max(checks::relative_spread(&ls));
    let finite = orl.iter().chain(&ls).all(|v| v.is_finite());
    out.push(
        CheckResult::new(
            cmd,
            "inequality monitors",
            finite && spread < MONITOR_SPREAD,
            format!("orlicz maxima {orl:.6?}, log-sobolev maxima {ls:.6?} for N = 32, 64, 128"),
        )
        .measured(spread, MONITOR_SPREAD),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_config;

    #[test]
    fn energy_increase_measure() {
        assert!(worst_energy_increase(&[3.0, 2.0, 1.0]) < 0.0);
        assert_eq!(worst_energy_increase(&[1.0, 1.5]), 0.5);
    }

    #[test]
    fn default_config_parses() {
        let cfg = parse_config(DEFAULT_CONFIG).unwrap();
        assert_eq!(cfg.grid.n(), 64);
    }

    #[test]
    fn short_run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "grid.N = 16\npotential.alpha0 = 1\npotential.alpha = 2\nrun.t_end = 0.005\nscheme.dt = 1e-3\nrun.sample_every = 2\noutput.dir = {}\noutput.emit = csv, snapshots, heatmaps\n",
            dir.path().display()
        );
        let cfg = parse_config(&text).unwrap();
        let results = run_command(&cfg).unwrap();
        assert!(results.iter().all(|r| r.passed), "{results:?}");
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 4);
        assert!(dir.path().join("snapshot_00000004.nsch").exists());
        assert!(dir.path().join("theta_00000005.pgm").exists());
    }

    #[test]
    fn convergence_tables_shape() {
        let text = "grid.N = 16\npotential.alpha0 = 1\npotential.alpha = 2\nrun.t_end = 0.004\nscheme.dt = 1e-3\n";
        let t = convergence_tables(&parse_config(text).unwrap(), 2).unwrap();
        assert_eq!(t.dt_rows.len(), 3);
        assert_eq!(t.residual_ratios().len(), 2);
        assert_eq!(t.self_convergence_ratios().len(), 1);
        assert_eq!(t.eps_rows.len(), 3);
        assert!(format_tables(&t).contains("eps study"));
    }
}
