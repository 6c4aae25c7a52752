//! Flat `key = value` run configuration
//!
//! One assignment per line, `#` starts a comment, keys are dotted paths.
//! A repeated key overrides the earlier one and produces a warning. Every
//! problem found is reported, each with its line number where one exists.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use crate::dynamics::{
    build_theta, build_velocity, DynamicsError, InitialCondition, RunOptions, SchemeConfig, SimState,
    VelocityInit, ViscosityModel,
};
use crate::potential::{ClampPolicy, PotentialParams};
use crate::spectral::{Grid, ScalarField, VectorField};

use super::snapshot::read_snapshot;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

/// Where the initial order parameter comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSource {
    Preset(InitialCondition),
    /// theta and u read from a snapshot file.
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Emit {
    pub snapshots: bool,
    pub csv: bool,
    pub heatmaps: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub scheme: SchemeConfig,
    pub initial: InitialSource,
    pub velocity: VelocityInit,
    pub delta0: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub output_dir: PathBuf,
    pub emit: Emit,
    pub envelope_enabled: bool,
    pub envelope_epsilon: f64,
    pub oversample: usize,
    pub warnings: Vec<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "grid.N",
    "grid.dealias_cut",
    "scheme.dt",
    "scheme.S",
    "scheme.epsilon",
    "scheme.galerkin_n",
    "scheme.kappa",
    "scheme.mobility",
    "scheme.viscosity.kind",
    "scheme.viscosity.nu_a",
    "scheme.viscosity.nu_b",
    "scheme.korteweg",
    "scheme.clamp",
    "potential.alpha0",
    "potential.alpha",
    "potential.clamp_margin",
    "ic.kind",
    "ic.seed",
    "ic.rng",
    "ic.band",
    "ic.target_linf",
    "ic.delta0",
    "ic.modes",
    "ic.radius",
    "ic.width",
    "ic.path",
    "ic.velocity",
    "ic.velocity_amplitude",
    "run.t_end",
    "run.sample_every",
    "output.dir",
    "output.emit",
    "envelope.enabled",
    "envelope.epsilon_ode",
    "diagnostics.oversample",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.values.get(key).map(|(l, _)| *l)
    }

    fn fail(&mut self, key: &str, message: String) {
        let line = self.line(key);
        self.issues.push(ConfigIssue { line, message });
    }

    fn raw(&self, key: &str) -> Option<String> {
        self.values.get(key).map(|(_, v)| v.clone())
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<T> {
        let raw = self.raw(key)?;
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(key, format!("{key} = '{raw}' is not a valid {what}"));
                None
            }
        }
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        let v: f64 = self.parsed(key, "number")?;
        if v.is_finite() {
            Some(v)
        } else {
            self.fail(key, format!("{key} must be finite"));
            None
        }
    }

    fn real_or(&mut self, key: &str, default: f64) -> f64 {
        self.real(key).unwrap_or(default)
    }

    fn required_real(&mut self, key: &str) -> Option<f64> {
        if self.values.contains_key(key) {
            self.real(key)
        } else {
            self.issues.push(ConfigIssue {
                line: None,
                message: format!("missing required key {key}"),
            });
            None
        }
    }

    fn boolean_or(&mut self, key: &str, default: bool) -> bool {
        self.parsed(key, "boolean (true/false)").unwrap_or(default)
    }

    fn positive(&mut self, key: &str, value: f64) -> f64 {
        if !(value > 0.0) {
            self.fail(key, format!("{key} = {value} must be positive"));
        }
        value
    }
}

fn tokenize(text: &str, warnings: &mut Vec<String>) -> Entries {
    let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut issues = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            issues.push(ConfigIssue {
                line: Some(line_no),
                message: format!("expected 'key = value', found '{content}'"),
            });
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().trim_matches('"').to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            issues.push(ConfigIssue {
                line: Some(line_no),
                message: format!("unknown key '{key}'"),
            });
            continue;
        }
        if let Some((prev, _)) = values.get(&key) {
            warnings.push(format!(
                "line {line_no}: duplicate key '{key}' overrides line {prev}"
            ));
        }
        values.insert(key, (line_no, value));
    }
    Entries { values, issues }
}

fn parse_modes(raw: &str) -> Result<Vec<(i64, i64, f64, f64)>, String> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(format!("mode '{item}' needs 4 entries n1,n2,cos,sin"));
            }
            let int = |s: &str| s.parse::<i64>().map_err(|_| format!("bad wavenumber '{s}'"));
            let real = |s: &str| s.parse::<f64>().map_err(|_| format!("bad amplitude '{s}'"));
            Ok((int(parts[0])?, int(parts[1])?, real(parts[2])?, real(parts[3])?))
        })
        .collect()
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut warnings = Vec::new();
    let mut e = tokenize(text, &mut warnings);

    let n = if e.values.contains_key("grid.N") {
        e.parsed::<usize>("grid.N", "integer")
    } else {
        e.issues.push(ConfigIssue {
            line: None,
            message: "missing required key grid.N".into(),
        });
        None
    };
    let dealias_cut: Option<usize> = e.parsed("grid.dealias_cut", "integer");
    let grid = n.and_then(|n| {
        let g = match dealias_cut {
            Some(c) => Grid::with_dealias_cut(n, c),
            None => Grid::new(n),
        };
        match g {
            Ok(g) => Some(g),
            Err(err) => {
                let key = if dealias_cut.is_some() && n % 2 == 0 && n >= 8 {
                    "grid.dealias_cut"
                } else {
                    "grid.N"
                };
                e.fail(key, err.to_string());
                None
            }
        }
    });

    let alpha0 = e.required_real("potential.alpha0");
    let alpha = e.required_real("potential.alpha");
    let mut potential = match (alpha0, alpha) {
        (Some(a0), Some(a)) => match PotentialParams::new(a0, a) {
            Ok(p) => Some(p),
            Err(_) => {
                e.fail(
                    "potential.alpha0",
                    format!(
                        "potential.alpha0 = {a0}, potential.alpha = {a}: the logarithmic potential requires 0 < alpha0 < alpha"
                    ),
                );
                None
            }
        },
        _ => None,
    };
    if let (Some(p), Some(margin)) = (potential, e.real("potential.clamp_margin")) {
        match p.with_clamp_margin(margin) {
            Ok(p) => potential = Some(p),
            Err(err) => e.fail("potential.clamp_margin", err.to_string()),
        }
    }

    let dt = e.real_or("scheme.dt", 1e-3);
    let dt = e.positive("scheme.dt", dt);
    let stabilization = e.real("scheme.S");
    let epsilon = e.real_or("scheme.epsilon", 0.0);
    if epsilon < 0.0 {
        e.fail("scheme.epsilon", format!("scheme.epsilon = {epsilon} must be >= 0"));
    }
    let galerkin_n = match e.raw("scheme.galerkin_n").as_deref() {
        None | Some("none") => None,
        Some(_) => e.parsed::<usize>("scheme.galerkin_n", "integer or 'none'"),
    };
    if galerkin_n == Some(0) {
        e.fail("scheme.galerkin_n", "scheme.galerkin_n must be positive".into());
    }
    let kappa = e.real_or("scheme.kappa", 1.0);
    let kappa = e.positive("scheme.kappa", kappa);
    let mobility = e.real_or("scheme.mobility", 1.0);
    let mobility = e.positive("scheme.mobility", mobility);
    let nu_a = e.real_or("scheme.viscosity.nu_a", 1.0);
    let nu_b = e.real_or("scheme.viscosity.nu_b", 0.0);
    let viscosity = match e.raw("scheme.viscosity.kind").as_deref().unwrap_or("constant") {
        "constant" => {
            if nu_b != 0.0 {
                e.fail(
                    "scheme.viscosity.nu_b",
                    "scheme.viscosity.nu_b needs scheme.viscosity.kind = affine".into(),
                );
            }
            ViscosityModel::constant(nu_a)
        }
        "affine" => ViscosityModel::affine(nu_a, nu_b),
        other => {
            e.fail(
                "scheme.viscosity.kind",
                format!("scheme.viscosity.kind = '{other}' (expected constant or affine)"),
            );
            ViscosityModel::constant(1.0)
        }
    };
    let viscosity = match viscosity {
        Ok(v) => v,
        Err(err) => {
            e.fail("scheme.viscosity.nu_a", err.to_string());
            ViscosityModel::Constant { nu: 1.0 }
        }
    };
    let korteweg = e.boolean_or("scheme.korteweg", true);
    let clamp = match e.raw("scheme.clamp").as_deref().unwrap_or("saturate") {
        "saturate" => ClampPolicy::Saturate,
        "strict" => ClampPolicy::Strict,
        other => {
            e.fail("scheme.clamp", format!("scheme.clamp = '{other}' (expected saturate or strict)"));
            ClampPolicy::Saturate
        }
    };

    let delta0 = e.real_or("ic.delta0", 0.1);
    if !(delta0 > 0.0 && delta0 < 1.0) {
        e.fail("ic.delta0", format!("ic.delta0 = {delta0} must lie in (0, 1)"));
    }
    let seed: u64 = e.parsed("ic.seed", "unsigned integer").unwrap_or(0);
    let rng = e.raw("ic.rng").unwrap_or_else(|| "chacha20".into());
    if rng != "chacha20" {
        e.fail("ic.rng", format!("ic.rng = '{rng}' is not supported (only chacha20)"));
    }
    let cap = 1.0 - delta0;
    let target_linf = e.real_or("ic.target_linf", cap);
    if target_linf > cap && delta0 > 0.0 && delta0 < 1.0 {
        warnings.push(format!(
            "ic.target_linf = {target_linf} exceeds 1 - ic.delta0; rescaled to {cap}"
        ));
    }
    if !(target_linf > 0.0) {
        e.fail("ic.target_linf", format!("ic.target_linf = {target_linf} must be positive"));
    }
    let kind = e.raw("ic.kind").unwrap_or_else(|| "random_band".into());
    let initial = match kind.as_str() {
        "random_band" => {
            let band = e.parsed::<usize>("ic.band", "integer").unwrap_or(4);
            if let Some(g) = &grid {
                if band == 0 || band >= g.n() / 2 {
                    e.fail("ic.band", format!("ic.band = {band} must lie in [1, N/2)"));
                }
            }
            InitialSource::Preset(InitialCondition::RandomBand {
                seed,
                band,
                target_linf,
            })
        }
        "modes" => match e.raw("ic.modes") {
            Some(raw) => match parse_modes(&raw) {
                Ok(m) => InitialSource::Preset(InitialCondition::Modes(m)),
                Err(msg) => {
                    e.fail("ic.modes", msg);
                    InitialSource::Preset(InitialCondition::Modes(Vec::new()))
                }
            },
            None => {
                e.fail("ic.kind", "ic.kind = modes requires ic.modes".into());
                InitialSource::Preset(InitialCondition::Modes(Vec::new()))
            }
        },
        "two_bubble" => {
            let radius = e.real_or("ic.radius", 0.9);
            let width = e.real_or("ic.width", 0.25);
            InitialSource::Preset(InitialCondition::TwoBubble {
                radius: e.positive("ic.radius", radius),
                width: e.positive("ic.width", width),
                target_linf,
            })
        }
        "snapshot" => match e.raw("ic.path") {
            Some(p) => InitialSource::Snapshot(PathBuf::from(p)),
            None => {
                e.fail("ic.kind", "ic.kind = snapshot requires ic.path".into());
                InitialSource::Snapshot(PathBuf::new())
            }
        },
        other => {
            e.fail(
                "ic.kind",
                format!("ic.kind = '{other}' (expected modes, random_band, two_bubble or snapshot)"),
            );
            InitialSource::Preset(InitialCondition::Modes(Vec::new()))
        }
    };
    let amplitude = e.real_or("ic.velocity_amplitude", 1.0);
    let velocity = match e.raw("ic.velocity").as_deref().unwrap_or("zero") {
        "zero" => VelocityInit::Zero,
        "taylor_green" => VelocityInit::TaylorGreen { amplitude },
        other => {
            e.fail("ic.velocity", format!("ic.velocity = '{other}' (expected zero or taylor_green)"));
            VelocityInit::Zero
        }
    };

    let t_end = e.required_real("run.t_end").unwrap_or(0.0);
    if t_end < 0.0 {
        e.fail("run.t_end", format!("run.t_end = {t_end} must be >= 0"));
    }
    let sample_every = e.parsed::<usize>("run.sample_every", "integer").unwrap_or(10);
    if sample_every == 0 {
        e.fail("run.sample_every", "run.sample_every must be positive".into());
    }
    let output_dir = PathBuf::from(e.raw("output.dir").unwrap_or_else(|| "out".into()));
    let mut emit = Emit::default();
    let emit_raw = e.raw("output.emit").unwrap_or_else(|| "csv".into());
    for item in emit_raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "snapshots" => emit.snapshots = true,
            "csv" => emit.csv = true,
            "heatmaps" => emit.heatmaps = true,
            "none" => {}
            other => e.fail(
                "output.emit",
                format!("output.emit entry '{other}' (expected snapshots, csv, heatmaps or none)"),
            ),
        }
    }
    let envelope_enabled = e.boolean_or("envelope.enabled", false);
    let envelope_epsilon = e.real_or("envelope.epsilon_ode", epsilon);
    if envelope_enabled {
        if !(envelope_epsilon > 0.0) {
            e.fail(
                "envelope.epsilon_ode",
                "envelope tracking needs a positive envelope.epsilon_ode (or scheme.epsilon)".into(),
            );
        }
        if kappa != 1.0 || mobility != 1.0 {
            e.fail(
                "envelope.enabled",
                "envelope tracking assumes scheme.kappa = scheme.mobility = 1".into(),
            );
        }
    }
    let oversample = e.parsed::<usize>("diagnostics.oversample", "integer").unwrap_or(4);
    if !(1..=8).contains(&oversample) {
        e.fail("diagnostics.oversample", format!("diagnostics.oversample = {oversample} must lie in [1, 8]"));
    }

    let mut issues = std::mem::take(&mut e.issues);
    let (Some(grid), Some(potential)) = (grid, potential) else {
        issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(ConfigError { issues });
    };
    let mut scheme = SchemeConfig::new(dt, potential);
    scheme.stabilization = stabilization.unwrap_or(2.0 * potential.alpha());
    scheme.epsilon = epsilon;
    scheme.galerkin_n = galerkin_n;
    scheme.kappa = kappa;
    scheme.mobility = mobility;
    scheme.viscosity = viscosity;
    scheme.korteweg = korteweg;
    scheme.clamp = clamp;
    match scheme.validate() {
        Ok(w) => warnings.extend(w),
        Err(err) => issues.push(ConfigIssue {
            line: None,
            message: err.to_string(),
        }),
    }
    if !issues.is_empty() {
        issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(ConfigError { issues });
    }
    Ok(RunConfig {
        grid,
        scheme,
        initial,
        velocity,
        delta0,
        t_end,
        sample_every,
        output_dir,
        emit,
        envelope_enabled,
        envelope_epsilon,
        oversample,
        warnings,
    })
}

impl RunConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            t_end: self.t_end,
            sample_every: self.sample_every,
            delta0: self.delta0,
            oversample: self.oversample,
            envelope: self
                .envelope_enabled
                .then_some(crate::dynamics::EnvelopeOptions {
                    epsilon: self.envelope_epsilon,
                }),
        }
    }

    pub fn initial_state(&self) -> Result<SimState, DynamicsError> {
        match &self.initial {
            InitialSource::Preset(ic) => {
                let theta = build_theta(&self.grid, ic, self.delta0)?;
                let u = build_velocity(&self.grid, &self.velocity)?;
                SimState::new(theta, u)
            }
            InitialSource::Snapshot(path) => {
                let snap = read_snapshot(path)
                    .map_err(|e| DynamicsError::InitialCondition(e.to_string()))?;
                if snap.n as usize != self.grid.n() {
                    return Err(DynamicsError::InitialCondition(format!(
                        "snapshot has N = {} but grid.N = {}",
                        snap.n,
                        self.grid.n()
                    )));
                }
                let theta = ScalarField::from_values(&self.grid, &snap.theta)?;
                let u = VectorField::new(
                    ScalarField::from_values(&self.grid, &snap.u1)?,
                    ScalarField::from_values(&self.grid, &snap.u2)?,
                )?;
                let mut state = SimState::new(theta, u)?;
                state.t = snap.t;
                Ok(state)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "grid.N = 64\npotential.alpha0 = 1\npotential.alpha = 2\nrun.t_end = 0.1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.grid.n(), 64);
        assert_eq!(cfg.scheme.dt, 1e-3);
        assert_eq!(cfg.scheme.stabilization, 4.0);
        assert_eq!(cfg.scheme.epsilon, 0.0);
        assert_eq!(cfg.delta0, 0.1);
        assert_eq!(cfg.sample_every, 10);
        assert!(cfg.emit.csv && !cfg.emit.snapshots);
        assert!(cfg.warnings.is_empty());
        assert_eq!(
            cfg.initial,
            InitialSource::Preset(InitialCondition::RandomBand {
                seed: 0,
                band: 4,
                target_linf: 0.9
            })
        );
    }

    #[test]
    fn swapped_potential_parameters_are_rejected() {
        let text = "grid.N = 64\npotential.alpha0 = 2\npotential.alpha = 1\nrun.t_end = 0.1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].line, Some(2));
        assert!(err.issues[0].message.contains("0 < alpha0 < alpha"));
    }

    #[test]
    fn duplicate_key_last_wins_with_warning() {
        let text = format!("{MINIMAL}scheme.dt = 1e-2\nscheme.dt = 5e-3 # finer\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.scheme.dt, 5e-3);
        assert_eq!(cfg.warnings.len(), 1);
        assert!(cfg.warnings[0].contains("line 6"));
    }

    #[test]
    fn all_problems_listed_with_lines() {
        let text = "grid.N = 63\nbogus.key = 1\npotential.alpha0 = x\nrun.t_end = 1\nscheme.clamp = maybe\n";
        let err = parse_config(text).unwrap_err();
        let lines: Vec<_> = err.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(1), Some(2), Some(3), Some(5), None]);
        assert!(err.to_string().contains("missing required key potential.alpha"));
    }

    #[test]
    fn modes_and_options_parse() {
        let text = format!(
            "{MINIMAL}ic.kind = modes\nic.modes = 1,0,0.3,0; 0,2,0,0.1\noutput.emit = snapshots, heatmaps\n\
             scheme.viscosity.kind = affine\nscheme.viscosity.nu_b = 0.5\nscheme.galerkin_n = 16\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(
            cfg.initial,
            InitialSource::Preset(InitialCondition::Modes(vec![(1, 0, 0.3, 0.0), (0, 2, 0.0, 0.1)]))
        );
        assert!(cfg.emit.snapshots && cfg.emit.heatmaps && !cfg.emit.csv);
        assert_eq!(cfg.scheme.viscosity.nu_min(), 0.5);
        assert_eq!(cfg.scheme.galerkin_n, Some(16));
    }

    #[test]
    fn envelope_needs_positive_epsilon() {
        let text = format!("{MINIMAL}envelope.enabled = true\n");
        assert!(parse_config(&text).is_err());
        let text = format!("{MINIMAL}envelope.enabled = true\nscheme.epsilon = 0.01\n");
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.run_options().envelope.unwrap().epsilon, 0.01);
    }
}
