//! Command implementations behind the `lienard` binary.

pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lienard::construction::{self, ConstructionError, ExtensionPlan, OdaniReport};
use lienard::cycles::{self, AlphaBar, CycleError, CycleSearch, LimitCycle, ScanConfig, TheoremReport};
use lienard::dynamics::{flow_full_turn, DynamicsError, OrbitTrace, Sample};
use lienard::{IntegratorConfig, LienardSystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io { .. } => "Io",
            Self::Parse { .. } => "Parse",
            Self::InvalidArgument(_) => "InvalidArgument",
            Self::Construction(e) => e.code(),
            Self::Cycle(e) => e.code(),
            Self::Dynamics(e) => CycleError::Dynamics(e.clone()).code(),
            Self::CheckFailed(_) => "CheckFailed",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.into(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

/// Integrator and scan settings after command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub integrator: IntegratorConfig,
    pub scan: ScanConfig,
    pub y_max: Option<f64>,
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let c = &self.integrator;
        for (name, v) in [("rtol", c.rel_tol), ("atol", c.abs_tol), ("max-time", c.max_time)] {
            positive(name, v)?;
        }
        if let Some(y) = self.y_max {
            positive("ymax", y)?;
        }
        if self.scan.grid == 0 {
            return Err(CliError::InvalidArgument("grid must be positive".into()));
        }
        lienard::ode::registry()
            .get(&c.method)
            .map_err(|e| CliError::InvalidArgument(e.to_string()))?;
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Output of `find-cycles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    #[serde(flatten)]
    pub search: CycleSearch,
    pub zeros: Vec<f64>,
    /// `ᾱ_i` from cycle `i` for `i = 1 … N−1`.
    pub alpha_bars: Vec<AlphaBar>,
}

pub fn cycle_report(system: &LienardSystem, settings: &Settings) -> Result<CycleReport> {
    let search = cycles::find_cycles(system, settings.y_max, &settings.integrator, &settings.scan)?;
    let zeros = system.curve.positive_zeros().unwrap_or_default();
    let mut alpha_bars = Vec::new();
    for (i, cycle) in search.cycles.iter().enumerate().take(zeros.len().saturating_sub(1)) {
        let ab = cycles::alpha_bar(system, cycle.y0, (zeros[i], zeros[i + 1]))?;
        alpha_bars.push(AlphaBar {
            interval_index: i + 1,
            ..ab
        });
    }
    Ok(CycleReport {
        search,
        zeros,
        alpha_bars,
    })
}

pub fn construct(plan: &Path, out: &Path, log: &mut dyn Write) -> Result<()> {
    let plan: ExtensionPlan = read_json(plan)?;
    let built = construction::build(&plan)?;
    write_json(out, &built.system)?;
    let validation = built.system.curve.validate();
    let _ = writeln!(log, "zeros: {:?}", built.zeros);
    for j in &validation.joints {
        let slope = j.slope_residual.map_or("undefined".to_string(), |s| format!("{s:e}"));
        let _ = writeln!(
            log,
            "joint x = {}: value residual {:e}, slope residual {slope}",
            j.x, j.value_residual
        );
    }
    for r in &built.reports {
        let verdict = if r.h_monotone && r.sign_ok { "ok" } else { "FAIL" };
        let _ = writeln!(
            log,
            "step {}: H(0) = {:e}, H decreasing: {}, sign: {}, {verdict}",
            r.index, r.h_at_zero, r.h_monotone, r.sign_ok
        );
    }
    Ok(())
}

pub fn find_cycles(system: &Path, report: &Path, settings: &Settings, log: &mut dyn Write) -> Result<()> {
    let system: LienardSystem = read_json(system)?;
    let r = cycle_report(&system, settings)?;
    write_json(report, &r)?;
    for c in &r.search.cycles {
        let _ = writeln!(
            log,
            "cycle {}: y0 = {}, x-crossing = {}, {:?}",
            c.index, c.y0, c.alpha_cross, c.stability
        );
    }
    for d in &r.search.diagnostics {
        let _ = writeln!(log, "note: {d:?}");
    }
    Ok(())
}

/// Returns the report; the caller maps a failing verdict to the exit code.
pub fn check(system: &Path, report: Option<&Path>, settings: &Settings, log: &mut dyn Write) -> Result<TheoremReport> {
    let system: LienardSystem = read_json(system)?;
    let r = cycles::check_theorem(&system, settings.y_max, &settings.integrator, &settings.scan);
    match report {
        Some(path) => write_json(path, &r)?,
        None => {
            let _ = writeln!(log, "{}", serde_json::to_string_pretty(&r).expect("reports serialize"));
        }
    }
    Ok(r)
}

pub fn failed_conditions(r: &TheoremReport) -> Vec<&'static str> {
    let mut out = Vec::new();
    for (name, c) in [
        ("i", &r.condition_i),
        ("ii", &r.condition_ii),
        ("iii", &r.condition_iii),
        ("iv", &r.condition_iv),
    ] {
        if !c.holds {
            out.push(name);
        }
    }
    out
}

/// `turns` consecutive full turns from `(0, y0)`, time running on across turns.
pub fn simulate_turns(system: &LienardSystem, y0: f64, turns: usize, config: &IntegratorConfig) -> Result<OrbitTrace> {
    let mut trace = flow_full_turn(system, y0, config, true)?;
    for _ in 1..turns {
        let end = trace.last();
        let next = flow_full_turn(system, end.y, config, true)?;
        trace
            .samples
            .extend(next.samples.iter().skip(1).map(|s| Sample { t: s.t + end.t, ..*s }));
        trace.terminal_event = next.terminal_event;
    }
    Ok(trace)
}

pub fn simulate(
    system: &Path,
    y0: f64,
    turns: usize,
    csv: &Path,
    settings: &Settings,
    log: &mut dyn Write,
) -> Result<()> {
    if !(y0 > 0.0 && y0.is_finite()) {
        return Err(CliError::InvalidArgument(format!("y0 must be positive, got {y0}")));
    }
    if turns == 0 {
        return Err(CliError::InvalidArgument("turns must be positive".into()));
    }
    let system: LienardSystem = read_json(system)?;
    let trace = simulate_turns(&system, y0, turns, &settings.integrator)?;
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).expect("writing to memory");
    write_file(csv, &buf)?;
    let end = trace.last();
    let _ = writeln!(log, "final (t, x, y) = ({}, {}, {})", end.t, end.x, end.y);
    Ok(())
}

/// Cycles listed under `cycles` (find-cycles) or `cycles_found` (check).
fn cycles_from_report(path: &Path) -> Result<Vec<LimitCycle>> {
    let value: serde_json::Value = read_json(path)?;
    let list = value
        .get("cycles")
        .or_else(|| value.get("cycles_found"))
        .cloned()
        .ok_or_else(|| CliError::Parse {
            path: path.into(),
            source: serde::de::Error::custom("report has no cycle list"),
        })?;
    serde_json::from_value(list).map_err(|source| CliError::Parse {
        path: path.into(),
        source,
    })
}

pub fn plot(system: &Path, report: Option<&Path>, out: &Path, settings: &Settings) -> Result<()> {
    let system: LienardSystem = read_json(system)?;
    let cycles = match report {
        Some(path) => cycles_from_report(path)?,
        None => cycle_report(&system, settings)?.search.cycles,
    };
    let mut traces = Vec::new();
    for c in &cycles {
        traces.push((*c, flow_full_turn(&system, c.y0, &settings.integrator, true)?));
    }
    write_file(out, svg::render(&system, &traces).as_bytes())
}

pub fn odani(plan: &Path, report: &Path, log: &mut dyn Write) -> Result<OdaniReport> {
    let plan: ExtensionPlan = read_json(plan)?;
    let built = construction::build(&plan)?;
    let r = construction::odani_check(&built);
    write_json(report, &r)?;
    for s in &r.steps {
        let _ = writeln!(
            log,
            "step {}: φ_L A = {}, φ_R A = {}, |H(f(s))| vs |f(s)| on [{}, {}]: {:?}, equality at {:?}",
            s.index, s.phi_l.a, s.phi_r.a, s.left.s_lo, s.left.s_hi, s.left.verdict, s.left.equality_loci
        );
    }
    Ok(r)
}
