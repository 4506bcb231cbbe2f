//! Limit cycles as fixed points of the half-return map, amplitude bounds
//! `ᾱ`, stability, and the hypotheses of the exactly-N-cycles theorem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{Segment, ROUNDED_JOINT_TOL};
use crate::dynamics::{half_orbit, half_return, DynamicsError, IntegratorConfig, LienardSystem};
use crate::roots;

/// Target `|Δ|` at a located fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// `|P'(y0) − 1|` below this is reported as neutral.
pub const NEUTRAL_BAND: f64 = 1e-3;
/// Relative finite-difference step for `P'`.
pub const DERIVATIVE_STEP: f64 = 1e-5;
/// Residual required of an `ᾱ` root.
pub const ALPHA_RESIDUAL_TOL: f64 = 1e-10;
const POLISH_ROUNDS: usize = 2;
const MIN_POLISH_RTOL: f64 = 1e-13;
/// Sample points used to test monotonicity of `F`.
pub const MONOTONE_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("scan cell [{lo}, {hi}] holds more than one fixed point; increase the grid")]
    ScanTooCoarse { lo: f64, hi: f64 },
    #[error("2G(α) + F(α)² = {y0}² has no root in ({lo}, {hi})")]
    NoRootInInterval { y0: f64, lo: f64, hi: f64 },
    #[error("invalid scan range ({y_min}, {y_max}]")]
    InvalidRange { y_min: f64, y_max: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

impl CycleError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ScanTooCoarse { .. } => "ScanTooCoarse",
            Self::NoRootInInterval { .. } => "NoRootInInterval",
            Self::InvalidRange { .. } => "InvalidRange",
            Self::Dynamics(DynamicsError::NoReturn { .. }) => "NoReturn",
            Self::Dynamics(DynamicsError::StepUnderflow { .. }) => "StepUnderflow",
            Self::Dynamics(DynamicsError::Escaped { .. }) => "Escaped",
            Self::Dynamics(DynamicsError::InvalidStart(_)) => "InvalidStart",
            Self::Dynamics(DynamicsError::Ode(_)) => "Integrator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycle {
    /// 1 for the innermost cycle.
    pub index: usize,
    /// Crossing of the positive y-axis.
    pub y0: f64,
    /// Crossing of the positive x-axis.
    pub alpha_cross: f64,
    /// Largest `x` on the cycle.
    pub amplitude: f64,
    pub stability: Stability,
    /// Finite-difference estimate of `P'(y0)`.
    pub multiplier: f64,
    /// `|P(y0) − y0|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnostic {
    /// `Δ` vanishes along the whole scan: closed orbits form a continuum.
    DegenerateContinuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Initial uniform grid size.
    pub grid: usize,
    pub y_min: f64,
    /// `|Δ|` local minima below this are refined by halving.
    pub refine_below: f64,
    pub max_refinements: usize,
    /// Sub-samples per bracket in the post-hoc coarseness check.
    pub verify_samples: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            grid: 200,
            y_min: 1e-3,
            refine_below: 1e-3,
            max_refinements: 8,
            verify_samples: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSearch {
    pub y_max: f64,
    pub cycles: Vec<LimitCycle>,
    pub diagnostics: Vec<Diagnostic>,
    /// Number of half-return evaluations in the scan.
    pub evaluations: usize,
}

/// `Δ(y0) = P(y0) − y0`; an escaping orbit counts as `+∞`.
pub fn delta(system: &LienardSystem, y0: f64, config: &IntegratorConfig) -> Result<f64, DynamicsError> {
    match half_return(system, y0, config) {
        Ok(p) => Ok(p - y0),
        Err(DynamicsError::Escaped { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Default upper end of the scan: the `y` with `2G(y) = (1.5·a_N)²`.
pub fn default_y_max(system: &LienardSystem) -> f64 {
    match system.curve.positive_zeros().ok().and_then(|z| z.last().copied()) {
        Some(a_n) => {
            let level = 0.5 * (1.5 * a_n).powi(2);
            system.g.inverse_antiderivative(level)
        }
        None => 1.0,
    }
}

fn evaluate(system: &LienardSystem, ys: &[f64], config: &IntegratorConfig) -> Result<Vec<(f64, f64)>, DynamicsError> {
    ys.par_iter()
        .map(|&y| delta(system, y, config).map(|d| (y, d)))
        .collect()
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Halve the cells around small interior minima of `|Δ|` that show no sign
/// change, to catch pairs of nearby fixed points.
fn refine(
    system: &LienardSystem,
    mut pts: Vec<(f64, f64)>,
    config: &IntegratorConfig,
    scan: &ScanConfig,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    for _ in 0..scan.max_refinements {
        let mut new = Vec::new();
        for i in 1..pts.len().saturating_sub(1) {
            let (l, m, r) = (pts[i - 1].1, pts[i].1, pts[i + 1].1);
            let local_min = m.abs() <= l.abs() && m.abs() <= r.abs();
            if local_min && m.abs() < scan.refine_below && !opposite(l, m) && !opposite(m, r) && m != 0.0 {
                new.push(0.5 * (pts[i - 1].0 + pts[i].0));
                new.push(0.5 * (pts[i].0 + pts[i + 1].0));
            }
        }
        if new.is_empty() {
            break;
        }
        new.sort_by(f64::total_cmp);
        new.dedup();
        pts.extend(evaluate(system, &new, config)?);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
    }
    Ok(pts)
}

fn bisect_delta(system: &LienardSystem, lo: f64, hi: f64, config: &IntegratorConfig) -> Result<f64, CycleError> {
    let mut failure = None;
    let root = roots::bisect_until(
        |y| match delta(system, y, config) {
            Ok(d) => d,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-15,
        FIXED_POINT_TOL,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    let root = root.map_err(|_| CycleError::ScanTooCoarse { lo, hi })?;
    Ok(root.x)
}

/// Bisect a bracket; if integration noise keeps `|Δ|` above
/// `FIXED_POINT_TOL`, repeat with tolerances a hundred times tighter.
/// Returns the fixed point and the configuration that resolved it.
fn locate_fixed_point(
    system: &LienardSystem,
    lo: f64,
    hi: f64,
    config: &IntegratorConfig,
) -> Result<(f64, IntegratorConfig), CycleError> {
    let mut cfg = config.clone();
    let mut y0 = bisect_delta(system, lo, hi, &cfg)?;
    for _ in 0..POLISH_ROUNDS {
        if delta(system, y0, &cfg)?.abs() < FIXED_POINT_TOL || cfg.rel_tol <= MIN_POLISH_RTOL {
            break;
        }
        cfg.rel_tol = (cfg.rel_tol * 1e-2).max(MIN_POLISH_RTOL);
        cfg.abs_tol *= 1e-2;
        y0 = bisect_delta(system, lo, hi, &cfg)?;
    }
    Ok((y0, cfg))
}

// More than one sign change inside a bracket means the grid merged cycles.
fn verify_bracket(
    system: &LienardSystem,
    lo: f64,
    hi: f64,
    config: &IntegratorConfig,
    samples: usize,
) -> Result<(), CycleError> {
    if samples < 2 {
        return Ok(());
    }
    let ys: Vec<f64> = (0..=samples)
        .map(|i| lo + (hi - lo) * i as f64 / samples as f64)
        .collect();
    let ds = evaluate(system, &ys, config)?;
    let changes = ds.windows(2).filter(|w| opposite(w[0].1, w[1].1)).count();
    if changes > 1 {
        return Err(CycleError::ScanTooCoarse { lo, hi });
    }
    Ok(())
}

/// `P'(y0)` by a central difference with step `DERIVATIVE_STEP·y0`.
pub fn return_map_derivative(system: &LienardSystem, y0: f64, config: &IntegratorConfig) -> Result<f64, DynamicsError> {
    let h = DERIVATIVE_STEP * y0;
    let up = half_return(system, y0 + h, config)?;
    let down = half_return(system, y0 - h, config)?;
    Ok((up - down) / (2.0 * h))
}

pub fn stability_from_multiplier(m: f64) -> Stability {
    if m < 1.0 - NEUTRAL_BAND {
        Stability::Stable
    } else if m > 1.0 + NEUTRAL_BAND {
        Stability::Unstable
    } else {
        Stability::Neutral
    }
}

pub fn classify_stability(
    system: &LienardSystem,
    y0: f64,
    config: &IntegratorConfig,
) -> Result<Stability, DynamicsError> {
    Ok(stability_from_multiplier(return_map_derivative(system, y0, config)?))
}

fn describe(
    system: &LienardSystem,
    index: usize,
    y0: f64,
    config: &IntegratorConfig,
) -> Result<LimitCycle, CycleError> {
    let orbit = half_orbit(system, y0, config)?;
    let multiplier = return_map_derivative(system, y0, config)?;
    Ok(LimitCycle {
        index,
        y0,
        alpha_cross: orbit.x_axis_crossing,
        amplitude: orbit.max_x,
        stability: stability_from_multiplier(multiplier),
        multiplier,
        residual: (orbit.return_y - y0).abs(),
    })
}

/// Locate every fixed point of `P` in `(scan.y_min, y_max]`, ascending.
pub fn find_cycles(
    system: &LienardSystem,
    y_max: Option<f64>,
    config: &IntegratorConfig,
    scan: &ScanConfig,
) -> Result<CycleSearch, CycleError> {
    let y_max = y_max.unwrap_or_else(|| default_y_max(system));
    let n = scan.grid.max(2);
    if !(y_max > scan.y_min && scan.y_min > 0.0) {
        return Err(CycleError::InvalidRange {
            y_min: scan.y_min,
            y_max,
        });
    }
    let ys: Vec<f64> = (0..n)
        .map(|i| scan.y_min + (y_max - scan.y_min) * i as f64 / (n - 1) as f64)
        .collect();
    let pts = evaluate(system, &ys, config)?;

    // Conservative systems: every orbit closes.
    let continuum = pts
        .iter()
        .all(|&(y, d)| d.abs() <= 100.0 * config.rel_tol.max(1e-12) * y);
    if continuum {
        return Ok(CycleSearch {
            y_max,
            cycles: Vec::new(),
            diagnostics: vec![Diagnostic::DegenerateContinuum],
            evaluations: pts.len(),
        });
    }

    let pts = refine(system, pts, config, scan)?;
    let evaluations = pts.len();
    let mut brackets = Vec::new();
    let mut exact = Vec::new();
    for (i, w) in pts.windows(2).enumerate() {
        if w[0].1 == 0.0 && (i == 0 || pts[i - 1].1 != 0.0) {
            exact.push(w[0].0);
        }
        if opposite(w[0].1, w[1].1) {
            brackets.push((w[0].0, w[1].0));
        }
    }
    if let Some(&(y, d)) = pts.last() {
        if d == 0.0 {
            exact.push(y);
        }
    }
    let located: Vec<(f64, IntegratorConfig)> = brackets
        .par_iter()
        .map(|&(lo, hi)| {
            verify_bracket(system, lo, hi, config, scan.verify_samples)?;
            locate_fixed_point(system, lo, hi, config)
        })
        .collect::<Result<_, _>>()?;
    let mut y0s: Vec<(f64, IntegratorConfig)> = located
        .into_iter()
        .chain(exact.into_iter().map(|y| (y, config.clone())))
        .collect();
    y0s.sort_by(|a, b| a.0.total_cmp(&b.0));

    let cycles = y0s
        .par_iter()
        .enumerate()
        .map(|(i, (y0, cfg))| describe(system, i + 1, *y0, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CycleSearch {
        y_max,
        cycles,
        diagnostics: Vec::new(),
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBar {
    /// `i` of the interval `(a_i, a_{i+1})`.
    pub interval_index: usize,
    pub value: f64,
    /// `|2G(ᾱ) + F(ᾱ)² − y0²|`.
    pub residual: f64,
}

/// Largest root of `2G(α) + F(α)² = y0²` in `(lo, hi)`.
pub fn alpha_bar(system: &LienardSystem, y0: f64, interval: (f64, f64)) -> Result<AlphaBar, CycleError> {
    let (lo, hi) = interval;
    let h = |a: f64| {
        let f = system.curve.eval(a);
        2.0 * system.g.antiderivative(a) + f * f - y0 * y0
    };
    const SAMPLES: usize = 2000;
    let xs: Vec<f64> = (0..=SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
        .collect();
    let mut best: Option<f64> = None;
    for w in xs.windows(2).rev() {
        let (ha, hb) = (h(w[0]), h(w[1]));
        if hb == 0.0 && w[1] < hi {
            best = Some(w[1]);
            break;
        }
        if opposite(ha, hb) {
            best = roots::brent(h, w[0], w[1], 1e-16).ok().map(|r| r.x);
            break;
        }
    }
    let value = best.ok_or(CycleError::NoRootInInterval { y0, lo, hi })?;
    Ok(AlphaBar {
        interval_index: 0,
        value,
        residual: h(value).abs(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub diagnostics: Vec<String>,
}

impl Condition {
    fn new() -> Self {
        Self {
            holds: true,
            diagnostics: Vec::new(),
        }
    }

    fn fail(&mut self, msg: String) {
        self.holds = false;
        self.diagnostics.push(msg);
    }

    fn note(&mut self, msg: String) {
        self.diagnostics.push(msg);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    /// `a_1 … a_N`.
    pub zeros: Vec<f64>,
    /// `(L_i, F(L_i))` for `i = 0 … N−1`.
    pub extrema: Vec<(f64, f64)>,
    /// `ᾱ_i` for `i = 1 … N−1`, from the i-th located cycle.
    pub alpha_bars: Vec<AlphaBar>,
    pub condition_i: Condition,
    pub condition_ii: Condition,
    pub condition_iii: Condition,
    pub condition_iv: Condition,
    /// Cycle `i` crosses the x-axis in `(ᾱ_{i−1}, ᾱ_i]` with `ᾱ_0 = L_0`.
    pub localization: Condition,
    pub cycle_count_expected: usize,
    pub cycles_found: Vec<LimitCycle>,
    pub search: Option<CycleSearch>,
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.condition_i.holds && self.condition_ii.holds && self.condition_iii.holds && self.condition_iv.holds
    }

    /// Hypotheses hold and the predicted number of cycles was found.
    pub fn passes(&self) -> bool {
        self.hypotheses_hold() && self.cycles_found.len() == self.cycle_count_expected
    }
}

fn derivative_sign(system: &LienardSystem, x: f64) -> Option<f64> {
    system.curve.derivative(x).ok().map(f64::signum)
}

/// `F` strictly monotone on `(lo, hi]` judged by the derivative sign at
/// sampled points.
fn monotone_on(system: &LienardSystem, lo: f64, hi: f64) -> Result<f64, String> {
    let mut sign = None;
    for j in 1..=MONOTONE_SAMPLES {
        let x = lo + (hi - lo) * j as f64 / MONOTONE_SAMPLES as f64;
        match (derivative_sign(system, x), sign) {
            (None, _) => return Err(format!("F'({x}) undefined")),
            (Some(0.0), _) => return Err(format!("F'({x}) = 0")),
            (Some(s), None) => sign = Some(s),
            (Some(s), Some(prev)) if s != prev => return Err(format!("F' changes sign near {x}")),
            _ => {}
        }
    }
    Ok(sign.unwrap_or(0.0))
}

/// Evaluate the four hypotheses, locating cycles first and then the `ᾱ_i`.
pub fn check_theorem(
    system: &LienardSystem,
    y_max: Option<f64>,
    config: &IntegratorConfig,
    scan: &ScanConfig,
) -> TheoremReport {
    let curve = &system.curve;
    let mut notes =
        vec!["cycles are located before the amplitude bounds; ᾱ_i uses the i-th cycle's y-axis crossing".to_string()];

    let mut cond_i = Condition::new();
    let validation = curve.validate();
    for issue in &validation.coverage_issues {
        cond_i.fail(issue.clone());
    }
    if let Some(end) = validation.open_end {
        cond_i.fail(format!("curve ends at x = {end}"));
    }
    for x in &validation.domain_violations {
        cond_i.fail(format!("arc evaluated outside its ellipse at x = {x}"));
    }
    if validation.f0_residual > ROUNDED_JOINT_TOL {
        cond_i.fail(format!("first segment gives F(0) = {}", validation.f0_residual));
    }
    for j in &validation.joints {
        if j.value_residual > ROUNDED_JOINT_TOL {
            cond_i.fail(format!("F jumps by {} at x = {}", j.value_residual, j.x));
        }
        match j.slope_residual {
            Some(s) if s > ROUNDED_JOINT_TOL => cond_i.fail(format!("f = F' jumps by {s} at x = {}", j.x)),
            None => cond_i.fail(format!("f = F' undefined at x = {}", j.x)),
            _ => {}
        }
    }
    cond_i.note(format!(
        "max joint residuals: value {:e}, slope {:e}",
        validation.max_value_residual(),
        validation.max_slope_residual()
    ));

    // Oddness is structural; g's coefficients were validated on load.
    let mut cond_ii = Condition::new();
    cond_ii.note("F is stored on [0, ∞) and reflected, so it is odd".into());
    if system.g.eval(1.0) <= 0.0 {
        cond_ii.fail("g(x) is not positive for x > 0".into());
    }

    let mut cond_iii = Condition::new();
    let zeros = match curve.positive_zeros() {
        Ok(z) => z,
        Err(e) => {
            cond_iii.fail(e.to_string());
            Vec::new()
        }
    };
    let n = zeros.len();
    if n == 0 {
        cond_iii.fail("F has no positive zeros".into());
    }
    let all_extrema = curve.extrema();
    let mut extrema = Vec::new();
    for i in 0..n {
        let lo = if i == 0 { 0.0 } else { zeros[i - 1] };
        let hi = zeros[i];
        let inside: Vec<(f64, f64)> = all_extrema.iter().copied().filter(|&(x, _)| x > lo && x < hi).collect();
        match inside.len() {
            0 => cond_iii.fail(format!("no extremum in ({lo}, {hi})")),
            1 => extrema.push(inside[0]),
            k if i + 1 == n && i > 0 => {
                cond_iii.note(format!("{k} extrema in ({lo}, {hi}); using the first"));
                extrema.push(inside[0]);
            }
            k => cond_iii.fail(format!("{k} extrema in ({lo}, {hi}), expected one")),
        }
    }

    let search = match find_cycles(system, y_max, config, scan) {
        Ok(s) => Some(s),
        Err(e) => {
            notes.push(format!("cycle search failed: {e}"));
            None
        }
    };
    let cycles = search.as_ref().map(|s| s.cycles.clone()).unwrap_or_default();

    let mut alpha_bars = Vec::new();
    for i in 1..n {
        let Some(cycle) = cycles.get(i - 1) else {
            cond_iii.fail(format!("no cycle {i} to define ᾱ_{i}"));
            break;
        };
        match alpha_bar(system, cycle.y0, (zeros[i - 1], zeros[i])) {
            Ok(ab) => {
                let ab = AlphaBar {
                    interval_index: i,
                    ..ab
                };
                if ab.residual >= ALPHA_RESIDUAL_TOL {
                    cond_iii.fail(format!("ᾱ_{i} residual {:e}", ab.residual));
                }
                if let Some(&(l, _)) = extrema.get(i) {
                    if ab.value >= l {
                        cond_iii.fail(format!("ᾱ_{i} = {} is not below L_{i} = {l}", ab.value));
                    }
                }
                alpha_bars.push(ab);
            }
            Err(e) => cond_iii.fail(format!("ᾱ_{i}: {e}")),
        }
    }

    let mut cond_iv = Condition::new();
    for ab in &alpha_bars {
        let i = ab.interval_index;
        if let Err(msg) = monotone_on(system, zeros[i - 1], ab.value) {
            cond_iv.fail(format!("F not monotone on (a_{i}, ᾱ_{i}]: {msg}"));
        }
    }
    {
        let a_n = zeros
            .last()
            .copied()
            .unwrap_or_else(|| curve.segments.last().map_or(0.0, Segment::x_lo));
        match curve.segments.last() {
            Some(Segment::Linear(tail)) if tail.x_hi.is_infinite() => {
                if tail.slope == 0.0 {
                    cond_iv.fail("tail slope is 0, so |F| stays bounded".into());
                }
                let tail_start = tail.x_lo.max(a_n);
                let sign = if tail_start > a_n {
                    monotone_on(system, a_n, tail_start)
                } else {
                    Ok(tail.slope.signum())
                };
                match sign {
                    Ok(s) if s != tail.slope.signum() => cond_iv.fail("F turns back before the linear tail".into()),
                    Err(msg) => cond_iv.fail(format!("F not monotone beyond a_N: {msg}")),
                    _ => {}
                }
            }
            _ => cond_iv.fail("curve does not end in an unbounded linear tail".into()),
        }
    }

    let mut localization = Condition::new();
    if cycles.len() == n && n > 0 && !extrema.is_empty() {
        let mut bounds = vec![extrema[0].0];
        bounds.extend(alpha_bars.iter().map(|a| a.value));
        for (i, c) in cycles.iter().enumerate() {
            let lo = bounds[i];
            let hi = bounds.get(i + 1).copied().unwrap_or(f64::INFINITY);
            if !(c.alpha_cross > lo && c.alpha_cross <= hi) {
                localization.fail(format!(
                    "cycle {} crosses at {} outside ({lo}, {hi}]",
                    i + 1,
                    c.alpha_cross
                ));
            }
        }
    } else {
        localization.fail(format!("found {} cycles for {n} zeros", cycles.len()));
    }

    TheoremReport {
        zeros,
        extrema,
        alpha_bars,
        condition_i: cond_i,
        condition_ii: cond_ii,
        condition_iii: cond_iii,
        condition_iv: cond_iv,
        localization,
        cycle_count_expected: n,
        cycles_found: cycles,
        search,
        notes,
    }
}
