//! The Liénard-plane flow `x' = y − F(x)`, `y' = −g(x)` and its symmetric
//! half-return map.
//!
//! Because `F` and `g` are odd, the orbit through `(0, y0)` is closed exactly
//! when its first return to the negative y-axis happens at `(0, −y0)`. The
//! half-return map `P(y0)` is the magnitude of that return.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{OddPiecewiseCurve, RestoringFunction};
use crate::ode::{self, Integrator, OdeError, StepControl, VectorField};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("no return to the y-axis from y0 = {y0} within t = {max_time}")]
    NoReturn { y0: f64, max_time: f64 },
    #[error("orbit from y0 = {y0} escaped past radius {radius} at t = {t}")]
    Escaped { y0: f64, radius: f64, t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("half-return map needs y0 > 0, got {0}")]
    InvalidStart(f64),
    #[error(transparent)]
    Ode(OdeError),
}

impl From<OdeError> for DynamicsError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepUnderflow { t, .. } => DynamicsError::StepUnderflow { t },
            other => DynamicsError::Ode(other),
        }
    }
}

/// `F` paired with the restoring force `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LienardSystem {
    #[serde(flatten)]
    pub curve: OddPiecewiseCurve,
    #[serde(default)]
    pub g: RestoringFunction,
}

impl LienardSystem {
    pub fn new(curve: OddPiecewiseCurve, g: RestoringFunction) -> Self {
        Self { curve, g }
    }

    /// `F ≡ 0`, `g(x) = x`: the harmonic oscillator.
    pub fn conservative() -> Self {
        Self::new(OddPiecewiseCurve::linear(0.0), RestoringFunction::identity())
    }

    /// `v(x, y) = G(x) + y²/2`.
    pub fn potential_v(&self, x: f64, y: f64) -> f64 {
        self.g.antiderivative(x) + 0.5 * y * y
    }
}

impl VectorField<2> for LienardSystem {
    fn eval(&self, _t: f64, z: &[f64; 2]) -> [f64; 2] {
        [z[1] - self.curve.eval(z[0]), -self.g.eval(z[0])]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_time: f64,
    pub event_tol: f64,
    pub max_steps: usize,
    /// Orbits leaving the box `|x| + |y| ≤ escape_radius` are reported as escaped.
    pub escape_radius: f64,
    pub method: String,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1e-2,
            max_time: 1e3,
            event_tol: 1e-12,
            max_steps: 50_000_000,
            escape_radius: 1e8,
            method: ode::DEFAULT_METHOD.to_string(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_time(mut self, max_time: f64) -> Self {
        self.max_time = max_time;
        self
    }

    pub fn with_method(mut self, method: &str) -> Self {
        self.method = method.to_string();
        self
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rel_tol,
            atol: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }

    fn tableau(&self) -> Result<&'static ode::Tableau, DynamicsError> {
        Ok(ode::registry().get(&self.method)?.tableau())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminalEvent {
    NegYAxisCrossing,
    PosYAxisCrossing,
    MaxTime,
    MaxSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub samples: Vec<Sample>,
    pub terminal_event: TerminalEvent,
}

impl OrbitTrace {
    pub fn last(&self) -> Sample {
        *self.samples.last().expect("trace has at least one sample")
    }

    /// `t,x,y` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s.t, s.x, s.y)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Stop {
    Time,
    /// First arrival on the negative y-axis after leaving the start.
    NegYAxis,
    /// First arrival on the positive y-axis after visiting the left half-plane.
    PosYAxis,
}

/// Facts about the right half of an orbit collected during integration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct HalfOrbitFacts {
    x_axis_crossing: Option<f64>,
    max_x: f64,
}

struct Run {
    trace: OrbitTrace,
    facts: HalfOrbitFacts,
}

fn sample(t: f64, z: &[f64; 2]) -> Sample {
    Sample { t, x: z[0], y: z[1] }
}

fn run(
    system: &LienardSystem,
    start: [f64; 2],
    config: &IntegratorConfig,
    record: bool,
    stop: Stop,
) -> Result<Run, DynamicsError> {
    let tableau = config.tableau()?;
    let mut it = Integrator::new(system, tableau, config.step_control(), 0.0, start);
    let mut samples = vec![sample(0.0, &start)];
    let mut facts = HalfOrbitFacts {
        x_axis_crossing: None,
        max_x: start[0],
    };
    let mut armed = false;
    let mut visited_left = false;
    let slow = |z: &[f64; 2]| z[1] - system.curve.eval(z[0]);
    let joints = system.curve.joints();
    loop {
        if it.t() >= config.max_time {
            if stop == Stop::Time {
                if !record {
                    samples = vec![sample(it.t(), it.state())];
                }
                return Ok(Run {
                    trace: OrbitTrace {
                        samples,
                        terminal_event: TerminalEvent::MaxTime,
                    },
                    facts,
                });
            }
            return Err(DynamicsError::NoReturn {
                y0: start[1],
                max_time: config.max_time,
            });
        }
        match it.advance(config.max_time) {
            Ok(()) => {}
            Err(OdeError::MaxSteps { .. }) if stop == Stop::Time => {
                if !record {
                    samples = vec![sample(it.t(), it.state())];
                }
                return Ok(Run {
                    trace: OrbitTrace {
                        samples,
                        terminal_event: TerminalEvent::MaxSteps,
                    },
                    facts,
                });
            }
            Err(e) => return Err(e.into()),
        }
        // F is only piecewise smooth: end steps on the joints |x| = x_j.
        let (from, to) = (it.previous().1[0].abs(), it.state()[0].abs());
        let nearest = joints
            .iter()
            .copied()
            .filter(|&xj| (from - xj) * (to - xj) < 0.0)
            .min_by(|a, b| (from - a).abs().total_cmp(&(from - b).abs()));
        if let Some(xj) = nearest {
            it.truncate_at(|z: &[f64; 2]| z[0].abs() - xj, config.event_tol);
        }
        let (_, prev) = it.previous();
        let prev = *prev;
        let z = *it.state();
        if z[0].abs() + z[1].abs() > config.escape_radius {
            return Err(DynamicsError::Escaped {
                y0: start[1],
                radius: config.escape_radius,
                t: it.t(),
            });
        }

        // Right half-plane bookkeeping for the x-axis crossing and the
        // turning point where the orbit meets y = F(x).
        if !visited_left && z[0] > 0.0 {
            if prev[1] > 0.0 && z[1] <= 0.0 && facts.x_axis_crossing.is_none() {
                let (_, zc) = it.locate(|z| z[1], config.event_tol);
                facts.x_axis_crossing = Some(zc[0]);
            }
            if slow(&prev) > 0.0 && slow(&z) <= 0.0 {
                let (_, zc) = it.locate(slow, config.event_tol);
                facts.max_x = facts.max_x.max(zc[0]);
            }
            facts.max_x = facts.max_x.max(z[0]);
        }

        if z[0] > config.event_tol {
            armed = true;
        }
        if z[0] < -config.event_tol {
            visited_left = true;
        }
        let hit = match stop {
            Stop::NegYAxis => armed && prev[0] > 0.0 && z[0] <= 0.0,
            Stop::PosYAxis => visited_left && prev[0] < 0.0 && z[0] >= 0.0,
            Stop::Time => false,
        };
        if hit {
            let (t, zc) = it.locate(|z| z[0], config.event_tol);
            if record {
                samples.push(sample(t, &zc));
            } else {
                samples = vec![sample(t, &zc)];
            }
            let terminal_event = if stop == Stop::NegYAxis {
                TerminalEvent::NegYAxisCrossing
            } else {
                TerminalEvent::PosYAxisCrossing
            };
            return Ok(Run {
                trace: OrbitTrace {
                    samples,
                    terminal_event,
                },
                facts,
            });
        }
        if record {
            samples.push(sample(it.t(), &z));
        }
    }
}

/// Integrate forward from `start` over `[0, config.max_time]`.
pub fn flow(
    system: &LienardSystem,
    start: (f64, f64),
    config: &IntegratorConfig,
    record: bool,
) -> Result<OrbitTrace, DynamicsError> {
    Ok(run(system, [start.0, start.1], config, record, Stop::Time)?.trace)
}

/// Integrate from `(0, y0)` to the first crossing of the negative y-axis.
pub fn flow_to_return(
    system: &LienardSystem,
    y0: f64,
    config: &IntegratorConfig,
    record: bool,
) -> Result<OrbitTrace, DynamicsError> {
    check_start(y0)?;
    Ok(run(system, [0.0, y0], config, record, Stop::NegYAxis)?.trace)
}

/// Integrate from `(0, y0)` once around the origin, back to the positive y-axis.
pub fn flow_full_turn(
    system: &LienardSystem,
    y0: f64,
    config: &IntegratorConfig,
    record: bool,
) -> Result<OrbitTrace, DynamicsError> {
    check_start(y0)?;
    Ok(run(system, [0.0, y0], config, record, Stop::PosYAxis)?.trace)
}

fn check_start(y0: f64) -> Result<(), DynamicsError> {
    if y0 > 0.0 && y0.is_finite() {
        Ok(())
    } else {
        Err(DynamicsError::InvalidStart(y0))
    }
}

/// `P(y0)`: `|y|` at the first crossing of the negative y-axis.
pub fn half_return(system: &LienardSystem, y0: f64, config: &IntegratorConfig) -> Result<f64, DynamicsError> {
    Ok(flow_to_return(system, y0, config, false)?.last().y.abs())
}

/// `y` at the first return to the positive y-axis, integrated continuously.
pub fn full_return(system: &LienardSystem, y0: f64, config: &IntegratorConfig) -> Result<f64, DynamicsError> {
    Ok(flow_full_turn(system, y0, config, false)?.last().y)
}

/// The right half of the orbit through `(0, y0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfOrbit {
    pub return_y: f64,
    pub return_time: f64,
    /// Positive x-axis crossing.
    pub x_axis_crossing: f64,
    /// Largest `x` reached.
    pub max_x: f64,
}

pub fn half_orbit(system: &LienardSystem, y0: f64, config: &IntegratorConfig) -> Result<HalfOrbit, DynamicsError> {
    check_start(y0)?;
    let run = run(system, [0.0, y0], config, false, Stop::NegYAxis)?;
    let end = run.trace.last();
    Ok(HalfOrbit {
        return_y: end.y.abs(),
        return_time: end.t,
        x_axis_crossing: run.facts.x_axis_crossing.unwrap_or(f64::NAN),
        max_x: run.facts.max_x,
    })
}
