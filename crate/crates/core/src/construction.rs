//! Outward extension of `F` one zero-to-zero interval at a time.
//!
//! Each step carries the branch `f_k` on `[a_{k-1}, a_k]` to a new branch
//! `f_{k+1}` on `[a_k, a_{k+1}]`. The caller supplies the new pieces
//! directly; the maps `φ(s) = √(A s² + B)` pair source and target abscissae
//! and the induced map `H` with `H(f_k(s)) = f_{k+1}(φ(s))` is sampled to
//! validate the step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{CurveError, LinearSegment, OddPiecewiseCurve, Segment, ROUNDED_JOINT_TOL};
use crate::dynamics::LienardSystem;
use crate::roots;

/// Declared φ endpoints must be hit this closely.
pub const PHI_ENDPOINT_TOL: f64 = 1e-12;
/// New pieces must vanish at both ends to within this.
pub const JOINT_ZERO_TOL: f64 = 1e-6;
/// Samples per branch of an induced map.
pub const H_SAMPLES: usize = 512;
/// `|H(f)| − |f|` below this in magnitude counts as equality.
pub const ODANI_EQ_TOL: f64 = 1e-6;
/// Automatic tail slopes smaller than this are rejected.
pub const MIN_TAIL_SLOPE: f64 = 1e-9;
const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("degenerate source interval [{s_lo}, {s_hi}]")]
    DegenerateInterval { s_lo: f64, s_hi: f64 },
    #[error("no increasing map √(A s² + B) takes [{s_lo}, {s_hi}] onto [{t_lo}, {t_hi}] (A = {a})")]
    NonMonotone {
        s_lo: f64,
        s_hi: f64,
        t_lo: f64,
        t_hi: f64,
        a: f64,
    },
    #[error("φ({s}) = {got}, expected {expected}")]
    PhiEndpointMismatch { s: f64, got: f64, expected: f64 },
    #[error("interval data out of order: {0}")]
    InvalidOrdering(String),
    #[error("first branch is unusable: {0}")]
    InvalidFirstBranch(String),
    #[error("target pieces do not cover [{lo}, {hi}]: {detail}")]
    TargetCoverage { lo: f64, hi: f64, detail: String },
    #[error("induced H is not monotone decreasing near s = {s}")]
    HNotMonotone { s: f64 },
    #[error("new branch has the wrong sign at x = {x} (value {value})")]
    SignViolation { x: f64, value: f64 },
    #[error("new branch does not vanish at x = {x} (value {value})")]
    JointMismatch { x: f64, value: f64 },
    #[error("tail slope at x = {x} is {slope}, too small for |F| to grow")]
    ZeroSlope { x: f64, slope: f64 },
    #[error("curve does not end on a zero: F({x}) = {value}")]
    TailNotAtZero { x: f64, value: f64 },
    #[error("curve already extends to infinity")]
    AlreadyComplete,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("step {index}: {source}")]
    AtStep {
        index: usize,
        #[source]
        source: Box<ConstructionError>,
    },
}

impl ConstructionError {
    /// Short stable identifier for machine consumption.
    pub fn code(&self) -> &'static str {
        match self {
            Self::DegenerateInterval { .. } => "DegenerateInterval",
            Self::NonMonotone { .. } => "NonMonotone",
            Self::PhiEndpointMismatch { .. } => "PhiEndpointMismatch",
            Self::InvalidOrdering(_) => "InvalidOrdering",
            Self::InvalidFirstBranch(_) => "InvalidFirstBranch",
            Self::TargetCoverage { .. } => "TargetCoverage",
            Self::HNotMonotone { .. } => "HNotMonotone",
            Self::SignViolation { .. } => "SignViolation",
            Self::JointMismatch { .. } => "JointMismatch",
            Self::ZeroSlope { .. } => "ZeroSlope",
            Self::TailNotAtZero { .. } => "TailNotAtZero",
            Self::AlreadyComplete => "AlreadyComplete",
            Self::Curve(_) => "InvalidCurve",
            Self::AtStep { source, .. } => source.code(),
        }
    }

    fn at_step(self, index: usize) -> Self {
        Self::AtStep {
            index,
            source: Box::new(self),
        }
    }
}

/// `φ(s) = √(A s² + B)` on `[s_lo, s_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiMap {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub s_lo: f64,
    pub s_hi: f64,
}

impl PhiMap {
    pub fn eval(&self, s: f64) -> f64 {
        (self.a * s * s + self.b).max(0.0).sqrt()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        let v = self.eval(s);
        if v == 0.0 {
            self.a.sqrt()
        } else {
            self.a * s / v
        }
    }

    fn check_endpoints(&self, t_lo: f64, t_hi: f64) -> Result<(), ConstructionError> {
        for (s, expected) in [(self.s_lo, t_lo), (self.s_hi, t_hi)] {
            let got = self.eval(s);
            if !((got - expected).abs() <= PHI_ENDPOINT_TOL) {
                return Err(ConstructionError::PhiEndpointMismatch { s, got, expected });
            }
        }
        if !(self.a > 0.0) || self.a * self.s_lo * self.s_lo + self.b < 0.0 {
            return Err(ConstructionError::NonMonotone {
                s_lo: self.s_lo,
                s_hi: self.s_hi,
                t_lo,
                t_hi,
                a: self.a,
            });
        }
        Ok(())
    }
}

/// Solve `φ(s_lo) = t_lo`, `φ(s_hi) = t_hi` for `A` and `B`.
pub fn build_phi(s_lo: f64, s_hi: f64, t_lo: f64, t_hi: f64) -> Result<PhiMap, ConstructionError> {
    if !(s_hi > s_lo) || s_lo < 0.0 {
        return Err(ConstructionError::DegenerateInterval { s_lo, s_hi });
    }
    let a = (t_hi * t_hi - t_lo * t_lo) / (s_hi * s_hi - s_lo * s_lo);
    let b = t_lo * t_lo - a * s_lo * s_lo;
    if !(a > 0.0) || t_lo < 0.0 || (t_lo == 0.0 && s_lo > 0.0) {
        return Err(ConstructionError::NonMonotone {
            s_lo,
            s_hi,
            t_lo,
            t_hi,
            a,
        });
    }
    Ok(PhiMap { a, b, s_lo, s_hi })
}

/// A φ given in a plan: solved from the interval ends, or explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Auto(AutoKeyword),
    Explicit {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

impl Default for PhiSpec {
    fn default() -> Self {
        PhiSpec::Auto(AutoKeyword::Auto)
    }
}

impl PhiSpec {
    fn resolve(&self, s: (f64, f64), t: (f64, f64)) -> Result<PhiMap, ConstructionError> {
        match *self {
            PhiSpec::Auto(_) => build_phi(s.0, s.1, t.0, t.1),
            PhiSpec::Explicit { a, b } => {
                let phi = PhiMap {
                    a,
                    b,
                    s_lo: s.0,
                    s_hi: s.1,
                };
                phi.check_endpoints(t.0, t.1)?;
                Ok(phi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TailSlope {
    Auto(AutoKeyword),
    Value(f64),
}

impl Default for TailSlope {
    fn default() -> Self {
        TailSlope::Auto(AutoKeyword::Auto)
    }
}

/// One segment or several consecutive ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Pieces {
    One(Segment),
    Many(Vec<Segment>),
}

impl Pieces {
    pub fn segments(&self) -> &[Segment] {
        match self {
            Pieces::One(s) => std::slice::from_ref(s),
            Pieces::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub a_next: f64,
    #[serde(rename = "L_next")]
    pub l_next: f64,
    #[serde(rename = "phi_L", default)]
    pub phi_l: PhiSpec,
    #[serde(rename = "phi_R", default)]
    pub phi_r: PhiSpec,
    pub target_left: Pieces,
    pub target_right: Pieces,
}

/// `f1` on `[0, a₁]` (with `g`), the extension steps and the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionPlan {
    pub f1: LienardSystem,
    pub steps: Vec<StepSpec>,
    #[serde(default)]
    pub tail_slope: TailSlope,
}

/// A fully resolved extension step from `[a_prev, a_cur]` to `[a_cur, a_next]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionStep {
    pub a_prev: f64,
    #[serde(rename = "L_prev")]
    pub l_prev: f64,
    pub a_cur: f64,
    pub a_next: f64,
    #[serde(rename = "L_next")]
    pub l_next: f64,
    #[serde(rename = "phi_L")]
    pub phi_l: PhiMap,
    #[serde(rename = "phi_R")]
    pub phi_r: PhiMap,
    pub target_left: Vec<Segment>,
    pub target_right: Vec<Segment>,
}

impl ExtensionStep {
    fn check_ordering(&self) -> Result<(), ConstructionError> {
        check_ordering([self.a_prev, self.l_prev, self.a_cur, self.l_next, self.a_next])
    }

    fn target(&self) -> impl Iterator<Item = &Segment> {
        self.target_left.iter().chain(&self.target_right)
    }

    /// The new branch at `x ∈ [a_cur, a_next]`.
    pub fn target_value(&self, x: f64) -> f64 {
        eval_pieces(self.target().copied().collect::<Vec<_>>().as_slice(), x)
    }
}

fn check_ordering(xs: [f64; 5]) -> Result<(), ConstructionError> {
    if xs.windows(2).all(|w| w[0] < w[1]) && xs[0] >= 0.0 {
        Ok(())
    } else {
        Err(ConstructionError::InvalidOrdering(format!(
            "need a_prev < L_prev < a_cur < L_next < a_next, got {xs:?}"
        )))
    }
}

// Same conventions as `OddPiecewiseCurve::eval` on `[0, ∞)`.
fn eval_pieces(pieces: &[Segment], x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let i = pieces.partition_point(|s| s.x_hi() < x).min(pieces.len() - 1);
    pieces[i].value(x)
}

fn check_cover(pieces: &[Segment], lo: f64, hi: f64) -> Result<(), ConstructionError> {
    let fail = |detail: String| Err(ConstructionError::TargetCoverage { lo, hi, detail });
    let (Some(first), Some(last)) = (pieces.first(), pieces.last()) else {
        return fail("no segments".into());
    };
    if (first.x_lo() - lo).abs() > DOMAIN_TOL || (last.x_hi() - hi).abs() > DOMAIN_TOL {
        return fail(format!("pieces span [{}, {}]", first.x_lo(), last.x_hi()));
    }
    for w in pieces.windows(2) {
        if (w[0].x_hi() - w[1].x_lo()).abs() > DOMAIN_TOL {
            return fail(format!("break between {} and {}", w[0].x_hi(), w[1].x_lo()));
        }
        let x = w[0].x_hi();
        let jump = (w[0].value(x) - w[1].value(x)).abs();
        if jump > ROUNDED_JOINT_TOL {
            return fail(format!("jump of {jump} at {x}"));
        }
    }
    Ok(())
}

/// One sample of an induced map: `u = f_k(s)`, `h = f_{k+1}(φ(s))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HSample {
    pub s: f64,
    pub u: f64,
    pub h: f64,
}

/// `H` sampled as a parametric graph, left branch over `[a_prev, L_prev]`,
/// right branch over `[L_prev, a_cur]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedH {
    pub left: Vec<HSample>,
    pub right: Vec<HSample>,
}

impl InducedH {
    /// `H` at `u = f_k(a_prev) = 0`.
    pub fn at_zero(&self) -> f64 {
        self.left.first().map_or(f64::NAN, |p| p.h)
    }

    pub fn samples(&self) -> impl Iterator<Item = &HSample> {
        self.left.iter().chain(&self.right)
    }
}

/// The pieces of `curve` lying in `[lo, hi]`, so that shared joints are
/// evaluated on the branch itself.
fn branch_pieces(curve: &OddPiecewiseCurve, lo: f64, hi: f64) -> Vec<Segment> {
    curve
        .segments
        .iter()
        .filter(|s| s.x_lo() >= lo - DOMAIN_TOL && s.x_hi() <= hi + DOMAIN_TOL)
        .copied()
        .collect()
}

fn sample_branch(source: &[Segment], target: &[Segment], phi: &PhiMap, n: usize) -> Vec<HSample> {
    (0..n)
        .map(|i| {
            let s = if i + 1 == n {
                phi.s_hi
            } else {
                phi.s_lo + (phi.s_hi - phi.s_lo) * i as f64 / (n - 1) as f64
            };
            HSample {
                s,
                u: eval_pieces(source, s),
                h: eval_pieces(target, phi.eval(s)),
            }
        })
        .collect()
}

// Along the branch u moves monotonically; H is decreasing iff h moves the
// other way.
fn check_decreasing(branch: &[HSample]) -> Result<(), ConstructionError> {
    const NOISE: f64 = 1e-13;
    for w in branch.windows(2) {
        let (du, dh) = (w[1].u - w[0].u, w[1].h - w[0].h);
        if du.abs() > NOISE && dh.abs() > NOISE && du * dh > 0.0 {
            return Err(ConstructionError::HNotMonotone { s: w[1].s });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub index: usize,
    pub a_cur: f64,
    /// `|f_k(a_cur)|` and `|f_{k+1}(a_cur)|`.
    pub zero_residuals: (f64, f64),
    /// Slope jump at `a_cur`; `None` where a derivative is undefined.
    pub slope_residual: Option<f64>,
    /// `|H(0)|`.
    pub h_at_zero: f64,
    pub h_monotone: bool,
    pub sign_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub curve: OddPiecewiseCurve,
    pub induced: InducedH,
    pub report: StepReport,
}

/// Append the step's new branch to `current` (which must end at `a_cur`).
pub fn extend_once(current: &OddPiecewiseCurve, step: &ExtensionStep) -> Result<Extension, ConstructionError> {
    step.check_ordering()?;
    if (current.end() - step.a_cur).abs() > DOMAIN_TOL {
        return Err(ConstructionError::InvalidOrdering(format!(
            "current curve ends at {} but the step starts at {}",
            current.end(),
            step.a_cur
        )));
    }
    step.phi_l.check_endpoints(step.a_cur, step.l_next)?;
    step.phi_r.check_endpoints(step.l_next, step.a_next)?;
    check_cover(&step.target_left, step.a_cur, step.l_next)?;
    check_cover(&step.target_right, step.l_next, step.a_next)?;
    let new_pieces: Vec<Segment> = step.target().copied().collect();
    check_cover(&new_pieces, step.a_cur, step.a_next)?;

    for x in [step.a_cur, step.a_next] {
        let value = eval_pieces(&new_pieces, x);
        if !(value.abs() <= JOINT_ZERO_TOL) {
            return Err(ConstructionError::JointMismatch { x, value });
        }
    }

    // The new branch must have the opposite sign to the old one.
    let source_sign = current.eval(step.l_prev).signum();
    let n = H_SAMPLES;
    for i in 1..n - 1 {
        let x = step.a_cur + (step.a_next - step.a_cur) * i as f64 / (n - 1) as f64;
        let value = eval_pieces(&new_pieces, x);
        if !(value * source_sign < 0.0) {
            return Err(ConstructionError::SignViolation { x, value });
        }
    }

    let source = branch_pieces(current, step.a_prev, step.a_cur);
    let induced = InducedH {
        left: sample_branch(&source, &step.target_left, &step.phi_l, n),
        right: sample_branch(&source, &step.target_right, &step.phi_r, n),
    };
    check_decreasing(&induced.left)?;
    check_decreasing(&induced.right)?;

    let last = current.segments.last().expect("curves are non-empty");
    let first_new = &new_pieces[0];
    let slope_residual = match (last.derivative(step.a_cur), first_new.derivative(step.a_cur)) {
        (Ok(l), Ok(r)) => Some((l - r).abs()),
        _ => None,
    };
    let report = StepReport {
        index: 0,
        a_cur: step.a_cur,
        zero_residuals: (last.value(step.a_cur).abs(), first_new.value(step.a_cur).abs()),
        slope_residual,
        h_at_zero: induced.at_zero().abs(),
        h_monotone: true,
        sign_ok: true,
    };
    let mut segments = current.segments.clone();
    segments.extend(new_pieces);
    Ok(Extension {
        curve: OddPiecewiseCurve::new(segments)?,
        induced,
        report,
    })
}

/// Close the curve with a straight line through `(a_N, 0)`.
pub fn append_tail(curve: &OddPiecewiseCurve, slope: TailSlope) -> Result<OddPiecewiseCurve, ConstructionError> {
    if curve.is_complete() {
        return Err(ConstructionError::AlreadyComplete);
    }
    let x = curve.end();
    let last = curve.segments.last().ok_or(CurveError::Empty)?;
    let value = last.value(x);
    if !(value.abs() <= JOINT_ZERO_TOL) {
        return Err(ConstructionError::TailNotAtZero { x, value });
    }
    let slope = match slope {
        TailSlope::Value(m) => m,
        TailSlope::Auto(_) => {
            let m = last.derivative(x)?;
            if !(m.abs() >= MIN_TAIL_SLOPE) {
                return Err(ConstructionError::ZeroSlope { x, slope: m });
            }
            m
        }
    };
    let mut segments = curve.segments.clone();
    segments.push(Segment::Linear(LinearSegment::new(x, f64::INFINITY, slope, x, 0.0)));
    Ok(OddPiecewiseCurve::new(segments)?)
}

/// Everything produced by running a plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub system: LienardSystem,
    pub steps: Vec<ExtensionStep>,
    pub induced: Vec<InducedH>,
    pub reports: Vec<StepReport>,
    /// `a_1 … a_N`.
    pub zeros: Vec<f64>,
    /// `L_0 … L_{N-1}`.
    pub extrema: Vec<f64>,
}

fn first_branch_extremum(f1: &OddPiecewiseCurve) -> Result<f64, ConstructionError> {
    let bad = |m: String| Err(ConstructionError::InvalidFirstBranch(m));
    let a1 = f1.end();
    if !(a1.is_finite() && a1 > 0.0) {
        return bad(format!("must end at a finite a₁ > 0, ends at {a1}"));
    }
    let value = f1.eval(a1);
    if !(value.abs() <= JOINT_ZERO_TOL) {
        return bad(format!("F(a₁) = {value} is not zero"));
    }
    let inner: Vec<(f64, f64)> = f1.extrema().into_iter().filter(|&(x, _)| x < a1).collect();
    let [(l0, f_l0)] = inner[..] else {
        return bad(format!("needs exactly one extremum in (0, a₁), found {}", inner.len()));
    };
    if !(f_l0 < 0.0) {
        return bad(format!("needs x·f₁(x) < 0 on (0, a₁), but F(L₀) = {f_l0}"));
    }
    let zeros = f1.positive_zeros()?;
    if let Some(z) = zeros.iter().find(|&&z| z < a1 - JOINT_ZERO_TOL) {
        return bad(format!("extra zero at {z}"));
    }
    Ok(l0)
}

/// Run a plan: validate `f1`, apply the steps in order, append the tail.
pub fn build(plan: &ExtensionPlan) -> Result<Construction, ConstructionError> {
    let mut curve = plan.f1.curve.clone();
    let l0 = first_branch_extremum(&curve)?;
    let (mut a_prev, mut l_prev, mut a_cur) = (0.0, l0, curve.end());
    let mut zeros = vec![a_cur];
    let mut extrema = vec![l0];
    let (mut steps, mut induced, mut reports) = (Vec::new(), Vec::new(), Vec::new());
    for (index, spec) in plan.steps.iter().enumerate() {
        let resolved = (|| {
            check_ordering([a_prev, l_prev, a_cur, spec.l_next, spec.a_next])?;
            let step = ExtensionStep {
                a_prev,
                l_prev,
                a_cur,
                a_next: spec.a_next,
                l_next: spec.l_next,
                phi_l: spec.phi_l.resolve((a_prev, l_prev), (a_cur, spec.l_next))?,
                phi_r: spec.phi_r.resolve((l_prev, a_cur), (spec.l_next, spec.a_next))?,
                target_left: spec.target_left.segments().to_vec(),
                target_right: spec.target_right.segments().to_vec(),
            };
            let ext = extend_once(&curve, &step)?;
            Ok((step, ext))
        })();
        let (step, ext) = resolved.map_err(|e: ConstructionError| e.at_step(index + 1))?;
        curve = ext.curve;
        induced.push(ext.induced);
        reports.push(StepReport {
            index: index + 1,
            ..ext.report
        });
        (a_prev, l_prev, a_cur) = (step.a_cur, step.l_next, step.a_next);
        zeros.push(a_cur);
        extrema.push(l_prev);
        steps.push(step);
    }
    let curve = append_tail(&curve, plan.tail_slope)?;
    Ok(Construction {
        system: LienardSystem::new(curve, plan.f1.g.clone()),
        steps,
        induced,
        reports,
        zeros,
        extrema,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// `|H(f)| < |f|`
    Less,
    Equal,
    /// `|H(f)| > |f|`
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OdaniVerdict {
    Holds,
    Fails,
    Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiDiagnostic {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// `A ≥ 1`, reported only when `g` is linear.
    pub a_at_least_one: Option<bool>,
    /// `g(φ(s))·φ'(s) ≥ g(s)` on the sample grid.
    pub choice_inequality: bool,
}

/// `d(s) = |H(f(s))| − |f(s)|` over one source interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub s_lo: f64,
    pub s_hi: f64,
    /// Where `d = 0`, ascending.
    pub equality_loci: Vec<f64>,
    /// Sign of `d` between consecutive loci.
    pub pieces: Vec<(f64, f64, Relation)>,
    pub verdict: OdaniVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdaniStep {
    pub index: usize,
    #[serde(rename = "phi_L")]
    pub phi_l: PhiDiagnostic,
    #[serde(rename = "phi_R")]
    pub phi_r: PhiDiagnostic,
    pub left: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdaniReport {
    pub steps: Vec<OdaniStep>,
}

fn phi_diagnostic(phi: &PhiMap, system: &LienardSystem) -> PhiDiagnostic {
    let g = &system.g;
    let choice_inequality = (0..H_SAMPLES).all(|i| {
        let s = phi.s_lo + (phi.s_hi - phi.s_lo) * i as f64 / (H_SAMPLES - 1) as f64;
        let lhs = g.eval(phi.eval(s)) * phi.derivative(s);
        lhs >= g.eval(s) - 1e-12 * g.eval(s).abs().max(1.0)
    });
    PhiDiagnostic {
        a: phi.a,
        b: phi.b,
        a_at_least_one: g.linear_coefficient().map(|_| phi.a >= 1.0),
        choice_inequality,
    }
}

fn relation(d: f64) -> Relation {
    if d.abs() <= ODANI_EQ_TOL {
        Relation::Equal
    } else if d < 0.0 {
        Relation::Less
    } else {
        Relation::Greater
    }
}

fn compare(step: &ExtensionStep, curve: &OddPiecewiseCurve) -> Comparison {
    let source = branch_pieces(curve, step.a_prev, step.a_cur);
    let d = |s: f64| eval_pieces(&step.target_left, step.phi_l.eval(s)).abs() - eval_pieces(&source, s).abs();
    let (lo, hi) = (step.a_prev, step.l_prev);
    let n = H_SAMPLES;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let rel: Vec<Relation> = grid.iter().map(|&s| relation(d(s))).collect();

    let mut loci = Vec::new();
    if rel[0] == Relation::Equal {
        loci.push(lo);
    }
    let mut last_signed: Option<usize> = None;
    for i in 0..n {
        if rel[i] == Relation::Equal {
            continue;
        }
        if let Some(j) = last_signed {
            if rel[j] != rel[i] {
                let root = roots::brent(d, grid[j], grid[i], 1e-12).map_or(0.5 * (grid[j] + grid[i]), |r| r.x);
                loci.push(root);
            }
        }
        last_signed = Some(i);
    }
    if rel[n - 1] == Relation::Equal && n > 1 {
        loci.push(hi);
    }
    loci.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut cuts = vec![lo];
    cuts.extend(loci.iter().copied().filter(|&x| x > lo && x < hi));
    cuts.push(hi);
    let mut pieces = Vec::new();
    for w in cuts.windows(2) {
        // Classify each piece by its grid points strictly inside.
        let inside: Vec<Relation> = grid
            .iter()
            .zip(&rel)
            .filter(|(s, _)| **s > w[0] && **s < w[1])
            .map(|(_, r)| *r)
            .collect();
        let r = if inside.contains(&Relation::Less) {
            Relation::Less
        } else if inside.contains(&Relation::Greater) {
            Relation::Greater
        } else {
            Relation::Equal
        };
        pieces.push((w[0], w[1], r));
    }
    let less = rel.contains(&Relation::Less);
    let greater = rel.contains(&Relation::Greater);
    let verdict = match (less, greater) {
        (false, _) => OdaniVerdict::Holds,
        (true, false) => OdaniVerdict::Fails,
        (true, true) => OdaniVerdict::Piecewise,
    };
    Comparison {
        s_lo: lo,
        s_hi: hi,
        equality_loci: loci,
        pieces,
        verdict,
    }
}

/// Compare each step against the choice-function condition
/// `g(φ(s))φ'(s) ≥ g(s)` and the amplitude condition `|H(f(s))| ≥ |f(s)|`.
pub fn odani_check(construction: &Construction) -> OdaniReport {
    let system = &construction.system;
    let steps = construction
        .steps
        .iter()
        .enumerate()
        .map(|(i, step)| OdaniStep {
            index: i + 1,
            phi_l: phi_diagnostic(&step.phi_l, system),
            phi_r: phi_diagnostic(&step.phi_r, system),
            left: compare(step, &system.curve),
        })
        .collect();
    OdaniReport { steps }
}
