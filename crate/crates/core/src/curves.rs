//! Odd piecewise curves built from elliptic arcs and straight lines, and
//! odd polynomial restoring functions.
//!
//! A curve stores only its restriction to `[0, ∞)`; values for negative
//! abscissae are produced by exact reflection, `F(-x) = -F(x)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Square-root arguments below this value at a segment end are reported as
/// near-vertical tangents.
pub const VERTICAL_TANGENT_WARN: f64 = 1e-6;
/// Square-root arguments below this value make the derivative undefined.
pub const VERTICAL_TANGENT_ERR: f64 = 1e-12;
/// Joint value residual expected of analytically specified curves.
pub const EXACT_JOINT_TOL: f64 = 1e-9;
/// Joint value residual accepted for curves whose constants were printed
/// with a handful of digits.
pub const ROUNDED_JOINT_TOL: f64 = 1e-4;
/// Slope residual required of a curve declared C¹.
pub const C1_TOL: f64 = 1e-6;
/// Closed-form zeros may land this far outside their segment when the
/// segment constants were rounded.
const ZERO_SNAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("vertical tangent at x = {x}")]
    VerticalTangent { x: f64 },
    #[error("zero at x = {x} is not simple (no sign change)")]
    NonSimpleZero { x: f64 },
    #[error("curve has no segments")]
    Empty,
    #[error("restoring function is invalid: {0}")]
    InvalidRestoring(String),
    #[error("curve failed validation: {0}")]
    Invalid(String),
}

/// `y(x) = c + r·√(1 − ((x − x0)/b)²)` on `[x_lo, x_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSegment {
    pub x_lo: f64,
    #[serde(with = "bound")]
    pub x_hi: f64,
    pub x0: f64,
    pub c: f64,
    pub r: f64,
    pub b: f64,
}

impl ArcSegment {
    pub fn new(x_lo: f64, x_hi: f64, x0: f64, c: f64, r: f64, b: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            x0,
            c,
            r,
            b,
        }
    }

    /// The argument `1 − u²` of the square root.
    pub fn root_arg(&self, x: f64) -> f64 {
        let u = (x - self.x0) / self.b;
        1.0 - u * u
    }

    pub fn value(&self, x: f64) -> f64 {
        self.c + self.r * self.root_arg(x).max(0.0).sqrt()
    }

    pub fn derivative(&self, x: f64) -> Result<f64, CurveError> {
        let arg = self.root_arg(x);
        if arg < VERTICAL_TANGENT_ERR {
            return Err(CurveError::VerticalTangent { x });
        }
        let u = (x - self.x0) / self.b;
        Ok(-self.r * u / (self.b * arg.sqrt()))
    }

    // Sign of the slope just right of x_lo / just left of x_hi.
    fn slope_sign_after_start(&self) -> f64 {
        if self.x_lo < self.x0 {
            self.r.signum()
        } else {
            -self.r.signum()
        }
    }

    fn slope_sign_before_end(&self) -> f64 {
        if self.x_hi <= self.x0 {
            self.r.signum()
        } else {
            -self.r.signum()
        }
    }

    /// Solutions of `c + r√(1 − u²) = 0`, tangential ones flagged.
    fn zeros(&self) -> Vec<(f64, bool)> {
        if self.r == 0.0 {
            return Vec::new();
        }
        let root = -self.c / self.r;
        if !(0.0..=1.0).contains(&root) {
            return Vec::new();
        }
        let u = (1.0 - root * root).max(0.0).sqrt();
        if u == 0.0 {
            vec![(self.x0, true)]
        } else {
            vec![(self.x0 - self.b * u, false), (self.x0 + self.b * u, false)]
        }
    }
}

/// `y(x) = anchor_y + slope·(x − anchor_x)` on `[x_lo, x_hi]`, `x_hi` possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSegment {
    pub x_lo: f64,
    #[serde(with = "bound")]
    pub x_hi: f64,
    pub slope: f64,
    pub anchor_x: f64,
    pub anchor_y: f64,
}

impl LinearSegment {
    pub fn new(x_lo: f64, x_hi: f64, slope: f64, anchor_x: f64, anchor_y: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            slope,
            anchor_x,
            anchor_y,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.anchor_y + self.slope * (x - self.anchor_x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment {
    Arc(ArcSegment),
    Linear(LinearSegment),
}

impl Segment {
    pub fn x_lo(&self) -> f64 {
        match self {
            Segment::Arc(a) => a.x_lo,
            Segment::Linear(l) => l.x_lo,
        }
    }

    pub fn x_hi(&self) -> f64 {
        match self {
            Segment::Arc(a) => a.x_hi,
            Segment::Linear(l) => l.x_hi,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Segment::Arc(a) => a.value(x),
            Segment::Linear(l) => l.value(x),
        }
    }

    pub fn derivative(&self, x: f64) -> Result<f64, CurveError> {
        match self {
            Segment::Arc(a) => a.derivative(x),
            Segment::Linear(l) => Ok(l.slope),
        }
    }

    pub(crate) fn slope_sign_after_start(&self) -> f64 {
        match self {
            Segment::Arc(a) => a.slope_sign_after_start(),
            Segment::Linear(l) => sign(l.slope),
        }
    }

    pub(crate) fn slope_sign_before_end(&self) -> f64 {
        match self {
            Segment::Arc(a) => a.slope_sign_before_end(),
            Segment::Linear(l) => sign(l.slope),
        }
    }

    /// Copy of the segment with a different domain.
    pub fn with_domain(&self, x_lo: f64, x_hi: f64) -> Segment {
        match *self {
            Segment::Arc(a) => Segment::Arc(ArcSegment { x_lo, x_hi, ..a }),
            Segment::Linear(l) => Segment::Linear(LinearSegment { x_lo, x_hi, ..l }),
        }
    }

    /// An interior extremum of the segment itself, if any.
    fn interior_extremum(&self) -> Option<f64> {
        match self {
            Segment::Arc(a) if a.r != 0.0 && a.x0 > a.x_lo && a.x0 < a.x_hi => Some(a.x0),
            _ => None,
        }
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// An odd function given by its restriction to `[0, ∞)`.
///
/// Construction-time curves may end at a finite abscissa; evaluation past
/// the end extends the last segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddPiecewiseCurve {
    pub segments: Vec<Segment>,
}

impl OddPiecewiseCurve {
    pub fn new(segments: Vec<Segment>) -> Result<Self, CurveError> {
        if segments.is_empty() {
            return Err(CurveError::Empty);
        }
        Ok(Self { segments })
    }

    /// The straight line `F(x) = slope·x` on `[0, ∞)`.
    pub fn linear(slope: f64) -> Self {
        Self {
            segments: vec![Segment::Linear(LinearSegment::new(0.0, f64::INFINITY, slope, 0.0, 0.0))],
        }
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, Segment::x_hi)
    }

    pub fn is_complete(&self) -> bool {
        self.end().is_infinite()
    }

    /// Abscissae where one segment hands over to the next.
    pub fn joints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .map(Segment::x_hi)
            .filter(|x| x.is_finite() && *x > 0.0)
            .collect()
    }

    /// Index of the segment owning `x ≥ 0`; joints belong to the left segment.
    pub fn segment_index(&self, x: f64) -> usize {
        let i = self.segments.partition_point(|s| s.x_hi() < x);
        i.min(self.segments.len() - 1)
    }

    fn eval_positive(&self, x: f64) -> f64 {
        self.segments[self.segment_index(x)].value(x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if x < 0.0 {
            -self.eval_positive(-x)
        } else {
            self.eval_positive(x)
        }
    }

    /// `F'(x)`; at a joint the left segment's value is returned.
    pub fn derivative(&self, x: f64) -> Result<f64, CurveError> {
        let ax = x.abs();
        self.segments[self.segment_index(ax)]
            .derivative(ax)
            .map_err(|_| CurveError::VerticalTangent { x })
    }

    /// Sorted positive simple zeros, found per segment in closed form.
    pub fn positive_zeros(&self) -> Result<Vec<f64>, CurveError> {
        let mut candidates: Vec<f64> = Vec::new();
        for seg in &self.segments {
            let (lo, hi) = (seg.x_lo(), seg.x_hi());
            let found: Vec<(f64, bool)> = match seg {
                Segment::Arc(a) => a.zeros(),
                Segment::Linear(l) => {
                    if l.slope == 0.0 {
                        if l.anchor_y == 0.0 {
                            return Err(CurveError::NonSimpleZero { x: lo.max(0.0) });
                        }
                        Vec::new()
                    } else {
                        vec![(l.anchor_x - l.anchor_y / l.slope, false)]
                    }
                }
            };
            for (x, tangential) in found {
                if x < lo - ZERO_SNAP_TOL || x > hi + ZERO_SNAP_TOL {
                    continue;
                }
                // Rounded constants can push a joint zero just outside both
                // neighbouring segments; snap those onto the joint.
                let x = if x < lo {
                    lo
                } else if x > hi {
                    hi
                } else {
                    x
                };
                if x <= ZERO_SNAP_TOL {
                    continue;
                }
                if tangential {
                    return Err(CurveError::NonSimpleZero { x });
                }
                candidates.push(x);
            }
        }
        candidates.sort_by(|a, b| a.total_cmp(b));
        let mut zeros: Vec<f64> = Vec::new();
        for x in candidates {
            match zeros.last_mut() {
                Some(last) if (x - *last).abs() <= ZERO_SNAP_TOL => {
                    if self.eval(x).abs() < self.eval(*last).abs() {
                        *last = x;
                    }
                }
                _ => zeros.push(x),
            }
        }
        for (i, &z) in zeros.iter().enumerate() {
            let left_room = if i == 0 { z } else { z - zeros[i - 1] };
            let right_room = zeros.get(i + 1).map_or(1.0, |n| n - z);
            let d = (1e-5 * z.max(1e-3)).min(0.25 * left_room).min(0.25 * right_room);
            let (l, r) = (self.eval(z - d), self.eval(z + d));
            if l * r >= 0.0 {
                return Err(CurveError::NonSimpleZero { x: z });
            }
        }
        Ok(zeros)
    }

    /// Interior local extrema on `(0, ∞)` as `(x, F(x))`, ascending.
    pub fn extrema(&self) -> Vec<(f64, f64)> {
        let mut xs = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            if let Some(x) = seg.interior_extremum() {
                xs.push(x);
            }
            if let Some(next) = self.segments.get(i + 1) {
                let before = seg.slope_sign_before_end();
                let after = next.slope_sign_after_start();
                if before != 0.0 && after != 0.0 && before != after {
                    xs.push(seg.x_hi());
                }
            }
        }
        xs.retain(|&x| x > 0.0);
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        xs.into_iter().map(|x| (x, self.eval(x))).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            f0_residual: self.segments.first().map_or(f64::NAN, |s| s.value(0.0).abs()),
            ..Default::default()
        };
        if self.segments.is_empty() {
            report.coverage_issues.push("no segments".into());
            return report;
        }
        if self.segments[0].x_lo() != 0.0 {
            report.coverage_issues.push(format!(
                "first segment starts at {} instead of 0",
                self.segments[0].x_lo()
            ));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let (lo, hi) = (seg.x_lo(), seg.x_hi());
            if !(lo < hi) {
                report
                    .coverage_issues
                    .push(format!("segment {i} has empty domain [{lo}, {hi}]"));
            }
            if hi.is_infinite() && i + 1 != self.segments.len() {
                report
                    .coverage_issues
                    .push(format!("segment {i} is unbounded but not last"));
            }
            if let Segment::Arc(a) = seg {
                if !(a.b > 0.0) {
                    report
                        .coverage_issues
                        .push(format!("segment {i} has non-positive semi-axis"));
                }
                if hi.is_infinite() {
                    report.coverage_issues.push(format!("segment {i} is an unbounded arc"));
                    continue;
                }
                for x in [lo, hi] {
                    let arg = a.root_arg(x);
                    if arg < -1e-12 {
                        report.domain_violations.push(x);
                    } else if arg < VERTICAL_TANGENT_WARN {
                        report.vertical_tangents.push(x);
                    }
                }
            }
            if let Some(next) = self.segments.get(i + 1) {
                if next.x_lo() > hi {
                    report.coverage_issues.push(format!("gap ({hi}, {})", next.x_lo()));
                    continue;
                }
                if next.x_lo() < hi {
                    report.coverage_issues.push(format!("overlap ({}, {hi})", next.x_lo()));
                    continue;
                }
                let value_residual = (seg.value(hi) - next.value(hi)).abs();
                let slope_residual = match (seg.derivative(hi), next.derivative(hi)) {
                    (Ok(l), Ok(r)) => Some((l - r).abs()),
                    _ => None,
                };
                report.joints.push(JointReport {
                    x: hi,
                    value_residual,
                    slope_residual,
                });
            }
        }
        if !self.is_complete() {
            report.open_end = Some(self.end());
        }
        report
    }

    /// Re-solve each arc's offset `c` so the curve is exactly continuous and
    /// vanishes at the origin.
    pub fn repair_offsets(&mut self) {
        let mut prev_value = 0.0;
        for seg in &mut self.segments {
            let lo = seg.x_lo();
            if let Segment::Arc(a) = seg {
                a.c += prev_value - a.value(lo);
            }
            if let Segment::Linear(l) = seg {
                l.anchor_y += prev_value - l.value(lo);
            }
            prev_value = seg.value(seg.x_hi());
        }
    }

    /// The curve restricted to `[0, x_end]`.
    pub fn truncated(&self, x_end: f64) -> OddPiecewiseCurve {
        let mut segments = Vec::new();
        for seg in &self.segments {
            if seg.x_lo() >= x_end {
                break;
            }
            segments.push(seg.with_domain(seg.x_lo(), seg.x_hi().min(x_end)));
        }
        OddPiecewiseCurve { segments }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointReport {
    pub x: f64,
    pub value_residual: f64,
    pub slope_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub f0_residual: f64,
    pub joints: Vec<JointReport>,
    pub coverage_issues: Vec<String>,
    /// Finite end of the curve when it does not reach infinity.
    pub open_end: Option<f64>,
    pub vertical_tangents: Vec<f64>,
    /// Segment ends lying outside their arc's ellipse.
    pub domain_violations: Vec<f64>,
}

impl ValidationReport {
    pub fn max_value_residual(&self) -> f64 {
        self.joints.iter().map(|j| j.value_residual).fold(0.0, f64::max)
    }

    /// Largest slope jump; infinite when a joint has an undefined slope.
    pub fn max_slope_residual(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| j.slope_residual.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn is_continuous(&self, tol: f64) -> bool {
        self.f0_residual < 1e-12
            && self.coverage_issues.is_empty()
            && self.domain_violations.is_empty()
            && self.max_value_residual() <= tol
    }

    pub fn is_c1(&self, tol: f64) -> bool {
        self.max_slope_residual() <= tol
    }

    /// Continuous to `tol` and defined on all of `[0, ∞)`.
    pub fn passes(&self, tol: f64) -> bool {
        self.is_continuous(tol) && self.open_end.is_none()
    }
}

/// `g(x) = Σ cₖ x^{eₖ}` with odd exponents and nonnegative coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RestoringFunction {
    terms: Vec<(u32, f64)>,
}

impl RestoringFunction {
    pub fn new(terms: Vec<(u32, f64)>) -> Result<Self, CurveError> {
        if terms.is_empty() {
            return Err(CurveError::InvalidRestoring("no terms".into()));
        }
        for &(e, c) in &terms {
            if e % 2 == 0 {
                return Err(CurveError::InvalidRestoring(format!("exponent {e} is even")));
            }
            if !(c >= 0.0) || !c.is_finite() {
                return Err(CurveError::InvalidRestoring(format!(
                    "coefficient {c} is not a finite nonnegative number"
                )));
            }
        }
        if !terms.iter().any(|&(_, c)| c > 0.0) {
            return Err(CurveError::InvalidRestoring("all coefficients are zero".into()));
        }
        Ok(Self { terms })
    }

    /// `g(x) = x`.
    pub fn identity() -> Self {
        Self { terms: vec![(1, 1.0)] }
    }

    pub fn terms(&self) -> &[(u32, f64)] {
        &self.terms
    }

    /// `Some(k)` when `g(x) = k·x`.
    pub fn linear_coefficient(&self) -> Option<f64> {
        let mut k = 0.0;
        for &(e, c) in &self.terms {
            if e == 1 {
                k += c;
            } else if c != 0.0 {
                return None;
            }
        }
        Some(k)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c * x.powi(e as i32)).sum()
    }

    /// `G(x) = ∫₀ˣ g`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(e, c)| c * x.powi(e as i32 + 1) / f64::from(e + 1))
            .sum()
    }

    /// Positive `x` with `G(x) = level`, for `level ≥ 0`.
    pub fn inverse_antiderivative(&self, level: f64) -> f64 {
        if level <= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.antiderivative(hi) < level {
            hi *= 2.0;
        }
        crate::roots::bisect(|x| self.antiderivative(x) - level, 0.0, hi, 1e-15)
            .map(|r| r.x)
            .unwrap_or(hi)
    }
}

impl Default for RestoringFunction {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Serialize, Deserialize)]
struct RestoringDoc {
    coeffs: Vec<(u32, f64)>,
}

impl Serialize for RestoringFunction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RestoringDoc {
            coeffs: self.terms.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RestoringFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = RestoringDoc::deserialize(d)?;
        RestoringFunction::new(doc.coeffs).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing infinite bounds as the string `"inf"`.
pub(crate) mod bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" | "infinity" | "Infinity" => Ok(f64::INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}
