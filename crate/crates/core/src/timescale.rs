//! Finite-horizon time scales and the calculus primitives defined on them.
//!
//! A [`TimeScale`] is an ordered union of disjoint closed intervals and isolated
//! points. It supplies the forward and backward jump operators, the graininess, a
//! quadrature grid, the circle algebra on regressive functions, the generalized
//! exponential `e_p(t, t0)` and a numerical delta derivative.
//!
//! Literal syntax (used by configuration files): pieces separated by `;`, where
//! `[a,b]` is an interval, `{t}` (or `{t1,t2,...}`) are isolated points, `Z[a,b]` is
//! the unit lattice `a, a+1, ..., b`, `hZ[a,b,h]` the lattice of step `h` and
//! `q^N[q0,q,count]` the geometric lattice `q0 * q^k` for `k < count`.
//!
//! ```
//! use tempora::TimeScale;
//!
//! let ts: TimeScale = "[0,1];{2}".parse().unwrap();
//! assert_eq!(ts.sigma(1.0).unwrap(), 2.0);
//! assert_eq!(ts.graininess(0.5).unwrap(), 0.0);
//! ```

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative tolerance of membership tests.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// `|1 + mu p|` at or below this is treated as non-regressive.
pub const REGRESSIVITY_ATOL: f64 = 1e-14;

fn tol_at(t: f64) -> f64 {
    MEMBERSHIP_RTOL * t.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Interval { lo: f64, hi: f64 },
    Point(f64),
}

impl Segment {
    pub fn start(&self) -> f64 {
        match *self {
            Segment::Interval { lo, .. } => lo,
            Segment::Point(t) => t,
        }
    }

    pub fn end(&self) -> f64 {
        match *self {
            Segment::Interval { hi, .. } => hi,
            Segment::Point(t) => t,
        }
    }

    fn contains(&self, t: f64) -> bool {
        let tol = tol_at(t);
        t >= self.start() - tol && t <= self.end() + tol
    }
}

/// A real-valued function of time.
///
/// Implemented for every `Fn(f64) -> f64`, so closures can be passed directly.
pub trait TimeFunction: Send + Sync {
    fn at(&self, t: f64) -> f64;
}

impl<F> TimeFunction for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn at(&self, t: f64) -> f64 {
        self(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Midpoint,
    Trapezoid,
    Simpson,
}

/// How integrals over dense pieces are approximated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub dense_step: f64,
    pub rule: QuadratureRule,
}

impl QuadratureConfig {
    pub fn new(dense_step: f64, rule: QuadratureRule) -> Result<Self> {
        if !(dense_step > 0.0 && dense_step.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dense_step must be positive, got {dense_step}"
            )));
        }
        Ok(QuadratureConfig { dense_step, rule })
    }

    pub fn trapezoid(dense_step: f64) -> Self {
        QuadratureConfig {
            dense_step,
            rule: QuadratureRule::Trapezoid,
        }
    }

    /// Approximates the integral of `f` over `[a, b]`.
    pub fn integrate(&self, f: &dyn TimeFunction, a: f64, b: f64) -> f64 {
        let len = b - a;
        if len <= 0.0 {
            return 0.0;
        }
        let n = ((len / self.dense_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let node = |k: usize| if k == n { b } else { a + h * k as f64 };
        match self.rule {
            QuadratureRule::Midpoint => (0..n).map(|k| f.at(a + h * (k as f64 + 0.5))).sum::<f64>() * h,
            QuadratureRule::Trapezoid => {
                let inner: f64 = (1..n).map(|k| f.at(node(k))).sum();
                h * (0.5 * (f.at(a) + f.at(b)) + inner)
            }
            QuadratureRule::Simpson => {
                (0..n)
                    .map(|k| {
                        let (l, r) = (node(k), node(k + 1));
                        f.at(l) + 4.0 * f.at(0.5 * (l + r)) + f.at(r)
                    })
                    .sum::<f64>()
                    * h
                    / 6.0
            }
        }
    }
}

/// One entry of [`TimeScale::grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    /// True graininess of the underlying scale at `t`.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    segments: Vec<Segment>,
    translation_invariant: bool,
}

impl TimeScale {
    /// Validates and wraps an ordered list of disjoint pieces.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidTimeScale("at least one segment is required".into()));
        }
        for seg in &segments {
            let (a, b) = (seg.start(), seg.end());
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidTimeScale(format!("non-finite time in {seg:?}")));
            }
            if a < 0.0 {
                return Err(Error::InvalidTimeScale(format!("negative time {a}")));
            }
            if let Segment::Interval { lo, hi } = *seg {
                if !(lo < hi) {
                    return Err(Error::InvalidTimeScale(format!(
                        "interval [{lo},{hi}] needs lo < hi"
                    )));
                }
            }
        }
        for pair in segments.windows(2) {
            if !(pair[0].end() < pair[1].start()) {
                return Err(Error::InvalidTimeScale(format!(
                    "segments {:?} and {:?} overlap or are out of order",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(TimeScale {
            segments,
            translation_invariant: false,
        })
    }

    /// Builds a scale from pieces in any order, sorting them first.
    pub fn from_unsorted(mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|a, b| a.start().total_cmp(&b.start()));
        TimeScale::new(segments)
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let mut ts = TimeScale::new(vec![Segment::Interval { lo, hi }])?;
        ts.translation_invariant = true;
        Ok(ts)
    }

    /// `{a, a+h, a+2h, ...}` up to and including `b` (nodes computed as `a + k h`).
    pub fn lattice(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(b >= a) {
            return Err(Error::InvalidTimeScale(format!(
                "lattice needs h > 0 and b >= a, got [{a},{b},{h}]"
            )));
        }
        let span = (b - a) / h;
        let count = (span + 1e-9 * span.max(1.0)).floor() as usize;
        let points = (0..=count).map(|k| Segment::Point(a + h * k as f64)).collect();
        let mut ts = TimeScale::new(points)?;
        ts.translation_invariant = true;
        Ok(ts)
    }

    /// Unit lattice `a, a+1, ..., b`.
    pub fn integers(a: i64, b: i64) -> Result<Self> {
        if b < a {
            return Err(Error::InvalidTimeScale(format!("Z[{a},{b}] is empty")));
        }
        let points = (a..=b).map(|k| Segment::Point(k as f64)).collect();
        let mut ts = TimeScale::new(points)?;
        ts.translation_invariant = true;
        Ok(ts)
    }

    /// `q0 * q^k` for `k = 0..count`.
    pub fn geometric(q0: f64, q: f64, count: usize) -> Result<Self> {
        if !(q0 > 0.0) || !(q > 1.0) || count == 0 {
            return Err(Error::InvalidTimeScale(format!(
                "geometric lattice needs q0 > 0, q > 1, count >= 1, got [{q0},{q},{count}]"
            )));
        }
        let points = (0..count).map(|k| Segment::Point(q0 * q.powi(k as i32))).collect();
        TimeScale::new(points)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Whether the scale is the finite truncation of a translation-invariant scale
    /// (a single interval or a uniform lattice), i.e. a candidate almost periodic time
    /// scale. Arbitrary unions report `false`.
    pub fn is_translation_invariant(&self) -> bool {
        self.translation_invariant
    }

    pub fn min(&self) -> f64 {
        self.segments[0].start()
    }

    pub fn max(&self) -> f64 {
        self.segments[self.segments.len() - 1].end()
    }

    fn locate(&self, t: f64) -> Option<usize> {
        // First segment whose end is not below t.
        let tol = tol_at(t);
        let idx = self.segments.partition_point(|s| s.end() + tol < t);
        (idx < self.segments.len() && self.segments[idx].contains(t)).then_some(idx)
    }

    fn locate_or_err(&self, t: f64) -> Result<usize> {
        self.locate(t).ok_or(Error::TimeNotInScale { t })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    fn at_end_of(&self, idx: usize, t: f64) -> bool {
        t >= self.segments[idx].end() - tol_at(t)
    }

    fn at_start_of(&self, idx: usize, t: f64) -> bool {
        t <= self.segments[idx].start() + tol_at(t)
    }

    /// Forward jump `sigma(t) = inf { s in T : s > t }`, `t` itself at the maximum.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let idx = self.locate_or_err(t)?;
        if !self.at_end_of(idx, t) {
            return Ok(t);
        }
        Ok(match self.segments.get(idx + 1) {
            Some(next) => next.start(),
            None => t,
        })
    }

    /// Backward jump `rho(t) = sup { s in T : s < t }`, `t` itself at the minimum.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let idx = self.locate_or_err(t)?;
        if !self.at_start_of(idx, t) {
            return Ok(t);
        }
        Ok(if idx == 0 {
            t
        } else {
            self.segments[idx - 1].end()
        })
    }

    /// Graininess `mu(t) = sigma(t) - t`.
    pub fn graininess(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? - t)
    }

    pub fn is_right_scattered(&self, t: f64) -> Result<bool> {
        Ok(self.graininess(t)? > 0.0)
    }

    /// Every isolated point once, every interval subdivided into steps no longer than
    /// `dense_step` with both endpoints included. Each entry carries the true
    /// graininess.
    pub fn grid(&self, dense_step: f64) -> Vec<GridPoint> {
        assert!(dense_step > 0.0, "dense_step must be positive");
        let mut out = Vec::new();
        for (idx, seg) in self.segments.iter().enumerate() {
            let jump = self.segments.get(idx + 1).map_or(0.0, |next| next.start() - seg.end());
            match *seg {
                Segment::Point(t) => out.push(GridPoint { t, mu: jump }),
                Segment::Interval { lo, hi } => {
                    let len = hi - lo;
                    let n = ((len / dense_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
                    for k in 0..n {
                        out.push(GridPoint {
                            t: lo + len * k as f64 / n as f64,
                            mu: 0.0,
                        });
                    }
                    out.push(GridPoint { t: hi, mu: jump });
                }
            }
        }
        out
    }

    /// Largest graininess among points `t` with `min <= t < horizon`, i.e. over the
    /// steps a simulation up to `horizon` actually takes.
    pub fn mu_sup(&self, horizon: f64) -> f64 {
        let mut sup: f64 = 0.0;
        for (idx, seg) in self.segments.iter().enumerate() {
            if seg.end() >= horizon - tol_at(horizon) {
                break;
            }
            if let Some(next) = self.segments.get(idx + 1) {
                sup = sup.max(next.start() - seg.end());
            }
        }
        sup
    }

    /// Truncates the scale to `[min, horizon]`.
    pub fn truncate(&self, horizon: f64) -> Result<TimeScale> {
        let tol = tol_at(horizon);
        let mut segs = Vec::new();
        for seg in &self.segments {
            if seg.start() > horizon + tol {
                break;
            }
            match *seg {
                Segment::Interval { lo, hi } if hi > horizon + tol => {
                    if horizon - lo > tol {
                        segs.push(Segment::Interval { lo, hi: horizon });
                    } else {
                        segs.push(Segment::Point(lo));
                    }
                }
                s => segs.push(s),
            }
        }
        let mut ts = TimeScale::new(segs)?;
        ts.translation_invariant = self.translation_invariant;
        Ok(ts)
    }
}

/// `p (+) q = p + q + mu p q`.
pub fn circle_plus(p: f64, q: f64, mu: f64) -> f64 {
    p + q + mu * p * q
}

/// `p (-) q = (p - q) / (1 + mu q)`.
pub fn circle_minus(p: f64, q: f64, mu: f64) -> Result<f64> {
    let den = 1.0 + mu * q;
    if den.abs() <= REGRESSIVITY_ATOL {
        return Err(Error::NotRegressive {
            t: f64::NAN,
            mu,
            value: den,
        });
    }
    Ok((p - q) / den)
}

/// Unary `(-)q = circle_minus(0, q, mu)`.
pub fn ominus(q: f64, mu: f64) -> Result<f64> {
    circle_minus(0.0, q, mu)
}

/// The function `t -> (p (+) q)(t)` on `ts`.
pub fn oplus_fn<'a>(
    p: &'a dyn TimeFunction,
    q: &'a dyn TimeFunction,
    ts: &'a TimeScale,
) -> impl TimeFunction + 'a {
    move |t: f64| circle_plus(p.at(t), q.at(t), ts.graininess(t).unwrap_or(0.0))
}

/// The function `t -> ((-)p)(t)` on `ts`; NaN where `p` is not regressive.
pub fn ominus_fn<'a>(p: &'a dyn TimeFunction, ts: &'a TimeScale) -> impl TimeFunction + 'a {
    move |t: f64| ominus(p.at(t), ts.graininess(t).unwrap_or(0.0)).unwrap_or(f64::NAN)
}

/// True iff `1 + mu(t) p(t) > 0` at every grid point.
pub fn is_positively_regressive(p: &dyn TimeFunction, ts: &TimeScale, dense_step: f64) -> bool {
    ts.grid(dense_step)
        .iter()
        .all(|g| 1.0 + g.mu * p.at(g.t) > 0.0)
}

/// Generalized exponential `e_p(t, t0)`.
///
/// Right-scattered points `s` in `[t0, t)` contribute a factor `1 + mu(s) p(s)`; dense
/// pieces contribute `exp(integral of p)` computed with `quad`. For `t < t0` the value
/// is `1 / e_p(t0, t)`.
pub fn ts_exp(
    p: &dyn TimeFunction,
    t: f64,
    t0: f64,
    ts: &TimeScale,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let i0 = ts.locate_or_err(t0)?;
    let i1 = ts.locate_or_err(t)?;
    if t < t0 {
        return Ok(1.0 / ts_exp(p, t0, t, ts, quad)?);
    }
    let segs = ts.segments();
    let tol = tol_at(t);
    let mut acc = 1.0;
    let mut log_dense = 0.0;
    for idx in i0..=i1 {
        let seg = segs[idx];
        if let Segment::Interval { lo, hi } = seg {
            let (a, b) = (lo.max(t0), hi.min(t));
            if b > a {
                let jumps = idx + 1 < segs.len() && b >= hi - tol_at(hi);
                if jumps {
                    // Integrate against the left limit at a right-scattered end, so
                    // mu-dependent integrands (p (+) q, (-)p) see mu = 0 there.
                    let inner = hi - 1e-9 * hi.abs().max(1.0);
                    let left_limit = move |s: f64| if s >= inner { p.at(inner) } else { p.at(s) };
                    log_dense += quad.integrate(&left_limit, a, b);
                } else {
                    log_dense += quad.integrate(p, a, b);
                }
            }
        }
        // The right end of this piece jumps to the next piece when that lies within [t0, t].
        let right = seg.end();
        if idx < i1 && right < t - tol && right >= t0 - tol_at(t0) {
            let mu = segs[idx + 1].start() - right;
            let factor = 1.0 + mu * p.at(right);
            if factor.abs() <= REGRESSIVITY_ATOL {
                return Err(Error::NotRegressive {
                    t: right,
                    mu,
                    value: factor,
                });
            }
            acc *= factor;
        }
    }
    Ok(acc * log_dense.exp())
}

/// Delta derivative of `f` at `t`.
///
/// Right-scattered points use the exact quotient `(f(sigma t) - f(t)) / mu(t)`.
/// Right-dense points use a central difference of step `h`, falling back to one-sided
/// differences (with the step shrunk to fit) near interval ends.
pub fn delta_derivative(f: &dyn TimeFunction, t: f64, ts: &TimeScale, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step h must be positive, got {h}")));
    }
    let idx = ts.locate_or_err(t)?;
    let mu = ts.graininess(t)?;
    if mu > 0.0 {
        return Ok((f.at(t + mu) - f.at(t)) / mu);
    }
    match ts.segments()[idx] {
        // An isolated point with mu = 0 can only be the (left-scattered) maximum.
        Segment::Point(p) => Err(Error::AtMaximum { t: p }),
        Segment::Interval { lo, hi } => {
            let room_right = hi - t;
            let room_left = t - lo;
            if room_right >= h && room_left >= h {
                Ok((f.at(t + h) - f.at(t - h)) / (2.0 * h))
            } else if room_right >= room_left {
                let step = h.min(room_right);
                Ok((f.at(t + step) - f.at(t)) / step)
            } else {
                let step = h.min(room_left);
                Ok((f.at(t) - f.at(t - step)) / step)
            }
        }
    }
}

impl fmt::Display for TimeScale {
    /// Renders the literal syntax; lattices are written out point by point.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            match *seg {
                Segment::Interval { lo, hi } => write!(f, "[{lo:?},{hi:?}]")?,
                Segment::Point(t) => write!(f, "{{{t:?}}}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for TimeScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<TimeScale> {
        parse_literal(s)
    }
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::TimeScaleSyntax {
        column,
        message: message.into(),
    }
}

/// Parses `a,b,...` inside brackets starting at byte offset `col` (1-based columns).
fn parse_numbers(body: &str, col: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for part in body.split(',') {
        let trimmed = part.trim();
        let lead = part.len() - part.trim_start().len();
        let value: f64 = trimmed
            .parse()
            .map_err(|_| syntax(col + offset + lead, format!("expected a number, found {trimmed:?}")))?;
        out.push(value);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn parse_literal(text: &str) -> Result<TimeScale> {
    let mut segments = Vec::new();
    let mut single_shorthand = None;
    let mut pieces = 0;
    let mut offset = 0;
    for raw in text.split(';') {
        let lead = raw.len() - raw.trim_start().len();
        let piece = raw.trim();
        let col = offset + lead + 1;
        offset += raw.len() + 1;
        if piece.is_empty() {
            return Err(syntax(col, "empty piece"));
        }
        pieces += 1;
        let (head, open, close) = match piece.find(['[', '{']) {
            Some(i) => {
                let open = piece.as_bytes()[i] as char;
                let close = if open == '[' { ']' } else { '}' };
                (&piece[..i], i, close)
            }
            None => return Err(syntax(col, "expected '[' or '{'")),
        };
        if !piece.ends_with(close) {
            return Err(syntax(col + piece.len() - 1, format!("expected closing '{close}'")));
        }
        let body = &piece[open + 1..piece.len() - 1];
        let nums = parse_numbers(body, col + open + 1)?;
        let arity = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(syntax(col, format!("{head}{} expects {n} numbers, found {}", &piece[open..=open], nums.len())))
            }
        };
        let wrap = |e: Error| match e {
            Error::InvalidTimeScale(msg) => syntax(col, msg),
            other => other,
        };
        match (head.trim(), close) {
            ("", ']') => {
                arity(2)?;
                segments.push(Segment::Interval { lo: nums[0], hi: nums[1] });
                single_shorthand = Some(true);
            }
            ("", '}') => {
                segments.extend(nums.iter().map(|&t| Segment::Point(t)));
                single_shorthand = Some(false);
            }
            ("Z", ']') => {
                arity(2)?;
                if nums[0].fract() != 0.0 || nums[1].fract() != 0.0 {
                    return Err(syntax(col, "Z[a,b] needs integer bounds"));
                }
                let ts = TimeScale::integers(nums[0] as i64, nums[1] as i64).map_err(wrap)?;
                segments.extend_from_slice(ts.segments());
                single_shorthand = Some(true);
            }
            ("hZ", ']') => {
                arity(3)?;
                let ts = TimeScale::lattice(nums[0], nums[1], nums[2]).map_err(wrap)?;
                segments.extend_from_slice(ts.segments());
                single_shorthand = Some(true);
            }
            ("q^N", ']') => {
                arity(3)?;
                if nums[2] < 1.0 || nums[2].fract() != 0.0 {
                    return Err(syntax(col, "q^N count must be a positive integer"));
                }
                let ts = TimeScale::geometric(nums[0], nums[1], nums[2] as usize).map_err(wrap)?;
                segments.extend_from_slice(ts.segments());
                single_shorthand = Some(false);
            }
            (other, _) => return Err(syntax(col, format!("unknown piece kind {other:?}"))),
        }
    }
    let mut ts = TimeScale::from_unsorted(segments).map_err(|e| match e {
        Error::InvalidTimeScale(msg) => syntax(1, msg),
        other => other,
    })?;
    ts.translation_invariant = pieces == 1 && single_shorthand == Some(true);
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mixed() -> TimeScale {
        "[0,1];{2}".parse().unwrap()
    }

    #[test]
    fn sigma_examples() {
        let z = TimeScale::integers(0, 100).unwrap();
        assert_eq!(z.sigma(5.0).unwrap(), 6.0);
        assert_eq!(mixed().sigma(0.5).unwrap(), 0.5);
        assert_eq!(mixed().sigma(1.0).unwrap(), 2.0);
        assert_eq!(mixed().sigma(2.0).unwrap(), 2.0);
        assert_eq!(z.sigma(100.0).unwrap(), 100.0);
    }

    #[test]
    fn rho_examples() {
        let z = TimeScale::integers(0, 100).unwrap();
        assert_eq!(z.rho(5.0).unwrap(), 4.0);
        assert_eq!(mixed().rho(2.0).unwrap(), 1.0);
        assert_eq!(TimeScale::interval(0.0, 1.0).unwrap().rho(0.0).unwrap(), 0.0);
        assert_eq!(mixed().rho(0.3).unwrap(), 0.3);
    }

    #[test]
    fn graininess_examples() {
        let z = TimeScale::integers(0, 100).unwrap();
        assert_eq!(z.graininess(5.0).unwrap(), 1.0);
        assert_eq!(mixed().graininess(0.5).unwrap(), 0.0);
        assert_eq!(mixed().graininess(1.0).unwrap(), 1.0);
    }

    #[test]
    fn not_in_scale() {
        assert_eq!(mixed().sigma(1.5), Err(Error::TimeNotInScale { t: 1.5 }));
        assert!(mixed().rho(-0.1).is_err());
        assert!(mixed().graininess(2.1).is_err());
        // Float noise inside the relative tolerance still counts as a member.
        assert_eq!(mixed().sigma(1.0 + 1e-14).unwrap(), 2.0);
    }

    #[test]
    fn grid_examples() {
        let pts = |g: Vec<GridPoint>| g.iter().map(|p| (p.t, p.mu)).collect::<Vec<_>>();
        let z = TimeScale::integers(0, 2).unwrap();
        assert_eq!(pts(z.grid(0.1)), vec![(0.0, 1.0), (1.0, 1.0), (2.0, 0.0)]);
        let i = TimeScale::interval(0.0, 1.0).unwrap();
        assert_eq!(pts(i.grid(0.5)), vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]);
        assert_eq!(pts(mixed().grid(1.0)), vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn grid_steps_never_exceed_dense_step() {
        let ts: TimeScale = "[0,1];{2};[3,5]".parse().unwrap();
        let g = ts.grid(0.3);
        for w in g.windows(2) {
            assert!(w[1].t > w[0].t);
            if w[0].mu == 0.0 {
                assert!(w[1].t - w[0].t <= 0.3 + 1e-15);
            } else {
                assert_eq!(w[0].t + w[0].mu, w[1].t);
            }
        }
        assert_eq!(g.last().unwrap().t, 5.0);
    }

    #[test]
    fn circle_algebra() {
        assert_eq!(circle_plus(0.0, 0.7, 3.0), 0.7);
        assert_relative_eq!(circle_plus(0.39, 0.37, 1.0), 0.9043, epsilon = 1e-15);
        assert_eq!(circle_plus(0.2, 0.3, 0.0), 0.5);
        assert_eq!(circle_minus(0.4, 0.4, 2.0).unwrap(), 0.0);
        assert_relative_eq!(circle_minus(0.0, 0.39, 1.0).unwrap(), -0.2805755395683453, epsilon = 1e-15);
        assert_eq!(circle_minus(0.9, 0.2, 0.0).unwrap(), 0.9 - 0.2);
        assert!(matches!(circle_minus(1.0, -1.0, 1.0), Err(Error::NotRegressive { .. })));
    }

    #[test]
    fn positive_regressivity() {
        let z10 = TimeScale::integers(0, 10).unwrap();
        assert!(is_positively_regressive(&|_t: f64| -0.39, &z10, 0.1));
        assert!(!is_positively_regressive(&|_t: f64| -1.0, &z10, 0.1));
        let i = TimeScale::interval(0.0, 1.0).unwrap();
        assert!(is_positively_regressive(&|_t: f64| -1e9, &i, 0.01));
    }

    #[test]
    fn exp_on_lattice_and_interval() {
        let q = QuadratureConfig::trapezoid(1e-3);
        let z = TimeScale::integers(0, 20).unwrap();
        let c = 0.13;
        let v = ts_exp(&|_t: f64| c, 7.0, 0.0, &z, &q).unwrap();
        assert_relative_eq!(v, (1.0f64 + c).powi(7), max_relative = 1e-14);
        let v = ts_exp(&|_t: f64| -0.39, 3.0, 0.0, &z, &q).unwrap();
        assert_relative_eq!(v, 0.226981, max_relative = 1e-12);
        let i = TimeScale::interval(0.0, 4.0).unwrap();
        let v = ts_exp(&|_t: f64| c, 2.5, 0.0, &i, &q).unwrap();
        assert_relative_eq!(v, (c * 2.5).exp(), max_relative = 1e-14);
        assert_eq!(ts_exp(&|_t: f64| c, 2.0, 2.0, &z, &q).unwrap(), 1.0);
    }

    #[test]
    fn exp_backwards_is_reciprocal() {
        let q = QuadratureConfig::trapezoid(1e-3);
        let ts = mixed();
        let p = |t: f64| 0.3 + 0.1 * t;
        let fwd = ts_exp(&p, 2.0, 0.25, &ts, &q).unwrap();
        let back = ts_exp(&p, 0.25, 2.0, &ts, &q).unwrap();
        assert_relative_eq!(fwd * back, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn exp_mixed_scale_by_hand() {
        // [0,1] dense then jump 1 -> 2: e = exp(int_0^1 p) * (1 + 1 * p(1)).
        let q = QuadratureConfig::new(1e-3, QuadratureRule::Simpson).unwrap();
        let p = |t: f64| 0.5 * t;
        let v = ts_exp(&p, 2.0, 0.0, &mixed(), &q).unwrap();
        assert_relative_eq!(v, 0.25f64.exp() * 1.5, max_relative = 1e-13);
        // Stopping at the right end of the interval takes no jump.
        let v = ts_exp(&p, 1.0, 0.0, &mixed(), &q).unwrap();
        assert_relative_eq!(v, 0.25f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn exp_reports_non_regressive_jump() {
        let q = QuadratureConfig::trapezoid(1e-2);
        let z = TimeScale::integers(0, 5).unwrap();
        let err = ts_exp(&|_t: f64| -1.0, 3.0, 0.0, &z, &q).unwrap_err();
        assert_eq!(err.code(), "NOT_REGRESSIVE");
        assert_eq!(ts_exp(&|_t: f64| 0.1, 3.5, 0.0, &z, &q).unwrap_err().code(), "TIME_NOT_IN_SCALE");
    }

    #[test]
    fn quadrature_rules_converge() {
        let f = |t: f64| t.sin();
        let exact = 1.0 - 2f64.cos();
        for (rule, tol) in [
            (QuadratureRule::Midpoint, 1e-6),
            (QuadratureRule::Trapezoid, 1e-6),
            (QuadratureRule::Simpson, 1e-13),
        ] {
            let q = QuadratureConfig::new(1e-3, rule).unwrap();
            assert!((q.integrate(&f, 0.0, 2.0) - exact).abs() < tol, "{rule:?}");
        }
        assert!(QuadratureConfig::new(0.0, QuadratureRule::Simpson).is_err());
    }

    #[test]
    fn delta_derivative_examples() {
        let z = TimeScale::integers(0, 10).unwrap();
        let sq = |t: f64| t * t;
        assert_eq!(delta_derivative(&sq, 3.0, &z, 1e-5).unwrap(), 7.0);
        let i = TimeScale::interval(0.0, 1.0).unwrap();
        let d = delta_derivative(&sq, 0.5, &i, 1e-5).unwrap();
        assert!((d - 1.0).abs() <= 1e-6);
        assert_eq!(delta_derivative(&|_t: f64| 4.2, 0.5, &i, 1e-5).unwrap(), 0.0);
        assert_eq!(delta_derivative(&|_t: f64| 4.2, 1.0, &mixed(), 1e-5).unwrap(), 0.0);
        // Boundary of a dense piece: one-sided.
        let d = delta_derivative(&sq, 0.0, &i, 1e-6).unwrap();
        assert!(d.abs() < 1e-5);
        let d = delta_derivative(&sq, 1.0, &i, 1e-6).unwrap();
        assert!((d - 2.0).abs() < 1e-5);
    }

    #[test]
    fn delta_derivative_errors() {
        let sq = |t: f64| t * t;
        assert_eq!(delta_derivative(&sq, 2.0, &mixed(), 1e-5), Err(Error::AtMaximum { t: 2.0 }));
        assert_eq!(delta_derivative(&sq, 1.5, &mixed(), 1e-5).unwrap_err().code(), "TIME_NOT_IN_SCALE");
    }

    #[test]
    fn literal_parsing() {
        let ts: TimeScale = "[0,1];{2};[3,5]".parse().unwrap();
        assert_eq!(
            ts.segments(),
            &[
                Segment::Interval { lo: 0.0, hi: 1.0 },
                Segment::Point(2.0),
                Segment::Interval { lo: 3.0, hi: 5.0 }
            ]
        );
        assert!(!ts.is_translation_invariant());
        let z: TimeScale = "Z[0,2555]".parse().unwrap();
        assert_eq!(z.segments().len(), 2556);
        assert!(z.is_translation_invariant());
        let h: TimeScale = "hZ[0,10,0.1]".parse().unwrap();
        assert_eq!(h.segments().len(), 101);
        assert_eq!(h.max(), 10.0);
        assert_relative_eq!(h.graininess(h.segments()[37].start()).unwrap(), 0.1, max_relative = 1e-12);
        let q: TimeScale = "q^N[1,2,5]".parse().unwrap();
        assert_eq!(q.max(), 16.0);
        assert_eq!(q.graininess(4.0).unwrap(), 4.0);
        let pts: TimeScale = "{3,1,2}".parse().unwrap();
        assert_eq!(pts.min(), 1.0);
        assert!("[0,10]".parse::<TimeScale>().unwrap().is_translation_invariant());
    }

    #[test]
    fn literal_errors_carry_columns() {
        let col = |s: &str| match s.parse::<TimeScale>() {
            Err(Error::TimeScaleSyntax { column, .. }) => column,
            other => panic!("expected syntax error for {s:?}, got {other:?}"),
        };
        assert_eq!(col("[0,1];{x}"), 8);
        assert_eq!(col("[0,1];  W[0,2]"), 9);
        assert_eq!(col("[0,1"), 4);
        assert_eq!(col("[0,1];;{2}"), 7);
        assert_eq!(col("[2,1]"), 1);
        assert_eq!(col("[0,2];{1}"), 1);
    }

    #[test]
    fn invalid_construction() {
        assert!(TimeScale::new(vec![]).is_err());
        assert!(TimeScale::new(vec![Segment::Point(-1.0)]).is_err());
        assert!(TimeScale::new(vec![Segment::Point(2.0), Segment::Point(1.0)]).is_err());
        assert!(TimeScale::new(vec![Segment::Interval { lo: 0.0, hi: f64::INFINITY }]).is_err());
    }

    #[test]
    fn display_round_trips() {
        let ts: TimeScale = "[0,1.5];{2,2.25};[3,5]".parse().unwrap();
        let again: TimeScale = ts.to_string().parse().unwrap();
        assert_eq!(ts.segments(), again.segments());
    }

    #[test]
    fn truncate_and_mu_sup() {
        let z = TimeScale::integers(0, 10).unwrap();
        assert_eq!(z.mu_sup(10.0), 1.0);
        assert_eq!(z.mu_sup(0.0), 0.0);
        let ts: TimeScale = "[0,1];{3};[4,6]".parse().unwrap();
        assert_eq!(ts.mu_sup(6.0), 2.0);
        assert_eq!(ts.mu_sup(3.0), 2.0);
        assert_eq!(ts.mu_sup(1.0), 0.0);
        let cut = ts.truncate(5.0).unwrap();
        assert_eq!(cut.max(), 5.0);
        assert_eq!(cut.segments().len(), 3);
        assert_eq!(ts.truncate(4.0).unwrap().segments().last(), Some(&Segment::Point(4.0)));
    }
}
