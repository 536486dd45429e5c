//! Event-driven exact solutions for the discontinuous relay `f0 = -sign` and
//! the two-level coefficient `A0`.
//!
//! With a sign-definite constant history the solution is piecewise affine.
//! Its slope is `-sign(x(t - 1)) * A0(t)`, which can only change at a
//! coefficient switch (`kT`, `kT + p1`) or one delay after a zero of the
//! solution. Between those events every quantity is available in closed form.

use std::collections::VecDeque;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Params;

/// Absolute tolerance on event times.
pub const TIME_TOL: f64 = 1e-12;
/// Relative tolerance on values used by shape checks.
pub const VALUE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("constant history must be nonzero")]
    ZeroHistory,
    #[error("horizon must be finite and after the start time (start {start}, end {end})")]
    BadHorizon { start: f64, end: f64 },
    #[error("delayed value vanishes on an interval starting at t = {0}; the solution left the slowly oscillating class")]
    DegenerateStall(f64),
    #[error("breakpoint times must be finite and strictly increasing (index {0})")]
    NonIncreasing(usize),
    #[error("a path needs at least two breakpoints")]
    TooShort,
    #[error("malformed path CSV: {0}")]
    Csv(String),
}

/// Sign-definite constant initial function `phi = h` on `[t0 - 1, t0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantHistory(f64);

impl ConstantHistory {
    pub fn new(h: f64) -> Result<Self, ExactError> {
        if h == 0.0 || !h.is_finite() {
            return Err(ExactError::ZeroHistory);
        }
        Ok(Self(h))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    fn as_f64(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: f64,
    pub x: f64,
}

/// Continuous piecewise-affine function given by its breakpoints. The value
/// before the first breakpoint (the history) equals the first value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    points: Vec<Breakpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSignature {
    pub zero_count: usize,
    pub start_sign: Sign,
    pub end_sign: Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub x0: f64,
    pub t1: f64,
    pub x1: f64,
    pub slope: f64,
}

#[derive(Serialize)]
struct PathJson<'a> {
    start_time: f64,
    end_time: f64,
    segments: Vec<Segment>,
    zeros: &'a [f64],
}

impl PiecewisePath {
    pub fn from_breakpoints(points: Vec<Breakpoint>) -> Result<Self, ExactError> {
        if points.len() < 2 {
            return Err(ExactError::TooShort);
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0].t.is_finite() && w[1].t.is_finite() && w[1].t > w[0].t) {
                return Err(ExactError::NonIncreasing(i + 1));
            }
        }
        Ok(Self { points })
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.points
    }

    pub fn start_time(&self) -> f64 {
        self.points[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.points.windows(2).map(|w| Segment {
            t0: w[0].t,
            x0: w[0].x,
            t1: w[1].t,
            x1: w[1].x,
            slope: (w[1].x - w[0].x) / (w[1].t - w[0].t),
        })
    }

    /// Index of the segment containing `t` (the later one at a breakpoint).
    fn segment_index(&self, t: f64) -> usize {
        let i = self.points.partition_point(|p| p.t <= t);
        i.clamp(1, self.points.len() - 1) - 1
    }

    /// Value at `t`. Times before the start return the history value; times
    /// past the end return `None`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t <= self.start_time() {
            return Some(self.points[0].x);
        }
        if t > self.end_time() + TIME_TOL {
            return None;
        }
        let i = self.segment_index(t);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let w = (t - a.t) / (b.t - a.t);
        Some(a.x + (b.x - a.x) * w)
    }

    /// Right-sided slope at `t` inside the path domain.
    pub fn slope_at(&self, t: f64) -> Option<f64> {
        if t < self.start_time() || t >= self.end_time() {
            return None;
        }
        let i = self.segment_index(t);
        let (a, b) = (self.points[i], self.points[i + 1]);
        Some((b.x - a.x) / (b.t - a.t))
    }

    /// Times where the path changes sign, each found in closed form on its
    /// segment. Touching zero without a sign change does not count.
    pub fn zeros(&self) -> Vec<f64> {
        let mut zeros = Vec::new();
        let mut last_sign = Sign::Zero;
        // time of the last breakpoint with a nonzero value, and the first zero-valued
        // breakpoint seen after it
        let mut last_nonzero: Option<Breakpoint> = None;
        let mut zero_point: Option<f64> = None;
        for p in &self.points {
            let s = Sign::of(p.x);
            if s == Sign::Zero {
                if zero_point.is_none() {
                    zero_point = Some(p.t);
                }
                continue;
            }
            if last_sign != Sign::Zero && s != last_sign {
                let z = match (zero_point, last_nonzero) {
                    (Some(z), _) => z,
                    (None, Some(a)) => a.t - a.x * (p.t - a.t) / (p.x - a.x),
                    (None, None) => unreachable!("sign known without a point"),
                };
                zeros.push(z);
            }
            last_sign = s;
            last_nonzero = Some(*p);
            zero_point = None;
        }
        zeros
    }

    /// True iff consecutive zeros are more than one delay apart.
    pub fn is_slowly_oscillating(&self) -> bool {
        gaps_exceed_delay(&self.zeros())
    }

    /// Zero count on `[ta, tb]` (with the time tolerance) and boundary signs.
    pub fn shape_signature(&self, ta: f64, tb: f64) -> ShapeSignature {
        let zero_count = self
            .zeros()
            .into_iter()
            .filter(|&z| z >= ta - TIME_TOL && z <= tb + TIME_TOL)
            .count();
        let sign_at = |t: f64| {
            let x = self.value_at(t).unwrap_or(f64::NAN);
            let scale = self.points.iter().fold(1.0_f64, |m, p| m.max(p.x.abs()));
            if x.abs() <= VALUE_REL_TOL * scale {
                Sign::Zero
            } else {
                Sign::of(x)
            }
        };
        ShapeSignature {
            zero_count,
            start_sign: sign_at(ta),
            end_sign: sign_at(tb),
        }
    }

    /// Pointwise negation.
    pub fn negated(&self) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| Breakpoint { t: p.t, x: -p.x })
                .collect(),
        }
    }

    /// Sup-norm distance to `other` over the common domain, evaluated at the
    /// union of both breakpoint sets (exact for piecewise-affine functions).
    pub fn sup_distance(&self, other: &PiecewisePath) -> f64 {
        let lo = self.start_time().max(other.start_time());
        let hi = self.end_time().min(other.end_time());
        self.points
            .iter()
            .chain(other.points.iter())
            .map(|p| p.t)
            .chain([lo, hi])
            .filter(|&t| t >= lo && t <= hi)
            .map(|t| (self.value_at(t).unwrap() - other.value_at(t).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    /// Breakpoints as `t,x` CSV with shortest round-trip number formatting.
    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x"])?;
        for p in &self.points {
            w.write_record([p.t.to_string(), p.x.to_string()])?;
        }
        w.flush()
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, ExactError> {
        let mut r = csv::Reader::from_reader(input);
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| ExactError::Csv(e.to_string()))?;
            let field = |i: usize| -> Result<f64, ExactError> {
                rec.get(i)
                    .ok_or_else(|| ExactError::Csv(format!("missing column {i}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| ExactError::Csv(e.to_string()))
            };
            points.push(Breakpoint {
                t: field(0)?,
                x: field(1)?,
            });
        }
        Self::from_breakpoints(points)
    }

    /// JSON object with `start_time`, `end_time`, `segments` and `zeros`.
    pub fn to_json(&self) -> serde_json::Value {
        let zeros = self.zeros();
        serde_json::to_value(PathJson {
            start_time: self.start_time(),
            end_time: self.end_time(),
            segments: self.segments().collect(),
            zeros: &zeros,
        })
        .expect("path serializes")
    }
}

pub fn gaps_exceed_delay(zeros: &[f64]) -> bool {
    zeros.windows(2).all(|w| w[1] - w[0] > 1.0)
}

/// Exact solution on `[0, t_end]` from the constant history `h` on `[-1, 0]`.
pub fn propagate(
    params: &Params,
    history: ConstantHistory,
    t_end: f64,
) -> Result<PiecewisePath, ExactError> {
    propagate_from(params, history, 0.0, t_end)
}

/// Exact solution on `[t0, t_end]` from the constant history `h` on
/// `[t0 - 1, t0]`. The coefficient phase is absolute: switches stay at
/// `kT` and `kT + p1` whatever `t0` is.
pub fn propagate_from(
    params: &Params,
    history: ConstantHistory,
    t0: f64,
    t_end: f64,
) -> Result<PiecewisePath, ExactError> {
    if !(t0.is_finite() && t_end.is_finite() && t_end > t0 + TIME_TOL) {
        return Err(ExactError::BadHorizon {
            start: t0,
            end: t_end,
        });
    }
    let h = history.value();
    let period = params.period();
    let scale = h.abs().max(1.0);

    let mut points = vec![Breakpoint { t: t0, x: h }];
    // (time, sign just after that time); the first entry covers the history
    let mut signs: Vec<(f64, Sign)> = vec![(f64::NEG_INFINITY, Sign::of(h))];
    let mut pending: VecDeque<f64> = VecDeque::new();
    let mut t = t0;
    let mut x = h;

    let next_switch = |t: f64| -> f64 {
        let k = (t / period).floor();
        [k, k + 1.0]
            .into_iter()
            .flat_map(|k| [k * period, k * period + params.p1()])
            .filter(|&s| s > t + TIME_TOL)
            .fold(f64::INFINITY, f64::min)
    };

    while t < t_end - TIME_TOL {
        while pending.front().is_some_and(|&e| e <= t + TIME_TOL) {
            pending.pop_front();
        }
        let mut next = next_switch(t)
            .min(pending.front().copied().unwrap_or(f64::INFINITY))
            .min(t_end);

        let delayed = {
            let s = t - 1.0 + TIME_TOL;
            let i = signs.partition_point(|&(ts, _)| ts <= s);
            signs[i - 1].1
        };
        let slope = -delayed.as_f64() * params.coefficient(0.5 * (t + next));
        if slope == 0.0 {
            return Err(ExactError::DegenerateStall(t));
        }

        if x == 0.0 {
            let after = Sign::of(slope);
            let before = signs[signs.len() - 1].1;
            if after != before {
                signs.push((t, after));
                pending.push_back(t + 1.0);
                next = next.min(t + 1.0);
            }
        } else {
            let z = t - x / slope;
            if z > t && z <= t + TIME_TOL {
                // a zero that rounding left just ahead of the last breakpoint
                x = 0.0;
                points.last_mut().expect("nonempty").x = 0.0;
                continue;
            }
            if z > t + TIME_TOL && z < next - TIME_TOL {
                points.push(Breakpoint { t: z, x: 0.0 });
                t = z;
                x = 0.0;
                continue;
            }
        }

        let mut xn = x + slope * (next - t);
        if x != 0.0 && (xn.abs() <= VALUE_REL_TOL * 1e-3 * scale || Sign::of(xn) != Sign::of(x)) {
            // zero within TIME_TOL of the event: put it on the event itself
            xn = 0.0;
        }
        points.push(Breakpoint { t: next, x: xn });
        t = next;
        x = xn;
    }
    Ok(PiecewisePath { points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a1: f64, a2: f64, p1: f64, p2: f64) -> Params {
        Params::new(a1, a2, p1, p2).unwrap()
    }

    fn run(params: Params, h: f64, t_end: f64) -> PiecewisePath {
        propagate(&params, ConstantHistory::new(h).unwrap(), t_end).unwrap()
    }

    #[test]
    fn closes_type_one_orbit() {
        let path = run(p(1.0, 0.25, 2.5, 1.5), -0.25, 4.0);
        assert!((path.value_at(4.0).unwrap() + 0.25).abs() < 1e-12);
        assert_eq!(path.zeros().len(), 2);
        assert!((path.zeros()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fig5_unstable_orbit() {
        let path = run(p(1.0, 6.0, 3.0, 1.0), -0.5, 4.0);
        assert!((path.value_at(4.0).unwrap() + 0.5).abs() < 1e-12);
        let z = path.zeros();
        assert_eq!(z.len(), 2);
        assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] - 2.5).abs() < 1e-12);
        assert!(path.is_slowly_oscillating());
    }

    #[test]
    fn equal_levels_peak() {
        let a = 1.7;
        let path = run(p(a, a, 3.0, 2.0), -a, 3.0);
        assert!((path.zeros()[0] - 1.0).abs() < 1e-12);
        assert!((path.value_at(2.0).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn no_crossing_path_has_no_zeros() {
        let path = PiecewisePath::from_breakpoints(vec![
            Breakpoint { t: 0.0, x: -1.0 },
            Breakpoint { t: 1.0, x: -0.5 },
            Breakpoint { t: 2.0, x: -2.0 },
        ])
        .unwrap();
        assert!(path.zeros().is_empty());
        assert!(path.is_slowly_oscillating());
    }

    #[test]
    fn touching_zero_is_not_a_crossing() {
        let path = PiecewisePath::from_breakpoints(vec![
            Breakpoint { t: 0.0, x: -1.0 },
            Breakpoint { t: 1.0, x: 0.0 },
            Breakpoint { t: 2.0, x: -1.0 },
            Breakpoint { t: 3.0, x: 1.0 },
        ])
        .unwrap();
        assert_eq!(path.zeros(), vec![2.5]);
    }

    #[test]
    fn fast_zeros_are_not_slow() {
        let path = PiecewisePath::from_breakpoints(vec![
            Breakpoint { t: 0.0, x: -1.0 },
            Breakpoint { t: 1.0, x: 0.0 },
            Breakpoint { t: 1.4, x: 0.4 },
            Breakpoint { t: 1.8, x: 0.0 },
            Breakpoint { t: 2.0, x: -0.2 },
        ])
        .unwrap();
        assert_eq!(path.zeros(), vec![1.0, 1.8]);
        assert!(!path.is_slowly_oscillating());
    }

    #[test]
    fn type_two_signatures() {
        let params = p(4.0, 1.0, 0.5, 2.5);
        let path = run(params, -1.0 / 3.0, 6.0);
        let one = path.shape_signature(0.0, 3.0);
        assert_eq!(one.zero_count, 1);
        assert_eq!(one.start_sign, Sign::Negative);
        assert_eq!(one.end_sign, Sign::Positive);
        let two = path.shape_signature(0.0, 6.0);
        assert_eq!(two.zero_count, 2);
        assert_eq!(two.end_sign, two.start_sign);
    }

    #[test]
    fn start_time_shift_respects_absolute_phase() {
        let params = p(1.0, 6.0, 3.0, 1.0);
        let path = propagate_from(&params, ConstantHistory::new(-1.8).unwrap(), 3.0, 11.0).unwrap();
        // coefficient is a2 = 6 on [3, 4)
        assert!((path.slope_at(3.0).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(path.start_time(), 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(ConstantHistory::new(0.0), Err(ExactError::ZeroHistory));
        let params = p(1.0, 6.0, 3.0, 1.0);
        let h = ConstantHistory::new(-1.0).unwrap();
        assert!(matches!(
            propagate(&params, h, 0.0),
            Err(ExactError::BadHorizon { .. })
        ));
        assert!(matches!(
            PiecewisePath::from_breakpoints(vec![
                Breakpoint { t: 0.0, x: 1.0 },
                Breakpoint { t: 0.0, x: 2.0 }
            ]),
            Err(ExactError::NonIncreasing(1))
        ));
    }

    #[test]
    fn csv_and_json_forms() {
        let path = run(p(1.0, 6.0, 3.0, 1.0), -0.5, 4.0);
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x\n0,-0.5\n"));
        let back = PiecewisePath::read_csv(&buf[..]).unwrap();
        assert_eq!(back, path);
        let json = path.to_json();
        assert_eq!(json["zeros"].as_array().unwrap().len(), 2);
        assert_eq!(
            json["segments"].as_array().unwrap().len(),
            path.breakpoints().len() - 1
        );
    }
}
