//! Closed-form return maps of the exact system and the stability verdicts
//! they imply.
//!
//! Over one coefficient period a Type I orbit (two zeros per period) obeys
//! `x(T) = G(h) = m h - b`. A Type II orbit (one zero per period) obeys
//! `x(T) = F1(h) = k h + d` from a negative start and `F2(h) = k h - d` from a
//! positive one; two periods compose to the through map `F0 = F2 . F1`.
//! Every verdict from these formulas is checked against the exact propagator
//! because the formulas silently assume the orbit shape.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::{propagate, ConstantHistory, PiecewisePath, Sign, VALUE_REL_TOL};
use crate::model::Params;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("a1 = a2 gives m = 1: the Type I map has no unique fixed point")]
    MIsOne,
    #[error("the relay map is discontinuous at h = 0")]
    HZero,
    #[error("no 2-cycle: need |k| < 1 and d > 0 (k = {k}, d = {d})")]
    NoCycle { k: f64, d: f64 },
    #[error("basin undefined outside |k| < 1, d > 0 (k = {k}, d = {d})")]
    NotApplicable { k: f64, d: f64 },
}

/// `h -> slope * h + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineMap1D {
    pub slope: f64,
    pub intercept: f64,
}

impl AffineMap1D {
    pub fn apply(&self, h: f64) -> f64 {
        self.slope * h + self.intercept
    }

    pub fn then(&self, next: &AffineMap1D) -> AffineMap1D {
        AffineMap1D {
            slope: next.slope * self.slope,
            intercept: next.slope * self.intercept + next.intercept,
        }
    }
}

/// Coefficients of `G(h) = m h - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Type1Coefficients {
    pub m: f64,
    pub b: f64,
}

impl Type1Coefficients {
    pub fn of(params: &Params) -> Self {
        let (a1, a2, p1, p2) = (params.a1(), params.a2(), params.p1(), params.p2());
        Self {
            m: 2.0 * a2 / a1 - 1.0,
            b: a1 * (p1 - 2.0) + a2 * (6.0 - (2.0 * p1 + p2)),
        }
    }

    pub fn map(&self) -> AffineMap1D {
        AffineMap1D {
            slope: self.m,
            intercept: -self.b,
        }
    }
}

/// Coefficients shared by `F1(h) = k h + d` and `F2(h) = k h - d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Type2Coefficients {
    pub k: f64,
    pub d: f64,
}

impl Type2Coefficients {
    pub fn of(params: &Params) -> Self {
        let (a1, a2, p1, p2) = (params.a1(), params.a2(), params.p1(), params.p2());
        Self {
            k: 1.0 - 2.0 * a2 / a1,
            d: a1 * p1 + a2 * (2.0 - 2.0 * p1 - p2),
        }
    }

    pub fn f1(&self) -> AffineMap1D {
        AffineMap1D {
            slope: self.k,
            intercept: self.d,
        }
    }

    pub fn f2(&self) -> AffineMap1D {
        AffineMap1D {
            slope: self.k,
            intercept: -self.d,
        }
    }

    /// `F0(h) = k^2 h + (k - 1) d`.
    pub fn through_map(&self) -> AffineMap1D {
        AffineMap1D {
            slope: self.k * self.k,
            intercept: (self.k - 1.0) * self.d,
        }
    }

    pub fn apply(&self, h: f64) -> Result<f64, MapError> {
        apply_f(h, self.k, self.d)
    }
}

pub fn type1_map(params: &Params) -> AffineMap1D {
    Type1Coefficients::of(params).map()
}

/// Fixed point `h* = b / (m - 1)` of `G`.
pub fn type1_fixed_point(params: &Params) -> Result<f64, MapError> {
    let Type1Coefficients { m, b } = Type1Coefficients::of(params);
    if params.a1() == params.a2() {
        return Err(MapError::MIsOne);
    }
    Ok(b / (m - 1.0))
}

/// `(F1, F2)`.
pub fn type2_map(params: &Params) -> (AffineMap1D, AffineMap1D) {
    let c = Type2Coefficients::of(params);
    (c.f1(), c.f2())
}

/// The odd piecewise map `F`: `k h + d` for `h < 0`, `k h - d` for `h > 0`.
pub fn apply_f(h: f64, k: f64, d: f64) -> Result<f64, MapError> {
    if h < 0.0 {
        Ok(k * h + d)
    } else if h > 0.0 {
        Ok(k * h - d)
    } else {
        Err(MapError::HZero)
    }
}

/// The 2-cycle `{h*, -h*}` of `F`, `h* = -d / (k + 1) < 0`.
pub fn type2_two_cycle(params: &Params) -> Result<(f64, f64), MapError> {
    let Type2Coefficients { k, d } = Type2Coefficients::of(params);
    if !(k.abs() < 1.0 && d > 0.0) {
        return Err(MapError::NoCycle { k, d });
    }
    let h = -d / (k + 1.0);
    Ok((h, -h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Basin {
    /// Every `h != 0`.
    AllNonzero,
    /// `0 < |h| < radius`.
    Interval { radius: f64 },
}

impl Basin {
    pub fn contains(&self, h: f64) -> bool {
        match *self {
            Basin::AllNonzero => h != 0.0,
            Basin::Interval { radius } => h != 0.0 && h.abs() < radius,
        }
    }
}

pub fn basin(params: &Params) -> Result<Basin, MapError> {
    let Type2Coefficients { k, d } = Type2Coefficients::of(params);
    if !(k.abs() < 1.0 && d > 0.0) {
        return Err(MapError::NotApplicable { k, d });
    }
    if k >= 0.0 {
        Ok(Basin::AllNonzero)
    } else {
        Ok(Basin::Interval {
            radius: d / k.abs(),
        })
    }
}

pub fn dual_params(params: &Params) -> Params {
    params.dual()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    StableT,
    UnstableT,
    Stable2T,
    Diverges2T,
    ShapeInvalid,
}

/// Initial value of a periodic orbit: one point for period `T`, the 2-cycle
/// for period `2T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HStar {
    Single(f64),
    Pair(f64, f64),
}

impl HStar {
    /// The negative representative.
    pub fn value(&self) -> f64 {
        match *self {
            HStar::Single(h) | HStar::Pair(h, _) => h,
        }
    }
}

impl Serialize for HStar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            HStar::Single(h) => s.serialize_f64(h),
            HStar::Pair(a, b) => [a, b].serialize(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shape {
    TypeI,
    TypeII,
}

/// Verdict of one closed-form branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub shape: Shape,
    pub kind: Kind,
    pub h_star: Option<HStar>,
    pub period: f64,
    /// The exact propagator reproduced the orbit from `h_star`.
    pub validated: bool,
    /// A defining inequality holds with equality (`m = 1`, `k = -1`, `b = 0`, `d = 0`).
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub kind: Kind,
    pub h_star: Option<HStar>,
    pub period: f64,
    pub m: f64,
    pub b: f64,
    pub k: f64,
    pub d: f64,
    pub validated: bool,
    pub boundary: bool,
    /// Both branches, Type I first.
    pub verdicts: Vec<Verdict>,
}

impl Classification {
    pub fn has(&self, kind: Kind) -> bool {
        self.verdicts.iter().any(|v| v.kind == kind && v.validated)
    }

    pub fn verdict(&self, shape: Shape) -> &Verdict {
        self.verdicts
            .iter()
            .find(|v| v.shape == shape)
            .expect("both shapes are always present")
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_REL_TOL * b.abs().max(1.0)
}

/// Propagates a Type I candidate over one period and checks the shape.
pub fn validate_type1(params: &Params, h: f64) -> bool {
    let period = params.period();
    let Ok(history) = ConstantHistory::new(h) else {
        return false;
    };
    let Ok(path) = propagate(params, history, period) else {
        return false;
    };
    let sig = path.shape_signature(0.0, period);
    sig.zero_count == 2
        && sig.start_sign == Sign::Negative
        && sig.end_sign == Sign::Negative
        && path.is_slowly_oscillating()
        && close(path.value_at(period).unwrap(), h)
}

/// Propagates a Type II candidate over two periods and checks the shape.
pub fn validate_type2(params: &Params, h: f64) -> bool {
    let period = params.period();
    let Ok(history) = ConstantHistory::new(h) else {
        return false;
    };
    let Ok(path) = propagate(params, history, 2.0 * period) else {
        return false;
    };
    type2_shape_holds(&path, period, h)
}

fn type2_shape_holds(path: &PiecewisePath, period: f64, h: f64) -> bool {
    let first = path.shape_signature(0.0, period);
    let both = path.shape_signature(0.0, 2.0 * period);
    first.zero_count == 1
        && first.start_sign == Sign::Negative
        && first.end_sign == Sign::Positive
        && both.zero_count == 2
        && both.end_sign == Sign::Negative
        && path.is_slowly_oscillating()
        && close(path.value_at(period).unwrap(), -h)
        && close(path.value_at(2.0 * period).unwrap(), h)
}

fn type1_verdict(params: &Params, c: Type1Coefficients) -> Verdict {
    let period = params.period();
    let boundary = c.m == 1.0 || c.b == 0.0;
    let invalid = Verdict {
        shape: Shape::TypeI,
        kind: Kind::ShapeInvalid,
        h_star: None,
        period,
        validated: false,
        boundary,
    };
    if boundary {
        return invalid;
    }
    let kind = if c.m.abs() < 1.0 && c.b > 0.0 {
        Kind::StableT
    } else if c.m > 1.0 && c.b < 0.0 {
        Kind::UnstableT
    } else {
        return invalid;
    };
    let h = c.b / (c.m - 1.0);
    if h >= 0.0 || !validate_type1(params, h) {
        return Verdict {
            h_star: Some(HStar::Single(h)),
            ..invalid
        };
    }
    Verdict {
        kind,
        h_star: Some(HStar::Single(h)),
        validated: true,
        ..invalid
    }
}

fn type2_verdict(params: &Params, c: Type2Coefficients) -> Verdict {
    let period = 2.0 * params.period();
    let boundary = c.k == -1.0 || c.d == 0.0;
    let invalid = Verdict {
        shape: Shape::TypeII,
        kind: Kind::ShapeInvalid,
        h_star: None,
        period,
        validated: false,
        boundary,
    };
    if boundary {
        return invalid;
    }
    if c.k < -1.0 {
        // no 2-cycle exists, there is nothing to propagate
        return Verdict {
            kind: Kind::Diverges2T,
            ..invalid
        };
    }
    if c.d <= 0.0 {
        return invalid;
    }
    let h = -c.d / (c.k + 1.0);
    let h_star = Some(HStar::Pair(h, -h));
    if !validate_type2(params, h) {
        return Verdict { h_star, ..invalid };
    }
    Verdict {
        kind: Kind::Stable2T,
        h_star,
        validated: true,
        ..invalid
    }
}

/// Applies both closed-form branches and validates them by exact propagation.
/// The headline kind is the first validated verdict (Type I before Type II),
/// then `Diverges2T` when `k < -1`, else `ShapeInvalid`.
pub fn classify(params: &Params) -> Classification {
    let c1 = Type1Coefficients::of(params);
    let c2 = Type2Coefficients::of(params);
    let verdicts = vec![type1_verdict(params, c1), type2_verdict(params, c2)];
    let headline = verdicts
        .iter()
        .find(|v| v.validated)
        .or_else(|| verdicts.iter().find(|v| v.kind == Kind::Diverges2T))
        .copied()
        .unwrap_or_else(|| Verdict {
            boundary: verdicts.iter().any(|v| v.boundary),
            ..verdicts[0]
        });
    Classification {
        kind: headline.kind,
        h_star: headline.h_star,
        period: headline.period,
        m: c1.m,
        b: c1.b,
        k: c2.k,
        d: c2.d,
        validated: headline.validated,
        boundary: headline.boundary,
        verdicts,
    }
}
