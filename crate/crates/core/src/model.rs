//! Equation ingredients: the two-level periodic coefficient `a(t)` and the
//! relay nonlinearity `f(x)`, either discontinuous (`delta = 0`) or smoothed
//! over a window of half-width `delta`.
//!
//! The delay is fixed at 1 and there is no damping term, so the equation is
//! `x'(t) = a(t) f(x(t - 1))`.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} must be a finite positive number, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("p1 + p2 must exceed the delay 1 (got p1 + p2 = {period})")]
    PeriodTooShort { period: f64 },
    #[error("delta must be finite and nonnegative, got {0}")]
    NegativeDelta(f64),
    #[error("delta must be below the delay 1, got {0}")]
    DeltaNotBelowDelay(f64),
    #[error("delta = {delta} too large: need 2*delta < min(p1, p2) = {min_dwell} and delta < 1")]
    DeltaTooLarge { delta: f64, min_dwell: f64 },
    #[error("unknown smoothing profile `{0}` (expected `affine` or `smooth-exp`)")]
    UnknownProfile(String),
    #[error("invalid config: {0}")]
    Config(String),
}

/// Coefficient parameters: `a(t) = a1` on `[0, p1)` and `a2` on `[p1, p1 + p2)`,
/// extended with period `T = p1 + p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    a1: f64,
    a2: f64,
    p1: f64,
    p2: f64,
}

impl Params {
    pub fn new(a1: f64, a2: f64, p1: f64, p2: f64) -> Result<Self, ModelError> {
        for (field, value) in [("a1", a1), ("a2", a2), ("p1", p1), ("p2", p2)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::NotPositive { field, value });
            }
        }
        let period = p1 + p2;
        if period <= 1.0 {
            return Err(ModelError::PeriodTooShort { period });
        }
        Ok(Self { a1, a2, p1, p2 })
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Coefficient period `T = p1 + p2`.
    pub fn period(&self) -> f64 {
        self.p1 + self.p2
    }

    pub fn min_coefficient(&self) -> f64 {
        self.a1.min(self.a2)
    }

    /// Discontinuous coefficient `A0(t)`, right-continuous at the switches.
    pub fn coefficient(&self, t: f64) -> f64 {
        if t.rem_euclid(self.period()) < self.p1 {
            self.a1
        } else {
            self.a2
        }
    }

    /// The parameter interchange `(a2, a1, p2, p1)`. `A0` of the result is
    /// `A0` of `self` shifted left by `p1`.
    pub fn dual(&self) -> Self {
        Self {
            a1: self.a2,
            a2: self.a1,
            p1: self.p2,
            p2: self.p1,
        }
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(a1={}, a2={}, p1={}, p2={})",
            self.a1, self.a2, self.p1, self.p2
        )
    }
}

/// Shape of the connection used inside a smoothing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Straight-line ramp between the two levels.
    #[default]
    Affine,
    /// Flat-ended exponential connection `exp(delta x / (x - delta)) - 1`.
    SmoothExp,
}

impl FromStr for Profile {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "affine" => Ok(Profile::Affine),
            "smooth-exp" | "smoothexp" | "smooth_exp" | "exp" => Ok(Profile::SmoothExp),
            _ => Err(ModelError::UnknownProfile(s.to_string())),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Affine => f.write_str("affine"),
            Profile::SmoothExp => f.write_str("smooth-exp"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Smoothing {
    delta: f64,
    profile: Profile,
}

impl Smoothing {
    /// The discontinuous pair `(f0, A0)`.
    pub const NONE: Smoothing = Smoothing {
        delta: 0.0,
        profile: Profile::Affine,
    };

    pub fn new(delta: f64, profile: Profile) -> Result<Self, ModelError> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(ModelError::NegativeDelta(delta));
        }
        if delta >= 1.0 {
            return Err(ModelError::DeltaNotBelowDelay(delta));
        }
        Ok(Self { delta, profile })
    }

    pub fn affine(delta: f64) -> Result<Self, ModelError> {
        Self::new(delta, Profile::Affine)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn is_discontinuous(&self) -> bool {
        self.delta == 0.0
    }

    /// Checks that the coefficient ramps do not overlap for these params.
    pub fn check_against(&self, params: &Params) -> Result<(), ModelError> {
        let min_dwell = params.p1().min(params.p2());
        if 2.0 * self.delta >= min_dwell || self.delta >= 1.0 {
            return Err(ModelError::DeltaTooLarge {
                delta: self.delta,
                min_dwell,
            });
        }
        Ok(())
    }

    /// Nonlinearity value: `-sign(x)` for `delta = 0`, otherwise the smoothed
    /// relay that equals `-sign(x)` outside `(-delta, delta)`.
    pub fn nonlinearity(&self, x: f64) -> f64 {
        if self.delta == 0.0 || x.abs() >= self.delta {
            return relay(x);
        }
        match self.profile {
            Profile::Affine => -x / self.delta,
            Profile::SmoothExp => {
                let s = x.abs();
                // exp(delta s / (s - delta)) - 1 runs from 0 at s = 0 to -1 at s = delta.
                let g = (self.delta * s / (s - self.delta)).exp() - 1.0;
                if x > 0.0 {
                    g
                } else {
                    -g
                }
            }
        }
    }

    /// `|f'(0)|` of the smoothed nonlinearity.
    pub fn slope_at_zero(&self) -> f64 {
        match self.profile {
            Profile::Affine => 1.0 / self.delta,
            Profile::SmoothExp => 1.0,
        }
    }

    /// Fraction of the way from the left level to the right level at offset
    /// `u` from a switch, for `|u| < delta`.
    fn blend(&self, u: f64) -> f64 {
        0.5 * (1.0 - self.nonlinearity(u))
    }
}

/// `-sign(x)` with the value 0 at the origin.
pub fn relay(x: f64) -> f64 {
    if x > 0.0 {
        -1.0
    } else if x < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// A validated `(Params, Smoothing)` pair with infallible evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    params: Params,
    smoothing: Smoothing,
}

impl Model {
    pub fn new(params: Params, smoothing: Smoothing) -> Result<Self, ModelError> {
        smoothing.check_against(&params)?;
        Ok(Self { params, smoothing })
    }

    pub fn discontinuous(params: Params) -> Self {
        Self {
            params,
            smoothing: Smoothing::NONE,
        }
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn smoothing(&self) -> &Smoothing {
        &self.smoothing
    }

    /// `A0(t)` for `delta = 0`, otherwise `A_delta(t)` with ramps centred on
    /// the switch times `kT` and `kT + p1`.
    pub fn coefficient(&self, t: f64) -> f64 {
        let p = &self.params;
        let delta = self.smoothing.delta;
        if delta == 0.0 {
            return p.coefficient(t);
        }
        let period = p.period();
        let r = t.rem_euclid(period);
        let (from, to, u) = if r < delta {
            (p.a2, p.a1, r)
        } else if r > period - delta {
            (p.a2, p.a1, r - period)
        } else if (r - p.p1).abs() < delta {
            (p.a1, p.a2, r - p.p1)
        } else if r < p.p1 {
            return p.a1;
        } else {
            return p.a2;
        };
        from + (to - from) * self.smoothing.blend(u)
    }

    pub fn nonlinearity(&self, x: f64) -> f64 {
        self.smoothing.nonlinearity(x)
    }

    /// Knot times of the coefficient inside `(t0, t1]`: the switch times for
    /// `delta = 0`, the ramp endpoints otherwise. Sorted ascending.
    pub fn coefficient_knots(&self, t0: f64, t1: f64) -> Vec<f64> {
        let p = &self.params;
        let period = p.period();
        let delta = self.smoothing.delta;
        let offsets: Vec<f64> = if delta == 0.0 {
            vec![0.0, p.p1]
        } else {
            vec![-delta, delta, p.p1 - delta, p.p1 + delta]
        };
        let first = (t0 / period).floor() as i64 - 1;
        let last = (t1 / period).floor() as i64 + 1;
        let mut knots = Vec::new();
        for k in first..=last {
            let base = k as f64 * period;
            for off in &offsets {
                let t = base + off;
                if t > t0 && t <= t1 {
                    knots.push(t);
                }
            }
        }
        knots.sort_by(f64::total_cmp);
        knots
    }
}

pub fn coefficient_value(
    t: f64,
    params: &Params,
    smoothing: &Smoothing,
) -> Result<f64, ModelError> {
    Ok(Model::new(*params, *smoothing)?.coefficient(t))
}

pub fn nonlinearity_value(x: f64, smoothing: &Smoothing) -> f64 {
    smoothing.nonlinearity(x)
}

/// Sufficient condition for all solutions to oscillate: `|f'(0)| min(a) > 1/e`.
/// Always true for the discontinuous relay.
pub fn oscillation_condition(params: &Params, smoothing: &Smoothing) -> bool {
    if smoothing.is_discontinuous() {
        return true;
    }
    smoothing.slope_at_zero() * params.min_coefficient() > 1.0 / E
}

/// Flat key-value model description, e.g. a TOML file with
/// `a1 = 1.0`, `a2 = 6.0`, `p1 = 3.0`, `p2 = 1.0`, `delta = 0.01`, `profile = "affine"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub a1: f64,
    pub a2: f64,
    pub p1: f64,
    pub p2: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub profile: Profile,
}

impl ModelConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }

    pub fn into_model(self) -> Result<Model, ModelError> {
        let params = Params::new(self.a1, self.a2, self.p1, self.p2)?;
        let smoothing = Smoothing::new(self.delta, self.profile)?;
        Model::new(params, smoothing)
    }
}
