//! Fixed-step integration of `x'(t) = a(t) f(x(t - 1))` for the smoothed
//! (and, for cross-checks, the sharp) coefficient and nonlinearity, plus the
//! corner-matching machinery used to compare smoothed and exact orbits.
//!
//! Delayed values come from cubic Hermite interpolation of the stored
//! `(value, derivative)` samples. The grid is uniform except that it is split
//! at every kink of the right-hand side: the coefficient ramp endpoints and one
//! delay after each time the solution crosses a kink level of `f`
//! (`0` for the relay, `±delta` for the ramps). Between nodes the right-hand
//! side is smooth, which keeps the step fourth-order.

use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::exact::{self, ConstantHistory, ExactError, PiecewisePath, Sign};
use crate::maps::{classify, Kind};
use crate::model::{relay, Model, ModelError, Params, Smoothing};

/// Largest step allowed for the sharp system.
pub const MAX_SHARP_STEP: f64 = 1e-3;
/// Minimum number of steps across a smoothing ramp of width `delta`.
pub const STEPS_PER_DELTA: f64 = 16.0;

const NODE_MERGE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("step {step} too large: limit is {limit}")]
    StepTooLarge { step: f64, limit: f64 },
    #[error("step and horizon must be finite and positive (step {step}, t_end {t_end})")]
    BadGrid { step: f64, t_end: f64 },
    #[error("state left the floating-point range at t = {0}")]
    NonFiniteState(f64),
    #[error("perturbation growth needs an unstable Type I orbit, classified as {0:?}")]
    NotUnstable(Kind),
    #[error("eps0 = {0} outside [1e-8, 1e-3]")]
    EpsOutOfRange(f64),
    #[error("perturbed orbit from h = {h} lost the two-zero shape within one period")]
    ShapeLost { h: f64 },
}

/// Default step: `min(delta / 16, 1 / 64)`, or `1 / 1024` for the sharp system.
pub fn default_step(delta: f64) -> f64 {
    if delta > 0.0 {
        (delta / STEPS_PER_DELTA).min(1.0 / 64.0)
    } else {
        1.0 / 1024.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    /// Right derivative `a(t) f(x(t - 1))`.
    pub dx: f64,
}

/// Grid solution on `[0, t_end]`; the history on `[-1, 0]` is the constant `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    history: f64,
    step: f64,
    samples: Vec<Sample>,
    /// Left derivative at each sample (equal to `dx` where the right-hand side is continuous).
    incoming: Vec<f64>,
    event_times: Vec<f64>,
}

impl DenseSolution {
    pub fn start_time(&self) -> f64 {
        0.0
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn history(&self) -> f64 {
        self.history
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Times where the uniform grid was split.
    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    fn interval(&self, t: f64) -> usize {
        let i = self.samples.partition_point(|s| s.t <= t);
        i.clamp(1, self.samples.len() - 1) - 1
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        hermite(a.t, a.x, a.dx, b.t, b.x, self.incoming[i + 1], t)
    }

    /// Interpolated value; the constant history before 0, `None` past the end.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(self.history);
        }
        if t > self.end_time() + NODE_MERGE || self.samples.len() < 2 {
            return None;
        }
        Some(self.hermite(self.interval(t), t).0)
    }

    pub fn derivative_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return Some(0.0);
        }
        if t > self.end_time() + NODE_MERGE || self.samples.len() < 2 {
            return None;
        }
        Some(self.hermite(self.interval(t), t).1)
    }

    /// Largest jump between left and right derivatives over samples in `[t0, t1]`.
    pub fn max_derivative_jump(&self, t0: f64, t1: f64) -> f64 {
        self.samples
            .iter()
            .zip(&self.incoming)
            .skip(1)
            .filter(|(s, _)| s.t >= t0 && s.t <= t1)
            .map(|(s, left)| (s.dx - left).abs())
            .fold(0.0, f64::max)
    }

    /// `t,x,dx` CSV keeping every `thin`-th sample and the last one.
    pub fn write_csv<W: io::Write>(&self, out: W, thin: usize) -> io::Result<()> {
        let thin = thin.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "dx"])?;
        let last = self.samples.len() - 1;
        for (i, s) in self.samples.iter().enumerate() {
            if i % thin == 0 || i == last {
                w.write_record([s.t.to_string(), s.x.to_string(), s.dx.to_string()])?;
            }
        }
        w.flush()
    }
}

fn hermite(t0: f64, x0: f64, d0: f64, t1: f64, x1: f64, d1: f64, t: f64) -> (f64, f64) {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let value = (2.0 * s3 - 3.0 * s2 + 1.0) * x0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * x1
        + (s3 - s2) * h * d1;
    let slope = (6.0 * s2 - 6.0 * s) * (x0 - x1) / h
        + (3.0 * s2 - 4.0 * s + 1.0) * d0
        + (3.0 * s2 - 2.0 * s) * d1;
    (value, slope)
}

/// Kink levels of `f`: where the delayed value crossing them makes the
/// right-hand side non-smooth.
fn kink_levels(smoothing: &Smoothing) -> Vec<f64> {
    use crate::model::Profile;
    let delta = smoothing.delta();
    if delta == 0.0 {
        vec![0.0]
    } else {
        match smoothing.profile() {
            Profile::Affine => vec![-delta, delta],
            Profile::SmoothExp => vec![-delta, 0.0, delta],
        }
    }
}

fn insert_sorted(queue: &mut Vec<f64>, t: f64) {
    let i = queue.partition_point(|&q| q < t);
    queue.insert(i, t);
}

/// Integrates from the constant history `h` on `[-1, 0]` up to `t_end`.
pub fn integrate(
    params: &Params,
    smoothing: &Smoothing,
    h: f64,
    t_end: f64,
    step: f64,
) -> Result<DenseSolution, NumericError> {
    let model = Model::new(*params, *smoothing)?;
    if !(step.is_finite() && step > 0.0 && t_end.is_finite() && t_end > 0.0 && h.is_finite()) {
        return Err(NumericError::BadGrid { step, t_end });
    }
    let delta = smoothing.delta();
    let limit = if delta > 0.0 {
        delta / STEPS_PER_DELTA
    } else {
        MAX_SHARP_STEP
    };
    if step > limit * (1.0 + 1e-12) {
        return Err(NumericError::StepTooLarge { step, limit });
    }

    let levels = kink_levels(smoothing);
    let mut sol = DenseSolution {
        history: h,
        step,
        samples: vec![Sample {
            t: 0.0,
            x: h,
            dx: 0.0,
        }],
        incoming: vec![0.0],
        event_times: Vec::new(),
    };
    let mut pending: Vec<f64> = Vec::new();
    let mut knots: Vec<f64> = Vec::new();
    let mut knots_until = 0.0;
    let period = params.period();

    let mut t = 0.0_f64;
    let mut x = h;
    while t < t_end - NODE_MERGE {
        if knots.is_empty() || knots_until <= t {
            knots = model.coefficient_knots(t, t + period);
            knots_until = t + period;
        }
        while knots.first().is_some_and(|&k| k <= t + NODE_MERGE) {
            knots.remove(0);
        }
        while pending.first().is_some_and(|&e| e <= t + NODE_MERGE) {
            pending.remove(0);
        }
        let grid_next = ((t + NODE_MERGE) / step).floor() * step + step;
        let knot = knots.first().copied().unwrap_or(f64::INFINITY);
        let delayed = pending.first().copied().unwrap_or(f64::INFINITY);
        let mut next = grid_next.min(t_end);
        for forced in [knot, delayed] {
            if forced < next - NODE_MERGE {
                next = forced;
                sol.event_times.push(forced);
            }
        }

        let dt = next - t;
        let mid = t + 0.5 * dt;
        // The right-hand side does not involve x(t), so the classical
        // four-stage step reduces to Simpson's rule on g(t) = a(t) f(x(t - 1)).
        let (g0, gm, g1) = if smoothing.is_discontinuous() {
            let a = params.coefficient(mid);
            let f = relay(
                sol.value_at(mid - 1.0)
                    .expect("delayed time inside history"),
            );
            (a * f, a * f, a * f)
        } else {
            let g = |s: f64| {
                model.coefficient(s)
                    * model
                        .nonlinearity(sol.value_at(s - 1.0).expect("delayed time inside history"))
            };
            (g(t), g(mid), g(next))
        };
        let x_next = x + dt / 6.0 * (g0 + 4.0 * gm + g1);
        if !x_next.is_finite() {
            return Err(NumericError::NonFiniteState(next));
        }
        let last = sol.samples.len() - 1;
        sol.samples[last].dx = g0;
        if last == 0 {
            sol.incoming[0] = g0;
        }
        sol.samples.push(Sample {
            t: next,
            x: x_next,
            dx: g1,
        });
        sol.incoming.push(g1);

        // level crossings on the new interval schedule a node one delay later
        let i = sol.samples.len() - 2;
        for &level in &levels {
            let g_a = x - level;
            let g_b = x_next - level;
            if g_a == 0.0 || (g_b != 0.0 && Sign::of(g_a) == Sign::of(g_b)) {
                continue;
            }
            let root = if g_b == 0.0 {
                next
            } else {
                bisect(|s| sol.hermite(i, s).0 - level, t, next)
            };
            insert_sorted(&mut pending, root + 1.0);
        }

        t = next;
        x = x_next;
    }
    Ok(sol)
}

fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let s_lo = Sign::of(g(lo));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v == 0.0 {
            return mid;
        }
        if Sign::of(v) == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sup-norm difference between runs at `step` and `step / 2`, evaluated on
/// the coarse run's samples.
pub fn step_halving_error(
    params: &Params,
    smoothing: &Smoothing,
    h: f64,
    t_end: f64,
    step: f64,
) -> Result<f64, NumericError> {
    let coarse = integrate(params, smoothing, h, t_end, step)?;
    let fine = integrate(params, smoothing, h, t_end, 0.5 * step)?;
    Ok(coarse
        .samples()
        .iter()
        .map(|s| (s.x - fine.value_at(s.t).unwrap()).abs())
        .fold(0.0, f64::max))
}

/// Parabola `P(t) = A (t - p1)^2 + B (t - p1) + C` replacing a corner of slope
/// `a1 -> a2` at `(p1, x1)` on `[p1 - eps, p1 + eps]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParabolicCorner {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ParabolicCorner {
    /// Value at `offset = t - p1`.
    pub fn value(&self, offset: f64) -> f64 {
        (self.a * offset + self.b) * offset + self.c
    }

    pub fn slope(&self, offset: f64) -> f64 {
        2.0 * self.a * offset + self.b
    }
}

pub fn parabola_coefficients(a1: f64, a2: f64, eps: f64, x1: f64) -> ParabolicCorner {
    ParabolicCorner {
        a: (a2 - a1) / (4.0 * eps),
        b: 0.5 * (a1 + a2),
        c: 0.25 * (a2 - a1) * eps + x1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CornerKind {
    /// Coefficient switch at `kT` or `kT + p1`.
    Switch,
    /// One delay after a zero of the exact solution.
    DelayedZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerWindow {
    pub kind: CornerKind,
    pub center: f64,
    pub half_width: f64,
    /// Largest deviation measured inside this window.
    pub max_dev: f64,
}

impl CornerWindow {
    fn contains(&self, t: f64) -> bool {
        (t - self.center).abs() < self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub delta: f64,
    pub step: f64,
    /// Initial value used for the smoothed run.
    pub smoothed_h: f64,
    pub max_dev_outside_corners: f64,
    pub max_dev_overall: f64,
    pub corner_windows: Vec<CornerWindow>,
}

/// Initial value for the smoothed system that reproduces the exact solution
/// once the coefficient ramp around `t = 0` is over: the ramp integrates to
/// `delta (3 a1 + a2) / 4` on `[0, delta]` instead of `a1 delta`.
pub fn matched_initial_value(params: &Params, delta: f64, h: f64) -> f64 {
    h + relay(h) * delta * (params.a1() - params.a2()) / 4.0
}

/// Compares the smoothed solution (affine ramps, default step) with the exact
/// one on `[0, t_end]`. Corner windows have half-width `delta / min(a1, a2)`
/// around delayed zeros and `max(delta, delta / min(a1, a2))` around switches.
pub fn compare_exact_smoothed(
    params: &Params,
    delta: f64,
    h: f64,
    t_end: f64,
) -> Result<ComparisonReport, NumericError> {
    compare_exact_smoothed_with_step(params, delta, h, t_end, default_step(delta))
}

pub fn compare_exact_smoothed_with_step(
    params: &Params,
    delta: f64,
    h: f64,
    t_end: f64,
    step: f64,
) -> Result<ComparisonReport, NumericError> {
    let smoothing = Smoothing::affine(delta)?;
    Model::new(*params, smoothing)?;
    let exact = exact::propagate(params, ConstantHistory::new(h)?, t_end)?;
    let smoothed_h = matched_initial_value(params, delta, h);
    let smoothed = integrate(params, &smoothing, smoothed_h, t_end, step)?;

    let eps = delta / params.min_coefficient();
    let mut windows = Vec::new();
    if delta > 0.0 {
        let period = params.period();
        let mut k = 0.0;
        while k * period <= t_end {
            for s in [k * period, k * period + params.p1()] {
                if s <= t_end {
                    windows.push(CornerWindow {
                        kind: CornerKind::Switch,
                        center: s,
                        half_width: eps.max(delta),
                        max_dev: 0.0,
                    });
                }
            }
            k += 1.0;
        }
        for z in exact.zeros() {
            if z + 1.0 <= t_end + eps {
                windows.push(CornerWindow {
                    kind: CornerKind::DelayedZero,
                    center: z + 1.0,
                    half_width: eps,
                    max_dev: 0.0,
                });
            }
        }
        windows.sort_by(|a, b| a.center.total_cmp(&b.center));
    }

    let times = smoothed
        .samples()
        .iter()
        .map(|s| s.t)
        .chain(exact.breakpoints().iter().map(|b| b.t));
    let mut outside: f64 = 0.0;
    let mut overall: f64 = 0.0;
    for t in times {
        let dev = (smoothed.value_at(t).unwrap() - exact.value_at(t).unwrap()).abs();
        overall = overall.max(dev);
        let mut inside = false;
        for w in windows.iter_mut().filter(|w| w.contains(t)) {
            w.max_dev = w.max_dev.max(dev);
            inside = true;
        }
        if !inside {
            outside = outside.max(dev);
        }
    }
    Ok(ComparisonReport {
        delta,
        step,
        smoothed_h,
        max_dev_outside_corners: outside,
        max_dev_overall: overall,
        corner_windows: windows,
    })
}

/// One-period growth of a perturbation of an unstable Type I orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthMeasurement {
    /// `(x(T) - h*) / eps0` from `h* + eps0`.
    pub plus: f64,
    /// `(x(T) - h*) / (-eps0)` from `h* - eps0`.
    pub minus: f64,
}

impl GrowthMeasurement {
    pub fn multiplier(&self) -> f64 {
        0.5 * (self.plus + self.minus)
    }
}

pub fn perturbation_growth(
    params: &Params,
    h_star: f64,
    eps0: f64,
) -> Result<GrowthMeasurement, NumericError> {
    let class = classify(params);
    if class.kind != Kind::UnstableT {
        return Err(NumericError::NotUnstable(class.kind));
    }
    if !(1e-8..=1e-3).contains(&eps0) {
        return Err(NumericError::EpsOutOfRange(eps0));
    }
    let period = params.period();
    let measure = |offset: f64| -> Result<f64, NumericError> {
        let h = h_star + offset;
        let path = exact::propagate(params, ConstantHistory::new(h)?, period)?;
        let sig = path.shape_signature(0.0, period);
        if sig.zero_count != 2 || sig.start_sign != Sign::Negative || sig.end_sign != Sign::Negative
        {
            return Err(NumericError::ShapeLost { h });
        }
        Ok((path.value_at(period).unwrap() - h_star) / offset)
    };
    Ok(GrowthMeasurement {
        plus: measure(eps0)?,
        minus: measure(-eps0)?,
    })
}

/// `max |x(t + lag) - x(t)|` over the samples with `t` in `[t0, t1]`.
pub fn periodicity_residual(sol: &DenseSolution, lag: f64, t0: f64, t1: f64) -> f64 {
    sol.samples()
        .iter()
        .filter(|s| s.t >= t0 && s.t <= t1 && s.t + lag <= sol.end_time())
        .map(|s| (sol.value_at(s.t + lag).unwrap() - s.x).abs())
        .fold(0.0, f64::max)
}

/// Same residual for an exact path, at its breakpoints.
pub fn path_periodicity_residual(path: &PiecewisePath, lag: f64, t0: f64, t1: f64) -> f64 {
    path.breakpoints()
        .iter()
        .map(|b| b.t)
        .chain(path.breakpoints().iter().map(|b| b.t - lag))
        .filter(|&t| t >= t0 && t <= t1 && t + lag <= path.end_time())
        .map(|t| (path.value_at(t + lag).unwrap() - path.value_at(t).unwrap()).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::propagate;

    fn p(a1: f64, a2: f64, p1: f64, p2: f64) -> Params {
        Params::new(a1, a2, p1, p2).unwrap()
    }

    #[test]
    fn zero_history_stays_zero() {
        let params = p(1.0, 0.25, 2.5, 1.5);
        let sol = integrate(
            &params,
            &Smoothing::affine(0.05).unwrap(),
            0.0,
            10.0,
            default_step(0.05),
        )
        .unwrap();
        assert!(sol.samples().iter().all(|s| s.x.abs() <= 1e-12));
    }

    #[test]
    fn sharp_integration_matches_propagator() {
        let params = p(1.0, 6.0, 3.0, 1.0);
        let sol = integrate(&params, &Smoothing::NONE, -0.7, 12.0, 1e-3).unwrap();
        let path = propagate(&params, ConstantHistory::new(-0.7).unwrap(), 12.0).unwrap();
        let err = sol
            .samples()
            .iter()
            .map(|s| (s.x - path.value_at(s.t).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn step_limits() {
        let params = p(1.0, 0.25, 2.5, 1.5);
        let smooth = Smoothing::affine(0.016).unwrap();
        assert!(matches!(
            integrate(&params, &smooth, -0.25, 1.0, 0.002),
            Err(NumericError::StepTooLarge { .. })
        ));
        assert!(integrate(&params, &smooth, -0.25, 1.0, 0.001).is_ok());
        assert!(matches!(
            integrate(&params, &Smoothing::NONE, -0.25, 1.0, 0.01),
            Err(NumericError::StepTooLarge { .. })
        ));
        assert!(matches!(
            integrate(&params, &smooth, -0.25, -1.0, 0.001),
            Err(NumericError::BadGrid { .. })
        ));
    }

    #[test]
    fn grid_is_split_at_ramp_endpoints() {
        let params = p(1.0, 6.0, 3.0, 1.0);
        let sol = integrate(
            &params,
            &Smoothing::affine(0.1).unwrap(),
            -0.5,
            4.0,
            1.0 / 256.0,
        )
        .unwrap();
        for knot in [0.1, 2.9, 3.1, 3.9] {
            assert!(
                sol.samples().iter().any(|s| (s.t - knot).abs() < 1e-12),
                "no node at {knot}"
            );
        }
    }

    #[test]
    fn derivative_samples_match_right_hand_side() {
        let params = p(6.0, 1.0, 1.0, 3.0);
        let smooth = Smoothing::affine(0.05).unwrap();
        let model = Model::new(params, smooth).unwrap();
        let sol = integrate(&params, &smooth, -1.8, 16.0, default_step(0.05)).unwrap();
        for s in sol.samples().iter().step_by(37) {
            let rhs = model.coefficient(s.t) * model.nonlinearity(sol.value_at(s.t - 1.0).unwrap());
            assert!((s.dx - rhs).abs() < 1e-9, "t = {}", s.t);
        }
    }

    #[test]
    fn parabola_examples() {
        let c = parabola_coefficients(2.0, 2.0, 0.3, 1.5);
        assert_eq!((c.a, c.b, c.c), (0.0, 2.0, 1.5));
        let c = parabola_coefficients(1.0, 6.0, 0.1, 2.0);
        assert!((c.a - 12.5).abs() < 1e-12);
        assert_eq!(c.b, 3.5);
        assert!((c.c - 2.125).abs() < 1e-15);
        assert!((c.value(0.1) - 2.6).abs() < 1e-12);
        assert!((c.value(-0.1) - (2.0 - 0.1)).abs() < 1e-12);
        assert!((c.slope(-0.1) - 1.0).abs() < 1e-12);
        assert!((c.slope(0.1) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn perturbation_growth_examples() {
        let g = perturbation_growth(&p(1.0, 6.0, 3.0, 1.0), -0.5, 1e-6).unwrap();
        assert!((g.multiplier() - 11.0).abs() < 11.0 * 1e-4);
        let g = perturbation_growth(&p(1.0, 5.0, 4.0, 1.0), -1.625, 1e-6).unwrap();
        assert!((g.plus - 9.0).abs() < 9.0 * 1e-4 && (g.minus - 9.0).abs() < 9.0 * 1e-4);
        assert!(matches!(
            perturbation_growth(&p(4.0, 1.0, 3.5, 2.0), -2.0, 1e-6),
            Err(NumericError::NotUnstable(Kind::StableT))
        ));
        assert!(matches!(
            perturbation_growth(&p(1.0, 6.0, 3.0, 1.0), -0.5, 1e-2),
            Err(NumericError::EpsOutOfRange(_))
        ));
    }

    #[test]
    fn sharp_comparison_is_at_integrator_level() {
        let params = p(1.0, 0.25, 2.5, 1.5);
        let r = compare_exact_smoothed_with_step(&params, 0.0, -0.25, 8.0, 1e-3).unwrap();
        assert!(r.max_dev_overall < 1e-9, "{r:?}");
        assert!(r.corner_windows.is_empty());
    }

    #[test]
    fn csv_thinning() {
        let params = p(1.0, 0.25, 2.5, 1.5);
        let sol = integrate(
            &params,
            &Smoothing::affine(0.05).unwrap(),
            -0.25,
            1.0,
            1.0 / 320.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf, 10).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows = text.lines().count() - 1;
        assert!(text.starts_with("t,x,dx\n0,-0.25,"));
        assert_eq!(
            rows,
            (sol.samples().len() - 1) / 10
                + 1
                + usize::from(!(sol.samples().len() - 1).is_multiple_of(10))
        );
    }
}
