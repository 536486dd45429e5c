#![allow(dead_code)]

use rand::Rng;
use relay_dde::model::relay;
use relay_dde::Params;

/// Parameters with `a` in `[0.1, 10]`, `p` in `[0.1, 5]` and `p1 + p2 > 1`.
pub fn random_params<R: Rng>(rng: &mut R) -> Params {
    loop {
        let a1 = rng.random_range(0.1..10.0);
        let a2 = rng.random_range(0.1..10.0);
        let p1 = rng.random_range(0.1..5.0);
        let p2 = rng.random_range(0.1..5.0);
        if let Ok(p) = Params::new(a1, a2, p1, p2) {
            return p;
        }
    }
}

/// Nonzero value with magnitude in `[lo, hi]` and random sign.
pub fn random_signed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let v = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Explicit Euler for the sharp system on the grid `n * dt`, `dt = 1 / steps_per_delay`.
pub fn euler(params: &Params, h: f64, t_end: f64, steps_per_delay: usize) -> Vec<(f64, f64)> {
    let dt = 1.0 / steps_per_delay as f64;
    let n = (t_end / dt + 1e-9).floor() as usize;
    let mut xs = Vec::with_capacity(n + 1);
    xs.push(h);
    for i in 0..n {
        let t = i as f64 * dt;
        let delayed = if i >= steps_per_delay {
            xs[i - steps_per_delay]
        } else {
            h
        };
        let x = xs[i] + dt * params.coefficient(t) * relay(delayed);
        xs.push(x);
    }
    xs.into_iter()
        .enumerate()
        .map(|(i, x)| (i as f64 * dt, x))
        .collect()
}
