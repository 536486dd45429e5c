//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use relay_dde::analysis::{
    coexistence_check, reproduce_tables, smoothing_convergence, Status, TableId,
};
use relay_dde::maps::{
    apply_f, basin, dual_params, type2_two_cycle, Basin, Type1Coefficients, Type2Coefficients,
};
use relay_dde::model::{nonlinearity_value, relay};
use relay_dde::numeric::{integrate, perturbation_growth};
use relay_dde::{classify, propagate, ConstantHistory, Kind, Params, Profile, Smoothing};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join("; ")
    }
}

fn p(a1: f64, a2: f64, p1: f64, p2: f64) -> Params {
    Params::new(a1, a2, p1, p2).unwrap()
}

fn table_regression() -> Outcome {
    let start = Instant::now();
    let outcomes = reproduce_tables();
    let elapsed = start.elapsed();
    let bad: Vec<String> = outcomes
        .iter()
        .filter(|o| !(o.value_ok && o.period_ok))
        .map(|o| {
            let computed = o
                .h_star
                .map_or_else(|| "none".into(), |h| format!("{h:.4}"));
            format!(
                "{}#{} printed {} computed {}",
                o.row.table, o.row.row, o.row.h_star_expected, computed
            )
        })
        .collect();
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        bad.is_empty() && fast,
        format!(
            "{}/{} rows match printed h* and period in {:.0?}; mismatches: {}",
            outcomes.len() - bad.len(),
            outcomes.len(),
            elapsed,
            list(&bad)
        ),
    )
}

fn propagator_oracle() -> Outcome {
    let start = Instant::now();
    let outcomes = reproduce_tables();
    let elapsed = start.elapsed();
    let bad: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.validated)
        .map(|o| format!("{}#{} {}", o.row.table, o.row.row, o.row.params))
        .collect();
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        bad.is_empty() && fast,
        format!(
            "{}/{} rows close their orbit within 1e-9 with the table's shape in {:.0?}; failing: {}",
            outcomes.len() - bad.len(),
            outcomes.len(),
            elapsed,
            list(&bad)
        ),
    )
}

fn coexistence() -> Outcome {
    let params = p(1.0, 6.0, 3.0, 1.0);
    let class = classify(&params);
    let dual = dual_params(&params);
    let dual_class = classify(&dual);
    let unstable_ok = class.kind == Kind::UnstableT
        && class
            .h_star
            .is_some_and(|h| (h.value() + 0.5).abs() < 1e-12)
        && (class.m - 11.0).abs() < 1e-12;
    let dual_ok = dual == p(6.0, 1.0, 1.0, 3.0)
        && dual_class.kind == Kind::Stable2T
        && dual_class
            .h_star
            .is_some_and(|h| (h.value() + 1.8).abs() < 1e-12);
    let (pair_ok, detail) = match coexistence_check(&params) {
        Ok(r) => {
            let periods: Vec<String> = r
                .attraction
                .iter()
                .map(|a| {
                    format!(
                        "{:+.4} -> {:?} periods of 2T",
                        a.start, a.periods_to_threshold
                    )
                })
                .collect();
            (
                true,
                format!("shift gap {:.1e}; {}", r.shift_distance, periods.join(", ")),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    outcome(
        unstable_ok && dual_ok && pair_ok,
        format!(
            "classify {:?} m={} / dual {:?}; {detail}",
            class.kind, class.m, dual_class.kind
        ),
    )
}

fn perturbation_multiplier() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for o in reproduce_tables()
        .into_iter()
        .filter(|o| matches!(o.row.table, TableId::T2 | TableId::T4))
    {
        checked += 1;
        let params = o.row.params;
        let m = Type1Coefficients::of(&params).m;
        let Some(h) = o.h_star else {
            bad.push(format!("{}#{} no fixed point", o.row.table, o.row.row));
            continue;
        };
        match perturbation_growth(&params, h, 1e-6) {
            Ok(g)
                if (g.plus - m).abs() <= 1e-4 * m.abs()
                    && (g.minus - m).abs() <= 1e-4 * m.abs() => {}
            Ok(g) => bad.push(format!(
                "{}#{} m={m:.4} measured {:.4}/{:.4}",
                o.row.table, o.row.row, g.plus, g.minus
            )),
            Err(e) => bad.push(format!("{}#{} {e}", o.row.table, o.row.row)),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{}/{checked} rows grow by m; failing: {}",
            checked - bad.len(),
            list(&bad)
        ),
    )
}

/// Iterates `F` from `h` until within `1e-10` (relative) of the 2-cycle and
/// returns the last two-step error ratio measured while the error exceeded
/// `1e-7` (relative).
fn empirical_ratio(h0: f64, k: f64, d: f64, h_star: f64) -> Option<f64> {
    let scale = h_star.abs().max(1.0);
    let err = |h: f64| (h - h.signum() * h_star.abs()).abs();
    let mut h = h0;
    let mut history = vec![err(h)];
    for _ in 0..200_000 {
        h = apply_f(h, k, d).ok()?;
        history.push(err(h));
        if err(h) <= 1e-10 * scale {
            break;
        }
    }
    if err(h) > 1e-10 * scale {
        return None;
    }
    let n = history.len();
    (0..n.saturating_sub(2))
        .rev()
        .find(|&i| history[i] > 1e-7 * scale)
        .map(|i| history[i + 2] / history[i])
        .or(Some(k * k))
}

fn map_dynamics() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut range_bad = 0;
    let (mut contracting, mut contraction_bad) = (0, Vec::new());
    let (mut expanding, mut divergence_bad, mut worst) = (0, 0, f64::INFINITY);
    for _ in 0..1000 {
        let params = common::random_params(&mut rng);
        let Type1Coefficients { m, .. } = Type1Coefficients::of(&params);
        let Type2Coefficients { k, d } = Type2Coefficients::of(&params);
        if !(m > -1.0 && k < 1.0) {
            range_bad += 1;
        }
        if k.abs() < 1.0 && d > 0.0 {
            contracting += 1;
            let (h_star, _) = type2_two_cycle(&params).unwrap();
            let radius = match basin(&params).unwrap() {
                Basin::AllNonzero => 10.0 * h_star.abs().max(1.0),
                Basin::Interval { radius } => radius,
            };
            let failures = (0..100)
                .filter(|_| {
                    let h = common::random_signed(&mut rng, 1e-6 * radius, radius * (1.0 - 1e-9));
                    !empirical_ratio(h, k, d, h_star).is_some_and(|r| (r - k * k).abs() <= 1e-3)
                })
                .count();
            if failures > 0 {
                contraction_bad.push(format!("{params}: {failures}/100"));
            }
        }
        if k < -1.0 {
            expanding += 1;
            let h = common::random_signed(&mut rng, 1.0, 10.0);
            let mut x = h;
            for _ in 0..8 {
                x = apply_f(x, k, d).unwrap();
            }
            let growth = x.abs() / h.abs();
            worst = worst.min(growth);
            if growth <= 1e3 {
                divergence_bad += 1;
            }
        }
    }
    outcome(
        range_bad == 0 && contraction_bad.is_empty() && divergence_bad == 0,
        format!(
            "range violations {range_bad}/1000; contraction failures {}/{contracting} ({}); \
             |F^8(h)| <= 1e3 |h| for {divergence_bad}/{expanding} expanding sets (smallest growth {worst:.3})",
            contraction_bad.len(),
            list(&contraction_bad)
        ),
    )
}

fn smoothing_persistence() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for (params, h) in [
        (p(1.0, 0.25, 2.5, 1.5), -0.25),
        (p(6.0, 1.0, 1.0, 3.0), -1.8),
    ] {
        match smoothing_convergence(&params, h, &[0.05, 0.025, 0.0125]) {
            Ok(r) => {
                let outside_ok = r
                    .rows
                    .iter()
                    .all(|row| row.max_dev_outside_corners <= 10.0 * row.integrator_error);
                let residual_ok = r.rows.iter().all(|row| row.residual <= 1e-3);
                pass &= outside_ok && residual_ok && r.monotone;
                let rows: Vec<String> = r
                    .rows
                    .iter()
                    .map(|row| {
                        format!(
                            "d={} out {:.1e} (int {:.1e}) overall {:.2e} res {:.1e}",
                            row.delta,
                            row.max_dev_outside_corners,
                            row.integrator_error,
                            row.max_dev_overall,
                            row.residual
                        )
                    })
                    .collect();
                notes.push(format!(
                    "{params}: {} monotone={}",
                    rows.join(", "),
                    r.monotone
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{params}: {e}"));
            }
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    outcome(pass, format!("{} in {:.1?}", notes.join(" | "), elapsed))
}

fn euler_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let params = common::random_params(&mut rng);
        let h = common::random_signed(&mut rng, 0.1, 2.0);
        let t_end = 2.0 * params.period();
        let err = match propagate(&params, ConstantHistory::new(h).unwrap(), t_end) {
            Ok(path) => common::euler(&params, h, t_end, 100_000)
                .iter()
                .map(|&(t, x)| (x - path.value_at(t).unwrap()).abs())
                .fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
        if err.is_nan() || err > 1e-3 {
            bad.push(format!("{params} h={h:.3}: {err:.2e}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "worst sup-norm gap {worst:.2e} over 20 sets; failing: {}",
            list(&bad)
        ),
    )
}

fn symmetry() -> Outcome {
    let mut rng = StdRng::seed_from_u64(99);
    let mut bad = Vec::new();
    for _ in 0..200 {
        let params = common::random_params(&mut rng);
        let h = common::random_signed(&mut rng, 1e-3, 5.0);
        let t_end = 2.0 * params.period();
        let up = propagate(&params, ConstantHistory::new(h).unwrap(), t_end).unwrap();
        let down = propagate(&params, ConstantHistory::new(-h).unwrap(), t_end).unwrap();
        if down != up.negated() {
            bad.push(format!("propagation {params} h={h}"));
        }
        let k = rng.random_range(-20.0..1.0);
        let d = rng.random_range(-10.0..10.0);
        if apply_f(-h, k, d).unwrap() != -apply_f(h, k, d).unwrap() {
            bad.push(format!("F at h={h} k={k} d={d}"));
        }
        let x = rng.random_range(-3.0..3.0);
        let delta = rng.random_range(0.0..0.45);
        for profile in [Profile::Affine, Profile::SmoothExp] {
            let s = Smoothing::new(delta, profile).unwrap();
            if nonlinearity_value(-x, &s) != -nonlinearity_value(x, &s) {
                bad.push(format!("{profile} f at x={x} delta={delta}"));
            }
        }
        if relay(-x) != -relay(x) {
            bad.push(format!("relay at {x}"));
        }
    }
    let params = p(6.0, 1.0, 1.0, 3.0);
    let s = Smoothing::affine(0.05).unwrap();
    for h in [-1.8, 0.3, 2.2] {
        let up = integrate(&params, &s, h, 16.0, 0.05 / 16.0).unwrap();
        let down = integrate(&params, &s, -h, 16.0, 0.05 / 16.0).unwrap();
        if up
            .samples()
            .iter()
            .zip(down.samples())
            .any(|(a, b)| a.t != b.t || a.x != -b.x)
        {
            bad.push(format!("integration h={h}"));
        }
    }
    outcome(bad.is_empty(), format!("violations: {}", list(&bad)))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("table regression", table_regression),
        ("closed form vs propagator", propagator_oracle),
        ("coexistence (1, 6, 3, 1)", coexistence),
        ("perturbation multiplier", perturbation_multiplier),
        ("map dynamics", map_dynamics),
        ("smoothing persistence", smoothing_persistence),
        ("Euler oracle", euler_oracle),
        ("symmetry", symmetry),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        let status = if o.pass { Status::Pass } else { Status::Fail };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {status} -- {}", i + 1, o.detail);
    }
    println!(
        "{} of {} criteria PASS",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
