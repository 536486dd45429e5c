//! Experiments built on the other modules: regression against the embedded
//! parameter tables, coexistence of an unstable Type I orbit with the stable
//! Type II orbit of the dual system, smoothing convergence and grid scans.

use std::f64::consts::{E, PI};
use std::fmt;
use std::io;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exact::{
    propagate, propagate_from, Breakpoint, ConstantHistory, ExactError, PiecewisePath,
};
use crate::maps::{
    classify, dual_params, type1_fixed_point, type2_two_cycle, validate_type1, validate_type2, Kind,
};
use crate::model::{ModelError, Params, Smoothing};
use crate::numeric::{self, NumericError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("coexistence needs an unstable Type I orbit, classified as {0:?}")]
    NotUnstable(Kind),
    #[error("pairing failed: {reason}")]
    PairingFailed {
        reason: String,
        report: Option<Box<CoexistenceReport>>,
    },
    #[error("scan range for {axis} is invalid: [{lo}, {hi}]")]
    BadRange {
        axis: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("scan resolution must be at least 2 on every axis")]
    BadResolution,
    #[error("scan box admits periods p1 + p2 <= 1 (lowest corner {0})")]
    BoxPeriodTooShort(f64),
    #[error("deltas must be a non-empty strictly decreasing list")]
    BadDeltas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TableId {
    /// Type II tables print the double period.
    pub fn is_type2(self) -> bool {
        matches!(self, TableId::T3 | TableId::T5)
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A printed `h*` entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Printed {
    Decimal { value: f64, decimals: u32 },
    Fraction { num: i64, den: i64 },
}

impl Printed {
    pub fn value(&self) -> f64 {
        match *self {
            Printed::Decimal { value, .. } => value,
            Printed::Fraction { num, den } => num as f64 / den as f64,
        }
    }

    /// Allowed absolute difference: `1e-4` for four or more decimals,
    /// `5e-3` otherwise, rounding-level for fractions.
    pub fn tolerance(&self) -> f64 {
        match *self {
            Printed::Decimal { decimals, .. } if decimals >= 4 => 1e-4,
            Printed::Decimal { .. } => 5e-3 * (1.0 + 1e-9),
            Printed::Fraction { .. } => 1e-12,
        }
    }
}

impl fmt::Display for Printed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Printed::Decimal { value, decimals } => write!(f, "{value:.*}", decimals as usize),
            Printed::Fraction { num, den } => write!(f, "{num}/{den}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub table: TableId,
    /// 1-based row number within its table.
    pub row: usize,
    pub params: Params,
    pub h_star_expected: Printed,
    /// `T` for Type I tables, `2T` for Type II tables.
    pub period_expected: f64,
}

fn dec(text: &str) -> Printed {
    let decimals = text
        .split_once('.')
        .map_or(0, |(_, frac)| frac.len() as u32);
    Printed::Decimal {
        value: text.parse().expect("table literal"),
        decimals,
    }
}

fn frac(num: i64, den: i64) -> Printed {
    Printed::Fraction { num, den }
}

/// The five embedded tables, in printed order.
pub fn table_rows() -> Vec<TableRow> {
    let s10 = 10f64.sqrt();
    let s5 = 5f64.sqrt();
    #[rustfmt::skip]
    let raw: Vec<(TableId, [f64; 4], Printed, f64)> = vec![
        (TableId::T1, [1.0, 0.25, 2.5, 1.5], dec("-0.25"), 4.0),
        (TableId::T1, [2.0, 0.5, 2.5, 2.0], frac(-1, 3), 4.5),
        (TableId::T1, [2.0, 0.25, 2.5, 1.0], frac(-4, 7), 3.5),
        (TableId::T1, [1.0, 0.5, 3.0, 1.0], dec("-0.5"), 4.0),
        (TableId::T1, [2.0, 1.0, 3.0, 1.5], dec("-0.5"), 4.5),
        (TableId::T1, [2.5, 0.5, 3.0, 4.0], dec("-0.31"), 7.0),
        (TableId::T1, [3.0, 0.5, 3.0, 4.5], dec("-0.45"), 7.5),
        (TableId::T1, [4.0, 1.0, 3.5, 2.0], dec("-2"), 5.5),
        (TableId::T1, [5.0, 0.5, 3.0, 3.0], dec("-1.94"), 6.0),
        (TableId::T1, [5.0, 1.0, 3.0, 2.0], dec("-1.88"), 5.0),
        (TableId::T1, [s10, 1.0 / s5, PI, E + 1.0], dec("-1.0602"), PI + E + 1.0),

        (TableId::T2, [0.5, 5.0, 5.0, 1.0], dec("-1.31"), 6.0),
        (TableId::T2, [1.0, 5.0, 4.0, 1.0], dec("-1.625"), 5.0),
        (TableId::T2, [1.0, 7.0, 4.0, 1.0], dec("-1.5"), 5.0),
        (TableId::T2, [1.0, 7.0, 3.0, 2.0], dec("-1.0833"), 5.0),
        (TableId::T2, [1.5, 7.0, 2.5, 2.5], dec("-1.3295"), 5.0),
        (TableId::T2, [1.5, 7.0, 3.5, 1.5], dec("-2.0795"), 5.0),
        (TableId::T2, [1.5, 7.0, 4.0, 3.0], dec("-4.3636"), 7.0),
        (TableId::T2, [2.0, 7.0, 3.0, 2.0], dec("-2.4"), 5.0),
        (TableId::T2, [2.0, 7.0, 3.0, 3.0], dec("-4.6"), 6.0),
        (TableId::T2, [2.0, 7.0, 3.5, 2.5], dec("-4.3"), 6.0),
        (TableId::T2, [2.5, 7.0, 2.5, 2.5], dec("-1.2614"), 5.0),
        (TableId::T2, [2.5, 7.0, 3.0, 2.0], dec("-1.5682"), 5.0),
        (TableId::T2, [1.0 / s5, 1.5 * PI, 2.0 * E, PI / 3.0], dec("-1.382"), 2.0 * E + PI / 3.0),

        (TableId::T3, [4.0, 1.0, 0.5, 2.5], dec("-0.33"), 6.0),
        (TableId::T3, [4.0, 1.0, 1.0, 3.5], dec("-0.33"), 9.0),
        (TableId::T3, [5.0, 1.0, 1.0, 3.5], dec("-0.938"), 9.0),
        (TableId::T3, [5.0, 1.0, 0.5, 3.0], dec("-0.313"), 7.0),
        (TableId::T3, [6.0, 1.0, 1.0, 3.5], dec("-1.5"), 9.0),
        (TableId::T3, [6.0, 1.0, 1.0, 4.5], dec("-0.9"), 11.0),
        (TableId::T3, [6.0, 1.5, 1.0, 3.5], dec("-0.5"), 9.0),
        (TableId::T3, [7.0, 1.5, 1.5, 3.5], dec("-2.39"), 10.0),
        (TableId::T3, [7.0, 2.5, 2.5, 2.5], dec("-2.92"), 10.0),
        (TableId::T3, [7.0, 2.5, 2.0, 3.0], dec("-1.17"), 10.0),
        (TableId::T3, [1.0 / s5, 1.5 * PI, 1.5 * PI, E / 2.0], dec("-1.12"), 3.0 * PI + E),

        (TableId::T4, [0.5, 2.5, 3.0, 0.5], dec("-0.09"), 3.5),
        (TableId::T4, [0.5, 3.0, 5.0, 1.0], dec("-1.35"), 6.0),
        (TableId::T4, [0.5, 5.0, 4.0, 0.5], dec("-0.64"), 4.5),
        (TableId::T4, [0.5, 7.0, 3.0, 2.0], dec("-0.52"), 5.0),
        (TableId::T4, [1.0, 6.0, 3.0, 1.0], dec("-0.5"), 4.0),
        (TableId::T4, [1.0, 7.0, 5.0, 1.0], dec("-2.67"), 6.0),
        (TableId::T4, [2.0, 7.0, 2.0, 3.0], dec("-1.4"), 5.0),
        (TableId::T4, [3.0, 7.0, 4.0, 1.0], dec("-5.62"), 5.0),
        (TableId::T4, [PI / 6.0, E, PI, 0.5], dec("-0.18"), PI + 0.5),

        (TableId::T5, [2.5, 0.5, 0.5, 3.0], dec("-0.156"), 7.0),
        (TableId::T5, [3.0, 0.5, 1.0, 5.0], dec("-0.3"), 12.0),
        (TableId::T5, [5.0, 0.5, 0.5, 4.0], dec("-0.56"), 9.0),
        (TableId::T5, [7.0, 0.5, 2.0, 3.0], dec("-6.19"), 10.0),
        (TableId::T5, [6.0, 1.0, 1.0, 3.0], dec("-1.8"), 8.0),
        (TableId::T5, [7.0, 1.0, 1.0, 5.0], dec("-1.17"), 12.0),
        (TableId::T5, [7.0, 2.0, 3.0, 2.0], dec("-6.3"), 10.0),
        (TableId::T5, [7.0, 3.0, 1.0, 4.0], dec("-4.375"), 10.0),
        (TableId::T5, [E, PI / 6.0, 0.5, PI], dec("-1.92"), 2.0 * PI + 1.0),
    ];
    let mut counters = [0usize; 5];
    raw.into_iter()
        .map(|(table, [a1, a2, p1, p2], printed, period)| {
            let n = &mut counters[table as usize];
            *n += 1;
            TableRow {
                table,
                row: *n,
                params: Params::new(a1, a2, p1, p2).expect("embedded rows are valid"),
                h_star_expected: printed,
                period_expected: period,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowOutcome {
    pub row: TableRow,
    /// Closed-form value; `None` when the formula has no solution.
    pub h_star: Option<f64>,
    pub period: f64,
    /// `h_star` agrees with the printed value.
    pub value_ok: bool,
    pub period_ok: bool,
    /// The exact propagator closes the orbit from `h_star` with the table's shape.
    pub validated: bool,
    pub status: Status,
    pub note: Option<String>,
}

fn reproduce_row(row: &TableRow) -> RowOutcome {
    let p = &row.params;
    let (h_star, period, note) = if row.table.is_type2() {
        match type2_two_cycle(p) {
            Ok((h, _)) => (Some(h), 2.0 * p.period(), None),
            Err(e) => (None, 2.0 * p.period(), Some(e.to_string())),
        }
    } else {
        match type1_fixed_point(p) {
            Ok(h) => (Some(h), p.period(), None),
            Err(e) => (None, p.period(), Some(e.to_string())),
        }
    };
    let value_ok = h_star.is_some_and(|h| {
        (h - row.h_star_expected.value()).abs() <= row.h_star_expected.tolerance()
    });
    let period_ok = (period - row.period_expected).abs() <= 1e-12 * row.period_expected;
    let validated = h_star.is_some_and(|h| {
        if row.table.is_type2() {
            validate_type2(p, h)
        } else {
            validate_type1(p, h)
        }
    });
    let status = if value_ok && period_ok && validated {
        Status::Pass
    } else {
        Status::Fail
    };
    RowOutcome {
        row: *row,
        h_star,
        period,
        value_ok,
        period_ok,
        validated,
        status,
        note,
    }
}

/// Recomputes every embedded row; order matches [`table_rows`].
pub fn reproduce_tables() -> Vec<RowOutcome> {
    table_rows().par_iter().map(reproduce_row).collect()
}

/// One line per row followed by a count line.
pub fn format_table_report(outcomes: &[RowOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let p = &o.row.params;
        let computed = o
            .h_star
            .map_or_else(|| "none".to_string(), |h| format!("{h:.6}"));
        let mut flags = Vec::new();
        if !o.value_ok {
            flags.push("value");
        }
        if !o.period_ok {
            flags.push("period");
        }
        if !o.validated {
            flags.push("shape");
        }
        let detail = if flags.is_empty() {
            String::new()
        } else {
            format!("  mismatch: {}", flags.join(","))
        };
        out.push_str(&format!(
            "{} {}#{:<2} a1={:.4} a2={:.4} p1={:.4} p2={:.4}  printed {:>8}  computed {:>10}  period {:.4}{}\n",
            o.status, o.row.table, o.row.row, p.a1(), p.a2(), p.p1(), p.p2(), o.row.h_star_expected, computed, o.period, detail
        ));
    }
    let passed = outcomes.iter().filter(|o| o.status == Status::Pass).count();
    out.push_str(&format!("{passed}/{} rows PASS\n", outcomes.len()));
    out
}

pub const COEXIST_OFFSET: f64 = 1e-3;
/// Horizon in periods of the `2T` orbit.
pub const COEXIST_PERIODS: usize = 30;
pub const COEXIST_THRESHOLD: f64 = 1e-6;
pub const SHIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractionTrace {
    pub start: f64,
    /// `| |x(p1 + 2jT)| - |h_dual| |` for `j = 0..=COEXIST_PERIODS`.
    pub distances: Vec<f64>,
    /// First `j` with distance at most the threshold.
    pub periods_to_threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexistenceReport {
    pub params: Params,
    pub unstable_h_star: f64,
    pub m: f64,
    pub dual: Params,
    pub dual_h_star: f64,
    pub k: f64,
    /// Sup-norm gap between the original solution started at `p1` from the
    /// dual's `h*` and the dual orbit shifted by `p1`, over one `2T` period.
    pub shift_distance: f64,
    pub attraction: Vec<AttractionTrace>,
}

impl CoexistenceReport {
    pub fn shift_ok(&self) -> bool {
        self.shift_distance <= SHIFT_TOL
    }

    pub fn attraction_ok(&self) -> bool {
        self.attraction
            .iter()
            .all(|a| a.periods_to_threshold.is_some())
    }
}

fn shifted(path: &PiecewisePath, by: f64) -> Result<PiecewisePath, ExactError> {
    PiecewisePath::from_breakpoints(
        path.breakpoints()
            .iter()
            .map(|b| Breakpoint {
                t: b.t + by,
                x: b.x,
            })
            .collect(),
    )
}

/// Checks that the unstable Type I orbit of `params` coexists with the
/// stable Type II orbit of the dual system, seen in the original system
/// after a time shift by `p1`.
pub fn coexistence_check(params: &Params) -> Result<CoexistenceReport, AnalysisError> {
    let class = classify(params);
    if class.kind != Kind::UnstableT {
        return Err(AnalysisError::NotUnstable(class.kind));
    }
    let h_star = class.h_star.expect("unstable verdict carries h*").value();
    let dual = dual_params(params);
    let dual_class = classify(&dual);
    if dual_class.kind != Kind::Stable2T {
        return Err(AnalysisError::PairingFailed {
            reason: format!("dual {dual} classifies as {:?}", dual_class.kind),
            report: None,
        });
    }
    let dual_h = dual_class
        .h_star
        .expect("stable verdict carries h*")
        .value();
    let period = params.period();
    let p1 = params.p1();

    let dual_path = propagate(&dual, ConstantHistory::new(dual_h)?, 2.0 * period)?;
    let orig_path = propagate_from(params, ConstantHistory::new(dual_h)?, p1, p1 + 2.0 * period)?;
    let shift_distance = orig_path.sup_distance(&shifted(&dual_path, p1)?);

    let horizon = p1 + 2.0 * period * COEXIST_PERIODS as f64;
    let attraction = [h_star + COEXIST_OFFSET, h_star - COEXIST_OFFSET]
        .into_iter()
        .map(|start| -> Result<AttractionTrace, AnalysisError> {
            let path = propagate(params, ConstantHistory::new(start)?, horizon)?;
            let distances: Vec<f64> = (0..=COEXIST_PERIODS)
                .map(|j| {
                    let t = p1 + 2.0 * period * j as f64;
                    (path.value_at(t).unwrap().abs() - dual_h.abs()).abs()
                })
                .collect();
            let periods_to_threshold = distances.iter().position(|&d| d <= COEXIST_THRESHOLD);
            Ok(AttractionTrace {
                start,
                distances,
                periods_to_threshold,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let report = CoexistenceReport {
        params: *params,
        unstable_h_star: h_star,
        m: class.m,
        dual,
        dual_h_star: dual_h,
        k: dual_class.k,
        shift_distance,
        attraction,
    };
    if !report.shift_ok() {
        return Err(AnalysisError::PairingFailed {
            reason: format!("shifted dual orbit deviates by {shift_distance:e}"),
            report: Some(Box::new(report)),
        });
    }
    if !report.attraction_ok() {
        return Err(AnalysisError::PairingFailed {
            reason: format!(
                "perturbations of h* not attracted within {COEXIST_PERIODS} periods of 2T"
            ),
            report: Some(Box::new(report)),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    /// `center (1 ± rel)`.
    pub fn around(center: f64, rel: f64) -> Self {
        Range {
            lo: center * (1.0 - rel),
            hi: center * (1.0 + rel),
        }
    }

    fn point(&self, i: usize, n: usize) -> f64 {
        if i + 1 == n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanBox {
    pub a1: Range,
    pub a2: Range,
    pub p1: Range,
    pub p2: Range,
}

impl ScanBox {
    pub fn around(params: &Params, rel: f64) -> Self {
        ScanBox {
            a1: Range::around(params.a1(), rel),
            a2: Range::around(params.a2(), rel),
            p1: Range::around(params.p1(), rel),
            p2: Range::around(params.p2(), rel),
        }
    }

    fn axes(&self) -> [(&'static str, Range); 4] {
        [
            ("a1", self.a1),
            ("a2", self.a2),
            ("p1", self.p1),
            ("p2", self.p2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCell {
    pub index: [usize; 4],
    pub params: Params,
    pub kind: Kind,
    pub h_star: Option<f64>,
    pub boundary: bool,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub id: usize,
    pub kind: Kind,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub bounds: ScanBox,
    pub resolution: [usize; 4],
    /// Row-major with `p2` varying fastest.
    pub cells: Vec<ScanCell>,
    /// Maximal axis-connected groups of cells sharing a kind.
    pub components: Vec<Component>,
    /// Some cell validated both a stable and an unstable Type I orbit.
    pub stable_unstable_overlap: bool,
}

impl ScanReport {
    pub fn count(&self, kind: Kind) -> usize {
        self.cells.iter().filter(|c| c.kind == kind).count()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "a1",
            "a2",
            "p1",
            "p2",
            "kind",
            "h_star",
            "boundary",
            "component",
        ])?;
        for c in &self.cells {
            let p = &c.params;
            w.write_record([
                p.a1().to_string(),
                p.a2().to_string(),
                p.p1().to_string(),
                p.p2().to_string(),
                format!("{:?}", c.kind),
                c.h_star.map_or_else(String::new, |h| h.to_string()),
                c.boundary.to_string(),
                c.component.to_string(),
            ])?;
        }
        w.flush()
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Classifies every point of a uniform grid over `bounds`.
pub fn scan(bounds: &ScanBox, resolution: [usize; 4]) -> Result<ScanReport, AnalysisError> {
    for (axis, r) in bounds.axes() {
        if !(r.lo.is_finite() && r.hi.is_finite() && r.lo > 0.0 && r.hi >= r.lo) {
            return Err(AnalysisError::BadRange {
                axis,
                lo: r.lo,
                hi: r.hi,
            });
        }
    }
    if resolution.iter().any(|&n| n < 2) {
        return Err(AnalysisError::BadResolution);
    }
    if bounds.p1.lo + bounds.p2.lo <= 1.0 {
        return Err(AnalysisError::BoxPeriodTooShort(
            bounds.p1.lo + bounds.p2.lo,
        ));
    }
    let [n1, n2, n3, n4] = resolution;
    let total = n1 * n2 * n3 * n4;
    let unflatten = |flat: usize| {
        [
            flat / (n2 * n3 * n4),
            flat / (n3 * n4) % n2,
            flat / n4 % n3,
            flat % n4,
        ]
    };
    let flatten = |ix: [usize; 4]| ((ix[0] * n2 + ix[1]) * n3 + ix[2]) * n4 + ix[3];

    let classified: Vec<(Params, crate::maps::Classification)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let ix = unflatten(flat);
            let params = Params::new(
                bounds.a1.point(ix[0], n1),
                bounds.a2.point(ix[1], n2),
                bounds.p1.point(ix[2], n3),
                bounds.p2.point(ix[3], n4),
            )
            .expect("box corners checked");
            let class = classify(&params);
            (params, class)
        })
        .collect();

    let mut parent: Vec<usize> = (0..total).collect();
    for flat in 0..total {
        let ix = unflatten(flat);
        for axis in 0..4 {
            if ix[axis] + 1 < resolution[axis] {
                let mut next = ix;
                next[axis] += 1;
                let other = flatten(next);
                if classified[flat].1.kind == classified[other].1.kind {
                    let (ra, rb) = (find(&mut parent, flat), find(&mut parent, other));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let mut ids = vec![usize::MAX; total];
    let mut components: Vec<Component> = Vec::new();
    let mut cells = Vec::with_capacity(total);
    for (flat, (params, class)) in classified.into_iter().enumerate() {
        let root = find(&mut parent, flat);
        if ids[root] == usize::MAX {
            ids[root] = components.len();
            components.push(Component {
                id: components.len(),
                kind: class.kind,
                size: 0,
            });
        }
        components[ids[root]].size += 1;
        cells.push(ScanCell {
            index: unflatten(flat),
            params,
            kind: class.kind,
            h_star: class.h_star.map(|h| h.value()),
            boundary: class.boundary,
            component: ids[root],
        });
    }
    let stable_unstable_overlap = cells.iter().any(|c| {
        let class = classify(&c.params);
        class.has(Kind::StableT) && class.has(Kind::UnstableT)
    });
    Ok(ScanReport {
        bounds: *bounds,
        resolution,
        cells,
        components,
        stable_unstable_overlap,
    })
}

/// Integrator error below this is treated as rounding noise.
pub const INTEGRATOR_ERROR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub step: f64,
    pub max_dev_outside_corners: f64,
    pub max_dev_overall: f64,
    /// Step-halving estimate, at least [`INTEGRATOR_ERROR_FLOOR`].
    pub integrator_error: f64,
    /// `max |x(t + P) - x(t)|` over two periods after the transient.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub params: Params,
    pub h: f64,
    /// `T` or `2T`, from the classification.
    pub orbit_period: f64,
    pub transient: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `max_dev_overall` is non-increasing along the rows.
    pub monotone: bool,
    /// Least-squares slope of `max_dev_overall` against `delta` through the origin.
    pub fitted_c: f64,
    /// Final `max_dev_overall <= fitted_c * delta_min`.
    pub within_fit: bool,
}

/// Orbit period for attractor checks: `2T` when the classification (or, when
/// nothing validates, the Type II formula) points to the double period.
pub fn orbit_period(params: &Params) -> f64 {
    let class = classify(params);
    match class.kind {
        Kind::StableT | Kind::UnstableT => params.period(),
        _ => 2.0 * params.period(),
    }
}

/// Transient discarded before periodicity checks: `max(10 P, 20)`.
pub fn transient_for(orbit_period: f64) -> f64 {
    (10.0 * orbit_period).max(20.0)
}

/// Smoothed-versus-exact comparison over three orbit periods for each
/// `delta`, plus a periodicity residual after the transient.
pub fn smoothing_convergence(
    params: &Params,
    h: f64,
    deltas: &[f64],
) -> Result<ConvergenceReport, AnalysisError> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::BadDeltas);
    }
    let period = orbit_period(params);
    let transient = transient_for(period);
    let horizon = 3.0 * period;
    let rows = deltas
        .par_iter()
        .map(|&delta| -> Result<ConvergenceRow, AnalysisError> {
            let smoothing = Smoothing::affine(delta)?;
            let step = numeric::default_step(delta);
            let cmp = numeric::compare_exact_smoothed_with_step(params, delta, h, horizon, step)?;
            let integrator_error =
                numeric::step_halving_error(params, &smoothing, cmp.smoothed_h, horizon, step)?
                    .max(INTEGRATOR_ERROR_FLOOR);
            let long = numeric::integrate(params, &smoothing, h, transient + 3.0 * period, step)?;
            let residual =
                numeric::periodicity_residual(&long, period, transient, transient + 2.0 * period);
            Ok(ConvergenceRow {
                delta,
                step,
                max_dev_outside_corners: cmp.max_dev_outside_corners,
                max_dev_overall: cmp.max_dev_overall,
                integrator_error,
                residual,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let monotone = rows
        .windows(2)
        .all(|w| w[1].max_dev_overall <= w[0].max_dev_overall);
    let sxy: f64 = rows.iter().map(|r| r.delta * r.max_dev_overall).sum();
    let sxx: f64 = rows.iter().map(|r| r.delta * r.delta).sum();
    let fitted_c = sxy / sxx;
    let last = rows.last().expect("non-empty");
    let within_fit = last.max_dev_overall <= fitted_c * last.delta * (1.0 + 1e-6);
    Ok(ConvergenceReport {
        params: *params,
        h,
        orbit_period: period,
        transient,
        rows,
        monotone,
        fitted_c,
        within_fit,
    })
}
