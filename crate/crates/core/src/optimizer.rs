//! Per-step choice of FRS tendency probabilities.
//!
//! The quadratic program `min ½ Σ q̂²` decouples by column: each column `j` is
//! the least-norm point of `{q : Σ q = 1, lo ≤ q ≤ up}` over the out-neighbors
//! of road `j`. Its minimizer is `q_i = clamp(λ, lo_i, up_i)` for one scalar
//! `λ`, found here by a sorted breakpoint scan.
//!
//! Bounds per edge `j -> i`, with `e = p_j x̂_j`:
//!
//! ```text
//!   h = (1 - p_i)(x_i - x̂_i) + q_ij p_j x_j + d_i      e q̂ ≤ h
//!   s = (1 - p_i) x̂_i - x̂_min,i                        -e q̂ ≤ s
//! ```
//!
//! A column whose bounds are infeasible walks a relaxation ladder: lower
//! bounds are dropped first, then upper bounds, which leaves the uniform split.

use std::fmt;

use thiserror::Error;

use crate::graph::{NoirGraph, RoadId};
use crate::model::{
    require_support, ModelError, OutflowProfile, Population, TendencyMatrix, TrafficState,
};

/// Slack allowed on the bound-mass feasibility tests.
pub const FEASIBILITY_TOL: f64 = 1e-12;
/// Tolerance for the post-step state inequality checks.
pub const CHECK_TOL: f64 = 1e-9;

/// Minimum FRS density required on every road.
#[derive(Debug, Clone, PartialEq)]
pub struct EquityFloor(Vec<f64>);

impl EquityFloor {
    pub fn new(x_hat_min: Vec<f64>) -> Result<Self, ModelError> {
        if let Some(idx) = x_hat_min.iter().position(|&v| !(v >= 0.0)) {
            return Err(ModelError::NegativeDensity {
                road: RoadId::from_index(idx),
                value: x_hat_min[idx],
            });
        }
        Ok(EquityFloor(x_hat_min))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self, ModelError> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `e q̂ ≤ h`, protects `x̂ ≤ x`.
    Upper,
    /// `-e q̂ ≤ s`, protects the equity floor.
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundDiagnostic {
    /// `e = 0` so q̂ cannot affect the constraint, and its constant side is negative.
    ConstraintUnreachable {
        row: RoadId,
        kind: BoundKind,
        value: f64,
    },
}

/// Bounds on one column of q̂.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnBounds {
    pub column: RoadId,
    /// Out-neighbors of `column`, 0-based and ascending.
    pub rows: Vec<usize>,
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub e: f64,
    pub diagnostics: Vec<BoundDiagnostic>,
}

/// Builds the per-column bounds for the current step.
pub fn assemble_bounds(
    graph: &NoirGraph,
    state: &TrafficState,
    p: &OutflowProfile,
    q_all: &TendencyMatrix,
    d: &[f64],
    floor: &EquityFloor,
) -> Result<Vec<ColumnBounds>, ModelError> {
    let n = graph.len();
    for (what, len) in [
        ("x", state.x.len()),
        ("x_hat", state.x_hat.len()),
        ("outflow profile", p.len()),
        ("exogenous input", d.len()),
        ("equity floor", floor.len()),
    ] {
        if len != n {
            return Err(ModelError::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    require_support(graph, q_all)?;

    let (x, x_hat, p, floor) = (&state.x, &state.x_hat, p.as_slice(), floor.as_slice());
    let out = (0..n)
        .map(|j| {
            let e = p[j] * x_hat[j];
            let (rows, q_col) = q_all.column(j);
            let mut lo = Vec::with_capacity(rows.len());
            let mut up = Vec::with_capacity(rows.len());
            let mut diagnostics = Vec::new();
            for (&i, &qij) in rows.iter().zip(q_col) {
                let h = (1.0 - p[i]) * (x[i] - x_hat[i]) + qij * p[j] * x[j] + d[i];
                let s = (1.0 - p[i]) * x_hat[i] - floor[i];
                if e > 0.0 {
                    up.push(h / e);
                    lo.push((-s / e).max(0.0));
                } else {
                    up.push(f64::INFINITY);
                    lo.push(0.0);
                    let row = RoadId::from_index(i);
                    if h < 0.0 {
                        diagnostics.push(BoundDiagnostic::ConstraintUnreachable {
                            row,
                            kind: BoundKind::Upper,
                            value: h,
                        });
                    }
                    if s < 0.0 {
                        diagnostics.push(BoundDiagnostic::ConstraintUnreachable {
                            row,
                            kind: BoundKind::Lower,
                            value: s,
                        });
                    }
                }
            }
            ColumnBounds {
                column: RoadId::from_index(j),
                rows: rows.to_vec(),
                lo,
                up,
                e,
                diagnostics,
            }
        })
        .collect();
    Ok(out)
}

/// Why a box-simplex instance has no feasible point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    LowerSumExceedsOne { sum: f64 },
    BoundsCrossed { index: usize, lo: f64, up: f64 },
    UpperSumBelowOne { sum: f64 },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::LowerSumExceedsOne { sum } => write!(f, "lower bounds sum {sum} > 1"),
            Infeasibility::BoundsCrossed { index, lo, up } => {
                write!(f, "lower bound {lo} exceeds upper bound {up} at {index}")
            }
            Infeasibility::UpperSumBelowOne { sum } => write!(f, "upper bounds sum {sum} < 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("bound arrays differ in length ({lo} vs {up})")]
    LengthMismatch { lo: usize, up: usize },
    #[error("empty bound arrays")]
    Empty,
    #[error("invalid bound at {index}: lo = {lo}, up = {up}")]
    InvalidBound { index: usize, lo: f64, up: f64 },
    #[error("infeasible: {0}")]
    Infeasible(Infeasibility),
}

/// Least-norm point of `{q : Σ q = 1, lo ≤ q ≤ up}`.
///
/// Upper bounds are capped at `1 + 1e-12` first; `+∞` is accepted.
pub fn project_box_simplex(lo: &[f64], up: &[f64]) -> Result<Vec<f64>, ProjectionError> {
    if lo.len() != up.len() {
        return Err(ProjectionError::LengthMismatch {
            lo: lo.len(),
            up: up.len(),
        });
    }
    if lo.is_empty() {
        return Err(ProjectionError::Empty);
    }
    for (index, (&l, &u)) in lo.iter().zip(up).enumerate() {
        if !(l >= 0.0 && l.is_finite()) || u.is_nan() {
            return Err(ProjectionError::InvalidBound {
                index,
                lo: l,
                up: u,
            });
        }
    }
    let cap = 1.0 + FEASIBILITY_TOL;
    let up: Vec<f64> = up.iter().map(|&u| u.min(cap)).collect();

    let sum_lo: f64 = lo.iter().sum();
    if sum_lo > 1.0 + FEASIBILITY_TOL {
        return Err(ProjectionError::Infeasible(
            Infeasibility::LowerSumExceedsOne { sum: sum_lo },
        ));
    }
    if let Some(index) = lo.iter().zip(&up).position(|(l, u)| l > u) {
        return Err(ProjectionError::Infeasible(Infeasibility::BoundsCrossed {
            index,
            lo: lo[index],
            up: up[index],
        }));
    }
    let sum_up: f64 = up.iter().sum();
    if sum_up < 1.0 - FEASIBILITY_TOL {
        return Err(ProjectionError::Infeasible(
            Infeasibility::UpperSumBelowOne { sum: sum_up },
        ));
    }
    if sum_lo >= 1.0 {
        return Ok(lo.to_vec());
    }
    if sum_up <= 1.0 {
        return Ok(up);
    }

    let lambda = clamp_level(lo, &up, sum_lo);
    Ok(lo
        .iter()
        .zip(&up)
        .map(|(&l, &u)| lambda.clamp(l, u))
        .collect())
}

/// Solves `Σ clamp(λ, lo_i, up_i) = 1` for `λ`, given `Σ lo < 1 < Σ up`.
///
/// The left side is piecewise linear and nondecreasing in `λ`; its slope rises
/// by one at each `lo_i` and falls by one at each `up_i`.
fn clamp_level(lo: &[f64], up: &[f64], sum_lo: f64) -> f64 {
    let mut events: Vec<(f64, i32)> = lo
        .iter()
        .map(|&l| (l, 1))
        .chain(up.iter().map(|&u| (u, -1)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut at = events[0].0;
    let mut level = sum_lo;
    let mut slope = 0i32;
    let mut idx = 0;
    while idx < events.len() {
        let v = events[idx].0;
        if slope > 0 {
            let next = level + slope as f64 * (v - at);
            if next >= 1.0 {
                return at + (1.0 - level) / slope as f64;
            }
            level = next;
        }
        at = v;
        while idx < events.len() && events[idx].0 == v {
            slope += events[idx].1;
            idx += 1;
        }
    }
    // only reachable through rounding when Σ up is within an ulp of 1
    at
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    /// All bounds enforced.
    Full = 0,
    /// Lower (equity) bounds dropped.
    LowerDropped = 1,
    /// Upper bounds dropped as well: uniform column.
    Uniform = 2,
}

impl Tier {
    pub fn level(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub column: RoadId,
    pub q_hat: Vec<f64>,
    pub tier: Tier,
    pub objective: f64,
    /// Why the full problem was rejected, when `tier > 0`.
    pub rejected: Option<Infeasibility>,
}

fn infeasibility(err: ProjectionError) -> Infeasibility {
    match err {
        ProjectionError::Infeasible(why) => why,
        other => panic!("malformed column bounds: {other}"),
    }
}

/// Solves one column through the relaxation ladder.
pub fn solve_column(bounds: &ColumnBounds) -> SolveOutcome {
    let width = bounds.rows.len();
    let (q_hat, tier, rejected) = match project_box_simplex(&bounds.lo, &bounds.up) {
        Ok(q) => (q, Tier::Full, None),
        Err(err) => {
            let why = infeasibility(err);
            match project_box_simplex(&vec![0.0; width], &bounds.up) {
                Ok(q) => (q, Tier::LowerDropped, Some(why)),
                Err(_) => (vec![1.0 / width as f64; width], Tier::Uniform, Some(why)),
            }
        }
    };
    let objective = 0.5 * q_hat.iter().map(|v| v * v).sum::<f64>();
    SolveOutcome {
        column: bounds.column,
        q_hat,
        tier,
        objective,
        rejected,
    }
}

/// Solves every column and assembles the FRS tendency matrix.
pub fn solve_tendencies(
    graph: &NoirGraph,
    bounds: &[ColumnBounds],
) -> Result<(TendencyMatrix, Vec<SolveOutcome>), ModelError> {
    let outcomes: Vec<SolveOutcome> = bounds.iter().map(solve_column).collect();
    let columns: Vec<Vec<f64>> = outcomes.iter().map(|o| o.q_hat.clone()).collect();
    let q_hat = TendencyMatrix::from_columns(graph, Population::Frs, &columns)?;
    Ok((q_hat, outcomes))
}

/// Post-step state inequalities for one road.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadCheck {
    pub road: RoadId,
    /// `max(0, x̂' - x')`.
    pub upper_violation: f64,
    /// `max(0, x̂_min - x̂')`.
    pub floor_violation: f64,
}

impl RoadCheck {
    pub fn upper_ok(&self) -> bool {
        self.upper_violation <= CHECK_TOL
    }

    pub fn floor_ok(&self) -> bool {
        self.floor_violation <= CHECK_TOL
    }
}

/// Checks `x̂' ≤ x'` and `x̂' ≥ x̂_min` road by road.
pub fn check_matrix_form(
    next_x: &[f64],
    next_x_hat: &[f64],
    floor: &EquityFloor,
) -> Result<Vec<RoadCheck>, ModelError> {
    let n = next_x.len();
    for (what, len) in [("x_hat", next_x_hat.len()), ("equity floor", floor.len())] {
        if len != n {
            return Err(ModelError::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    Ok(next_x
        .iter()
        .zip(next_x_hat)
        .zip(floor.as_slice())
        .enumerate()
        .map(|(idx, ((&x, &xh), &min))| RoadCheck {
            road: RoadId::from_index(idx),
            upper_violation: (xh - x).max(0.0),
            floor_violation: (min - xh).max(0.0),
        })
        .collect())
}
