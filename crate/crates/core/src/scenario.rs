//! Scenario files and the per-step simulation pipeline.
//!
//! One step: sample all-car tendencies, draw boundary inputs, clamp outlet
//! withdrawals, assemble FRS bounds, solve the per-column programs, build both
//! transition matrices, advance both populations, check the results.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{BoundaryKind, GraphError, GraphSpec, NoirGraph, RoadId};
use crate::model::{
    assemble_dissensus_matrix, sample_outflow, sample_tendencies, step_all_cars, step_frs_cars,
    DissensusMatrix, ModelError, OutflowProfile, TendencyMatrix, TrafficState, STOCHASTIC_TOL,
};
use crate::optimizer::{
    assemble_bounds, check_matrix_form, solve_tendencies, EquityFloor, RoadCheck, Tier,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_FLOOR: f64 = 2.0;
pub const DEFAULT_U_MAX: u32 = 5;

/// Per-step all-car mass balance tolerance.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation in `{field}`: {message}")]
    SchemaViolation { field: String, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("infeasible initial state at road {road}: {reason}")]
    InfeasibleInitialState {
        road: RoadId,
        reason: InitialViolation,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invariant violated at step {k}: {what}")]
    InvariantViolation { k: usize, what: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialViolation {
    /// `x̂0 > x0`
    AboveTotal { x: f64, x_hat: f64 },
    /// `x̂0 < x̂_min`
    BelowFloor { x_hat: f64, floor: f64 },
}

impl fmt::Display for InitialViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialViolation::AboveTotal { x, x_hat } => {
                write!(f, "x_hat0 = {x_hat} exceeds x0 = {x}")
            }
            InitialViolation::BelowFloor { x_hat, floor } => {
                write!(f, "x_hat0 = {x_hat} below floor {floor}")
            }
        }
    }
}

/// Machine-readable description of a scenario error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub code: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub road: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl ScenarioError {
    pub fn finding(&self) -> Finding {
        let (code, road, field) = match self {
            ScenarioError::Parse { .. } => ("ParseError", None, None),
            ScenarioError::SchemaViolation { field, .. } => {
                ("SchemaViolation", None, Some(field.clone()))
            }
            ScenarioError::Graph(g) => match g {
                GraphError::EmptyGraph => ("EmptyGraph", None, None),
                GraphError::IdOutOfRange { id, .. } => ("IdOutOfRange", Some(*id), None),
                GraphError::SelfLoop(r) => ("SelfLoop", Some(r.0), None),
                GraphError::DuplicateEdge(r, _) => ("DuplicateEdge", Some(r.0), None),
                GraphError::DeadEndRoad(r) => ("DeadEndRoad", Some(r.0), None),
                GraphError::OverlappingBoundary(r) => ("OverlappingBoundary", Some(r.0), None),
                GraphError::DuplicateBoundary(r) => ("DuplicateBoundary", Some(r.0), None),
            },
            ScenarioError::InfeasibleInitialState { road, .. } => {
                ("InfeasibleInitialState", Some(road.0), None)
            }
            ScenarioError::Model(_) => ("ModelError", None, None),
            ScenarioError::InvariantViolation { .. } => ("InvariantViolation", None, None),
        };
        Finding {
            code,
            road,
            field,
            message: self.to_string(),
        }
    }
}

fn schema(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::SchemaViolation {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitDoc {
    pub x0: Vec<f64>,
    pub x_hat0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeDoc {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutflowDoc {
    // listed first: a struct variant would also accept a bare array
    Fixed(Vec<f64>),
    Range(RangeDoc),
}

/// On-disk scenario schema. Road ids are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_hat_min: Option<ScalarOrList>,
    pub horizon: usize,
    pub seed: u64,
    pub p: OutflowDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_outlets: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strict_check: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutflowSource {
    /// Sampled once per run, uniformly per road.
    Range(f64, f64),
    Fixed(OutflowProfile),
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub description: Option<String>,
    pub graph: NoirGraph,
    pub x0: Vec<f64>,
    pub x_hat0: Vec<f64>,
    pub floor: EquityFloor,
    pub horizon: usize,
    pub seed: u64,
    pub outflow: OutflowSource,
    pub u_max: u32,
    pub clamp_outlets: bool,
    /// Treat a floor violation after an all-tier-0 step as a run failure.
    pub strict_check: bool,
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => {
                let message = e.to_string();
                // only these messages quote a field name; others quote the offending value
                let names_field = ["unknown field", "missing field", "duplicate field"]
                    .iter()
                    .any(|prefix| message.starts_with(prefix));
                let field = match message.split('`').nth(1) {
                    Some(name) if names_field => name.to_string(),
                    _ => "document".to_string(),
                };
                ScenarioError::SchemaViolation { field, message }
            }
            _ => ScenarioError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
        }
    })?;
    Scenario::from_document(&doc)
}

impl Scenario {
    pub fn from_document(doc: &ScenarioDocument) -> Result<Self, ScenarioError> {
        if doc.version != SCHEMA_VERSION {
            return Err(schema(
                "version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    doc.version
                ),
            ));
        }
        if doc.horizon == 0 {
            return Err(schema("horizon", "must be at least 1"));
        }
        let graph = NoirGraph::from_spec(&doc.graph)?;
        let n = graph.len();

        let floor = match &doc.x_hat_min {
            None => vec![DEFAULT_FLOOR; n],
            Some(ScalarOrList::Scalar(v)) => vec![*v; n],
            Some(ScalarOrList::List(v)) => {
                if v.len() != n {
                    return Err(schema(
                        "x_hat_min",
                        format!("expected {n} entries, got {}", v.len()),
                    ));
                }
                v.clone()
            }
        };
        let floor = EquityFloor::new(floor).map_err(|e| schema("x_hat_min", e.to_string()))?;

        let outflow = match &doc.p {
            OutflowDoc::Range(RangeDoc { min, max }) => {
                if !(*min > 0.0 && min <= max && *max <= 1.0) {
                    return Err(schema(
                        "p",
                        format!("range [{min}, {max}] must satisfy 0 < min <= max <= 1"),
                    ));
                }
                OutflowSource::Range(*min, *max)
            }
            OutflowDoc::Fixed(p) => {
                if p.len() != n {
                    return Err(schema(
                        "p",
                        format!("expected {n} entries, got {}", p.len()),
                    ));
                }
                OutflowSource::Fixed(
                    OutflowProfile::new(p.clone()).map_err(|e| schema("p", e.to_string()))?,
                )
            }
        };

        let (x0, x_hat0) = match &doc.init {
            Some(init) => {
                for (field, v) in [("init.x0", &init.x0), ("init.x_hat0", &init.x_hat0)] {
                    if v.len() != n {
                        return Err(schema(
                            field,
                            format!("expected {n} entries, got {}", v.len()),
                        ));
                    }
                    if v.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
                        return Err(schema(field, "densities must be finite and nonnegative"));
                    }
                }
                (init.x0.clone(), init.x_hat0.clone())
            }
            None => {
                let x_hat0: Vec<f64> = floor.as_slice().iter().map(|m| m + 1.0).collect();
                (x_hat0.iter().map(|v| 2.0 * v).collect(), x_hat0)
            }
        };
        for (idx, ((&x, &xh), &min)) in x0.iter().zip(&x_hat0).zip(floor.as_slice()).enumerate() {
            let road = RoadId::from_index(idx);
            if xh > x {
                return Err(ScenarioError::InfeasibleInitialState {
                    road,
                    reason: InitialViolation::AboveTotal { x, x_hat: xh },
                });
            }
            if xh < min {
                return Err(ScenarioError::InfeasibleInitialState {
                    road,
                    reason: InitialViolation::BelowFloor {
                        x_hat: xh,
                        floor: min,
                    },
                });
            }
        }

        Ok(Scenario {
            name: doc.name.clone(),
            description: doc.description.clone(),
            graph,
            x0,
            x_hat0,
            floor,
            horizon: doc.horizon,
            seed: doc.seed,
            outflow,
            u_max: doc.u_max.unwrap_or(DEFAULT_U_MAX),
            clamp_outlets: doc.clamp_outlets.unwrap_or(true),
            strict_check: doc.strict_check.unwrap_or(false),
        })
    }

    /// Normalized document with every default made explicit.
    pub fn to_document(&self) -> ScenarioDocument {
        ScenarioDocument {
            version: SCHEMA_VERSION,
            name: self.name.clone(),
            description: self.description.clone(),
            graph: self.graph.to_spec(),
            init: Some(InitDoc {
                x0: self.x0.clone(),
                x_hat0: self.x_hat0.clone(),
            }),
            x_hat_min: Some(ScalarOrList::List(self.floor.as_slice().to_vec())),
            horizon: self.horizon,
            seed: self.seed,
            p: match &self.outflow {
                OutflowSource::Range(min, max) => OutflowDoc::Range(RangeDoc {
                    min: *min,
                    max: *max,
                }),
                OutflowSource::Fixed(p) => OutflowDoc::Fixed(p.as_slice().to_vec()),
            },
            u_max: Some(self.u_max),
            clamp_outlets: Some(self.clamp_outlets),
            strict_check: Some(self.strict_check),
        }
    }

    pub fn initial_state(&self) -> TrafficState {
        TrafficState {
            k: 0,
            x: self.x0.clone(),
            x_hat: self.x_hat0.clone(),
        }
    }

    /// The run's outflow profile, sampled from the outflow substream if needed.
    pub fn outflow_profile(&self) -> Result<OutflowProfile, ModelError> {
        match &self.outflow {
            OutflowSource::Fixed(p) => Ok(p.clone()),
            OutflowSource::Range(min, max) => sample_outflow(
                self.graph.len(),
                &mut substream(self.seed, Substream::Outflow, 0),
                (*min, *max),
            ),
        }
    }
}

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Outflow = 1,
    Tendency = 2,
    Boundary = 3,
}

/// Generator for `(seed, purpose, k)`. Each triple gets its own ChaCha stream,
/// so draws for one step never depend on how many steps ran before it.
pub fn substream(seed: u64, purpose: Substream, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (k & 0xffff_ffff_ffff));
    rng
}

/// Exogenous traffic for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryInput {
    /// Raw integer draw per road; always 0 on interior roads.
    pub u: Vec<u32>,
    /// Signed per-road input: `+u` on inlets, `-withdrawal` on outlets, 0 elsewhere.
    pub d: Vec<f64>,
    /// Outlets whose withdrawal was reduced to the available density.
    pub clamped: Vec<bool>,
}

/// Uniform integer draws in `[0, u_max]` for every boundary road at step `k`.
pub fn sample_exogenous(scenario: &Scenario, k: usize) -> BoundaryInput {
    let g = &scenario.graph;
    let mut rng = substream(scenario.seed, Substream::Boundary, k as u64);
    let mut u = vec![0u32; g.len()];
    let mut d = vec![0.0; g.len()];
    for i in 0..g.len() {
        let kind = g.boundary_kind(i);
        if kind == BoundaryKind::Interior {
            continue;
        }
        let draw = rng.random_range(0..=scenario.u_max);
        u[i] = draw;
        d[i] = match kind {
            BoundaryKind::Inlet => draw as f64,
            _ => -(draw as f64),
        };
    }
    BoundaryInput {
        u,
        d,
        clamped: vec![false; g.len()],
    }
}

/// Limits outlet withdrawals to what the road holds after internal flows.
///
/// `available[i]` is the density road `i` would have with no exogenous input,
/// `(1 - p_i) x_i + y_i`. Inlets pass through unchanged.
pub fn clamp_to_available(
    graph: &NoirGraph,
    available: &[f64],
    input: &BoundaryInput,
) -> BoundaryInput {
    let mut out = input.clone();
    for &i in graph.outlets() {
        let want = input.u[i] as f64;
        let cap = available[i].max(0.0);
        if want > cap {
            out.d[i] = -cap;
            out.clamped[i] = true;
        } else {
            out.d[i] = -want;
        }
    }
    out
}

/// [`clamp_to_available`] with the available density computed from the
/// current state and all-car environment.
pub fn clamp_outlets(
    graph: &NoirGraph,
    state: &TrafficState,
    p: &OutflowProfile,
    q_all: &TendencyMatrix,
    input: &BoundaryInput,
) -> Result<BoundaryInput, ModelError> {
    let a = assemble_dissensus_matrix(q_all, p)?;
    Ok(clamp_to_available(graph, &a.apply(&state.x), input))
}

/// Record of one transition `k -> k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub input: BoundaryInput,
    /// Tier of each road's FRS column.
    pub tiers: Vec<Tier>,
    pub unreachable_constraints: usize,
    /// Largest `|column sum - 1|` over both transition matrices.
    pub column_deviation: f64,
    /// `Σ x' - Σ x - Σ d`.
    pub mass_residual: f64,
    /// `Σ x̂' - Σ x̂`.
    pub frs_residual: f64,
}

impl StepRecord {
    pub fn all_full_tier(&self) -> bool {
        self.tiers.iter().all(|&t| t == Tier::Full)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub outflow: OutflowProfile,
    /// `horizon + 1` states.
    pub states: Vec<TrafficState>,
    /// `horizon` transitions.
    pub steps: Vec<StepRecord>,
    /// State checks, aligned with `states`.
    pub checks: Vec<Vec<RoadCheck>>,
}

/// Matrices and outcome of a single transition, for callers that drive the
/// loop themselves.
#[derive(Debug, Clone)]
pub struct Transition {
    pub q_all: TendencyMatrix,
    pub q_hat: TendencyMatrix,
    pub a: DissensusMatrix,
    pub a_hat: DissensusMatrix,
    pub next: TrafficState,
    pub record: StepRecord,
}

/// Runs one transition from `state`.
pub fn advance(
    scenario: &Scenario,
    p: &OutflowProfile,
    state: &TrafficState,
) -> Result<Transition, ScenarioError> {
    let g = &scenario.graph;
    let k = state.k;
    let q_all = sample_tendencies(
        g,
        &mut substream(scenario.seed, Substream::Tendency, k as u64),
    );
    let a = assemble_dissensus_matrix(&q_all, p)?;
    let propagated = a.apply(&state.x);

    let drawn = sample_exogenous(scenario, k);
    let input = if scenario.clamp_outlets {
        clamp_to_available(g, &propagated, &drawn)
    } else {
        drawn
    };

    let bounds = assemble_bounds(g, state, p, &q_all, &input.d, &scenario.floor)?;
    let unreachable_constraints = bounds.iter().map(|b| b.diagnostics.len()).sum();
    let (q_hat, outcomes) = solve_tendencies(g, &bounds)?;
    let a_hat = assemble_dissensus_matrix(&q_hat, p)?;

    let column_deviation = a.max_column_deviation().max(a_hat.max_column_deviation());
    if !(column_deviation <= STOCHASTIC_TOL) {
        return Err(ScenarioError::InvariantViolation {
            k,
            what: format!("column sum deviates from 1 by {column_deviation:e}"),
        });
    }

    let x_next = step_all_cars(state, &a, &input.d)?;
    if scenario.clamp_outlets && !x_next.negative.is_empty() {
        return Err(ScenarioError::InvariantViolation {
            k,
            what: format!("negative all-car density at roads {:?}", x_next.negative),
        });
    }
    let x_hat_next = step_frs_cars(state, &a_hat)?;

    let mass_residual = sum(&x_next.next) - sum(&state.x) - sum(&input.d);
    if !(mass_residual.abs() < MASS_TOL) {
        return Err(ScenarioError::InvariantViolation {
            k,
            what: format!("all-car mass residual {mass_residual:e}"),
        });
    }
    let frs_residual = sum(&x_hat_next.next) - sum(&state.x_hat);
    if !(frs_residual.abs() < MASS_TOL) {
        return Err(ScenarioError::InvariantViolation {
            k,
            what: format!("FRS total drifted by {frs_residual:e}"),
        });
    }

    let record = StepRecord {
        k,
        input,
        tiers: outcomes.iter().map(|o| o.tier).collect(),
        unreachable_constraints,
        column_deviation,
        mass_residual,
        frs_residual,
    };
    Ok(Transition {
        q_all,
        q_hat,
        a,
        a_hat,
        next: TrafficState {
            k: k + 1,
            x: x_next.next,
            x_hat: x_hat_next.next,
        },
        record,
    })
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// Simulates the scenario over its horizon.
pub fn run(scenario: &Scenario) -> Result<Trajectory, ScenarioError> {
    let p = scenario.outflow_profile()?;
    let mut state = scenario.initial_state();
    let mut states = Vec::with_capacity(scenario.horizon + 1);
    let mut steps = Vec::with_capacity(scenario.horizon);
    let mut checks = Vec::with_capacity(scenario.horizon + 1);
    checks.push(check_matrix_form(&state.x, &state.x_hat, &scenario.floor)?);

    for _ in 0..scenario.horizon {
        let t = advance(scenario, &p, &state)?;
        let check = check_matrix_form(&t.next.x, &t.next.x_hat, &scenario.floor)?;
        if scenario.strict_check && t.record.all_full_tier() {
            if let Some(c) = check.iter().find(|c| !c.floor_ok()) {
                return Err(ScenarioError::InvariantViolation {
                    k: t.record.k,
                    what: format!(
                        "road {} fell {:e} below the equity floor after an all-tier-0 step",
                        c.road, c.floor_violation
                    ),
                });
            }
        }
        states.push(std::mem::replace(&mut state, t.next));
        steps.push(t.record);
        checks.push(check);
    }
    states.push(state);

    Ok(Trajectory {
        scenario: scenario.clone(),
        outflow: p,
        states,
        steps,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationCounts {
    /// Road-states with `x̂ > x`.
    pub upper: u64,
    /// Road-states with `x̂ < x̂_min`.
    pub floor: u64,
    /// Floor violations in states reached through an all-tier-0 step.
    pub floor_after_full_tier: u64,
}

/// Run summary as persisted next to the steps file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub steps: usize,
    pub roads: usize,
    pub total_x_per_step: Vec<f64>,
    pub total_xhat_initial: f64,
    pub total_xhat_final: f64,
    pub min_xhat: f64,
    pub min_xhat_after_full_tier: Option<f64>,
    /// Column-steps solved at tiers 0, 1, 2.
    pub tier_histogram: [u64; 3],
    pub full_tier_steps: usize,
    pub full_tier_fraction: Option<f64>,
    pub clamp_events: u64,
    pub unreachable_constraints: u64,
    pub violation_counts: ViolationCounts,
    pub max_column_deviation: f64,
    pub max_mass_residual: f64,
    pub max_frs_drift: f64,
    pub outflow: Vec<f64>,
    pub config_echo: ScenarioDocument,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn summary(&self) -> Summary {
        let total_xhat_initial = sum(&self.states[0].x_hat);
        let mut tier_histogram = [0u64; 3];
        let mut clamp_events = 0;
        let mut unreachable = 0;
        for s in &self.steps {
            for t in &s.tiers {
                tier_histogram[t.level() as usize] += 1;
            }
            clamp_events += s.input.clamped.iter().filter(|&&c| c).count() as u64;
            unreachable += s.unreachable_constraints as u64;
        }
        let full_tier_steps = self.steps.iter().filter(|s| s.all_full_tier()).count();

        let mut violations = ViolationCounts {
            upper: 0,
            floor: 0,
            floor_after_full_tier: 0,
        };
        let mut min_after_full: Option<f64> = None;
        for (idx, check) in self.checks.iter().enumerate() {
            let after_full = idx > 0 && self.steps[idx - 1].all_full_tier();
            for c in check {
                violations.upper += u64::from(!c.upper_ok());
                violations.floor += u64::from(!c.floor_ok());
                violations.floor_after_full_tier += u64::from(after_full && !c.floor_ok());
            }
            if after_full {
                let m = self.states[idx]
                    .x_hat
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                min_after_full = Some(min_after_full.map_or(m, |v| v.min(m)));
            }
        }

        Summary {
            seed: self.scenario.seed,
            steps: self.horizon(),
            roads: self.scenario.graph.len(),
            total_x_per_step: self.states.iter().map(|s| sum(&s.x)).collect(),
            total_xhat_initial,
            total_xhat_final: sum(&self.states[self.states.len() - 1].x_hat),
            min_xhat: self
                .states
                .iter()
                .flat_map(|s| s.x_hat.iter().copied())
                .fold(f64::INFINITY, f64::min),
            min_xhat_after_full_tier: min_after_full,
            tier_histogram,
            full_tier_steps,
            full_tier_fraction: (!self.steps.is_empty())
                .then(|| full_tier_steps as f64 / self.steps.len() as f64),
            clamp_events,
            unreachable_constraints: unreachable,
            violation_counts: violations,
            max_column_deviation: self
                .steps
                .iter()
                .map(|s| s.column_deviation)
                .fold(0.0, f64::max),
            max_mass_residual: self
                .steps
                .iter()
                .map(|s| s.mass_residual.abs())
                .fold(0.0, f64::max),
            max_frs_drift: self
                .states
                .iter()
                .map(|s| (sum(&s.x_hat) - total_xhat_initial).abs())
                .fold(0.0, f64::max),
            outflow: self.outflow.as_slice().to_vec(),
            config_echo: self.scenario.to_document(),
        }
    }
}
