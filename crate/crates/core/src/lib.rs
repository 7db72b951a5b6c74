//! Simulation and per-step optimization of free ride-sharing (FRS) car
//! distribution on a network of interconnected roads.
//!
//! Traffic evolves under column-stochastic ("dissensus") transition matrices
//! built from outflow and tendency probabilities. At every step the FRS
//! tendency probabilities are chosen by a per-column least-norm program that
//! keeps FRS cars a subset of all cars and above a per-road equity floor.

pub mod graph;
pub mod model;
pub mod optimizer;
pub mod output;
pub mod plot;
pub mod scenario;

pub use graph::{Direction, GraphError, NoirGraph, RoadId};
pub use model::{
    assemble_dissensus_matrix, compute_flows, sample_environment, step_all_cars, step_frs_cars,
    DissensusMatrix, FlowVector, ModelError, OutflowProfile, Population, TendencyMatrix,
    TrafficState,
};
pub use optimizer::{
    assemble_bounds, check_matrix_form, project_box_simplex, solve_tendencies, ColumnBounds,
    EquityFloor, Infeasibility, ProjectionError, SolveOutcome, Tier,
};
pub use scenario::{load_scenario, run, Scenario, ScenarioError, Summary, Trajectory};
