//! Dissensus traffic evolution on a road network.
//!
//! Both populations (all cars and free ride-sharing cars) share the outflow
//! probabilities `p`. Each population has its own tendency matrix, whose column
//! `j` distributes the outflow of road `j` over its out-neighbors. The
//! transition matrix is `A = I + (Q - I) P`: diagonal `1 - p_j`, off-diagonal
//! `q[i][j] * p_j`. Every column of `A` sums to one.

use rand::Rng;
use thiserror::Error;

use crate::graph::{NoirGraph, RoadId};

/// Tolerance used for column-stochasticity checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("column {column} sums to {sum}, expected 1")]
    ColumnNotStochastic { column: RoadId, sum: f64 },
    #[error("negative tendency probability {value} at ({to}, {from})")]
    NegativeProbability {
        to: RoadId,
        from: RoadId,
        value: f64,
    },
    #[error("outflow probability {value} at road {road} outside (0, 1]")]
    InvalidOutflow { road: RoadId, value: f64 },
    #[error("negative density {value} at road {road}")]
    NegativeDensity { road: RoadId, value: f64 },
    #[error("sampling range [{min}, {max}] is empty or outside (0, 1]")]
    EmptyRange { min: f64, max: f64 },
}

fn expect_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Per-road outflow probabilities, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutflowProfile(Vec<f64>);

impl OutflowProfile {
    pub fn new(p: Vec<f64>) -> Result<Self, ModelError> {
        for (idx, &value) in p.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ModelError::InvalidOutflow {
                    road: RoadId::from_index(idx),
                    value,
                });
            }
        }
        Ok(OutflowProfile(p))
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
pub enum Population {
    AllCars,
    Frs,
}

/// Column-sparse stochastic matrix of tendency probabilities.
///
/// Entry `(i, j)` is the fraction of road `j`'s outflow that moves to road `i`.
/// The support is exactly the edge set of the graph the matrix was built on,
/// and entries are stored in the graph's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct TendencyMatrix {
    population: Population,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

impl TendencyMatrix {
    /// Builds a matrix from one value per graph edge, in [`NoirGraph::edges`] order.
    pub fn from_edge_values(
        graph: &NoirGraph,
        population: Population,
        values: Vec<f64>,
    ) -> Result<Self, ModelError> {
        expect_len("tendency entries", graph.edge_count(), values.len())?;
        let m = TendencyMatrix {
            population,
            col_ptr: (0..graph.len())
                .map(|j| graph.column_range(j).start)
                .chain(std::iter::once(graph.edge_count()))
                .collect(),
            rows: graph.edges().iter().map(|&(_, i)| i).collect(),
            values,
        };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix column by column; `columns[j]` is aligned with the
    /// out-neighbors of road `j`.
    pub fn from_columns(
        graph: &NoirGraph,
        population: Population,
        columns: &[Vec<f64>],
    ) -> Result<Self, ModelError> {
        expect_len("tendency columns", graph.len(), columns.len())?;
        let mut values = Vec::with_capacity(graph.edge_count());
        for (j, col) in columns.iter().enumerate() {
            expect_len("tendency column", graph.column_range(j).len(), col.len())?;
            values.extend_from_slice(col);
        }
        Self::from_edge_values(graph, population, values)
    }

    /// Each column split evenly over its out-neighbors.
    pub fn uniform(graph: &NoirGraph, population: Population) -> Self {
        let values = graph
            .edges()
            .iter()
            .map(|&(j, _)| 1.0 / graph.column_range(j).len() as f64)
            .collect();
        Self::from_edge_values(graph, population, values).expect("uniform columns are stochastic")
    }

    fn validate(&self) -> Result<(), ModelError> {
        for j in 0..self.dim() {
            let (rows, vals) = self.column(j);
            let mut sum = 0.0;
            for (&i, &v) in rows.iter().zip(vals) {
                if !(v >= 0.0) {
                    return Err(ModelError::NegativeProbability {
                        to: RoadId::from_index(i),
                        from: RoadId::from_index(j),
                        value: v,
                    });
                }
                sum += v;
            }
            if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
                return Err(ModelError::ColumnNotStochastic {
                    column: RoadId::from_index(j),
                    sum,
                });
            }
        }
        Ok(())
    }

    pub fn population(&self) -> Population {
        self.population
    }

    pub fn dim(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Rows and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.rows[r.clone()], &self.values[r])
    }

    /// Entry `(i, j)`; zero outside the support.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.column(j);
        rows.binary_search(&i).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn edge_values(&self) -> &[f64] {
        &self.values
    }

    fn same_support(&self, graph: &NoirGraph) -> bool {
        self.dim() == graph.len()
            && self.nnz() == graph.edge_count()
            && self
                .rows
                .iter()
                .zip(graph.edges())
                .all(|(&r, &(_, i))| r == i)
    }
}

/// Densities of all cars (`x`) and free ride-sharing cars (`x_hat`) at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficState {
    pub k: usize,
    pub x: Vec<f64>,
    pub x_hat: Vec<f64>,
}

impl TrafficState {
    pub fn new(x: Vec<f64>, x_hat: Vec<f64>) -> Result<Self, ModelError> {
        expect_len("x_hat", x.len(), x_hat.len())?;
        check_nonnegative(&x)?;
        check_nonnegative(&x_hat)?;
        Ok(TrafficState { k: 0, x, x_hat })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn check_nonnegative(v: &[f64]) -> Result<(), ModelError> {
    match v.iter().position(|&d| !(d >= 0.0)) {
        Some(idx) => Err(ModelError::NegativeDensity {
            road: RoadId::from_index(idx),
            value: v[idx],
        }),
        None => Ok(()),
    }
}

/// Network outflow `z` and inflow `y` of one population during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

/// Column-sparse transition matrix `A = I + (Q - I) P`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissensusMatrix {
    diag: Vec<f64>,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    values: Vec<f64>,
}

impl DissensusMatrix {
    /// Identity transition (no outflow anywhere).
    pub fn identity(n: usize) -> Self {
        DissensusMatrix {
            diag: vec![1.0; n],
            col_ptr: vec![0; n + 1],
            rows: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal rows and values of column `j`.
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.rows[r.clone()], &self.values[r])
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.column(j).1.iter().fold(self.diag[j], |acc, v| acc + v)
    }

    /// Largest `|column sum - 1|` over all columns.
    pub fn max_column_deviation(&self) -> f64 {
        (0..self.dim())
            .map(|j| (self.column_sum(j) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.values)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// `A v`, accumulated column by column in ascending order.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(a, x)| a * x).collect();
        for (j, &xj) in v.iter().enumerate() {
            let (rows, vals) = self.column(j);
            for (&i, &a) in rows.iter().zip(vals) {
                out[i] += a * xj;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut dense = vec![vec![0.0; n]; n];
        for j in 0..n {
            dense[j][j] = self.diag[j];
            let (rows, vals) = self.column(j);
            for (&i, &a) in rows.iter().zip(vals) {
                dense[i][j] = a;
            }
        }
        dense
    }
}

/// Builds `A = I + (Q - I) P` from a tendency matrix and outflow profile.
pub fn assemble_dissensus_matrix(
    q: &TendencyMatrix,
    p: &OutflowProfile,
) -> Result<DissensusMatrix, ModelError> {
    let n = q.dim();
    expect_len("outflow profile", n, p.len())?;
    let p = p.as_slice();
    let mut values = Vec::with_capacity(q.nnz());
    for j in 0..n {
        let (_, col) = q.column(j);
        let sum: f64 = col.iter().sum();
        if !((sum - 1.0).abs() <= STOCHASTIC_TOL) {
            return Err(ModelError::ColumnNotStochastic {
                column: RoadId::from_index(j),
                sum,
            });
        }
        values.extend(col.iter().map(|&qij| qij * p[j]));
    }
    Ok(DissensusMatrix {
        diag: p.iter().map(|pj| 1.0 - pj).collect(),
        col_ptr: q.col_ptr.clone(),
        rows: q.rows.clone(),
        values,
    })
}

/// Outflow `z_i = p_i * density_i` and inflow `y_i = sum_j q[i][j] z_j`.
pub fn compute_flows(
    density: &[f64],
    p: &OutflowProfile,
    q: &TendencyMatrix,
) -> Result<FlowVector, ModelError> {
    let n = q.dim();
    expect_len("density", n, density.len())?;
    expect_len("outflow profile", n, p.len())?;
    check_nonnegative(density)?;
    let z: Vec<f64> = density
        .iter()
        .zip(p.as_slice())
        .map(|(d, p)| p * d)
        .collect();
    let mut y = vec![0.0; n];
    for (j, &zj) in z.iter().enumerate() {
        let (rows, vals) = q.column(j);
        for (&i, &qij) in rows.iter().zip(vals) {
            y[i] += qij * zj;
        }
    }
    Ok(FlowVector { z, y })
}

/// Result of advancing one population by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub next: Vec<f64>,
    /// Roads whose next density came out negative.
    pub negative: Vec<RoadId>,
}

impl Advance {
    fn from_next(next: Vec<f64>) -> Self {
        let negative = next
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0.0)
            .map(|(i, _)| RoadId::from_index(i))
            .collect();
        Advance { next, negative }
    }
}

/// `x' = A x + d`.
pub fn step_all_cars(
    state: &TrafficState,
    a: &DissensusMatrix,
    d: &[f64],
) -> Result<Advance, ModelError> {
    expect_len("state", a.dim(), state.x.len())?;
    expect_len("exogenous input", a.dim(), d.len())?;
    let mut next = a.apply(&state.x);
    for (v, di) in next.iter_mut().zip(d) {
        *v += di;
    }
    Ok(Advance::from_next(next))
}

/// `x_hat' = A_hat x_hat`. No exogenous term: the FRS total is conserved.
pub fn step_frs_cars(state: &TrafficState, a_hat: &DissensusMatrix) -> Result<Advance, ModelError> {
    expect_len("state", a_hat.dim(), state.x_hat.len())?;
    Ok(Advance::from_next(a_hat.apply(&state.x_hat)))
}

/// Draws `p_i` uniformly from `[min, max]` for each road.
pub fn sample_outflow<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
    range: (f64, f64),
) -> Result<OutflowProfile, ModelError> {
    let (min, max) = range;
    if !(min > 0.0 && min <= max && max <= 1.0) {
        return Err(ModelError::EmptyRange { min, max });
    }
    let p = (0..n)
        .map(|_| {
            if min == max {
                min
            } else {
                rng.random_range(min..=max)
            }
        })
        .collect();
    OutflowProfile::new(p)
}

/// Random column-stochastic all-car tendencies on the graph's edge support.
///
/// Each column gets independent weights in `(0, 1]`, normalized to sum to one.
/// Single out-neighbor columns are exactly 1.
pub fn sample_tendencies<R: Rng + ?Sized>(graph: &NoirGraph, rng: &mut R) -> TendencyMatrix {
    let mut values = Vec::with_capacity(graph.edge_count());
    for j in 0..graph.len() {
        let width = graph.column_range(j).len();
        if width == 1 {
            values.push(1.0);
            continue;
        }
        let weights: Vec<f64> = (0..width).map(|_| 1.0 - rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        values.extend(weights.iter().map(|w| w / total));
    }
    TendencyMatrix::from_edge_values(graph, Population::AllCars, values)
        .expect("normalized weights are stochastic")
}

pub fn sample_environment<R: Rng + ?Sized>(
    graph: &NoirGraph,
    rng: &mut R,
    p_range: (f64, f64),
) -> Result<(OutflowProfile, TendencyMatrix), ModelError> {
    let p = sample_outflow(graph.len(), rng, p_range)?;
    let q = sample_tendencies(graph, rng);
    Ok((p, q))
}

pub(crate) fn require_support(graph: &NoirGraph, q: &TendencyMatrix) -> Result<(), ModelError> {
    if q.same_support(graph) {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch {
            what: "tendency support",
            expected: graph.edge_count(),
            found: q.nnz(),
        })
    }
}
