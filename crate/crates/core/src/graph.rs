//! Road network (NOIR) as a directed graph with boundary road sets.
//!
//! Roads are 1-based at the public surface ([`RoadId`]) and 0-based internally.
//! The edge list is the only stored topology; in/out neighbor indices are
//! derived from it once at construction and never mutated afterwards.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based road identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoadId(pub u32);

impl RoadId {
    /// Converts a 0-based index into a road id.
    pub fn from_index(index: usize) -> Self {
        RoadId(index as u32 + 1)
    }

    /// 0-based index of this road. Only meaningful for ids already validated.
    pub fn index(self) -> usize {
        (self.0 as usize).wrapping_sub(1)
    }
}

impl fmt::Display for RoadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("road count must be at least 1")]
    EmptyGraph,
    #[error("road id {id} out of range 1..={n}")]
    IdOutOfRange { id: u32, n: usize },
    #[error("self-loop on road {0}")]
    SelfLoop(RoadId),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(RoadId, RoadId),
    #[error("road {0} has no out-neighbor")]
    DeadEndRoad(RoadId),
    #[error("road {0} is both an inlet and an outlet")]
    OverlappingBoundary(RoadId),
    #[error("road {0} listed twice in a boundary set")]
    DuplicateBoundary(RoadId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// Role of a road with respect to exogenous traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Inlet,
    Outlet,
    Interior,
}

/// Serializable description of a graph, as embedded in scenario files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<[u32; 2]>,
    #[serde(default)]
    pub inlets: Vec<u32>,
    #[serde(default)]
    pub outlets: Vec<u32>,
}

/// Validated road network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoirGraph {
    n: usize,
    // (from, to), 0-based, sorted lexicographically
    edges: Vec<(usize, usize)>,
    boundary: Vec<BoundaryKind>,
    inlets: Vec<usize>,
    outlets: Vec<usize>,
    // out-neighbors of j are edges[out_ptr[j]..out_ptr[j + 1]]
    out_ptr: Vec<usize>,
    // in-neighbors of i are in_from[in_ptr[i]..in_ptr[i + 1]]
    in_ptr: Vec<usize>,
    in_from: Vec<usize>,
}

impl NoirGraph {
    /// Builds and validates a graph from 1-based edge pairs `(from, to)`.
    pub fn build(
        n: usize,
        edges: &[(u32, u32)],
        inlets: &[u32],
        outlets: &[u32],
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let check = |id: u32| -> Result<usize, GraphError> {
            if id == 0 || id as usize > n {
                Err(GraphError::IdOutOfRange { id, n })
            } else {
                Ok(id as usize - 1)
            }
        };

        let mut internal = Vec::with_capacity(edges.len());
        for &(from, to) in edges {
            let (j, i) = (check(from)?, check(to)?);
            if i == j {
                return Err(GraphError::SelfLoop(RoadId(from)));
            }
            internal.push((j, i));
        }
        internal.sort_unstable();
        if let Some(w) = internal.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(
                RoadId::from_index(w[0].0),
                RoadId::from_index(w[0].1),
            ));
        }

        let mut boundary = vec![BoundaryKind::Interior; n];
        let mut inlet_idx = Vec::with_capacity(inlets.len());
        for &r in inlets {
            let i = check(r)?;
            if boundary[i] == BoundaryKind::Inlet {
                return Err(GraphError::DuplicateBoundary(RoadId(r)));
            }
            boundary[i] = BoundaryKind::Inlet;
            inlet_idx.push(i);
        }
        let mut outlet_idx = Vec::with_capacity(outlets.len());
        for &r in outlets {
            let i = check(r)?;
            match boundary[i] {
                BoundaryKind::Inlet => return Err(GraphError::OverlappingBoundary(RoadId(r))),
                BoundaryKind::Outlet => return Err(GraphError::DuplicateBoundary(RoadId(r))),
                BoundaryKind::Interior => {}
            }
            boundary[i] = BoundaryKind::Outlet;
            outlet_idx.push(i);
        }
        inlet_idx.sort_unstable();
        outlet_idx.sort_unstable();

        let mut out_ptr = vec![0usize; n + 1];
        let mut in_count = vec![0usize; n];
        for &(j, i) in &internal {
            out_ptr[j + 1] += 1;
            in_count[i] += 1;
        }
        for j in 0..n {
            out_ptr[j + 1] += out_ptr[j];
        }
        if let Some(j) = (0..n).find(|&j| out_ptr[j] == out_ptr[j + 1]) {
            return Err(GraphError::DeadEndRoad(RoadId::from_index(j)));
        }

        let mut in_ptr = vec![0usize; n + 1];
        for i in 0..n {
            in_ptr[i + 1] = in_ptr[i] + in_count[i];
        }
        let mut fill = in_ptr.clone();
        let mut in_from = vec![0usize; internal.len()];
        // edges are sorted by source, so each in-list comes out sorted too
        for &(j, i) in &internal {
            in_from[fill[i]] = j;
            fill[i] += 1;
        }

        Ok(NoirGraph {
            n,
            edges: internal,
            boundary,
            inlets: inlet_idx,
            outlets: outlet_idx,
            out_ptr,
            in_ptr,
            in_from,
        })
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        let edges: Vec<(u32, u32)> = spec.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::build(spec.n, &edges, &spec.inlets, &spec.outlets)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|&(j, i)| [j as u32 + 1, i as u32 + 1])
                .collect(),
            inlets: self.inlets.iter().map(|&i| i as u32 + 1).collect(),
            outlets: self.outlets.iter().map(|&i| i as u32 + 1).collect(),
        }
    }

    /// Number of roads.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 0-based `(from, to)`, sorted by source then target.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn inlets(&self) -> &[usize] {
        &self.inlets
    }

    pub fn outlets(&self) -> &[usize] {
        &self.outlets
    }

    pub fn boundary_kind(&self, index: usize) -> BoundaryKind {
        self.boundary[index]
    }

    /// Range into [`edges`](Self::edges) holding the out-edges of road `j` (0-based).
    /// The same range indexes column `j` of every column-sparse matrix on this graph.
    pub fn column_range(&self, j: usize) -> std::ops::Range<usize> {
        self.out_ptr[j]..self.out_ptr[j + 1]
    }

    /// Out-neighbors of road `j`, 0-based, ascending.
    pub fn out_of(&self, j: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.edges[self.column_range(j)].iter().map(|&(_, i)| i)
    }

    /// In-neighbors of road `i`, 0-based, ascending.
    pub fn in_of(&self, i: usize) -> &[usize] {
        &self.in_from[self.in_ptr[i]..self.in_ptr[i + 1]]
    }

    /// Position of edge `j -> i` in the edge list, if present.
    pub fn edge_position(&self, j: usize, i: usize) -> Option<usize> {
        let range = self.column_range(j);
        let start = range.start;
        self.edges[range]
            .binary_search_by_key(&i, |&(_, to)| to)
            .ok()
            .map(|p| start + p)
    }

    pub fn contains(&self, road: RoadId) -> bool {
        road.0 >= 1 && road.0 as usize <= self.n
    }

    /// In- or out-neighbors of `road`.
    pub fn neighbors(&self, road: RoadId, direction: Direction) -> Result<Vec<RoadId>, GraphError> {
        if !self.contains(road) {
            return Err(GraphError::IdOutOfRange {
                id: road.0,
                n: self.n,
            });
        }
        let idx = road.index();
        let ids = match direction {
            Direction::Out => self.out_of(idx).map(RoadId::from_index).collect(),
            Direction::In => self
                .in_of(idx)
                .iter()
                .map(|&j| RoadId::from_index(j))
                .collect(),
        };
        Ok(ids)
    }
}
