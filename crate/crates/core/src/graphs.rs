//! Time-varying undirected social graphs and structural predicates.
//!
//! Edges are unordered pairs canonicalized as `(i, j)` with `i < j`. A
//! schedule answers "which edges exist at step t"; for the random family the
//! answer is a pure function of `(seed, t, pair)`, so membership queries and
//! full enumerations agree and replays are random-access.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::rng::RunRng;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {index} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("graph needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("schedule phase list must be nonempty")]
    EmptyPhaseList,
    #[error("switching phase {0} must have positive duration")]
    NonPositiveDuration(usize),
    #[error("edge probability {0} must lie in [0, 1]")]
    InvalidProbability(f64),
    #[error("schedule phases disagree on vertex count")]
    MixedVertexCounts,
}

/// Canonicalized undirected edge set on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl EdgeSet {
    pub fn new(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewVertices(n));
        }
        let mut edges = BTreeSet::new();
        for (a, b) in pairs {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if a >= n {
                return Err(GraphError::VertexOutOfRange { index: a, n });
            }
            if b >= n {
                return Err(GraphError::VertexOutOfRange { index: b, n });
            }
            let e = (a.min(b), a.max(b));
            if !edges.insert(e) {
                return Err(GraphError::DuplicateEdge(e.0, e.1));
            }
        }
        Ok(EdgeSet { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        EdgeSet {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.insert((i, j));
            }
        }
        EdgeSet { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }
}

/// True iff the graph has a single connected component.
pub fn is_connected(edges: &EdgeSet) -> bool {
    let mut dsu = Dsu::new(edges.n());
    for (a, b) in edges.iter() {
        dsu.unite(a, b);
    }
    let root = dsu.find(0);
    (1..edges.n()).all(|v| dsu.find(v) == root)
}

/// True iff every unordered pair is an edge.
pub fn is_complete(edges: &EdgeSet) -> bool {
    let n = edges.n();
    edges.len() == n * (n - 1) / 2
}

/// Connected-component partition; components and their members sorted
/// ascending, union is the whole vertex set.
pub fn components(edges: &EdgeSet) -> Vec<Vec<usize>> {
    let n = edges.n();
    let mut dsu = Dsu::new(n);
    for (a, b) in edges.iter() {
        dsu.unite(a, b);
    }
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        buckets[dsu.find(v)].push(v);
    }
    buckets.retain(|c| !c.is_empty());
    buckets
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, v: usize) -> usize {
        if self.parent[v] == v {
            return v;
        }
        let root = self.find(self.parent[v]);
        self.parent[v] = root;
        root
    }

    fn unite(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smallest index wins so component roots are stable.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// The social-graph schedule `t -> E(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SocialGraphSchedule {
    /// One fixed edge set for all t.
    Static(EdgeSet),
    /// Cycles through the listed edge sets, one step each.
    Periodic(Vec<EdgeSet>),
    /// Cycles through (edge set, duration) phases.
    Switching(Vec<(EdgeSet, u64)>),
    /// Every step resamples each possible edge independently with
    /// probability `p`, keyed by `(seed, t, pair)`.
    RandomErdosRenyi { n: usize, p: f64 },
}

impl SocialGraphSchedule {
    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            SocialGraphSchedule::Static(_) => Ok(()),
            SocialGraphSchedule::Periodic(phases) => {
                if phases.is_empty() {
                    return Err(GraphError::EmptyPhaseList);
                }
                if phases.iter().any(|e| e.n() != phases[0].n()) {
                    return Err(GraphError::MixedVertexCounts);
                }
                Ok(())
            }
            SocialGraphSchedule::Switching(phases) => {
                if phases.is_empty() {
                    return Err(GraphError::EmptyPhaseList);
                }
                if phases.iter().any(|(e, _)| e.n() != phases[0].0.n()) {
                    return Err(GraphError::MixedVertexCounts);
                }
                for (k, (_, d)) in phases.iter().enumerate() {
                    if *d == 0 {
                        return Err(GraphError::NonPositiveDuration(k));
                    }
                }
                Ok(())
            }
            SocialGraphSchedule::RandomErdosRenyi { n, p } => {
                if *n < 2 {
                    return Err(GraphError::TooFewVertices(*n));
                }
                if !(0.0..=1.0).contains(p) || p.is_nan() {
                    return Err(GraphError::InvalidProbability(*p));
                }
                Ok(())
            }
        }
    }

    pub fn n(&self) -> usize {
        match self {
            SocialGraphSchedule::Static(e) => e.n(),
            SocialGraphSchedule::Periodic(phases) => phases[0].n(),
            SocialGraphSchedule::Switching(phases) => phases[0].0.n(),
            SocialGraphSchedule::RandomErdosRenyi { n, .. } => *n,
        }
    }

    fn switching_phase(phases: &[(EdgeSet, u64)], t: u64) -> &EdgeSet {
        let cycle: u64 = phases.iter().map(|(_, d)| d).sum();
        let mut offset = t % cycle;
        for (edges, duration) in phases {
            if offset < *duration {
                return edges;
            }
            offset -= duration;
        }
        unreachable!("offset < cycle by construction")
    }

    /// Edge membership at step `t`; `graph_stream` is the graph-purpose
    /// substream of the run (ignored by deterministic schedules).
    pub fn edge_present(&self, t: u64, pair: (usize, usize), graph_stream: &RunRng) -> bool {
        match self {
            SocialGraphSchedule::Static(e) => e.contains(pair.0, pair.1),
            SocialGraphSchedule::Periodic(phases) => {
                phases[(t % phases.len() as u64) as usize].contains(pair.0, pair.1)
            }
            SocialGraphSchedule::Switching(phases) => {
                Self::switching_phase(phases, t).contains(pair.0, pair.1)
            }
            SocialGraphSchedule::RandomErdosRenyi { n, p } => {
                let rank = pair_rank(*n, pair);
                let u = graph_stream.at_step(t).value_at(rank) >> 11;
                (u as f64 / (1u64 << 53) as f64) < *p
            }
        }
    }

    /// Full edge set at step `t`; agrees with `edge_present` pair by pair.
    pub fn edges_at(&self, t: u64, graph_stream: &RunRng) -> EdgeSet {
        match self {
            SocialGraphSchedule::Static(e) => e.clone(),
            SocialGraphSchedule::Periodic(phases) => {
                phases[(t % phases.len() as u64) as usize].clone()
            }
            SocialGraphSchedule::Switching(phases) => Self::switching_phase(phases, t).clone(),
            SocialGraphSchedule::RandomErdosRenyi { n, .. } => {
                let mut edges = BTreeSet::new();
                for i in 0..*n {
                    for j in (i + 1)..*n {
                        if self.edge_present(t, (i, j), graph_stream) {
                            edges.insert((i, j));
                        }
                    }
                }
                EdgeSet { n: *n, edges }
            }
        }
    }
}

/// Rank of a canonical pair in the row-major enumeration
/// (0,1), (0,2), ..., (0,n-1), (1,2), ...
fn pair_rank(n: usize, (a, b): (usize, usize)) -> u64 {
    let (i, j) = (a.min(b), a.max(b));
    debug_assert!(j < n && i != j);
    (i * n - i * (i + 1) / 2 + (j - i - 1)) as u64
}

/// Samples a static Erdős–Rényi graph, retrying until connected when asked.
///
/// Attempts consume disjoint cells of the graph stream, so the result is a
/// pure function of `(seed, n, p, require_connected)`.
pub fn sample_static_erdos_renyi(
    n: usize,
    p: f64,
    require_connected: bool,
    graph_stream: &RunRng,
    max_attempts: u64,
) -> Option<EdgeSet> {
    for attempt in 0..max_attempts {
        let mut edges = BTreeSet::new();
        let cell = graph_stream.at_step(attempt);
        for i in 0..n {
            for j in (i + 1)..n {
                let u = cell.value_at(pair_rank(n, (i, j))) >> 11;
                if (u as f64 / (1u64 << 53) as f64) < p {
                    edges.insert((i, j));
                }
            }
        }
        let set = EdgeSet { n, edges };
        if !require_connected || is_connected(&set) {
            return Some(set);
        }
    }
    None
}
