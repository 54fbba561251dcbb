//! Hidden ground-truth network, the node-query oracle that meters access to
//! it, and the partially observed network the learner works with.
//!
//! The observed network keeps revealed (oracle-confirmed) and inferred
//! (model-guessed) edges in separate sets so that a query can cleanly
//! overwrite inference with ground truth for the queried node.

use std::collections::BTreeSet;

use crate::dataset::CommunityCover;
use crate::error::{Error, Result};

/// Dense node identifier in `0..n_nodes`.
pub type NodeId = usize;

/// Normalize an undirected edge to `(min, max)` form.
///
/// All edge sets in this crate store each undirected edge exactly once in
/// this form, which makes set equality and sorted iteration trivial.
pub fn ordered(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

fn check_node(id: NodeId, n_nodes: usize) -> Result<()> {
    if id >= n_nodes {
        Err(Error::UnknownNode { id, n_nodes })
    } else {
        Ok(())
    }
}

/// The complete ground-truth graph plus its community cover.
///
/// Algorithms never touch this directly; all access during a run goes
/// through [`QueryOracle`]. Tests and evaluation code may read it freely.
#[derive(Debug, Clone)]
pub struct HiddenNetwork {
    n_nodes: usize,
    neighbors: Vec<BTreeSet<NodeId>>,
    n_edges: usize,
    truth_cover: CommunityCover,
}

impl HiddenNetwork {
    /// Build a hidden network from an undirected edge list.
    ///
    /// Duplicate edges (in either orientation) are collapsed. Self-loops and
    /// out-of-range ids are rejected, as are cover members outside the node
    /// range.
    pub fn new(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
        truth_cover: CommunityCover,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::DegenerateInput("network must have at least one node".into()));
        }
        truth_cover.check_members(n_nodes)?;
        let mut neighbors = vec![BTreeSet::new(); n_nodes];
        let mut n_edges = 0;
        for (u, v) in edges {
            check_node(u, n_nodes)?;
            check_node(v, n_nodes)?;
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            if neighbors[u].insert(v) {
                neighbors[v].insert(u);
                n_edges += 1;
            }
        }
        Ok(Self { n_nodes, neighbors, n_edges, truth_cover })
    }

    /// Number of nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// The true neighbor set of `u`.
    pub fn neighbors(&self, u: NodeId) -> Result<&BTreeSet<NodeId>> {
        check_node(u, self.n_nodes)?;
        Ok(&self.neighbors[u])
    }

    /// Whether the true graph contains edge `{u, v}`.
    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.n_nodes && self.neighbors[u].contains(&v)
    }

    /// The ground-truth community cover.
    pub fn truth_cover(&self) -> &CommunityCover {
        &self.truth_cover
    }

    /// All edges as sorted `(min, max)` pairs.
    pub fn edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for (u, nbrs) in self.neighbors.iter().enumerate() {
            for &v in nbrs.range(u + 1..) {
                out.insert((u, v));
            }
        }
        out
    }
}

/// Metered access to a [`HiddenNetwork`].
///
/// A query on node `u` spends one unit of budget and returns the complete,
/// exact neighbor set of `u`. Repeat queries are rejected rather than
/// silently deduplicated: the caller's selection logic should never produce
/// them, and treating them as free lookups would corrupt budget accounting.
#[derive(Debug)]
pub struct QueryOracle<'a> {
    hidden: &'a HiddenNetwork,
    budget: usize,
    queried: Vec<NodeId>,
    queried_set: BTreeSet<NodeId>,
}

impl<'a> QueryOracle<'a> {
    /// Wrap a hidden network with a total budget of `budget` queries.
    pub fn new(hidden: &'a HiddenNetwork, budget: usize) -> Self {
        Self { hidden, budget, queried: Vec::new(), queried_set: BTreeSet::new() }
    }

    /// Query node `u`, returning its true neighbor set.
    pub fn query(&mut self, u: NodeId) -> Result<BTreeSet<NodeId>> {
        check_node(u, self.hidden.n_nodes())?;
        if self.queried_set.contains(&u) {
            return Err(Error::DuplicateQuery(u));
        }
        if self.queried.len() >= self.budget {
            return Err(Error::BudgetExhausted { budget: self.budget });
        }
        self.queried.push(u);
        self.queried_set.insert(u);
        Ok(self.hidden.neighbors[u].clone())
    }

    /// Nodes queried so far, in query order.
    pub fn queried(&self) -> &[NodeId] {
        &self.queried
    }

    /// Queries still available.
    pub fn remaining(&self) -> usize {
        self.budget - self.queried.len()
    }

    /// The total budget this oracle was constructed with.
    pub fn budget(&self) -> usize {
        self.budget
    }
}

/// The learner's current picture of the network.
///
/// Invariants (enforced by the constructors and mutators):
/// - `revealed` and `inferred` are disjoint sets of normalized edges;
/// - every revealed edge has at least one queried endpoint;
/// - no inferred edge touches a queried node — a query replaces all guesses
///   about its node's incidences with ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedNetwork {
    n_nodes: usize,
    revealed: BTreeSet<(NodeId, NodeId)>,
    inferred: BTreeSet<(NodeId, NodeId)>,
    queried: BTreeSet<NodeId>,
}

impl ObservedNetwork {
    /// An empty observation over `n_nodes` nodes: no edges, no queries.
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            revealed: BTreeSet::new(),
            inferred: BTreeSet::new(),
            queried: BTreeSet::new(),
        }
    }

    /// Start from a set of inferred edges (the usual initial state, fed by
    /// network inference over metadata).
    pub fn with_inferred(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self> {
        let mut g = Self::new(n_nodes);
        for (u, v) in edges {
            check_node(u, n_nodes)?;
            check_node(v, n_nodes)?;
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            g.inferred.insert(ordered(u, v));
        }
        Ok(g)
    }

    /// Rebuild an observation from its parts, validating every invariant.
    pub fn from_parts(
        n_nodes: usize,
        revealed: BTreeSet<(NodeId, NodeId)>,
        inferred: BTreeSet<(NodeId, NodeId)>,
        queried: BTreeSet<NodeId>,
    ) -> Result<Self> {
        for &u in &queried {
            check_node(u, n_nodes)?;
        }
        for set in [&revealed, &inferred] {
            for &(u, v) in set {
                check_node(u, n_nodes)?;
                check_node(v, n_nodes)?;
                if u >= v {
                    return Err(Error::InvalidParameter(format!(
                        "edge ({u}, {v}) is not in normalized (min, max) form"
                    )));
                }
            }
        }
        for &(u, v) in &revealed {
            if inferred.contains(&(u, v)) {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) is both revealed and inferred"
                )));
            }
            if !queried.contains(&u) && !queried.contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "revealed edge ({u}, {v}) has no queried endpoint"
                )));
            }
        }
        for &(u, v) in &inferred {
            if queried.contains(&u) || queried.contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "inferred edge ({u}, {v}) touches a queried node"
                )));
            }
        }
        Ok(Self { n_nodes, revealed, inferred, queried })
    }

    /// Fold a query result into the observation.
    ///
    /// All inferred edges incident to `u` are discarded (the oracle's answer
    /// supersedes them), the edges `{u, v}` for each returned neighbor become
    /// revealed, and `u` is marked queried. Edges already revealed by an
    /// earlier query of the other endpoint stay revealed.
    pub fn integrate_query(
        &mut self,
        u: NodeId,
        neighbors: &BTreeSet<NodeId>,
    ) -> Result<()> {
        check_node(u, self.n_nodes)?;
        if self.queried.contains(&u) {
            return Err(Error::DuplicateQuery(u));
        }
        for &v in neighbors {
            check_node(v, self.n_nodes)?;
            if v == u {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
        }
        self.inferred.retain(|&(a, b)| a != u && b != u);
        for &v in neighbors {
            let e = ordered(u, v);
            self.inferred.remove(&e);
            self.revealed.insert(e);
        }
        self.queried.insert(u);
        Ok(())
    }

    /// Number of nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Revealed (oracle-confirmed) edges.
    pub fn revealed(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.revealed
    }

    /// Inferred (guessed) edges.
    pub fn inferred(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.inferred
    }

    /// Nodes that have been queried.
    pub fn queried(&self) -> &BTreeSet<NodeId> {
        &self.queried
    }

    /// Whether `u` has been queried.
    pub fn is_queried(&self, u: NodeId) -> bool {
        self.queried.contains(&u)
    }

    /// Total number of edges currently observed (revealed + inferred).
    pub fn n_edges(&self) -> usize {
        self.revealed.len() + self.inferred.len()
    }

    /// The union of revealed and inferred edges, sorted ascending.
    ///
    /// The two sets are disjoint by invariant, so this is a merge without
    /// deduplication work.
    pub fn edge_list(&self) -> Vec<(NodeId, NodeId)> {
        let mut out: Vec<(NodeId, NodeId)> =
            self.revealed.iter().chain(self.inferred.iter()).copied().collect();
        out.sort_unstable();
        out
    }

    /// Sorted adjacency lists over the union of revealed and inferred edges.
    pub fn neighbor_lists(&self) -> Vec<Vec<NodeId>> {
        let mut lists = vec![Vec::new(); self.n_nodes];
        for &(u, v) in self.revealed.iter().chain(self.inferred.iter()) {
            lists[u].push(v);
            lists[v].push(u);
        }
        for l in &mut lists {
            l.sort_unstable();
        }
        lists
    }
}
