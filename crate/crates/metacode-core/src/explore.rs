//! Query selection: which node to ask the oracle about next.
//!
//! The affiliation-guided rule scores every unqueried node by
//!
//! ```text
//! score(u) = |F_u|_1 + lambda * (1 - mean_{v queried} cos(F_u, F_v))
//! ```
//!
//! favoring strongly affiliated nodes (`|F_u|_1`, likely hubs spanning
//! communities) that look different from everything already queried (the
//! novelty term). Two baselines share the bookkeeping: uniform random
//! sampling and DFS along revealed edges.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embed::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::graph::{NodeId, ObservedNetwork};
use crate::seeding::{stream_rng, STREAM_EXPLORE};

/// Cosine similarity, with the convention that anything against a zero
/// vector is 0.
fn cosine(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// Selection bookkeeping shared by all three strategies. One instance lives
/// for a whole run; the caller routes every executed query through
/// [`QueryState::note_query`] regardless of which rule picked it.
#[derive(Debug, Clone)]
pub struct QueryState {
    lambda: f64,
    order: Vec<NodeId>,
    queried: BTreeSet<NodeId>,
    dfs_stack: Vec<NodeId>,
    rng: ChaCha8Rng,
}

impl QueryState {
    /// New state. `lambda` weights the novelty term of the affiliation
    /// rule; the seed drives only the random-sampling baseline.
    pub fn new(seed: u64, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        Ok(Self {
            lambda,
            order: Vec::new(),
            queried: BTreeSet::new(),
            dfs_stack: Vec::new(),
            rng: stream_rng(seed, STREAM_EXPLORE),
        })
    }

    /// Nodes queried so far, in order.
    pub fn queried_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Whether `u` has been queried.
    pub fn is_queried(&self, u: NodeId) -> bool {
        self.queried.contains(&u)
    }

    /// Affiliation-guided selection: maximize affiliation mass plus novelty
    /// against the queried set. Ties go to the lowest node id; with nothing
    /// queried yet the novelty term is the constant `lambda`, so the rule
    /// reduces to the largest affiliation l1-norm.
    pub fn select_metacode(&self, f: &AffiliationMatrix) -> Result<NodeId> {
        let n = f.n_nodes();
        let mut best: Option<(f64, NodeId)> = None;
        for u in 0..n {
            if self.queried.contains(&u) {
                continue;
            }
            let row = f.row(u);
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            let novelty = if self.order.is_empty() {
                1.0
            } else {
                let mean_cos: f64 = self
                    .order
                    .iter()
                    .map(|&v| cosine(row, f.row(v)))
                    .sum::<f64>()
                    / self.order.len() as f64;
                1.0 - mean_cos
            };
            let score = l1 + self.lambda * novelty;
            if best.is_none_or(|(bs, _)| score > bs) {
                best = Some((score, u));
            }
        }
        best.map(|(_, u)| u).ok_or(Error::NoCandidates)
    }

    /// Uniform random selection among unqueried nodes.
    pub fn select_random(&mut self, n_nodes: usize) -> Result<NodeId> {
        let candidates: Vec<NodeId> =
            (0..n_nodes).filter(|u| !self.queried.contains(u)).collect();
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        let idx = self.rng.random_range(0..candidates.len());
        Ok(candidates[idx])
    }

    /// DFS along revealed edges: pop the most recently pushed unqueried
    /// node; when the stack runs dry, restart from the lowest unqueried id.
    pub fn select_dfs(&mut self, g: &ObservedNetwork) -> Result<NodeId> {
        while let Some(u) = self.dfs_stack.pop() {
            if !self.queried.contains(&u) {
                return Ok(u);
            }
        }
        (0..g.n_nodes())
            .find(|u| !self.queried.contains(u))
            .ok_or(Error::NoCandidates)
    }

    /// Record an executed query and its revealed neighbor set. Unqueried
    /// neighbors are pushed in ascending id order, so DFS pops the
    /// highest-id one first.
    pub fn note_query(&mut self, u: NodeId, revealed: &BTreeSet<NodeId>) {
        self.order.push(u);
        self.queried.insert(u);
        for &v in revealed {
            if !self.queried.contains(&v) {
                self.dfs_stack.push(v);
            }
        }
    }
}
