//! Scoring detected covers against ground truth: threshold-based cover
//! extraction, overlapping NMI (the community-membership formulation of
//! Lancichinetti, Fortunato and Kertesz), best-match F1, and the exploration
//! counter.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::CommunityCover;
use crate::embed::AffiliationMatrix;
use crate::error::{Error, Result};
use crate::graph::{NodeId, ObservedNetwork};

/// Scores for one evaluation point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalReport {
    /// Overlapping NMI in `[0, 1]`.
    pub nmi: f64,
    /// Best-match F1 in `[0, 1]`.
    pub f1: f64,
    /// Non-empty communities in the detected cover.
    pub n_detected: usize,
    /// Nodes touched by exploration so far.
    pub n_explored: usize,
}

/// Which nodes participate in the metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricScope {
    /// All nodes of the graph; nodes outside every truth community simply
    /// belong to no community on the truth side.
    #[default]
    AllNodes,
    /// Restrict both covers to the nodes covered by the truth, for
    /// sensitivity analysis on datasets with many uncovered nodes.
    CoveredOnly,
}

/// Membership threshold derived from the observed edge density: with
/// `eps = 2|E_t| / (N (N-1))` (clamped below 1), nodes join the communities
/// where their affiliation exceeds `delta = sqrt(-ln(1 - eps))` — the
/// affiliation level at which the model would link two nodes with
/// probability `eps`.
pub fn affiliation_threshold(g: &ObservedNetwork) -> f64 {
    let n = g.n_nodes();
    if n < 2 {
        return 0.0;
    }
    let pairs = n as f64 * (n as f64 - 1.0);
    let eps = (2.0 * g.n_edges() as f64 / pairs).min(1.0 - 1e-12);
    (-(1.0 - eps).ln()).sqrt()
}

/// A detected cover plus extraction diagnostics.
#[derive(Debug, Clone)]
pub struct CoverExtraction {
    /// The detected communities (empty ones already removed).
    pub cover: CommunityCover,
    /// The threshold that was applied.
    pub threshold: f64,
    /// Communities that ended up empty and were dropped.
    pub n_dropped_empty: usize,
}

/// Threshold affiliations into a community cover.
///
/// Node `u` joins community `k` when `F[u][k] >= delta`; a node that
/// clears the threshold nowhere falls back to its argmax column (ties to
/// the lowest index), so every node is covered. Communities left empty are
/// dropped (their count is reported), preserving the relative order of the
/// survivors.
pub fn cover_from_affiliations(
    f: &AffiliationMatrix,
    g: &ObservedNetwork,
    delta_override: Option<f64>,
) -> Result<CoverExtraction> {
    if f.n_nodes() != g.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "affiliations cover {} nodes but the graph has {}",
            f.n_nodes(),
            g.n_nodes()
        )));
    }
    let delta = match delta_override {
        Some(d) if d.is_finite() && d >= 0.0 => d,
        Some(d) => {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and non-negative, got {d}"
            )))
        }
        None => affiliation_threshold(g),
    };
    let (n, c) = (f.n_nodes(), f.n_communities());
    let mut communities: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); c];
    for u in 0..n {
        let row = f.row(u);
        let mut covered = false;
        for k in 0..c {
            if row[k] >= delta {
                communities[k].insert(u);
                covered = true;
            }
        }
        if !covered && c > 0 {
            let mut best = 0;
            for k in 1..c {
                if row[k] > row[best] {
                    best = k;
                }
            }
            communities[best].insert(u);
        }
    }
    let n_dropped_empty = communities.iter().filter(|s| s.is_empty()).count();
    let cover = CommunityCover::new(communities.into_iter().filter(|s| !s.is_empty()).collect());
    Ok(CoverExtraction { cover, threshold: delta, n_dropped_empty })
}

fn h(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `H(X_k | Y_l)` if the pair is admissible, else `None`.
///
/// Treating each community as a binary node-membership variable, the joint
/// distribution over `(in X_k, in Y_l)` is estimated from the four overlap
/// counts. The pair only counts as explaining `X_k` when
/// `h(p11) + h(p00) >= h(p01) + h(p10)` — otherwise `Y_l` resembles the
/// complement of `X_k` more than `X_k` itself and is excluded.
fn conditional_entropy(
    x: &BTreeSet<NodeId>,
    y: &BTreeSet<NodeId>,
    n: f64,
) -> Option<f64> {
    let inter = x.intersection(y).count();
    let p11 = inter as f64 / n;
    let p10 = (x.len() - inter) as f64 / n;
    let p01 = (y.len() - inter) as f64 / n;
    // n - |x ∪ y|, ordered to stay in range for overlapping communities.
    let n00 = n as usize + inter - x.len() - y.len();
    let p00 = n00 as f64 / n;
    if h(p11) + h(p00) >= h(p01) + h(p10) {
        let joint = h(p11) + h(p10) + h(p01) + h(p00);
        let hy = h(p11 + p01) + h(p10 + p00);
        Some(joint - hy)
    } else {
        None
    }
}

/// Mean normalized conditional entropy `H(X | Y) / H(X)` over `X`'s
/// communities.
fn normalized_conditional(a: &CommunityCover, b: &CommunityCover, n: f64) -> f64 {
    let mut sum = 0.0;
    for x in a.communities() {
        let px = x.len() as f64 / n;
        let hx = h(px) + h(1.0 - px);
        if hx == 0.0 {
            // A community containing every node is uninformative; it costs
            // nothing to explain.
            continue;
        }
        let best = b
            .communities()
            .iter()
            .filter_map(|y| conditional_entropy(x, y, n))
            .fold(hx, f64::min);
        sum += best / hx;
    }
    sum / a.n_communities() as f64
}

/// Overlapping NMI between two covers over `n_nodes` nodes.
///
/// `1` for identical covers, `0` for independent ones. Two empty covers
/// score 1; an empty cover against a non-empty one scores 0. Communities
/// must be non-empty and contained in `0..n_nodes`.
pub fn overlapping_nmi(
    a: &CommunityCover,
    b: &CommunityCover,
    n_nodes: usize,
) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Ok(1.0);
    }
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    for cover in [a, b] {
        cover.check_members(n_nodes)?;
        cover.check_non_empty()?;
    }
    let n = n_nodes as f64;
    let h_a_b = normalized_conditional(a, b, n);
    let h_b_a = normalized_conditional(b, a, n);
    Ok((1.0 - 0.5 * (h_a_b + h_b_a)).clamp(0.0, 1.0))
}

fn pair_f1(x: &BTreeSet<NodeId>, y: &BTreeSet<NodeId>) -> f64 {
    let inter = x.intersection(y).count();
    if x.is_empty() && y.is_empty() {
        return 0.0;
    }
    2.0 * inter as f64 / (x.len() + y.len()) as f64
}

/// Symmetric best-match F1 between two covers: average, over each side, of
/// every community's best pairwise F1 against the other side. Two empty
/// covers score 1; an empty cover against a non-empty one scores 0.
pub fn best_match_f1(a: &CommunityCover, b: &CommunityCover) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let best_against = |from: &CommunityCover, to: &CommunityCover| -> f64 {
        let total: f64 = from
            .communities()
            .iter()
            .map(|x| {
                to.communities()
                    .iter()
                    .map(|y| pair_f1(x, y))
                    .fold(0.0, f64::max)
            })
            .sum();
        total / from.n_communities() as f64
    };
    0.5 * (best_against(a, b) + best_against(b, a))
}

/// Number of nodes exploration has touched: the queried nodes plus every
/// endpoint of a revealed edge. Inferred edges do not count — they are
/// guesses, not observations.
pub fn explored_count(g: &ObservedNetwork) -> usize {
    let mut seen: BTreeSet<NodeId> = g.queried().clone();
    for &(u, v) in g.revealed() {
        seen.insert(u);
        seen.insert(v);
    }
    seen.len()
}

/// Restrict a cover to a node universe, remapping ids to the universe's
/// dense indices and dropping communities that become empty.
fn restrict_cover(cover: &CommunityCover, universe: &BTreeSet<NodeId>) -> CommunityCover {
    let index: std::collections::BTreeMap<NodeId, usize> =
        universe.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let communities: Vec<BTreeSet<NodeId>> = cover
        .communities()
        .iter()
        .map(|c| c.iter().filter_map(|u| index.get(u).copied()).collect::<BTreeSet<_>>())
        .filter(|c: &BTreeSet<usize>| !c.is_empty())
        .collect();
    CommunityCover::new(communities)
}

/// Extract the cover from the affiliations and score it against the truth.
pub fn evaluate(
    f: &AffiliationMatrix,
    g: &ObservedNetwork,
    truth: &CommunityCover,
    delta_override: Option<f64>,
    scope: MetricScope,
) -> Result<EvalReport> {
    truth.check_members(g.n_nodes())?;
    let extraction = cover_from_affiliations(f, g, delta_override)?;
    let (nmi, f1) = match scope {
        MetricScope::AllNodes => (
            overlapping_nmi(&extraction.cover, truth, g.n_nodes())?,
            best_match_f1(&extraction.cover, truth),
        ),
        MetricScope::CoveredOnly => {
            let universe = truth.covered_nodes();
            let da = restrict_cover(&extraction.cover, &universe);
            let ta = restrict_cover(truth, &universe);
            (
                overlapping_nmi(&da, &ta, universe.len())?,
                best_match_f1(&da, &ta),
            )
        }
    };
    Ok(EvalReport {
        nmi,
        f1,
        n_detected: extraction.cover.n_communities(),
        n_explored: explored_count(g),
    })
}
