//! Initial network inference from node metadata.
//!
//! Before any node has been queried, the only signal available is the binary
//! feature matrix. The default initializer clusters nodes by Boolean matrix
//! factorization (multi-assignment, so memberships may overlap), then samples
//! an edge set from the community-affiliation model over the resulting
//! binary memberships. A kNN-over-cosine baseline is provided for
//! comparison.
//!
//! The factorization seeks binary memberships `f0` (nodes x communities) and
//! binary prototypes `V` (communities x features) minimizing the Hamming
//! distance between `X` and the Boolean product `f0 (OR-AND) V`, i.e. each
//! node is reconstructed as the OR of its communities' prototypes. The
//! solver alternates greedy per-node assignment with per-bit prototype
//! updates; both halves only ever accept strict improvements, so the
//! reconstruction error is non-increasing and the loop terminates.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{agm_sample, NodeFeatures};
use crate::error::{Error, Result};
use crate::graph::{NodeId, ObservedNetwork};
use crate::seeding::{stream_rng, STREAM_AGM, STREAM_MAC};

/// Binary overlapping memberships produced by clustering: which communities
/// each node belongs to. Every node has at least one membership and every
/// community at least one member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialAffiliation {
    n_communities: usize,
    memberships: Vec<BTreeSet<usize>>,
}

impl InitialAffiliation {
    /// Number of nodes.
    pub fn n_nodes(&self) -> usize {
        self.memberships.len()
    }

    /// Number of communities.
    pub fn n_communities(&self) -> usize {
        self.n_communities
    }

    /// Community sets per node.
    pub fn memberships(&self) -> &[BTreeSet<usize>] {
        &self.memberships
    }

    /// The memberships as a binary matrix (1.0 where the node belongs).
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.memberships.len(), self.n_communities));
        for (u, s) in self.memberships.iter().enumerate() {
            for &c in s {
                m[[u, c]] = 1.0;
            }
        }
        m
    }
}

/// Tuning knobs for [`mac_cluster`].
#[derive(Debug, Clone)]
pub struct MacOptions {
    /// Iteration cap per solve; hitting it marks the result unconverged.
    pub max_iters: usize,
    /// Independent restarts; the lowest-error result wins.
    pub n_restarts: usize,
    /// How many times one restart may re-seed after producing an empty
    /// community before the empty slots are force-filled.
    pub reseed_cap: usize,
}

impl Default for MacOptions {
    fn default() -> Self {
        Self { max_iters: 60, n_restarts: 4, reseed_cap: 3 }
    }
}

/// Result of Boolean-factorization clustering.
#[derive(Debug, Clone)]
pub struct MacResult {
    /// Overlapping node memberships.
    pub affiliation: InitialAffiliation,
    /// Community prototypes over features, one row per community.
    pub prototypes: Vec<Vec<bool>>,
    /// Total Hamming error of the Boolean reconstruction.
    pub reconstruction_error: usize,
    /// False if every restart hit the iteration cap or needed force-filling.
    pub converged: bool,
}

/// Fixed-width bit vector with the handful of operations the solver needs.
/// Unused tail bits of the last word are kept at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
    len: usize,
}

impl Bits {
    fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    fn from_row(x: &NodeFeatures, u: NodeId) -> Self {
        let mut b = Self::zeros(x.dim());
        for d in 0..x.dim() {
            if x.get(u, d) {
                b.set(d, true);
            }
        }
        b
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, value: bool) {
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    fn hamming(&self, other: &Self) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// Hamming distance between `x` and `a | b`, without materializing the OR.
    fn hamming_to_or(x: &Self, a: &Self, b: &Self) -> usize {
        x.words
            .iter()
            .zip(a.words.iter().zip(&b.words))
            .map(|(x, (a, b))| (x ^ (a | b)).count_ones() as usize)
            .sum()
    }

    fn or_assign(&mut self, other: &Self) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }
}

/// OR of the prototypes a node belongs to.
fn cover_of(s: &BTreeSet<usize>, protos: &[Bits], dim: usize) -> Bits {
    let mut cover = Bits::zeros(dim);
    for &c in s {
        cover.or_assign(&protos[c]);
    }
    cover
}

fn total_error(rows: &[Bits], memberships: &[BTreeSet<usize>], protos: &[Bits], dim: usize) -> usize {
    rows.iter()
        .zip(memberships)
        .map(|(row, s)| cover_of(s, protos, dim).hamming(row))
        .sum()
}

/// Greedy multi-assignment for one node: start from the best single
/// community, then add communities while each addition strictly lowers the
/// node's reconstruction error. Ties prefer the lowest community index.
fn assign_node(row: &Bits, protos: &[Bits]) -> BTreeSet<usize> {
    let c = protos.len();
    let mut best_c = 0;
    let mut best_err = row.hamming(&protos[0]);
    for (k, p) in protos.iter().enumerate().skip(1) {
        let e = row.hamming(p);
        if e < best_err {
            best_err = e;
            best_c = k;
        }
    }
    let mut s = BTreeSet::from([best_c]);
    let mut cover = protos[best_c].clone();
    let mut err = best_err;
    loop {
        let mut pick: Option<(usize, usize)> = None;
        for (k, proto) in protos.iter().enumerate().take(c) {
            if s.contains(&k) {
                continue;
            }
            let e = Bits::hamming_to_or(row, &cover, proto);
            if e < err && pick.is_none_or(|(_, pe)| e < pe) {
                pick = Some((k, e));
            }
        }
        match pick {
            Some((k, e)) => {
                s.insert(k);
                cover.or_assign(&protos[k]);
                err = e;
            }
            None => break,
        }
    }
    s
}

/// Per-bit coordinate update of one community's prototype, holding
/// assignments and the other prototypes fixed. Flips a bit only when that
/// strictly lowers the summed error over the community's members.
fn update_prototype(
    k: usize,
    rows: &[Bits],
    memberships: &[BTreeSet<usize>],
    protos: &mut [Bits],
    dim: usize,
) -> bool {
    let members: Vec<usize> =
        (0..rows.len()).filter(|&u| memberships[u].contains(&k)).collect();
    if members.is_empty() {
        return false;
    }
    // What each member's cover would be without community k's contribution.
    let others: Vec<Bits> = members
        .iter()
        .map(|&u| {
            let mut cover = Bits::zeros(dim);
            for &c in &memberships[u] {
                if c != k {
                    cover.or_assign(&protos[c]);
                }
            }
            cover
        })
        .collect();
    let mut changed = false;
    for d in 0..dim {
        // Mismatches with the bit set (cover bit forced to 1) vs cleared
        // (cover bit falls back to the other communities').
        let mut cost_one = 0usize;
        let mut cost_zero = 0usize;
        for (i, &u) in members.iter().enumerate() {
            let xd = rows[u].get(d);
            if !xd {
                cost_one += 1;
            }
            if xd != others[i].get(d) {
                cost_zero += 1;
            }
        }
        let cur = protos[k].get(d);
        // Flip only on strict improvement; ties keep the current bit.
        let target = if cur { cost_zero >= cost_one } else { cost_one < cost_zero };
        if target != cur {
            protos[k].set(d, target);
            changed = true;
        }
    }
    changed
}

/// Weighted seeding in the style of kmeans++: the first prototype copies a
/// uniformly drawn node row, later ones copy rows drawn with probability
/// proportional to the squared Hamming distance to the nearest chosen row.
fn seed_prototypes(rows: &[Bits], c: usize, rng: &mut ChaCha8Rng) -> Vec<Bits> {
    let n = rows.len();
    let mut chosen: Vec<usize> = Vec::with_capacity(c);
    let mut protos: Vec<Bits> = Vec::with_capacity(c);
    let first = rng.random_range(0..n);
    chosen.push(first);
    protos.push(rows[first].clone());
    while protos.len() < c {
        let weights: Vec<f64> = (0..n)
            .map(|u| {
                if chosen.contains(&u) {
                    0.0
                } else {
                    let d = protos.iter().map(|p| p.hamming(&rows[u])).min().unwrap();
                    (d * d) as f64
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut x = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (u, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    x -= w;
                    if x <= 0.0 {
                        pick = u;
                        break;
                    }
                }
            }
            pick
        } else {
            // All remaining rows duplicate a chosen one; take the lowest
            // unchosen id uniformly at random among them.
            let remaining: Vec<usize> = (0..n).filter(|u| !chosen.contains(u)).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        chosen.push(pick);
        protos.push(rows[pick].clone());
    }
    protos
}

struct Solve {
    memberships: Vec<BTreeSet<usize>>,
    protos: Vec<Bits>,
    error: usize,
    converged: bool,
}

fn solve_once(rows: &[Bits], c: usize, dim: usize, max_iters: usize, rng: &mut ChaCha8Rng) -> Solve {
    let mut protos = seed_prototypes(rows, c, rng);
    let mut memberships: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); rows.len()];
    let mut converged = false;
    for _ in 0..max_iters {
        let next: Vec<BTreeSet<usize>> =
            rows.iter().map(|row| assign_node(row, &protos)).collect();
        let assignments_changed = next != memberships;
        memberships = next;
        let mut protos_changed = false;
        for k in 0..c {
            protos_changed |= update_prototype(k, rows, &memberships, &mut protos, dim);
        }
        if !assignments_changed && !protos_changed {
            converged = true;
            break;
        }
    }
    let error = total_error(rows, &memberships, &protos, dim);
    Solve { memberships, protos, error, converged }
}

fn has_empty_community(memberships: &[BTreeSet<usize>], c: usize) -> bool {
    let mut seen = vec![false; c];
    for s in memberships {
        for &k in s {
            seen[k] = true;
        }
    }
    seen.iter().any(|&b| !b)
}

/// Last-resort repair: give each empty community the node whose features are
/// closest to its prototype (ties to the lowest node id). The node keeps its
/// other memberships.
fn force_fill(solve: &mut Solve, rows: &[Bits], c: usize, dim: usize) {
    for k in 0..c {
        if solve.memberships.iter().any(|s| s.contains(&k)) {
            continue;
        }
        let u = (0..rows.len())
            .min_by_key(|&u| (rows[u].hamming(&solve.protos[k]), u))
            .expect("at least one node");
        solve.memberships[u].insert(k);
    }
    solve.error = total_error(rows, &solve.memberships, &solve.protos, dim);
}

/// Cluster nodes into `c` possibly overlapping communities by Boolean matrix
/// factorization of the feature matrix.
///
/// Runs `opts.n_restarts` independent solves and keeps the lowest
/// reconstruction error (earliest restart wins ties). A solve that leaves
/// some community empty is re-seeded up to `opts.reseed_cap` times; if the
/// cap is hit the empty communities are force-filled with their
/// nearest-feature node.
pub fn mac_cluster(
    x: &NodeFeatures,
    c: usize,
    seed: u64,
    opts: &MacOptions,
) -> Result<MacResult> {
    let n = x.n_nodes();
    let dim = x.dim();
    if c == 0 {
        return Err(Error::InvalidParameter("need at least one community".into()));
    }
    if n < c {
        return Err(Error::DegenerateInput(format!(
            "{n} nodes cannot host {c} non-empty communities"
        )));
    }
    if dim == 0 {
        return Err(Error::DegenerateInput("features have zero dimension".into()));
    }
    if opts.max_iters == 0 || opts.n_restarts == 0 {
        return Err(Error::InvalidParameter(
            "max_iters and n_restarts must be positive".into(),
        ));
    }

    let rows: Vec<Bits> = (0..n).map(|u| Bits::from_row(x, u)).collect();
    // All restarts and re-seeds consume one generator in sequence, so the
    // whole procedure is a pure function of (x, c, seed, opts).
    let mut rng = stream_rng(seed, STREAM_MAC);
    let mut best: Option<Solve> = None;
    for _ in 0..opts.n_restarts {
        let mut attempt = solve_once(&rows, c, dim, opts.max_iters, &mut rng);
        let mut reseeds = 0;
        while has_empty_community(&attempt.memberships, c) {
            if reseeds >= opts.reseed_cap {
                force_fill(&mut attempt, &rows, c, dim);
                attempt.converged = false;
                break;
            }
            attempt = solve_once(&rows, c, dim, opts.max_iters, &mut rng);
            reseeds += 1;
        }
        if best.as_ref().is_none_or(|b| attempt.error < b.error) {
            best = Some(attempt);
        }
    }
    let best = best.expect("n_restarts >= 1");
    Ok(MacResult {
        affiliation: InitialAffiliation {
            n_communities: c,
            memberships: best.memberships,
        },
        prototypes: best
            .protos
            .iter()
            .map(|p| (0..dim).map(|d| p.get(d)).collect())
            .collect(),
        reconstruction_error: best.error,
        converged: best.converged,
    })
}

/// Sample an inferred edge set from binary memberships: nodes sharing `k`
/// communities are linked with probability `1 - exp(-k)`.
pub fn agm_infer(f0: &InitialAffiliation, seed: u64) -> BTreeSet<(NodeId, NodeId)> {
    let mut rng = stream_rng(seed, STREAM_AGM);
    agm_sample(&f0.to_matrix(), &mut rng)
}

/// Full metadata-only initialization: cluster, then sample an inferred
/// network. Returns the observation (all edges inferred, nothing queried)
/// together with the clustering diagnostics.
pub fn f_init(
    x: &NodeFeatures,
    c: usize,
    seed: u64,
    opts: &MacOptions,
) -> Result<(ObservedNetwork, MacResult)> {
    let mac = mac_cluster(x, c, seed, opts)?;
    let edges = agm_infer(&mac.affiliation, seed);
    let g = ObservedNetwork::with_inferred(x.n_nodes(), edges)?;
    Ok((g, mac))
}

/// Baseline initializer: each node with a non-zero feature row links to its
/// `k` most cosine-similar other non-zero rows (ties broken toward lower
/// ids); the directed selections are merged into an undirected edge set.
/// All-zero rows select no one and are never candidates.
pub fn knn_init(x: &NodeFeatures, k: usize) -> Result<ObservedNetwork> {
    let n = x.n_nodes();
    if n == 0 {
        return Err(Error::DegenerateInput("no nodes".into()));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k < n_nodes, got k={k} with {n} nodes"
        )));
    }
    let rows: Vec<Bits> = (0..n).map(|u| Bits::from_row(x, u)).collect();
    let weights: Vec<usize> = (0..n).map(|u| x.row_weight(u)).collect();
    let nonzero: Vec<usize> = (0..n).filter(|&u| weights[u] > 0).collect();
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for &u in &nonzero {
        let mut scored: Vec<(f64, usize)> = nonzero
            .iter()
            .filter(|&&v| v != u)
            .map(|&v| {
                let inter = rows[u]
                    .words
                    .iter()
                    .zip(&rows[v].words)
                    .map(|(a, b)| (a & b).count_ones() as usize)
                    .sum::<usize>();
                let sim = inter as f64 / ((weights[u] as f64).sqrt() * (weights[v] as f64).sqrt());
                (sim, v)
            })
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(_, v) in scored.iter().take(k) {
            edges.insert(crate::graph::ordered(u, v));
        }
    }
    ObservedNetwork::with_inferred(n, edges)
}
