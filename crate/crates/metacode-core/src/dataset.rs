//! Dataset types and I/O: binary node features, community covers, the SNAP
//! ego-network format, a canonical on-disk format, and synthetic generators.
//!
//! # Formats
//!
//! **Ego format** (four files per network, `<id>.edges`, `<id>.feat`,
//! `<id>.egofeat`, `<id>.circles`): node ids are arbitrary integers; `.feat`
//! lines are `<id> <bit> <bit> ...`; `.egofeat` is one line of bits for the
//! ego itself; `.circles` lines are `<name> <id> <id> ...`. Alters are
//! remapped to dense ids in ascending original-id order, the ego becomes the
//! last id, and an edge from the ego to every alter is added.
//!
//! **Canonical format** (one directory): `meta.json` with `n_nodes`/`dim`,
//! `edges.tsv` with one `u<TAB>v` pair per line, `features.tsv` with
//! `u<TAB>i,j,...` listing the set bits of each non-zero row, and
//! `communities.tsv` with `k<TAB>u,v,...` per community.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ordered, HiddenNetwork, NodeId};
use crate::seeding::{stream_rng, STREAM_SYNTH};

/// Binary node metadata: an `n_nodes x dim` 0/1 matrix stored densely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeFeatures {
    n_nodes: usize,
    dim: usize,
    bits: Vec<bool>,
}

impl NodeFeatures {
    /// An all-zero feature matrix.
    pub fn zeros(n_nodes: usize, dim: usize) -> Self {
        Self { n_nodes, dim, bits: vec![false; n_nodes * dim] }
    }

    /// Build from per-node rows, which must all have the same length.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let n_nodes = rows.len();
        let dim = rows.first().map_or(0, Vec::len);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "feature row {i} has {} entries, expected {dim}",
                    r.len()
                )));
            }
        }
        let bits = rows.into_iter().flatten().collect();
        Ok(Self { n_nodes, dim, bits })
    }

    /// Number of nodes (rows).
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Feature dimension (columns).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The bit at `(u, d)`.
    pub fn get(&self, u: NodeId, d: usize) -> bool {
        self.bits[u * self.dim + d]
    }

    /// Set the bit at `(u, d)`.
    pub fn set(&mut self, u: NodeId, d: usize, value: bool) {
        self.bits[u * self.dim + d] = value;
    }

    /// Indices of the set bits in row `u`, ascending.
    pub fn ones_in_row(&self, u: NodeId) -> Vec<usize> {
        (0..self.dim).filter(|&d| self.get(u, d)).collect()
    }

    /// Number of set bits in row `u`.
    pub fn row_weight(&self, u: NodeId) -> usize {
        (0..self.dim).filter(|&d| self.get(u, d)).count()
    }

    /// The matrix as `f64` entries in `{0.0, 1.0}`.
    pub fn to_dense(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n_nodes, self.dim), |(u, d)| {
            if self.get(u, d) {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// A set of possibly overlapping communities over dense node ids.
///
/// Ground-truth covers contain only non-empty communities; covers extracted
/// from affiliations drop empty communities before they reach this type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunityCover {
    communities: Vec<BTreeSet<NodeId>>,
}

impl CommunityCover {
    /// Wrap a list of communities.
    pub fn new(communities: Vec<BTreeSet<NodeId>>) -> Self {
        Self { communities }
    }

    /// Number of communities.
    pub fn n_communities(&self) -> usize {
        self.communities.len()
    }

    /// Whether the cover has no communities at all.
    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// The communities, in index order.
    pub fn communities(&self) -> &[BTreeSet<NodeId>] {
        &self.communities
    }

    /// All nodes that belong to at least one community.
    pub fn covered_nodes(&self) -> BTreeSet<NodeId> {
        self.communities.iter().flatten().copied().collect()
    }

    /// Communities containing each node, as one set per node.
    pub fn memberships(&self, n_nodes: usize) -> Vec<BTreeSet<usize>> {
        let mut out = vec![BTreeSet::new(); n_nodes];
        for (k, comm) in self.communities.iter().enumerate() {
            for &u in comm {
                out[u].insert(k);
            }
        }
        out
    }

    /// Error if any member id is outside `0..n_nodes`.
    pub fn check_members(&self, n_nodes: usize) -> Result<()> {
        for comm in &self.communities {
            for &u in comm {
                if u >= n_nodes {
                    return Err(Error::UnknownNode { id: u, n_nodes });
                }
            }
        }
        Ok(())
    }

    /// Error if any community is empty.
    pub fn check_non_empty(&self) -> Result<()> {
        if let Some(k) = self.communities.iter().position(BTreeSet::is_empty) {
            return Err(Error::InvalidParameter(format!("community {k} is empty")));
        }
        Ok(())
    }
}

/// A complete benchmark instance: the hidden ground-truth network (which
/// carries its community cover) plus the node metadata visible up front.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Ground truth; runtime access goes through a query oracle.
    pub hidden: HiddenNetwork,
    /// Binary node features, fully visible to the learner.
    pub features: NodeFeatures,
}

impl Dataset {
    /// The ground-truth community cover.
    pub fn truth(&self) -> &CommunityCover {
        self.hidden.truth_cover()
    }
}

fn read_file(path: &Path) -> Result<String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::MissingFile(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_error(file: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { file: file.to_path_buf(), line, msg: msg.into() }
}

fn parse_bit(tok: &str, file: &Path, line: usize) -> Result<bool> {
    match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_error(file, line, format!("expected 0 or 1, found {other:?}"))),
    }
}

fn parse_raw_id(tok: &str, file: &Path, line: usize) -> Result<u64> {
    tok.parse::<u64>()
        .map_err(|_| parse_error(file, line, format!("expected a node id, found {tok:?}")))
}

/// Load an ego network given the directory and the ego's id (the shared
/// prefix of the four files, e.g. `"0"` for `0.edges` etc.).
///
/// See the module docs for the id-remapping rules.
pub fn load_ego_network(dir: &Path, ego_id: &str) -> Result<Dataset> {
    let feat_path = dir.join(format!("{ego_id}.feat"));
    let egofeat_path = dir.join(format!("{ego_id}.egofeat"));
    let edges_path = dir.join(format!("{ego_id}.edges"));
    let circles_path = dir.join(format!("{ego_id}.circles"));

    // Alter features; establishes the dimension and the id remapping.
    let mut alter_rows: BTreeMap<u64, Vec<bool>> = BTreeMap::new();
    let mut dim: Option<usize> = None;
    let feat_text = read_file(&feat_path)?;
    for (i, line) in feat_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let id = parse_raw_id(toks.next().unwrap(), &feat_path, lineno)?;
        let bits: Vec<bool> = toks
            .map(|t| parse_bit(t, &feat_path, lineno))
            .collect::<Result<_>>()?;
        match dim {
            None => {
                if bits.is_empty() {
                    return Err(parse_error(&feat_path, lineno, "feature row has no bits"));
                }
                dim = Some(bits.len());
            }
            Some(d) if d != bits.len() => {
                return Err(Error::InconsistentDims {
                    file: feat_path.clone(),
                    line: lineno,
                    expected: d,
                    found: bits.len(),
                });
            }
            Some(_) => {}
        }
        if alter_rows.insert(id, bits).is_some() {
            return Err(parse_error(&feat_path, lineno, format!("duplicate node id {id}")));
        }
    }
    let dim = dim.ok_or_else(|| {
        Error::DegenerateInput(format!("{}: no feature rows", feat_path.display()))
    })?;

    // Ego features: exactly one line of bits, no leading id.
    let ego_text = read_file(&egofeat_path)?;
    let mut ego_bits: Option<Vec<bool>> = None;
    for (i, line) in ego_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        if ego_bits.is_some() {
            return Err(parse_error(&egofeat_path, lineno, "more than one feature line"));
        }
        let bits: Vec<bool> = line
            .split_whitespace()
            .map(|t| parse_bit(t, &egofeat_path, lineno))
            .collect::<Result<_>>()?;
        if bits.len() != dim {
            return Err(Error::InconsistentDims {
                file: egofeat_path.clone(),
                line: lineno,
                expected: dim,
                found: bits.len(),
            });
        }
        ego_bits = Some(bits);
    }
    let ego_bits = ego_bits.ok_or_else(|| {
        Error::DegenerateInput(format!("{}: no feature line", egofeat_path.display()))
    })?;

    // Dense remapping: alters in ascending original id, then the ego.
    let dense: BTreeMap<u64, NodeId> =
        alter_rows.keys().enumerate().map(|(i, &id)| (id, i)).collect();
    let ego_dense: NodeId = dense.len();
    let n_nodes = dense.len() + 1;
    let ego_raw: Option<u64> = ego_id.parse().ok();

    let lookup = |tok_id: u64, file: &Path, lineno: usize| -> Result<NodeId> {
        if let Some(&d) = dense.get(&tok_id) {
            Ok(d)
        } else if Some(tok_id) == ego_raw {
            Ok(ego_dense)
        } else {
            Err(parse_error(file, lineno, format!("unknown node id {tok_id}")))
        }
    };

    // Edges among alters; both orientations and repeats collapse to one edge.
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    let edges_text = read_file(&edges_path)?;
    for (i, line) in edges_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_error(&edges_path, lineno, "expected two node ids"));
        }
        let u = lookup(parse_raw_id(toks[0], &edges_path, lineno)?, &edges_path, lineno)?;
        let v = lookup(parse_raw_id(toks[1], &edges_path, lineno)?, &edges_path, lineno)?;
        if u == v {
            return Err(parse_error(&edges_path, lineno, "self-loop"));
        }
        edges.insert(ordered(u, v));
    }
    // The ego is adjacent to every alter by construction of the format.
    for alter in 0..ego_dense {
        edges.insert((alter, ego_dense));
    }

    // Circles become the ground-truth cover, in file order.
    let mut communities: Vec<BTreeSet<NodeId>> = Vec::new();
    let circles_text = read_file(&circles_path)?;
    for (i, line) in circles_text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        toks.next(); // circle name; unused beyond ordering
        let mut members = BTreeSet::new();
        for t in toks {
            let raw = parse_raw_id(t, &circles_path, lineno)?;
            members.insert(lookup(raw, &circles_path, lineno)?);
        }
        // A named circle with no members carries no information; skip it so
        // the cover keeps its non-empty invariant.
        if !members.is_empty() {
            communities.push(members);
        }
    }

    let mut rows: Vec<Vec<bool>> = alter_rows.into_values().collect();
    rows.push(ego_bits);
    let features = NodeFeatures::from_rows(rows)?;
    let hidden = HiddenNetwork::new(n_nodes, edges, CommunityCover::new(communities))?;
    Ok(Dataset { hidden, features })
}

#[derive(Debug, Serialize, Deserialize)]
struct CanonicalMeta {
    n_nodes: usize,
    dim: usize,
}

/// Load a dataset in the canonical directory format.
pub fn load_canonical(dir: &Path) -> Result<Dataset> {
    let meta_path = dir.join("meta.json");
    let meta: CanonicalMeta = serde_json::from_str(&read_file(&meta_path)?)?;
    if meta.n_nodes == 0 {
        return Err(Error::DegenerateInput(format!(
            "{}: n_nodes must be positive",
            meta_path.display()
        )));
    }

    let check_id = |id: u64, file: &Path, lineno: usize| -> Result<NodeId> {
        if (id as usize) < meta.n_nodes {
            Ok(id as usize)
        } else {
            Err(parse_error(file, lineno, format!("node id {id} out of range")))
        }
    };

    let edges_path = dir.join("edges.tsv");
    let mut edges: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for (i, line) in read_file(&edges_path)?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_error(&edges_path, lineno, "expected two node ids"));
        }
        let u = check_id(parse_raw_id(toks[0], &edges_path, lineno)?, &edges_path, lineno)?;
        let v = check_id(parse_raw_id(toks[1], &edges_path, lineno)?, &edges_path, lineno)?;
        if u == v {
            return Err(parse_error(&edges_path, lineno, "self-loop"));
        }
        edges.insert(ordered(u, v));
    }

    let feat_path = dir.join("features.tsv");
    let mut features = NodeFeatures::zeros(meta.n_nodes, meta.dim);
    let mut seen_rows: BTreeSet<NodeId> = BTreeSet::new();
    for (i, line) in read_file(&feat_path)?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let u = check_id(parse_raw_id(toks.next().unwrap(), &feat_path, lineno)?, &feat_path, lineno)?;
        if !seen_rows.insert(u) {
            return Err(parse_error(&feat_path, lineno, format!("duplicate row for node {u}")));
        }
        if let Some(idx_list) = toks.next() {
            for tok in idx_list.split(',').filter(|t| !t.is_empty()) {
                let d = parse_raw_id(tok, &feat_path, lineno)? as usize;
                if d >= meta.dim {
                    return Err(parse_error(
                        &feat_path,
                        lineno,
                        format!("feature index {d} out of range (dim {})", meta.dim),
                    ));
                }
                features.set(u, d, true);
            }
        }
        if toks.next().is_some() {
            return Err(parse_error(&feat_path, lineno, "trailing tokens"));
        }
    }

    let comm_path = dir.join("communities.tsv");
    let mut by_index: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
    for (i, line) in read_file(&comm_path)?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let k = parse_raw_id(toks.next().unwrap(), &comm_path, lineno)? as usize;
        let mut members = BTreeSet::new();
        if let Some(member_list) = toks.next() {
            for tok in member_list.split(',').filter(|t| !t.is_empty()) {
                members.insert(check_id(
                    parse_raw_id(tok, &comm_path, lineno)?,
                    &comm_path,
                    lineno,
                )?);
            }
        }
        if members.is_empty() {
            return Err(parse_error(&comm_path, lineno, format!("community {k} is empty")));
        }
        if by_index.insert(k, members).is_some() {
            return Err(parse_error(&comm_path, lineno, format!("duplicate community id {k}")));
        }
    }
    let n_comm = by_index.len();
    if by_index.keys().next_back().is_some_and(|&max| max + 1 != n_comm) {
        return Err(parse_error(&comm_path, 1, "community ids must be contiguous from 0"));
    }
    let cover = CommunityCover::new(by_index.into_values().collect());

    let hidden = HiddenNetwork::new(meta.n_nodes, edges, cover)?;
    Ok(Dataset { hidden, features })
}

/// Write a dataset to `dir` in the canonical format. Existing files are
/// overwritten. Round-trips exactly through [`load_canonical`].
pub fn write_canonical(dir: &Path, data: &Dataset) -> Result<()> {
    data.hidden.truth_cover().check_non_empty()?;
    std::fs::create_dir_all(dir)?;

    let meta = CanonicalMeta {
        n_nodes: data.hidden.n_nodes(),
        dim: data.features.dim(),
    };
    let mut meta_json = serde_json::to_string(&meta)?;
    meta_json.push('\n');
    std::fs::write(dir.join("meta.json"), meta_json)?;

    let mut edges_out = String::new();
    for (u, v) in data.hidden.edges() {
        edges_out.push_str(&format!("{u}\t{v}\n"));
    }
    std::fs::write(dir.join("edges.tsv"), edges_out)?;

    let mut feat_out = String::new();
    for u in 0..data.features.n_nodes() {
        let ones = data.features.ones_in_row(u);
        if ones.is_empty() {
            continue;
        }
        let joined: Vec<String> = ones.iter().map(usize::to_string).collect();
        feat_out.push_str(&format!("{u}\t{}\n", joined.join(",")));
    }
    std::fs::write(dir.join("features.tsv"), feat_out)?;

    let mut comm_out = String::new();
    for (k, comm) in data.hidden.truth_cover().communities().iter().enumerate() {
        let joined: Vec<String> = comm.iter().map(usize::to_string).collect();
        comm_out.push_str(&format!("{k}\t{}\n", joined.join(",")));
    }
    std::fs::write(dir.join("communities.tsv"), comm_out)?;
    Ok(())
}

/// Sample an undirected graph from an affiliation matrix: each pair `u < v`
/// gets an edge independently with probability `1 - exp(-F_u . F_v)`.
///
/// One uniform draw is consumed per pair whatever the probability, so the
/// mapping from seed to edge set is stable under changes elsewhere.
pub(crate) fn agm_sample(f: &Array2<f64>, rng: &mut ChaCha8Rng) -> BTreeSet<(NodeId, NodeId)> {
    let n = f.nrows();
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let dot = f.row(u).dot(&f.row(v));
            let p = 1.0 - (-dot).exp();
            if rng.random::<f64>() < p {
                edges.insert((u, v));
            }
        }
    }
    edges
}

/// Sample a ground-truth network from a non-negative affiliation matrix.
///
/// The truth cover is the column support of `f0` (community `c` holds the
/// nodes with `f0[u][c] > 0`), so every column must have at least one
/// positive entry.
pub fn synth_agm(f0: &Array2<f64>, seed: u64) -> Result<HiddenNetwork> {
    if f0.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidParameter(
            "affiliation entries must be finite and non-negative".into(),
        ));
    }
    let (n, c) = f0.dim();
    if n == 0 {
        return Err(Error::DegenerateInput("affiliation matrix has no rows".into()));
    }
    let mut communities = Vec::with_capacity(c);
    for k in 0..c {
        let members: BTreeSet<NodeId> =
            (0..n).filter(|&u| f0[[u, k]] > 0.0).collect();
        if members.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "column {k} has no positive entries, its community would be empty"
            )));
        }
        communities.push(members);
    }
    let mut rng = stream_rng(seed, STREAM_SYNTH);
    let edges = agm_sample(f0, &mut rng);
    HiddenNetwork::new(n, edges, CommunityCover::new(communities))
}

/// Knobs for [`synth_planted`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedConfig {
    /// Number of nodes.
    pub n_nodes: usize,
    /// Number of planted communities.
    pub n_communities: usize,
    /// Probability that a node joins a second community.
    pub overlap: f64,
    /// Probability of flipping each feature bit after planting.
    pub feature_noise: f64,
    /// Affiliation weight for each membership (edge probability between
    /// nodes sharing `k` communities is `1 - exp(-k * w^2)`).
    pub membership_weight: f64,
    /// RNG seed.
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            n_nodes: 50,
            n_communities: 4,
            overlap: 0.3,
            feature_noise: 0.0,
            membership_weight: 1.0,
            seed: 0,
        }
    }
}

/// Generate a planted-partition dataset with overlap.
///
/// Node `u`'s primary community is `u % n_communities` (so communities are
/// balanced and non-empty whenever `n_nodes >= n_communities`); with
/// probability `overlap` it also joins one other community. Edges are drawn
/// from the affiliation model over the planted memberships, and features are
/// the membership indicator bits (dimension `n_communities`), optionally
/// corrupted by independent bit flips.
pub fn synth_planted(cfg: &PlantedConfig) -> Result<Dataset> {
    let (n, c) = (cfg.n_nodes, cfg.n_communities);
    if c == 0 || n < c {
        return Err(Error::DegenerateInput(format!(
            "{n} nodes cannot host {c} non-empty communities"
        )));
    }
    for (name, v) in [("overlap", cfg.overlap), ("feature_noise", cfg.feature_noise)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} must be in [0, 1], got {v}")));
        }
    }
    if !(cfg.membership_weight.is_finite() && cfg.membership_weight > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "membership_weight must be positive, got {}",
            cfg.membership_weight
        )));
    }

    let mut rng = stream_rng(cfg.seed, STREAM_SYNTH);
    let mut memberships: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
    for u in 0..n {
        let primary = u % c;
        let mut s = BTreeSet::from([primary]);
        if c >= 2 && rng.random::<f64>() < cfg.overlap {
            let mut k = rng.random_range(0..c - 1);
            if k >= primary {
                k += 1;
            }
            s.insert(k);
        }
        memberships.push(s);
    }

    let mut f0 = Array2::<f64>::zeros((n, c));
    for (u, s) in memberships.iter().enumerate() {
        for &k in s {
            f0[[u, k]] = cfg.membership_weight;
        }
    }
    let edges = agm_sample(&f0, &mut rng);

    let mut features = NodeFeatures::zeros(n, c);
    for (u, s) in memberships.iter().enumerate() {
        for &k in s {
            features.set(u, k, true);
        }
    }
    if cfg.feature_noise > 0.0 {
        for u in 0..n {
            for d in 0..c {
                if rng.random::<f64>() < cfg.feature_noise {
                    let cur = features.get(u, d);
                    features.set(u, d, !cur);
                }
            }
        }
    }

    let communities: Vec<BTreeSet<NodeId>> = (0..c)
        .map(|k| (0..n).filter(|u| memberships[*u].contains(&k)).collect())
        .collect();
    let hidden = HiddenNetwork::new(n, edges, CommunityCover::new(communities))?;
    Ok(Dataset { hidden, features })
}

/// Split a CLI-style ego path (`.../facebook/0`) into directory and ego id.
pub fn split_ego_path(path: &Path) -> Result<(PathBuf, String)> {
    let dir = path.parent().map(Path::to_path_buf).ok_or_else(|| {
        Error::InvalidParameter(format!("ego path {} has no parent directory", path.display()))
    })?;
    let id = path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| {
            Error::InvalidParameter(format!("ego path {} has no file name", path.display()))
        })?
        .to_string();
    Ok((dir, id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn fixture(rel: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
    }

    #[test]
    fn ego_fixture_parses_with_remapping() {
        let data = load_ego_network(&fixture("ego"), "0").unwrap();
        // Alters 5, 9, 12 become 0, 1, 2; ego becomes 3.
        assert_eq!(data.hidden.n_nodes(), 4);
        assert_eq!(data.features.dim(), 4);
        // (5,9) listed in both orientations collapses to one edge; the ego
        // connects to every alter.
        assert_eq!(
            data.hidden.edges(),
            BTreeSet::from([(0, 1), (1, 2), (0, 3), (1, 3), (2, 3)])
        );
        assert_eq!(
            data.hidden.truth_cover().communities(),
            &[BTreeSet::from([0, 1]), BTreeSet::from([2])]
        );
        // Feature rows follow ascending original id, ego last.
        assert_eq!(data.features.ones_in_row(0), vec![0, 3]); // node 5
        assert_eq!(data.features.ones_in_row(1), vec![1, 2]); // node 9
        assert_eq!(data.features.ones_in_row(2), vec![0, 1]); // node 12
        assert_eq!(data.features.ones_in_row(3), vec![0]); // ego
    }

    #[test]
    fn ego_loader_reports_missing_files() {
        let err = load_ego_network(&fixture("ego"), "99").unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)), "{err}");
    }

    #[test]
    fn ego_loader_rejects_unknown_edge_ids() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("7.feat"), "1 1 0\n2 0 1\n").unwrap();
        std::fs::write(dir.path().join("7.egofeat"), "1 1\n").unwrap();
        std::fs::write(dir.path().join("7.edges"), "1 3\n").unwrap();
        std::fs::write(dir.path().join("7.circles"), "circle0\t1\n").unwrap();
        let err = load_ego_network(dir.path(), "7").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("7.edges:1") && msg.contains("unknown node id 3"), "{msg}");
    }

    #[test]
    fn ego_loader_rejects_ragged_features() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("7.feat"), "1 1 0\n2 0 1 1\n").unwrap();
        std::fs::write(dir.path().join("7.egofeat"), "1 1\n").unwrap();
        std::fs::write(dir.path().join("7.edges"), "").unwrap();
        std::fs::write(dir.path().join("7.circles"), "").unwrap();
        let err = load_ego_network(dir.path(), "7").unwrap_err();
        assert!(
            matches!(err, Error::InconsistentDims { line: 2, expected: 2, found: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn canonical_fixture_parses() {
        let data = load_canonical(&fixture("canonical")).unwrap();
        assert_eq!(data.hidden.n_nodes(), 5);
        assert_eq!(data.features.dim(), 3);
        assert_eq!(data.hidden.edges(), BTreeSet::from([(0, 1), (1, 2), (3, 4)]));
        assert_eq!(data.features.ones_in_row(0), vec![0, 2]);
        assert_eq!(data.features.ones_in_row(3), Vec::<usize>::new());
        assert_eq!(
            data.hidden.truth_cover().communities(),
            &[BTreeSet::from([0, 1, 2]), BTreeSet::from([3, 4])]
        );
    }

    #[test]
    fn canonical_round_trip_is_exact() {
        let data = synth_planted(&PlantedConfig {
            n_nodes: 23,
            n_communities: 3,
            overlap: 0.4,
            feature_noise: 0.1,
            ..Default::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_canonical(dir.path(), &data).unwrap();
        let back = load_canonical(dir.path()).unwrap();
        assert_eq!(back.hidden.n_nodes(), data.hidden.n_nodes());
        assert_eq!(back.hidden.edges(), data.hidden.edges());
        assert_eq!(back.features, data.features);
        assert_eq!(back.hidden.truth_cover(), data.hidden.truth_cover());
    }

    #[test]
    fn canonical_loader_flags_bad_ids_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("meta.json"), "{\"n_nodes\":3,\"dim\":2}\n").unwrap();
        std::fs::write(dir.path().join("edges.tsv"), "0\t1\n1\t9\n").unwrap();
        std::fs::write(dir.path().join("features.tsv"), "0\t0\n").unwrap();
        std::fs::write(dir.path().join("communities.tsv"), "0\t0,1\n").unwrap();
        let err = load_canonical(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edges.tsv:2") && msg.contains("out of range"), "{msg}");
    }

    #[test]
    fn synth_agm_edge_frequencies_follow_the_model() {
        // Rows share 0 or 1 communities; check Monte-Carlo frequencies.
        let f0 = ndarray::arr2(&[[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let trials = 4000;
        let mut counts = [0usize; 3]; // (0,1), (0,2), (1,2)
        for seed in 0..trials {
            let h = synth_agm(&f0, seed).unwrap();
            if h.has_edge(0, 1) {
                counts[0] += 1;
            }
            if h.has_edge(0, 2) {
                counts[1] += 1;
            }
            if h.has_edge(1, 2) {
                counts[2] += 1;
            }
        }
        let p_share1 = 1.0 - (-1.0f64).exp(); // 0.6321...
        let f01 = counts[0] as f64 / trials as f64;
        let f12 = counts[2] as f64 / trials as f64;
        assert!((f01 - p_share1).abs() < 0.03, "freq {f01} vs {p_share1}");
        assert!((f12 - p_share1).abs() < 0.03, "freq {f12} vs {p_share1}");
        // Disjoint memberships: probability exactly 0.
        assert_eq!(counts[1], 0);
    }

    #[test]
    fn synth_agm_rejects_empty_columns() {
        let f0 = ndarray::arr2(&[[1.0, 0.0], [1.0, 0.0]]);
        assert!(synth_agm(&f0, 0).is_err());
    }

    #[test]
    fn synth_planted_is_deterministic_and_well_formed() {
        let cfg = PlantedConfig { seed: 11, ..Default::default() };
        let a = synth_planted(&cfg).unwrap();
        let b = synth_planted(&cfg).unwrap();
        assert_eq!(a.hidden.edges(), b.hidden.edges());
        assert_eq!(a.features, b.features);
        assert_eq!(a.hidden.truth_cover(), b.hidden.truth_cover());
        assert_eq!(a.hidden.truth_cover().n_communities(), 4);
        a.hidden.truth_cover().check_non_empty().unwrap();
        // Without noise, features are exactly the membership indicators.
        let members = a.hidden.truth_cover().memberships(50);
        for (u, member) in members.iter().enumerate() {
            let bits: Vec<usize> = a.features.ones_in_row(u);
            let expect: Vec<usize> = member.iter().copied().collect();
            assert_eq!(bits, expect);
        }
    }

    #[test]
    fn features_round_trip_through_dense() {
        let x = NodeFeatures::from_rows(vec![
            vec![true, false, true],
            vec![false, false, false],
        ])
        .unwrap();
        let dense = x.to_dense();
        assert_eq!(dense.shape(), &[2, 3]);
        assert_eq!(dense[[0, 0]], 1.0);
        assert_eq!(dense[[0, 1]], 0.0);
        assert_eq!(x.row_weight(0), 2);
        assert_eq!(x.row_weight(1), 0);
    }

    #[test]
    fn write_canonical_is_byte_stable() {
        let data = synth_planted(&PlantedConfig::default()).unwrap();
        let mut dumps = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().unwrap();
            write_canonical(dir.path(), &data).unwrap();
            let mut all = String::new();
            for f in ["meta.json", "edges.tsv", "features.tsv", "communities.tsv"] {
                write!(all, "{}", std::fs::read_to_string(dir.path().join(f)).unwrap()).unwrap();
            }
            dumps.push(all);
        }
        assert_eq!(dumps[0], dumps[1]);
    }
}
