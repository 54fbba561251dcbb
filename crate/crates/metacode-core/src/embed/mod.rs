//! Community-affiliation embedding: a two-layer graph convolutional network
//! trained to reconstruct the observed edges and the node metadata.
//!
//! The forward pass is `F = relu(A_hat . relu(A_hat . X . W1) . W2)` where
//! `A_hat` is the symmetrically normalized adjacency (with self-loops) of
//! the observed network and `X` the binary features. The non-negative output
//! rows are community affiliations: the model treats an edge as present with
//! probability `1 - exp(-F_u . F_v)` and bit `d` of node `u`'s metadata as
//! Bernoulli with probability `sigmoid(F_u . w_attr[d])`.
//!
//! Training minimizes `L = L_structure + eta * L_attribute` with full-batch
//! Adam. The structure term sums `-log` edge likelihoods plus the total
//! affiliation overlap across non-edges; the latter is computed in closed
//! form (see [`loss`]) so an epoch costs `O((N + |E|) * C)` instead of
//! `O(N^2 * C)`.

mod adam;
mod gcn;
mod gradcheck;
mod loss;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::ObservedNetwork;
use crate::seeding::{stream_rng, STREAM_PARAMS};

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON};
pub use gcn::{gcn_forward, gcn_forward_full, ForwardPass};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport, InstanceCheck};
pub use loss::{
    attr_prob, edge_prob, loss, loss_breakdown, loss_gradients, Gradients, LossBreakdown,
    EDGE_DOT_FLOOR,
};

/// Non-negative community affiliations, one row per node, one column per
/// community. Produced by the GCN's final relu, so entries are `>= 0` by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AffiliationMatrix {
    /// The raw `n_nodes x n_communities` matrix.
    pub values: Array2<f64>,
}

impl AffiliationMatrix {
    /// Number of nodes (rows).
    pub fn n_nodes(&self) -> usize {
        self.values.nrows()
    }

    /// Number of communities (columns).
    pub fn n_communities(&self) -> usize {
        self.values.ncols()
    }

    /// Node `u`'s affiliation row.
    pub fn row(&self, u: usize) -> ndarray::ArrayView1<'_, f64> {
        self.values.row(u)
    }
}

/// Symmetrically normalized adjacency `D^{-1/2} (A + I) D^{-1/2}` of an
/// observed network, stored sparsely by row.
///
/// `A` is the union of revealed and inferred edges and `D` the degree matrix
/// of `A + I`, so an isolated node contributes a plain identity row and the
/// matrix is symmetric with row entries in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    n_nodes: usize,
    /// Per-row `(column, weight)` entries, sorted by column. Includes the
    /// self-loop entry.
    rows: Vec<Vec<(usize, f64)>>,
}

impl NormalizedAdjacency {
    /// Build from the current observation.
    pub fn from_observed(g: &ObservedNetwork) -> Self {
        let n = g.n_nodes();
        let lists = g.neighbor_lists();
        let inv_sqrt: Vec<f64> =
            lists.iter().map(|l| 1.0 / ((l.len() + 1) as f64).sqrt()).collect();
        let mut rows = Vec::with_capacity(n);
        for u in 0..n {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(lists[u].len() + 1);
            for &v in &lists[u] {
                row.push((v, inv_sqrt[u] * inv_sqrt[v]));
            }
            row.push((u, inv_sqrt[u] * inv_sqrt[u]));
            row.sort_unstable_by_key(|&(v, _)| v);
            rows.push(row);
        }
        Self { n_nodes: n, rows }
    }

    /// Number of nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Sparse-dense product `A_hat . rhs`.
    ///
    /// Panics if `rhs` has the wrong number of rows; the public entry points
    /// validate shapes before calling in.
    pub fn matmul(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.n_nodes, "normalized adjacency applied to wrong shape");
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.n_nodes, k));
        for u in 0..self.n_nodes {
            for &(v, w) in &self.rows[u] {
                let src = rhs.row(v);
                let mut dst = out.row_mut(u);
                for j in 0..k {
                    dst[j] += w * src[j];
                }
            }
        }
        out
    }

    /// Dense copy, for tests and small-scale inspection.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n_nodes, self.n_nodes));
        for (u, row) in self.rows.iter().enumerate() {
            for &(v, w) in row {
                m[[u, v]] = w;
            }
        }
        m
    }
}

/// GCN weights plus the optimizer state that travels with them.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// First-layer weights, `input_dim x hidden_dim`.
    pub w1: Array2<f64>,
    /// Second-layer weights, `hidden_dim x n_communities`.
    pub w2: Array2<f64>,
    /// Attribute-reconstruction weights, `input_dim x n_communities`
    /// (row `d` scores feature `d` against the affiliation vector).
    pub w_attr: Array2<f64>,
    /// Adam moment estimates for all three matrices.
    pub adam: AdamState,
}

fn glorot_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            m[[i, j]] = rng.random::<f64>() * 2.0 * bound - bound;
        }
    }
    m
}

impl ModelParams {
    /// Fresh Glorot-uniform weights and zeroed optimizer state.
    ///
    /// Deterministic in `seed`; the three matrices are filled from one
    /// generator in a fixed order.
    pub fn init(
        input_dim: usize,
        hidden_dim: usize,
        n_communities: usize,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || n_communities == 0 {
            return Err(Error::InvalidParameter(format!(
                "all dimensions must be positive (input {input_dim}, hidden {hidden_dim}, \
                 communities {n_communities})"
            )));
        }
        let mut rng = stream_rng(seed, STREAM_PARAMS);
        let w1 = glorot_uniform(input_dim, hidden_dim, &mut rng);
        let w2 = glorot_uniform(hidden_dim, n_communities, &mut rng);
        let w_attr = glorot_uniform(input_dim, n_communities, &mut rng);
        let adam = AdamState::new(input_dim, hidden_dim, n_communities);
        Ok(Self { w1, w2, w_attr, adam })
    }

    /// Feature dimension the model expects.
    pub fn input_dim(&self) -> usize {
        self.w1.nrows()
    }

    /// Width of the hidden layer.
    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    /// Number of communities (output width).
    pub fn n_communities(&self) -> usize {
        self.w2.ncols()
    }
}

/// Training knobs for [`train`].
#[derive(Debug, Clone)]
pub struct TrainOptions {
    /// Weight of the attribute-reconstruction term.
    pub eta: f64,
    /// Number of full-batch epochs.
    pub epochs: usize,
    /// Adam learning rate.
    pub lr: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { eta: 1.0, epochs: 100, lr: 1e-3 }
    }
}

/// What [`train`] hands back besides the updated parameters.
#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Affiliations from the final forward pass.
    pub affiliations: AffiliationMatrix,
    /// Loss at the parameters passed in (epoch 0, before any step).
    pub initial_loss: f64,
    /// Loss at the returned parameters.
    pub final_loss: f64,
    /// Epochs actually run.
    pub epochs_run: usize,
}

/// Train the embedder on the current observation, updating `params` in
/// place.
///
/// Full-batch gradient descent with Adam; no randomness is consumed, so the
/// result is a pure function of `(g, x, params, opts)`. Aborts with
/// [`Error::NonFiniteLoss`] the moment the loss leaves the finite range.
pub fn train(
    g: &ObservedNetwork,
    x: &crate::dataset::NodeFeatures,
    params: &mut ModelParams,
    opts: &TrainOptions,
) -> Result<TrainReport> {
    if opts.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be positive".into()));
    }
    if !(opts.lr.is_finite() && opts.lr > 0.0) {
        return Err(Error::InvalidParameter(format!("lr must be positive, got {}", opts.lr)));
    }
    if !(opts.eta.is_finite() && opts.eta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be non-negative, got {}",
            opts.eta
        )));
    }
    gcn::check_shapes(g, x, params)?;

    let adj = NormalizedAdjacency::from_observed(g);
    let x_dense = x.to_dense();
    // A_hat and X are fixed for the whole call; their product is the only
    // input the forward pass needs besides the weights.
    let ax = adj.matmul(&x_dense);
    let edges = g.edge_list();

    let mut initial_loss = f64::NAN;
    for epoch in 0..opts.epochs {
        let (loss_val, grads) =
            loss::loss_and_gradients_dense(params, &adj, &ax, &x_dense, &edges, opts.eta)?;
        if !loss_val.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        if epoch == 0 {
            initial_loss = loss_val;
        }
        adam_step(params, &grads, opts.lr)?;
    }

    let fwd = gcn::forward_from_ax(&ax, &adj, params)?;
    let final_loss =
        loss::loss_dense(&fwd.affiliations.values, &params.w_attr, &edges, &x_dense, opts.eta)
            .total;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { epoch: opts.epochs });
    }
    Ok(TrainReport {
        affiliations: fwd.affiliations,
        initial_loss,
        final_loss,
        epochs_run: opts.epochs,
    })
}

/// Column sums of an affiliation matrix (the vector `s` in the closed-form
/// non-edge term).
pub(crate) fn column_sums(f: &Array2<f64>) -> Array1<f64> {
    f.sum_axis(ndarray::Axis(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::NodeFeatures;
    use approx::assert_abs_diff_eq;

    fn tiny_graph() -> ObservedNetwork {
        ObservedNetwork::with_inferred(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn tiny_features() -> NodeFeatures {
        NodeFeatures::from_rows(vec![
            vec![true, false],
            vec![true, true],
            vec![false, true],
        ])
        .unwrap()
    }

    #[test]
    fn normalized_adjacency_single_edge() {
        // Two nodes, one edge: degrees-with-self-loop are 2 and 2, so every
        // entry of the dense normalization is 1/2.
        let g = ObservedNetwork::with_inferred(2, [(0, 1)]).unwrap();
        let a = NormalizedAdjacency::from_observed(&g).to_dense();
        for u in 0..2 {
            for v in 0..2 {
                assert_abs_diff_eq!(a[[u, v]], 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn normalized_adjacency_triangle_and_isolate() {
        // Triangle on {0,1,2} plus isolated node 3.
        let g = ObservedNetwork::with_inferred(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let a = NormalizedAdjacency::from_observed(&g).to_dense();
        for u in 0..3 {
            for v in 0..3 {
                assert_abs_diff_eq!(a[[u, v]], 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(a[[3, 3]], 1.0, epsilon = 1e-15);
        for v in 0..3 {
            assert_eq!(a[[3, v]], 0.0);
            assert_eq!(a[[v, 3]], 0.0);
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric_with_unit_bounded_entries() {
        let g = ObservedNetwork::with_inferred(
            6,
            [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (1, 5)],
        )
        .unwrap();
        let a = NormalizedAdjacency::from_observed(&g).to_dense();
        for u in 0..6 {
            for v in 0..6 {
                assert_abs_diff_eq!(a[[u, v]], a[[v, u]], epsilon = 1e-15);
                assert!(a[[u, v]] >= 0.0 && a[[u, v]] <= 1.0);
            }
        }
    }

    #[test]
    fn sparse_matmul_matches_dense() {
        let g = tiny_graph();
        let adj = NormalizedAdjacency::from_observed(&g);
        let x = tiny_features().to_dense();
        let sparse = adj.matmul(&x);
        let dense = adj.to_dense().dot(&x);
        for (a, b) in sparse.iter().zip(dense.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn params_init_is_seeded_and_bounded() {
        let a = ModelParams::init(5, 4, 3, 9).unwrap();
        let b = ModelParams::init(5, 4, 3, 9).unwrap();
        let c = ModelParams::init(5, 4, 3, 10).unwrap();
        assert_eq!(a.w1, b.w1);
        assert_eq!(a.w_attr, b.w_attr);
        assert_ne!(a.w1, c.w1);
        let bound = (6.0 / 9.0f64).sqrt();
        assert!(a.w1.iter().all(|v| v.abs() <= bound));
        assert_eq!(a.input_dim(), 5);
        assert_eq!(a.hidden_dim(), 4);
        assert_eq!(a.n_communities(), 3);
    }

    #[test]
    fn train_reduces_the_loss_on_a_small_instance() {
        let g = tiny_graph();
        let x = tiny_features();
        let mut p = ModelParams::init(2, 8, 2, 0).unwrap();
        let report =
            train(&g, &x, &mut p, &TrainOptions { eta: 1.0, epochs: 200, lr: 0.01 }).unwrap();
        assert!(report.final_loss.is_finite());
        assert!(
            report.final_loss < report.initial_loss,
            "loss did not improve: {} -> {}",
            report.initial_loss,
            report.final_loss
        );
        assert!(report.affiliations.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn train_is_deterministic() {
        let g = tiny_graph();
        let x = tiny_features();
        let opts = TrainOptions { eta: 1.5, epochs: 50, lr: 0.005 };
        let mut p1 = ModelParams::init(2, 4, 2, 3).unwrap();
        let mut p2 = ModelParams::init(2, 4, 2, 3).unwrap();
        let r1 = train(&g, &x, &mut p1, &opts).unwrap();
        let r2 = train(&g, &x, &mut p2, &opts).unwrap();
        assert_eq!(r1.affiliations.values, r2.affiliations.values);
        assert_eq!(r1.final_loss.to_bits(), r2.final_loss.to_bits());
        assert_eq!(p1.w1, p2.w1);
        assert_eq!(p1.w2, p2.w2);
        assert_eq!(p1.w_attr, p2.w_attr);
    }

    #[test]
    fn train_rejects_zero_epochs() {
        let g = tiny_graph();
        let x = tiny_features();
        let mut p = ModelParams::init(2, 4, 2, 0).unwrap();
        let r = train(&g, &x, &mut p, &TrainOptions { eta: 1.0, epochs: 0, lr: 0.001 });
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn train_rejects_mismatched_feature_dim() {
        let g = tiny_graph();
        let x = tiny_features(); // dim 2
        let mut p = ModelParams::init(3, 4, 2, 0).unwrap(); // expects dim 3
        let r = train(&g, &x, &mut p, &TrainOptions::default());
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
