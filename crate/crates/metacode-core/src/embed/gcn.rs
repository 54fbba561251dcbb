//! Forward and backward passes of the two-layer GCN.

use ndarray::Array2;

use crate::dataset::NodeFeatures;
use crate::error::{Error, Result};
use crate::graph::ObservedNetwork;

use super::{AffiliationMatrix, ModelParams, NormalizedAdjacency};

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Pre-activation of the hidden layer, `(A_hat X) W1`.
    pub hidden_pre: Array2<f64>,
    /// Hidden activations `relu(hidden_pre)`.
    pub hidden: Array2<f64>,
    /// Pre-activation of the output layer, `A_hat (hidden W2)`.
    pub output_pre: Array2<f64>,
    /// Final affiliations `relu(output_pre)`.
    pub affiliations: AffiliationMatrix,
}

fn relu(m: &Array2<f64>) -> Array2<f64> {
    m.mapv(|v| v.max(0.0))
}

pub(crate) fn check_shapes(
    g: &ObservedNetwork,
    x: &NodeFeatures,
    p: &ModelParams,
) -> Result<()> {
    if x.n_nodes() != g.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "features cover {} nodes but the graph has {}",
            x.n_nodes(),
            g.n_nodes()
        )));
    }
    if x.dim() != p.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "features have dimension {} but W1 expects {}",
            x.dim(),
            p.input_dim()
        )));
    }
    if p.w_attr.nrows() != x.dim() || p.w_attr.ncols() != p.n_communities() {
        return Err(Error::ShapeMismatch(format!(
            "w_attr is {}x{} but must be {}x{}",
            p.w_attr.nrows(),
            p.w_attr.ncols(),
            x.dim(),
            p.n_communities()
        )));
    }
    Ok(())
}

/// Forward pass from the precomputed product `ax = A_hat . X`.
///
/// All callers funnel through here so that the floating-point evaluation
/// order — and therefore the exact bits of the output — is identical whether
/// or not `ax` was cached.
pub(crate) fn forward_from_ax(
    ax: &Array2<f64>,
    adj: &NormalizedAdjacency,
    p: &ModelParams,
) -> Result<ForwardPass> {
    if ax.ncols() != p.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "input has dimension {} but W1 expects {}",
            ax.ncols(),
            p.input_dim()
        )));
    }
    if ax.nrows() != adj.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} rows but the adjacency has {} nodes",
            ax.nrows(),
            adj.n_nodes()
        )));
    }
    let hidden_pre = ax.dot(&p.w1);
    let hidden = relu(&hidden_pre);
    let output_pre = adj.matmul(&hidden.dot(&p.w2));
    let affiliations = AffiliationMatrix { values: relu(&output_pre) };
    Ok(ForwardPass { hidden_pre, hidden, output_pre, affiliations })
}

/// Full forward pass retaining intermediate activations.
pub fn gcn_forward_full(
    adj: &NormalizedAdjacency,
    x: &NodeFeatures,
    p: &ModelParams,
) -> Result<ForwardPass> {
    if x.n_nodes() != adj.n_nodes() {
        return Err(Error::ShapeMismatch(format!(
            "features cover {} nodes but the adjacency has {}",
            x.n_nodes(),
            adj.n_nodes()
        )));
    }
    let ax = adj.matmul(&x.to_dense());
    forward_from_ax(&ax, adj, p)
}

/// Forward pass returning only the affiliations.
pub fn gcn_forward(
    adj: &NormalizedAdjacency,
    x: &NodeFeatures,
    p: &ModelParams,
) -> Result<AffiliationMatrix> {
    Ok(gcn_forward_full(adj, x, p)?.affiliations)
}

/// Backpropagate `d_loss/d_F` through the network, producing gradients for
/// the two layer weights. Relies on `A_hat` being symmetric.
pub(crate) fn backprop(
    ax: &Array2<f64>,
    adj: &NormalizedAdjacency,
    w2: &Array2<f64>,
    fwd: &ForwardPass,
    d_f: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    // Through the output relu.
    let mut d_p2 = d_f.clone();
    d_p2.zip_mut_with(&fwd.output_pre, |g, &pre| {
        if pre <= 0.0 {
            *g = 0.0;
        }
    });
    // Through A_hat (self-adjoint), shared by both remaining paths.
    let a_dp2 = adj.matmul(&d_p2);
    let d_w2 = fwd.hidden.t().dot(&a_dp2);
    let d_hidden = a_dp2.dot(&w2.t());
    // Through the hidden relu.
    let mut d_p1 = d_hidden;
    d_p1.zip_mut_with(&fwd.hidden_pre, |g, &pre| {
        if pre <= 0.0 {
            *g = 0.0;
        }
    });
    let d_w1 = ax.t().dot(&d_p1);
    (d_w1, d_w2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    /// One node, no edges: A_hat is the 1x1 identity, so the network reduces
    /// to relu(relu(x W1) W2), checkable by hand.
    #[test]
    fn forward_single_node_by_hand() {
        let g = ObservedNetwork::new(1);
        let adj = NormalizedAdjacency::from_observed(&g);
        let x = NodeFeatures::from_rows(vec![vec![true, true]]).unwrap();
        let mut p = ModelParams::init(2, 2, 1, 0).unwrap();
        p.w1 = arr2(&[[1.0, -1.0], [0.5, 2.0]]);
        p.w2 = arr2(&[[2.0], [3.0]]);
        // hidden_pre = [1.5, 1.0] -> relu same; output = 1.5*2 + 1*3 = 6.
        let f = gcn_forward(&adj, &x, &p).unwrap();
        assert_abs_diff_eq!(f.values[[0, 0]], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn negative_preactivations_are_clipped() {
        let g = ObservedNetwork::new(1);
        let adj = NormalizedAdjacency::from_observed(&g);
        let x = NodeFeatures::from_rows(vec![vec![true]]).unwrap();
        let mut p = ModelParams::init(1, 1, 1, 0).unwrap();
        p.w1 = arr2(&[[1.0]]);
        p.w2 = arr2(&[[-5.0]]);
        let f = gcn_forward(&adj, &x, &p).unwrap();
        assert_eq!(f.values[[0, 0]], 0.0);
    }

    #[test]
    fn affiliations_are_always_non_negative() {
        let g = ObservedNetwork::with_inferred(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let adj = NormalizedAdjacency::from_observed(&g);
        let x = NodeFeatures::from_rows(
            (0..5).map(|u| (0..3).map(|d| (u + d) % 2 == 0).collect()).collect(),
        )
        .unwrap();
        for seed in 0..5 {
            let p = ModelParams::init(3, 4, 2, seed).unwrap();
            let f = gcn_forward(&adj, &x, &p).unwrap();
            assert!(f.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn forward_rejects_wrong_dims() {
        let g = ObservedNetwork::new(2);
        let adj = NormalizedAdjacency::from_observed(&g);
        let x = NodeFeatures::from_rows(vec![vec![true], vec![false]]).unwrap();
        let p = ModelParams::init(3, 2, 1, 0).unwrap();
        assert!(matches!(gcn_forward(&adj, &x, &p), Err(Error::ShapeMismatch(_))));
    }
}
