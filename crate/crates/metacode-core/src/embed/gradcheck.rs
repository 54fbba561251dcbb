//! Finite-difference validation of the analytic gradients.
//!
//! Instances are generated so the loss is smooth in a neighborhood of the
//! evaluation point: layer weights are drawn strictly positive, and every
//! feature row keeps at least one set bit, so all relu pre-activations and
//! edge dot products sit strictly inside their differentiable regions and a
//! central-difference step cannot cross a kink.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::NodeFeatures;
use crate::error::{Error, Result};
use crate::graph::ObservedNetwork;
use crate::seeding::{stream_rng, STREAM_GRADCHECK};

use super::gcn::gcn_forward_full;
use super::loss::{loss_dense, loss_gradients};
use super::{ModelParams, NormalizedAdjacency};

/// Knobs for [`gradient_check`].
#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Number of random instances.
    pub instances: usize,
    /// Instance-generation seed.
    pub seed: u64,
    /// Central-difference step.
    pub fd_step: f64,
    /// Maximum acceptable relative error.
    pub tolerance: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { instances: 50, seed: 0, fd_step: 1e-5, tolerance: 1e-4 }
    }
}

/// Relative errors for one instance, one entry per weight matrix.
#[derive(Debug, Clone)]
pub struct InstanceCheck {
    /// Relative Frobenius error on d/dW1.
    pub rel_w1: f64,
    /// Relative Frobenius error on d/dW2.
    pub rel_w2: f64,
    /// Relative Frobenius error on d/d w_attr.
    pub rel_w_attr: f64,
    /// Attribute weight used for the instance.
    pub eta: f64,
    /// Instance size.
    pub n_nodes: usize,
}

impl InstanceCheck {
    /// Worst of the three errors.
    pub fn max_rel(&self) -> f64 {
        self.rel_w1.max(self.rel_w2).max(self.rel_w_attr)
    }
}

/// Outcome of a full gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Per-instance errors, in generation order.
    pub checks: Vec<InstanceCheck>,
    /// Worst relative error across all instances and matrices.
    pub max_rel_error: f64,
    /// The tolerance the report was checked against.
    pub tolerance: f64,
}

impl GradCheckReport {
    /// Whether every instance stayed within tolerance.
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

fn positive_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| 0.05 + 0.95 * rng.random::<f64>())
}

fn symmetric_uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| 2.0 * rng.random::<f64>() - 1.0)
}

struct Instance {
    g: ObservedNetwork,
    x: NodeFeatures,
    params: ModelParams,
    eta: f64,
}

fn make_instance(idx: usize, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let n = rng.random_range(3..=6);
    let d = rng.random_range(2..=4);
    let h = 3;
    let c = 2;

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: Vec<bool> = (0..d).map(|_| rng.random::<f64>() < 0.5).collect();
        if row.iter().all(|&b| !b) {
            let j = rng.random_range(0..d);
            row[j] = true;
        }
        rows.push(row);
    }
    let x = NodeFeatures::from_rows(rows)?;

    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < 0.4 {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    let g = ObservedNetwork::with_inferred(n, edges)?;

    let mut params = ModelParams::init(d, h, c, 0)?;
    params.w1 = positive_uniform(d, h, rng);
    params.w2 = positive_uniform(h, c, rng);
    params.w_attr = symmetric_uniform(d, c, rng);
    let eta = [0.0, 1.0, 2.0][idx % 3];
    Ok(Instance { g, x, params, eta })
}

/// Loss at the given parameters, evaluated through the public forward pass.
fn loss_at(
    params: &ModelParams,
    adj: &NormalizedAdjacency,
    x: &NodeFeatures,
    g: &ObservedNetwork,
    eta: f64,
) -> Result<f64> {
    let fwd = gcn_forward_full(adj, x, params)?;
    Ok(loss_dense(&fwd.affiliations.values, &params.w_attr, &g.edge_list(), &x.to_dense(), eta)
        .total)
}

fn relative_error(analytic: &Array2<f64>, fd: &Array2<f64>) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(fd.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let na: f64 = analytic.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nf: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / (na + nf).max(1e-12)
}

/// Central-difference gradient for one weight matrix, chosen by `which`
/// (0 = w1, 1 = w2, 2 = w_attr).
fn fd_gradient(
    inst: &Instance,
    adj: &NormalizedAdjacency,
    which: usize,
    h: f64,
) -> Result<Array2<f64>> {
    let shape = match which {
        0 => inst.params.w1.dim(),
        1 => inst.params.w2.dim(),
        _ => inst.params.w_attr.dim(),
    };
    let mut grad = Array2::zeros(shape);
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let mut plus = inst.params.clone();
            let mut minus = inst.params.clone();
            match which {
                0 => {
                    plus.w1[[i, j]] += h;
                    minus.w1[[i, j]] -= h;
                }
                1 => {
                    plus.w2[[i, j]] += h;
                    minus.w2[[i, j]] -= h;
                }
                _ => {
                    plus.w_attr[[i, j]] += h;
                    minus.w_attr[[i, j]] -= h;
                }
            }
            let lp = loss_at(&plus, adj, &inst.x, &inst.g, inst.eta)?;
            let lm = loss_at(&minus, adj, &inst.x, &inst.g, inst.eta)?;
            grad[[i, j]] = (lp - lm) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Compare analytic gradients against central differences on randomly
/// generated smooth instances.
pub fn gradient_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if cfg.instances == 0 {
        return Err(Error::InvalidParameter("need at least one instance".into()));
    }
    if !(cfg.fd_step.is_finite() && cfg.fd_step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fd_step must be positive, got {}",
            cfg.fd_step
        )));
    }
    let mut rng = stream_rng(cfg.seed, STREAM_GRADCHECK);
    let mut checks = Vec::with_capacity(cfg.instances);
    let mut max_rel: f64 = 0.0;
    for idx in 0..cfg.instances {
        let inst = make_instance(idx, &mut rng)?;
        let adj = NormalizedAdjacency::from_observed(&inst.g);
        let (_, analytic) = loss_gradients(&inst.params, &adj, &inst.x, &inst.g, inst.eta)?;
        let fd_w1 = fd_gradient(&inst, &adj, 0, cfg.fd_step)?;
        let fd_w2 = fd_gradient(&inst, &adj, 1, cfg.fd_step)?;
        let fd_attr = fd_gradient(&inst, &adj, 2, cfg.fd_step)?;
        let check = InstanceCheck {
            rel_w1: relative_error(&analytic.w1, &fd_w1),
            rel_w2: relative_error(&analytic.w2, &fd_w2),
            rel_w_attr: relative_error(&analytic.w_attr, &fd_attr),
            eta: inst.eta,
            n_nodes: inst.g.n_nodes(),
        };
        max_rel = max_rel.max(check.max_rel());
        checks.push(check);
    }
    Ok(GradCheckReport { checks, max_rel_error: max_rel, tolerance: cfg.tolerance })
}
