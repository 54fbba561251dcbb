//! Adam optimizer over the three weight matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

use super::loss::Gradients;
use super::ModelParams;

/// Exponential decay rate of the first-moment estimate.
pub const ADAM_BETA1: f64 = 0.9;
/// Exponential decay rate of the second-moment estimate.
pub const ADAM_BETA2: f64 = 0.999;
/// Denominator fuzz.
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates for every parameter matrix, plus the
/// shared step counter. One optimizer step advances the counter once and
/// updates all three matrices with the same bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m_w1: Array2<f64>,
    v_w1: Array2<f64>,
    m_w2: Array2<f64>,
    v_w2: Array2<f64>,
    m_attr: Array2<f64>,
    v_attr: Array2<f64>,
    /// Number of steps taken so far.
    pub step: u64,
}

impl AdamState {
    /// Zeroed moments for the given model dimensions.
    pub fn new(input_dim: usize, hidden_dim: usize, n_communities: usize) -> Self {
        Self {
            m_w1: Array2::zeros((input_dim, hidden_dim)),
            v_w1: Array2::zeros((input_dim, hidden_dim)),
            m_w2: Array2::zeros((hidden_dim, n_communities)),
            v_w2: Array2::zeros((hidden_dim, n_communities)),
            m_attr: Array2::zeros((input_dim, n_communities)),
            v_attr: Array2::zeros((input_dim, n_communities)),
            step: 0,
        }
    }
}

fn check_shape(theta: &Array2<f64>, grad: &Array2<f64>) -> Result<()> {
    if theta.dim() != grad.dim() {
        return Err(Error::ShapeMismatch(format!(
            "gradient is {:?} but the parameter is {:?}",
            grad.dim(),
            theta.dim()
        )));
    }
    Ok(())
}

fn update_one(
    theta: &mut Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    grad: &Array2<f64>,
    lr: f64,
    bias1: f64,
    bias2: f64,
) {
    ndarray::Zip::from(&mut *m).and(grad).for_each(|m, &g| {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
    });
    ndarray::Zip::from(&mut *v).and(grad).for_each(|v, &g| {
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
    });
    ndarray::Zip::from(theta).and(&*m).and(&*v).for_each(|t, &m, &v| {
        let m_hat = m / bias1;
        let v_hat = v / bias2;
        *t -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
    });
}

/// One Adam step over `(w1, w2, w_attr)` with bias-corrected moments.
///
/// Validates everything before touching any state, so an error leaves the
/// parameters and moments exactly as they were.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, lr: f64) -> Result<()> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidParameter(format!("lr must be positive, got {lr}")));
    }
    check_shape(&params.w1, &grads.w1)?;
    check_shape(&params.w2, &grads.w2)?;
    check_shape(&params.w_attr, &grads.w_attr)?;
    let ModelParams { w1, w2, w_attr, adam } = params;
    adam.step += 1;
    let t = adam.step as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);
    update_one(w1, &mut adam.m_w1, &mut adam.v_w1, &grads.w1, lr, bias1, bias2);
    update_one(w2, &mut adam.m_w2, &mut adam.v_w2, &grads.w2, lr, bias1, bias2);
    update_one(w_attr, &mut adam.m_attr, &mut adam.v_attr, &grads.w_attr, lr, bias1, bias2);
    Ok(())
}
