//! Losses over [`ModelOutput`], each with its gradient in output space.

use super::net::{sigmoid, Head, ModelOutput, OutputGrad};
use crate::error::ModelError;
use crate::mip::Assignment;

/// `-(a ln b + (1 - a) ln(1 - b))`.
pub fn bce(a: f64, b: f64) -> f64 {
    -(a * b.ln() + (1.0 - a) * (1.0 - b).ln())
}

/// `bce(a, sigmoid(z))` evaluated from the logit, `softplus(z) - a z`.
pub fn bce_logit(a: f64, z: f64) -> f64 {
    z.max(0.0) - a * z + (-z.abs()).exp().ln_1p()
}

/// Derivative of [`bce_logit`] in `z`.
pub fn bce_logit_grad(a: f64, z: f64) -> f64 {
    sigmoid(z) - a
}

/// Mean BCE between binary targets on `mask` and the matching probabilities.
/// `out.probs[k]` corresponds to `mask[k]`. The gradient is in logit space.
pub fn loss_nd(out: &ModelOutput, target: &Assignment, mask: &[usize]) -> Result<(f64, OutputGrad), ModelError> {
    if out.probs.len() != mask.len() {
        return Err(ModelError::Shape(format!("{} probabilities for {} masked variables", out.probs.len(), mask.len())));
    }
    let mut grad = OutputGrad::zeros(mask.len());
    if mask.is_empty() {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / mask.len() as f64;
    let mut total = 0.0;
    for (k, &d) in mask.iter().enumerate() {
        let t = *target.0.get(d).ok_or_else(|| ModelError::Shape(format!("target has no entry {d}")))?;
        if t != 0.0 && t != 1.0 {
            return Err(ModelError::NonBinaryTarget { var: d, value: t });
        }
        let z = out.prob_logits[k];
        total += bce_logit(t, z);
        grad.probs[k] = scale * bce_logit_grad(t, z);
    }
    Ok((total * scale, grad))
}

/// `(rho_pi - rho_star)^2` and its derivative in `rho_pi`.
pub fn loss_coverage(rho_pi: f64, rho_star: f64) -> (f64, f64) {
    let d = rho_pi - rho_star;
    (d * d, 2.0 * d)
}

/// `BCE(psi_prob, psi) + BCE(phi_prob, phi)`; the prob values are constants.
pub fn loss_threshold(psi_prob: f64, psi: f64, phi_prob: f64, phi: f64) -> f64 {
    bce(psi_prob, psi) + bce(phi_prob, phi)
}

/// `BCE(i_feas, psi_prob) + BCE(i_lpsat, phi_prob)`.
pub fn loss_prob(i_feas: bool, psi_prob: f64, i_lpsat: bool, phi_prob: f64) -> f64 {
    bce(indicator(i_feas), psi_prob) + bce(indicator(i_lpsat), phi_prob)
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Sum of `bce_logit(target, z)` over head pairs, with logit gradients.
fn head_bce(out: &ModelOutput, grad: &mut OutputGrad, pairs: [(f64, Head); 2]) -> f64 {
    let mut total = 0.0;
    for (target, head) in pairs {
        let z = out.head_logit(head);
        total += bce_logit(target, z);
        grad.heads[head.index()] = bce_logit_grad(target, z);
    }
    total
}

/// A loss over one forward pass; `Sum` is a weighted combination.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Nd { target: Assignment, mask: Vec<usize> },
    Coverage { rho_star: f64 },
    Threshold { psi_prob: f64, phi_prob: f64 },
    Prob { i_feas: bool, i_lpsat: bool },
    Sum(Vec<(f64, LossSpec)>),
}

impl LossSpec {
    pub fn evaluate(&self, out: &ModelOutput) -> Result<(f64, OutputGrad), ModelError> {
        let mut grad = OutputGrad::zeros(out.probs.len());
        let value = match self {
            LossSpec::Nd { target, mask } => return loss_nd(out, target, mask),
            LossSpec::Coverage { rho_star } => {
                let rho = out.head(Head::Pi);
                let (v, d) = loss_coverage(rho, *rho_star);
                grad.heads[Head::Pi.index()] = d * rho * (1.0 - rho);
                v
            }
            LossSpec::Threshold { psi_prob, phi_prob } => {
                head_bce(out, &mut grad, [(*psi_prob, Head::Psi), (*phi_prob, Head::Phi)])
            }
            LossSpec::Prob { i_feas, i_lpsat } => {
                head_bce(out, &mut grad, [(indicator(*i_feas), Head::PsiProb), (indicator(*i_lpsat), Head::PhiProb)])
            }
            LossSpec::Sum(parts) => {
                let mut total = 0.0;
                for (w, spec) in parts {
                    let (v, g) = spec.evaluate(out)?;
                    total += w * v;
                    for (a, b) in grad.probs.iter_mut().zip(&g.probs) {
                        *a += w * b;
                    }
                    for (a, b) in grad.heads.iter_mut().zip(&g.heads) {
                        *a += w * b;
                    }
                }
                total
            }
        };
        Ok((value, grad))
    }
}
