//! Closed-form proximal maps and dual-ball projections.
//!
//! Every operator has a per-pixel kernel (`*_pixel`) and a field-level
//! wrapper. The kernels are what the solver calls in its inner loops.

use crate::error::{FlowError, Result};
use crate::grid::{FlowField, Grid, ImageDerivatives};

/// How the per-pixel norm of a regularization block is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Isotropy {
    /// Sum of absolute values; the dual ball is a box.
    Anisotropic,
    /// Euclidean norm over all channels of the block; the dual ball is round.
    #[default]
    Isotropic,
}

/// Step sizes, weights and the static image derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ProxContext<'a> {
    pub tau: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub derivs: &'a ImageDerivatives,
}

impl<'a> ProxContext<'a> {
    pub fn new(
        tau: f64,
        sigma: f64,
        alpha: f64,
        alpha0: f64,
        alpha1: f64,
        derivs: &'a ImageDerivatives,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FlowError::InvalidSpec(format!(
                "step sizes must be positive, got tau={tau}, sigma={sigma}"
            )));
        }
        for (name, w) in [("alpha", alpha), ("alpha0", alpha0), ("alpha1", alpha1)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(FlowError::InvalidSpec(format!(
                    "{name} must be a finite non-negative weight, got {w}"
                )));
            }
        }
        Ok(ProxContext {
            tau,
            sigma,
            alpha,
            alpha0,
            alpha1,
            derivs,
        })
    }
}

/// `argmin_v 1/2 |v - vt|^2 + tau/2 (grad.v + ut)^2`.
#[inline]
pub fn prox_data_l2_pixel(vt: [f64; 2], grad: [f64; 2], ut: f64, tau: f64) -> [f64; 2] {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    if g2 == 0.0 {
        return vt;
    }
    let rho = grad[0] * vt[0] + grad[1] * vt[1] + ut;
    let s = tau * rho / (1.0 + tau * g2);
    [vt[0] - s * grad[0], vt[1] - s * grad[1]]
}

/// `argmin_v 1/2 |v - vt|^2 + tau |grad.v + ut|`.
#[inline]
pub fn prox_data_l1_pixel(vt: [f64; 2], grad: [f64; 2], ut: f64, tau: f64) -> [f64; 2] {
    let g2 = grad[0] * grad[0] + grad[1] * grad[1];
    if g2 == 0.0 {
        return vt;
    }
    let rho = grad[0] * vt[0] + grad[1] * vt[1] + ut;
    let bound = tau * g2;
    let s = if rho < -bound {
        -tau
    } else if rho > bound {
        tau
    } else {
        rho / g2
    };
    [vt[0] - s * grad[0], vt[1] - s * grad[1]]
}

#[inline]
fn pixel_grad(d: &ImageDerivatives, k: usize) -> ([f64; 2], f64) {
    ([d.ux.as_slice()[k], d.uy.as_slice()[k]], d.ut.as_slice()[k])
}

/// Proximal map of the quadratic data term.
///
/// With `bregman_b`, the data term carries the extra linear part
/// `-alpha <b, v>`, which amounts to shifting the input by `tau * alpha * b`.
pub fn prox_data_l2(
    v_tilde: &FlowField,
    ctx: &ProxContext<'_>,
    bregman_b: Option<&FlowField>,
) -> Result<FlowField> {
    v_tilde.check_dims(ctx.derivs.dims())?;
    if let Some(b) = bregman_b {
        b.check_dims(ctx.derivs.dims())?;
    }
    let mut out = v_tilde.clone();
    out.valid = None;
    let shift = ctx.tau * ctx.alpha;
    let (o1, o2) = (out.v1.as_mut_slice(), out.v2.as_mut_slice());
    for k in 0..o1.len() {
        let mut vt = [o1[k], o2[k]];
        if let Some(b) = bregman_b {
            vt[0] += shift * b.v1.as_slice()[k];
            vt[1] += shift * b.v2.as_slice()[k];
        }
        let (g, ut) = pixel_grad(ctx.derivs, k);
        let v = prox_data_l2_pixel(vt, g, ut, ctx.tau);
        o1[k] = v[0];
        o2[k] = v[1];
    }
    Ok(out)
}

/// Proximal map of the absolute data term (three-case thresholding).
pub fn prox_data_l1(v_tilde: &FlowField, ctx: &ProxContext<'_>) -> Result<FlowField> {
    v_tilde.check_dims(ctx.derivs.dims())?;
    let mut out = v_tilde.clone();
    out.valid = None;
    let (o1, o2) = (out.v1.as_mut_slice(), out.v2.as_mut_slice());
    for k in 0..o1.len() {
        let (g, ut) = pixel_grad(ctx.derivs, k);
        let v = prox_data_l1_pixel([o1[k], o2[k]], g, ut, ctx.tau);
        o1[k] = v[0];
        o2[k] = v[1];
    }
    Ok(out)
}

/// Proximal map of `alpha1/2 |w|^2`: a uniform shrink.
pub fn prox_w_l2(w_tilde: &[Grid], ctx: &ProxContext<'_>) -> Vec<Grid> {
    let f = 1.0 / (1.0 + ctx.tau * ctx.alpha1);
    w_tilde.iter().map(|g| g.map(|x| x * f)).collect()
}

/// Proximal map of the conjugate `1/(2 alpha) |y|^2` with step `sigma`.
pub fn prox_dual_l2(y_tilde: &[Grid], ctx: &ProxContext<'_>) -> Result<Vec<Grid>> {
    if ctx.alpha <= 0.0 {
        return Err(FlowError::InvalidSpec(
            "quadratic regularizer needs alpha > 0".into(),
        ));
    }
    let f = 1.0 / (1.0 + ctx.sigma / ctx.alpha);
    Ok(y_tilde.iter().map(|g| g.map(|x| x * f)).collect())
}

/// Projects every pixel of a channel block onto the dual ball of radius `weight`.
pub fn project_linf_ball(y_tilde: &[Grid], weight: f64, mode: Isotropy) -> Vec<Grid> {
    let mut out = y_tilde.to_vec();
    project_linf_ball_in_place(&mut out, weight, mode);
    out
}

pub fn project_linf_ball_in_place(block: &mut [Grid], weight: f64, mode: Isotropy) {
    let mut refs: Vec<&mut [f64]> = block.iter_mut().map(|g| g.as_mut_slice()).collect();
    project_block(&mut refs, weight, mode);
}

pub(crate) fn project_block(block: &mut [&mut [f64]], weight: f64, mode: Isotropy) {
    let Some(n) = block.first().map(|c| c.len()) else {
        return;
    };
    match mode {
        Isotropy::Anisotropic => {
            for c in block.iter_mut() {
                for x in c.iter_mut() {
                    *x = x.clamp(-weight, weight);
                }
            }
        }
        Isotropy::Isotropic => {
            for k in 0..n {
                let norm = block.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt();
                // a rescaled point can land a few ulps outside; treating that
                // band as feasible keeps the projection idempotent
                if norm > weight * (1.0 + 8.0 * f64::EPSILON) {
                    if weight == 0.0 {
                        for c in block.iter_mut() {
                            c[k] = 0.0;
                        }
                    } else {
                        let s = weight / norm;
                        for c in block.iter_mut() {
                            c[k] *= s;
                        }
                    }
                }
            }
        }
    }
}

/// Per-pixel dual norm of a block: max-abs (anisotropic) or Euclidean.
pub fn dual_norm_at(block: &[Grid], k: usize, mode: Isotropy) -> f64 {
    match mode {
        Isotropy::Anisotropic => block
            .iter()
            .map(|c| c.as_slice()[k].abs())
            .fold(0.0, f64::max),
        Isotropy::Isotropic => block
            .iter()
            .map(|c| c.as_slice()[k].powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Per-pixel primal norm of a block: sum-abs (anisotropic) or Euclidean.
pub(crate) fn primal_norm(values: impl Iterator<Item = f64>, mode: Isotropy) -> f64 {
    match mode {
        Isotropy::Anisotropic => values.map(f64::abs).sum(),
        Isotropy::Isotropic => values.map(|x| x * x).sum::<f64>().sqrt(),
    }
}
