//! First-order primal-dual iteration and the Bregman outer loop.
//!
//! Each iteration performs, in order: the dual resolvent on
//! `y + sigma K x_hat`, the primal resolvent on `x - tau K^T y`, and the
//! over-relaxation `x_hat = 2 x_new - x_old`. `K x_hat` is never applied
//! directly; it is formed from the cached `K x` values by linearity.

use crate::error::{FlowError, Result};
use crate::grid::{FlowField, Grid, ImageDerivatives};
use crate::models::{
    apply_k_adjoint_into, apply_k_into, energy_with_kx, resolve_fstar_in_place, resolve_g_in_place,
    step_sizes, DualState, ModelKind, ModelSpec, PrimalState,
};
use crate::prox::ProxContext;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations_run: usize,
    /// Normalized fixed-point residual after the last iteration.
    pub final_residual: f64,
    pub converged: bool,
    /// Primal objective after every iteration.
    pub energy_history: Vec<f64>,
    /// Bregman round this solve belongs to (0 for plain solves).
    pub bregman_round: usize,
}

/// Snapshot handed to progress observers after each iteration.
pub struct IterationInfo<'a> {
    /// 1-based iteration count.
    pub iteration: usize,
    pub residual: f64,
    pub energy: f64,
    pub bregman_round: usize,
    pub primal: &'a PrimalState,
    pub dual: &'a DualState,
}

/// Subgradient variable of the Bregman iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanState {
    pub b: FlowField,
    pub round: usize,
}

impl BregmanState {
    pub fn new(width: usize, height: usize) -> Self {
        BregmanState {
            b: FlowField::zeros(width, height),
            round: 0,
        }
    }

    /// `b <- b - (1/alpha) (u_t + grad u . v) grad u`.
    pub fn update(&mut self, v: &FlowField, derivs: &ImageDerivatives, alpha: f64) {
        let (ux, uy, ut) = (
            derivs.ux.as_slice(),
            derivs.uy.as_slice(),
            derivs.ut.as_slice(),
        );
        let (v1, v2) = (v.v1.as_slice(), v.v2.as_slice());
        let b1 = self.b.v1.as_mut_slice();
        for k in 0..b1.len() {
            let rho = ut[k] + ux[k] * v1[k] + uy[k] * v2[k];
            b1[k] -= rho * ux[k] / alpha;
        }
        let b2 = self.b.v2.as_mut_slice();
        for k in 0..b2.len() {
            let rho = ut[k] + ux[k] * v1[k] + uy[k] * v2[k];
            b2[k] -= rho * uy[k] / alpha;
        }
        self.round += 1;
    }
}

fn context<'a>(spec: &ModelSpec, derivs: &'a ImageDerivatives) -> Result<ProxContext<'a>> {
    let (tau, sigma) = step_sizes(spec);
    ProxContext::new(tau, sigma, spec.alpha, spec.alpha0, spec.alpha1, derivs)
}

fn check_derivs(derivs: &ImageDerivatives) -> Result<()> {
    derivs.ut.check_same_dims(&derivs.ux)?;
    derivs.ut.check_same_dims(&derivs.uy)?;
    for g in [&derivs.ut, &derivs.ux, &derivs.uy] {
        if !g.is_finite() {
            return Err(FlowError::InvalidGrid(
                "image derivatives contain non-finite values".into(),
            ));
        }
    }
    Ok(())
}

pub fn chambolle_pock(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    init: Option<&PrimalState>,
    bregman_b: Option<&FlowField>,
) -> Result<(PrimalState, SolveReport)> {
    chambolle_pock_observed(spec, derivs, init, bregman_b, 0, &mut |_| {})
}

/// Same as [`chambolle_pock`], calling `observer` after every iteration.
pub fn chambolle_pock_observed(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    init: Option<&PrimalState>,
    bregman_b: Option<&FlowField>,
    bregman_round: usize,
    observer: &mut dyn FnMut(&IterationInfo<'_>),
) -> Result<(PrimalState, SolveReport)> {
    spec.validate()?;
    check_derivs(derivs)?;
    let dims = derivs.dims();
    let (width, height) = dims;
    if let Some(b) = bregman_b {
        if !spec.kind.has_l2_data() {
            return Err(FlowError::InvalidSpec(
                "a Bregman variable requires the L2 data term".into(),
            ));
        }
        b.check_dims(dims)?;
    }
    let ctx = context(spec, derivs)?;

    let mut x = match init {
        Some(x0) => {
            x0.check_shape(spec, dims)?;
            let mut x = x0.clone();
            x.v.valid = None;
            x
        }
        None => PrimalState::zeros(spec, width, height),
    };
    let mut x_old = x.clone();
    let mut y = DualState::zeros(spec, width, height);
    let mut y_old = y.clone();
    let mut kx = DualState::zeros(spec, width, height);
    apply_k_into(spec, &x, &mut kx);
    // x_hat^0 = x^0
    let mut kx_hat = kx.clone();
    let mut kx_new = kx.clone();
    let mut kty = PrimalState::zeros(spec, width, height);

    let primal_entries = (2 + spec.w_channels()) * width * height;
    let dual_entries = spec.dual_channels() * width * height;
    let (tau, sigma) = (ctx.tau, ctx.sigma);

    let mut history = Vec::with_capacity(spec.max_iters.min(1 << 16));
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=spec.max_iters {
        iterations = it;

        // dual step
        for ((yo, yc), kh) in y_old
            .channels
            .iter_mut()
            .zip(&mut y.channels)
            .zip(&kx_hat.channels)
        {
            yo.as_mut_slice().copy_from_slice(yc.as_slice());
            for (v, k) in yc.as_mut_slice().iter_mut().zip(kh.as_slice()) {
                *v += sigma * k;
            }
        }
        resolve_fstar_in_place(spec, &mut y, &ctx);

        // primal step
        apply_k_adjoint_into(spec, &y, &mut kty);
        for ((xo, xc), kt) in x_old
            .slices_mut()
            .into_iter()
            .zip(x.slices_mut())
            .zip(kty.slices())
        {
            xo.copy_from_slice(xc);
            for (v, k) in xc.iter_mut().zip(kt) {
                *v -= tau * k;
            }
        }
        resolve_g_in_place(spec, &mut x, &ctx, bregman_b);
        apply_k_into(spec, &x, &mut kx_new);

        // residuals
        let mut p2 = 0.0;
        for (xo, xc) in x_old.slices().into_iter().zip(x.slices()) {
            for (a, b) in xo.iter().zip(xc) {
                let r = (a - b) / tau;
                p2 += r * r;
            }
        }
        let mut d2 = 0.0;
        for (((yo, yc), kh), kn) in y_old
            .channels
            .iter()
            .zip(&y.channels)
            .zip(&kx_hat.channels)
            .zip(&kx_new.channels)
        {
            let it4 = yo
                .as_slice()
                .iter()
                .zip(yc.as_slice())
                .zip(kh.as_slice())
                .zip(kn.as_slice());
            for (((a, b), h), n) in it4 {
                let r = (a - b) / sigma + (h - n);
                d2 += r * r;
            }
        }
        residual = (p2 / primal_entries as f64)
            .sqrt()
            .max((d2 / dual_entries as f64).sqrt());
        let e = energy_with_kx(spec, derivs, &x, &kx_new, bregman_b);
        if !residual.is_finite() {
            return Err(FlowError::Divergence {
                iteration: it,
                quantity: "residual",
            });
        }
        if !e.is_finite() {
            return Err(FlowError::Divergence {
                iteration: it,
                quantity: "energy",
            });
        }
        history.push(e);

        // K x_hat = 2 K x_new - K x_old
        for ((h, n), o) in kx_hat
            .channels
            .iter_mut()
            .zip(&kx_new.channels)
            .zip(&mut kx.channels)
        {
            for ((hv, nv), ov) in h
                .as_mut_slice()
                .iter_mut()
                .zip(n.as_slice())
                .zip(o.as_mut_slice())
            {
                *hv = 2.0 * nv - *ov;
                *ov = *nv;
            }
        }

        observer(&IterationInfo {
            iteration: it,
            residual,
            energy: e,
            bregman_round,
            primal: &x,
            dual: &y,
        });

        if residual <= spec.tol {
            break;
        }
    }

    let report = SolveReport {
        iterations_run: iterations,
        final_residual: residual,
        converged: residual <= spec.tol,
        energy_history: history,
        bregman_round,
    };
    Ok((x, report))
}

pub fn bregman_solve(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
) -> Result<(FlowField, Vec<SolveReport>)> {
    bregman_solve_observed(spec, derivs, &mut |_| {})
}

/// Bregman rounds for L2-TV, warm-starting each round from the last.
pub fn bregman_solve_observed(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    observer: &mut dyn FnMut(&IterationInfo<'_>),
) -> Result<(FlowField, Vec<SolveReport>)> {
    if spec.kind != ModelKind::L2Tv {
        return Err(FlowError::InvalidSpec(format!(
            "Bregman iteration requires L2-TV, got {}",
            spec.kind
        )));
    }
    if spec.bregman_iters == 0 {
        return Err(FlowError::InvalidSpec(
            "Bregman iteration needs at least one round".into(),
        ));
    }
    if spec.alpha <= 0.0 {
        return Err(FlowError::InvalidSpec(
            "Bregman iteration needs alpha > 0".into(),
        ));
    }
    spec.validate()?;
    let (w, h) = derivs.dims();
    let mut state = BregmanState::new(w, h);
    let mut x: Option<PrimalState> = None;
    let mut reports = Vec::with_capacity(spec.bregman_iters);
    for round in 1..=spec.bregman_iters {
        // b is identically zero in the first round, which is the plain solve
        let b = (round > 1).then_some(&state.b);
        let (next, report) = chambolle_pock_observed(spec, derivs, x.as_ref(), b, round, observer)?;
        state.update(&next.v, derivs, spec.alpha);
        reports.push(report);
        x = Some(next);
    }
    let v = x.map(|s| s.v).expect("at least one round");
    Ok((v, reports))
}

/// Solves `spec`, running the Bregman loop when `bregman_iters > 0`.
pub fn solve(spec: &ModelSpec, derivs: &ImageDerivatives) -> Result<(FlowField, Vec<SolveReport>)> {
    solve_observed(spec, derivs, &mut |_| {})
}

pub fn solve_observed(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    observer: &mut dyn FnMut(&IterationInfo<'_>),
) -> Result<(FlowField, Vec<SolveReport>)> {
    if spec.bregman_iters > 0 {
        bregman_solve_observed(spec, derivs, observer)
    } else {
        let (x, report) = chambolle_pock_observed(spec, derivs, None, None, 0, observer)?;
        Ok((x.v, vec![report]))
    }
}

/// Residual `u_t + grad u . v` per pixel.
pub fn constraint_residual(v: &FlowField, derivs: &ImageDerivatives) -> Grid {
    let (w, h) = derivs.dims();
    Grid::from_fn(w, h, |i, j| {
        derivs.ut.get(i, j)
            + derivs.ux.get(i, j) * v.v1.get(i, j)
            + derivs.uy.get(i, j) * v.v2.get(i, j)
    })
}
