//! The five variational models written as `min_x G(x) + F(Kx)`.
//!
//! Dual channel layout is fixed: the four `grad v` channels come first in
//! the order `(dx v1, dy v1, dx v2, dy v2)`. Extended models subtract `w`
//! from those channels; the TV/TV model then appends `(dx w_m, dy w_m)` for
//! every channel `m` of `w`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{FlowError, Result};
use crate::grid::{div_backward_add, grad_forward_into, FlowField, Grid, ImageDerivatives};
use crate::prox::{
    primal_norm, project_block, prox_data_l1_pixel, prox_data_l2_pixel, Isotropy, ProxContext,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// Quadratic data term, quadratic gradient penalty (Horn-Schunck).
    L2L2,
    L2Tv,
    L1Tv,
    /// Absolute data term with `alpha0 |grad v - w|_1 + alpha1/2 |w|^2`.
    L1TvL2,
    /// Absolute data term with `alpha0 |grad v - w|_1 + alpha1 |grad w|_1`.
    L1TvTv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::L2L2,
        ModelKind::L2Tv,
        ModelKind::L1Tv,
        ModelKind::L1TvL2,
        ModelKind::L1TvTv,
    ];

    pub fn is_extended(self) -> bool {
        matches!(self, ModelKind::L1TvL2 | ModelKind::L1TvTv)
    }

    pub fn has_l2_data(self) -> bool {
        matches!(self, ModelKind::L2L2 | ModelKind::L2Tv)
    }

    /// Command-line identifier.
    pub fn cli_name(self) -> &'static str {
        match self {
            ModelKind::L2L2 => "l2-l2",
            ModelKind::L2Tv => "l2-tv",
            ModelKind::L1Tv => "l1-tv",
            ModelKind::L1TvL2 => "l1-tv-l2",
            ModelKind::L1TvTv => "l1-tv-tv",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::L2L2 => "L2-L2",
            ModelKind::L2Tv => "L2-TV",
            ModelKind::L1Tv => "L1-TV",
            ModelKind::L1TvL2 => "L1-TV/L2",
            ModelKind::L1TvTv => "L1-TV/TV",
        })
    }
}

impl FromStr for ModelKind {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('/', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.cli_name() == norm)
            .ok_or_else(|| {
                FlowError::InvalidSpec(format!(
                    "unknown model '{s}', expected one of l2-l2, l2-tv, l1-tv, l1-tv-l2, l1-tv-tv"
                ))
            })
    }
}

/// How the auxiliary field `w` couples to the components of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WCoupling {
    /// One 2-vector field subtracted from both `grad v1` and `grad v2`.
    #[default]
    Shared,
    /// One 2-vector field per component of `v` (the usual TGV form).
    PerComponent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Regularization weight of the gradient models.
    pub alpha: f64,
    /// Weight of `|grad v - w|` in the extended models.
    pub alpha0: f64,
    /// Weight of the `w` penalty in the extended models.
    pub alpha1: f64,
    pub isotropy: Isotropy,
    pub coupling: WCoupling,
    pub max_iters: usize,
    pub tol: f64,
    /// Number of Bregman rounds; zero means a single plain solve.
    pub bregman_iters: usize,
}

pub const DEFAULT_MAX_ITERS: usize = 5000;
pub const DEFAULT_TOL: f64 = 1e-6;

impl ModelSpec {
    /// Static weights of the reference comparison for `kind`.
    pub fn static_params(kind: ModelKind) -> Self {
        let (alpha, alpha0, alpha1) = match kind {
            ModelKind::L2L2 => (0.15, 0.0, 0.0),
            ModelKind::L2Tv => (0.002, 0.0, 0.0),
            ModelKind::L1Tv => (0.1, 0.0, 0.0),
            ModelKind::L1TvL2 => (0.0, 0.1, 50.0),
            ModelKind::L1TvTv => (0.0, 0.1, 1.0),
        };
        ModelSpec {
            kind,
            alpha,
            alpha0,
            alpha1,
            isotropy: Isotropy::Isotropic,
            coupling: WCoupling::Shared,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            bregman_iters: 0,
        }
    }

    /// Static parameters of the Bregman-iterated L2-TV configuration.
    pub fn l2_tv_bregman_static() -> Self {
        ModelSpec {
            alpha: 0.02,
            bregman_iters: 10,
            ..ModelSpec::static_params(ModelKind::L2Tv)
        }
    }

    /// Sets `alpha` for gradient models or `alpha0` for extended ones.
    pub fn with_weight(mut self, weight: f64) -> Self {
        if self.kind.is_extended() {
            self.alpha0 = weight;
        } else {
            self.alpha = weight;
        }
        self
    }

    pub fn with_alpha1(mut self, alpha1: f64) -> Self {
        self.alpha1 = alpha1;
        self
    }

    pub fn with_isotropy(mut self, isotropy: Isotropy) -> Self {
        self.isotropy = isotropy;
        self
    }

    pub fn with_coupling(mut self, coupling: WCoupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_budget(mut self, max_iters: usize, tol: f64) -> Self {
        self.max_iters = max_iters;
        self.tol = tol;
        self
    }

    pub fn with_bregman(mut self, rounds: usize) -> Self {
        self.bregman_iters = rounds;
        self
    }

    /// `alpha` or `alpha0`, whichever weighs the first regularization block.
    pub fn weight(&self) -> f64 {
        if self.kind.is_extended() {
            self.alpha0
        } else {
            self.alpha
        }
    }

    /// Short label such as `L2-TV Breg` used in reports.
    pub fn label(&self) -> String {
        if self.bregman_iters > 0 {
            format!("{} Breg", self.kind)
        } else {
            self.kind.to_string()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FlowError::InvalidSpec(m));
        for (name, w) in [
            ("alpha", self.alpha),
            ("alpha0", self.alpha0),
            ("alpha1", self.alpha1),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {w}"));
            }
        }
        if self.kind == ModelKind::L2L2 && self.alpha <= 0.0 {
            return bad("L2-L2 needs alpha > 0".into());
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad(format!(
                "tol must be finite and non-negative, got {}",
                self.tol
            ));
        }
        if self.bregman_iters > 0 && self.kind != ModelKind::L2Tv {
            let why = if self.kind.has_l2_data() {
                "Bregman rounds are only supported for L2-TV"
            } else {
                "Bregman rounds are not supported with the L1 data term: the \
                 iteration cannot be folded into the data term and its well-posedness \
                 is open, so only L2-TV accepts --bregman"
            };
            return bad(format!("{why} (model {})", self.kind));
        }
        Ok(())
    }

    /// Channels of the auxiliary field `w` (zero for gradient models).
    pub fn w_channels(&self) -> usize {
        if !self.kind.is_extended() {
            0
        } else {
            match self.coupling {
                WCoupling::Shared => 2,
                WCoupling::PerComponent => 4,
            }
        }
    }

    pub fn dual_channels(&self) -> usize {
        match self.kind {
            ModelKind::L1TvTv => 4 + 2 * self.w_channels(),
            _ => 4,
        }
    }

    /// Channel ranges of the independently projected regularization blocks.
    pub fn dual_blocks(&self) -> Vec<(Range<usize>, f64)> {
        let mut blocks = vec![(0..4, self.weight())];
        if self.kind == ModelKind::L1TvTv {
            blocks.push((4..self.dual_channels(), self.alpha1));
        }
        blocks
    }

    /// `w` channel subtracted from dual channel `c` (`c < 4`).
    #[inline]
    fn coupled_w(&self, c: usize) -> usize {
        match self.coupling {
            WCoupling::Shared => c % 2,
            WCoupling::PerComponent => c,
        }
    }
}

/// Primal unknowns: the flow and, for extended models, the field `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalState {
    pub v: FlowField,
    pub w: Option<Vec<Grid>>,
}

impl PrimalState {
    pub fn zeros(spec: &ModelSpec, width: usize, height: usize) -> Self {
        let nw = spec.w_channels();
        PrimalState {
            v: FlowField::zeros(width, height),
            w: (nw > 0).then(|| vec![Grid::zeros(width, height); nw]),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.v.dims()
    }

    pub fn dot(&self, other: &PrimalState) -> f64 {
        let mut s = self.v.v1.dot(&other.v.v1) + self.v.v2.dot(&other.v.v2);
        if let (Some(a), Some(b)) = (&self.w, &other.w) {
            s += a.iter().zip(b).map(|(x, y)| x.dot(y)).sum::<f64>();
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut out = vec![self.v.v1.as_slice(), self.v.v2.as_slice()];
        if let Some(w) = &self.w {
            out.extend(w.iter().map(|g| g.as_slice()));
        }
        out
    }

    pub(crate) fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.v.v1.as_mut_slice(), self.v.v2.as_mut_slice()];
        if let Some(w) = &mut self.w {
            out.extend(w.iter_mut().map(|g| g.as_mut_slice()));
        }
        out
    }

    pub fn check_shape(&self, spec: &ModelSpec, dims: (usize, usize)) -> Result<()> {
        self.v.check_dims(dims)?;
        let nw = self.w.as_ref().map_or(0, Vec::len);
        if nw != spec.w_channels() {
            return Err(FlowError::InvalidSpec(format!(
                "{} expects {} w channels, state has {nw}",
                spec.kind,
                spec.w_channels()
            )));
        }
        if let Some(w) = &self.w {
            for g in w {
                if g.dims() != dims {
                    return Err(FlowError::mismatch(dims, g.dims()));
                }
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }
}

/// Stacked dual variables, one grid per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub channels: Vec<Grid>,
}

impl DualState {
    pub fn zeros(spec: &ModelSpec, width: usize, height: usize) -> Self {
        DualState {
            channels: vec![Grid::zeros(width, height); spec.dual_channels()],
        }
    }

    pub fn dot(&self, other: &DualState) -> f64 {
        self.channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    fn check_shape(&self, spec: &ModelSpec, dims: (usize, usize)) -> Result<()> {
        if self.channels.len() != spec.dual_channels() {
            return Err(FlowError::InvalidSpec(format!(
                "{} expects {} dual channels, got {}",
                spec.kind,
                spec.dual_channels(),
                self.channels.len()
            )));
        }
        for c in &self.channels {
            if c.dims() != dims {
                return Err(FlowError::mismatch(dims, c.dims()));
            }
        }
        Ok(())
    }
}

/// Step sizes `(tau, sigma)` for the model class.
pub fn step_sizes(spec: &ModelSpec) -> (f64, f64) {
    if spec.kind.is_extended() {
        (1.0 / 5.0, 1.0 / 3.0)
    } else {
        (1.0 / 4.0, 1.0 / 2.0)
    }
}

pub fn apply_k(spec: &ModelSpec, x: &PrimalState) -> Result<DualState> {
    let dims = x.dims();
    x.check_shape(spec, dims)?;
    let mut out = DualState::zeros(spec, dims.0, dims.1);
    apply_k_into(spec, x, &mut out);
    Ok(out)
}

pub fn apply_k_adjoint(spec: &ModelSpec, y: &DualState) -> Result<PrimalState> {
    let dims = y
        .channels
        .first()
        .map(Grid::dims)
        .ok_or_else(|| FlowError::InvalidSpec("empty dual state".into()))?;
    y.check_shape(spec, dims)?;
    let mut out = PrimalState::zeros(spec, dims.0, dims.1);
    apply_k_adjoint_into(spec, y, &mut out);
    Ok(out)
}

/// `out = K x`; shapes must already match.
pub(crate) fn apply_k_into(spec: &ModelSpec, x: &PrimalState, out: &mut DualState) {
    let (w, h) = x.dims();
    let ch = &mut out.channels;
    {
        let (a, rest) = ch.split_at_mut(1);
        grad_forward_into(
            x.v.v1.as_slice(),
            w,
            h,
            a[0].as_mut_slice(),
            rest[0].as_mut_slice(),
        );
    }
    {
        let (a, rest) = ch[2..].split_at_mut(1);
        grad_forward_into(
            x.v.v2.as_slice(),
            w,
            h,
            a[0].as_mut_slice(),
            rest[0].as_mut_slice(),
        );
    }
    if let Some(wf) = &x.w {
        for c in 0..4 {
            let src = wf[spec.coupled_w(c)].as_slice();
            for (o, s) in ch[c].as_mut_slice().iter_mut().zip(src) {
                *o -= s;
            }
        }
        if spec.kind == ModelKind::L1TvTv {
            for (m, g) in wf.iter().enumerate() {
                let (a, rest) = ch[4 + 2 * m..].split_at_mut(1);
                grad_forward_into(
                    g.as_slice(),
                    w,
                    h,
                    a[0].as_mut_slice(),
                    rest[0].as_mut_slice(),
                );
            }
        }
    }
}

/// `out = K^T y`; shapes must already match.
pub(crate) fn apply_k_adjoint_into(spec: &ModelSpec, y: &DualState, out: &mut PrimalState) {
    let (w, h) = out.dims();
    let ch = &y.channels;
    for s in out.slices_mut() {
        s.fill(0.0);
    }
    div_backward_add(
        ch[0].as_slice(),
        ch[1].as_slice(),
        w,
        h,
        -1.0,
        out.v.v1.as_mut_slice(),
    );
    div_backward_add(
        ch[2].as_slice(),
        ch[3].as_slice(),
        w,
        h,
        -1.0,
        out.v.v2.as_mut_slice(),
    );
    if let Some(wf) = &mut out.w {
        for c in 0..4 {
            let dst = wf[spec.coupled_w(c)].as_mut_slice();
            for (o, s) in dst.iter_mut().zip(ch[c].as_slice()) {
                *o -= s;
            }
        }
        if spec.kind == ModelKind::L1TvTv {
            for (m, g) in wf.iter_mut().enumerate() {
                div_backward_add(
                    ch[4 + 2 * m].as_slice(),
                    ch[5 + 2 * m].as_slice(),
                    w,
                    h,
                    -1.0,
                    g.as_mut_slice(),
                );
            }
        }
    }
}

/// Power-iteration estimate of `||K||^2` for `spec` on a `width x height` grid.
pub fn operator_norm_sq(spec: &ModelSpec, width: usize, height: usize, iterations: usize) -> f64 {
    let mut x = PrimalState::zeros(spec, width, height);
    let mut seed = 0x9E37_79B9_7F4A_7C15u64;
    for s in x.slices_mut() {
        for v in s.iter_mut() {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            *v = (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        }
    }
    let mut y = DualState::zeros(spec, width, height);
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let n = x.norm_sq().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        for s in x.slices_mut() {
            s.iter_mut().for_each(|v| *v /= n);
        }
        apply_k_into(spec, &x, &mut y);
        estimate = y.norm_sq();
        apply_k_adjoint_into(spec, &y, &mut x);
    }
    estimate
}

/// Resolvent of `tau G` applied to `x_tilde`.
pub fn resolve_g(
    spec: &ModelSpec,
    x_tilde: &PrimalState,
    ctx: &ProxContext<'_>,
    bregman_b: Option<&FlowField>,
) -> Result<PrimalState> {
    x_tilde.check_shape(spec, ctx.derivs.dims())?;
    if let Some(b) = bregman_b {
        if !spec.kind.has_l2_data() {
            return Err(FlowError::InvalidSpec(
                "a Bregman variable requires the L2 data term".into(),
            ));
        }
        b.check_dims(ctx.derivs.dims())?;
    }
    let mut out = x_tilde.clone();
    resolve_g_in_place(spec, &mut out, ctx, bregman_b);
    Ok(out)
}

pub(crate) fn resolve_g_in_place(
    spec: &ModelSpec,
    x: &mut PrimalState,
    ctx: &ProxContext<'_>,
    bregman_b: Option<&FlowField>,
) {
    let d = ctx.derivs;
    let (ux, uy, ut) = (d.ux.as_slice(), d.uy.as_slice(), d.ut.as_slice());
    let tau = ctx.tau;
    let l2 = spec.kind.has_l2_data();
    let shift = tau * ctx.alpha;
    {
        let v1 = x.v.v1.as_mut_slice();
        let v2 = x.v.v2.as_mut_slice();
        for k in 0..v1.len() {
            let g = [ux[k], uy[k]];
            let v = if l2 {
                let mut vt = [v1[k], v2[k]];
                if let Some(b) = bregman_b {
                    vt[0] += shift * b.v1.as_slice()[k];
                    vt[1] += shift * b.v2.as_slice()[k];
                }
                prox_data_l2_pixel(vt, g, ut[k], tau)
            } else {
                prox_data_l1_pixel([v1[k], v2[k]], g, ut[k], tau)
            };
            v1[k] = v[0];
            v2[k] = v[1];
        }
    }
    x.v.valid = None;
    if spec.kind == ModelKind::L1TvL2 {
        if let Some(w) = &mut x.w {
            let f = 1.0 / (1.0 + tau * ctx.alpha1);
            for g in w.iter_mut() {
                g.as_mut_slice().iter_mut().for_each(|v| *v *= f);
            }
        }
    }
}

/// Resolvent of `sigma F*` applied to `y_tilde`.
pub fn resolve_fstar(
    spec: &ModelSpec,
    y_tilde: &DualState,
    ctx: &ProxContext<'_>,
) -> Result<DualState> {
    y_tilde.check_shape(spec, ctx.derivs.dims())?;
    if spec.kind == ModelKind::L2L2 && ctx.alpha <= 0.0 {
        return Err(FlowError::InvalidSpec(
            "quadratic regularizer needs alpha > 0".into(),
        ));
    }
    let mut out = y_tilde.clone();
    resolve_fstar_in_place(spec, &mut out, ctx);
    Ok(out)
}

pub(crate) fn resolve_fstar_in_place(spec: &ModelSpec, y: &mut DualState, ctx: &ProxContext<'_>) {
    if spec.kind == ModelKind::L2L2 {
        let f = 1.0 / (1.0 + ctx.sigma / ctx.alpha);
        for g in &mut y.channels {
            g.as_mut_slice().iter_mut().for_each(|v| *v *= f);
        }
        return;
    }
    let mut rest: &mut [Grid] = &mut y.channels;
    let mut start = 0;
    for (range, weight) in spec.dual_blocks() {
        let (_, tail) = rest.split_at_mut(range.start - start);
        let (block, tail) = tail.split_at_mut(range.len());
        let mut refs: Vec<&mut [f64]> = block.iter_mut().map(|g| g.as_mut_slice()).collect();
        project_block(&mut refs, weight, spec.isotropy);
        rest = tail;
        start = range.end;
    }
}

/// Primal objective `G(x) + F(Kx)`, including the Bregman term `-alpha <b, v>`.
pub fn energy(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    x: &PrimalState,
    bregman_b: Option<&FlowField>,
) -> Result<f64> {
    x.check_shape(spec, derivs.dims())?;
    let kx = apply_k(spec, x)?;
    Ok(energy_with_kx(spec, derivs, x, &kx, bregman_b))
}

pub(crate) fn energy_with_kx(
    spec: &ModelSpec,
    derivs: &ImageDerivatives,
    x: &PrimalState,
    kx: &DualState,
    bregman_b: Option<&FlowField>,
) -> f64 {
    let (ux, uy, ut) = (
        derivs.ux.as_slice(),
        derivs.uy.as_slice(),
        derivs.ut.as_slice(),
    );
    let (v1, v2) = (x.v.v1.as_slice(), x.v.v2.as_slice());
    let l2 = spec.kind.has_l2_data();
    let mut data = 0.0;
    for k in 0..v1.len() {
        let rho = ux[k] * v1[k] + uy[k] * v2[k] + ut[k];
        data += if l2 { 0.5 * rho * rho } else { rho.abs() };
    }
    if let Some(b) = bregman_b {
        data -= spec.alpha * (b.v1.dot(&x.v.v1) + b.v2.dot(&x.v.v2));
    }
    if spec.kind == ModelKind::L1TvL2 {
        if let Some(w) = &x.w {
            data += 0.5 * spec.alpha1 * w.iter().map(Grid::norm_sq).sum::<f64>();
        }
    }

    let reg = if spec.kind == ModelKind::L2L2 {
        0.5 * spec.alpha * kx.norm_sq()
    } else {
        let n = v1.len();
        spec.dual_blocks()
            .into_iter()
            .map(|(range, weight)| {
                let block = &kx.channels[range];
                let total: f64 = (0..n)
                    .map(|k| primal_norm(block.iter().map(|c| c.as_slice()[k]), spec.isotropy))
                    .sum();
                weight * total
            })
            .sum()
    };
    data + reg
}
