//! Grid containers and the finite-difference operators shared by every model.
//!
//! Indexing convention: pixel `(i, j)` is column `i` (x axis, `0..width`) and
//! row `j` (y axis, `0..height`); storage is row-major, so the flat index is
//! `j * width + i`. Every stencil below is written in this convention.

use crate::error::{FlowError, Result};

/// A dense single-channel 2-D grid of `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FlowError::InvalidGrid(format!(
                "grid must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(FlowError::InvalidGrid(format!(
                "expected {} values for a {width}x{height} grid, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a grid by evaluating `f(i, j)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                data.push(f(i, j));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.width + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.width + i] = value;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn dot(&self, other: &Grid) -> f64 {
        debug_assert_eq!(self.dims(), other.dims());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub(crate) fn check_same_dims(&self, other: &Grid) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(FlowError::mismatch(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// A single-channel intensity image, at least 2x2 with finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct Image(Grid);

impl Image {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.width() < 2 || grid.height() < 2 {
            return Err(FlowError::InvalidGrid(format!(
                "images must be at least 2x2, got {}x{}",
                grid.width(),
                grid.height()
            )));
        }
        if !grid.is_finite() {
            return Err(FlowError::InvalidGrid(
                "image contains non-finite intensities".into(),
            ));
        }
        Ok(Image(grid))
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Image::new(Grid::from_fn(width, height, f))
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.0.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.0.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

/// A two-component displacement field in pixels per frame.
///
/// `valid` marks pixels whose value is known; ground truths read from disk
/// may carry "unknown" sentinels. `None` means every pixel is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub v1: Grid,
    pub v2: Grid,
    pub valid: Option<Vec<bool>>,
}

impl FlowField {
    pub fn new(v1: Grid, v2: Grid) -> Result<Self> {
        v1.check_same_dims(&v2)?;
        Ok(FlowField {
            v1,
            v2,
            valid: None,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            v1: Grid::zeros(width, height),
            v2: Grid::zeros(width, height),
            valid: None,
        }
    }

    pub fn constant(width: usize, height: usize, v1: f64, v2: f64) -> Self {
        FlowField {
            v1: Grid::filled(width, height, v1),
            v2: Grid::filled(width, height, v2),
            valid: None,
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut v1 = Grid::zeros(width, height);
        let mut v2 = Grid::zeros(width, height);
        for j in 0..height {
            for i in 0..width {
                let (a, b) = f(i, j);
                v1.set(i, j, a);
                v2.set(i, j, b);
            }
        }
        FlowField {
            v1,
            v2,
            valid: None,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.v1.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.v1.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.v1.dims()
    }

    #[inline]
    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid.as_ref().is_none_or(|m| m[idx])
    }

    /// Largest Euclidean magnitude over valid pixels.
    pub fn max_magnitude(&self) -> f64 {
        self.v1
            .as_slice()
            .iter()
            .zip(self.v2.as_slice())
            .enumerate()
            .filter(|(k, _)| self.is_valid(*k))
            .map(|(_, (a, b))| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> FlowField {
        FlowField {
            v1: self.v1.map(|x| x * factor),
            v2: self.v2.map(|x| x * factor),
            valid: self.valid.clone(),
        }
    }

    pub(crate) fn check_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(FlowError::mismatch(dims, self.dims()));
        }
        Ok(())
    }
}

/// Spatial difference scheme used for `u_x`, `u_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientScheme {
    /// `u[i+1] - u[i]`, zero on the last column/row.
    Forward,
    /// `u[i+1] - u[i-1]`, zero on the first and last column/row.
    #[default]
    Central,
}

/// Scaling of the central difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CentralScale {
    /// The undivided stencil `u[i+1] - u[i-1]`.
    Verbatim,
    /// The difference quotient `(u[i+1] - u[i-1]) / 2`.
    #[default]
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DerivativeConfig {
    pub scheme: GradientScheme,
    pub central_scale: CentralScale,
}

impl DerivativeConfig {
    pub fn forward() -> Self {
        DerivativeConfig {
            scheme: GradientScheme::Forward,
            central_scale: CentralScale::Half,
        }
    }

    pub fn central() -> Self {
        DerivativeConfig {
            scheme: GradientScheme::Central,
            central_scale: CentralScale::Half,
        }
    }

    pub fn central_verbatim() -> Self {
        DerivativeConfig {
            scheme: GradientScheme::Central,
            central_scale: CentralScale::Verbatim,
        }
    }
}

/// Discretized `u_t`, `u_x`, `u_y` at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDerivatives {
    pub ut: Grid,
    pub ux: Grid,
    pub uy: Grid,
}

impl ImageDerivatives {
    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.ut.dims()
    }

    pub fn width(&self) -> usize {
        self.ut.width()
    }

    pub fn height(&self) -> usize {
        self.ut.height()
    }
}

/// Forward time difference plus the configured spatial scheme on the first frame.
pub fn image_derivatives(
    u0: &Image,
    u1: &Image,
    config: DerivativeConfig,
) -> Result<ImageDerivatives> {
    u0.grid().check_same_dims(u1.grid())?;
    let (w, h) = u0.dims();
    let g = u0.grid();

    let ut = Grid::from_fn(w, h, |i, j| u1.get(i, j) - u0.get(i, j));
    let (ux, uy) = match config.scheme {
        GradientScheme::Forward => (
            Grid::from_fn(w, h, |i, j| {
                if i + 1 < w {
                    g.get(i + 1, j) - g.get(i, j)
                } else {
                    0.0
                }
            }),
            Grid::from_fn(w, h, |i, j| {
                if j + 1 < h {
                    g.get(i, j + 1) - g.get(i, j)
                } else {
                    0.0
                }
            }),
        ),
        GradientScheme::Central => {
            let scale = match config.central_scale {
                CentralScale::Verbatim => 1.0,
                CentralScale::Half => 0.5,
            };
            (
                Grid::from_fn(w, h, |i, j| {
                    if i > 0 && i + 1 < w {
                        scale * (g.get(i + 1, j) - g.get(i - 1, j))
                    } else {
                        0.0
                    }
                }),
                Grid::from_fn(w, h, |i, j| {
                    if j > 0 && j + 1 < h {
                        scale * (g.get(i, j + 1) - g.get(i, j - 1))
                    } else {
                        0.0
                    }
                }),
            )
        }
    };
    Ok(ImageDerivatives { ut, ux, uy })
}

/// Forward differences of one channel with Neumann boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: Grid,
    pub gy: Grid,
}

impl GradientField {
    pub fn zeros(width: usize, height: usize) -> Self {
        GradientField {
            gx: Grid::zeros(width, height),
            gy: Grid::zeros(width, height),
        }
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.gx.dot(&other.gx) + self.gy.dot(&other.gy)
    }
}

pub fn grad_forward(channel: &Grid) -> GradientField {
    let (w, h) = channel.dims();
    let mut out = GradientField::zeros(w, h);
    grad_forward_into(
        channel.as_slice(),
        w,
        h,
        out.gx.as_mut_slice(),
        out.gy.as_mut_slice(),
    );
    out
}

pub fn div_backward(y: &GradientField) -> Grid {
    let (w, h) = y.gx.dims();
    let mut out = Grid::zeros(w, h);
    div_backward_add(
        y.gx.as_slice(),
        y.gy.as_slice(),
        w,
        h,
        1.0,
        out.as_mut_slice(),
    );
    out
}

/// Writes the forward differences of `src` into `gx`, `gy`.
pub(crate) fn grad_forward_into(src: &[f64], w: usize, h: usize, gx: &mut [f64], gy: &mut [f64]) {
    for j in 0..h {
        let row = j * w;
        for i in 0..w {
            let k = row + i;
            gx[k] = if i + 1 < w { src[k + 1] - src[k] } else { 0.0 };
            gy[k] = if j + 1 < h { src[k + w] - src[k] } else { 0.0 };
        }
    }
}

/// Adds `scale * div(yx, yy)` to `out`.
///
/// Per axis: `y[0]` at the first index, `y[i] - y[i-1]` in the interior and
/// `-y[n-2]` at the last index, so the last column/row of `yx`/`yy` is never
/// read. That makes this the exact negative adjoint of [`grad_forward`].
pub(crate) fn div_backward_add(
    yx: &[f64],
    yy: &[f64],
    w: usize,
    h: usize,
    scale: f64,
    out: &mut [f64],
) {
    for j in 0..h {
        let row = j * w;
        for i in 0..w {
            let k = row + i;
            let dx = if w == 1 {
                0.0
            } else if i == 0 {
                yx[k]
            } else if i + 1 == w {
                -yx[k - 1]
            } else {
                yx[k] - yx[k - 1]
            };
            let dy = if h == 1 {
                0.0
            } else if j == 0 {
                yy[k]
            } else if j + 1 == h {
                -yy[k - w]
            } else {
                yy[k] - yy[k - w]
            };
            out[k] += scale * (dx + dy);
        }
    }
}

/// Power-iteration estimate of `||grad||^2` on a `width x height` grid.
pub fn gradient_norm_sq_estimate(width: usize, height: usize, iterations: usize) -> f64 {
    // Deterministic non-constant start vector; constants lie in the kernel.
    let mut v = Grid::from_fn(width, height, |i, j| {
        let s = ((i * 7919 + j * 104_729) % 1013) as f64 / 1013.0;
        s - 0.5 + if (i + j) % 2 == 0 { 0.25 } else { -0.25 }
    });
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = v.norm_sq().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = v.map(|x| x / norm);
        let g = grad_forward(&v);
        estimate = g.dot(&g);
        // grad^T grad = -div grad
        v = div_backward(&g).map(|x| -x);
    }
    estimate
}
