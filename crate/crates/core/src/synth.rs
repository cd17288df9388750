//! Synthetic benchmark protocol: scale a ground truth to sub-pixel size,
//! synthesize the second frame by bicubic warping, optionally add noise,
//! then run a list of model configurations and collect their errors.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{FlowError, Result};
use crate::grid::{image_derivatives, DerivativeConfig, FlowField, Grid, Image};
use crate::metrics::{evaluate, ErrorReport, RankRow};
use crate::models::{ModelKind, ModelSpec, WCoupling};
use crate::prox::Isotropy;
use crate::solver::solve;

/// Result of [`scale_flow_to_unit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleOutcome {
    /// Factor the field was multiplied with.
    pub factor: f64,
    /// Set when the field was identically zero and could not be scaled.
    pub zero_field: bool,
}

/// Shrinks `v` so its largest valid magnitude is at most one pixel.
///
/// Fields that already satisfy the bound are returned unchanged; nothing is
/// ever scaled up.
pub fn scale_flow_to_unit(v: &FlowField) -> (FlowField, ScaleOutcome) {
    let max = v.max_magnitude();
    if max == 0.0 {
        return (
            v.clone(),
            ScaleOutcome {
                factor: 1.0,
                zero_field: true,
            },
        );
    }
    if max <= 1.0 {
        return (
            v.clone(),
            ScaleOutcome {
                factor: 1.0,
                zero_field: false,
            },
        );
    }
    let factor = 1.0 / max;
    let mut out = v.clone();
    for k in 0..out.v1.len() {
        if out.is_valid(k) {
            out.v1.as_mut_slice()[k] /= max;
            out.v2.as_mut_slice()[k] /= max;
        }
    }
    (
        out,
        ScaleOutcome {
            factor,
            zero_field: false,
        },
    )
}

/// Catmull-Rom weights for the four taps around a sample at offset `t`.
#[inline]
fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Bicubic sample of `img` at `(x, y)`; taps outside the grid clamp to the border.
pub fn sample_cubic(img: &Grid, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let x0 = x.floor();
    let y0 = y.floor();
    let wx = catmull_rom(x - x0);
    let wy = catmull_rom(y - y0);
    let clamp = |v: f64, n: usize| -> usize { v.max(0.0).min((n - 1) as f64) as usize };
    let mut acc = 0.0;
    for (m, wym) in wy.iter().enumerate() {
        let j = clamp(y0 + m as f64 - 1.0, h);
        let mut row = 0.0;
        for (n, wxn) in wx.iter().enumerate() {
            let i = clamp(x0 + n as f64 - 1.0, w);
            row += wxn * img.get(i, j);
        }
        acc += wym * row;
    }
    acc
}

/// Second frame of the motion `v` applied to `i1`: `I2(x) = I1(x - v(x))`.
///
/// With this orientation `I2(x + v) = I1(x)`, which is the displacement
/// satisfying `u_t + grad u . v = 0`.
pub fn warp_cubic(i1: &Image, v: &FlowField) -> Result<Image> {
    v.check_dims(i1.dims())?;
    let (w, h) = i1.dims();
    let g = i1.grid();
    Image::new(Grid::from_fn(w, h, |i, j| {
        let k = j * w + i;
        let (dx, dy) = if v.is_valid(k) {
            (v.v1.as_slice()[k], v.v2.as_slice()[k])
        } else {
            (0.0, 0.0)
        };
        sample_cubic(g, i as f64 - dx, j as f64 - dy)
    }))
}

/// Adds seeded `N(0, sigma^2)` noise per pixel and clamps to `[0, 1]`.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Result<Image> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(FlowError::InvalidSpec(format!(
            "noise sigma must be non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .grid()
        .as_slice()
        .iter()
        .map(|&x| (x + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Image::new(Grid::new(img.width(), img.height(), data)?)
}

/// Smooth random texture: a sum of random plane waves rescaled to `[0.05, 0.95]`.
pub fn smooth_texture(width: usize, height: usize, seed: u64) -> Result<Image> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..16)
        .map(|_| {
            let freq = rng.random_range(0.08..0.7);
            let dir = rng.random_range(0.0..std::f64::consts::TAU);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.3..1.0) / (1.0 + 2.0 * freq);
            (freq * dir.cos(), freq * dir.sin(), phase, amp)
        })
        .collect();
    let raw = Grid::from_fn(width, height, |i, j| {
        waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (kx * i as f64 + ky * j as f64 + ph).sin())
            .sum()
    });
    let lo = raw.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw
        .as_slice()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    Image::new(raw.map(|x| 0.05 + 0.9 * (x - lo) / span))
}

/// A first frame paired with its ground-truth motion.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub frame: Image,
    pub flow: FlowField,
}

/// Built-in synthetic motion patterns over a smooth texture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Whole image translated by a constant vector.
    Translate { dx: f64, dy: f64 },
    /// Centered square block (half the image side) translated by `speed`
    /// along x; the background is static.
    Block { speed: f64 },
    /// Centered disc (radius 0.3 of the smaller side) rotating so that its
    /// rim moves `speed` pixels per frame.
    Disc { speed: f64 },
}

impl SyntheticKind {
    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::Translate { .. } => "translate",
            SyntheticKind::Block { .. } => "block",
            SyntheticKind::Disc { .. } => "disc",
        }
    }

    pub fn flow(&self, width: usize, height: usize) -> FlowField {
        match *self {
            SyntheticKind::Translate { dx, dy } => FlowField::constant(width, height, dx, dy),
            SyntheticKind::Block { speed } => {
                let (x0, x1) = (width / 4, width - width / 4);
                let (y0, y1) = (height / 4, height - height / 4);
                FlowField::from_fn(width, height, |i, j| {
                    if (x0..x1).contains(&i) && (y0..y1).contains(&j) {
                        (speed, 0.0)
                    } else {
                        (0.0, 0.0)
                    }
                })
            }
            SyntheticKind::Disc { speed } => {
                let cx = (width as f64 - 1.0) / 2.0;
                let cy = (height as f64 - 1.0) / 2.0;
                let r = 0.3 * width.min(height) as f64;
                let omega = speed / r;
                FlowField::from_fn(width, height, |i, j| {
                    let (x, y) = (i as f64 - cx, j as f64 - cy);
                    if x.hypot(y) <= r {
                        (-omega * y, omega * x)
                    } else {
                        (0.0, 0.0)
                    }
                })
            }
        }
    }
}

pub fn synthetic_dataset(kind: SyntheticKind, size: usize, seed: u64) -> Result<Dataset> {
    Ok(Dataset {
        name: format!("{}-{size}", kind.name()),
        frame: smooth_texture(size, size, seed)?,
        flow: kind.flow(size, size),
    })
}

/// Loads `<dir>/frame10.png` and `<dir>/flow10.flo`.
pub fn load_dataset_dir(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let frame = crate::io::read_image(dir.join("frame10.png"))?;
    let flow = crate::io::read_flo(dir.join("flow10.flo"))?;
    flow.check_dims(frame.dims())?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(Dataset { name, frame, flow })
}

/// One model configuration in a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub label: String,
    pub spec: ModelSpec,
    pub derivatives: DerivativeConfig,
}

impl BenchCase {
    pub fn new(spec: ModelSpec) -> Self {
        BenchCase {
            label: spec.label(),
            spec,
            derivatives: DerivativeConfig::default(),
        }
    }

    pub fn with_derivatives(mut self, d: DerivativeConfig) -> Self {
        self.derivatives = d;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Value shown in the second weight column: `alpha1` for extended
    /// models, the round count for Bregman runs.
    pub fn secondary_weight(&self) -> Option<f64> {
        if self.spec.kind.is_extended() {
            Some(self.spec.alpha1)
        } else if self.spec.bregman_iters > 0 {
            Some(self.spec.bregman_iters as f64)
        } else {
            None
        }
    }
}

/// The six static-parameter configurations of the reference comparison.
pub fn reference_cases() -> Vec<BenchCase> {
    let mut cases: Vec<BenchCase> = ModelKind::ALL
        .iter()
        .map(|&k| BenchCase::new(ModelSpec::static_params(k)))
        .collect();
    cases.insert(2, BenchCase::new(ModelSpec::l2_tv_bregman_static()));
    cases
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseTarget {
    #[default]
    BothFrames,
    SecondFrame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub seed: u64,
    pub target: NoiseTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchFailure {
    pub model_name: String,
    pub dataset_name: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkOutcome {
    pub reports: Vec<ErrorReport>,
    pub failures: Vec<BenchFailure>,
}

/// Frames and scaled ground truth for one dataset.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub name: String,
    pub frame1: Image,
    pub frame2: Image,
    pub ground_truth: FlowField,
}

pub fn prepare_pair(ds: &Dataset, noise: Option<NoiseConfig>, index: u64) -> Result<PreparedPair> {
    let (gt, _) = scale_flow_to_unit(&ds.flow);
    let mut frame1 = ds.frame.clone();
    let mut frame2 = warp_cubic(&ds.frame, &gt)?;
    if let Some(n) = noise {
        let base = n.seed.wrapping_add(index.wrapping_mul(0x9E37_79B9));
        if n.target == NoiseTarget::BothFrames {
            frame1 = add_gaussian_noise(&frame1, n.sigma, base)?;
        }
        frame2 = add_gaussian_noise(&frame2, n.sigma, base ^ 0x5555_5555_5555_5555)?;
    }
    Ok(PreparedPair {
        name: ds.name.clone(),
        frame1,
        frame2,
        ground_truth: gt,
    })
}

pub fn run_case(pair: &PreparedPair, case: &BenchCase) -> Result<ErrorReport> {
    let d = image_derivatives(&pair.frame1, &pair.frame2, case.derivatives)?;
    let (v, reports) = solve(&case.spec, &d)?;
    let (aee, ae, n) = evaluate(&v, &pair.ground_truth)?;
    Ok(ErrorReport {
        model_name: case.label.clone(),
        dataset_name: pair.name.clone(),
        alpha: case.spec.weight(),
        alpha1: case.secondary_weight().unwrap_or(0.0),
        iterations: reports.iter().map(|r| r.iterations_run).sum(),
        aee,
        ae,
        n_pixels: n,
    })
}

/// Runs every case on every dataset. Entries that fail are recorded in
/// `failures` without stopping the rest of the run.
pub fn run_benchmark(
    datasets: &[Dataset],
    cases: &[BenchCase],
    noise: Option<NoiseConfig>,
) -> Result<BenchmarkOutcome> {
    if datasets.is_empty() || cases.is_empty() {
        return Err(FlowError::InvalidSpec(
            "benchmark needs at least one dataset and one model".into(),
        ));
    }
    let mut outcome = BenchmarkOutcome::default();
    let mut pairs = Vec::new();
    for (idx, ds) in datasets.iter().enumerate() {
        match prepare_pair(ds, noise, idx as u64) {
            Ok(p) => pairs.push(p),
            Err(e) => {
                for c in cases {
                    outcome.failures.push(BenchFailure {
                        model_name: c.label.clone(),
                        dataset_name: ds.name.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    let jobs: Vec<(&PreparedPair, &BenchCase)> = pairs
        .iter()
        .flat_map(|p| cases.iter().map(move |c| (p, c)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(p, c)| run_case(p, c).map_err(|e| (p.name.clone(), c.label.clone(), e.to_string())))
        .collect();
    for r in results {
        match r {
            Ok(rep) => outcome.reports.push(rep),
            Err((dataset_name, model_name, error)) => outcome.failures.push(BenchFailure {
                model_name,
                dataset_name,
                error,
            }),
        }
    }
    Ok(outcome)
}

/// Weight multipliers tried by [`run_grid_search`].
pub const GRID_FACTORS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Runs every case with its main weight multiplied by each of `factors` and
/// keeps, per case and dataset, the report with the smallest AEE. The kept
/// report carries the weight that produced it.
pub fn run_grid_search(
    datasets: &[Dataset],
    cases: &[BenchCase],
    noise: Option<NoiseConfig>,
    factors: &[f64],
) -> Result<BenchmarkOutcome> {
    if factors.is_empty() {
        return Err(FlowError::InvalidSpec(
            "grid search needs at least one factor".into(),
        ));
    }
    let expanded: Vec<BenchCase> = cases
        .iter()
        .flat_map(|c| {
            factors.iter().map(move |&f| {
                let mut v = c.clone();
                v.spec = v.spec.clone().with_weight(c.spec.weight() * f);
                v
            })
        })
        .collect();
    let raw = run_benchmark(datasets, &expanded, noise)?;
    let mut reports: Vec<ErrorReport> = Vec::new();
    for r in raw.reports {
        match reports
            .iter_mut()
            .find(|b| b.model_name == r.model_name && b.dataset_name == r.dataset_name)
        {
            Some(b) if r.aee < b.aee => *b = r,
            Some(_) => {}
            None => reports.push(r),
        }
    }
    let mut failures = raw.failures;
    failures.retain(|f| {
        !reports
            .iter()
            .any(|r| r.model_name == f.model_name && r.dataset_name == f.dataset_name)
    });
    failures.dedup_by(|a, b| a.model_name == b.model_name && a.dataset_name == b.dataset_name);
    Ok(BenchmarkOutcome { reports, failures })
}

fn fmt_weight(x: f64) -> String {
    format!("{x}")
}

/// Plain-text rank table with the columns
/// `Algorithm | alpha | alpha2 | mean AEE ratio | mean AE ratio`.
pub fn format_rank_table(rows: &[RankRow], cases: &[BenchCase]) -> String {
    let mut lines = vec![format!(
        "{:<16} {:>8} {:>8} {:>8} {:>8}",
        "Algorithm", "alpha", "alpha2", "avgAEE", "avgAE"
    )];
    let ordered: Vec<&BenchCase> = cases.iter().collect();
    for case in ordered {
        let Some(row) = rows.iter().find(|r| r.model_name == case.label) else {
            continue;
        };
        let a2 = case
            .secondary_weight()
            .map(fmt_weight)
            .unwrap_or_else(|| "-".into());
        lines.push(format!(
            "{:<16} {:>8} {:>8} {:>8.3} {:>8.3}{}",
            case.label,
            fmt_weight(case.spec.weight()),
            a2,
            row.mean_rel_aee,
            row.mean_rel_ae,
            if row.degenerate { " *" } else { "" }
        ));
    }
    lines.join("\n") + "\n"
}

/// Where a manifest dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic {
        kind: SyntheticKind,
        size: usize,
        seed: u64,
    },
    Directory(PathBuf),
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Synthetic { kind, size, seed } => synthetic_dataset(*kind, *size, *seed),
            DatasetSource::Directory(p) => load_dataset_dir(p),
        }
    }
}

/// Parsed benchmark manifest.
///
/// Line-oriented `key = value` text; `#` starts a comment.
///
/// ```text
/// seed = 7
/// noise = 0.002
/// dataset = synthetic:block:64
/// dataset = data/Dimetrodon
/// model = l1-tv
/// model = l2-tv alpha=0.02 bregman=10
/// model = l1-tv gradient=forward label=L1-TV-fwd
/// model = reference
/// ```
///
/// Dataset values are either `synthetic:<translate|block|disc>[:size[:seed]]`
/// or a directory (relative to the manifest) holding `frame10.png` and
/// `flow10.flo`. Model options: `alpha`, `alpha1`, `bregman`, `iters`, `tol`,
/// `isotropy=iso|aniso`, `coupling=shared|full`,
/// `gradient=forward|central|central-verbatim` and `label`. `reference`
/// expands to the six static-parameter configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub datasets: Vec<DatasetSource>,
    pub cases: Vec<BenchCase>,
    pub noise: Option<f64>,
    pub seed: u64,
}

fn parse_synthetic(spec: &str, line: usize) -> Result<DatasetSource> {
    let err = |m: String| FlowError::Manifest { line, message: m };
    let parts: Vec<&str> = spec.split(':').collect();
    let kind = match parts.first().copied() {
        Some("translate") => SyntheticKind::Translate { dx: 0.5, dy: 0.0 },
        Some("block") => SyntheticKind::Block { speed: 0.8 },
        Some("disc") => SyntheticKind::Disc { speed: 0.8 },
        other => return Err(err(format!("unknown synthetic dataset {other:?}"))),
    };
    let size = match parts.get(1) {
        Some(s) => s.parse().map_err(|_| err(format!("bad size '{s}'")))?,
        None => 64,
    };
    if size < 8 {
        return Err(err(format!(
            "synthetic size must be at least 8, got {size}"
        )));
    }
    let seed = match parts.get(2) {
        Some(s) => s.parse().map_err(|_| err(format!("bad seed '{s}'")))?,
        None => 1,
    };
    Ok(DatasetSource::Synthetic { kind, size, seed })
}

fn parse_model(value: &str, line: usize) -> Result<Vec<BenchCase>> {
    let err = |m: String| FlowError::Manifest { line, message: m };
    let mut words = value.split_whitespace();
    let name = words
        .next()
        .ok_or_else(|| err("empty model entry".into()))?;
    if name == "reference" {
        return Ok(reference_cases());
    }
    let kind: ModelKind = name.parse().map_err(|e: FlowError| err(e.to_string()))?;
    let mut spec = ModelSpec::static_params(kind);
    let mut derivatives = DerivativeConfig::default();
    let mut label = None;
    let mut explicit_alpha = false;
    for w in words {
        let (k, v) = w
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, got '{w}'")))?;
        let num = || -> Result<f64> {
            v.parse()
                .map_err(|_| err(format!("bad number '{v}' for {k}")))
        };
        let int = || -> Result<usize> {
            v.parse()
                .map_err(|_| err(format!("bad integer '{v}' for {k}")))
        };
        match k {
            "alpha" => {
                spec = spec.with_weight(num()?);
                explicit_alpha = true;
            }
            "alpha1" => spec.alpha1 = num()?,
            "bregman" => spec.bregman_iters = int()?,
            "iters" => spec.max_iters = int()?,
            "tol" => spec.tol = num()?,
            "isotropy" => {
                spec.isotropy = match v {
                    "iso" | "isotropic" => Isotropy::Isotropic,
                    "aniso" | "anisotropic" => Isotropy::Anisotropic,
                    _ => return Err(err(format!("bad isotropy '{v}'"))),
                }
            }
            "coupling" => {
                spec.coupling = match v {
                    "shared" => WCoupling::Shared,
                    "full" | "per-component" => WCoupling::PerComponent,
                    _ => return Err(err(format!("bad coupling '{v}'"))),
                }
            }
            "gradient" => {
                derivatives = match v {
                    "forward" => DerivativeConfig::forward(),
                    "central" => DerivativeConfig::central(),
                    "central-verbatim" => DerivativeConfig::central_verbatim(),
                    _ => return Err(err(format!("bad gradient scheme '{v}'"))),
                }
            }
            "label" => label = Some(v.to_string()),
            _ => return Err(err(format!("unknown model option '{k}'"))),
        }
    }
    if spec.bregman_iters > 0 && kind == ModelKind::L2Tv && !explicit_alpha {
        spec.alpha = ModelSpec::l2_tv_bregman_static().alpha;
    }
    spec.validate().map_err(|e| err(e.to_string()))?;
    let mut case = BenchCase::new(spec).with_derivatives(derivatives);
    if let Some(l) = label {
        case.label = l;
    }
    Ok(vec![case])
}

impl Manifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Manifest> {
        let mut m = Manifest {
            datasets: Vec::new(),
            cases: Vec::new(),
            noise: None,
            seed: 0,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| FlowError::Manifest {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let err = |m: String| FlowError::Manifest { line, message: m };
            match key {
                "dataset" => {
                    let src = if let Some(s) = value.strip_prefix("synthetic:") {
                        parse_synthetic(s, line)?
                    } else {
                        DatasetSource::Directory(base_dir.join(value))
                    };
                    m.datasets.push(src);
                }
                "model" => m.cases.extend(parse_model(value, line)?),
                "noise" => {
                    let s: f64 = value
                        .parse()
                        .map_err(|_| err(format!("bad noise '{value}'")))?;
                    if !(s >= 0.0 && s.is_finite()) {
                        return Err(err(format!("noise must be non-negative, got {s}")));
                    }
                    m.noise = Some(s);
                }
                "seed" => {
                    m.seed = value
                        .parse()
                        .map_err(|_| err(format!("bad seed '{value}'")))?
                }
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        if m.datasets.is_empty() {
            return Err(FlowError::Manifest {
                line: 0,
                message: "no dataset entries".into(),
            });
        }
        if m.cases.is_empty() {
            return Err(FlowError::Manifest {
                line: 0,
                message: "no model entries".into(),
            });
        }
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| FlowError::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Manifest::parse(&text, base)
    }
}
