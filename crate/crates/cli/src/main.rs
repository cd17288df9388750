//! `tvflow` command-line tool.
//!
//! Exit codes: 0 success, 2 bad arguments or mismatched inputs, 3 I/O or
//! format failure, 4 solver divergence, 5 every benchmark entry failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tvflow::io::{
    flow_to_color, read_flo, read_image, write_flo, write_image, write_report_csv, write_rgb_png,
};
use tvflow::solver::solve_observed;
use tvflow::synth::{
    format_rank_table, run_benchmark, run_grid_search, synthetic_dataset, warp_cubic, Manifest,
    GRID_FACTORS,
};
use tvflow::{
    aggregate_ranks, evaluate, image_derivatives, DerivativeConfig, FlowError, Isotropy, ModelKind,
    ModelSpec, NoiseConfig, NoiseTarget, SyntheticKind, WCoupling,
};

const THREADS_ENV: &str = "TVFLOW_THREADS";

#[derive(Parser)]
#[command(name = "tvflow", version, about = "TV-regularized optical flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the flow between two frames.
    Estimate(EstimateArgs),
    /// Compare a flow file against ground truth.
    Metrics {
        flow: PathBuf,
        ground_truth: PathBuf,
    },
    /// Run a benchmark manifest and write a CSV report.
    Bench(BenchArgs),
    /// Write a synthetic dataset directory (frame10.png, frame11.png, flow10.flo).
    Synth(SynthArgs),
    /// Render a flow file with the Middlebury color wheel.
    Color {
        flow: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Magnitude mapped to full saturation; defaults to the 99th percentile.
        #[arg(long)]
        max: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Gradient {
    Forward,
    Central,
    /// Central difference without the factor 1/2.
    CentralVerbatim,
}

impl From<Gradient> for DerivativeConfig {
    fn from(g: Gradient) -> Self {
        match g {
            Gradient::Forward => DerivativeConfig::forward(),
            Gradient::Central => DerivativeConfig::central(),
            Gradient::CentralVerbatim => DerivativeConfig::central_verbatim(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum IsotropyArg {
    Iso,
    Aniso,
}

#[derive(Clone, Copy, ValueEnum)]
enum CouplingArg {
    Shared,
    Full,
}

#[derive(Args)]
struct EstimateArgs {
    frame1: PathBuf,
    frame2: PathBuf,
    /// l2-l2, l2-tv, l1-tv, l1-tv-l2 or l1-tv-tv.
    #[arg(long, default_value = "l1-tv")]
    model: ModelKind,
    /// Main regularization weight (alpha0 for the extended models).
    #[arg(long)]
    alpha: Option<f64>,
    /// Weight of the first-order part of the extended models.
    #[arg(long)]
    alpha1: Option<f64>,
    /// Number of Bregman rounds (L2-TV only).
    #[arg(long, default_value_t = 0)]
    bregman: usize,
    #[arg(long, default_value_t = tvflow::models::DEFAULT_MAX_ITERS)]
    iters: usize,
    #[arg(long, default_value_t = tvflow::models::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "iso")]
    isotropy: IsotropyArg,
    #[arg(long, value_enum, default_value = "shared")]
    coupling: CouplingArg,
    #[arg(long, value_enum, default_value = "central")]
    gradient: Gradient,
    #[arg(long)]
    out: PathBuf,
    /// Also write a color rendering of the result.
    #[arg(long)]
    color: Option<PathBuf>,
    /// Print residuals while iterating.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct BenchArgs {
    manifest: PathBuf,
    /// Gaussian noise sigma; overrides the manifest.
    #[arg(long)]
    noise: Option<f64>,
    /// Noise seed; overrides the manifest.
    #[arg(long)]
    seed: Option<u64>,
    /// Add noise to the second frame only.
    #[arg(long)]
    noise_second_only: bool,
    /// Try several multiples of each weight and keep the best per dataset.
    #[arg(long)]
    grid_search: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatternArg {
    Translate,
    Block,
    Disc,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    pattern: PatternArg,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        let code = match &e {
            FlowError::Io { .. }
            | FlowError::Codec { .. }
            | FlowError::Format(_)
            | FlowError::UnsupportedImage(_)
            | FlowError::Csv(_) => 3,
            FlowError::Divergence { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let mut spec = if a.bregman > 0 && a.model == ModelKind::L2Tv {
        ModelSpec::l2_tv_bregman_static()
    } else {
        ModelSpec::static_params(a.model)
    };
    spec.bregman_iters = a.bregman;
    if let Some(w) = a.alpha {
        spec = spec.with_weight(w);
    }
    if let Some(w) = a.alpha1 {
        if !a.model.is_extended() {
            return Err(usage(format!(
                "--alpha1 only applies to extended models, not {}",
                a.model
            )));
        }
        spec = spec.with_alpha1(w);
    }
    spec = spec
        .with_budget(a.iters, a.tol)
        .with_isotropy(match a.isotropy {
            IsotropyArg::Iso => Isotropy::Isotropic,
            IsotropyArg::Aniso => Isotropy::Anisotropic,
        })
        .with_coupling(match a.coupling {
            CouplingArg::Shared => WCoupling::Shared,
            CouplingArg::Full => WCoupling::PerComponent,
        });
    spec.validate()?;

    let u0 = read_image(&a.frame1)?;
    let u1 = read_image(&a.frame2)?;
    let d = image_derivatives(&u0, &u1, a.gradient.into())?;
    let verbose = a.verbose;
    let mut observer = |info: &tvflow::IterationInfo<'_>| {
        if verbose && (info.iteration == 1 || info.iteration % 10 == 0) {
            eprintln!(
                "round {:>2} iter {:>5} residual {:.3e} energy {:.6e}",
                info.bregman_round, info.iteration, info.residual, info.energy
            );
        }
    };
    let (v, reports) = solve_observed(&spec, &d, &mut observer)?;
    if verbose {
        for r in &reports {
            eprintln!(
                "round {:>2} finished after {} iterations, residual {:.3e}{}",
                r.bregman_round,
                r.iterations_run,
                r.final_residual,
                if r.converged {
                    ""
                } else {
                    " (iteration limit)"
                }
            );
        }
    }
    write_flo(&a.out, &v)?;
    if let Some(path) = a.color {
        write_rgb_png(path, &flow_to_color(&v, None))?;
    }
    Ok(())
}

fn metrics(flow: PathBuf, gt: PathBuf) -> Result<(), Failure> {
    let v = read_flo(flow)?;
    let g = read_flo(gt)?;
    let (aee, ae, n) = evaluate(&v, &g)?;
    let total = v.v1.len();
    println!("AEE {aee:.6}, AE {ae:.6}");
    println!("pixels {n}, masked {}", total - n);
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let manifest = Manifest::read(&a.manifest)?;
    let mut datasets = Vec::new();
    for src in &manifest.datasets {
        match src.load() {
            Ok(d) => datasets.push(d),
            Err(e) => eprintln!("skipping dataset {src:?}: {e}"),
        }
    }
    if datasets.is_empty() {
        return Err(Failure {
            code: 5,
            message: "no dataset could be loaded".into(),
        });
    }
    let sigma = a.noise.or(manifest.noise);
    let noise = match sigma {
        Some(s) if !(s >= 0.0 && s.is_finite()) => {
            return Err(usage(format!("--noise must be non-negative, got {s}")))
        }
        Some(s) if s > 0.0 => Some(NoiseConfig {
            sigma: s,
            seed: a.seed.unwrap_or(manifest.seed),
            target: if a.noise_second_only {
                NoiseTarget::SecondFrame
            } else {
                NoiseTarget::BothFrames
            },
        }),
        _ => None,
    };
    let outcome = if a.grid_search {
        run_grid_search(&datasets, &manifest.cases, noise, &GRID_FACTORS)?
    } else {
        run_benchmark(&datasets, &manifest.cases, noise)?
    };
    for f in &outcome.failures {
        eprintln!(
            "failed: {} on {}: {}",
            f.model_name, f.dataset_name, f.error
        );
    }
    if outcome.reports.is_empty() {
        return Err(Failure {
            code: 5,
            message: "every benchmark entry failed".into(),
        });
    }
    write_report_csv(&a.out, &outcome.reports)?;
    let rows = aggregate_ranks(&outcome.reports)?;
    print!("{}", format_rank_table(&rows, &manifest.cases));
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    if a.size < 8 {
        return Err(usage("--size must be at least 8"));
    }
    let kind = match a.pattern {
        PatternArg::Translate => SyntheticKind::Translate { dx: 0.5, dy: 0.0 },
        PatternArg::Block => SyntheticKind::Block { speed: 0.8 },
        PatternArg::Disc => SyntheticKind::Disc { speed: 0.8 },
    };
    let ds = synthetic_dataset(kind, a.size, a.seed)?;
    let second = warp_cubic(&ds.frame, &ds.flow)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", a.out_dir.display()),
    })?;
    write_image(a.out_dir.join("frame10.png"), &ds.frame)?;
    write_image(a.out_dir.join("frame11.png"), &second)?;
    write_flo(a.out_dir.join("flow10.flo"), &ds.flow)?;
    Ok(())
}

fn color(flow: PathBuf, out: PathBuf, max: Option<f64>) -> Result<(), Failure> {
    if let Some(m) = max {
        if !(m > 0.0 && m.is_finite()) {
            return Err(usage(format!("--max must be positive, got {m}")));
        }
    }
    let v = read_flo(flow)?;
    write_rgb_png(out, &flow_to_color(&v, max))?;
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(format!(
            "{THREADS_ENV} must be a positive integer, got '{raw}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Metrics { flow, ground_truth } => metrics(flow, ground_truth),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
        Command::Color { flow, out, max } => color(flow, out, max),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
