//! Command-line front end: synthetic data generation, single-filter
//! denoising, the full comparison scenarios, and spectrum dumps.

mod config;
mod error;
mod io;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gsdenoise::filters::{bf_iterate, gf_iterate, FilterConfig, IterationMode};
use gsdenoise::graph::{
    bf_graph, gf_weight_matrix, laplacian, BfParams, DiagonalOperator, GfParams, WeightedGraph,
};
use gsdenoise::krylov::{
    lobpcg_filter_observed, pcg_filter_observed, BetaDenominator, KrylovConfig,
};
use gsdenoise::signal::{
    add_gaussian_noise, default_test_signal, make_test_image, psnr, rmse, NoiseSpec, Shape,
    Signal,
};
use gsdenoise::spectral::{eig_sym, gft, DenseMatrix, DENSE_CAP};

use config::Overrides;
use error::{CliError, Result};
use scenarios::defaults;

#[derive(Parser)]
#[command(
    name = "gsdenoise",
    version,
    about = "Graph-signal denoising with bilateral/guided graph filters and Krylov acceleration"
)]
struct Cli {
    /// key=value file whose entries replace built-in defaults
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// output directory (falls back to $GSDENOISE_OUT_DIR, then ".")
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the pinned clean test signal (or image) and a noisy copy
    Synth(SynthArgs),
    /// Denoise one signal/image file with a selected filter
    Denoise(DenoiseArgs),
    /// Run a full scenario: all filters, combined CSV, SVG and metrics
    Compare(CompareArgs),
    /// Eigenvalues of the configured graph plus GFT coefficients
    Spectrum(SpectrumArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// 1D signal length
    #[arg(long)]
    n: Option<usize>,
    /// image rows (requires --cols)
    #[arg(long)]
    rows: Option<usize>,
    /// image columns (requires --rows)
    #[arg(long)]
    cols: Option<usize>,
    /// Gaussian noise standard deviation
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FilterKind {
    Bf,
    Gf,
    BfCg,
    Lobpcg,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Reguided,
    Fixed,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BetaArg {
    /// difference numerator over s_old.s_old
    SDotS,
    /// difference numerator over s_old.r_old
    SDotR,
}

#[derive(Args)]
struct DenoiseArgs {
    /// input signal: .pgm for images, CSV otherwise
    input: PathBuf,
    #[arg(long, value_enum)]
    filter: FilterKind,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    half_width: Option<usize>,
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    sigma_r: Option<f64>,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// weight refresh policy for iterated bf/gf
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// guidance signal file (defaults to the input itself)
    #[arg(long)]
    guidance: Option<PathBuf>,
    /// deflate the all-ones eigenmode (Krylov filters)
    #[arg(long)]
    constraint: bool,
    /// flexible CG direction-update denominator
    #[arg(long, value_enum)]
    beta: Option<BetaArg>,
    /// clean reference for rmse/psnr reporting
    #[arg(long)]
    reference: Option<PathBuf>,
    /// output file (default: denoised.csv or denoised.pgm in --out-dir)
    #[arg(long)]
    output: Option<PathBuf>,
    /// per-iteration trace CSV (Krylov filters only)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    #[value(name = "1d-500")]
    OneD500,
    #[value(name = "1d-1000")]
    OneD1000,
    Image,
    Custom,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    noise: Option<f64>,
    /// signal length for --scenario custom
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum GraphKind {
    Bf,
    Gf,
    Path,
}

#[derive(Args)]
struct SpectrumArgs {
    /// guidance signal for bf/gf graphs; also the GFT input
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bf")]
    graph: GraphKind,
    /// vertex count for --graph path without --input
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    half_width: Option<usize>,
    #[arg(long)]
    sigma_s: Option<f64>,
    #[arg(long)]
    sigma_r: Option<f64>,
    #[arg(long)]
    rho: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// use the symmetrically normalized Laplacian
    #[arg(long)]
    normalized: bool,
    /// dump the graph weights as `i,j,w` CSV (one undirected edge per line)
    #[arg(long, value_name = "FILE")]
    dump_weights: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let overrides = Overrides::load(cli.config.as_deref())?;
    let out_dir = resolve_out_dir(cli.out_dir, &overrides)?;
    match cli.command {
        Command::Synth(args) => cmd_synth(args, &overrides, &out_dir),
        Command::Denoise(args) => cmd_denoise(args, &overrides, &out_dir),
        Command::Compare(args) => cmd_compare(args, &overrides, &out_dir),
        Command::Spectrum(args) => cmd_spectrum(args, &overrides, &out_dir),
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, overrides: &Overrides) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| overrides.string("out_dir").map(PathBuf::from))
        .or_else(|| std::env::var_os("GSDENOISE_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

struct BfArgsView {
    half_width: Option<usize>,
    sigma_s: Option<f64>,
    sigma_r: Option<f64>,
}

fn resolve_bf_params(
    view: BfArgsView,
    overrides: &Overrides,
    default_sigma_r: f64,
) -> Result<BfParams> {
    let half_width = view
        .half_width
        .or(overrides.usize("half_width")?)
        .unwrap_or(defaults::BF_HALF_WIDTH);
    // the spatial sigma defaults to the window half-width
    let sigma_s = view
        .sigma_s
        .or(overrides.f64("sigma_s")?)
        .unwrap_or(half_width as f64);
    let sigma_r = view
        .sigma_r
        .or(overrides.f64("sigma_r")?)
        .unwrap_or(default_sigma_r);
    BfParams::new(sigma_s, sigma_r, half_width).map_err(CliError::from)
}

fn resolve_gf_params(
    rho: Option<usize>,
    epsilon: Option<f64>,
    overrides: &Overrides,
) -> Result<GfParams> {
    let rho = rho.or(overrides.usize("rho")?).unwrap_or(defaults::GF_RHO);
    let epsilon = epsilon
        .or(overrides.f64("epsilon")?)
        .unwrap_or(defaults::GF_EPSILON);
    GfParams::new(rho, epsilon).map_err(CliError::from)
}

fn cmd_synth(args: SynthArgs, overrides: &Overrides, out_dir: &Path) -> Result<()> {
    let noise = args
        .noise
        .or(overrides.f64("noise")?)
        .unwrap_or(defaults::NOISE_STD);
    let seed = args
        .seed
        .or(overrides.u64("seed")?)
        .unwrap_or(defaults::SEED);
    let spec = NoiseSpec::new(noise, seed)?;

    let n = args.n.or(overrides.usize("n")?);
    match (n, args.rows, args.cols) {
        (Some(n), None, None) => {
            if n < 2 {
                return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
            }
            let clean = default_test_signal(n)?;
            let noisy = add_gaussian_noise(&clean, &spec);
            io::write_csv_signal(&io::in_dir(out_dir, "clean.csv"), &clean)?;
            io::write_csv_signal(&io::in_dir(out_dir, "noisy.csv"), &noisy)?;
            println!("wrote clean.csv noisy.csv (n={n}, noise={noise}, seed={seed})");
            Ok(())
        }
        (None, Some(rows), Some(cols)) => {
            let clean = make_test_image(rows, cols)?;
            let noisy = add_gaussian_noise(&clean, &spec);
            io::write_pgm(&io::in_dir(out_dir, "clean.pgm"), &clean)?;
            io::write_pgm(&io::in_dir(out_dir, "noisy.pgm"), &noisy)?;
            println!("wrote clean.pgm noisy.pgm ({rows}x{cols}, noise={noise}, seed={seed})");
            Ok(())
        }
        _ => Err(CliError::Usage(
            "pass either --n for a 1D signal or both --rows and --cols for an image".into(),
        )),
    }
}

fn print_metrics(reference: Option<&Signal>, output: &Signal) -> Result<()> {
    if let Some(reference) = reference {
        println!("rmse={}", rmse(reference, output)?);
        println!("psnr={}", psnr(reference, output, 1.0)?);
    }
    Ok(())
}

fn cmd_denoise(args: DenoiseArgs, overrides: &Overrides, out_dir: &Path) -> Result<()> {
    let input = io::read_signal(&args.input)?;
    let guidance = args.guidance.as_deref().map(io::read_signal).transpose()?;
    let reference = args.reference.as_deref().map(io::read_signal).transpose()?;
    let iters = args
        .iters
        .or(overrides.usize("iters")?)
        .unwrap_or(defaults::KRYLOV_ITERS);
    let mode = match args.mode {
        Some(ModeArg::Fixed) => IterationMode::FixedGuidance,
        Some(ModeArg::Reguided) => IterationMode::ReGuided,
        None => match overrides.string("mode").as_deref() {
            Some("fixed") => IterationMode::FixedGuidance,
            Some("reguided") | None => IterationMode::ReGuided,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "config key mode={other}: expected reguided or fixed"
                )))
            }
        },
    };
    if args.trace.is_some() && matches!(args.filter, FilterKind::Bf | FilterKind::Gf) {
        return Err(CliError::Usage(
            "--trace applies to the Krylov filters (bf-cg, lobpcg) only".into(),
        ));
    }

    let default_sigma_r = match input.shape() {
        Shape::Grid { .. } => defaults::IMAGE_SIGMA_R,
        Shape::Length(_) => defaults::ONE_D_SIGMA_R,
    };

    let output = match args.filter {
        FilterKind::Bf => {
            let params = resolve_bf_params(
                BfArgsView {
                    half_width: args.half_width,
                    sigma_s: args.sigma_s,
                    sigma_r: args.sigma_r,
                },
                overrides,
                default_sigma_r,
            )?;
            let mut cfg = FilterConfig::bilateral(params, iters, mode)?;
            if let Some(g) = guidance {
                cfg = cfg.with_guidance(g);
            }
            bf_iterate(&input, &cfg)?
        }
        FilterKind::Gf => {
            let params = resolve_gf_params(args.rho, args.epsilon, overrides)?;
            let mut cfg = FilterConfig::guided(params, iters, mode)?;
            if let Some(g) = guidance {
                cfg = cfg.with_guidance(g);
            }
            gf_iterate(&input, &cfg)?
        }
        FilterKind::BfCg | FilterKind::Lobpcg => {
            let params = resolve_bf_params(
                BfArgsView {
                    half_width: args.half_width,
                    sigma_s: args.sigma_s,
                    sigma_r: args.sigma_r,
                },
                overrides,
                default_sigma_r,
            )?;
            let guide = guidance.as_ref().unwrap_or(&input);
            if guide.shape() != input.shape() {
                return Err(CliError::Usage(
                    "guidance shape must match the input".into(),
                ));
            }
            let graph = bf_graph(guide, &params);
            let d = DiagonalOperator::from_degrees(&graph);
            let l = laplacian(graph, false)?;
            let mut config = KrylovConfig::new(iters)?.with_constraint(args.constraint);
            if let Some(BetaArg::SDotR) = args.beta {
                config.beta_denominator = BetaDenominator::SdotR;
            }

            let mut trace_rows: Vec<String> = Vec::new();
            let out = match args.filter {
                FilterKind::BfCg => {
                    let result = pcg_filter_observed(&l, &d, &input, &config, |k, xk, rn| {
                        if args.trace.is_some() {
                            trace_rows.push(trace_row(k, rn, xk, reference.as_ref(), &input));
                        }
                    })?;
                    result.signal
                }
                FilterKind::Lobpcg => {
                    let t = d.inverse()?;
                    let degrees = d.entries().to_vec();
                    let rescale = intensity_rescale(&input, &degrees, args.constraint);
                    let result =
                        lobpcg_filter_observed(&l, &d, &t, &input, &config, |k, state| {
                            if args.trace.is_some() {
                                let scaled = rescale(&state.x);
                                trace_rows.push(trace_row(
                                    k,
                                    state.lambda,
                                    &scaled,
                                    reference.as_ref(),
                                    &input,
                                ));
                            }
                        })?;
                    result.signal
                }
                _ => unreachable!(),
            };
            if let Some(trace_path) = &args.trace {
                io::write_atomic(trace_path, trace_rows.concat().as_bytes())?;
            }
            out
        }
    };

    let output_path = args.output.unwrap_or_else(|| {
        let name = match input.shape() {
            Shape::Grid { .. } => "denoised.pgm",
            Shape::Length(_) => "denoised.csv",
        };
        io::in_dir(out_dir, name)
    });
    io::write_signal(&output_path, &output)?;
    print_metrics(reference.as_ref(), &output)?;
    Ok(())
}

/// Maps a unit-D-norm eigensolver iterate back to signal intensities the
/// same way the solver scales its final output.
fn intensity_rescale<'a>(
    input: &'a Signal,
    degrees: &'a [f64],
    constraint: bool,
) -> impl Fn(&[f64]) -> Vec<f64> + 'a {
    let n = input.len() as f64;
    move |x: &[f64]| {
        if constraint {
            let mean = input.values().iter().sum::<f64>() / n;
            let rho: f64 = x
                .iter()
                .zip(degrees)
                .zip(input.values())
                .map(|((xi, d), v)| xi * d * (v - mean))
                .sum();
            x.iter().map(|xi| mean + rho * xi).collect()
        } else {
            let target: f64 = degrees.iter().zip(input.values()).map(|(d, v)| d * v).sum();
            let current: f64 = degrees.iter().zip(x).map(|(d, xi)| d * xi).sum();
            let rho = if current == 0.0 { 1.0 } else { target / current };
            x.iter().map(|xi| rho * xi).collect()
        }
    }
}

fn trace_row(
    k: usize,
    value: f64,
    iterate: &[f64],
    reference: Option<&Signal>,
    input: &Signal,
) -> String {
    match reference {
        Some(r) => {
            let sig = input.with_values(iterate.to_vec());
            match sig.and_then(|s| rmse(r, &s)) {
                Ok(e) => format!("{k},{value},{e}\n"),
                Err(_) => format!("{k},{value},\n"),
            }
        }
        None => format!("{k},{value}\n"),
    }
}

fn cmd_compare(args: CompareArgs, overrides: &Overrides, out_dir: &Path) -> Result<()> {
    let seed = args
        .seed
        .or(overrides.u64("seed")?)
        .unwrap_or(defaults::SEED);
    let noise = args
        .noise
        .or(overrides.f64("noise")?)
        .unwrap_or(defaults::NOISE_STD);

    let (output, is_image) = match args.scenario {
        ScenarioArg::OneD500 => (scenarios::run_one_d(500, noise, seed)?, false),
        ScenarioArg::OneD1000 => (scenarios::run_one_d(1000, noise, seed)?, false),
        ScenarioArg::Image => (
            scenarios::run_image(defaults::IMAGE_ROWS, defaults::IMAGE_COLS, noise, seed)?,
            true,
        ),
        ScenarioArg::Custom => {
            let n = args.n.or(overrides.usize("n")?).ok_or_else(|| {
                CliError::Usage("--scenario custom requires --n".into())
            })?;
            (scenarios::run_one_d(n, noise, seed)?, false)
        }
    };

    let mut table = String::from("series,rmse,psnr\n");
    let mut print_line = |name: &str, r: f64, p: f64| {
        println!("{name:<10} rmse={r:<12.6} psnr={p:.3}");
        table.push_str(&format!("{name},{r},{p}\n"));
    };
    let noisy_rmse = rmse(&output.clean, &output.noisy)?;
    print_line(
        "noisy",
        noisy_rmse,
        psnr(&output.clean, &output.noisy, 1.0)?,
    );
    for (name, sig) in &output.filtered {
        print_line(name, rmse(&output.clean, sig)?, psnr(&output.clean, sig, 1.0)?);
    }

    if is_image {
        io::write_pgm(&io::in_dir(out_dir, "clean.pgm"), &output.clean)?;
        io::write_pgm(&io::in_dir(out_dir, "noisy.pgm"), &output.noisy)?;
        for (name, sig) in &output.filtered {
            io::write_pgm(&io::in_dir(out_dir, &format!("{name}.pgm")), sig)?;
        }
        io::write_atomic(&io::in_dir(out_dir, "metrics.csv"), table.as_bytes())?;
    } else {
        let mut csv = String::from("index,clean,noisy");
        for (name, _) in &output.filtered {
            csv.push_str(&format!(",{name}"));
        }
        for (name, _) in &output.filtered {
            csv.push_str(&format!(",err_{name}"));
        }
        csv.push('\n');
        for i in 0..output.clean.len() {
            csv.push_str(&format!(
                "{i},{},{}",
                output.clean.values()[i],
                output.noisy.values()[i]
            ));
            for (_, sig) in &output.filtered {
                csv.push_str(&format!(",{}", sig.values()[i]));
            }
            for (_, sig) in &output.filtered {
                csv.push_str(&format!(",{}", sig.values()[i] - output.clean.values()[i]));
            }
            csv.push('\n');
        }
        io::write_atomic(&io::in_dir(out_dir, "compare.csv"), csv.as_bytes())?;
        io::write_atomic(&io::in_dir(out_dir, "metrics.csv"), table.as_bytes())?;

        let mut series: Vec<(String, &[f64])> = vec![
            ("clean".into(), output.clean.values()),
            ("noisy".into(), output.noisy.values()),
        ];
        for (name, sig) in &output.filtered {
            series.push((name.clone(), sig.values()));
        }
        io::write_svg_overlay(&io::in_dir(out_dir, "compare.svg"), &series)?;
    }
    Ok(())
}

fn cmd_spectrum(args: SpectrumArgs, overrides: &Overrides, out_dir: &Path) -> Result<()> {
    let input = args.input.as_deref().map(io::read_signal).transpose()?;

    let graph: WeightedGraph = match args.graph {
        GraphKind::Path => {
            let n = input
                .as_ref()
                .map(|s| s.len())
                .or(args.n)
                .or(overrides.usize("n")?)
                .ok_or_else(|| {
                    CliError::Usage("--graph path needs --input or --n".into())
                })?;
            check_dense_cap(n)?;
            WeightedGraph::path(n)?
        }
        GraphKind::Bf => {
            let guide = input.as_ref().ok_or_else(|| {
                CliError::Usage("--graph bf needs --input as guidance".into())
            })?;
            check_dense_cap(guide.len())?;
            let params = resolve_bf_params(
                BfArgsView {
                    half_width: args.half_width,
                    sigma_s: args.sigma_s,
                    sigma_r: args.sigma_r,
                },
                overrides,
                match guide.shape() {
                    Shape::Grid { .. } => defaults::IMAGE_SIGMA_R,
                    Shape::Length(_) => defaults::ONE_D_SIGMA_R,
                },
            )?;
            bf_graph(guide, &params)
        }
        GraphKind::Gf => {
            let guide = input.as_ref().ok_or_else(|| {
                CliError::Usage("--graph gf needs --input as guidance".into())
            })?;
            check_dense_cap(guide.len())?;
            let params = resolve_gf_params(args.rho, args.epsilon, overrides)?;
            gf_weight_matrix(guide, &params)
        }
    };

    if let Some(dump_path) = &args.dump_weights {
        let mut entries: Vec<(usize, usize, f64)> = graph
            .self_loops()
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (i, i, *w))
            .collect();
        entries.extend(graph.edges().iter().map(|e| (e.i, e.j, e.weight)));
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut csv = String::new();
        for (i, j, w) in entries {
            csv.push_str(&format!("{i},{j},{w}\n"));
        }
        io::write_atomic(dump_path, csv.as_bytes())?;
    }

    let l = laplacian(graph, args.normalized)?;
    let decomp = eig_sym(&DenseMatrix::from_operator(&l))?;

    let mut spectrum_csv = String::new();
    for (i, v) in decomp.eigenvalues().iter().enumerate() {
        spectrum_csv.push_str(&format!("{i},{v}\n"));
    }
    io::write_atomic(&io::in_dir(out_dir, "spectrum.csv"), spectrum_csv.as_bytes())?;

    if let Some(signal) = &input {
        let coeffs = gft(&decomp, signal.values())?;
        let mut gft_csv = String::new();
        for (i, c) in coeffs.iter().enumerate() {
            gft_csv.push_str(&format!("{i},{}\n", c.abs()));
        }
        io::write_atomic(&io::in_dir(out_dir, "gft.csv"), gft_csv.as_bytes())?;
        println!("wrote spectrum.csv gft.csv");
    } else {
        println!("wrote spectrum.csv");
    }
    Ok(())
}

fn check_dense_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(CliError::Capacity(format!(
            "{n} vertices exceed the dense spectral cap of {DENSE_CAP}"
        )));
    }
    Ok(())
}
