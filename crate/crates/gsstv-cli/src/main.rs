//! Command-line interface: noise simulation, denoising, metrics, synthetic
//! cubes, graph inspection, and parameter sweeps over cube files.
//!
//! Exit codes: 0 on success, 1 when a solve stopped at the iteration cap
//! without meeting the stopping test (the result is still written), 2 on
//! argument or file-format errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use gsstv::cube::{band_mean, HsiCube};
use gsstv::graph::{build_graph, GraphParams};
use gsstv::io::{read_cube, write_cube};
use gsstv::metrics::{mpsnr, mssim};
use gsstv::noise::{corrupt, oracle_radii, NoiseSpec};
use gsstv::prox::BoxBounds;
use gsstv::solver::{solve, Gamma2Mode, PdsSolver, ProblemSpec, Regularizer, SolverConfig};
use gsstv::synth::{synth_cube, SynthKind};

#[derive(Parser)]
#[command(name = "gsstv", version, about = "Hyperspectral mixed-noise removal with graph spatio-spectral total variation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise a cube file.
    Denoise(DenoiseArgs),
    /// Corrupt a clean cube with salt-and-pepper plus Gaussian noise.
    Simulate(SimulateArgs),
    /// Print MPSNR/MSSIM of a test cube against a reference.
    Metrics(MetricsArgs),
    /// Generate a synthetic cube.
    Synth(SynthArgs),
    /// Dump the spatial graph of a cube's guide image as CSV.
    GraphDump(GraphDumpArgs),
    /// Re-solve while sweeping one graph parameter; emit a CSV of metrics.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RegularizerArg {
    Gsstv,
    Sstv,
    Gtv,
}

impl From<RegularizerArg> for Regularizer {
    fn from(value: RegularizerArg) -> Self {
        match value {
            RegularizerArg::Gsstv => Regularizer::Gsstv,
            RegularizerArg::Sstv => Regularizer::Sstv,
            RegularizerArg::Gtv => Regularizer::Gtv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Gamma2ModeArg {
    /// Instance-adaptive: 0.99 / (gamma1 * estimated operator norm).
    Auto,
    /// Fixed 1 / (1800 * gamma1).
    Paper,
}

impl From<Gamma2ModeArg> for Gamma2Mode {
    fn from(value: Gamma2ModeArg) -> Self {
        match value {
            Gamma2ModeArg::Auto => Gamma2Mode::AutoPowerIteration,
            Gamma2ModeArg::Paper => Gamma2Mode::PaperConstant,
        }
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Data-fidelity ball radius.
    #[arg(long)]
    epsilon: f64,
    /// Sparse-noise ball radius.
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    mu_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_hi: f64,
    #[arg(long, default_value_t = GraphParams::DEFAULT_SIGMA_L)]
    sigma_l: f64,
    #[arg(long, default_value_t = GraphParams::DEFAULT_SIGMA_X)]
    sigma_x: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma1: f64,
    #[arg(long, value_enum, default_value_t = Gamma2ModeArg::Auto)]
    gamma2_mode: Gamma2ModeArg,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Seed for the operator-norm estimator start vector.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn problem(&self, observation: HsiCube, regularizer: Regularizer) -> gsstv::Result<ProblemSpec> {
        Ok(ProblemSpec {
            observation,
            epsilon: self.epsilon,
            eta: self.eta,
            bounds: BoxBounds::new(self.mu_lo, self.mu_hi)?,
            regularizer,
            graph_params: GraphParams::new(self.sigma_l, self.sigma_x)?,
        })
    }

    fn config(&self) -> SolverConfig {
        SolverConfig {
            gamma1: self.gamma1,
            gamma2_mode: self.gamma2_mode.into(),
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct DenoiseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    regularizer: RegularizerArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write one structured record per iteration to this file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Gaussian standard deviation.
    #[arg(long)]
    sigma: f64,
    /// Fraction of entries forced to 0 or 1.
    #[arg(long)]
    sp_rate: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    /// Write the oracle radii (epsilon and eta) as text.
    #[arg(long)]
    emit_oracle: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    reference: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    kind: String,
    /// Cube dimensions: rows, columns, bands.
    #[arg(long, num_args = 3, value_names = ["N1", "N2", "N3"])]
    dims: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct GraphDumpArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = GraphParams::DEFAULT_SIGMA_L)]
    sigma_l: f64,
    #[arg(long, default_value_t = GraphParams::DEFAULT_SIGMA_X)]
    sigma_x: f64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    SigmaL,
    SigmaX,
}

#[derive(Args)]
struct SweepArgs {
    /// Which graph parameter to sweep.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Noisy observation.
    #[arg(long)]
    input: PathBuf,
    /// Clean reference for the metrics.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t = RegularizerArg::Gsstv)]
    regularizer: RegularizerArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Provenance columns echoed into the CSV.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    sp_rate: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> gsstv::Result<ExitCode> {
    match command {
        Command::Denoise(args) => denoise(args),
        Command::Simulate(args) => simulate(args).map(|()| ExitCode::SUCCESS),
        Command::Metrics(args) => metrics(args).map(|()| ExitCode::SUCCESS),
        Command::Synth(args) => synth(args).map(|()| ExitCode::SUCCESS),
        Command::GraphDump(args) => graph_dump(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => sweep(args).map(|()| ExitCode::SUCCESS),
    }
}

fn denoise(args: DenoiseArgs) -> gsstv::Result<ExitCode> {
    let observation = read_cube(&args.input)?;
    let spec = args.solver.problem(observation, args.regularizer.into())?;
    let config = args.solver.config();

    let mut solver = PdsSolver::new(&spec, &config)?;
    let started = Instant::now();
    let report = match &args.log {
        Some(path) => {
            let mut sink = fs::File::create(path)?;
            let report = solver.run_logged(&mut sink)?;
            sink.flush()?;
            report
        }
        None => solver.run()?,
    };
    let elapsed = started.elapsed();
    let (u_hat, _s_hat) = solver.solution();
    write_cube(&u_hat, &args.output)?;

    println!(
        "converged={} iterations={} rel_change={:e} objective={:e} fidelity={:e} epsilon={:e} sparsity={:e} eta={:e} seconds={:.3}",
        report.converged,
        report.iterations,
        report.final_rel_change,
        report.objective,
        report.fidelity_residual,
        report.epsilon,
        report.sparsity_residual,
        report.eta,
        elapsed.as_secs_f64()
    );
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "warning: stopped at the iteration cap ({}) without meeting the stopping test",
            report.iterations
        );
        Ok(ExitCode::from(1))
    }
}

fn simulate(args: SimulateArgs) -> gsstv::Result<()> {
    let clean = read_cube(&args.input)?;
    let spec = NoiseSpec::new(args.sigma, args.sp_rate, args.seed)?;
    let (noisy, n, s_bar) = corrupt(&clean, &spec)?;
    write_cube(&noisy, &args.output)?;
    if let Some(oracle_path) = &args.emit_oracle {
        let (epsilon, eta) = oracle_radii(&n, &s_bar);
        write_atomic(oracle_path, &format!("epsilon {epsilon}\neta {eta}\n"))?;
    }
    Ok(())
}

fn metrics(args: MetricsArgs) -> gsstv::Result<()> {
    let test = read_cube(&args.test)?;
    let reference = read_cube(&args.reference)?;
    let psnr = mpsnr(&test, &reference)?;
    let ssim = mssim(&test, &reference)?;
    println!("mpsnr_db,mssim");
    println!("{psnr},{ssim}");
    Ok(())
}

fn synth(args: SynthArgs) -> gsstv::Result<()> {
    let kind: SynthKind = args.kind.parse()?;
    let [n1, n2, n3]: [u32; 3] = args.dims.clone().try_into().map_err(|_| {
        gsstv::Error::InvalidArgument("expected exactly three dimensions".into())
    })?;
    let cube = synth_cube(kind, n1 as usize, n2 as usize, n3 as usize, args.seed)?;
    write_cube(&cube, &args.output)
}

fn graph_dump(args: GraphDumpArgs) -> gsstv::Result<()> {
    let cube = read_cube(&args.input)?;
    let params = GraphParams::new(args.sigma_l, args.sigma_x)?;
    let graph = build_graph(&band_mean(&cube), &params)?;
    let mut csv = String::with_capacity(16 * graph.num_edges() + 16);
    csv.push_str("p,q,weight\n");
    for (&(p, q), &w) in graph.edges().iter().zip(graph.weights()) {
        csv.push_str(&format!("{p},{q},{w}\n"));
    }
    write_atomic(&args.output, &csv)
}

fn sweep(args: SweepArgs) -> gsstv::Result<()> {
    let observation = read_cube(&args.input)?;
    let reference = read_cube(&args.reference)?;
    if observation.dims() != reference.dims() {
        return Err(gsstv::Error::DimMismatch {
            what: "sweep input vs reference dims",
            expected: reference.dims().len(),
            actual: observation.dims().len(),
        });
    }
    let regularizer: Regularizer = args.regularizer.into();
    let config = args.solver.config();

    let mut values = args.values.clone();
    values.sort_by(|a, b| a.total_cmp(b));

    struct Row {
        value: f64,
        mpsnr_db: f64,
        mssim: f64,
        iterations: usize,
        seconds: f64,
    }

    let rows: Vec<gsstv::Result<Row>> = values
        .par_iter()
        .map(|&value| {
            let mut spec = args.solver.problem(observation.clone(), regularizer)?;
            match args.param {
                SweepParam::SigmaL => spec.graph_params.sigma_l = value,
                SweepParam::SigmaX => spec.graph_params.sigma_x = value,
            }
            let started = Instant::now();
            let (u_hat, _, report) = solve(&spec, &config)?;
            let seconds = started.elapsed().as_secs_f64();
            Ok(Row {
                value,
                mpsnr_db: mpsnr(&u_hat, &reference)?,
                mssim: mssim(&u_hat, &reference)?,
                iterations: report.iterations,
                seconds,
            })
        })
        .collect();

    let param_name = match args.param {
        SweepParam::SigmaL => "sigma-l",
        SweepParam::SigmaX => "sigma-x",
    };
    let fmt_opt_f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let fmt_opt_u = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut csv = String::new();
    csv.push_str("param,value,regularizer,sigma,sp_rate,seed,mpsnr_db,mssim,iterations,seconds\n");
    for row in rows {
        let row = row?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.3}\n",
            param_name,
            row.value,
            regularizer.name(),
            fmt_opt_f(args.sigma),
            fmt_opt_f(args.sp_rate),
            fmt_opt_u(args.noise_seed),
            row.mpsnr_db,
            row.mssim,
            row.iterations,
            row.seconds
        ));
    }
    match &args.output {
        Some(path) => write_atomic(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Writes a small text file atomically (temp file + rename).
fn write_atomic(path: &Path, contents: &str) -> gsstv::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| gsstv::Error::Io(e.error))?;
    Ok(())
}
