//! `locsketch` — localized-sketching experiments from the command line.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use locsketch::core::estimator::{
    estimate_block_coherence, exact_block_importance, EstimatorConfig, RoundSketch,
};
use locsketch::core::measures::{allocate, block_coherence, orthobasis};
use locsketch::core::partition::{even_partition, PartitionedMatrix};
use locsketch::core::random::RandomSource;
use locsketch::core::sketch::SketchOperator;
use locsketch::core::solvers::{
    approx_matmul, matmul_error, ridge_exact, ridge_sketched, structural_conditions, RidgeProblem,
};
use locsketch::core::synth::{generate, CoherenceMode, SpectrumSpec, SyntheticSpec};
use locsketch::dataset::{load_dataset, DatasetOptions};
use locsketch::error::{HarnessError, Result};
use locsketch::experiments::{
    bench_apply, build_strategy_operator, phase_transition, problem_profile, sweep_ratio,
    BenchConfig, Strategy, SweepConfig,
};
use locsketch::fmx;
use locsketch::records::{write_records, ExperimentRecord, OutputFormat};

#[derive(Parser)]
#[command(name = "locsketch", version, about = "Localized (block-diagonal) sketching toolkit")]
struct Cli {
    /// Root seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for trial sweeps (timed benchmark kernels stay
    /// single-threaded).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic problem and write it as fmx files plus a JSON
    /// spec.
    Gen(GenArgs),
    /// Exact block coherence of a data matrix.
    Gamma(GammaArgs),
    /// Iterative estimation of block importances; prints sorted
    /// true-vs-estimated pairs as two-column text.
    Estimate(EstimateArgs),
    /// Sketched approximate matrix product and its relative spectral error.
    Multiply(MultiplyArgs),
    /// Exact and sketched ridge regression; reports the quality ratio.
    Ridge(RidgeArgs),
    /// Quality-ratio sweep over sketch sizes and strategies.
    Sweep(SweepArgs),
    /// Phase-transition matrix of the (1 + eps) success probability.
    Phase(PhaseArgs),
    /// Apply-time benchmark grid.
    Bench(BenchArgs),
    /// Load a delimited-text dataset and summarize (optionally re-emit fmx).
    Load(LoadArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    #[arg(long, default_value_t = 50)]
    cols: usize,
    /// Ridge regularization; also the lambda the designed spectrum targets.
    #[arg(long, default_value_t = 0.15)]
    lambda: f64,
    #[arg(long, default_value_t = 8.5)]
    target_sd: f64,
    #[arg(long, default_value_t = 50)]
    rank: usize,
    /// Explicit flat spectrum instead of the designed one.
    #[arg(long)]
    flat_spectrum: bool,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    /// Plant elevated coherence in this block.
    #[arg(long)]
    planted_block: Option<usize>,
    #[arg(long, default_value_t = 0.9)]
    strength: f64,
}

impl SynthArgs {
    fn spec(&self, seed: RandomSource) -> SyntheticSpec {
        SyntheticSpec {
            n_total: self.n,
            blocks: self.blocks,
            cols: self.cols,
            spectrum: if self.flat_spectrum {
                SpectrumSpec::Explicit(vec![1.0; self.rank])
            } else {
                SpectrumSpec::Designed {
                    target_sd: self.target_sd,
                    lambda: self.lambda,
                    rank: self.rank,
                }
            },
            coherence: match self.planted_block {
                Some(block) => CoherenceMode::Planted {
                    block,
                    strength: self.strength,
                },
                None => CoherenceMode::Incoherent,
            },
            noise_sigma: self.noise,
            seed,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Output prefix; writes <prefix>.a.fmx, <prefix>.b.fmx,
    /// <prefix>.x_true.fmx and <prefix>.spec.json.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Write delimited text instead of fmx.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct GammaArgs {
    /// Matrix file (fmx or delimited text).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    blocks: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    blocks: usize,
    /// Sketch rows drawn per block per round (default max(4, cols/8)).
    #[arg(long)]
    rows_per_round: Option<usize>,
    #[arg(long, default_value_t = 32)]
    max_rounds: usize,
    #[arg(long, default_value_t = 2)]
    stable_rounds: usize,
    #[arg(long, default_value_t = 1e-8)]
    rank_tol: f64,
    /// Use subsampled fast-transform round sketches (block heights must be
    /// powers of two).
    #[arg(long)]
    fourier: bool,
}

#[derive(Args)]
struct MultiplyArgs {
    #[arg(long)]
    w: PathBuf,
    #[arg(long)]
    y: PathBuf,
    #[arg(long)]
    blocks: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Block)]
    kind: KindArg,
    #[arg(long)]
    m_total: usize,
    /// Write the approximate product here (fmx).
    #[arg(long)]
    product_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Dense,
    Block,
    Fourier,
    Identity,
}

#[derive(Args)]
struct RidgeArgs {
    /// Data matrix A (fmx or text).
    #[arg(long)]
    a: PathBuf,
    /// Right-hand side b (one column).
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    lambda: f64,
    #[arg(long, value_parser = parse_strategy, default_value = "nonuniform")]
    strategy: Strategy,
    #[arg(long)]
    m_total: usize,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Also report the structural condition quantities.
    #[arg(long)]
    conditions: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    synth: SynthArgs,
    /// Comma-separated total sketch sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,150,200,300,400,600")]
    m_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_strategy,
          default_value = "dense,uniform,nonuniform")]
    strategies: Vec<Strategy>,
    #[arg(long, default_value_t = 10)]
    trials: u64,
}

#[derive(Args)]
struct PhaseArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    m_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1.0")]
    eps_grid: Vec<f64>,
    #[arg(long, value_parser = parse_strategy, default_value = "uniform")]
    strategy: Strategy,
    #[arg(long, default_value_t = 10)]
    trials: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated data heights (powers of two).
    #[arg(long, value_delimiter = ',', default_value = "65536")]
    n_list: Vec<usize>,
    /// Block counts, paired with --n-list entries.
    #[arg(long, value_delimiter = ',', default_value = "256")]
    j_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "600,1200")]
    m_list: Vec<usize>,
    #[arg(long, default_value_t = 40)]
    cols: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Operator kinds to time.
    #[arg(long, value_delimiter = ',', value_parser = parse_bench_kind,
          default_value = "block,dense,fourier")]
    kinds: Vec<locsketch::experiments::BenchKind>,
}

#[derive(Args)]
struct LoadArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    label_column: usize,
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    blocks: Option<usize>,
    /// Re-emit the loaded data as <prefix>.features.fmx / <prefix>.labels.fmx.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> std::result::Result<Strategy, String> {
    Strategy::parse(s).map_err(|e| e.to_string())
}

fn parse_bench_kind(
    s: &str,
) -> std::result::Result<locsketch::experiments::BenchKind, String> {
    locsketch::experiments::BenchKind::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn out_writer(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_records(cli: &Cli, records: &[ExperimentRecord]) -> Result<()> {
    write_records(out_writer(cli)?, records, cli.format.into())
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut w = out_writer(cli)?;
    serde_json::to_writer(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn load_partitioned(path: &PathBuf, blocks: usize) -> Result<PartitionedMatrix> {
    let dense = fmx::read_matrix_path(path)?;
    let heights = even_partition(dense.rows(), blocks)?;
    Ok(PartitionedMatrix::split(&dense, &heights)?)
}

fn run(cli: &Cli) -> Result<()> {
    let seed = RandomSource::from_seed(cli.seed);
    match &cli.cmd {
        Cmd::Gen(args) => {
            let spec = args.synth.spec(seed);
            let data = generate(&spec)?;
            let prefix = args.out_prefix.display();
            let a_path = PathBuf::from(format!("{prefix}.a.fmx"));
            let b_path = PathBuf::from(format!("{prefix}.b.fmx"));
            let x_path = PathBuf::from(format!("{prefix}.x_true.fmx"));
            let flat = data.a.flatten();
            let b_col = locsketch::core::DenseMatrix::column(data.b.clone())?;
            let x_col = locsketch::core::DenseMatrix::column(data.x_true.clone())?;
            if args.text {
                fmx::write_text_path(&a_path, &flat)?;
                fmx::write_text_path(&b_path, &b_col)?;
                fmx::write_text_path(&x_path, &x_col)?;
            } else {
                fmx::write_fmx_path(&a_path, &flat)?;
                fmx::write_fmx_path(&b_path, &b_col)?;
                fmx::write_fmx_path(&x_path, &x_col)?;
            }
            #[derive(Serialize)]
            struct GenSpecFile<'a> {
                schema: u32,
                spec: &'a SyntheticSpec,
                block_rows: Vec<usize>,
                files: [String; 3],
            }
            let spec_path = PathBuf::from(format!("{prefix}.spec.json"));
            let body = GenSpecFile {
                schema: locsketch::records::SCHEMA_VERSION,
                spec: &spec,
                block_rows: data.a.block_rows(),
                files: [
                    a_path.display().to_string(),
                    b_path.display().to_string(),
                    x_path.display().to_string(),
                ],
            };
            serde_json::to_writer_pretty(BufWriter::new(File::create(&spec_path)?), &body)?;
            eprintln!("wrote {a_path:?} {b_path:?} {x_path:?} {spec_path:?}");
            Ok(())
        }
        Cmd::Gamma(args) => {
            let parts = load_partitioned(&args.input, args.blocks)?;
            let profile = block_coherence(&orthobasis(&parts, 1e-10)?)?;
            emit_json(cli, &profile)
        }
        Cmd::Estimate(args) => {
            let parts = load_partitioned(&args.input, args.blocks)?;
            let mut cfg = EstimatorConfig::for_cols(parts.cols());
            if let Some(c) = args.rows_per_round {
                cfg.rows_per_round = c;
            }
            cfg.max_rounds = args.max_rounds;
            cfg.stable_rounds = args.stable_rounds;
            cfg.rank_tol = args.rank_tol;
            if args.fourier {
                cfg.sketch = RoundSketch::SubsampledFourier;
            }
            let est = estimate_block_coherence(&parts, &cfg, seed)?;
            let exact = exact_block_importance(&parts)?;

            // Fig. 3 plot data: pairs sorted by the true value, descending.
            let mut pairs: Vec<(f64, f64)> =
                exact.iter().copied().zip(est.gammas_hat.iter().copied()).collect();
            pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut stdout = std::io::stdout().lock();
            for (t, e) in &pairs {
                writeln!(stdout, "{t} {e}")?;
            }
            drop(stdout);

            #[derive(Serialize)]
            struct EstimateReport {
                rounds_used: usize,
                converged: bool,
                numerical_rank: usize,
                gammas_hat: Vec<f64>,
                exact: Vec<f64>,
            }
            if cli.out.is_some() {
                emit_json(
                    cli,
                    &EstimateReport {
                        rounds_used: est.rounds_used,
                        converged: est.converged,
                        numerical_rank: est.numerical_rank,
                        gammas_hat: est.gammas_hat,
                        exact,
                    },
                )?;
            }
            Ok(())
        }
        Cmd::Multiply(args) => {
            let w = load_partitioned(&args.w, args.blocks)?;
            let y = load_partitioned(&args.y, args.blocks)?;
            let t0 = Instant::now();
            let op = build_kind_operator(args.kind, args.m_total, &w, seed)?;
            let p_hat = approx_matmul(&op, &w, &y)?;
            let wall = t0.elapsed().as_nanos() as u64;
            let err = matmul_error(&w, &y, &p_hat)?;
            if let Some(path) = &args.product_out {
                fmx::write_fmx_path(path, &p_hat)?;
            }
            let mut rec = ExperimentRecord::new("multiply", cli.seed);
            rec.kind = Some(kind_name(args.kind).to_string());
            rec.m_total = Some(op.rows());
            rec.n_total = Some(w.total_rows());
            rec.blocks = Some(args.blocks);
            rec.cols = Some(w.cols());
            rec.rel_error = Some(err);
            rec.threads = cli.threads;
            rec.wall_time_ns = wall;
            emit_records(cli, &[rec])
        }
        Cmd::Ridge(args) => {
            let a = load_partitioned(&args.a, args.blocks)?;
            let b = fmx::read_vector_path(&args.b)?;
            let p = RidgeProblem::new(a, &b, args.lambda)?;
            let exact = ridge_exact(&p)?;
            let profile = if args.strategy == Strategy::NonUniform {
                Some(problem_profile(&p)?)
            } else {
                None
            };
            let block_rows = p.a().block_rows();
            let mut records = Vec::new();
            for trial in 0..args.trials {
                let t0 = Instant::now();
                let s = seed.stream(args.strategy as u64).stream(trial);
                let op = build_strategy_operator(
                    args.strategy,
                    args.m_total,
                    &block_rows,
                    profile.as_ref(),
                    s,
                )?;
                let sol = ridge_sketched(&op, &p)?;
                let mut rec = ExperimentRecord::new("ridge", cli.seed);
                rec.strategy = Some(args.strategy.name().to_string());
                rec.trial = Some(trial);
                rec.m_total = Some(args.m_total);
                rec.m0 = op.allocation().map(|al| al.m0);
                rec.n_total = Some(p.dims().0);
                rec.blocks = Some(args.blocks);
                rec.cols = Some(p.dims().1);
                rec.lambda = Some(args.lambda);
                rec.ratio = Some(sol.objective / exact.objective);
                if args.conditions {
                    let c = structural_conditions(&op, &p)?;
                    rec.lhs9 = Some(c.lhs9);
                    rec.lhs10 = Some(c.lhs10);
                }
                rec.threads = cli.threads;
                rec.wall_time_ns = t0.elapsed().as_nanos() as u64;
                records.push(rec);
            }
            emit_records(cli, &records)
        }
        Cmd::Sweep(args) => {
            let data = generate(&args.synth.spec(seed.stream(GEN_TAG)))?;
            let p = RidgeProblem::new(data.a, &data.b, args.synth.lambda)?;
            let records = sweep_ratio(
                &p,
                &SweepConfig {
                    m_grid: args.m_grid.clone(),
                    strategies: args.strategies.clone(),
                    trials: args.trials,
                    seed,
                    threads: cli.threads,
                },
            )?;
            emit_records(cli, &records)
        }
        Cmd::Phase(args) => {
            let data = generate(&args.synth.spec(seed.stream(GEN_TAG)))?;
            let p = RidgeProblem::new(data.a, &data.b, args.synth.lambda)?;
            let result = phase_transition(
                &p,
                args.strategy,
                &args.m_grid,
                &args.eps_grid,
                args.trials,
                seed,
                cli.threads,
            )?;
            match OutputFormat::from(cli.format) {
                OutputFormat::Json => emit_json(cli, &result),
                OutputFormat::Csv => {
                    let mut w = out_writer(cli)?;
                    writeln!(w, "m_total,eps,success")?;
                    for (i, &m) in result.m_grid.iter().enumerate() {
                        for (k, &eps) in result.eps_grid.iter().enumerate() {
                            writeln!(w, "{m},{eps},{}", result.success[i][k])?;
                        }
                    }
                    Ok(())
                }
            }
        }
        Cmd::Bench(args) => {
            if args.n_list.len() != args.j_list.len() {
                return Err(HarnessError::Usage(
                    "--n-list and --j-list must pair up".into(),
                ));
            }
            let records = bench_apply(&BenchConfig {
                shapes: args.n_list.iter().copied().zip(args.j_list.iter().copied()).collect(),
                m_list: args.m_list.clone(),
                cols: args.cols,
                repeats: args.repeats,
                kinds: args.kinds.clone(),
                seed,
            })?;
            // Human-readable grid on stderr; records go to the chosen sink.
            eprintln!("{:>10} {:>6} {:>8} {:>10} {:>14}", "n", "j", "kind", "m", "median_ms");
            for r in &records {
                eprintln!(
                    "{:>10} {:>6} {:>8} {:>10} {:>14.3}",
                    r.n_total.unwrap(),
                    r.blocks.unwrap(),
                    r.kind.as_deref().unwrap(),
                    r.m_total.unwrap(),
                    r.median_ns.unwrap() as f64 / 1e6
                );
            }
            emit_records(cli, &records)
        }
        Cmd::Load(args) => {
            let ds = load_dataset(
                &args.input,
                &DatasetOptions {
                    label_column: args.label_column,
                    standardize: args.standardize,
                    subsample: args.subsample,
                    blocks: args.blocks,
                    seed,
                },
            )?;
            if let Some(prefix) = &args.out_prefix {
                let p = prefix.display();
                fmx::write_fmx_path(&PathBuf::from(format!("{p}.features.fmx")), &ds.features.flatten())?;
                fmx::write_fmx_path(
                    &PathBuf::from(format!("{p}.labels.fmx")),
                    &locsketch::core::DenseMatrix::column(ds.labels.clone())?,
                )?;
            }
            #[derive(Serialize)]
            struct LoadReport {
                rows: usize,
                feature_cols: usize,
                blocks: Vec<usize>,
                kept_columns: Vec<usize>,
                label_mean: f64,
            }
            let label_mean = ds.labels.iter().sum::<f64>() / ds.labels.len() as f64;
            emit_json(
                cli,
                &LoadReport {
                    rows: ds.features.total_rows(),
                    feature_cols: ds.features.cols(),
                    blocks: ds.features.block_rows(),
                    kept_columns: ds.kept_columns,
                    label_mean,
                },
            )
        }
    }
}

const GEN_TAG: u64 = 0x47454E;

fn kind_name(kind: KindArg) -> &'static str {
    match kind {
        KindArg::Dense => "dense",
        KindArg::Block => "block",
        KindArg::Fourier => "fourier",
        KindArg::Identity => "identity",
    }
}

fn build_kind_operator(
    kind: KindArg,
    m_total: usize,
    data: &PartitionedMatrix,
    seed: RandomSource,
) -> Result<SketchOperator> {
    use locsketch::core::sketch::{
        build_dense_gaussian, build_subsampled_fourier, identity_blocks,
    };
    let block_rows = data.block_rows();
    Ok(match kind {
        KindArg::Dense => build_dense_gaussian(m_total, data.total_rows(), seed)?,
        KindArg::Fourier => build_subsampled_fourier(m_total, data.total_rows(), seed)?,
        KindArg::Identity => identity_blocks(&block_rows),
        KindArg::Block => {
            let profile = block_coherence(&orthobasis(data, 1e-10)?)?;
            let m0 = locsketch::experiments::m0_for_total(&profile, m_total)?;
            locsketch::core::sketch::build_block_diagonal(
                &allocate(m0, &profile)?,
                &block_rows,
                seed,
            )?
        }
    })
}
