use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbspart::bench::{
    find_matrix, run_case, sample_system, write_bench_csv, BenchRow, ExperimentConfig, RowStatus,
    Scheme, REFERENCE_NONOVERLAPPING, REFERENCE_OVERLAPPING,
};
use cbspart::factor::SparseCholesky;
use cbspart::model::{
    fd_diffusion, grid_plot_data, write_grid_csv, DiffusionSpec, FaceMean, Sampling,
};
use cbspart::partition::{
    check_partition, read_partition, recursive_partition, recursive_partition_logged,
    write_partition, Method, PartitionConfig, StepLog,
};
use cbspart::solver::{pcg_with_guess, AsPreconditioner, IdentityPreconditioner, Preconditioner};
use cbspart::sparse::mm::{read_matrix_market, write_matrix_market};
use cbspart::{Error, SparseSymMatrix, VertexSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cbspart",
    version,
    about = "Coefficient-aware spectral partitioning and Schwarz benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a model problem as a Matrix Market file.
    Gen(GenArgs),
    /// Recursively partition a matrix graph.
    Partition(PartitionArgs),
    /// Solve with PCG and an additive Schwarz preconditioner.
    Solve(SolveArgs),
    /// Mean PCG iteration counts per matrix and method.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Serialize)]
struct ModelArgs {
    /// Interior grid points per side.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    /// Interpolation of the coefficient at cell faces.
    #[arg(long, value_enum, default_value_t = FaceMeanArg::Harmonic)]
    face_mean: FaceMeanArg,
    /// Where the coefficient is sampled.
    #[arg(long, value_enum, default_value_t = SamplingArg::Node)]
    sampling: SamplingArg,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FaceMeanArg {
    Harmonic,
    Arithmetic,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SamplingArg {
    Node,
    Midpoint,
}

impl ModelArgs {
    fn spec(&self, name: &str) -> Result<DiffusionSpec, Error> {
        let mut spec = DiffusionSpec::named(name)?;
        spec.grid = self.grid;
        spec.face_mean = match self.face_mean {
            FaceMeanArg::Harmonic => FaceMean::Harmonic,
            FaceMeanArg::Arithmetic => FaceMean::Arithmetic,
        };
        spec.sampling = match self.sampling {
            SamplingArg::Node => Sampling::Node,
            SamplingArg::Midpoint => Sampling::Midpoint,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Clone, Serialize)]
struct InputArgs {
    /// Matrix Market file.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    matrix: Option<PathBuf>,
    /// Named model problem.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(DiffusionSpec::NAMES))]
    model: Option<String>,
    #[command(flatten)]
    model_opts: ModelArgs,
}

#[derive(Args, Clone, Serialize)]
struct PartitionOpts {
    /// cbs, mincut, mcut or rsb.
    #[arg(long, default_value = "cbs")]
    method: Method,
    /// Largest allowed subdomain; defaults to n / 20.
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    load_balance: f64,
    /// Candidate splits per sweep.
    #[arg(long, default_value_t = 32)]
    candidates: usize,
    #[arg(long, default_value_t = 1e-4)]
    eig_tol: f64,
    #[arg(long, default_value_t = 500)]
    eig_max_iter: usize,
    /// Diagonal shift for the incomplete Cholesky preconditioner.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Incomplete Cholesky drop tolerance.
    #[arg(long, default_value_t = 1e-3)]
    droptol: f64,
    /// Eigensolver start vector seed.
    #[arg(long, env = "CBSPART_SEED", default_value_t = 42)]
    seed: u64,
}

impl PartitionOpts {
    fn config(&self, method: Method, n: usize) -> PartitionConfig {
        self.config_with_max(method, self.max_size.unwrap_or((n / 20).max(1)))
    }

    fn config_with_max(&self, method: Method, max_size: usize) -> PartitionConfig {
        PartitionConfig {
            load_balance: self.load_balance,
            candidates: self.candidates,
            eig_tolerance: self.eig_tol,
            eig_max_iter: self.eig_max_iter,
            sigma: self.sigma,
            droptol: self.droptol,
            seed: self.seed,
            ..PartitionConfig::new(method, max_size)
        }
    }
}

#[derive(Args, Clone, Serialize)]
struct SolverOpts {
    /// Overlap layers added to each subdomain.
    #[arg(long, default_value_t = 0)]
    overlap: usize,
    /// Relative residual tolerance for PCG.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    maxit: usize,
    /// One PCG run per seed, each with its own right-hand side and guess.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    seeds: Vec<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(DiffusionSpec::NAMES))]
    model: String,
    #[command(flatten)]
    model_opts: ModelArgs,
    /// Scale to unit diagonal before writing.
    #[arg(long)]
    scaled: bool,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    part: PartitionOpts,
    /// Output prefix; defaults to the model name or matrix file stem.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    part: PartitionOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Use this partition file instead of partitioning.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Plain CG without a preconditioner.
    #[arg(long, conflicts_with = "partition")]
    no_precond: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Model problems to run.
    #[arg(long, value_delimiter = ',', value_parser = clap::builder::PossibleValuesParser::new(DiffusionSpec::NAMES))]
    models: Vec<String>,
    /// Directory of `<name>.mtx` files.
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Matrix names looked up in the suite directory; defaults to the
    /// reference table names.
    #[arg(long, value_delimiter = ',', requires = "suite")]
    matrices: Vec<String>,
    /// Schemes to compare: none, cbs, mincut, mcut, rsb.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "none,cbs,mincut,mcut,rsb"
    )]
    methods: Vec<Scheme>,
    #[command(flatten)]
    model_opts: ModelArgs,
    #[command(flatten)]
    part: PartitionOpts,
    #[command(flatten)]
    solver: SolverOpts,
    /// Record wall-clock seconds; output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
    /// Output prefix for `<out>.bench.csv`.
    #[arg(long, short, default_value = "cbspart")]
    out: PathBuf,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Parse { .. } => 2,
            Error::NotPositiveDefinite { .. }
            | Error::NonPositiveDiagonal { .. }
            | Error::MissingDiagonal(_)
            | Error::NotSymmetric { .. }
            | Error::PcgBreakdown(_) => 3,
            Error::EigNotConverged { .. } | Error::IcBreakdown { .. } => 4,
            _ => 1,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let res = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn open_matrix(path: &Path) -> CliResult<SparseSymMatrix> {
    let f = File::open(path).map_err(|e| Failure {
        code: 2,
        msg: format!("{}: {e}", path.display()),
    })?;
    read_matrix_market(BufReader::new(f)).map_err(|e| {
        let mut f = Failure::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

struct Loaded {
    name: String,
    matrix: SparseSymMatrix,
    spec: Option<DiffusionSpec>,
}

/// Loads the input and rejects it unless a full Cholesky factorization succeeds.
fn load(input: &InputArgs) -> CliResult<Loaded> {
    let loaded = load_unchecked(input)?;
    SparseCholesky::new(&loaded.matrix)?;
    Ok(loaded)
}

fn load_unchecked(input: &InputArgs) -> CliResult<Loaded> {
    match (&input.matrix, &input.model) {
        (Some(path), _) => Ok(Loaded {
            name: path
                .file_stem()
                .map_or("matrix".into(), |s| s.to_string_lossy().into_owned()),
            matrix: open_matrix(path)?,
            spec: None,
        }),
        (None, Some(model)) => {
            let spec = input.model_opts.spec(model)?;
            Ok(Loaded {
                name: model.clone(),
                matrix: fd_diffusion(&spec)?,
                spec: Some(spec),
            })
        }
        (None, None) => {
            Err(Error::InvalidConfig("either --matrix or --model is required".into()).into())
        }
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: 2,
        msg: format!("{}: {e}", path.display()),
    })
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn header_of<T: Serialize>(config: &T) -> Vec<String> {
    vec![
        format!("cbspart {}", env!("CARGO_PKG_VERSION")),
        format!("config {}", serde_json::to_string(config).unwrap()),
    ]
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure {
        code: 1,
        msg: e.to_string(),
    })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    let spec = a.model_opts.spec(&a.model)?;
    let mut m = fd_diffusion(&spec)?;
    if a.scaled {
        m = m.diag_scale()?.0;
    }
    let comments = vec![
        format!("model {}", a.model),
        format!("spec {}", serde_json::to_string(&spec).unwrap()),
        format!("scaled {}", a.scaled),
    ];
    let mut w = create(&a.out)?;
    write_matrix_market(&m, &mut w, &comments)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PartitionEcho<'a> {
    command: &'static str,
    input: &'a InputArgs,
    n: usize,
    partition: PartitionConfig,
}

#[derive(Serialize)]
struct StepReport<'a> {
    config: &'a PartitionEcho<'a>,
    status: &'static str,
    error: Option<String>,
    notes: Vec<&'static str>,
    subdomains: usize,
    subdomain_sizes: Vec<usize>,
    fallback_steps: usize,
    disconnected_input: bool,
    input_components: usize,
    steps: &'a [StepLog],
}

fn method_notes(m: Method) -> Vec<&'static str> {
    let mut v = vec![
        "objectives use weights |a_ij| / sqrt(a_ii a_jj); components are split after every step",
    ];
    match m {
        Method::Mcut => v.push("w(I) and w(J) in the Mcut objective include the diagonal terms"),
        Method::Cbs => v.push(
            "steps with uniform weights fall back to the Fiedler vector and edge-cut objective",
        ),
        _ => {}
    }
    v
}

fn cmd_partition(a: PartitionArgs) -> CliResult<()> {
    let loaded = load(&a.input)?;
    let n = loaded.matrix.n();
    let config = a.part.config(a.part.method, n);
    let echo = PartitionEcho {
        command: "partition",
        input: &a.input,
        n,
        partition: config,
    };
    let prefix = a.out.clone().unwrap_or_else(|| PathBuf::from(&loaded.name));
    let mut steps = Vec::new();
    let result = recursive_partition_logged(&loaded.matrix, &config, &mut steps);
    let mut report = StepReport {
        config: &echo,
        status: "ok",
        error: None,
        notes: method_notes(config.method),
        subdomains: 0,
        subdomain_sizes: Vec::new(),
        fallback_steps: steps.iter().filter(|s| s.fallback).count(),
        disconnected_input: false,
        input_components: 0,
        steps: &steps,
    };
    let part = match result {
        Ok(p) => p,
        Err(e) => {
            report.status = "failed";
            report.error = Some(e.to_string());
            write_json(&with_ext(&prefix, ".steps.json"), &report)?;
            return Err(e.into());
        }
    };
    report.subdomains = part.subdomains.len();
    report.subdomain_sizes = part.subdomains.iter().map(VertexSet::len).collect();
    report.disconnected_input = part.disconnected_input;
    report.input_components = part.input_components;

    let header = header_of(&echo);
    let mut w = create(&with_ext(&prefix, ".partition"))?;
    write_partition(&part.subdomains, &header, &mut w)?;
    w.flush()?;
    write_json(&with_ext(&prefix, ".steps.json"), &report)?;
    if let Some(spec) = &loaded.spec {
        let points = grid_plot_data(&part.subdomains, spec)?;
        let mut w = create(&with_ext(&prefix, ".grid.csv"))?;
        write_grid_csv(&points, &header, &mut w)?;
        w.flush()?;
    }
    println!(
        "{} subdomains (largest {}), {} steps, {} fallbacks",
        part.subdomains.len(),
        report.subdomain_sizes.iter().max().copied().unwrap_or(0),
        part.steps.len(),
        part.fallback_steps
    );
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    config: SolveEcho<'a>,
    subdomains: usize,
    runs: Vec<cbspart::solver::SolveReport>,
    mean_iterations: f64,
    all_converged: bool,
}

#[derive(Serialize)]
struct SolveEcho<'a> {
    command: &'static str,
    input: &'a InputArgs,
    n: usize,
    partition: Option<PartitionConfig>,
    partition_file: Option<&'a Path>,
    solver: &'a SolverOpts,
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let loaded = load(&a.input)?;
    let (scaled, _) = loaded.matrix.diag_scale()?;
    let n = scaled.n();
    let mut part_cfg = None;
    let subs = if a.no_precond {
        None
    } else if let Some(path) = &a.partition {
        let f = File::open(path).map_err(|e| Failure {
            code: 2,
            msg: format!("{}: {e}", path.display()),
        })?;
        let subs = read_partition(BufReader::new(f))?;
        check_partition(&subs, n)?;
        Some(subs)
    } else {
        let cfg = a.part.config(a.part.method, n);
        part_cfg = Some(cfg);
        Some(recursive_partition(&scaled, &cfg)?.subdomains)
    };
    let prec: Box<dyn Preconditioner> = match &subs {
        None => Box::new(IdentityPreconditioner),
        Some(s) => Box::new(AsPreconditioner::new(&scaled, s, a.solver.overlap)?),
    };
    let mut runs = Vec::new();
    for &seed in &a.solver.seeds {
        let (b, x0) = sample_system(n, seed);
        runs.push(pcg_with_guess(
            &scaled,
            &b,
            prec.as_ref(),
            x0,
            a.solver.tol,
            a.solver.maxit,
        )?);
    }
    if runs.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()).into());
    }
    let mean_iterations = runs.iter().map(|r| r.iterations as f64).sum::<f64>() / runs.len() as f64;
    let out = SolveOutput {
        config: SolveEcho {
            command: "solve",
            input: &a.input,
            n,
            partition: part_cfg,
            partition_file: a.partition.as_deref(),
            solver: &a.solver,
        },
        subdomains: subs.as_ref().map_or(1, Vec::len),
        all_converged: runs.iter().all(|r| r.converged),
        runs,
        mean_iterations,
    };
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(())
}

fn default_model_max_size(name: &str) -> usize {
    if name == "square-jump-ab" {
        190
    } else {
        50
    }
}

#[derive(Serialize)]
struct BenchEcho<'a> {
    command: &'static str,
    models: &'a [String],
    suite: Option<&'a Path>,
    matrices: &'a [String],
    methods: Vec<String>,
    model_opts: &'a ModelArgs,
    partition: &'a PartitionOpts,
    solver: &'a SolverOpts,
    timing: bool,
}

fn bench_one(
    a: &BenchArgs,
    name: &str,
    m: &SparseSymMatrix,
    max_size: usize,
    rows: &mut Vec<BenchRow>,
) -> CliResult<()> {
    let scaled = match m
        .diag_scale()
        .and_then(|(s, _)| SparseCholesky::new(&s).map(|_| s))
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{name}: {e}");
            for &s in &a.methods {
                rows.push(BenchRow::unavailable(
                    name,
                    s,
                    a.solver.overlap,
                    RowStatus::Failed,
                ));
            }
            return Ok(());
        }
    };
    let cfg = ExperimentConfig {
        partition: a.part.config_with_max(a.part.method, max_size),
        overlap: a.solver.overlap,
        tol: a.solver.tol,
        maxit: a.solver.maxit,
        seeds: a.solver.seeds.clone(),
        timing: a.timing,
    };
    for &scheme in &a.methods {
        match run_case(&scaled, scheme, &cfg) {
            Ok(case) => rows.push(BenchRow::from_case(
                name,
                scaled.n(),
                a.solver.overlap,
                &case,
            )),
            Err(e) => {
                eprintln!("{name} {scheme}: {e}");
                rows.push(BenchRow::unavailable(
                    name,
                    scheme,
                    a.solver.overlap,
                    RowStatus::Failed,
                ));
            }
        }
        println!("{}", rows.last().unwrap().to_csv());
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    if a.models.is_empty() && a.suite.is_none() {
        return Err(Error::InvalidConfig("give --models and/or --suite".into()).into());
    }
    let mut rows = Vec::new();
    for name in &a.models {
        let spec = a.model_opts.spec(name)?;
        let m = fd_diffusion(&spec)?;
        let max_size = a
            .part
            .max_size
            .unwrap_or_else(|| default_model_max_size(name));
        bench_one(&a, name, &m, max_size, &mut rows)?;
    }
    let mut names = a.matrices.clone();
    if let Some(dir) = &a.suite {
        if names.is_empty() {
            for r in REFERENCE_OVERLAPPING
                .iter()
                .chain(&REFERENCE_NONOVERLAPPING)
            {
                if !names.iter().any(|n| n == r.matrix) {
                    names.push(r.matrix.to_string());
                }
            }
        }
        for name in &names {
            let Some(path) = find_matrix(dir, name) else {
                eprintln!("{name}: {}.mtx not found in {}", name, dir.display());
                for &s in &a.methods {
                    rows.push(BenchRow::unavailable(
                        name,
                        s,
                        a.solver.overlap,
                        RowStatus::Missing,
                    ));
                    println!("{}", rows.last().unwrap().to_csv());
                }
                continue;
            };
            let m = match open_matrix(&path) {
                Ok(m) => m,
                Err(f) => {
                    eprintln!("{}", f.msg);
                    for &s in &a.methods {
                        rows.push(BenchRow::unavailable(
                            name,
                            s,
                            a.solver.overlap,
                            RowStatus::Failed,
                        ));
                    }
                    continue;
                }
            };
            let max_size = a.part.max_size.unwrap_or((m.n() / 20).max(1));
            bench_one(&a, name, &m, max_size, &mut rows)?;
        }
    }
    let echo = BenchEcho {
        command: "bench",
        models: &a.models,
        suite: a.suite.as_deref(),
        matrices: &names,
        methods: a.methods.iter().map(Scheme::to_string).collect(),
        model_opts: &a.model_opts,
        partition: &a.part,
        solver: &a.solver,
        timing: a.timing,
    };
    let mut w = create(&with_ext(&a.out, ".bench.csv"))?;
    write_bench_csv(&rows, &header_of(&echo), &mut w)?;
    w.flush()?;
    Ok(())
}
