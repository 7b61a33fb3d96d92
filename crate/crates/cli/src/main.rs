use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfpc::baselines::Method;
use mfpc::datasets::generate;
use mfpc::grid::{best_row, power_grid, results_csv, row_fields, run_grid, run_method, GridSpec, InitStrategy, RunSpec, RESULTS_HEADER};
use mfpc::io::{format_csv, load_csv, load_labels, min_max_normalize, save_labels, save_model_text};
use mfpc::metrics::{ari, nmi};
use mfpc::{ClusterState, Dataset, KernelSpec, MfpcError, SolverConfig};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] MfpcError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(MfpcError::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(MfpcError::MissingFile(_)) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mfpc", version, about = "Flat-type clustering: fit, grid search and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    Datagen {
        /// One of haws, lpe, sine2, spiral.
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one method and write labels, model and metrics.
    Fit(FitArgs),
    /// Evaluate a parameter grid and write a results table.
    Grid(GridArgs),
    /// Compare predicted labels with ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        /// Label file, or a data file with a label column.
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Linear,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Nng,
    Random,
    File,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of clusters; defaults to the number of labeled classes.
    #[arg(long)]
    k: Option<usize>,
    /// Scale every feature to [0, 1] before fitting.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value_t = InitArg::Nng)]
    init: InitArg,
    /// Label file used with `--init file`.
    #[arg(long)]
    init_labels: Option<PathBuf>,
    #[arg(long, default_value_t = SolverConfig::default().sigma)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    kernel: KernelArg,
    #[arg(long)]
    reduced_size: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "mfpc")]
    method: Method,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write per-column solver traces.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Methods to evaluate, comma-separated.
    #[arg(long = "method", value_delimiter = ',', default_value = "mfpc")]
    methods: Vec<Method>,
    /// `c1` values, comma-separated; default 2^-8..2^7.
    #[arg(long, value_delimiter = ',')]
    c1: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    c2: Vec<f64>,
    /// Gaussian widths; default 2^-10..2^5.
    #[arg(long, value_delimiter = ',')]
    mu: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<usize>,
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Fill the runtime column of the results table. Runtimes vary between
    /// runs, so this makes the table non-reproducible.
    #[arg(long)]
    record_runtime: bool,
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned())
}

fn load_data(args: &DataArgs) -> Result<(Dataset, usize, InitStrategy), CliError> {
    let data = load_csv(&args.data)?;
    let data = if args.normalize {
        min_max_normalize(&data)?
    } else {
        data
    };
    let k = match args.k {
        Some(k) => k,
        None if data.labels().is_some() => data.n_classes(),
        None => return Err(CliError::Usage("--k is required for unlabeled data".into())),
    };
    let init = match (args.init, &args.init_labels) {
        (InitArg::Nng, _) => InitStrategy::Nng,
        (InitArg::Random, _) => InitStrategy::Random,
        (InitArg::File, Some(path)) => InitStrategy::Given(ClusterState::new(load_labels(path)?, k)?),
        (InitArg::File, None) => return Err(CliError::Usage("--init file needs --init-labels".into())),
    };
    Ok((data, k, init))
}

fn kernel_spec(kind: KernelArg, mu: f64, reduced_size: Option<usize>) -> KernelSpec {
    match kind {
        KernelArg::Linear => KernelSpec::linear(),
        KernelArg::Gaussian => {
            let spec = KernelSpec::gaussian(mu);
            match reduced_size {
                Some(r) => spec.with_reduced_size(r),
                None => spec,
            }
        }
    }
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

/// Typed JSON for a results-table field; blanks become `null`.
fn field_value(key: &str, value: String) -> Value {
    if value.is_empty() {
        return Value::Null;
    }
    match key {
        "method" | "dataset" | "status" => Value::String(value),
        _ => value.parse::<u64>().map(|v| json!(v)).or_else(|_| value.parse::<f64>().map(num)).unwrap_or(Value::String(value)),
    }
}

fn cmd_datagen(name: &str, seed: u64, out: &Path) -> Result<(), CliError> {
    let data = generate(name, seed)?;
    fs::write(out, format_csv(&data))?;
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let (data, k, init) = load_data(&args.data)?;
    let kernel = kernel_spec(args.data.kernel, args.mu, args.data.reduced_size);
    let spec = RunSpec {
        method: args.method,
        k,
        c1: args.c1,
        c2: args.c2,
        p: args.p,
        sigma: args.data.sigma,
        kernel,
        seed: args.seed,
    };
    let outcome = run_method(&data, &spec, &init)?;
    let out = &args.data.out;
    fs::create_dir_all(out)?;
    save_labels(&outcome.labels, out.join("labels.csv"))?;
    if let Some(model) = &outcome.model {
        save_model_text(model, out.join("model.txt"))?;
    }
    let method = args.method;
    let (ari_v, nmi_v) = match data.labels() {
        Some(truth) => (num(ari(truth, &outcome.labels)?), num(nmi(truth, &outcome.labels)?)),
        None => (Value::Null, Value::Null),
    };
    let mut report = Map::new();
    report.insert("method".into(), json!(method.tag()));
    report.insert("dataset".into(), json!(dataset_name(&args.data.data)));
    report.insert("c1".into(), if method.uses_c1() { num(args.c1) } else { Value::Null });
    report.insert("c2".into(), if method.uses_c2() { num(args.c2) } else { Value::Null });
    report.insert("mu".into(), kernel.mu().map_or(Value::Null, num));
    report.insert("p".into(), if method.uses_p() { json!(args.p) } else { Value::Null });
    report.insert("seed".into(), json!(args.seed));
    report.insert("ari".into(), ari_v);
    report.insert("nmi".into(), nmi_v);
    report.insert("runtime_seconds".into(), num(outcome.runtime_seconds));
    report.insert("status".into(), json!("ok"));
    report.insert("k".into(), json!(k));
    report.insert("sigma".into(), if method == Method::Mfpc { num(args.data.sigma) } else { Value::Null });
    report.insert("kernel".into(), json!(if kernel.is_linear() { "linear" } else { "gaussian" }));
    report.insert("iterations".into(), json!(outcome.iterations));
    report.insert("converged".into(), json!(outcome.converged));
    report.insert("inertia".into(), outcome.inertia.map_or(Value::Null, num));
    if let Some(fit) = &outcome.mfpc {
        report.insert(
            "overall_objective".into(),
            fit.overall_objective_history.last().copied().map_or(Value::Null, num),
        );
        if args.diagnostics {
            let diag: Vec<Value> = fit
                .diagnostics
                .iter()
                .map(|d| {
                    json!({
                        "orthogonality_defect": num(d.orthogonality_defect),
                        "column_ball_defects": d.column_ball_defects.iter().map(|v| num(*v)).collect::<Vec<_>>(),
                        "matrix_ball_defect": num(d.matrix_ball_defect),
                        "zero_column": d.zero_column,
                    })
                })
                .collect();
            report.insert("diagnostics".into(), Value::Array(diag));
            let mut traces = String::from("cluster,column,iteration,objective\n");
            for (i, columns) in fit.per_column_traces.iter().enumerate() {
                for (c, trace) in columns.iter().enumerate() {
                    for (t, f) in trace.objectives().iter().enumerate() {
                        traces.push_str(&format!("{},{},{t},{f}\n", i + 1, c + 1));
                    }
                }
            }
            fs::write(out.join("traces.csv"), traces)?;
        }
    }
    let text = serde_json::to_string_pretty(&Value::Object(report))?;
    fs::write(out.join("metrics.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<(), CliError> {
    let (data, k, init) = load_data(&args.data)?;
    let mut spec = match args.data.kernel {
        KernelArg::Linear => GridSpec::linear(data.n_features()),
        KernelArg::Gaussian => GridSpec::gaussian(),
    };
    spec.methods = args.methods.clone();
    spec.seeds = args.seeds.clone();
    spec.sigma = args.data.sigma;
    spec.reduced_size = args.data.reduced_size;
    if !args.c1.is_empty() {
        spec.c1_grid = args.c1.clone();
    }
    if !args.c2.is_empty() {
        spec.c2_grid = args.c2.clone();
    }
    if !args.mu.is_empty() {
        if args.data.kernel == KernelArg::Linear {
            return Err(CliError::Usage("--mu needs --kernel gaussian".into()));
        }
        spec.mu_grid = args.mu.clone();
    }
    if !args.p.is_empty() {
        spec.p_grid = args.p.clone();
    }
    if spec.is_gaussian() && spec.mu_grid.is_empty() {
        spec.mu_grid = power_grid(-10, 5);
    }
    let name = dataset_name(&args.data.data);
    let rows = run_grid(&data, &name, k, &spec, &init, args.workers)?;
    let out = &args.data.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("results.csv"), results_csv(&rows, args.record_runtime)?)?;

    let mut summary = Map::new();
    for method in &spec.methods {
        let own: Vec<_> = rows.iter().filter(|r| r.point.method == *method).cloned().collect();
        let Some(best) = best_row(&own) else { continue };
        let record: Map<String, Value> = RESULTS_HEADER
            .iter()
            .zip(row_fields(best, args.record_runtime))
            .map(|(key, value)| (key.to_string(), field_value(key, value)))
            .collect();
        summary.insert(method.tag().into(), Value::Object(record));
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    summary.insert("rows".into(), json!(rows.len()));
    summary.insert("failed_rows".into(), json!(failed));
    let text = serde_json::to_string_pretty(&Value::Object(summary))?;
    fs::write(out.join("best.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

fn read_truth(path: &Path) -> Result<Vec<usize>, CliError> {
    match load_labels(path) {
        Ok(labels) => Ok(labels),
        Err(MfpcError::Parse { .. }) => {
            let data = load_csv(path)?;
            data.labels()
                .map(<[usize]>::to_vec)
                .ok_or_else(|| CliError::Usage(format!("{} has no label column", path.display())))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_eval(pred: &Path, truth: &Path) -> Result<(), CliError> {
    let pred = read_truth(pred)?;
    let truth = read_truth(truth)?;
    let report = json!({
        "ari": num(ari(&truth, &pred)?),
        "nmi": num(nmi(&truth, &pred)?),
        "samples": truth.len(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Datagen { name, seed, out } => cmd_datagen(&name, seed, &out),
        Command::Fit(args) => cmd_fit(&args),
        Command::Grid(args) => cmd_grid(&args),
        Command::Eval { pred, truth } => cmd_eval(&pred, &truth),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
