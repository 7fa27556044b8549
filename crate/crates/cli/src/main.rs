mod experiments;
mod output;
mod settings;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lmpmime::{
    causality_matrix, run_batch, InformationEstimate, Method, MethodConfig, MultivariateSeries, SystemKind,
    SystemSpec,
};
use serde::Serialize;

use experiments::{row_tag, Filters, Row, Target};
use output::{Format, Header, Writer};
use settings::{pick, pick_list, ConfigError, ConfigFile};

/// Environment variable holding the number of worker threads.
const WORKERS_ENV: &str = "LMPMIME_WORKERS";
const DEFAULT_SEED: u64 = 2024;
const DEFAULT_REALIZATIONS: usize = 20;

#[derive(Parser)]
#[command(name = "lmpmime", version, about = "Directed coupling detection by mixed embedding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a benchmark system and score methods over realizations
    /// (or analyze a CSV file when --csv is given).
    Run(RunArgs),
    /// Reproduce a published table or figure at desk scale.
    Reproduce(ReproduceArgs),
    /// Estimate causality matrices for a CSV series.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone, Default)]
struct MethodArgs {
    /// key = value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Methods to run, comma separated: pmime, m-pmime, lm-pmime.
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    /// Maximum lag.
    #[arg(long = "L")]
    max_lag: Option<usize>,
    /// Stopping threshold.
    #[arg(long = "A")]
    threshold: Option<f64>,
    /// Strategy adjustment factor.
    #[arg(long = "m")]
    strategy_factor: Option<usize>,
    /// Neighbours in the k-NN estimator.
    #[arg(long = "k-nn")]
    k_nn: Option<usize>,
    /// Estimate of I(y; v) used by the stopping rule: chain-rule or joint.
    #[arg(long)]
    stop_information: Option<InformationEstimate>,
    /// Prediction horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats, comma separated: json, csv, pgm.
    #[arg(long, value_delimiter = ',')]
    format: Vec<Format>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: MethodArgs,
    /// var5, nlvar3, henon or lorenz3.
    #[arg(long)]
    system: Option<String>,
    /// Analyze this CSV file instead of simulating.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Keep every q-th sample of the CSV input.
    #[arg(long)]
    downsample: Option<usize>,
    /// Number of Hénon maps.
    #[arg(long, visible_alias = "k")]
    vars: Option<usize>,
    #[arg(long)]
    coupling: Option<f64>,
    /// Series length.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Master seed; realization r uses seed ^ r.
    #[arg(long)]
    seed: Option<u64>,
    /// Discarded transient in samples.
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: Target,
    #[command(flatten)]
    common: MethodArgs,
    /// Restrict or replace the number of Hénon maps.
    #[arg(long, visible_alias = "vars", value_delimiter = ',')]
    k: Vec<usize>,
    /// Restrict or replace the series lengths.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// Restrict or replace the coupling strengths.
    #[arg(long, value_delimiter = ',')]
    coupling: Vec<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input file: optional header row, one sample per row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Keep every q-th sample.
    #[arg(long)]
    downsample: Option<usize>,
    #[command(flatten)]
    common: MethodArgs,
}

/// Method settings after merging flags, config file and defaults.
#[derive(Debug, Clone, Serialize)]
struct ResolvedMethods {
    methods: Vec<MethodConfig>,
    #[serde(skip)]
    out: PathBuf,
    #[serde(skip)]
    formats: Vec<Format>,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    Ok(match path {
        Some(p) => ConfigFile::read(p)?,
        None => ConfigFile::default(),
    })
}

/// `defaults` supplies (L, A, m) when neither flag nor file set them.
fn resolve_methods(
    a: &MethodArgs,
    file: &ConfigFile,
    defaults: (usize, f64, usize),
    default_formats: &[Format],
) -> Result<ResolvedMethods> {
    let mut methods = pick_list(a.method.clone(), file, "method")?;
    if methods.is_empty() {
        methods = Method::ALL.to_vec();
    }
    let max_lag = pick(a.max_lag, file, "L")?.unwrap_or(defaults.0);
    let threshold = pick(a.threshold, file, "A")?.unwrap_or(defaults.1);
    let m = pick(a.strategy_factor, file, "m")?.unwrap_or(defaults.2);
    let k_nn = pick(a.k_nn, file, "k-nn")?;
    let stop = pick(a.stop_information, file, "stop-information")?;
    let horizon = pick(a.horizon, file, "horizon")?;
    let configs = methods
        .into_iter()
        .map(|method| {
            let mut c = MethodConfig::new(method)
                .with_lag(max_lag)
                .with_threshold(threshold)
                .with_strategy_factor(m);
            if let Some(k) = k_nn {
                c = c.with_k_nn(k);
            }
            if let Some(s) = stop {
                c = c.with_stop_information(s);
            }
            if let Some(h) = horizon {
                c.horizon = h;
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut formats = pick_list(a.format.clone(), file, "format")?;
    if formats.is_empty() {
        formats = default_formats.to_vec();
    }
    Ok(ResolvedMethods {
        methods: configs,
        out: pick(a.out.clone(), file, "out")?.unwrap_or_else(|| PathBuf::from("out")),
        formats,
    })
}

fn parse_system(
    name: &str,
    vars: Option<usize>,
    coupling: Option<f64>,
) -> Result<(SystemKind, usize, (usize, f64, usize))> {
    // Defaults follow the benchmark settings of each system.
    Ok(match name.to_ascii_lowercase().as_str() {
        "var5" | "var" => (SystemKind::Var5, 512, (6, 0.97, 2)),
        "nlvar3" | "nlvar" => (SystemKind::NlVar3, 512, (6, 0.97, 3)),
        "henon" => (
            SystemKind::Henon {
                vars: vars.unwrap_or(3),
                coupling: coupling.unwrap_or(0.3),
            },
            1024,
            (5, 0.95, 2),
        ),
        "lorenz3" | "lorenz" => (
            SystemKind::Lorenz3 {
                coupling: coupling.unwrap_or(3.0),
            },
            512,
            (5, 0.95, 3),
        ),
        other => bail!(ConfigError(format!(
            "unknown system {other:?} (expected var5, nlvar3, henon or lorenz3)"
        ))),
    })
}

fn method_tag(c: &MethodConfig) -> &'static str {
    c.method.name()
}

fn cmd_run(args: RunArgs) -> Result<Vec<PathBuf>> {
    let file = load_config(args.common.config.as_deref())?;
    let csv = pick(args.csv.clone(), &file, "csv")?;
    if let Some(path) = csv {
        return cmd_analyze(AnalyzeArgs {
            csv: Some(path),
            downsample: args.downsample,
            common: args.common,
        });
    }
    let system: String = pick(args.system.clone(), &file, "system")?
        .ok_or_else(|| ConfigError("run needs --system or --csv".into()))?;
    let vars = pick(args.vars, &file, "vars")?;
    let coupling = pick(args.coupling, &file, "coupling")?;
    let (kind, default_n, defaults) = parse_system(&system, vars, coupling)?;
    let n = pick(args.n, &file, "n")?.unwrap_or(default_n);
    let seed = pick(args.seed, &file, "seed")?.unwrap_or(DEFAULT_SEED);
    let realizations = pick(args.realizations, &file, "realizations")?.unwrap_or(DEFAULT_REALIZATIONS);
    let mut spec = SystemSpec::new(kind, n, seed);
    spec.burn_in = pick(args.burn_in, &file, "burn-in")?;
    spec.validate()?;
    let resolved = resolve_methods(&args.common, &file, defaults, &[Format::Json, Format::Csv])?;

    #[derive(Serialize)]
    struct Settings<'a> {
        system: SystemSpec,
        realizations: usize,
        #[serde(flatten)]
        methods: &'a ResolvedMethods,
    }
    let header = Header::new(
        "run",
        Settings {
            system: spec,
            realizations,
            methods: &resolved,
        },
    );
    let mut w = Writer::new(&resolved.out, resolved.formats.clone())?;
    let tag = row_tag(&Row { kind, n });
    let mut summaries = Vec::new();
    for cfg in &resolved.methods {
        log::info!("{tag}: {} over {realizations} realizations", cfg.method);
        let s = run_batch(&spec, cfg, realizations)?;
        let name = format!("{tag}_{}", method_tag(cfg));
        w.json(&name, &header, "summary", &s)?;
        w.heatmap(&name, &header, &s.mean_r)?;
        print_summary(&tag, &s);
        summaries.push(s);
    }
    w.metrics_csv("metrics", &header, &summaries)?;
    Ok(w.written().to_vec())
}

fn print_summary(tag: &str, s: &lmpmime::BatchSummary) {
    println!(
        "{tag:<24} {:<9} sensitivity {:.3}  specificity {:.3}  F1 {:.3}",
        s.config.method.display_name(),
        s.metrics.sensitivity,
        s.metrics.specificity,
        s.metrics.f1
    );
}

fn cmd_reproduce(args: ReproduceArgs) -> Result<Vec<PathBuf>> {
    let file = load_config(args.common.config.as_deref())?;
    let target = args.target;
    let p = target.parameters();
    let default_formats: &[Format] = if target.is_figure() {
        &[Format::Json, Format::Csv, Format::Pgm]
    } else {
        &[Format::Json, Format::Csv]
    };
    let resolved = resolve_methods(&args.common, &file, (p.max_lag, p.threshold, p.m), default_formats)?;
    let filters = Filters {
        vars: pick_list(args.k, &file, "vars")?,
        n: pick_list(args.n, &file, "n")?,
        coupling: pick_list(args.coupling, &file, "coupling")?,
    };
    let seed = pick(args.seed, &file, "seed")?.unwrap_or(DEFAULT_SEED);
    let realizations = pick(args.realizations, &file, "realizations")?.unwrap_or(DEFAULT_REALIZATIONS);
    let rows = target.select(&filters);
    if rows.is_empty() {
        bail!(ConfigError(format!("the filters leave no rows of {}", target.name())));
    }

    #[derive(Serialize)]
    struct Settings<'a> {
        target: Target,
        rows: &'a [Row],
        seed: u64,
        realizations: usize,
        #[serde(flatten)]
        methods: &'a ResolvedMethods,
    }
    let header = Header::new(
        format!("reproduce {}", target.name()),
        Settings {
            target,
            rows: &rows,
            seed,
            realizations,
            methods: &resolved,
        },
    );
    let mut w = Writer::new(&resolved.out, resolved.formats.clone())?;
    let mut summaries = Vec::new();
    for row in &rows {
        let spec = SystemSpec::new(row.kind, row.n, seed);
        let tag = row_tag(row);
        for cfg in &resolved.methods {
            log::info!("{tag}: {} over {realizations} realizations", cfg.method);
            let s = run_batch(&spec, cfg, realizations)?;
            let name = format!("{}_{tag}_{}", target.name(), method_tag(cfg));
            w.json(&name, &header, "summary", &s)?;
            w.heatmap(&name, &header, &s.mean_r)?;
            print_summary(&tag, &s);
            summaries.push(s);
        }
    }
    w.metrics_csv(target.name(), &header, &summaries)?;
    Ok(w.written().to_vec())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let file = load_config(args.common.config.as_deref())?;
    let path: PathBuf = pick(args.csv.clone(), &file, "csv")?
        .ok_or_else(|| ConfigError("analyze needs --csv".into()))?;
    let downsample = pick(args.downsample, &file, "downsample")?.unwrap_or(1);
    let raw = MultivariateSeries::read_csv(&path).with_context(|| format!("reading {}", path.display()))?;
    let series = raw.decimate(downsample)?;
    let resolved = resolve_methods(&args.common, &file, (5, 0.95, 2), &[Format::Json, Format::Csv])?;

    #[derive(Serialize)]
    struct Settings<'a> {
        csv: String,
        downsample: usize,
        samples: usize,
        labels: &'a [String],
        #[serde(flatten)]
        methods: &'a ResolvedMethods,
    }
    let header = Header::new(
        "analyze",
        Settings {
            csv: path.display().to_string(),
            downsample,
            samples: series.n_samples(),
            labels: series.labels(),
            methods: &resolved,
        },
    );
    let stem = path.file_stem().map_or("series".into(), |s| s.to_string_lossy().into_owned());
    let mut w = Writer::new(&resolved.out, resolved.formats.clone())?;
    for cfg in &resolved.methods {
        let result = causality_matrix(&series, cfg)?;
        let name = format!("{stem}_{}", method_tag(cfg));
        w.json(&name, &header, "result", &result)?;
        w.matrix_csv(&format!("{name}_matrix"), &header, series.labels(), &result.matrix)?;
        w.heatmap(&name, &header, &result.matrix)?;
        println!("{}", cfg.method.display_name());
        for (label, row) in series.labels().iter().zip(result.matrix.rows()) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            println!("  {label:>10}  {}", cells.join("  "));
        }
    }
    Ok(w.written().to_vec())
}

fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            bail!(ConfigError(format!("{WORKERS_ENV} must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Error category and exit code.
fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    use lmpmime::Error as E;
    if e.downcast_ref::<ConfigError>().is_some() {
        return ("config", 2);
    }
    if let Some(le) = e.chain().find_map(|c| c.downcast_ref::<E>()) {
        return match le {
            E::InvalidConfig(_) | E::CombinationBudgetExceeded { .. } => ("config", 2),
            E::Io(_) => ("io", 3),
            E::Parse { .. }
            | E::ConstantColumn { .. }
            | E::NonFinite { .. }
            | E::SeriesTooShort { .. }
            | E::TooFewSamples { .. }
            | E::ShapeMismatch { .. } => ("input", 4),
            E::DivergedAfterRetries { .. } | E::IntegrationFailure { .. } => ("simulation", 5),
        };
    }
    if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) {
        return ("io", 3);
    }
    ("error", 1)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_workers().and_then(|()| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::Analyze(a) => cmd_analyze(a),
    });
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let (kind, code) = classify(&e);
            eprintln!("error[{kind}]: {e:#}");
            ExitCode::from(code)
        }
    }
}
