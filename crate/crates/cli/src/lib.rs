//! Library half of the `safs` binary: argument types, JSON artifacts and the
//! subcommand implementations.

pub mod args;
pub mod artifact;
pub mod text;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use safs::eval::{timed, Phase, RankOverlapMatrix, TimingRecord};
use safs::pipeline::{run_pipeline, PipelineOptions};
use safs::synth::{self, PlantedConfig};
use safs::{load_csv, DiscreteDataset, DiscretizationSpec, RankMethod, SafsError, ScanConfig};
use thiserror::Error;

use crate::args::{
    Cli, Command, CompareArgs, DataArgs, Fixture, Format, GenerateArgs, OutputArgs, PipelineArgs,
    RankArgs, ScanArgs, SweepArgs,
};
use crate::artifact::*;

/// Invalid combination of otherwise well-formed arguments.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<SafsError>() {
            return match e {
                SafsError::InvalidK { .. } | SafsError::InvalidParameter(_) => EXIT_USAGE,
                SafsError::Io { .. }
                | SafsError::Csv(_)
                | SafsError::MissingOutcome(_)
                | SafsError::InvalidOutcome { .. }
                | SafsError::EmptyDataset
                | SafsError::InvalidSchema(_)
                | SafsError::DegenerateOutcome(_)
                | SafsError::RankingMismatch
                | SafsError::SearchSpaceTooLarge(_) => EXIT_DATA,
                _ => EXIT_INTERNAL,
            };
        }
        if cause.is::<io::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_INTERNAL
}

/// Parses `args`, runs the command and reports errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("failed to configure the worker pool")?;
    }
    match cli.command {
        Command::Rank(a) => cmd_rank(&a),
        Command::Scan(a) => cmd_scan(&a),
        Command::Pipeline(a) => cmd_pipeline(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Generate(a) => cmd_generate(&a),
    }
}

fn load(data: &DataArgs) -> Result<DiscreteDataset> {
    let spec = DiscretizationSpec {
        bins: data.bins,
        missing_label: data.missing_category.clone(),
    };
    load_csv(&data.input, &data.outcome_col, &spec)
        .with_context(|| format!("loading {}", data.input.display()))
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Canonical JSON encoding: pretty-printed with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).context("serializing output")?;
    s.push('\n');
    Ok(s)
}

fn emit<T: serde::Serialize>(
    output: &OutputArgs,
    value: &T,
    text: impl FnOnce() -> String,
) -> Result<()> {
    let body = match output.format {
        Format::Json => to_json(value)?,
        Format::Text => text(),
    };
    let mut w = open_output(output.out.as_deref())?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn names(dataset: &DiscreteDataset, features: &[usize]) -> Vec<String> {
    features
        .iter()
        .map(|&f| dataset.schema(f).name().to_string())
        .collect()
}

fn check_scan_config(config: &ScanConfig) -> Result<()> {
    if config.restarts == 0 {
        bail!(UsageError("--restarts must be at least 1".into()));
    }
    Ok(())
}

fn check_k(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > m {
        bail!(UsageError(format!("--top-k {k} outside 1..={m}")));
    }
    Ok(())
}

fn cmd_rank(args: &RankArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let method: RankMethod = args.method.into();
    if let Some(k) = args.top_k {
        check_k(k, dataset.n_features())?;
    }
    let (ranking, elapsed) = timed(|| method.rank(&dataset));
    let ranking = ranking?;
    let artifact = RankingArtifact {
        schema: SCHEMA.into(),
        kind: RankingArtifact::KIND.into(),
        method: method.name().into(),
        outcome: dataset.outcome_name().into(),
        n_records: dataset.n_records(),
        top_k: args.top_k,
        features: ranking
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| RankedFeature {
                feature: dataset.schema(e.feature).name().into(),
                score: e.score,
                rank: i + 1,
            })
            .collect(),
        volatile: Volatile {
            timings: vec![Timing::from(&TimingRecord {
                phase: Phase::Rank,
                method: method.name().into(),
                k: dataset.n_features(),
                duration: elapsed,
            })],
        },
    };
    emit(&args.output, &artifact, || text::ranking(&artifact))
}

pub fn read_ranking(path: &Path) -> Result<RankingArtifact> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let artifact: RankingArtifact = serde_json::from_str(&raw)
        .with_context(|| format!("parsing ranking {}", path.display()))?;
    if artifact.schema != SCHEMA || artifact.kind != RankingArtifact::KIND {
        bail!(SafsError::InvalidSchema(format!(
            "{} is not a {SCHEMA} ranking",
            path.display()
        )));
    }
    Ok(artifact)
}

/// Feature indices in the order given by a saved ranking.
fn ranked_indices(dataset: &DiscreteDataset, ranking: &RankingArtifact) -> Result<Vec<usize>> {
    let order = ranking
        .features
        .iter()
        .map(|f| {
            dataset.feature_index(&f.feature).ok_or_else(|| {
                SafsError::InvalidSchema(format!(
                    "ranked feature `{}` is not in the input",
                    f.feature
                ))
            })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if order.len() != dataset.n_features() {
        bail!(SafsError::RankingMismatch);
    }
    Ok(order)
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = args.search.config();
    check_scan_config(&config)?;
    let m = dataset.n_features();
    let (method, order) = match (&args.ranking, args.top_k) {
        (Some(path), _) => {
            let saved = read_ranking(path)?;
            (
                Some(saved.method.clone()),
                ranked_indices(&dataset, &saved)?,
            )
        }
        (None, Some(_)) => {
            let method: RankMethod = args.method.into();
            (
                Some(method.name().to_string()),
                method.rank(&dataset)?.features(),
            )
        }
        (None, None) => (None, (0..m).collect()),
    };
    let features = match args.top_k {
        Some(k) => {
            check_k(k, m)?;
            order[..k].to_vec()
        }
        None => order,
    };
    let result = safs::scan(&dataset, &features, &config)?;
    let artifact = ScanArtifact {
        schema: SCHEMA.into(),
        kind: ScanArtifact::KIND.into(),
        method,
        top_k: args.top_k,
        direction: config.direction.name().into(),
        restarts: config.restarts,
        seed: config.seed,
        features: names(&dataset, &features),
        descriptor: constraints(&result.descriptor, &dataset),
        rule: result.descriptor.render(&dataset),
        score: result.score,
        q_hat: finite(result.q_hat),
        subset_size: result.subset_size,
        subset_fraction: result.subset_size as f64 / dataset.n_records() as f64,
        volatile: ScanVolatile {
            elapsed_ms: millis(result.elapsed),
        },
    };
    emit(&args.output, &artifact, || text::scan(&artifact))
}

fn cmd_pipeline(args: &PipelineArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = args.search.config();
    check_scan_config(&config)?;
    if let Some(k) = args.top_k {
        check_k(k, dataset.n_features())?;
    }
    let method: RankMethod = args.method.into();
    let out = run_pipeline(
        &dataset,
        &PipelineOptions {
            method,
            top_k: args.top_k,
            scan: config,
            permutations: args.permutations,
        },
    )?;
    let artifact = ReportArtifact {
        schema: SCHEMA.into(),
        kind: ReportArtifact::KIND.into(),
        method: method.name().into(),
        top_k: out.selected.len(),
        direction: config.direction.name().into(),
        restarts: config.restarts,
        seed: config.seed,
        n_records: dataset.n_records(),
        selected: names(&dataset, &out.selected),
        report: ReportBody::new(&out.report, &dataset),
        volatile: Volatile {
            timings: out.timings.iter().map(Timing::from).collect(),
        },
    };
    let scan_seconds = out.scan.elapsed.as_secs_f64();
    emit(&args.output, &artifact, || {
        text::report(
            &artifact.method,
            artifact.top_k,
            &artifact.report,
            scan_seconds,
        )
    })
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    if !(args.persistence > 0.0 && args.persistence < 1.0) {
        bail!(UsageError(format!(
            "--persistence {} outside (0, 1)",
            args.persistence
        )));
    }
    let rankings = args
        .rankings
        .iter()
        .map(|p| read_ranking(p))
        .collect::<Result<Vec<_>>>()?;
    let named: Vec<(String, Vec<String>)> = rankings
        .iter()
        .map(|r| (r.method.clone(), r.feature_names()))
        .collect();
    let matrix = RankOverlapMatrix::compute(&named, args.persistence)?;
    let artifact = OverlapArtifact {
        schema: SCHEMA.into(),
        kind: OverlapArtifact::KIND.into(),
        persistence: matrix.persistence,
        inputs: args
            .rankings
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
        methods: matrix.methods,
        values: matrix.values,
    };
    emit(&args.output, &artifact, || text::overlap(&artifact))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let dataset = load(&args.data)?;
    let config = args.search.config();
    check_scan_config(&config)?;
    let m = dataset.n_features();
    for &k in &args.k {
        check_k(k, m)?;
    }
    if args.k.windows(2).any(|w| w[0] >= w[1]) {
        bail!(UsageError("--k values must be strictly ascending".into()));
    }
    let method: RankMethod = args.method.into();
    let (ranking, rank_time) = timed(|| method.rank(&dataset));
    let ranking = ranking?;
    let entries = safs::eval::sweep_k(&dataset, &ranking, &args.k, &config, args.permutations)?;
    let lines: Vec<SweepLine> = entries
        .iter()
        .map(|e| {
            let rank_timing = TimingRecord {
                phase: Phase::Rank,
                method: method.name().into(),
                k: e.k,
                duration: rank_time,
            };
            SweepLine {
                schema: SCHEMA.into(),
                kind: SweepLine::KIND.into(),
                method: method.name().into(),
                k: e.k,
                features: names(&dataset, &e.features),
                anomalous_features: e
                    .scan
                    .descriptor
                    .iter()
                    .map(|(f, _)| dataset.schema(f).name().to_string())
                    .collect(),
                jaccard_vs_full: e.jaccard_vs_full,
                report: ReportBody::new(&e.report, &dataset),
                volatile: Volatile {
                    timings: vec![Timing::from(&rank_timing), Timing::from(&e.timing)],
                },
            }
        })
        .collect();
    let body = match args.output.format {
        Format::Json => {
            let mut s = String::new();
            for line in &lines {
                s.push_str(&serde_json::to_string(line).context("serializing output")?);
                s.push('\n');
            }
            s
        }
        Format::Text => text::sweep(&lines),
    };
    let mut w = open_output(args.output.out.as_deref())?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    if args.cardinality < 2 {
        bail!(UsageError("--cardinality must be at least 2".into()));
    }
    if args.rows == 0 || args.features == 0 {
        bail!(UsageError("--rows and --features must be positive".into()));
    }
    let planted = match args.kind {
        Fixture::Planted => {
            if args.planted == 0 || args.planted > args.features {
                bail!(UsageError(format!(
                    "--planted must lie in 1..={}",
                    args.features
                )));
            }
            Some(synth::planted_subgroup(&PlantedConfig {
                n_records: args.rows,
                n_features: args.features,
                n_planted: args.planted,
                planted_cardinality: args.cardinality,
                noise_cardinality: args.cardinality,
                seed: args.seed,
                ..PlantedConfig::default()
            }))
        }
        Fixture::Noise => {
            if !(0.0..=1.0).contains(&args.rate) {
                bail!(UsageError("--rate must lie in [0, 1]".into()));
            }
            None
        }
    };
    let dataset = match &planted {
        Some(p) => p.dataset.clone(),
        None => synth::noise_dataset(
            args.rows,
            &vec![args.cardinality; args.features],
            args.rate,
            args.seed,
        ),
    };
    let w = open_output(args.out.as_deref())?;
    synth::write_csv(&dataset, w)?;

    if let Some(path) = &args.truth {
        let Some(p) = &planted else {
            bail!(UsageError("--truth needs the planted fixture".into()));
        };
        let truth = TruthArtifact {
            schema: SCHEMA.into(),
            kind: TruthArtifact::KIND.into(),
            planted_features: names(&p.dataset, &p.planted_features),
            descriptor: constraints(&p.descriptor, &p.dataset),
            members: p.members.len(),
        };
        fs::write(path, to_json(&truth)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
