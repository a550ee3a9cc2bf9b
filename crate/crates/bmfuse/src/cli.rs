//! Command-line entry point.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use bmfuse_core::evaluation::{compute_mapping_table, roc_points};
use bmfuse_core::fusion::{DEFAULT_ALPHA, DEFAULT_BINS};
use bmfuse_core::normalization::NormalizationMethod;
use bmfuse_core::score::{
    build_multimodal_table_with, split_score_set, Alignment, MultimodalScoreTable, Polarity,
    ScoreRecord,
};
use bmfuse_core::synth::generate_synthetic_table;
use clap::{Args, Parser, Subcommand};

use crate::formats::{
    emit_mapping_table_csv, emit_roc_csv, emit_score_csv, matchers_in_order, parse_score_csv,
    parse_sim_config,
};
use crate::pipeline::{evaluate, EvalSettings, RuleChoice};
use crate::report::{ReportInputs, RunReport};
use crate::Error;

pub const MAPPING_TABLE_FILE: &str = "mapping_table.csv";
pub const ROC_FILE: &str = "roc.csv";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(
    name = "bmfuse",
    version,
    about = "Match-score fusion and FAR/FRR evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Ingest {
    /// Matcher polarity, e.g. `--polarity finger=distance`. Once any is given,
    /// every matcher in the file must be listed.
    #[arg(long = "polarity", value_name = "NAME=KIND", value_parser = parse_polarity)]
    polarity: Vec<(String, Polarity)>,
    /// Remove pairs that lack a score for some matcher instead of failing.
    #[arg(long)]
    drop_incomplete: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a score file and print a summary.
    Validate {
        scores: PathBuf,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// Generate a synthetic score file from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Normalize, fuse and evaluate; writes mapping_table.csv, roc.csv and report.json.
    Eval {
        scores: PathBuf,
        #[arg(long, value_parser = ["minmax", "zscore", "mad", "tanh", "none"])]
        norm: String,
        #[arg(long, value_parser = ["sum", "min", "max", "product", "wsum", "sumprob", "prodprob"])]
        fuse: String,
        /// Weights for `wsum`, in matcher order. Derived from unimodal EERs when omitted.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Target FAR for an operating point; repeatable. Defaults to 0.01 and 0.001.
        #[arg(long = "far")]
        far: Vec<f64>,
        /// Fit normalization parameters on this score file instead of the evaluated one.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        ingest: Ingest,
    },
    /// ROC curve of a single matcher.
    Roc {
        scores: PathBuf,
        #[arg(long)]
        matcher: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        ingest: Ingest,
    },
}

fn parse_polarity(s: &str) -> Result<(String, Polarity), String> {
    let (name, kind) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=KIND, got `{s}`"))?;
    let polarity = match kind {
        "similarity" => Polarity::Similarity,
        "distance" => Polarity::Distance,
        _ => {
            return Err(format!(
                "polarity must be `similarity` or `distance`, got `{kind}`"
            ))
        }
    };
    Ok((name.to_string(), polarity))
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })
}

fn read_records(path: &Path, ingest: &Ingest) -> Result<Vec<ScoreRecord>, Error> {
    let bytes = read(path)?;
    let map: BTreeMap<String, Polarity> = ingest.polarity.iter().cloned().collect();
    let map = (!map.is_empty()).then_some(&map);
    parse_score_csv(&bytes, map).map_err(|source| Error::Parse {
        path: path.into(),
        source,
    })
}

fn alignment(ingest: &Ingest) -> Alignment {
    if ingest.drop_incomplete {
        Alignment::DropIncomplete
    } else {
        Alignment::Strict
    }
}

/// Reads a score file into an aligned table; returns it with the dropped-pair count.
pub fn load_table(
    path: &Path,
    polarity: &[(String, Polarity)],
    drop_incomplete: bool,
) -> Result<(MultimodalScoreTable, usize), Error> {
    let ingest = Ingest {
        polarity: polarity.to_vec(),
        drop_incomplete,
    };
    load(path, &ingest)
}

fn load(path: &Path, ingest: &Ingest) -> Result<(MultimodalScoreTable, usize), Error> {
    let records = read_records(path, ingest)?;
    let matchers = matchers_in_order(&records);
    Ok(build_multimodal_table_with(
        &records,
        &matchers,
        alignment(ingest),
    )?)
}

fn validate(scores: &Path, ingest: &Ingest) -> Result<(), Error> {
    let (table, dropped) = load(scores, ingest)?;
    let names: Vec<&str> = table.matchers().iter().map(|m| m.name()).collect();
    println!(
        "{}: ok, {} rows ({} genuine, {} impostor), matchers: {}, dropped incomplete: {}",
        scores.display(),
        table.rows().len(),
        table.genuine_count(),
        table.impostor_count(),
        names.join(","),
        dropped
    );
    Ok(())
}

fn simulate(config: &Path, out: &Path) -> Result<(), Error> {
    let cfg = parse_sim_config(&read(config)?).map_err(|source| Error::Config {
        path: config.into(),
        source,
    })?;
    let table = generate_synthetic_table(&cfg)?;
    write(out, &emit_score_csv(&table))
}

#[allow(clippy::too_many_arguments)]
fn eval(
    scores: &Path,
    norm: &str,
    fuse: &str,
    weights: Option<Vec<f64>>,
    bins: usize,
    alpha: f64,
    far: Vec<f64>,
    reference: Option<&Path>,
    out_dir: &Path,
    ingest: &Ingest,
) -> Result<(), Error> {
    let norm = match norm {
        "none" => None,
        other => Some(other.parse::<NormalizationMethod>().map_err(Error::Usage)?),
    };
    let rule =
        RuleChoice::parse(fuse).ok_or_else(|| Error::Usage(format!("unknown rule `{fuse}`")))?;
    if weights.is_some() && rule != RuleChoice::WeightedSum {
        return Err(Error::Usage("--weights only applies to --fuse wsum".into()));
    }
    let settings = EvalSettings {
        norm,
        rule,
        weights,
        bins,
        alpha,
        fars: if far.is_empty() {
            EvalSettings::default().fars
        } else {
            far
        },
    };

    let (table, dropped) = load(scores, ingest)?;
    let reference_table = match reference {
        Some(p) => Some(load(p, ingest)?.0),
        None => None,
    };
    let evaluation = evaluate(&table, reference_table.as_ref(), &settings)?;

    fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.into(),
        source,
    })?;
    write(
        &out_dir.join(MAPPING_TABLE_FILE),
        &emit_mapping_table_csv(&evaluation.mapping),
    )?;
    let roc = emit_roc_csv(&roc_points(&evaluation.mapping)).expect("mapping tables are nonempty");
    write(&out_dir.join(ROC_FILE), &roc)?;

    let report = RunReport::build(ReportInputs {
        table: &table,
        dropped_incomplete: dropped,
        drop_incomplete: ingest.drop_incomplete,
        settings: &settings,
        evaluation: &evaluation,
        input: scores.display().to_string(),
        reference: reference.map(|p| p.display().to_string()),
        mapping_table_file: MAPPING_TABLE_FILE.into(),
        roc_file: ROC_FILE.into(),
    });
    write(&out_dir.join(REPORT_FILE), &report.to_json())?;

    for op in &evaluation.operating_points {
        println!(
            "{} {} fusion: GAR {:.4} at FAR {} (achieved {:.6})",
            settings.norm.map_or("none", |m| m.as_str()),
            evaluation.rule,
            op.gar,
            op.requested_far,
            op.achieved_far
        );
    }
    println!("EER {:.6}", evaluation.eer.eer);
    Ok(())
}

fn roc(scores: &Path, matcher: &str, out: &Path, ingest: &Ingest) -> Result<(), Error> {
    let records: Vec<ScoreRecord> = read_records(scores, ingest)?
        .into_iter()
        .filter(|r| r.matcher.name() == matcher)
        .collect();
    let Some(first) = records.first() else {
        return Err(Error::Score(
            bmfuse_core::score::ScoreError::UnknownMatcher(matcher.into()),
        ));
    };
    let matchers = [first.matcher.clone()];
    let (table, _) = build_multimodal_table_with(&records, &matchers, alignment(ingest))?;
    let set = split_score_set(&table, matcher)?;
    let mapping = compute_mapping_table(&set.genuine, &set.impostor)?;
    let csv = emit_roc_csv(&roc_points(&mapping)).expect("mapping tables are nonempty");
    write(out, &csv)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate { scores, ingest } => validate(&scores, &ingest),
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Eval {
            scores,
            norm,
            fuse,
            weights,
            bins,
            alpha,
            far,
            reference,
            out_dir,
            ingest,
        } => eval(
            &scores,
            &norm,
            &fuse,
            weights,
            bins,
            alpha,
            far,
            reference.as_deref(),
            &out_dir,
            &ingest,
        ),
        Command::Roc {
            scores,
            matcher,
            out,
            ingest,
        } => roc(&scores, &matcher, &out, &ingest),
    }
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on usage
/// errors, 2 on data errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
