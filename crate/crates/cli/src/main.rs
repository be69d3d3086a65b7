mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use workitem_szz::eval::{
    factor_sweep, load_dataset, parse_timestamp, score_run, simulate_issue_date, OffsetMode, RecallMode,
};
use workitem_szz::git::{open_repository, CommitId, RepositoryHandle};
use workitem_szz::methods::MethodExtractor;
use workitem_szz::predict::{mine_tracking_matrix, run_dataset, PredictionPath, Predictor};
use workitem_szz::szz::{CandidateSource, ExternalCandidates, FallbackSelector};
use workitem_szz::workitem::{detect_work_items, Factor, SECONDS_PER_DAY};

use config::{EffectiveConfig, FileConfig, FlagConfig};

/// Locate bug-inducing commits from fix commits using work items.
#[derive(Parser)]
#[command(name = "workitem-szz", version)]
struct Cli {
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the tracking matrix and the work items of one fix commit.
    DetectWi {
        #[command(flatten)]
        target: Target,
        /// Bound the mined window to the issue date minus the lookback.
        #[arg(long)]
        issue_date: Option<String>,
        /// Write the tracking matrix as CSV.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Predict the bug-inducing commit of one fix commit.
    FindBic {
        #[command(flatten)]
        target: Target,
        /// Issue report date (seconds since the epoch or RFC 3339).
        #[arg(long, conflicts_with = "simulate_from")]
        issue_date: Option<String>,
        /// Simulate the issue date from this known bug-inducing commit.
        #[arg(long)]
        simulate_from: Option<String>,
        /// Print the full prediction as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// Predict and score a whole dataset.
    Evaluate {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        flags: Flags,
    },
    /// Evaluate a dataset at several factors.
    Sweep {
        #[command(flatten)]
        dataset: DatasetArgs,
        /// Comma-separated factors, e.g. 0.3,0.5,0.7,0.9.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<Factor>>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Target {
    /// Local repository path or remote URL.
    #[arg(long)]
    repo: String,
    /// Fix commit (any revision expression).
    #[arg(long)]
    fc: String,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset JSON file.
    #[arg(long)]
    dataset: PathBuf,
    /// Newline-separated record ids to leave out.
    #[arg(long)]
    exclusions: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Candidate CSV from another SZZ implementation, used on the fallback path.
    #[arg(long)]
    candidates: Option<PathBuf>,
    /// Recall denominator: all oracle BICs or all records.
    #[arg(long, value_parser = parse_recall_mode)]
    recall_mode: Option<RecallMode>,
}

#[derive(Args)]
struct Flags {
    /// Work-item threshold in (0, 1].
    #[arg(long)]
    factor: Option<Factor>,
    /// Days before the issue date searched for work items.
    #[arg(long)]
    lookback_days: Option<u32>,
    /// Most commits walked back from the fix.
    #[arg(long)]
    max_commits: Option<usize>,
    /// Simulated issue-date offset: q2, legacy, or a fraction in [0, 1].
    #[arg(long)]
    offset: Option<OffsetMode>,
    /// Fallback selector: b, b-latest or b-largest.
    #[arg(long)]
    fallback: Option<FallbackSelector>,
    #[arg(long, overrides_with = "no_issue_filter")]
    issue_filter: bool,
    /// Ignore the issue date when selecting candidates.
    #[arg(long, overrides_with = "issue_filter")]
    no_issue_filter: bool,
    /// Keep only the newest candidate before the issue date on the fallback path.
    #[arg(long, overrides_with = "no_one_commit_filter")]
    one_commit_filter: bool,
    #[arg(long, overrides_with = "one_commit_filter")]
    no_one_commit_filter: bool,
    /// Worker threads.
    #[arg(long)]
    parallelism: Option<usize>,
    /// Where remote repositories are cloned.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

fn parse_recall_mode(s: &str) -> Result<RecallMode, String> {
    match s {
        "oracle-bics" | "oracle_bics" => Ok(RecallMode::OracleBics),
        "records" => Ok(RecallMode::Records),
        _ => Err(format!("{s}: expected oracle-bics or records")),
    }
}

fn toggle(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    }
}

impl Flags {
    fn into_config(self) -> FlagConfig {
        FlagConfig {
            factor: self.factor,
            lookback_days: self.lookback_days,
            max_commits: self.max_commits,
            fallback: self.fallback,
            issue_filter: toggle(self.issue_filter, self.no_issue_filter),
            one_commit_filter: toggle(self.one_commit_filter, self.no_one_commit_filter),
            offset: self.offset,
            parallelism: self.parallelism,
            cache_dir: self.cache_dir,
            ..Default::default()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::DetectWi {
            target,
            issue_date,
            dump_matrix,
            flags,
        } => {
            let config = config::resolve(file, flags.into_config())?;
            detect_wi(&config, &target, issue_date.as_deref(), dump_matrix)
        }
        Command::FindBic {
            target,
            issue_date,
            simulate_from,
            json,
            flags,
        } => {
            let config = config::resolve(file, flags.into_config())?;
            find_bic(&config, &target, issue_date.as_deref(), simulate_from.as_deref(), json)
        }
        Command::Evaluate { dataset, flags } => {
            let config = config::resolve(file, dataset_flags(&dataset, flags, None))?;
            evaluate(&config, &dataset.dataset)
        }
        Command::Sweep {
            dataset,
            factors,
            flags,
        } => {
            let config = config::resolve(file, dataset_flags(&dataset, flags, factors))?;
            sweep(&config, &dataset.dataset)
        }
    }
}

fn dataset_flags(dataset: &DatasetArgs, flags: Flags, factors: Option<Vec<Factor>>) -> FlagConfig {
    FlagConfig {
        exclusions: dataset.exclusions.clone(),
        out_dir: dataset.out_dir.clone(),
        candidates: dataset.candidates.clone(),
        recall_mode: dataset.recall_mode,
        factors,
        ..flags.into_config()
    }
}

fn open(config: &EffectiveConfig, target: &Target) -> Result<(RepositoryHandle, CommitId)> {
    let repo = open_repository(&target.repo, &config.cache_dir).with_context(|| format!("opening {}", target.repo))?;
    let fc = repo.resolve(&target.fc)?;
    Ok((repo, fc))
}

fn predictor(config: &EffectiveConfig) -> Result<Predictor> {
    let mut p = Predictor::new(config.predict.clone()).with_extractor(MethodExtractor::new(config.test_paths.clone()));
    if let Some(path) = &config.candidates {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let source: Arc<dyn CandidateSource> = Arc::new(ExternalCandidates::from_csv(&text)?);
        p = p.with_source(source);
    }
    Ok(p)
}

fn detect_wi(config: &EffectiveConfig, target: &Target, issue_date: Option<&str>, dump: Option<PathBuf>) -> Result<()> {
    let (repo, fc) = open(config, target)?;
    let oldest = match issue_date {
        Some(d) => parse_timestamp(d)? - i64::from(config.predict.lookback_days) * SECONDS_PER_DAY,
        None => i64::MIN,
    };
    let extractor = MethodExtractor::new(config.test_paths.clone());
    let matrix = mine_tracking_matrix(&repo, &extractor, fc, oldest, config.predict.max_commits)
        .with_context(|| format!("building the tracking matrix of {fc}"))?;
    if let Some(path) = dump {
        matrix.write_csv(&path)?;
    }
    let items = detect_work_items(&matrix, config.predict.factor);
    print!("{}", report::matrix_text(&matrix, &items));
    Ok(())
}

fn find_bic(
    config: &EffectiveConfig,
    target: &Target,
    issue_date: Option<&str>,
    simulate_from: Option<&str>,
    json: bool,
) -> Result<()> {
    let (repo, fc) = open(config, target)?;
    let date = match (issue_date, simulate_from) {
        (Some(d), _) => Some(parse_timestamp(d)?),
        (None, Some(bic)) => {
            let bic_time = repo.commit_meta(repo.resolve(bic)?)?.commit_time;
            let fc_time = repo.commit_meta(fc)?.commit_time;
            Some(simulate_issue_date(bic_time, fc_time, config.offset)?)
        }
        (None, None) if config.predict.issue_filter || config.predict.one_commit_filter => {
            bail!("an issue date is required: pass --issue-date, --simulate-from, or --no-issue-filter")
        }
        (None, None) => None,
    };
    let prediction = predictor(config)?.predict(&repo, fc, date)?;
    if json {
        let out = serde_json::json!({ "config": config, "issue_date": date, "prediction": prediction });
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }
    let candidates = if prediction.candidates.is_empty() {
        "(none)".to_string()
    } else {
        prediction.candidates.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    };
    println!("{}: {candidates}", prediction.path);
    if prediction.path == PredictionPath::Fallback {
        println!("reason: {}", serde_json::to_value(prediction.reason)?.as_str().unwrap_or_default());
    }
    for d in &prediction.diagnostics {
        println!("note: {d}");
    }
    Ok(())
}

fn load(config: &EffectiveConfig, dataset: &std::path::Path) -> Result<workitem_szz::eval::Dataset> {
    let loaded = load_dataset(dataset, config.exclusions.as_deref())
        .with_context(|| format!("loading {}", dataset.display()))?;
    for e in &loaded.errors {
        log::warn!("dataset entry {}: {}", e.index, e.message);
    }
    Ok(loaded)
}

fn out_dir(config: &EffectiveConfig) -> Result<PathBuf> {
    let dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn evaluate(config: &EffectiveConfig, dataset: &std::path::Path) -> Result<()> {
    let loaded = load(config, dataset)?;
    let predictor = predictor(config)?;
    let run = run_dataset(&predictor, &loaded.records, &config.run_options())?;
    let metrics = score_run(&run, &loaded.records, config.recall_mode)?;
    let dir = out_dir(config)?;
    report::write_evaluation(&dir, config, &loaded, &run, &metrics, predictor.extractor())?;
    print!("{}", report::summary_text(&run.summary, &metrics));
    Ok(())
}

fn sweep(config: &EffectiveConfig, dataset: &std::path::Path) -> Result<()> {
    let loaded = load(config, dataset)?;
    let factors = config
        .factors
        .clone()
        .unwrap_or_else(|| [0.3, 0.5, 0.7, 0.9].map(|f| Factor::new(f).expect("valid factor")).to_vec());
    let predictor = predictor(config)?;
    let results = factor_sweep(&predictor, &loaded.records, &factors, &config.run_options(), config.recall_mode)?;
    let dir = out_dir(config)?;
    let rows: Vec<_> = results.iter().map(|(row, _)| row.clone()).collect();
    report::write_sweep(&dir, config, &loaded, &results)?;
    print!("{}", report::sweep_text(&rows));
    Ok(())
}
