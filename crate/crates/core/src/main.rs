use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patchloom::config::{load_config, ConfigError, RunConfig};
use patchloom::eval::{self, EvalReport, Metrics, ReportRow};
use patchloom::miner::{GitRepo, MineOptions};
use patchloom::pipeline::{self, PipelineError};
use patchloom::{selftest, synth};

#[derive(Parser)]
#[command(name = "patchloom", version, about = "Learn statement-level patches from version history")]
struct Cli {
    /// key=value configuration file; flags override it, PATCHLOOM_SEED overrides both
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for initialization, shuffling and dropout
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract change hunks from a git repository
    Mine {
        /// Git repository to mine (default: repo from the config)
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Hunk dump to write; fix links and the mining report go next to it
        #[arg(long, default_value = "hunks.jsonl")]
        out: PathBuf,
        /// First commit year to keep
        #[arg(long)]
        since: Option<i32>,
        /// Last commit year to keep
        #[arg(long)]
        until: Option<i32>,
    },
    /// Turn a hunk dump into training and test files
    BuildCorpus {
        /// Hunk dump written by mine
        #[arg(long, default_value = "hunks.jsonl")]
        hunks: PathBuf,
        /// Output corpus directory
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
        /// Year whose pairs form the test set (default: latest mined year)
        #[arg(long)]
        test_year: Option<i32>,
        /// Tokens seen fewer times become <unk>
        #[arg(long)]
        min_count: Option<usize>,
    },
    /// Train the encoder-decoder on a corpus directory
    Train {
        /// Corpus directory written by build-corpus
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// Model file to write; the loss history goes next to it
        #[arg(long, default_value = "model.plm")]
        out: PathBuf,
        #[command(flatten)]
        hyper: Hyper,
    },
    /// Suggest patches for a file of queries
    Generate {
        /// Model file written by train
        #[arg(long, default_value = "model.plm")]
        model: PathBuf,
        /// One tokenized statement per line
        #[arg(long)]
        query_file: PathBuf,
        /// Patch records, one JSON object per line
        #[arg(long, default_value = "patches.jsonl")]
        out: PathBuf,
        #[command(flatten)]
        decode: Decode,
    },
    /// Exact-match suggestions from the training pairs
    Baseline {
        /// Corpus directory whose training pairs are matched
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// One tokenized statement per line
        #[arg(long)]
        query_file: PathBuf,
        /// Patch records, one JSON object per line
        #[arg(long, default_value = "baseline.jsonl")]
        out: PathBuf,
    },
    /// Precision, recall and F1 of patch files, or of a counts table
    Evaluate(EvaluateArgs),
    /// F1 over a range of thresholds
    Sweep {
        /// Model file written by train
        #[arg(long, default_value = "model.plm")]
        model: PathBuf,
        /// Corpus directory with the test files
        #[arg(long, default_value = "corpus")]
        corpus: PathBuf,
        /// CSV with model and baseline F1 per threshold
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Comma-separated ascending thresholds
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thresholds: Option<Vec<f64>>,
        #[command(flatten)]
        filter: FilterArgs,
        /// Beam width
        #[arg(long)]
        beam: Option<usize>,
        /// Longest output in tokens, including </s>
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Gradient, normalization and beam-search checks
    Selftest,
    /// All stages on one repository
    Run {
        /// Git repository (default: repo from the config)
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Directory for every artifact
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Year whose pairs form the test set (default: latest mined year)
        #[arg(long)]
        test_year: Option<i32>,
        #[command(flatten)]
        hyper: Hyper,
        #[command(flatten)]
        decode: Decode,
        #[command(flatten)]
        filter: FilterArgs,
    },
    /// Write the bundled synthetic history as a git repository
    SynthRepo {
        /// Directory to create the repository in
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Hyper {
    /// Maximum number of epochs
    #[arg(long)]
    epochs: Option<usize>,
    /// LSTM width
    #[arg(long)]
    hidden: Option<usize>,
    /// Embedding width
    #[arg(long)]
    embed: Option<usize>,
    /// Adam step size
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Dropout rate on non-recurrent connections
    #[arg(long)]
    dropout: Option<f64>,
    /// Target tokens per minibatch
    #[arg(long)]
    minibatch_words: Option<usize>,
    /// Stop after this many epochs without a better development loss
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args)]
struct Decode {
    /// Outputs scoring below this log-probability become NA
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<f64>,
    /// Beam width
    #[arg(long)]
    beam: Option<usize>,
    /// Longest output in tokens, including </s>
    #[arg(long)]
    max_len: Option<usize>,
    /// Hypotheses to keep per query
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Args)]
struct FilterArgs {
    /// NU, UQ, UR, unassigned or all
    #[arg(long)]
    category: Option<String>,
    /// all, bugfix or non-bugfix
    #[arg(long)]
    bugfix: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Counts table with columns project,system,correct,arg_incorrect,incorrect,na
    #[arg(long, conflicts_with_all = ["patches", "corpus", "baseline"])]
    counts: Option<PathBuf>,
    /// Model patch records to score
    #[arg(long, requires = "corpus")]
    patches: Option<PathBuf>,
    /// Corpus directory with the test references
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Baseline patch records to score alongside
    #[arg(long, requires = "corpus")]
    baseline: Option<PathBuf>,
    /// Project name for the report rows
    #[arg(long, default_value = "project")]
    project: String,
    #[command(flatten)]
    filter: FilterArgs,
    /// Write the report rows as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the report rows as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Domain(e.to_string()),
            _ => Failure::Usage(format!("config: {e}")),
        }
    }
}

fn set(cfg: &mut RunConfig, key: &str, value: Option<impl ToString>) -> Result<(), Failure> {
    match value {
        Some(v) => cfg.set(key, &v.to_string()).map_err(Failure::Usage),
        None => Ok(()),
    }
}

impl Hyper {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Failure> {
        set(cfg, "max_epochs", self.epochs)?;
        set(cfg, "hidden", self.hidden)?;
        set(cfg, "embed", self.embed)?;
        set(cfg, "learning_rate", self.learning_rate)?;
        set(cfg, "dropout", self.dropout)?;
        set(cfg, "minibatch_words", self.minibatch_words)?;
        set(cfg, "patience", self.patience)
    }
}

impl Decode {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Failure> {
        set(cfg, "threshold", self.threshold)?;
        set(cfg, "beam_size", self.beam)?;
        set(cfg, "max_len", self.max_len)?;
        set(cfg, "top_k", self.top_k)
    }
}

impl FilterArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), Failure> {
        set(cfg, "category", self.category.as_ref())?;
        set(cfg, "bugfix", self.bugfix.as_ref())
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg, "seed", cli.seed)?;
    set(&mut cfg, "jobs", cli.jobs)?;
    Ok(cfg)
}

/// CLI flags are applied before this; the environment wins over both.
fn finish(cfg: &mut RunConfig) -> Result<(), Failure> {
    cfg.apply_env()?;
    cfg.training().validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if cfg.decode.beam_size == 0 || cfg.decode.max_len == 0 {
        return Err(Failure::Usage("beam and max_len must be positive".into()));
    }
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return Err(Failure::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Domain(e.to_string()))?;
    }
    Ok(())
}

fn open_repo(cfg: &RunConfig) -> Result<GitRepo, Failure> {
    let path = cfg
        .repo_path
        .as_ref()
        .ok_or_else(|| Failure::Usage("no repository given (--repo or repo= in the config)".into()))?;
    GitRepo::open(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn print_counts(path: &Path) -> Result<(), Failure> {
    let text = pipeline::read_text(path)?;
    let rows = eval::read_counts_csv(&text).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    println!(
        "{:<12} {:<10} {:>7} {:>7} {:>7} {:>5} {:>5} {:>6} {:>6} {:>6}",
        "project", "system", "correct", "arg-inc", "incor", "NA", "n", "P", "R", "F1"
    );
    for r in rows {
        let [p, rec, f] = Metrics::from_counts(&r.counts).cells();
        let c = r.counts;
        println!(
            "{:<12} {:<10} {:>7} {:>7} {:>7} {:>5} {:>5} {:>6} {:>6} {:>6}",
            r.project,
            r.system,
            c.correct,
            c.arg_incorrect,
            c.incorrect,
            c.na,
            c.queries(),
            p,
            rec,
            f
        );
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs, cfg: &RunConfig) -> Result<(), Failure> {
    if let Some(counts) = &args.counts {
        return print_counts(counts);
    }
    let (Some(patches), Some(corpus)) = (&args.patches, &args.corpus) else {
        return Err(Failure::Usage("evaluate needs --counts, or --patches with --corpus".into()));
    };
    let mut rows = Vec::new();
    let mut add = |name: String, path: &Path| -> Result<f64, Failure> {
        let report: EvalReport = pipeline::evaluate_stage(corpus, path, cfg.filter)?;
        rows.push(ReportRow {
            project: name,
            filter: cfg.filter.label(),
            threshold: None,
            report,
        });
        Ok(pipeline::validity(&pipeline::read_patches(path)?))
    };
    let validity = add(args.project.clone(), patches)?;
    if let Some(b) = &args.baseline {
        add(format!("{}-baseline", args.project), b)?;
    }
    let table = pipeline::write_reports(&rows, args.csv.as_deref(), args.json.as_deref())?;
    print!("{table}");
    println!("validity {validity:.3}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Mine { repo, out, since, until } => {
            set(&mut cfg, "repo", repo.map(|p| p.display().to_string()))?;
            set(&mut cfg, "since", since)?;
            set(&mut cfg, "until", until)?;
            finish(&mut cfg)?;
            let repo = open_repo(&cfg)?;
            let opts = MineOptions {
                since: cfg.since,
                until: cfg.until,
            };
            let report = pipeline::mine_stage(&repo, opts, &out)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
        }
        Command::BuildCorpus {
            hunks,
            out,
            test_year,
            min_count,
        } => {
            set(&mut cfg, "test_year", test_year)?;
            set(&mut cfg, "min_count", min_count)?;
            finish(&mut cfg)?;
            let report = pipeline::corpus_stage(&hunks, cfg.test_year, cfg.min_count, &out)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
        }
        Command::Train { corpus, out, hyper } => {
            hyper.apply(&mut cfg)?;
            finish(&mut cfg)?;
            let s = pipeline::train_stage(&corpus, &cfg.training(), &out)?;
            println!("best epoch {} of {}", s.best_epoch, s.history.len());
            if let Some(reason) = s.aborted {
                println!("training stopped early: {reason}");
            }
        }
        Command::Generate {
            model,
            query_file,
            out,
            decode,
        } => {
            decode.apply(&mut cfg)?;
            finish(&mut cfg)?;
            let gens = pipeline::generate_stage(&model, &query_file, cfg.threshold, &cfg.decode, &out)?;
            let provided = gens.iter().filter(|g| g.patch.is_some()).count();
            println!("{provided} patches for {} queries", gens.len());
            for (reason, n) in eval::na_breakdown(&gens) {
                println!("NA {reason}: {n}");
            }
        }
        Command::Baseline { corpus, query_file, out } => {
            finish(&mut cfg)?;
            let gens = pipeline::baseline_stage(&corpus, &query_file, &out)?;
            let provided = gens.iter().filter(|g| g.patch.is_some()).count();
            println!("{provided} patches for {} queries", gens.len());
        }
        Command::Evaluate(args) => {
            args.filter.apply(&mut cfg)?;
            finish(&mut cfg)?;
            evaluate(&args, &cfg)?;
        }
        Command::Sweep {
            model,
            corpus,
            out,
            thresholds,
            filter,
            beam,
            max_len,
        } => {
            filter.apply(&mut cfg)?;
            set(&mut cfg, "beam_size", beam)?;
            set(&mut cfg, "max_len", max_len)?;
            finish(&mut cfg)?;
            let thresholds = thresholds.unwrap_or_else(eval::default_thresholds);
            let r = pipeline::sweep_stage(&model, &corpus, &thresholds, cfg.filter, &cfg.decode, &out)
                .map_err(|e| match e {
                    PipelineError::Invalid(m) => Failure::Usage(m),
                    e => e.into(),
                })?;
            println!("{:>9} {:>8} {:>11}", "threshold", "f1", "baseline_f1");
            for (t, rep) in &r.points {
                println!("{t:>9.2} {:>8.4} {:>11.4}", rep.f1, r.baseline.f1);
            }
        }
        Command::Selftest => {
            finish(&mut cfg)?;
            let checks = selftest::run();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Failure::Domain("selftest failed".into()));
            }
        }
        Command::Run {
            repo,
            out_dir,
            test_year,
            hyper,
            decode,
            filter,
        } => {
            set(&mut cfg, "repo", repo.map(|p| p.display().to_string()))?;
            set(&mut cfg, "output_dir", out_dir.map(|p| p.display().to_string()))?;
            set(&mut cfg, "test_year", test_year)?;
            hyper.apply(&mut cfg)?;
            decode.apply(&mut cfg)?;
            filter.apply(&mut cfg)?;
            finish(&mut cfg)?;
            let repo = open_repo(&cfg)?;
            let s = pipeline::run_all(&repo, &cfg)?;
            print!("{}", s.table);
            println!("validity {:.3}", s.validity);
        }
        Command::SynthRepo { out } => {
            finish(&mut cfg)?;
            let repo = synth::synthetic_repository(cfg.seed, &synth::RepoOptions::default());
            synth::write_git_repository(&repo, &out).map_err(|e| Failure::Domain(format!("{}: {e}", out.display())))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
