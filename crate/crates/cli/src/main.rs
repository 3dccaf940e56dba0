use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};

use curriculum::corpus::{self, Dataset, Format};
use curriculum::eval::{self, BucketBy};
use curriculum::formats::{self, write_atomic};
use curriculum::pacing::{
    PacingConfig, PacingKind, DEFAULT_CL_FRACTION, DEFAULT_DELTA, DEFAULT_STEP_GROUPS,
};
use curriculum::scheduler::{self, BatchSchedule, PairMode, ScheduleConfig, ToyLearner};
use curriculum::scoring::{
    self, CorrelationMethod, ScorerKind, ScoringResources, DEFAULT_NOISE_PHRASES,
};
use curriculum::textproc::{self, Bm25Params, DEFAULT_WORD_CAP};
use curriculum::Scalar;

#[derive(Parser, Debug)]
#[command(
    name = "curriculum",
    version,
    about = "Curriculum learning toolkit for response ranking data"
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Dataset format; inferred from the file extension when omitted.
    #[arg(long, global = true, value_enum)]
    format: Option<DataFormat>,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DataFormat {
    Jsonl,
    Tsv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Descriptive statistics of a dataset, as JSON.
    Stats {
        #[arg(long)]
        data: PathBuf,
    },
    /// Report instances that violate the data invariants.
    Validate {
        #[arg(long)]
        data: PathBuf,
    },
    /// Score instances by difficulty; writes `id<TAB>score`, easiest first.
    Score(ScoreArgs),
    /// Build a curriculum batch schedule from a score file.
    Schedule(ScheduleArgs),
    /// Train the built-in toy ranker on a schedule.
    Simulate(SimulateArgs),
    /// MAP of a run, optionally with a paired t-test against a baseline run.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Aligned text table instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Error analysis and scorer diagnostics.
    #[command(subcommand)]
    Analyze(Analyze),
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long, value_parser = parse_scorer)]
    scorer: ScorerKind,
    #[arg(long)]
    data: PathBuf,
    /// word2vec text file, required by sigma_sm.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// `id<TAB>candidate<TAB>probability` file, required by model_pred and model_loss.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
    word_cap: usize,
    #[arg(long, default_value_t = 1.5)]
    k1: Scalar,
    #[arg(long, default_value_t = 0.75)]
    b: Scalar,
    #[arg(long, default_value_t = 0.25)]
    epsilon: Scalar,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long, value_parser = parse_pacing)]
    pacing: PacingKind,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: Scalar,
    /// Total number of training steps (batches).
    #[arg(long)]
    steps: u64,
    /// Share of the steps after which the whole set is available.
    #[arg(long, default_value_t = DEFAULT_CL_FRACTION)]
    cl_fraction: Scalar,
    #[arg(long, default_value_t = 1.0)]
    n: Scalar,
    /// Group count for the step pacing function.
    #[arg(long, default_value_t = DEFAULT_STEP_GROUPS)]
    groups: usize,
    #[arg(long)]
    batch: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    /// Dev set for periodic MAP; the training data when omitted.
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    eval_every: usize,
    #[arg(long, value_enum, default_value_t = PairModeArg::Instance)]
    pair_mode: PairModeArg,
    /// Also write the trained model's dev scores as a run file.
    #[arg(long)]
    run_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairModeArg {
    Instance,
    #[value(name = "balanced_pairs")]
    BalancedPairs,
}

#[derive(Subcommand, Debug)]
enum Analyze {
    /// MAP per bucket of turns, domain or difficulty.
    Buckets {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        by: ByArg,
        /// Score file, required for difficulty buckets.
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        text: bool,
    },
    /// Correlation matrix between score files, as CSV.
    Correlation {
        #[arg(long = "scores", required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = MethodArg::Spearman)]
        method: MethodArg,
    },
    /// Share of boilerplate-only instances among the easiest ones.
    Noisy {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        /// Newline-delimited phrase list; a built-in list when omitted.
        #[arg(long)]
        phrases: Option<PathBuf>,
        #[arg(long, default_value_t = 0.33)]
        fraction: Scalar,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ByArg {
    Turns,
    Domain,
    Difficulty,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Spearman,
    Pearson,
}

fn parse_scorer(s: &str) -> Result<ScorerKind, String> {
    s.parse().map_err(|e: curriculum::Error| e.to_string())
}

fn parse_pacing(s: &str) -> Result<PacingKind, String> {
    s.parse().map_err(|e: curriculum::Error| e.to_string())
}

/// Usage errors exit with 1, data errors with 2.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<curriculum::Error> for Failure {
    fn from(e: curriculum::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(anyhow!("{msg}"))
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    seed: u64,
    format: Option<DataFormat>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn load(&self, path: &Path) -> Result<Dataset, Failure> {
        let format = match self.format {
            Some(DataFormat::Jsonl) => Format::Jsonl,
            Some(DataFormat::Tsv) => Format::Tsv,
            None if path.extension().is_some_and(|e| e == "tsv") => Format::Tsv,
            None => Format::Jsonl,
        };
        corpus::load_dataset(path, format)
            .with_context(|| format!("loading {}", path.display()))
            .map_err(Failure::Data)
    }

    fn emit(&self, content: &str) -> CmdResult {
        match &self.out {
            Some(path) => write_atomic(path, content.as_bytes())
                .with_context(|| format!("writing {}", path.display()))?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(content.as_bytes())
                    .and_then(|_| stdout.flush())
                    .context("writing to stdout")?;
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let ctx = Ctx {
        seed: cli.seed,
        format: cli.format,
        out: cli.out,
    };
    let result = match cli.command {
        Command::Stats { data } => stats(&ctx, &data),
        Command::Validate { data } => validate(&ctx, &data),
        Command::Score(args) => score(&ctx, args),
        Command::Schedule(args) => schedule(&ctx, args),
        Command::Simulate(args) => simulate(&ctx, args),
        Command::Evaluate {
            data,
            run,
            baseline,
            text,
        } => evaluate(&ctx, &data, &run, baseline.as_deref(), text),
        Command::Analyze(a) => analyze(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn stats(ctx: &Ctx, data: &Path) -> CmdResult {
    let d = ctx.load(data)?;
    let s = corpus::dataset_stats::<Scalar>(&d)?;
    ctx.emit(&(serde_json::to_string_pretty(&s).context("encoding stats")? + "\n"))
}

fn validate(ctx: &Ctx, data: &Path) -> CmdResult {
    let d = ctx.load(data)?;
    let violations = corpus::validate(&d);
    let mut out = String::new();
    for v in &violations {
        out.push_str(&format!("{}\t{}\n", v.instance_id, v.rule));
    }
    eprintln!("{} instance(s), {} violation(s)", d.len(), violations.len());
    ctx.emit(&out)
}

fn score(ctx: &Ctx, args: ScoreArgs) -> CmdResult {
    match args.scorer {
        ScorerKind::SigmaSm if args.embeddings.is_none() => {
            return Err(usage("--scorer sigma_sm requires --embeddings"))
        }
        ScorerKind::ModelPred | ScorerKind::ModelLoss if args.predictions.is_none() => {
            return Err(usage(format!(
                "--scorer {} requires --predictions",
                args.scorer
            )))
        }
        _ => {}
    }
    if args.word_cap == 0 {
        return Err(usage("--word-cap must be at least 1"));
    }
    let params = Bm25Params {
        k1: args.k1,
        b: args.b,
        epsilon: args.epsilon,
    };

    let d = ctx.load(&args.data)?;
    let embeddings = match (&args.embeddings, args.scorer) {
        (Some(p), ScorerKind::SigmaSm) => Some(textproc::load_embeddings::<Scalar>(p)?),
        _ => None,
    };
    let predictions = match (&args.predictions, args.scorer) {
        (Some(p), ScorerKind::ModelPred | ScorerKind::ModelLoss) => {
            Some(scoring::load_predictions::<Scalar>(p)?)
        }
        _ => None,
    };
    let index = match args.scorer {
        ScorerKind::SigmaBm25 => Some(scoring::response_index(&d, params)?),
        _ => None,
    };
    let res = ScoringResources {
        embeddings: embeddings.as_ref(),
        bm25: index.as_ref(),
        predictions: predictions.as_ref(),
        word_cap: args.word_cap,
        seed: ctx.seed,
    };
    let scored = scoring::score_dataset(&d, args.scorer, &res)?;
    ctx.emit(&formats::scores_to_tsv(&scored))
}

fn schedule(ctx: &Ctx, args: ScheduleArgs) -> CmdResult {
    if args.steps == 0 {
        return Err(usage("--steps must be positive"));
    }
    if !(args.cl_fraction > 0.0 && args.cl_fraction <= 1.0) {
        return Err(usage("--cl-fraction must lie in (0, 1]"));
    }
    let t = PacingConfig::<Scalar>::cl_steps_for(args.steps, args.cl_fraction);
    let pacing = PacingConfig::new(args.pacing, args.delta, t)
        .and_then(|p| p.with_n(args.n))
        .and_then(|p| p.with_groups(args.groups))
        .map_err(usage)?;
    let cfg = ScheduleConfig::new(args.batch, args.steps, ctx.seed, pacing).map_err(usage)?;

    let scored = formats::load_scores::<Scalar>(&args.scores)?;
    let sched = scheduler::build_schedule(&scored, &cfg)?;
    ctx.emit(&formats::schedule_to_jsonl(&sched.batches)?)
}

fn simulate(ctx: &Ctx, args: SimulateArgs) -> CmdResult {
    let pair_mode = match args.pair_mode {
        PairModeArg::Instance => PairMode::Instance,
        PairModeArg::BalancedPairs => PairMode::BalancedPairs,
    };
    let d = ctx.load(&args.data)?;
    let dev = match &args.dev {
        Some(p) => ctx.load(p)?,
        None => d.clone(),
    };
    let batches = formats::load_schedule(&args.schedule)?;
    if batches.is_empty() {
        return Err(Failure::Data(anyhow!(
            "{}: empty schedule",
            args.schedule.display()
        )));
    }
    // pacing is already baked into the batches; only seed and pair mode matter here
    let config = ScheduleConfig {
        batch_size: batches[0].ids.len().max(1),
        total_steps: batches.len() as u64,
        seed: ctx.seed,
        pacing: PacingConfig::baseline(),
        pair_mode,
    };
    let schedule = BatchSchedule { config, batches };
    let mut learner = ToyLearner::<Scalar>::from_dataset(&d)?;
    let log = scheduler::run(&schedule, &d, &mut learner, &dev, args.eval_every)?;
    if let Some(path) = &args.run_out {
        write_atomic(path, learner.run_scores(&dev).to_tsv().as_bytes())?;
    }
    ctx.emit(&log.to_csv())
}

fn render(report: &eval::EvalReport<Scalar>, text: bool) -> Result<String, Failure> {
    if text {
        Ok(report.to_table())
    } else {
        Ok(serde_json::to_string_pretty(report).context("encoding report")? + "\n")
    }
}

fn evaluate(ctx: &Ctx, data: &Path, run: &Path, baseline: Option<&Path>, text: bool) -> CmdResult {
    let d = ctx.load(data)?;
    let run = eval::load_run::<Scalar>(run)?;
    let report = match baseline {
        Some(b) => eval::compare_runs(&d, &run, &eval::load_run(b)?)?,
        None => eval::evaluate(&d, &run)?,
    };
    ctx.emit(&render(&report, text)?)
}

fn analyze(ctx: &Ctx, a: Analyze) -> CmdResult {
    match a {
        Analyze::Buckets {
            data,
            run,
            by,
            scores,
            text,
        } => {
            let by = match by {
                ByArg::Turns => BucketBy::Turns,
                ByArg::Domain => BucketBy::Domain,
                ByArg::Difficulty => BucketBy::Difficulty,
            };
            if by == BucketBy::Difficulty && scores.is_none() {
                return Err(usage("--by difficulty requires --scores"));
            }
            let d = ctx.load(&data)?;
            let run = eval::load_run::<Scalar>(&run)?;
            let scored = scores.map(formats::load_scores::<Scalar>).transpose()?;
            let report = eval::bucket_report(&d, &run, by, scored.as_ref())?;
            ctx.emit(&render(&report, text)?)
        }
        Analyze::Correlation { scores, method } => {
            let method = match method {
                MethodArg::Spearman => CorrelationMethod::Spearman,
                MethodArg::Pearson => CorrelationMethod::Pearson,
            };
            let scored = scores
                .iter()
                .map(formats::load_scores::<Scalar>)
                .collect::<Result<Vec<_>, _>>()?;
            let m = scoring::correlation_matrix(&scored, method)?;
            ctx.emit(&m.to_csv())
        }
        Analyze::Noisy {
            data,
            scores,
            phrases,
            fraction,
        } => {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(usage("--fraction must lie in (0, 1]"));
            }
            let phrases = match phrases {
                Some(p) => scoring::load_phrases(p)?,
                None => DEFAULT_NOISE_PHRASES
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            };
            let d = ctx.load(&data)?;
            let scored = formats::load_scores::<Scalar>(&scores)?;
            let rate = scoring::noisy_rate(&d, &scored, fraction, &phrases)?;
            ctx.emit(&format!("{rate}\n"))
        }
    }
}
