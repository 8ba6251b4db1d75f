use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pocf::bandit::{RidgeEstimator, RidgeOptions};
use pocf::builtins::BuiltinId;
use pocf::dataset::{sample_dataset, Dataset, FeedbackKind};
use pocf::expect::stream_rng;
use pocf::experiment::{gap_trend_check, read_csv_file, run_experiment, write_csv_file, ExperimentConfig, PolicyChoice};
use pocf::generators::{generate_game_with, load_game, GameFile, GeneratorKind, GeneratorParams, GeneratorSpec};
use pocf::oracle::{better_response_dynamics, enumerate_pure_ns, verify_builtin};
use pocf::policy::ExplorationPolicy;
use pocf::semi_bandit::SemiBanditEstimator;
use pocf::solver::{solve, AnyEstimator, SolverConfig, SolverMode};
use pocf::{GameSpec, JointAction};
use rand::Rng;

#[derive(Parser)]
#[command(name = "pocf", version, about = "Nash-stable coalition formation from offline data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Brute-force ground truth.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Write a random game to a JSON game file.
    MakeGame(MakeGameArgs),
    /// Sample an offline dataset as JSONL.
    Generate(GenerateArgs),
    /// Fit a confidence-bound estimator to a dataset.
    Fit(FitArgs),
    /// Optimize the surrogate gap of a fitted estimator.
    Solve(SolveArgs),
    /// Run a configured grid and write a results CSV.
    Experiment(ExperimentArgs),
    /// Check that the mean gap decreases with the dataset size.
    Trend(TrendArgs),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// List every pure Nash-stable joint action.
    Enumerate {
        #[arg(long)]
        game: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run better-response dynamics to a Nash-stable profile.
    Dynamics {
        #[arg(long)]
        game: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Starting joint action as JSON, e.g. `[[1],[1,2]]`; random when omitted.
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a builtin's Nash-stable set with its closed-form families.
    Certify {
        #[arg(long)]
        builtin: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MakeGameArgs {
    #[arg(long)]
    generator: GeneratorKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    actions_per_agent: Option<usize>,
    /// Store the generator description instead of the drawn parameters.
    #[arg(long)]
    lazy: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    game: String,
    /// `rand`, `one_rand`, `builtin:NAME`, or `paired` for a builtin's own policy.
    #[arg(long, default_value = "paired")]
    policy: String,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    feedback: FeedbackKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    feedback: FeedbackKind,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Accept semi-bandit records for a bandit fit by summing them.
    #[arg(long)]
    reduce_semi: bool,
    /// Average the two mirrored entries of each pair parameter.
    #[arg(long)]
    symmetrize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    est: PathBuf,
    #[arg(long)]
    game: String,
    /// Base solver settings as JSON or TOML; flags override them.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<SolverMode>,
    #[arg(long)]
    mc: Option<usize>,
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Defaults to the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrendArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn random_action(game: &GameSpec, seed: u64) -> Result<JointAction> {
    let mut rng = stream_rng(seed, 0);
    let idx: Vec<usize> = (0..game.n()).map(|i| rng.random_range(0..game.action_set(i).len())).collect();
    Ok(game.joint_action_from_indices(&idx)?)
}

fn resolve_policy(spec: &str, game: &GameSpec, paired: Option<ExplorationPolicy>) -> Result<ExplorationPolicy> {
    if spec == "paired" {
        return paired.context("`--policy paired` needs a builtin game; pass rand, one_rand or builtin:NAME");
    }
    Ok(PolicyChoice::parse(spec)?.resolve(game)?)
}

fn oracle(cmd: OracleCommand) -> Result<ExitCode> {
    match cmd {
        OracleCommand::Enumerate { game, out } => {
            let (g, _) = load_game(&game)?;
            let ns = enumerate_pure_ns(&g)?;
            emit(
                &serde_json::json!({ "game": game, "ns_count": ns.len(), "profiles": ns }),
                out.as_deref(),
            )?;
        }
        OracleCommand::Dynamics { game, seed, start, out } => {
            let (g, _) = load_game(&game)?;
            let a0 = match start {
                Some(s) => serde_json::from_str(&s).context("parsing --start")?,
                None => random_action(&g, seed)?,
            };
            let trace = better_response_dynamics(&g, &a0, &mut stream_rng(seed, 1))?;
            let stable = g.is_nash_stable(&trace.terminal)?;
            emit(
                &serde_json::json!({ "game": game, "seed": seed, "terminal_is_nash_stable": stable, "trace": trace }),
                out.as_deref(),
            )?;
        }
        OracleCommand::Certify { builtin, out } => {
            let cert = verify_builtin(builtin.parse::<BuiltinId>()?)?;
            emit(&cert, out.as_deref())?;
            if !cert.pass {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn make_game(args: MakeGameArgs) -> Result<()> {
    let params = GeneratorParams {
        actions_per_agent: args.actions_per_agent,
    };
    let file = if args.lazy {
        let file = GameFile {
            n: args.n,
            k: args.k,
            action_sets: None,
            generator: Some(GeneratorSpec {
                kind: args.generator,
                params,
                seed: args.seed,
            }),
            mean_table: None,
            model: None,
        };
        file.build()?;
        file
    } else {
        GameFile::from_game(&generate_game_with(args.generator, args.n, args.k, &params, args.seed, None)?)
    };
    emit(&file, args.out.as_deref())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let (game, paired) = load_game(&args.game)?;
    let policy = resolve_policy(&args.policy, &game, paired)?;
    let ds = sample_dataset(&game, &policy, args.m, args.feedback, args.seed)?;
    ds.write_jsonl(&args.out)?;
    eprintln!("wrote {} records to {}", ds.len(), args.out.display());
    Ok(())
}

fn fit(args: FitArgs) -> Result<()> {
    let ds = Dataset::read_jsonl(&args.dataset)?;
    let est = match args.feedback {
        FeedbackKind::Semi => AnyEstimator::Semi(SemiBanditEstimator::fit(&ds, args.delta)?),
        FeedbackKind::Bandit => AnyEstimator::Bandit(RidgeEstimator::fit_with(
            &ds,
            args.delta,
            RidgeOptions {
                reduce_semi: args.reduce_semi,
                symmetrize: args.symmetrize,
            },
        )?),
    };
    emit(&est, Some(&args.out))
}

fn solve_cmd(args: SolveArgs) -> Result<()> {
    let est: AnyEstimator = serde_json::from_str(&read_text(&args.est)?).context("parsing estimator")?;
    let (game, _) = load_game(&args.game)?;
    let mut cfg = match &args.config {
        Some(p) => {
            let text = read_text(p)?;
            if text.trim_start().starts_with('{') {
                serde_json::from_str(&text)?
            } else {
                toml::from_str(&text)?
            }
        }
        None => SolverConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(mc) = args.mc {
        cfg.mc_samples = mc;
    }
    if let Some(s) = args.stop {
        cfg.stop_threshold = s;
    }
    if let Some(r) = args.max_rounds {
        cfg.max_rounds = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let report = solve(&est, &game, &cfg)?;
    emit(&report, args.out.as_deref())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::read(&args.config)?;
    let Some(out) = args.out.or_else(|| cfg.output.clone()) else {
        bail!("no output path: pass --out or set `output` in the config");
    };
    let rows = run_experiment(&cfg)?;
    write_csv_file(&rows, &out)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("wrote {} rows ({failed} with errors) to {}", rows.len(), out.display());
    Ok(())
}

fn trend(args: TrendArgs) -> Result<()> {
    let rows = read_csv_file(&args.csv)?;
    let report = gap_trend_check(&rows, args.generator.as_deref(), args.policy.as_deref())?;
    emit(&report, args.out.as_deref())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Oracle(cmd) => return oracle(cmd),
        Command::MakeGame(a) => make_game(a)?,
        Command::Generate(a) => generate(a)?,
        Command::Fit(a) => fit(a)?,
        Command::Solve(a) => solve_cmd(a)?,
        Command::Experiment(a) => experiment(a)?,
        Command::Trend(a) => trend(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
