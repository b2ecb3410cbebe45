use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use rl4mt::advice::{compile_opinion, AdviceList, AdviceScale, DiscountSpec};
use rl4mt::engine::{Engine, TrainerConfig};
use rl4mt::experiments::config::load_sweep;
use rl4mt::experiments::report::{regenerate, write_sweep};
use rl4mt::experiments::{oracle_advice, sweep, AgentKind};
use rl4mt::format::write_atomic;
use rl4mt::gridworld::GridMap;
use rl4mt::policy::{compile_advice, shape_with_advice, Policy, UncertaintySource};

const SEED_ENV: &str = "RL4MT_SEED";

#[derive(Parser)]
#[command(name = "rl4mt", version, about = "Policy-shaped reinforcement learning on frozen-lake grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random solvable map.
    GenMap(GenMapArgs),
    /// Compile an advice file into opinions.
    CompileAdvice(CompileAdviceArgs),
    /// Train one agent and save its log and final policy.
    Train(TrainArgs),
    /// Run a parameter sweep described by a TOML file.
    Sweep(SweepArgs),
    /// Recompute summaries, t-tests and charts from a sweep directory.
    Report(ReportArgs),
    /// Follow the most probable rule from Start and save the rule names.
    ExtractPlan(ExtractPlanArgs),
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1)"))
    }
}

fn parse_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_cell(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a cell index"));
    Ok((parse(x)?, parse(y)?))
}

#[derive(Args)]
struct GenMapArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    width: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
    #[arg(long, value_parser = parse_ratio)]
    hole_ratio: f64,
    #[arg(long, env = SEED_ENV)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// How advice uncertainty is set: one value, or discounted by distance from
/// the advisor.
#[derive(Args)]
struct UncertaintyArgs {
    /// Uncertainty applied to every advice.
    #[arg(long, value_parser = parse_unit, conflicts_with = "advisor")]
    uncertainty: Option<f64>,
    /// Advisor cell X,Y; uncertainty then grows with Manhattan distance.
    #[arg(long, value_parser = parse_cell, requires_all = ["max_uncertainty", "max_distance"])]
    advisor: Option<(usize, usize)>,
    /// Uncertainty at the maximum distance.
    #[arg(long, value_parser = parse_unit, requires = "advisor")]
    max_uncertainty: Option<f64>,
    /// Distance at which the maximum uncertainty is reached.
    #[arg(long, requires = "advisor")]
    max_distance: Option<f64>,
    /// Fraction of the maximum distance past which uncertainty saturates.
    #[arg(long, requires = "advisor")]
    threshold: Option<f64>,
}

impl UncertaintyArgs {
    fn is_set(&self) -> bool {
        self.uncertainty.is_some() || self.advisor.is_some()
    }

    fn source(&self) -> Result<UncertaintySource> {
        match (self.uncertainty, self.advisor, self.max_uncertainty, self.max_distance) {
            (_, Some(advisor), Some(u_max), Some(delta_max)) => Ok(UncertaintySource::Distance {
                spec: DiscountSpec::new(u_max, delta_max, self.threshold)?,
                advisor,
            }),
            (u, ..) => Ok(UncertaintySource::Fixed(u.unwrap_or(0.0))),
        }
    }
}

#[derive(Args)]
struct CompileAdviceArgs {
    #[arg(long)]
    advice: PathBuf,
    /// Map used to check that every advised cell exists.
    #[arg(long)]
    map: Option<PathBuf>,
    #[command(flatten)]
    uncertainty: UncertaintyArgs,
    /// Number of actions the base rate is spread over.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    actions: u32,
    /// Length of the advice scale (odd).
    #[arg(long, default_value_t = 5)]
    scale: u32,
    /// Output CSV; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    map: PathBuf,
    /// Advice file; implies the advised agent.
    #[arg(long, conflicts_with = "oracle")]
    advice: Option<PathBuf>,
    /// Use the built-in oracle advisor with this quota (1.0 or 0.2).
    #[arg(long)]
    oracle: Option<f64>,
    #[command(flatten)]
    uncertainty: UncertaintyArgs,
    /// random, unadvised or advised; defaults to advised when advice is given.
    #[arg(long)]
    agent: Option<AgentKind>,
    #[arg(long, default_value_t = 5)]
    scale: u32,
    #[arg(long, default_value_t = TrainerConfig::default().episodes)]
    episodes: usize,
    #[arg(long, default_value_t = TrainerConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = TrainerConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = TrainerConfig::default().max_steps)]
    max_steps: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Directory for training_log.csv and policy.txt.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the config's `jobs`, then available parallelism.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Overrides the config's base seed.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory written by `sweep`.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct ExtractPlanArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = TrainerConfig::default().max_steps)]
    max_steps: usize,
    /// Output file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    write_atomic(path, contents.as_bytes()).with_context(|| format!("cannot write {}", path.display()))
}

fn load_map(path: &Path) -> Result<GridMap> {
    GridMap::parse(&read(path)?).with_context(|| format!("invalid map {}", path.display()))
}

fn load_advice(path: &Path) -> Result<AdviceList> {
    AdviceList::parse(&read(path)?).with_context(|| format!("invalid advice file {}", path.display()))
}

fn gen_map(args: GenMapArgs) -> Result<()> {
    let map = GridMap::generate(args.width as usize, args.height as usize, args.hole_ratio, args.seed)?;
    write(&args.out, &map.render())?;
    let path = map.shortest_safe_path_len().context("generated map has no safe path")?;
    println!("holes: {}", map.hole_count());
    println!("safe path from start to goal: yes (length {path})");
    Ok(())
}

fn compile(args: CompileAdviceArgs) -> Result<()> {
    let list = load_advice(&args.advice)?;
    let scale = AdviceScale::new(args.scale)?;
    let source = args.uncertainty.source()?;
    let actions = args.actions as usize;
    let rows: Vec<_> = match &args.map {
        Some(path) => compile_advice(&load_map(path)?, &list, scale, &source, actions)?
            .into_iter()
            .map(|(_, adv, op)| (adv, op))
            .collect(),
        None => list
            .iter()
            .map(|adv| Ok((*adv, compile_opinion(adv, scale, source.uncertainty_for(adv)?, actions)?)))
            .collect::<Result<_>>()?,
    };
    let mut out = String::from("x,y,v,b,d,u,a\n");
    for (adv, op) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            adv.x,
            adv.y,
            adv.value,
            op.belief(),
            op.disbelief(),
            op.uncertainty(),
            op.base_rate()
        ));
    }
    match &args.out {
        Some(path) => write(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let has_advice = args.advice.is_some() || args.oracle.is_some();
    let agent = args
        .agent
        .unwrap_or(if has_advice { AgentKind::Advised } else { AgentKind::Unadvised });
    if agent == AgentKind::Advised && !has_advice {
        return Err(Failure::Usage("--agent advised needs --advice or --oracle".into()));
    }
    if agent != AgentKind::Advised && (has_advice || args.uncertainty.is_set()) {
        return Err(Failure::Usage(format!(
            "--advice, --oracle and uncertainty flags only apply to the advised agent, not {agent}"
        )));
    }
    let cfg = TrainerConfig {
        alpha: args.alpha,
        gamma: args.gamma,
        episodes: args.episodes,
        max_steps: args.max_steps,
        seed: args.seed,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let scale = AdviceScale::new(args.scale).map_err(|e| Failure::Usage(e.to_string()))?;

    let map = load_map(&args.map)?;
    let engine = Engine::grid_world(map.clone());
    let uniform = engine.uniform_policy().map_err(anyhow::Error::from)?;
    let initial = if agent == AgentKind::Advised {
        let list = match (&args.advice, args.oracle) {
            (Some(path), _) => load_advice(path)?,
            (None, Some(quota)) => oracle_advice(&map, quota).map_err(anyhow::Error::from)?,
            (None, None) => unreachable!("checked above"),
        };
        let source = args.uncertainty.source()?;
        shape_with_advice(&uniform, &map, &list, scale, &source).map_err(anyhow::Error::from)?
    } else {
        uniform
    };
    let (policy, log) = if agent == AgentKind::Random {
        engine.simulate(initial, &cfg)
    } else {
        engine.train(initial, &cfg)
    }
    .map_err(anyhow::Error::from)?;

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write(&args.out.join("training_log.csv"), &log.to_csv())?;
    write(&args.out.join("policy.txt"), &policy.to_text())?;
    println!("agent: {agent}");
    println!("cumulative reward: {}", log.cumulative_reward());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let plan = load_sweep(&args.config)?;
    let base_seed = args.seed.unwrap_or(plan.base_seed);
    let jobs = args
        .jobs
        .map(|j| j as usize)
        .or(plan.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = sweep(&plan.configs, base_seed, jobs)?;
    write_sweep(&args.out, &plan.configs, &result, base_seed)?;
    for report in &result.reports {
        println!("{}: mean cumulative reward {:.3}", report.label, report.mean_total());
    }
    println!("wrote {} configurations to {}", result.reports.len(), args.out.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let stored = regenerate(&args.dir)?;
    for s in &stored {
        let mean = s.totals.iter().sum::<f64>() / s.totals.len() as f64;
        println!("{}: mean cumulative reward {mean:.3}", s.label);
    }
    Ok(())
}

fn extract_plan(args: ExtractPlanArgs) -> Result<()> {
    let map = load_map(&args.map)?;
    let policy = Policy::from_text(&read(&args.policy)?)
        .with_context(|| format!("invalid policy {}", args.policy.display()))?;
    let engine = Engine::grid_world(map);
    let plan = engine.extract_plan(&policy, args.max_steps)?;
    let text = plan.to_text();
    match &args.out {
        Some(path) => {
            write(path, &text)?;
            println!("goal reached: {} ({} rules)", plan.goal_reached, plan.rules.len());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenMap(a) => gen_map(a).map_err(Failure::from),
        Command::CompileAdvice(a) => compile(a).map_err(Failure::from),
        Command::Train(a) => train(a),
        Command::Sweep(a) => run_sweep(a).map_err(Failure::from),
        Command::Report(a) => report(a).map_err(Failure::from),
        Command::ExtractPlan(a) => extract_plan(a).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
