//! `stance`: generate networks, run single simulations, sweep the experiment
//! grid and locate tipping points.

mod config;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use stance_core::io::{
    read_edge_list, read_summary_csv, write_edge_list, write_runs_jsonl, write_summary_csv, write_trajectory_csv,
};
use stance_core::{
    detect_tipping_point, generate_scale_free, run_cell, run_on_network, sweep_with, tipping_curve, tradeoff_scenario,
    Cell, ExperimentGrid, ModelParams, PerturbationStrategy, Recording, RunSettings, SelectionStrategy, SweepResult,
    Trajectory,
};

use config::{parse_field, parse_levels, parse_list, parse_sizes, ConfigFile};

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 2.
    Usage(String),
    /// Failure while doing the work; exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Runtime(e.into())
}

#[derive(Parser)]
#[command(
    name = "stance",
    version,
    about = "Stance perturbation on scale-free influence networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a preferential-attachment network as an edge list.
    Generate(GenerateArgs),
    /// Run one simulation.
    Run(RunArgs),
    /// Run the factorial experiment grid.
    Sweep(SweepArgs),
    /// Locate tipping points in sweep results.
    Tip(TipArgs),
    /// Single max-influence Confederate using the conversion strategy.
    Tradeoff(TradeoffArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Edges attached per new node.
    #[arg(long, default_value_t = stance_core::experiment::DEFAULT_ATTACH)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "network.edges")]
    out: PathBuf,
}

/// Flags shared by every simulating command. Unset flags fall back to the
/// config file, then to built-in defaults.
#[derive(Args, Default)]
struct SharedArgs {
    /// Flat `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Record and write per-step trajectories.
    #[arg(long)]
    trajectories: bool,
    /// anchored | incremental
    #[arg(long)]
    stance_form: Option<String>,
    /// sparse | dense
    #[arg(long)]
    edge_mask: Option<String>,
    /// Conservative threshold on raw influence.
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    self_weight: Option<f64>,
    /// Stance coupling multiplier on susceptibility.
    #[arg(long)]
    alpha: Option<f64>,
    /// Homophily rate.
    #[arg(long)]
    lambda: Option<f64>,
    /// Cascade ego-network size as a fraction of non-Confederates.
    #[arg(long)]
    m_frac: Option<f64>,
    #[arg(long)]
    conv_window: Option<usize>,
    #[arg(long)]
    conv_tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Edges attached per new node in generated networks.
    #[arg(long)]
    attach: Option<usize>,
    /// Share networks and susceptibilities across arms of a replicate.
    #[arg(long)]
    paired: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Percentage of agents that are Confederates.
    #[arg(long)]
    pct: f64,
    #[arg(long, default_value = "max-influence")]
    selection: String,
    #[arg(long, default_value = "cascade")]
    perturbation: String,
    /// Edge list to run on instead of a generated network.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    replicate: usize,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args, Default)]
struct GridArgs {
    /// Sizes: `a,b,c`, `lo..hi` (step 10) or `lo..hi:step`.
    #[arg(long)]
    sizes: Option<String>,
    /// Percentages: `a,b,c`, `lo..hi` (step 5) or `lo..hi:step`.
    #[arg(long)]
    pcts: Option<String>,
    #[arg(long)]
    selections: Option<String>,
    #[arg(long)]
    perturbations: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct TipArgs {
    /// Summary CSV from `sweep`. Without it a sweep is run inline, by default
    /// over n = 80, 5..40%, max-influence selection.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Only report this network size.
    #[arg(long)]
    n: Option<usize>,
    /// Only report this selection strategy.
    #[arg(long)]
    selection: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct TradeoffArgs {
    #[arg(long, default_value_t = 80)]
    n: usize,
    #[command(flatten)]
    shared: SharedArgs,
}

/// Fully resolved settings for a simulating command.
struct Resolved {
    cfg: ConfigFile,
    settings: RunSettings,
    seed: u64,
    out: PathBuf,
    workers: usize,
    trajectories: bool,
}

fn resolve(shared: &SharedArgs) -> Result<Resolved, CliError> {
    let cfg = match &shared.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut p = ModelParams::default();
    if let Some(v) = cfg.pick(shared.alpha, "alpha")? {
        p.alpha = v;
    }
    if let Some(v) = cfg.pick(shared.lambda, "lambda")? {
        p.lambda = v;
    }
    p.theta = cfg.pick(shared.theta, "theta")?;
    if let Some(v) = cfg.pick(shared.m_frac, "m_frac")? {
        p.m_frac = v;
    }
    if let Some(v) = cfg.pick(shared.conv_window, "conv_window")? {
        p.conv_window = v;
    }
    if let Some(v) = cfg.pick(shared.conv_tol, "conv_tol")? {
        p.conv_tol = v;
    }
    if let Some(v) = cfg.pick(shared.max_steps, "max_steps")? {
        p.max_steps = v;
    }
    if let Some(v) = cfg.pick(shared.stance_form.clone(), "stance_form")? {
        p.stance_form = parse_field("stance_form", &v)?;
    }
    if let Some(v) = cfg.pick(shared.edge_mask.clone(), "edge_mask")? {
        p.edge_mask = parse_field("edge_mask", &v)?;
    }
    if let Some(v) = cfg.pick(shared.self_weight, "self_weight")? {
        p.self_weight = v;
    }
    p.validate().map_err(usage)?;

    let attach = cfg
        .pick(shared.attach, "attach")?
        .unwrap_or(stance_core::experiment::DEFAULT_ATTACH);
    if attach < 1 {
        return Err(usage("attach: must be >= 1"));
    }
    let workers = cfg.pick(shared.workers, "workers")?.unwrap_or_else(default_workers);
    if workers < 1 {
        return Err(usage("workers: must be >= 1"));
    }
    let trajectories = cfg.switch(shared.trajectories, "trajectories")?;
    Ok(Resolved {
        settings: RunSettings {
            params: p,
            attach,
            paired: cfg.switch(shared.paired, "paired")?,
            recording: if trajectories {
                Recording::Full
            } else {
                Recording::Summary
            },
        },
        seed: cfg.pick(shared.seed, "seed")?.unwrap_or(1),
        out: cfg
            .pick(shared.out.clone(), "out")?
            .unwrap_or_else(|| PathBuf::from("out")),
        workers,
        trajectories,
        cfg,
    })
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Grid from flags, then config file, then `fallback`.
fn resolve_grid(args: &GridArgs, r: &Resolved, fallback: ExperimentGrid) -> Result<ExperimentGrid, CliError> {
    let cfg = &r.cfg;
    let mut grid = ExperimentGrid {
        base_seed: r.seed,
        ..fallback
    };
    if let Some(v) = cfg.pick(args.sizes.clone(), "sizes")? {
        grid.sizes = parse_sizes(&v)?;
    }
    if let Some(v) = cfg.pick(args.pcts.clone(), "pcts")? {
        grid.pcts = parse_levels("pcts", &v, 5.0)?;
    }
    if let Some(v) = cfg.pick(args.selections.clone(), "selections")? {
        grid.selections = parse_list("selections", &v)?;
    }
    if let Some(v) = cfg.pick(args.perturbations.clone(), "perturbations")? {
        grid.perturbations = parse_list("perturbations", &v)?;
    }
    if let Some(v) = cfg.pick(args.replicates, "replicates")? {
        grid.replicates = v;
    }
    grid.validate().map_err(usage)?;
    Ok(grid)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(runtime)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(runtime)
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let mut file = create_file(path)?;
    write_trajectory_csv(traj, &mut file).map_err(runtime)?;
    file.flush().map_err(runtime)
}

fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let adj = generate_scale_free(args.n, args.m, args.seed).map_err(usage)?;
    let mut file = create_file(&args.out)?;
    write_edge_list(&adj, &mut file).map_err(runtime)?;
    file.flush().map_err(runtime)?;
    println!(
        "{} nodes, {} edges -> {}",
        adj.n(),
        adj.edges().len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let r = resolve(&args.shared)?;
    let selection: SelectionStrategy = parse_field("selection", &args.selection)?;
    let perturbation: PerturbationStrategy = parse_field("perturbation", &args.perturbation)?;
    if !(args.pct > 0.0 && args.pct <= 100.0) {
        return Err(usage(format!(
            "pct: must lie in (0, 100] so that at least one Confederate exists, got {}",
            args.pct
        )));
    }

    let network = match &args.network {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            Some(read_edge_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?)
        }
        None => None,
    };
    let n = match (args.n, &network) {
        (Some(n), Some(adj)) if n != adj.n() => {
            return Err(usage(format!("n: {n} disagrees with the network's {} agents", adj.n())));
        }
        (_, Some(adj)) => adj.n(),
        (Some(n), None) => n,
        (None, None) => return Err(usage("n: required unless --network is given")),
    };
    if n < 2 {
        return Err(usage("n: must be >= 2"));
    }
    let cell = Cell {
        n,
        pct: args.pct,
        selection,
        perturbation,
    };
    if cell.confederate_count() >= n {
        return Err(usage(format!(
            "pct: {} Confederates leave no other agents",
            cell.confederate_count()
        )));
    }

    let record = match &network {
        Some(adj) => run_on_network(adj, &cell, args.replicate, r.seed, &r.settings),
        None => run_cell(&cell, args.replicate, r.seed, &r.settings),
    }
    .context("simulation failed")?;

    create_dir(&r.out)?;
    let summary = serde_json::to_string_pretty(&record.summary()).map_err(runtime)?;
    fs::write(r.out.join("summary.json"), format!("{summary}\n")).context("writing summary.json")?;
    if let Some(traj) = &record.trajectory {
        write_trajectory(&r.out.join("trajectory.csv"), traj)?;
    }
    println!("{summary}");
    Ok(())
}

fn trajectory_name(cell: &Cell, replicate: usize) -> String {
    format!(
        "n{}_pct{}_{}_{}_r{replicate}.csv",
        cell.n, cell.pct, cell.selection, cell.perturbation
    )
}

/// Runs a sweep; with trajectories on, a single writer thread stores one CSV
/// per run as workers finish them.
fn run_sweep(grid: &ExperimentGrid, r: &Resolved) -> Result<SweepResult, CliError> {
    if !r.trajectories {
        return sweep_with(grid, &r.settings, r.workers, |_| Ok(())).map_err(runtime);
    }
    let dir = r.out.join("trajectories");
    create_dir(&dir)?;
    let (tx, rx) = mpsc::sync_channel::<(PathBuf, Trajectory)>(2 * r.workers);
    std::thread::scope(|scope| {
        let writer = scope.spawn(move || -> Result<(), CliError> {
            for (path, traj) in rx {
                write_trajectory(&path, &traj)?;
            }
            Ok(())
        });
        let result = sweep_with(grid, &r.settings, r.workers, |rec| {
            if let Some(traj) = &rec.trajectory {
                // a closed channel means the writer failed; it reports why
                let _ = tx.send((dir.join(trajectory_name(&rec.cell, rec.replicate)), traj.clone()));
            }
            Ok(())
        });
        drop(tx);
        writer.join().expect("trajectory writer panicked")?;
        result.map_err(runtime)
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let r = resolve(&args.shared)?;
    let grid = resolve_grid(&args.grid, &r, ExperimentGrid::default())?;
    create_dir(&r.out)?;
    let result = run_sweep(&grid, &r)?;

    let mut summary = create_file(&r.out.join("summary.csv"))?;
    write_summary_csv(&result, &mut summary).map_err(runtime)?;
    summary.flush().map_err(runtime)?;
    let mut runs = create_file(&r.out.join("runs.jsonl"))?;
    write_runs_jsonl(&result.runs, &mut runs).map_err(runtime)?;
    runs.flush().map_err(runtime)?;

    for failure in &result.failures {
        eprintln!(
            "skipped n={} pct={} {} {} replicate {}: {}",
            failure.cell.n,
            failure.cell.pct,
            failure.cell.selection,
            failure.cell.perturbation,
            failure.replicate,
            failure.reason
        );
    }
    println!(
        "{} cells, {} runs completed, {} skipped -> {}",
        result.cells.len(),
        result.runs.len(),
        result.failures.len(),
        r.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TipReport {
    n: usize,
    selection: SelectionStrategy,
    perturbation: PerturbationStrategy,
    pcts: Vec<f64>,
    mu_hat: Vec<f64>,
    largest_drop: (f64, f64),
    drop: f64,
    crossing: Option<f64>,
}

fn tip_reports(result: &SweepResult, n: Option<usize>, selection: Option<SelectionStrategy>) -> Vec<TipReport> {
    let mut slices: Vec<(usize, SelectionStrategy, PerturbationStrategy)> = Vec::new();
    for c in &result.cells {
        let key = (c.cell.n, c.cell.selection, c.cell.perturbation);
        if !slices.contains(&key) && n.is_none_or(|n| n == key.0) && selection.is_none_or(|s| s == key.1) {
            slices.push(key);
        }
    }
    slices
        .into_iter()
        .filter_map(|(n, selection, perturbation)| {
            let (pcts, means) = tipping_curve(result, n, selection, perturbation);
            let tip = detect_tipping_point(&pcts, &means).ok()?;
            Some(TipReport {
                n,
                selection,
                perturbation,
                pcts,
                mu_hat: means,
                largest_drop: tip.largest_drop,
                drop: tip.drop,
                crossing: tip.crossing,
            })
        })
        .collect()
}

fn cmd_tip(args: &TipArgs) -> Result<(), CliError> {
    let selection: Option<SelectionStrategy> = args
        .selection
        .as_deref()
        .map(|s| parse_field("selection", s))
        .transpose()?;
    let (result, out) = match &args.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let cells =
                read_summary_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
            let result = SweepResult {
                cells,
                runs: Vec::new(),
                failures: Vec::new(),
            };
            (result, args.shared.out.clone())
        }
        None => {
            let r = resolve(&args.shared)?;
            let fallback = ExperimentGrid {
                sizes: vec![80],
                selections: vec![SelectionStrategy::MaxInfluence],
                ..ExperimentGrid::default()
            };
            let grid = resolve_grid(&args.grid, &r, fallback)?;
            let result = run_sweep(&grid, &r)?;
            (result, args.shared.out.clone().or(r.cfg.get("out").map(PathBuf::from)))
        }
    };

    let reports = tip_reports(&result, args.n, selection);
    if reports.is_empty() {
        return Err(runtime(anyhow::anyhow!(
            "no sweep slice with at least 3 completed percentage levels matches the request"
        )));
    }
    let json = serde_json::to_string_pretty(&reports).map_err(runtime)?;
    if let Some(dir) = out {
        create_dir(&dir)?;
        fs::write(dir.join("tipping.json"), format!("{json}\n")).context("writing tipping.json")?;
    }
    println!("{json}");
    Ok(())
}

#[derive(Serialize)]
struct TradeoffReport {
    n: usize,
    confederate: usize,
    steps: usize,
    converged: bool,
    mu_hat: f64,
    excursions: usize,
}

fn cmd_tradeoff(args: &TradeoffArgs) -> Result<(), CliError> {
    let r = resolve(&args.shared)?;
    if args.n < 3 {
        return Err(usage("n: must be >= 3"));
    }
    let series = tradeoff_scenario(args.n, r.seed, &r.settings).context("simulation failed")?;
    create_dir(&r.out)?;
    if let Some(traj) = &series.record.trajectory {
        write_trajectory(&r.out.join("trajectory.csv"), traj)?;
    }
    let mut file = create_file(&r.out.join("tradeoff.csv"))?;
    writeln!(file, "t,stance,global_influence").map_err(runtime)?;
    for (t, (y, g)) in series.stance.iter().zip(&series.influence).enumerate() {
        writeln!(file, "{t},{y},{g}").map_err(runtime)?;
    }
    file.flush().map_err(runtime)?;

    let report = TradeoffReport {
        n: args.n,
        confederate: series.confederate,
        steps: series.record.convergence_t,
        converged: series.record.converged,
        mu_hat: series.record.mu_hat,
        excursions: series.excursions(0.05),
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Tip(args) => cmd_tip(args),
        Command::Tradeoff(args) => cmd_tradeoff(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
