//! Command-line experiment runner.

mod analyze;
mod error;
mod grid;
mod output;
mod plot;
mod presets;
mod simulate;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mobiqueue::config::{ExperimentConfig, SweepSpec};
use mobiqueue::par::{with_workers, Execution};

use crate::analyze::DomainArg;
use crate::error::{CliError, Result};
use crate::output::{csv_string, run_dir, write_csv, write_text, DEFAULT_OUT, OUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "mobiqueue",
    version,
    about = "Queues served by the SINR of mobile Poisson interferers"
)]
struct Cli {
    /// Root directory for results.
    #[arg(long, global = true, env = OUT_ENV)]
    out: Option<PathBuf>,

    /// Master seed, overriding the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores; 1 runs sequentially).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration (a file, or a preset name).
    Simulate { config: String },
    /// Analytic quantities for a configuration or a grid of them.
    Analyze {
        config: String,
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated lags for the two-time quantities (default: the
        /// preset's, else one slot).
        #[arg(long)]
        lags: Option<String>,
        #[arg(long, value_enum, default_value_t = DomainArg::Plane)]
        domain: DomainArg,
    },
    /// Simulate every point of a grid.
    Sweep {
        config: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Render a CSV table as an SVG chart.
    Plot {
        csv: PathBuf,
        /// Plot spec file, or inline `x=...;y=...`.
        spec: String,
    },
    /// Shipped configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, clap::Args)]
struct GridArgs {
    /// Sweep axis: velocity, model, arrival_rate or load. Repeat for a
    /// product grid; each needs a matching --values.
    #[arg(long)]
    axis: Vec<String>,
    /// Comma-separated values for the matching --axis.
    #[arg(long)]
    values: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    List,
    /// Print a preset's config text.
    Show {
        name: String,
    },
}

struct Loaded {
    name: String,
    text: String,
    cfg: ExperimentConfig,
}

fn load_config(arg: &str, seed: Option<u64>) -> Result<Loaded> {
    let (name, text) = presets::load(arg)?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(Loaded { name, text, cfg })
}

fn grid_specs(loaded: &Loaded, args: &GridArgs) -> Result<Vec<SweepSpec>> {
    if args.axis.is_empty() && args.values.is_empty() {
        let (a, v): (Vec<String>, Vec<String>) = presets::default_sweeps(&loaded.text).into_iter().unzip();
        return grid::parse_axes(&a, &v);
    }
    grid::parse_axes(&args.axis, &args.values)
}

fn out_root(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn exec_for(workers: Option<usize>) -> Execution {
    if workers == Some(1) {
        Execution::Sequential
    } else {
        Execution::available()
    }
}

fn log_header(command: &str, loaded: &Loaded, specs: &[SweepSpec], points: usize) -> String {
    let mut log = String::new();
    let _ = writeln!(log, "mobiqueue {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(log, "command {command} {}", loaded.name);
    let _ = writeln!(log, "seed {}", loaded.cfg.seed);
    for s in specs {
        let vals: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(log, "axis {} = {}", s.axis.name(), vals.join(", "));
    }
    let _ = writeln!(log, "points {points}");
    log
}

fn simulate(cli: &Cli, arg: &str, grid_args: Option<&GridArgs>) -> Result<PathBuf> {
    let loaded = load_config(arg, cli.seed)?;
    let exec = exec_for(cli.workers);
    let (command, specs) = match grid_args {
        Some(g) => ("sweep", grid_specs(&loaded, g)?),
        None => ("simulate", Vec::new()),
    };
    let points = grid::expand(&loaded.cfg, &specs, exec)?;
    let dir = run_dir(&out_root(cli), command, &loaded.name, loaded.cfg.seed)?;
    write_text(&dir.join("config.conf"), &loaded.cfg.emit())?;
    eprintln!("{command}: {} point(s) -> {}", points.len(), dir.display());
    let outcomes = simulate::run_grid(&points, exec)?;

    let mut log = log_header(command, &loaded, &specs, points.len());
    for o in &outcomes {
        let i = o.summary.point;
        for (r, t) in o.trajectories.iter().enumerate() {
            write_csv(&dir.join("runs").join(format!("p{i:03}-r{r:03}.csv")), t)?;
        }
        write_csv(&dir.join("delays").join(format!("p{i:03}.csv")), &o.delay_cdf)?;
        for n in &o.notes {
            let _ = writeln!(log, "note {n}");
        }
    }
    let summary: Vec<_> = outcomes.iter().map(|o| o.summary.clone()).collect();
    write_csv(&dir.join("summary.csv"), &summary)?;
    write_text(&dir.join("run.log"), &log)?;
    print!("{}", csv_string(&summary));
    Ok(dir)
}

fn analyze(cli: &Cli, arg: &str, grid_args: &GridArgs, lags: Option<&str>, domain: DomainArg) -> Result<PathBuf> {
    let loaded = load_config(arg, cli.seed)?;
    let exec = exec_for(cli.workers);
    let specs = grid_specs(&loaded, grid_args)?;
    let lags = match lags.map(str::to_string).or_else(|| presets::default_lags(&loaded.text)) {
        Some(text) => analyze::parse_lags(&text)?,
        None => vec![loaded.cfg.slot],
    };
    let points = grid::expand(&loaded.cfg, &specs, exec)?;
    let dir = run_dir(&out_root(cli), "analyze", &loaded.name, loaded.cfg.seed)?;
    write_text(&dir.join("config.conf"), &loaded.cfg.emit())?;
    let rows = analyze::analyze_grid(&points, &lags, domain, exec)?;
    write_csv(&dir.join("analysis.csv"), &rows)?;
    let mut log = log_header("analyze", &loaded, &specs, points.len());
    let _ = writeln!(log, "domain {domain:?}");
    write_text(&dir.join("run.log"), &log)?;
    print!("{}", csv_string(&rows));
    Ok(dir)
}

fn plot(cli: &Cli, csv: &Path, spec: &str) -> Result<PathBuf> {
    let spec = plot::PlotSpec::load(spec)?;
    let series = plot::read_series(csv, &spec)?;
    if series.is_empty() {
        return Err(CliError::Config(format!("{}: no plottable rows", csv.display())));
    }
    let svg = plot::render(&series, &spec);
    let dir = match &cli.out {
        Some(d) => d.clone(),
        None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let path = dir.join(format!("{stem}-{}.svg", spec.y));
    write_text(&path, &svg)?;
    Ok(path)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { config } => {
            simulate(cli, config, None)?;
        }
        Command::Sweep { config, grid } => {
            simulate(cli, config, Some(grid))?;
        }
        Command::Analyze {
            config,
            grid,
            lags,
            domain,
        } => {
            analyze(cli, config, grid, lags.as_deref(), *domain)?;
        }
        Command::Plot { csv, spec } => {
            let path = plot(cli, csv, spec)?;
            println!("{}", path.display());
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for p in presets::PRESETS {
                    println!("{:<6} {}", p.name, p.summary());
                }
            }
            PresetAction::Show { name } => {
                let p = presets::find(name).ok_or_else(|| CliError::Config(format!("no preset named `{name}`")))?;
                print!("{}", p.text);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_workers(cli.workers, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
