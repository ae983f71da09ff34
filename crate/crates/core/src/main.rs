use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use survive::config::{parse_config, Algorithm, EnvName, RunConfig};
use survive::danger::DangerNet;
use survive::export::{export_danger_grid, write_atomic, write_grid, GridSpec};
use survive::nn::Network;
use survive::run::{compare, format_comparison, train};
use survive::{Error, Result};

#[derive(Parser)]
#[command(
    name = "survive",
    version,
    about = "Danger-map model-based RL experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value config file. Missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// cartpole | corridor
    #[arg(long)]
    env: Option<String>,
    /// survive | dqn
    #[arg(long)]
    algo: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write metrics and checkpoints.
    Train(Common),
    /// Evaluate a trained danger net on 2-D slices of the state space.
    ExportGrid {
        #[command(flatten)]
        common: Common,
        /// Danger checkpoint (`danger.nn` from a survive run).
        #[arg(long)]
        checkpoint: PathBuf,
        /// Two state dimensions, e.g. `0,2`. Omit to export every pair.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, default_value_t = 50)]
        resolution: usize,
        /// Value for every state dimension; the two plotted ones are ignored.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fixed: Option<Vec<f64>>,
        /// `lo,hi` for the first plotted dimension.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        range_i: Option<Vec<f64>>,
        /// `lo,hi` for the second plotted dimension.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        range_j: Option<Vec<f64>>,
    },
    /// Run survive and dqn on shared seeds and write a joined metrics table.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated seeds; defaults to the single config seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(env) = &common.env {
        cfg.env = env.parse::<EnvName>()?;
    }
    if let Some(algo) = &common.algo {
        cfg.algo = algo.parse::<Algorithm>()?;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn pair(values: &Option<Vec<f64>>, what: &str) -> Result<Option<(f64, f64)>> {
    match values.as_deref() {
        None => Ok(None),
        Some([lo, hi]) => Ok(Some((*lo, *hi))),
        Some(other) => Err(Error::InvalidGrid(format!(
            "{what} needs exactly two values, got {}",
            other.len()
        ))),
    }
}

fn export_grids(
    cfg: &RunConfig,
    checkpoint: &Path,
    dims: Option<Vec<usize>>,
    resolution: usize,
    fixed: Option<Vec<f64>>,
    range_i: Option<(f64, f64)>,
    range_j: Option<(f64, f64)>,
) -> Result<()> {
    let scales = cfg.build_env()?.normalization_scales();
    let net = DangerNet::from_network(Network::load(checkpoint)?, scales.clone())?;
    let pairs: Vec<(usize, usize)> = match dims.as_deref() {
        Some([i, j]) => vec![(*i, *j)],
        Some(other) => {
            return Err(Error::InvalidGrid(format!(
                "--dims needs exactly two values, got {}",
                other.len()
            )))
        }
        None => (0..scales.len())
            .flat_map(|i| ((i + 1)..scales.len()).map(move |j| (i, j)))
            .collect(),
    };
    let out = PathBuf::from(&cfg.out_dir);
    for (i, j) in pairs {
        let mut spec = GridSpec::centered(i, j, &scales, resolution);
        if let Some(f) = &fixed {
            spec.fixed = f.clone();
        }
        if let Some(r) = range_i {
            spec.range_i = r;
        }
        if let Some(r) = range_j {
            spec.range_j = r;
        }
        let cells = export_danger_grid(&net, &spec)?;
        let path = out.join(format!("grid_s{i}_s{j}.csv"));
        write_grid(&spec, &cells, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = load(&common)?;
            let artifacts = train(&cfg)?;
            let dir = PathBuf::from(&cfg.out_dir);
            artifacts.write(&cfg, &dir)?;
            let last = artifacts.metrics.last();
            println!(
                "episodes={} steps={} out={}",
                artifacts.metrics.len(),
                last.map_or(0, |r| r.total_steps),
                dir.display()
            );
        }
        Command::ExportGrid {
            common,
            checkpoint,
            dims,
            resolution,
            fixed,
            range_i,
            range_j,
        } => {
            let cfg = load(&common)?;
            let range_i = pair(&range_i, "--range-i")?;
            let range_j = pair(&range_j, "--range-j")?;
            export_grids(&cfg, &checkpoint, dims, resolution, fixed, range_i, range_j)?;
        }
        Command::Compare { common, seeds } => {
            let cfg = load(&common)?;
            let seeds = seeds.unwrap_or_else(|| vec![cfg.seed]);
            let runs = compare(&cfg, &seeds)?;
            let path = PathBuf::from(&cfg.out_dir).join("compare.csv");
            write_atomic(&path, format_comparison(&runs).as_bytes())?;
            for run in &runs {
                let solved = survive::export::steps_to_solve(&run.metrics, 100, 195.0);
                println!(
                    "algo={:?} seed={} episodes={} solved_at={}",
                    run.algo,
                    run.seed,
                    run.metrics.len(),
                    solved.map_or("none".to_string(), |s| s.to_string())
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(match e.category() {
                "config-missing" | "config-schema" | "config-range" => 2,
                "io" => 3,
                _ => 1,
            })
        }
    }
}
