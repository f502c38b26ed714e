use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use uavneat::config::{load_config, RunConfig};
use uavneat::neat::Genome;
use uavneat::oracle::{grid_search, GridSpec, OracleError};
use uavneat::report::{self, write_file, OracleReport};
use uavneat::sim;

#[derive(Parser)]
#[command(name = "uavneat", version, about = "Neuroevolved UAV base station control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a controller; writes generations.csv, champion.json, trace.csv, config.toml.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a saved genome for one episode; writes trace.csv.
    Eval {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy-efficiency curve over transmit power; writes ee_curve.csv.
    Sweep {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Static grid-search optimum; writes oracle.json.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        alpha_step: Option<f64>,
        /// Require every user to meet the minimum spectral efficiency.
        #[arg(long)]
        fair: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated training runs over the first N schedule seeds; writes ci.csv.
    Ci {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn prepare(config: &Path, out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = load_config(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(dir) = out {
        cfg.set_output_dir(dir);
    }
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    Ok(cfg)
}

fn load_genome(path: &Path) -> Result<Genome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Genome::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = prepare(&config, out)?;
            if let Some(s) = seed {
                cfg.set_master_seed(s);
            }
            let dir = cfg.output_dir.clone();
            info!(
                "training {} generations x {} steps, seed {}",
                cfg.schedule.generations, cfg.schedule.steps_per_episode, cfg.master_seed
            );
            let outcome = sim::train(
                &cfg.scenario,
                &cfg.neat,
                cfg.schedule.generations,
                cfg.schedule.steps_per_episode,
                cfg.master_seed,
            )?;
            let (metrics, trace) = sim::evaluate_champion(
                &outcome.champion,
                &cfg.scenario,
                cfg.schedule.steps_per_episode,
            )?;
            write_file(&dir.join("generations.csv"), |w| {
                report::write_generations(w, &outcome.records)
            })?;
            fs::write(dir.join("champion.json"), outcome.champion.to_json()?)?;
            let n = cfg.scenario.scene.num_users();
            write_file(&dir.join("trace.csv"), |w| report::write_trace(w, n, &trace))?;
            fs::write(dir.join("config.toml"), cfg.to_toml())?;
            println!(
                "train: generations={} best_fitness={} mean_sum_se={} satisfaction={} out={}",
                outcome.records.len(),
                report::fmt_g9(outcome.champion.fitness.unwrap_or(f64::NAN)),
                report::fmt_g9(metrics.mean_sum_se),
                report::fmt_g9(metrics.satisfaction_fraction),
                dir.display()
            );
        }
        Command::Eval { genome, config, out } => {
            let cfg = prepare(&config, out)?;
            let g = load_genome(&genome)?;
            let (m, trace) =
                sim::evaluate_champion(&g, &cfg.scenario, cfg.schedule.steps_per_episode)?;
            let n = cfg.scenario.scene.num_users();
            write_file(&cfg.output_dir.join("trace.csv"), |w| report::write_trace(w, n, &trace))?;
            println!(
                "eval: mean_reward={} mean_sum_se={} satisfaction={} all_satisfied={}",
                report::fmt_g9(m.mean_reward),
                report::fmt_g9(m.mean_sum_se),
                report::fmt_g9(m.satisfaction_fraction),
                report::fmt_g9(m.all_satisfied_fraction)
            );
        }
        Command::Sweep { genome, config, out } => {
            let cfg = prepare(&config, out)?;
            let g = load_genome(&genome)?;
            let points = sim::power_sweep(&g, &cfg.scenario, &cfg.sweep, cfg.schedule.steps_per_episode)?;
            write_file(&cfg.output_dir.join("ee_curve.csv"), |w| {
                report::write_ee_curve(w, &points)
            })?;
            let peak = points
                .iter()
                .max_by(|a, b| a.ee.total_cmp(&b.ee))
                .context("empty sweep")?;
            println!(
                "sweep: points={} peak_ee={} at pt_dbm={}",
                points.len(),
                report::fmt_g9(peak.ee),
                report::fmt_g9(peak.pt_dbm)
            );
        }
        Command::Oracle {
            config,
            spacing,
            alpha_step,
            fair,
            out,
        } => {
            let cfg = prepare(&config, out)?;
            let mut grid = GridSpec {
                enforce_fairness: fair,
                ..GridSpec::default()
            };
            if let Some(s) = spacing {
                grid.xy_spacing = s;
            }
            if let Some(a) = alpha_step {
                grid.alpha_step = a;
            }
            let solution = match grid_search(&cfg.scenario, &grid) {
                Ok(s) => Some(s),
                Err(OracleError::Infeasible) => None,
                Err(e) => return Err(e.into()),
            };
            let rep = OracleReport::new(solution.as_ref(), &grid);
            fs::write(cfg.output_dir.join("oracle.json"), rep.to_json())?;
            match solution {
                Some(s) => println!(
                    "oracle: sum_se={} position=({}, {}, {})",
                    report::fmt_g9(s.sum_se),
                    report::fmt_g9(s.position[0]),
                    report::fmt_g9(s.position[1]),
                    report::fmt_g9(s.position[2])
                ),
                None => println!("oracle: infeasible"),
            }
        }
        Command::Ci { config, runs, out } => {
            let cfg = prepare(&config, out)?;
            if runs > cfg.schedule.seeds.len() {
                bail!(
                    "--runs {runs} exceeds the {} seeds listed in [schedule]",
                    cfg.schedule.seeds.len()
                );
            }
            let seeds = &cfg.schedule.seeds[..runs];
            let rows = sim::multi_seed(
                &cfg.scenario,
                &cfg.neat,
                cfg.schedule.generations,
                cfg.schedule.steps_per_episode,
                seeds,
            )?;
            write_file(&cfg.output_dir.join("ci.csv"), |w| report::write_ci(w, &rows))?;
            let last = rows.last().context("no generations")?;
            println!(
                "ci: runs={runs} final_best_fitness={} +/- {}",
                report::fmt_g9(last.best_fitness_mean),
                report::fmt_g9(last.best_fitness_std)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
