use std::path::PathBuf;
use std::process::ExitCode;

use abq::compare::compare_runs;
use abq::config::{EnvName, ExperimentConfig, Overrides};
use abq::discover::find_runs;
use abq::plot::render_curves;
use abq::runner::{evaluate_checkpoint, run_experiment, RunSummary};
use abq_core::agent::EpisodeRecord;
use abq_core::qnet::BaselineMode;
use anyhow::Context;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abq", version, about = "Branching Q-network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration, one seed at a time.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Single seed, replacing the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        /// abq, bdq or none.
        #[arg(long)]
        mode: Option<BaselineMode>,
        /// pendulum, reacher or factored.
        #[arg(long)]
        env: Option<EnvName>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        /// Print every n-th episode to stderr (0 disables).
        #[arg(long, default_value_t = 100)]
        log_every: usize,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Evaluation seed; defaults to the checkpoint's training seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write one SVG learning-curve plot per environment.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
    /// Tabulate greedy-evaluation results across runs.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Also write the comparison as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Train several seeds concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Worker threads; defaults to the available cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value_t = 100)]
        log_every: usize,
    },
}

fn print_summary(s: &RunSummary) {
    println!("run {} ({} / {})", s.label, s.env, s.mode);
    for seed in &s.seeds {
        println!(
            "  seed {:>4}: {} episodes, final window mean {}, eval mean {:.3}, {:.1}s -> {}",
            seed.seed,
            seed.episodes,
            seed.final_window_mean.map_or("n/a".into(), |v| format!("{v:.3}")),
            seed.eval_mean,
            seed.wall_time.as_secs_f64(),
            seed.dir.display()
        );
    }
    if let Some(m) = s.median_final_window_mean {
        println!("  median final window mean {m:.3}");
    }
    if let Some(m) = s.median_eval_mean {
        println!("  median eval mean {m:.3}");
    }
}

fn progress_printer(every: usize) -> impl Fn(u64, &EpisodeRecord) + Sync {
    move |seed, r| {
        if every > 0 && r.episode % every == 0 {
            eprintln!(
                "seed {seed} episode {} return {:.3} epsilon {:.3} loss {:.5}",
                r.episode, r.cumulative_reward, r.epsilon, r.mean_loss
            );
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            episodes,
            mode,
            env,
            output,
            label,
            log_every,
        } => {
            let mut c = ExperimentConfig::load(&config)?;
            c.apply(&Overrides {
                seeds: seed.map(|s| vec![s]),
                episodes,
                mode,
                env,
                output,
                label,
            });
            let p = progress_printer(log_every);
            print_summary(&run_experiment(&c, 1, Some(&p))?);
        }
        Command::Sweep {
            config,
            seeds,
            jobs,
            log_every,
        } => {
            let mut c = ExperimentConfig::load(&config)?;
            c.apply(&Overrides {
                seeds,
                ..Overrides::default()
            });
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let p = progress_printer(log_every);
            print_summary(&run_experiment(&c, jobs, Some(&p))?);
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
        } => {
            let report = evaluate_checkpoint(&checkpoint, episodes, seed)
                .with_context(|| format!("evaluating {}", checkpoint.display()))?;
            print!("{}", report.to_json());
        }
        Command::Plot { runs, window, out } => {
            anyhow::ensure!(window >= 1, "--window must be at least 1");
            let sources: Vec<_> = find_runs(&runs)?
                .into_iter()
                .filter(|s| s.train_csv.is_file())
                .collect();
            anyhow::ensure!(!sources.is_empty(), "no train.csv found under the given paths");
            for f in render_curves(&sources, window, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Compare { runs, json } => {
            let sources = find_runs(&runs)?;
            anyhow::ensure!(!sources.is_empty(), "no run directories found under the given paths");
            let c = compare_runs(&sources)?;
            print!("{}", c.to_table());
            if let Some(path) = json {
                std::fs::write(&path, c.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
