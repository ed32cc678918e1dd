use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use offload_sim::profiles::{ProfileLibrary, TimingInterpretation};
use offload_sim::runner::{
    run_replications, run_sweep, sweep_csv, write_metrics, ExperimentConfig, ReplicationSummary, SweepAxis,
};

#[derive(Parser)]
#[command(name = "offload-sim", version, about = "Edge-cloud LLM offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-step CSV plus summary JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Vary one parameter and report mean delay, reward and success rate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values; profile pairs are written `edge+cloud`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configs and print one summary table.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Also write the joined summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the LLM profile library.
    Profiles {
        #[command(subcommand)]
        action: ProfilesAction,
    },
}

#[derive(Subcommand)]
enum ProfilesAction {
    List {
        /// Profile library file; the bundled one when absent.
        #[arg(long)]
        library: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ttft")]
        timing: Timing,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Timing {
    Ttft,
    Tpot,
}

impl From<Timing> for TimingInterpretation {
    fn from(t: Timing) -> Self {
        match t {
            Timing::Ttft => TimingInterpretation::Ttft,
            Timing::Tpot => TimingInterpretation::Tpot,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn run(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let runs = run_replications(&cfg)?;
    for (r, metrics) in runs.iter().enumerate() {
        let stem = if runs.len() > 1 {
            format!("{}.rep{r}", cfg.name)
        } else {
            cfg.name.clone()
        };
        let csv = out.join(format!("{stem}.csv"));
        write_metrics(metrics, &cfg.replication(r), &csv)?;
        println!("wrote {}", csv.display());
    }
    print_table(&[ReplicationSummary::new(&cfg, &runs)]);
    Ok(())
}

fn print_table(rows: &[ReplicationSummary]) {
    println!(
        "{:<24} {:>4}  {:<34} {:<34} {:<34}",
        "name", "reps", "final-window reward", "mean delay (s)", "success rate"
    );
    for s in rows {
        println!(
            "{:<24} {:>4}  {:<34} {:<34} {:<34}",
            s.name,
            s.replications,
            s.final_window_mean_reward.to_string(),
            s.mean_delay_s.to_string(),
            s.success_rate.to_string()
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(&config, seed, &out),
        Command::Sweep { config, axis, values, out } => {
            let cfg = load(&config)?;
            let text = sweep_csv(&run_sweep(&cfg, axis, &values)?);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Compare { configs, out } => {
            let mut rows = Vec::with_capacity(configs.len());
            for path in &configs {
                let cfg = load(path)?;
                let runs = run_replications(&cfg).with_context(|| format!("running {}", path.display()))?;
                rows.push(ReplicationSummary::new(&cfg, &runs));
            }
            print_table(&rows);
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&rows)?;
                std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Profiles {
            action: ProfilesAction::List { library, timing },
        } => {
            let lib = match library {
                Some(path) => ProfileLibrary::load(&path)?,
                None => ProfileLibrary::builtin(),
            };
            println!("{:<16} {:<6} {:>9} {:>9} {:>8}", "name", "place", "ttft_s", "tpot_s", "quality");
            for rec in &lib.records {
                let p = rec.resolve(timing.into())?;
                println!(
                    "{:<16} {:<6} {:>9.4} {:>9.5} {:>8.1}",
                    p.name,
                    p.placement.as_str(),
                    p.ttft_s,
                    p.tpot_s,
                    p.quality_index
                );
            }
            Ok(())
        }
    }
}
