//! Command-line front end: run closed-loop experiments, compare learning
//! on/off across seeds, and dump the connectome or RF grid for inspection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oculomotor::config::Config;
use oculomotor::error::{Error, Result};
use oculomotor::harness::{
    compare_learning, format_metrics, format_rf_grid, format_trace, Simulation,
};

#[derive(Parser)]
#[command(name = "oculomotor", about = "Closed-loop oculomotor SNN simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop experiment and write trace + metrics files.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration_ms: Option<u64>,
        /// on | off
        #[arg(long)]
        learning: Option<String>,
        /// random | repetitive | scripted:PATH
        #[arg(long)]
        trajectory: Option<String>,
        /// Output directory (default: print metrics to stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired learning-off/on runs over a range of seeds.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long)]
        duration_ms: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every synapse of the assembled controller.
    DumpConnectome {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the receptive-field tiling.
    DumpRfGrid {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print the fully resolved configuration.
    DumpConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::from_defaults_and_env()),
    }
}

fn apply_overrides(
    cfg: &mut Config,
    seed: &Option<u64>,
    duration_ms: &Option<u64>,
    learning: &Option<String>,
    trajectory: &Option<String>,
) -> Result<()> {
    if let Some(s) = seed {
        cfg.set("harness.seed", &s.to_string())?;
    }
    if let Some(d) = duration_ms {
        cfg.set("harness.duration_ms", &d.to_string())?;
    }
    if let Some(l) = learning {
        let v = match l.as_str() {
            "on" => "true",
            "off" => "false",
            other => {
                return Err(Error::input(format!("--learning wants on|off, got `{other}`")))
            }
        };
        cfg.set("learning.enabled", v)?;
    }
    if let Some(t) = trajectory {
        if let Some(path) = t.strip_prefix("scripted:") {
            cfg.set("trajectory.kind", "scripted")?;
            cfg.set("trajectory.scripted_path", path)?;
        } else {
            cfg.set("trajectory.kind", t)?;
        }
    }
    Ok(())
}

fn write_out(dir: &PathBuf, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, text)
        .map_err(|e| Error::input(format!("cannot write {}: {e}", path.display())))
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, duration_ms, learning, trajectory, out } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, &seed, &duration_ms, &learning, &trajectory)?;
            let mut sim = Simulation::new(&cfg)?;
            let result = sim.run()?;
            let metrics_text = format_metrics(&result.metrics);
            if let Some(dir) = out {
                write_out(&dir, "trace.txt", &format_trace(&result.samples))?;
                write_out(&dir, "metrics.txt", &metrics_text)?;
                write_out(&dir, "config.txt", &cfg.to_text())?;
            }
            print!("{metrics_text}");
            println!("total_abs_dw {:.6}", result.total_abs_dw);
            Ok(())
        }
        Command::Compare { config, seeds, first_seed, duration_ms, out } => {
            let mut cfg = load_config(&config)?;
            apply_overrides(&mut cfg, &None, &duration_ms, &None, &None)?;
            let seed_list: Vec<u64> = (first_seed..first_seed + seeds).collect();
            let rows = compare_learning(&cfg, &seed_list)?;
            let mut text = String::from(
                "seed rmse_lh_off rmse_lh_on rmse_lv_off rmse_lv_on \
                 rmse_rh_off rmse_rh_on rmse_rv_off rmse_rv_on\n",
            );
            for (seed, off, on) in &rows {
                text.push_str(&format!("{seed}"));
                for k in 0..4 {
                    text.push_str(&format!(" {:.4} {:.4}", off.rmse_deg[k], on.rmse_deg[k]));
                }
                text.push('\n');
            }
            if let Some(dir) = out {
                write_out(&dir, "compare.txt", &text)?;
            }
            print!("{text}");
            Ok(())
        }
        Command::DumpConnectome { config } => {
            let cfg = load_config(&config)?;
            let sim = Simulation::new(&cfg)?;
            print!("{}", sim.assembly.dump_edges());
            Ok(())
        }
        Command::DumpRfGrid { config } => {
            let cfg = load_config(&config)?;
            let sim = Simulation::new(&cfg)?;
            print!("{}", format_rf_grid(&sim.assembly));
            Ok(())
        }
        Command::DumpConfig { config } => {
            let cfg = load_config(&config)?;
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
