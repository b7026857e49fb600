use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wsimplex::confidence::Evidence;
use wsimplex::controllers::{synthetic_dataset, write_dataset};
use wsimplex::middleware::{write_cycle_log, write_trajectory, Strategy};
use wsimplex::resource::write_resource_trace;
use wsimplex::rl::{load_qtable, modal_weights, save_qtable, write_episode_log, QTable};
use wsimplex::{runner, Result, RunConfig};

#[derive(Parser)]
#[command(name = "wsimplex", version, about = "Weighted simplex testbed on a simulated clock")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand)]
enum Mode {
    /// Learn a Q-table and write it with the episode log.
    Explore {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Greedy rollout of a learned Q-table.
    Exploit {
        #[arg(long)]
        qtable: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Drive laps with one strategy and write the report and cycle logs.
    Evaluate {
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        laps: Option<u32>,
        /// Speed duty-%.
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        qtable: Option<PathBuf>,
    },
    /// Closed loop with the thermal resource manager.
    ResourceSim {
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Monitor only: no forecasting, offloading or speed cap.
        #[arg(long)]
        no_rm: bool,
        #[arg(long)]
        qtable: Option<PathBuf>,
    },
    /// Posterior of the safety network, e.g. `position=Far velocity=Medium`.
    BnQuery { evidence: Vec<String> },
    /// Score the raster lane detector against the geometric oracle.
    LdBench {
        #[arg(long)]
        frames: Option<usize>,
        /// Also write the rendered frames and labels here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

/// The configured table, or a fresh one learned in-process when none exists yet.
fn table_or_explore(cfg: &RunConfig, track: &wsimplex::sim::Track) -> Result<QTable> {
    let path = cfg.qtable_path();
    if path.exists() {
        return load_qtable(&path);
    }
    log::info!("{} not found; exploring first", path.display());
    Ok(runner::explore(cfg, track)?.q)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    let track = cfg.load_track()?;
    let out = cfg.output_dir.clone();
    match cli.mode {
        Mode::Explore { runs, steps } => {
            cfg.rl.runs = runs.unwrap_or(cfg.rl.runs);
            cfg.rl.steps_per_run = steps.unwrap_or(cfg.rl.steps_per_run);
            let e = runner::explore(&cfg, &track)?;
            fs::create_dir_all(&out)?;
            save_qtable(&e.q, &cfg.qtable_path())?;
            write_episode_log(create(&out, "explore_log.csv")?, &e.log)?;
            println!(
                "explored {} steps; {} states visited; q-table {}",
                e.log.len(),
                e.q.visited_states(),
                cfg.qtable_path().display()
            );
        }
        Mode::Exploit { qtable, steps } => {
            cfg.qtable = qtable.or(cfg.qtable);
            cfg.exploit_steps = steps.unwrap_or(cfg.exploit_steps);
            let q = load_qtable(&cfg.qtable_path())?;
            let log = runner::exploit(&cfg, &track, &q)?;
            write_episode_log(create(&out, "exploit_log.csv")?, &log)?;
            let modal = modal_weights(&log);
            write_json(&out, "modal_weights.json", &modal)?;
            println!("{}", serde_json::to_string(&modal).expect("map serializes"));
        }
        Mode::Evaluate { strategy, laps, speed, qtable } => {
            let strategy = strategy.unwrap_or(cfg.strategy);
            cfg.laps = laps.unwrap_or(cfg.laps);
            cfg.speed_setpoint = speed.unwrap_or(cfg.speed_setpoint);
            cfg.qtable = qtable.or(cfg.qtable);
            let q = if strategy.uses_rl() { Some(load_qtable(&cfg.qtable_path())?) } else { None };
            let (report, records) = runner::evaluate(&cfg, &track, strategy, q.as_ref())?;
            write_json(&out, &format!("report_{strategy}.json"), &report)?;
            write_cycle_log(create(&out, &format!("cycles_{strategy}.csv"))?, &records)?;
            write_trajectory(create(&out, &format!("trajectory_{strategy}.csv"))?, &records)?;
            println!(
                "{strategy}: {:.2} laps, {} out-of-track, {} stop signals, mean speed {:.3} m/s, mean T_R {:.1} ms",
                report.laps_completed,
                report.out_of_track,
                report.stop_signals,
                report.mean_speed,
                report.t_r.mean * 1e3
            );
        }
        Mode::ResourceSim { duration, no_rm, qtable } => {
            cfg.resource_duration = duration.unwrap_or(cfg.resource_duration);
            cfg.resource.enabled &= !no_rm;
            cfg.qtable = qtable.or(cfg.qtable);
            let q = if cfg.strategy.uses_rl() { Some(table_or_explore(&cfg, &track)?) } else { None };
            let (summary, rm) = runner::resource_sim(&cfg, &track, q.as_ref())?;
            write_resource_trace(create(&out, "resource_trace.csv")?, rm.trace())?;
            write_json(&out, "resource_summary.json", &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        }
        Mode::BnQuery { evidence } => {
            let e = Evidence::parse(evidence.iter().map(String::as_str))?;
            let p = runner::bn_query(&cfg, &e)?;
            println!("{}", serde_json::to_string_pretty(&p).expect("posterior serializes"));
        }
        Mode::LdBench { frames, dump } => {
            cfg.ld_sweep.frames = frames.unwrap_or(cfg.ld_sweep.frames);
            let m = runner::ld_bench(&cfg, &track)?;
            write_json(&out, "ld_bench.json", &m)?;
            if let Some(dir) = dump {
                let cam = cfg.pipeline.camera;
                write_dataset(&dir, &synthetic_dataset(&track, &cam, &cfg.ld_sweep))?;
            }
            println!("agreement {:.4} over {} frames", m.accuracy, m.samples);
            for c in &m.per_class {
                println!("  {:<8} support {:<5} F1 {:.3}", c.label.to_string(), c.support, c.f1);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
