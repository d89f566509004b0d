use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use arn_core::executive::{run_trial_on, Executive, TrialConfig};
use arn_core::human::Mode;
use arn_core::sim::{parse_event_log, write_event_log};
use arn_core::world::{load_map, office3};
use arn_harness::replay;
use arn_harness::server::{ServeOptions, Session};
use arn_harness::sweep::{run_sweep, Metric, SweepSpec};

#[derive(Parser)]
#[command(
    name = "arn",
    version,
    about = "Human/multi-robot door-delivery simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trial and print its metrics.
    Simulate {
        /// Trial config (JSON); defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        robots: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Writes metrics.json and events.jsonl here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep spec; writes trials.csv and summary.json.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve frames over WebSocket (/ws) and HTTP (/frame, /map).
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Take the human's actions from clients only.
        #[arg(long)]
        live: bool,
        /// Wall-clock milliseconds per simulated second.
        #[arg(long, default_value_t = 100)]
        tick_ms: u64,
        /// Stream every k-th frame.
        #[arg(long, default_value_t = 1)]
        every: u64,
        /// Event log written on exit.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Recompute metrics from an event log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Map the log was recorded on; the bundled office map by default.
        #[arg(long)]
        map: Option<PathBuf>,
    },
}

type Res<T> = Result<T, Box<dyn std::error::Error>>;

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

/// Writes to stdout; a closed pipe (`arn ... | head`) is not an error.
fn emit(text: &str) -> Res<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn load_config(path: Option<&Path>) -> Res<TrialConfig> {
    match path {
        None => Ok(TrialConfig::default()),
        Some(p) => {
            Ok(serde_json::from_str(&read(p)?).map_err(|e| format!("{}: {e}", p.display()))?)
        }
    }
}

fn simulate(cfg: TrialConfig, out: Option<&Path>) -> Res<()> {
    let map = Arc::new(cfg.load_map()?);
    let run = run_trial_on(&cfg, map)?;
    let metrics = serde_json::to_string_pretty(&run.metrics)?;
    emit(&metrics)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.json"), metrics + "\n")?;
        std::fs::write(dir.join("events.jsonl"), write_event_log(&run.events))?;
    }
    Ok(())
}

fn sweep(spec: &Path, out: &Path) -> Res<()> {
    let spec = SweepSpec::parse(&read(spec)?)?;
    let res = run_sweep(&spec)?;
    res.write(out)?;
    let mut table = format!(
        "{:<28} {:>5} {:>9} {:>9} {:>9} {:>7}\n",
        "cell", "n", "t_all", "team", "t_h", "doors"
    );
    for c in &res.cells {
        let s = &c.summary;
        writeln!(
            table,
            "{:<28} {:>5} {:>9.1} {:>9.1} {:>9.1} {:>7.2}",
            s.cell.to_string(),
            s.n,
            s.t_all.mean,
            s.team_time.mean,
            s.t_h.mean,
            s.door_openings.mean
        )?;
    }
    for c in res
        .comparisons()
        .iter()
        .filter(|c| c.metric == Metric::TAll)
    {
        writeln!(
            table,
            "t_all {} vs {}: p = {:.3e}",
            c.a, c.b, c.result.p_value
        )?;
    }
    emit(table.trim_end())
}

fn serve(
    cfg: TrialConfig,
    port: u16,
    live: bool,
    opts: ServeOptions,
    events: Option<&Path>,
) -> Res<()> {
    let map = Arc::new(cfg.load_map()?);
    let exec = if live {
        Executive::live(cfg, map)?
    } else {
        Executive::new(cfg, map)?
    };
    let session = Session::start(exec, opts);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        axum::serve(listener, session.router())
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })?;
    let out = session.finish()?;
    if let Some(path) = events {
        std::fs::write(path, write_event_log(&out.events))?;
    }
    Ok(())
}

fn replay_log(log: &Path, map: Option<&Path>) -> Res<()> {
    let m = match map {
        Some(p) => load_map(&read(p)?)?,
        None => office3(),
    };
    let events = parse_event_log(&read(log)?)?;
    let summary = replay::summarize(&events, &m);
    emit(&serde_json::to_string_pretty(&summary)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Simulate {
            config,
            mode,
            robots,
            seed,
            out,
        } => load_config(config.as_deref()).and_then(|mut cfg| {
            cfg.mode = mode.unwrap_or(cfg.mode);
            cfg.n_robots = robots.unwrap_or(cfg.n_robots);
            cfg.seed = seed.unwrap_or(cfg.seed);
            simulate(cfg, out.as_deref())
        }),
        Cmd::Sweep { spec, out } => sweep(&spec, &out),
        Cmd::Serve {
            config,
            port,
            live,
            tick_ms,
            every,
            events,
        } => load_config(config.as_deref()).and_then(|cfg| {
            serve(
                cfg,
                port,
                live,
                ServeOptions { tick_ms, every },
                events.as_deref(),
            )
        }),
        Cmd::Replay { log, map } => replay_log(&log, map.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
