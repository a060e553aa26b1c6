mod plot;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sitcov::campaign::{
    read_log, replay_episode, run_campaign_with, write_log, CampaignConfig, EpisodeCache, Mode,
    Stopping,
};
use sitcov::fault::FaultSpec;
use sitcov::scene::build_scene;
use sitcov::situation::enumerate_situations;

/// Situation-coverage safety testing for a simulated mine-survey drone.
#[derive(Parser)]
#[command(name = "sitcov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a test campaign and write campaign.json (plus trajectories).
    Run(RunArgs),
    /// Print the 32 situations in id order.
    Enumerate {
        /// Prefix a column header line.
        #[arg(long)]
        header: bool,
    },
    /// Re-fly one logged episode and compare it with the log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        episode: usize,
    },
    /// Print the coverage summary and the violation table of a log.
    Report {
        #[arg(long)]
        log: PathBuf,
    },
    /// Write an SVG map and a trajectory CSV for one logged episode.
    Plot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        episode: usize,
        /// Output directory; defaults to `plots/` next to the log.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Random,
    Exhaustive,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file, or `paper-defaults` for the built-in preset.
    #[arg(long, default_value = "paper-defaults")]
    config: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, group = "stop")]
    max_episodes: Option<u64>,
    #[arg(long, group = "stop")]
    max_violations: Option<u64>,
    /// Stop once every situation has been run.
    #[arg(long, group = "stop")]
    full_coverage: bool,
    /// GUIDEWORD[:PARAM[:MAGNITUDE]], e.g. LATE:human_detection_latency:3.
    /// Replaces the faults listed in the config.
    #[arg(long = "fault")]
    faults: Vec<FaultSpec>,
    #[arg(long, default_value = "sitcov-out")]
    out: PathBuf,
    /// Skip writing per-episode trajectory CSVs.
    #[arg(long)]
    no_trajectories: bool,
}

fn resolve(args: &RunArgs) -> Result<CampaignConfig> {
    let mut cfg = CampaignConfig::load(&args.config)
        .with_context(|| format!("loading config `{}`", args.config))?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(mode) = args.mode {
        cfg.mode = match mode {
            ModeArg::Random => Mode::Random,
            ModeArg::Exhaustive => Mode::Exhaustive,
        };
    }
    if let Some(n) = args.max_episodes {
        cfg.stopping = Stopping::MaxEpisodes(n);
    } else if let Some(n) = args.max_violations {
        cfg.stopping = Stopping::MaxViolations(n);
    } else if args.full_coverage {
        cfg.stopping = Stopping::FullCoverage;
    }
    if !args.faults.is_empty() {
        cfg.faults = args.faults.clone();
    }
    if args.no_trajectories {
        cfg.record_trajectories = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = resolve(args)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    if cfg.record_trajectories {
        fs::create_dir_all(args.out.join("trajectories"))?;
    }
    let out = args.out.clone();
    let mut sink = |rec: &sitcov::campaign::EpisodeRecord, result: &sitcov::sim::EpisodeResult| {
        if let Some(rel) = &rec.trajectory_csv {
            let path = out.join(rel);
            fs::write(&path, sitcov::sim::trajectory_csv(result))
                .map_err(|e| sitcov::CampaignError::Io { path, source: e })?;
        }
        Ok(())
    };
    let log = run_campaign_with(&cfg, &mut EpisodeCache::new(), &mut sink)?;
    let path = args.out.join("campaign.json");
    write_log(&log, &path)?;

    let c = &log.coverage;
    println!(
        "{} episodes, {}/{} situations covered ({:.1}%), {} violations",
        log.episodes.len(),
        c.distinct_covered,
        c.total_possible,
        100.0 * c.coverage_fraction,
        log.violation_count()
    );
    println!("log written to {}", path.display());
    Ok(if log.violation_count() > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) -> Result<()> {
    match io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn enumerate(header: bool) -> Result<ExitCode> {
    let mut out = String::new();
    if header {
        out.push_str(
            "ID\tTurning\tObstacle\tWaypoint Placement\tLighting Condition\tHuman Presence\n",
        );
    }
    for s in enumerate_situations() {
        let _ = writeln!(out, "{}\t{}", s.id(), s.table_row().join("\t"));
    }
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn log_dir(log: &Path) -> &Path {
    log.parent().unwrap_or(Path::new("."))
}

fn replay(log_path: &Path, k: usize) -> Result<ExitCode> {
    let log = read_log(log_path)?;
    let r = replay_episode(&log, k, Some(log_dir(log_path)))?;
    if r.identical() {
        println!(
            "episode {k}: identical ({} samples)",
            r.result.trajectory.len()
        );
        return Ok(ExitCode::SUCCESS);
    }
    bail!(
        "episode {k}: replay differs (trajectory hash {}, violations {}, stored csv {})",
        if r.hash_matches { "matches" } else { "differs" },
        if r.violations_match {
            "match"
        } else {
            "differ"
        },
        match r.file_matches {
            Some(true) => "matches",
            Some(false) => "differs",
            None => "absent",
        }
    )
}

fn report(log_path: &Path) -> Result<ExitCode> {
    let log = read_log(log_path)?;
    let c = &log.coverage;
    let mut out = String::new();
    let _ = writeln!(out, "total possible        {}", c.total_possible);
    let _ = writeln!(out, "total generated       {}", c.total_generated);
    let _ = writeln!(out, "distinct covered      {}", c.distinct_covered);
    let _ = writeln!(out, "coverage fraction     {:.4}", c.coverage_fraction);
    let _ = writeln!(out, "tested / generated    {:.4}", c.tested_over_generated);
    let _ = writeln!(out, "violations            {}", log.violation_count());
    if log.violation_count() > 0 {
        let _ = writeln!(
            out,
            "\n{:<12} {:<4} {:>5} {:>4} {:>8}  {:<24} detail",
            "id", "req", "ep", "sit", "time_s", "position"
        );
        for e in &log.episodes {
            for v in &e.violations {
                let pos = format!(
                    "({:.2}, {:.2}, {:.2})",
                    v.position.x, v.position.y, v.position.z
                );
                let _ = writeln!(
                    out,
                    "{:<12} {:<4} {:>5} {:>4} {:>8.2}  {:<24} {}",
                    v.id,
                    v.requirement.to_string(),
                    e.index,
                    v.situation_id.get(),
                    v.time,
                    pos,
                    v.detail
                );
            }
        }
    }
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn plot_episode(log_path: &Path, k: usize, out: Option<PathBuf>) -> Result<ExitCode> {
    let log = read_log(log_path)?;
    let r = replay_episode(&log, k, None)?;
    let rec = &log.episodes[k];
    let (scene, _) = build_scene(&rec.axes, &log.config.world)?;
    let dir = out.unwrap_or_else(|| log_dir(log_path).join("plots"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let svg = dir.join(format!("episode-{k:04}.svg"));
    let csv = dir.join(format!("episode-{k:04}.csv"));
    fs::write(&svg, plot::episode_svg(&scene, &r.result, &rec.violations))?;
    fs::write(&csv, &r.csv)?;
    println!("{}", svg.display());
    println!("{}", csv.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Enumerate { header } => enumerate(header),
        Command::Replay { log, episode } => replay(&log, episode),
        Command::Report { log } => report(&log),
        Command::Plot { log, episode, out } => plot_episode(&log, episode, out),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
