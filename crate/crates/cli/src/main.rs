use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use duelevo_core::config::ExperimentConfig;
use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::experiment::{run_experiment, RunOptions};
use duelevo_core::par::Execution;
use duelevo_core::replay::{Replay, ReplayError};
use duelevo_core::sensors::describe_markdown;
use duelevo_core::session::{Pace, ServerMessage, Session, PROTOCOL_VERSION};
use duelevo_server::{serve, ServerConfig};

const OUTPUT_ENV: &str = "DUELEVO_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "results";

#[derive(Parser)]
#[command(name = "duelevo", version, about = "Neuroevolution experiments on a two-character duel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the campaign described by a config file.
    Run {
        config: PathBuf,
        /// Output directory. Overrides the config file and the environment.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Evaluate populations on the calling thread only.
        #[arg(long)]
        sequential: bool,
        /// Directory of extra archetype documents.
        #[arg(long)]
        archetypes: Option<PathBuf>,
    },
    /// Re-simulates a replay file and prints its outcome.
    Replay {
        file: PathBuf,
        /// Print the spectator frame stream as newline-delimited messages.
        #[arg(long)]
        frames: bool,
        #[arg(long)]
        archetypes: Option<PathBuf>,
    },
    /// Starts the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
        /// Static client files served at `/`.
        #[arg(long)]
        assets: Option<PathBuf>,
        /// Directory genome references are resolved against.
        #[arg(long, default_value = ".")]
        genomes: PathBuf,
        #[arg(long)]
        archetypes: Option<PathBuf>,
    },
    /// Prints the sensor index table.
    DescribeSensors,
}

/// A failure with the exit code it maps to: 1 for invalid input, 2 at run time.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Self { code: 1, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: 2, message: message.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            config,
            output,
            sequential,
            archetypes,
        } => run(&config, output, sequential, archetypes.as_deref()),
        Command::Replay {
            file,
            frames,
            archetypes,
        } => replay(&file, frames, archetypes.as_deref()),
        Command::Serve {
            listen,
            assets,
            genomes,
            archetypes,
        } => serve_cmd(&listen, assets, genomes, archetypes.as_deref()),
        Command::DescribeSensors => {
            print!("{}", describe_markdown());
            Ok(())
        }
    }
}

fn archetype_table(dir: Option<&Path>) -> Result<ArchetypeTable, Failure> {
    match dir {
        Some(d) => ArchetypeTable::load_dir(d).map_err(Failure::invalid),
        None => Ok(ArchetypeTable::builtin()),
    }
}

fn run(path: &Path, output: Option<PathBuf>, sequential: bool, archetypes: Option<&Path>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let output_dir = output
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
    let mut opts = RunOptions::new(&output_dir);
    opts.archetypes = archetype_table(archetypes)?;
    if sequential {
        opts.execution = Execution::Sequential;
    }
    let report = run_experiment(&cfg, &opts).map_err(|e| Failure {
        code: e.exit_code() as u8,
        message: e.to_string(),
    })?;
    log::info!("wrote {} files under {}", report.files.len(), output_dir.display());
    Ok(())
}

fn replay_failure(e: ReplayError) -> Failure {
    match e {
        ReplayError::Io { .. } | ReplayError::Diverged(_) | ReplayError::Stage(_) | ReplayError::Archetype(_) => {
            Failure::runtime(e)
        }
        _ => Failure::invalid(e),
    }
}

fn replay(path: &Path, frames: bool, archetypes: Option<&Path>) -> Result<(), Failure> {
    let table = archetype_table(archetypes)?;
    let replay = Replay::load(path).map_err(replay_failure)?;
    let record = replay.simulate(&table).map_err(replay_failure)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let write = |out: &mut std::io::StdoutLock, line: String| writeln!(out, "{line}").map_err(Failure::runtime);
    if frames {
        let mut session = Session::from_replay(&replay, &table, Pace::Headless).map_err(Failure::runtime)?;
        write(&mut out, ServerMessage::Opened {
            session: 0,
            format_version: PROTOCOL_VERSION,
            stage: session.state().stage.clone(),
            enemy_name: session.state().archetype.name.clone(),
            frame: session.frame(),
        }
        .to_line())?;
        while !session.is_over() {
            let frame = session.tick().map_err(Failure::runtime)?;
            write(&mut out, ServerMessage::Frame { session: 0, frame }.to_line())?;
        }
        if let Some(end) = session.end_message(0) {
            write(&mut out, end.to_line())?;
        }
        return Ok(());
    }
    let winner = serde_json::to_value(record.outcome).map_err(Failure::runtime)?;
    let p = &record.player;
    write(&mut out, format!("enemy_id={}", replay.header.enemy_id))?;
    write(&mut out, format!("seed={}", replay.header.seed))?;
    write(&mut out, format!("winner={}", winner.as_str().unwrap_or("?")))?;
    write(&mut out, format!("player_energy={}", p.self_energy))?;
    write(&mut out, format!("enemy_energy={}", p.opponent_energy))?;
    write(&mut out, format!("duration={}", p.duration))
}

fn serve_cmd(listen: &str, assets: Option<PathBuf>, genomes: PathBuf, archetypes: Option<&Path>) -> Result<(), Failure> {
    if let Some(dir) = &assets {
        if !dir.is_dir() {
            return Err(Failure::invalid(format!("asset directory {} does not exist", dir.display())));
        }
    }
    let config = ServerConfig {
        assets,
        genomes,
        archetypes: archetype_table(archetypes)?,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime
        .block_on(serve(listen, config, |addr| log::info!("listening on http://{addr}")))
        .map_err(Failure::runtime)
}
