//! `gencluster` command-line front end.
//!
//! Exit codes: 0 on success, 2 for input or validation problems, 3 for
//! numerical failures.

mod args;
mod commands;
mod input;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Common};

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Cluster(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Coherence(a) => &a.common,
        Command::Oracle(a) => &a.common,
        Command::Robustness(a) => &a.common,
        Command::Eigs(a) => &a.common,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<gencluster::Error>() {
            return if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return EXIT_INPUT;
        }
    }
    EXIT_NUMERICAL
}

fn run(cli: &Cli) -> anyhow::Result<Vec<std::path::PathBuf>> {
    if let Some(jobs) = common(&cli.command).jobs {
        if jobs == 0 {
            return Err(gencluster::Error::InvalidArgument("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Cluster(a) => commands::cluster(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Coherence(a) => commands::coherence_cmd(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Eigs(a) => commands::eigs(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
