//! `popstack`: count pop-stacked permutations exactly, cross-check the
//! dynamic program against brute force, fit generating functions to the
//! resulting sequences, and estimate singularities and growth constants.

mod args;
mod commands;
mod error;
mod io;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};

use args::{BackendArg, Cli, Command};

fn main() {
    let matches = Cli::command().get_matches();
    reject_backend_conflicts(&matches);
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    let result = match &cli.command {
        Command::Count(a) => commands::count(a),
        Command::CountByRuns(a) => commands::count_by_runs(a),
        Command::Brute(a) => commands::brute(a),
        Command::Guess(a) => commands::guess(a),
        Command::Asymptote(a) => commands::asymptote(a),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

/// Modular-backend flags contradict `--backend bigint`; reject the mix at
/// parse time. Environment-sourced values stay usable either way.
fn reject_backend_conflicts(matches: &ArgMatches) {
    let Some((name, sub)) = matches.subcommand() else { return };
    let modular_only: &[&str] = match name {
        "count" => &["workers", "prime_ceiling", "checkpoint_dir"],
        "count-by-runs" => &["workers", "prime_ceiling"],
        _ => return,
    };
    if sub.get_one::<BackendArg>("backend") != Some(&BackendArg::Bigint) {
        return;
    }
    for id in modular_only {
        if sub.value_source(id) == Some(ValueSource::CommandLine) {
            Cli::command()
                .error(
                    clap::error::ErrorKind::ArgumentConflict,
                    format!("--{} requires --backend modular", id.replace('_', "-")),
                )
                .exit();
        }
    }
}
