//! Command-line front end: model configs, run reports, CSV and SVG output.

pub mod args;
pub mod commands;
pub mod config;
pub mod expr;
pub mod plot;
pub mod report;

use std::io;

use args::{Cli, Command};
use report::RunReport;

pub fn execute(command: &Command) -> RunReport {
    match command {
        Command::Certify(a) => commands::cmd_certify(a),
        Command::Simulate(a) => commands::cmd_simulate(a),
        Command::FindPeriod(a) => commands::cmd_find_period(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Rate(a) => commands::cmd_rate(a),
    }
}

/// Runs the command, emits the report and the summary, returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let report = execute(&cli.command);
    let written = match &cli.report {
        Some(path) => report.save(path),
        None => report.write_json(io::stdout().lock()),
    };
    if !cli.quiet {
        eprintln!("{}", commands::summary(&report));
    }
    if let Err(e) = written {
        eprintln!("failed to write report: {e}");
        return commands::EXIT_INPUT;
    }
    report.exit_code
}
