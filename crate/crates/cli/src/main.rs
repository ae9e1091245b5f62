mod args;
mod commands;
mod error;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::de::DeserializeOwned;

use args::{BenchmarkCommand, Cli, Command, Merge};
use error::{CliError, CliResult};

/// Flags first, then values from the config file.
fn with_config<T: DeserializeOwned + Merge>(config: Option<&PathBuf>, flags: T) -> CliResult<T> {
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = table::read_text(path)?;
    let file: T = toml::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: {}", path.display(), e.message())))?;
    Ok(flags.merge(file))
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = cli.config.as_ref();
    let text = match cli.command {
        Command::Design(o) => commands::design(with_config(cfg, o)?)?,
        Command::Fit(o) => commands::fit(with_config(cfg, o)?)?,
        Command::Predict(o) => commands::predict(with_config(cfg, o)?)?,
        Command::EvalGrid(o) => commands::eval_grid(with_config(cfg, o)?)?,
        Command::BenchTable(o) => commands::bench_table(with_config(cfg, o)?)?,
        Command::Tune(o) => commands::tune(with_config(cfg, o)?)?,
        Command::TheoryCheck(o) => commands::theory_check(with_config(cfg, o)?)?,
        Command::Benchmark {
            command: BenchmarkCommand::Eval(o),
        } => commands::benchmark_eval(with_config(cfg, o)?)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e} (ppgpr {name})");
            e.exit_code()
        }
    }
}
