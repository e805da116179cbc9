mod cli;
mod commands;
mod config;
mod error;
mod output;
mod reproduce;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{Cli, Command};
use crate::commands::Ctx;
use crate::config::{ConfigFile, Resolver};
use crate::error::CliResult;
use crate::output::Output;

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::empty(),
    };
    let res = Resolver::new(&file, &cli.command.section());
    let out = Output::new(res.get(cli.global.out.clone(), "out")?)?;
    let ctx = Ctx {
        res,
        global: &cli.global,
        out,
    };
    match &cli.command {
        Command::Check(c) => commands::run_check(c, &ctx),
        Command::Lasso(c) => commands::run_lasso(c, &ctx),
        Command::Quantum(c) => commands::run_quantum(c, &ctx),
        Command::Reproduce(r) => reproduce::run(r, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("priorconflict: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
