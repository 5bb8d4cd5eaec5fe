mod args;
mod commands;
mod output;
mod pipeline;

use std::process::ExitCode;

use clap::Parser;

use modmig_core::par::Jobs;

use args::{Cli, Command};
use commands::Status;
use pipeline::Context;

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let jobs = cli.jobs.map_or_else(Jobs::available, |n| Jobs::new(n.get()).expect("non-zero"));
    let manifest = cli.manifest.as_deref();
    match &cli.command {
        Command::Scan(a) => commands::scan(&Context::load(manifest, &cli.out, jobs, cli.format, a)?, a),
        Command::Check(a) => {
            let ctx = Context::load(manifest, &cli.out, jobs, cli.format, &a.analysis)?;
            commands::check(&ctx, &a.analysis, &a.checks)
        }
        Command::Genmap(a) => commands::genmap(&Context::load(manifest, &cli.out, jobs, cli.format, &a.analysis)?, a),
        Command::Overlay(a) => commands::overlay(&cli.out, cli.format, a),
        Command::Plan(a) => commands::plan(&Context::load(manifest, &cli.out, jobs, cli.format, &a.analysis)?, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Clean) => ExitCode::SUCCESS,
        Ok(Status::Findings) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
