mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::SimArgs;

fn run(cli: Cli) -> mapcore::Result<()> {
    match cli.command {
        Command::Locate { common, aggregate } => commands::locate(&common.resolve()?, aggregate),
        Command::EvalDepth { common, pooling } => commands::eval_depth(&common.resolve()?, pooling),
        Command::Dedup { common, linkage } => commands::dedup(&common.resolve()?, linkage),
        Command::Match {
            common,
            mode,
            intervals,
        } => commands::run_match(&common.resolve()?, mode, intervals),
        Command::Simulate {
            common,
            seed,
            images,
            per_image,
            noise,
            width,
            height,
            focal,
        } => commands::simulate(
            &common.resolve()?,
            SimArgs {
                seed,
                images,
                per_image,
                noise,
                width,
                height,
                focal,
            },
        ),
        Command::Report {
            common,
            eval_json,
            match_json,
            intervals,
            svg,
        } => commands::report(
            &common.resolve()?,
            eval_json.as_deref(),
            match_json.as_deref(),
            intervals,
            svg.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MAPCORE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
