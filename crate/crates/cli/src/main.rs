//! `fsd`: generate, evaluate and benchmark with anti-LM penalty decoding.

mod args;
mod backend;
mod bench;
mod eval;
mod exit;
mod generate;
mod manifest;
mod output;
mod prompts;
mod serve;
mod settings;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command, RerunArgs};
use manifest::{Run, RunManifest};

fn rerun(args: RerunArgs) -> Result<u8> {
    let manifest = RunManifest::read(&args.manifest)?;
    match manifest.run {
        Run::Generate(mut run) => {
            if let Some(out) = args.out {
                run.out = Some(out);
                run.manifest = None;
            }
            generate::cmd(run)
        }
        Run::Eval(mut run) => {
            if let Some(out) = args.out {
                run.out = Some(out);
                run.manifest = None;
            }
            eval::cmd(run)
        }
        Run::Bench(mut run) => {
            if let Some(out) = args.out {
                run.out = Some(out);
                run.manifest = None;
                run.per_step = None;
            }
            bench::cmd(run)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return exit::exit(if e.use_stderr() { exit::USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate::cmd(a),
        Command::Eval(a) => eval::cmd(a),
        Command::Bench(a) => bench::cmd(a),
        Command::Serve(a) => serve::cmd(a),
        Command::Rerun(a) => rerun(a),
    };
    match outcome {
        Ok(code) => exit::exit(code),
        Err(e) => {
            eprintln!("fsd: {e:#}");
            exit::exit(exit::code_of(&e))
        }
    }
}
