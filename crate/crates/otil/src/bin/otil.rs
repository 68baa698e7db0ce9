//! Command-line front end over the library's experiment harness.
//!
//! Subcommands:
//!   gen-experts  train experts on perturbed dynamics and save a demo file
//!   train        run the imitation experiment grid and write CSV curves
//!   plot         render summary CSVs in a directory to an SVG figure
//!   verify       run the fast self-check suite
//!
//! Exit codes: 0 success, 1 bad input or failed check, 2 internal bug.

use std::path::PathBuf;
use std::process::ExitCode;

use otil::error::{Error, Result};
use otil::harness::{cmd_gen_experts, cmd_plot, cmd_train, cmd_verify, load_config};

const USAGE: &str = "\
usage: otil <command> [options]

commands:
  gen-experts --config <path> [--out <dir>] [--seed-offset <n>] [--parallelism <n>]
      train one expert per configured parameter value and write the demo file
  train --config <path> [--out <dir>] [--seed-offset <n>] [--parallelism <n>]
      train imitation agents for every (mode, seed) pair; reads the demo file
      from the output directory and writes curve and summary CSVs next to it
  plot [--out <dir>]
      render every summary_<mode>.csv in the directory into plot.svg
  verify
      run the self-check suite and print one pass/fail line per check

options:
  --config <path>      experiment config file (required for gen-experts, train)
  --out <dir>          output directory (defaults to the config's out_dir, then \"out\")
  --seed-offset <n>    shift every demo and run seed by n (default 0)
  --parallelism <n>    worker threads for independent runs (default 1)
  -h, --help           print this message";

struct Cli {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    seed_offset: u64,
    parallelism: usize,
}

fn parse_args(args: &[String]) -> Result<Cli> {
    let mut command = None;
    let mut config = None;
    let mut out = None;
    let mut seed_offset = 0u64;
    let mut parallelism = 1usize;

    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let mut value_for = |flag: &str| -> Result<&String> {
            iter.next()
                .ok_or_else(|| Error::InvalidArgument(format!("{flag} needs a value")))
        };
        match arg.as_str() {
            "-h" | "--help" => {
                println!("{USAGE}");
                std::process::exit(0);
            }
            "--config" => config = Some(PathBuf::from(value_for("--config")?)),
            "--out" => out = Some(PathBuf::from(value_for("--out")?)),
            "--seed-offset" => {
                let raw = value_for("--seed-offset")?;
                seed_offset = raw.parse().map_err(|_| {
                    Error::InvalidArgument(format!("--seed-offset: not a valid count: {raw:?}"))
                })?;
            }
            "--parallelism" => {
                let raw = value_for("--parallelism")?;
                parallelism = raw.parse().map_err(|_| {
                    Error::InvalidArgument(format!("--parallelism: not a valid count: {raw:?}"))
                })?;
                if parallelism == 0 {
                    return Err(Error::InvalidArgument(
                        "--parallelism must be at least 1".into(),
                    ));
                }
            }
            other if other.starts_with('-') => {
                return Err(Error::InvalidArgument(format!("unknown option {other:?}")));
            }
            other => {
                if command.is_some() {
                    return Err(Error::InvalidArgument(format!(
                        "unexpected argument {other:?}"
                    )));
                }
                command = Some(other.to_string());
            }
        }
    }

    let command = command
        .ok_or_else(|| Error::InvalidArgument("no command given (try --help)".into()))?;
    Ok(Cli {
        command,
        config,
        out,
        seed_offset,
        parallelism,
    })
}

fn run(cli: &Cli) -> Result<()> {
    match cli.command.as_str() {
        "gen-experts" | "train" => {
            let config_path = cli.config.as_ref().ok_or_else(|| {
                Error::InvalidArgument(format!("{} requires --config <path>", cli.command))
            })?;
            let config = load_config(config_path)?;
            let out_dir = cli
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(&config.out_dir));
            if cli.command == "gen-experts" {
                let demo_path =
                    cmd_gen_experts(&config, &out_dir, cli.seed_offset, cli.parallelism)?;
                println!("wrote {}", demo_path.display());
            } else {
                let demos_path = out_dir.join(config.demo_file_name());
                let written =
                    cmd_train(&config, &demos_path, &out_dir, cli.seed_offset, cli.parallelism)?;
                for path in written {
                    println!("wrote {}", path.display());
                }
            }
            Ok(())
        }
        "plot" => {
            let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let svg = cmd_plot(&out_dir)?;
            println!("wrote {}", svg.display());
            Ok(())
        }
        "verify" => cmd_verify(),
        other => Err(Error::InvalidArgument(format!(
            "unknown command {other:?} (try --help)"
        ))),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(cli) => cli,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{USAGE}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
