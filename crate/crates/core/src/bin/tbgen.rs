// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use tbgen::config::{split_overrides, RunConfig};
use tbgen::pipeline::{self, FixtureMode};

/// Testbench generation and judge-aided verification for RTL designs.
///
/// Any configuration key can also be given as a flag named by its dotted
/// path, e.g. `--provider.kind fixture` or `--emulator_samples=3`.
#[derive(Parser)]
#[command(name = "tbgen", version)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log at debug level and keep prompt transcripts.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate stimulus, reference model, traces and sim_main.cpp.
    GenTb {
        problem: PathBuf,
        #[arg(long)]
        resume: bool,
    },
    /// Simulate a design against the generated testbench and judge failures.
    Verify {
        problem: PathBuf,
        /// Design under test; defaults to the problem's top.v.
        #[arg(long)]
        dut: Option<PathBuf>,
        /// Generate the testbench first when it does not exist yet.
        #[arg(long)]
        full: bool,
    },
    /// Run the benchmark over a corpus.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        /// Eval2 threshold in percent; repeatable.
        #[arg(long = "alpha", default_values_t = [80u32, 100])]
        alphas: Vec<u32>,
        #[arg(long)]
        resume: bool,
    },
    /// Label corpus mutants by simulating them against golden_tb.cpp.
    DeriveVerdicts {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Record or check LLM and runtime fixtures for a problem.
    Fixtures {
        #[arg(value_parser = ["record", "check"])]
        mode: String,
        problem: PathBuf,
        /// Designs to verify; defaults to the problem's top.v.
        #[arg(long)]
        dut: Vec<PathBuf>,
    },
}

fn main() {
    let (args, overrides) = match split_overrides(std::env::args().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let cli = Cli::parse_from(args);

    let default_level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .format(|buf, record| writeln!(buf, "[{}] [{}] {}", record.level(), record.target(), record.args()))
        .init();

    let config = match RunConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            log::error!(target: "pipeline", "{}: {e}", tbgen::Error::kind(&e));
            std::process::exit(e.exit_code());
        }
    };
    pipeline::install_interrupt_handler();

    let code = match cli.command {
        Command::GenTb { problem, resume } => pipeline::cmd_gen_tb(&problem, &config, resume),
        Command::Verify { problem, dut, full } => pipeline::cmd_verify(&problem, dut.as_deref(), &config, full),
        Command::Eval { corpus, alphas, resume } => pipeline::cmd_eval(&corpus, &config, &alphas, resume),
        Command::DeriveVerdicts { corpus } => pipeline::cmd_derive_verdicts(&corpus, &config),
        Command::Fixtures { mode, problem, dut } => {
            let mode = if mode == "record" { FixtureMode::Record } else { FixtureMode::Check };
            pipeline::cmd_fixtures(mode, &problem, &dut, &config)
        }
    };
    std::process::exit(code);
}
