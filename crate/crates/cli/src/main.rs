/*
Copyright 2026 The maobs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};
use maobs::config::RunConfig;
use maobs_cli::{cmd_corpus, cmd_solve, cmd_transform, cmd_verify, exit_for, Exit, TransformKind};

#[derive(Parser)]
#[command(name = "maobs", version, about = "Obstacle maximization of Monge-Ampere type functionals")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid spacing override.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Exponent override.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Omit wall-clock data so reports are byte-reproducible.
    #[arg(long, global = true, default_value_t = true, action = ArgAction::Set)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Maximize the configured functional.
    Solve,
    /// Run the regularity diagnostics on a solution grid.
    Verify {
        #[arg(long)]
        solution: PathBuf,
    },
    /// Legendre transform or graph rotation of a solution grid.
    Transform {
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Run the built-in benchmark suite.
    Corpus,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Legendre,
    Rotate,
}

fn load(cli: &Cli) -> maobs::Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| maobs::Error::InvalidSpec("--config is required".into()))?;
    RunConfig::load(path)?.with_overrides(cli.h, cli.alpha)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.dir.as_ref().map(|d| c.resolve(d))))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(cli: &Cli) -> Exit {
    let fail = |e: maobs::Error, transform: bool| {
        eprintln!("error: {e}");
        exit_for(&e, transform)
    };
    if let Cmd::Corpus = cli.cmd {
        if let Some(a) = cli.alpha {
            eprintln!("warning: --alpha {a} ignored; the corpus runs alpha in {{0, 0.25}}");
        }
        let out = out_dir(cli, None);
        return match cmd_corpus(cli.h.unwrap_or(1.0 / 16.0), &out, cli.deterministic) {
            Ok(r) if r.passed => Exit::Ok,
            Ok(_) => {
                eprintln!("corpus: reference comparison outside tolerance");
                Exit::Verdict
            }
            Err(e) => fail(e, false),
        };
    }
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => return fail(e, false),
    };
    let out = out_dir(cli, Some(&cfg));
    match &cli.cmd {
        Cmd::Solve => match cmd_solve(&cfg, &out, cli.deterministic) {
            Ok(_) => Exit::Ok,
            Err(e) => fail(e, false),
        },
        Cmd::Verify { solution } => match cmd_verify(&cfg, solution, &out) {
            Ok(r) if r.passed => Exit::Ok,
            Ok(_) => {
                eprintln!("verify: at least one verdict failed (see verdict.json)");
                Exit::Verdict
            }
            Err(e) => fail(e, false),
        },
        Cmd::Transform { solution, mode } => {
            let kind = match mode {
                Mode::Legendre => TransformKind::Legendre,
                Mode::Rotate => TransformKind::Rotate,
            };
            match cmd_transform(&cfg, solution, kind, &out) {
                Ok(_) => Exit::Ok,
                Err(e) => fail(e, true),
            }
        }
        Cmd::Corpus => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(&cli).code() as u8)
}
