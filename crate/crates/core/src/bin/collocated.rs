use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use collocated::control::Mutation;
use collocated::experiment::{
    find_scenario, parse_config_str, simulate, trace_file, verify, write_trace, RunSummary,
    ScenarioConfig, VerifyOptions, SCENARIOS,
};

const EXIT_ABORTED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "collocated", version, about = "Adaptive collocated control of underactuated arms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Simulate {
        /// Config file, or the name of a bundled scenario.
        #[arg(long)]
        config: String,
        /// Trace output path; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep one record every N integration steps.
        #[arg(long)]
        decimate: Option<usize>,
    },
    /// Run the property suite.
    Verify {
        /// Check closed-loop properties on this config instead of the bundled scenarios.
        #[arg(long)]
        config: Option<String>,
        /// Only run properties whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        /// Inject a deliberate fault into every closed-loop run.
        #[arg(long, value_enum, default_value_t = MutationArg::None)]
        mutation: MutationArg,
        /// Seed for the sampled properties.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also print a tab-separated summary.
        #[arg(long)]
        machine: bool,
    },
    /// List the bundled scenarios.
    ListScenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutationArg {
    None,
    FlipEta,
    DropLambda2,
    OmitKn,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::None => Mutation::None,
            MutationArg::FlipEta => Mutation::FlipEtaSign,
            MutationArg::DropLambda2 => Mutation::DropLambda2Term,
            MutationArg::OmitKn => Mutation::OmitKnTerm,
        }
    }
}

fn load(arg: &str) -> Result<(String, ScenarioConfig), String> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| format!("{arg}: {e}"))?
    } else if let Some(s) = find_scenario(arg) {
        s.source.to_string()
    } else {
        return Err(format!("{arg}: no such file or bundled scenario"));
    };
    let config = parse_config_str(&text).map_err(|e| format!("{arg}: {e}"))?;
    Ok((text, config))
}

fn run_simulate(config: &str, out: Option<PathBuf>, decimate: Option<usize>) -> Result<ExitCode, String> {
    let (text, cfg) = load(config)?;
    let decimation = decimate.unwrap_or(cfg.output.decimation);
    if decimation == 0 {
        return Err("--decimate must be at least 1".into());
    }
    let outcome = simulate(&cfg, Mutation::None, decimation);
    let file = trace_file(&text, &cfg, &outcome);
    let target = out.or_else(|| cfg.output.trace.clone());
    match target.as_deref() {
        Some(p) if p != Path::new("-") => {
            let f = File::create(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_trace(&mut w, &file)
                .and_then(|_| w.flush())
                .map_err(|e| format!("{}: {e}", p.display()))?;
            eprintln!("trace written to {}", p.display());
        }
        _ => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write_trace(&mut w, &file)
                .and_then(|_| w.flush())
                .map_err(|e| format!("stdout: {e}"))?;
        }
    }
    let summary = RunSummary::new(&outcome, cfg.controller.gains.epsilon, cfg.model.unactuated);
    eprintln!("{summary}");
    Ok(match outcome.error {
        Some(_) => ExitCode::from(EXIT_ABORTED),
        None => ExitCode::SUCCESS,
    })
}

fn run_verify(
    config: Option<String>,
    filter: Option<String>,
    mutation: MutationArg,
    seed: u64,
    machine: bool,
) -> Result<ExitCode, String> {
    let config = config.map(|c| load(&c).map(|(_, cfg)| cfg)).transpose()?;
    let report = verify(&VerifyOptions {
        config,
        filter,
        mutation: mutation.into(),
        seed,
        ..Default::default()
    });
    print!("{}", report.text());
    if machine {
        print!("{}", report.machine());
    }
    if report.results.is_empty() {
        eprintln!("no property matched the filter");
        return Ok(ExitCode::from(EXIT_USAGE));
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_ABORTED)
    })
}

fn list_scenarios() {
    for s in SCENARIOS {
        println!("{:<32} {:<36} {}", s.name, s.file, s.description());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            out,
            decimate,
        } => run_simulate(&config, out, decimate),
        Command::Verify {
            config,
            filter,
            mutation,
            seed,
            machine,
        } => run_verify(config, filter, mutation, seed, machine),
        Command::ListScenarios => {
            list_scenarios();
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_USAGE)
    })
}
