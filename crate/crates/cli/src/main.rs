//! `mpfair`: batch front end for allocation, verification and simulation.
//!
//! Exit codes: 0 success, 1 input error, 2 verification failure,
//! 3 simulation did not converge.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};

use mpfair_core::fairness::PolicyComparison;
use mpfair_core::scenario::{
    emit_allocation, emit_flows, emit_probe, emit_simulation_summary, parse_allocation, OutputFormat,
};
use mpfair_core::sim::feedback_delay_probe;
use mpfair_core::{
    builtin_scenario, compare_policies, parse_scenario, run_simulation, verify_maxmin, water_fill,
    AllocationVector, FairnessPolicy, MergeAlgorithm, MergeMode, Network, Scenario, SimConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "mpfair",
    version,
    about = "Max-min fair allocation and ABR simulation for multipoint-to-point VCs"
)]
struct Cli {
    /// Scenario file, or `builtin:<name>` (example1, example2).
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Output format: table, csv or json-lines.
    #[arg(long, global = true, default_value = "table")]
    format: OutputFormat,

    /// Output destination: a path, or `stdout`.
    #[arg(long, global = true, default_value = "stdout")]
    out: String,

    /// Simulation seed; overrides the scenario's `seed` parameter.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fair allocation under one policy, certified by the independent checker.
    Allocate {
        #[arg(long)]
        policy: FairnessPolicy,
    },
    /// Allocations under all four policies, with per-VC totals.
    Compare,
    /// Flow count and flows of every switch output link.
    Flows,
    /// Run the ABR feedback-loop simulation.
    Simulate {
        #[arg(long, default_value = "source")]
        policy: FairnessPolicy,
        /// turnaround or bitmark.
        #[arg(long)]
        merge_alg: Option<MergeAlgorithm>,
        /// vc or vp.
        #[arg(long)]
        merge_mode: Option<MergeMode>,
        #[arg(long)]
        duration_ms: Option<u64>,
        /// Write the per-interval trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check an allocation CSV for feasibility and max-min optimality.
    Verify {
        #[arg(long)]
        policy: FairnessPolicy,
        /// CSV as written by `allocate --format csv`.
        #[arg(long)]
        alloc: PathBuf,
    },
    /// Feedback delay against merge depth for both merge algorithms.
    ProbeDepth {
        /// Comma-separated merge depths.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        levels: Vec<usize>,
        #[arg(long)]
        duration_ms: Option<u64>,
    },
}

enum Failure {
    Input(anyhow::Error),
    Verification(String),
    NotConverged(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn load_scenario(location: Option<&str>) -> anyhow::Result<Scenario> {
    let location = location.ok_or_else(|| anyhow!("--scenario is required for this command"))?;
    if let Some(name) = location.strip_prefix("builtin:") {
        return Ok(builtin_scenario(name)?);
    }
    let text = fs::read_to_string(location).with_context(|| format!("cannot read scenario `{location}`"))?;
    parse_scenario(&text).map_err(|e| anyhow!("{location}:\n{e}"))
}

fn network_of(scenario: &Scenario) -> anyhow::Result<Network> {
    Ok(scenario.network()?)
}

fn write_to(dest: &str, text: &str) -> anyhow::Result<()> {
    if dest == "stdout" || dest == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
    } else {
        fs::write(dest, text).with_context(|| format!("cannot write `{dest}`"))?;
    }
    Ok(())
}

fn sim_config(
    scenario: Option<&Scenario>,
    seed: Option<u64>,
    duration_ms: Option<u64>,
) -> anyhow::Result<SimConfig> {
    let mut config = match scenario {
        Some(s) => SimConfig::from_scenario(s)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(ms) = duration_ms {
        config.duration_ns = ms * 1_000_000;
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let scenario = || load_scenario(cli.scenario.as_deref());
    match &cli.command {
        Command::Allocate { policy } => {
            let net = network_of(&scenario()?)?;
            let (alloc, _) = water_fill(&net, *policy);
            let report = verify_maxmin(&net, *policy, &alloc);
            write_to(
                &cli.out,
                &emit_allocation(&PolicyComparison::single(&net, *policy, alloc), cli.format, false),
            )?;
            if let Some(v) = report.first_violation() {
                return Err(Failure::Verification(format!(
                    "allocation failed verification: {v}"
                )));
            }
        }
        Command::Compare => {
            let net = network_of(&scenario()?)?;
            write_to(
                &cli.out,
                &emit_allocation(&compare_policies(&net), cli.format, true),
            )?;
        }
        Command::Flows => {
            let net = network_of(&scenario()?)?;
            write_to(&cli.out, &emit_flows(&net, cli.format))?;
        }
        Command::Simulate {
            policy,
            merge_alg,
            merge_mode,
            duration_ms,
            trace,
        } => {
            let scenario = scenario()?;
            let net = network_of(&scenario)?;
            let mut config = sim_config(Some(&scenario), cli.seed, *duration_ms)?;
            config.policy = *policy;
            if let Some(alg) = merge_alg {
                config.merge_alg = *alg;
            }
            if let Some(mode) = merge_mode {
                config.merge_mode = *mode;
            }
            config.record_trace = trace.is_some();
            let result = run_simulation(&net, &config);
            if let Some(path) = trace {
                fs::write(path, result.trace.to_csv())
                    .with_context(|| format!("cannot write trace `{}`", path.display()))?;
            }
            let (expected, _) = water_fill(&net, *policy);
            write_to(
                &cli.out,
                &emit_simulation_summary(&result, Some(&expected), cli.format),
            )?;
            if !result.converged {
                let why = if result.steady.is_none() {
                    "no steady state was reached"
                } else {
                    "rates still oscillate beyond tolerance"
                };
                return Err(Failure::NotConverged(format!(
                    "simulation did not converge: {why}"
                )));
            }
        }
        Command::Verify { policy, alloc } => {
            let net = network_of(&scenario()?)?;
            let allocation = read_allocation(alloc, *policy)?;
            let report = verify_maxmin(&net, *policy, &allocation);
            let mut text = String::new();
            if report.passed() {
                text.push_str("certified\n");
                for (source, link) in &report.bottlenecks {
                    text.push_str(&format!("{source} bottleneck {link}\n"));
                }
                write_to(&cli.out, &text)?;
            } else {
                for v in &report.violations {
                    text.push_str(&format!("{v}\n"));
                }
                write_to(&cli.out, &text)?;
                return Err(Failure::Verification(format!(
                    "allocation is not {policy} max-min fair: {}",
                    report.violations[0]
                )));
            }
        }
        Command::ProbeDepth { levels, duration_ms } => {
            if levels.is_empty() || levels.contains(&0) {
                return Err(Failure::Input(anyhow!("--levels needs positive depths")));
            }
            let loaded = cli
                .scenario
                .as_deref()
                .map(|s| load_scenario(Some(s)))
                .transpose()?;
            let config = sim_config(loaded.as_ref(), cli.seed, *duration_ms)?;
            write_to(
                &cli.out,
                &emit_probe(&feedback_delay_probe(levels, &config), cli.format),
            )?;
        }
    }
    Ok(())
}

/// The row for `policy`, or the first row when the file has none for it.
fn read_allocation(path: &Path, policy: FairnessPolicy) -> anyhow::Result<AllocationVector> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read allocation `{}`", path.display()))?;
    parse_allocation(&text, Some(policy))
        .or_else(|_| parse_allocation(&text, None))
        .map_err(|e| anyhow!("{}: {e}", path.display()))
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
