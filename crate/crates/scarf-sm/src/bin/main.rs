//! Command-line front end: solve, trace, verify, enumerate, generate, and
//! perturbation comparison over the text formats of the `io` module.
//!
//! Exit codes: 0 = success, 1 = negative domain verdict (unstable matching,
//! rule violation), 2 = usage or parse error, 3 = internal invariant failure.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scarf_sm::io::{
    parse_instance, parse_matching, serialize_instance, serialize_matching, serialize_trace,
    trace_csv_summary,
};
use scarf_sm::marriage::{
    solve_with, Fixture, MarriageInstance, SolveError, SolveOptions, SolveOutput,
};
use scarf_sm::oracle::{self, Classification, EnumerationMethod};
use scarf_sm::perturb::{compare_sequences, CompareError, PerturbError};
use scarf_sm::trace::TraceLevel;

const MAX_ITER_ENV: &str = "SCARF_SM_MAX_ITER";

#[derive(Parser)]
#[command(name = "scarf-sm", version, about = "Scarf pivoting for stable marriage instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the stable matching (`-` reads stdin).
    Solve {
        instance: String,
        /// Write the full pivot trace as json to this file.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Audit the per-iteration invariants while solving.
        #[arg(long)]
        assert_invariants: bool,
    },
    /// Solve an instance and print its pivot trace.
    Trace {
        instance: String,
        #[arg(long, value_enum, default_value_t = TraceFormat::Json)]
        format: TraceFormat,
    },
    /// Check a matching for stability against an instance.
    Verify { instance: String, matching: String },
    /// List all stable matchings of an instance.
    Enumerate {
        instance: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Rotations)]
        method: MethodArg,
        /// Tag each matching as v-optimal (with witnesses) or intermediate.
        #[arg(long)]
        classify: bool,
    },
    /// Print a generated instance in the text format.
    Generate {
        #[arg(long, value_enum, conflicts_with = "fixture", requires = "k")]
        family: Option<FamilyArg>,
        #[arg(long)]
        k: Option<usize>,
        /// Seed for the random family (default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// A named instance: example_5_1, example_8_3, or table_8_2.
        #[arg(long)]
        fixture: Option<String>,
    },
    /// Run the solver under a symbolically perturbed demand vector and
    /// compare the forced pivot sequence against the selection rule.
    PerturbCompare { instance: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum TraceFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rotations,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    IrvingLeather,
    Random,
}

/// Failures mapped to their exit code; stdout stays clean of diagnostics.
enum CliError {
    Usage(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(msg) | CliError::Internal(msg) => msg,
        }
    }
}

fn usage(err: impl std::fmt::Display) -> CliError {
    CliError::Usage(err.to_string())
}

fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| usage(format!("reading stdin: {e}")))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| usage(format!("reading {path}: {e}")))
    }
}

fn load_instance(path: &str) -> Result<MarriageInstance, CliError> {
    parse_instance(&read_input(path)?).map_err(usage)
}

fn max_iterations_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(MAX_ITER_ENV) {
        Ok(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{MAX_ITER_ENV}={raw:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

fn run_solver(inst: &MarriageInstance, assert_invariants: bool) -> Result<SolveOutput, CliError> {
    let options = SolveOptions {
        trace_level: TraceLevel::Full,
        assert_invariants,
        max_iterations: max_iterations_from_env()?,
    };
    solve_with(inst, &options).map_err(|e: SolveError| CliError::Internal(e.to_string()))
}

fn cmd_solve(
    instance: &str,
    trace: Option<&PathBuf>,
    assert_invariants: bool,
) -> Result<u8, CliError> {
    let inst = load_instance(instance)?;
    let out = run_solver(&inst, assert_invariants)?;
    if let Some(path) = trace {
        std::fs::write(path, serialize_trace(&out.trace))
            .map_err(|e| usage(format!("writing {}: {e}", path.display())))?;
    }
    print!("{}", serialize_matching(&out.matching));
    println!("# iterations: {}", out.trace.iteration_count());
    Ok(0)
}

fn cmd_trace(instance: &str, format: TraceFormat) -> Result<u8, CliError> {
    let inst = load_instance(instance)?;
    let out = run_solver(&inst, false)?;
    match format {
        TraceFormat::Json => print!("{}", serialize_trace(&out.trace)),
        TraceFormat::Csv => print!("{}", trace_csv_summary(&out.trace)),
    }
    Ok(0)
}

fn cmd_verify(instance: &str, matching: &str) -> Result<u8, CliError> {
    let inst = load_instance(instance)?;
    let mu = parse_matching(&read_input(matching)?, inst.k()).map_err(usage)?;
    match oracle::is_stable(&inst, &mu).map_err(usage)? {
        None => {
            println!("stable");
            Ok(0)
        }
        Some((man, woman)) => {
            println!("unstable: blocking pair ({}, {})", man + 1, woman + 1);
            Ok(1)
        }
    }
}

fn format_pairs(mu: &scarf_sm::marriage::Matching) -> String {
    mu.pairs()
        .iter()
        .map(|&(m, w)| format!("{}-{}", m + 1, w + 1))
        .collect::<Vec<_>>()
        .join(" ")
}

fn format_agents(agents: &[usize]) -> String {
    agents.iter().map(|&a| (a + 1).to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_enumerate(instance: &str, method: MethodArg, classify: bool) -> Result<u8, CliError> {
    let inst = load_instance(instance)?;
    let method = match method {
        MethodArg::Rotations => EnumerationMethod::Rotations,
        MethodArg::Brute => EnumerationMethod::BruteForce,
    };
    let mut all = oracle::enumerate_stable(&inst, method).map_err(usage)?;
    all.sort_by_key(|mu| mu.pairs());
    for mu in &all {
        let mut line = format_pairs(mu);
        if classify {
            let tag = match oracle::classify(&inst, mu).map_err(usage)? {
                Classification::Intermediate => "intermediate".to_string(),
                Classification::VOptimal { men, women } => format!(
                    "v-optimal men=[{}] women=[{}]",
                    format_agents(&men),
                    format_agents(&women)
                ),
            };
            line = format!("{line}  {tag}");
        }
        println!("{line}");
    }
    Ok(0)
}

fn fixture_by_name(name: &str) -> Result<Fixture, CliError> {
    match name {
        "example_5_1" => Ok(Fixture::Example51),
        "example_8_3" => Ok(Fixture::Example83),
        "table_8_2" => Ok(Fixture::Table82),
        other => Err(usage(format!(
            "unknown fixture {other:?}; expected example_5_1, example_8_3, or table_8_2"
        ))),
    }
}

fn cmd_generate(
    family: Option<FamilyArg>,
    k: Option<usize>,
    seed: Option<u64>,
    fixture: Option<&str>,
) -> Result<u8, CliError> {
    let inst = match (family, fixture) {
        (Some(FamilyArg::IrvingLeather), None) => {
            let k = k.expect("clap enforces --k with --family");
            scarf_sm::marriage::irving_leather(k).map_err(usage)?
        }
        (Some(FamilyArg::Random), None) => {
            let k = k.expect("clap enforces --k with --family");
            if k == 0 {
                return Err(usage("k must be positive"));
            }
            scarf_sm::marriage::random_instance(k, seed.unwrap_or(0))
        }
        (None, Some(name)) => {
            let fx = fixture_by_name(name)?;
            let inst = scarf_sm::marriage::fixture(fx);
            if let Some(k) = k {
                if k != inst.k() {
                    return Err(usage(format!("fixture {name} has k={}, not {k}", inst.k())));
                }
            }
            inst
        }
        (None, None) => return Err(usage("either --family or --fixture is required")),
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    };
    print!("{}", serialize_instance(&inst));
    Ok(0)
}

fn cmd_perturb_compare(instance: &str) -> Result<u8, CliError> {
    let inst = load_instance(instance)?;
    let report = compare_sequences(&inst).map_err(|e| match e {
        CompareError::Perturb(PerturbError::Separator { .. })
        | CompareError::Perturb(PerturbError::ClaimViolated { .. })
        | CompareError::Perturb(PerturbError::DegenerateTie { .. })
        | CompareError::Perturb(PerturbError::IterationLimitExceeded { .. })
        | CompareError::Perturb(PerturbError::Ordinal { .. })
        | CompareError::Solve(_) => CliError::Internal(e.to_string()),
    })?;
    let yes_no = |flag: bool| if flag { "yes" } else { "no" };
    println!("rule-conformant: {}", yes_no(report.rule_conformant));
    if let Some(iteration) = report.first_violation {
        println!("first-violation: iteration {}", iteration + 1);
    }
    println!("sequences-equal: {}", yes_no(report.sequences_equal));
    if let Some(iteration) = report.first_divergence {
        println!("first-divergence: iteration {}", iteration + 1);
    }
    println!("matchings-equal: {}", yes_no(report.matchings_equal));
    println!(
        "iterations: unperturbed={} perturbed={}",
        report.unperturbed_iterations, report.perturbed_iterations
    );
    Ok(if report.rule_conformant { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Solve { instance, trace, assert_invariants } => {
            cmd_solve(instance, trace.as_ref(), *assert_invariants)
        }
        Command::Trace { instance, format } => cmd_trace(instance, *format),
        Command::Verify { instance, matching } => cmd_verify(instance, matching),
        Command::Enumerate { instance, method, classify } => {
            cmd_enumerate(instance, *method, *classify)
        }
        Command::Generate { family, k, seed, fixture } => {
            cmd_generate(*family, *k, *seed, fixture.as_deref())
        }
        Command::PerturbCompare { instance } => cmd_perturb_compare(instance),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
