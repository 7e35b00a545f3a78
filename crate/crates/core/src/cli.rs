//! The `epath-opt` command-line driver.
//!
//! `opt` parses a file, saturates each function with the selected rules and
//! prints the cheapest variant. `check` saturates and then runs every variant
//! through the interpreter, failing if any two disagree.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cost::{ranked, CostScalar, Poly, Table};
use crate::epath::{EPath, Limits};
use crate::esequence::{ESequence, SequenceError};
use crate::ir::{interpret, parse_functions, print_function, Function, InterpResult};
use crate::rewrite::{Registry, RewriteRule};
use crate::CostTable;

#[derive(Debug, Parser)]
#[command(
    name = "epath-opt",
    version,
    about = "Non-destructive CFG optimization by saturation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Saturate and print the cheapest variant of every function.
    Opt(OptArgs),
    /// Saturate and check that all variants behave identically.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitMode {
    Text,
    Dot,
}

#[derive(Debug, clap::Args)]
pub struct OptArgs {
    pub file: PathBuf,
    /// Comma-separated rule names.
    #[arg(long, value_delimiter = ',', default_value = "licm,constfold")]
    pub rules: Vec<String>,
    #[arg(long = "max-iters", default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    #[arg(long = "max-seqs", default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_seqs: u64,
    /// File of `opcode = integer` lines.
    #[arg(long = "cost-table")]
    pub cost_table: Option<PathBuf>,
    /// Print every variant with its cost, cheapest first.
    #[arg(long = "dump-variants")]
    pub dump_variants: bool,
    #[arg(long, value_enum, default_value_t = EmitMode::Text)]
    pub emit: EmitMode,
    /// Print one `rule: <src> -> <dst>` line per rewrite edge to stderr.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, clap::Args)]
pub struct CheckArgs {
    pub file: PathBuf,
    /// Comma-separated integer arguments.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = ""
    )]
    pub args: Vec<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub fuel: u64,
    #[arg(long, value_delimiter = ',', default_value = "licm,constfold")]
    pub rules: Vec<String>,
}

/// Everything `opt` needs, resolved from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub rules: Vec<String>,
    pub max_iterations: usize,
    pub max_sequences: usize,
    pub cost_table: Option<PathBuf>,
    pub emit: EmitMode,
    pub dump_variants: bool,
    pub trace: bool,
}

impl From<OptArgs> for RunConfig {
    fn from(a: OptArgs) -> Self {
        RunConfig {
            input: a.file,
            rules: a.rules,
            max_iterations: a.max_iters as usize,
            max_sequences: a.max_seqs as usize,
            cost_table: a.cost_table,
            emit: a.emit,
            dump_variants: a.dump_variants,
            trace: a.trace,
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_IRREDUCIBLE: i32 = 2;

fn load(path: &PathBuf) -> Result<Vec<Function>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_functions(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn canonical(f: &Function) -> Result<ESequence, String> {
    ESequence::from_function(f).map_err(|e| match e {
        SequenceError::Irreducible(err) => format!("@{}: {err}", f.name),
        SequenceError::Invalid(_) => format!("@{}: {e}", f.name),
    })
}

fn saturated(
    seq: ESequence,
    rules: &[&dyn RewriteRule],
    limits: Limits,
    name: &str,
    err: &mut dyn Write,
) -> EPath {
    let mut p = EPath::new(seq);
    let report = p.saturate(rules, limits);
    if !report.reached_fixed_point {
        let _ = writeln!(
            err,
            "warning: @{name}: stopped after {} iterations and {} sequences without reaching a fixed point",
            report.iterations,
            p.len()
        );
    }
    p
}

/// Runs `opt`; returns the process exit status.
pub fn cmd_opt(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let registry = Registry::with_negative_control();
    let rules = match registry.resolve(&config.rules) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let table = match &config.cost_table {
        None => CostTable::default(),
        Some(path) => match fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| Table::parse(&t).map_err(|e| e.to_string()))
        {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return EXIT_ERROR;
            }
        },
    };
    let functions = match load(&config.input) {
        Ok(fs) => fs,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let mut seqs = Vec::with_capacity(functions.len());
    for f in &functions {
        match canonical(f) {
            Ok(s) => seqs.push(s),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_IRREDUCIBLE;
            }
        }
    }
    let limits = Limits {
        max_iterations: config.max_iterations,
        max_sequences: config.max_sequences,
    };

    let mut sections = Vec::new();
    for (f, seq) in functions.iter().zip(seqs) {
        let p = saturated(seq, &rules, limits, &f.name, err);
        if config.trace {
            for edge in p.edges() {
                let _ = writeln!(err, "{}: {} -> {}", edge.rule, edge.source, edge.target);
            }
        }
        let variants = ranked(&p, &table);
        if config.dump_variants {
            sections.push(dump(&f.name, &variants));
        }
        let best = variants[0].0;
        sections.push(match config.emit {
            EmitMode::Text => print_function(&best.to_function(&f.name)),
            EmitMode::Dot => best.to_dot(&f.name).trim_end().to_string(),
        });
    }
    let _ = writeln!(out, "{}", sections.join("\n\n"));
    EXIT_OK
}

fn dump<C: CostScalar>(name: &str, variants: &[(&ESequence, Poly<C>)]) -> String {
    variants
        .iter()
        .enumerate()
        .map(|(i, (s, cost))| {
            format!(
                "; @{name} variant {}/{} cost {cost} digest {}\n{}",
                i + 1,
                variants.len(),
                s.digest(),
                print_function(&s.to_function(name))
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn describe(r: &InterpResult) -> String {
    match r {
        InterpResult::FuelExhausted => "fuel exhausted".to_string(),
        InterpResult::Returned { values, effects } => {
            let effects: Vec<String> = effects
                .iter()
                .map(|e| format!("{}:{}", e.tag, e.value))
                .collect();
            format!("returned {values:?} effects [{}]", effects.join(", "))
        }
    }
}

/// Runs `check`; returns the process exit status.
pub fn cmd_check(
    input: &PathBuf,
    args: &[i64],
    fuel: u64,
    rule_names: &[String],
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let registry = Registry::with_negative_control();
    let rules = match registry.resolve(rule_names) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IRREDUCIBLE;
        }
    };
    let functions = match load(input) {
        Ok(fs) => fs,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IRREDUCIBLE;
        }
    };
    let mut status = EXIT_OK;
    for f in &functions {
        let seq = match canonical(f) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_IRREDUCIBLE;
            }
        };
        if args.len() != f.params.len() {
            let _ = writeln!(
                err,
                "error: @{} takes {} arguments, got {}",
                f.name,
                f.params.len(),
                args.len()
            );
            return EXIT_IRREDUCIBLE;
        }
        let p = saturated(seq, &rules, Limits::default(), &f.name, err);
        let seed = p.seed();
        let expected = interpret(&seed.to_function(&f.name), args, fuel).expect("arity checked");
        let mut agree = true;
        for s in p.variants() {
            let got = interpret(&s.to_function(&f.name), args, fuel).expect("arity checked");
            if got != expected {
                let _ = writeln!(out, "mismatch in @{}:", f.name);
                let _ = writeln!(out, "  {}: {}", seed.digest(), describe(&expected));
                let _ = writeln!(out, "  {}: {}", s.digest(), describe(&got));
                agree = false;
                status = EXIT_ERROR;
                break;
            }
        }
        if agree {
            let _ = writeln!(
                out,
                "@{}: {} variants agree: {}",
                f.name,
                p.len(),
                describe(&expected)
            );
        }
    }
    status
}

fn parse_args(raw: &[String]) -> Result<Vec<i64>, String> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| format!("invalid argument `{s}`"))
        })
        .collect()
}

/// Entry point shared by the binary and tests.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Opt(a) => cmd_opt(&RunConfig::from(a), out, err),
        Command::Check(a) => match parse_args(&a.args) {
            Ok(args) => cmd_check(&a.file, &args, a.fuel, &a.rules, out, err),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_IRREDUCIBLE
            }
        },
    }
}
