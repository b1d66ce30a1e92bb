use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use numsynth_core::abstraction::{abstract_spec, format_valuation, reencode_outputs, PredicateTable, Valuation};
use numsynth_core::bernstein::{check_feasibility, check_validity, CheckConfig, FeasibilityVerdict, Validity};
use numsynth_core::cegar::{synthesize, Algorithm, CegarConfig, Event, SynthesisVerdict};
use numsynth_core::poly::{PolyConstraint, Rational};
use numsynth_core::speclang::{format_predicate, format_spec, parse_spec_with_warnings, Side, SpecDocument};

use crate::checkfile::{parse_check_file, Query};
use crate::controller_file::{show_rational, spec_hash, ControllerFile, CounterFile};
use crate::error::{read_file, write_file, CliError};
use crate::simulate::{simulate, SimulationConfig};

pub const EXIT_REALIZABLE: i32 = 0;
pub const EXIT_UNREALIZABLE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_INPUT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "numsynth", version, about = "Reactive synthesis for LTL specifications over polynomial predicates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a controller, or find a counter-strategy.
    Synth(SynthArgs),
    /// Decide validity and feasibility queries over real boxes.
    Check(CheckArgs),
    /// Print the pseudo-Boolean abstraction of a specification.
    Abstract(SpecArg),
    /// Print the log-encoded form of a specification and its multiplexer table.
    Reencode(SpecArg),
    /// Run a controller against random sensor values and monitor the guarantees.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AlgorithmArg {
    Safety,
    Buchi,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Safety => Algorithm::Safety,
            AlgorithmArg::Buchi => Algorithm::Buchi,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub spec: PathBuf,
    #[arg(long, value_enum, default_value = "safety")]
    pub algorithm: AlgorithmArg,
    /// Largest safety-game bound.
    #[arg(long, default_value_t = 16)]
    pub max_bound: u32,
    /// Subdivision depth of the Bernstein checker.
    #[arg(long, default_value_t = 24)]
    pub depth: u32,
    #[arg(long, default_value_t = 256)]
    pub max_refinements: usize,
    /// Write the controller or counter-strategy here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a Graphviz rendering of the result.
    #[arg(long)]
    pub dot: Option<PathBuf>,
    /// Write the solve/check/refine transcript.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// Rebuild arenas after input refinements instead of marking edges absent.
    #[arg(long)]
    pub rebuild: bool,
    /// Refine every infeasible input valuation found per iteration.
    #[arg(long)]
    pub batch: bool,
    /// Keep the original output atoms.
    #[arg(long)]
    pub no_reencode: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Query file with REAL, VALID and FEASIBLE lines.
    pub file: Option<PathBuf>,
    /// Inline variable declaration, e.g. "x IN [0,4]".
    #[arg(long = "real")]
    pub reals: Vec<String>,
    /// Inline validity query.
    #[arg(long)]
    pub valid: Vec<String>,
    /// Inline feasibility query (a conjunction).
    #[arg(long)]
    pub feasible: Vec<String>,
    #[arg(long, default_value_t = 24)]
    pub depth: u32,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub controller: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force inputs, e.g. "req1=1,req2=1".
    #[arg(long)]
    pub inject: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub inject_every: usize,
    /// Print only the summary.
    #[arg(long)]
    pub quiet: bool,
}

/// Runs a parsed command; diagnostics go to `err`. Returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match &cli.command {
        Command::Synth(a) => cmd_synth(a, out, err),
        Command::Check(a) => cmd_check(a, out),
        Command::Abstract(a) => cmd_abstract(&a.spec, out, err),
        Command::Reencode(a) => cmd_reencode(&a.spec, out, err),
        Command::Simulate(a) => cmd_simulate(a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT_ERROR
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io { path: "<output>".into(), source: e }
}

fn load_spec(path: &Path, err: &mut dyn Write) -> Result<(String, SpecDocument), CliError> {
    let text = read_file(path)?;
    let (doc, warnings) = parse_spec_with_warnings(&text)?;
    for w in warnings {
        let _ = writeln!(err, "warning: line {}: {}", w.line, w.message);
    }
    Ok((text, doc))
}

fn predicate_comments(doc: &SpecDocument) -> String {
    let names = doc.var_names();
    doc.predicates
        .iter()
        .map(|p| format!("## {} predicate: {}\n", p.side, format_predicate(p, &names)))
        .collect()
}

/// The values of the side-local constraints of a valuation at a point.
pub fn constraint_report(
    constraints: &[(String, PolyConstraint)],
    var_names: &[String],
    point: &[Rational],
) -> Vec<String> {
    let mut lines: Vec<String> =
        var_names.iter().zip(point).map(|(n, x)| format!("  {n} = {}", show_rational(x))).collect();
    for (label, c) in constraints {
        let value = c.poly.evaluate(point).expect("point matches arity");
        lines.push(format!(
            "  {label}: {} = {} {} 0",
            c.poly.display_with(var_names),
            show_rational(&value),
            c.relation.symbol()
        ));
    }
    lines
}

fn witness_constraints(v: &Valuation, table: &PredicateTable) -> Vec<(String, PolyConstraint)> {
    v.iter()
        .filter_map(|(a, &b)| {
            let c = table.side_constraint(a)?;
            Some(if b { (a.clone(), c) } else { (format!("!{a}"), c.negate()) })
        })
        .collect()
}

fn cmd_synth(a: &SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (text, doc) = load_spec(&a.spec, err)?;
    let cfg = CegarConfig {
        algorithm: a.algorithm.into(),
        max_bound: a.max_bound,
        check: CheckConfig::with_depth(a.depth),
        max_refinements: a.max_refinements,
        edge_marking: !a.rebuild,
        batch_refinement: a.batch,
        reencode: !a.no_reencode,
    };
    let run = synthesize(&doc, &cfg)?;
    let hash = spec_hash(&text);
    if let Some(p) = &a.transcript {
        let t: String = run.transcript.iter().map(|e| format!("{e}\n")).collect();
        write_file(p, &t)?;
    }
    let refinements: Vec<String> = run.refinements().iter().map(|f| f.to_string()).collect();
    let mut summary = vec![
        format!("verdict: {}", run.verdict.label()),
        format!("algorithm: {}", cfg.algorithm),
        format!("theory checks: {}", run.theory_checks()),
        format!("refinements: {}", refinements.len()),
    ];
    summary.extend(refinements.iter().map(|r| format!("  {r}")));

    let (code, artifact, dot) = match &run.verdict {
        SynthesisVerdict::Realizable { controller, mux, .. } => {
            let bound = run
                .transcript
                .iter()
                .rev()
                .find_map(|e| match e {
                    Event::Solve { bound, controller_wins: true, .. } => Some(*bound),
                    _ => None,
                })
                .unwrap_or(0);
            summary.push(format!("bound: {bound}"));
            summary.push(format!("controller states: {}", controller.num_states()));
            if !mux.is_empty() {
                summary.push(format!("encoded outputs: {}", mux.encoded.join(" ")));
            }
            let file = ControllerFile {
                spec_hash: hash,
                algorithm: cfg.algorithm,
                bound,
                refinements,
                controller: controller.clone(),
                mux: mux.clone(),
                spec: Some(doc),
            };
            (EXIT_REALIZABLE, file.write(), Some(controller.to_dot()))
        }
        SynthesisVerdict::UnrealizableWithinBound { bound, counter, witnesses } => {
            summary.push(format!("bound: {bound}"));
            summary.push(format!("counter-strategy states: {}", counter.num_states()));
            let names = run.table.side_var_names(Side::Input);
            if witnesses.is_empty() {
                summary.push("witnesses: none (no predicate inputs used)".into());
            }
            for (v, w) in witnesses {
                summary.push(format!("witness {}", format_valuation(v)));
                summary.extend(constraint_report(&witness_constraints(v, &run.table), &names, w));
            }
            let file = CounterFile {
                spec_hash: &hash,
                algorithm: cfg.algorithm,
                bound: *bound,
                counter,
                witnesses,
                var_names: &names,
                spec: &Some(doc.clone()),
            };
            (EXIT_UNREALIZABLE, file.write(), Some(counter.to_dot()))
        }
        SynthesisVerdict::Unknown(_) => (EXIT_UNKNOWN, String::new(), None),
    };
    for l in &summary {
        writeln!(out, "{l}").map_err(io)?;
    }
    if let (Some(p), Some(d)) = (&a.dot, &dot) {
        write_file(p, d)?;
    }
    if !artifact.is_empty() {
        match &a.out {
            Some(p) => write_file(p, &artifact)?,
            None => write!(out, "{artifact}").map_err(io)?,
        }
    }
    Ok(code)
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut text = match &a.file {
        Some(p) => read_file(p)?,
        None => String::new(),
    };
    for r in &a.reals {
        text.push_str(&format!("\nREAL {r}"));
    }
    for q in &a.valid {
        text.push_str(&format!("\nVALID {q}"));
    }
    for q in &a.feasible {
        text.push_str(&format!("\nFEASIBLE {q}"));
    }
    let file = parse_check_file(&text)?;
    let names = file.var_names();
    let domain = file.real_box();
    let cfg = CheckConfig::with_depth(a.depth);
    let mut code = EXIT_REALIZABLE;
    for q in &file.queries {
        match q {
            Query::Valid { text, formula } => {
                let r = check_validity(formula, &domain, &cfg)?;
                let verdict = match &r.verdict {
                    Validity::Valid => "valid".to_string(),
                    Validity::Invalid(p) => {
                        let pt: Vec<String> =
                            names.iter().zip(p).map(|(n, x)| format!("{n}={}", show_rational(x))).collect();
                        format!("invalid at {}", pt.join(", "))
                    }
                    Validity::Unknown(why) => {
                        code = EXIT_UNKNOWN;
                        format!("unknown, {why}")
                    }
                };
                writeln!(out, "VALID {text}: {verdict} ({} boxes)", r.boxes_explored).map_err(io)?;
            }
            Query::Feasible { text, constraints } => {
                let r = check_feasibility(constraints, &domain, &cfg)?;
                match &r.verdict {
                    FeasibilityVerdict::Feasible(p) => {
                        writeln!(out, "FEASIBLE {text}: feasible ({} boxes)", r.boxes_explored).map_err(io)?;
                        let labelled: Vec<(String, PolyConstraint)> =
                            constraints.iter().enumerate().map(|(i, c)| (format!("c{}", i + 1), c.clone())).collect();
                        for l in constraint_report(&labelled, &names, p) {
                            writeln!(out, "{l}").map_err(io)?;
                        }
                    }
                    FeasibilityVerdict::Infeasible => {
                        writeln!(out, "FEASIBLE {text}: infeasible ({} boxes)", r.boxes_explored).map_err(io)?;
                    }
                    FeasibilityVerdict::Unknown(why) => {
                        code = EXIT_UNKNOWN;
                        writeln!(out, "FEASIBLE {text}: unknown, {why} ({} boxes)", r.boxes_explored)
                            .map_err(io)?;
                    }
                }
            }
        }
    }
    Ok(code)
}

fn cmd_abstract(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (_, doc) = load_spec(path, err)?;
    let (spec, _) = abstract_spec(&doc);
    write!(out, "{}{}", predicate_comments(&doc), format_spec(&spec.doc)).map_err(io)?;
    Ok(EXIT_REALIZABLE)
}

fn cmd_reencode(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (_, doc) = load_spec(path, err)?;
    let (spec, _) = abstract_spec(&doc);
    let (enc, mux) = reencode_outputs(&spec)?;
    if mux.is_empty() {
        let _ = writeln!(err, "note: re-encoding saves no output atoms; specification unchanged");
    }
    write!(out, "{}{}", predicate_comments(&doc), format_spec(&enc.doc)).map_err(io)?;
    for l in mux.to_lines() {
        writeln!(out, "## {l}").map_err(io)?;
    }
    Ok(EXIT_REALIZABLE)
}

/// Parses `a=1,b=0` (also `true`/`false`).
pub fn parse_injection(s: &str) -> Result<Valuation, CliError> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("bad injection `{kv}`, expected atom=0|1")))?;
            let b = match v.trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(CliError::Usage(format!("bad truth value `{other}`"))),
            };
            Ok((k.trim().to_string(), b))
        })
        .collect()
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = ControllerFile::parse(&read_file(&a.controller)?)?;
    let cfg = SimulationConfig {
        steps: a.steps,
        seed: a.seed,
        inject: a.inject.as_deref().map(parse_injection).transpose()?,
        inject_every: a.inject_every,
    };
    let trace = simulate(&file, &cfg)?;
    let text = if a.quiet { trace.summary() } else { trace.render() };
    write!(out, "{text}").map_err(io)?;
    Ok(if trace.violations() == 0 { EXIT_REALIZABLE } else { EXIT_UNREALIZABLE })
}
