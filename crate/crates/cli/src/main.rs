use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mzia::dsl::{parse_model, parse_model_unchecked, LoadError};
use mzia::model::{validate_model, Mzia};
use mzia::refinement::{rc, Direction, RefinementOptions};
use mzia::zonegraph::{build_zone_automaton_with, post_traced, simulate, BuildOptions, Step, SubsumptionMode, ZoneAutomaton};
use mzia::zschema::SchemaMode;
use mzia::Bound;

#[derive(Parser)]
#[command(name = "mzia", version, about = "Zone construction and refinement checking for multirate hybrid interface automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and report validation errors and warnings.
    Validate { file: PathBuf },
    /// Build and print the zone automaton.
    Reach {
        file: PathBuf,
        /// Print every intermediate matrix of each successor computation.
        #[arg(long)]
        dump_dcm: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Point edges at covering states instead of keeping subsumed leaves.
        #[arg(long)]
        redirect: bool,
    },
    /// Decide whether the first model refines the second.
    Check {
        p: PathBuf,
        q: PathBuf,
        #[arg(long, default_value = "guarded")]
        mode: SchemaMode,
        /// Print the failure path when the check fails.
        #[arg(long)]
        witness: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also require matching delay capability.
        #[arg(long)]
        strict_delay: bool,
        #[arg(long, default_value = "algorithm")]
        direction: Direction,
    },
    /// Print a seeded random run.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

fn load(path: &Path) -> Result<Mzia, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_model(&text).map_err(|e| match e {
        LoadError::Parse(p) => format!("{}:{p}", path.display()),
        LoadError::Invalid(r) => format!("{}: invalid model\n{r}", path.display()),
    })
}

fn build(m: &Mzia, redirect: bool) -> Result<ZoneAutomaton, String> {
    let opts = BuildOptions {
        subsumption: if redirect { SubsumptionMode::Redirect } else { SubsumptionMode::Leaf },
        ..BuildOptions::default()
    };
    build_zone_automaton_with(m, &opts).map_err(|e| format!("{}: {e}", m.name))
}

fn bound_json(b: &Bound) -> Value {
    match b {
        Bound::Infinity => Value::Null,
        Bound::Finite { value, strict } => json!({ "value": value.to_string(), "strict": strict }),
    }
}

fn automaton_json(za: &ZoneAutomaton) -> Result<Value, String> {
    let mut states = Vec::new();
    for s in &za.states {
        let zone = s.sym.render(&za.clock).map_err(|e| e.to_string())?;
        let ci = s.sym.zone.index_of(&za.clock).map_err(|e| e.to_string())?;
        let lower = match s.sym.zone.bound(0, ci) {
            Bound::Infinity => Bound::Infinity,
            Bound::Finite { value, strict } => Bound::Finite { value: -value, strict: *strict },
        };
        states.push(json!({
            "id": s.id,
            "location": s.sym.location,
            "zone": zone,
            "clock": { "lower": bound_json(&lower), "upper": bound_json(s.sym.zone.bound(ci, 0)) },
            "schema": s.schema.to_string(),
            "can_delay": s.can_delay,
            "subsumed_by": za.subsumed.get(&s.id),
        }));
    }
    Ok(json!({
        "name": za.name,
        "initial": za.initial,
        "states": states,
        "transitions": za.transitions,
    }))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let m = parse_model_unchecked(&text).map_err(|p| format!("{}:{p}", file.display()))?;
            let report = validate_model(&m);
            print!("{report}");
            println!("{}: {} error(s), {} warning(s)", file.display(), report.errors.len(), report.warnings.len());
            Ok(if report.is_ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Reach { file, dump_dcm, format, redirect } => {
            let m = load(&file)?;
            let za = build(&m, redirect)?;
            match format {
                Format::Json => {
                    let out = automaton_json(&za)?;
                    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
                }
                Format::Text => {
                    print!("{za}");
                    if dump_dcm {
                        for e in &za.transitions {
                            let t = &m.transitions[e.transition];
                            let (_, trace) = post_traced(&m, &za.states[e.source].sym, t).map_err(|e| e.to_string())?;
                            println!();
                            println!("== s{} --{}--> s{} ==", e.source, e.action, e.target);
                            for (label, d) in trace.steps {
                                println!("-- {label}");
                                print!("{d}");
                            }
                        }
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { p, q, mode, witness, format, strict_delay, direction } => {
            let (mp, mq) = (load(&p)?, load(&q)?);
            let (zp, zq) = (build(&mp, false)?, build(&mq, false)?);
            let opts = RefinementOptions { mode, strict_delay, direction, ..RefinementOptions::default() };
            let v = rc(&zp, &zq, &opts).map_err(|e| e.to_string())?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?),
                Format::Text if witness => print!("{v}"),
                Format::Text => println!("{} (mode {})", if v.refines { "refines" } else { "does not refine" }, v.mode),
            }
            Ok(if v.refines { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Simulate { file, seed, steps, format } => {
            let m = load(&file)?;
            let t = simulate(&m, seed, steps).map_err(|e| e.to_string())?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&t).map_err(|e| e.to_string())?),
                Format::Text => {
                    let show = |s: &mzia::zonegraph::ConcreteState| {
                        let vals: Vec<String> = s.values.iter().map(|(k, v)| format!("{k}={v}")).collect();
                        format!("({}, {})", s.location, vals.join(", "))
                    };
                    println!("start {}", show(&t.start));
                    for step in &t.steps {
                        match step {
                            Step::Delay { duration, state } => println!("delay {duration} -> {}", show(state)),
                            Step::Action { action, state, .. } => println!("{action} -> {}", show(state)),
                        }
                    }
                    if t.deadlock {
                        println!("deadlock");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
