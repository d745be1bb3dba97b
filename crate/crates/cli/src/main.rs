//! `doctheory`: check, run, analyze, and generate document theories.
//!
//! Exit codes are a stable contract:
//!
//! | code | meaning                                              |
//! |------|------------------------------------------------------|
//! | 0    | success (`run`: terminated; `analyze`: poly-bounded) |
//! | 1    | the input failed to parse or validate                |
//! | 2    | `run`: the chase aborted and rolled back             |
//! | 3    | `run`: fuel ran out before the queue drained         |
//! | 4    | `analyze`: terminating but without polynomial bounds |
//! | 5    | `analyze`: cyclic, possibly non-terminating          |
//! | 64   | command-line usage error                             |
//! | 74   | I/O error                                            |
//!
//! Every command prints a human summary by default and a machine-readable
//! record with `--json`. `run --trace` additionally emits one JSON object
//! per processed instruction, before the final summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use doctheory::analysis::{analyze, document_count};
use doctheory::chase::{run_chase, ChaseOptions, ChaseStatus};
use doctheory::dsl::{parse_queue, parse_theory, print_queue, print_theory};
use doctheory::reductions::{encode_tm, exp_theory, parse_tm};
use doctheory::theory::Theory;
use doctheory::Value;

const EXIT_INVALID: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_FUEL: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "doctheory", version, about = "Document theories: validate, chase, grade, generate")]
struct Cli {
    /// Machine-readable JSON output instead of the human format.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a theory file.
    Check {
        /// Path to a `.dth` theory.
        theory: PathBuf,
    },
    /// Chase a queue against a theory, starting from the empty model.
    Run {
        /// Path to a `.dth` theory.
        theory: PathBuf,
        /// Path to a `.queue` file, one instruction value per line,
        /// top line first to run.
        queue: PathBuf,
        /// Maximum instructions to process before giving up.
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        /// Emit one JSON record per processed instruction.
        #[arg(long)]
        trace: bool,
        /// Print the final model, one version tuple per line, newest last.
        #[arg(long)]
        dump_model: bool,
        /// Store `<>` instead of situations in new version tuples. Cuts
        /// memory on long runs; safe while no guard reads situations.
        #[arg(long)]
        elide_situations: bool,
    },
    /// Grade a theory: cycles, document generators, and effect bounds.
    Analyze {
        /// Path to a `.dth` theory.
        theory: PathBuf,
    },
    /// Write ready-to-run theory and queue fixtures.
    #[command(subcommand)]
    Gen(Gen),
}

#[derive(Subcommand)]
enum Gen {
    /// Encode a machine table as a stepping theory plus its start queue.
    Tm {
        /// Path to a `.tm` transition table.
        machine: PathBuf,
        /// Output directory; defaults to the machine file's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Emit the document-doubling cascade with `k` levels seeded by `n`.
    Exp {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// A failed command, split by which exit code it owes the caller.
enum Failure {
    /// Parse or validation problem: exit 1.
    Invalid(String),
    /// Filesystem problem: exit 74.
    Io(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Check { theory } => check(theory, cli.json),
        Command::Run {
            theory,
            queue,
            fuel,
            trace,
            dump_model,
            elide_situations,
        } => run(
            theory,
            queue,
            ChaseOptions {
                fuel: *fuel,
                record_trace: *trace,
                elide_situations: *elide_situations,
            },
            *dump_model,
            cli.json,
        ),
        Command::Analyze { theory } => analyze_file(theory, cli.json),
        Command::Gen(Gen::Tm { machine, out_dir }) => gen_tm(machine, out_dir.as_deref(), cli.json),
        Command::Gen(Gen::Exp { k, n, out_dir }) => {
            let (th, queue) = exp_theory(*k, *n);
            write_fixture(out_dir, &format!("exp_k{k}_n{n}"), &th, &queue, cli.json)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|err| Failure::Io(format!("{}: {err}", path.display())))
}

fn load_theory(path: &Path) -> Result<Theory, Failure> {
    parse_theory(&read(path)?)
        .map_err(|err| Failure::Invalid(format!("{}: {err}", path.display())))
}

fn check(path: &Path, json: bool) -> Result<u8, Failure> {
    let text = read(path)?;
    match parse_theory(&text) {
        Ok(th) => {
            let rules = th.set_rules.len() + th.trans_rules.len();
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "ok": true,
                        "theory": th.name.as_ref(),
                        "forms": th.forms.len(),
                        "rules": rules,
                    })
                );
            } else {
                println!(
                    "ok: theory {} (forms: {}, rules: {})",
                    th.name,
                    th.forms.len(),
                    rules
                );
            }
            Ok(0)
        }
        Err(err) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({ "ok": false, "error": err.to_string() })
                );
            } else {
                eprintln!("error: {}: {err}", path.display());
            }
            Ok(EXIT_INVALID)
        }
    }
}

/// Final state of a `run`, rendered for `--json`.
#[derive(Serialize)]
struct RunVerdict<'a> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
    steps: u64,
    model_len: usize,
    documents: usize,
    queue_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<Vec<String>>,
}

fn run(
    theory_path: &Path,
    queue_path: &Path,
    options: ChaseOptions,
    dump_model: bool,
    json: bool,
) -> Result<u8, Failure> {
    let th = load_theory(theory_path)?;
    let queue = parse_queue(&read(queue_path)?, &th.cfg)
        .map_err(|err| Failure::Invalid(format!("{}: {err}", queue_path.display())))?;

    let chase = run_chase(&th, Value::empty(), queue, options);
    for event in chase.trace() {
        println!(
            "{}",
            serde_json::to_string(&event.to_record()).expect("trace record serializes")
        );
    }

    let (code, reason) = match &chase.status {
        ChaseStatus::Terminated => (0, None),
        ChaseStatus::Aborted(reason) => (EXIT_ABORTED, Some(reason.code())),
        ChaseStatus::FuelExhausted => (EXIT_FUEL, None),
        ChaseStatus::Running => unreachable!("run_chase drives the chase to quiescence"),
    };
    let tuples: Vec<String> = chase
        .model
        .as_list()
        .map(|l| l.to_vec().iter().map(Value::to_string).collect())
        .unwrap_or_default();
    let documents = document_count(&chase.model);

    if json {
        let verdict = RunVerdict {
            status: chase.status.code(),
            reason,
            steps: chase.steps,
            model_len: chase.model_len(),
            documents,
            queue_len: chase.queue_len(),
            model: dump_model.then_some(tuples),
        };
        println!(
            "{}",
            serde_json::to_string(&verdict).expect("verdict serializes")
        );
    } else {
        let label = match reason {
            Some(reason) => format!("{} ({reason})", chase.status.code()),
            None => chase.status.code().to_string(),
        };
        println!(
            "{label} after {} steps ({} tuples, {documents} documents, {} queued)",
            chase.steps,
            chase.model_len(),
            chase.queue_len()
        );
        if dump_model {
            for tuple in &tuples {
                println!("{tuple}");
            }
        }
    }
    Ok(code)
}

fn analyze_file(path: &Path, json: bool) -> Result<u8, Failure> {
    let th = load_theory(path)?;
    let verdict = analyze(&th);
    if json {
        println!(
            "{}",
            serde_json::to_string(&verdict).expect("verdict serializes")
        );
    } else {
        println!("theory {}: {}", th.name, verdict.classification.code());
        println!(
            "locally simple: {}",
            if verdict.locally_simple { "yes" } else { "no" }
        );
        if let Some(cycle) = &verdict.cycle {
            println!("cycle: {}", cycle.join(" -> "));
        }
        if verdict.doc_generating.is_empty() {
            println!("document-generating terms: none");
        } else {
            println!("document-generating terms:");
            for loc in &verdict.doc_generating {
                println!("  - {loc}");
            }
        }
        if let Some(k_max) = verdict.k_max {
            println!("width n = {}, max rank k = {k_max}", verdict.n);
        }
        if let Some(bound) = &verdict.steps_bound {
            println!("step bound: {bound}");
        }
        if let Some(bound) = &verdict.documents_bound {
            println!("document bound: {bound}");
        }
    }
    Ok(verdict.classification.exit_code() as u8)
}

fn gen_tm(machine: &Path, out_dir: Option<&Path>, json: bool) -> Result<u8, Failure> {
    let text = read(machine)?;
    let spec = parse_tm(&text)
        .map_err(|err| Failure::Invalid(format!("{}: {err}", machine.display())))?;
    let (th, queue) = encode_tm(&spec);
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| machine.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let stem = machine
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("machine");
    write_fixture(&dir, stem, &th, &queue, json)
}

fn write_fixture(
    dir: &Path,
    stem: &str,
    th: &Theory,
    queue: &Value,
    json: bool,
) -> Result<u8, Failure> {
    let text = print_theory(th).map_err(|err| Failure::Invalid(err.to_string()))?;
    let theory_path = dir.join(format!("{stem}.dth"));
    let queue_path = dir.join(format!("{stem}.queue"));
    fs::write(&theory_path, text)
        .map_err(|err| Failure::Io(format!("{}: {err}", theory_path.display())))?;
    fs::write(&queue_path, print_queue(queue))
        .map_err(|err| Failure::Io(format!("{}: {err}", queue_path.display())))?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "theory": theory_path.display().to_string(),
                "queue": queue_path.display().to_string(),
            })
        );
    } else {
        println!("wrote {}", theory_path.display());
        println!("wrote {}", queue_path.display());
    }
    Ok(0)
}
