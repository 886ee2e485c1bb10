//! Command-line front end: validation, realisability checks, synthesis,
//! evaluation, verification, corpus generation and game export.
//!
//! Exit codes: 0 realisable (or success), 1 unrealisable (or verification
//! failure), 2 unknown within the given bounds, 3 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use seqsynth::asynchronous::{decide, AsyncVerdict, WitnessBounds};
use seqsynth::corpus;
use seqsynth::format::{
    parse_dfa, parse_spec, print_spec, spec_file_of_multi, spec_file_of_sequential, LoadedSpec,
};
use seqsynth::game::{build_game, export_dot, stats, DEFAULT_VERTEX_CAP};
use seqsynth::synchronous::{check_residual_property, SyncVerdict};
use seqsynth::transducer::{classify, MultiSequentialTransducer, SequentialTransducer};
use seqsynth::verify::verify_realiser;
use seqsynth::Alphabet;

#[derive(Parser)]
#[command(
    name = "seqsynth",
    version,
    about = "Realisability checking and synthesis for unions of sequential transducers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sync,
    Async,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a specification file and print its classification.
    Validate { path: PathBuf },
    /// Decide realisability and print the verdict with its certificate.
    Check {
        path: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Largest delay bound tried by the game search.
        #[arg(long, default_value_t = 6)]
        max_k: usize,
        /// Longest witness prefix.
        #[arg(long, default_value_t = 4)]
        witness_u: usize,
        /// Longest witness cycle.
        #[arg(long, default_value_t = 4)]
        witness_v: usize,
        /// Largest witness node count.
        #[arg(long, default_value_t = 7)]
        witness_nodes: usize,
        /// Vertex cap for game construction (also SEQSYNTH_BUDGET).
        #[arg(long)]
        budget: Option<usize>,
        /// Print the verdict as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Synthesise a realiser and write it as a single-part specification.
    Synthesize {
        path: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_k: usize,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate the specification on one input word.
    Run {
        path: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// Check a realiser against a specification.
    Verify {
        spec: PathBuf,
        realiser: PathBuf,
        #[arg(long, default_value_t = 10)]
        test_len: usize,
    },
    /// Generate a specification from one of the built-in families.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Build the bounded synthesis game, print its statistics, export DOT.
    Game {
        path: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also write the statistics JSON to a file.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Swap-or-copy family over a list of deterministic automata.
    Hardness {
        /// Deterministic automaton files (repeatable).
        #[arg(long = "dfa", required = true)]
        dfas: Vec<PathBuf>,
        /// Fix the number of separator symbols to one (letter-to-letter).
        #[arg(long)]
        m1: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Move-last-letter-to-front family over a ranked pair alphabet.
    Badjpair {
        #[arg(long)]
        n: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fixed-pattern subword relation.
    Subword {
        #[arg(long)]
        word: String,
        #[arg(long)]
        alphabet: String,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_spec(path: &Path) -> Result<LoadedSpec, String> {
    parse_spec(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_parts(path: &Path) -> Result<MultiSequentialTransducer, String> {
    match load_spec(path)? {
        LoadedSpec::Parts(t) => Ok(t),
        LoadedSpec::General(_) => Err(format!(
            "{}: this command needs a part-structured specification",
            path.display()
        )),
    }
}

fn load_realiser(path: &Path) -> Result<SequentialTransducer, String> {
    match load_spec(path)? {
        LoadedSpec::Parts(t) if t.part_count() == 1 => Ok(t.part(0).clone()),
        LoadedSpec::Parts(_) => Err(format!(
            "{}: a realiser file must carry exactly one part",
            path.display()
        )),
        LoadedSpec::General(t) => {
            SequentialTransducer::try_from(t).map_err(|e| format!("{}: {e}", path.display()))
        }
    }
}

fn vertex_cap(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("SEQSYNTH_BUDGET")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(DEFAULT_VERTEX_CAP)
}

fn cmd_validate(path: &Path) -> Result<u8, String> {
    match load_spec(path)? {
        LoadedSpec::Parts(t) => {
            let c = classify(&t.union(), 4);
            println!(
                "{} parts, {}, {}",
                t.part_count(),
                if c.synchronous { "synchronous" } else { "not synchronous" },
                if t.is_trim() { "trim" } else { "not trim" }
            );
        }
        LoadedSpec::General(t) => {
            let c = classify(&t, 4);
            println!(
                "general transducer, {} states, {}, {}",
                t.state_count(),
                if c.synchronous { "synchronous" } else { "not synchronous" },
                if t.is_trim() { "trim" } else { "not trim" }
            );
        }
    }
    Ok(0)
}

fn cmd_check(
    path: &Path,
    mode: Mode,
    max_k: usize,
    bounds: WitnessBounds,
    budget: Option<usize>,
    json: bool,
) -> Result<u8, String> {
    let t = load_parts(path)?.trim();
    match mode {
        Mode::Sync => {
            let verdict = check_residual_property(&t).map_err(|e| e.to_string())?;
            match verdict {
                SyncVerdict::Realisable { realiser, .. } => {
                    if json {
                        let out = serde_json::json!({
                            "format": 1,
                            "mode": "sync",
                            "verdict": "REALISABLE",
                            "realiser": spec_file_of_sequential("realiser", &realiser),
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!("REALISABLE ({} realiser states)", realiser.state_count());
                    }
                    Ok(0)
                }
                SyncVerdict::Unrealisable { certificate } => {
                    if json {
                        let out = serde_json::json!({
                            "format": 1,
                            "mode": "sync",
                            "verdict": "UNREALISABLE",
                            "certificate": certificate,
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!("UNREALISABLE critical prefix {:?}", certificate.prefix);
                    }
                    Ok(1)
                }
            }
        }
        Mode::Async => {
            let cap = vertex_cap(budget);
            match decide(&t, max_k, &bounds, cap) {
                AsyncVerdict::Realisable { k, realiser } => {
                    if json {
                        let out = serde_json::json!({
                            "format": 1,
                            "mode": "async",
                            "verdict": "REALISABLE",
                            "k": k,
                            "realiser": spec_file_of_sequential("realiser", &realiser),
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!(
                            "REALISABLE K={k} ({} realiser states)",
                            realiser.state_count()
                        );
                    }
                    Ok(0)
                }
                AsyncVerdict::Unrealisable { witness } => {
                    if json {
                        let out = serde_json::json!({
                            "format": 1,
                            "mode": "async",
                            "verdict": "UNREALISABLE",
                            "witness": witness,
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!(
                            "UNREALISABLE witness with {} nodes, root loop ({:?}, {:?})",
                            witness.node_count(),
                            witness.root.prefix,
                            witness.root.cycle
                        );
                    }
                    Ok(1)
                }
                AsyncVerdict::Unknown { k_max, bounds } => {
                    if json {
                        let out = serde_json::json!({
                            "format": 1,
                            "mode": "async",
                            "verdict": "UNKNOWN",
                            "k_max": k_max,
                            "witness_bounds": bounds,
                        });
                        println!("{}", serde_json::to_string_pretty(&out).unwrap());
                    } else {
                        println!(
                            "UNKNOWN (bounds exhausted: K<={k_max}, witness u<={} v<={} nodes<={})",
                            bounds.max_u, bounds.max_v, bounds.max_nodes
                        );
                    }
                    Ok(2)
                }
            }
        }
    }
}

fn cmd_synthesize(
    path: &Path,
    max_k: usize,
    budget: Option<usize>,
    output: &Path,
) -> Result<u8, String> {
    let t = load_parts(path)?.trim();
    let cap = vertex_cap(budget);
    match decide(&t, max_k, &WitnessBounds::default(), cap) {
        AsyncVerdict::Realisable { k, realiser } => {
            write_file(
                output,
                &print_spec(&spec_file_of_sequential("realiser", &realiser)),
            )?;
            println!("K={k} states={}", realiser.state_count());
            Ok(0)
        }
        AsyncVerdict::Unrealisable { .. } => {
            println!("UNREALISABLE");
            Ok(1)
        }
        AsyncVerdict::Unknown { k_max, .. } => {
            println!("UNKNOWN (no winning K up to {k_max})");
            Ok(2)
        }
    }
}

fn cmd_run(path: &Path, input: &str) -> Result<u8, String> {
    let spec = load_spec(path)?;
    let outputs = spec
        .as_transducer()
        .evaluate(input)
        .map_err(|e| e.to_string())?;
    for out in outputs {
        println!("{out}");
    }
    Ok(0)
}

fn cmd_verify(spec: &Path, realiser: &Path, test_len: usize) -> Result<u8, String> {
    let spec = load_spec(spec)?;
    let r = load_realiser(realiser)?;
    let report =
        verify_realiser(&r, &spec.as_transducer(), test_len).map_err(|e| e.to_string())?;
    let out = serde_json::json!({
        "format": 1,
        "report": report,
    });
    println!("{}", serde_json::to_string_pretty(&out).unwrap());
    Ok(if report.ok() { 0 } else { 1 })
}

fn cmd_gen(family: &GenFamily) -> Result<u8, String> {
    match family {
        GenFamily::Hardness { dfas, m1, output } => {
            let mut automata = Vec::new();
            for path in dfas {
                automata.push(parse_dfa(&read_file(path)?).map_err(|e| e.to_string())?);
            }
            let t = corpus::gen_hardness(&automata, *m1).map_err(|e| e.to_string())?;
            write_file(output, &print_spec(&spec_file_of_multi(&t)))?;
            println!("{} parts, {} states", t.part_count(), t.state_count());
        }
        GenFamily::Badjpair { n, output } => {
            let t = corpus::gen_badjpair(*n).map_err(|e| e.to_string())?;
            write_file(output, &print_spec(&spec_file_of_multi(&t)))?;
            println!("{} parts, {} states", t.part_count(), t.state_count());
        }
        GenFamily::Subword { word, alphabet, output } => {
            let alphabet = Alphabet::from_str_symbols(alphabet).map_err(|e| e.to_string())?;
            let t = corpus::gen_subword(word, &alphabet).map_err(|e| e.to_string())?;
            write_file(
                output,
                &print_spec(&spec_file_of_sequential(&format!("subword-{word}"), &t)),
            )?;
            println!("1 part, {} states", t.state_count());
        }
    }
    Ok(0)
}

fn cmd_game(
    path: &Path,
    k: usize,
    dot: Option<&Path>,
    stats_path: Option<&Path>,
    budget: Option<usize>,
) -> Result<u8, String> {
    let t = load_parts(path)?.trim();
    let cap = vertex_cap(budget);
    let g = build_game(&t, k, cap).map_err(|e| e.to_string())?;
    if let Some(dot_path) = dot {
        write_file(dot_path, &export_dot(&g))?;
    }
    let out = serde_json::json!({
        "format": 1,
        "stats": stats(&g),
    });
    let rendered = serde_json::to_string_pretty(&out).unwrap();
    if let Some(stats_path) = stats_path {
        write_file(stats_path, &format!("{rendered}\n"))?;
    }
    println!("{rendered}");
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { path } => cmd_validate(path),
        Command::Check {
            path,
            mode,
            max_k,
            witness_u,
            witness_v,
            witness_nodes,
            budget,
            json,
        } => cmd_check(
            path,
            *mode,
            *max_k,
            WitnessBounds {
                max_u: *witness_u,
                max_v: *witness_v,
                max_nodes: *witness_nodes,
                budget: WitnessBounds::default().budget,
            },
            *budget,
            *json,
        ),
        Command::Synthesize { path, max_k, budget, output } => {
            cmd_synthesize(path, *max_k, *budget, output)
        }
        Command::Run { path, input } => cmd_run(path, input),
        Command::Verify { spec, realiser, test_len } => cmd_verify(spec, realiser, *test_len),
        Command::Gen { family } => cmd_gen(family),
        Command::Game { path, k, dot, stats, budget } => {
            cmd_game(path, *k, dot.as_deref(), stats.as_deref(), *budget)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(3)
        }
    }
}
