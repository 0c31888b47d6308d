//! Command-line front end.
//!
//! Every subcommand reads program text (one instruction per line, or
//! `;`-separated), works purely in memory, and writes deterministic output,
//! so the tool is scriptable and diff-friendly.  Exit codes separate the
//! ways an invocation can go wrong: `0` success, `1` bad input (parse,
//! dialect or configuration errors), `2` a property that was checked and
//! found violated (inequivalent programs, failed route-agreement checks),
//! `3` a resource limit hit while composing with a service.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::pga::{canonicalize, extract_thread, CanonicalProgram};
use crate::projections::{
    corpus, expansion_size, expansion_skip_hazards, lookup_route, password_examples,
    pgld_behaviour, pgld_to_pga, ProjectionConfig, ProjectionError,
};
use crate::syntax::{parse_program, render_program, Dialect, SourceProgram};
use crate::threads::{bisim_distinguish, thread_to_dot, thread_to_json, Thread, UseError};

/// Length cap for randomly generated route-agreement check programs.
const RANDOM_PROGRAM_LEN: usize = 12;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_PROPERTY: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DialectArg {
    Pga,
    Pgld,
    Pglddii,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Dialect {
        match d {
            DialectArg::Pga => Dialect::Pga,
            DialectArg::Pgld => Dialect::Pgld,
            DialectArg::Pglddii => Dialect::Pglddii,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum FormatArg {
    #[default]
    Json,
    Dot,
}

#[derive(Debug, Parser)]
#[command(
    name = "pgakit",
    about = "Instruction-sequence toolkit: parse, project, extract and compare PGA-family programs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Bounds {
    /// Number of registers.
    #[arg(long)]
    maxr: u32,
    /// Largest storable register value.
    #[arg(long)]
    maxn: u32,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a program and print its normalized rendering.
    Parse {
        #[arg(long, value_enum)]
        dialect: DialectArg,
        file: PathBuf,
    },
    /// Translate a PGLDdii program into PGLD.
    Project {
        /// Source dialect (only `pglddii` is supported).
        #[arg(long, value_enum)]
        from: DialectArg,
        /// Target dialect (only `pgld` is supported).
        #[arg(long, value_enum)]
        to: DialectArg,
        /// Use the expansion route (dispatch trees) instead of the service
        /// route (rfdt method wrapping).
        #[arg(long)]
        alt: bool,
        #[command(flatten)]
        bounds: Bounds,
        file: PathBuf,
    },
    /// Extract the behaviour of a PGA or PGLD program as a thread graph.
    Extract {
        #[arg(long, value_enum)]
        dialect: DialectArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        file: PathBuf,
    },
    /// Composed, abstracted behaviour of a PGLDdii program.
    Behaviour {
        #[command(flatten)]
        bounds: Bounds,
        /// Use the expansion route instead of the service route.
        #[arg(long)]
        alt: bool,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        file: PathBuf,
    },
    /// Decide behavioural equivalence of two programs.
    Equiv {
        file_a: PathBuf,
        file_b: PathBuf,
        /// Dialect for both files unless overridden per file.
        #[arg(long, value_enum)]
        dialect: Option<DialectArg>,
        #[arg(long, value_enum)]
        dialect_a: Option<DialectArg>,
        #[arg(long, value_enum)]
        dialect_b: Option<DialectArg>,
        /// Number of registers (required for PGLDdii files).
        #[arg(long)]
        maxr: Option<u32>,
        /// Largest storable register value (required for PGLDdii files).
        #[arg(long)]
        maxn: Option<u32>,
        /// Use the expansion route for PGLDdii files.
        #[arg(long)]
        alt: bool,
    },
    /// Check that the two PGLDdii semantics routes agree, on the given
    /// files and/or on a seeded random corpus.
    CheckTheorem {
        #[command(flatten)]
        bounds: Bounds,
        /// Number of random programs to check.
        #[arg(long, default_value_t = 0)]
        count: u32,
        /// Seed for the random corpus.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        files: Vec<PathBuf>,
    },
    /// Print the number of instructions one proto-instruction expands to.
    Stats {
        #[command(flatten)]
        bounds: Bounds,
    },
    /// Emit built-in example programs.
    Fixtures {
        #[command(subcommand)]
        fixture: Fixture,
    },
}

#[derive(Debug, Subcommand)]
enum Fixture {
    /// The n-bit password checker.
    Password {
        /// Number of password bits.
        #[arg(long)]
        n: u32,
        /// Emit the hand-expanded PGLD decision tree instead of the
        /// PGLDdii program.
        #[arg(long)]
        expanded: bool,
    },
}

enum Failure {
    /// Bad input: parse, dialect, configuration or I/O problems.
    Domain(String),
    /// A checked property does not hold; details already on stdout.
    Property,
    /// A resource limit was hit.
    Resource(String),
}

impl Failure {
    fn domain(msg: impl Into<String>) -> Failure {
        Failure::Domain(msg.into())
    }
}

fn projection_failure(e: ProjectionError) -> Failure {
    match e {
        ProjectionError::Use(UseError::StateSpaceExceeded { .. }) => {
            Failure::Resource(e.to_string())
        }
        other => Failure::Domain(other.to_string()),
    }
}

/// Run the tool on the given arguments, writing results to `out` and
/// diagnostics to `err`; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {}", first_line(&e.to_string()));
            return EXIT_DOMAIN;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {}", first_line(&msg));
            EXIT_DOMAIN
        }
        Err(Failure::Property) => EXIT_PROPERTY,
        Err(Failure::Resource(msg)) => {
            let _ = writeln!(err, "error: {}", first_line(&msg));
            EXIT_RESOURCE
        }
    }
}

fn first_line(msg: &str) -> &str {
    msg.lines().next().unwrap_or(msg)
}

fn load_program(path: &Path, dialect: Dialect) -> Result<SourceProgram, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::domain(format!("cannot read {}: {e}", path.display())))?;
    parse_program(&text, dialect).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn render_thread(thread: &Thread, format: FormatArg) -> String {
    match format {
        FormatArg::Json => thread_to_json(thread),
        FormatArg::Dot => thread_to_dot(thread),
    }
}

/// The behaviour a file denotes, by dialect: PGA programs are finite
/// instruction sequences, PGLD programs go through the PGA translation, and
/// PGLDdii programs through the selected semantics route.
fn file_behaviour(
    path: &Path,
    dialect: Dialect,
    bounds: Option<(u32, u32)>,
    alt: bool,
) -> Result<Thread, Failure> {
    let program = load_program(path, dialect)?;
    match dialect {
        Dialect::Pga => Ok(extract_thread(&CanonicalProgram::finite(
            program.instructions().to_vec(),
        ))),
        Dialect::Pgld => pgld_behaviour(&program).map_err(projection_failure),
        Dialect::Pglddii => {
            let (maxr, maxn) = bounds.ok_or_else(|| {
                Failure::domain(format!(
                    "{}: --maxr and --maxn are required for PGLDdii files",
                    path.display()
                ))
            })?;
            let cfg =
                ProjectionConfig::new(maxr, maxn).map_err(|e| Failure::domain(e.to_string()))?;
            let route_name = if alt { "alt" } else { "standard" };
            let route = lookup_route(route_name).expect("both routes are registered");
            route.behaviour(&program, &cfg).map_err(projection_failure)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Parse { dialect, file } => {
            let program = load_program(&file, dialect.into())?;
            let _ = write!(out, "{}", render_program(&program));
            Ok(())
        }
        Command::Project {
            from,
            to,
            alt,
            bounds,
            file,
        } => {
            if from != DialectArg::Pglddii || to != DialectArg::Pgld {
                return Err(Failure::domain(
                    "only --from pglddii --to pgld is supported",
                ));
            }
            let cfg = ProjectionConfig::new(bounds.maxr, bounds.maxn)
                .map_err(|e| Failure::domain(e.to_string()))?;
            let program = load_program(&file, Dialect::Pglddii)?;
            let route_name = if alt { "alt" } else { "standard" };
            let route = lookup_route(route_name).expect("both routes are registered");
            let image = route.project(&program, &cfg).map_err(projection_failure)?;
            let _ = write!(out, "{}", render_program(&image));
            Ok(())
        }
        Command::Extract {
            dialect,
            format,
            file,
        } => {
            let thread = match dialect {
                DialectArg::Pga => extract_thread(&CanonicalProgram::finite(
                    load_program(&file, Dialect::Pga)?.instructions().to_vec(),
                )),
                DialectArg::Pgld => {
                    let program = load_program(&file, Dialect::Pgld)?;
                    let term = pgld_to_pga(&program).map_err(projection_failure)?;
                    extract_thread(&canonicalize(&term))
                }
                DialectArg::Pglddii => {
                    return Err(Failure::domain(
                        "extract supports --dialect pga or pgld; use `behaviour` for pglddii",
                    ))
                }
            };
            let _ = write!(out, "{}", render_thread(&thread, format));
            Ok(())
        }
        Command::Behaviour {
            bounds,
            alt,
            format,
            file,
        } => {
            let thread = file_behaviour(
                &file,
                Dialect::Pglddii,
                Some((bounds.maxr, bounds.maxn)),
                alt,
            )?;
            let _ = write!(out, "{}", render_thread(&thread, format));
            Ok(())
        }
        Command::Equiv {
            file_a,
            file_b,
            dialect,
            dialect_a,
            dialect_b,
            maxr,
            maxn,
            alt,
        } => {
            let pick = |specific: Option<DialectArg>, which: &str| {
                specific.or(dialect).map(Dialect::from).ok_or_else(|| {
                    Failure::domain(format!(
                        "no dialect given for {which} (use --dialect or --dialect-{which})"
                    ))
                })
            };
            let da = pick(dialect_a, "a")?;
            let db = pick(dialect_b, "b")?;
            let bounds = maxr.zip(maxn);
            let ta = file_behaviour(&file_a, da, bounds, alt)?;
            let tb = file_behaviour(&file_b, db, bounds, alt)?;
            match bisim_distinguish(&ta, &tb) {
                None => {
                    let _ = writeln!(out, "BISIMILAR");
                    Ok(())
                }
                Some(d) => {
                    let _ = writeln!(out, "NOT BISIMILAR");
                    let _ = writeln!(out, "{d}");
                    Err(Failure::Property)
                }
            }
        }
        Command::CheckTheorem {
            bounds,
            count,
            seed,
            files,
        } => check_theorem(out, bounds, count, seed, &files),
        Command::Stats { bounds } => {
            let size = expansion_size(bounds.maxr, bounds.maxn)
                .map_err(|e| Failure::domain(e.to_string()))?;
            let _ = writeln!(out, "{size}");
            Ok(())
        }
        Command::Fixtures {
            fixture: Fixture::Password { n, expanded },
        } => {
            if !(1..=16).contains(&n) {
                return Err(Failure::domain("--n must be in [1..=16]"));
            }
            let (dii, tree) = password_examples(n);
            let program = if expanded { tree } else { dii };
            let _ = write!(out, "{}", render_program(&program));
            Ok(())
        }
    }
}

fn check_theorem(
    out: &mut dyn Write,
    bounds: Bounds,
    count: u32,
    seed: u64,
    files: &[PathBuf],
) -> Result<(), Failure> {
    let cfg = ProjectionConfig::new(bounds.maxr, bounds.maxn)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let standard = lookup_route("standard").expect("registered");
    let alt = lookup_route("alt").expect("registered");
    let mut checked = 0u32;
    let mut failed = 0u32;
    let mut verdict =
        |label: &str, program: &SourceProgram, out: &mut dyn Write| -> Result<(), Failure> {
            let a = standard
                .behaviour(program, &cfg)
                .map_err(projection_failure)?;
            let b = alt.behaviour(program, &cfg).map_err(projection_failure)?;
            checked += 1;
            if crate::threads::bisim_equal(&a, &b) {
                let _ = writeln!(out, "PASS {label}");
            } else {
                failed += 1;
                let hazards = expansion_skip_hazards(program);
                if hazards.is_empty() {
                    let _ = writeln!(out, "FAIL {label}");
                } else {
                    let _ = writeln!(
                        out,
                        "FAIL {label} (test directly before a proto-instruction at {})",
                        hazards
                            .iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>()
                            .join(",")
                    );
                }
                let _ = write!(out, "{}", render_program(program));
            }
            Ok(())
        };
    for file in files {
        let program = load_program(file, Dialect::Pglddii)?;
        verdict(&file.display().to_string(), &program, out)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let program =
            corpus::random_pglddii(&mut rng, RANDOM_PROGRAM_LEN, bounds.maxr, bounds.maxn);
        verdict(&format!("seed:{seed}/{i}"), &program, out)?;
    }
    let _ = writeln!(
        out,
        "checked {checked} program{}: {} passed, {failed} failed",
        if checked == 1 { "" } else { "s" },
        checked - failed
    );
    if failed > 0 {
        Err(Failure::Property)
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("pgakit").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn stats_prints_the_expansion_size() {
        let (code, out, _) = run_cli(&["stats", "--maxr", "3", "--maxn", "1"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, "43\n");
    }

    #[test]
    fn stats_rejects_bad_bounds() {
        let (code, _, err) = run_cli(&["stats", "--maxr", "0", "--maxn", "1"]);
        assert_eq!(code, EXIT_DOMAIN);
        assert!(err.starts_with("error: "));
        assert_eq!(err.lines().count(), 1);
    }

    #[test]
    fn fixtures_match_the_library_examples() {
        let (code, out, _) = run_cli(&["fixtures", "password", "--n", "2"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, render_program(&password_examples(2).0));
        let (code, out, _) = run_cli(&["fixtures", "password", "--n", "2", "--expanded"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out, render_program(&password_examples(2).1));
    }

    #[test]
    fn unknown_flag_is_a_domain_error() {
        let (code, _, err) = run_cli(&["stats", "--maxr", "1", "--maxn", "1", "--bogus"]);
        assert_eq!(code, EXIT_DOMAIN);
        assert!(err.starts_with("error: "));
    }

    #[test]
    fn check_theorem_passes_on_a_seeded_corpus() {
        let (code, out, _) = run_cli(&[
            "check-theorem",
            "--maxr",
            "1",
            "--maxn",
            "1",
            "--count",
            "5",
            "--seed",
            "42",
        ]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.matches("PASS seed:42/").count(), 5);
        assert!(out.ends_with("checked 5 programs: 5 passed, 0 failed\n"));
    }
}
