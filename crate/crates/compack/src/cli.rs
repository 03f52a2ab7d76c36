//! Command-line entry point.
//!
//! Every subcommand is a thin adapter over the library: identical inputs
//! give identical results to direct calls. Exit codes follow the scripting
//! convention
//!
//! - `0`: success,
//! - `1`: a check ran and failed (not fundamental, no witness, inequality
//!   violated, patch invalid, no unique solution),
//! - `2`: usage or input errors, including violated preconditions.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use crate::codes::{CodeError, CoronalCode, Symbol};
use crate::enumerate::{enum_codes, pi2_candidates, EnumerateError};
use crate::geometry::{load_packing, verify_compact_patch, GeometryError, DEFAULT_GEOM_TOL};
use crate::realize::{Realizer, RealizerError};
use crate::render::{corona_svg, packing_svg};
use crate::sets::{
    bootstrap_ratio_check, check_essential_witness, is_fundamental, search_essential_witness,
    shrink_essential, CodeSet, EssentialWitness, SetsError, DEFAULT_SLACK_TOL,
};
use crate::solver::{solve_tight, SolveReport, SolverConfig, SolverError, TightSystem};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Realizer(#[from] RealizerError),
    #[error(transparent)]
    Sets(#[from] SetsError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Parser, Debug)]
#[command(
    name = "compack",
    version,
    about = "Corona codes for compact disc packings: enumeration, tight realizers, witnesses, patch verification"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CodesInput {
    /// Code-list file: one `c:p0p1...` code per line, `#` comments.
    #[arg(long)]
    codes: PathBuf,
    /// Alphabet size (number of disc sizes).
    #[arg(long)]
    n: usize,
}

impl CodesInput {
    fn load(&self) -> Result<CodeSet, CliError> {
        let text = std::fs::read_to_string(&self.codes)?;
        Ok(CodeSet::parse(&text, self.n)?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate canonical codes with a fixed center, by length then key.
    EnumCodes {
        /// Alphabet size.
        #[arg(long)]
        n: usize,
        /// Center symbol.
        #[arg(long, default_value_t = 0)]
        center: usize,
        /// Largest petal-word length to enumerate.
        #[arg(long)]
        max_len: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the tight system of a code set for the normalized radii.
    Solve {
        #[command(flatten)]
        input: CodesInput,
        /// Residual tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Multistart grid resolution per unknown.
        #[arg(long, default_value_t = 9)]
        grid: usize,
        /// Jitter the multistart grid, reproducibly.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tight radii of all binary small-center codes up to length six.
    Pi2Candidates {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a code set is fundamental.
    CheckFundamental {
        #[command(flatten)]
        input: CodesInput,
    },
    /// Check a given essential witness, or search for one.
    CheckEssential {
        #[command(flatten)]
        input: CodesInput,
        /// Lower witness file (`symbol value` lines); checks instead of
        /// searching when both witnesses are given.
        #[arg(long, requires = "sigma")]
        rho: Option<PathBuf>,
        /// Upper witness file.
        #[arg(long, requires = "rho")]
        sigma: Option<PathBuf>,
        /// Slack tolerance.
        #[arg(long, default_value_t = DEFAULT_SLACK_TOL)]
        tol: f64,
        /// Write the witness as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shrink a code set to a smaller alphabet.
    Shrink {
        #[command(flatten)]
        input: CodesInput,
        /// Target alphabet size, between 2 and n-1.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the bootstrap ratio inequality for a witness pair.
    BootstrapCheck {
        #[command(flatten)]
        input: CodesInput,
        /// Realizer with every angle sum at most a full turn.
        #[arg(long)]
        rho: PathBuf,
        /// Realizer with every angle sum at least a full turn.
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SLACK_TOL)]
        tol: f64,
    },
    /// Code-length bound from a lower bound on the size ratio.
    LengthBound {
        /// Alphabet size.
        #[arg(long)]
        n: usize,
        /// Lower bound on the smallest-to-second-largest radius ratio.
        #[arg(long)]
        kappa0: f64,
    },
    /// Verify a packing patch end to end; emits a JSON report.
    VerifyPacking {
        /// Packing file (JSON).
        #[arg(long)]
        packing: PathBuf,
        /// Length tolerance for tangency and overlap.
        #[arg(long, default_value_t = DEFAULT_GEOM_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a corona as SVG.
    RenderCorona {
        /// The code, e.g. `0:22121`.
        #[arg(long)]
        code: String,
        /// Alphabet size.
        #[arg(long)]
        n: usize,
        /// Inline radii, ascending symbols, comma separated: `0.41,1.0`.
        #[arg(long, conflicts_with_all = ["realizer", "solve"])]
        values: Option<String>,
        /// Realizer file (`symbol value` lines).
        #[arg(long, conflicts_with = "solve")]
        realizer: Option<PathBuf>,
        /// Solve the code's tight system for the radii.
        #[arg(long)]
        solve: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a packing patch as SVG.
    RenderPacking {
        /// Packing file (JSON).
        #[arg(long)]
        packing: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    init_jobs(cli.jobs);
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

#[cfg(feature = "parallel")]
fn init_jobs(jobs: Option<usize>) {
    if let Some(jobs) = jobs {
        // Errors only when a global pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_jobs(jobs: Option<usize>) {
    if jobs.is_some() {
        eprintln!("note: built without the parallel feature; --jobs is ignored");
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn read_realizer(path: &Path) -> Result<Realizer, CliError> {
    Ok(Realizer::parse_text(&std::fs::read_to_string(path)?)?)
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::EnumCodes {
            n,
            center,
            max_len,
            out,
        } => {
            if center >= n.max(1) || center >= crate::codes::MAX_ALPHABET {
                return Err(CliError::Invalid(format!(
                    "center {center} out of range for alphabet of size {n}"
                )));
            }
            let mut body = String::new();
            for code in enum_codes(n, Symbol::new(center), max_len)? {
                body.push_str(&code.to_string());
                body.push('\n');
            }
            write_output(&out, &body)?;
            Ok(0)
        }

        Command::Solve {
            input,
            tol,
            max_iter,
            grid,
            seed,
            format,
            out,
        } => {
            let set = input.load()?;
            let system = TightSystem::new(&set)?;
            if let Some(seed) = seed {
                eprintln!("seed: {seed}");
            }
            let config = SolverConfig {
                tol,
                max_iter,
                grid,
                seed,
                ..SolverConfig::default()
            };
            let report = solve_tight(&system, &config)?;
            write_output(&out, &format_solve_report(&report, format))?;
            Ok(if report.solution.is_some() { 0 } else { 1 })
        }

        Command::Pi2Candidates { format, out } => {
            let candidates = pi2_candidates();
            let body = match format {
                Format::Json => {
                    let rows: Vec<_> = candidates
                        .iter()
                        .map(|c| {
                            json!({
                                "code": c.code.to_string(),
                                "r": c.r,
                                "residual": c.residual,
                            })
                        })
                        .collect();
                    format!("{}\n", serde_json::to_string_pretty(&rows)?)
                }
                _ => {
                    let mut body = String::from("code,r,residual\n");
                    for c in &candidates {
                        body.push_str(&format!(
                            "{},{:.12},{:.3e}\n",
                            c.code, c.r, c.residual
                        ));
                    }
                    body
                }
            };
            write_output(&out, &body)?;
            Ok(0)
        }

        Command::CheckFundamental { input } => {
            let set = input.load()?;
            let verdict = is_fundamental(&set);
            println!("fundamental: {verdict}");
            Ok(if verdict { 0 } else { 1 })
        }

        Command::CheckEssential {
            input,
            rho,
            sigma,
            tol,
            out,
        } => {
            let set = input.load()?;
            match (rho, sigma) {
                (Some(rho_path), Some(sigma_path)) => {
                    let witness = EssentialWitness::new(
                        &set,
                        read_realizer(&rho_path)?,
                        read_realizer(&sigma_path)?,
                    )?;
                    let ok = check_essential_witness(&set, &witness, tol)?;
                    println!("witness valid: {ok} (slack {:.3e})", witness.slack);
                    Ok(if ok { 0 } else { 1 })
                }
                _ => match search_essential_witness(&set) {
                    Some(witness) => {
                        println!("witness found (slack {:.3e})", witness.slack);
                        print!("{}", witness_text(&witness));
                        if out.is_some() {
                            write_output(&out, &witness_json(&witness)?)?;
                        }
                        Ok(0)
                    }
                    None => {
                        if is_fundamental(&set) {
                            println!("no witness found (inconclusive)");
                        } else {
                            println!("not fundamental, cannot be essential");
                        }
                        Ok(1)
                    }
                },
            }
        }

        Command::Shrink { input, m, out } => {
            let set = input.load()?;
            let shrunk = shrink_essential(&set, m)?;
            write_output(&out, &shrunk.to_text())?;
            Ok(0)
        }

        Command::BootstrapCheck {
            input,
            rho,
            sigma,
            tol,
        } => {
            let set = input.load()?;
            let rho = read_realizer(&rho)?;
            let sigma = read_realizer(&sigma)?;
            let n = set.n();
            let holds = bootstrap_ratio_check(&set, &rho, &sigma, tol)?;
            println!(
                "sigma ratio {:.12} <= rho ratio {:.12}: {holds}",
                sigma.values()[n - 2] / sigma.values()[n - 1],
                rho.values()[n - 2] / rho.values()[n - 1],
            );
            Ok(if holds { 0 } else { 1 })
        }

        Command::LengthBound { n, kappa0 } => {
            let bound = crate::sets::length_bound(n, kappa0)?;
            println!("{bound}");
            Ok(0)
        }

        Command::VerifyPacking { packing, tol, out } => {
            let packing = load_packing(packing)?;
            let report = verify_compact_patch(&packing, tol);
            let body = format!("{}\n", serde_json::to_string_pretty(&report)?);
            write_output(&out, &body)?;
            Ok(if report.pass { 0 } else { 1 })
        }

        Command::RenderCorona {
            code,
            n,
            values,
            realizer,
            solve,
            out,
        } => {
            let code = CoronalCode::parse(&code, n)?;
            let rho = match (values, realizer, solve) {
                (Some(values), _, _) => {
                    let parsed: Result<Vec<f64>, _> =
                        values.split(',').map(|v| v.trim().parse::<f64>()).collect();
                    Realizer::new(parsed.map_err(|e| {
                        CliError::Invalid(format!("bad --values: {e}"))
                    })?)?
                }
                (_, Some(path), _) => read_realizer(&path)?,
                (_, _, true) => {
                    let system = TightSystem::from_codes(n, [code.clone()])?;
                    let report = solve_tight(&system, &SolverConfig::default())?;
                    match report.solution {
                        Some(solution) => solution,
                        None => {
                            eprintln!(
                                "no unique tight realizer ({} clusters); pass --values",
                                report.distinct_solutions_found
                            );
                            return Ok(1);
                        }
                    }
                }
                _ => {
                    return Err(CliError::Invalid(
                        "pass one of --values, --realizer, --solve".to_string(),
                    ))
                }
            };
            if rho.n() < n {
                return Err(CliError::Invalid(format!(
                    "realizer covers {} symbols, need {n}",
                    rho.n()
                )));
            }
            write_output(&out, &corona_svg(&code, &rho))?;
            Ok(0)
        }

        Command::RenderPacking { packing, out } => {
            let packing = load_packing(packing)?;
            write_output(&out, &packing_svg(&packing))?;
            Ok(0)
        }
    }
}

fn format_solve_report(report: &SolveReport, format: Format) -> String {
    match format {
        Format::Json => {
            let value = json!({
                "solution": report.solution.as_ref().map(|r| r.values().to_vec()),
                "residual_inf": report.residual_inf,
                "starts_tried": report.starts_tried,
                "distinct_solutions_found": report.distinct_solutions_found,
                "clusters": report
                    .clusters
                    .iter()
                    .map(|r| r.values().to_vec())
                    .collect::<Vec<_>>(),
                "ambiguous_monotone": report.ambiguous_monotone,
            });
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("report serializes")
            )
        }
        Format::Csv => {
            let mut body = String::from("cluster,monotone,radii\n");
            for (i, cluster) in report.clusters.iter().enumerate() {
                let radii: Vec<String> =
                    cluster.values().iter().map(|v| format!("{v:.12}")).collect();
                let monotone = report
                    .monotone_clusters
                    .iter()
                    .any(|m| m.values() == cluster.values());
                body.push_str(&format!("{i},{monotone},{}\n", radii.join(" ")));
            }
            body
        }
        Format::Text => {
            let mut body = String::new();
            match &report.solution {
                Some(solution) => {
                    let radii: Vec<String> = solution
                        .values()
                        .iter()
                        .map(|v| format!("{v:.12}"))
                        .collect();
                    body.push_str(&format!("solution: {}\n", radii.join(" ")));
                    body.push_str(&format!("residual_inf: {:.3e}\n", report.residual_inf));
                }
                None => {
                    body.push_str("no unique monotone solution\n");
                    for cluster in &report.clusters {
                        let radii: Vec<String> = cluster
                            .values()
                            .iter()
                            .map(|v| format!("{v:.12}"))
                            .collect();
                        body.push_str(&format!("cluster: {}\n", radii.join(" ")));
                    }
                }
            }
            body.push_str(&format!(
                "starts: {} distinct_solutions: {} (monotone: {})\n",
                report.starts_tried,
                report.distinct_solutions_found,
                report.monotone_clusters.len()
            ));
            body
        }
    }
}

fn witness_text(witness: &EssentialWitness) -> String {
    let mut out = String::new();
    for (symbol, value) in witness.rho.values().iter().enumerate() {
        out.push_str(&format!("rho {symbol} {value:.17}\n"));
    }
    for (symbol, value) in witness.sigma.values().iter().enumerate() {
        out.push_str(&format!("sigma {symbol} {value:.17}\n"));
    }
    out
}

fn witness_json(witness: &EssentialWitness) -> Result<String, CliError> {
    let value = json!({
        "rho": witness.rho.values(),
        "sigma": witness.sigma.values(),
        "slack": witness.slack,
    });
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}
