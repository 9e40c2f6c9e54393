//! Command-line front end: validate fans, run the MMP, compute the
//! geography of a slice, and factorize birational maps between Mori fiber
//! spaces into Sarkisov links. All reports are deterministic JSON; figures
//! are SVG.

mod svg;

use clap::{Parser, Subcommand};
use morifan::divisor::{is_terminal, Divisor};
use morifan::error::Error;
use morifan::exact::arrangement::Point2;
use morifan::fan::{ProjectivityWitness, ToricModel};
use morifan::geography::{auto_slice_param, chamber_decomposition, SliceParam};
use morifan::io;
use morifan::mmp::{run_mmp, verify_output, Strategy, DEFAULT_ITERATION_CAP};
use morifan::sarkisov::{factorize, FactorizeOptions};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "morifan", version, about = "Exact toric MMP and Sarkisov factorization")]
struct Cli {
    /// Parallelism degree for per-cell model computations.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Default seed; MORIFAN_SEED is used when the flag is absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural report of a fan: valid / complete / simplicial /
    /// projective / terminal, with certificates.
    Check {
        fan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the D-MMP and emit the full trace with its verification report.
    Mmp {
        fan: PathBuf,
        divisor: PathBuf,
        #[arg(long, default_value = "deterministic-lex")]
        strategy: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chamber decomposition of a two-dimensional slice of divisor space.
    Geography {
        fan: PathBuf,
        divisor: PathBuf,
        /// Slice specification file, or "auto" for a perturbed ample slice.
        #[arg(long, default_value = "auto")]
        slice_spec: String,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Factorize the birational map between the Mori fiber space outputs
    /// of two MMP runs into Sarkisov links.
    Sarkisov {
        fan: PathBuf,
        divisor: PathBuf,
        /// First run: "<strategy>" or "<strategy>:<seed>".
        #[arg(long, default_value = "seeded-random:0")]
        run_a: String,
        /// Second run: "<strategy>" or "<strategy>:<seed>".
        #[arg(long, default_value = "seeded-random:1")]
        run_b: String,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::Input(_) | Error::InvalidFan(_) | Error::ZeroVector | Error::NotCartier(_)
        | Error::NotPseudoEffective => 2,
        Error::Engine(_) | Error::IterationCap(_) => 3,
        Error::Genericity(_) => 4,
        Error::NoMoriFiberSpace => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli.jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    let seed = cli.seed.unwrap_or_else(|| {
        std::env::var("MORIFAN_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0)
    });
    let result = pool.install(|| run(cli.command, seed));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::engine(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct CheckReport {
    valid: bool,
    complete: bool,
    simplicial: bool,
    projective: bool,
    terminal: bool,
    projectivity_certificate: Option<ProjectivityWitness>,
}

fn run(command: Command, seed: u64) -> Result<(), Error> {
    match command {
        Command::Check { fan, out } => {
            let model = io::parse_fan(&read(&fan)?)?;
            let complete = model.fan.is_complete();
            let simplicial = model.fan.is_simplicial();
            let witness = if complete && simplicial {
                Some(model.fan.projectivity_certificate()?)
            } else {
                None
            };
            let report = CheckReport {
                valid: true,
                complete,
                simplicial,
                projective: matches!(witness, Some(ProjectivityWitness::Ample(_))),
                terminal: simplicial && is_terminal(&model.fan),
                projectivity_certificate: witness,
            };
            emit(&out, &io::to_json_pretty(&report)?)
        }
        Command::Mmp {
            fan,
            divisor,
            strategy,
            out,
        } => {
            let model = io::parse_fan(&read(&fan)?)?;
            let d = io::parse_divisor(&read(&divisor)?, &model.fan)?;
            let strategy = Strategy::parse(&strategy, seed)?;
            let trace = run_mmp(&model, &d, &strategy, DEFAULT_ITERATION_CAP)?;
            let report = verify_output(&model, &d, &trace);
            #[derive(Serialize)]
            struct MmpDoc {
                trace: morifan::mmp::MmpTrace,
                verification: morifan::mmp::VerifyReport,
            }
            if !report.pass {
                return Err(Error::engine("verification of the finished run failed"));
            }
            emit(
                &out,
                &io::to_json_pretty(&MmpDoc {
                    trace,
                    verification: report,
                })?,
            )
        }
        Command::Geography {
            fan,
            divisor,
            slice_spec,
            svg,
            out,
        } => {
            let model = io::parse_fan(&read(&fan)?)?;
            let d = io::parse_divisor(&read(&divisor)?, &model.fan)?;
            let param = slice_param_of(&slice_spec, &model, &d, seed)?;
            let slice = chamber_decomposition(&model, &param)?;
            if let Some(path) = svg {
                // candidate link vertices: corners of E(B) interior to B
                let marks: Vec<(Point2, String)> = slice
                    .eff_polygon
                    .iter()
                    .filter(|p| slice.point_interior_of_region(p))
                    .enumerate()
                    .map(|(i, p)| (p.clone(), format!("D\u{2020}{}", i + 1)))
                    .collect();
                let image = svg::render_slice(&slice, &marks);
                std::fs::write(&path, image)
                    .map_err(|e| Error::engine(format!("cannot write svg: {e}")))?;
            }
            emit(&out, &io::to_json_pretty(&slice)?)
        }
        Command::Sarkisov {
            fan,
            divisor,
            run_a,
            run_b,
            svg,
            out,
        } => {
            let model = io::parse_fan(&read(&fan)?)?;
            let d = io::parse_divisor(&read(&divisor)?, &model.fan)?;
            let strat_a = parse_run(&run_a, seed)?;
            let strat_b = parse_run(&run_b, seed.wrapping_add(1))?;
            let trace_a = run_mmp(&model, &d, &strat_a, DEFAULT_ITERATION_CAP)?;
            let trace_b = run_mmp(&model, &d, &strat_b, DEFAULT_ITERATION_CAP)?;
            if !trace_a.is_mfs() || !trace_b.is_mfs() {
                return Err(Error::NoMoriFiberSpace);
            }
            let chain = factorize(
                &model,
                &d,
                &trace_a,
                &trace_b,
                &FactorizeOptions {
                    seed,
                    retry_limit: 16,
                },
            )?;
            if let Some(path) = svg {
                let marks: Vec<(Point2, String)> = chain
                    .links
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.vertex.clone(), format!("D\u{2020}{}", i + 1)))
                    .collect();
                let image = svg::render_slice(&chain.slice, &marks);
                std::fs::write(&path, image)
                    .map_err(|e| Error::engine(format!("cannot write svg: {e}")))?;
            }
            emit(&out, &io::to_json_pretty(&chain)?)
        }
    }
}

/// "<strategy>" or "<strategy>:<seed>".
fn parse_run(spec: &str, default_seed: u64) -> Result<Strategy, Error> {
    match spec.split_once(':') {
        Some((name, seed)) => {
            let seed: u64 = seed
                .parse()
                .map_err(|_| Error::input(format!("bad seed in {spec:?}")))?;
            Strategy::parse(name, seed)
        }
        None => Strategy::parse(spec, default_seed),
    }
}

fn slice_param_of(
    spec: &str,
    model: &ToricModel,
    d: &Divisor,
    seed: u64,
) -> Result<SliceParam, Error> {
    if spec == "auto" {
        return auto_slice_param(model, d, seed, 3);
    }
    let text = read(&PathBuf::from(spec))?;
    io::from_json::<SliceParam>(&text)
}
