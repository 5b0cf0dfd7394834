//! `sharplll`: generate LLL instances, run the fixing procedure, and
//! tabulate the representable-tuple geometry.
//!
//! Exit codes: 0 success, 1 verification failure, 2 theorem violation,
//! 3 input error.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sharplll::gen::{generate_instance, Family, GenSpec};
use sharplll::geometry::{
    boundary_height_r3, convexity_probe_with, maximize_coordinate, ProbeConfig, Sampling, TOL_SEARCH,
};
use sharplll::lll::{
    assignment_from_json, assignment_to_json, forward_order, instance_from_json, instance_to_json,
    reversed_order, run_sequential, FixOptions, LllError, LllInstance,
};
use sharplll::sim::run_local;

use report::{fmt_float, CriterionReport, OracleStats, RunReport, VerifyReport};

#[derive(Debug, Parser)]
#[command(name = "sharplll", version, about = "Deterministic LLL fixing under p*2^d < 1")]
struct Cli {
    /// Seed for generation, probes and randomized orders or identifiers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Oracle tolerance (default depends on the command and rank).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Run instances that fail the criterion.
    #[arg(long, global = true)]
    force: bool,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    SharedVariableRandom,
    KSatLike,
    StarHyperedge,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::SharedVariableRandom => Family::SharedVariableRandom,
            FamilyArg::KSatLike => Family::KSatLike,
            FamilyArg::StarHyperedge => Family::StarHyperedge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sequential,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Order {
    Forward,
    Reversed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Ids {
    /// `meta.ids` from the file, else `0..n`.
    Meta,
    Sequential,
    Reversed,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplingArg {
    Mixed,
    Uniform,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random instance satisfying the criterion.
    Gen {
        #[arg(long, value_enum, default_value = "shared-variable-random")]
        family: FamilyArg,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        max_rank: usize,
        #[arg(long, default_value_t = 4)]
        max_domain: usize,
        #[arg(long, default_value_t = 4)]
        target_d: usize,
        /// Store random distinct LOCAL identifiers in the metadata.
        #[arg(long)]
        random_ids: bool,
    },
    /// Fix every variable and verify the resulting assignment.
    Run {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "sequential")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "forward")]
        order: Order,
        #[arg(long, value_enum, default_value = "meta")]
        ids: Ids,
        /// Also write the assignment to this file.
        #[arg(long)]
        assignment_out: Option<PathBuf>,
        /// Include wall time in the report (makes it non-deterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Sample convex combinations of non-representable tuples (CSV).
    Probe {
        #[arg(long, default_value_t = 3)]
        r: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_enum, default_value = "mixed")]
        sampling: SamplingArg,
    },
    /// Oracle boundary height against the closed form for rank 3 (CSV).
    BoundaryTable {
        /// Grid points per axis over [0, 0.5].
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
    /// Report which events occur under an assignment.
    Verify { instance: PathBuf, assignment: PathBuf },
}

enum Failure {
    Verification(String),
    Theorem(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Theorem(_) => 2,
            Failure::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Theorem(m) | Failure::Input(m) => m,
        }
    }
}

impl From<LllError> for Failure {
    fn from(e: LllError) -> Self {
        match e {
            LllError::TheoremViolation(_) => Failure::Theorem(e.to_string()),
            LllError::PStarViolated { .. } | LllError::IsolationViolation(_) | LllError::InvariantCorruption(_) => {
                Failure::Verification(e.to_string())
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, force: bool) -> Result<LllInstance, Failure> {
    let inst = instance_from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let crit = inst.check_criterion();
    if !crit.pass && !force {
        return Err(Failure::Input(format!(
            "{}: p * 2^d = {} is not below 1 (use --force to run anyway)",
            path.display(),
            crit.value
        )));
    }
    Ok(inst)
}

fn validate_tol(tol: Option<f64>) -> Result<(), Failure> {
    match tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(Failure::Input(format!("--tol must be positive, got {t}"))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<(), Failure> {
    validate_tol(cli.tol)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Gen { family, n, max_rank, max_domain, target_d, random_ids } => {
            let spec = GenSpec {
                family: (*family).into(),
                n: *n,
                max_rank: *max_rank,
                max_domain: *max_domain,
                target_d: *target_d,
                seed: cli.seed,
                random_ids: *random_ids,
            };
            let inst = generate_instance(&spec).map_err(|e| Failure::Input(e.to_string()))?;
            emit(out, &instance_to_json(&inst))
        }
        Command::Run { instance, mode, order, ids, assignment_out, timing } => {
            let start = Instant::now();
            let inst = load(instance, cli.force)?;
            let opts = FixOptions { tol: cli.tol, check_each_step: true };
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let (assignment, steps, min_slack, round_log) = match mode {
                Mode::Sequential => {
                    let order_vec = match order {
                        Order::Forward => forward_order(&inst),
                        Order::Reversed => reversed_order(&inst),
                        Order::Random => {
                            let mut o = forward_order(&inst);
                            o.shuffle(&mut rng);
                            o
                        }
                    };
                    let run = run_sequential(&inst, &order_vec, &opts)?;
                    (run.assignment, run.steps, run.min_pstar_slack, None)
                }
                Mode::Local => {
                    let n = inst.events.len() as u64;
                    let id_vec: Vec<u64> = match ids {
                        Ids::Meta => inst.ids(),
                        Ids::Sequential => (0..n).collect(),
                        Ids::Reversed => (0..n).rev().collect(),
                        Ids::Random => {
                            let mut v: Vec<u64> = (0..n).collect();
                            v.shuffle(&mut rng);
                            v
                        }
                    };
                    let run = run_local(&inst, &id_vec, &opts)?;
                    (run.assignment, run.steps, run.min_pstar_slack, Some(run.log))
                }
            };
            let total: Vec<_> = assignment.iter().map(|&s| Some(s)).collect();
            let occurring = inst.verify_assignment(&total)?;
            let assignment_text = assignment_to_json(&inst, &assignment);
            if let Some(p) = assignment_out {
                emit(Some(p), &assignment_text)?;
            }
            let report = RunReport {
                command: argv,
                instance_digest: report::digest(&instance_to_json(&inst)),
                outcome: if occurring.is_empty() { "verified" } else { "failed" }.into(),
                mode: format!("{mode:?}").to_lowercase(),
                criterion: CriterionReport::of(&inst),
                occurring_events: occurring.clone(),
                assignment: serde_json::from_str(&assignment_text).expect("assignment JSON parses"),
                round_log,
                oracle: OracleStats::of(&steps, min_slack),
                wall_time_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
            };
            emit(out, &report::to_json(&report))?;
            if occurring.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(format!("events {occurring:?} occur")))
            }
        }
        Command::Probe { r, samples, sampling } => {
            if !(2..=6).contains(r) {
                return Err(Failure::Input(format!("--r must be in [2, 6], got {r}")));
            }
            let mut cfg = ProbeConfig::new(*r, *samples, cli.seed);
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            cfg.sampling = match sampling {
                SamplingArg::Mixed => Sampling::Mixed,
                SamplingArg::Uniform => Sampling::Uniform,
            };
            cfg.record = true;
            let rep = convexity_probe_with(&cfg).map_err(|e| Failure::Input(e.to_string()))?;
            emit(out, &report::probe_csv(&rep))?;
            eprintln!(
                "r={} samples={} violations={} worst_margin={} tol={}",
                rep.r,
                rep.samples,
                rep.violations,
                fmt_float(rep.worst_margin),
                fmt_float(rep.tol)
            );
            if rep.violations > 0 || rep.closed_form_disagreements.unwrap_or(0) > 0 {
                return Err(Failure::Verification(format!("{} convexity violations", rep.violations)));
            }
            Ok(())
        }
        Command::BoundaryTable { grid } => {
            if *grid < 2 {
                return Err(Failure::Input("--grid must be at least 2".into()));
            }
            let tol = cli.tol.unwrap_or(1e-10);
            let mut rows = Vec::with_capacity(grid * grid);
            let mut worst: f64 = 0.0;
            for i in 0..*grid {
                for j in 0..*grid {
                    let a = 0.5 * i as f64 / (*grid - 1) as f64;
                    let b = 0.5 * j as f64 / (*grid - 1) as f64;
                    let oracle = maximize_coordinate(&[a, b], 2, tol).map_err(|e| Failure::Input(e.to_string()))?;
                    let formula = boundary_height_r3(a, b).map_err(|e| Failure::Input(e.to_string()))?;
                    worst = worst.max((oracle - formula).abs());
                    rows.push([a, b, oracle, formula, (oracle - formula).abs()]);
                }
            }
            emit(out, &report::boundary_csv(&rows))?;
            eprintln!("max_abs_error={} documented_tolerance={}", fmt_float(worst), fmt_float(TOL_SEARCH));
            if worst > TOL_SEARCH {
                return Err(Failure::Verification(format!("max abs error {worst:e} exceeds {TOL_SEARCH:e}")));
            }
            Ok(())
        }
        Command::Verify { instance, assignment } => {
            let inst = load(instance, true)?;
            let values = assignment_from_json(&inst, &read(assignment)?)?;
            let occurring = inst.verify_assignment(&values)?;
            let report = VerifyReport {
                instance_digest: report::digest(&instance_to_json(&inst)),
                outcome: if occurring.is_empty() { "verified" } else { "failed" }.into(),
                occurring_events: occurring.clone(),
            };
            emit(out, &report::to_json(&report))?;
            if occurring.is_empty() {
                Ok(())
            } else {
                Err(Failure::Verification(format!("events {occurring:?} occur")))
            }
        }
    }
}
