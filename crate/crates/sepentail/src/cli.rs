//! The `sepentail` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sepentail_core::dot::export_dot;
use sepentail_core::eqelim::{eliminate_eq, ElimOptions};
use sepentail_core::oracle::{self, Bounds, OracleVerdict, Stores};
use sepentail_core::pipeline::{self, CheckOptions, CheckReport, Verdict};
use sepentail_core::problem::{make_alloc_compatible, Problem};
use sepentail_core::prover::{Config, Strategy};
use sepentail_core::TheoryTag;

use crate::certio::{problem_hash, read_certificate, write_certificate};
use crate::fuzz::{random_problem, FuzzParams};
use crate::parse::{parse_problem_with, ParseOptions};
use crate::print::print_problem;

pub const EXIT_VALID: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_DISAGREE: i32 = 4;

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(name = "sepentail", version, about = "Entailment checker for separation logic with inductive definitions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StrategyArg {
    Terminating,
    General,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TheoryArg {
    Empty,
    Eq,
    Natorder,
}

impl From<TheoryArg> for TheoryTag {
    fn from(t: TheoryArg) -> TheoryTag {
        match t {
            TheoryArg::Empty => TheoryTag::Empty,
            TheoryArg::Eq => TheoryTag::Eq,
            TheoryArg::Natorder => TheoryTag::NatOrder,
        }
    }
}

#[derive(clap::Args, Debug, Clone)]
pub struct Common {
    /// Skip the establishment test on the rule system.
    #[arg(long)]
    pub assume_established: bool,
    /// Override the theory declared in the file.
    #[arg(long, value_enum)]
    pub theory: Option<TheoryArg>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide an entailment problem.
    Check {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "terminating")]
        strategy: StrategyArg,
        /// Proof-search steps per case (default: $SEPENTAIL_FUEL or 100000).
        #[arg(long)]
        fuel: Option<u64>,
        /// Number of worker threads for the store cases.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write the certificate of a valid problem here.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Write the proof graph in Graphviz format here.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Do not consult the bounded oracle for open cases.
        #[arg(long)]
        no_oracle: bool,
        #[arg(long, default_value_t = 6)]
        locations: u32,
        #[arg(long, default_value_t = 4)]
        heap: usize,
        /// Keep unused parameters and duplicate predicates after eliminating equalities.
        #[arg(long)]
        no_simplify: bool,
    },
    /// Rewrite a problem (equality elimination, alloc-compatibility).
    Preprocess {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eliminate_eq: bool,
        #[arg(long)]
        alloc_compat: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory receiving the four intermediate problems of equality elimination.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        no_simplify: bool,
    },
    /// Search for a countermodel within bounds.
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        locations: u32,
        #[arg(long, default_value_t = 4)]
        heap: usize,
        /// List every model of the left-hand side instead.
        #[arg(long)]
        all_models: bool,
    },
    /// Compare prover and oracle on random problems.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: u64,
        /// Index of the first problem (to replay part of a run).
        #[arg(long, default_value_t = 0)]
        start: u64,
        #[arg(long)]
        fuel: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Print every problem, not only disagreements.
        #[arg(long)]
        verbose: bool,
    },
    /// Check a certificate against a problem.
    Verify {
        cert: PathBuf,
        file: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        no_simplify: bool,
    },
}

/// Fuel from the flag, then `SEPENTAIL_FUEL`, then the default.
pub fn fuel_from(flag: Option<u64>) -> Result<u64> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match std::env::var("SEPENTAIL_FUEL") {
        Ok(s) => s.trim().parse().with_context(|| format!("SEPENTAIL_FUEL is not a number: `{}`", s)),
        Err(_) => Ok(DEFAULT_FUEL),
    }
}

/// An error that maps to the usage exit code.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

pub fn load_problem(path: &Path, common: &Common) -> Result<Problem> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage(format!("{}: {}", path.display(), e)),
    };
    let opts = ParseOptions { assume_established: common.assume_established };
    let mut p = match parse_problem_with(&text, opts) {
        Ok(p) => p,
        Err(e) => return usage(format!("{}: {}", path.display(), e)),
    };
    if let Some(t) = common.theory {
        p.theory = t.into();
        for a in p.theory_atoms() {
            if !p.theory.supports(&a) {
                return usage(format!("{}: atom `{}` is not supported by theory {}", path.display(), a, p.theory));
            }
        }
    }
    Ok(p)
}

/// Runs the pipeline, optionally spreading the store cases over `jobs`
/// threads.
pub fn check_problem(p: &Problem, opts: &CheckOptions, jobs: usize) -> CheckReport {
    if jobs <= 1 {
        return pipeline::check_entailment(p, opts);
    }
    let cases = match pipeline::prepare(p, opts.elim) {
        Ok(c) => c,
        Err(_) => return pipeline::check_entailment(p, opts),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    let reports = pool.install(|| cases.par_iter().map(|c| pipeline::check_case(c, opts)).collect());
    pipeline::aggregate(reports, p, opts.prover.strategy)
}

fn exit_of(v: &Verdict) -> i32 {
    match v {
        Verdict::Valid => EXIT_VALID,
        Verdict::Invalid { .. } => EXIT_INVALID,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_check(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let Command::Check { file, common, strategy, fuel, jobs, cert, dot, no_oracle, locations, heap, no_simplify } = cmd
    else {
        unreachable!()
    };
    let p = load_problem(&file, &common)?;
    let strategy = match strategy {
        StrategyArg::Terminating => Strategy::Terminating,
        StrategyArg::General => Strategy::General,
    };
    let opts = CheckOptions {
        prover: Config { fuel: fuel_from(fuel)?, strategy, ..Config::default() },
        elim: ElimOptions { simplify: !no_simplify, assume_established: common.assume_established },
        oracle: (!no_oracle).then_some(Bounds { locations, heap }),
    };
    let r = check_problem(&p, &opts, jobs);
    writeln!(out, "{}", r.verdict.name())?;
    match &r.verdict {
        Verdict::Invalid { stuck, witness } => {
            if let Some(s) = stuck {
                writeln!(out, "unprovable sequent: {}", s)?;
            }
            if let Some(m) = witness {
                writeln!(out, "countermodel: {}", m)?;
            }
        }
        Verdict::Unknown(why) => {
            writeln!(out, "reason: {:?}", why)?;
            if r.cases.iter().any(|c| c.oracle == Some(OracleVerdict::ValidUpToBound)) {
                writeln!(out, "oracle: no countermodel within {} locations and {} cells", locations, heap)?;
            }
        }
        Verdict::Valid => {}
    }
    writeln!(out, "cases: {}", r.cases.len())?;
    writeln!(out, "nodes: {}", r.steps)?;
    writeln!(out, "distinct sequents: {}", r.distinct)?;
    writeln!(out, "backedges: {}", r.backedges)?;
    if let Some(c) = &r.certificate {
        if let Some(path) = &cert {
            write_file(path, &write_certificate(c, &problem_hash(&p)))?;
        }
        if let Some(path) = &dot {
            write_file(path, &export_dot(c))?;
        }
    }
    Ok(exit_of(&r.verdict))
}

fn cmd_preprocess(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let Command::Preprocess { file, common, eliminate_eq: elim, alloc_compat, out: dest, trace, no_simplify } = cmd
    else {
        unreachable!()
    };
    let mut p = load_problem(&file, &common)?;
    let (elim, alloc_compat) = if !elim && !alloc_compat { (p.theory == TheoryTag::Eq, true) } else { (elim, alloc_compat) };
    if elim {
        let opts = ElimOptions { simplify: !no_simplify, assume_established: common.assume_established };
        let (q, tr) = match eliminate_eq(&p, opts) {
            Ok(x) => x,
            Err(e) => return usage(format!("{}: {}", file.display(), e)),
        };
        if let Some(dir) = &trace {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for (i, s) in tr.step_outputs.iter().enumerate() {
                write_file(&dir.join(format!("step{}.sep", i + 1)), &print_problem(s))?;
            }
        }
        p = q;
    }
    if alloc_compat && !p.sid.alloc_compatible {
        p = make_alloc_compatible(&p);
    }
    let text = print_problem(&p);
    match dest {
        Some(path) => write_file(&path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_VALID)
}

fn cmd_oracle(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let Command::Oracle { file, common, locations, heap, all_models } = cmd else { unreachable!() };
    let p = load_problem(&file, &common)?;
    let bounds = Bounds { locations, heap };
    if all_models {
        let ms = match oracle::models_of(&p.lhs, &p.sid, p.theory, bounds) {
            Ok(m) => m,
            Err(e) => return usage(e.to_string()),
        };
        for m in &ms {
            writeln!(out, "{}", m)?;
        }
        writeln!(out, "{} models", ms.len())?;
        return Ok(EXIT_VALID);
    }
    match oracle::entails(&p.lhs, &p.rhs, &p.sid, p.theory, bounds, Stores::All) {
        Ok(OracleVerdict::ValidUpToBound) => {
            writeln!(out, "VALID up to {} locations and {} cells", locations, heap)?;
            Ok(EXIT_VALID)
        }
        Ok(OracleVerdict::Countermodel(m)) => {
            writeln!(out, "INVALID")?;
            writeln!(out, "countermodel: {}", m)?;
            Ok(EXIT_INVALID)
        }
        Err(e) => usage(e.to_string()),
    }
}

/// Outcome of one fuzzing round.
#[derive(Clone, Debug)]
pub struct FuzzCase {
    pub problem: Problem,
    pub prover: Verdict,
    pub oracle: OracleVerdict,
    pub prover_time: Duration,
    pub oracle_time: Duration,
}

impl FuzzCase {
    /// Both sides are conclusive and contradict each other.
    pub fn disagrees(&self) -> bool {
        matches!(
            (&self.prover, &self.oracle),
            (Verdict::Valid, OracleVerdict::Countermodel(_)) | (Verdict::Invalid { .. }, OracleVerdict::ValidUpToBound)
        )
    }
}

/// Problem `i` of the fuzzing run with seed `seed`, decided both ways.
pub fn fuzz_one(seed: u64, i: u64, fuel: u64) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(i));
    let problem = random_problem(&mut rng, &FuzzParams::default());
    let opts = CheckOptions { prover: Config { fuel, ..Config::default() }, oracle: None, ..CheckOptions::default() };
    let t0 = Instant::now();
    let prover = pipeline::check_entailment(&problem, &opts).verdict;
    let t1 = Instant::now();
    let oracle = oracle::entails(&problem.lhs, &problem.rhs, &problem.sid, problem.theory, Bounds::default(), Stores::All)
        .expect("fuzzed problems fit the default bounds");
    FuzzCase { problem, prover, oracle, prover_time: t1 - t0, oracle_time: t1.elapsed() }
}

fn cmd_fuzz(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let Command::Fuzz { seed, count, start, fuel, jobs, verbose } = cmd else { unreachable!() };
    let fuel = fuel_from(fuel)?;
    let cases: Vec<FuzzCase> = if jobs <= 1 {
        (start..start + count).map(|i| fuzz_one(seed, i, fuel)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        pool.install(|| (start..start + count).into_par_iter().map(|i| fuzz_one(seed, i, fuel)).collect())
    };
    let mut tally = [0usize; 3];
    let mut bad = 0;
    for (i, c) in (start..).zip(&cases) {
        tally[exit_of(&c.prover) as usize] += 1;
        let oracle = match c.oracle {
            OracleVerdict::ValidUpToBound => "valid-up-to-bound",
            OracleVerdict::Countermodel(_) => "countermodel",
        };
        if c.disagrees() {
            bad += 1;
            writeln!(out, "DISAGREEMENT on problem {}: prover {}, oracle {}", i, c.prover.name(), oracle)?;
            writeln!(out, "{}", print_problem(&c.problem))?;
        } else if verbose {
            writeln!(
                out,
                "problem {}: prover {} ({} ms), oracle {} ({} ms)",
                i,
                c.prover.name(),
                c.prover_time.as_millis(),
                oracle,
                c.oracle_time.as_millis()
            )?;
        }
    }
    writeln!(
        out,
        "{} problems: {} valid, {} invalid, {} unknown; {} disagreements",
        count, tally[0], tally[1], tally[2], bad
    )?;
    Ok(if bad > 0 { EXIT_DISAGREE } else { EXIT_VALID })
}

fn cmd_verify(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    let Command::Verify { cert, file, common, no_simplify } = cmd else { unreachable!() };
    let p = load_problem(&file, &common)?;
    let text = match std::fs::read_to_string(&cert) {
        Ok(t) => t,
        Err(e) => return usage(format!("{}: {}", cert.display(), e)),
    };
    let c = match read_certificate(&text) {
        Ok(c) => c,
        Err(e) => {
            writeln!(out, "REJECTED: {}", e)?;
            return Ok(EXIT_INVALID);
        }
    };
    if c.header_value("problem") != Some(problem_hash(&p).as_str()) {
        writeln!(out, "REJECTED: certificate was issued for a different problem")?;
        return Ok(EXIT_INVALID);
    }
    let elim = ElimOptions { simplify: !no_simplify, assume_established: common.assume_established };
    match pipeline::verify_certificate(&c, &p, elim) {
        Ok(()) => {
            writeln!(out, "ACCEPTED ({} nodes, {} backedges)", c.nodes.len(), c.backedges())?;
            Ok(EXIT_VALID)
        }
        Err(e) => {
            writeln!(out, "REJECTED: {}", e)?;
            Ok(EXIT_INVALID)
        }
    }
}

/// Executes a parsed command line and returns the exit code.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match cli.command {
        c @ Command::Check { .. } => cmd_check(c, out),
        c @ Command::Preprocess { .. } => cmd_preprocess(c, out),
        c @ Command::Oracle { .. } => cmd_oracle(c, out),
        c @ Command::Fuzz { .. } => cmd_fuzz(c, out),
        c @ Command::Verify { .. } => cmd_verify(c, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {:#}", e);
            if e.downcast_ref::<Usage>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_UNKNOWN
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{}", e);
            match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_VALID,
                _ => EXIT_USAGE,
            }
        }
    }
}

