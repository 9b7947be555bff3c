//! Front end, certificate files, fuzzing and command line of the
//! `sepentail` entailment checker.  The decision procedure itself lives in
//! `sepentail_core`, re-exported as [`core`].

pub use sepentail_core as core;

pub mod certio;
pub mod cli;
pub mod fuzz;
pub mod parse;
pub mod print;

pub use certio::{problem_hash, read_certificate, write_certificate};
pub use parse::{parse_formula, parse_problem, parse_problem_with, parse_sequent, ParseError, ParseOptions};
pub use print::print_problem;
