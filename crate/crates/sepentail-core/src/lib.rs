//! Core of the `sepentail` entailment checker for separation logic with
//! inductive definitions.  Everything here is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calculus;
pub mod cert;
pub mod dnf;
pub mod dot;
pub mod eqelim;
pub mod prover;
pub mod formula;
pub mod oracle;
pub mod pipeline;
pub mod problem;
pub mod sequent;
pub mod sid;
pub mod stats;
pub mod theory;
pub mod unfold;
pub mod var;

pub use formula::{Formula, PredAtom, PuAtom, Subst, TheoryAtom};
pub use sequent::Sequent;
pub use sid::{Rule, Sid, SidError};
pub use theory::TheoryTag;
pub use var::{Pred, Var};
