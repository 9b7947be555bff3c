//! End-to-end entailment checking of a [`Problem`].
//!
//! The query is split into one case per equivalence relation on its free
//! variables.  Each case is reduced to injective sequents over an
//! alloc-compatible system (eliminating equalities first when the theory is
//! `eq`) and handed to the prover.  A case is refuted either by a failed
//! exhaustive search in the empty theory or by a bounded countermodel.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calculus::Ctx;
use crate::cert::{self, Certificate, KernelError};
use crate::eqelim::{eliminate_eq, ElimError, ElimOptions};
use crate::formula::Subst;
use crate::oracle::{self, Bounds, OracleVerdict, Stores, Structure};
use crate::problem::{case_problem, make_alloc_compatible, store_cases, Problem};
use crate::prover::{to_certificate, Config, Outcome, Prover, Strategy, Tree};
use crate::sequent::Sequent;
use crate::theory::TheoryTag;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    FuelExhausted,
    /// The search failed but the theory or strategy gives no completeness
    /// guarantee.
    TheoryIncomplete,
    Preprocessing(String),
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Valid,
    Invalid { stuck: Option<Sequent>, witness: Option<Structure> },
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Valid => "VALID",
            Verdict::Invalid { .. } => "INVALID",
            Verdict::Unknown(_) => "UNKNOWN",
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Verdict::Invalid { .. })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub prover: Config,
    pub elim: ElimOptions,
    /// Bounds for refuting (or confirming) cases the prover leaves open and
    /// for countermodels of refuted cases; `None` disables the oracle.
    pub oracle: Option<Bounds>,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions { prover: Config::default(), elim: ElimOptions::default(), oracle: Some(Bounds::default()) }
    }
}

/// A store case after preprocessing.
#[derive(Clone, Debug)]
pub struct PreparedCase {
    pub subst: Subst,
    /// The case before preprocessing (original theory).
    pub original: Problem,
    /// The alloc-compatible problem handed to the prover.
    pub problem: Problem,
    pub sequents: Vec<Sequent>,
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub subst: Subst,
    pub verdict: Verdict,
    pub trees: Vec<Tree>,
    pub steps: u64,
    pub distinct: usize,
    /// Oracle answer for cases the prover left open.
    pub oracle: Option<OracleVerdict>,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub cases: Vec<CaseReport>,
    /// Present iff the verdict is valid.
    pub certificate: Option<Certificate>,
    pub steps: u64,
    pub distinct: usize,
    pub backedges: usize,
}

/// Splits and preprocesses `p`, one entry per store case.
pub fn prepare(p: &Problem, elim: ElimOptions) -> Result<Vec<PreparedCase>, ElimError> {
    let mut out = Vec::new();
    for s in store_cases(&p.free_vars()) {
        let original = case_problem(p, &s);
        let mut q = original.clone();
        if q.theory == TheoryTag::Eq {
            q = eliminate_eq(&q, elim)?.0;
        }
        if !q.sid.alloc_compatible {
            q = make_alloc_compatible(&q);
        }
        let sequents = q.sequents();
        out.push(PreparedCase { subst: s, original, problem: q, sequents });
    }
    Ok(out)
}

/// Proves one prepared case.
pub fn check_case(c: &PreparedCase, opts: &CheckOptions) -> CaseReport {
    let ctx = Ctx { sid: &c.problem.sid, theory: c.problem.theory };
    let mut prover = Prover::new(ctx, opts.prover);
    let mut trees = Vec::new();
    let mut verdict = Verdict::Valid;
    for s in &c.sequents {
        match prover.prove(s) {
            Outcome::Proved(t) => trees.push(t),
            Outcome::Failed(stuck) => {
                let decisive = c.problem.theory == TheoryTag::Empty && opts.prover.strategy == Strategy::Terminating;
                verdict = if decisive {
                    Verdict::Invalid { stuck: Some(stuck), witness: None }
                } else {
                    Verdict::Unknown(UnknownReason::TheoryIncomplete)
                };
                break;
            }
            Outcome::Exhausted => {
                verdict = Verdict::Unknown(UnknownReason::FuelExhausted);
                break;
            }
        }
    }
    let stats = prover.stats();
    let mut oracle_answer = None;
    if !verdict.is_valid() {
        if let Some(b) = opts.oracle {
            let o = &c.original;
            if let Ok(ans) = oracle::entails(&o.lhs, &o.rhs, &o.sid, o.theory, b, Stores::Injective) {
                if let OracleVerdict::Countermodel(m) = &ans {
                    verdict = match verdict {
                        Verdict::Invalid { stuck, .. } => Verdict::Invalid { stuck, witness: Some(m.clone()) },
                        _ => Verdict::Invalid { stuck: None, witness: Some(m.clone()) },
                    };
                }
                oracle_answer = Some(ans);
            }
        }
    }
    if !verdict.is_valid() {
        trees.clear();
    }
    CaseReport {
        subst: c.subst.clone(),
        verdict,
        trees,
        steps: stats.steps,
        distinct: stats.distinct,
        oracle: oracle_answer,
    }
}

/// Combines case reports: invalid if some case is, valid if all are.
pub fn aggregate(cases: Vec<CaseReport>, p: &Problem, strategy: Strategy) -> CheckReport {
    let steps = cases.iter().map(|c| c.steps).sum();
    let distinct = cases.iter().map(|c| c.distinct).sum();
    let verdict = if let Some(c) = cases.iter().find(|c| c.verdict.is_invalid()) {
        c.verdict.clone()
    } else if let Some(c) = cases.iter().find(|c| !c.verdict.is_valid()) {
        c.verdict.clone()
    } else {
        Verdict::Valid
    };
    let certificate = if verdict.is_valid() {
        let trees: Vec<Tree> = cases.iter().flat_map(|c| c.trees.iter().cloned()).collect();
        let mut cert = to_certificate(&trees);
        cert.header.push(("theory".into(), p.theory.name().into()));
        cert.header.push(("strategy".into(), strategy.name().into()));
        Some(cert)
    } else {
        None
    };
    let backedges = certificate.as_ref().map_or(0, |c| c.backedges());
    CheckReport { verdict, cases, certificate, steps, distinct, backedges }
}

/// Checks `p`; cases are handled in order and the search stops at the first
/// refuted case.
pub fn check_entailment(p: &Problem, opts: &CheckOptions) -> CheckReport {
    let cases = match prepare(p, opts.elim) {
        Ok(c) => c,
        Err(e) => {
            return CheckReport {
                verdict: Verdict::Unknown(UnknownReason::Preprocessing(alloc::format!("{}", e))),
                cases: Vec::new(),
                certificate: None,
                steps: 0,
                distinct: 0,
                backedges: 0,
            }
        }
    };
    let mut reports = Vec::new();
    for c in &cases {
        let r = check_case(c, opts);
        let stop = r.verdict.is_invalid();
        reports.push(r);
        if stop {
            break;
        }
    }
    aggregate(reports, p, opts.prover.strategy)
}

/// Independent check of a certificate against the problem it claims to
/// prove.  Preprocessing is re-run; only the kernel judges the proof.
pub fn verify_certificate(cert: &Certificate, p: &Problem, elim: ElimOptions) -> Result<(), KernelError> {
    if let Some(t) = cert.header_value("theory") {
        if t != p.theory.name() {
            return Err(KernelError::Malformed(alloc::format!("certificate is for theory {}", t)));
        }
    }
    let cases = prepare(p, elim).map_err(|e| KernelError::Malformed(alloc::format!("{}", e)))?;
    let roots: Vec<(Ctx<'_>, Sequent)> = cases
        .iter()
        .flat_map(|c| {
            let ctx = Ctx { sid: &c.problem.sid, theory: c.problem.theory };
            c.sequents.iter().map(move |s| (ctx, s.clone()))
        })
        .collect();
    cert::verify_each(cert, &roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Formula, PredAtom, TheoryAtom};
    use crate::sid::{Rule, Sid};
    use crate::var::{Pred, Var};
    use alloc::vec;

    fn v(s: &str) -> Var {
        Var::user(s)
    }
    fn pa(p: &str, a: &[&str]) -> PredAtom {
        PredAtom::new(Pred::new(p), a.iter().map(|x| v(x)).collect())
    }
    fn pto(x: &str, ys: &[&str]) -> Formula {
        Formula::pto(v(x), ys.iter().map(|y| v(y)).collect())
    }
    fn rule(h: PredAtom, ex: &[&str], body: Vec<Formula>) -> Rule {
        Rule { head: h, exvars: ex.iter().map(|x| v(x)).collect(), body }
    }

    fn ls_problem(theory: TheoryTag, with_als: bool) -> Problem {
        let mut rules = vec![
            rule(pa("ls", &["x", "y"]), &[], vec![pto("x", &["y"])]),
            rule(pa("ls", &["x", "y"]), &["z"], vec![pto("x", &["z"]), Formula::Pred(pa("ls", &["z", "y"]))]),
        ];
        let rhs = if with_als {
            let ne = Formula::Theory(TheoryAtom::ne(v("x"), v("y")));
            rules.push(rule(pa("als", &["x", "y"]), &[], vec![pto("x", &["y"]), ne.clone()]));
            rules.push(rule(
                pa("als", &["x", "y"]),
                &["z"],
                vec![pto("x", &["z"]), Formula::Pred(pa("als", &["z", "y"])), ne],
            ));
            Formula::Pred(pa("als", &["a", "b"]))
        } else {
            Formula::exists(
                vec![v("m")],
                Formula::Sep(vec![Formula::Pred(pa("ls", &["a", "m"])), Formula::Pred(pa("ls", &["m", "c"]))]),
            )
        };
        let lhs = if with_als {
            Formula::Pred(pa("ls", &["a", "b"]))
        } else {
            Formula::Sep(vec![Formula::Pred(pa("ls", &["a", "b"])), Formula::Pred(pa("ls", &["b", "c"]))])
        };
        Problem { theory, sid: Sid::new(rules, 1, false).unwrap(), lhs, rhs: vec![rhs] }
    }

    #[test]
    fn composition_is_valid_and_certified() {
        let p = ls_problem(TheoryTag::Empty, false);
        let opts = CheckOptions::default();
        let r = check_entailment(&p, &opts);
        assert!(r.verdict.is_valid(), "{:?}", r.verdict);
        assert_eq!(r.cases.len(), 5);
        let cert = r.certificate.unwrap();
        verify_certificate(&cert, &p, opts.elim).unwrap();
    }

    #[test]
    fn ls_als_through_elimination_is_invalid() {
        let p = ls_problem(TheoryTag::Eq, true);
        let r = check_entailment(&p, &CheckOptions::default());
        match &r.verdict {
            Verdict::Invalid { stuck, witness } => {
                assert!(stuck.is_some());
                assert!(witness.is_some());
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn certificate_for_other_problem_is_rejected() {
        let p = ls_problem(TheoryTag::Empty, false);
        let r = check_entailment(&p, &CheckOptions::default());
        let cert = r.certificate.unwrap();
        let mut q = p.clone();
        q.lhs = Formula::Sep(vec![Formula::Pred(pa("ls", &["a", "b"])), Formula::Pred(pa("ls", &["b", "d"]))]);
        assert!(verify_certificate(&cert, &q, ElimOptions::default()).is_err());
    }
}
