//! Entailment problems: a rule system, a theory and a query `lhs |- rhs`.
//!
//! A problem is valid when every store (injective or not) that satisfies the
//! left-hand side satisfies one of the right-hand formulas.  A [`Sequent`] on
//! the other hand only speaks about injective stores; [`store_cases`]
//! bridges the two by enumerating the equalities among free variables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::dnf::{disjuncts, to_prenex_dnf};
use crate::formula::{Formula, PredAtom, Subst, TheoryAtom};
use crate::sequent::Sequent;
use crate::sid::{alloc_compatible_variants, Sid};
use crate::theory::TheoryTag;
use crate::var::{Pred, Var};

#[derive(Clone, Debug)]
pub struct Problem {
    pub theory: TheoryTag,
    pub sid: Sid,
    pub lhs: Formula,
    pub rhs: Vec<Formula>,
}

impl Problem {
    /// Free variables of the query in order of first occurrence.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for f in core::iter::once(&self.lhs).chain(self.rhs.iter()) {
            for v in f.free_vars_ordered() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    /// The query as prenex, disjunction-free sequents.
    pub fn sequents(&self) -> Vec<Sequent> {
        to_prenex_dnf(&self.lhs, &self.rhs)
    }

    /// Predicates mentioned by the query.
    pub fn query_preds(&self) -> Vec<Pred> {
        let mut s: BTreeSet<Pred> = BTreeSet::new();
        for f in core::iter::once(&self.lhs).chain(self.rhs.iter()) {
            for a in f.pred_atoms() {
                s.insert(a.pred.clone());
            }
        }
        s.into_iter().collect()
    }

    /// Every theory atom in the query and in the rules.
    pub fn theory_atoms(&self) -> Vec<TheoryAtom> {
        let mut out: Vec<TheoryAtom> = Vec::new();
        for f in core::iter::once(&self.lhs).chain(self.rhs.iter()) {
            out.extend(f.theory_atoms().into_iter().cloned());
        }
        for r in &self.sid.rules {
            out.extend(r.body_theory().cloned());
        }
        out
    }
}

/// Disjunction of symbolic heaps, `false` when there are none.
pub fn or_of_heaps(hs: Vec<Formula>) -> Formula {
    if hs.is_empty() {
        Formula::Theory(TheoryAtom::False)
    } else {
        Formula::or(hs)
    }
}

/// Replaces every predicate by its alloc-compatible variants; each query
/// atom becomes the disjunction of the variants it can reach.
pub fn make_alloc_compatible(p: &Problem) -> Problem {
    alloc_compatible_problem(p).0
}

/// As [`make_alloc_compatible`], also returning the variants of every
/// original predicate.
pub fn alloc_compatible_problem(p: &Problem) -> (Problem, BTreeMap<Pred, Vec<Pred>>) {
    let roots = p.query_preds();
    let (sid, variants) = alloc_compatible_variants(&p.sid, &roots);
    let replace = |f: &Formula| -> Formula {
        let g = replace_atoms(f, &|a: &PredAtom| {
            let vs = variants.get(&a.pred).cloned().unwrap_or_default();
            Formula::Or(vs.into_iter().map(|v| Formula::Pred(PredAtom::new(v, a.args.clone()))).collect())
        });
        or_of_heaps(disjuncts(&g).into_iter().map(|h| h.to_formula()).collect())
    };
    let lhs = replace(&p.lhs);
    let rhs = p
        .rhs
        .iter()
        .flat_map(|g| disjuncts(&replace(g)).into_iter().map(|h| h.to_formula()))
        .collect();
    (Problem { theory: p.theory, sid, lhs, rhs }, variants)
}

/// Rewrites each predicate atom of a pu-free formula.
pub fn replace_atoms(f: &Formula, m: &impl Fn(&PredAtom) -> Formula) -> Formula {
    match f {
        Formula::Pred(a) => m(a),
        Formula::Sep(v) => Formula::Sep(v.iter().map(|g| replace_atoms(g, m)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| replace_atoms(g, m)).collect()),
        Formula::Exists(vs, b) => Formula::Exists(vs.clone(), alloc::boxed::Box::new(replace_atoms(b, m))),
        other => other.clone(),
    }
}

/// One substitution per equivalence relation on `vars`, mapping every
/// variable to the first member of its class.  The identity comes first.
pub fn store_cases(vars: &[Var]) -> Vec<Subst> {
    let mut out = Vec::new();
    let mut rgs = alloc::vec![0usize; vars.len()];
    loop {
        let mut s: Subst = BTreeMap::new();
        let mut rep: BTreeMap<usize, &Var> = BTreeMap::new();
        for (i, v) in vars.iter().enumerate() {
            let r = *rep.entry(rgs[i]).or_insert(v);
            if r != v {
                s.insert(v.clone(), r.clone());
            }
        }
        out.push(s);
        // next restricted growth string
        let mut i = vars.len();
        loop {
            if i <= 1 {
                out.reverse();
                return out;
            }
            i -= 1;
            let m = rgs[..i].iter().copied().max().unwrap_or(0);
            if rgs[i] <= m {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// The injective sequents of one store case.
pub fn case_sequents(p: &Problem, s: &Subst) -> Vec<Sequent> {
    let lhs = p.lhs.subst(s);
    let rhs: Vec<Formula> = p.rhs.iter().map(|g| g.subst(s)).collect();
    to_prenex_dnf(&lhs, &rhs)
}

/// The problem restricted to one store case.
pub fn case_problem(p: &Problem, s: &Subst) -> Problem {
    Problem {
        theory: p.theory,
        sid: p.sid.clone(),
        lhs: p.lhs.subst(s),
        rhs: p.rhs.iter().map(|g| g.subst(s)).collect(),
    }
}
