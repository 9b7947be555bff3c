//! Reduction of arbitrary (pu-free) formulas to prenex disjunctive normal form.

use alloc::vec::Vec;

use crate::formula::{single, Formula};
use crate::sequent::Sequent;
use crate::var::Var;

/// A symbolic heap: an existential prefix over a list of atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymHeap {
    pub vars: Vec<Var>,
    pub atoms: Vec<Formula>,
}

impl SymHeap {
    pub fn to_formula(&self) -> Formula {
        Formula::exists(self.vars.clone(), Formula::sep(self.atoms.clone())).normalize()
    }
}

/// Disjuncts of `f`, each in prenex form, binders renamed apart.
pub fn disjuncts(f: &Formula) -> Vec<SymHeap> {
    let mut next = f
        .all_vars()
        .iter()
        .filter_map(|v| match v {
            Var::Bound(n) => Some(n + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    go(f, &mut next)
}

fn go(f: &Formula, next: &mut u32) -> Vec<SymHeap> {
    match f {
        Formula::Emp => alloc::vec![SymHeap { vars: Vec::new(), atoms: Vec::new() }],
        Formula::Or(v) => v.iter().flat_map(|g| go(g, next)).collect(),
        Formula::Sep(v) => {
            let mut acc = alloc::vec![SymHeap { vars: Vec::new(), atoms: Vec::new() }];
            for g in v {
                let parts = go(g, next);
                let mut out = Vec::new();
                for a in &acc {
                    for p in &parts {
                        let mut vars = a.vars.clone();
                        vars.extend(p.vars.iter().cloned());
                        let mut atoms = a.atoms.clone();
                        atoms.extend(p.atoms.iter().cloned());
                        out.push(SymHeap { vars, atoms });
                    }
                }
                acc = out;
            }
            acc
        }
        Formula::Exists(vs, b) => {
            let mut body = (**b).clone();
            let mut fresh = Vec::new();
            for v in vs {
                let nv = Var::Bound(*next);
                *next += 1;
                body = body.subst(&single(v.clone(), nv.clone()));
                fresh.push(nv);
            }
            go(&body, next)
                .into_iter()
                .map(|mut h| {
                    let mut vars = fresh.clone();
                    vars.append(&mut h.vars);
                    h.vars = vars;
                    h
                })
                .collect()
        }
        atom => alloc::vec![SymHeap { vars: Vec::new(), atoms: alloc::vec![atom.clone()] }],
    }
}

/// `lhs |- rhs` as the equivalent set of sequents with prenex disjunction-free
/// formulas on both sides.
pub fn to_prenex_dnf(lhs: &Formula, rhs: &[Formula]) -> Vec<Sequent> {
    let right: Vec<Formula> = rhs
        .iter()
        .flat_map(|f| disjuncts(f).into_iter().map(|h| h.to_formula()))
        .collect();
    disjuncts(lhs)
        .into_iter()
        .map(|h| Sequent::new(h.to_formula(), right.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn v(s: &str) -> Var {
        Var::user(s)
    }

    #[test]
    fn splits_lhs_disjunction() {
        let a = Formula::pred("a", vec![v("x")]);
        let b = Formula::pred("b", vec![v("x")]);
        let c = Formula::pred("c", vec![v("x")]);
        let out = to_prenex_dnf(&Formula::Or(vec![a, b]), &[c]);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].to_string(), "a(x) |- c(x)");
        assert_eq!(out[1].to_string(), "b(x) |- c(x)");
    }

    #[test]
    fn extrudes_quantifiers() {
        let f = Formula::Sep(vec![
            Formula::exists(vec![v("x")], Formula::pred("p", vec![v("x")])),
            Formula::pred("q", vec![v("y")]),
        ]);
        let out = to_prenex_dnf(&f, &[]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to_string(), "exists _b0. p(_b0) * q(y) |- ");
    }

    #[test]
    fn emp_is_normal() {
        let out = to_prenex_dnf(&Formula::Emp, &[Formula::Emp]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to_string(), "emp |- emp");
    }
}
