use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::Formula;
use crate::var::Var;

/// `lhs |- rhs_1, ..., rhs_n`.  Both sides are kept normalized; the right
/// side is a sorted list without duplicates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sequent {
    pub lhs: Formula,
    pub rhs: Vec<Formula>,
}

impl Sequent {
    pub fn new(lhs: Formula, rhs: Vec<Formula>) -> Sequent {
        let lhs = lhs.normalize();
        let mut rhs: Vec<Formula> = rhs.iter().map(|f| f.normalize()).collect();
        rhs.sort();
        rhs.dedup();
        Sequent { lhs, rhs }
    }

    pub fn free_vars(&self) -> alloc::collections::BTreeSet<Var> {
        let mut s = self.lhs.free_vars();
        for f in &self.rhs {
            s.extend(f.free_vars());
        }
        s
    }

    /// A fresh variable not occurring in the sequent.  Deterministic: one past
    /// the largest fresh index in use.
    pub fn fresh_var(&self) -> Var {
        let m = core::iter::once(&self.lhs)
            .chain(self.rhs.iter())
            .filter_map(|f| f.max_fresh())
            .max();
        Var::Fresh(m.map_or(0, |m| m + 1))
    }

    /// Canonical representative of the α-equivalence class (best effort):
    /// free variables renamed `_v0, _v1, ...` by first occurrence, with the
    /// conjunct and right-hand side orders fixed by a name-independent key.
    pub fn alpha_canonical(&self) -> Sequent {
        let mut cur = self.clone();
        for _ in 0..8 {
            let order = occurrence_order(&cur);
            let map: BTreeMap<Var, Var> = order
                .into_iter()
                .enumerate()
                .map(|(i, v)| (v, Var::Fresh(i as u32)))
                .collect();
            let ren = |f: &Formula| f.rename_free(&|v| map.get(v).cloned()).normalize();
            let lhs = ren(&cur.lhs);
            let mut rhs: Vec<Formula> = cur.rhs.iter().map(ren).collect();
            rhs.sort_by_cached_key(|f| (erase_free(f), f.clone()));
            rhs.dedup();
            let next = Sequent { lhs, rhs };
            if next == cur {
                break;
            }
            cur = next;
        }
        cur
    }
}

fn erase_free(f: &Formula) -> Formula {
    f.rename_free(&|_| Some(Var::Fresh(u32::MAX)))
}

/// Free variables in order of first occurrence, where left-hand conjuncts and
/// right-hand formulas are visited in order of their name-erased shape.
fn occurrence_order(s: &Sequent) -> Vec<Var> {
    let mut lhs_parts: Vec<Formula> = match &s.lhs {
        Formula::Exists(_, b) => b.conjuncts(),
        f => f.conjuncts(),
    };
    lhs_parts.sort_by_cached_key(|f| (erase_free(f), f.clone()));
    let mut rhs = s.rhs.clone();
    rhs.sort_by_cached_key(|f| (erase_free(f), f.clone()));
    let mut out: Vec<Var> = Vec::new();
    let lhs_fv = s.lhs.free_vars();
    for f in lhs_parts.iter().chain(rhs.iter()) {
        for v in f.free_vars_ordered() {
            if matches!(v, Var::Bound(_)) && !lhs_fv.contains(&v) {
                continue;
            }
            if !out.contains(&v) {
                out.push(v)
            }
        }
    }
    out
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- ", self.lhs)?;
        for (i, r) in self.rhs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", r)?;
        }
        Ok(())
    }
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
    fn canonical_identifies_renamings() {
        let s1 = Sequent::new(
            Formula::pred("p", vec![v("z")]),
            vec![Formula::exists(vec![v("u")], Formula::pred("q", vec![v("z"), v("u")]))],
        );
        let s2 = Sequent::new(
            Formula::pred("p", vec![v("x")]),
            vec![Formula::exists(vec![v("u")], Formula::pred("q", vec![v("x"), v("u")]))],
        );
        assert_eq!(s1.alpha_canonical(), s2.alpha_canonical());
    }

    #[test]
    fn canonical_respects_argument_order() {
        let s1 = Sequent::new(Formula::pred("p", vec![v("x"), v("y")]), vec![]);
        let s2 = Sequent::new(Formula::pred("p", vec![v("y"), v("x")]), vec![]);
        assert_eq!(s1.alpha_canonical(), s2.alpha_canonical());
        let s3 = Sequent::new(
            Formula::Sep(vec![Formula::pred("p", vec![v("x"), v("y")]), Formula::pred("r", vec![v("x")])]),
            vec![],
        );
        let s4 = Sequent::new(
            Formula::Sep(vec![Formula::pred("p", vec![v("y"), v("x")]), Formula::pred("r", vec![v("x")])]),
            vec![],
        );
        assert_ne!(s3.alpha_canonical(), s4.alpha_canonical());
    }

    #[test]
    fn canonical_is_ac_invariant_and_idempotent() {
        let a = Formula::pred("a", vec![v("x")]);
        let b = Formula::pred("b", vec![v("y")]);
        let s1 = Sequent::new(Formula::Sep(vec![a.clone(), b.clone()]), vec![]);
        let s2 = Sequent::new(Formula::Sep(vec![b, a]), vec![]);
        let c = s1.alpha_canonical();
        assert_eq!(c, s2.alpha_canonical());
        assert_eq!(c, c.alpha_canonical());
    }

    #[test]
    fn empty_rhs_prints_blank() {
        let s = Sequent::new(Formula::Emp, vec![]);
        assert_eq!(s.to_string(), "emp |- ");
    }
}
