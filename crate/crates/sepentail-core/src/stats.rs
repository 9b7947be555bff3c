//! Structural metrics of formulas.

use crate::formula::{Formula, PredAtom};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Stats {
    pub size: usize,
    pub width: usize,
    pub nexists_prefix: usize,
}

/// Symbol count where each variable or predicate name weighs its length.
pub fn size(f: &Formula) -> usize {
    let name = |v: &crate::var::Var| v.name().len();
    let atom = |p: &PredAtom| p.pred.as_str().len() + p.args.iter().map(name).sum::<usize>();
    match f {
        Formula::Emp => 1,
        Formula::PointsTo(x, ys) => 1 + name(x) + ys.iter().map(name).sum::<usize>(),
        Formula::Pred(p) => atom(p),
        Formula::Theory(t) => 1 + t.vars().into_iter().map(name).sum::<usize>(),
        Formula::Sep(v) | Formula::Or(v) => v.iter().map(size).sum::<usize>() + v.len().saturating_sub(1),
        Formula::Exists(vs, b) => vs.iter().map(|v| 1 + name(v)).sum::<usize>() + size(b),
        Formula::Pu(pu) => {
            pu.frame.iter().map(atom).sum::<usize>() + pu.frame.len().saturating_sub(1) + 1 + atom(&pu.inner)
        }
    }
}

/// Like `size`, but a disjunction counts as its widest branch.
pub fn width(f: &Formula) -> usize {
    let name = |v: &crate::var::Var| v.name().len();
    match f {
        Formula::Or(v) => v.iter().map(width).max().unwrap_or(0),
        Formula::Sep(v) => v.iter().map(width).sum::<usize>() + v.len().saturating_sub(1),
        Formula::Exists(vs, b) => vs.iter().map(|v| 1 + name(v)).sum::<usize>() + width(b),
        atom => size(atom),
    }
}

pub fn nexists_prefix(f: &Formula) -> usize {
    f.prefix().0.len()
}

pub fn stats(f: &Formula) -> Stats {
    Stats {
        size: size(f),
        width: width(f),
        nexists_prefix: nexists_prefix(f),
    }
}
