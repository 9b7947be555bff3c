//! Formulas, substitutions and the structural normal form.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::var::{Pred, Var};

/// A (finite, idempotent in practice) variable-to-variable substitution.
pub type Subst = BTreeMap<Var, Var>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PredAtom {
    pub pred: Pred,
    pub args: Vec<Var>,
}

impl PredAtom {
    pub fn new(pred: Pred, args: Vec<Var>) -> PredAtom {
        PredAtom { pred, args }
    }

    pub fn root(&self) -> Option<&Var> {
        self.args.first()
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> PredAtom {
        PredAtom {
            pred: self.pred.clone(),
            args: self.args.iter().map(f).collect(),
        }
    }

    pub fn subst(&self, s: &Subst) -> PredAtom {
        self.rename(&|v| s.get(v).cloned().unwrap_or_else(|| v.clone()))
    }
}

impl fmt::Display for PredAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str(")")
    }
}

/// Atoms of the theory part.  `Eq` and `Ne` keep their arguments ordered so
/// that syntactic equality identifies symmetric variants.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TheoryAtom {
    False,
    Eq(Var, Var),
    Ne(Var, Var),
    Le(Var, Var),
    Lt(Var, Var),
    Nonneg(Var),
}

impl TheoryAtom {
    pub fn eq(a: Var, b: Var) -> TheoryAtom {
        if a <= b {
            TheoryAtom::Eq(a, b)
        } else {
            TheoryAtom::Eq(b, a)
        }
    }

    pub fn ne(a: Var, b: Var) -> TheoryAtom {
        if a <= b {
            TheoryAtom::Ne(a, b)
        } else {
            TheoryAtom::Ne(b, a)
        }
    }

    pub fn vars(&self) -> Vec<&Var> {
        match self {
            TheoryAtom::False => Vec::new(),
            TheoryAtom::Eq(a, b)
            | TheoryAtom::Ne(a, b)
            | TheoryAtom::Le(a, b)
            | TheoryAtom::Lt(a, b) => alloc::vec![a, b],
            TheoryAtom::Nonneg(a) => alloc::vec![a],
        }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> TheoryAtom {
        match self {
            TheoryAtom::False => TheoryAtom::False,
            TheoryAtom::Eq(a, b) => TheoryAtom::eq(f(a), f(b)),
            TheoryAtom::Ne(a, b) => TheoryAtom::ne(f(a), f(b)),
            TheoryAtom::Le(a, b) => TheoryAtom::Le(f(a), f(b)),
            TheoryAtom::Lt(a, b) => TheoryAtom::Lt(f(a), f(b)),
            TheoryAtom::Nonneg(a) => TheoryAtom::Nonneg(f(a)),
        }
    }
}

impl fmt::Display for TheoryAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryAtom::False => f.write_str("false"),
            TheoryAtom::Eq(a, b) => write!(f, "{} = {}", a, b),
            TheoryAtom::Ne(a, b) => write!(f, "{} != {}", a, b),
            TheoryAtom::Le(a, b) => write!(f, "{} <= {}", a, b),
            TheoryAtom::Lt(a, b) => write!(f, "{} < {}", a, b),
            TheoryAtom::Nonneg(a) => write!(f, "0 <= {}", a),
        }
    }
}

/// A partially unfolded atom `(frame -* inner)[params <- actuals]`.
///
/// Every variable of `frame` and `inner` is one of `params`; the atom's free
/// variables are the actuals at relevant positions.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PuAtom {
    pub frame: Vec<PredAtom>,
    pub inner: PredAtom,
    pub params: Vec<Var>,
    pub actuals: Vec<Var>,
}

impl PuAtom {
    pub fn theta(&self) -> Subst {
        self.params
            .iter()
            .cloned()
            .zip(self.actuals.iter().cloned())
            .collect()
    }

    /// The actual bound to a parameter (the parameter itself if unmapped).
    pub fn actual_of(&self, p: &Var) -> Var {
        match self.params.iter().position(|q| q == p) {
            Some(i) => self.actuals[i].clone(),
            None => p.clone(),
        }
    }

    fn occurring_params(&self) -> BTreeSet<Var> {
        let mut s = BTreeSet::new();
        for a in self.frame.iter().chain(core::iter::once(&self.inner)) {
            s.extend(a.args.iter().cloned());
        }
        s
    }

    /// Free variables: actuals whose parameter occurs in the frame or inner atom.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let occ = self.occurring_params();
        self.params
            .iter()
            .zip(self.actuals.iter())
            .filter(|(p, _)| occ.contains(*p))
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// Main root: the image of the inner atom's first argument.
    pub fn main_root(&self) -> Option<Var> {
        self.inner.root().map(|r| self.actual_of(r))
    }

    pub fn aux_roots(&self) -> Vec<Var> {
        self.frame
            .iter()
            .filter_map(|a| a.root().map(|r| self.actual_of(r)))
            .collect()
    }

    /// The inner atom instantiated by the parameter mapping.
    pub fn inner_instance(&self) -> PredAtom {
        self.inner.subst(&self.theta())
    }

    pub fn frame_instance(&self) -> Vec<PredAtom> {
        let th = self.theta();
        self.frame.iter().map(|a| a.subst(&th)).collect()
    }
}

impl fmt::Display for PuAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.frame.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{}", a)?;
        }
        if self.frame.is_empty() {
            f.write_str("emp")?;
        }
        write!(f, " -* {})[", self.inner)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", p)?;
        }
        f.write_str(" <- ")?;
        for (i, a) in self.actuals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Emp,
    PointsTo(Var, Vec<Var>),
    Pred(PredAtom),
    Theory(TheoryAtom),
    Sep(Vec<Formula>),
    Or(Vec<Formula>),
    Exists(Vec<Var>, Box<Formula>),
    Pu(PuAtom),
}

impl Formula {
    pub fn pred(name: &str, args: Vec<Var>) -> Formula {
        Formula::Pred(PredAtom::new(Pred::new(name), args))
    }

    pub fn pto(src: Var, dst: Vec<Var>) -> Formula {
        Formula::PointsTo(src, dst)
    }

    pub fn sep(parts: Vec<Formula>) -> Formula {
        match parts.len() {
            0 => Formula::Emp,
            1 => parts.into_iter().next().unwrap(),
            _ => Formula::Sep(parts),
        }
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Formula::Or(parts)
        }
    }

    pub fn exists(vars: Vec<Var>, body: Formula) -> Formula {
        if vars.is_empty() {
            body
        } else {
            Formula::Exists(vars, Box::new(body))
        }
    }

    pub fn is_spatial_atom(&self) -> bool {
        matches!(self, Formula::PointsTo(..) | Formula::Pred(_) | Formula::Pu(_))
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Formula::Emp | Formula::PointsTo(..) | Formula::Pred(_) | Formula::Theory(_) | Formula::Pu(_)
        )
    }

    /// Top-level separating conjuncts (`emp` has none).
    pub fn conjuncts(&self) -> Vec<Formula> {
        match self {
            Formula::Emp => Vec::new(),
            Formula::Sep(v) => v.clone(),
            f => alloc::vec![f.clone()],
        }
    }

    /// Splits off the top-level existential prefix.
    pub fn prefix(&self) -> (Vec<Var>, &Formula) {
        match self {
            Formula::Exists(vs, b) => {
                let (mut inner, body) = b.prefix();
                let mut all = vs.clone();
                all.append(&mut inner);
                (all, body)
            }
            f => (Vec::new(), f),
        }
    }

    pub fn has_or(&self) -> bool {
        match self {
            Formula::Or(_) => true,
            Formula::Sep(v) => v.iter().any(|f| f.has_or()),
            Formula::Exists(_, b) => b.has_or(),
            _ => false,
        }
    }

    pub fn has_pu(&self) -> bool {
        match self {
            Formula::Pu(_) => true,
            Formula::Sep(v) | Formula::Or(v) => v.iter().any(|f| f.has_pu()),
            Formula::Exists(_, b) => b.has_pu(),
            _ => false,
        }
    }

    pub fn has_exists(&self) -> bool {
        match self {
            Formula::Exists(..) => true,
            Formula::Sep(v) | Formula::Or(v) => v.iter().any(|f| f.has_exists()),
            _ => false,
        }
    }

    /// True if the formula contains no spatial atom at all.
    pub fn is_pure(&self) -> bool {
        match self {
            Formula::Emp | Formula::Theory(_) => true,
            Formula::PointsTo(..) | Formula::Pred(_) | Formula::Pu(_) => false,
            Formula::Sep(v) | Formula::Or(v) => v.iter().all(|f| f.is_pure()),
            Formula::Exists(_, b) => b.is_pure(),
        }
    }

    /// Visits every atom (with its binder context ignored).
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        match self {
            Formula::Sep(v) | Formula::Or(v) => v.iter().for_each(|g| g.for_each_atom(f)),
            Formula::Exists(_, b) => b.for_each_atom(f),
            a => f(a),
        }
    }

    pub fn pred_atoms(&self) -> Vec<&PredAtom> {
        let mut out = Vec::new();
        self.for_each_atom(&mut |a| {
            if let Formula::Pred(p) = a {
                out.push(p)
            }
        });
        out
    }

    pub fn theory_atoms(&self) -> Vec<&TheoryAtom> {
        let mut out = Vec::new();
        self.for_each_atom(&mut |a| {
            if let Formula::Theory(t) = a {
                out.push(t)
            }
        });
        out
    }

    pub fn count_points_to(&self) -> usize {
        let mut n = 0;
        self.for_each_atom(&mut |a| {
            if let Formula::PointsTo(..) = a {
                n += 1
            }
        });
        n
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_fv(&mut Vec::new(), &mut |v| {
            out.insert(v.clone());
        });
        out
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        self.collect_fv(&mut Vec::new(), &mut |v| {
            if !out.contains(v) {
                out.push(v.clone())
            }
        });
        out
    }

    fn collect_fv<'a>(&'a self, bound: &mut Vec<&'a Var>, out: &mut impl FnMut(&Var)) {
        let emit = |v: &Var, bound: &Vec<&'a Var>, out: &mut dyn FnMut(&Var)| {
            if !bound.contains(&v) {
                out(v)
            }
        };
        match self {
            Formula::Emp => {}
            Formula::PointsTo(x, ys) => {
                emit(x, bound, out);
                for y in ys {
                    emit(y, bound, out)
                }
            }
            Formula::Pred(p) => {
                for a in &p.args {
                    emit(a, bound, out)
                }
            }
            Formula::Theory(t) => {
                for a in t.vars() {
                    emit(a, bound, out)
                }
            }
            Formula::Sep(v) | Formula::Or(v) => {
                for g in v {
                    g.collect_fv(bound, out)
                }
            }
            Formula::Exists(vs, b) => {
                let n = bound.len();
                bound.extend(vs.iter());
                b.collect_fv(bound, out);
                bound.truncate(n);
            }
            Formula::Pu(pu) => {
                let occ = pu.occurring_params();
                // order of first occurrence: inner first, then frame
                let mut order: Vec<&Var> = Vec::new();
                for a in core::iter::once(&pu.inner).chain(pu.frame.iter()) {
                    for x in &a.args {
                        if occ.contains(x) && !order.contains(&x) {
                            order.push(x)
                        }
                    }
                }
                for p in order {
                    let v = pu.actual_of(p);
                    emit(&v, bound, out)
                }
            }
        }
    }

    /// Every variable occurring anywhere (free, bound, binder or actual).
    pub fn all_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Emp => {}
            Formula::PointsTo(x, ys) => {
                out.insert(x.clone());
                out.extend(ys.iter().cloned());
            }
            Formula::Pred(p) => out.extend(p.args.iter().cloned()),
            Formula::Theory(t) => out.extend(t.vars().into_iter().cloned()),
            Formula::Sep(v) | Formula::Or(v) => v.iter().for_each(|g| g.collect_all(out)),
            Formula::Exists(vs, b) => {
                out.extend(vs.iter().cloned());
                b.collect_all(out)
            }
            Formula::Pu(pu) => out.extend(pu.actuals.iter().cloned()),
        }
    }

    /// Largest index of a fresh variable occurring in the formula.
    pub fn max_fresh(&self) -> Option<u32> {
        self.all_vars()
            .iter()
            .filter_map(|v| match v {
                Var::Fresh(n) => Some(*n),
                _ => None,
            })
            .max()
    }

    /// One past the largest bound-variable index occurring anywhere.
    pub fn next_bound(&self) -> u32 {
        self.max_bound().map_or(0, |m| m + 1)
    }

    fn max_bound(&self) -> Option<u32> {
        self.all_vars()
            .iter()
            .filter_map(|v| match v {
                Var::Bound(n) => Some(*n),
                _ => None,
            })
            .max()
    }

    /// Capture-avoiding substitution of free variables.  Inside a pu-atom
    /// only the actuals are instantiated.
    pub fn subst(&self, s: &Subst) -> Formula {
        if s.is_empty() {
            return self.clone();
        }
        let get = |v: &Var| s.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::Emp => Formula::Emp,
            Formula::PointsTo(x, ys) => Formula::PointsTo(get(x), ys.iter().map(get).collect()),
            Formula::Pred(p) => Formula::Pred(p.subst(s)),
            Formula::Theory(t) => Formula::Theory(t.rename(&get)),
            Formula::Sep(v) => Formula::Sep(v.iter().map(|g| g.subst(s)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.subst(s)).collect()),
            Formula::Exists(vs, b) => {
                let mut inner: Subst = s
                    .iter()
                    .filter(|(k, _)| !vs.contains(k))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect();
                if inner.is_empty() {
                    return self.clone();
                }
                let body_fv = b.free_vars();
                let images: BTreeSet<Var> = inner
                    .iter()
                    .filter(|(k, _)| body_fv.contains(*k))
                    .map(|(_, v)| v.clone())
                    .collect();
                let mut new_vs = Vec::with_capacity(vs.len());
                let mut next = self
                    .max_bound()
                    .into_iter()
                    .chain(images.iter().filter_map(|v| match v {
                        Var::Bound(n) => Some(*n),
                        _ => None,
                    }))
                    .max()
                    .map_or(0, |m| m + 1);
                for v in vs {
                    if images.contains(v) {
                        let nv = Var::Bound(next);
                        next += 1;
                        inner.insert(v.clone(), nv.clone());
                        new_vs.push(nv);
                    } else {
                        new_vs.push(v.clone());
                    }
                }
                Formula::Exists(new_vs, Box::new(b.subst(&inner)))
            }
            Formula::Pu(pu) => Formula::Pu(PuAtom {
                frame: pu.frame.clone(),
                inner: pu.inner.clone(),
                params: pu.params.clone(),
                actuals: pu.actuals.iter().map(get).collect(),
            }),
        }
    }

    /// Simultaneous renaming of free variables (no capture handling; the
    /// caller guarantees images are never bound names).
    pub fn rename_free(&self, m: &impl Fn(&Var) -> Option<Var>) -> Formula {
        self.rename_free_in(m, &mut Vec::new())
    }

    fn rename_free_in(&self, m: &impl Fn(&Var) -> Option<Var>, bound: &mut Vec<Var>) -> Formula {
        let get = |v: &Var, bound: &Vec<Var>| {
            if bound.contains(v) {
                v.clone()
            } else {
                m(v).unwrap_or_else(|| v.clone())
            }
        };
        match self {
            Formula::Emp => Formula::Emp,
            Formula::PointsTo(x, ys) => {
                Formula::PointsTo(get(x, bound), ys.iter().map(|y| get(y, bound)).collect())
            }
            Formula::Pred(p) => Formula::Pred(PredAtom {
                pred: p.pred.clone(),
                args: p.args.iter().map(|a| get(a, bound)).collect(),
            }),
            Formula::Theory(t) => Formula::Theory(t.rename(&|v| get(v, bound))),
            Formula::Sep(v) => Formula::Sep(v.iter().map(|g| g.rename_free_in(m, bound)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.rename_free_in(m, bound)).collect()),
            Formula::Exists(vs, b) => {
                let n = bound.len();
                bound.extend(vs.iter().cloned());
                let nb = b.rename_free_in(m, bound);
                bound.truncate(n);
                Formula::Exists(vs.clone(), Box::new(nb))
            }
            Formula::Pu(pu) => Formula::Pu(PuAtom {
                frame: pu.frame.clone(),
                inner: pu.inner.clone(),
                params: pu.params.clone(),
                actuals: pu.actuals.iter().map(|a| get(a, bound)).collect(),
            }),
        }
    }

    /// Normal form: flattened and sorted `*`/`\/`, no `emp` conjuncts, merged
    /// and pruned quantifier blocks with canonical binder names, pu-atoms with
    /// canonical parameters and without irrelevant ones.
    pub fn normalize(&self) -> Formula {
        let mut f = structural(self);
        if !f.has_exists() {
            return f;
        }
        for _ in 0..2 {
            f = canon_binders(&f, &mut Vec::new(), &mut 0);
            f = resort(f);
        }
        f
    }

    /// Erases bound variable names; used as a name-independent sort key.
    fn erased(&self) -> Formula {
        self.rename_bound_all(&|_| Var::Bound(u32::MAX))
    }

    fn rename_bound_all(&self, m: &impl Fn(&Var) -> Var) -> Formula {
        let f = |v: &Var| if matches!(v, Var::Bound(_)) { m(v) } else { v.clone() };
        match self {
            Formula::Emp => Formula::Emp,
            Formula::PointsTo(x, ys) => Formula::PointsTo(f(x), ys.iter().map(f).collect()),
            Formula::Pred(p) => Formula::Pred(p.rename(&f)),
            Formula::Theory(t) => Formula::Theory(t.rename(&f)),
            Formula::Sep(v) => Formula::Sep(v.iter().map(|g| g.rename_bound_all(m)).collect()),
            Formula::Or(v) => Formula::Or(v.iter().map(|g| g.rename_bound_all(m)).collect()),
            Formula::Exists(vs, b) => {
                Formula::Exists(vs.iter().map(f).collect(), Box::new(b.rename_bound_all(m)))
            }
            Formula::Pu(pu) => Formula::Pu(PuAtom {
                actuals: pu.actuals.iter().map(f).collect(),
                ..pu.clone()
            }),
        }
    }
}

fn sort_children(v: &mut [Formula]) {
    v.sort_by_cached_key(|g| (g.erased(), g.clone()));
}

fn structural(f: &Formula) -> Formula {
    match f {
        Formula::Emp | Formula::PointsTo(..) | Formula::Pred(_) | Formula::Theory(_) => f.clone(),
        Formula::Sep(v) => {
            let mut out = Vec::new();
            for g in v {
                match structural(g) {
                    Formula::Emp => {}
                    Formula::Sep(w) => out.extend(w),
                    h => out.push(h),
                }
            }
            sort_children(&mut out);
            Formula::sep(out)
        }
        Formula::Or(v) => {
            let mut out = Vec::new();
            for g in v {
                match structural(g) {
                    Formula::Or(w) => out.extend(w),
                    h => out.push(h),
                }
            }
            sort_children(&mut out);
            out.dedup();
            Formula::or(out)
        }
        Formula::Exists(vs, b) => {
            let body = structural(b);
            let (mut all, body) = match body {
                Formula::Exists(ws, c) => {
                    let mut all = vs.clone();
                    all.extend(ws);
                    (all, *c)
                }
                other => (vs.clone(), other),
            };
            let fv = body.free_vars();
            let mut seen = BTreeSet::new();
            all.retain(|v| fv.contains(v) && seen.insert(v.clone()));
            Formula::exists(all, body)
        }
        Formula::Pu(pu) => normalize_pu(pu),
    }
}

fn resort(f: Formula) -> Formula {
    match f {
        Formula::Sep(v) => {
            let mut w: Vec<Formula> = v.into_iter().map(resort).collect();
            sort_children(&mut w);
            Formula::Sep(w)
        }
        Formula::Or(v) => {
            let mut w: Vec<Formula> = v.into_iter().map(resort).collect();
            sort_children(&mut w);
            w.dedup();
            Formula::or(w)
        }
        Formula::Exists(vs, b) => Formula::Exists(vs, Box::new(resort(*b))),
        // pu normal forms only see bound actuals through erased names
        other => other,
    }
}

/// Renames every binder to `Bound(k)` in traversal order; binders of one
/// block are ordered by first occurrence in their body.
fn canon_binders(f: &Formula, env: &mut Vec<(Var, Var)>, counter: &mut u32) -> Formula {
    let look = |v: &Var, env: &Vec<(Var, Var)>| {
        env.iter()
            .rev()
            .find(|(o, _)| o == v)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| v.clone())
    };
    match f {
        Formula::Emp => Formula::Emp,
        Formula::PointsTo(x, ys) => {
            Formula::PointsTo(look(x, env), ys.iter().map(|y| look(y, env)).collect())
        }
        Formula::Pred(p) => Formula::Pred(p.rename(&|v| look(v, env))),
        Formula::Theory(t) => Formula::Theory(t.rename(&|v| look(v, env))),
        Formula::Sep(v) => Formula::Sep(v.iter().map(|g| canon_binders(g, env, counter)).collect()),
        Formula::Or(v) => Formula::Or(v.iter().map(|g| canon_binders(g, env, counter)).collect()),
        Formula::Exists(vs, b) => {
            let order = b.free_vars_ordered();
            let mut sorted: Vec<Var> = order.into_iter().filter(|v| vs.contains(v)).collect();
            for v in vs {
                if !sorted.contains(v) {
                    sorted.push(v.clone())
                }
            }
            let n = env.len();
            let mut new_vs = Vec::new();
            for v in sorted {
                let nv = Var::Bound(*counter);
                *counter += 1;
                env.push((v, nv.clone()));
                new_vs.push(nv);
            }
            let nb = canon_binders(b, env, counter);
            env.truncate(n);
            Formula::Exists(new_vs, Box::new(nb))
        }
        Formula::Pu(pu) => Formula::Pu(PuAtom {
            actuals: pu.actuals.iter().map(|a| look(a, env)).collect(),
            ..pu.clone()
        }),
    }
}

/// Canonical form of a pu-atom: irrelevant parameters dropped, parameters
/// renamed `_p0, _p1, ...` by first occurrence (inner atom first, then the
/// frame atoms in a name-independent order).  An empty frame yields the
/// plain instantiated predicate atom, a frame equal to the inner atom `emp`.
pub fn normalize_pu(pu: &PuAtom) -> Formula {
    if pu.frame.is_empty() {
        return Formula::Pred(pu.inner_instance());
    }
    // the frame is the whole atom: only the empty heap is left
    if pu.frame_instance() == [pu.inner_instance()] {
        return Formula::Emp;
    }
    let th = pu.theta();
    let erase = |v: &Var| match v {
        Var::Bound(_) => Var::Bound(u32::MAX),
        o => o.clone(),
    };
    let mut frame = pu.frame.clone();
    frame.sort_by_cached_key(|a| {
        let inst = a.rename(&|v| erase(th.get(v).unwrap_or(v)));
        (inst, a.clone())
    });
    let mut order: Vec<Var> = Vec::new();
    for a in core::iter::once(&pu.inner).chain(frame.iter()) {
        for x in &a.args {
            if !order.contains(x) {
                order.push(x.clone())
            }
        }
    }
    let ren: Subst = order
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), Var::Param(i as u32)))
        .collect();
    let mut new_frame: Vec<PredAtom> = frame.iter().map(|a| a.subst(&ren)).collect();
    new_frame.sort();
    let inner = pu.inner.subst(&ren);
    let params: Vec<Var> = (0..order.len() as u32).map(Var::Param).collect();
    let actuals: Vec<Var> = order.iter().map(|p| pu.actual_of(p)).collect();
    Formula::Pu(PuAtom {
        frame: new_frame,
        inner,
        params,
        actuals,
    })
}

/// Substitution helper: a one-variable map.
pub fn single(from: Var, to: Var) -> Subst {
    let mut s = Subst::new();
    s.insert(from, to);
    s
}

fn fmt_prec(f: &Formula, out: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
    // ctx: 0 = top, 1 = under \/, 2 = under *
    match f {
        Formula::Emp => out.write_str("emp"),
        Formula::PointsTo(x, ys) => {
            write!(out, "{} -> (", x)?;
            for (i, y) in ys.iter().enumerate() {
                if i > 0 {
                    out.write_str(",")?;
                }
                write!(out, "{}", y)?;
            }
            out.write_str(")")
        }
        Formula::Pred(p) => write!(out, "{}", p),
        Formula::Theory(t) => write!(out, "{}", t),
        Formula::Pu(pu) => write!(out, "{}", pu),
        Formula::Sep(v) => {
            // a nested `*` keeps its parentheses so that printing is injective
            if ctx >= 2 {
                out.write_str("(")?;
            }
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    out.write_str(" * ")?;
                }
                fmt_prec(g, out, 2)?;
            }
            if ctx >= 2 {
                out.write_str(")")?;
            }
            Ok(())
        }
        Formula::Or(v) => {
            if ctx >= 1 {
                out.write_str("(")?;
            }
            for (i, g) in v.iter().enumerate() {
                if i > 0 {
                    out.write_str(" \\/ ")?;
                }
                fmt_prec(g, out, 1)?;
            }
            if ctx >= 1 {
                out.write_str(")")?;
            }
            Ok(())
        }
        Formula::Exists(vs, b) => {
            if ctx >= 1 {
                out.write_str("(")?;
            }
            out.write_str("exists")?;
            for v in vs {
                write!(out, " {}", v)?;
            }
            out.write_str(". ")?;
            fmt_prec(b, out, 0)?;
            if ctx >= 1 {
                out.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f, 0)
    }
}
