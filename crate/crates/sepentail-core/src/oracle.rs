//! Bounded-model reference semantics.
//!
//! Structures use the locations `0..L`.  Satisfaction is decided by direct
//! structural recursion over the formula and the heap, with predicate atoms
//! evaluated through the rules (memoized per structure); it never goes
//! through the proof calculus.  Models of a left-hand side are produced by
//! expanding it into predicate-free symbolic heaps with at most `K` cells and
//! assigning locations to their variables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Formula, PuAtom, TheoryAtom};
use crate::sequent::Sequent;
use crate::sid::Sid;
use crate::theory::TheoryTag;
use crate::unfold::bounded_unfold_heaps;
use crate::var::{Pred, Var};

pub type Loc = u32;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Structure {
    pub store: BTreeMap<Var, Loc>,
    pub heap: BTreeMap<Loc, Vec<Loc>>,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("store {")?;
        for (i, (v, l)) in self.store.iter().enumerate() {
            write!(f, "{}{} -> {}", if i > 0 { ", " } else { "" }, v, l)?;
        }
        f.write_str("} heap {")?;
        for (i, (l, ts)) in self.heap.iter().enumerate() {
            write!(f, "{}({}", if i > 0 { ", " } else { "" }, l)?;
            for t in ts {
                write!(f, ",{}", t)?;
            }
            f.write_str(")")?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub locations: u32,
    pub heap: usize,
}

impl Default for Bounds {
    fn default() -> Bounds {
        Bounds { locations: 6, heap: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleVerdict {
    ValidUpToBound,
    Countermodel(Structure),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleError {
    BoundTooSmall { vars: usize, locations: u32 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::BoundTooSmall { vars, locations } => {
                write!(f, "{} free variables do not fit into {} locations", vars, locations)
            }
        }
    }
}

/// Which stores are enumerated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stores {
    /// Injective stores, as in the definition of sequent validity.
    Injective,
    /// Every store; used for problems before the case split on equalities.
    All,
}

/// Does `(st.store, st.heap)` satisfy `f`?
pub fn holds(st: &Structure, f: &Formula, sid: &Sid, theory: TheoryTag, locations: u32) -> bool {
    let mut ev = Eval::new(sid, theory, locations, st);
    let full = ev.full();
    let env = st.store.clone();
    ev.eval(f, &env, full)
}

/// Searches for a countermodel of `lhs ⊢ rhs` within the bounds.
pub fn entails(
    lhs: &Formula,
    rhs: &[Formula],
    sid: &Sid,
    theory: TheoryTag,
    bounds: Bounds,
    stores: Stores,
) -> Result<OracleVerdict, OracleError> {
    let mut found = None;
    for_each_model(lhs, rhs, sid, theory, bounds, stores, &mut |st, ev| {
        let env = st.store.clone();
        let full = ev.full();
        if rhs.iter().any(|g| ev.eval(g, &env, full)) {
            true
        } else {
            found = Some(st.clone());
            false
        }
    })?;
    Ok(match found {
        Some(st) => OracleVerdict::Countermodel(st),
        None => OracleVerdict::ValidUpToBound,
    })
}

/// Bounded check of a sequent (injective stores).
pub fn entails_sequent(s: &Sequent, sid: &Sid, theory: TheoryTag, bounds: Bounds) -> Result<OracleVerdict, OracleError> {
    entails(&s.lhs, &s.rhs, sid, theory, bounds, Stores::Injective)
}

/// All models of `f` within the bounds (injective stores over `fv(f)`).  For
/// the empty and equality theories, models are listed up to renaming of
/// the locations outside the store.
pub fn models_of(f: &Formula, sid: &Sid, theory: TheoryTag, bounds: Bounds) -> Result<Vec<Structure>, OracleError> {
    let mut out = BTreeSet::new();
    for_each_model(f, &[], sid, theory, bounds, Stores::Injective, &mut |st, _| {
        out.insert(st.clone());
        true
    })?;
    Ok(out.into_iter().collect())
}

/// Calls `visit` on every model of `lhs`, with stores defined on the free
/// variables of `lhs` and `rhs`.  Stops when `visit` returns false.
fn for_each_model(
    lhs: &Formula,
    rhs: &[Formula],
    sid: &Sid,
    theory: TheoryTag,
    bounds: Bounds,
    stores: Stores,
    visit: &mut dyn FnMut(&Structure, &mut Eval<'_>) -> bool,
) -> Result<(), OracleError> {
    let mut fv = lhs.free_vars();
    for g in rhs {
        fv.extend(g.free_vars());
    }
    let fv: Vec<Var> = fv.into_iter().collect();
    let l = bounds.locations;
    if stores == Stores::Injective && fv.len() > l as usize {
        return Err(OracleError::BoundTooSmall { vars: fv.len(), locations: l });
    }
    let heaps = bounded_unfold_heaps(lhs, sid, bounds.heap);
    let symmetric = theory != TheoryTag::NatOrder;
    for store in enum_stores(&fv, l, stores, symmetric) {
        let mut seen: BTreeSet<BTreeMap<Loc, Vec<Loc>>> = BTreeSet::new();
        for h in &heaps {
            let mut stop = false;
            assign(h.vars.as_slice(), &h.atoms, &store, l, symmetric, theory, &mut |heap| {
                if stop || !seen.insert(heap.clone()) {
                    return;
                }
                let st = Structure { store: store.clone(), heap };
                let mut ev = Eval::new(sid, theory, l, &st);
                if !visit(&st, &mut ev) {
                    stop = true;
                }
            });
            if stop {
                return Ok(());
            }
        }
    }
    Ok(())
}

fn enum_stores(fv: &[Var], l: u32, mode: Stores, symmetric: bool) -> Vec<BTreeMap<Var, Loc>> {
    let mut out = Vec::new();
    let mut cur: Vec<Loc> = Vec::new();
    fn rec(i: usize, n: usize, l: u32, mode: Stores, symmetric: bool, cur: &mut Vec<Loc>, out: &mut Vec<Vec<Loc>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        let used = |v: Loc, cur: &Vec<Loc>| cur.contains(&v);
        if symmetric {
            // canonical: a new value is always the next unused one
            let next = cur.iter().map(|v| v + 1).max().unwrap_or(0);
            let mut cands: Vec<Loc> = Vec::new();
            if mode == Stores::All {
                cands.extend(cur.iter().cloned().collect::<BTreeSet<_>>());
            }
            if next < l {
                cands.push(next);
            }
            for v in cands {
                cur.push(v);
                rec(i + 1, n, l, mode, symmetric, cur, out);
                cur.pop();
            }
        } else {
            for v in 0..l {
                if mode == Stores::Injective && used(v, cur) {
                    continue;
                }
                cur.push(v);
                rec(i + 1, n, l, mode, symmetric, cur, out);
                cur.pop();
            }
        }
    }
    let mut raw = Vec::new();
    rec(0, fv.len(), l, mode, symmetric, &mut cur, &mut raw);
    for vals in raw {
        out.push(fv.iter().cloned().zip(vals).collect());
    }
    out
}

/// Assigns locations to the existentials of a predicate-free symbolic heap
/// and reports every resulting heap.
fn assign(
    vars: &[Var],
    atoms: &[Formula],
    store: &BTreeMap<Var, Loc>,
    l: u32,
    symmetric: bool,
    theory: TheoryTag,
    out: &mut dyn FnMut(BTreeMap<Loc, Vec<Loc>>),
) {
    let mut env = store.clone();
    fn rec(
        i: usize,
        vars: &[Var],
        atoms: &[Formula],
        env: &mut BTreeMap<Var, Loc>,
        l: u32,
        symmetric: bool,
        theory: TheoryTag,
        out: &mut dyn FnMut(BTreeMap<Loc, Vec<Loc>>),
    ) {
        if i == vars.len() {
            let val = |v: &Var| env.get(v).copied();
            let mut heap = BTreeMap::new();
            for a in atoms {
                match a {
                    Formula::PointsTo(x, ys) => {
                        let (Some(src), Some(ts)) = (val(x), ys.iter().map(val).collect::<Option<Vec<Loc>>>()) else {
                            return;
                        };
                        if heap.insert(src, ts).is_some() {
                            return;
                        }
                    }
                    Formula::Theory(t) => {
                        if !theory_holds(t, env, theory) {
                            return;
                        }
                    }
                    Formula::Emp => {}
                    _ => return,
                }
            }
            out(heap);
            return;
        }
        let cands: Vec<Loc> = if symmetric {
            let used: BTreeSet<Loc> = env.values().cloned().collect();
            let mut c: Vec<Loc> = used.iter().cloned().collect();
            if let Some(n) = (0..l).find(|v| !used.contains(v)) {
                c.push(n);
            }
            c
        } else {
            (0..l).collect()
        };
        for v in cands {
            env.insert(vars[i].clone(), v);
            rec(i + 1, vars, atoms, env, l, symmetric, theory, out);
            env.remove(&vars[i]);
        }
    }
    rec(0, vars, atoms, &mut env, l, symmetric, theory, out);
}

fn theory_holds(t: &TheoryAtom, env: &BTreeMap<Var, Loc>, _theory: TheoryTag) -> bool {
    let g = |v: &Var| env.get(v).copied().unwrap_or(Loc::MAX);
    match t {
        TheoryAtom::False => false,
        TheoryAtom::Eq(a, b) => g(a) == g(b),
        TheoryAtom::Ne(a, b) => g(a) != g(b),
        TheoryAtom::Le(a, b) => g(a) <= g(b),
        TheoryAtom::Lt(a, b) => g(a) < g(b),
        TheoryAtom::Nonneg(_) => true,
    }
}

/// An argument inside a partially unfolded atom: a parameter of the pu-atom
/// (compared syntactically against the frame) or a located existential.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Tag {
    P(usize),
    X(Loc),
}

type PuKey = (Pred, Vec<Tag>, Vec<usize>, u32, bool);

/// Satisfaction checker for one structure.
pub struct Eval<'a> {
    sid: &'a Sid,
    theory: TheoryTag,
    locations: u32,
    cells: Vec<(Loc, Vec<Loc>)>,
    store_locs: BTreeSet<Loc>,
    memo: BTreeMap<(Pred, Vec<Loc>, u32), bool>,
    pu_memo: BTreeMap<(PuAtom, Vec<Loc>, PuKey), bool>,
}

impl<'a> Eval<'a> {
    fn new(sid: &'a Sid, theory: TheoryTag, locations: u32, st: &Structure) -> Eval<'a> {
        assert!(st.heap.len() <= 31, "heap too large for the oracle");
        Eval {
            sid,
            theory,
            locations,
            cells: st.heap.iter().map(|(l, ts)| (*l, ts.clone())).collect(),
            store_locs: st.store.values().cloned().collect(),
            memo: BTreeMap::new(),
            pu_memo: BTreeMap::new(),
        }
    }

    fn full(&self) -> u32 {
        (1u32 << self.cells.len()) - 1
    }

    fn cell_at(&self, l: Loc, mask: u32) -> Option<usize> {
        let i = self.cells.iter().position(|(s, _)| *s == l)?;
        (mask & (1 << i) != 0).then_some(i)
    }

    /// Candidate values for an existential.  Without an order on
    /// locations, all values outside the heap and the environment behave
    /// alike, so one representative of them is enough.
    fn domain(&self, env: &BTreeMap<Var, Loc>) -> Vec<Loc> {
        if self.theory == TheoryTag::NatOrder {
            return (0..self.locations).collect();
        }
        let mut used: BTreeSet<Loc> = self.store_locs.clone();
        used.extend(env.values().cloned());
        for (s, ts) in &self.cells {
            used.insert(*s);
            used.extend(ts.iter().cloned());
        }
        let fresh = (0..).find(|v| !used.contains(v)).unwrap();
        used.insert(fresh);
        used.into_iter().collect()
    }

    pub fn eval(&mut self, f: &Formula, env: &BTreeMap<Var, Loc>, mask: u32) -> bool {
        match f {
            Formula::Emp => mask == 0,
            Formula::Theory(t) => mask == 0 && theory_holds(t, env, self.theory),
            Formula::PointsTo(x, ys) => {
                let Some(i) = env.get(x).and_then(|l| self.cell_at(*l, mask)) else {
                    return false;
                };
                mask == 1 << i && ys.iter().map(|y| env.get(y).copied()).eq(self.cells[i].1.iter().map(|t| Some(*t)))
            }
            Formula::Pred(a) => {
                let Some(vals) = a.args.iter().map(|v| env.get(v).copied()).collect::<Option<Vec<Loc>>>() else {
                    return false;
                };
                self.pred(&a.pred, &vals, mask)
            }
            Formula::Pu(pu) => {
                let Some(vals) = pu.actuals.iter().map(|v| env.get(v).copied()).collect::<Option<Vec<Loc>>>() else {
                    return false;
                };
                self.pu(pu, &vals, mask)
            }
            Formula::Sep(parts) => self.sep(parts, env, mask),
            Formula::Or(parts) => parts.iter().any(|g| self.eval(g, env, mask)),
            Formula::Exists(vars, body) => self.exists(vars, body, env, mask),
        }
    }

    fn exists(&mut self, vars: &[Var], body: &Formula, env: &BTreeMap<Var, Loc>, mask: u32) -> bool {
        let Some((v, rest)) = vars.split_first() else {
            return self.eval(body, env, mask);
        };
        for l in self.domain(env) {
            let mut e2 = env.clone();
            e2.insert(v.clone(), l);
            if self.exists(rest, body, &e2, mask) {
                return true;
            }
        }
        false
    }

    fn sep(&mut self, parts: &[Formula], env: &BTreeMap<Var, Loc>, mask: u32) -> bool {
        // theory atoms and points-to atoms are decided without search
        let mut rest_mask = mask;
        let mut others: Vec<&Formula> = Vec::new();
        for p in parts {
            match p {
                Formula::Theory(t) => {
                    if !theory_holds(t, env, self.theory) {
                        return false;
                    }
                }
                Formula::Emp => {}
                Formula::PointsTo(x, _) => {
                    let Some(i) = env.get(x).and_then(|l| self.cell_at(*l, rest_mask)) else {
                        return false;
                    };
                    if !self.eval(p, env, 1 << i) {
                        return false;
                    }
                    rest_mask &= !(1 << i);
                }
                _ => others.push(p),
            }
        }
        self.distribute(&others, env, rest_mask)
    }

    fn distribute(&mut self, parts: &[&Formula], env: &BTreeMap<Var, Loc>, mask: u32) -> bool {
        match parts {
            [] => mask == 0,
            [only] => self.eval(only, env, mask),
            [first, rest @ ..] => {
                // enumerate sub-masks of `mask` for the first part
                let mut sub = mask;
                loop {
                    if self.eval(first, env, sub) && self.distribute(rest, env, mask & !sub) {
                        return true;
                    }
                    if sub == 0 {
                        return false;
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
    }

    fn pred(&mut self, p: &Pred, vals: &[Loc], mask: u32) -> bool {
        let key = (p.clone(), vals.to_vec(), mask);
        if let Some(r) = self.memo.get(&key) {
            return *r;
        }
        // cycles cannot occur: every unfolding consumes a cell
        let r = self.pred_uncached(p, vals, mask);
        self.memo.insert(key, r);
        r
    }

    fn pred_uncached(&mut self, p: &Pred, vals: &[Loc], mask: u32) -> bool {
        let Some(c) = vals.first().and_then(|l| self.cell_at(*l, mask)) else {
            return false;
        };
        let sid = self.sid;
        for rule in sid.rules_of(p) {
            let mut env: BTreeMap<Var, Loc> = rule.head.args.iter().cloned().zip(vals.iter().cloned()).collect();
            let Some((_, ts)) = rule.points_to() else { continue };
            if !bind_targets(ts, &self.cells[c].1, &mut env) {
                continue;
            }
            let unbound: Vec<Var> = rule.exvars.iter().filter(|v| !env.contains_key(*v)).cloned().collect();
            let body: Vec<Formula> = rule.body.iter().filter(|a| !matches!(a, Formula::PointsTo(..))).cloned().collect();
            let rest = mask & !(1 << c);
            if self.exists(&unbound, &Formula::sep(body), &env, rest) {
                return true;
            }
        }
        false
    }

    fn pu(&mut self, pu: &PuAtom, vals: &[Loc], mask: u32) -> bool {
        let inner: Vec<Tag> = pu
            .inner
            .args
            .iter()
            .map(|a| Tag::P(pu.params.iter().position(|p| p == a).expect("pu argument is a parameter")))
            .collect();
        let frames: Vec<usize> = (0..pu.frame.len()).collect();
        self.pu_tree(pu, vals, &pu.inner.pred, &inner, &frames, mask, true)
    }

    /// Is there an unfolding tree for the atom `pred(args)` whose leaves are
    /// exactly the frame atoms `frames` and whose cells are `mask`?
    #[allow(clippy::too_many_arguments)]
    fn pu_tree(&mut self, pu: &PuAtom, vals: &[Loc], pred: &Pred, args: &[Tag], frames: &[usize], mask: u32, root: bool) -> bool {
        let key = (pu.clone(), vals.to_vec(), (pred.clone(), args.to_vec(), frames.to_vec(), mask, root));
        if let Some(r) = self.pu_memo.get(&key) {
            return *r;
        }
        let r = self.pu_tree_uncached(pu, vals, pred, args, frames, mask, root);
        self.pu_memo.insert(key, r);
        r
    }

    #[allow(clippy::too_many_arguments)]
    fn pu_tree_uncached(
        &mut self,
        pu: &PuAtom,
        vals: &[Loc],
        pred: &Pred,
        args: &[Tag],
        frames: &[usize],
        mask: u32,
        root: bool,
    ) -> bool {
        let value = |t: &Tag| match t {
            Tag::P(i) => vals[*i],
            Tag::X(l) => *l,
        };
        if frames.is_empty() && !root {
            let vs: Vec<Loc> = args.iter().map(value).collect();
            return self.pred(pred, &vs, mask);
        }
        // this atom is the hole for the frame atom
        if !root && frames.len() == 1 && mask == 0 {
            let fa = &pu.frame[frames[0]];
            if &fa.pred == pred
                && fa.args.iter().zip(args).all(|(b, t)| {
                    let bi = pu.params.iter().position(|p| p == b).unwrap();
                    match t {
                        Tag::P(i) => *i == bi,
                        Tag::X(l) => *l == vals[bi],
                    }
                })
            {
                return true;
            }
        }
        let Some(c) = args.first().map(value).and_then(|l| self.cell_at(l, mask)) else {
            return false;
        };
        let sid = self.sid;
        let cell = self.cells[c].1.clone();
        for rule in sid.rules_of(pred) {
            let mut tags: BTreeMap<Var, Tag> = rule.head.args.iter().cloned().zip(args.iter().cloned()).collect();
            let Some((_, ts)) = rule.points_to() else { continue };
            let mut ok = true;
            for (t, l) in ts.iter().zip(&cell) {
                match tags.get(t) {
                    Some(tag) => ok &= value(tag) == *l,
                    None => {
                        tags.insert(t.clone(), Tag::X(*l));
                    }
                }
            }
            if !ok {
                continue;
            }
            let unbound: Vec<Var> = rule.exvars.iter().filter(|v| !tags.contains_key(*v)).cloned().collect();
            let env_vals: BTreeMap<Var, Loc> = tags.iter().map(|(k, t)| (k.clone(), value(t))).collect();
            let dom = self.domain(&env_vals);
            let mut choice = alloc::vec![0usize; unbound.len()];
            loop {
                let mut t2 = tags.clone();
                for (v, i) in unbound.iter().zip(&choice) {
                    t2.insert(v.clone(), Tag::X(dom[*i]));
                }
                if self.pu_body(pu, vals, rule, &t2, frames, mask & !(1 << c)) {
                    return true;
                }
                // next assignment
                let mut k = 0;
                while k < choice.len() {
                    choice[k] += 1;
                    if choice[k] < dom.len() {
                        break;
                    }
                    choice[k] = 0;
                    k += 1;
                }
                if k == choice.len() {
                    break;
                }
            }
        }
        false
    }

    fn pu_body(&mut self, pu: &PuAtom, vals: &[Loc], rule: &crate::sid::Rule, tags: &BTreeMap<Var, Tag>, frames: &[usize], mask: u32) -> bool {
        let value = |t: &Tag| match t {
            Tag::P(i) => vals[*i],
            Tag::X(l) => *l,
        };
        let env: BTreeMap<Var, Loc> = tags.iter().map(|(k, t)| (k.clone(), value(t))).collect();
        if !rule.body_theory().all(|t| theory_holds(t, &env, self.theory)) {
            return false;
        }
        let kids: Vec<(Pred, Vec<Tag>)> = rule
            .body_preds()
            .map(|a| (a.pred.clone(), a.args.iter().map(|v| tags[v].clone()).collect()))
            .collect();
        // distribute the frame atoms over the children
        let k = kids.len();
        if k == 0 {
            return frames.is_empty() && mask == 0;
        }
        let mut owner = alloc::vec![0usize; frames.len()];
        loop {
            let mut parts: Vec<Vec<usize>> = alloc::vec![Vec::new(); k];
            for (f, o) in frames.iter().zip(&owner) {
                parts[*o].push(*f);
            }
            if self.pu_kids(pu, vals, &kids, &parts, mask) {
                return true;
            }
            let mut i = 0;
            while i < owner.len() {
                owner[i] += 1;
                if owner[i] < k {
                    break;
                }
                owner[i] = 0;
                i += 1;
            }
            if i == owner.len() {
                return false;
            }
        }
    }

    fn pu_kids(&mut self, pu: &PuAtom, vals: &[Loc], kids: &[(Pred, Vec<Tag>)], parts: &[Vec<usize>], mask: u32) -> bool {
        match kids {
            [] => mask == 0,
            [(p, a)] => self.pu_tree(pu, vals, p, a, &parts[0], mask, false),
            [(p, a), rest @ ..] => {
                let mut sub = mask;
                loop {
                    if self.pu_tree(pu, vals, p, a, &parts[0], sub, false) && self.pu_kids(pu, vals, rest, &parts[1..], mask & !sub) {
                        return true;
                    }
                    if sub == 0 {
                        return false;
                    }
                    sub = (sub - 1) & mask;
                }
            }
        }
    }
}

fn bind_targets(ts: &[Var], cell: &[Loc], env: &mut BTreeMap<Var, Loc>) -> bool {
    if ts.len() != cell.len() {
        return false;
    }
    for (t, l) in ts.iter().zip(cell) {
        match env.get(t) {
            Some(v) if v != l => return false,
            Some(_) => {}
            None => {
                env.insert(t.clone(), *l);
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::PredAtom;
    use crate::sid::Rule;
    use alloc::vec;

    fn v(s: &str) -> Var {
        Var::user(s)
    }
    fn pa(p: &str, a: &[&str]) -> PredAtom {
        PredAtom::new(Pred::new(p), a.iter().map(|s| v(s)).collect())
    }
    fn pf(p: &str, a: &[&str]) -> Formula {
        Formula::Pred(pa(p, a))
    }
    fn pto(x: &str, ys: &[&str]) -> Formula {
        Formula::pto(v(x), ys.iter().map(|s| v(s)).collect())
    }
    fn rule(h: PredAtom, ex: &[&str], body: Vec<Formula>) -> Rule {
        Rule {
            head: h,
            exvars: ex.iter().map(|s| v(s)).collect(),
            body,
        }
    }
    fn st(store: &[(&str, Loc)], heap: &[(Loc, &[Loc])]) -> Structure {
        Structure {
            store: store.iter().map(|(x, l)| (v(x), *l)).collect(),
            heap: heap.iter().map(|(l, ts)| (*l, ts.to_vec())).collect(),
        }
    }

    fn ils_als() -> Sid {
        Sid::new(
            vec![
                rule(pa("ils", &["x", "y"]), &[], vec![pto("x", &["y"]), Formula::Theory(TheoryAtom::Le(v("x"), v("y")))]),
                rule(
                    pa("ils", &["x", "y"]),
                    &["z"],
                    vec![pto("x", &["z"]), pf("ils", &["z", "y"]), Formula::Theory(TheoryAtom::Le(v("x"), v("z")))],
                ),
                rule(pa("als", &["x", "y"]), &[], vec![pto("x", &["y"]), Formula::Theory(TheoryAtom::ne(v("x"), v("y")))]),
                rule(
                    pa("als", &["x", "y"]),
                    &["z"],
                    vec![pto("x", &["z"]), pf("als", &["z", "y"]), Formula::Theory(TheoryAtom::ne(v("x"), v("y")))],
                ),
            ],
            1,
            false,
        )
        .unwrap()
    }

    #[test]
    fn increasing_list_model() {
        let sid = ils_als();
        let f = Formula::sep(vec![pf("ils", &["x1", "x2"]), pf("ils", &["x2", "x3"])]);
        let s = st(&[("x1", 1), ("x2", 2), ("x3", 4)], &[(1, &[2]), (2, &[3]), (3, &[4])]);
        assert!(holds(&s, &f, &sid, TheoryTag::NatOrder, 6));
        // decreasing step
        let s2 = st(&[("x1", 1), ("x2", 2), ("x3", 4)], &[(1, &[2]), (2, &[5]), (5, &[4])]);
        assert!(!holds(&s2, &f, &sid, TheoryTag::NatOrder, 6));
    }

    #[test]
    fn shared_root_has_no_model() {
        let sid = ils_als();
        let f = Formula::sep(vec![pf("ils", &["x1", "x2"]), pf("ils", &["x1", "x3"])]);
        let ms = models_of(&f, &sid, TheoryTag::NatOrder, Bounds { locations: 4, heap: 4 }).unwrap();
        assert!(ms.is_empty());
    }

    #[test]
    fn ils_does_not_entail_als() {
        let sid = ils_als();
        let r = entails(
            &pf("ils", &["x1", "x2"]),
            &[pf("als", &["x1", "x2"])],
            &sid,
            TheoryTag::NatOrder,
            Bounds { locations: 6, heap: 3 },
            Stores::Injective,
        )
        .unwrap();
        let OracleVerdict::Countermodel(m) = r else { panic!() };
        // a two-cell list whose last cell points to itself
        let (a, b) = (m.store[&v("x1")], m.store[&v("x2")]);
        assert_eq!(m.heap.len(), 2);
        assert_eq!(m.heap[&a], vec![b]);
        assert_eq!(m.heap[&b], vec![b]);
    }

    #[test]
    fn ils_with_step_entails_als() {
        let sid = ils_als();
        let lhs = Formula::sep(vec![
            pf("ils", &["x1", "x2"]),
            pto("x2", &["x3"]),
            Formula::Theory(TheoryAtom::Lt(v("x2"), v("x3"))),
        ]);
        let r = entails(&lhs, &[pf("als", &["x1", "x3"])], &sid, TheoryTag::NatOrder, Bounds { locations: 6, heap: 4 }, Stores::Injective)
            .unwrap();
        assert_eq!(r, OracleVerdict::ValidUpToBound);
    }

    #[test]
    fn partially_unfolded_atom() {
        let sid = Sid::new(
            vec![
                rule(pa("p", &["x"]), &["z1", "z2"], vec![pto("x", &["z1", "z2"]), pf("q", &["z1"]), pf("q", &["z2"])]),
                rule(pa("q", &["x"]), &[], vec![pto("x", &["x", "x"])]),
            ],
            2,
            false,
        )
        .unwrap();
        let (xp, yp) = (Var::Param(0), Var::Param(1));
        let pu = Formula::Pu(PuAtom {
            frame: vec![PredAtom::new(Pred::new("q"), vec![yp.clone()])],
            inner: PredAtom::new(Pred::new("p"), vec![xp.clone()]),
            params: vec![xp, yp],
            actuals: vec![v("x"), v("y")],
        });
        let s = st(&[("x", 1), ("y", 2)], &[(1, &[2, 3]), (3, &[3, 3])]);
        assert!(holds(&s, &pu, &sid, TheoryTag::Empty, 6));
        // the frame must be the first child
        let s2 = st(&[("x", 1), ("y", 2)], &[(1, &[3, 2]), (3, &[3, 3])]);
        assert!(holds(&s2, &pu, &sid, TheoryTag::Empty, 6));
        let s3 = st(&[("x", 1), ("y", 2)], &[(1, &[4, 3]), (3, &[3, 3])]);
        assert!(!holds(&s3, &pu, &sid, TheoryTag::Empty, 6));
    }

    #[test]
    fn points_to_models() {
        let sid = ils_als();
        let ms = models_of(&pto("x", &["y"]), &sid, TheoryTag::Empty, Bounds { locations: 2, heap: 1 }).unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].heap.len(), 1);
        assert!(models_of(&Formula::Emp, &sid, TheoryTag::Empty, Bounds::default()).unwrap().iter().all(|m| m.heap.is_empty()));
        let bad = Formula::sep(vec![pto("x", &["y"]), Formula::Theory(TheoryAtom::False)]);
        assert!(models_of(&bad, &sid, TheoryTag::Empty, Bounds::default()).unwrap().is_empty());
    }

    #[test]
    fn reflexive_entailment_and_small_bound() {
        let sid = ils_als();
        let f = pf("als", &["x", "y"]);
        let r = entails(&f, &[f.clone()], &sid, TheoryTag::Eq, Bounds::default(), Stores::Injective).unwrap();
        assert_eq!(r, OracleVerdict::ValidUpToBound);
        let e = entails(&f, &[], &sid, TheoryTag::Eq, Bounds { locations: 1, heap: 2 }, Stores::Injective);
        assert!(matches!(e, Err(OracleError::BoundTooSmall { .. })));
    }
}
