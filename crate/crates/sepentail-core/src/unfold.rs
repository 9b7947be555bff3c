//! Unfolding of predicate and pu-atoms, points-to unfoldings and heap
//! splitting.
//!
//! Every function that introduces existential variables draws their names
//! from a caller-supplied counter of `Bound` indices, which must lie above
//! every bound index already in scope.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::dnf::SymHeap;
use crate::formula::{Formula, PredAtom, PuAtom, Subst};
use crate::sid::{root_unsat, Sid};
use crate::var::{Pred, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unfolding {
    pub result: Formula,
    /// Index of the rule in `Sid::rules`.
    pub rule: usize,
}

fn bound(next: &mut u32) -> Var {
    let v = Var::Bound(*next);
    *next += 1;
    v
}

/// One unfolding per rule of the atom's predicate; the result is
/// `exists ys. body` with the rule's existentials renamed to fresh binders.
pub fn unfold_pred(a: &PredAtom, sid: &Sid, next: &mut u32) -> Vec<Unfolding> {
    sid.rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.head.pred == a.pred)
        .map(|(i, r)| {
            let (exs, body) = r.instantiate(&a.args, &mut |_| bound(next));
            Unfolding {
                result: Formula::exists(exs, Formula::sep(body)),
                rule: i,
            }
        })
        .collect()
}

/// Matches every frame atom against a distinct body atom; the substitution
/// may only bind the given existentials.
fn match_frame(
    frame: &[PredAtom],
    body: &[PredAtom],
    exs: &[Var],
    used: &mut Vec<bool>,
    sigma: &mut Subst,
    out: &mut Vec<(Vec<bool>, Subst)>,
) {
    let Some((f, rest)) = frame.split_first() else {
        out.push((used.clone(), sigma.clone()));
        return;
    };
    for (j, b) in body.iter().enumerate() {
        if used[j] || b.pred != f.pred || b.args.len() != f.args.len() {
            continue;
        }
        let saved = sigma.clone();
        let mut ok = true;
        for (w, t) in b.args.iter().zip(f.args.iter()) {
            if exs.contains(w) {
                match sigma.get(w) {
                    Some(u) if u != t => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        sigma.insert(w.clone(), t.clone());
                    }
                }
            } else if w != t {
                ok = false;
                break;
            }
        }
        if ok {
            used[j] = true;
            match_frame(rest, body, exs, used, sigma, out);
            used[j] = false;
        }
        *sigma = saved;
    }
}

/// One-step unfoldings of a pu-atom: the inner atom is unfolded once and the
/// whole frame must be matched syntactically by produced predicate atoms.
pub fn unfold_pu(pu: &PuAtom, sid: &Sid, next: &mut u32) -> Vec<Formula> {
    let mut out = Vec::new();
    for r in sid.rules.iter().filter(|r| r.head.pred == pu.inner.pred) {
        let (exs, body) = r.instantiate(&pu.inner.args, &mut |_| bound(next));
        let preds: Vec<PredAtom> = body
            .iter()
            .filter_map(|a| match a {
                Formula::Pred(p) => Some(p.clone()),
                _ => None,
            })
            .collect();
        let mut matches = Vec::new();
        match_frame(
            &pu.frame,
            &preds,
            &exs,
            &mut alloc::vec![false; preds.len()],
            &mut Subst::new(),
            &mut matches,
        );
        for (used, sigma) in matches {
            let map = |v: &Var| -> Option<Var> {
                let v = sigma.get(v).unwrap_or(v);
                if exs.contains(v) {
                    Some(v.clone())
                } else {
                    Some(pu.actual_of(v))
                }
            };
            let mut k = 0;
            let mut rest = Vec::new();
            for a in &body {
                if let Formula::Pred(_) = a {
                    let u = used[k];
                    k += 1;
                    if u {
                        continue;
                    }
                }
                rest.push(a.rename_free(&map));
            }
            let left: Vec<Var> = exs.iter().filter(|e| !sigma.contains_key(*e)).cloned().collect();
            let f = Formula::exists(left, Formula::sep(rest)).normalize();
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
    out
}

/// The one-step unfoldings of a predicate or pu-atom that are points-to
/// formulas (a single points-to plus theory atoms, possibly quantified).
pub fn mapsto_unfoldings(atom: &Formula, sid: &Sid, next: &mut u32) -> Vec<Formula> {
    let all: Vec<Formula> = match atom {
        Formula::Pred(a) => unfold_pred(a, sid, next).into_iter().map(|u| u.result).collect(),
        Formula::Pu(pu) => unfold_pu(pu, sid, next),
        _ => Vec::new(),
    };
    all.into_iter().filter(is_mapsto_formula).collect()
}

pub fn is_mapsto_formula(f: &Formula) -> bool {
    let (_, body) = f.prefix();
    let parts = body.conjuncts();
    parts.iter().filter(|a| matches!(a, Formula::PointsTo(..))).count() == 1
        && parts
            .iter()
            .all(|a| matches!(a, Formula::PointsTo(..) | Formula::Theory(_)))
}

/// Argument slots of predicate atoms reachable by unfolding: either a
/// position of the unfolded atom or an existential (numbered by first
/// occurrence within the atom).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Slot {
    Arg(usize),
    Ex(usize),
}

/// Shapes of the predicate atoms occurring in unfoldings of `p(x1..xn)`, up
/// to renaming of the existentials.
pub fn reachable_shapes(sid: &Sid, p: &Pred) -> BTreeSet<(Pred, Vec<Slot>)> {
    let n = sid.arity.get(p).cloned().unwrap_or(0);
    let start = (p.clone(), (0..n).map(Slot::Arg).collect::<Vec<_>>());
    let mut seen: BTreeSet<(Pred, Vec<Slot>)> = BTreeSet::new();
    let mut work = alloc::vec![start];
    while let Some((q, slots)) = work.pop() {
        for r in sid.rules.iter().filter(|r| r.head.pred == q) {
            for b in r.body_preds() {
                let mut ex_ids: Vec<Var> = Vec::new();
                let mut new_slots = Vec::new();
                // existential slots of the parent and new rule existentials
                // both become existentials of the child shape
                let mut keys: Vec<Slot> = Vec::new();
                for a in &b.args {
                    let slot = if let Some(i) = r.head.args.iter().position(|h| h == a) {
                        slots[i]
                    } else {
                        if !ex_ids.contains(a) {
                            ex_ids.push(a.clone());
                        }
                        Slot::Ex(1000 + ex_ids.iter().position(|e| e == a).unwrap())
                    };
                    new_slots.push(slot);
                }
                for s in new_slots.iter_mut() {
                    if let Slot::Ex(_) = s {
                        let k = match keys.iter().position(|x| x == s) {
                            Some(k) => k,
                            None => {
                                keys.push(*s);
                                keys.len() - 1
                            }
                        };
                        *s = Slot::Ex(k);
                    }
                }
                let shape = (b.pred.clone(), new_slots);
                if seen.insert(shape.clone()) {
                    work.push(shape);
                }
            }
        }
    }
    seen
}

fn pu_of_pred(a: &PredAtom) -> PuAtom {
    let params: Vec<Var> = (0..a.args.len() as u32).map(Var::Param).collect();
    PuAtom {
        frame: Vec::new(),
        inner: PredAtom::new(a.pred.clone(), params.clone()),
        params,
        actuals: a.args.clone(),
    }
}

fn next_param(pu: &PuAtom) -> u32 {
    pu.params
        .iter()
        .chain(pu.inner.args.iter())
        .chain(pu.frame.iter().flat_map(|a| a.args.iter()))
        .filter_map(|v| match v {
            Var::Param(n) => Some(n + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Splits of a pu-atom whose main root differs from `x`.
fn split_pu(pu: &PuAtom, x: &Var, sid: &Sid, next: &mut u32) -> Vec<Formula> {
    let mut out = Vec::new();
    let inner_params: BTreeSet<&Var> = pu.inner.args.iter().collect();
    let frame_only: Vec<Var> = pu
        .params
        .iter()
        .filter(|p| !inner_params.contains(p))
        .filter(|p| pu.frame.iter().any(|a| a.args.contains(p)))
        .cloned()
        .collect();
    let np = next_param(pu);
    for (q, slots) in reachable_shapes(sid, &pu.inner.pred) {
        let n_ex = slots
            .iter()
            .filter_map(|s| match s {
                Slot::Ex(k) => Some(k + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        // choices for the variable standing at the first slot
        let first_choices: Vec<(Option<usize>, Var, Option<Var>)> = match slots.first() {
            None => continue,
            Some(Slot::Arg(j)) => {
                let v = pu.inner.args[*j].clone();
                if &pu.actual_of(&v) != x {
                    continue;
                }
                alloc::vec![(None, v, None)]
            }
            Some(Slot::Ex(k)) => {
                let mut c = alloc::vec![(Some(*k), Var::Param(np), Some(x.clone()))];
                for f in &frame_only {
                    if &pu.actual_of(f) == x {
                        c.push((Some(*k), f.clone(), None));
                    }
                }
                c
            }
        };
        for (first_ex, yvar, ynew) in first_choices {
            // assignments for the remaining existential classes
            let others: Vec<usize> = (0..n_ex).filter(|k| Some(*k) != first_ex).collect();
            let mut assigns: Vec<Vec<Option<Var>>> = alloc::vec![Vec::new()];
            for _ in &others {
                let mut nxt = Vec::new();
                for a in &assigns {
                    let mut fresh = a.clone();
                    fresh.push(None);
                    nxt.push(fresh);
                    for f in &frame_only {
                        if *f != yvar && !a.iter().any(|o| o.as_ref() == Some(f)) {
                            let mut b = a.clone();
                            b.push(Some(f.clone()));
                            nxt.push(b);
                        }
                    }
                }
                assigns = nxt;
            }
            for assign in assigns {
                let mut params = pu.params.clone();
                let mut actuals = pu.actuals.clone();
                if let Some(xv) = &ynew {
                    params.push(yvar.clone());
                    actuals.push(xv.clone());
                }
                let mut zs = Vec::new();
                let mut class_var: Vec<Var> = alloc::vec![Var::Param(0); n_ex];
                if let Some(k) = first_ex {
                    class_var[k] = yvar.clone();
                }
                let mut pn = np + 1;
                for (i, k) in others.iter().enumerate() {
                    class_var[*k] = match &assign[i] {
                        Some(f) => f.clone(),
                        None => {
                            let pv = Var::Param(pn);
                            pn += 1;
                            let z = bound(next);
                            params.push(pv.clone());
                            actuals.push(z.clone());
                            zs.push(z);
                            pv
                        }
                    };
                }
                let qargs: Vec<Var> = slots
                    .iter()
                    .map(|s| match s {
                        Slot::Arg(j) => pu.inner.args[*j].clone(),
                        Slot::Ex(k) => class_var[*k].clone(),
                    })
                    .collect();
                let qatom = PredAtom::new(q.clone(), qargs);
                let m = pu.frame.len();
                let mut seen_parts = BTreeSet::new();
                for mask in 0u32..(1u32 << m) {
                    let mut b1 = Vec::new();
                    let mut b2 = Vec::new();
                    for (i, a) in pu.frame.iter().enumerate() {
                        if mask & (1 << i) == 0 {
                            b1.push(a.clone())
                        } else {
                            b2.push(a.clone())
                        }
                    }
                    let mut k1 = b1.clone();
                    k1.sort();
                    let mut k2 = b2.clone();
                    k2.sort();
                    if !seen_parts.insert((k1, k2)) {
                        continue;
                    }
                    b1.push(qatom.clone());
                    let a1 = PuAtom {
                        frame: b1,
                        inner: pu.inner.clone(),
                        params: params.clone(),
                        actuals: actuals.clone(),
                    };
                    let a2 = PuAtom {
                        frame: b2,
                        inner: qatom.clone(),
                        params: params.clone(),
                        actuals: actuals.clone(),
                    };
                    out.push(Formula::exists(
                        zs.clone(),
                        Formula::Sep(alloc::vec![Formula::Pu(a1), Formula::Pu(a2)]),
                    ));
                }
            }
        }
    }
    out
}

fn split_rec(f: &Formula, x: &Var, sid: &Sid, next: &mut u32) -> Vec<Formula> {
    match f {
        Formula::Emp | Formula::Theory(_) => Vec::new(),
        Formula::PointsTo(y, _) => {
            if y == x {
                alloc::vec![f.clone()]
            } else {
                Vec::new()
            }
        }
        Formula::Pred(a) => {
            if a.root() == Some(x) {
                alloc::vec![f.clone()]
            } else {
                split_pu(&pu_of_pred(a), x, sid, next)
            }
        }
        Formula::Pu(pu) => {
            if pu.main_root().as_ref() == Some(x) {
                alloc::vec![f.clone()]
            } else {
                split_pu(pu, x, sid, next)
            }
        }
        Formula::Sep(v) => {
            let mut out = Vec::new();
            for i in 0..v.len() {
                for g in split_rec(&v[i], x, sid, next) {
                    let mut w = v.clone();
                    w[i] = g;
                    out.push(Formula::Sep(w));
                }
            }
            out
        }
        Formula::Or(v) => v.iter().flat_map(|g| split_rec(g, x, sid, next)).collect(),
        Formula::Exists(vs, b) => {
            let (y, rest) = vs.split_first().unwrap();
            let inner = Formula::exists(rest.to_vec(), (**b).clone());
            let mut out: Vec<Formula> = split_rec(&inner, x, sid, next)
                .into_iter()
                .map(|g| Formula::exists(alloc::vec![y.clone()], g))
                .collect();
            let inst = inner.subst(&crate::formula::single(y.clone(), x.clone()));
            out.extend(split_rec(&inst, x, sid, next));
            out
        }
    }
}

/// `split_x(f)`: formulas in which `x` is a main root, normalized, with
/// root-unsatisfiable ones deleted.
pub fn split_at(f: &Formula, x: &Var, sid: &Sid) -> Vec<Formula> {
    let mut next = f.next_bound();
    let mut out: Vec<Formula> = Vec::new();
    for g in split_rec(f, x, sid, &mut next) {
        let g = g.normalize();
        if !root_unsat(&g) && !out.contains(&g) {
            out.push(g);
        }
    }
    out.sort();
    out
}

/// All predicate-free unfoldings of a pu-free, disjunction-free formula with
/// at most `max_cells` points-to atoms, as prenex symbolic heaps.
pub fn bounded_unfold_heaps(f: &Formula, sid: &Sid, max_cells: usize) -> Vec<SymHeap> {
    let mut out = Vec::new();
    for h in crate::dnf::disjuncts(f) {
        let mut next = f.next_bound().max(
            h.vars
                .iter()
                .filter_map(|v| match v {
                    Var::Bound(n) => Some(n + 1),
                    _ => None,
                })
                .max()
                .unwrap_or(0),
        );
        expand(h.vars, h.atoms, sid, max_cells, &mut next, &mut out);
    }
    out
}

fn expand(vars: Vec<Var>, atoms: Vec<Formula>, sid: &Sid, max: usize, next: &mut u32, out: &mut Vec<SymHeap>) {
    let cells = atoms.iter().filter(|a| matches!(a, Formula::PointsTo(..))).count();
    let preds = atoms.iter().filter(|a| matches!(a, Formula::Pred(_))).count();
    if cells + preds > max {
        return;
    }
    let Some(i) = atoms.iter().position(|a| matches!(a, Formula::Pred(_))) else {
        out.push(SymHeap { vars, atoms });
        return;
    };
    let Formula::Pred(a) = &atoms[i] else { unreachable!() };
    for r in sid.rules.iter().filter(|r| r.head.pred == a.pred) {
        let (exs, body) = r.instantiate(&a.args, &mut |_| bound(next));
        let mut v2 = vars.clone();
        v2.extend(exs);
        let mut a2: Vec<Formula> = atoms[..i].to_vec();
        a2.extend(body);
        a2.extend(atoms[i + 1..].iter().cloned());
        expand(v2, a2, sid, max, next, out);
    }
}

/// Formula view of `bounded_unfold_heaps`.
pub fn bounded_unfold(f: &Formula, sid: &Sid, max_cells: usize) -> Vec<Formula> {
    let mut out: Vec<Formula> = bounded_unfold_heaps(f, sid, max_cells)
        .into_iter()
        .map(|h| h.to_formula())
        .collect();
    out.sort();
    out.dedup();
    out
}
