//! Reduction of the equality theory to the empty theory.
//!
//! The four steps are:
//! 1. thread every free variable of the query (plus a fresh sentinel `u`)
//!    through all predicates as extra trailing parameters;
//! 2. replace each existential block by its instances under every
//!    identification of existentials with each other or with parameters,
//!    padding the survivors with pairwise disequations;
//! 3. collapse atoms with repeated arguments into fresh predicates whose
//!    arguments are pairwise distinct, after which every equation is either
//!    trivial or contradicts the padding;
//! 4. make the system alloc-compatible, append `u` to every points-to atom,
//!    give every unallocated free variable a dummy cell `x -> (u',..,u')`
//!    and erase the disequations.
//!
//! The result is equivalent to the input for injective stores; callers deal
//! with non-injective stores beforehand (see [`crate::problem::store_cases`]).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dnf::{disjuncts, SymHeap};
use crate::formula::{Formula, PredAtom, Subst, TheoryAtom};
use crate::problem::{alloc_compatible_problem, or_of_heaps, Problem};
use crate::sid::{root_unsat, Rule, Sid, SidError};
use crate::theory::TheoryTag;
use crate::var::{Pred, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElimError {
    TheoryNotEq(TheoryTag),
    NotEstablished(String),
    /// The query contains partially unfolded atoms.
    PuAtom,
    /// An intermediate rule system failed validation; indicates a bug.
    Internal(SidError),
}

impl fmt::Display for ElimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElimError::TheoryNotEq(t) => write!(f, "equality elimination needs theory eq, found {}", t),
            ElimError::NotEstablished(m) => write!(f, "rule system is not known to be established: {}", m),
            ElimError::PuAtom => f.write_str("equality elimination expects a query without partially unfolded atoms"),
            ElimError::Internal(e) => write!(f, "internal error during equality elimination: {}", e),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ElimOptions {
    /// Drop dead parameters and merge predicates with identical rules.
    pub simplify: bool,
    pub assume_established: bool,
}

impl Default for ElimOptions {
    fn default() -> ElimOptions {
        ElimOptions { simplify: true, assume_established: false }
    }
}

#[derive(Clone, Debug)]
pub struct ElimTrace {
    /// The problem after each of the four steps.
    pub step_outputs: Vec<Problem>,
    /// Parameters threaded through every predicate in step 1.
    pub added_params: Vec<Var>,
    /// `(u, u')`.
    pub sentinel_vars: (Var, Var),
    pub new_kappa: usize,
}

/// Query in disjunctive form: left and right symbolic heaps.
#[derive(Clone, Debug)]
struct Query {
    lhs: Vec<SymHeap>,
    rhs: Vec<SymHeap>,
}

impl Query {
    fn heaps_mut(&mut self) -> impl Iterator<Item = &mut Vec<SymHeap>> {
        [&mut self.lhs, &mut self.rhs].into_iter()
    }

    fn pred_names(&self) -> BTreeSet<Pred> {
        self.lhs
            .iter()
            .chain(self.rhs.iter())
            .flat_map(|h| h.atoms.iter())
            .filter_map(|a| match a {
                Formula::Pred(p) => Some(p.pred.clone()),
                _ => None,
            })
            .collect()
    }
}

fn build(theory: TheoryTag, rules: Vec<Rule>, kappa: usize, q: &Query) -> Result<Problem, ElimError> {
    let sid = Sid::new(rules, kappa, true).map_err(ElimError::Internal)?;
    Ok(Problem {
        theory,
        sid,
        lhs: or_of_heaps(q.lhs.iter().map(|h| h.to_formula()).collect()),
        rhs: q.rhs.iter().map(|h| h.to_formula()).collect(),
    })
}

/// `base`, `base'`, `base''`, ... whichever is unused first.
fn fresh_name(base: &str, used: &mut BTreeSet<Var>) -> Var {
    let mut name = String::from(base);
    loop {
        let v = Var::user(&name);
        if used.insert(v.clone()) {
            return v;
        }
        name.push('\'');
    }
}

/// Runs all four steps.
pub fn eliminate_eq(p: &Problem, opts: ElimOptions) -> Result<(Problem, ElimTrace), ElimError> {
    if p.theory != TheoryTag::Eq {
        return Err(ElimError::TheoryNotEq(p.theory));
    }
    if p.lhs.has_pu() || p.rhs.iter().any(|f| f.has_pu()) {
        return Err(ElimError::PuAtom);
    }
    if !opts.assume_established {
        if let Err(e) = Sid::new(p.sid.rules.clone(), p.sid.kappa, false) {
            return Err(ElimError::NotEstablished(e.to_string()));
        }
    }
    let kappa = p.sid.kappa;
    let free = p.free_vars();
    let mut used: BTreeSet<Var> = free.iter().cloned().collect();
    let u = fresh_name("u", &mut used);
    let u_prime = match free.first() {
        Some(x) => x.clone(),
        None => fresh_name("w", &mut used),
    };
    let mut params = free.clone();
    params.push(u.clone());

    let mut q = Query {
        lhs: disjuncts(&p.lhs),
        rhs: p.rhs.iter().flat_map(disjuncts).collect(),
    };

    // Step 1
    let rules1 = thread_params(&p.sid, &mut q, &params);
    let p1 = build(TheoryTag::Eq, rules1.clone(), kappa, &q)?;

    // Step 2
    let mut rules2: BTreeSet<Rule> = BTreeSet::new();
    for r in &rules1 {
        rules2.extend(expand_rule_with(r, r.head.args.len() - 1));
    }
    for hs in q.heaps_mut() {
        let expanded: Vec<SymHeap> = hs
            .iter()
            .flat_map(|h| expand_heap_with(h, &free, &params))
            .filter(|h| !root_unsat(&Formula::sep(h.atoms.clone())))
            .collect();
        *hs = expanded;
    }
    let mut rules2: Vec<Rule> = rules2.into_iter().collect();
    prune_undefined(&mut rules2, &mut q);
    let p2 = build(TheoryTag::Eq, rules2.clone(), kappa, &q)?;

    // Step 3
    let (mut rules3, upos) = collapse(&rules2, &mut q);
    prune_undefined(&mut rules3, &mut q);
    let p3 = build(TheoryTag::Eq, rules3, kappa, &q)?;

    // Step 4
    let (ac, variants) = alloc_compatible_problem(&p3);
    let mut upos4: BTreeMap<Pred, usize> = BTreeMap::new();
    for (base, vs) in &variants {
        if let Some(i) = upos.get(base) {
            for v in vs {
                upos4.insert(v.clone(), *i);
            }
        }
    }
    let mut rules4: Vec<Rule> = Vec::new();
    for r in &ac.sid.rules {
        let uv = r.head.args[upos4[&r.head.pred]].clone();
        if let Some(body) = finish_atoms(&r.body, &uv) {
            rules4.push(Rule { head: r.head.clone(), exvars: r.exvars.clone(), body });
        }
    }
    let mut pad_vars = free.clone();
    pad_vars.push(u.clone());
    let pad_target: Vec<Var> = alloc::vec![u_prime.clone(); kappa + 1];
    let mut q4 = Query {
        lhs: disjuncts(&ac.lhs),
        rhs: ac.rhs.iter().flat_map(disjuncts).collect(),
    };
    for hs in q4.heaps_mut() {
        let mut out = Vec::new();
        for h in hs.iter() {
            let Some(mut atoms) = finish_atoms(&h.atoms, &u) else { continue };
            let allocated = ac.sid.alloc_of(&h.to_formula());
            for x in &pad_vars {
                if !allocated.contains(x) {
                    atoms.push(Formula::pto(x.clone(), pad_target.clone()));
                }
            }
            out.push(SymHeap { vars: h.vars.clone(), atoms });
        }
        *hs = out;
    }
    prune_undefined(&mut rules4, &mut q4);
    if opts.simplify {
        drop_dead_params(&mut rules4, &mut q4);
        merge_equivalent(&mut rules4, &mut q4);
    }
    let p4 = build(TheoryTag::Empty, rules4, kappa + 1, &q4)?;
    let trace = ElimTrace {
        step_outputs: alloc::vec![p1, p2, p3, p4.clone()],
        added_params: params,
        sentinel_vars: (u, u_prime),
        new_kappa: kappa + 1,
    };
    Ok((p4, trace))
}

/// Step 1: every predicate reachable from the query receives `params` as
/// trailing arguments, passed unchanged to recursive calls.
fn thread_params(sid: &Sid, q: &mut Query, params: &[Var]) -> Vec<Rule> {
    let mut reachable: BTreeSet<Pred> = BTreeSet::new();
    for p in q.pred_names() {
        if let Some(s) = sid.reach.get(&p) {
            reachable.extend(s.iter().cloned());
        }
    }
    let mut out = Vec::new();
    for r in sid.rules.iter().filter(|r| reachable.contains(&r.head.pred)) {
        let mut used: BTreeSet<Var> = r.head.args.iter().chain(r.exvars.iter()).cloned().collect();
        for a in &r.body {
            used.extend(a.all_vars());
        }
        let ext: Vec<Var> = params.iter().map(|v| fresh_name(&v.name(), &mut used)).collect();
        let extend = |a: &PredAtom| {
            let mut args = a.args.clone();
            args.extend(ext.iter().cloned());
            PredAtom::new(a.pred.clone(), args)
        };
        let body = r
            .body
            .iter()
            .map(|a| match a {
                Formula::Pred(b) => Formula::Pred(extend(b)),
                o => o.clone(),
            })
            .collect();
        out.push(Rule { head: extend(&r.head), exvars: r.exvars.clone(), body });
    }
    for hs in q.heaps_mut() {
        for h in hs.iter_mut() {
            for a in h.atoms.iter_mut() {
                if let Formula::Pred(b) = a {
                    b.args.extend(params.iter().cloned());
                }
            }
        }
    }
    out
}

/// Every identification of existentials: each existential is mapped to a
/// parameter, to an earlier surviving existential, or survives itself.
fn identifications(ex: &[Var], params: &[Var]) -> Vec<(Subst, Vec<Var>)> {
    let mut out = Vec::new();
    fn go(i: usize, ex: &[Var], params: &[Var], s: &mut Subst, kept: &mut Vec<Var>, out: &mut Vec<(Subst, Vec<Var>)>) {
        if i == ex.len() {
            out.push((s.clone(), kept.clone()));
            return;
        }
        let y = &ex[i];
        kept.push(y.clone());
        go(i + 1, ex, params, s, kept, out);
        kept.pop();
        let targets: Vec<Var> = kept.iter().chain(params.iter()).cloned().collect();
        for t in targets {
            s.insert(y.clone(), t);
            go(i + 1, ex, params, s, kept, out);
            s.remove(y);
        }
    }
    go(0, ex, params, &mut Subst::new(), &mut Vec::new(), &mut out);
    out
}

/// Applies one identification to a list of atoms.  Returns `None` when the
/// instance is unsatisfiable because of its theory atoms.
fn instantiate(atoms: &[Formula], s: &Subst, kept: &[Var], params: &[Var]) -> Option<Vec<Formula>> {
    let mut out = Vec::new();
    for a in atoms {
        match a.subst(s) {
            Formula::Theory(TheoryAtom::False) => return None,
            Formula::Theory(TheoryAtom::Eq(x, y)) => {
                if x == y {
                    continue;
                }
                if kept.contains(&x) || kept.contains(&y) {
                    return None;
                }
                out.push(Formula::Theory(TheoryAtom::Eq(x, y)));
            }
            Formula::Theory(TheoryAtom::Ne(x, y)) if x == y => return None,
            b => out.push(b),
        }
    }
    for (i, z) in kept.iter().enumerate() {
        for z2 in &kept[i + 1..] {
            out.push(Formula::Theory(TheoryAtom::ne(z.clone(), z2.clone())));
        }
        for x in params {
            out.push(Formula::Theory(TheoryAtom::ne(z.clone(), x.clone())));
        }
    }
    Some(out)
}

/// Step 2 on a symbolic heap whose free variables are among `free`.
pub fn expand_heap(h: &SymHeap, free: &[Var]) -> Vec<SymHeap> {
    expand_heap_with(h, free, free)
}

/// Step 2 where existentials may only be identified with `targets`, a
/// prefix of `free`; the remaining free variables only receive padding.
fn expand_heap_with(h: &SymHeap, targets: &[Var], free: &[Var]) -> Vec<SymHeap> {
    identifications(&h.vars, targets)
        .into_iter()
        .filter_map(|(s, kept)| instantiate(&h.atoms, &s, &kept, free).map(|atoms| SymHeap { vars: kept, atoms }))
        .collect()
}

/// Step 2 on a rule; instances with a root-unsatisfiable body are dropped.
pub fn expand_rule(r: &Rule) -> Vec<Rule> {
    expand_rule_with(r, r.head.args.len())
}

/// Step 2 on a rule whose existentials may only be identified with the first
/// `targets` head parameters.  The sentinel parameter sits after them: no
/// established existential can denote its value, so identifying one with it
/// would only add instances that never contribute to a countermodel.
fn expand_rule_with(r: &Rule, targets: usize) -> Vec<Rule> {
    identifications(&r.exvars, &r.head.args[..targets])
        .into_iter()
        .filter_map(|(s, kept)| {
            let body = instantiate(&r.body, &s, &kept, &r.head.args)?;
            if root_unsat(&Formula::sep(body.clone())) {
                return None;
            }
            Some(Rule { head: r.head.clone(), exvars: kept, body })
        })
        .collect()
}

/// Equality pattern of an argument list: class index of each position,
/// classes numbered by first occurrence.
fn pattern(args: &[Var]) -> Vec<usize> {
    let mut firsts: Vec<&Var> = Vec::new();
    args.iter()
        .map(|a| match firsts.iter().position(|f| *f == a) {
            Some(i) => i,
            None => {
                firsts.push(a);
                firsts.len() - 1
            }
        })
        .collect()
}

fn is_identity(pat: &[usize]) -> bool {
    pat.iter().enumerate().all(|(i, c)| i == *c)
}

/// Name of the predicate standing for `p` called with pattern `pat`.
pub fn collapsed_name(p: &Pred, pat: &[usize]) -> Pred {
    if is_identity(pat) {
        return p.clone();
    }
    let parts: Vec<String> = pat.iter().map(|c| format!("{}", c + 1)).collect();
    Pred::new(&format!("{}@e{{{}}}", p, parts.join(",")))
}

/// The atom with duplicate arguments removed, and the pattern it needs.
fn collapse_atom(a: &PredAtom) -> (PredAtom, Vec<usize>) {
    let pat = pattern(&a.args);
    let mut args = Vec::new();
    for (i, c) in pat.iter().enumerate() {
        if *c == args.len() {
            args.push(a.args[i].clone());
        }
    }
    (PredAtom::new(collapsed_name(&a.pred, &pat), args), pat)
}

/// Step 3.  Returns the new rules and, for every predicate, the position
/// of the parameter that carries the last threaded variable (`u`).
fn collapse(rules: &[Rule], q: &mut Query) -> (Vec<Rule>, BTreeMap<Pred, usize>) {
    let mut todo: Vec<(Pred, Vec<usize>)> = Vec::new();
    let mut seen: BTreeSet<(Pred, Vec<usize>)> = BTreeSet::new();
    let mut visit = |a: &PredAtom, todo: &mut Vec<(Pred, Vec<usize>)>| -> PredAtom {
        let (b, pat) = collapse_atom(a);
        if seen.insert((a.pred.clone(), pat.clone())) {
            todo.push((a.pred.clone(), pat));
        }
        b
    };
    for hs in q.heaps_mut() {
        let mut out = Vec::new();
        'heap: for h in hs.iter() {
            let mut atoms = Vec::new();
            for a in &h.atoms {
                match a {
                    Formula::Pred(b) => atoms.push(Formula::Pred(visit(b, &mut todo))),
                    // distinct free variables of an injective store differ
                    Formula::Theory(TheoryAtom::Eq(x, y)) if x != y => continue 'heap,
                    Formula::Theory(TheoryAtom::Eq(..)) => {}
                    Formula::Theory(TheoryAtom::Ne(x, y)) if x == y => continue 'heap,
                    o => atoms.push(o.clone()),
                }
            }
            out.push(SymHeap { vars: h.vars.clone(), atoms });
        }
        *hs = out;
    }
    let mut out: BTreeSet<Rule> = BTreeSet::new();
    let mut upos: BTreeMap<Pred, usize> = BTreeMap::new();
    while let Some((p, pat)) = todo.pop() {
        let name = collapsed_name(&p, &pat);
        upos.insert(name.clone(), *pat.last().expect("threaded predicates have parameters"));
        'rule: for r in rules.iter().filter(|r| r.head.pred == p) {
            let mut s: Subst = BTreeMap::new();
            let mut head_args = Vec::new();
            for (i, c) in pat.iter().enumerate() {
                if *c == head_args.len() {
                    head_args.push(r.head.args[i].clone());
                } else {
                    s.insert(r.head.args[i].clone(), head_args[*c].clone());
                }
            }
            let mut body = Vec::new();
            for a in &r.body {
                match a.subst(&s) {
                    Formula::Pred(b) => body.push(Formula::Pred(visit(&b, &mut todo))),
                    // parameters are pairwise distinct at every call site
                    Formula::Theory(TheoryAtom::Eq(x, y)) if x != y => continue 'rule,
                    Formula::Theory(TheoryAtom::Eq(..)) => {}
                    Formula::Theory(TheoryAtom::Ne(x, y)) if x == y => continue 'rule,
                    Formula::Theory(TheoryAtom::Ne(x, y)) => body.push(Formula::Theory(TheoryAtom::ne(x, y))),
                    o => body.push(o),
                }
            }
            if root_unsat(&Formula::sep(body.clone())) {
                continue;
            }
            out.insert(Rule { head: PredAtom::new(name.clone(), head_args), exvars: r.exvars.clone(), body });
        }
    }
    (out.into_iter().collect(), upos)
}

/// Step 4 on a list of atoms: `u` is appended to every points-to atom and
/// disequations are erased.  `None` if some disequation is `x != x`.
fn finish_atoms(atoms: &[Formula], u: &Var) -> Option<Vec<Formula>> {
    let mut out = Vec::new();
    for a in atoms {
        match a {
            Formula::PointsTo(x, ys) => {
                let mut ys = ys.clone();
                ys.push(u.clone());
                out.push(Formula::PointsTo(x.clone(), ys));
            }
            Formula::Theory(TheoryAtom::Ne(x, y)) | Formula::Theory(TheoryAtom::Eq(x, y)) if x != y => {
                if matches!(a, Formula::Theory(TheoryAtom::Eq(..))) {
                    return None;
                }
            }
            Formula::Theory(TheoryAtom::Ne(..)) | Formula::Theory(TheoryAtom::False) => return None,
            Formula::Theory(TheoryAtom::Eq(..)) => {}
            o => out.push(o.clone()),
        }
    }
    Some(out)
}

/// Removes rules and query disjuncts that mention predicates without rules,
/// and rules not reachable from the query.
fn prune_undefined(rules: &mut Vec<Rule>, q: &mut Query) {
    loop {
        let defined: BTreeSet<Pred> = rules.iter().map(|r| r.head.pred.clone()).collect();
        let ok = |atoms: &[Formula]| {
            atoms.iter().all(|a| match a {
                Formula::Pred(b) => defined.contains(&b.pred),
                _ => true,
            })
        };
        let before = rules.len();
        rules.retain(|r| ok(&r.body));
        for hs in q.heaps_mut() {
            hs.retain(|h| ok(&h.atoms));
        }
        if rules.len() == before {
            break;
        }
    }
    let mut reach: BTreeSet<Pred> = q.pred_names();
    loop {
        let n = reach.len();
        for r in rules.iter() {
            if reach.contains(&r.head.pred) {
                reach.extend(r.body_preds().map(|b| b.pred.clone()));
            }
        }
        if reach.len() == n {
            break;
        }
    }
    rules.retain(|r| reach.contains(&r.head.pred));
}

/// Drops every parameter position whose value can never reach a points-to
/// atom (or theory atom) in any unfolding.
fn drop_dead_params(rules: &mut Vec<Rule>, q: &mut Query) {
    let mut live: BTreeMap<Pred, BTreeSet<usize>> = BTreeMap::new();
    for r in rules.iter() {
        let e = live.entry(r.head.pred.clone()).or_default();
        e.insert(0);
        let mut direct: BTreeSet<&Var> = BTreeSet::new();
        for a in &r.body {
            match a {
                Formula::PointsTo(x, ys) => {
                    direct.insert(x);
                    direct.extend(ys.iter());
                }
                Formula::Theory(t) => direct.extend(t.vars()),
                _ => {}
            }
        }
        for (i, h) in r.head.args.iter().enumerate() {
            if direct.contains(h) {
                e.insert(i);
            }
        }
    }
    loop {
        let mut changed = false;
        for r in rules.iter() {
            let mut add = Vec::new();
            for b in r.body_preds() {
                for j in live.get(&b.pred).into_iter().flatten() {
                    if let Some(i) = r.head.args.iter().position(|h| *h == b.args[*j]) {
                        add.push(i);
                    }
                }
            }
            let e = live.get_mut(&r.head.pred).unwrap();
            for i in add {
                changed |= e.insert(i);
            }
        }
        if !changed {
            break;
        }
    }
    let shrink = |a: &PredAtom| -> PredAtom {
        match live.get(&a.pred) {
            Some(keep) => PredAtom::new(
                a.pred.clone(),
                a.args.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, v)| v.clone()).collect(),
            ),
            None => a.clone(),
        }
    };
    let shrink_atoms = |atoms: &[Formula]| -> Vec<Formula> {
        atoms
            .iter()
            .map(|a| match a {
                Formula::Pred(b) => Formula::Pred(shrink(b)),
                o => o.clone(),
            })
            .collect()
    };
    let mut out: BTreeSet<Rule> = BTreeSet::new();
    for r in rules.iter() {
        let body = shrink_atoms(&r.body);
        let used: BTreeSet<Var> = body.iter().flat_map(|a| a.free_vars()).collect();
        out.insert(Rule {
            head: shrink(&r.head),
            exvars: r.exvars.iter().filter(|v| used.contains(*v)).cloned().collect(),
            body,
        });
    }
    *rules = out.into_iter().collect();
    for hs in q.heaps_mut() {
        for h in hs.iter_mut() {
            h.atoms = shrink_atoms(&h.atoms);
        }
    }
}

/// Merges predicates whose rules coincide up to renaming of variables and of
/// already merged predicates (coarsest stable partition).
fn merge_equivalent(rules: &mut Vec<Rule>, q: &mut Query) {
    let preds: BTreeSet<Pred> = rules.iter().map(|r| r.head.pred.clone()).collect();
    let arity: BTreeMap<Pred, usize> = rules.iter().map(|r| (r.head.pred.clone(), r.head.args.len())).collect();
    let mut class: BTreeMap<Pred, usize> = preds.iter().map(|p| (p.clone(), arity[p])).collect();
    loop {
        let mut sigs: BTreeMap<(usize, BTreeSet<Formula>), Vec<Pred>> = BTreeMap::new();
        for p in &preds {
            let sig: BTreeSet<Formula> = rules
                .iter()
                .filter(|r| &r.head.pred == p)
                .map(|r| rule_shape(r, &class))
                .collect();
            sigs.entry((class[p], sig)).or_default().push(p.clone());
        }
        let n_before = class.values().collect::<BTreeSet<_>>().len();
        if sigs.len() == n_before {
            break;
        }
        for (k, group) in sigs.values().enumerate() {
            for p in group {
                class.insert(p.clone(), k);
            }
        }
    }
    let mut rep: BTreeMap<usize, Pred> = BTreeMap::new();
    for p in &preds {
        rep.entry(class[p]).or_insert_with(|| p.clone());
    }
    let rename = |atoms: &[Formula]| -> Vec<Formula> {
        atoms
            .iter()
            .map(|a| match a {
                Formula::Pred(b) => match class.get(&b.pred) {
                    Some(c) => Formula::Pred(PredAtom::new(rep[c].clone(), b.args.clone())),
                    None => a.clone(),
                },
                o => o.clone(),
            })
            .collect()
    };
    let mut out: BTreeSet<Rule> = BTreeSet::new();
    for r in rules.iter() {
        if rep[&class[&r.head.pred]] == r.head.pred {
            out.insert(Rule { head: r.head.clone(), exvars: r.exvars.clone(), body: rename(&r.body) });
        }
    }
    *rules = out.into_iter().collect();
    for hs in q.heaps_mut() {
        for h in hs.iter_mut() {
            h.atoms = rename(&h.atoms);
        }
    }
}

/// A rule with its head parameters renamed positionally and predicate names
/// replaced by class numbers, in normal form.
fn rule_shape(r: &Rule, class: &BTreeMap<Pred, usize>) -> Formula {
    let pos: BTreeMap<&Var, usize> = r.head.args.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let body: Vec<Formula> = r
        .body
        .iter()
        .map(|a| match a {
            Formula::Pred(b) => Formula::Pred(PredAtom::new(Pred::new(&format!("#{}", class[&b.pred])), b.args.clone())),
            o => o.clone(),
        })
        .collect();
    Formula::exists(r.exvars.clone(), Formula::sep(body))
        .rename_free(&|v| pos.get(v).map(|i| Var::Param(*i as u32)))
        .normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{entails, Bounds, OracleVerdict, Stores};
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
    fn eq(a: &str, b: &str) -> Formula {
        Formula::Theory(TheoryAtom::eq(v(a), v(b)))
    }
    fn ne(a: &str, b: &str) -> Formula {
        Formula::Theory(TheoryAtom::ne(v(a), v(b)))
    }
    fn rule(h: PredAtom, ex: &[&str], body: Vec<Formula>) -> Rule {
        Rule { head: h, exvars: ex.iter().map(|x| v(x)).collect(), body }
    }

    fn ls_rules() -> Vec<Rule> {
        vec![
            rule(pa("ls", &["x", "y"]), &[], vec![pto("x", &["y"])]),
            rule(pa("ls", &["x", "y"]), &["z"], vec![pto("x", &["z"]), Formula::Pred(pa("ls", &["z", "y"]))]),
        ]
    }

    fn als_rules() -> Vec<Rule> {
        vec![
            rule(pa("als", &["x", "y"]), &[], vec![pto("x", &["y"]), ne("x", "y")]),
            rule(
                pa("als", &["x", "y"]),
                &["z"],
                vec![pto("x", &["z"]), Formula::Pred(pa("als", &["z", "y"])), ne("x", "y")],
            ),
        ]
    }

    #[test]
    fn step2_query_expansion() {
        let h = SymHeap {
            vars: vec![v("y1"), v("y2")],
            atoms: vec![Formula::Pred(pa("p", &["x", "y1"])), Formula::Pred(pa("p", &["x", "y2"]))],
        };
        let raw = expand_heap(&h, &[v("x")]);
        assert_eq!(raw.len(), 5);
        let out: BTreeSet<Formula> = raw.iter().map(|h| h.to_formula()).collect();
        let sh = |vars: &[&str], atoms: Vec<Formula>| {
            SymHeap { vars: vars.iter().map(|x| v(x)).collect(), atoms }.to_formula()
        };
        let p = |a: &str, b: &str| Formula::Pred(pa("p", &[a, b]));
        let expected = [
            sh(&["y1", "y2"], vec![p("x", "y1"), p("x", "y2"), ne("y1", "y2"), ne("y1", "x"), ne("y2", "x")]),
            sh(&["y2"], vec![p("x", "x"), p("x", "y2"), ne("y2", "x")]),
            sh(&["y1"], vec![p("x", "y1"), p("x", "x"), ne("y1", "x")]),
            sh(&[], vec![p("x", "x"), p("x", "x")]),
        ];
        for e in &expected {
            assert!(out.contains(e), "missing {}", e);
        }
        // the identification y2 := y1 is also an instance
        assert!(out.contains(&sh(&["y1"], vec![p("x", "y1"), p("x", "y1"), ne("y1", "x")])));
        // the two single-survivor instances are alpha-equivalent
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn step2_rule_expansion() {
        let r = rule(
            pa("p", &["x"]),
            &["z", "u"],
            vec![pto("x", &["z"]), Formula::Pred(pa("q", &["z", "u"]))],
        );
        let out = expand_rule(&r);
        // z := x makes the body root-unsatisfiable (x allocated twice)
        assert!(!out.iter().any(|r| r.points_to().unwrap().1[0] == v("x")));
        let kept: BTreeSet<Vec<Var>> = out.iter().map(|r| r.exvars.clone()).collect();
        assert!(kept.contains(&vec![v("z"), v("u")]));
        assert!(kept.contains(&vec![v("z")]));
        let full = out.iter().find(|r| r.exvars.len() == 2).unwrap();
        for d in [ne("z", "u"), ne("z", "x"), ne("u", "x")] {
            assert!(full.body.contains(&d));
        }
    }

    #[test]
    fn step3_collapses_repeated_arguments() {
        let rules = vec![
            rule(
                pa("p", &["y1", "y2", "y3"]),
                &[],
                vec![pto("y1", &["y2"]), Formula::Pred(pa("q", &["y2", "y3"])), eq("y1", "y3")],
            ),
            rule(
                pa("p", &["y1", "y2", "y3"]),
                &[],
                vec![pto("y1", &["y2"]), Formula::Pred(pa("r", &["y2", "y3"])), eq("y1", "y2")],
            ),
            rule(pa("q", &["a", "b"]), &[], vec![pto("a", &["b"])]),
            rule(pa("r", &["a", "b"]), &[], vec![pto("a", &["b"])]),
        ];
        let mut q = Query {
            lhs: vec![SymHeap { vars: vec![], atoms: vec![Formula::Pred(pa("p", &["x", "y", "x"]))] }],
            rhs: vec![],
        };
        let (out, _) = collapse(&rules, &mut q);
        let pa_name = collapsed_name(&Pred::new("p"), &[0, 1, 0]);
        assert_eq!(q.lhs[0].atoms, vec![Formula::Pred(PredAtom::new(pa_name.clone(), vec![v("x"), v("y")]))]);
        let prules: Vec<&Rule> = out.iter().filter(|r| r.head.pred == pa_name).collect();
        assert_eq!(prules.len(), 1);
        assert_eq!(
            prules[0].body,
            vec![pto("y1", &["y2"]), Formula::Pred(pa("q", &["y2", "y1"]))]
        );
    }

    fn problem(rules: Vec<Rule>, lhs: Formula, rhs: Vec<Formula>) -> Problem {
        Problem { theory: TheoryTag::Eq, sid: Sid::new(rules, 1, false).unwrap(), lhs, rhs }
    }

    fn no_theory_atoms(p: &Problem) -> bool {
        p.theory_atoms().is_empty()
    }

    #[test]
    fn ls_als_example() {
        let mut rules = ls_rules();
        rules.extend(als_rules());
        let p = problem(rules, Formula::Pred(pa("ls", &["x", "y"])), vec![Formula::Pred(pa("als", &["x", "y"]))]);
        let (out, trace) = eliminate_eq(&p, ElimOptions::default()).unwrap();
        assert_eq!(trace.new_kappa, 2);
        assert_eq!(out.sid.kappa, 2);
        assert_eq!(out.theory, TheoryTag::Empty);
        assert!(no_theory_atoms(&out));
        let (u, _) = &trace.sentinel_vars;
        assert_eq!(u, &v("u"));
        // two left disjuncts: y allocated, or y padded; u is padded in both
        let Formula::Or(ds) = &out.lhs else { panic!("{}", out.lhs) };
        assert_eq!(ds.len(), 2);
        let mut pads: Vec<usize> = ds.iter().map(|d| d.count_points_to()).collect();
        pads.sort();
        assert_eq!(pads, vec![1, 2]);
        // every points-to atom of every rule ends with the sentinel parameter
        for r in &out.sid.rules {
            assert_eq!(r.points_to().unwrap().1.len(), 2);
        }
        assert_eq!(out.rhs.len(), 1);
        assert_eq!(out.rhs[0].count_points_to(), 2);
        // entailment status is preserved (invalid on both sides)
        let b = Bounds { locations: 5, heap: 3 };
        let before = entails(&p.lhs, &p.rhs, &p.sid, TheoryTag::Eq, b, Stores::Injective).unwrap();
        let after = entails(&out.lhs, &out.rhs, &out.sid, TheoryTag::Empty, Bounds { locations: 7, heap: 6 }, Stores::Injective)
            .unwrap();
        assert!(matches!(before, OracleVerdict::Countermodel(_)));
        assert!(matches!(after, OracleVerdict::Countermodel(_)));
    }

    #[test]
    fn mls_example_is_symmetric() {
        let mls = |a: &str, b: &str, c: &str| pa("mls", &[a, b, c]);
        let mut rules = ls_rules();
        rules.push(rule(mls("x", "y", "z"), &[], vec![pto("x", &["y"]), eq("x", "z")]));
        rules.push(rule(
            mls("x", "y", "z"),
            &["w"],
            vec![pto("x", &["w"]), Formula::Pred(pa("ls", &["w", "y"])), eq("x", "z")],
        ));
        rules.push(rule(
            mls("x", "y", "z"),
            &["w"],
            vec![pto("x", &["w"]), Formula::Pred(mls("w", "y", "z"))],
        ));
        let p = problem(rules, Formula::Pred(mls("x", "y", "x")), vec![Formula::Pred(mls("y", "x", "y"))]);
        let (out, trace) = eliminate_eq(&p, ElimOptions::default()).unwrap();
        assert!(no_theory_atoms(&out));
        let u = trace.sentinel_vars.0.clone();
        // both sides collapse to the same predicates over (x,y,u) and (y,x,u)
        let swap = |a: &Var| {
            if *a == v("x") {
                v("y")
            } else if *a == v("y") {
                v("x")
            } else {
                a.clone()
            }
        };
        let atoms = |fs: &[Formula]| -> BTreeSet<PredAtom> {
            fs.iter().flat_map(|f| f.pred_atoms().into_iter().cloned().collect::<Vec<_>>()).collect()
        };
        let left = atoms(core::slice::from_ref(&out.lhs));
        let right = atoms(&out.rhs);
        assert!(!left.is_empty());
        for a in &left {
            assert_eq!(a.args, vec![v("x"), v("y"), u.clone()]);
        }
        let swapped: BTreeSet<PredAtom> = left.iter().map(|a| a.rename(&swap)).collect();
        assert_eq!(swapped, right);
        let before = entails(&p.lhs, &p.rhs, &p.sid, TheoryTag::Eq, Bounds { locations: 4, heap: 3 }, Stores::Injective)
            .unwrap();
        let after = entails(&out.lhs, &out.rhs, &out.sid, TheoryTag::Empty, Bounds { locations: 6, heap: 6 }, Stores::Injective)
            .unwrap();
        assert_eq!(
            matches!(before, OracleVerdict::Countermodel(_)),
            matches!(after, OracleVerdict::Countermodel(_))
        );
    }

    #[test]
    fn trace_has_four_steps_and_rejects_other_theories() {
        let p = problem(ls_rules(), Formula::Pred(pa("ls", &["x", "y"])), vec![Formula::Pred(pa("ls", &["x", "y"]))]);
        let (_, trace) = eliminate_eq(&p, ElimOptions { simplify: false, assume_established: false }).unwrap();
        assert_eq!(trace.step_outputs.len(), 4);
        assert_eq!(trace.added_params, vec![v("x"), v("y"), v("u")]);
        assert_eq!(trace.step_outputs[0].sid.arity[&Pred::new("ls")], 5);
        let mut q = p.clone();
        q.theory = TheoryTag::Empty;
        assert_eq!(eliminate_eq(&q, ElimOptions::default()).unwrap_err(), ElimError::TheoryNotEq(TheoryTag::Empty));
    }
}
