//! Rule and axiom instances of the sequent calculus, their side conditions,
//! the redundancy filter and the measure `mu`.
//!
//! A [`Choice`] pins every nondeterministic decision of a rule, so that
//! [`apply`] is a pure function from (sequent, choice) to premises.  The
//! prover builds choices; the certificate kernel calls [`apply`] again and
//! compares.  Indices always refer to the normalized sequent: `rhs` indexes
//! `Sequent::rhs`, LHS indices refer to the conjuncts of a prefix-free LHS.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::formula::{single, Formula, Subst, TheoryAtom};
use crate::sequent::Sequent;
use crate::sid::{root_unsat, roots_of, Sid};
use crate::theory::{self, TheoryTag};
use crate::unfold::{mapsto_unfoldings, split_at, unfold_pred};
use crate::var::Var;

/// The ambient rule system and theory of a sequent.
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub sid: &'a Sid,
    pub theory: TheoryTag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleError(pub String);

impl fmt::Display for RuleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, RuleError> {
    Err(RuleError(msg.into()))
}

/// A fully determined rule application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Choice {
    AxR { rhs: usize, sigma: Vec<(Var, Var)> },
    AxD { i: usize, j: usize },
    AxTC,
    AxEH,
    Sk,
    HF { rhs: usize, src: Var },
    UL { atom: usize },
    UR { rhs: usize, atom: usize },
    W { rhs: Vec<usize> },
    HD { rhs: usize, x: Var },
    /// `entries[j] = (k, m)`: the j-th pair splits `rhs[k]`, the conjuncts
    /// listed in `m` going to the `left` part of the LHS.
    SC {
        left: Vec<usize>,
        entries: Vec<(usize, Vec<usize>)>,
        i_sets: Vec<Vec<usize>>,
        j_sets: Vec<Vec<usize>>,
    },
    /// `decomps` lists, for each produced formula, the conjuncts of the body
    /// that stay under the quantifier on `x`.
    ED {
        rhs: usize,
        x: Var,
        left: Vec<usize>,
        decomps: Vec<Vec<usize>>,
    },
    TS { drop: usize },
    TD { rhs: usize, atom: usize },
}

impl Choice {
    pub fn name(&self) -> &'static str {
        match self {
            Choice::AxR { .. } => "R",
            Choice::AxD { .. } => "D",
            Choice::AxTC => "TC",
            Choice::AxEH => "EH",
            Choice::Sk => "Sk",
            Choice::HF { .. } => "HF",
            Choice::UL { .. } => "UL",
            Choice::UR { .. } => "UR",
            Choice::W { .. } => "W",
            Choice::HD { .. } => "HD",
            Choice::SC { .. } => "SC",
            Choice::ED { .. } => "ED",
            Choice::TS { .. } => "TS",
            Choice::TD { .. } => "TD",
        }
    }

    pub fn is_axiom(&self) -> bool {
        matches!(self, Choice::AxR { .. } | Choice::AxD { .. } | Choice::AxTC | Choice::AxEH)
    }

    /// Sk, HF, UL and HD: a countermodel of a premise is one of the conclusion.
    pub fn is_invertible(&self) -> bool {
        matches!(self, Choice::Sk | Choice::HF { .. } | Choice::UL { .. } | Choice::HD { .. })
    }

    /// Payload without spaces, e.g. `rhs=0;x=y`.
    pub fn payload(&self) -> String {
        // `_` marks an empty list so that a list of lists stays unambiguous
        let list = |v: &[usize]| {
            if v.is_empty() {
                return "_".to_string();
            }
            v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        };
        let lists = |v: &[Vec<usize>]| v.iter().map(|l| list(l)).collect::<Vec<_>>().join("|");
        match self {
            Choice::AxR { rhs, sigma } => {
                let s: Vec<String> = sigma.iter().map(|(a, b)| alloc::format!("{}:{}", a, b)).collect();
                alloc::format!("rhs={};sigma={}", rhs, s.join(","))
            }
            Choice::AxD { i, j } => alloc::format!("i={};j={}", i, j),
            Choice::AxTC | Choice::AxEH | Choice::Sk => "-".to_string(),
            Choice::HF { rhs, src } => alloc::format!("rhs={};src={}", rhs, src),
            Choice::UL { atom } => alloc::format!("atom={}", atom),
            Choice::UR { rhs, atom } => alloc::format!("rhs={};atom={}", rhs, atom),
            Choice::W { rhs } => alloc::format!("rhs={}", list(rhs)),
            Choice::HD { rhs, x } => alloc::format!("rhs={};x={}", rhs, x),
            Choice::SC { left, entries, i_sets, j_sets } => {
                let e: Vec<String> = entries.iter().map(|(k, m)| alloc::format!("{}:{}", k, list(m))).collect();
                alloc::format!(
                    "left={};entries={};I={};J={}",
                    list(left),
                    e.join("|"),
                    lists(i_sets),
                    lists(j_sets)
                )
            }
            Choice::ED { rhs, x, left, decomps } => {
                alloc::format!("rhs={};x={};left={};dec={}", rhs, x, list(left), lists(decomps))
            }
            Choice::TS { drop } => alloc::format!("drop={}", drop),
            Choice::TD { rhs, atom } => alloc::format!("rhs={};atom={}", rhs, atom),
        }
    }

    /// Inverse of `name` + `payload`.
    pub fn parse(rule: &str, payload: &str) -> Option<Choice> {
        let mut kv: BTreeMap<&str, &str> = BTreeMap::new();
        if payload != "-" {
            for part in payload.split(';') {
                let (k, v) = part.split_once('=')?;
                kv.insert(k, v);
            }
        }
        let num = |k: &str| -> Option<usize> { kv.get(k)?.parse().ok() };
        let var = |k: &str| -> Option<Var> { parse_var(kv.get(k)?) };
        let list = |s: &str| -> Option<Vec<usize>> {
            if s == "_" {
                return Some(Vec::new());
            }
            s.split(',').map(|x| x.parse().ok()).collect()
        };
        let lists = |s: &str| -> Option<Vec<Vec<usize>>> {
            if s.is_empty() {
                return Some(Vec::new());
            }
            s.split('|').map(list).collect()
        };
        Some(match rule {
            "R" => {
                let s = kv.get("sigma")?;
                let mut sigma = Vec::new();
                if !s.is_empty() {
                    for p in s.split(',') {
                        let (a, b) = p.split_once(':')?;
                        sigma.push((parse_var(a)?, parse_var(b)?));
                    }
                }
                Choice::AxR { rhs: num("rhs")?, sigma }
            }
            "D" => Choice::AxD { i: num("i")?, j: num("j")? },
            "TC" => Choice::AxTC,
            "EH" => Choice::AxEH,
            "Sk" => Choice::Sk,
            "HF" => Choice::HF { rhs: num("rhs")?, src: var("src")? },
            "UL" => Choice::UL { atom: num("atom")? },
            "UR" => Choice::UR { rhs: num("rhs")?, atom: num("atom")? },
            "W" => Choice::W { rhs: list(kv.get("rhs")?)? },
            "HD" => Choice::HD { rhs: num("rhs")?, x: var("x")? },
            "SC" => {
                let es = kv.get("entries")?;
                let mut entries = Vec::new();
                if !es.is_empty() {
                    for e in es.split('|') {
                        let (k, m) = e.split_once(':')?;
                        entries.push((k.parse().ok()?, list(m)?));
                    }
                }
                Choice::SC {
                    left: list(kv.get("left")?)?,
                    entries,
                    i_sets: lists(kv.get("I")?)?,
                    j_sets: lists(kv.get("J")?)?,
                }
            }
            "ED" => Choice::ED {
                rhs: num("rhs")?,
                x: var("x")?,
                left: list(kv.get("left")?)?,
                decomps: lists(kv.get("dec")?)?,
            },
            "TS" => Choice::TS { drop: num("drop")? },
            "TD" => Choice::TD { rhs: num("rhs")?, atom: num("atom")? },
            _ => return None,
        })
    }
}

/// Parses a printed variable, including the reserved namespaces.
pub fn parse_var(s: &str) -> Option<Var> {
    if s.is_empty() {
        return None;
    }
    for (p, mk) in [("_v", Var::Fresh as fn(u32) -> Var), ("_b", Var::Bound), ("_p", Var::Param)] {
        if let Some(rest) = s.strip_prefix(p) {
            return rest.parse().ok().map(mk);
        }
    }
    if s.starts_with('_') || !s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
        return None;
    }
    Some(Var::user(s))
}

// ---------------------------------------------------------------------------
// Formula helpers

/// Pulls every quantifier to the top (binders renamed apart) and normalizes.
pub fn prenex(f: &Formula) -> Formula {
    let mut next = f.next_bound();
    let mut vars = Vec::new();
    let mut atoms = Vec::new();
    collect_prenex(f, &mut vars, &mut atoms, &mut next);
    Formula::exists(vars, Formula::sep(atoms)).normalize()
}

fn collect_prenex(f: &Formula, vars: &mut Vec<Var>, atoms: &mut Vec<Formula>, next: &mut u32) {
    match f {
        Formula::Emp => {}
        Formula::Sep(v) => v.iter().for_each(|g| collect_prenex(g, vars, atoms, next)),
        Formula::Exists(vs, b) => {
            let mut s = Subst::new();
            for v in vs {
                let nv = Var::Bound(*next);
                *next += 1;
                s.insert(v.clone(), nv.clone());
                vars.push(nv);
            }
            collect_prenex(&b.subst(&s), vars, atoms, next)
        }
        a => atoms.push(a.clone()),
    }
}

/// Conjuncts of a prefix-free LHS.
pub fn lhs_atoms(s: &Sequent) -> Option<Vec<Formula>> {
    match &s.lhs {
        Formula::Exists(..) => None,
        f => Some(f.conjuncts()),
    }
}

fn lhs_atoms_req(s: &Sequent) -> Result<Vec<Formula>, RuleError> {
    lhs_atoms(s).ok_or_else(|| RuleError("left-hand side has a quantifier prefix".into()))
}

fn theory_of(atoms: &[Formula]) -> Vec<TheoryAtom> {
    atoms
        .iter()
        .filter_map(|a| match a {
            Formula::Theory(t) => Some(t.clone()),
            _ => None,
        })
        .collect()
}

fn rhs_req(s: &Sequent, k: usize) -> Result<&Formula, RuleError> {
    s.rhs.get(k).ok_or_else(|| RuleError(alloc::format!("no right-hand formula {}", k)))
}

fn replace_rhs(s: &Sequent, k: usize, with: Vec<Formula>) -> Vec<Formula> {
    let mut out: Vec<Formula> = s.rhs.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, f)| f.clone()).collect();
    out.extend(with);
    out
}

/// Parts of a RHS formula for SC/ED: its top-level conjuncts when it has no
/// prefix, otherwise the formula itself as one unit.
pub fn units(f: &Formula) -> Vec<Formula> {
    match f {
        Formula::Exists(..) => alloc::vec![f.clone()],
        g => g.conjuncts(),
    }
}

fn pick(v: &[Formula], idx: &[usize]) -> Result<(Vec<Formula>, Vec<Formula>), RuleError> {
    let set: BTreeSet<usize> = idx.iter().cloned().collect();
    if set.len() != idx.len() || set.iter().any(|i| *i >= v.len()) {
        return err("bad index set");
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, f) in v.iter().enumerate() {
        if set.contains(&i) {
            a.push(f.clone())
        } else {
            b.push(f.clone())
        }
    }
    Ok((a, b))
}

// ---------------------------------------------------------------------------
// Applying instances

/// Checks the side condition of `c` on `s` and returns the premises.
pub fn apply(ctx: Ctx<'_>, s: &Sequent, c: &Choice) -> Result<Vec<Sequent>, RuleError> {
    match c {
        Choice::AxR { rhs, sigma } => ax_r(s, *rhs, sigma).map(|_| Vec::new()),
        Choice::AxD { i, j } => {
            let atoms = lhs_atoms_req(s)?;
            if i == j || *i >= atoms.len() || *j >= atoms.len() {
                return err("bad atom indices");
            }
            let a = ctx.sid.alloc_of(&atoms[*i]);
            let b = ctx.sid.alloc_of(&atoms[*j]);
            if a.is_disjoint(&b) {
                return err("allocated sets are disjoint");
            }
            Ok(Vec::new())
        }
        Choice::AxTC => {
            let atoms = lhs_atoms_req(s)?;
            let chi = theory_of(&atoms);
            match theory::satisfiable(&chi, ctx.theory, Some(&s.free_vars())) {
                Ok(false) => Ok(Vec::new()),
                Ok(true) => err("theory part is satisfiable"),
                Err(e) => err(alloc::format!("unsupported atom {}", e.0)),
            }
        }
        Choice::AxEH => {
            let atoms = lhs_atoms_req(s)?;
            if atoms.iter().any(|a| !matches!(a, Formula::Theory(_))) {
                return err("left-hand side is not a theory formula");
            }
            let chi = theory_of(&atoms);
            let disj = theory_disjuncts(s);
            if disj.is_empty() {
                return err("no theory formula on the right");
            }
            match theory::entails_disj(&chi, &disj, ctx.theory, Some(&s.free_vars())) {
                Ok(true) => Ok(Vec::new()),
                Ok(false) => err("entailment fails"),
                Err(e) => err(alloc::format!("unsupported atom {}", e.0)),
            }
        }
        Choice::Sk => {
            let Formula::Exists(vs, body) = &s.lhs else {
                return err("no quantifier on the left");
            };
            let x = vs[0].clone();
            let rest = Formula::exists(vs[1..].to_vec(), (**body).clone());
            let mut out = Vec::new();
            for xi in s.free_vars() {
                out.push(Sequent::new(rest.subst(&single(x.clone(), xi)), s.rhs.clone()));
            }
            out.push(Sequent::new(rest.subst(&single(x, s.fresh_var())), s.rhs.clone()));
            Ok(out)
        }
        Choice::HF { rhs, src } => {
            let atoms = lhs_atoms_req(s)?;
            let ys = atoms
                .iter()
                .find_map(|a| match a {
                    Formula::PointsTo(x, ys) if x == src => Some(ys.clone()),
                    _ => None,
                })
                .ok_or_else(|| RuleError("no such points-to on the left".into()))?;
            let f = rhs_req(s, *rhs)?;
            let g = hf_instance(f, src, &ys)?;
            Ok(alloc::vec![Sequent::new(s.lhs.clone(), replace_rhs(s, *rhs, alloc::vec![g]))])
        }
        Choice::UL { atom } => {
            let atoms = lhs_atoms_req(s)?;
            let Some(Formula::Pred(a)) = atoms.get(*atom) else {
                return err("not a predicate atom");
            };
            let mut next = s.lhs.next_bound();
            let rest: Vec<Formula> = atoms.iter().enumerate().filter(|(i, _)| i != atom).map(|(_, f)| f.clone()).collect();
            Ok(unfold_pred(a, ctx.sid, &mut next)
                .into_iter()
                .map(|u| {
                    let mut parts = rest.clone();
                    parts.push(u.result);
                    Sequent::new(prenex(&Formula::sep(parts)), s.rhs.clone())
                })
                .collect())
        }
        Choice::UR { rhs, atom } => {
            let f = rhs_req(s, *rhs)?;
            let (pre, body) = f.prefix();
            let conj = body.conjuncts();
            let Some(a) = conj.get(*atom) else {
                return err("no such conjunct");
            };
            let root = match a {
                Formula::Pred(p) => p.root().cloned(),
                Formula::Pu(pu) => pu.main_root(),
                _ => return err("not a predicate or pu-atom"),
            };
            let lfv = s.lhs.free_vars();
            match root {
                Some(r) if lfv.contains(&r) && !pre.contains(&r) => {}
                _ => return err("main root is not free on the left"),
            }
            let mut next = f.next_bound();
            let rest: Vec<Formula> = conj.iter().enumerate().filter(|(i, _)| i != atom).map(|(_, g)| g.clone()).collect();
            let new: Vec<Formula> = mapsto_unfoldings(a, ctx.sid, &mut next)
                .into_iter()
                .map(|u| {
                    let mut parts = rest.clone();
                    parts.push(u);
                    prenex(&Formula::exists(pre.clone(), Formula::sep(parts)))
                })
                .collect();
            Ok(alloc::vec![Sequent::new(s.lhs.clone(), replace_rhs(s, *rhs, new))])
        }
        Choice::W { rhs } => {
            let set: BTreeSet<usize> = rhs.iter().cloned().collect();
            if set.is_empty() || set.len() != rhs.len() || set.iter().any(|k| *k >= s.rhs.len()) {
                return err("bad index set");
            }
            let keep: Vec<Formula> = s.rhs.iter().enumerate().filter(|(i, _)| !set.contains(i)).map(|(_, f)| f.clone()).collect();
            Ok(alloc::vec![Sequent::new(s.lhs.clone(), keep)])
        }
        Choice::HD { rhs, x } => {
            let f = rhs_req(s, *rhs)?;
            if !ctx.sid.alloc_of(&s.lhs).contains(x) {
                return err("variable not allocated on the left");
            }
            if roots_of(f).main.contains(x) {
                return err("variable is already a main root");
            }
            let parts = split_at(f, x, ctx.sid);
            Ok(alloc::vec![Sequent::new(s.lhs.clone(), replace_rhs(s, *rhs, parts))])
        }
        Choice::SC { left, entries, i_sets, j_sets } => sc(ctx, s, left, entries, i_sets, j_sets),
        Choice::ED { rhs, x, left, decomps } => ed(ctx, s, *rhs, x, left, decomps),
        Choice::TS { drop } => {
            let atoms = lhs_atoms_req(s)?;
            let Some(Formula::Theory(_)) = atoms.get(*drop) else {
                return err("not a theory atom");
            };
            let big = theory_of(&atoms);
            let rest: Vec<Formula> = atoms.iter().enumerate().filter(|(i, _)| i != drop).map(|(_, f)| f.clone()).collect();
            let small = theory_of(&rest);
            if !theory::ts_order_less(&small, &big) {
                return err("not smaller");
            }
            match theory::entails_injective(&big, &small, ctx.theory, &s.free_vars()) {
                Ok(true) => Ok(alloc::vec![Sequent::new(Formula::sep(rest), s.rhs.clone())]),
                _ => err("entailment fails"),
            }
        }
        Choice::TD { rhs, atom } => {
            let _ = lhs_atoms_req(s)?;
            let f = rhs_req(s, *rhs)?;
            let (pre, body) = f.prefix();
            let conj = body.conjuncts();
            let Some(Formula::Theory(chi)) = conj.get(*atom) else {
                return err("not a theory atom");
            };
            if chi.vars().iter().any(|v| pre.contains(v)) {
                return err("theory atom mentions a quantified variable");
            }
            if !ctx.theory.supports(chi) {
                return err("atom not in the theory");
            }
            let Some(neg) = theory::negate_atom(chi, ctx.theory) else {
                return err("atom cannot be negated");
            };
            let rest: Vec<Formula> = conj.iter().enumerate().filter(|(i, _)| i != atom).map(|(_, g)| g.clone()).collect();
            let f2 = Formula::exists(pre, Formula::sep(rest));
            let p1 = Sequent::new(
                Formula::sep(alloc::vec![s.lhs.clone(), Formula::Theory(chi.clone())]),
                replace_rhs(s, *rhs, alloc::vec![f2]),
            );
            let p2 = Sequent::new(
                Formula::sep(alloc::vec![s.lhs.clone(), Formula::Theory(neg)]),
                replace_rhs(s, *rhs, Vec::new()),
            );
            Ok(alloc::vec![p1, p2])
        }
    }
}

/// Theory-only right-hand formulas as `(binders, atoms)`.
fn theory_disjuncts(s: &Sequent) -> Vec<(Vec<Var>, Vec<TheoryAtom>)> {
    let mut out = Vec::new();
    for f in &s.rhs {
        let p = prenex(f);
        let (vs, body) = p.prefix();
        let conj = body.conjuncts();
        if conj.iter().all(|a| matches!(a, Formula::Theory(_))) {
            out.push((vs, theory_of(&conj)));
        }
    }
    out
}

fn hf_instance(f: &Formula, src: &Var, ys: &[Var]) -> Result<Formula, RuleError> {
    let (pre, body) = f.prefix();
    let conj = body.conjuncts();
    let zs = conj
        .iter()
        .find_map(|a| match a {
            Formula::PointsTo(x, zs) if x == src => Some(zs.clone()),
            _ => None,
        })
        .ok_or_else(|| RuleError("no matching points-to on the right".into()))?;
    if zs.len() != ys.len() {
        return err("record width mismatch");
    }
    let mut sigma = Subst::new();
    for (z, y) in zs.iter().zip(ys) {
        if pre.contains(z) {
            match sigma.get(z) {
                Some(w) if w != y => return err("inconsistent instantiation"),
                _ => {
                    sigma.insert(z.clone(), y.clone());
                }
            }
        } else if z != y {
            return err("free target mismatch");
        }
    }
    if sigma.is_empty() {
        return err("empty instantiation");
    }
    let left: Vec<Var> = pre.iter().filter(|v| !sigma.contains_key(*v)).cloned().collect();
    Ok(prenex(&Formula::exists(left, body.subst(&sigma))))
}

/// The forced HF instance for a RHS formula, if any.
pub fn hf_applicable(s: &Sequent, k: usize) -> Option<Var> {
    let atoms = lhs_atoms(s)?;
    for a in &atoms {
        if let Formula::PointsTo(x, ys) = a {
            if hf_instance(&s.rhs[k], x, ys).is_ok() {
                return Some(x.clone());
            }
        }
    }
    None
}

fn ax_r(s: &Sequent, k: usize, sigma: &[(Var, Var)]) -> Result<(), RuleError> {
    let atoms = lhs_atoms_req(s)?;
    let f = prenex(rhs_req(s, k)?);
    let (pre, body) = f.prefix();
    let map: Subst = sigma.iter().cloned().collect();
    let dom: BTreeSet<Var> = map.keys().cloned().collect();
    let pset: BTreeSet<Var> = pre.iter().cloned().collect();
    if dom != pset || map.len() != sigma.len() {
        return err("substitution domain differs from the prefix");
    }
    let inst = body.subst(&map).normalize();
    let mut want: Vec<Formula> = inst.conjuncts();
    let mut have_sp: Vec<Formula> = atoms.iter().filter(|a| a.is_spatial_atom()).cloned().collect();
    let mut want_sp: Vec<Formula> = want.iter().filter(|a| a.is_spatial_atom()).cloned().collect();
    have_sp.sort();
    want_sp.sort();
    if have_sp != want_sp {
        return err("spatial parts differ");
    }
    want.retain(|a| !a.is_spatial_atom());
    let mut have_th: Vec<Formula> = atoms.iter().filter(|a| matches!(a, Formula::Theory(_))).cloned().collect();
    for w in want {
        match have_th.iter().position(|h| *h == w) {
            Some(p) => {
                have_th.remove(p);
            }
            None => return err("theory atom not on the left"),
        }
    }
    Ok(())
}

/// Searches a substitution closing the sequent with AxR on `rhs[k]`.
pub fn find_ax_r(s: &Sequent, k: usize) -> Option<Vec<(Var, Var)>> {
    let atoms = lhs_atoms(s)?;
    let f = prenex(&s.rhs[k]);
    let (pre, body) = f.prefix();
    let conj = body.conjuncts();
    let pat_sp: Vec<&Formula> = conj.iter().filter(|a| a.is_spatial_atom()).collect();
    let have_sp: Vec<&Formula> = atoms.iter().filter(|a| a.is_spatial_atom()).collect();
    if pat_sp.len() != have_sp.len() {
        return None;
    }
    let cands: Vec<Var> = s.lhs.free_vars().into_iter().collect();
    let mut found = None;
    let mut used = alloc::vec![false; have_sp.len()];
    match_spatial(&pat_sp, &have_sp, &pre, &mut used, &mut Subst::new(), &mut |sigma| {
        // remaining binders occur only in theory atoms: enumerate
        let open: Vec<Var> = pre.iter().filter(|v| !sigma.contains_key(*v)).cloned().collect();
        let mut sig = sigma.clone();
        if assign_rest(&open, 0, &cands, &mut sig, &mut |full| {
            let sv: Vec<(Var, Var)> = full.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
            if ax_r(s, k, &sv).is_ok() {
                found = Some(sv);
                true
            } else {
                false
            }
        }) {
            return true;
        }
        false
    });
    found
}

fn assign_rest(open: &[Var], i: usize, cands: &[Var], sig: &mut Subst, k: &mut dyn FnMut(&Subst) -> bool) -> bool {
    if i == open.len() {
        return k(sig);
    }
    for c in cands {
        sig.insert(open[i].clone(), c.clone());
        if assign_rest(open, i + 1, cands, sig, k) {
            return true;
        }
    }
    sig.remove(&open[i]);
    false
}

fn match_spatial(
    pat: &[&Formula],
    have: &[&Formula],
    binders: &[Var],
    used: &mut Vec<bool>,
    sigma: &mut Subst,
    k: &mut dyn FnMut(&Subst) -> bool,
) -> bool {
    let Some((p, rest)) = pat.split_first() else {
        return k(sigma);
    };
    for j in 0..have.len() {
        if used[j] {
            continue;
        }
        let saved = sigma.clone();
        if match_atom(p, have[j], binders, sigma) {
            used[j] = true;
            if match_spatial(rest, have, binders, used, sigma, k) {
                return true;
            }
            used[j] = false;
        }
        *sigma = saved;
    }
    false
}

fn match_atom(p: &Formula, h: &Formula, binders: &[Var], sigma: &mut Subst) -> bool {
    let pair = |a: &Var, b: &Var, sigma: &mut Subst| -> bool {
        if binders.contains(a) {
            match sigma.get(a) {
                Some(c) => c == b,
                None => {
                    sigma.insert(a.clone(), b.clone());
                    true
                }
            }
        } else {
            a == b
        }
    };
    match (p, h) {
        (Formula::PointsTo(x, ys), Formula::PointsTo(u, vs)) => {
            ys.len() == vs.len() && pair(x, u, sigma) && ys.iter().zip(vs).all(|(a, b)| pair(a, b, sigma))
        }
        (Formula::Pred(a), Formula::Pred(b)) => {
            a.pred == b.pred && a.args.len() == b.args.len() && a.args.iter().zip(&b.args).all(|(x, y)| pair(x, y, sigma))
        }
        _ => false,
    }
}

fn sc(
    ctx: Ctx<'_>,
    s: &Sequent,
    left: &[usize],
    entries: &[(usize, Vec<usize>)],
    i_sets: &[Vec<usize>],
    j_sets: &[Vec<usize>],
) -> Result<Vec<Sequent>, RuleError> {
    let atoms = lhs_atoms_req(s)?;
    let (phi, phi2) = pick(&atoms, left)?;
    let (phi, phi2) = (Formula::sep(phi), Formula::sep(phi2));
    if ctx.sid.alloc_of(&phi).is_empty() || ctx.sid.alloc_of(&phi2).is_empty() {
        return err("one side allocates nothing");
    }
    let mut covered = BTreeSet::new();
    let mut pairs = Vec::new();
    for (k, m) in entries {
        let f = rhs_req(s, *k)?;
        let (a, b) = pick(&units(f), m)?;
        covered.insert(*k);
        pairs.push((Formula::sep(a), Formula::sep(b)));
    }
    if covered.len() != s.rhs.len() {
        return err("right-hand formula without a decomposition");
    }
    let n = pairs.len();
    for sets in [i_sets, j_sets] {
        for set in sets {
            let u: BTreeSet<usize> = set.iter().cloned().collect();
            if u.len() != set.len() || u.iter().any(|i| *i >= n) {
                return err("bad index set");
            }
        }
        if !is_antichain(sets) {
            return err("index sets do not form an antichain");
        }
    }
    if !covers(n, i_sets, j_sets)? {
        return err("covering condition fails");
    }
    let mut out = Vec::new();
    for set in i_sets {
        out.push(Sequent::new(phi.clone(), set.iter().map(|j| prenex(&pairs[*j].0)).collect()));
    }
    for set in j_sets {
        out.push(Sequent::new(phi2.clone(), set.iter().map(|j| prenex(&pairs[*j].1)).collect()));
    }
    Ok(out)
}

/// No set is included in another (equal sets count as inclusion).
pub fn is_antichain(sets: &[Vec<usize>]) -> bool {
    let ss: Vec<BTreeSet<usize>> = sets.iter().map(|s| s.iter().cloned().collect()).collect();
    for i in 0..ss.len() {
        for j in 0..ss.len() {
            if i != j && ss[i].is_subset(&ss[j]) {
                return false;
            }
        }
    }
    true
}

/// Covering condition: every `X` contains some `I_i` or its complement
/// contains some `J_j`.  Indices outside every set cannot affect the
/// answer, so only the used ones are enumerated.
pub fn covers(n: usize, i_sets: &[Vec<usize>], j_sets: &[Vec<usize>]) -> Result<bool, RuleError> {
    let used: BTreeSet<usize> = i_sets.iter().chain(j_sets).flatten().cloned().collect();
    if used.iter().any(|i| *i >= n) {
        return err("index out of range");
    }
    if used.len() > 20 {
        return err("too many pairs");
    }
    let pos = |i: &usize| used.iter().position(|u| u == i).unwrap();
    let mask = |v: &Vec<usize>| v.iter().fold(0u32, |m, i| m | (1 << pos(i)));
    let im: Vec<u32> = i_sets.iter().map(mask).collect();
    let jm: Vec<u32> = j_sets.iter().map(mask).collect();
    let full: u32 = (1u32 << used.len()) - 1;
    for x in 0..=full {
        let comp = full & !x;
        let ok = im.iter().any(|m| m & x == *m) || jm.iter().any(|m| m & comp == *m);
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

fn ed(
    ctx: Ctx<'_>,
    s: &Sequent,
    k: usize,
    x: &Var,
    left: &[usize],
    decomps: &[Vec<usize>],
) -> Result<Vec<Sequent>, RuleError> {
    let atoms = lhs_atoms_req(s)?;
    let (phi, phi2) = pick(&atoms, left)?;
    let f = rhs_req(s, k)?;
    let (pre, body) = f.prefix();
    if !pre.contains(x) {
        return err("variable not in the prefix");
    }
    let ys: Vec<Var> = pre.iter().filter(|v| *v != x).cloned().collect();
    let conj = body.conjuncts();
    let fresh = s.fresh_var();
    let mut new = Vec::new();
    for d in decomps {
        let (inside, outside) = pick(&conj, d)?;
        if outside.is_empty() {
            return err("empty remainder");
        }
        let out_f = Formula::sep(outside);
        if ctx.sid.vart_of(&out_f).contains(x) {
            return err("variable reaches a theory atom in the remainder");
        }
        let g = Formula::exists(
            ys.clone(),
            Formula::Sep(alloc::vec![
                Formula::exists(alloc::vec![x.clone()], Formula::sep(inside)),
                out_f.subst(&single(x.clone(), fresh.clone())),
            ]),
        );
        new.push(g);
    }
    let shared: BTreeSet<Var> = Formula::sep(phi)
        .free_vars()
        .intersection(&Formula::sep(phi2).free_vars())
        .cloned()
        .collect();
    for xi in shared {
        new.push(Formula::exists(ys.clone(), body.subst(&single(x.clone(), xi))));
    }
    Ok(alloc::vec![Sequent::new(s.lhs.clone(), replace_rhs(s, k, new))])
}

// ---------------------------------------------------------------------------
// Redundancy

/// True when no unfolding of the formula contains a theory atom.
pub fn is_empty_constrained(sid: &Sid, f: &Formula) -> bool {
    if !f.theory_atoms().is_empty() {
        return false;
    }
    let mut preds = Vec::new();
    f.for_each_atom(&mut |a| match a {
        Formula::Pred(p) => preds.push(p.pred.clone()),
        Formula::Pu(pu) => {
            preds.push(pu.inner.pred.clone());
            preds.extend(pu.frame.iter().map(|b| b.pred.clone()));
        }
        _ => {}
    });
    preds.iter().all(|p| {
        sid.reach
            .get(p)
            .is_some_and(|r| r.iter().all(|q| sid.rules_of(q).all(|rule| rule.body_theory().next().is_none())))
    })
}

/// Indices of RHS formulas that can be deleted: root-unsatisfiable ones,
/// ones containing `false`, ones whose points-to clashes with the LHS under
/// injectivity, and (for formulas without theory content) root-redundant
/// and variable-redundant ones.
pub fn redundant_rhs(ctx: Ctx<'_>, s: &Sequent) -> Vec<usize> {
    let lhs_fv = s.lhs.free_vars();
    let lhs_alloc = ctx.sid.alloc_of(&s.lhs);
    let lhs_pto: Vec<(Var, Vec<Var>)> = lhs_atoms(s)
        .unwrap_or_default()
        .into_iter()
        .filter_map(|a| match a {
            Formula::PointsTo(x, ys) => Some((x, ys)),
            _ => None,
        })
        .collect();
    let mut out = Vec::new();
    let mut seen: BTreeSet<Formula> = BTreeSet::new();
    for (k, f) in s.rhs.iter().enumerate() {
        if root_unsat(f) || f.theory_atoms().iter().any(|t| **t == TheoryAtom::False) {
            out.push(k);
            continue;
        }
        let (pre, body) = f.prefix();
        let clash = body.conjuncts().iter().any(|a| match a {
            Formula::PointsTo(x, zs) => lhs_pto.iter().any(|(u, ys)| {
                u == x && zs.iter().zip(ys).any(|(z, y)| !pre.contains(z) && z != y)
            }),
            _ => false,
        });
        if clash {
            out.push(k);
            continue;
        }
        if !is_empty_constrained(ctx.sid, f) {
            continue;
        }
        let r = roots_of(f);
        if r.main.iter().any(|v| !lhs_alloc.contains(v)) || r.aux.iter().any(|v| !lhs_fv.contains(v)) {
            out.push(k);
            continue;
        }
        let canon = rename_outside(f, &lhs_fv);
        if !seen.insert(canon) {
            out.push(k);
        }
    }
    out
}

/// Renames the free variables outside `keep` canonically (by first
/// occurrence, iterated since renaming may reorder conjuncts).
fn rename_outside(f: &Formula, keep: &BTreeSet<Var>) -> Formula {
    let mut cur = f.clone();
    for _ in 0..4 {
        let order: Vec<Var> = cur.free_vars_ordered().into_iter().filter(|v| !keep.contains(v)).collect();
        let map: BTreeMap<Var, Var> = order
            .into_iter()
            .enumerate()
            .map(|(i, v)| (v, Var::Fresh(u32::MAX - 1000 + i as u32)))
            .collect();
        let next = cur.rename_free(&|v| map.get(v).cloned()).normalize();
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

// ---------------------------------------------------------------------------
// Measure

/// Theory part compared by the order used for rule TS.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TheoryKey(usize, String);

fn theory_key(atoms: &[TheoryAtom]) -> TheoryKey {
    let mut printed: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
    printed.sort();
    TheoryKey(atoms.len(), printed.join(" * "))
}

/// Per-formula component of the measure.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RhsMeasure {
    pub unrooted: usize,
    pub size: usize,
    pub prefix: usize,
    pub theory: TheoryKey,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    pub lhs_size: usize,
    pub rhs: Vec<RhsMeasure>,
    pub lhs_theory: TheoryKey,
}

/// Size of the spatial part: one per quantified variable, `2 + kappa` per
/// predicate symbol plus one per argument, `1 + (1 + kappa)` per points-to.
pub fn spatial_size(f: &Formula, kappa: usize) -> usize {
    let pred = |n: usize| 2 + kappa + n;
    match f {
        Formula::Emp | Formula::Theory(_) => 0,
        Formula::PointsTo(_, ys) => 2 + ys.len(),
        Formula::Pred(p) => pred(p.args.len()),
        Formula::Pu(pu) => 1 + pred(pu.inner.args.len()) + pu.frame.iter().map(|a| pred(a.args.len())).sum::<usize>(),
        Formula::Sep(v) | Formula::Or(v) => v.iter().map(|g| spatial_size(g, kappa)).sum(),
        Formula::Exists(vs, b) => vs.len() + spatial_size(b, kappa),
    }
}

pub fn measure_mu(ctx: Ctx<'_>, s: &Sequent) -> Measure {
    let kappa = ctx.sid.kappa;
    let alloc = ctx.sid.alloc_of(&s.lhs);
    let rhs = s
        .rhs
        .iter()
        .map(|f| {
            let roots: BTreeSet<Var> = roots_of(f).main.into_iter().collect();
            let th: Vec<TheoryAtom> = f.theory_atoms().into_iter().cloned().collect();
            RhsMeasure {
                unrooted: alloc.difference(&roots).count(),
                size: spatial_size(f, kappa),
                prefix: f.prefix().0.len(),
                theory: theory_key(&th),
            }
        })
        .collect();
    let lth: Vec<TheoryAtom> = s.lhs.theory_atoms().into_iter().cloned().collect();
    Measure {
        lhs_size: spatial_size(&s.lhs, kappa),
        rhs,
        lhs_theory: theory_key(&lth),
    }
}

/// Multiset extension (Dershowitz–Manna) of a total order.
fn multiset_less<T: Ord + Clone>(m: &[T], n: &[T]) -> bool {
    let mut a = m.to_vec();
    let mut b = n.to_vec();
    a.sort();
    b.sort();
    if a == b {
        return false;
    }
    // remove common elements
    let mut only_a = Vec::new();
    let mut only_b = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if i == a.len() {
            only_b.push(b[j].clone());
            j += 1;
        } else if j == b.len() {
            only_a.push(a[i].clone());
            i += 1;
        } else {
            match a[i].cmp(&b[j]) {
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                Ordering::Less => {
                    only_a.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    only_b.push(b[j].clone());
                    j += 1;
                }
            }
        }
    }
    only_a.iter().all(|x| only_b.iter().any(|y| x < y))
}

impl Measure {
    pub fn less(&self, other: &Measure) -> bool {
        match self.lhs_size.cmp(&other.lhs_size) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
        let mut a = self.rhs.clone();
        let mut b = other.rhs.clone();
        a.sort();
        b.sort();
        if a != b {
            return multiset_less(&a, &b);
        }
        self.lhs_theory < other.lhs_theory
    }
}

/// True when every premise has a strictly smaller measure than `s`.
pub fn measure_decreases(ctx: Ctx<'_>, s: &Sequent, premises: &[Sequent]) -> bool {
    let m = measure_mu(ctx, s);
    premises.iter().all(|p| measure_mu(ctx, p).less(&m))
}
