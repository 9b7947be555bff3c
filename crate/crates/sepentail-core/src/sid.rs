//! Inductive rule systems: validation, dependency analysis, the `alloc` and
//! `vart` fixpoints, alloc-compatible variants, roots of formulas.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::{Formula, PredAtom, Subst, TheoryAtom};
use crate::var::{Pred, Var};

/// `head <= exists exvars. body` where `body` is a list of atoms.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rule {
    pub head: PredAtom,
    pub exvars: Vec<Var>,
    pub body: Vec<Formula>,
}

impl Rule {
    pub fn points_to(&self) -> Option<(&Var, &Vec<Var>)> {
        self.body.iter().find_map(|a| match a {
            Formula::PointsTo(x, ys) => Some((x, ys)),
            _ => None,
        })
    }

    pub fn body_preds(&self) -> impl Iterator<Item = &PredAtom> {
        self.body.iter().filter_map(|a| match a {
            Formula::Pred(p) => Some(p),
            _ => None,
        })
    }

    pub fn body_theory(&self) -> impl Iterator<Item = &TheoryAtom> {
        self.body.iter().filter_map(|a| match a {
            Formula::Theory(t) => Some(t),
            _ => None,
        })
    }

    /// Instantiates the rule for the given head arguments; existentials are
    /// renamed through `ex`.  The renaming is simultaneous, so argument names
    /// that coincide with rule-local names cannot be captured.
    pub fn instantiate(&self, args: &[Var], ex: &mut impl FnMut(usize) -> Var) -> (Vec<Var>, Vec<Formula>) {
        let mut m: Subst = BTreeMap::new();
        for (h, a) in self.head.args.iter().zip(args.iter()) {
            m.insert(h.clone(), a.clone());
        }
        let mut exs = Vec::new();
        for (i, y) in self.exvars.iter().enumerate() {
            let n = ex(i);
            m.insert(y.clone(), n.clone());
            exs.push(n);
        }
        let body = self
            .body
            .iter()
            .map(|a| a.rename_free(&|v| m.get(v).cloned()))
            .collect();
        (exs, body)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <= ", self.head)?;
        if !self.exvars.is_empty() {
            f.write_str("exists")?;
            for v in &self.exvars {
                write!(f, " {}", v)?;
            }
            f.write_str(". ")?;
        }
        if self.body.is_empty() {
            f.write_str("emp")?;
        }
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            write!(f, "{}", a)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SidError {
    ProgressViolation(usize),
    ConnectivityViolation(usize),
    EstablishmentUnknown(usize, Var),
    ArityMismatch(Pred),
    KappaMismatch(usize),
    BadHead(usize),
    UnboundVariable(usize, Var),
    UnknownPredicate(Pred),
}

impl fmt::Display for SidError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SidError::ProgressViolation(r) => write!(f, "rule {}: progress violated (need exactly one points-to rooted at the first head argument)", r + 1),
            SidError::ConnectivityViolation(r) => write!(f, "rule {}: connectivity violated (body atom not rooted at a points-to target)", r + 1),
            SidError::EstablishmentUnknown(r, v) => write!(f, "rule {}: cannot confirm that existential {} is allocated", r + 1, v),
            SidError::ArityMismatch(p) => write!(f, "predicate {} used with inconsistent arity", p),
            SidError::KappaMismatch(r) => write!(f, "rule {}: points-to with the wrong number of targets", r + 1),
            SidError::BadHead(r) => write!(f, "rule {}: head arguments must be pairwise distinct variables", r + 1),
            SidError::UnboundVariable(r, v) => write!(f, "rule {}: variable {} is neither a parameter nor quantified", r + 1, v),
            SidError::UnknownPredicate(p) => write!(f, "predicate {} has no rule", p),
        }
    }
}

/// A validated rule system with its derived metadata.
#[derive(Clone, Debug)]
pub struct Sid {
    pub kappa: usize,
    pub rules: Vec<Rule>,
    pub arity: BTreeMap<Pred, usize>,
    /// Must-allocated positions (0-based).
    pub alloc: BTreeMap<Pred, BTreeSet<usize>>,
    /// Positions that may reach a theory atom (0-based).
    pub vart: BTreeMap<Pred, BTreeSet<usize>>,
    /// Reflexive-transitive dependency relation: `reach[p]` holds every `q`
    /// with `p >= q`.
    pub reach: BTreeMap<Pred, BTreeSet<Pred>>,
    pub alloc_compatible: bool,
}

impl Sid {
    /// Checks progress, connectivity and (unless waived) establishment, and
    /// computes the metadata.
    pub fn new(rules: Vec<Rule>, kappa: usize, assume_established: bool) -> Result<Sid, SidError> {
        let mut arity: BTreeMap<Pred, usize> = BTreeMap::new();
        let note = |p: &PredAtom, arity: &mut BTreeMap<Pred, usize>| -> Result<(), SidError> {
            match arity.get(&p.pred) {
                Some(n) if *n != p.args.len() => Err(SidError::ArityMismatch(p.pred.clone())),
                _ => {
                    arity.insert(p.pred.clone(), p.args.len());
                    Ok(())
                }
            }
        };
        for r in &rules {
            note(&r.head, &mut arity)?;
        }
        for r in &rules {
            for b in r.body_preds() {
                note(b, &mut arity)?;
            }
        }
        let defined: BTreeSet<Pred> = rules.iter().map(|r| r.head.pred.clone()).collect();
        for (i, r) in rules.iter().enumerate() {
            let hs: BTreeSet<&Var> = r.head.args.iter().collect();
            if hs.len() != r.head.args.len() || r.head.args.is_empty() {
                return Err(SidError::BadHead(i));
            }
            let pts: Vec<_> = r
                .body
                .iter()
                .filter(|a| matches!(a, Formula::PointsTo(..)))
                .collect();
            if pts.len() != 1 {
                return Err(SidError::ProgressViolation(i));
            }
            let (src, targets) = r.points_to().unwrap();
            if src != &r.head.args[0] {
                return Err(SidError::ProgressViolation(i));
            }
            if targets.len() != kappa {
                return Err(SidError::KappaMismatch(i));
            }
            for b in r.body_preds() {
                if !defined.contains(&b.pred) {
                    return Err(SidError::UnknownPredicate(b.pred.clone()));
                }
                if b.args.is_empty() || !targets.contains(&b.args[0]) {
                    return Err(SidError::ConnectivityViolation(i));
                }
            }
            for a in &r.body {
                for v in a.free_vars() {
                    if !hs.contains(&v) && !r.exvars.contains(&v) {
                        return Err(SidError::UnboundVariable(i, v));
                    }
                }
            }
        }
        let mut sid = Sid {
            kappa,
            rules,
            arity,
            alloc: BTreeMap::new(),
            vart: BTreeMap::new(),
            reach: BTreeMap::new(),
            alloc_compatible: false,
        };
        sid.compute_reach();
        sid.compute_alloc();
        sid.compute_vart();
        if !assume_established {
            sid.check_establishment()?;
        }
        Ok(sid)
    }

    pub fn rules_of<'a>(&'a self, p: &'a Pred) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| &r.head.pred == p)
    }

    pub fn preds(&self) -> impl Iterator<Item = &Pred> {
        self.arity.keys()
    }

    fn compute_reach(&mut self) {
        let mut reach: BTreeMap<Pred, BTreeSet<Pred>> = BTreeMap::new();
        for p in self.arity.keys() {
            let mut s = BTreeSet::new();
            s.insert(p.clone());
            reach.insert(p.clone(), s);
        }
        for r in &self.rules {
            for b in r.body_preds() {
                reach.get_mut(&r.head.pred).unwrap().insert(b.pred.clone());
            }
        }
        loop {
            let mut changed = false;
            let keys: Vec<Pred> = reach.keys().cloned().collect();
            for p in &keys {
                let succ: Vec<Pred> = reach[p].iter().cloned().collect();
                for q in succ {
                    let add: Vec<Pred> = reach[&q].iter().cloned().collect();
                    let e = reach.get_mut(p).unwrap();
                    for a in add {
                        changed |= e.insert(a);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.reach = reach;
    }

    /// True if `p` depends on itself through at least one rule.
    pub fn is_recursive(&self, p: &Pred) -> bool {
        self.rules_of(p)
            .flat_map(|r| r.body_preds())
            .any(|b| self.reach.get(&b.pred).is_some_and(|s| s.contains(p)))
    }

    /// Head-argument positions allocated by a rule body under `alloc`.
    fn body_alloc_positions(&self, r: &Rule, alloc: &BTreeMap<Pred, BTreeSet<usize>>) -> BTreeSet<usize> {
        let mut vars: BTreeSet<&Var> = BTreeSet::new();
        if let Some((x, _)) = r.points_to() {
            vars.insert(x);
        }
        for b in r.body_preds() {
            if let Some(pos) = alloc.get(&b.pred) {
                for i in pos {
                    vars.insert(&b.args[*i]);
                }
            }
        }
        r.head
            .args
            .iter()
            .enumerate()
            .filter(|(_, a)| vars.contains(a))
            .map(|(i, _)| i)
            .collect()
    }

    fn compute_alloc(&mut self) {
        let mut alloc: BTreeMap<Pred, BTreeSet<usize>> = self
            .arity
            .iter()
            .map(|(p, n)| (p.clone(), (0..*n).collect()))
            .collect();
        loop {
            let mut changed = false;
            for r in &self.rules {
                let pos = self.body_alloc_positions(r, &alloc);
                let cur = alloc.get_mut(&r.head.pred).unwrap();
                let next: BTreeSet<usize> = cur.intersection(&pos).cloned().collect();
                if next != *cur {
                    *cur = next;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.alloc_compatible = self
            .rules
            .iter()
            .all(|r| self.body_alloc_positions(r, &alloc) == alloc[&r.head.pred]);
        self.alloc = alloc;
    }

    fn compute_vart(&mut self) {
        let mut vart: BTreeMap<Pred, BTreeSet<usize>> =
            self.arity.keys().map(|p| (p.clone(), BTreeSet::new())).collect();
        loop {
            let mut changed = false;
            for r in &self.rules {
                let mut vs: BTreeSet<Var> = BTreeSet::new();
                for t in r.body_theory() {
                    vs.extend(t.vars().into_iter().cloned());
                }
                for b in r.body_preds() {
                    for i in &vart[&b.pred] {
                        vs.insert(b.args[*i].clone());
                    }
                }
                for (i, a) in r.head.args.iter().enumerate() {
                    if vs.contains(a) {
                        changed |= vart.get_mut(&r.head.pred).unwrap().insert(i);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.vart = vart;
    }

    /// Sufficient establishment test: every existential must be a root of a
    /// body atom, sit at a must-allocated position, or be linked to such a
    /// variable through body equations.
    fn check_establishment(&self) -> Result<(), SidError> {
        for (i, r) in self.rules.iter().enumerate() {
            let mut est: BTreeSet<Var> = BTreeSet::new();
            if let Some((x, _)) = r.points_to() {
                est.insert(x.clone());
            }
            for b in r.body_preds() {
                est.insert(b.args[0].clone());
                for p in &self.alloc[&b.pred] {
                    est.insert(b.args[*p].clone());
                }
            }
            loop {
                let mut changed = false;
                for t in r.body_theory() {
                    if let TheoryAtom::Eq(a, b) = t {
                        if est.contains(a) && !est.contains(b) {
                            est.insert(b.clone());
                            changed = true;
                        }
                        if est.contains(b) && !est.contains(a) {
                            est.insert(a.clone());
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            for y in &r.exvars {
                if !est.contains(y) {
                    return Err(SidError::EstablishmentUnknown(i, y.clone()));
                }
            }
        }
        Ok(())
    }

    /// Free variables of a pu-free formula that are allocated in every model.
    pub fn alloc_of(&self, f: &Formula) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.alloc_into(f, &mut out);
        out
    }

    fn alloc_into(&self, f: &Formula, out: &mut BTreeSet<Var>) {
        match f {
            Formula::PointsTo(x, _) => {
                out.insert(x.clone());
            }
            Formula::Pred(p) => {
                if let Some(pos) = self.alloc.get(&p.pred) {
                    for i in pos {
                        out.insert(p.args[*i].clone());
                    }
                }
            }
            Formula::Sep(v) => v.iter().for_each(|g| self.alloc_into(g, out)),
            Formula::Exists(vs, b) => {
                let mut inner = BTreeSet::new();
                self.alloc_into(b, &mut inner);
                out.extend(inner.into_iter().filter(|v| !vs.contains(v)));
            }
            _ => {}
        }
    }

    /// Variables that may end up in a theory atom after unfolding.
    pub fn vart_of(&self, f: &Formula) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        f.for_each_atom(&mut |a| match a {
            Formula::Theory(t) => out.extend(t.vars().into_iter().cloned()),
            Formula::Pred(p) => {
                if let Some(pos) = self.vart.get(&p.pred) {
                    out.extend(pos.iter().map(|i| p.args[*i].clone()))
                }
            }
            Formula::Pu(pu) => {
                let inst = pu.inner_instance();
                if let Some(pos) = self.vart.get(&inst.pred) {
                    out.extend(pos.iter().map(|i| inst.args[*i].clone()))
                }
            }
            _ => {}
        });
        let fv = f.free_vars();
        out.retain(|v| fv.contains(v));
        out
    }

    /// True when no predicate reachable from the formula is recursive.
    pub fn is_left_terminating(&self, lhs: &Formula) -> bool {
        let mut reachable = BTreeSet::new();
        for a in lhs.pred_atoms() {
            if let Some(s) = self.reach.get(&a.pred) {
                reachable.extend(s.iter().cloned());
            }
        }
        !reachable.iter().any(|p| self.is_recursive(p))
    }

    /// Adds one rule; used by transformations building a new system.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for r in &self.rules {
            s.push_str(&format!("  {};\n", r));
        }
        s
    }
}

/// Main and auxiliary roots of a disjunction-free formula (free variables
/// only, with multiplicity).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roots {
    pub main: Vec<Var>,
    pub aux: Vec<Var>,
}

pub fn roots_of(f: &Formula) -> Roots {
    let mut r = Roots::default();
    let fv = f.free_vars();
    roots_all(f, &mut r);
    r.main.retain(|v| fv.contains(v));
    r.aux.retain(|v| fv.contains(v));
    r.main.sort();
    r.aux.sort();
    r
}

/// Roots including bound ones (binders of normalized formulas are unique).
fn roots_all(f: &Formula, r: &mut Roots) {
    match f {
        Formula::PointsTo(x, _) => r.main.push(x.clone()),
        Formula::Pred(p) => r.main.extend(p.args.first().cloned()),
        Formula::Pu(pu) => {
            r.main.extend(pu.main_root());
            r.aux.extend(pu.aux_roots());
        }
        Formula::Sep(v) | Formula::Or(v) => v.iter().for_each(|g| roots_all(g, r)),
        Formula::Exists(_, b) => roots_all(b, r),
        _ => {}
    }
}

/// A variable (free or bound) is a main root twice, or two frame atoms of
/// one pu-atom share their root: the formula cannot hold.  Frame atoms are
/// disjoint parts of a single unfolding, so each allocates its own root.
/// A frame atom may sit at the root of the inner atom only in the trivial
/// unfolding, where the frame is the inner atom itself.
pub fn root_unsat(f: &Formula) -> bool {
    let mut r = Roots::default();
    roots_all(f, &mut r);
    r.main.sort();
    r.main.windows(2).any(|w| w[0] == w[1]) || frame_clash(f)
}

fn frame_clash(f: &Formula) -> bool {
    match f {
        Formula::Pu(pu) => {
            let mut aux = pu.aux_roots();
            aux.sort();
            let trivial = pu.frame_instance() == [pu.inner_instance()];
            aux.windows(2).any(|w| w[0] == w[1]) || (!trivial && pu.main_root().is_some_and(|r| aux.contains(&r)))
        }
        Formula::Sep(v) | Formula::Or(v) => v.iter().any(frame_clash),
        Formula::Exists(_, b) => frame_clash(b),
        _ => false,
    }
}

/// Replaces a rule system by its alloc-compatible variant system restricted
/// to what `atoms` can reach.  Returns the new system and, for every original
/// predicate, the list of its variants (as `(variant, allocated positions)`).
pub fn alloc_compatible_variants(
    sid: &Sid,
    roots: &[Pred],
) -> (Sid, BTreeMap<Pred, Vec<Pred>>) {
    // Existing variants, computed as a least fixpoint over all predicates
    // reachable from `roots`.
    let mut reachable: BTreeSet<Pred> = BTreeSet::new();
    for p in roots {
        if let Some(s) = sid.reach.get(p) {
            reachable.extend(s.iter().cloned());
        }
    }
    let mut exist: BTreeMap<Pred, BTreeSet<BTreeSet<usize>>> =
        reachable.iter().map(|p| (p.clone(), BTreeSet::new())).collect();
    let mut new_rules: BTreeSet<Rule> = BTreeSet::new();
    loop {
        let mut changed = false;
        for r in sid.rules.iter().filter(|r| reachable.contains(&r.head.pred)) {
            let preds: Vec<&PredAtom> = r.body_preds().collect();
            let choices: Vec<Vec<BTreeSet<usize>>> = preds
                .iter()
                .map(|b| exist[&b.pred].iter().cloned().collect())
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = alloc::vec![0usize; preds.len()];
            loop {
                // allocated head positions for this combination
                let mut vars: BTreeSet<&Var> = BTreeSet::new();
                vars.insert(r.points_to().unwrap().0);
                for (k, b) in preds.iter().enumerate() {
                    for i in &choices[k][idx[k]] {
                        vars.insert(&b.args[*i]);
                    }
                }
                let a: BTreeSet<usize> = r
                    .head
                    .args
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| vars.contains(x))
                    .map(|(i, _)| i)
                    .collect();
                let mut k = 0;
                let body: Vec<Formula> = r
                    .body
                    .iter()
                    .map(|atom| match atom {
                        Formula::Pred(b) => {
                            let v = variant_name(&b.pred, &choices[k][idx[k]]);
                            k += 1;
                            Formula::Pred(PredAtom::new(v, b.args.clone()))
                        }
                        o => o.clone(),
                    })
                    .collect();
                let head = PredAtom::new(variant_name(&r.head.pred, &a), r.head.args.clone());
                new_rules.insert(Rule {
                    head,
                    exvars: r.exvars.clone(),
                    body,
                });
                changed |= exist.get_mut(&r.head.pred).unwrap().insert(a);
                // advance odometer
                let mut j = 0;
                loop {
                    if j == idx.len() {
                        break;
                    }
                    idx[j] += 1;
                    if idx[j] < choices[j].len() {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == idx.len() {
                    break;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let variants: BTreeMap<Pred, Vec<Pred>> = exist
        .iter()
        .map(|(p, s)| (p.clone(), s.iter().map(|a| variant_name(p, a)).collect()))
        .collect();
    let mut rules: Vec<Rule> = new_rules.into_iter().collect();
    rules.sort_by(|a, b| a.head.pred.cmp(&b.head.pred).then(a.cmp(b)));
    let out = Sid::new(rules, sid.kappa, true).expect("variants of a valid system are valid");
    (out, variants)
}

/// Name of the variant of `p` allocating exactly `a` (1-based in the name).
pub fn variant_name(p: &Pred, a: &BTreeSet<usize>) -> Pred {
    let inner: Vec<String> = a.iter().map(|i| format!("{}", i + 1)).collect();
    Pred::new(&format!("{}@{{{}}}", p, inner.join(",")))
}
