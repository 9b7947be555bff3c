//! Proof search.
//!
//! The search follows a fixed priority: axioms, deletion of redundant
//! right-hand formulas, the invertible rules (Sk, TS, TD, HF, HD, UL), then a
//! dispatch on the shape of the left-hand side.  A single points-to is
//! handled by UR/HF and the axioms; two or more spatial atoms by ED followed
//! by SC, whose index sets are computed by proving sub-sequents.  A sequent
//! α-equivalent to an ancestor closes the branch with a back-edge.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::calculus::{self, find_ax_r, hf_applicable, lhs_atoms, redundant_rhs, units, Choice, Ctx};
use crate::cert::{CertNode, Certificate, Step};
use crate::formula::{Formula, TheoryAtom};
use crate::sequent::Sequent;
use crate::sid::roots_of;
use crate::theory::{self, TheoryTag};
use crate::var::Var;

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// UL only on a left-hand side made of a single predicate atom.
    Terminating,
    /// UL whenever the left-hand side contains a predicate atom.
    General,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Terminating => "terminating",
            Strategy::General => "general",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub fuel: u64,
    pub strategy: Strategy,
    pub backedges: bool,
    pub max_depth: usize,
    /// Upper bound on the number of (rhs, split) pairs SC works with.
    pub sc_max_pairs: usize,
    /// Sequents with more right-hand formulas end the search as exhausted.
    pub max_rhs: usize,
    /// Called on every sequent the search visits, with its depth.
    pub trace: Option<fn(&Sequent, usize)>,
}

impl Default for Config {
    fn default() -> Config {
        Config {
            fuel: DEFAULT_FUEL,
            strategy: Strategy::Terminating,
            backedges: true,
            max_depth: 300,
            sc_max_pairs: 10,
            max_rhs: 128,
            trace: None,
        }
    }
}

/// A proof tree under construction.  Back-edges name their target by its
/// canonical form; the nearest ancestor with that form is used.
#[derive(Clone, Debug)]
pub enum Tree {
    Node(Sequent, Choice, Vec<Tree>),
    Back(Sequent, Sequent),
}

impl Tree {
    pub fn sequent(&self) -> &Sequent {
        match self {
            Tree::Node(s, _, _) | Tree::Back(s, _) => s,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Proved(Tree),
    /// Search failed; carries a sequent on which no rule applied.
    Failed(Sequent),
    /// Fuel or depth exhausted.
    Exhausted,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub steps: u64,
    pub distinct: usize,
}

enum Res {
    Proved(Tree, BTreeSet<Sequent>),
    Failed(Sequent),
    Exhausted,
}

pub struct Prover<'a> {
    ctx: Ctx<'a>,
    cfg: Config,
    fuel: u64,
    steps: u64,
    path: Vec<Sequent>,
    seen: BTreeSet<Sequent>,
    proved: BTreeMap<Sequent, Tree>,
    failed: BTreeMap<Sequent, Sequent>,
}

impl<'a> Prover<'a> {
    pub fn new(ctx: Ctx<'a>, cfg: Config) -> Prover<'a> {
        Prover {
            ctx,
            cfg,
            fuel: cfg.fuel,
            steps: 0,
            path: Vec::new(),
            seen: BTreeSet::new(),
            proved: BTreeMap::new(),
            failed: BTreeMap::new(),
        }
    }

    pub fn stats(&self) -> SearchStats {
        SearchStats {
            steps: self.steps,
            distinct: self.seen.len(),
        }
    }

    pub fn prove(&mut self, s: &Sequent) -> Outcome {
        self.path.clear();
        match self.search(s.clone()) {
            Res::Proved(t, _) => Outcome::Proved(t),
            Res::Failed(x) => Outcome::Failed(x),
            Res::Exhausted => Outcome::Exhausted,
        }
    }

    fn search(&mut self, s: Sequent) -> Res {
        if self.fuel == 0 || self.path.len() >= self.cfg.max_depth || s.rhs.len() > self.cfg.max_rhs {
            return Res::Exhausted;
        }
        if let Some(f) = self.cfg.trace {
            f(&s, self.path.len());
        }
        let c = s.alpha_canonical();
        self.seen.insert(c.clone());
        if self.cfg.backedges && self.path.contains(&c) {
            let mut open = BTreeSet::new();
            open.insert(c.clone());
            return Res::Proved(Tree::Back(s, c), open);
        }
        if let Some(t) = self.proved.get(&s) {
            return Res::Proved(t.clone(), BTreeSet::new());
        }
        if let Some(x) = self.failed.get(&c) {
            return Res::Failed(x.clone());
        }
        self.path.push(c.clone());
        let r = self.expand(&s);
        self.path.pop();
        match &r {
            Res::Proved(t, open) if open.is_empty() => {
                self.proved.insert(s, t.clone());
            }
            Res::Failed(x) => {
                self.failed.insert(c, x.clone());
            }
            _ => {}
        }
        r
    }

    /// Applies `c` and proves every premise (no alternatives).
    fn step(&mut self, s: &Sequent, c: Choice) -> Res {
        let premises = match calculus::apply(self.ctx, s, &c) {
            Ok(p) => p,
            Err(e) => panic!("prover built an invalid {} instance on {}: {}", c.name(), s, e),
        };
        self.fuel = self.fuel.saturating_sub(1);
        self.steps += 1;
        let mut kids = Vec::new();
        let mut open = BTreeSet::new();
        for p in premises {
            match self.search(p) {
                Res::Proved(t, o) => {
                    open.extend(o);
                    kids.push(t);
                }
                other => return other,
            }
        }
        self.close(s, c, kids, open)
    }

    fn close(&self, s: &Sequent, c: Choice, kids: Vec<Tree>, mut open: BTreeSet<Sequent>) -> Res {
        if let Some(top) = self.path.last() {
            open.remove(top);
        }
        Res::Proved(Tree::Node(s.clone(), c, kids), open)
    }

    fn axiom(&mut self, s: &Sequent, c: Choice) -> Res {
        debug_assert!(calculus::apply(self.ctx, s, &c).is_ok());
        self.steps += 1;
        Res::Proved(Tree::Node(s.clone(), c, Vec::new()), BTreeSet::new())
    }

    fn expand(&mut self, s: &Sequent) -> Res {
        let ctx = self.ctx;
        let Some(atoms) = lhs_atoms(s) else {
            return self.step(s, Choice::Sk);
        };
        let spatial: Vec<usize> = (0..atoms.len()).filter(|i| atoms[*i].is_spatial_atom()).collect();
        let thy: Vec<usize> = (0..atoms.len()).filter(|i| matches!(atoms[*i], Formula::Theory(_))).collect();

        // axioms
        if !thy.is_empty() && calculus::apply(ctx, s, &Choice::AxTC).is_ok() {
            return self.axiom(s, Choice::AxTC);
        }
        for (a, &i) in spatial.iter().enumerate() {
            for &j in &spatial[a + 1..] {
                let c = Choice::AxD { i, j };
                if calculus::apply(ctx, s, &c).is_ok() {
                    return self.axiom(s, c);
                }
            }
        }
        for k in 0..s.rhs.len() {
            if let Some(sigma) = find_ax_r(s, k) {
                return self.axiom(s, Choice::AxR { rhs: k, sigma });
            }
        }
        if spatial.is_empty() && calculus::apply(ctx, s, &Choice::AxEH).is_ok() {
            return self.axiom(s, Choice::AxEH);
        }

        let red = redundant_rhs(ctx, s);
        if !red.is_empty() {
            return self.step(s, Choice::W { rhs: red });
        }
        if s.rhs.is_empty() {
            return Res::Failed(s.clone());
        }

        // theory rules
        let fv = s.free_vars();
        for &i in &thy {
            let rest: Vec<TheoryAtom> = thy
                .iter()
                .filter(|j| **j != i)
                .filter_map(|j| match &atoms[*j] {
                    Formula::Theory(t) => Some(t.clone()),
                    _ => None,
                })
                .collect();
            let Formula::Theory(a) = &atoms[i] else { unreachable!() };
            if theory::entails_injective(&rest, core::slice::from_ref(a), ctx.theory, &fv) == Ok(true) {
                return self.step(s, Choice::TS { drop: i });
            }
        }
        for (k, f) in s.rhs.iter().enumerate() {
            let (pre, body) = f.prefix();
            for (i, a) in body.conjuncts().iter().enumerate() {
                if let Formula::Theory(t) = a {
                    if !t.vars().iter().any(|v| pre.contains(v)) && theory::negate_atom(t, ctx.theory).is_some() {
                        return self.step(s, Choice::TD { rhs: k, atom: i });
                    }
                }
            }
        }

        for k in 0..s.rhs.len() {
            if let Some(src) = hf_applicable(s, k) {
                return self.step(s, Choice::HF { rhs: k, src });
            }
        }
        let alloc = ctx.sid.alloc_of(&s.lhs);
        for (k, f) in s.rhs.iter().enumerate() {
            let roots = roots_of(f).main;
            if let Some(x) = alloc.iter().find(|x| !roots.contains(x)) {
                return self.step(s, Choice::HD { rhs: k, x: x.clone() });
            }
        }

        match spatial.len() {
            0 => Res::Failed(s.clone()),
            1 => match &atoms[spatial[0]] {
                Formula::Pred(_) => self.step(s, Choice::UL { atom: spatial[0] }),
                _ => {
                    let lfv = s.lhs.free_vars();
                    for (k, f) in s.rhs.iter().enumerate() {
                        let (pre, body) = f.prefix();
                        for (i, a) in body.conjuncts().iter().enumerate() {
                            let root = match a {
                                Formula::Pred(p) => p.root().cloned(),
                                Formula::Pu(pu) => pu.main_root(),
                                _ => None,
                            };
                            if root.is_some_and(|r| lfv.contains(&r) && !pre.contains(&r)) {
                                return self.step(s, Choice::UR { rhs: k, atom: i });
                            }
                        }
                    }
                    Res::Failed(s.clone())
                }
            },
            _ => {
                if self.cfg.strategy == Strategy::General {
                    if let Some(i) = spatial.iter().find(|i| matches!(atoms[**i], Formula::Pred(_))) {
                        return self.step(s, Choice::UL { atom: *i });
                    }
                }
                self.split(s, &atoms, &spatial)
            }
        }
    }

    /// Tries every single spatial atom as the left part of SC.
    fn split(&mut self, s: &Sequent, atoms: &[Formula], spatial: &[usize]) -> Res {
        let mut order: Vec<usize> = spatial.to_vec();
        order.sort_by_key(|i| !matches!(atoms[*i], Formula::PointsTo(..)));
        let mut stuck = s.clone();
        for i in order {
            let afv = atoms[i].free_vars();
            let mut left: Vec<usize> = alloc::vec![i];
            for (j, a) in atoms.iter().enumerate() {
                if let Formula::Theory(t) = a {
                    if t.vars().iter().all(|v| afv.contains(*v)) {
                        left.push(j);
                    }
                }
            }
            left.sort();
            match self.ed_chain(s, &left) {
                // without theory atoms every decomposition of a valid
                // sequent leads to a proof, so one attempt is enough
                Res::Failed(x) if self.ctx.theory != TheoryTag::Empty => stuck = x,
                other => return other,
            }
        }
        Res::Failed(stuck)
    }

    /// Applies ED until no right-hand formula has a useful decomposition,
    /// then SC.  The LHS (and thus `left`) is unchanged along the chain.
    fn ed_chain(&mut self, s: &Sequent, left: &[usize]) -> Res {
        if self.fuel == 0 || s.rhs.len() > self.cfg.max_rhs {
            return Res::Exhausted;
        }
        for (k, f) in s.rhs.iter().enumerate() {
            let (pre, body) = f.prefix();
            if pre.is_empty() || body.conjuncts().len() < 2 {
                continue;
            }
            let x = pre.last().unwrap().clone();
            let decomps = ed_decompositions(self.ctx, f, &x);
            if decomps.is_empty() {
                continue;
            }
            let c = Choice::ED { rhs: k, x, left: left.to_vec(), decomps };
            let premises = calculus::apply(self.ctx, s, &c).expect("ED instance");
            self.fuel = self.fuel.saturating_sub(1);
            self.steps += 1;
            let p = premises.into_iter().next().unwrap();
            return match self.ed_chain(&p, left) {
                Res::Proved(t, open) => self.close(s, c, alloc::vec![t], open),
                other => other,
            };
        }
        let red = redundant_rhs(self.ctx, s);
        if !red.is_empty() {
            let c = Choice::W { rhs: red };
            let p = calculus::apply(self.ctx, s, &c).expect("W instance").remove(0);
            self.steps += 1;
            return match self.ed_chain(&p, left) {
                Res::Proved(t, open) => self.close(s, c, alloc::vec![t], open),
                other => other,
            };
        }
        self.sc(s, left)
    }

    fn sc(&mut self, s: &Sequent, left: &[usize]) -> Res {
        let ctx = self.ctx;
        let atoms = lhs_atoms(s).unwrap();
        let lset: BTreeSet<usize> = left.iter().cloned().collect();
        let (mut a1, mut a2) = (Vec::new(), Vec::new());
        for (i, a) in atoms.iter().enumerate() {
            if lset.contains(&i) {
                a1.push(a.clone())
            } else {
                a2.push(a.clone())
            }
        }
        let (phi, phi2) = (Formula::sep(a1), Formula::sep(a2));
        let sides = [
            (ctx.sid.alloc_of(&phi), phi.free_vars()),
            (ctx.sid.alloc_of(&phi2), phi2.free_vars()),
        ];
        if sides[0].0.is_empty() || sides[1].0.is_empty() {
            return Res::Failed(s.clone());
        }
        // A unit may go to a side when its roots are allocated (and, for
        // formulas without theory content, its auxiliary roots are free)
        // there; otherwise that side would drop it as root-redundant.
        let fits = |u: &Formula, side: usize| {
            let r = roots_of(u);
            let strict = calculus::is_empty_constrained(ctx.sid, u);
            r.main.iter().all(|v| sides[side].0.contains(v)) && (!strict || r.aux.iter().all(|v| sides[side].1.contains(v)))
        };
        let mut entries: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut pairs: Vec<(Formula, Formula)> = Vec::new();
        for (k, f) in s.rhs.iter().enumerate() {
            let us = units(f);
            let mut combos: Vec<Vec<usize>> = alloc::vec![Vec::new()];
            for (ui, u) in us.iter().enumerate() {
                let (l, r) = (fits(u, 0), fits(u, 1));
                let opts: &[bool] = match (l, r) {
                    (true, false) => &[true],
                    (false, true) => &[false],
                    (true, true) => &[true, false],
                    (false, false) => &[true],
                };
                let mut next = Vec::new();
                for c in &combos {
                    for &b in opts {
                        let mut c2 = c.clone();
                        if b {
                            c2.push(ui);
                        }
                        next.push(c2);
                    }
                }
                combos = next;
                if combos.len() > 16 {
                    return Res::Exhausted;
                }
            }
            for m in combos {
                let (mut x, mut y) = (Vec::new(), Vec::new());
                for (i, u) in us.iter().enumerate() {
                    if m.contains(&i) {
                        x.push(u.clone())
                    } else {
                        y.push(u.clone())
                    }
                }
                pairs.push((calculus::prenex(&Formula::sep(x)), calculus::prenex(&Formula::sep(y))));
                entries.push((k, m));
            }
        }
        let n = entries.len();
        // search domain: one entry per distinct pair
        let mut dom: Vec<usize> = Vec::new();
        for e in 0..n {
            if !dom.iter().any(|d| pairs[*d] == pairs[e]) {
                dom.push(e);
            }
        }
        let canon = s.alpha_canonical();
        self.path.push(canon.clone());
        let r = self.sc_families(&phi, &phi2, &pairs, &dom);
        self.path.pop();
        let (ls, rs) = match r {
            Ok(x) => x,
            Err(r) => return r,
        };
        let c = Choice::SC {
            left: left.to_vec(),
            entries,
            i_sets: ls.iter().map(|(set, _, _)| set.clone()).collect(),
            j_sets: rs.iter().map(|(set, _, _)| set.clone()).collect(),
        };
        debug_assert!(calculus::apply(ctx, s, &c).is_ok(), "SC instance on {}", s);
        self.fuel = self.fuel.saturating_sub(1);
        self.steps += 1;
        let mut open = BTreeSet::new();
        let mut kids = Vec::new();
        for (_, t, o) in ls.into_iter().chain(rs) {
            open.extend(o);
            kids.push(t);
        }
        // the conclusion itself was on the path while its premises were proved
        open.remove(&canon);
        self.close(s, c, kids, open)
    }

    /// Computes minimal valid index sets for the two sides of SC.  Entries
    /// outside `dom` never occur in a set.  Singletons are decided first; the
    /// covering condition is then only open on sets `X` that contain every
    /// right-valid singleton and no left-valid one.
    #[allow(clippy::type_complexity)]
    fn sc_families(
        &mut self,
        phi: &Formula,
        phi2: &Formula,
        pairs: &[(Formula, Formula)],
        dom: &[usize],
    ) -> Result<(Vec<Proved>, Vec<Proved>), Res> {
        let mut ls: Vec<Proved> = Vec::new();
        let mut rs: Vec<Proved> = Vec::new();
        let mut failed_l: Vec<Vec<usize>> = Vec::new();
        let mut failed_r: Vec<Vec<usize>> = Vec::new();
        let mut l1 = BTreeSet::new();
        let mut r1 = BTreeSet::new();
        for &e in dom {
            match self.sub(phi, pairs, &[e], true)? {
                Some(p) => {
                    ls.push(p);
                    l1.insert(e);
                }
                None => failed_l.push(alloc::vec![e]),
            }
            match self.sub(phi2, pairs, &[e], false)? {
                Some(p) => {
                    rs.push(p);
                    r1.insert(e);
                }
                None => failed_r.push(alloc::vec![e]),
            }
            if l1.contains(&e) && r1.contains(&e) {
                // {e} on both sides covers everything
                ls.retain(|p| p.0 == [e]);
                rs.retain(|p| p.0 == [e]);
                return Ok((ls, rs));
            }
        }
        let must: Vec<usize> = r1.iter().cloned().collect();
        let free: Vec<usize> = dom.iter().filter(|e| !l1.contains(*e) && !r1.contains(*e)).cloned().collect();
        if free.len() > self.cfg.sc_max_pairs {
            return Err(Res::Exhausted);
        }
        let full: u32 = (1u32 << free.len()) - 1;
        let mut masks: Vec<u32> = (0..=full).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let contains = |big: &[usize], small: &[usize]| small.iter().all(|i| big.contains(i));
        for m in masks {
            let mut x: Vec<usize> = must.clone();
            x.extend(bits(m).map(|j| free[j]));
            x.sort();
            let comp: Vec<usize> = dom.iter().filter(|e| !x.contains(e)).cloned().collect();
            if ls.iter().any(|p| contains(&x, &p.0)) || rs.iter().any(|p| contains(&comp, &p.0)) {
                continue;
            }
            if !failed_l.iter().any(|f| contains(f, &x)) {
                match self.sub(phi, pairs, &x, true)? {
                    Some(p) => {
                        ls.push(p);
                        continue;
                    }
                    None => failed_l.push(x.clone()),
                }
            }
            if !failed_r.iter().any(|f| contains(f, &comp)) {
                match self.sub(phi2, pairs, &comp, false)? {
                    Some(p) => {
                        rs.push(p);
                        continue;
                    }
                    None => failed_r.push(comp.clone()),
                }
            }
            return Err(Res::Failed(Sequent::new(phi.clone(), x.iter().map(|j| pairs[*j].0.clone()).collect())));
        }
        let minimal = |v: Vec<Proved>| -> Vec<Proved> {
            let sets: Vec<Vec<usize>> = v.iter().map(|p| p.0.clone()).collect();
            v.into_iter()
                .filter(|p| !sets.iter().any(|o| o != &p.0 && contains(&p.0, o)))
                .collect()
        };
        Ok((minimal(ls), minimal(rs)))
    }

    /// Proves `side ⊢ {pairs[j].0 or .1 | j ∈ set}`.
    fn sub(&mut self, side: &Formula, pairs: &[(Formula, Formula)], set: &[usize], left: bool) -> Result<Option<Proved>, Res> {
        let rhs = set
            .iter()
            .map(|j| if left { pairs[*j].0.clone() } else { pairs[*j].1.clone() })
            .collect();
        match self.search(Sequent::new(side.clone(), rhs)) {
            Res::Proved(t, o) => Ok(Some((set.to_vec(), t, o))),
            Res::Failed(_) => Ok(None),
            Res::Exhausted => Err(Res::Exhausted),
        }
    }
}

type Proved = (Vec<usize>, Tree, BTreeSet<Sequent>);

fn bits(m: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |i| m & (1 << i) != 0)
}

/// Decompositions of the body of `f` for ED on the binder `x`: conjuncts
/// rooted at `x` stay under the quantifier, conjuncts without `x` leave it,
/// the others are enumerated.
pub fn ed_decompositions(ctx: Ctx<'_>, f: &Formula, x: &Var) -> Vec<Vec<usize>> {
    let (_, body) = f.prefix();
    let conj = body.conjuncts();
    let mut forced = Vec::new();
    let mut free = Vec::new();
    for (i, c) in conj.iter().enumerate() {
        if !c.free_vars().contains(x) {
            continue;
        }
        let r = roots_of(c);
        if r.main.contains(x) || r.aux.contains(x) {
            forced.push(i);
        } else {
            free.push(i);
        }
    }
    if free.len() > 10 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for m in 0u32..(1 << free.len()) {
        let mut d = forced.clone();
        d.extend(bits(m).map(|j| free[j]));
        d.sort();
        let outside: Vec<Formula> = conj.iter().enumerate().filter(|(i, _)| !d.contains(i)).map(|(_, c)| c.clone()).collect();
        if outside.is_empty() {
            continue;
        }
        if ctx.sid.vart_of(&Formula::sep(outside)).contains(x) {
            continue;
        }
        out.push(d);
    }
    out
}

/// Flattens proof trees (one per case) into a certificate.
pub fn to_certificate(trees: &[Tree]) -> Certificate {
    let mut cert = Certificate::default();
    for t in trees {
        let mut path: Vec<(Sequent, usize)> = Vec::new();
        let id = flatten(t, &mut cert.nodes, &mut path);
        cert.roots.push(id);
    }
    cert
}

fn flatten(t: &Tree, nodes: &mut Vec<CertNode>, path: &mut Vec<(Sequent, usize)>) -> usize {
    let id = nodes.len();
    match t {
        Tree::Back(s, target) => {
            let tid = path
                .iter()
                .rev()
                .find(|(c, _)| c == target)
                .map(|(_, i)| *i)
                .expect("back-edge target on the path");
            nodes.push(CertNode {
                sequent: s.clone(),
                step: Step::Backedge(tid),
            });
        }
        Tree::Node(s, c, kids) => {
            nodes.push(CertNode {
                sequent: s.clone(),
                step: Step::Rule(c.clone(), Vec::new()),
            });
            path.push((s.alpha_canonical(), id));
            let mut ids = Vec::new();
            for k in kids {
                ids.push(flatten(k, nodes, path));
            }
            path.pop();
            nodes[id].step = Step::Rule(c.clone(), ids);
        }
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert;
    use crate::formula::PredAtom;
    use crate::sid::{Rule, Sid};
    use crate::var::Pred;
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

    fn pq() -> Sid {
        Sid::new(
            vec![
                rule(pa("p", &["x"]), &["y", "z"], vec![pto("x", &["y", "z"]), pf("p", &["y"]), pf("p", &["z"])]),
                rule(pa("p", &["x"]), &[], vec![pto("x", &["x", "x"])]),
                rule(pa("q", &["x", "u"]), &["y", "z"], vec![pto("x", &["y", "z"]), pf("p", &["y"]), pf("q", &["z", "u"])]),
                rule(pa("q", &["x", "u"]), &[], vec![pto("x", &["u", "u"])]),
            ],
            2,
            false,
        )
        .unwrap()
    }

    fn ls() -> Sid {
        Sid::new(
            vec![
                rule(pa("ls", &["x", "y"]), &[], vec![pto("x", &["y"])]),
                rule(pa("ls", &["x", "y"]), &["z"], vec![pto("x", &["z"]), pf("ls", &["z", "y"])]),
            ],
            1,
            false,
        )
        .unwrap()
    }

    fn run<'a>(sid: &'a Sid, s: &Sequent, cfg: Config) -> (Outcome, Prover<'a>) {
        let ctx = Ctx { sid, theory: TheoryTag::Empty };
        let mut p = Prover::new(ctx, cfg);
        let o = p.prove(s);
        (o, p)
    }

    #[test]
    fn cyclic_proof_for_p_q() {
        let sid = pq();
        let s = Sequent::new(pf("p", &["x"]), vec![Formula::exists(vec![v("u")], pf("q", &["x", "u"]))]);
        let (o, _) = run(&sid, &s, Config::default());
        let Outcome::Proved(t) = o else { panic!("{:?}", o) };
        let c = to_certificate(&[t]);
        assert!(c.backedges() >= 1);
        let ctx = Ctx { sid: &sid, theory: TheoryTag::Empty };
        cert::verify(ctx, &c, &[s]).unwrap();
    }

    #[test]
    fn list_segment_composition() {
        let sid = ls();
        let s = Sequent::new(
            Formula::sep(vec![pf("ls", &["x", "y"]), pf("ls", &["y", "z"])]),
            vec![Formula::exists(vec![v("u")], Formula::sep(vec![pf("ls", &["x", "u"]), pf("ls", &["u", "z"])]))],
        );
        let (o, _) = run(&sid, &s, Config::default());
        let Outcome::Proved(t) = o else { panic!("{:?}", o) };
        let ctx = Ctx { sid: &sid, theory: TheoryTag::Empty };
        cert::verify(ctx, &to_certificate(&[t]), &[s]).unwrap();
    }

    #[test]
    fn invalid_sequent_fails() {
        let sid = ls();
        // a two-cell list is not a single cell
        let s = Sequent::new(pf("ls", &["x", "y"]), vec![pto("x", &["y"])]);
        let (o, _) = run(&sid, &s, Config::default());
        assert!(matches!(o, Outcome::Failed(_)), "{:?}", o);
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let sid = pq();
        let s = Sequent::new(pf("p", &["x"]), vec![Formula::exists(vec![v("u")], pf("q", &["x", "u"]))]);
        let cfg = Config { fuel: 2, ..Config::default() };
        let (o, p) = run(&sid, &s, cfg);
        assert!(matches!(o, Outcome::Exhausted));
        assert!(p.stats().steps <= 3);
    }
}
