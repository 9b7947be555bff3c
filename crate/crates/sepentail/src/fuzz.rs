//! Random pc-SIDs and queries.
//!
//! Rule templates guarantee the structural conditions: every body has one
//! points-to atom rooted at the first parameter, every existential is a
//! target of it, and every called predicate is rooted at an existential.
//! As every predicate allocates its first argument, existentials end up
//! allocated.  Every predicate has a call-free rule.

use rand::seq::SliceRandom;
use rand::Rng;
use sepentail_core::problem::Problem;
use sepentail_core::{Formula, Pred, PredAtom, Rule, Sid, TheoryTag, Var};

#[derive(Clone, Copy, Debug)]
pub struct FuzzParams {
    pub max_preds: usize,
    pub max_rules: usize,
    pub max_kappa: usize,
    pub max_arity: usize,
    pub max_free: usize,
    /// Allow predicates to call themselves (directly or not).
    pub recursive: bool,
}

impl Default for FuzzParams {
    fn default() -> FuzzParams {
        FuzzParams { max_preds: 3, max_rules: 4, max_kappa: 2, max_arity: 3, max_free: 4, recursive: true }
    }
}

const PRED_NAMES: [&str; 4] = ["p", "q", "r", "s"];
const FREE_NAMES: [&str; 4] = ["a", "b", "c", "d"];

fn v(s: &str) -> Var {
    Var::user(s)
}

fn pick<'a, R: Rng, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty choice")
}

/// A rule system respecting `params`.
pub fn random_sid<R: Rng>(rng: &mut R, params: &FuzzParams) -> Sid {
    loop {
        if let Ok(sid) = try_random_sid(rng, params) {
            return sid;
        }
    }
}

fn try_random_sid<R: Rng>(rng: &mut R, params: &FuzzParams) -> Result<Sid, sepentail_core::SidError> {
    let np = rng.gen_range(1..=params.max_preds.min(params.max_rules).min(PRED_NAMES.len()));
    let kappa = rng.gen_range(1..=params.max_kappa);
    let arities: Vec<usize> = (0..np).map(|_| rng.gen_range(1..=params.max_arity)).collect();
    let heads: Vec<PredAtom> = (0..np)
        .map(|i| {
            PredAtom::new(Pred::new(PRED_NAMES[i]), (1..=arities[i]).map(|j| v(&format!("x{}", j))).collect())
        })
        .collect();
    let mut rules = Vec::new();
    for h in &heads {
        let targets = (0..kappa).map(|_| pick(rng, &h.args).clone()).collect();
        rules.push(Rule { head: h.clone(), exvars: Vec::new(), body: vec![Formula::pto(h.args[0].clone(), targets)] });
    }
    let extra = rng.gen_range(0..=params.max_rules - np);
    for _ in 0..extra {
        let i = rng.gen_range(0..np);
        let callees: Vec<usize> = if params.recursive { (0..np).collect() } else { (i + 1..np).collect() };
        if callees.is_empty() {
            continue;
        }
        let h = &heads[i];
        let m = rng.gen_range(1..=kappa.min(2));
        let ex: Vec<Var> = (1..=m).map(|j| v(&format!("z{}", j))).collect();
        let mut pool = h.args.clone();
        pool.extend(ex.iter().cloned());
        let mut targets: Vec<Var> = (0..kappa).map(|_| pick(rng, &pool).clone()).collect();
        let mut slots: Vec<usize> = (0..kappa).collect();
        slots.shuffle(rng);
        for (z, s) in ex.iter().zip(slots) {
            targets[s] = z.clone();
        }
        let mut body = vec![Formula::pto(h.args[0].clone(), targets)];
        for z in &ex {
            let q = *pick(rng, &callees);
            let mut args = vec![z.clone()];
            args.extend((1..arities[q]).map(|_| pick(rng, &pool).clone()));
            body.push(Formula::Pred(PredAtom::new(heads[q].pred.clone(), args)));
        }
        rules.push(Rule { head: h.clone(), exvars: ex, body });
    }
    Sid::new(rules, kappa, false)
}

fn random_atom<R: Rng>(rng: &mut R, sid: &Sid, root: &Var, pool: &[Var]) -> Formula {
    let preds: Vec<&Pred> = sid.preds().collect();
    let p = (*pick(rng, &preds)).clone();
    let n = sid.arity[&p];
    let mut args = vec![root.clone()];
    args.extend((1..n).map(|_| pick(rng, pool).clone()));
    Formula::Pred(PredAtom::new(p, args))
}

/// A symbolic heap of one or two predicate atoms with distinct roots over
/// `free`, optionally with one existential.
fn random_heap<R: Rng>(rng: &mut R, sid: &Sid, free: &[Var], allow_exists: bool) -> Formula {
    let n = rng.gen_range(1..=2.min(free.len().max(1)));
    let quantify = allow_exists && rng.gen_bool(0.3);
    let e = v("e");
    let mut pool = free.to_vec();
    if quantify {
        pool.push(e.clone());
    }
    let mut roots = free.to_vec();
    roots.shuffle(rng);
    let mut atoms: Vec<Formula> = roots.iter().take(n).map(|r| random_atom(rng, sid, r, &pool)).collect();
    if quantify && rng.gen_bool(0.5) {
        atoms.push(random_atom(rng, sid, &e, &pool));
    }
    let body = Formula::sep(atoms);
    if quantify && body.free_vars().contains(&e) {
        Formula::exists(vec![e], body)
    } else {
        body
    }
}

/// A random empty-theory problem.
pub fn random_problem<R: Rng>(rng: &mut R, params: &FuzzParams) -> Problem {
    let sid = random_sid(rng, params);
    let nf = rng.gen_range(1..=params.max_free.min(FREE_NAMES.len()));
    let free: Vec<Var> = FREE_NAMES[..nf].iter().map(|s| v(s)).collect();
    let lhs = random_heap(rng, &sid, &free, false);
    let nr = rng.gen_range(1..=2);
    let rhs = (0..nr).map(|_| random_heap(rng, &sid, &free, true)).collect();
    Problem { theory: TheoryTag::Empty, sid, lhs, rhs }
}

/// A valid problem whose left-hand side is left-terminating: the RHS
/// predicate is a renamed copy of the LHS predicate, extended with extra
/// rules.
pub fn random_left_terminating_valid<R: Rng>(rng: &mut R, params: &FuzzParams) -> Problem {
    let params = FuzzParams { recursive: false, max_preds: params.max_preds.min(2), ..*params };
    loop {
        let sid = random_sid(rng, &params);
        let preds: Vec<Pred> = sid.preds().cloned().collect();
        let root = pick(rng, &preds).clone();
        let copy = |p: &Pred| Pred::new(&format!("{}c", p.as_str()));
        let rename = |f: &Formula| match f {
            Formula::Pred(a) => Formula::Pred(PredAtom::new(copy(&a.pred), a.args.clone())),
            other => other.clone(),
        };
        let mut rules = sid.rules.clone();
        for r in &sid.rules {
            rules.push(Rule { head: PredAtom::new(copy(&r.head.pred), r.head.args.clone()), exvars: r.exvars.clone(), body: r.body.iter().map(rename).collect() });
        }
        // one extra alternative for the copy of the queried predicate
        let n = sid.arity[&root];
        let head = PredAtom::new(copy(&root), (1..=n).map(|j| v(&format!("x{}", j))).collect());
        let targets = (0..sid.kappa).map(|_| pick(rng, &head.args).clone()).collect();
        rules.push(Rule { head: head.clone(), exvars: Vec::new(), body: vec![Formula::pto(head.args[0].clone(), targets)] });
        let Ok(full) = Sid::new(rules, sid.kappa, false) else { continue };
        let nf = rng.gen_range(n.min(params.max_free)..=params.max_free).max(1);
        let free: Vec<Var> = FREE_NAMES[..nf.min(FREE_NAMES.len())].iter().map(|s| v(s)).collect();
        let args: Vec<Var> = std::iter::once(free[0].clone()).chain((1..n).map(|_| pick(rng, &free).clone())).collect();
        let lhs = Formula::Pred(PredAtom::new(root.clone(), args.clone()));
        let rhs = vec![Formula::Pred(PredAtom::new(copy(&root), args))];
        if full.is_left_terminating(&lhs) {
            return Problem { theory: TheoryTag::Empty, sid: full, lhs, rhs };
        }
    }
}
