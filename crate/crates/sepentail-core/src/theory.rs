//! Theory reasoning for the pure parts of symbolic heaps.
//!
//! Three theories are supported: the empty theory (only `false`), equality
//! (`=`, `!=`) and the integer order (`=`, `!=`, `<=`, `<`, `0 <=`).  All
//! of them are decided by one engine over integer difference constraints;
//! disequalities are split lazily into `<` or `>`, which is exact because
//! equality-only formulas cannot tell an infinite domain from the integers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::formula::TheoryAtom;
use crate::var::Var;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TheoryTag {
    Empty,
    Eq,
    NatOrder,
}

impl TheoryTag {
    pub fn name(self) -> &'static str {
        match self {
            TheoryTag::Empty => "empty",
            TheoryTag::Eq => "eq",
            TheoryTag::NatOrder => "natorder",
        }
    }

    pub fn parse(s: &str) -> Option<TheoryTag> {
        match s {
            "empty" => Some(TheoryTag::Empty),
            "eq" => Some(TheoryTag::Eq),
            "natorder" => Some(TheoryTag::NatOrder),
            _ => None,
        }
    }

    pub fn supports(self, a: &TheoryAtom) -> bool {
        match (self, a) {
            (_, TheoryAtom::False) => true,
            (TheoryTag::Empty, _) => false,
            (TheoryTag::Eq, TheoryAtom::Eq(..) | TheoryAtom::Ne(..)) => true,
            (TheoryTag::Eq, _) => false,
            (TheoryTag::NatOrder, _) => true,
        }
    }
}

impl fmt::Display for TheoryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnsupportedAtom(pub TheoryAtom);

/// Negation of a single atom, when it is again an atom of the theory.
pub fn negate_atom(a: &TheoryAtom, theory: TheoryTag) -> Option<TheoryAtom> {
    let r = match a {
        TheoryAtom::Eq(x, y) => TheoryAtom::ne(x.clone(), y.clone()),
        TheoryAtom::Ne(x, y) => TheoryAtom::eq(x.clone(), y.clone()),
        TheoryAtom::Le(x, y) => TheoryAtom::Lt(y.clone(), x.clone()),
        TheoryAtom::Lt(x, y) => TheoryAtom::Le(y.clone(), x.clone()),
        TheoryAtom::False | TheoryAtom::Nonneg(_) => return None,
    };
    if theory.supports(a) && theory.supports(&r) {
        Some(r)
    } else {
        None
    }
}

/// The fixed well-founded order used by theory simplification: fewer atoms
/// first, ties broken by the printed form of the sorted atom list.
pub fn ts_order_less(chi: &[TheoryAtom], chi2: &[TheoryAtom]) -> bool {
    if chi.len() != chi2.len() {
        return chi.len() < chi2.len();
    }
    printed(chi) < printed(chi2)
}

fn printed(chi: &[TheoryAtom]) -> String {
    let mut v: Vec<String> = chi.iter().map(|a| alloc::format!("{}", a)).collect();
    v.sort();
    v.join(" * ")
}

// ---------------------------------------------------------------------------
// Difference-constraint engine.

/// `v[a] - v[b] <= c`; node 0 is the constant zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Diff {
    a: usize,
    b: usize,
    c: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Lit {
    Diff(Diff),
    Ne(usize, usize),
    False,
}

#[derive(Clone, Debug, Default)]
struct Conj {
    diffs: Vec<Diff>,
    nes: Vec<(usize, usize)>,
    falsum: bool,
}

impl Conj {
    fn add(&mut self, l: &Lit) {
        match l {
            Lit::Diff(d) => self.diffs.push(*d),
            Lit::Ne(a, b) => self.nes.push((*a, *b)),
            Lit::False => self.falsum = true,
        }
    }
}

struct Indexer {
    idx: BTreeMap<Var, usize>,
}

impl Indexer {
    fn new() -> Indexer {
        Indexer { idx: BTreeMap::new() }
    }
    fn get(&mut self, v: &Var) -> usize {
        let n = self.idx.len() + 1;
        *self.idx.entry(v.clone()).or_insert(n)
    }
    fn size(&self) -> usize {
        self.idx.len() + 1
    }
}

fn lits_of(a: &TheoryAtom, ix: &mut Indexer) -> Vec<Lit> {
    match a {
        TheoryAtom::False => alloc::vec![Lit::False],
        TheoryAtom::Eq(x, y) => {
            let (i, j) = (ix.get(x), ix.get(y));
            alloc::vec![Lit::Diff(Diff { a: i, b: j, c: 0 }), Lit::Diff(Diff { a: j, b: i, c: 0 })]
        }
        TheoryAtom::Ne(x, y) => alloc::vec![Lit::Ne(ix.get(x), ix.get(y))],
        TheoryAtom::Le(x, y) => alloc::vec![Lit::Diff(Diff { a: ix.get(x), b: ix.get(y), c: 0 })],
        TheoryAtom::Lt(x, y) => alloc::vec![Lit::Diff(Diff { a: ix.get(x), b: ix.get(y), c: -1 })],
        TheoryAtom::Nonneg(x) => alloc::vec![Lit::Diff(Diff { a: 0, b: ix.get(x), c: 0 })],
    }
}

fn negate_lit(l: &Lit) -> Vec<Lit> {
    match l {
        Lit::Diff(d) => alloc::vec![Lit::Diff(Diff { a: d.b, b: d.a, c: -d.c - 1 })],
        Lit::Ne(a, b) => alloc::vec![
            Lit::Diff(Diff { a: *a, b: *b, c: 0 }),
            Lit::Diff(Diff { a: *b, b: *a, c: 0 })
        ],
        Lit::False => Vec::new(),
    }
}

const INF: i64 = i64::MAX / 4;

/// Shortest-path closure; `None` on a negative cycle.  `m[b][a]` bounds
/// `v[a] - v[b]`.
fn closure(n: usize, diffs: &[Diff]) -> Option<Vec<Vec<i64>>> {
    let mut m = alloc::vec![alloc::vec![INF; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 0;
    }
    for d in diffs {
        if d.c < m[d.b][d.a] {
            m[d.b][d.a] = d.c;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] == INF {
                continue;
            }
            for j in 0..n {
                if m[k][j] == INF {
                    continue;
                }
                let s = m[i][k] + m[k][j];
                if s < m[i][j] {
                    m[i][j] = s;
                }
            }
        }
    }
    if (0..n).any(|i| m[i][i] < 0) {
        None
    } else {
        Some(m)
    }
}

fn sat(n: usize, c: &Conj) -> bool {
    if c.falsum {
        return false;
    }
    let Some(m) = closure(n, &c.diffs) else {
        return false;
    };
    // first disequality not already settled by a strict bound
    for &(a, b) in &c.nes {
        if a == b {
            return false;
        }
        let ab = m[b][a]; // bound on v[a]-v[b]
        let ba = m[a][b];
        if ab < 0 || ba < 0 {
            continue;
        }
        if ab == 0 && ba == 0 {
            return false;
        }
        let mut left = c.clone();
        left.diffs.push(Diff { a, b, c: -1 });
        if sat(n, &left) {
            return true;
        }
        let mut right = c.clone();
        right.diffs.push(Diff { a: b, b: a, c: -1 });
        return sat(n, &right);
    }
    true
}

fn injectivity(ix: &mut Indexer, fvset: &BTreeSet<Var>, used: &BTreeSet<Var>, c: &mut Conj) {
    let vs: Vec<&Var> = fvset.iter().filter(|v| used.contains(*v)).collect();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            let (a, b) = (ix.get(vs[i]), ix.get(vs[j]));
            c.nes.push((a, b));
        }
    }
}

fn vars_of(atoms: &[TheoryAtom]) -> BTreeSet<Var> {
    atoms.iter().flat_map(|a| a.vars().into_iter().cloned()).collect()
}

fn check_support(atoms: &[TheoryAtom], theory: TheoryTag) -> Result<(), UnsupportedAtom> {
    for a in atoms {
        if !theory.supports(a) {
            return Err(UnsupportedAtom(a.clone()));
        }
    }
    Ok(())
}

/// Satisfiability of a conjunction; with `inj`, the variables of `inj` are
/// additionally required to be pairwise distinct.
pub fn satisfiable(chi: &[TheoryAtom], theory: TheoryTag, inj: Option<&BTreeSet<Var>>) -> Result<bool, UnsupportedAtom> {
    check_support(chi, theory)?;
    let mut ix = Indexer::new();
    let mut c = Conj::default();
    for a in chi {
        for l in lits_of(a, &mut ix) {
            c.add(&l);
        }
    }
    if let Some(fv) = inj {
        injectivity(&mut ix, fv, &vars_of(chi), &mut c);
    }
    Ok(sat(ix.size(), &c))
}

/// `chi |= xi` over all stores.
pub fn entails(chi: &[TheoryAtom], xi: &[TheoryAtom], theory: TheoryTag) -> Result<bool, UnsupportedAtom> {
    entails_disj(chi, &[(Vec::new(), xi.to_vec())], theory, None)
}

/// `chi * inj(fvset) |= xi`.
pub fn entails_injective(
    chi: &[TheoryAtom],
    xi: &[TheoryAtom],
    theory: TheoryTag,
    fvset: &BTreeSet<Var>,
) -> Result<bool, UnsupportedAtom> {
    entails_disj(chi, &[(Vec::new(), xi.to_vec())], theory, Some(fvset))
}

/// `chi (* inj) |= exists x1. xi1 \/ ... \/ exists xn. xin`.
pub fn entails_disj(
    chi: &[TheoryAtom],
    disjuncts: &[(Vec<Var>, Vec<TheoryAtom>)],
    theory: TheoryTag,
    inj: Option<&BTreeSet<Var>>,
) -> Result<bool, UnsupportedAtom> {
    check_support(chi, theory)?;
    for (_, xi) in disjuncts {
        check_support(xi, theory)?;
    }
    let mut ix = Indexer::new();
    let mut base = Conj::default();
    for a in chi {
        for l in lits_of(a, &mut ix) {
            base.add(&l);
        }
    }
    let mut used = vars_of(chi);
    for (ex, xi) in disjuncts {
        used.extend(vars_of(xi).into_iter().filter(|v| !ex.contains(v)));
    }
    if let Some(fv) = inj {
        injectivity(&mut ix, fv, &used, &mut base);
    }
    // Project every disjunct onto the free variables: a list of conjunctions
    // over free nodes, whose disjunction is equivalent to the disjunct.
    let mut projected: Vec<Vec<Lit>> = Vec::new();
    for (ex, xi) in disjuncts {
        let mut local = Indexer { idx: ix.idx.clone() };
        let mut lits = Vec::new();
        for a in xi {
            lits.extend(lits_of(a, &mut local));
        }
        let free_nodes = ix.size();
        let exn: BTreeSet<usize> = ex.iter().filter_map(|v| local.idx.get(v).cloned()).collect();
        // variables of xi outside `ex` that are new to `ix` are free too
        for v in local.idx.keys() {
            if !ex.contains(v) {
                ix.get(v);
            }
        }
        let remap: BTreeMap<usize, usize> = local
            .idx
            .iter()
            .filter(|(v, _)| !ex.contains(v))
            .map(|(v, i)| (*i, *ix.idx.get(v).unwrap()))
            .collect();
        let _ = free_nodes;
        for branch in project(local.size(), &lits, &exn) {
            let mapped = branch
                .into_iter()
                .map(|l| match l {
                    Lit::Diff(d) => Lit::Diff(Diff {
                        a: if d.a == 0 { 0 } else { remap[&d.a] },
                        b: if d.b == 0 { 0 } else { remap[&d.b] },
                        c: d.c,
                    }),
                    Lit::Ne(a, b) => Lit::Ne(remap[&a], remap[&b]),
                    Lit::False => Lit::False,
                })
                .collect();
            projected.push(mapped);
        }
    }
    Ok(!refutable(ix.size(), &base, &projected, 0))
}

/// Eliminates existential nodes from a conjunction, returning an equivalent
/// disjunction of conjunctions over the remaining nodes.
fn project(n: usize, lits: &[Lit], ex: &BTreeSet<usize>) -> Vec<Vec<Lit>> {
    // split disequalities touching an existential
    let mut fixed = Conj::default();
    let mut splits: Vec<(usize, usize)> = Vec::new();
    let mut free_nes = Vec::new();
    for l in lits {
        match l {
            Lit::Ne(a, b) if ex.contains(a) || ex.contains(b) => splits.push((*a, *b)),
            Lit::Ne(a, b) => free_nes.push(Lit::Ne(*a, *b)),
            other => fixed.add(other),
        }
    }
    if fixed.falsum {
        return Vec::new();
    }
    let mut out = Vec::new();
    let total = 1usize << splits.len();
    for mask in 0..total {
        let mut diffs = fixed.diffs.clone();
        for (k, (a, b)) in splits.iter().enumerate() {
            if mask & (1 << k) == 0 {
                diffs.push(Diff { a: *a, b: *b, c: -1 });
            } else {
                diffs.push(Diff { a: *b, b: *a, c: -1 });
            }
        }
        let Some(m) = closure(n, &diffs) else { continue };
        let mut conj: Vec<Lit> = free_nes.clone();
        for b in 0..n {
            for a in 0..n {
                if a == b || ex.contains(&a) || ex.contains(&b) || m[b][a] >= INF {
                    continue;
                }
                conj.push(Lit::Diff(Diff { a, b, c: m[b][a] }));
            }
        }
        out.push(conj);
    }
    out
}

/// Is `base` together with the negation of every projected disjunct
/// satisfiable?
fn refutable(n: usize, base: &Conj, disj: &[Vec<Lit>], k: usize) -> bool {
    if !sat(n, base) {
        return false;
    }
    if k == disj.len() {
        return true;
    }
    for l in &disj[k] {
        let mut next = base.clone();
        let neg = negate_lit(l);
        if neg.is_empty() {
            // negation of `false` is trivially true
            if refutable(n, &next, disj, k + 1) {
                return true;
            }
            continue;
        }
        for nl in &neg {
            if let Lit::Ne(..) = nl {
                next.add(nl);
            }
        }
        // negation of a Ne is an equality (two diffs); of a diff, one diff
        for nl in neg {
            if let Lit::Diff(_) = nl {
                next.add(&nl);
            }
        }
        if refutable(n, &next, disj, k + 1) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(s: &str) -> Var {
        Var::user(s)
    }

    #[test]
    fn eq_symmetry_and_clash() {
        let chi = vec![TheoryAtom::eq(v("x"), v("y"))];
        assert!(entails(&chi, &[TheoryAtom::eq(v("y"), v("x"))], TheoryTag::Eq).unwrap());
        let clash = vec![TheoryAtom::eq(v("x"), v("y")), TheoryAtom::ne(v("x"), v("y"))];
        assert!(entails(&clash, &[TheoryAtom::False], TheoryTag::Eq).unwrap());
    }

    #[test]
    fn order_transitivity() {
        let chi = vec![TheoryAtom::Le(v("x"), v("y")), TheoryAtom::Le(v("y"), v("z"))];
        assert!(entails(&chi, &[TheoryAtom::Le(v("x"), v("z"))], TheoryTag::NatOrder).unwrap());
        assert!(!entails(&chi, &[TheoryAtom::Lt(v("x"), v("z"))], TheoryTag::NatOrder).unwrap());
    }

    #[test]
    fn injective_entailment() {
        let fv: BTreeSet<Var> = [v("x"), v("y")].into_iter().collect();
        assert!(entails_injective(&[], &[TheoryAtom::ne(v("x"), v("y"))], TheoryTag::Eq, &fv).unwrap());
        assert!(entails_injective(&[TheoryAtom::eq(v("x"), v("y"))], &[TheoryAtom::False], TheoryTag::Eq, &fv).unwrap());
        assert!(entails_injective(&[], &[], TheoryTag::Empty, &BTreeSet::new()).unwrap());
    }

    #[test]
    fn pigeonhole_needs_branching() {
        let (x, y, z) = (v("x"), v("y"), v("z"));
        let chi = vec![
            TheoryAtom::Nonneg(x.clone()),
            TheoryAtom::Nonneg(y.clone()),
            TheoryAtom::Nonneg(z.clone()),
            TheoryAtom::Le(x.clone(), y.clone()),
            TheoryAtom::Le(y.clone(), z.clone()),
            TheoryAtom::Le(z.clone(), x.clone()),
            TheoryAtom::ne(x.clone(), z.clone()),
        ];
        assert!(!satisfiable(&chi, TheoryTag::NatOrder, None).unwrap());
    }

    #[test]
    fn existential_projection() {
        // x < y |= exists e. x <= e * e < y
        let chi = vec![TheoryAtom::Lt(v("x"), v("y"))];
        let e = v("e");
        let d = vec![(vec![e.clone()], vec![TheoryAtom::Le(v("x"), e.clone()), TheoryAtom::Lt(e.clone(), v("y"))])];
        assert!(entails_disj(&chi, &d, TheoryTag::NatOrder, None).unwrap());
        // x <= y does not entail exists e. x < e * e < y
        let chi2 = vec![TheoryAtom::Le(v("x"), v("y"))];
        let d2 = vec![(vec![e.clone()], vec![TheoryAtom::Lt(v("x"), e.clone()), TheoryAtom::Lt(e, v("y"))])];
        assert!(!entails_disj(&chi2, &d2, TheoryTag::NatOrder, None).unwrap());
    }

    #[test]
    fn negation_round_trip() {
        let a = TheoryAtom::Le(v("x"), v("y"));
        let n = negate_atom(&a, TheoryTag::NatOrder).unwrap();
        assert_eq!(n, TheoryAtom::Lt(v("y"), v("x")));
        assert_eq!(negate_atom(&n, TheoryTag::NatOrder).unwrap(), a);
        assert_eq!(negate_atom(&TheoryAtom::False, TheoryTag::Empty), None);
    }

    #[test]
    fn ts_order() {
        let e: Vec<TheoryAtom> = vec![];
        let a = vec![TheoryAtom::eq(v("x"), v("y"))];
        assert!(ts_order_less(&e, &a));
        assert!(!ts_order_less(&a, &a));
        let b1 = vec![TheoryAtom::Le(v("x"), v("y"))];
        let b2 = vec![TheoryAtom::Le(v("y"), v("x"))];
        assert!(ts_order_less(&b1, &b2) != ts_order_less(&b2, &b1));
    }
}
