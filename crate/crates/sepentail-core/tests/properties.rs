use proptest::prelude::*;
use sepentail_core::calculus::Ctx;
use sepentail_core::oracle::{self, Bounds, OracleVerdict, Stores};
use sepentail_core::problem::store_cases;
use sepentail_core::prover::{Config, Outcome, Prover};
use sepentail_core::{Formula, Pred, PredAtom, Rule, Sequent, Sid, TheoryTag, Var};

fn v(s: &str) -> Var {
    Var::user(s)
}

/// Acyclic list segments and non-empty binary trees.
fn sid() -> Sid {
    let ls = |a: &str, b: &str| PredAtom::new(Pred::new("ls"), vec![v(a), v(b)]);
    let tree = |a: &str| PredAtom::new(Pred::new("tree"), vec![v(a)]);
    let rules = vec![
        Rule { head: ls("x", "y"), exvars: vec![], body: vec![Formula::pto(v("x"), vec![v("y"), v("y")])] },
        Rule {
            head: ls("x", "y"),
            exvars: vec![v("z")],
            body: vec![Formula::pto(v("x"), vec![v("z"), v("z")]), Formula::Pred(ls("z", "y"))],
        },
        Rule { head: tree("x"), exvars: vec![], body: vec![Formula::pto(v("x"), vec![v("x"), v("x")])] },
        Rule {
            head: tree("x"),
            exvars: vec![v("l"), v("r")],
            body: vec![
                Formula::pto(v("x"), vec![v("l"), v("r")]),
                Formula::Pred(tree("l")),
                Formula::Pred(tree("r")),
            ],
        },
    ];
    Sid::new(rules, 2, false).expect("valid rule system")
}

const VARS: [&str; 3] = ["a", "b", "c"];

/// One spatial atom rooted at `root`; `e` may occur as an argument.
fn atom(root: usize) -> impl Strategy<Value = Formula> {
    let r = VARS[root];
    let target = prop::sample::select(vec!["a", "b", "c", "e"]);
    prop_oneof![
        (target.clone(), target.clone()).prop_map(move |(y, z)| Formula::pto(v(r), vec![v(y), v(z)])),
        target.clone().prop_map(move |y| Formula::pto(v(r), vec![v(y), v(y)])),
        target.prop_map(move |y| Formula::Pred(PredAtom::new(Pred::new("ls"), vec![v(r), v(y)]))),
        Just(Formula::Pred(PredAtom::new(Pred::new("tree"), vec![v(r)]))),
    ]
}

/// Symbolic heaps with distinct roots among a, b, c and an optional
/// existential `e`.
fn heap() -> impl Strategy<Value = Formula> {
    (prop::sample::subsequence(vec![0usize, 1, 2], 1..=2), any::<bool>())
        .prop_flat_map(|(roots, quantify)| {
            let atoms: Vec<_> = roots.into_iter().map(atom).collect();
            (atoms, Just(quantify))
        })
        .prop_map(|(atoms, quantify)| {
            let body = Formula::sep(atoms);
            if body.free_vars().contains(&v("e")) || quantify {
                Formula::exists(vec![v("e")], body)
            } else {
                body
            }
        })
        .prop_map(|f| f.normalize())
}

/// Folds single cells into the predicates they are base cases of, so that
/// `f |- weaken(f)` holds.
fn weaken(f: &Formula) -> Formula {
    match f {
        Formula::PointsTo(x, ys) if ys[0] == ys[1] && ys[0] == *x => {
            Formula::Pred(PredAtom::new(Pred::new("tree"), vec![x.clone()]))
        }
        Formula::PointsTo(x, ys) if ys[0] == ys[1] => {
            Formula::Pred(PredAtom::new(Pred::new("ls"), vec![x.clone(), ys[0].clone()]))
        }
        Formula::Sep(v) => Formula::sep(v.iter().map(weaken).collect()),
        Formula::Exists(vs, b) => Formula::exists(vs.clone(), weaken(b)),
        other => other.clone(),
    }
}

fn sequent() -> impl Strategy<Value = Sequent> {
    (heap(), heap(), any::<bool>()).prop_map(|(f, g, related)| {
        let rhs = if related { weaken(&f) } else { g };
        Sequent::new(f, vec![rhs])
    })
}

const SMALL: Bounds = Bounds { locations: 4, heap: 3 };

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn models_satisfy_their_formula(f in heap()) {
        let sid = sid();
        for m in oracle::models_of(&f, &sid, TheoryTag::Empty, SMALL).unwrap() {
            prop_assert!(oracle::holds(&m, &f, &sid, TheoryTag::Empty, SMALL.locations), "{} in {}", f, m);
            prop_assert!(m.heap.len() <= SMALL.heap);
        }
    }

    #[test]
    fn every_formula_entails_itself(f in heap()) {
        let sid = sid();
        let r = oracle::entails(&f, &[f.clone()], &sid, TheoryTag::Empty, SMALL, Stores::Injective).unwrap();
        prop_assert_eq!(r, OracleVerdict::ValidUpToBound);
    }

    #[test]
    fn countermodels_refute(f in heap(), g in heap()) {
        let sid = sid();
        if let OracleVerdict::Countermodel(m) = oracle::entails(&f, &[g.clone()], &sid, TheoryTag::Empty, SMALL, Stores::All).unwrap() {
            prop_assert!(oracle::holds(&m, &f, &sid, TheoryTag::Empty, SMALL.locations));
            prop_assert!(!oracle::holds(&m, &g, &sid, TheoryTag::Empty, SMALL.locations));
        }
    }

    #[test]
    fn normal_forms_are_stable(f in heap(), g in heap()) {
        let n = f.normalize();
        prop_assert_eq!(n.normalize(), n.clone());
        let s = Sequent::new(f, vec![g]);
        let c = s.alpha_canonical();
        prop_assert_eq!(c.alpha_canonical(), c);
    }

    #[test]
    fn proofs_are_sound(s in sequent()) {
        let sid = sid();
        let ctx = Ctx { sid: &sid, theory: TheoryTag::Empty };
        let mut prover = Prover::new(ctx, Config { fuel: 2_000, ..Config::default() });
        if let Outcome::Proved(_) = prover.prove(&s) {
            let r = oracle::entails(&s.lhs, &s.rhs, &sid, TheoryTag::Empty, SMALL, Stores::Injective).unwrap();
            prop_assert_eq!(r, OracleVerdict::ValidUpToBound, "{}", s);
        }
    }

    #[test]
    fn store_cases_are_set_partitions(n in 0usize..=5) {
        let bell = [1usize, 1, 2, 5, 15, 52];
        let vars: Vec<Var> = (0..n).map(|i| v(&format!("x{}", i))).collect();
        let cases = store_cases(&vars);
        prop_assert_eq!(cases.len(), bell[n]);
        prop_assert!(cases[0].is_empty());
        for s in &cases {
            // representatives are fixed points
            for t in s.values() {
                prop_assert!(!s.contains_key(t));
            }
        }
    }
}
