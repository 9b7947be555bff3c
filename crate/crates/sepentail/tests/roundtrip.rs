use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sepentail::core::pipeline::{check_entailment, CheckOptions};
use sepentail::fuzz::{random_left_terminating_valid, random_problem, FuzzParams};
use sepentail::{parse_problem, parse_problem_with, parse_sequent, print_problem, problem_hash, read_certificate, write_certificate, ParseOptions};

const ESTABLISHED: ParseOptions = ParseOptions { assume_established: true };

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn printed_problems_parse_back(seed in any::<u64>()) {
        let p = random_problem(&mut ChaCha8Rng::seed_from_u64(seed), &FuzzParams::default());
        let text = print_problem(&p);
        let q = parse_problem_with(&text, ESTABLISHED).map_err(|e| TestCaseError::fail(format!("{}\n{}", e, text)))?;
        prop_assert_eq!(&q.lhs, &p.lhs);
        prop_assert_eq!(&q.rhs, &p.rhs);
        prop_assert_eq!(&q.sid.rules, &p.sid.rules);
        prop_assert_eq!(print_problem(&q), text);
        prop_assert_eq!(problem_hash(&q), problem_hash(&p));
    }

    #[test]
    fn certificates_survive_the_file_format(seed in any::<u64>()) {
        let p = random_left_terminating_valid(&mut ChaCha8Rng::seed_from_u64(seed), &FuzzParams::default());
        let cert = check_entailment(&p, &CheckOptions::default()).certificate.expect("valid by construction");
        let text = write_certificate(&cert, &problem_hash(&p));
        let back = read_certificate(&text).map_err(|e| TestCaseError::fail(format!("{:?}\n{}", e, text)))?;
        prop_assert_eq!(&back.nodes, &cert.nodes);
        prop_assert_eq!(&back.roots, &cert.roots);
        prop_assert_eq!(write_certificate(&back, &problem_hash(&p)), text);
    }
}

/// Every sequent met in the proofs of the example corpus, with its
/// pu-atoms and internal variables, prints to text that parses back to it.
#[test]
fn proof_sequents_parse_back() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../examples");
    let mut checked = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|x| x != "sep") {
            continue;
        }
        let p = parse_problem(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let Some(cert) = check_entailment(&p, &CheckOptions::default()).certificate else { continue };
        for n in &cert.nodes {
            let text = n.sequent.to_string();
            let back = parse_sequent(&text).unwrap_or_else(|e| panic!("{}: {}: {}", path.display(), text, e));
            assert_eq!(back, n.sequent, "{}", text);
            checked += 1;
        }
    }
    assert!(checked > 100, "only {} sequents", checked);
}
