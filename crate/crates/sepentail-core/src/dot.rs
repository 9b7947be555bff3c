//! Graphviz rendering of certificates.

use alloc::format;
use alloc::string::String;

use crate::cert::{Certificate, Step};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

/// One node per certificate node, labelled with the rule and the sequent.
/// Back-edges are drawn dashed.
pub fn export_dot(cert: &Certificate) -> String {
    let mut out = String::from("digraph proof {\n  node [shape=box, fontname=\"monospace\"];\n");
    for (i, n) in cert.nodes.iter().enumerate() {
        let rule = match &n.step {
            Step::Rule(c, _) => c.name(),
            Step::Backedge(_) => "back",
        };
        out.push_str(&format!("  n{} [label=\"{}\\n{}\"];\n", i, rule, escape(&format!("{}", n.sequent))));
    }
    for (i, n) in cert.nodes.iter().enumerate() {
        match &n.step {
            Step::Rule(_, kids) => {
                for k in kids {
                    out.push_str(&format!("  n{} -> n{};\n", i, k));
                }
            }
            Step::Backedge(t) => out.push_str(&format!("  n{} -> n{} [style=dashed];\n", i, t)),
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Choice;
    use crate::cert::CertNode;
    use crate::formula::Formula;
    use crate::sequent::Sequent;

    #[test]
    fn single_axiom_node() {
        let cert = Certificate {
            header: alloc::vec::Vec::new(),
            roots: alloc::vec![0],
            nodes: alloc::vec![CertNode {
                sequent: Sequent::new(Formula::Emp, alloc::vec![Formula::Emp]),
                step: Step::Rule(Choice::AxEH, alloc::vec::Vec::new()),
            }],
        };
        let d = export_dot(&cert);
        assert_eq!(d.matches("[label=").count(), 1);
        assert_eq!(d.matches("->").count(), 0);
    }
}
