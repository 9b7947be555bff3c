//! Printing problems in the input syntax.

use std::fmt::Write;

use sepentail_core::problem::Problem;

/// Renders `p` so that [`crate::parse::parse_problem`] reads it back.
pub fn print_problem(p: &Problem) -> String {
    let mut out = String::new();
    writeln!(out, "theory {}", p.theory.name()).unwrap();
    out.push_str("sid {\n");
    for r in &p.sid.rules {
        writeln!(out, "  {};", r).unwrap();
    }
    out.push_str("}\nentail {\n  ");
    write!(out, "{} |-", p.lhs).unwrap();
    for (i, g) in p.rhs.iter().enumerate() {
        write!(out, "{}{}", if i == 0 { " " } else { ", " }, g).unwrap();
    }
    out.push_str("\n}\n");
    out
}
