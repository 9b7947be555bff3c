//! Text format of certificates.
//!
//! ```text
//! sepentail-certificate 1
//! problem <sha256 of the printed problem>
//! theory <name>
//! strategy <name>
//! roots <id> <id> ...
//! node <id> rule=<name> choice=<payload> sequent=<sequent> children=<id,id,...>
//! node <id> rule=backedge choice=- sequent=<sequent> children=backedge:<id>
//! ```

use std::fmt::Write;

use sepentail_core::calculus::Choice;
use sepentail_core::cert::{CertNode, Certificate, Step};
use sepentail_core::problem::Problem;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::parse::parse_sequent;
use crate::print::print_problem;

const MAGIC: &str = "sepentail-certificate 1";

#[derive(Debug, Error, PartialEq, Eq)]
#[error("certificate line {line}: {msg}")]
pub struct CertParseError {
    pub line: usize,
    pub msg: String,
}

/// Hex SHA-256 of the canonical printout of `p`; insensitive to layout and
/// comments of the source file.
pub fn problem_hash(p: &Problem) -> String {
    let digest = Sha256::digest(print_problem(p).as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        write!(s, "{:02x}", b).unwrap();
        s
    })
}

pub fn write_certificate(cert: &Certificate, problem_hash: &str) -> String {
    let mut out = String::new();
    writeln!(out, "{}", MAGIC).unwrap();
    writeln!(out, "problem {}", problem_hash).unwrap();
    for (k, v) in &cert.header {
        if k != "problem" {
            writeln!(out, "{} {}", k, v).unwrap();
        }
    }
    let roots: Vec<String> = cert.roots.iter().map(|r| r.to_string()).collect();
    writeln!(out, "roots {}", roots.join(" ")).unwrap();
    for (i, n) in cert.nodes.iter().enumerate() {
        let (rule, choice, children) = match &n.step {
            Step::Rule(c, kids) => {
                let ks: Vec<String> = kids.iter().map(|k| k.to_string()).collect();
                (c.name().to_string(), c.payload(), ks.join(","))
            }
            Step::Backedge(t) => ("backedge".to_string(), "-".to_string(), format!("backedge:{}", t)),
        };
        writeln!(out, "node {} rule={} choice={} sequent={} children={}", i, rule, choice, n.sequent, children).unwrap();
    }
    out
}

fn field<'a>(s: &'a str, key: &str, line: usize) -> Result<&'a str, CertParseError> {
    s.strip_prefix(key).ok_or_else(|| CertParseError { line, msg: format!("expected `{}`", key) })
}

fn number(s: &str, line: usize) -> Result<usize, CertParseError> {
    s.parse().map_err(|_| CertParseError { line, msg: format!("bad node id `{}`", s) })
}

/// Reads a certificate.  The problem hash ends up in the header under
/// `problem`.
pub fn read_certificate(text: &str) -> Result<Certificate, CertParseError> {
    let mut cert = Certificate::default();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        other => return Err(CertParseError { line: other.map_or(1, |x| x.0), msg: "missing certificate header".into() }),
    }
    let mut have_roots = false;
    for (ln, l) in lines {
        let err = |msg: String| CertParseError { line: ln, msg };
        if let Some(rest) = l.strip_prefix("node ") {
            let (id, rest) = rest.split_once(' ').ok_or_else(|| err("truncated node".into()))?;
            if number(id, ln)? != cert.nodes.len() {
                return Err(err(format!("node ids must be consecutive, found {}", id)));
            }
            let (rule, rest) = rest.split_once(' ').ok_or_else(|| err("truncated node".into()))?;
            let rule = field(rule, "rule=", ln)?;
            let (choice, rest) = rest.split_once(' ').ok_or_else(|| err("truncated node".into()))?;
            let choice = field(choice, "choice=", ln)?;
            let rest = field(rest, "sequent=", ln)?;
            let (seq, kids) = rest.rsplit_once(" children=").ok_or_else(|| err("missing children".into()))?;
            let sequent = parse_sequent(seq).map_err(|e| err(e.to_string()))?;
            let step = if rule == "backedge" {
                if choice != "-" {
                    return Err(err("back-edges carry no choice".into()));
                }
                let t = kids.strip_prefix("backedge:").ok_or_else(|| err("expected `backedge:<id>`".into()))?;
                Step::Backedge(number(t, ln)?)
            } else {
                let c = Choice::parse(rule, choice).ok_or_else(|| err(format!("bad choice `{}` for rule {}", choice, rule)))?;
                let ids = if kids.is_empty() {
                    Vec::new()
                } else {
                    kids.split(',').map(|k| number(k, ln)).collect::<Result<_, _>>()?
                };
                Step::Rule(c, ids)
            };
            cert.nodes.push(CertNode { sequent, step });
        } else if let Some(rest) = l.strip_prefix("roots") {
            if have_roots {
                return Err(err("roots given twice".into()));
            }
            have_roots = true;
            cert.roots = rest.split_whitespace().map(|r| number(r, ln)).collect::<Result<_, _>>()?;
        } else {
            let (k, v) = l.split_once(' ').ok_or_else(|| err(format!("unrecognized line `{}`", l)))?;
            if !cert.nodes.is_empty() {
                return Err(err("header entries must precede the nodes".into()));
            }
            cert.header.push((k.to_string(), v.trim().to_string()));
        }
    }
    if !have_roots {
        return Err(CertParseError { line: 0, msg: "missing roots line".into() });
    }
    Ok(cert)
}
