//! Proof certificates and the independent checking kernel.
//!
//! A certificate is a list of nodes forming a forest (one tree per proved
//! case).  Inner nodes carry a [`Choice`]; leaves are axioms or back-edges
//! to a strict ancestor with an α-equivalent sequent.  The kernel only calls
//! [`calculus::apply`], it never searches.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::calculus::{self, Choice, Ctx};
use crate::sequent::Sequent;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Rule(Choice, Vec<usize>),
    Backedge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertNode {
    pub sequent: Sequent,
    pub step: Step,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Certificate {
    /// Free-form header entries (problem hash, theory, strategy).
    pub header: Vec<(String, String)>,
    /// Root node of every case, in case order.
    pub roots: Vec<usize>,
    pub nodes: Vec<CertNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelError {
    BadInstance(usize, String),
    BadBackedge(usize),
    PremiseMismatch(usize),
    Malformed(String),
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::BadInstance(n, why) => write!(f, "node {}: rule instance rejected ({})", n, why),
            KernelError::BadBackedge(n) => write!(f, "node {}: back-edge target is not an equivalent ancestor", n),
            KernelError::PremiseMismatch(n) => write!(f, "node {}: children do not match the premises", n),
            KernelError::Malformed(m) => write!(f, "malformed certificate: {}", m),
        }
    }
}

impl Certificate {
    pub fn backedges(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.step, Step::Backedge(_))).count()
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Checks every tree of `cert`; `cases[i]` must be the sequent at `roots[i]`.
pub fn verify(ctx: Ctx<'_>, cert: &Certificate, cases: &[Sequent]) -> Result<(), KernelError> {
    let with: Vec<(Ctx<'_>, Sequent)> = cases.iter().map(|s| (ctx, s.clone())).collect();
    verify_each(cert, &with)
}

/// As [`verify`], with a separate rule system and theory for every root.
pub fn verify_each(cert: &Certificate, cases: &[(Ctx<'_>, Sequent)]) -> Result<(), KernelError> {
    if cert.roots.len() != cases.len() {
        return Err(KernelError::Malformed(alloc::format!(
            "{} roots for {} cases",
            cert.roots.len(),
            cases.len()
        )));
    }
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    for (root, (ctx, case)) in cert.roots.iter().zip(cases) {
        let ctx = *ctx;
        let node = cert
            .nodes
            .get(*root)
            .ok_or_else(|| KernelError::Malformed(alloc::format!("missing root {}", root)))?;
        if &node.sequent != case {
            return Err(KernelError::PremiseMismatch(*root));
        }
        check_tree(ctx, cert, *root, &mut visited)?;
    }
    if visited.len() != cert.nodes.len() {
        return Err(KernelError::Malformed("unreachable nodes".into()));
    }
    Ok(())
}

/// Iterative depth-first check with an explicit ancestor path.
fn check_tree(ctx: Ctx<'_>, cert: &Certificate, root: usize, visited: &mut BTreeSet<usize>) -> Result<(), KernelError> {
    // (node, next child index to visit)
    let mut stack: Vec<(usize, usize)> = alloc::vec![(root, 0)];
    if !visited.insert(root) {
        return Err(KernelError::Malformed(alloc::format!("node {} reached twice", root)));
    }
    check_node(ctx, cert, root)?;
    while let Some(&mut (id, ref mut next)) = stack.last_mut() {
        let children: &[usize] = match &cert.nodes[id].step {
            Step::Rule(_, ch) => ch,
            Step::Backedge(_) => &[],
        };
        if *next == children.len() {
            stack.pop();
            continue;
        }
        let c = children[*next];
        *next += 1;
        if c >= cert.nodes.len() {
            return Err(KernelError::Malformed(alloc::format!("node {} has a dangling child", id)));
        }
        if !visited.insert(c) {
            return Err(KernelError::Malformed(alloc::format!("node {} reached twice", c)));
        }
        stack.push((c, 0));
        check_node(ctx, cert, c)?;
        if let Step::Backedge(t) = cert.nodes[c].step {
            let ok = stack[..stack.len() - 1].iter().any(|(a, _)| *a == t)
                && cert.nodes[t].sequent.alpha_canonical() == cert.nodes[c].sequent.alpha_canonical();
            if !ok {
                return Err(KernelError::BadBackedge(c));
            }
        }
    }
    Ok(())
}

fn check_node(ctx: Ctx<'_>, cert: &Certificate, id: usize) -> Result<(), KernelError> {
    let node = &cert.nodes[id];
    match &node.step {
        Step::Backedge(t) => {
            if *t >= cert.nodes.len() {
                return Err(KernelError::BadBackedge(id));
            }
            Ok(())
        }
        Step::Rule(choice, children) => {
            let premises = calculus::apply(ctx, &node.sequent, choice).map_err(|e| KernelError::BadInstance(id, e.0))?;
            if premises.len() != children.len() {
                return Err(KernelError::PremiseMismatch(id));
            }
            for (p, c) in premises.iter().zip(children) {
                match cert.nodes.get(*c) {
                    Some(n) if &n.sequent == p => {}
                    _ => return Err(KernelError::PremiseMismatch(id)),
                }
            }
            Ok(())
        }
    }
}
