use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

/// A first-order variable.
///
/// User variables carry their source name.  The other kinds live in
/// reserved namespaces that the parser refuses (`_` prefix), so they can
/// never collide with user input:
/// * `Fresh(n)` prints as `_vN` and is a free variable minted by a rule,
/// * `Bound(n)` prints as `_bN` and only ever occurs under an `exists`,
/// * `Param(n)` prints as `_pN` and only ever occurs as a local parameter
///   of a partially unfolded atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    User(Arc<str>),
    Fresh(u32),
    Bound(u32),
    Param(u32),
}

impl Var {
    pub fn user(name: &str) -> Var {
        Var::User(Arc::from(name))
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self, Var::Fresh(_))
    }

    pub fn name(&self) -> String {
        alloc::format!("{}", self)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::User(s) => f.write_str(s),
            Var::Fresh(n) => write!(f, "_v{}", n),
            Var::Bound(n) => write!(f, "_b{}", n),
            Var::Param(n) => write!(f, "_p{}", n),
        }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A predicate symbol.  Variants produced by the alloc-compatibility
/// transformation and by equality elimination are ordinary symbols with
/// decorated names.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pred(pub Arc<str>);

impl Pred {
    pub fn new(name: &str) -> Pred {
        Pred(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
