//! Parser for problem files, and for the internal syntax used in
//! certificates (reserved variable names and partially unfolded atoms).

use std::collections::BTreeMap;

use sepentail_core::calculus::parse_var;
use sepentail_core::dnf::disjuncts;
use sepentail_core::problem::Problem;
use sepentail_core::{Formula, Pred, PredAtom, PuAtom, Rule, Sequent, Sid, SidError, TheoryAtom, TheoryTag, Var};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("predicate {pred} used with {found} arguments, expected {expected}")]
    Arity { pred: String, expected: usize, found: usize },
    #[error("predicate {0} has no rule")]
    UnknownPredicate(String),
    #[error("points-to atom with {found} targets, expected {expected}")]
    KappaMismatch { expected: usize, found: usize },
    #[error("theory atom `{atom}` is not supported by theory {theory}")]
    UnsupportedTheoryAtom { atom: String, theory: String },
    #[error("name `{0}` is reserved")]
    ReservedName(String),
    #[error("invalid rule system: {0}")]
    Sid(SidError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Zero,
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 20] = [
    "\\/", "->", "-*", "|-", "<=", "<-", "!=", "<", "=", "(", ")", "[", "]", "{", "}", ",", ";", ".", "*", "#",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            // decorations of generated predicate names: `@{1,2}`, `@e{1,2,1}`
            while i < chars.len() && chars[i] == '@' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                if i >= chars.len() || chars[i] != '{' {
                    return Err(err(line, col + (i - start), "expected `{` in decorated name".into()));
                }
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == ',') {
                    i += 1;
                }
                if i >= chars.len() || chars[i] != '}' {
                    return Err(err(line, col + (i - start), "unterminated decoration".into()));
                }
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: tl, col: tc });
            continue;
        }
        if c == '0' && !chars.get(i + 1).is_some_and(|d| d.is_ascii_alphanumeric()) {
            i += 1;
            col += 1;
            out.push(Token { tok: Tok::Zero, line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.chars().count();
                col += s.chars().count();
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => return Err(err(line, col, format!("unexpected character `{}`", c))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Which names the parser accepts.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Problem files: no reserved variables, no pu-atoms.
    User,
    /// Printed sequents: `_vN`, `_bN`, `_pN` and pu-atoms allowed.
    Internal,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    mode: Mode,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        Err(ParseError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{}`", s))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), ParseError> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{}`", k))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail("expected an identifier"),
        }
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        let s = self.ident()?;
        if s.contains('@') || ["emp", "false", "exists"].contains(&s.as_str()) {
            return Err(ParseError::ReservedName(s));
        }
        match self.mode {
            Mode::User => {
                if s.starts_with('_') {
                    return Err(ParseError::ReservedName(s));
                }
                Ok(Var::user(&s))
            }
            Mode::Internal => parse_var(&s).map_or_else(|| Err(ParseError::ReservedName(s.clone())), Ok),
        }
    }

    fn var_list(&mut self, close: &str) -> Result<Vec<Var>, ParseError> {
        let mut out = Vec::new();
        if self.is_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(self.var()?);
            if self.is_sym(",") {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    fn pred_atom(&mut self) -> Result<PredAtom, ParseError> {
        let name = self.ident()?;
        self.expect("(")?;
        let args = self.var_list(")")?;
        self.expect(")")?;
        Ok(PredAtom::new(Pred::new(&name), args))
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if self.is_kw("exists") {
            self.bump();
            let mut vs = vec![self.var()?];
            while !self.is_sym(".") {
                vs.push(self.var()?);
            }
            self.bump();
            let body = self.formula()?;
            return Ok(Formula::Exists(vs, Box::new(body)));
        }
        let mut parts = vec![self.sep()?];
        while self.is_sym("\\/") {
            self.bump();
            parts.push(self.sep()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Or(parts) })
    }

    fn sep(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.atom()?];
        while self.is_sym("*") {
            self.bump();
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Formula::Sep(parts) })
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "exists" => self.formula(),
            Tok::Ident(k) if k == "emp" => {
                self.bump();
                Ok(Formula::Emp)
            }
            Tok::Ident(k) if k == "false" => {
                self.bump();
                Ok(Formula::Theory(TheoryAtom::False))
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.formula()?;
                if self.is_sym("-*") {
                    return self.pu_rest(inner);
                }
                self.expect(")")?;
                Ok(inner)
            }
            Tok::Zero => {
                self.bump();
                self.expect("<=")?;
                Ok(Formula::Theory(TheoryAtom::Nonneg(self.var()?)))
            }
            Tok::Ident(_) => {
                if matches!(self.peek2(), Tok::Sym("(")) {
                    return Ok(Formula::Pred(self.pred_atom()?));
                }
                let x = self.var()?;
                let op = match self.bump() {
                    Tok::Sym(s) => s,
                    _ => {
                        self.pos -= 1;
                        return self.fail("expected `->` or a comparison");
                    }
                };
                match op {
                    "->" => {
                        self.expect("(")?;
                        let ys = self.var_list(")")?;
                        self.expect(")")?;
                        Ok(Formula::PointsTo(x, ys))
                    }
                    "=" => Ok(Formula::Theory(TheoryAtom::Eq(x, self.var()?))),
                    "!=" => Ok(Formula::Theory(TheoryAtom::Ne(x, self.var()?))),
                    "<=" => Ok(Formula::Theory(TheoryAtom::Le(x, self.var()?))),
                    "<" => Ok(Formula::Theory(TheoryAtom::Lt(x, self.var()?))),
                    _ => {
                        self.pos -= 1;
                        self.fail("expected `->` or a comparison")
                    }
                }
            }
            _ => self.fail("expected a formula"),
        }
    }

    /// After `( frame`, at `-*`.
    fn pu_rest(&mut self, frame: Formula) -> Result<Formula, ParseError> {
        if self.mode == Mode::User {
            return self.fail("partially unfolded atoms are not allowed in problem files");
        }
        self.bump();
        let frame_atoms: Vec<PredAtom> = match frame {
            Formula::Emp => Vec::new(),
            Formula::Pred(a) => vec![a],
            Formula::Sep(v) => v
                .into_iter()
                .map(|a| match a {
                    Formula::Pred(p) => Ok(p),
                    _ => self.fail("frame of a partially unfolded atom must consist of predicate atoms"),
                })
                .collect::<Result<_, _>>()?,
            _ => return self.fail("frame of a partially unfolded atom must consist of predicate atoms"),
        };
        let inner = self.pred_atom()?;
        self.expect(")")?;
        self.expect("[")?;
        let params = self.var_list("<-")?;
        self.expect("<-")?;
        let actuals = self.var_list("]")?;
        self.expect("]")?;
        if params.len() != actuals.len() {
            return self.fail("parameter and actual lists differ in length");
        }
        Ok(Formula::Pu(PuAtom { frame: frame_atoms, inner, params, actuals }))
    }

    fn formula_list(&mut self, close: &str) -> Result<Vec<Formula>, ParseError> {
        let mut out = Vec::new();
        if self.is_sym(close) || *self.peek() == Tok::Eof {
            return Ok(out);
        }
        loop {
            out.push(self.formula()?);
            if self.is_sym(",") {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }
}

/// Parsing options for problem files.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Skip the (incomplete) establishment test.
    pub assume_established: bool,
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    parse_problem_with(text, ParseOptions::default())
}

pub fn parse_problem_with(text: &str, opts: ParseOptions) -> Result<Problem, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, mode: Mode::User };
    let mut theory = None;
    while p.is_kw("theory") {
        p.bump();
        let name = p.ident()?;
        match TheoryTag::parse(&name) {
            Some(t) if theory.is_none() => theory = Some(t),
            Some(_) => return p.fail("theory declared twice"),
            None => return p.fail(format!("unknown theory `{}`", name)),
        }
    }
    let theory = theory.unwrap_or(TheoryTag::Empty);
    p.expect_kw("sid")?;
    p.expect("{")?;
    let mut rules = Vec::new();
    while !p.is_sym("}") {
        let head = p.pred_atom()?;
        p.expect("<=")?;
        let body = p.formula()?;
        p.expect(";")?;
        rules.extend(rules_of(head, &body));
    }
    p.bump();
    p.expect_kw("entail")?;
    p.expect("{")?;
    let lhs = p.formula()?;
    p.expect("|-")?;
    let rhs = p.formula_list("}")?;
    p.expect("}")?;
    if *p.peek() != Tok::Eof {
        return p.fail("trailing input");
    }
    validate(theory, rules, lhs, rhs, opts)
}

/// A rule per disjunct of the body; a body without disjunction keeps its
/// binder names.
fn rules_of(head: PredAtom, body: &Formula) -> Vec<Rule> {
    if !body.has_or() {
        let (vars, b) = body.prefix();
        if !b.has_exists() {
            return vec![Rule { head, exvars: vars, body: b.conjuncts() }];
        }
    }
    disjuncts(body)
        .into_iter()
        .map(|h| Rule {
            head: head.clone(),
            exvars: h.vars,
            body: h.atoms.into_iter().filter(|a| *a != Formula::Emp).collect(),
        })
        .collect()
}

fn validate(
    theory: TheoryTag,
    rules: Vec<Rule>,
    lhs: Formula,
    rhs: Vec<Formula>,
    opts: ParseOptions,
) -> Result<Problem, ParseError> {
    let mut arity: BTreeMap<Pred, usize> = BTreeMap::new();
    let mut kappa: Option<usize> = None;
    let mut check = |f: &Formula| -> Result<(), ParseError> {
        let mut res = Ok(());
        f.for_each_atom(&mut |a| {
            if res.is_err() {
                return;
            }
            res = match a {
                Formula::Pred(p) => match arity.get(&p.pred) {
                    Some(n) if *n != p.args.len() => {
                        Err(ParseError::Arity { pred: p.pred.to_string(), expected: *n, found: p.args.len() })
                    }
                    _ => {
                        arity.insert(p.pred.clone(), p.args.len());
                        Ok(())
                    }
                },
                Formula::PointsTo(_, ys) => match kappa {
                    Some(k) if k != ys.len() => Err(ParseError::KappaMismatch { expected: k, found: ys.len() }),
                    _ => {
                        kappa = Some(ys.len());
                        Ok(())
                    }
                },
                Formula::Theory(t) if !theory.supports(t) => {
                    Err(ParseError::UnsupportedTheoryAtom { atom: t.to_string(), theory: theory.name().into() })
                }
                _ => Ok(()),
            };
        });
        res
    };
    for r in &rules {
        check(&Formula::Pred(r.head.clone()))?;
        for a in &r.body {
            check(a)?;
        }
    }
    check(&lhs)?;
    for g in &rhs {
        check(g)?;
    }
    let defined: std::collections::BTreeSet<&Pred> = rules.iter().map(|r| &r.head.pred).collect();
    if let Some(p) = arity.keys().find(|p| !defined.contains(p)) {
        return Err(ParseError::UnknownPredicate(p.to_string()));
    }
    let sid = Sid::new(rules, kappa.unwrap_or(1), opts.assume_established).map_err(ParseError::Sid)?;
    Ok(Problem { theory, sid, lhs, rhs })
}

/// Parses a formula in the internal syntax.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, mode: Mode::Internal };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.fail("trailing input");
    }
    Ok(f)
}

/// Parses a printed sequent `lhs |- rhs1, rhs2` in the internal syntax.
pub fn parse_sequent(text: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, mode: Mode::Internal };
    let lhs = p.formula()?;
    p.expect("|-")?;
    let rhs = p.formula_list("")?;
    if *p.peek() != Tok::Eof {
        return p.fail("trailing input");
    }
    Ok(Sequent { lhs, rhs })
}
