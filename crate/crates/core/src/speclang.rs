//! Textual specification language: Boolean and predicate atoms, bounded real
//! variables, assumptions and guarantees.
//!
//! ```text
//! ## comment
//! REAL x IN [0, 4]
//! OUTPUT REAL u IN [0, 1]
//! PRED req1 := x + y > 3
//! ASSUME ALWAYS (EVENTUALLY operator)
//! ALWAYS (req1 -> NEXT grant1)
//! INPUT error, operator
//! OUTPUT grant1
//! ```
//!
//! Each non-comment line is one statement. Real variables are input-side
//! unless declared with `OUTPUT REAL`; a predicate takes the side of the
//! variables it mentions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::bernstein::ConstraintFormula;
use crate::ltl::LtlFormula;
use crate::poly::{
    format_rational, parse_rational, PolyConstraint, Polynomial, RealBox, Rational, Relation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Input,
    Output,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Input => write!(f, "input"),
            Side::Output => write!(f, "output"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealVarDecl {
    pub name: String,
    pub lower: Rational,
    pub upper: Rational,
    pub side: Side,
}

/// A predicate atom bound to a polynomial constraint over the document's real
/// variables (indexed by declaration order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDef {
    pub atom: String,
    pub constraint: PolyConstraint,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecDocument {
    pub boolean_inputs: Vec<String>,
    pub boolean_outputs: Vec<String>,
    pub real_vars: Vec<RealVarDecl>,
    pub predicates: Vec<PredicateDef>,
    pub assumptions: Vec<LtlFormula>,
    pub guarantees: Vec<LtlFormula>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("line {line}, column {col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}, column {col}: unsupported operator `<->`; write it as two implications (a -> b) && (b -> a)")]
    Biconditional { line: usize, col: usize },
    #[error("line {line}: undeclared atom `{name}` (every atom must be an input, output or predicate)")]
    UndeclaredAtom { name: String, line: usize },
    #[error("line {line}: unknown real variable `{name}`")]
    UnknownVariable { name: String, line: usize },
    #[error("line {line}: duplicate declaration of `{name}` (atom and variable namespaces must be disjoint)")]
    DuplicateDeclaration { name: String, line: usize },
    #[error("line {line}: predicate `{atom}` mixes input-side and output-side variables")]
    MixedSidePredicate { atom: String, line: usize },
    #[error("line {line}: predicate `{atom}` is {side}-side but listed under the other side")]
    PredicateWrongSide { atom: String, side: Side, line: usize },
    #[error("line {line}: empty interval for `{name}` (lower bound exceeds upper bound)")]
    EmptyInterval { name: String, line: usize },
    #[error("no guarantees: a specification needs at least one guarantee")]
    NoGuarantees,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

impl SpecDocument {
    pub fn var_names(&self) -> Vec<String> {
        self.real_vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn predicate(&self, atom: &str) -> Option<&PredicateDef> {
        self.predicates.iter().find(|p| p.atom == atom)
    }

    pub fn predicate_atoms(&self, side: Side) -> Vec<String> {
        self.predicates.iter().filter(|p| p.side == side).map(|p| p.atom.clone()).collect()
    }

    /// Boolean inputs followed by input-side predicate atoms.
    pub fn all_inputs(&self) -> Vec<String> {
        let mut v = self.boolean_inputs.clone();
        v.extend(self.predicate_atoms(Side::Input));
        v
    }

    pub fn all_outputs(&self) -> Vec<String> {
        let mut v = self.boolean_outputs.clone();
        v.extend(self.predicate_atoms(Side::Output));
        v
    }

    pub fn real_box(&self) -> RealBox {
        RealBox::new(self.real_vars.iter().map(|v| (v.lower.clone(), v.upper.clone())).collect())
            .expect("validated intervals")
    }

    /// Checks the document invariants. Line numbers in errors are 0 for
    /// documents not produced by the parser.
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut seen = BTreeSet::new();
        let names = self
            .boolean_inputs
            .iter()
            .chain(&self.boolean_outputs)
            .chain(self.predicates.iter().map(|p| &p.atom))
            .chain(self.real_vars.iter().map(|v| &v.name));
        for n in names {
            if !seen.insert(n.clone()) {
                return Err(SpecError::DuplicateDeclaration { name: n.clone(), line: 0 });
            }
        }
        for v in &self.real_vars {
            if v.lower > v.upper {
                return Err(SpecError::EmptyInterval { name: v.name.clone(), line: 0 });
            }
        }
        for p in &self.predicates {
            let vars = p.constraint.poly.used_vars();
            if vars.iter().any(|&i| i >= self.real_vars.len())
                || p.constraint.arity() != self.real_vars.len()
            {
                return Err(SpecError::UnknownVariable { name: p.atom.clone(), line: 0 });
            }
            if vars.iter().any(|&i| self.real_vars[i].side != p.side) {
                return Err(SpecError::MixedSidePredicate { atom: p.atom.clone(), line: 0 });
            }
        }
        let atoms: BTreeSet<String> =
            self.all_inputs().into_iter().chain(self.all_outputs()).collect();
        for f in self.assumptions.iter().chain(&self.guarantees) {
            if let Some(bad) = f.atoms().into_iter().find(|a| !atoms.contains(a)) {
                return Err(SpecError::UndeclaredAtom { name: bad, line: 0 });
            }
        }
        if self.guarantees.is_empty() {
            return Err(SpecError::NoGuarantees);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Kw(Kw),
    Sym(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kw {
    Always,
    Eventually,
    Next,
    Until,
    Assume,
    Input,
    Output,
    Real,
    Pred,
    In,
    True,
    False,
}

fn keyword(s: &str) -> Option<Kw> {
    Some(match s {
        "ALWAYS" => Kw::Always,
        "EVENTUALLY" => Kw::Eventually,
        "NEXT" => Kw::Next,
        "UNTIL" => Kw::Until,
        "ASSUME" => Kw::Assume,
        "INPUT" => Kw::Input,
        "OUTPUT" => Kw::Output,
        "REAL" => Kw::Real,
        "PRED" => Kw::Pred,
        "IN" => Kw::In,
        "TRUE" | "true" => Kw::True,
        "FALSE" | "false" => Kw::False,
        _ => return None,
    })
}

pub fn is_keyword(s: &str) -> bool {
    keyword(s).is_some()
}

// longest first
const SYMBOLS: &[&str] = &[
    "<->", "&&", "||", "->", ":=", "<=", ">=", "!", "(", ")", ",", "[", "]", "+", "-", "*", "^",
    "/", "<", ">",
];

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex(line_no: usize, text: &str) -> Result<Vec<Token>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = keyword(&word).map(Tok::Kw).unwrap_or(Tok::Ident(word));
            out.push(Token { tok, col });
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word.matches('.').count() > 1 {
                return Err(SpecError::Syntax {
                    line: line_no,
                    col,
                    msg: format!("malformed number `{word}`"),
                });
            }
            out.push(Token { tok: Tok::Number(word), col });
        } else {
            let rest: String = chars[i..].iter().take(3).collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    if *s == "<->" {
                        return Err(SpecError::Biconditional { line: line_no, col });
                    }
                    out.push(Token { tok: Tok::Sym(s), col });
                    i += s.len();
                }
                None => {
                    return Err(SpecError::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, text_len: usize) -> Self {
        Self { toks, pos: 0, line, end_col: text_len + 1 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.col).unwrap_or(self.end_col)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> SpecError {
        SpecError::Syntax { line: self.line, col: self.col(), msg: msg.into() }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), SpecError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn eat_kw(&mut self, k: Kw) -> bool {
        if self.peek() == Some(&Tok::Kw(k)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, SpecError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<(), SpecError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }

    // formula := implies
    fn formula(&mut self) -> Result<LtlFormula, SpecError> {
        let lhs = self.disj()?;
        if self.eat_sym("->") {
            let rhs = self.formula()?;
            return Ok(crate::ltl::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> Result<LtlFormula, SpecError> {
        let mut lhs = self.conj()?;
        while self.eat_sym("||") {
            let rhs = self.conj()?;
            lhs = crate::ltl::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<LtlFormula, SpecError> {
        let mut lhs = self.until()?;
        while self.eat_sym("&&") {
            let rhs = self.until()?;
            lhs = crate::ltl::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlFormula, SpecError> {
        let lhs = self.unary()?;
        if self.eat_kw(Kw::Until) {
            let rhs = self.until()?;
            return Ok(crate::ltl::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlFormula, SpecError> {
        if self.eat_sym("!") {
            return Ok(crate::ltl::not(self.unary()?));
        }
        if self.eat_kw(Kw::Always) {
            return Ok(crate::ltl::always(self.unary()?));
        }
        if self.eat_kw(Kw::Eventually) {
            return Ok(crate::ltl::eventually(self.unary()?));
        }
        if self.eat_kw(Kw::Next) {
            return Ok(crate::ltl::next(self.unary()?));
        }
        if self.eat_kw(Kw::True) {
            return Ok(LtlFormula::True);
        }
        if self.eat_kw(Kw::False) {
            return Ok(LtlFormula::False);
        }
        if self.eat_sym("(") {
            let f = self.formula()?;
            self.expect_sym(")")?;
            return Ok(f);
        }
        match self.peek() {
            Some(Tok::Ident(_)) => Ok(LtlFormula::Atom(self.ident()?)),
            _ => Err(self.err("expected formula")),
        }
    }

    fn signed_rational(&mut self) -> Result<Rational, SpecError> {
        let neg = self.eat_sym("-");
        let r = self.rational_literal()?;
        Ok(if neg { -r } else { r })
    }

    fn rational_literal(&mut self) -> Result<Rational, SpecError> {
        let col = self.col();
        let num = match self.bump() {
            Some(Tok::Number(n)) => n.clone(),
            _ => {
                self.pos -= 1;
                return Err(self.err("expected number"));
            }
        };
        let mut text = num;
        if matches!(self.peek(), Some(Tok::Sym("/"))) {
            self.pos += 1;
            match self.bump() {
                Some(Tok::Number(d)) => {
                    text = format!("{text}/{d}");
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.err("`/` is only allowed between two numbers"));
                }
            }
        }
        parse_rational(&text)
            .map_err(|e| SpecError::Syntax { line: self.line, col, msg: e.to_string() })
    }

    // poly := term (('+'|'-') term)*
    fn poly(&mut self, vars: &VarScope) -> Result<Polynomial, SpecError> {
        let mut acc = self.term(vars)?;
        loop {
            if self.eat_sym("+") {
                acc = &acc + &self.term(vars)?;
            } else if self.eat_sym("-") {
                acc = &acc - &self.term(vars)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self, vars: &VarScope) -> Result<Polynomial, SpecError> {
        let mut acc = self.signed_factor(vars)?;
        while self.eat_sym("*") {
            acc = &acc * &self.signed_factor(vars)?;
        }
        Ok(acc)
    }

    fn signed_factor(&mut self, vars: &VarScope) -> Result<Polynomial, SpecError> {
        if self.eat_sym("-") {
            return Ok(-self.signed_factor(vars)?);
        }
        let base = self.poly_atom(vars)?;
        if self.eat_sym("^") {
            match self.bump() {
                Some(Tok::Number(n)) if n.chars().all(|c| c.is_ascii_digit()) => {
                    let e: u32 = n.parse().map_err(|_| self.err("exponent too large"))?;
                    return Ok(base.pow(e));
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.err("exponent must be a nonnegative integer"));
                }
            }
        }
        Ok(base)
    }

    fn poly_atom(&mut self, vars: &VarScope) -> Result<Polynomial, SpecError> {
        match self.peek() {
            Some(Tok::Number(_)) => {
                let r = self.rational_literal()?;
                Ok(Polynomial::constant(vars.names.len(), r))
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                match vars.names.iter().position(|n| *n == name) {
                    Some(i) => Ok(Polynomial::var(vars.names.len(), i)),
                    None => Err(SpecError::UnknownVariable { name, line: self.line }),
                }
            }
            Some(Tok::Sym("(")) => {
                self.pos += 1;
                let p = self.poly(vars)?;
                self.expect_sym(")")?;
                Ok(p)
            }
            _ => Err(self.err("expected number, variable or `(`")),
        }
    }

    fn relation(&mut self) -> Result<Relation, SpecError> {
        let rel = match self.peek() {
            Some(Tok::Sym("<")) => Relation::Lt,
            Some(Tok::Sym("<=")) => Relation::Le,
            Some(Tok::Sym(">")) => Relation::Gt,
            Some(Tok::Sym(">=")) => Relation::Ge,
            _ => return Err(self.err("expected one of <, <=, >, >=")),
        };
        self.pos += 1;
        Ok(rel)
    }

    fn constraint(&mut self, vars: &VarScope) -> Result<PolyConstraint, SpecError> {
        let lhs = self.poly(vars)?;
        let rel = self.relation()?;
        let rhs = self.poly(vars)?;
        Ok(PolyConstraint::compare(&lhs, rel, &rhs))
    }

    // constraint formulas: same connective precedence as LTL, atoms are comparisons
    fn cformula(&mut self, vars: &VarScope) -> Result<ConstraintFormula, SpecError> {
        let lhs = self.cdisj(vars)?;
        if self.eat_sym("->") {
            let rhs = self.cformula(vars)?;
            return Ok(ConstraintFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn cdisj(&mut self, vars: &VarScope) -> Result<ConstraintFormula, SpecError> {
        let mut parts = vec![self.cconj(vars)?];
        while self.eat_sym("||") {
            parts.push(self.cconj(vars)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { ConstraintFormula::Or(parts) })
    }

    fn cconj(&mut self, vars: &VarScope) -> Result<ConstraintFormula, SpecError> {
        let mut parts = vec![self.cunary(vars)?];
        while self.eat_sym("&&") {
            parts.push(self.cunary(vars)?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { ConstraintFormula::And(parts) })
    }

    fn cunary(&mut self, vars: &VarScope) -> Result<ConstraintFormula, SpecError> {
        if self.eat_sym("!") {
            return Ok(self.cunary(vars)?.negate());
        }
        // `(` may open either a nested formula or a polynomial; try the formula first
        if matches!(self.peek(), Some(Tok::Sym("("))) {
            let save = self.pos;
            self.pos += 1;
            if let Ok(f) = self.cformula(vars) {
                if self.eat_sym(")") && !self.at_comparison() {
                    return Ok(f);
                }
            }
            self.pos = save;
        }
        Ok(ConstraintFormula::atom(self.constraint(vars)?))
    }

    fn at_comparison(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Sym("<" | "<=" | ">" | ">=" | "+" | "-" | "*" | "^"))
        )
    }
}

struct VarScope {
    names: Vec<String>,
}

/// Parses a spec, discarding warnings.
pub fn parse_spec(text: &str) -> Result<SpecDocument, SpecError> {
    parse_spec_with_warnings(text).map(|(d, _)| d)
}

enum Stmt {
    Io { side: Side, names: Vec<String> },
    Pred { atom: String, constraint: PolyConstraint },
    Formula { assume: bool, f: LtlFormula },
}

/// Parses a spec and reports non-fatal diagnostics (predicate atoms re-listed
/// under INPUT/OUTPUT are accepted and dropped from the Boolean lists).
pub fn parse_spec_with_warnings(text: &str) -> Result<(SpecDocument, Vec<Warning>), SpecError> {
    let lines: Vec<(usize, &str, Vec<Token>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with("##")
        })
        .map(|(n, l)| lex(n, l).map(|t| (n, l, t)))
        .collect::<Result<_, _>>()?;

    let mut declared: BTreeMap<String, usize> = BTreeMap::new();
    let mut declare = |name: &str, line: usize| -> Result<(), SpecError> {
        if declared.insert(name.to_string(), line).is_some() {
            return Err(SpecError::DuplicateDeclaration { name: name.to_string(), line });
        }
        Ok(())
    };

    // pass 1: real variables
    let mut real_vars = Vec::new();
    for (n, l, toks) in &lines {
        let mut c = Cursor::new(toks, *n, l.len());
        let side = if matches!(toks.first().map(|t| &t.tok), Some(Tok::Kw(Kw::Output)))
            && matches!(toks.get(1).map(|t| &t.tok), Some(Tok::Kw(Kw::Real)))
        {
            c.pos = 2;
            Side::Output
        } else if c.eat_kw(Kw::Real) {
            Side::Input
        } else {
            continue;
        };
        let name = c.ident()?;
        if !c.eat_kw(Kw::In) {
            return Err(c.err("expected `IN`"));
        }
        c.expect_sym("[")?;
        let lower = c.signed_rational()?;
        c.expect_sym(",")?;
        let upper = c.signed_rational()?;
        c.expect_sym("]")?;
        c.expect_end()?;
        if lower > upper {
            return Err(SpecError::EmptyInterval { name, line: *n });
        }
        declare(&name, *n)?;
        real_vars.push(RealVarDecl { name, lower, upper, side });
    }
    let scope = VarScope { names: real_vars.iter().map(|v| v.name.clone()).collect() };

    // pass 2: everything else
    let mut stmts = Vec::new();
    for (n, l, toks) in &lines {
        let mut c = Cursor::new(toks, *n, l.len());
        let stmt = match c.peek() {
            Some(Tok::Kw(Kw::Real)) => continue,
            Some(Tok::Kw(Kw::Output))
                if matches!(toks.get(1).map(|t| &t.tok), Some(Tok::Kw(Kw::Real))) =>
            {
                continue
            }
            Some(Tok::Kw(k @ (Kw::Input | Kw::Output))) => {
                let side = if *k == Kw::Input { Side::Input } else { Side::Output };
                c.pos += 1;
                let mut names = Vec::new();
                if !c.at_end() {
                    names.push(c.ident()?);
                    while c.eat_sym(",") {
                        names.push(c.ident()?);
                    }
                }
                c.expect_end()?;
                Stmt::Io { side, names }
            }
            Some(Tok::Kw(Kw::Pred)) => {
                c.pos += 1;
                let atom = c.ident()?;
                c.expect_sym(":=")?;
                let constraint = c.constraint(&scope)?;
                c.expect_end()?;
                Stmt::Pred { atom, constraint }
            }
            Some(Tok::Kw(Kw::Assume)) => {
                c.pos += 1;
                let f = c.formula()?;
                c.expect_end()?;
                Stmt::Formula { assume: true, f }
            }
            _ => {
                let f = c.formula()?;
                c.expect_end()?;
                Stmt::Formula { assume: false, f }
            }
        };
        stmts.push((*n, stmt));
    }

    let mut doc = SpecDocument { real_vars, ..Default::default() };
    let mut warnings = Vec::new();

    for (n, stmt) in &stmts {
        if let Stmt::Pred { atom, constraint } = stmt {
            declare(atom, *n)?;
            let sides: BTreeSet<Side> = constraint
                .poly
                .used_vars()
                .into_iter()
                .map(|i| doc.real_vars[i].side)
                .collect();
            if sides.len() > 1 {
                return Err(SpecError::MixedSidePredicate { atom: atom.clone(), line: *n });
            }
            let side = sides.into_iter().next().unwrap_or(Side::Input);
            doc.predicates.push(PredicateDef {
                atom: atom.clone(),
                constraint: constraint.clone(),
                side,
            });
        }
    }
    let pred_side: BTreeMap<String, Side> =
        doc.predicates.iter().map(|p| (p.atom.clone(), p.side)).collect();

    for (n, stmt) in &stmts {
        if let Stmt::Io { side, names } = stmt {
            for name in names {
                if let Some(ps) = pred_side.get(name) {
                    if ps != side {
                        return Err(SpecError::PredicateWrongSide {
                            atom: name.clone(),
                            side: *ps,
                            line: *n,
                        });
                    }
                    warnings.push(Warning {
                        line: *n,
                        message: format!(
                            "predicate atom `{name}` is implicitly {side}-side and need not be listed"
                        ),
                    });
                    continue;
                }
                declare(name, *n)?;
                match side {
                    Side::Input => doc.boolean_inputs.push(name.clone()),
                    Side::Output => doc.boolean_outputs.push(name.clone()),
                }
            }
        }
    }

    let atoms: BTreeSet<String> = doc.all_inputs().into_iter().chain(doc.all_outputs()).collect();
    for (n, stmt) in stmts {
        if let Stmt::Formula { assume, f } = stmt {
            if let Some(bad) = f.atoms().into_iter().find(|a| !atoms.contains(a)) {
                return Err(SpecError::UndeclaredAtom { name: bad, line: n });
            }
            if assume {
                doc.assumptions.push(f);
            } else {
                doc.guarantees.push(f);
            }
        }
    }
    if doc.guarantees.is_empty() {
        return Err(SpecError::NoGuarantees);
    }
    Ok((doc, warnings))
}

/// Parses a single formula line (no declarations or atom checks).
pub fn parse_formula(text: &str) -> Result<LtlFormula, SpecError> {
    let toks = lex(1, text)?;
    let mut c = Cursor::new(&toks, 1, text.len());
    let f = c.formula()?;
    c.expect_end()?;
    Ok(f)
}

/// Parses `<poly> <rel> <poly>` over the given variable names.
pub fn parse_constraint(text: &str, vars: &[String]) -> Result<PolyConstraint, SpecError> {
    let toks = lex(1, text)?;
    let scope = VarScope { names: vars.to_vec() };
    let mut c = Cursor::new(&toks, 1, text.len());
    let r = c.constraint(&scope)?;
    c.expect_end()?;
    Ok(r)
}

/// Parses a propositional combination of comparisons, e.g.
/// `x + y > 3 -> x^2 + y^2 >= 7/2`.
pub fn parse_constraint_formula(
    text: &str,
    vars: &[String],
) -> Result<ConstraintFormula, SpecError> {
    let toks = lex(1, text)?;
    let scope = VarScope { names: vars.to_vec() };
    let mut c = Cursor::new(&toks, 1, text.len());
    let f = c.cformula(&scope)?;
    c.expect_end()?;
    Ok(f)
}

/// Parses one `REAL <name> IN [lo, hi]` declaration.
pub fn parse_real_decl(text: &str) -> Result<RealVarDecl, SpecError> {
    let toks = lex(1, text)?;
    let mut c = Cursor::new(&toks, 1, text.len());
    if !c.eat_kw(Kw::Real) {
        return Err(c.err("expected `REAL`"));
    }
    let name = c.ident()?;
    if !c.eat_kw(Kw::In) {
        return Err(c.err("expected `IN`"));
    }
    c.expect_sym("[")?;
    let lower = c.signed_rational()?;
    c.expect_sym(",")?;
    let upper = c.signed_rational()?;
    c.expect_sym("]")?;
    c.expect_end()?;
    if lower > upper {
        return Err(SpecError::EmptyInterval { name, line: 1 });
    }
    Ok(RealVarDecl { name, lower, upper, side: Side::Input })
}

// ---------------------------------------------------------------------------
// Printer

pub fn format_real_decl(v: &RealVarDecl) -> String {
    let prefix = if v.side == Side::Output { "OUTPUT " } else { "" };
    format!(
        "{prefix}REAL {} IN [{}, {}]",
        v.name,
        format_rational(&v.lower),
        format_rational(&v.upper)
    )
}

pub fn format_predicate(p: &PredicateDef, var_names: &[String]) -> String {
    format!("PRED {} := {}", p.atom, p.constraint.display_with(var_names))
}

/// Renders a document; `parse_spec(&format_spec(d)) == Ok(d)` for valid `d`.
pub fn format_spec(doc: &SpecDocument) -> String {
    let mut out = String::new();
    let names = doc.var_names();
    for v in &doc.real_vars {
        out.push_str(&format_real_decl(v));
        out.push('\n');
    }
    for p in &doc.predicates {
        out.push_str(&format_predicate(p, &names));
        out.push('\n');
    }
    if !doc.real_vars.is_empty() || !doc.predicates.is_empty() {
        out.push('\n');
    }
    for a in &doc.assumptions {
        out.push_str(&format!("ASSUME {a}\n"));
    }
    for g in &doc.guarantees {
        out.push_str(&format!("{g}\n"));
    }
    out.push('\n');
    if !doc.boolean_inputs.is_empty() {
        out.push_str(&format!("INPUT {}\n", doc.boolean_inputs.join(", ")));
    }
    if !doc.boolean_outputs.is_empty() {
        out.push_str(&format!("OUTPUT {}\n", doc.boolean_outputs.join(", ")));
    }
    out
}
