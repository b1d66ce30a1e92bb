//! LTL formula trees.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Implies(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Always(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
}

use LtlFormula::*;

pub fn atom(name: &str) -> LtlFormula {
    Atom(name.to_string())
}

pub fn not(f: LtlFormula) -> LtlFormula {
    Not(Box::new(f))
}

pub fn and(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    And(Box::new(a), Box::new(b))
}

pub fn or(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    Or(Box::new(a), Box::new(b))
}

pub fn implies(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    Implies(Box::new(a), Box::new(b))
}

pub fn next(f: LtlFormula) -> LtlFormula {
    Next(Box::new(f))
}

pub fn always(f: LtlFormula) -> LtlFormula {
    Always(Box::new(f))
}

pub fn eventually(f: LtlFormula) -> LtlFormula {
    Eventually(Box::new(f))
}

pub fn until(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    Until(Box::new(a), Box::new(b))
}

/// Left-nested conjunction; `True` when empty.
pub fn conjunction<I: IntoIterator<Item = LtlFormula>>(fs: I) -> LtlFormula {
    fs.into_iter().reduce(and).unwrap_or(True)
}

/// Left-nested disjunction; `False` when empty.
pub fn disjunction<I: IntoIterator<Item = LtlFormula>>(fs: I) -> LtlFormula {
    fs.into_iter().reduce(or).unwrap_or(False)
}

impl LtlFormula {
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Atom(a) = f {
                out.insert(a.clone());
            }
        });
        out
    }

    pub fn visit<F: FnMut(&LtlFormula)>(&self, f: &mut F) {
        f(self);
        match self {
            True | False | Atom(_) => {}
            Not(a) | Next(a) | Always(a) | Eventually(a) => a.visit(f),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// True when no temporal operator occurs.
    pub fn is_propositional(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |f| {
            if matches!(f, Next(_) | Always(_) | Eventually(_) | Until(..)) {
                ok = false;
            }
        });
        ok
    }

    /// Replaces atoms by formulas; atoms not mapped are kept.
    pub fn substitute<F>(&self, map: &F) -> LtlFormula
    where
        F: Fn(&str) -> Option<LtlFormula>,
    {
        let rec = |f: &LtlFormula| Box::new(f.substitute(map));
        match self {
            True => True,
            False => False,
            Atom(a) => map(a).unwrap_or_else(|| Atom(a.clone())),
            Not(a) => Not(rec(a)),
            Next(a) => Next(rec(a)),
            Always(a) => Always(rec(a)),
            Eventually(a) => Eventually(rec(a)),
            And(a, b) => And(rec(a), rec(b)),
            Or(a, b) => Or(rec(a), rec(b)),
            Implies(a, b) => Implies(rec(a), rec(b)),
            Until(a, b) => Until(rec(a), rec(b)),
        }
    }

    /// Evaluates a propositional formula under an assignment.
    /// Panics on temporal operators.
    pub fn eval_prop<F: Fn(&str) -> bool>(&self, val: &F) -> bool {
        match self {
            True => true,
            False => false,
            Atom(a) => val(a),
            Not(a) => !a.eval_prop(val),
            And(a, b) => a.eval_prop(val) && b.eval_prop(val),
            Or(a, b) => a.eval_prop(val) || b.eval_prop(val),
            Implies(a, b) => !a.eval_prop(val) || b.eval_prop(val),
            _ => panic!("eval_prop on temporal formula"),
        }
    }

    /// Every binary node wrapped in parentheses.
    pub fn fully_parenthesized(&self) -> String {
        match self {
            True => "TRUE".into(),
            False => "FALSE".into(),
            Atom(a) => a.clone(),
            Not(a) => format!("!{}", a.fully_parenthesized()),
            Next(a) => format!("NEXT {}", a.fully_parenthesized()),
            Always(a) => format!("ALWAYS {}", a.fully_parenthesized()),
            Eventually(a) => format!("EVENTUALLY {}", a.fully_parenthesized()),
            And(a, b) => format!("({} && {})", a.fully_parenthesized(), b.fully_parenthesized()),
            Or(a, b) => format!("({} || {})", a.fully_parenthesized(), b.fully_parenthesized()),
            Implies(a, b) => {
                format!("({} -> {})", a.fully_parenthesized(), b.fully_parenthesized())
            }
            Until(a, b) => {
                format!("({} UNTIL {})", a.fully_parenthesized(), b.fully_parenthesized())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Implies(..) => 1,
            Or(..) => 2,
            And(..) => 3,
            Until(..) => 4,
            Not(_) | Next(_) | Always(_) | Eventually(_) => 5,
            True | False | Atom(_) => 6,
        }
    }
}

fn write_child(
    f: &mut fmt::Formatter<'_>,
    child: &LtlFormula,
    min_prec: u8,
) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn write_unary(f: &mut fmt::Formatter<'_>, op: &str, child: &LtlFormula) -> fmt::Result {
    match child {
        True | False | Atom(_) if op == "!" => write!(f, "!{child}"),
        True | False | Atom(_) => write!(f, "{op} {child}"),
        _ if op == "!" => write!(f, "!({child})"),
        _ => write!(f, "{op} ({child})"),
    }
}

/// Concrete syntax with minimal parentheses; reparses to the same tree.
impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "TRUE"),
            False => write!(f, "FALSE"),
            Atom(a) => write!(f, "{a}"),
            Not(a) => write_unary(f, "!", a),
            Next(a) => write_unary(f, "NEXT", a),
            Always(a) => write_unary(f, "ALWAYS", a),
            Eventually(a) => write_unary(f, "EVENTUALLY", a),
            // left-associative
            And(a, b) => {
                write_child(f, a, 3)?;
                write!(f, " && ")?;
                write_child(f, b, 4)
            }
            Or(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " || ")?;
                write_child(f, b, 3)
            }
            // right-associative
            Implies(a, b) => {
                write_child(f, a, 2)?;
                write!(f, " -> ")?;
                write_child(f, b, 1)
            }
            Until(a, b) => {
                write_child(f, a, 5)?;
                write!(f, " UNTIL ")?;
                write_child(f, b, 4)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_minimal_parens() {
        let f = always(implies(atom("req1"), next(atom("grant1"))));
        assert_eq!(f.to_string(), "ALWAYS (req1 -> NEXT grant1)");
        let g = always(not(and(atom("g1"), atom("g2"))));
        assert_eq!(g.to_string(), "ALWAYS (!(g1 && g2))");
        let h = and(atom("a"), and(atom("b"), atom("c")));
        assert_eq!(h.to_string(), "a && (b && c)");
        let u = until(and(not(atom("s1")), not(atom("s2"))), atom("op"));
        assert_eq!(u.to_string(), "(!s1 && !s2) UNTIL op");
    }

    #[test]
    fn substitution_and_atoms() {
        let f = implies(atom("stop"), next(atom("x")));
        let g = f.substitute(&|a| (a == "stop").then(|| and(atom("s1"), atom("s2"))));
        assert_eq!(g.atoms().into_iter().collect::<Vec<_>>(), vec!["s1", "s2", "x"]);
        assert!(!g.is_propositional());
        assert_eq!(conjunction(vec![]), True);
    }
}
