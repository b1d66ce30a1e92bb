//! Three-valued LTL evaluation on finite traces. A value is `Pending` when
//! the trace is too short to decide it.

use std::fmt;

use crate::abstraction::Valuation;
use crate::ltl::LtlFormula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict3 {
    True,
    False,
    Pending,
}

use Verdict3::*;

impl Verdict3 {
    fn not(self) -> Self {
        match self {
            True => False,
            False => True,
            Pending => Pending,
        }
    }

    fn and(self, o: Self) -> Self {
        match (self, o) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Pending,
        }
    }

    fn or(self, o: Self) -> Self {
        self.not().and(o.not()).not()
    }
}

impl fmt::Display for Verdict3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            True => "true",
            False => "false",
            Pending => "pending",
        })
    }
}

/// Value of `f` at every position of `trace`. Atoms missing from a letter
/// are unknown.
pub fn evaluate_finite(f: &LtlFormula, trace: &[Valuation]) -> Vec<Verdict3> {
    let n = trace.len();
    // backward recurrences; position n (past the end) is unknown
    let shift = |v: &[Verdict3], j: usize| if j + 1 < n { v[j + 1] } else { Pending };
    let unfold = |a: Option<&[Verdict3]>, b: &[Verdict3], until: bool| {
        let mut out = vec![Pending; n];
        for j in (0..n).rev() {
            let later = if j + 1 < n { out[j + 1] } else { Pending };
            out[j] = match a {
                Some(a) if until => b[j].or(a[j].and(later)),
                None if until => b[j].or(later),
                _ => b[j].and(later),
            };
        }
        out
    };
    match f {
        LtlFormula::True => vec![True; n],
        LtlFormula::False => vec![False; n],
        LtlFormula::Atom(a) => trace
            .iter()
            .map(|l| match l.get(a) {
                Some(true) => True,
                Some(false) => False,
                None => Pending,
            })
            .collect(),
        LtlFormula::Not(x) => evaluate_finite(x, trace).into_iter().map(Verdict3::not).collect(),
        LtlFormula::And(a, b) => zip(a, b, trace, Verdict3::and),
        LtlFormula::Or(a, b) => zip(a, b, trace, Verdict3::or),
        LtlFormula::Implies(a, b) => zip(a, b, trace, |x, y| x.not().or(y)),
        LtlFormula::Next(x) => {
            let v = evaluate_finite(x, trace);
            (0..n).map(|j| shift(&v, j)).collect()
        }
        LtlFormula::Always(x) => unfold(None, &evaluate_finite(x, trace), false),
        LtlFormula::Eventually(x) => unfold(None, &evaluate_finite(x, trace), true),
        LtlFormula::Until(a, b) => {
            let va = evaluate_finite(a, trace);
            unfold(Some(&va), &evaluate_finite(b, trace), true)
        }
    }
}

fn zip<F: Fn(Verdict3, Verdict3) -> Verdict3>(
    a: &LtlFormula,
    b: &LtlFormula,
    trace: &[Valuation],
    op: F,
) -> Vec<Verdict3> {
    let va = evaluate_finite(a, trace);
    let vb = evaluate_finite(b, trace);
    va.into_iter().zip(vb).map(|(x, y)| op(x, y)).collect()
}

/// Monitor outcome for one formula. For `ALWAYS body` the positions refer
/// to the body's value at each step; otherwise to the formula at step 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaReport {
    pub formula: LtlFormula,
    pub verdict: Verdict3,
    pub violations: Vec<usize>,
    pub pending: Vec<usize>,
}

pub fn monitor(formulas: &[LtlFormula], trace: &[Valuation]) -> Vec<FormulaReport> {
    formulas
        .iter()
        .map(|f| {
            let (values, verdict) = match f {
                LtlFormula::Always(body) => {
                    let v = evaluate_finite(body, trace);
                    let verdict = if v.contains(&False) { False } else { Pending };
                    (v, verdict)
                }
                _ => {
                    let v = evaluate_finite(f, trace);
                    let verdict = v.first().copied().unwrap_or(Pending);
                    (v.into_iter().take(1).collect(), verdict)
                }
            };
            let at = |want: Verdict3| values.iter().enumerate().filter(|(_, &x)| x == want).map(|(i, _)| i).collect();
            FormulaReport { formula: f.clone(), verdict, violations: at(False), pending: at(Pending) }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{always, atom, eventually, implies, next, until};

    fn trace(bits: &[(bool, bool)]) -> Vec<Valuation> {
        bits.iter().map(|&(a, b)| [("a".to_string(), a), ("b".to_string(), b)].into()).collect()
    }

    #[test]
    fn basic_values() {
        let t = trace(&[(true, false), (true, false), (false, true)]);
        assert_eq!(evaluate_finite(&until(atom("a"), atom("b")), &t), vec![True, True, True]);
        assert_eq!(evaluate_finite(&eventually(atom("b")), &t)[0], True);
        assert_eq!(evaluate_finite(&always(atom("a")), &t), vec![False, False, False]);
        assert_eq!(evaluate_finite(&always(atom("a")), &t[..2]), vec![Pending, Pending]);
        assert_eq!(evaluate_finite(&next(atom("b")), &t), vec![False, True, Pending]);
    }

    #[test]
    fn request_response_report() {
        let f = always(implies(atom("a"), next(atom("b"))));
        let t = trace(&[(true, false), (false, true), (true, false), (false, false), (true, false)]);
        let r = &monitor(&[f], &t)[0];
        assert_eq!(r.verdict, False);
        assert_eq!(r.violations, vec![2]);
        assert_eq!(r.pending, vec![4]);
    }
}
