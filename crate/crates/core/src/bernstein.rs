//! Bernstein-basis range enclosures and branch-and-bound constraint checking.
//!
//! Every polynomial is first mapped onto the unit box by an affine change of
//! variables, then converted to the tensor Bernstein basis. The minimum and
//! maximum Bernstein coefficients enclose the polynomial's range on the box;
//! bisection tightens the enclosure. All arithmetic is exact.

use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::{binomial, PolyConstraint, PolyError, Polynomial, RealBox, Rational, Relation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BernsteinError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("degree vector {requested:?} is below the polynomial degree {actual:?}")]
    DegreeTooLow { requested: Vec<u32>, actual: Vec<u32> },
    #[error("feasibility check needs at least one constraint")]
    EmptyConstraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckConfig {
    /// Maximum number of bisections along any single search path.
    pub max_depth: u32,
    /// Global cap on the number of subboxes examined.
    pub max_boxes: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { max_depth: 24, max_boxes: 200_000 }
    }
}

impl CheckConfig {
    pub fn with_depth(max_depth: u32) -> Self {
        Self { max_depth, ..Self::default() }
    }
}

/// Coefficients in the tensor Bernstein basis of degree `degrees`,
/// stored row-major with the last dimension varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BernsteinTensor {
    degrees: Vec<u32>,
    coeffs: Vec<Rational>,
}

impl BernsteinTensor {
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn strides(&self) -> Vec<usize> {
        strides(&self.degrees)
    }

    pub fn get(&self, index: &[u32]) -> &Rational {
        let offset: usize =
            index.iter().zip(self.strides()).map(|(&j, s)| j as usize * s).sum();
        &self.coeffs[offset]
    }

    /// Multi-index of the flat position `offset`.
    pub fn multi_index(&self, mut offset: usize) -> Vec<u32> {
        let mut idx = vec![0; self.degrees.len()];
        for (i, s) in self.strides().iter().enumerate() {
            idx[i] = (offset / s) as u32;
            offset %= s;
        }
        idx
    }

    pub fn min(&self) -> &Rational {
        self.coeffs.iter().min().expect("tensor is never empty")
    }

    pub fn max(&self) -> &Rational {
        self.coeffs.iter().max().expect("tensor is never empty")
    }
}

fn strides(degrees: &[u32]) -> Vec<usize> {
    let mut s = vec![1; degrees.len()];
    for i in (0..degrees.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * (degrees[i + 1] as usize + 1);
    }
    s
}

/// Maps `p` from box `b` onto the unit box: `q(t) = p(lower + t * (upper - lower))`.
pub fn to_unit_box(p: &Polynomial, b: &RealBox) -> Result<Polynomial, BernsteinError> {
    if p.arity() != b.dims() {
        return Err(PolyError::ArityMismatch { expected: p.arity(), found: b.dims() }.into());
    }
    Ok(p.affine_substitute(&b.lower(), &b.widths()))
}

/// Converts a unit-box polynomial to its Bernstein coefficients of degree `degrees`.
///
/// The conversion `b_J = sum_{I <= J} prod_i C(J_i, I_i) / C(N_i, I_i) * a_I`
/// is separable, so it is applied one axis at a time.
pub fn bernstein_coefficients(
    p: &Polynomial,
    degrees: &[u32],
) -> Result<BernsteinTensor, BernsteinError> {
    if degrees.len() != p.arity() {
        return Err(PolyError::ArityMismatch { expected: p.arity(), found: degrees.len() }.into());
    }
    let actual = p.degree_vector();
    if actual.iter().zip(degrees).any(|(a, n)| a > n) {
        return Err(BernsteinError::DegreeTooLow { requested: degrees.to_vec(), actual });
    }
    let st = strides(degrees);
    let total: usize = degrees.iter().map(|&d| d as usize + 1).product();
    let mut coeffs = vec![Rational::zero(); total];
    for (exps, c) in p.terms() {
        let off: usize = exps.iter().zip(&st).map(|(&e, s)| e as usize * s).sum();
        coeffs[off] = c.clone();
    }

    for (axis, &n) in degrees.iter().enumerate() {
        if n == 0 {
            continue;
        }
        // weights[j][k] = C(j,k) / C(n,k) for k <= j
        let weights: Vec<Vec<Rational>> = (0..=n)
            .map(|j| {
                (0..=j)
                    .map(|k| Rational::new(binomial(j, k), binomial(n, k)))
                    .collect()
            })
            .collect();
        let stride = st[axis];
        let len = n as usize + 1;
        let block = stride * len;
        let mut next = vec![Rational::zero(); total];
        for base in (0..total).step_by(block) {
            for inner in 0..stride {
                let line: Vec<&Rational> =
                    (0..len).map(|k| &coeffs[base + inner + k * stride]).collect();
                for j in 0..len {
                    let mut acc = Rational::zero();
                    for (k, w) in weights[j].iter().enumerate() {
                        if !line[k].is_zero() {
                            acc += w * line[k];
                        }
                    }
                    next[base + inner + j * stride] = acc;
                }
            }
        }
        coeffs = next;
    }
    Ok(BernsteinTensor { degrees: degrees.to_vec(), coeffs })
}

/// Bernstein enclosure of `p` over `b` using degree vector `degrees`.
fn enclosure_with(
    p: &Polynomial,
    b: &RealBox,
    degrees: &[u32],
) -> Result<(Rational, Rational), BernsteinError> {
    let q = to_unit_box(p, b)?;
    let t = bernstein_coefficients(&q, degrees)?;
    Ok((t.min().clone(), t.max().clone()))
}

/// Certified range enclosure of `p` over `b`, tightened by bisecting the widest
/// dimension `depth` times along every path.
pub fn bounds(
    p: &Polynomial,
    b: &RealBox,
    depth: u32,
) -> Result<(Rational, Rational), BernsteinError> {
    if p.arity() != b.dims() {
        return Err(PolyError::ArityMismatch { expected: p.arity(), found: b.dims() }.into());
    }
    let degrees = p.degree_vector();
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    let mut stack = vec![(b.clone(), 0u32)];
    while let Some((sub, d)) = stack.pop() {
        if d < depth && sub.dims() > 0 {
            let (l, r) = sub.bisect(sub.widest_dim());
            stack.push((r, d + 1));
            stack.push((l, d + 1));
            continue;
        }
        let (l, h) = enclosure_with(p, &sub, &degrees)?;
        lo = Some(match lo {
            Some(cur) if cur <= l => cur,
            _ => l,
        });
        hi = Some(match hi {
            Some(cur) if cur >= h => cur,
            _ => h,
        });
    }
    Ok((lo.expect("at least one leaf"), hi.expect("at least one leaf")))
}

/// Three-valued truth of a formula over a whole box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }
}

/// Status of `p ▷ 0` over a box from an enclosure `[lo, hi]` of `p`.
/// Strict relations are only certified with strict margins.
pub fn relation_status(relation: Relation, lo: &Rational, hi: &Rational) -> Truth {
    let zero = Rational::zero();
    let (proven, refuted) = match relation {
        Relation::Gt => (*lo > zero, *hi <= zero),
        Relation::Ge => (*lo >= zero, *hi < zero),
        Relation::Lt => (*hi < zero, *lo >= zero),
        Relation::Le => (*hi <= zero, *lo > zero),
    };
    if proven {
        Truth::True
    } else if refuted {
        Truth::False
    } else {
        Truth::Unknown
    }
}

/// Propositional combination of polynomial constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintFormula {
    Atom(PolyConstraint),
    Not(Box<ConstraintFormula>),
    And(Vec<ConstraintFormula>),
    Or(Vec<ConstraintFormula>),
    Implies(Box<ConstraintFormula>, Box<ConstraintFormula>),
}

impl ConstraintFormula {
    pub fn atom(c: PolyConstraint) -> Self {
        ConstraintFormula::Atom(c)
    }

    pub fn implies(lhs: ConstraintFormula, rhs: ConstraintFormula) -> Self {
        ConstraintFormula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(self) -> Self {
        ConstraintFormula::Not(Box::new(self))
    }

    pub fn constraints(&self) -> Vec<&PolyConstraint> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a PolyConstraint>) {
        match self {
            ConstraintFormula::Atom(c) => out.push(c),
            ConstraintFormula::Not(f) => f.collect(out),
            ConstraintFormula::And(fs) | ConstraintFormula::Or(fs) => {
                fs.iter().for_each(|f| f.collect(out))
            }
            ConstraintFormula::Implies(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    pub fn holds_at(&self, point: &[Rational]) -> Result<bool, PolyError> {
        Ok(match self {
            ConstraintFormula::Atom(c) => c.holds_at(point)?,
            ConstraintFormula::Not(f) => !f.holds_at(point)?,
            ConstraintFormula::And(fs) => {
                for f in fs {
                    if !f.holds_at(point)? {
                        return Ok(false);
                    }
                }
                true
            }
            ConstraintFormula::Or(fs) => {
                for f in fs {
                    if f.holds_at(point)? {
                        return Ok(true);
                    }
                }
                false
            }
            ConstraintFormula::Implies(a, b) => !a.holds_at(point)? || b.holds_at(point)?,
        })
    }

    /// Kleene evaluation given per-atom statuses, consumed in `constraints()` order.
    fn status(&self, atoms: &mut std::slice::Iter<'_, Truth>) -> Truth {
        match self {
            ConstraintFormula::Atom(_) => *atoms.next().expect("status per atom"),
            ConstraintFormula::Not(f) => f.status(atoms).not(),
            ConstraintFormula::And(fs) => {
                let vals: Vec<Truth> = fs.iter().map(|f| f.status(atoms)).collect();
                if vals.contains(&Truth::False) {
                    Truth::False
                } else if vals.contains(&Truth::Unknown) {
                    Truth::Unknown
                } else {
                    Truth::True
                }
            }
            ConstraintFormula::Or(fs) => {
                let vals: Vec<Truth> = fs.iter().map(|f| f.status(atoms)).collect();
                if vals.contains(&Truth::True) {
                    Truth::True
                } else if vals.contains(&Truth::Unknown) {
                    Truth::Unknown
                } else {
                    Truth::False
                }
            }
            ConstraintFormula::Implies(a, b) => {
                let (a, b) = (a.status(atoms), b.status(atoms));
                match (a, b) {
                    (Truth::False, _) | (_, Truth::True) => Truth::True,
                    (Truth::True, Truth::False) => Truth::False,
                    _ => Truth::Unknown,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(Vec<Rational>),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeasibilityVerdict {
    Feasible(Vec<Rational>),
    Infeasible,
    Unknown(String),
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityVerdict::Feasible(_))
    }
}

impl fmt::Display for FeasibilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityVerdict::Feasible(_) => write!(f, "Feasible"),
            FeasibilityVerdict::Infeasible => write!(f, "Infeasible"),
            FeasibilityVerdict::Unknown(r) => write!(f, "Unknown ({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport<V> {
    pub verdict: V,
    pub boxes_explored: usize,
}

fn check_arity<'a>(
    constraints: impl IntoIterator<Item = &'a PolyConstraint>,
    b: &RealBox,
) -> Result<(), BernsteinError> {
    for c in constraints {
        if c.arity() != b.dims() {
            return Err(PolyError::ArityMismatch { expected: b.dims(), found: c.arity() }.into());
        }
    }
    Ok(())
}

/// Outcome of examining one subbox during branch-and-bound.
enum Step {
    Discard,
    Witness(Vec<Rational>),
    Split,
}

/// Witness, boxes explored, and the reason the search gave up, if it did.
type SearchOutcome = (Option<Vec<Rational>>, usize, Option<String>);

/// Depth-first branch-and-bound over subboxes of `root`. `examine` classifies
/// each subbox; the search stops at the first witness.
fn search<F>(
    root: &RealBox,
    cfg: &CheckConfig,
    mut examine: F,
) -> Result<SearchOutcome, BernsteinError>
where
    F: FnMut(&RealBox) -> Result<Step, BernsteinError>,
{
    let mut stack = vec![(root.clone(), 0u32)];
    let mut explored = 0usize;
    let mut undecided = 0usize;
    while let Some((sub, depth)) = stack.pop() {
        if explored >= cfg.max_boxes {
            return Ok((None, explored, Some(format!("box budget of {} exhausted", cfg.max_boxes))));
        }
        explored += 1;
        match examine(&sub)? {
            Step::Discard => {}
            Step::Witness(w) => return Ok((Some(w), explored, None)),
            Step::Split => {
                if depth >= cfg.max_depth || sub.dims() == 0 {
                    undecided += 1;
                } else {
                    let (l, r) = sub.bisect(sub.widest_dim());
                    stack.push((r, depth + 1));
                    stack.push((l, depth + 1));
                }
            }
        }
    }
    let reason = (undecided > 0)
        .then(|| format!("depth {} exhausted on {undecided} undecided subboxes", cfg.max_depth));
    Ok((None, explored, reason))
}

/// Candidate sample points of a subbox: center first, then the vertices.
fn samples(b: &RealBox) -> impl Iterator<Item = Vec<Rational>> {
    std::iter::once(b.center()).chain(b.vertices())
}

struct Enclosures {
    polys: Vec<Polynomial>,
    relations: Vec<Relation>,
    degrees: Vec<Vec<u32>>,
}

impl Enclosures {
    fn new<'a>(cs: impl IntoIterator<Item = &'a PolyConstraint>) -> Self {
        let mut e = Enclosures { polys: vec![], relations: vec![], degrees: vec![] };
        for c in cs {
            e.degrees.push(c.poly.degree_vector());
            e.polys.push(c.poly.clone());
            e.relations.push(c.relation);
        }
        e
    }

    fn statuses(&self, b: &RealBox) -> Result<Vec<Truth>, BernsteinError> {
        self.polys
            .iter()
            .zip(&self.relations)
            .zip(&self.degrees)
            .map(|((p, &rel), deg)| {
                let (lo, hi) = enclosure_with(p, b, deg)?;
                Ok(relation_status(rel, &lo, &hi))
            })
            .collect()
    }
}

/// Decides whether `formula` holds at every point of `b`.
pub fn check_validity(
    formula: &ConstraintFormula,
    b: &RealBox,
    cfg: &CheckConfig,
) -> Result<CheckReport<Validity>, BernsteinError> {
    let atoms = formula.constraints();
    check_arity(atoms.iter().copied(), b)?;
    let enc = Enclosures::new(atoms.iter().copied());
    let (witness, explored, reason) = search(b, cfg, |sub| {
        let st = enc.statuses(sub)?;
        match formula.status(&mut st.iter()) {
            Truth::True => return Ok(Step::Discard),
            Truth::False | Truth::Unknown => {}
        }
        for point in samples(sub) {
            if !formula.holds_at(&point)? {
                return Ok(Step::Witness(point));
            }
        }
        Ok(Step::Split)
    })?;
    let verdict = match (witness, reason) {
        (Some(w), _) => Validity::Invalid(w),
        (None, Some(r)) => Validity::Unknown(r),
        (None, None) => Validity::Valid,
    };
    Ok(CheckReport { verdict, boxes_explored: explored })
}

/// Searches `b` for a point satisfying every constraint in `cs`.
pub fn check_feasibility(
    cs: &[PolyConstraint],
    b: &RealBox,
    cfg: &CheckConfig,
) -> Result<CheckReport<FeasibilityVerdict>, BernsteinError> {
    if cs.is_empty() {
        return Err(BernsteinError::EmptyConstraints);
    }
    check_arity(cs, b)?;
    let enc = Enclosures::new(cs);
    let satisfied = |point: &[Rational]| -> Result<bool, BernsteinError> {
        for c in cs {
            if !c.holds_at(point)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (witness, explored, reason) = search(b, cfg, |sub| {
        let st = enc.statuses(sub)?;
        if st.contains(&Truth::False) {
            return Ok(Step::Discard);
        }
        for point in samples(sub) {
            if satisfied(&point)? {
                return Ok(Step::Witness(point));
            }
        }
        Ok(Step::Split)
    })?;
    let verdict = match (witness, reason) {
        (Some(w), _) => FeasibilityVerdict::Feasible(w),
        (None, Some(r)) => FeasibilityVerdict::Unknown(r),
        (None, None) => FeasibilityVerdict::Infeasible,
    };
    Ok(CheckReport { verdict, boxes_explored: explored })
}

/// Evaluates the tensor Bernstein expansion at `t` in the unit box.
/// Kept separate from the conversion so tests can re-expand coefficients.
pub fn eval_bernstein(tensor: &BernsteinTensor, t: &[Rational]) -> Rational {
    let mut sum = Rational::zero();
    for offset in 0..tensor.len() {
        let idx = tensor.multi_index(offset);
        let mut basis = Rational::one();
        for ((&j, &n), ti) in idx.iter().zip(tensor.degrees()).zip(t) {
            let c = Rational::from_integer(binomial(n, j));
            let one_minus = Rational::one() - ti;
            basis *= c
                * num_traits::pow(ti.clone(), j as usize)
                * num_traits::pow(one_minus, (n - j) as usize);
        }
        sum += basis * &tensor.coeffs[offset];
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, ratio};

    fn xvar(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn c(n: usize, v: Rational) -> Polynomial {
        Polynomial::constant(n, v)
    }

    #[test]
    fn unit_box_linear() {
        let b = RealBox::uniform(1, rat(0), rat(4)).unwrap();
        let q = to_unit_box(&xvar(1, 0), &b).unwrap();
        assert_eq!(q, xvar(1, 0).scale(&rat(4)));

        let b2 = RealBox::uniform(2, rat(0), rat(4)).unwrap();
        let p = &(&xvar(2, 0) + &xvar(2, 1)) - &c(2, rat(3));
        let q = to_unit_box(&p, &b2).unwrap();
        let expect = &(&xvar(2, 0).scale(&rat(4)) + &xvar(2, 1).scale(&rat(4))) - &c(2, rat(3));
        assert_eq!(q, expect);
    }

    #[test]
    fn constant_and_identity_coefficients() {
        let t = bernstein_coefficients(&c(2, rat(5)), &[2, 3]).unwrap();
        assert_eq!(t.len(), 12);
        assert!(t.coefficients().iter().all(|v| *v == rat(5)));

        let t = bernstein_coefficients(&xvar(1, 0), &[1]).unwrap();
        assert_eq!(t.coefficients(), &[rat(0), rat(1)]);
    }

    #[test]
    fn degree_too_low_is_rejected() {
        let p = xvar(1, 0).pow(3);
        assert!(matches!(
            bernstein_coefficients(&p, &[2]),
            Err(BernsteinError::DegreeTooLow { .. })
        ));
    }

    #[test]
    fn square_on_unit_interval() {
        // t^2 = B_2,2: coefficients (0, 0, 1)
        let t = bernstein_coefficients(&xvar(1, 0).pow(2), &[2]).unwrap();
        assert_eq!(t.coefficients(), &[rat(0), rat(0), rat(1)]);
        // degree elevation of t to 2: (0, 1/2, 1)
        let t = bernstein_coefficients(&xvar(1, 0), &[2]).unwrap();
        assert_eq!(t.coefficients(), &[rat(0), ratio(1, 2), rat(1)]);
    }

    #[test]
    fn bounds_of_constant_and_linear() {
        let b = RealBox::uniform(2, rat(-3), rat(7)).unwrap();
        assert_eq!(bounds(&c(2, rat(5)), &b, 3).unwrap(), (rat(5), rat(5)));
        let b1 = RealBox::uniform(1, rat(0), rat(4)).unwrap();
        assert_eq!(bounds(&xvar(1, 0), &b1, 0).unwrap(), (rat(0), rat(4)));
    }

    #[test]
    fn bounds_tighten_for_nonmonotone() {
        // (x - 1)^2 on [0, 2]: true range [0, 1]; depth 0 gives [-1, 1]
        let p = (&xvar(1, 0) - &c(1, rat(1))).pow(2);
        let b = RealBox::uniform(1, rat(0), rat(2)).unwrap();
        let (l0, h0) = bounds(&p, &b, 0).unwrap();
        assert_eq!((l0.clone(), h0), (rat(-1), rat(1)));
        let (l1, h1) = bounds(&p, &b, 1).unwrap();
        assert_eq!((l1, h1), (rat(0), rat(1)));
    }

    #[test]
    fn relation_status_strictness() {
        assert_eq!(relation_status(Relation::Gt, &rat(0), &rat(1)), Truth::Unknown);
        assert_eq!(relation_status(Relation::Ge, &rat(0), &rat(1)), Truth::True);
        assert_eq!(relation_status(Relation::Gt, &rat(-1), &rat(0)), Truth::False);
        assert_eq!(relation_status(Relation::Ge, &rat(-1), &rat(0)), Truth::Unknown);
        assert_eq!(relation_status(Relation::Lt, &rat(0), &rat(1)), Truth::False);
        assert_eq!(relation_status(Relation::Le, &rat(-2), &rat(0)), Truth::True);
    }

    #[test]
    fn trivial_validity_at_depth_zero() {
        let b = RealBox::uniform(1, rat(0), rat(1)).unwrap();
        let f = ConstraintFormula::atom(PolyConstraint::new(xvar(1, 0), Relation::Ge));
        let r = check_validity(&f, &b, &CheckConfig::with_depth(0)).unwrap();
        assert_eq!(r.verdict, Validity::Valid);
        assert_eq!(r.boxes_explored, 1);
    }

    #[test]
    fn invalid_square_has_exact_witness() {
        let b = RealBox::uniform(1, rat(0), rat(2)).unwrap();
        let c1 = PolyConstraint::compare(&xvar(1, 0).pow(2), Relation::Ge, &c(1, rat(1)));
        let f = ConstraintFormula::atom(c1.clone());
        match check_validity(&f, &b, &CheckConfig::default()).unwrap().verdict {
            Validity::Invalid(w) => {
                assert!(b.contains(&w));
                assert!(!c1.holds_at(&w).unwrap());
            }
            other => panic!("expected Invalid, got {other:?}"),
        }
    }

    #[test]
    fn feasible_immediately() {
        let b = RealBox::uniform(1, rat(0), rat(1)).unwrap();
        let cs = [PolyConstraint::new(xvar(1, 0), Relation::Ge)];
        let r = check_feasibility(&cs, &b, &CheckConfig::default()).unwrap();
        assert!(r.verdict.is_feasible());
        assert_eq!(r.boxes_explored, 1);
    }

    #[test]
    fn empty_constraint_list_is_an_error() {
        let b = RealBox::uniform(1, rat(0), rat(1)).unwrap();
        assert_eq!(
            check_feasibility(&[], &b, &CheckConfig::default()),
            Err(BernsteinError::EmptyConstraints)
        );
    }

    #[test]
    fn touching_constraint_found_at_center() {
        // x^2 <= 0 only touches zero at a single point
        let b = RealBox::uniform(1, rat(-1), rat(1)).unwrap();
        let cs = [PolyConstraint::new(xvar(1, 0).pow(2), Relation::Le)];
        // center 0 satisfies x^2 <= 0 exactly
        let r = check_feasibility(&cs, &b, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict, FeasibilityVerdict::Feasible(vec![rat(0)]));
        // shifted box: x^2 <= 0 on [1/3, 1] infeasible
        let b = RealBox::uniform(1, ratio(1, 3), rat(1)).unwrap();
        let r = check_feasibility(&cs, &b, &CheckConfig::default()).unwrap();
        assert_eq!(r.verdict, FeasibilityVerdict::Infeasible);
    }

    #[test]
    fn depth_exhaustion_yields_unknown() {
        // thin sliver 1/3 < x^2 < 1/3 + 10^-6 is not reachable in two bisections
        let b = RealBox::uniform(1, rat(0), rat(1)).unwrap();
        let x2 = xvar(1, 0).pow(2);
        let cs = [
            PolyConstraint::compare(&x2, Relation::Gt, &c(1, ratio(1, 3))),
            PolyConstraint::compare(&x2, Relation::Lt, &c(1, ratio(1, 3) + ratio(1, 1_000_000))),
        ];
        let r = check_feasibility(&cs, &b, &CheckConfig::with_depth(2)).unwrap();
        assert!(matches!(r.verdict, FeasibilityVerdict::Unknown(_)));
    }

    #[test]
    fn arity_mismatch_reported() {
        let b = RealBox::uniform(1, rat(0), rat(1)).unwrap();
        let cs = [PolyConstraint::new(xvar(2, 0), Relation::Ge)];
        assert!(matches!(
            check_feasibility(&cs, &b, &CheckConfig::default()),
            Err(BernsteinError::Poly(PolyError::ArityMismatch { .. }))
        ));
    }
}
