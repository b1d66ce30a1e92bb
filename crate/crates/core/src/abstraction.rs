//! Pseudo-Boolean abstraction of predicate atoms, refinement by excluded
//! valuations, and log-encoding of constrained outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::ltl::{self, LtlFormula};
use crate::poly::{PolyConstraint, RealBox, Rational};
use crate::speclang::{RealVarDecl, Side, SpecDocument};

/// Truth assignment to named atoms. Ordered by atom name, then value
/// (`false < true`), which is the lexicographic order used for tie-breaking.
pub type Valuation = BTreeMap<String, bool>;

pub fn valuation_from_bits(atoms: &[String], bits: &[bool]) -> Valuation {
    atoms.iter().cloned().zip(bits.iter().copied()).collect()
}

/// `a && !b && ...` over the valuation's atoms; `TRUE` when empty.
pub fn cube_formula(v: &Valuation) -> LtlFormula {
    ltl::conjunction(v.iter().map(|(a, &b)| if b { ltl::atom(a) } else { ltl::not(ltl::atom(a)) }))
}

/// Compact rendering such as `(req1=1, req2=0)`.
pub fn format_valuation(v: &Valuation) -> String {
    let parts: Vec<String> =
        v.iter().map(|(a, &b)| format!("{a}={}", if b { 1 } else { 0 })).collect();
    format!("({})", parts.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("valuation {0} was already refined away")]
    DuplicateRefinement(String),
    #[error("valuation must assign exactly the {side}-side predicate atoms; offending atom `{atom}`")]
    NotTotal { side: Side, atom: String },
    #[error("output constraints are unsatisfiable: no output combination satisfies every propositional output guarantee")]
    NoOutputCombination,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateEntry {
    pub atom: String,
    pub constraint: PolyConstraint,
    pub side: Side,
}

/// Predicate atoms with their constraints and the real-variable box.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateTable {
    pub vars: Vec<RealVarDecl>,
    pub entries: Vec<PredicateEntry>,
}

impl PredicateTable {
    pub fn from_document(doc: &SpecDocument) -> Self {
        PredicateTable {
            vars: doc.real_vars.clone(),
            entries: doc
                .predicates
                .iter()
                .map(|p| PredicateEntry {
                    atom: p.atom.clone(),
                    constraint: p.constraint.clone(),
                    side: p.side,
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn atoms(&self, side: Side) -> Vec<String> {
        self.entries.iter().filter(|e| e.side == side).map(|e| e.atom.clone()).collect()
    }

    pub fn entry(&self, atom: &str) -> Option<&PredicateEntry> {
        self.entries.iter().find(|e| e.atom == atom)
    }

    /// Indices (into `vars`) of the real variables of one side.
    pub fn side_vars(&self, side: Side) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| self.vars[i].side == side).collect()
    }

    pub fn side_var_names(&self, side: Side) -> Vec<String> {
        self.side_vars(side).into_iter().map(|i| self.vars[i].name.clone()).collect()
    }

    pub fn side_box(&self, side: Side) -> RealBox {
        let iv = self
            .side_vars(side)
            .into_iter()
            .map(|i| (self.vars[i].lower.clone(), self.vars[i].upper.clone()))
            .collect();
        RealBox::new(iv).expect("declared intervals are nonempty")
    }

    /// The atom's constraint re-indexed over the variables of its side.
    pub fn side_constraint(&self, atom: &str) -> Option<PolyConstraint> {
        let e = self.entry(atom)?;
        let keep = self.side_vars(e.side);
        Some(PolyConstraint::new(e.constraint.poly.project(&keep), e.constraint.relation))
    }

    /// Truth values of the side's predicate atoms at a point over that side's
    /// variables.
    pub fn evaluate_side(&self, side: Side, point: &[Rational]) -> Valuation {
        self.atoms(side)
            .into_iter()
            .map(|a| {
                let c = self.side_constraint(&a).expect("atom from table");
                let holds = c.holds_at(point).expect("point matches side arity");
                (a, holds)
            })
            .collect()
    }
}

/// A purely Boolean specification obtained by treating each predicate atom
/// as a free atom of its side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoBooleanSpec {
    pub doc: SpecDocument,
    pub input_predicates: Vec<String>,
    pub output_predicates: Vec<String>,
}

impl PseudoBooleanSpec {
    pub fn inputs(&self) -> &[String] {
        &self.doc.boolean_inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.doc.boolean_outputs
    }

    /// `ASSUME`s conjoined, implying the guarantees conjoined.
    pub fn formula(&self) -> LtlFormula {
        let g = ltl::conjunction(self.doc.guarantees.iter().cloned());
        if self.doc.assumptions.is_empty() {
            g
        } else {
            ltl::implies(ltl::conjunction(self.doc.assumptions.iter().cloned()), g)
        }
    }
}

pub fn abstract_spec(doc: &SpecDocument) -> (PseudoBooleanSpec, PredicateTable) {
    let table = PredicateTable::from_document(doc);
    let input_predicates = doc.predicate_atoms(Side::Input);
    let output_predicates = doc.predicate_atoms(Side::Output);
    let abstract_doc = SpecDocument {
        boolean_inputs: doc.all_inputs(),
        boolean_outputs: doc.all_outputs(),
        real_vars: Vec::new(),
        predicates: Vec::new(),
        assumptions: doc.assumptions.clone(),
        guarantees: doc.guarantees.clone(),
    };
    (PseudoBooleanSpec { doc: abstract_doc, input_predicates, output_predicates }, table)
}

fn check_total(v: &Valuation, atoms: &[String], side: Side) -> Result<(), AbstractionError> {
    if let Some(a) = v.keys().find(|a| !atoms.contains(a)) {
        return Err(AbstractionError::NotTotal { side, atom: a.clone() });
    }
    if let Some(a) = atoms.iter().find(|a| !v.contains_key(*a)) {
        return Err(AbstractionError::NotTotal { side, atom: a.clone() });
    }
    Ok(())
}

/// `ALWAYS !(cube of v)`.
pub fn exclusion_formula(v: &Valuation) -> LtlFormula {
    ltl::always(ltl::not(cube_formula(v)))
}

/// Adds the assumption that the environment never produces `v` on the input
/// predicate atoms.
pub fn refine_with_assumption(
    spec: &PseudoBooleanSpec,
    v: &Valuation,
) -> Result<PseudoBooleanSpec, AbstractionError> {
    check_total(v, &spec.input_predicates, Side::Input)?;
    let f = exclusion_formula(v);
    if spec.doc.assumptions.contains(&f) {
        return Err(AbstractionError::DuplicateRefinement(format_valuation(v)));
    }
    let mut out = spec.clone();
    out.doc.assumptions.push(f);
    Ok(out)
}

/// Adds the guarantee that the controller never produces `w` on the output
/// predicate atoms.
pub fn refine_with_guarantee(
    spec: &PseudoBooleanSpec,
    w: &Valuation,
) -> Result<PseudoBooleanSpec, AbstractionError> {
    check_total(w, &spec.output_predicates, Side::Output)?;
    let f = exclusion_formula(w);
    if spec.doc.guarantees.contains(&f) {
        return Err(AbstractionError::DuplicateRefinement(format_valuation(w)));
    }
    let mut out = spec.clone();
    out.doc.guarantees.push(f);
    Ok(out)
}

/// Decoder from log-encoded output signals to the original output atoms.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiplexerTable {
    pub encoded: Vec<String>,
    pub original: Vec<String>,
    /// code-word bits (over `encoded`) and decoded bits (over `original`)
    pub rows: Vec<(Vec<bool>, Vec<bool>)>,
}

fn bits_str(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(s: &str) -> Option<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

impl MultiplexerTable {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn decode(&self, code: &[bool]) -> Option<&[bool]> {
        self.rows.iter().find(|(c, _)| c == code).map(|(_, o)| o.as_slice())
    }

    /// `MUX-OUTPUTS` header followed by one `MUX <code> -> <bits>` line per row.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out =
            vec![format!("MUX-OUTPUTS {} -> {}", self.encoded.join(" "), self.original.join(" "))];
        for (c, o) in &self.rows {
            out.push(format!("MUX {} -> {}", bits_str(c), bits_str(o)));
        }
        out
    }

    pub fn from_lines<'a, I: IntoIterator<Item = &'a str>>(lines: I) -> Result<Self, String> {
        let mut t = MultiplexerTable::default();
        let mut header = false;
        for line in lines {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.first() {
                Some(&"MUX-OUTPUTS") => {
                    let arrow = words.iter().position(|w| *w == "->").ok_or("missing `->`")?;
                    t.encoded = words[1..arrow].iter().map(|s| s.to_string()).collect();
                    t.original = words[arrow + 1..].iter().map(|s| s.to_string()).collect();
                    header = true;
                }
                Some(&"MUX") if words.len() == 4 && words[2] == "->" => {
                    let c = parse_bits(words[1]).ok_or("bad code-word")?;
                    let o = parse_bits(words[3]).ok_or("bad decoded valuation")?;
                    if c.len() != t.encoded.len() || o.len() != t.original.len() {
                        return Err(format!("width mismatch in `{line}`"));
                    }
                    t.rows.push((c, o));
                }
                _ => return Err(format!("unexpected multiplexer line `{line}`")),
            }
        }
        if !header && !t.rows.is_empty() {
            return Err("missing MUX-OUTPUTS header".into());
        }
        Ok(t)
    }
}

impl fmt::Display for MultiplexerTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.to_lines() {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Guarantees of the form `ALWAYS φ` with `φ` propositional over outputs only.
fn is_output_invariant(f: &LtlFormula, outputs: &BTreeSet<&String>) -> Option<LtlFormula> {
    match f {
        LtlFormula::Always(body)
            if body.is_propositional() && body.atoms().iter().all(|a| outputs.contains(a)) =>
        {
            Some((**body).clone())
        }
        _ => None,
    }
}

/// All output assignments satisfying every output-only invariant, true
/// before false in each position (first atom most significant).
pub fn feasible_output_combinations(spec: &PseudoBooleanSpec) -> Vec<Vec<bool>> {
    let outputs = spec.outputs();
    let out_set: BTreeSet<&String> = outputs.iter().collect();
    let bodies: Vec<LtlFormula> =
        spec.doc.guarantees.iter().filter_map(|g| is_output_invariant(g, &out_set)).collect();
    let n = outputs.len();
    let mut k = Vec::new();
    for i in (0..1u64 << n).rev() {
        let bits: Vec<bool> = (0..n).map(|j| i >> (n - 1 - j) & 1 == 1).collect();
        let val = |a: &str| bits[outputs.iter().position(|o| o == a).unwrap()];
        if bodies.iter().all(|b| b.eval_prop(&val)) {
            k.push(bits);
        }
    }
    k
}

fn fresh_names(m: usize, taken: &BTreeSet<&String>) -> Vec<String> {
    let mut prefix = "sig".to_string();
    loop {
        let names: Vec<String> = (1..=m).map(|j| format!("{prefix}{j}")).collect();
        if names.iter().all(|n| !taken.contains(n)) {
            return names;
        }
        prefix.push('_');
    }
}

fn code_cube(names: &[String], code: &[bool]) -> LtlFormula {
    ltl::conjunction(
        names
            .iter()
            .zip(code)
            .map(|(n, &b)| if b { ltl::atom(n) } else { ltl::not(ltl::atom(n)) }),
    )
}

/// Replaces the outputs by `ceil(log2 |K|)` code signals when that saves
/// atoms, where `K` is the set of output combinations allowed by the
/// propositional output guarantees. Returns the input unchanged with an empty
/// table otherwise. Specs with output-side predicates are left unchanged.
pub fn reencode_outputs(
    spec: &PseudoBooleanSpec,
) -> Result<(PseudoBooleanSpec, MultiplexerTable), AbstractionError> {
    let outputs = spec.outputs().to_vec();
    let k = feasible_output_combinations(spec);
    if k.is_empty() {
        return Err(AbstractionError::NoOutputCombination);
    }
    let mut m = 1;
    while (1usize << m) < k.len() {
        m += 1;
    }
    if m >= outputs.len() || !spec.output_predicates.is_empty() {
        return Ok((spec.clone(), MultiplexerTable::default()));
    }
    let taken: BTreeSet<&String> = spec.inputs().iter().chain(&outputs).collect();
    let sigs = fresh_names(m, &taken);
    let codes: Vec<Vec<bool>> =
        (0..1usize << m).map(|i| (0..m).map(|j| i >> (m - 1 - j) & 1 == 1).collect()).collect();

    let subst: BTreeMap<String, LtlFormula> = outputs
        .iter()
        .enumerate()
        .map(|(oi, o)| {
            let f = ltl::disjunction(
                k.iter().zip(&codes).filter(|(val, _)| val[oi]).map(|(_, c)| code_cube(&sigs, c)),
            );
            (o.clone(), f)
        })
        .collect();

    let out_set: BTreeSet<&String> = outputs.iter().collect();
    let mut doc = spec.doc.clone();
    doc.boolean_outputs = sigs.clone();
    doc.guarantees = spec
        .doc
        .guarantees
        .iter()
        .filter(|g| is_output_invariant(g, &out_set).is_none())
        .map(|g| g.substitute(&|a| subst.get(a).cloned()))
        .collect();
    doc.assumptions =
        spec.doc.assumptions.iter().map(|a| a.substitute(&|x| subst.get(x).cloned())).collect();
    for c in &codes[k.len()..] {
        doc.guarantees.push(ltl::always(ltl::not(code_cube(&sigs, c))));
    }
    if doc.guarantees.is_empty() {
        doc.guarantees.push(LtlFormula::True);
    }
    let table = MultiplexerTable {
        encoded: sigs,
        original: outputs,
        rows: codes.into_iter().zip(k).collect(),
    };
    Ok((PseudoBooleanSpec { doc, ..spec.clone() }, table))
}
