//! Standalone constraint queries.
//!
//! ```text
//! REAL x IN [0,4]
//! REAL y IN [0,4]
//! VALID x + y > 3 -> x^2 + y^2 >= 7/2
//! FEASIBLE x + y > 3 && x^2 + y^2 < 7/2
//! ```
//!
//! `VALID` takes any propositional combination of comparisons; `FEASIBLE`
//! takes a conjunction of comparisons.

use numsynth_core::bernstein::ConstraintFormula;
use numsynth_core::poly::{PolyConstraint, RealBox};
use numsynth_core::speclang::{parse_constraint_formula, parse_real_decl, RealVarDecl};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Valid { text: String, formula: ConstraintFormula },
    Feasible { text: String, constraints: Vec<PolyConstraint> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFile {
    pub vars: Vec<RealVarDecl>,
    pub queries: Vec<Query>,
}

impl CheckFile {
    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    pub fn real_box(&self) -> RealBox {
        RealBox::new(self.vars.iter().map(|v| (v.lower.clone(), v.upper.clone())).collect())
            .expect("declarations have lower <= upper")
    }
}

fn conjuncts(f: ConstraintFormula, out: &mut Vec<PolyConstraint>) -> bool {
    match f {
        ConstraintFormula::Atom(c) => {
            out.push(c);
            true
        }
        ConstraintFormula::And(fs) => fs.into_iter().all(|g| conjuncts(g, out)),
        _ => false,
    }
}

pub fn parse_check_file(text: &str) -> Result<CheckFile, CliError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with("##"))
        .collect();
    let mut vars: Vec<RealVarDecl> = Vec::new();
    for &(no, l) in lines.iter().filter(|(_, l)| l.starts_with("REAL")) {
        let d = parse_real_decl(l).map_err(|e| CliError::format(no, e.to_string()))?;
        if vars.iter().any(|v| v.name == d.name) {
            return Err(CliError::format(no, format!("duplicate variable `{}`", d.name)));
        }
        vars.push(d);
    }
    let names: Vec<String> = vars.iter().map(|v| v.name.clone()).collect();
    let mut queries = Vec::new();
    for &(no, l) in lines.iter().filter(|(_, l)| !l.starts_with("REAL")) {
        let (key, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        let rest = rest.trim();
        let formula = || parse_constraint_formula(rest, &names).map_err(|e| CliError::format(no, e.to_string()));
        match key {
            "VALID" => queries.push(Query::Valid { text: rest.to_string(), formula: formula()? }),
            "FEASIBLE" => {
                let mut constraints = Vec::new();
                if !conjuncts(formula()?, &mut constraints) {
                    return Err(CliError::format(no, "FEASIBLE takes a conjunction of comparisons"));
                }
                queries.push(Query::Feasible { text: rest.to_string(), constraints });
            }
            _ => return Err(CliError::format(no, format!("expected REAL, VALID or FEASIBLE, found `{key}`"))),
        }
    }
    if queries.is_empty() {
        return Err(CliError::format(0, "no VALID or FEASIBLE query"));
    }
    Ok(CheckFile { vars, queries })
}
