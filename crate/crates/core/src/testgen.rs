//! Seeded random instance generators for property tests and benchmarks.

use rand::Rng;

use crate::abstraction::Valuation;
use crate::automata::LassoWord;
use crate::games::{CtrlEdge, EnvEdge, GameArena, Objective};
use crate::ltl::{self, LtlFormula};
use crate::poly::{ratio, Polynomial, RealBox};

/// Random formula with at most `size` nodes over `atoms`.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[String], size: usize) -> LtlFormula {
    let leaf = |rng: &mut R| match rng.gen_range(0..10) {
        0 => LtlFormula::True,
        1 => LtlFormula::False,
        _ => ltl::atom(&atoms[rng.gen_range(0..atoms.len())]),
    };
    if size <= 1 {
        return leaf(rng);
    }
    if size == 2 || rng.gen_bool(0.3) {
        let a = random_formula(rng, atoms, size - 1);
        return match rng.gen_range(0..4) {
            0 => ltl::not(a),
            1 => ltl::next(a),
            2 => ltl::always(a),
            _ => ltl::eventually(a),
        };
    }
    let left = rng.gen_range(1..size - 1);
    let a = random_formula(rng, atoms, left);
    let b = random_formula(rng, atoms, size - 1 - left);
    match rng.gen_range(0..4) {
        0 => ltl::and(a, b),
        1 => ltl::or(a, b),
        2 => ltl::implies(a, b),
        _ => ltl::until(a, b),
    }
}

pub fn random_valuation<R: Rng>(rng: &mut R, atoms: &[String]) -> Valuation {
    atoms.iter().map(|a| (a.clone(), rng.gen_bool(0.5))).collect()
}

/// Lasso with `|prefix| <= max_prefix` and `1 <= |cycle| <= max_cycle`.
pub fn random_lasso<R: Rng>(
    rng: &mut R,
    atoms: &[String],
    max_prefix: usize,
    max_cycle: usize,
) -> LassoWord {
    let p = rng.gen_range(0..=max_prefix);
    let c = rng.gen_range(1..=max_cycle);
    LassoWord::new(
        (0..p).map(|_| random_valuation(rng, atoms)).collect(),
        (0..c).map(|_| random_valuation(rng, atoms)).collect(),
    )
    .expect("nonempty cycle")
}

/// Polynomial in `arity` variables with per-variable degree at most
/// `max_degree` and integer coefficients in `[-10, 10]`.
pub fn random_polynomial<R: Rng>(rng: &mut R, arity: usize, max_degree: u32) -> Polynomial {
    let mut p = Polynomial::zero(arity);
    for _ in 0..rng.gen_range(1..=6) {
        let exps: Vec<u32> = (0..arity).map(|_| rng.gen_range(0..=max_degree)).collect();
        let c = ratio(rng.gen_range(-10..=10), 1);
        p = &p + &Polynomial::from_terms(arity, vec![(exps, c)]).expect("arity matches");
    }
    p
}

/// Box with small dyadic-rational endpoints inside `[-4, 4]`.
pub fn random_box<R: Rng>(rng: &mut R, dims: usize) -> RealBox {
    let iv = (0..dims)
        .map(|_| {
            let lo = rng.gen_range(-16..16);
            let hi = rng.gen_range(lo + 1..=16);
            (ratio(lo, 4), ratio(hi, 4))
        })
        .collect();
    RealBox::new(iv).expect("lo < hi")
}

/// Arena with at most `max_nodes` nodes over 3 inputs and 2 outputs; about
/// one env edge in ten is absent and some nodes are dead ends.
pub fn random_arena<R: Rng>(rng: &mut R, max_nodes: usize, buchi: bool) -> GameArena {
    let total = rng.gen_range(2..=max_nodes.max(2));
    let ne = rng.gen_range(1..total);
    let nc = total - ne;
    let env_edges = (0..ne)
        .map(|_| {
            let mut labels: Vec<u64> = (0..8).filter(|_| rng.gen_bool(0.3)).collect();
            if labels.is_empty() && rng.gen_bool(0.8) {
                labels.push(rng.gen_range(0..8));
            }
            labels
                .into_iter()
                .map(|input| EnvEdge { input, target: rng.gen_range(0..nc), present: !rng.gen_bool(0.1) })
                .collect()
        })
        .collect();
    let ctrl_edges = (0..nc)
        .map(|_| {
            let k = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=3) };
            (0..k).map(|_| CtrlEdge { output: rng.gen_range(0..4), target: rng.gen_range(0..ne) }).collect()
        })
        .collect();
    let marked: Vec<bool> = (0..ne).map(|_| rng.gen_bool(0.25)).collect();
    GameArena {
        inputs: vec!["i0".into(), "i1".into(), "i2".into()],
        outputs: vec!["o0".into(), "o1".into()],
        initial: rng.gen_range(0..ne),
        env_edges,
        ctrl_edges,
        objective: if buchi { Objective::Buchi(marked) } else { Objective::Safety(marked) },
    }
}

/// Specification text over reals `x, y` in `[0, 4]` with 1 to 4 input
/// predicates (some jointly infeasible), 1 to 3 outputs and guarantees drawn
/// from response, mutual-exclusion and invariant patterns.
pub fn random_spec_text<R: Rng>(rng: &mut R) -> String {
    let np = rng.gen_range(1..=4);
    let no = rng.gen_range(1..=3);
    let mut out = String::from("REAL x IN [0,4]\nREAL y IN [0,4]\n");
    for i in 0..np {
        let pred = match rng.gen_range(0..3) {
            0 => format!("x + y > {}", rng.gen_range(1..=7)),
            1 => format!("x^2 + y^2 < {}", rng.gen_range(1..=20)),
            _ => format!("{}*x - {}*y >= {}", rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(-4..=4)),
        };
        out.push_str(&format!("PRED p{i} := {pred}\n"));
    }
    out.push_str(&format!("OUTPUT {}\n", (0..no).map(|j| format!("o{j}")).collect::<Vec<_>>().join(", ")));
    if np >= 2 && no >= 2 && rng.gen_bool(0.5) {
        // two requests competing for one resource; refinable when the
        // predicates cannot hold together
        let (a, b) = (rng.gen_range(0..np), rng.gen_range(0..np));
        out.push_str(&format!("ALWAYS (p{a} -> NEXT o0)\nALWAYS (p{b} -> NEXT o1)\nALWAYS (!(o0 && o1))\n"));
    }
    for _ in 0..rng.gen_range(1..=3) {
        let p = format!("p{}", rng.gen_range(0..np));
        let o = format!("o{}", rng.gen_range(0..no));
        let o2 = format!("o{}", rng.gen_range(0..no));
        let g = match rng.gen_range(0..4) {
            0 => format!("ALWAYS ({p} -> NEXT {o})"),
            1 => format!("ALWAYS ({p} -> {o})"),
            2 if o != o2 => format!("ALWAYS (!({o} && {o2}))"),
            2 => format!("ALWAYS (!{p} -> !{o})"),
            _ => format!("ALWAYS ({p} -> EVENTUALLY {o})"),
        };
        out.push_str(&g);
        out.push('\n');
    }
    out
}
