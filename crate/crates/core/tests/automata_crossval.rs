use numsynth_core::abstraction::Valuation;
use numsynth_core::automata::{
    accepts_lasso, evaluate_ltl_on_lasso, ltl_to_buchi, ltl_to_buchi_over, negate_and_translate_over,
    BuchiAutomaton, Cube, LassoWord,
};
use numsynth_core::ltl::{self, LtlFormula};
use numsynth_core::testgen::{random_formula, random_lasso};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn atoms(n: usize) -> Vec<String> {
    ["a", "b", "c"][..n].iter().map(|s| s.to_string()).collect()
}

/// Every lasso over one atom with prefix and cycle length at most 3.
fn all_small_lassos() -> Vec<LassoWord> {
    let letter = |b: bool| -> Valuation { [("a".to_string(), b)].into_iter().collect() };
    let words = |len: usize| -> Vec<Vec<Valuation>> {
        (0..1u32 << len).map(|m| (0..len).map(|i| letter(m >> i & 1 == 1)).collect()).collect()
    };
    let mut out = Vec::new();
    for p in 0..=3 {
        for c in 1..=3 {
            for pre in words(p) {
                for cyc in words(c) {
                    out.push(LassoWord::new(pre.clone(), cyc).unwrap());
                }
            }
        }
    }
    out
}

/// Acceptance by the nested fixpoint  nu Z. mu Y. Pre(Acc & Z) | Pre(Y)
/// on the product, evaluated from scratch.
fn accepts_by_fixpoint(a: &BuchiAutomaton, w: &LassoWord) -> bool {
    let n = w.len();
    let letters: Vec<u64> = (0..n).map(|i| a.letter(w.letter(i)).unwrap()).collect();
    let total = a.num_states() * n;
    let edges = |v: usize| -> Vec<usize> {
        let (q, p) = (v / n, v % n);
        a.transitions[q]
            .iter()
            .filter(|(c, _)| c.satisfied_by(letters[p]))
            .map(|&(_, t)| t * n + w.succ(p))
            .collect()
    };
    let mut z = vec![true; total];
    loop {
        let target: Vec<bool> = (0..total).map(|v| z[v] && a.accepting[v / n]).collect();
        let mut y = vec![false; total];
        loop {
            let ny: Vec<bool> =
                (0..total).map(|v| edges(v).iter().any(|&t| target[t] || y[t])).collect();
            if ny == y {
                break;
            }
            y = ny;
        }
        if y == z {
            break;
        }
        z = y;
    }
    z[a.initial * n]
}

fn random_automaton(rng: &mut ChaCha8Rng) -> BuchiAutomaton {
    let n = rng.gen_range(1..6);
    let transitions = (0..n)
        .map(|_| {
            (0..rng.gen_range(0..4))
                .map(|_| {
                    let mut c = Cube::TRUE;
                    for i in 0..2 {
                        match rng.gen_range(0..3) {
                            0 => c.pos |= 1 << i,
                            1 => c.neg |= 1 << i,
                            _ => {}
                        }
                    }
                    (c, rng.gen_range(0..n))
                })
                .collect()
        })
        .collect();
    BuchiAutomaton {
        alphabet: atoms(2),
        initial: 0,
        accepting: (0..n).map(|_| rng.gen_bool(0.4)).collect(),
        transitions,
    }
}

#[test]
fn always_and_eventually_on_all_small_lassos() {
    let lassos = all_small_lassos();
    assert_eq!(lassos.len(), 15 * 14);
    for f in [ltl::always(ltl::atom("a")), ltl::eventually(ltl::atom("a"))] {
        let aut = ltl_to_buchi(&f);
        for w in &lassos {
            assert_eq!(
                accepts_lasso(&aut, w).unwrap(),
                evaluate_ltl_on_lasso(&f, w).unwrap(),
                "{f} on {w:?}"
            );
        }
    }
}

#[test]
fn translation_agrees_with_lasso_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut agree = 0;
    for _ in 0..500 {
        let k = rng.gen_range(1..=3);
        let atoms = atoms(k);
        let size = rng.gen_range(1..=8);
        let f = random_formula(&mut rng, &atoms, size);
        assert!(f.size() <= 8);
        let w = random_lasso(&mut rng, &atoms, 3, 3);
        let aut = ltl_to_buchi_over(&f, &atoms).unwrap();
        if accepts_lasso(&aut, &w).unwrap() == evaluate_ltl_on_lasso(&f, &w).unwrap() {
            agree += 1;
        } else {
            panic!("disagreement on {f} with {w:?}");
        }
    }
    assert_eq!(agree, 500);
}

#[test]
fn formula_and_negation_partition_lassos() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let atoms = atoms(rng.gen_range(1..=3));
        let size = rng.gen_range(1..=8);
        let f = random_formula(&mut rng, &atoms, size);
        let pos = ltl_to_buchi_over(&f, &atoms).unwrap();
        let neg = negate_and_translate_over(&f, &atoms).unwrap();
        for _ in 0..10 {
            let w = random_lasso(&mut rng, &atoms, 3, 3);
            assert!(accepts_lasso(&pos, &w).unwrap() ^ accepts_lasso(&neg, &w).unwrap(), "{f}");
        }
    }
}

fn subformula_count(f: &LtlFormula) -> usize {
    let mut set = BTreeSet::new();
    f.visit(&mut |g| {
        set.insert(g.clone());
    });
    set.len()
}

#[test]
fn state_count_within_tableau_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let atoms = atoms(3);
        let size = rng.gen_range(1..=8);
        let f = random_formula(&mut rng, &atoms, size);
        let a = ltl_to_buchi_over(&f, &atoms).unwrap();
        assert!(a.num_states() <= 1 << (subformula_count(&f) + 1), "{f}");
    }
}

#[test]
fn product_search_matches_fixpoint_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let a = random_automaton(&mut rng);
        let w = random_lasso(&mut rng, &atoms(2), 3, 3);
        assert_eq!(accepts_lasso(&a, &w).unwrap(), accepts_by_fixpoint(&a, &w));
    }
}
