//! Game solvers against naive fixpoint oracles, and strategies against
//! exhaustive adversaries.

use std::collections::{BTreeMap, BTreeSet};

use numsynth_core::games::{
    env_candidates, extract_counter_strategy, select_counter_inputs, solve, CheckStatus, CounterStrategy,
    GameArena, GameSolution, Objective,
};
use numsynth_core::testgen::random_arena;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unified view: env nodes `0..ne`, ctrl nodes `ne..`.
struct Flat {
    ne: usize,
    succ: Vec<Vec<usize>>,
}

fn flatten(g: &GameArena) -> Flat {
    let ne = g.num_env();
    let mut succ: Vec<Vec<usize>> =
        g.env_edges.iter().map(|es| es.iter().filter(|e| e.present).map(|e| ne + e.target).collect()).collect();
    succ.extend(g.ctrl_edges.iter().map(|es| es.iter().map(|e| e.target).collect::<Vec<_>>()));
    Flat { ne, succ }
}

/// Controllable predecessors, recomputed by a full sweep.
fn cpre(f: &Flat, set: &[bool]) -> Vec<bool> {
    (0..f.succ.len())
        .map(|v| if v >= f.ne { f.succ[v].iter().any(|&t| set[t]) } else { f.succ[v].iter().all(|&t| set[t]) })
        .collect()
}

fn oracle_buchi(g: &GameArena, acc: &[bool]) -> Vec<bool> {
    let f = flatten(g);
    let n = f.succ.len();
    let mut z = vec![true; n];
    loop {
        let cz = cpre(&f, &z);
        let mut y = vec![false; n];
        loop {
            let cy = cpre(&f, &y);
            let ny: Vec<bool> = (0..n).map(|v| cy[v] || (v < f.ne && acc[v] && cz[v])).collect();
            if ny == y {
                break;
            }
            y = ny;
        }
        if y == z {
            return z;
        }
        z = y;
    }
}

fn oracle_safety(g: &GameArena, bad: &[bool]) -> Vec<bool> {
    let f = flatten(g);
    let n = f.succ.len();
    let mut z = vec![true; n];
    loop {
        let cz = cpre(&f, &z);
        let nz: Vec<bool> = (0..n).map(|v| !(v < f.ne && bad[v]) && cz[v]).collect();
        if nz == z {
            return z;
        }
        z = nz;
    }
}

fn reach(succ: &[Vec<usize>], from: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([from]);
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for &t in &succ[v] {
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    seen
}

fn has_cycle(succ: &[Vec<usize>], nodes: &BTreeSet<usize>) -> bool {
    // Kahn's algorithm on the induced subgraph
    let mut indeg: BTreeMap<usize, usize> = nodes.iter().map(|&v| (v, 0)).collect();
    for &v in nodes {
        for t in succ[v].iter().filter(|t| nodes.contains(t)) {
            *indeg.get_mut(t).unwrap() += 1;
        }
    }
    let mut queue: Vec<usize> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&v, _)| v).collect();
    let mut removed = 0;
    while let Some(v) = queue.pop() {
        removed += 1;
        for t in succ[v].iter().filter(|t| nodes.contains(t)) {
            let d = indeg.get_mut(t).unwrap();
            *d -= 1;
            if *d == 0 {
                queue.push(*t);
            }
        }
    }
    removed < nodes.len()
}

fn marked(g: &GameArena) -> (&[bool], bool) {
    match &g.objective {
        Objective::Buchi(a) => (a, true),
        Objective::Safety(b) => (b, false),
    }
}

/// Controller strategy against every environment move.
fn check_ctrl_strategy(g: &GameArena, sol: &GameSolution) {
    let f = flatten(g);
    let ne = f.ne;
    let mut succ = f.succ.clone();
    for c in 0..g.num_ctrl() {
        succ[ne + c] = match sol.ctrl_strategy[c] {
            Some(i) => vec![g.ctrl_edges[c][i].target],
            None => vec![],
        };
    }
    let (set, buchi) = marked(g);
    for v in (0..ne).filter(|&v| sol.ctrl_wins_env[v]) {
        let r = reach(&succ, v);
        for &u in &r {
            let won = if u < ne { sol.ctrl_wins_env[u] } else { sol.ctrl_wins_ctrl[u - ne] };
            assert!(won, "controller strategy leaves its region");
            if u >= ne {
                assert!(sol.ctrl_strategy[u - ne].is_some(), "controller stuck");
            }
            if !buchi && u < ne {
                assert!(!set[u], "controller strategy reaches an unsafe node");
            }
        }
        if buchi {
            let non_acc: BTreeSet<usize> = r.into_iter().filter(|&u| u >= ne || !set[u]).collect();
            assert!(!has_cycle(&succ, &non_acc), "controller strategy avoids acceptance forever");
        }
    }
}

/// Environment restricted to one choice per env node against every
/// controller move.
fn check_env_choice(g: &GameArena, sol: &GameSolution, choice: &[Option<usize>]) {
    let f = flatten(g);
    let ne = f.ne;
    let mut succ = f.succ.clone();
    for v in 0..ne {
        succ[v] = choice[v].map(|i| vec![ne + g.env_edges[v][i].target]).unwrap_or_default();
    }
    let (set, buchi) = marked(g);
    for v in (0..ne).filter(|&v| !sol.ctrl_wins_env[v]) {
        let r = reach(&succ, v);
        for &u in &r {
            let won = if u < ne { !sol.ctrl_wins_env[u] } else { !sol.ctrl_wins_ctrl[u - ne] };
            assert!(won, "environment strategy leaves its region");
            if u < ne && !(set[u] && !buchi) {
                assert!(choice[u].is_some(), "environment stuck at {u}");
            }
        }
        if buchi {
            for &a in r.iter().filter(|&&u| u < ne && set[u]) {
                let back = succ[a].iter().any(|&t| reach(&succ, t).contains(&a));
                assert!(!back, "environment strategy revisits accepting node {a}");
            }
        } else {
            let live: BTreeSet<usize> = r.into_iter().filter(|&u| u >= ne || !set[u]).collect();
            assert!(!has_cycle(&succ, &live), "environment strategy never forces a violation");
        }
    }
}

#[test]
fn solvers_match_fixpoint_oracles_and_strategies_win() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..200 {
        let buchi = round % 2 == 0;
        let g = random_arena(&mut rng, 50, buchi);
        let sol = solve(&g);
        let expected = match &g.objective {
            Objective::Buchi(a) => oracle_buchi(&g, a),
            Objective::Safety(b) => oracle_safety(&g, b),
        };
        let got: Vec<bool> = sol.ctrl_wins_env.iter().chain(&sol.ctrl_wins_ctrl).copied().collect();
        assert_eq!(got, expected, "round {round}");
        check_ctrl_strategy(&g, &sol);
        check_env_choice(&g, &sol, &sol.env_strategy);
        // any single candidate per node keeps winning
        for _ in 0..3 {
            let choice: Vec<Option<usize>> = (0..g.num_env())
                .map(|v| {
                    let c = env_candidates(&g, &sol, v);
                    (!c.is_empty()).then(|| c[rng.gen_range(0..c.len())])
                })
                .collect();
            check_env_choice(&g, &sol, &choice);
        }
    }
}

#[test]
fn single_candidate_restriction_resolves_as_env_win() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let mut g = random_arena(&mut rng, 40, checked % 2 == 0);
        let sol = solve(&g);
        if sol.ctrl_wins_env[g.initial] {
            continue;
        }
        let cs = extract_counter_strategy(&g, &sol).unwrap();
        assert!(cs.candidates.iter().zip(&cs.violated).all(|(c, &bad)| bad || !c.is_empty()));
        for v in 0..g.num_env() {
            let cands = env_candidates(&g, &sol, v);
            if cands.is_empty() {
                continue;
            }
            let keep = cands[rng.gen_range(0..cands.len())];
            for (i, e) in g.env_edges[v].iter_mut().enumerate() {
                if i != keep {
                    e.present = false;
                }
            }
        }
        assert!(!solve(&g).ctrl_wins_env[g.initial]);
        checked += 1;
    }
}

fn random_counter_strategy(rng: &mut ChaCha8Rng) -> CounterStrategy {
    let n = rng.gen_range(1..=8);
    let candidates: Vec<Vec<u64>> = (0..n)
        .map(|_| {
            let mut c: Vec<u64> = (0..8).filter(|_| rng.gen_bool(0.3)).collect();
            if c.is_empty() {
                c.push(rng.gen_range(0..8));
            }
            c
        })
        .collect();
    let mut transitions = BTreeMap::new();
    for (s, cands) in candidates.iter().enumerate() {
        for &i in cands {
            transitions.insert((s, i, 0), vec![(s + 1) % n]);
        }
    }
    CounterStrategy {
        inputs: vec!["p0".into(), "p1".into(), "p2".into()],
        outputs: vec!["o".into()],
        nodes: (0..n).collect(),
        violated: vec![false; n],
        candidates,
        transitions,
    }
}

fn min_cover(sets: &[BTreeSet<u64>]) -> usize {
    (0u32..256)
        .filter(|m| sets.iter().all(|s| s.iter().any(|&i| m >> i & 1 == 1)))
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

#[test]
fn greedy_cover_against_exhaustive_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let preds: Vec<String> = vec!["p0".into(), "p1".into(), "p2".into()];
    for _ in 0..300 {
        let cs = random_counter_strategy(&mut rng);
        let sets: Vec<BTreeSet<u64>> = cs.candidates.iter().map(|c| c.iter().copied().collect()).collect();
        let (r, unproven) = select_counter_inputs(&cs, &preds, |_| CheckStatus::Unchecked);
        let opt = min_cover(&sets);
        // ln-approximation bound of greedy set cover
        let h: f64 = (1..=cs.num_states()).map(|k| 1.0 / k as f64).sum();
        assert!(unproven.len() as f64 <= opt as f64 * h + 1e-9);
        assert!(r.candidates.iter().all(|c| c.len() == 1));
        // selected inputs cover every state of the full strategy
        let chosen: BTreeSet<u64> =
            unproven.iter().map(|v| numsynth_core::games::valuation_to_bits(&preds, v)).collect();
        assert!(r.candidates.iter().all(|c| chosen.contains(&c[0])));
    }
}
