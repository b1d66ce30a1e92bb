//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Parser;
use numsynth_cli::controller_file::ControllerFile;
use numsynth_cli::simulate::{simulate, SimulationConfig};
use numsynth_cli::{run, Cli, EXIT_REALIZABLE};
use numsynth_core::abstraction::{abstract_spec, feasible_output_combinations, reencode_outputs, Valuation};
use numsynth_core::automata::{accepts_lasso, ltl_to_buchi_over, LassoWord};
use numsynth_core::bernstein::{
    bernstein_coefficients, bounds, check_feasibility, check_validity, eval_bernstein, to_unit_box, CheckConfig,
    FeasibilityVerdict, Validity,
};
use numsynth_core::cegar::{synthesize, Algorithm, CegarConfig, Event, SynthesisVerdict};
use numsynth_core::games::{solve, GameArena, Objective};
use numsynth_core::ltl::LtlFormula;
use numsynth_core::poly::{parse_rational, ratio, Rational};
use numsynth_core::speclang::{parse_constraint, parse_constraint_formula, parse_spec, Side};
use numsynth_core::testgen::{random_arena, random_box, random_formula, random_lasso, random_polynomial, random_spec_text};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let cli = Cli::try_parse_from(std::iter::once("numsynth").chain(args.iter().copied())).expect("arguments parse");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&cli, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn within(elapsed: Duration, limit_secs: u64) -> Result<(), String> {
    ensure(elapsed < Duration::from_secs(limit_secs), format!("took {elapsed:?}, limit {limit_secs} s"))
}

fn criterion_1() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("t.txt");
    let spec = specs_dir().join("two_clients.spec");
    let start = Instant::now();
    let (code, out, _) = run_cli(&["synth", spec.to_str().unwrap(), "--transcript", transcript.to_str().unwrap()]);
    let elapsed = start.elapsed();
    ensure(code == EXIT_REALIZABLE, format!("exit code {code}\n{out}"))?;
    let t = std::fs::read_to_string(&transcript).unwrap();
    let checks: Vec<&str> = t.lines().filter(|l| l.starts_with("CHECK")).collect();
    let refines: Vec<&str> = t.lines().filter(|l| l.starts_with("REFINE")).collect();
    ensure(checks == ["CHECK input (req1=1, req2=1) Infeasible"], format!("checks {checks:?}"))?;
    ensure(refines == ["REFINE assumption ALWAYS (!(req1 && req2))"], format!("refinements {refines:?}"))?;
    ensure(out.contains("theory checks: 1"), "summary lacks the check count")?;
    within(elapsed, 10)?;
    Ok(format!("realizable, 1 check, 1 refinement, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (code, out, _) = run_cli(&["check", specs_dir().join("assume_guarantee.check").to_str().unwrap()]);
    let elapsed = start.elapsed();
    ensure(code == 0 && out.contains(": valid ("), format!("exit {code}: {out}"))?;
    let names = vec!["x".to_string(), "y".to_string()];
    let f = parse_constraint_formula("x + y > 3 -> x^2 + y^2 >= 7/2", &names).unwrap();
    let domain = numsynth_core::poly::RealBox::uniform(2, ratio(0, 1), ratio(4, 1)).unwrap();
    let r = check_validity(&f, &domain, &CheckConfig::default()).unwrap();
    ensure(r.verdict == Validity::Valid, format!("{:?}", r.verdict))?;
    within(elapsed, 5)?;
    Ok(format!("valid, {} boxes, {elapsed:.2?}", r.boxes_explored))
}

fn criterion_3() -> Outcome {
    let names: Vec<String> = (0..3).map(|i| format!("x{i}")).collect();
    let c1 = parse_constraint("x0 + x1 + x2 > 3", &names).unwrap();
    let c2 = parse_constraint("x0^2 + x1^2 + x2^2 < 4", &names).unwrap();
    let domain = numsynth_core::poly::RealBox::uniform(3, ratio(0, 1), ratio(4, 1)).unwrap();
    let r = check_feasibility(&[c1.clone(), c2.clone()], &domain, &CheckConfig::default()).unwrap();
    let FeasibilityVerdict::Feasible(w) = &r.verdict else {
        return Err(format!("{:?}", r.verdict));
    };
    ensure(c1.holds_at(w).unwrap() && c2.holds_at(w).unwrap(), "returned witness violates a constraint")?;

    // reference witness (0.314453125, 1, 1.6875)
    let pw: Vec<Rational> = ["0.314453125", "1", "1.6875"].iter().map(|s| parse_rational(s).unwrap()).collect();
    // independent: 161/512 + 1 + 27/16 and (161^2 + 512^2 + 864^2) / 512^2
    let sum = Rational::new(161.into(), 512.into()) + ratio(1, 1) + ratio(27, 16);
    let sq = Rational::new((161i64 * 161 + 512 * 512 + 864 * 864).into(), (512i64 * 512).into());
    let v1 = c1.poly.evaluate(&pw).unwrap() + ratio(3, 1);
    let v2 = c2.poly.evaluate(&pw).unwrap() + ratio(4, 1);
    ensure(v1 == sum && v1 == parse_rational("3.001953125").unwrap(), format!("sum {v1}"))?;
    ensure(v2 == sq && v2 == parse_rational("3.946537017822265625").unwrap(), format!("squares {v2}"))?;
    Ok(format!("feasible, witness {:?}", w.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
}

fn criterion_4() -> Outcome {
    let text = std::fs::read_to_string(specs_dir().join("error_handling.spec")).unwrap();
    let doc = parse_spec(&text).unwrap();
    let (spec, _) = abstract_spec(&doc);
    let ks: BTreeSet<Vec<bool>> = feasible_output_combinations(&spec).into_iter().collect();
    let outputs = spec.outputs().to_vec();
    let one_hot: BTreeSet<Vec<bool>> = (0..4).map(|i| (0..4).map(|j| i == j).collect()).collect();
    ensure(outputs == ["stop", "grant1", "grant2", "grant3"], format!("outputs {outputs:?}"))?;
    ensure(ks == one_hot, format!("combinations {ks:?}"))?;
    let (enc, mux) = reencode_outputs(&spec).unwrap();
    ensure(enc.outputs().len() == 2 && mux.rows.len() == 4, format!("encoded outputs {:?}", enc.outputs()))?;

    let run = synthesize(&doc, &CegarConfig::default()).unwrap();
    let SynthesisVerdict::Realizable { controller, mux, .. } = run.verdict else {
        return Err(run.verdict.label());
    };
    ensure(controller.outputs.len() == 2, "controller does not use the encoded outputs")?;
    let file = ControllerFile {
        spec_hash: String::new(),
        algorithm: Algorithm::Safety,
        bound: 0,
        refinements: vec![],
        controller,
        mux,
        spec: Some(doc),
    };
    let file = ControllerFile::parse(&file.write()).map_err(|e| e.to_string())?;
    let trace = simulate(&file, &SimulationConfig { steps: 1000, seed: 2024, ..Default::default() })
        .map_err(|e| e.to_string())?;
    ensure(trace.steps.len() == 1000, "short simulation")?;
    ensure(trace.violations() == 0, format!("{} violations\n{}", trace.violations(), trace.summary()))?;
    Ok(format!("4 one-hot combinations, 2 signals, 1000 steps, 0 violations, {} pending", trace.pending()))
}

fn grid(lo: &[Rational], hi: &[Rational], per_dim: i64) -> Vec<Vec<Rational>> {
    let mut pts = vec![vec![]];
    for (l, h) in lo.iter().zip(hi) {
        pts = pts
            .into_iter()
            .flat_map(|p: Vec<Rational>| {
                (0..per_dim).map(move |k| {
                    let mut q = p.clone();
                    q.push(l + (h - l) * ratio(k, per_dim - 1));
                    q
                })
            })
            .collect();
    }
    pts
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for round in 0..200 {
        let n = rng.gen_range(1..=3);
        let deg = rng.gen_range(1..=4);
        let p = random_polynomial(&mut rng, n, deg);
        let b = random_box(&mut rng, n);
        let degrees = p.degree_vector();
        let t = bernstein_coefficients(&to_unit_box(&p, &b).unwrap(), &degrees).unwrap();
        let (lo, hi) = (t.min().clone(), t.max().clone());
        for x in grid(&b.lower(), &b.upper(), 9) {
            let v = p.evaluate(&x).unwrap();
            ensure(lo <= v && v <= hi, format!("round {round}: value {v} outside [{lo}, {hi}]"))?;
        }
        for vertex in b.vertices() {
            let idx: Vec<u32> =
                vertex.iter().zip(b.lower()).zip(&degrees).map(|((x, l), &d)| if *x == l { 0 } else { d }).collect();
            let at = p.evaluate(&vertex).unwrap();
            ensure(*t.get(&idx) == at, format!("round {round}: corner {idx:?} coefficient differs from vertex value"))?;
        }
        let mut prev = (lo, hi);
        for depth in 1..=4 {
            let cur = bounds(&p, &b, depth).unwrap();
            ensure(prev.0 <= cur.0 && cur.1 <= prev.1, format!("round {round}: depth {depth} loosened"))?;
            prev = cur;
        }
        for _ in 0..50 {
            let u: Vec<Rational> = (0..n).map(|_| ratio(rng.gen_range(0..=1024), 1024)).collect();
            let x: Vec<Rational> = b.lower().iter().zip(b.widths()).zip(&u).map(|((l, w), s)| l + w * s).collect();
            ensure(eval_bernstein(&t, &u) == p.evaluate(&x).unwrap(), format!("round {round}: re-expansion differs"))?;
        }
    }
    Ok("200 polynomials, enclosure, vertices, monotone depth, re-expansion".into())
}

/// Path semantics on the lasso: follow successors from `i` until a
/// position repeats.
fn holds(f: &LtlFormula, w: &LassoWord, i: usize) -> bool {
    let path = |i: usize| {
        let mut seen = vec![];
        let mut p = i;
        while !seen.contains(&p) {
            seen.push(p);
            p = w.succ(p);
        }
        seen
    };
    match f {
        LtlFormula::True => true,
        LtlFormula::False => false,
        LtlFormula::Atom(a) => w.letter(i).get(a).copied().unwrap_or(false),
        LtlFormula::Not(g) => !holds(g, w, i),
        LtlFormula::And(a, b) => holds(a, w, i) && holds(b, w, i),
        LtlFormula::Or(a, b) => holds(a, w, i) || holds(b, w, i),
        LtlFormula::Implies(a, b) => !holds(a, w, i) || holds(b, w, i),
        LtlFormula::Next(g) => holds(g, w, w.succ(i)),
        LtlFormula::Always(g) => path(i).into_iter().all(|j| holds(g, w, j)),
        LtlFormula::Eventually(g) => path(i).into_iter().any(|j| holds(g, w, j)),
        LtlFormula::Until(a, b) => {
            for j in path(i) {
                if holds(b, w, j) {
                    return true;
                }
                if !holds(a, w, j) {
                    return false;
                }
            }
            false
        }
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let all: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    for k in 0..500 {
        let atoms = &all[..rng.gen_range(1..=3)];
        let size = rng.gen_range(1..=8);
        let f = random_formula(&mut rng, atoms, size);
        let w = random_lasso(&mut rng, atoms, 3, 3);
        ensure(f.size() <= 8 && w.prefix.len() <= 3 && (1..=3).contains(&w.cycle.len()), "generator out of range")?;
        let a = ltl_to_buchi_over(&f, atoms).unwrap();
        ensure(accepts_lasso(&a, &w).unwrap() == holds(&f, &w, 0), format!("pair {k}: {f} on {w:?}"))?;
    }
    Ok("500/500 agree".into())
}

/// Winning region by naive fixpoints over all nodes (env first, then ctrl).
fn oracle(g: &GameArena) -> Vec<bool> {
    let ne = g.num_env();
    let n = ne + g.num_ctrl();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            if v < ne {
                g.env_edges[v].iter().filter(|e| e.present).map(|e| ne + e.target).collect()
            } else {
                g.ctrl_edges[v - ne].iter().map(|e| e.target).collect()
            }
        })
        .collect();
    let cpre = |s: &[bool]| -> Vec<bool> {
        (0..n).map(|v| if v < ne { succ[v].iter().all(|&t| s[t]) } else { succ[v].iter().any(|&t| s[t]) }).collect()
    };
    match &g.objective {
        Objective::Safety(bad) => {
            let mut z = vec![true; n];
            loop {
                let c = cpre(&z);
                let nz: Vec<bool> = (0..n).map(|v| c[v] && !(v < ne && bad[v])).collect();
                if nz == z {
                    return z;
                }
                z = nz;
            }
        }
        Objective::Buchi(acc) => {
            let mut z = vec![true; n];
            loop {
                let cz = cpre(&z);
                let mut y = vec![false; n];
                loop {
                    let cy = cpre(&y);
                    let ny: Vec<bool> = (0..n).map(|v| cy[v] || (v < ne && acc[v] && cz[v])).collect();
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
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for round in 0..200 {
        let g = random_arena(&mut rng, 50, round % 2 == 0);
        ensure(g.num_env() + g.num_ctrl() <= 50, "arena too large")?;
        let sol = solve(&g);
        let got: Vec<bool> = sol.ctrl_wins_env.iter().chain(&sol.ctrl_wins_ctrl).copied().collect();
        ensure(got == oracle(&g), format!("round {round}: winning regions differ"))?;
        // the controller's choices stay inside its region; env nodes in its
        // region only move inside it
        let ne = g.num_env();
        for c in (0..g.num_ctrl()).filter(|&c| sol.ctrl_wins_ctrl[c]) {
            let e = sol.ctrl_strategy[c].ok_or(format!("round {round}: winning ctrl node {c} without a move"))?;
            ensure(sol.ctrl_wins_env[g.ctrl_edges[c][e].target], format!("round {round}: strategy leaves region"))?;
        }
        for v in (0..ne).filter(|&v| !sol.ctrl_wins_env[v]) {
            if let Some(e) = sol.env_strategy[v] {
                ensure(!sol.ctrl_wins_ctrl[g.env_edges[v][e].target], format!("round {round}: env strategy leaves region"))?;
            }
        }
    }
    Ok("200 arenas match the fixpoint oracle".into())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut labels = std::collections::BTreeMap::<String, usize>::new();
    let (mut checks, mut refinements) = (0, 0);
    for k in 0..50 {
        let text = random_spec_text(&mut rng);
        let doc = parse_spec(&text).map_err(|e| format!("spec {k}: {e}\n{text}"))?;
        ensure(doc.predicates.len() <= 4 && doc.all_outputs().len() <= 3, "generator out of range")?;
        let cfg = CegarConfig { max_bound: 4, ..CegarConfig::default() };
        let marked = synthesize(&doc, &cfg).map_err(|e| e.to_string())?;
        let rebuilt = synthesize(&doc, &CegarConfig { edge_marking: false, ..cfg }).map_err(|e| e.to_string())?;
        for r in [&marked, &rebuilt] {
            let mut seen: BTreeSet<(Side, Valuation)> = BTreeSet::new();
            for e in &r.transcript {
                if let Event::Check { side, valuation, .. } = e {
                    ensure(seen.insert((*side, valuation.clone())), format!("spec {k}: {valuation:?} checked twice"))?;
                }
            }
            ensure(seen.len() == r.cache.len(), format!("spec {k}: cache and transcript disagree"))?;
        }
        ensure(
            marked.verdict.label() == rebuilt.verdict.label(),
            format!("spec {k}: {} vs {}\n{text}", marked.verdict.label(), rebuilt.verdict.label()),
        )?;
        *labels.entry(marked.verdict.label()).or_default() += 1;
        checks += marked.theory_checks();
        refinements += marked.refinements().len();
    }
    ensure(refinements > 0, "no instance exercised refinement")?;
    Ok(format!("50 specs, {checks} checks, {refinements} refinements, verdicts {labels:?}"))
}

/// Writes past the test harness's output capture so the verdict lines
/// always appear.
fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("running example end-to-end", criterion_1),
        ("validity of the assume-guarantee constraint", criterion_2),
        ("three-sensor feasibility and witness arithmetic", criterion_3),
        ("output re-encoding and simulation", criterion_4),
        ("Bernstein properties", criterion_5),
        ("automata cross-validation", criterion_6),
        ("game solver oracle", criterion_7),
        ("CEGAR invariants", criterion_8),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into())))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (i, ((name, _), r)) in criteria.iter().zip(&results).enumerate() {
        match r {
            Ok(detail) => report(&format!("PASS criterion {}: {name} ({detail})", i + 1)),
            Err(why) => {
                failed += 1;
                report(&format!("FAIL criterion {}: {name}: {why}", i + 1));
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
