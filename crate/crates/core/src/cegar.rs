//! Counterexample-guided synthesis loop: abstract the numerical predicates,
//! solve the pseudo-Boolean game, and validate or refine with the theory
//! checker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::abstraction::{
    abstract_spec, exclusion_formula, format_valuation, refine_with_assumption, refine_with_guarantee,
    reencode_outputs, AbstractionError, MultiplexerTable, PredicateTable, PseudoBooleanSpec, Valuation,
};
use crate::automata::{ltl_to_buchi_over, negate_and_translate_over, AutomatonError, BuchiAutomaton};
use crate::bernstein::{check_feasibility, BernsteinError, CheckConfig, FeasibilityVerdict};
use crate::games::{
    build_buchi_game, build_safety_game, extract_controller, extract_counter_strategy, invariants_allow,
    mark_edges_absent, restrict_inputs, select_counter_inputs, solve, split_env_invariants, CheckStatus,
    CounterStrategy, GameArena, GameError, MealyController,
};
use crate::ltl::{self, LtlFormula};
use crate::poly::{PolyConstraint, Rational};
use crate::speclang::{Side, SpecDocument};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CegarError {
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Theory(#[from] BernsteinError),
    #[error("`{0}` is not a predicate atom")]
    UnknownPredicate(String),
    #[error("valuation {0} was already checked")]
    AlreadyChecked(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    /// Büchi game on the specification automaton.
    Buchi,
    /// Bounded safety game on the negated specification's automaton.
    #[default]
    Safety,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Buchi => "buchi",
            Algorithm::Safety => "safety",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CegarConfig {
    pub algorithm: Algorithm,
    /// Largest safety bound; bounds 1, 2, 4, ... up to it are tried.
    pub max_bound: u32,
    pub check: CheckConfig,
    pub max_refinements: usize,
    /// Refine input valuations by marking arena edges absent instead of
    /// rebuilding the arenas.
    pub edge_marking: bool,
    /// Check every unproven valuation and refine all infeasible ones per
    /// iteration, instead of stopping at the first infeasible one.
    pub batch_refinement: bool,
    /// Log-encode outputs constrained by propositional invariants.
    pub reencode: bool,
}

impl Default for CegarConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Safety,
            max_bound: 16,
            check: CheckConfig::default(),
            max_refinements: 256,
            edge_marking: true,
            batch_refinement: false,
            reencode: true,
        }
    }
}

impl CegarConfig {
    /// The bound schedule: powers of two below `max_bound`, then `max_bound`.
    /// The Büchi algorithm has the single pseudo-bound 0.
    pub fn bounds(&self) -> Vec<u32> {
        if self.algorithm == Algorithm::Buchi {
            return vec![0];
        }
        let max = self.max_bound.max(1);
        let mut out = Vec::new();
        let mut k = 1;
        while k < max {
            out.push(k);
            k *= 2;
        }
        out.push(max);
        out
    }
}

/// Theory verdicts per predicate valuation, per side. A valuation enters at
/// most once.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckedCache {
    pub inputs: BTreeMap<Valuation, FeasibilityVerdict>,
    pub outputs: BTreeMap<Valuation, FeasibilityVerdict>,
}

impl CheckedCache {
    fn side(&self, side: Side) -> &BTreeMap<Valuation, FeasibilityVerdict> {
        match side {
            Side::Input => &self.inputs,
            Side::Output => &self.outputs,
        }
    }

    pub fn get(&self, side: Side, v: &Valuation) -> Option<&FeasibilityVerdict> {
        self.side(side).get(v)
    }

    pub fn status(&self, side: Side, v: &Valuation) -> CheckStatus {
        match self.get(side, v) {
            Some(FeasibilityVerdict::Feasible(_)) => CheckStatus::Feasible,
            Some(FeasibilityVerdict::Infeasible) => CheckStatus::Infeasible,
            Some(FeasibilityVerdict::Unknown(_)) | None => CheckStatus::Unchecked,
        }
    }

    pub fn insert(&mut self, side: Side, v: Valuation, verdict: FeasibilityVerdict) -> Result<(), CegarError> {
        let map = match side {
            Side::Input => &mut self.inputs,
            Side::Output => &mut self.outputs,
        };
        if map.contains_key(&v) {
            return Err(CegarError::AlreadyChecked(format_valuation(&v)));
        }
        map.insert(v, verdict);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len() + self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One entry of the run transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Solve { algorithm: Algorithm, bound: u32, env_nodes: usize, controller_wins: bool },
    Check { side: Side, valuation: Valuation, verdict: FeasibilityVerdict },
    Refine { side: Side, formula: LtlFormula },
    Verdict(String),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Solve { algorithm, bound, env_nodes, controller_wins } => {
                let winner = if *controller_wins { "controller" } else { "environment" };
                write!(f, "SOLVE {algorithm} bound={bound} env_nodes={env_nodes} winner={winner}")
            }
            Event::Check { side, valuation, verdict } => {
                write!(f, "CHECK {side} {} {verdict}", format_valuation(valuation))
            }
            Event::Refine { side, formula } => {
                let kind = if *side == Side::Input { "assumption" } else { "guarantee" };
                write!(f, "REFINE {kind} {formula}")
            }
            Event::Verdict(v) => write!(f, "VERDICT {v}"),
        }
    }
}

/// Number of theory checks recorded in a transcript.
pub fn count_theory_checks(transcript: &[Event]) -> usize {
    transcript.iter().filter(|e| matches!(e, Event::Check { .. })).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisVerdict {
    Realizable { controller: MealyController, mux: MultiplexerTable, table: PredicateTable },
    /// The controller loses the bounded game (bound 0 stands for the Büchi
    /// game) against a counter-strategy whose inputs are all feasible.
    UnrealizableWithinBound { bound: u32, counter: CounterStrategy, witnesses: Vec<(Valuation, Vec<Rational>)> },
    Unknown(String),
}

impl SynthesisVerdict {
    pub fn label(&self) -> String {
        match self {
            SynthesisVerdict::Realizable { .. } => "realizable".into(),
            SynthesisVerdict::UnrealizableWithinBound { bound, .. } => {
                format!("unrealizable within bound {bound}")
            }
            SynthesisVerdict::Unknown(r) => format!("unknown ({r})"),
        }
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct SynthesisRun {
    pub verdict: SynthesisVerdict,
    /// The final pseudo-Boolean specification, with all refinements.
    pub spec: PseudoBooleanSpec,
    pub table: PredicateTable,
    pub cache: CheckedCache,
    pub transcript: Vec<Event>,
}

impl SynthesisRun {
    pub fn theory_checks(&self) -> usize {
        count_theory_checks(&self.transcript)
    }

    pub fn refinements(&self) -> Vec<&LtlFormula> {
        self.transcript
            .iter()
            .filter_map(|e| match e {
                Event::Refine { formula, .. } => Some(formula),
                _ => None,
            })
            .collect()
    }
}

/// Side-local constraints for a predicate valuation: the atom's constraint
/// when true, its negation when false.
pub fn valuation_to_constraints(v: &Valuation, table: &PredicateTable) -> Result<Vec<PolyConstraint>, CegarError> {
    v.iter()
        .map(|(a, &b)| {
            let c = table.side_constraint(a).ok_or_else(|| CegarError::UnknownPredicate(a.clone()))?;
            Ok(if b { c } else { c.negate() })
        })
        .collect()
}

/// Theory check of one valuation over its side's box.
fn check_valuation(
    v: &Valuation,
    side: Side,
    table: &PredicateTable,
    cfg: &CheckConfig,
) -> Result<FeasibilityVerdict, CegarError> {
    let cs = valuation_to_constraints(v, table)?;
    if cs.is_empty() {
        return Ok(FeasibilityVerdict::Feasible(Vec::new()));
    }
    Ok(check_feasibility(&cs, &table.side_box(side), cfg)?.verdict)
}

/// Checks every output-predicate valuation emitted by `m` that is not yet in
/// the cache, and returns all emitted ones known infeasible. An Unknown
/// verdict is returned as `Err(reason)` in the inner result.
pub fn validate_controller_outputs(
    m: &MealyController,
    table: &PredicateTable,
    cache: &mut CheckedCache,
    cfg: &CheckConfig,
    transcript: &mut Vec<Event>,
) -> Result<Result<Vec<Valuation>, String>, CegarError> {
    let atoms = table.atoms(Side::Output);
    if atoms.is_empty() {
        return Ok(Ok(Vec::new()));
    }
    let pos: Vec<usize> = atoms.iter().filter_map(|a| m.outputs.iter().position(|o| o == a)).collect();
    let emitted: BTreeSet<Valuation> = m
        .emitted_outputs()
        .into_iter()
        .map(|o| pos.iter().map(|&j| (m.outputs[j].clone(), o >> j & 1 == 1)).collect())
        .collect();
    let mut bad = Vec::new();
    for v in emitted {
        if cache.get(Side::Output, &v).is_none() {
            let verdict = check_valuation(&v, Side::Output, table, cfg)?;
            transcript.push(Event::Check { side: Side::Output, valuation: v.clone(), verdict: verdict.clone() });
            cache.insert(Side::Output, v.clone(), verdict)?;
        }
        match cache.get(Side::Output, &v) {
            Some(FeasibilityVerdict::Infeasible) => bad.push(v),
            Some(FeasibilityVerdict::Unknown(r)) => return Ok(Err(r.clone())),
            _ => {}
        }
    }
    Ok(Ok(bad))
}

/// Automaton and environment restriction for one pseudo-Boolean spec.
struct GameSource {
    invariants: Vec<LtlFormula>,
    automaton: BuchiAutomaton,
}

impl GameSource {
    fn new(spec: &PseudoBooleanSpec, algorithm: Algorithm) -> Result<Self, CegarError> {
        let (invariants, rest) = split_env_invariants(&spec.doc.assumptions, spec.inputs());
        let g = ltl::conjunction(spec.doc.guarantees.iter().cloned());
        let f = if rest.is_empty() { g } else { ltl::implies(ltl::conjunction(rest), g) };
        let alphabet: Vec<String> = spec.inputs().iter().chain(spec.outputs()).cloned().collect();
        let automaton = match algorithm {
            Algorithm::Buchi => ltl_to_buchi_over(&f, &alphabet)?,
            Algorithm::Safety => negate_and_translate_over(&f, &alphabet)?,
        };
        Ok(GameSource { invariants, automaton })
    }

    fn arena(&self, spec: &PseudoBooleanSpec, algorithm: Algorithm, bound: u32) -> Result<GameArena, CegarError> {
        let mut g = match algorithm {
            Algorithm::Buchi => build_buchi_game(&self.automaton, spec.inputs(), spec.outputs())?,
            Algorithm::Safety => build_safety_game(&self.automaton, bound, spec.inputs(), spec.outputs())?,
        };
        let inputs = spec.inputs().to_vec();
        restrict_inputs(&mut g, |i| invariants_allow(&self.invariants, &inputs, i));
        Ok(g)
    }
}

/// Builds a game for `spec` at `bound`, enforcing input-only invariant
/// assumptions as environment restrictions.
pub fn build_game(spec: &PseudoBooleanSpec, algorithm: Algorithm, bound: u32) -> Result<GameArena, CegarError> {
    GameSource::new(spec, algorithm)?.arena(spec, algorithm, bound)
}

/// Runs the synthesis loop on a numerical specification.
pub fn synthesize(doc: &SpecDocument, cfg: &CegarConfig) -> Result<SynthesisRun, CegarError> {
    let (mut spec, table) = abstract_spec(doc);
    let mut mux = MultiplexerTable::default();
    if cfg.reencode {
        match reencode_outputs(&spec) {
            Ok((s, m)) => {
                spec = s;
                mux = m;
            }
            Err(AbstractionError::NoOutputCombination) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let mut run = SynthesisRun {
        verdict: SynthesisVerdict::Unknown(String::new()),
        spec,
        table,
        cache: CheckedCache::default(),
        transcript: Vec::new(),
    };
    let verdict = cegar_loop(&mut run, mux, cfg)?;
    run.transcript.push(Event::Verdict(verdict.label()));
    run.verdict = verdict;
    Ok(run)
}

fn cegar_loop(run: &mut SynthesisRun, mux: MultiplexerTable, cfg: &CegarConfig) -> Result<SynthesisVerdict, CegarError> {
    let bounds = cfg.bounds();
    let in_preds = run.spec.input_predicates.clone();
    let mut source = GameSource::new(&run.spec, cfg.algorithm)?;
    let mut arenas: BTreeMap<u32, GameArena> = BTreeMap::new();
    let mut refinements = 0usize;
    loop {
        // solve with increasing bounds until the controller wins
        let mut outcome = None;
        for &k in &bounds {
            let g = match arenas.remove(&k) {
                Some(g) if cfg.edge_marking => g,
                _ => source.arena(&run.spec, cfg.algorithm, k)?,
            };
            let sol = solve(&g);
            let wins = sol.ctrl_wins_initial(&g);
            run.transcript.push(Event::Solve {
                algorithm: cfg.algorithm,
                bound: k,
                env_nodes: g.num_env(),
                controller_wins: wins,
            });
            let last = k == *bounds.last().expect("nonempty schedule");
            if wins || last {
                outcome = Some((k, sol, wins));
            }
            arenas.insert(k, g);
            if wins {
                break;
            }
        }
        let (k, sol, wins) = outcome.expect("schedule ends with the last bound");
        let g = &arenas[&k];

        if wins {
            let controller = extract_controller(g, &sol)?;
            let bad = match validate_controller_outputs(
                &controller,
                &run.table,
                &mut run.cache,
                &cfg.check,
                &mut run.transcript,
            )? {
                Ok(bad) => bad,
                Err(reason) => return Ok(SynthesisVerdict::Unknown(reason)),
            };
            if bad.is_empty() {
                return Ok(SynthesisVerdict::Realizable { controller, mux, table: run.table.clone() });
            }
            let take = if cfg.batch_refinement { bad.len() } else { 1 };
            for w in &bad[..take] {
                if refinements >= cfg.max_refinements {
                    return Ok(SynthesisVerdict::Unknown(format!("refinement cap {} reached", cfg.max_refinements)));
                }
                run.spec = refine_with_guarantee(&run.spec, w)?;
                run.transcript.push(Event::Refine { side: Side::Output, formula: exclusion_formula(w) });
                refinements += 1;
            }
            // the automaton changes with the guarantees
            source = GameSource::new(&run.spec, cfg.algorithm)?;
            arenas.clear();
            continue;
        }

        let cs = extract_counter_strategy(g, &sol)?;
        let cache = &run.cache;
        let (restricted, unproven) = select_counter_inputs(&cs, &in_preds, |v| cache.status(Side::Input, v));
        let mut infeasible = Vec::new();
        for v in &unproven {
            let verdict = check_valuation(v, Side::Input, &run.table, &cfg.check)?;
            run.transcript.push(Event::Check { side: Side::Input, valuation: v.clone(), verdict: verdict.clone() });
            run.cache.insert(Side::Input, v.clone(), verdict.clone())?;
            match verdict {
                FeasibilityVerdict::Feasible(_) => {}
                FeasibilityVerdict::Infeasible => {
                    infeasible.push(v.clone());
                    if !cfg.batch_refinement {
                        break;
                    }
                }
                FeasibilityVerdict::Unknown(r) => return Ok(SynthesisVerdict::Unknown(r)),
            }
        }
        if infeasible.is_empty() {
            let witnesses = genuine_witnesses(&restricted, &in_preds, &run.cache);
            return Ok(SynthesisVerdict::UnrealizableWithinBound { bound: k, counter: restricted, witnesses });
        }
        for v in &infeasible {
            if refinements >= cfg.max_refinements {
                return Ok(SynthesisVerdict::Unknown(format!("refinement cap {} reached", cfg.max_refinements)));
            }
            run.spec = refine_with_assumption(&run.spec, v)?;
            run.transcript.push(Event::Refine { side: Side::Input, formula: exclusion_formula(v) });
            refinements += 1;
            if cfg.edge_marking {
                for g in arenas.values_mut() {
                    mark_edges_absent(g, v)?;
                }
            }
        }
        if !cfg.edge_marking {
            source = GameSource::new(&run.spec, cfg.algorithm)?;
            arenas.clear();
        } else {
            source.invariants = split_env_invariants(&run.spec.doc.assumptions, run.spec.inputs()).0;
        }
    }
}

/// The projections of the strategy's inputs with their cached witnesses.
fn genuine_witnesses(
    cs: &CounterStrategy,
    preds: &[String],
    cache: &CheckedCache,
) -> Vec<(Valuation, Vec<Rational>)> {
    if preds.is_empty() {
        return Vec::new();
    }
    let used: BTreeSet<Valuation> = cs
        .candidates
        .iter()
        .flatten()
        .map(|&i| {
            cs.inputs
                .iter()
                .enumerate()
                .filter(|(_, a)| preds.contains(a))
                .map(|(j, a)| (a.clone(), i >> j & 1 == 1))
                .collect()
        })
        .collect();
    used.into_iter()
        .filter_map(|v| match cache.get(Side::Input, &v) {
            Some(FeasibilityVerdict::Feasible(w)) => Some((v, w.clone())),
            _ => None,
        })
        .collect()
}
