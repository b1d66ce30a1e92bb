//! Environment/controller games: arena construction from automata, Büchi
//! and safety solving, controller and counter-strategy extraction, and
//! counter-strategy input selection.
//!
//! Valuations are bit masks: bit `j` of an input valuation is `inputs[j]`.
//! Enumeration order is lexicographic with the first atom most significant
//! and false before true.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::abstraction::Valuation;
use crate::automata::BuchiAutomaton;
use crate::ltl::LtlFormula;

/// Largest supported number of atoms on either side of an arena.
pub const MAX_SIDE_ATOMS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("the initial node is not winning for the controller")]
    ControllerLoses,
    #[error("the initial node is not winning for the environment")]
    EnvironmentLoses,
    #[error("automaton atom `{0}` is neither an input nor an output")]
    UnknownAtom(String),
    #[error("`{0}` is not an input atom of the arena")]
    UnknownInput(String),
    #[error("{0} atoms on one side exceed the supported maximum of {MAX_SIDE_ATOMS}")]
    TooManyAtoms(usize),
}

/// All valuations over `n` atoms in lexicographic order.
pub fn lex_valuations(n: usize) -> Vec<u64> {
    (0u64..1 << n)
        .map(|k| (0..n).filter(|j| k >> (n - 1 - j) & 1 == 1).fold(0u64, |acc, j| acc | 1 << j))
        .collect()
}

/// Position of `bits` in [`lex_valuations`] order.
pub fn lex_rank(bits: u64, n: usize) -> u64 {
    (0..n).filter(|j| bits >> j & 1 == 1).fold(0u64, |acc, j| acc | 1 << (n - 1 - j))
}

pub fn bits_to_valuation(atoms: &[String], bits: u64) -> Valuation {
    atoms.iter().enumerate().map(|(j, a)| (a.clone(), bits >> j & 1 == 1)).collect()
}

/// Bits of `v` restricted to `atoms`; atoms missing from `v` read as false.
pub fn valuation_to_bits(atoms: &[String], v: &Valuation) -> u64 {
    atoms.iter().enumerate().filter(|(_, a)| v.get(*a) == Some(&true)).fold(0, |acc, (j, _)| acc | 1 << j)
}

/// Renders `bits` as a 0/1 string in atom order.
pub fn bit_string(bits: u64, n: usize) -> String {
    (0..n).map(|j| if bits >> j & 1 == 1 { '1' } else { '0' }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvEdge {
    pub input: u64,
    pub target: usize,
    pub present: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtrlEdge {
    pub output: u64,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Objective {
    /// Controller must visit these env nodes infinitely often.
    Buchi(Vec<bool>),
    /// Controller must never reach these env nodes.
    Safety(Vec<bool>),
}

/// Bipartite arena. The environment moves first from env nodes by choosing
/// an input valuation; the controller answers from the resulting ctrl node
/// with an output valuation. Input labels are distinct per env node. A node
/// without present outgoing edges loses for its owner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameArena {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub initial: usize,
    pub env_edges: Vec<Vec<EnvEdge>>,
    pub ctrl_edges: Vec<Vec<CtrlEdge>>,
    pub objective: Objective,
}

impl GameArena {
    pub fn num_env(&self) -> usize {
        self.env_edges.len()
    }

    pub fn num_ctrl(&self) -> usize {
        self.ctrl_edges.len()
    }

    pub fn num_present_env_edges(&self) -> usize {
        self.env_edges.iter().flatten().filter(|e| e.present).count()
    }

    pub fn num_ctrl_edge_total(&self) -> usize {
        self.ctrl_edges.iter().map(Vec::len).sum()
    }

    fn target_set(&self) -> &[bool] {
        match &self.objective {
            Objective::Buchi(s) | Objective::Safety(s) => s,
        }
    }

    /// Graphviz rendering; absent edges are dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph arena {\n  init [shape=point];\n");
        let marked = self.target_set();
        for (v, &m) in marked.iter().enumerate() {
            let shape = if m { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  e{v} [shape={shape}];");
        }
        for c in 0..self.num_ctrl() {
            let _ = writeln!(s, "  c{c} [shape=box];");
        }
        let _ = writeln!(s, "  init -> e{};", self.initial);
        let ni = self.inputs.len();
        let no = self.outputs.len();
        for (v, edges) in self.env_edges.iter().enumerate() {
            for e in edges {
                let style = if e.present { "" } else { ", style=dashed" };
                let _ = writeln!(s, "  e{v} -> c{} [label=\"{}\"{style}];", e.target, bit_string(e.input, ni));
            }
        }
        for (c, edges) in self.ctrl_edges.iter().enumerate() {
            for e in edges {
                let _ = writeln!(s, "  c{c} -> e{} [label=\"{}\"];", e.target, bit_string(e.output, no));
            }
        }
        s.push_str("}\n");
        s
    }
}

fn check_side(n: usize) -> Result<(), GameError> {
    if n > MAX_SIDE_ATOMS {
        Err(GameError::TooManyAtoms(n))
    } else {
        Ok(())
    }
}

/// For each automaton atom, its source bit: `(true, j)` for input `j`,
/// `(false, j)` for output `j`.
fn alphabet_sources(
    a: &BuchiAutomaton,
    inputs: &[String],
    outputs: &[String],
) -> Result<Vec<(bool, usize)>, GameError> {
    check_side(inputs.len())?;
    check_side(outputs.len())?;
    a.alphabet
        .iter()
        .map(|x| {
            if let Some(j) = inputs.iter().position(|i| i == x) {
                Ok((true, j))
            } else if let Some(j) = outputs.iter().position(|o| o == x) {
                Ok((false, j))
            } else {
                Err(GameError::UnknownAtom(x.clone()))
            }
        })
        .collect()
}

fn letter_of(sources: &[(bool, usize)], input: u64, output: u64) -> u64 {
    sources.iter().enumerate().fold(0, |acc, (i, &(is_in, j))| {
        let bit = if is_in { input >> j & 1 } else { output >> j & 1 };
        acc | bit << i
    })
}

/// Büchi game over the automaton's states: the controller picks an output
/// and resolves the automaton's nondeterminism.
pub fn build_buchi_game(
    a: &BuchiAutomaton,
    inputs: &[String],
    outputs: &[String],
) -> Result<GameArena, GameError> {
    let sources = alphabet_sources(a, inputs, outputs)?;
    let ins = lex_valuations(inputs.len());
    let outs = lex_valuations(outputs.len());
    let mut env_edges = Vec::with_capacity(a.num_states());
    let mut ctrl_edges = Vec::new();
    for q in 0..a.num_states() {
        let mut row = Vec::with_capacity(ins.len());
        for &i in &ins {
            let mut succ = Vec::new();
            for &o in &outs {
                let mut ts: Vec<usize> = a.successors(q, letter_of(&sources, i, o)).collect();
                ts.sort_unstable();
                ts.dedup();
                succ.extend(ts.into_iter().map(|t| CtrlEdge { output: o, target: t }));
            }
            row.push(EnvEdge { input: i, target: ctrl_edges.len(), present: true });
            ctrl_edges.push(succ);
        }
        env_edges.push(row);
    }
    Ok(GameArena {
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
        initial: a.initial,
        env_edges,
        ctrl_edges,
        objective: Objective::Buchi(a.accepting.clone()),
    })
}

/// Safety game by bounded unrolling of the universal co-Büchi reading of
/// `neg` (an automaton for the negated specification). Env nodes are counting
/// functions over `neg`'s states recording the largest number of accepting
/// visits along any run reaching the state; every node with a count above
/// `k` collapses into a single unsafe node.
pub fn build_safety_game(
    neg: &BuchiAutomaton,
    k: u32,
    inputs: &[String],
    outputs: &[String],
) -> Result<GameArena, GameError> {
    let sources = alphabet_sources(neg, inputs, outputs)?;
    let k = k.max(1).min(u16::MAX as u32 - 2) as u16;
    let ins = lex_valuations(inputs.len());
    let outs = lex_valuations(outputs.len());
    let n = neg.num_states();
    let acc = |q: usize| u16::from(neg.accepting[q]);

    // 0 = inactive, c + 1 = active with count c; `None` = unsafe
    let mut nodes: Vec<Option<Vec<u16>>> = Vec::new();
    let mut index: HashMap<Option<Vec<u16>>, usize> = HashMap::new();
    let mut intern = |f: Option<Vec<u16>>, nodes: &mut Vec<Option<Vec<u16>>>, queue: &mut VecDeque<usize>| {
        *index.entry(f.clone()).or_insert_with(|| {
            nodes.push(f);
            queue.push_back(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    let mut queue = VecDeque::new();
    let mut init = vec![0u16; n];
    init[neg.initial] = 1 + acc(neg.initial);
    let init = if init[neg.initial] - 1 > k { None } else { Some(init) };
    intern(init, &mut nodes, &mut queue);

    let mut env_edges: Vec<Vec<EnvEdge>> = Vec::new();
    let mut ctrl_edges: Vec<Vec<CtrlEdge>> = Vec::new();
    while let Some(v) = queue.pop_front() {
        if env_edges.len() <= v {
            env_edges.resize(v + 1, Vec::new());
        }
        let Some(f) = nodes[v].clone() else { continue };
        let mut row = Vec::with_capacity(ins.len());
        for &i in &ins {
            let mut succ = Vec::with_capacity(outs.len());
            for &o in &outs {
                let letter = letter_of(&sources, i, o);
                let mut g = vec![0u16; n];
                let mut bad = false;
                for q in (0..n).filter(|&q| f[q] > 0) {
                    for t in neg.successors(q, letter) {
                        let c = f[q] - 1 + acc(t);
                        if c > k {
                            bad = true;
                        }
                        g[t] = g[t].max(c + 1);
                    }
                }
                let key = if bad { None } else { Some(g) };
                let t = intern(key, &mut nodes, &mut queue);
                succ.push(CtrlEdge { output: o, target: t });
            }
            row.push(EnvEdge { input: i, target: ctrl_edges.len(), present: true });
            ctrl_edges.push(succ);
        }
        env_edges[v] = row;
    }
    env_edges.resize(nodes.len(), Vec::new());
    let unsafe_set = nodes.iter().map(Option::is_none).collect();
    Ok(GameArena {
        inputs: inputs.to_vec(),
        outputs: outputs.to_vec(),
        initial: 0,
        env_edges,
        ctrl_edges,
        objective: Objective::Safety(unsafe_set),
    })
}

/// Marks absent every env edge whose input agrees with `v` on `v`'s atoms.
/// Returns the number of edges that changed.
pub fn mark_edges_absent(g: &mut GameArena, v: &Valuation) -> Result<usize, GameError> {
    let mut mask = 0u64;
    for a in v.keys() {
        let j = g.inputs.iter().position(|x| x == a).ok_or_else(|| GameError::UnknownInput(a.clone()))?;
        mask |= 1 << j;
    }
    let bits = valuation_to_bits(&g.inputs, v);
    Ok(restrict_inputs(g, |i| i & mask != bits))
}

/// Marks absent every env edge whose input fails `allowed`. Returns the
/// number of edges that changed.
pub fn restrict_inputs<F: Fn(u64) -> bool>(g: &mut GameArena, allowed: F) -> usize {
    let mut changed = 0;
    for e in g.env_edges.iter_mut().flatten() {
        if e.present && !allowed(e.input) {
            e.present = false;
            changed += 1;
        }
    }
    changed
}

/// Splits assumptions into invariants `ALWAYS phi` with `phi` propositional
/// over `inputs` (returned as the bodies `phi`) and the remaining ones. The
/// former are enforced by restricting environment moves.
pub fn split_env_invariants(
    assumptions: &[LtlFormula],
    inputs: &[String],
) -> (Vec<LtlFormula>, Vec<LtlFormula>) {
    let mut inv = Vec::new();
    let mut rest = Vec::new();
    for a in assumptions {
        match a {
            LtlFormula::Always(phi)
                if phi.is_propositional() && phi.atoms().iter().all(|x| inputs.contains(x)) =>
            {
                inv.push((**phi).clone())
            }
            _ => rest.push(a.clone()),
        }
    }
    (inv, rest)
}

/// Whether input valuation `bits` satisfies every invariant body.
pub fn invariants_allow(invariants: &[LtlFormula], inputs: &[String], bits: u64) -> bool {
    invariants.iter().all(|phi| {
        phi.eval_prop(&|a: &str| inputs.iter().position(|x| x == a).is_some_and(|j| bits >> j & 1 == 1))
    })
}

// ---------------------------------------------------------------------------
// Solving

struct Graph {
    ne: usize,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl Graph {
    fn new(g: &GameArena) -> Self {
        let ne = g.num_env();
        let n = ne + g.num_ctrl();
        let mut succ = vec![Vec::new(); n];
        for (v, es) in g.env_edges.iter().enumerate() {
            succ[v] = es.iter().filter(|e| e.present).map(|e| ne + e.target).collect();
        }
        for (c, es) in g.ctrl_edges.iter().enumerate() {
            succ[ne + c] = es.iter().map(|e| e.target).collect();
        }
        let mut pred = vec![Vec::new(); n];
        for (v, ss) in succ.iter().enumerate() {
            for &t in ss {
                pred[t].push(v);
            }
        }
        Graph { ne, succ, pred }
    }

    fn n(&self) -> usize {
        self.succ.len()
    }

    fn is_ctrl(&self, v: usize) -> bool {
        v >= self.ne
    }

    /// Attractor of `target` for the given player inside the subgame
    /// `within`, with BFS ranks. Opponent nodes stuck inside the subgame
    /// are attracted at rank 0.
    fn attractor(&self, ctrl_player: bool, target: &[bool], within: &[bool]) -> Vec<Option<u32>> {
        let n = self.n();
        let mut rank = vec![None; n];
        let mut count: Vec<usize> = (0..n).map(|v| self.succ[v].iter().filter(|&&t| within[t]).count()).collect();
        let mut queue = VecDeque::new();
        for v in (0..n).filter(|&v| within[v]) {
            if target[v] || (self.is_ctrl(v) != ctrl_player && count[v] == 0) {
                rank[v] = Some(0);
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            let r = rank[u].expect("queued nodes are ranked");
            for &p in &self.pred[u] {
                if !within[p] || rank[p].is_some() {
                    continue;
                }
                let attract = if self.is_ctrl(p) == ctrl_player {
                    true
                } else {
                    count[p] -= 1;
                    count[p] == 0
                };
                if attract {
                    rank[p] = Some(r + 1);
                    queue.push_back(p);
                }
            }
        }
        rank
    }
}

/// Winning regions and positional strategies of a solved arena.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSolution {
    pub ctrl_wins_env: Vec<bool>,
    pub ctrl_wins_ctrl: Vec<bool>,
    /// Chosen ctrl edge index for every controller-winning ctrl node.
    pub ctrl_strategy: Vec<Option<usize>>,
    /// Chosen env edge index for every environment-winning env node that is
    /// not already terminal.
    pub env_strategy: Vec<Option<usize>>,
    /// Environment progress measure `(layer, rank)` on env nodes.
    pub env_measure_env: Vec<Option<(u32, u32)>>,
    /// Environment progress measure on ctrl nodes.
    pub env_measure_ctrl: Vec<Option<(u32, u32)>>,
}

impl GameSolution {
    pub fn ctrl_wins_initial(&self, g: &GameArena) -> bool {
        self.ctrl_wins_env[g.initial]
    }
}

pub fn solve(g: &GameArena) -> GameSolution {
    match g.objective {
        Objective::Buchi(_) => solve_buchi(g),
        Objective::Safety(_) => solve_safety(g),
    }
}

/// Büchi game by iterated removal of environment attractors of the nodes
/// from which the controller cannot force a visit to an accepting node.
///
/// # Panics
/// If the objective is not Büchi.
pub fn solve_buchi(g: &GameArena) -> GameSolution {
    let Objective::Buchi(acc) = &g.objective else { panic!("solve_buchi on a safety arena") };
    let gr = Graph::new(g);
    let n = gr.n();
    let mut within = vec![true; n];
    let mut measure = vec![None; n];
    let mut layer = 0u32;
    let ctrl_rank = loop {
        let target: Vec<bool> = (0..n).map(|v| within[v] && v < gr.ne && acc[v]).collect();
        let reach = gr.attractor(true, &target, &within);
        let trap: Vec<bool> = (0..n).map(|v| within[v] && reach[v].is_none()).collect();
        if !trap.contains(&true) {
            break reach;
        }
        let env = gr.attractor(false, &trap, &within);
        for v in 0..n {
            if let Some(r) = env[v] {
                measure[v] = Some((layer, r));
                within[v] = false;
            }
        }
        layer += 1;
    };
    finish(g, &gr, measure, |c, t| ctrl_rank[t] < ctrl_rank[c])
}

/// Safety game: the controller wins outside the environment attractor of
/// the unsafe nodes.
///
/// # Panics
/// If the objective is not safety.
pub fn solve_safety(g: &GameArena) -> GameSolution {
    let Objective::Safety(bad) = &g.objective else { panic!("solve_safety on a Büchi arena") };
    let gr = Graph::new(g);
    let n = gr.n();
    let target: Vec<bool> = (0..n).map(|v| v < gr.ne && bad[v]).collect();
    let env = gr.attractor(false, &target, &vec![true; n]);
    let measure = env.into_iter().map(|r| r.map(|r| (0, r))).collect();
    finish(g, &gr, measure, |_, _| true)
}

/// Assembles regions and strategies from the environment measure; `better`
/// decides whether the ctrl edge from unified node `c` to `t` makes
/// controller progress.
fn finish<F: Fn(usize, usize) -> bool>(
    g: &GameArena,
    gr: &Graph,
    measure: Vec<Option<(u32, u32)>>,
    better: F,
) -> GameSolution {
    let ne = gr.ne;
    let ctrl_wins_env: Vec<bool> = (0..ne).map(|v| measure[v].is_none()).collect();
    let ctrl_wins_ctrl: Vec<bool> = (0..g.num_ctrl()).map(|c| measure[ne + c].is_none()).collect();
    let ctrl_strategy = (0..g.num_ctrl())
        .map(|c| {
            if !ctrl_wins_ctrl[c] {
                return None;
            }
            g.ctrl_edges[c].iter().position(|e| ctrl_wins_env[e.target] && better(ne + c, e.target))
        })
        .collect();
    let env_measure_env: Vec<_> = measure[..ne].to_vec();
    let env_measure_ctrl: Vec<_> = measure[ne..].to_vec();
    let mut sol = GameSolution {
        ctrl_wins_env,
        ctrl_wins_ctrl,
        ctrl_strategy,
        env_strategy: vec![None; ne],
        env_measure_env,
        env_measure_ctrl,
    };
    for v in 0..ne {
        sol.env_strategy[v] = env_candidates(g, &sol, v).first().copied();
    }
    sol
}

/// Whether `v` is an unsafe node of a safety arena.
fn is_violation(g: &GameArena, v: usize) -> bool {
    matches!(&g.objective, Objective::Safety(bad) if bad[v])
}

/// Env edge indices at env node `v` that keep the environment's progress
/// measure on track: strictly decreasing, or staying inside the current
/// layer's trap. Empty for controller-winning and terminal nodes.
pub fn env_candidates(g: &GameArena, sol: &GameSolution, v: usize) -> Vec<usize> {
    let Some((layer, rank)) = sol.env_measure_env[v] else { return Vec::new() };
    if is_violation(g, v) {
        return Vec::new();
    }
    g.env_edges[v]
        .iter()
        .enumerate()
        .filter(|(_, e)| e.present)
        .filter_map(|(i, e)| {
            let (tl, tr) = sol.env_measure_ctrl[e.target]?;
            let ok = if rank > 0 { (tl, tr) < (layer, rank) } else { tl < layer || (tl == layer && tr == 0) };
            ok.then_some(i)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Strategies

/// Controller transducer. State 0 is initial; `step[s]` maps each permitted
/// input valuation to the emitted output valuation and the next state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyController {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub step: Vec<BTreeMap<u64, (u64, usize)>>,
}

impl MealyController {
    pub fn num_states(&self) -> usize {
        self.step.len()
    }

    pub fn react(&self, state: usize, input: u64) -> Option<(u64, usize)> {
        self.step.get(state)?.get(&input).copied()
    }

    /// Every output valuation emitted by some transition.
    pub fn emitted_outputs(&self) -> BTreeSet<u64> {
        self.step.iter().flat_map(|m| m.values().map(|&(o, _)| o)).collect()
    }

    /// Input valuations accepted in `state`.
    pub fn permitted_inputs(&self, state: usize) -> Vec<u64> {
        self.step[state].keys().copied().collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph controller {\n  init [shape=point];\n  init -> s0;\n");
        for (q, m) in self.step.iter().enumerate() {
            let _ = writeln!(s, "  s{q} [shape=circle];");
            for (&i, &(o, t)) in m {
                let _ = writeln!(
                    s,
                    "  s{q} -> s{t} [label=\"{} / {}\"];",
                    bit_string(i, self.inputs.len()),
                    bit_string(o, self.outputs.len())
                );
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Controller from the positional strategy, over env nodes reachable from
/// the initial node.
pub fn extract_controller(g: &GameArena, sol: &GameSolution) -> Result<MealyController, GameError> {
    if !sol.ctrl_wins_initial(g) {
        return Err(GameError::ControllerLoses);
    }
    let mut id: HashMap<usize, usize> = HashMap::from([(g.initial, 0)]);
    let mut order = vec![g.initial];
    let mut step = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        let mut m = BTreeMap::new();
        for e in g.env_edges[v].iter().filter(|e| e.present) {
            let c = e.target;
            let Some(ci) = sol.ctrl_strategy[c] else { continue };
            let ce = g.ctrl_edges[c][ci];
            let next = *id.entry(ce.target).or_insert_with(|| {
                order.push(ce.target);
                order.len() - 1
            });
            m.insert(e.input, (ce.output, next));
        }
        step.push(m);
        i += 1;
    }
    Ok(MealyController { inputs: g.inputs.clone(), outputs: g.outputs.clone(), step })
}

/// Environment spoiler. State 0 is initial. Violated states are terminal:
/// the specification is already falsified there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterStrategy {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Arena env node behind each state.
    pub nodes: Vec<usize>,
    pub violated: Vec<bool>,
    /// Candidate input valuations per state, in lexicographic order.
    pub candidates: Vec<Vec<u64>>,
    pub transitions: BTreeMap<(usize, u64, u64), Vec<usize>>,
}

impl CounterStrategy {
    pub fn num_states(&self) -> usize {
        self.nodes.len()
    }

    /// Keeps `choice[s]` as the only candidate of each state (states with
    /// `None` keep none) and drops states that become unreachable.
    pub fn restrict(&self, choice: &[Option<u64>]) -> CounterStrategy {
        let mut id: HashMap<usize, usize> = HashMap::from([(0, 0)]);
        let mut order = vec![0usize];
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            if let Some(inp) = choice[s] {
                for ((_, _, _), ts) in self.transitions.range((s, inp, 0)..=(s, inp, u64::MAX)) {
                    for &t in ts {
                        id.entry(t).or_insert_with(|| {
                            order.push(t);
                            order.len() - 1
                        });
                    }
                }
            }
            i += 1;
        }
        let mut transitions = BTreeMap::new();
        for (new, &s) in order.iter().enumerate() {
            if let Some(inp) = choice[s] {
                for (&(_, _, o), ts) in self.transitions.range((s, inp, 0)..=(s, inp, u64::MAX)) {
                    transitions.insert((new, inp, o), ts.iter().map(|t| id[t]).collect());
                }
            }
        }
        CounterStrategy {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            nodes: order.iter().map(|&s| self.nodes[s]).collect(),
            violated: order.iter().map(|&s| self.violated[s]).collect(),
            candidates: order.iter().map(|&s| choice[s].into_iter().collect()).collect(),
            transitions,
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph counter {\n  init [shape=point];\n  init -> s0;\n");
        for q in 0..self.num_states() {
            let shape = if self.violated[q] { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  s{q} [shape={shape}];");
        }
        for (&(q, i, o), ts) in &self.transitions {
            for t in ts {
                let _ = writeln!(
                    s,
                    "  s{q} -> s{t} [label=\"{} / {}\"];",
                    bit_string(i, self.inputs.len()),
                    bit_string(o, self.outputs.len())
                );
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Counter-strategy whose candidate sets hold every progress-preserving
/// input at each reachable env node.
pub fn extract_counter_strategy(g: &GameArena, sol: &GameSolution) -> Result<CounterStrategy, GameError> {
    if sol.ctrl_wins_initial(g) {
        return Err(GameError::EnvironmentLoses);
    }
    let mut id: HashMap<usize, usize> = HashMap::from([(g.initial, 0)]);
    let mut order = vec![g.initial];
    let mut candidates = Vec::new();
    let mut transitions = BTreeMap::new();
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        let mut cands = Vec::new();
        for ei in env_candidates(g, sol, v) {
            let e = g.env_edges[v][ei];
            cands.push(e.input);
            for ce in &g.ctrl_edges[e.target] {
                let t = *id.entry(ce.target).or_insert_with(|| {
                    order.push(ce.target);
                    order.len() - 1
                });
                let slot: &mut Vec<usize> = transitions.entry((i, e.input, ce.output)).or_default();
                if !slot.contains(&t) {
                    slot.push(t);
                }
            }
        }
        candidates.push(cands);
        i += 1;
    }
    Ok(CounterStrategy {
        inputs: g.inputs.clone(),
        outputs: g.outputs.clone(),
        violated: order.iter().map(|&v| is_violation(g, v)).collect(),
        nodes: order,
        candidates,
        transitions,
    })
}

/// Theory status of a predicate valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Feasible,
    Infeasible,
    Unchecked,
}

/// Restricts each state to one candidate, preferring inputs whose
/// projection onto `predicate_atoms` is known feasible. States without such
/// a candidate are covered greedily by unchecked projections, most states
/// first, ties broken lexicographically. Returns the restricted strategy
/// and the unchecked projections it uses.
pub fn select_counter_inputs<F: Fn(&Valuation) -> CheckStatus>(
    cs: &CounterStrategy,
    predicate_atoms: &[String],
    status: F,
) -> (CounterStrategy, Vec<Valuation>) {
    let pos: Vec<usize> =
        predicate_atoms.iter().filter_map(|a| cs.inputs.iter().position(|x| x == a)).collect();
    let proj = |bits: u64| -> Valuation { pos.iter().map(|&j| (cs.inputs[j].clone(), bits >> j & 1 == 1)).collect() };
    let stat = |v: &Valuation| if v.is_empty() { CheckStatus::Feasible } else { status(v) };

    let n = cs.num_states();
    let proj_sets: Vec<Vec<(u64, Valuation)>> =
        cs.candidates.iter().map(|cands| cands.iter().map(|&i| (i, proj(i))).collect()).collect();
    let has_feasible =
        |s: usize| proj_sets[s].iter().any(|(_, v)| stat(v) == CheckStatus::Feasible);
    let mut uncovered: BTreeSet<usize> = (0..n).filter(|&s| !proj_sets[s].is_empty() && !has_feasible(s)).collect();

    let mut selected: BTreeSet<Valuation> = BTreeSet::new();
    while !uncovered.is_empty() {
        let mut score: BTreeMap<&Valuation, usize> = BTreeMap::new();
        for &s in &uncovered {
            let distinct: BTreeSet<&Valuation> = proj_sets[s]
                .iter()
                .map(|(_, v)| v)
                .filter(|v| stat(v) == CheckStatus::Unchecked)
                .collect();
            for v in distinct {
                *score.entry(v).or_default() += 1;
            }
        }
        let mut best: Option<(&Valuation, usize)> = None;
        for (v, c) in score {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((v, c));
            }
        }
        let Some((v, _)) = best else { break };
        let v = v.clone();
        uncovered.retain(|&s| !proj_sets[s].iter().any(|(_, w)| *w == v));
        selected.insert(v);
    }

    let choice: Vec<Option<u64>> = (0..n)
        .map(|s| {
            let ps = &proj_sets[s];
            ps.iter()
                .find(|(_, v)| stat(v) == CheckStatus::Feasible)
                .or_else(|| ps.iter().find(|(_, v)| selected.contains(v)))
                .or_else(|| ps.first())
                .map(|(i, _)| *i)
        })
        .collect();
    let restricted = cs.restrict(&choice);
    let unproven: BTreeSet<Valuation> = restricted
        .candidates
        .iter()
        .flatten()
        .map(|&i| proj(i))
        .filter(|v| stat(v) == CheckStatus::Unchecked)
        .collect();
    (restricted, unproven.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{ltl_to_buchi_over, negate_and_translate_over, Cube};
    use crate::ltl::{self, always, atom, implies, next, not};

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lex_order() {
        assert_eq!(lex_valuations(2), vec![0b00, 0b10, 0b01, 0b11]);
        for (k, &b) in lex_valuations(3).iter().enumerate() {
            assert_eq!(lex_rank(b, 3), k as u64);
        }
    }

    #[test]
    fn grant_after_request_is_won_by_controller() {
        let f = always(implies(atom("req1"), next(atom("grant1"))));
        let ins = names(&["req1"]);
        let outs = names(&["grant1"]);
        let a = ltl_to_buchi_over(&f, &names(&["req1", "grant1"])).unwrap();
        let g = build_buchi_game(&a, &ins, &outs).unwrap();
        let sol = solve_buchi(&g);
        assert!(sol.ctrl_wins_initial(&g));
        let m = extract_controller(&g, &sol).unwrap();
        // after a request the next output grants
        let mut s = 0;
        let mut pending = false;
        for step in 0..64 {
            let i = (step * 7 % 3 == 0) as u64;
            let (o, t) = m.react(s, i).unwrap();
            if pending {
                assert_eq!(o, 1);
            }
            pending = i == 1;
            s = t;
        }
    }

    #[test]
    fn always_false_loses_everywhere() {
        let a = ltl_to_buchi_over(&always(LtlFormula::False), &names(&["a", "b"])).unwrap();
        let g = build_buchi_game(&a, &names(&["a"]), &names(&["b"])).unwrap();
        let sol = solve_buchi(&g);
        assert!(sol.ctrl_wins_env.iter().all(|w| !w));
        assert!(extract_controller(&g, &sol).is_err());
    }

    #[test]
    fn hand_built_two_state_arena() {
        // q0 --a--> q1 (accepting), q1 --true--> q1
        let a = BuchiAutomaton {
            alphabet: names(&["a", "b"]),
            initial: 0,
            accepting: vec![false, true],
            transitions: vec![vec![(Cube { pos: 1, neg: 0 }, 1)], vec![(Cube::TRUE, 1)]],
        };
        let g = build_buchi_game(&a, &names(&["a"]), &names(&["b"])).unwrap();
        assert_eq!(g.num_env(), 2);
        assert_eq!(g.num_ctrl(), 4);
        assert_eq!(g.env_edges.iter().map(Vec::len).sum::<usize>(), 4);
        // q0: a=0 has no move, a=1 has two outputs; q1: 2 x 2 outputs
        assert_eq!(g.ctrl_edges.iter().map(Vec::len).collect::<Vec<_>>(), vec![0, 2, 2, 2]);
        let sol = solve_buchi(&g);
        assert!(!sol.ctrl_wins_env[0]);
        assert!(sol.ctrl_wins_env[1]);
        assert_eq!(sol.env_strategy[0], Some(0));
    }

    #[test]
    fn trivial_arenas() {
        // single env node, self loop through an accepting node
        let g = GameArena {
            inputs: vec![],
            outputs: vec![],
            initial: 0,
            env_edges: vec![vec![EnvEdge { input: 0, target: 0, present: true }]],
            ctrl_edges: vec![vec![CtrlEdge { output: 0, target: 0 }]],
            objective: Objective::Buchi(vec![true]),
        };
        let sol = solve_buchi(&g);
        assert!(sol.ctrl_wins_env[0] && sol.ctrl_wins_ctrl[0]);
        let mut dead = g.clone();
        dead.ctrl_edges[0].clear();
        let sol = solve_buchi(&dead);
        assert!(!sol.ctrl_wins_ctrl[0] && !sol.ctrl_wins_env[0]);
        let mut safe = g.clone();
        safe.objective = Objective::Safety(vec![false]);
        assert!(solve_safety(&safe).ctrl_wins_env[0]);
        safe.objective = Objective::Safety(vec![true]);
        assert!(!solve_safety(&safe).ctrl_wins_env[0]);
    }

    fn running_example_abstraction() -> LtlFormula {
        let r1 = atom("req1");
        let r2 = atom("req2");
        let g1 = atom("grant1");
        let g2 = atom("grant2");
        ltl::conjunction([
            always(implies(r1, next(g1.clone()))),
            always(implies(r2, next(g2.clone()))),
            always(not(ltl::and(g1, g2))),
        ])
    }

    #[test]
    fn safety_game_of_running_example() {
        let f = running_example_abstraction();
        let ins = names(&["req1", "req2"]);
        let outs = names(&["grant1", "grant2"]);
        let neg = negate_and_translate_over(&f, &names(&["req1", "req2", "grant1", "grant2"])).unwrap();
        let mut g = build_safety_game(&neg, 1, &ins, &outs).unwrap();
        let sol = solve_safety(&g);
        assert!(!sol.ctrl_wins_initial(&g));
        let cs = extract_counter_strategy(&g, &sol).unwrap();
        assert!(cs.candidates[0].contains(&0b11));
        let (_, unproven) = select_counter_inputs(&cs, &ins, |_| CheckStatus::Unchecked);
        let tt: Valuation = [("req1".to_string(), true), ("req2".to_string(), true)].into();
        assert_eq!(unproven, vec![tt.clone()]);

        let before = g.clone();
        let none: Valuation = [("req1".to_string(), true), ("zzz".to_string(), true)].into();
        assert!(mark_edges_absent(&mut g, &none).is_err());
        assert_eq!(g, before);
        assert!(mark_edges_absent(&mut g, &tt).unwrap() > 0);
        let sol = solve_safety(&g);
        assert!(sol.ctrl_wins_initial(&g));
        let m = extract_controller(&g, &sol).unwrap();
        assert!(m.emitted_outputs().iter().all(|&o| o != 0b11));
        assert!((0..m.num_states()).all(|s| !m.step[s].contains_key(&0b11)));
    }

    #[test]
    fn feasible_cache_makes_strategy_genuine() {
        let f = running_example_abstraction();
        let ins = names(&["req1", "req2"]);
        let outs = names(&["grant1", "grant2"]);
        let neg = negate_and_translate_over(&f, &names(&["req1", "req2", "grant1", "grant2"])).unwrap();
        let g = build_safety_game(&neg, 1, &ins, &outs).unwrap();
        let cs = extract_counter_strategy(&g, &solve_safety(&g)).unwrap();
        let (r, unproven) = select_counter_inputs(&cs, &ins, |_| CheckStatus::Feasible);
        assert!(unproven.is_empty());
        assert!(r.candidates.iter().all(|c| c.len() <= 1));
    }

    #[test]
    fn tautology_is_won_at_bound_one() {
        let f = implies(always(atom("a")), always(atom("a")));
        let ab = names(&["a", "b"]);
        let neg = negate_and_translate_over(&f, &ab).unwrap();
        let g = build_safety_game(&neg, 1, &names(&["a"]), &names(&["b"])).unwrap();
        assert!(solve_safety(&g).ctrl_wins_initial(&g));
    }

    #[test]
    fn env_invariants_split() {
        let ins = names(&["r1", "r2"]);
        let a1 = always(not(ltl::and(atom("r1"), atom("r2"))));
        let a2 = always(ltl::eventually(atom("r1")));
        let a3 = always(atom("g"));
        let (inv, rest) = split_env_invariants(&[a1, a2.clone(), a3.clone()], &ins);
        assert_eq!(inv.len(), 1);
        assert_eq!(rest, vec![a2, a3]);
        assert!(!invariants_allow(&inv, &ins, 0b11));
        assert!(invariants_allow(&inv, &ins, 0b01));
    }
}
