//! LTL to Büchi translation (tableau expansion on negation normal form with
//! counter degeneralization) and lasso-word semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::abstraction::Valuation;
use crate::ltl::LtlFormula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutomatonError {
    #[error("letter does not assign atom `{0}`")]
    AlphabetMismatch(String),
    #[error("lasso loop must be nonempty")]
    EmptyLoop,
    #[error("at most 64 atoms are supported, got {0}")]
    TooManyAtoms(usize),
}

/// Conjunction of literals over alphabet indices, as bit masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cube {
    pub pos: u64,
    pub neg: u64,
}

impl Cube {
    pub const TRUE: Cube = Cube { pos: 0, neg: 0 };

    pub fn satisfied_by(&self, letter: u64) -> bool {
        letter & self.pos == self.pos && letter & self.neg == 0
    }

    pub fn is_satisfiable(&self) -> bool {
        self.pos & self.neg == 0
    }

    pub fn render(&self, alphabet: &[String]) -> String {
        let mut lits = Vec::new();
        for (i, a) in alphabet.iter().enumerate() {
            if self.pos >> i & 1 == 1 {
                lits.push(a.clone());
            } else if self.neg >> i & 1 == 1 {
                lits.push(format!("!{a}"));
            }
        }
        if lits.is_empty() {
            "true".into()
        } else {
            lits.join(" && ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    /// Letters are valuations of these atoms; bit `i` of a letter is atom `i`.
    pub alphabet: Vec<String>,
    pub initial: usize,
    pub accepting: Vec<bool>,
    pub transitions: Vec<Vec<(Cube, usize)>>,
}

impl BuchiAutomaton {
    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, q: usize, letter: u64) -> impl Iterator<Item = usize> + '_ {
        self.transitions[q].iter().filter(move |(c, _)| c.satisfied_by(letter)).map(|&(_, t)| t)
    }

    /// Bit-encodes a valuation over the alphabet.
    pub fn letter(&self, v: &Valuation) -> Result<u64, AutomatonError> {
        let mut bits = 0u64;
        for (i, a) in self.alphabet.iter().enumerate() {
            match v.get(a) {
                Some(true) => bits |= 1 << i,
                Some(false) => {}
                None => return Err(AutomatonError::AlphabetMismatch(a.clone())),
            }
        }
        Ok(bits)
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph buchi {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.num_states() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            let _ = writeln!(s, "  q{q} [shape={shape}];");
        }
        let _ = writeln!(s, "  init -> q{};", self.initial);
        for (q, row) in self.transitions.iter().enumerate() {
            for (c, t) in row {
                let _ = writeln!(s, "  q{q} -> q{t} [label=\"{}\"];", c.render(&self.alphabet));
            }
        }
        s.push_str("}\n");
        s
    }
}

// ---------------------------------------------------------------------------
// Negation normal form

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Release(usize, usize),
}

/// Hash-consed NNF subformulas.
#[derive(Default)]
struct Arena {
    nodes: Vec<Nnf>,
    ids: HashMap<Nnf, usize>,
}

impl Arena {
    fn intern(&mut self, n: Nnf) -> usize {
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        self.nodes.push(n.clone());
        self.ids.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn build(&mut self, f: &LtlFormula, positive: bool, atoms: &[String]) -> usize {
        use LtlFormula as L;
        let n = match (f, positive) {
            (L::True, true) | (L::False, false) => Nnf::True,
            (L::True, false) | (L::False, true) => Nnf::False,
            (L::Atom(a), p) => Nnf::Lit(atoms.iter().position(|x| x == a).unwrap(), p),
            (L::Not(a), p) => return self.build(a, !p, atoms),
            (L::And(a, b), true) | (L::Or(a, b), false) => {
                Nnf::And(self.build(a, positive, atoms), self.build(b, positive, atoms))
            }
            (L::Or(a, b), true) | (L::And(a, b), false) => {
                Nnf::Or(self.build(a, positive, atoms), self.build(b, positive, atoms))
            }
            (L::Implies(a, b), true) => Nnf::Or(self.build(a, false, atoms), self.build(b, true, atoms)),
            (L::Implies(a, b), false) => {
                Nnf::And(self.build(a, true, atoms), self.build(b, false, atoms))
            }
            (L::Next(a), p) => Nnf::Next(self.build(a, p, atoms)),
            (L::Eventually(a), true) | (L::Always(a), false) => {
                let t = self.intern(Nnf::True);
                Nnf::Until(t, self.build(a, positive, atoms))
            }
            (L::Always(a), true) | (L::Eventually(a), false) => {
                let fl = self.intern(Nnf::False);
                Nnf::Release(fl, self.build(a, positive, atoms))
            }
            (L::Until(a, b), true) => Nnf::Until(self.build(a, true, atoms), self.build(b, true, atoms)),
            (L::Until(a, b), false) => {
                Nnf::Release(self.build(a, false, atoms), self.build(b, false, atoms))
            }
        };
        self.intern(n)
    }
}

// ---------------------------------------------------------------------------
// Tableau

#[derive(Clone)]
struct TNode {
    incoming: BTreeSet<usize>,
    new: BTreeSet<usize>,
    old: BTreeSet<usize>,
    next: BTreeSet<usize>,
}

const INIT: usize = usize::MAX;

struct Tableau {
    /// finished nodes: (incoming, old, next)
    done: Vec<(BTreeSet<usize>, BTreeSet<usize>, BTreeSet<usize>)>,
}

fn contradicts(arena: &Arena, old: &BTreeSet<usize>, f: usize) -> bool {
    match arena.nodes[f] {
        Nnf::False => true,
        Nnf::Lit(a, p) => arena.ids.get(&Nnf::Lit(a, !p)).is_some_and(|n| old.contains(n)),
        _ => false,
    }
}

fn expand(arena: &Arena, root: TNode) -> Tableau {
    let mut t = Tableau { done: Vec::new() };
    let mut stack = vec![root];
    while let Some(mut node) = stack.pop() {
        let Some(&f) = node.new.iter().next() else {
            if let Some(d) = t.done.iter_mut().find(|d| d.1 == node.old && d.2 == node.next) {
                d.0.extend(node.incoming);
            } else {
                let id = t.done.len();
                t.done.push((node.incoming, node.old, node.next.clone()));
                stack.push(TNode {
                    incoming: BTreeSet::from([id]),
                    new: node.next,
                    old: BTreeSet::new(),
                    next: BTreeSet::new(),
                });
            }
            continue;
        };
        node.new.remove(&f);
        if node.old.contains(&f) {
            stack.push(node);
            continue;
        }
        if contradicts(arena, &node.old, f) {
            continue;
        }
        node.old.insert(f);
        let add = |n: &mut TNode, g: usize| {
            if !n.old.contains(&g) {
                n.new.insert(g);
            }
        };
        match arena.nodes[f] {
            Nnf::True | Nnf::False | Nnf::Lit(..) => stack.push(node),
            Nnf::And(a, b) => {
                add(&mut node, a);
                add(&mut node, b);
                stack.push(node);
            }
            Nnf::Next(a) => {
                node.next.insert(a);
                stack.push(node);
            }
            Nnf::Or(a, b) => {
                let mut n2 = node.clone();
                add(&mut node, a);
                add(&mut n2, b);
                stack.push(n2);
                stack.push(node);
            }
            Nnf::Until(a, b) => {
                // a U b = b || (a && X(a U b))
                let mut n2 = node.clone();
                add(&mut node, a);
                node.next.insert(f);
                add(&mut n2, b);
                stack.push(n2);
                stack.push(node);
            }
            Nnf::Release(a, b) => {
                // a R b = b && (a || X(a R b))
                let mut n2 = node.clone();
                add(&mut node, a);
                add(&mut node, b);
                add(&mut n2, b);
                n2.next.insert(f);
                stack.push(n2);
                stack.push(node);
            }
        }
    }
    t
}

/// Translates `f` over its own atoms (sorted by name).
pub fn ltl_to_buchi(f: &LtlFormula) -> BuchiAutomaton {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    ltl_to_buchi_over(f, &atoms).expect("formula atoms fit")
}

/// Translates `f` over a given alphabet, which must contain `f`'s atoms.
pub fn ltl_to_buchi_over(
    f: &LtlFormula,
    alphabet: &[String],
) -> Result<BuchiAutomaton, AutomatonError> {
    if alphabet.len() > 64 {
        return Err(AutomatonError::TooManyAtoms(alphabet.len()));
    }
    if let Some(a) = f.atoms().into_iter().find(|a| !alphabet.contains(a)) {
        return Err(AutomatonError::AlphabetMismatch(a));
    }
    let mut arena = Arena::default();
    let root = arena.build(f, true, alphabet);
    let tab = expand(
        &arena,
        TNode {
            incoming: BTreeSet::from([INIT]),
            new: BTreeSet::from([root]),
            old: BTreeSet::new(),
            next: BTreeSet::new(),
        },
    );

    // generalized automaton: state 0 is the initial pseudo-state, node i is i+1
    let n = tab.done.len() + 1;
    let mut guard = vec![Cube::TRUE; n];
    for (i, (_, old, _)) in tab.done.iter().enumerate() {
        let mut c = Cube::TRUE;
        for &g in old {
            if let Nnf::Lit(a, p) = arena.nodes[g] {
                if p {
                    c.pos |= 1 << a;
                } else {
                    c.neg |= 1 << a;
                }
            }
        }
        guard[i + 1] = c;
    }
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (incoming, _, _)) in tab.done.iter().enumerate() {
        for &src in incoming {
            let s = if src == INIT { 0 } else { src + 1 };
            succ[s].push(i + 1);
        }
    }
    let untils: Vec<(usize, usize)> = arena
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, x)| match x {
            Nnf::Until(_, b) => Some((i, *b)),
            _ => None,
        })
        .collect();
    let in_set = |q: usize, k: usize| -> bool {
        if q == 0 {
            return false;
        }
        let old = &tab.done[q - 1].1;
        let (u, b) = untils[k];
        !old.contains(&u) || old.contains(&b)
    };

    // degeneralize: the level skips every consecutive set containing the
    // current state; wrapping past the last set is accepting
    let m = untils.len();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut states = vec![(0usize, 0usize)];
    index.insert((0, 0), 0);
    let mut accepting = Vec::new();
    let mut transitions = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let (q, lvl) = states[id];
        let mut next_lvl = lvl;
        let mut wrapped = q != 0 && m == 0;
        while m > 0 && in_set(q, next_lvl) {
            next_lvl += 1;
            if next_lvl == m {
                next_lvl = 0;
                wrapped = true;
                break;
            }
        }
        accepting.push(wrapped);
        let mut row = Vec::new();
        for &t in &succ[q] {
            let key = (t, next_lvl);
            let tid = *index.entry(key).or_insert_with(|| {
                states.push(key);
                queue.push_back(states.len() - 1);
                states.len() - 1
            });
            row.push((guard[t], tid));
        }
        transitions.push(row);
    }
    let mut a = BuchiAutomaton { alphabet: alphabet.to_vec(), initial: 0, accepting, transitions };
    merge_identical_rows(&mut a);
    Ok(a)
}

/// Merges states with equal acceptance and equal outgoing rows until stable,
/// then drops unreachable states.
fn merge_identical_rows(a: &mut BuchiAutomaton) {
    loop {
        let mut sig: BTreeMap<(bool, Vec<(Cube, usize)>), usize> = BTreeMap::new();
        let mut rep = vec![0; a.num_states()];
        for (q, r) in rep.iter_mut().enumerate() {
            let mut row = a.transitions[q].clone();
            row.sort();
            row.dedup();
            *r = *sig.entry((a.accepting[q], row)).or_insert(q);
        }
        if rep.iter().enumerate().all(|(q, &r)| q == r) {
            break;
        }
        for row in &mut a.transitions {
            for e in row.iter_mut() {
                e.1 = rep[e.1];
            }
        }
        a.initial = rep[a.initial];
        prune_unreachable(a);
    }
    for row in &mut a.transitions {
        row.sort();
        row.dedup();
    }
    prune_unreachable(a);
}

fn prune_unreachable(a: &mut BuchiAutomaton) {
    let mut map = vec![usize::MAX; a.num_states()];
    let mut order = vec![a.initial];
    map[a.initial] = 0;
    let mut i = 0;
    while i < order.len() {
        for &(_, t) in &a.transitions[order[i]] {
            if map[t] == usize::MAX {
                map[t] = order.len();
                order.push(t);
            }
        }
        i += 1;
    }
    let accepting = order.iter().map(|&q| a.accepting[q]).collect();
    let transitions = order
        .iter()
        .map(|&q| a.transitions[q].iter().map(|&(c, t)| (c, map[t])).collect())
        .collect();
    a.initial = 0;
    a.accepting = accepting;
    a.transitions = transitions;
}

/// Automaton of `!f`.
pub fn negate_and_translate(f: &LtlFormula) -> BuchiAutomaton {
    ltl_to_buchi(&crate::ltl::not(f.clone()))
}

pub fn negate_and_translate_over(
    f: &LtlFormula,
    alphabet: &[String],
) -> Result<BuchiAutomaton, AutomatonError> {
    ltl_to_buchi_over(&crate::ltl::not(f.clone()), alphabet)
}

// ---------------------------------------------------------------------------
// Lassos

/// The ultimately periodic word `prefix · cycle^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWord {
    pub prefix: Vec<Valuation>,
    pub cycle: Vec<Valuation>,
}

impl LassoWord {
    pub fn new(prefix: Vec<Valuation>, cycle: Vec<Valuation>) -> Result<Self, AutomatonError> {
        if cycle.is_empty() {
            return Err(AutomatonError::EmptyLoop);
        }
        Ok(LassoWord { prefix, cycle })
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn letter(&self, i: usize) -> &Valuation {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[i - self.prefix.len()]
        }
    }

    /// Position following `i`, wrapping the last position into the cycle.
    pub fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }
}

/// Whether some run on the lasso visits accepting states infinitely often.
pub fn accepts_lasso(a: &BuchiAutomaton, w: &LassoWord) -> Result<bool, AutomatonError> {
    if w.cycle.is_empty() {
        return Err(AutomatonError::EmptyLoop);
    }
    let letters: Vec<u64> = (0..w.len()).map(|i| a.letter(w.letter(i))).collect::<Result<_, _>>()?;
    let n = w.len();
    let node = |q: usize, p: usize| q * n + p;
    let total = a.num_states() * n;
    let succ = |v: usize| -> Vec<usize> {
        let (q, p) = (v / n, v % n);
        a.successors(q, letters[p]).map(|t| node(t, w.succ(p))).collect()
    };
    let reach_from = |starts: Vec<usize>| -> Vec<bool> {
        let mut seen = vec![false; total];
        let mut stack = starts;
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(succ(v));
            }
        }
        seen
    };
    let reachable = reach_from(vec![node(a.initial, 0)]);
    Ok((0..total).any(|v| reachable[v] && a.accepting[v / n] && reach_from(succ(v))[v]))
}

/// Direct LTL semantics on a lasso, by fixpoints over its positions.
pub fn evaluate_ltl_on_lasso(f: &LtlFormula, w: &LassoWord) -> Result<bool, AutomatonError> {
    if w.cycle.is_empty() {
        return Err(AutomatonError::EmptyLoop);
    }
    Ok(eval_positions(f, w)?[0])
}

fn eval_positions(f: &LtlFormula, w: &LassoWord) -> Result<Vec<bool>, AutomatonError> {
    use LtlFormula as L;
    let n = w.len();
    let fix = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| -> Vec<bool> {
        let mut v = vec![init; n];
        loop {
            let next: Vec<bool> = (0..n).map(|i| step(i, &v)).collect();
            if next == v {
                return v;
            }
            v = next;
        }
    };
    Ok(match f {
        L::True => vec![true; n],
        L::False => vec![false; n],
        L::Atom(a) => (0..n)
            .map(|i| w.letter(i).get(a).copied().ok_or_else(|| AutomatonError::AlphabetMismatch(a.clone())))
            .collect::<Result<_, _>>()?,
        L::Not(a) => eval_positions(a, w)?.into_iter().map(|b| !b).collect(),
        L::And(a, b) | L::Or(a, b) | L::Implies(a, b) => {
            let (x, y) = (eval_positions(a, w)?, eval_positions(b, w)?);
            (0..n)
                .map(|i| match f {
                    L::And(..) => x[i] && y[i],
                    L::Or(..) => x[i] || y[i],
                    _ => !x[i] || y[i],
                })
                .collect()
        }
        L::Next(a) => {
            let x = eval_positions(a, w)?;
            (0..n).map(|i| x[w.succ(i)]).collect()
        }
        L::Always(a) => {
            let x = eval_positions(a, w)?;
            fix(true, &|i, v| x[i] && v[w.succ(i)])
        }
        L::Eventually(a) => {
            let x = eval_positions(a, w)?;
            fix(false, &|i, v| x[i] || v[w.succ(i)])
        }
        L::Until(a, b) => {
            let (x, y) = (eval_positions(a, w)?, eval_positions(b, w)?);
            fix(false, &|i, v| y[i] || (x[i] && v[w.succ(i)]))
        }
    })
}
