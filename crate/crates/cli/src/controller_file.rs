//! Line-oriented controller and counter-strategy files.
//!
//! ```text
//! NUMSYNTH-CONTROLLER 1
//! SPEC-HASH <sha256 of the specification file>
//! ALGORITHM safety
//! BOUND 4
//! REFINE ALWAYS (!(req1 && req2))
//! INPUTS req1 req2
//! OUTPUTS grant1 grant2
//! STATES 3
//! INITIAL 0
//! T 0 1- -> 10 1          state, input cube -> output bits, next state
//! MUX-OUTPUTS ...         optional multiplexer table
//! MUX 01 -> 0100
//! SPEC REAL x IN [0, 4]   the specification, one line per SPEC line
//! END
//! ```
//!
//! Bit strings follow the atom order of `INPUTS`/`OUTPUTS`; `-` leaves an
//! input unconstrained and `~` is the empty string.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use numsynth_core::abstraction::{format_valuation, MultiplexerTable, Valuation};
use numsynth_core::cegar::Algorithm;
use numsynth_core::games::{bit_string, CounterStrategy, MealyController};
use numsynth_core::poly::{format_decimal, format_rational, Rational};
use numsynth_core::speclang::{format_spec, parse_spec, SpecDocument};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONTROLLER_MAGIC: &str = "NUMSYNTH-CONTROLLER 1";
pub const COUNTER_MAGIC: &str = "NUMSYNTH-COUNTER-STRATEGY 1";

pub fn spec_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse_algorithm(s: &str) -> Option<Algorithm> {
    match s {
        "buchi" => Some(Algorithm::Buchi),
        "safety" => Some(Algorithm::Safety),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerFile {
    pub spec_hash: String,
    pub algorithm: Algorithm,
    pub bound: u32,
    pub refinements: Vec<String>,
    pub controller: MealyController,
    pub mux: MultiplexerTable,
    /// The numerical specification the controller was synthesized from.
    pub spec: Option<SpecDocument>,
}

fn bits(b: u64, n: usize) -> String {
    if n == 0 {
        "~".into()
    } else {
        bit_string(b, n)
    }
}

fn cube_string(mask: u64, val: u64, n: usize) -> String {
    if n == 0 {
        return "~".into();
    }
    (0..n)
        .map(|j| match (mask >> j & 1, val >> j & 1) {
            (0, _) => '-',
            (_, 1) => '1',
            _ => '0',
        })
        .collect()
}

/// Prime cubes `(mask, value)` covering exactly `set`, chosen greedily
/// from the largest.
pub fn cover_cubes(set: &BTreeSet<u64>, n: usize) -> Vec<(u64, u64)> {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut level: BTreeSet<(u64, u64)> = set.iter().map(|&v| (full, v)).collect();
    let mut primes: BTreeSet<(u64, u64)> = BTreeSet::new();
    while !level.is_empty() {
        let mut next = BTreeSet::new();
        let mut merged = BTreeSet::new();
        for &(mask, val) in &level {
            for j in (0..n).filter(|j| mask >> j & 1 == 1) {
                let partner = (mask, val ^ (1 << j));
                if level.contains(&partner) {
                    next.insert((mask & !(1 << j), val & !(1 << j)));
                    merged.insert((mask, val));
                }
            }
        }
        primes.extend(level.difference(&merged).copied());
        level = next;
    }
    let mut primes: Vec<(u64, u64)> = primes.into_iter().collect();
    primes.sort_by_key(|&(mask, val)| (mask.count_ones(), mask, val));
    let mut covered = BTreeSet::new();
    let mut out = Vec::new();
    for (mask, val) in primes {
        let members: Vec<u64> = set.iter().copied().filter(|&v| v & mask == val).collect();
        if members.iter().any(|v| !covered.contains(v)) {
            covered.extend(members);
            out.push((mask, val));
        }
    }
    out
}

fn expand_cube(cube: &str, n: usize) -> Option<Vec<u64>> {
    if cube == "~" {
        return (n == 0).then(|| vec![0]);
    }
    if cube.chars().count() != n {
        return None;
    }
    let mut out = vec![0u64];
    for (j, c) in cube.chars().enumerate() {
        out = match c {
            '0' => out,
            '1' => out.into_iter().map(|v| v | 1 << j).collect(),
            '-' => out.iter().flat_map(|&v| [v, v | 1 << j]).collect(),
            _ => return None,
        };
    }
    Some(out)
}

fn parse_bits(s: &str, n: usize) -> Option<u64> {
    let cubes = expand_cube(s, n)?;
    (cubes.len() == 1 && !s.contains('-')).then(|| cubes[0])
}

fn write_spec_section(out: &mut String, spec: &Option<SpecDocument>) {
    if let Some(doc) = spec {
        for line in format_spec(doc).lines() {
            if line.is_empty() {
                out.push_str("SPEC\n");
            } else {
                let _ = writeln!(out, "SPEC {line}");
            }
        }
    }
}

fn write_mux(out: &mut String, mux: &MultiplexerTable) {
    if !mux.is_empty() {
        for line in mux.to_lines() {
            let _ = writeln!(out, "{line}");
        }
    }
}

impl ControllerFile {
    pub fn write(&self) -> String {
        let m = &self.controller;
        let (ni, no) = (m.inputs.len(), m.outputs.len());
        let mut out = String::new();
        let _ = writeln!(out, "{CONTROLLER_MAGIC}");
        let _ = writeln!(out, "SPEC-HASH {}", self.spec_hash);
        let _ = writeln!(out, "ALGORITHM {}", self.algorithm);
        let _ = writeln!(out, "BOUND {}", self.bound);
        for r in &self.refinements {
            let _ = writeln!(out, "REFINE {r}");
        }
        let _ = writeln!(out, "INPUTS {}", m.inputs.join(" "));
        let _ = writeln!(out, "OUTPUTS {}", m.outputs.join(" "));
        let _ = writeln!(out, "STATES {}", m.num_states());
        let _ = writeln!(out, "INITIAL 0");
        for (s, step) in m.step.iter().enumerate() {
            let mut groups: BTreeMap<(usize, u64), BTreeSet<u64>> = BTreeMap::new();
            for (&i, &(o, t)) in step {
                groups.entry((t, o)).or_default().insert(i);
            }
            for ((t, o), inputs) in groups {
                for (mask, val) in cover_cubes(&inputs, ni) {
                    let _ = writeln!(out, "T {s} {} -> {} {t}", cube_string(mask, val, ni), bits(o, no));
                }
            }
        }
        write_mux(&mut out, &self.mux);
        write_spec_section(&mut out, &self.spec);
        out.push_str("END\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, l)) if l == CONTROLLER_MAGIC => {}
            _ => return Err(CliError::format(1, format!("expected `{CONTROLLER_MAGIC}`"))),
        }
        let mut hash = None;
        let mut algorithm = None;
        let mut bound = None;
        let mut refinements = Vec::new();
        let mut inputs: Option<Vec<String>> = None;
        let mut outputs: Option<Vec<String>> = None;
        let mut states = None;
        let mut step: Vec<BTreeMap<u64, (u64, usize)>> = Vec::new();
        let mut mux_lines = Vec::new();
        let mut spec_lines: Vec<String> = Vec::new();
        let mut ended = false;
        for (no, line) in lines {
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            let bad = |msg: &str| CliError::format(no, msg.to_string());
            match key {
                "SPEC-HASH" => hash = Some(rest.to_string()),
                "ALGORITHM" => algorithm = Some(parse_algorithm(rest).ok_or_else(|| bad("unknown algorithm"))?),
                "BOUND" => bound = Some(rest.parse::<u32>().map_err(|_| bad("bad bound"))?),
                "REFINE" => refinements.push(rest.to_string()),
                "INPUTS" => inputs = Some(rest.split_whitespace().map(String::from).collect()),
                "OUTPUTS" => outputs = Some(rest.split_whitespace().map(String::from).collect()),
                "STATES" => {
                    let n = rest.parse::<usize>().map_err(|_| bad("bad state count"))?;
                    states = Some(n);
                    step = vec![BTreeMap::new(); n];
                }
                "INITIAL" if rest == "0" => {}
                "INITIAL" => return Err(bad("the initial state must be 0")),
                "T" => {
                    let (ni, no_) = match (&inputs, &outputs, states) {
                        (Some(i), Some(o), Some(_)) => (i.len(), o.len()),
                        _ => return Err(bad("transition before INPUTS/OUTPUTS/STATES")),
                    };
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    let [s, cube, "->", o, t] = f[..] else { return Err(bad("expected `T s cube -> out next`")) };
                    let s: usize = s.parse().map_err(|_| bad("bad state"))?;
                    let t: usize = t.parse().map_err(|_| bad("bad next state"))?;
                    if s >= step.len() || t >= step.len() {
                        return Err(bad("state out of range"));
                    }
                    let o = parse_bits(o, no_).ok_or_else(|| bad("bad output bits"))?;
                    for i in expand_cube(cube, ni).ok_or_else(|| bad("bad input cube"))? {
                        if step[s].insert(i, (o, t)).is_some_and(|prev| prev != (o, t)) {
                            return Err(bad("conflicting transitions"));
                        }
                    }
                }
                "MUX-OUTPUTS" | "MUX" => mux_lines.push(line.to_string()),
                "SPEC" => spec_lines.push(rest.to_string()),
                "END" => {
                    ended = true;
                    break;
                }
                "" => {}
                _ => return Err(bad("unknown line")),
            }
        }
        if !ended {
            return Err(CliError::format(text.lines().count(), "missing END"));
        }
        let missing = |what: &str| CliError::format(0, format!("missing {what}"));
        let mux = if mux_lines.is_empty() {
            MultiplexerTable::default()
        } else {
            MultiplexerTable::from_lines(mux_lines.iter().map(String::as_str)).map_err(|e| CliError::format(0, e))?
        };
        let spec = if spec_lines.is_empty() { None } else { Some(parse_spec(&spec_lines.join("\n"))?) };
        states.ok_or_else(|| missing("STATES"))?;
        Ok(ControllerFile {
            spec_hash: hash.ok_or_else(|| missing("SPEC-HASH"))?,
            algorithm: algorithm.ok_or_else(|| missing("ALGORITHM"))?,
            bound: bound.ok_or_else(|| missing("BOUND"))?,
            refinements,
            controller: MealyController {
                inputs: inputs.ok_or_else(|| missing("INPUTS"))?,
                outputs: outputs.ok_or_else(|| missing("OUTPUTS"))?,
                step,
            },
            mux,
            spec,
        })
    }
}

/// Counter-strategy file: the controller schema with the roles swapped.
/// `CANDIDATES` lists each state's candidate inputs, `T` lines map
/// (state, input, output) to next states, `WITNESS` lines give a real
/// point realizing each used predicate valuation.
pub struct CounterFile<'a> {
    pub spec_hash: &'a str,
    pub algorithm: Algorithm,
    pub bound: u32,
    pub counter: &'a CounterStrategy,
    pub witnesses: &'a [(Valuation, Vec<Rational>)],
    pub var_names: &'a [String],
    pub spec: &'a Option<SpecDocument>,
}

impl CounterFile<'_> {
    pub fn write(&self) -> String {
        let cs = self.counter;
        let (ni, no) = (cs.inputs.len(), cs.outputs.len());
        let mut out = String::new();
        let _ = writeln!(out, "{COUNTER_MAGIC}");
        let _ = writeln!(out, "SPEC-HASH {}", self.spec_hash);
        let _ = writeln!(out, "ALGORITHM {}", self.algorithm);
        let _ = writeln!(out, "BOUND {}", self.bound);
        let _ = writeln!(out, "INPUTS {}", cs.inputs.join(" "));
        let _ = writeln!(out, "OUTPUTS {}", cs.outputs.join(" "));
        let _ = writeln!(out, "STATES {}", cs.num_states());
        let _ = writeln!(out, "INITIAL 0");
        let violated: Vec<String> =
            (0..cs.num_states()).filter(|&s| cs.violated[s]).map(|s| s.to_string()).collect();
        if !violated.is_empty() {
            let _ = writeln!(out, "VIOLATED {}", violated.join(" "));
        }
        for (s, cands) in cs.candidates.iter().enumerate() {
            if !cands.is_empty() {
                let c: Vec<String> = cands.iter().map(|&i| bits(i, ni)).collect();
                let _ = writeln!(out, "CANDIDATES {s} {}", c.join(" "));
            }
        }
        for (&(s, i, o), ts) in &cs.transitions {
            let t: Vec<String> = ts.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "T {s} {} {} -> {}", bits(i, ni), bits(o, no), t.join(" "));
        }
        for (v, w) in self.witnesses {
            let point: Vec<String> =
                self.var_names.iter().zip(w).map(|(n, x)| format!("{n}={}", format_rational(x))).collect();
            let _ = writeln!(out, "WITNESS {} {}", format_valuation(v), point.join(" "));
        }
        write_spec_section(&mut out, self.spec);
        out.push_str("END\n");
        out
    }
}

/// `3/512 (0.005859375)`.
pub fn show_rational(r: &Rational) -> String {
    let exact = format_rational(r);
    let dec = format_decimal(r, 12);
    if exact == dec {
        exact
    } else {
        format!("{exact} ({dec})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubes_cover_exactly() {
        for n in 0..5usize {
            for seed in 0u64..40 {
                let set: BTreeSet<u64> =
                    (0..1u64 << n).filter(|v| (v.wrapping_mul(2654435761) ^ seed) % 3 != 0).collect();
                let cubes = cover_cubes(&set, n);
                let mut back = BTreeSet::new();
                for (m, v) in cubes {
                    back.extend(expand_cube(&cube_string(m, v, n), n).unwrap());
                }
                assert_eq!(back, set);
            }
        }
    }

    #[test]
    fn full_set_is_one_cube() {
        let set: BTreeSet<u64> = (0..8).collect();
        assert_eq!(cover_cubes(&set, 3), vec![(0, 0)]);
        assert_eq!(cube_string(0, 0, 3), "---");
    }
}
