//! Seeded random simulation of a controller against sampled sensor values,
//! with a finite-trace monitor over the specification's guarantees.

use std::fmt::Write as _;

use numsynth_core::abstraction::{format_valuation, PredicateTable, Valuation};
use numsynth_core::games::{bits_to_valuation, valuation_to_bits};
use numsynth_core::monitor::{monitor, FormulaReport, Verdict3};
use numsynth_core::poly::{format_rational, Rational};
use numsynth_core::speclang::Side;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller_file::ControllerFile;
use crate::error::CliError;

/// Fractional bits of sampled values: samples lie on a grid of
/// `2^SAMPLE_BITS + 1` points per dimension.
pub const SAMPLE_BITS: u32 = 20;

const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationConfig {
    pub steps: usize,
    pub seed: u64,
    /// Inputs forced on injected steps, overriding sampled values.
    pub inject: Option<Valuation>,
    /// Inject on every step whose index is a multiple of this.
    pub inject_every: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { steps: 1000, seed: 0, inject: None, inject_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimStep {
    pub state: usize,
    /// Sampled input-side real values; `None` on injected steps.
    pub sample: Option<Vec<Rational>>,
    pub inputs: Valuation,
    /// Outputs over the original (decoded) output atoms.
    pub outputs: Valuation,
    /// The controller had no move for the input; it answered as for its
    /// first permitted input.
    pub completed: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationTrace {
    pub seed: u64,
    pub var_names: Vec<String>,
    pub steps: Vec<SimStep>,
    pub reports: Vec<FormulaReport>,
}

impl SimulationTrace {
    pub fn violations(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    pub fn pending(&self) -> usize {
        self.reports.iter().map(|r| r.pending.len()).sum()
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "SUMMARY steps={} violations={} pending={}\n",
            self.steps.len(),
            self.violations(),
            self.pending()
        );
        for (k, r) in self.reports.iter().enumerate() {
            let _ = writeln!(
                out,
                "G{} violations={} pending={} {}",
                k + 1,
                r.violations.len(),
                r.pending.len(),
                r.formula
            );
        }
        out
    }

    pub fn render(&self) -> String {
        let mut out = format!("SIMULATION steps={} seed={}\n", self.steps.len(), self.seed);
        for (t, s) in self.steps.iter().enumerate() {
            let sample = match &s.sample {
                Some(_) if self.var_names.is_empty() => "none".into(),
                Some(p) => {
                    let parts: Vec<String> =
                        self.var_names.iter().zip(p).map(|(n, x)| format!("{n}={}", format_rational(x))).collect();
                    format!("({})", parts.join(", "))
                }
                None => "injected".into(),
            };
            let note = if s.completed { " completed" } else { "" };
            let _ = writeln!(
                out,
                "STEP {t} state={} sample={sample} in={} out={} {}{note}",
                s.state,
                format_valuation(&s.inputs),
                format_valuation(&s.outputs),
                s.status
            );
        }
        out.push_str(&self.summary());
        out
    }
}

/// Uniform grid sample of the box.
fn sample_point(rng: &mut ChaCha8Rng, lo: &[Rational], hi: &[Rational]) -> Vec<Rational> {
    let denom = Rational::from_integer((1u64 << SAMPLE_BITS).into());
    lo.iter()
        .zip(hi)
        .map(|(l, h)| {
            let k: u64 = rng.gen_range(0..=1u64 << SAMPLE_BITS);
            l + (h - l) * Rational::from_integer(k.into()) / &denom
        })
        .collect()
}

pub fn simulate(file: &ControllerFile, cfg: &SimulationConfig) -> Result<SimulationTrace, CliError> {
    let doc = file
        .spec
        .as_ref()
        .ok_or_else(|| CliError::Usage("controller file carries no specification or predicate table".into()))?;
    let m = &file.controller;
    let table = PredicateTable::from_document(doc);
    let in_preds = table.atoms(Side::Input);
    let vars = table.side_vars(Side::Input);
    let lo: Vec<Rational> = vars.iter().map(|&i| table.vars[i].lower.clone()).collect();
    let hi: Vec<Rational> = vars.iter().map(|&i| table.vars[i].upper.clone()).collect();
    if let Some(v) = &cfg.inject {
        if let Some(a) = v.keys().find(|a| !m.inputs.contains(a)) {
            return Err(CliError::Usage(format!("cannot inject `{a}`: not a controller input")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = 0usize;
    let mut steps = Vec::with_capacity(cfg.steps);
    for t in 0..cfg.steps {
        let injected = cfg.inject.as_ref().filter(|_| cfg.inject_every > 0 && t % cfg.inject_every == 0);
        let (sample, input) = match injected {
            Some(forced) => {
                let mut v = bits_to_valuation(&m.inputs, rng.gen_range(0..1u64 << m.inputs.len()));
                v.extend(forced.iter().map(|(a, b)| (a.clone(), *b)));
                (None, valuation_to_bits(&m.inputs, &v))
            }
            None => {
                let mut found = None;
                for _ in 0..MAX_RESAMPLES {
                    let p = sample_point(&mut rng, &lo, &hi);
                    let mut v = table.evaluate_side(Side::Input, &p);
                    for a in m.inputs.iter().filter(|a| !in_preds.contains(a)) {
                        v.insert(a.clone(), rng.gen_bool(0.5));
                    }
                    let bits = valuation_to_bits(&m.inputs, &v);
                    if m.react(state, bits).is_some() {
                        found = Some((Some(p), bits));
                        break;
                    }
                }
                found.ok_or_else(|| {
                    CliError::Usage(format!("no permitted input found for state {state} after {MAX_RESAMPLES} samples"))
                })?
            }
        };
        let (completed, (out, next)) = match m.react(state, input) {
            Some(r) => (false, r),
            None => {
                let first = *m.step[state]
                    .keys()
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("state {state} has no transitions")))?;
                (true, m.react(state, first).expect("permitted input"))
            }
        };
        let outputs = if file.mux.is_empty() {
            bits_to_valuation(&m.outputs, out)
        } else {
            let code: Vec<bool> = file
                .mux
                .encoded
                .iter()
                .map(|s| m.outputs.iter().position(|o| o == s).is_some_and(|j| out >> j & 1 == 1))
                .collect();
            let decoded = file
                .mux
                .decode(&code)
                .ok_or_else(|| CliError::Usage(format!("controller emitted an unused code-word at step {t}")))?;
            file.mux.original.iter().cloned().zip(decoded.iter().copied()).collect()
        };
        steps.push(SimStep {
            state,
            sample,
            inputs: bits_to_valuation(&m.inputs, input),
            outputs,
            completed,
            status: String::new(),
        });
        state = next;
    }

    let trace: Vec<Valuation> =
        steps.iter().map(|s| s.inputs.iter().chain(&s.outputs).map(|(a, b)| (a.clone(), *b)).collect()).collect();
    let reports = monitor(&doc.guarantees, &trace);
    for (t, s) in steps.iter_mut().enumerate() {
        let find = |want: Verdict3| {
            reports.iter().position(|r| match want {
                Verdict3::False => r.violations.contains(&t),
                _ => r.pending.contains(&t),
            })
        };
        s.status = match (find(Verdict3::False), find(Verdict3::Pending)) {
            (Some(k), _) => format!("violation(G{})", k + 1),
            (None, Some(k)) => format!("pending(G{})", k + 1),
            _ => "ok".into(),
        };
    }
    Ok(SimulationTrace { seed: cfg.seed, var_names: table.side_var_names(Side::Input), steps, reports })
}
