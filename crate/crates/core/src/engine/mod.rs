//! Explicit-state model checking of verification problems.
//!
//! [`check`] explores cycle-start states breadth first. Successors of a
//! state are enumerated by re-running the cycle with an odometer over every
//! nondeterministic choice (inputs in declaration order, values ascending),
//! so the first violation found is both minimal in cycles and minimal in
//! input order.

mod oracle;
#[cfg(test)]
mod tests;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::hash::BuildHasher;

use hashbrown::{DefaultHashBuilder, HashTable};

use crate::cex::{input_cells, replay, Step, Trace};
use crate::cfa::{inline_callees, CfaNetwork, Chooser, CycleOutcome, Machine, NoObserver};
use crate::requirements::{ProblemConfig, VerificationProblem};
use crate::types::{Domain, Value};

pub use oracle::{brute_force_oracle, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Maximum number of cycles (K).
    pub bound: u32,
    pub max_states: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { bound: 10, max_states: 10_000_000 }
    }
}

impl From<&ProblemConfig> for EngineConfig {
    fn from(c: &ProblemConfig) -> Self {
        EngineConfig { bound: c.bound, max_states: c.max_states }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stats {
    /// Distinct cycle-start states stored.
    pub states_explored: u64,
    /// Cycle executions (state × choice vector).
    pub cycles_executed: u64,
    pub peak_frontier: u64,
    /// Breadth-first levels fully explored.
    pub cycles_completed: u32,
    /// Successors of every cycle-start state.
    pub branching_factor: u64,
    /// Cycle executions that did not terminate.
    pub diverged: u64,
    pub cap_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Every reachable state was explored without a violation.
    Satisfied,
    Violated(Trace),
    /// No violation within the bound (or before the state cap); not
    /// exhaustive.
    BoundReached {
        cap_hit: bool,
    },
    /// A runtime fault is reachable.
    Fault(Trace),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub stats: Stats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VerdictKind {
    Satisfied,
    Violated,
    BoundReached,
    Fault,
    Unknown,
}

impl VerdictKind {
    pub fn name(self) -> &'static str {
        match self {
            VerdictKind::Satisfied => "satisfied",
            VerdictKind::Violated => "violated",
            VerdictKind::BoundReached => "bound_reached",
            VerdictKind::Fault => "fault",
            VerdictKind::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<VerdictKind> {
        [
            VerdictKind::Satisfied,
            VerdictKind::Violated,
            VerdictKind::BoundReached,
            VerdictKind::Fault,
            VerdictKind::Unknown,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Satisfied and BoundReached both mean "no violation found"; bounded
    /// and exhaustive answers are compared through this.
    pub fn collapsed(self) -> VerdictKind {
        match self {
            VerdictKind::BoundReached => VerdictKind::Satisfied,
            k => k,
        }
    }

    pub fn agrees(self, other: VerdictKind) -> bool {
        self.collapsed() == other.collapsed()
    }
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self.outcome {
            Outcome::Satisfied => VerdictKind::Satisfied,
            Outcome::Violated(_) => VerdictKind::Violated,
            Outcome::BoundReached { .. } => VerdictKind::BoundReached,
            Outcome::Fault(_) => VerdictKind::Fault,
            Outcome::Unknown(_) => VerdictKind::Unknown,
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match &self.outcome {
            Outcome::Violated(t) | Outcome::Fault(t) => Some(t),
            _ => None,
        }
    }

    /// Cycle of the violation, if any.
    pub fn violation_cycle(&self) -> Option<usize> {
        self.trace().and_then(|t| t.violation).map(|v| v.cycle)
    }

    pub fn unknown(msg: impl Into<String>) -> Verdict {
        Verdict { outcome: Outcome::Unknown(msg.into()), stats: Stats::default() }
    }
}

/// Enumerates choice vectors in lexicographic order: the recorded prefix is
/// replayed, then the smallest option is taken at every new choice point.
#[derive(Default)]
struct Odometer {
    prefix: Vec<i64>,
    made: Vec<(i64, Option<i64>)>,
}

impl Chooser for Odometer {
    fn choose(&mut self, options: &Domain) -> Option<i64> {
        let pos = self.made.len();
        let v = match self.prefix.get(pos) {
            Some(v) => *v,
            None => options.min()?,
        };
        self.made.push((v, options.next_after(v)));
        Some(v)
    }
}

impl Odometer {
    fn choices(&self) -> Vec<i64> {
        self.made.iter().map(|(v, _)| *v).collect()
    }

    /// Move to the next choice vector; false when all were enumerated.
    fn advance(&mut self) -> bool {
        let Some(j) = self.made.iter().rposition(|(_, n)| n.is_some()) else {
            self.made.clear();
            self.prefix.clear();
            return false;
        };
        self.prefix.clear();
        self.prefix.extend(self.made[..j].iter().map(|(v, _)| *v));
        self.prefix.push(self.made[j].1.unwrap());
        self.made.clear();
        true
    }
}

/// Split per-cycle choice vectors into replayable steps.
pub(crate) fn steps_from_choices(net: &CfaNetwork, path: &[Vec<i64>]) -> Vec<Step> {
    let cells = input_cells(net);
    path.iter()
        .map(|choices| {
            let n = cells.len().min(choices.len());
            Step {
                inputs: cells
                    .iter()
                    .zip(&choices[..n])
                    .map(|(c, v)| (c.name.clone(), Value::from_raw(c.ty, *v)))
                    .collect(),
                choices: choices[n..].to_vec(),
            }
        })
        .collect()
}

struct Store {
    stride: usize,
    data: Vec<i64>,
    parent: Vec<u32>,
    choices: Vec<Box<[i64]>>,
    table: HashTable<u32>,
    hasher: DefaultHashBuilder,
}

impl Store {
    fn state(&self, i: u32) -> &[i64] {
        let o = i as usize * self.stride;
        &self.data[o..o + self.stride]
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    /// Insert unless present; returns the new index.
    fn insert(&mut self, vals: &[i64], parent: u32, choices: Vec<i64>) -> Option<u32> {
        let h = self.hasher.hash_one(vals);
        let stride = self.stride;
        let data = &self.data;
        let eq = |i: &u32| &data[*i as usize * stride..(*i as usize + 1) * stride] == vals;
        if self.table.find(h, eq).is_some() {
            return None;
        }
        let idx = self.parent.len() as u32;
        self.data.extend_from_slice(vals);
        self.parent.push(parent);
        self.choices.push(choices.into_boxed_slice());
        let (hasher, stride, data) = (&self.hasher, self.stride, &self.data);
        self.table.insert_unique(h, idx, |i| hasher.hash_one(&data[*i as usize * stride..(*i as usize + 1) * stride]));
        Some(idx)
    }

    /// Choice vectors from the initial state to `i`.
    fn path(&self, mut i: u32) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        while i != 0 {
            out.push(self.choices[i as usize].to_vec());
            i = self.parent[i as usize];
        }
        out.reverse();
        out
    }
}

/// Decide `p` by breadth-first exploration of cycle-start states, up to
/// `cfg.bound` cycles. Networks with call sites are inlined first.
pub fn check(p: &VerificationProblem, cfg: &EngineConfig) -> Verdict {
    let inlined;
    let net = if p.net.callees.is_empty() {
        &p.net
    } else {
        inlined = inline_callees(&p.net);
        &inlined
    };
    let checks = p.property.check_points(net);
    let m = Machine::new(net, &checks);
    let havoc = m.havoc_slots();
    let canon = |vals: &mut [i64]| {
        for &s in &havoc {
            vals[s] = 0;
        }
    };

    let mut stats = Stats { branching_factor: net.branching_factor(), ..Stats::default() };
    let mut store = Store {
        stride: m.size(),
        data: Vec::new(),
        parent: Vec::new(),
        choices: Vec::new(),
        table: HashTable::new(),
        hasher: DefaultHashBuilder::default(),
    };
    let mut init = m.initial_values();
    canon(&mut init);
    store.insert(&init, 0, Vec::new());
    let mut frontier: Vec<u32> = alloc::vec![0];
    let mut vals = alloc::vec![0i64; m.size()];
    let mut odo = Odometer::default();

    let violation = |store: &Store, from: u32, choices: Vec<i64>| {
        let mut path = store.path(from);
        path.push(choices);
        let steps = steps_from_choices(net, &path);
        replay(net, &p.property, &steps).expect("engine paths replay")
    };

    for _cycle in 1..=cfg.bound.max(1) {
        stats.peak_frontier = stats.peak_frontier.max(frontier.len() as u64);
        let mut next = Vec::new();
        for &s in &frontier {
            loop {
                vals.copy_from_slice(store.state(s));
                let outcome = m.run_cycle(&mut vals, &mut odo, &mut NoObserver);
                stats.cycles_executed += 1;
                match outcome {
                    CycleOutcome::Completed => {
                        canon(&mut vals);
                        if store.len() as u64 >= cfg.max_states {
                            if store
                                .table
                                .find(store.hasher.hash_one(&vals[..]), |i| store.state(*i) == &vals[..])
                                .is_none()
                            {
                                stats.cap_hit = true;
                                stats.states_explored = store.len() as u64;
                                return Verdict { outcome: Outcome::BoundReached { cap_hit: true }, stats };
                            }
                        } else if let Some(i) = store.insert(&vals, s, odo.choices()) {
                            next.push(i);
                        }
                    }
                    CycleOutcome::Violated { .. } => {
                        stats.states_explored = store.len() as u64;
                        let t = violation(&store, s, odo.choices());
                        return Verdict { outcome: Outcome::Violated(t), stats };
                    }
                    CycleOutcome::Fault { .. } => {
                        stats.states_explored = store.len() as u64;
                        let t = violation(&store, s, odo.choices());
                        return Verdict { outcome: Outcome::Fault(t), stats };
                    }
                    CycleOutcome::Diverged | CycleOutcome::Aborted => stats.diverged += 1,
                }
                if !odo.advance() {
                    break;
                }
            }
        }
        stats.cycles_completed += 1;
        stats.states_explored = store.len() as u64;
        if next.is_empty() {
            return Verdict { outcome: Outcome::Satisfied, stats };
        }
        frontier = next;
    }
    Verdict { outcome: Outcome::BoundReached { cap_hit: false }, stats }
}
