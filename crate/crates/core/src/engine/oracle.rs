//! Naive reference checker: enumerates every input sequence by direct
//! recursive interpretation of the automaton, without state storage.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{steps_from_choices, Outcome, Stats, Verdict};
use crate::cex::replay;
use crate::cfa::{eval_expr, inline_callees, CfaNetwork, Env, Expr, ExprKind, LocId, Transition, VarId};
use crate::requirements::VerificationProblem;

const MAX_COMBINATIONS: u64 = 1 << 20;
const MAX_CYCLES: u32 = 3;
const MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{0} input combinations per cycle exceed the oracle limit")]
    TooManyInputs(u64),
    #[error("{0} cycles exceed the oracle limit")]
    TooManyCycles(u32),
}

struct Vals<'a> {
    layout: &'a BTreeMap<VarId, (usize, i64, i64)>,
    cells: Vec<i64>,
}

impl Env for Vals<'_> {
    fn scalar(&self, var: VarId) -> i64 {
        self.cells[self.layout[&var].0]
    }

    fn element(&self, var: VarId, index: i64) -> Option<i64> {
        let (o, lo, hi) = self.layout[&var];
        (index >= lo && index <= hi).then(|| self.cells[o + (index - lo) as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Found {
    Property,
    Fault,
}

struct Search<'a> {
    net: &'a CfaNetwork,
    layout: &'a BTreeMap<VarId, (usize, i64, i64)>,
    checks: &'a BTreeMap<LocId, Vec<&'a Expr>>,
    limit: usize,
    /// Choices of the current path, per cycle.
    path: Vec<Vec<i64>>,
    /// Choices leading to the violation found.
    witness: Vec<Vec<i64>>,
    steps: u64,
    /// Input sequences of full length enumerated.
    sequences: u64,
}

impl<'a> Search<'a> {
    fn hit(&mut self, f: Found) -> Option<Found> {
        self.witness = self.path.clone();
        Some(f)
    }

    fn outgoing(&self, loc: LocId) -> Vec<(usize, &'a Transition)> {
        self.net.main.transitions.iter().enumerate().filter(|(_, t)| t.source == loc).collect()
    }

    /// Explore from arrival at `loc`; `Some` on the first violation or
    /// fault in lexicographic order.
    fn visit(&mut self, loc: LocId, vals: &Vals<'a>) -> Option<Found> {
        if let Some(es) = self.checks.get(&loc) {
            for e in es {
                match eval_expr(e, vals) {
                    Ok(0) => return self.hit(Found::Property),
                    Err(_) => return self.hit(Found::Fault),
                    Ok(_) => {}
                }
            }
        }
        if loc == self.net.main.end {
            if self.path.len() >= self.limit {
                self.sequences += 1;
                return None;
            }
            self.path.push(Vec::new());
            self.steps = 0;
            let cs = self.net.main.cycle_start.expect("main automaton");
            let r = self.visit(cs, vals);
            self.path.pop();
            return r;
        }
        self.steps += 1;
        if self.steps > MAX_STEPS {
            // non-terminating cycle: this path contributes nothing
            return None;
        }
        let mut enabled = Vec::new();
        for (i, t) in self.outgoing(loc) {
            match eval_expr(&t.guard, vals) {
                Ok(0) => {}
                Ok(_) => enabled.push((i, t)),
                Err(_) => return self.hit(Found::Fault),
            }
        }
        let steps = self.steps;
        let branching = enabled.len() > 1;
        for (i, t) in enabled {
            self.steps = steps;
            if branching {
                self.path.last_mut().unwrap().push(i as i64);
            }
            let r = self.assign(t, 0, vals);
            if branching {
                self.path.last_mut().unwrap().pop();
            }
            if r.is_some() {
                return r;
            }
        }
        None
    }

    fn assign(&mut self, t: &'a Transition, k: usize, vals: &Vals<'a>) -> Option<Found> {
        let Some(a) = t.assignments.get(k) else {
            return self.visit(t.target, vals);
        };
        let (o, lo, hi) = self.layout[&a.target.var];
        let slot = match &a.target.index {
            None => o,
            Some(i) => match eval_expr(i, vals) {
                Ok(i) if i >= lo && i <= hi => o + (i - lo) as usize,
                _ => return self.hit(Found::Fault),
            },
        };
        match &a.value.kind {
            ExprKind::Nondet(d) => {
                for v in d.iter() {
                    let mut next = Vals { layout: vals.layout, cells: vals.cells.clone() };
                    next.cells[slot] = v;
                    self.path.last_mut().unwrap().push(v);
                    let r = self.assign(t, k + 1, &next);
                    self.path.last_mut().unwrap().pop();
                    if r.is_some() {
                        return r;
                    }
                }
                None
            }
            _ => {
                let v = match eval_expr(&a.value, vals) {
                    Ok(v) => v,
                    Err(_) => return self.hit(Found::Fault),
                };
                let mut next = Vals { layout: vals.layout, cells: vals.cells.clone() };
                next.cells[slot] = v;
                self.assign(t, k + 1, &next)
            }
        }
    }
}

/// Enumerate every input sequence of up to `cycles` cycles, shortest
/// first. Violations and faults are reported with the lexicographically
/// first sequence; otherwise the verdict is `BoundReached`.
/// `stats.states_explored` counts the complete sequences of the longest
/// length enumerated.
pub fn brute_force_oracle(p: &VerificationProblem, cycles: u32) -> Result<Verdict, OracleError> {
    if cycles > MAX_CYCLES {
        return Err(OracleError::TooManyCycles(cycles));
    }
    let net = inline_callees(&p.net);
    let combos = net.branching_factor();
    if combos > MAX_COMBINATIONS {
        return Err(OracleError::TooManyInputs(combos));
    }
    let mut layout = BTreeMap::new();
    let mut init = Vec::new();
    for v in net.main_vars() {
        let (lo, hi) = v.ty.bounds().unwrap_or((0, 0));
        layout.insert(v.id, (init.len(), lo, hi));
        init.extend_from_slice(&v.init);
    }
    let mut checks: BTreeMap<LocId, Vec<&Expr>> = BTreeMap::new();
    for (l, e) in p.property.check_points(&net) {
        checks.entry(l).or_default().push(e);
    }
    let mut stats = Stats { branching_factor: combos, ..Stats::default() };
    for limit in 1..=cycles.max(1) as usize {
        let mut s = Search {
            net: &net,
            layout: &layout,
            checks: &checks,
            limit,
            path: Vec::new(),
            witness: Vec::new(),
            steps: 0,
            sequences: 0,
        };
        let start = Vals { layout: &layout, cells: init.clone() };
        s.path.push(Vec::new());
        let cs = net.main.cycle_start.expect("main automaton");
        let found = s.visit(cs, &start);
        // complete input sequences of this length
        stats.states_explored = s.sequences;
        if let Some(found) = found {
            let steps = steps_from_choices(&net, &s.witness);
            let t = replay(&net, &p.property, &steps).expect("oracle paths replay");
            let outcome = match found {
                Found::Property => Outcome::Violated(t),
                Found::Fault => Outcome::Fault(t),
            };
            return Ok(Verdict { outcome, stats });
        }
        stats.cycles_completed = limit as u32;
    }
    Ok(Verdict { outcome: Outcome::BoundReached { cap_hit: false }, stats })
}
