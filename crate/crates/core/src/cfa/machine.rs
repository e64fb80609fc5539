//! Concrete execution of one scan cycle of an inlined network.
//!
//! A valuation is a flat slice of raw cell values; [`Machine`] owns the
//! layout. Nondeterminism (input havoc, abstracted outputs, overlapping
//! guards) is resolved by a [`Chooser`], so the same executor serves the
//! model checker, replay and slicing.

use alloc::boxed::Box;
use alloc::vec::Vec;

use hashbrown::HashSet;

use super::eval::{eval_expr, Env, Fault, FaultKind};
use super::{CfaNetwork, Expr, ExprKind, LocId, Transition, VarId};
use crate::types::Domain;

pub trait Chooser {
    /// Pick one of `options` (ascending). `None` abandons the execution.
    fn choose(&mut self, options: &Domain) -> Option<i64>;
}

/// Picks the smallest option every time.
impl Chooser for () {
    fn choose(&mut self, options: &Domain) -> Option<i64> {
        options.min()
    }
}

pub trait Observer {
    /// Called before transition `index` of the main automaton executes.
    fn transition(&mut self, index: usize, t: &Transition, before: &[i64]);

    /// Called on arrival at a location, before its check.
    fn location(&mut self, _loc: LocId, _vals: &[i64]) {}
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn transition(&mut self, _: usize, _: &Transition, _: &[i64]) {}
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycleOutcome {
    /// End-of-cycle reached and its check (if any) passed.
    Completed,
    Violated {
        loc: LocId,
    },
    Fault {
        loc: LocId,
        fault: Fault,
    },
    /// The cycle does not terminate (or exceeds the step budget).
    Diverged,
    /// The chooser gave up.
    Aborted,
}

const ABSENT: u32 = u32::MAX;

pub struct Machine<'n> {
    pub net: &'n CfaNetwork,
    offsets: Vec<u32>,
    bounds: Vec<(i64, i64)>,
    size: usize,
    dense: Vec<u32>,
    out: Vec<Vec<u32>>,
    checks: Vec<Option<&'n Expr>>,
    ids: Vec<LocId>,
    cycle_start: usize,
    end: usize,
    /// Steps after which repeated states are tracked to detect loops.
    pub track_after: u64,
    /// Steps after which a cycle is declared non-terminating.
    pub max_steps: u64,
}

struct SlotEnv<'a> {
    offsets: &'a [u32],
    bounds: &'a [(i64, i64)],
    vals: &'a [i64],
}

impl Env for SlotEnv<'_> {
    #[inline]
    fn scalar(&self, var: VarId) -> i64 {
        self.vals[self.offsets[var.0 as usize] as usize]
    }

    #[inline]
    fn element(&self, var: VarId, index: i64) -> Option<i64> {
        let (lo, hi) = self.bounds[var.0 as usize];
        if index < lo || index > hi {
            return None;
        }
        Some(self.vals[self.offsets[var.0 as usize] as usize + (index - lo) as usize])
    }
}

impl<'n> Machine<'n> {
    /// Prepare `net` (which must be inlined) for execution; `checks` lists
    /// the locations where a property must hold.
    pub fn new(net: &'n CfaNetwork, checks: &[(LocId, &'n Expr)]) -> Machine<'n> {
        assert!(!net.has_call_sites(), "execution requires an inlined network");
        let mut offsets = alloc::vec![ABSENT; net.next_var as usize];
        let mut bounds = alloc::vec![(0, 0); net.next_var as usize];
        let mut size = 0usize;
        for v in net.main_vars() {
            offsets[v.id.0 as usize] = size as u32;
            bounds[v.id.0 as usize] = v.ty.bounds().unwrap_or((0, 0));
            size += v.ty.cells();
        }
        let mut dense = alloc::vec![ABSENT; net.next_loc as usize];
        let mut ids = Vec::new();
        for (i, l) in net.main.locations.keys().enumerate() {
            dense[l.0 as usize] = i as u32;
            ids.push(*l);
        }
        let mut out = alloc::vec![Vec::new(); ids.len()];
        for (i, t) in net.main.transitions.iter().enumerate() {
            out[dense[t.source.0 as usize] as usize].push(i as u32);
        }
        let mut check_vec = alloc::vec![None; ids.len()];
        for (l, e) in checks {
            check_vec[dense[l.0 as usize] as usize] = Some(*e);
        }
        let cycle_start = dense[net.main.cycle_start.expect("main automaton").0 as usize] as usize;
        let end = dense[net.main.end.0 as usize] as usize;
        Machine {
            net,
            offsets,
            bounds,
            size,
            dense,
            out,
            checks: check_vec,
            ids,
            cycle_start,
            end,
            track_after: 100_000,
            max_steps: 20_000_000,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn initial_values(&self) -> Vec<i64> {
        let mut vals = alloc::vec![0; self.size];
        for v in self.net.main_vars() {
            let o = self.offsets[v.id.0 as usize] as usize;
            vals[o..o + v.init.len()].copy_from_slice(&v.init);
        }
        vals
    }

    /// Slot of a cell, if the variable is part of the layout.
    pub fn slot(&self, var: VarId, cell: usize) -> Option<usize> {
        let o = *self.offsets.get(var.0 as usize)?;
        (o != ABSENT).then_some(o as usize + cell)
    }

    pub fn eval(&self, e: &Expr, vals: &[i64]) -> Result<i64, Fault> {
        eval_expr(e, &self.env(vals))
    }

    fn env<'a>(&'a self, vals: &'a [i64]) -> SlotEnv<'a> {
        SlotEnv { offsets: &self.offsets, bounds: &self.bounds, vals }
    }

    /// Slot written by a target, evaluated against `vals`.
    pub fn target_slot(&self, t: &super::Target, vals: &[i64], span: crate::types::Span) -> Result<usize, Fault> {
        let base = self.offsets[t.var.0 as usize] as usize;
        match &t.index {
            None => Ok(base),
            Some(i) => {
                let idx = self.eval(i, vals)?;
                let (lo, hi) = self.bounds[t.var.0 as usize];
                if idx < lo || idx > hi {
                    return Err(Fault { kind: FaultKind::IndexOutOfRange { index: idx }, span });
                }
                Ok(base + (idx - lo) as usize)
            }
        }
    }

    /// Slots unconditionally overwritten by the cycle-start havoc.
    pub fn havoc_slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(h) = self.net.main.havoc() {
            for a in &h.assignments {
                let idx = match &a.target.index {
                    None => Some(0),
                    Some(i) => i.as_const().and_then(|c| {
                        let (lo, hi) = self.bounds[a.target.var.0 as usize];
                        (c >= lo && c <= hi).then(|| c - lo)
                    }),
                };
                if let Some(idx) = idx {
                    out.push(self.offsets[a.target.var.0 as usize] as usize + idx as usize);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Execute one cycle from cycle-start. `vals` holds the cycle-start
    /// valuation and is updated in place.
    pub fn run_cycle(&self, vals: &mut [i64], ch: &mut dyn Chooser, obs: &mut dyn Observer) -> CycleOutcome {
        let mut loc = self.cycle_start;
        let mut steps: u64 = 0;
        let mut seen: Option<HashSet<(usize, Box<[i64]>)>> = None;
        let mut enabled: Vec<u32> = Vec::new();
        loop {
            obs.location(self.ids[loc], vals);
            if let Some(e) = self.checks[loc] {
                match self.eval(e, vals) {
                    Ok(0) => return CycleOutcome::Violated { loc: self.ids[loc] },
                    Ok(_) => {}
                    Err(fault) => return CycleOutcome::Fault { loc: self.ids[loc], fault },
                }
            }
            if loc == self.end {
                return CycleOutcome::Completed;
            }
            steps += 1;
            if steps > self.max_steps {
                return CycleOutcome::Diverged;
            }
            if steps > self.track_after {
                let set = seen.get_or_insert_with(HashSet::new);
                if !set.insert((loc, Box::from(&vals[..]))) {
                    return CycleOutcome::Diverged;
                }
            }

            enabled.clear();
            for &ti in &self.out[loc] {
                let t = &self.net.main.transitions[ti as usize];
                match self.eval(&t.guard, vals) {
                    Ok(0) => {}
                    Ok(_) => enabled.push(ti),
                    Err(fault) => return CycleOutcome::Fault { loc: self.ids[loc], fault },
                }
            }
            let ti = match enabled.len() {
                0 => return CycleOutcome::Diverged,
                1 => enabled[0],
                _ => {
                    let opts = Domain::values(enabled.iter().map(|&i| i as i64).collect());
                    match ch.choose(&opts) {
                        Some(i) => i as u32,
                        None => return CycleOutcome::Aborted,
                    }
                }
            };
            let t = &self.net.main.transitions[ti as usize];
            obs.transition(ti as usize, t, vals);
            for a in &t.assignments {
                let v = match &a.value.kind {
                    ExprKind::Nondet(d) => match ch.choose(d) {
                        Some(v) => v,
                        None => return CycleOutcome::Aborted,
                    },
                    _ => match self.eval(&a.value, vals) {
                        Ok(v) => v,
                        Err(fault) => return CycleOutcome::Fault { loc: self.ids[loc], fault },
                    },
                };
                match self.target_slot(&a.target, vals, a.value.span.join(t.span)) {
                    Ok(s) => vals[s] = v,
                    Err(fault) => return CycleOutcome::Fault { loc: self.ids[loc], fault },
                }
            }
            loc = self.dense[t.target.0 as usize] as usize;
        }
    }
}
