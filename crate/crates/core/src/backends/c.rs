//! Structured C emitter for CBMC. The body of the scan cycle is rebuilt as
//! if/else chains and `while` loops from the location graph; there is no
//! `goto` in the output, so source loops stay loops and bounded unwinding
//! (`--partial-loops`) applies to them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::C_KEYWORDS as KW;
use super::{choice_sites, inlined, property_label, ChoiceSite, EmittedModel, ModelFormat, NameMap};
use crate::cfa::graph::Graph;
use crate::cfa::{CfaNetwork, Expr, ExprKind, LocId, Target, Transition};
use crate::ops::{BinOp, UnOp};
use crate::requirements::VerificationProblem;
use crate::types::{Domain, ScalarType};

fn ctype(ty: ScalarType) -> &'static str {
    match ty {
        ScalarType::Bool => "_Bool",
        ScalarType::Int => "int16_t",
        ScalarType::Dint => "int32_t",
    }
}

fn nondet_fn(ty: ScalarType) -> &'static str {
    match ty {
        ScalarType::Bool => "nondet_bool",
        ScalarType::Int => "nondet_int16",
        ScalarType::Dint => "nondet_int32",
    }
}

fn lit(ty: ScalarType, v: i64) -> String {
    if ty == ScalarType::Dint && v == ScalarType::Dint.min() {
        "(-2147483647 - 1)".into()
    } else {
        v.to_string()
    }
}

/// The body could not be expressed with structured control flow.
struct Unstructured;

struct Loop {
    header: usize,
    body: Vec<bool>,
    exit: Option<usize>,
}

struct Emitter<'a> {
    net: &'a CfaNetwork,
    map: &'a NameMap,
    g: Graph,
    ipdom: Vec<Option<usize>>,
    loops: Vec<Loop>,
    checks: BTreeMap<LocId, Vec<&'a Expr>>,
    /// Choice site of (transition, assignment).
    sites: BTreeMap<(usize, usize), &'a ChoiceSite>,
    label: &'a str,
    out: String,
    depth: usize,
}

impl<'a> Emitter<'a> {
    fn line(&mut self, s: &str) {
        for _ in 0..self.depth {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn ident(&self, name: &str) -> &str {
        self.map.ident(name).expect("every variable is mapped")
    }

    fn expr(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Const(v) => lit(e.ty, *v),
            ExprKind::Var(v) => self.ident(&self.net.var(*v).name).to_string(),
            ExprKind::Index { var, index } => self.element(*var, index),
            ExprKind::Unary { op: UnOp::Not, operand } => format!("(!{})", self.expr(operand)),
            ExprKind::Unary { op: UnOp::Neg, operand } => format!("(({})(-({})))", ctype(e.ty), self.expr(operand)),
            ExprKind::Binary { op, lhs, rhs } => {
                let (a, b) = (self.expr(lhs), self.expr(rhs));
                let sym = match op {
                    // evaluated eagerly, like the source semantics
                    BinOp::And => "&",
                    BinOp::Or => "|",
                    BinOp::Xor => "^",
                    BinOp::Eq => "==",
                    BinOp::Ne => "!=",
                    BinOp::Lt => "<",
                    BinOp::Le => "<=",
                    BinOp::Gt => ">",
                    BinOp::Ge => ">=",
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Mod => "%",
                };
                if op.is_arithmetic() {
                    format!("(({})({a} {sym} {b}))", ctype(e.ty))
                } else {
                    format!("({a} {sym} {b})")
                }
            }
            ExprKind::Nondet(_) => unreachable!("nondet values are bound to choice sites"),
        }
    }

    /// A condition without redundant outer parentheses.
    fn cond(&self, e: &Expr) -> String {
        let s = self.expr(e);
        let inner = s.strip_prefix('(').and_then(|r| r.strip_suffix(')'));
        match inner {
            Some(i) if balanced(i) => i.to_string(),
            _ => s,
        }
    }

    fn element(&self, var: crate::cfa::VarId, index: &Expr) -> String {
        let v = self.net.var(var);
        let lo = v.ty.bounds().map_or(0, |(lo, _)| lo);
        let id = self.ident(&v.name);
        match (index.as_const(), lo) {
            (Some(c), _) => format!("{id}[{}]", c - lo),
            (None, 0) => format!("{id}[{}]", self.expr(index)),
            (None, lo) => format!("{id}[{} - {lo}]", self.expr(index)),
        }
    }

    fn target(&self, t: &Target) -> String {
        match &t.index {
            None => self.ident(&self.net.var(t.var).name).to_string(),
            Some(i) => self.element(t.var, i),
        }
    }

    fn assignments(&mut self, ti: usize, t: &Transition) {
        for (k, a) in t.assignments.iter().enumerate() {
            let lhs = self.target(&a.target);
            match &a.value.kind {
                ExprKind::Nondet(d) => {
                    let s = self.sites[&(ti, k)];
                    self.line(&format!("{} = {}();", s.ident, nondet_fn(s.ty)));
                    if let Some(m) = membership(&s.ident, s.ty, d) {
                        self.line(&format!("__CPROVER_assume({m});"));
                    }
                    self.line(&format!("{lhs} = {};", s.ident));
                }
                _ => {
                    let rhs = self.expr(&a.value);
                    self.line(&format!("{lhs} = {rhs};"));
                }
            }
        }
    }

    fn check(&mut self, n: usize) {
        let loc = self.g.nodes[n];
        if let Some(es) = self.checks.get(&loc).cloned() {
            for e in es {
                let c = self.cond(e);
                self.line(&format!("__CPROVER_assert({c}, \"{}\");", self.label));
            }
        }
    }

    fn outgoing(&self, n: usize) -> Vec<(usize, &'a Transition)> {
        let loc = self.g.nodes[n];
        let net: &'a CfaNetwork = self.net;
        net.main.outgoing(loc).collect()
    }

    fn loop_at(&self, n: usize) -> Option<usize> {
        self.loops.iter().position(|l| l.header == n)
    }

    /// Emit straight-line code from `n` until `stop`, the end of the cycle,
    /// or (inside loop `ctx`) a jump back to the header or out of the loop.
    /// With `first`, `n` itself is emitted even if it is a loop header.
    fn seq(
        &mut self,
        mut n: usize,
        stop: Option<usize>,
        ctx: Option<usize>,
        mut first: bool,
    ) -> Result<(), Unstructured> {
        loop {
            if !first {
                if Some(n) == stop {
                    return Ok(());
                }
                if let Some(l) = ctx {
                    if n == self.loops[l].header {
                        self.line("continue;");
                        return Ok(());
                    }
                    if !self.loops[l].body[n] {
                        if Some(n) != self.loops[l].exit {
                            return Err(Unstructured);
                        }
                        self.line("break;");
                        return Ok(());
                    }
                }
                if n == self.g.exit {
                    return Ok(());
                }
                if let Some(l) = self.loop_at(n) {
                    self.emit_loop(l)?;
                    match self.loops[l].exit {
                        Some(x) => {
                            n = x;
                            continue;
                        }
                        None => return Ok(()),
                    }
                }
            }
            first = false;
            self.check(n);
            let outs = self.outgoing(n);
            match outs.len() {
                0 => return Ok(()),
                1 => {
                    let (ti, t) = outs[0];
                    if !t.guard.is_true() {
                        let g = self.cond(&t.guard);
                        self.line(&format!("__CPROVER_assume({g});"));
                    }
                    self.assignments(ti, t);
                    n = self.g.idx(t.target);
                }
                _ => {
                    let join = self.ipdom[n];
                    let join = join.filter(|j| ctx.is_none_or(|l| self.loops[l].body[*j]));
                    let otherwise = outs.len() == 2 && negates(&outs[0].1.guard, &outs[1].1.guard);
                    for (i, (ti, t)) in outs.iter().enumerate() {
                        let g = self.cond(&t.guard);
                        if i == 0 {
                            self.line(&format!("if ({g}) {{"));
                        } else if otherwise {
                            self.depth -= 1;
                            self.line("} else {");
                        } else {
                            self.depth -= 1;
                            self.line(&format!("}} else if ({g}) {{"));
                        }
                        self.depth += 1;
                        self.assignments(*ti, t);
                        self.seq(self.g.idx(t.target), join, ctx, false)?;
                    }
                    self.depth -= 1;
                    self.line("}");
                    match join {
                        Some(j) => n = j,
                        None => return Ok(()),
                    }
                }
            }
        }
    }

    fn emit_loop(&mut self, l: usize) -> Result<(), Unstructured> {
        let h = self.loops[l].header;
        let outs = self.outgoing(h);
        let checked = self.checks.contains_key(&self.g.nodes[h]);
        if !checked && outs.len() == 2 && outs.iter().all(|(_, t)| t.assignments.is_empty()) {
            let inside: Vec<bool> = outs.iter().map(|(_, t)| self.loops[l].body[self.g.idx(t.target)]).collect();
            if inside[0] != inside[1] {
                let (tin, tout) = if inside[0] { (outs[0].1, outs[1].1) } else { (outs[1].1, outs[0].1) };
                if Some(self.g.idx(tout.target)) == self.loops[l].exit {
                    let g = self.cond(&tin.guard);
                    self.line(&format!("while ({g}) {{"));
                    self.depth += 1;
                    self.seq(self.g.idx(tin.target), Some(h), Some(l), false)?;
                    self.depth -= 1;
                    self.line("}");
                    return Ok(());
                }
            }
        }
        self.line("while (1) {");
        self.depth += 1;
        self.seq(h, Some(h), Some(l), true)?;
        self.depth -= 1;
        self.line("}");
        Ok(())
    }

    /// Fallback: a location counter dispatched by `switch` inside a loop.
    fn dispatch(&mut self, control: &str) {
        let end = self.net.main.end;
        let cs = self.net.main.cycle_start.expect("main automaton");
        self.line(&format!("{control} = {};", cs.0));
        self.line(&format!("while ({control} != {}) {{", end.0));
        self.depth += 1;
        self.line(&format!("switch ({control}) {{"));
        let locs: Vec<LocId> = self.net.main.locations.keys().copied().filter(|l| *l != end).collect();
        for loc in locs {
            let n = self.g.idx(loc);
            self.line(&format!("case {}:", loc.0));
            self.depth += 1;
            self.check(n);
            let outs = self.outgoing(n);
            for (i, (ti, t)) in outs.iter().enumerate() {
                let g = self.expr(&t.guard);
                self.line(&format!("{}if ({g}) {{", if i == 0 { "" } else { "} else " }));
                self.depth += 1;
                self.assignments(*ti, t);
                self.line(&format!("{control} = {};", t.target.0));
                self.depth -= 1;
            }
            if !outs.is_empty() {
                self.line("}");
            }
            self.line("break;");
            self.depth -= 1;
        }
        self.line("}");
        self.depth -= 1;
        self.line("}");
    }
}

fn balanced(s: &str) -> bool {
    let mut depth = 0i32;
    for c in s.chars() {
        depth += match c {
            '(' => 1,
            ')' => -1,
            _ => 0,
        };
        if depth < 0 {
            return false;
        }
    }
    depth == 0
}

/// `b` is literally `NOT a`.
fn negates(a: &Expr, b: &Expr) -> bool {
    matches!(&b.kind, ExprKind::Unary { op: UnOp::Not, operand } if **operand == *a)
}

fn membership(ident: &str, ty: ScalarType, d: &Domain) -> Option<String> {
    if *d == ty.full_domain() {
        return None;
    }
    Some(match d {
        Domain::Range(lo, hi) => {
            format!("{ident} >= {} & {ident} <= {}", lit(ty, *lo), lit(ty, *hi))
        }
        Domain::Values(vs) => vs.iter().map(|v| format!("{ident} == {}", lit(ty, *v))).collect::<Vec<_>>().join(" | "),
    })
}

/// Emit `p` as one C translation unit for CBMC: globals for the program
/// state, `nondet_*` externs for inputs, and `main` running the scan cycle
/// forever with assertion calls where the property is checked.
pub fn emit_c(p: &VerificationProblem) -> EmittedModel {
    let net = inlined(p);
    let mut map = NameMap::new();
    for v in net.main_vars() {
        map.insert(&v.name, KW);
    }
    let control = map.aux("scan_cycle", KW);
    let loc_var = map.aux("loc", KW);
    let sites = choice_sites(&net, &mut map, KW);
    let label = property_label(p, KW, &mut map);

    let g = Graph::of(&net.main);
    let ipdom = g.ipdom();
    let loops = g.loops().map(|ls| {
        ls.into_iter()
            .map(|(header, body)| {
                let mut exits: Vec<usize> = (0..g.nodes.len())
                    .filter(|&n| body[n])
                    .flat_map(|n| g.succ[n].iter().copied())
                    .filter(|s| !body[*s])
                    .collect();
                exits.sort_unstable();
                exits.dedup();
                (header, body, exits)
            })
            .collect::<Vec<_>>()
    });
    let mut checks: BTreeMap<LocId, Vec<&Expr>> = BTreeMap::new();
    for (l, e) in p.property.check_points(&net) {
        checks.entry(l).or_default().push(e);
    }
    let mut per_transition: BTreeMap<usize, usize> = BTreeMap::new();
    let mut site_of = BTreeMap::new();
    for s in &sites {
        let k = per_transition.entry(s.transition).or_default();
        let t = &net.main.transitions[s.transition];
        let pos = t.assignments.iter().enumerate().filter(|(_, a)| a.value.has_nondet()).nth(*k).unwrap().0;
        site_of.insert((s.transition, pos), s);
        *k += 1;
    }

    let structured = loops.as_ref().is_some_and(|ls| ls.iter().all(|(_, _, e)| e.len() <= 1));
    let loops: Vec<Loop> = loops
        .unwrap_or_default()
        .into_iter()
        .map(|(header, body, exits)| Loop { header, body, exit: exits.first().copied() })
        .collect();
    let mut em = Emitter {
        net: &net,
        map: &map,
        g,
        ipdom,
        loops,
        checks,
        sites: site_of,
        label: &label,
        out: String::new(),
        depth: 1,
    };

    let cs = em.g.idx(net.main.cycle_start.expect("main automaton"));
    let end = em.g.exit;
    let body = |em: &mut Emitter| -> Result<(), Unstructured> {
        em.seq(em.g.entry, Some(cs), None, false)?;
        em.line("while (1) {");
        em.depth += 1;
        em.line(&format!("{control} = {control} + 1;"));
        em.seq(cs, Some(end), None, true)?;
        em.check(end);
        em.depth -= 1;
        em.line("}");
        Ok(())
    };
    let ok = structured && body(&mut em).is_ok();
    let mut uses_loc = false;
    if !ok {
        em.out.clear();
        em.depth = 1;
        em.seq(em.g.entry, Some(cs), None, false).ok();
        em.line("while (1) {");
        em.depth += 1;
        em.line(&format!("{control} = {control} + 1;"));
        em.dispatch(&loc_var);
        em.check(end);
        em.depth -= 1;
        em.line("}");
        uses_loc = true;
    }
    let main_body = core::mem::take(&mut em.out);
    drop(em);

    let mut out = String::new();
    let _ = writeln!(out, "/* {} ({}) */", p.name, net.entry_name);
    out.push_str("typedef signed short int16_t;\ntypedef signed int int32_t;\n\n");
    let mut types: Vec<ScalarType> = sites.iter().map(|s| s.ty).collect();
    types.sort();
    types.dedup();
    for t in types {
        let _ = writeln!(out, "{} {}(void);", ctype(t), nondet_fn(t));
    }
    out.push('\n');
    let _ = writeln!(out, "unsigned int {control};");
    if uses_loc {
        let _ = writeln!(out, "unsigned int {loc_var};");
    }
    for v in net.main_vars() {
        let id = map.ident(&v.name).unwrap();
        let ty = ctype(v.scalar());
        if v.ty.is_array() {
            let init: Vec<String> = v.init.iter().map(|x| lit(v.scalar(), *x)).collect();
            let _ = writeln!(out, "{ty} {id}[{}] = {{{}}};", v.init.len(), init.join(", "));
        } else {
            let _ = writeln!(out, "{ty} {id} = {};", lit(v.scalar(), v.init[0]));
        }
    }
    for s in &sites {
        let _ = writeln!(out, "{} {};", ctype(s.ty), s.ident);
    }
    out.push_str("\nint main(void)\n{\n");
    out.push_str(&main_body);
    out.push_str("    return 0;\n}\n");

    EmittedModel {
        format: ModelFormat::C,
        text: out,
        map,
        property_label: label,
        property: p.property.clone(),
        net,
        sites,
        control,
    }
}
