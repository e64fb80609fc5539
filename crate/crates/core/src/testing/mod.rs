//! Seeded random Structured Text programs for property-based suites.
//!
//! Programs are generated as source text (so the parser is exercised too)
//! and kept small enough for the brute-force oracle: at most four BOOL
//! inputs and two INT inputs whose havoc domain is restricted to 4 bits,
//! with at most 8 input bits per cycle in total.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfa::{build_cfa, CfaNetwork};
use crate::requirements::{assertions_to_problems, VerificationProblem};
use crate::syntax::{load, SourceUnit};
use crate::types::Domain;

pub mod suites;

/// Havoc domain of generated INT inputs.
pub const SMALL_INT: (i64, i64) = (-8, 7);

/// A generated program and how to load it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub seed: u64,
    pub source: String,
    pub entry: String,
    /// INT inputs to restrict to [`SMALL_INT`].
    pub small_inputs: Vec<String>,
    pub has_loop: bool,
    /// Number of FUNCTION/FUNCTION_BLOCK units besides the entry.
    pub callees: usize,
}

impl Generated {
    /// Parse, build and restrict inputs.
    pub fn network(&self) -> CfaNetwork {
        let p = load(&[SourceUnit::new(format!("gen{}.st", self.seed), self.source.as_str())])
            .unwrap_or_else(|d| panic!("seed {}: {d:?}\n{}", self.seed, self.source));
        let mut net = build_cfa(&p.ast, &self.entry, &p.assertions)
            .unwrap_or_else(|e| panic!("seed {}: {e:?}\n{}", self.seed, self.source));
        for n in &self.small_inputs {
            let id = net.var_by_name(n).expect("generated input").id;
            net.set_input_domain(id, Domain::Range(SMALL_INT.0, SMALL_INT.1));
        }
        net
    }

    /// The single assertion of the program as a problem.
    pub fn problem(&self) -> VerificationProblem {
        assertions_to_problems(&self.network()).expect("generated programs assert").remove(0)
    }
}

struct Gen {
    rng: ChaCha8Rng,
    bools: Vec<String>,
    ints: Vec<String>,
    /// Inputs read only in comparisons with constants.
    compared: Vec<String>,
    /// Assignable variables.
    bool_out: Vec<String>,
    int_out: Vec<String>,
    array: Option<String>,
    /// BOOL functions callable as `F(x := ...)`, with their input types
    /// (true: BOOL).
    functions: Vec<(String, Vec<(String, bool)>)>,
    /// Function block instances with their BOOL input and output.
    instances: Vec<String>,
    budget: i32,
    counters: u32,
    has_loop: bool,
    out: String,
    indent: usize,
}

const CMP: [&str; 6] = ["=", "<>", "<", "<=", ">", ">="];

impl Gen {
    fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bools: Vec::new(),
            ints: Vec::new(),
            compared: Vec::new(),
            bool_out: Vec::new(),
            int_out: Vec::new(),
            array: None,
            functions: Vec::new(),
            instances: Vec::new(),
            budget: 0,
            counters: 0,
            has_loop: false,
            out: String::new(),
            indent: 0,
        }
    }

    fn pick<'a>(&mut self, v: &'a [String]) -> &'a str {
        &v[self.rng.gen_range(0..v.len())]
    }

    fn konst(&mut self) -> i64 {
        self.rng.gen_range(-4..=9)
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn int_atom(&mut self) -> String {
        let mut pool = self.ints.clone();
        pool.extend(self.int_out.iter().cloned());
        match self.rng.gen_range(0..10) {
            0..=2 => format!("{}", self.konst()),
            3 if self.array.is_some() => format!("{}[{}]", self.array.clone().unwrap(), self.rng.gen_range(0..4)),
            _ if !pool.is_empty() => self.pick(&pool).into(),
            _ => format!("{}", self.konst()),
        }
    }

    fn int_expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.4) {
            return self.int_atom();
        }
        let l = self.int_expr(depth - 1);
        match self.rng.gen_range(0..12) {
            0..=3 => format!("({l} + {})", self.int_expr(depth - 1)),
            4..=5 => format!("({l} - {})", self.int_expr(depth - 1)),
            6 => format!("({l} * {})", self.int_atom()),
            7 => format!("({l} / {})", self.rng.gen_range(1..=3)),
            8 => format!("({l} MOD {})", self.rng.gen_range(2..=4)),
            // may divide by zero
            9 => format!("({l} / {})", self.int_atom()),
            10 => format!("(-{l})"),
            _ => l,
        }
    }

    fn bool_atom(&mut self) -> String {
        let mut pool = self.bools.clone();
        pool.extend(self.bool_out.iter().cloned());
        match self.rng.gen_range(0..12) {
            0 => "TRUE".into(),
            1 => "FALSE".into(),
            2..=3 if !self.compared.is_empty() => {
                let v = self.pick(&self.compared.clone()).to_string();
                let op = CMP[self.rng.gen_range(0..CMP.len())];
                format!("({v} {op} {})", self.rng.gen_range(SMALL_INT.0..=SMALL_INT.1))
            }
            4..=5 => {
                let op = CMP[self.rng.gen_range(0..CMP.len())];
                format!("({} {op} {})", self.int_expr(1), self.int_expr(1))
            }
            6 if !self.functions.is_empty() => self.call(),
            7 if !self.instances.is_empty() => format!("{}.q", self.pick(&self.instances.clone())),
            _ if !pool.is_empty() => self.pick(&pool).into(),
            _ => "TRUE".into(),
        }
    }

    fn call(&mut self) -> String {
        let (name, params) = self.functions[self.rng.gen_range(0..self.functions.len())].clone();
        let args: Vec<String> = params
            .iter()
            .map(|(p, is_bool)| {
                let v = if *is_bool { self.bool_expr(0) } else { self.int_expr(1) };
                format!("{p} := {v}")
            })
            .collect();
        format!("{name}({})", args.join(", "))
    }

    fn bool_expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.bool_atom();
        }
        let l = self.bool_expr(depth - 1);
        match self.rng.gen_range(0..8) {
            0..=1 => format!("({l} AND {})", self.bool_expr(depth - 1)),
            2..=3 => format!("({l} OR {})", self.bool_expr(depth - 1)),
            4 => format!("({l} XOR {})", self.bool_expr(depth - 1)),
            5 => format!("NOT {l}"),
            _ => l,
        }
    }

    fn block(&mut self, depth: u32, max: u32) {
        let n = self.rng.gen_range(1..=max);
        for _ in 0..n {
            if self.budget <= 0 {
                break;
            }
            self.stmt(depth);
        }
    }

    fn counter(&mut self) -> String {
        self.counters += 1;
        format!("k{}", self.counters - 1)
    }

    fn stmt(&mut self, depth: u32) {
        self.budget -= 1;
        let nested = depth < 2 && self.budget > 2;
        let choice = self.rng.gen_range(0..20);
        match choice {
            0..=4 if !self.bool_out.is_empty() => {
                let t = self.pick(&self.bool_out.clone()).to_string();
                let e = self.bool_expr(2);
                self.line(&format!("{t} := {e};"));
            }
            5..=9 if !self.int_out.is_empty() => {
                let t = self.pick(&self.int_out.clone()).to_string();
                let e = self.int_expr(2);
                self.line(&format!("{t} := {e};"));
            }
            10 if self.array.is_some() => {
                let a = self.array.clone().unwrap();
                let idx = if self.rng.gen_bool(0.7) {
                    format!("{}", self.rng.gen_range(0..4))
                } else {
                    // may leave the bounds
                    format!("{} MOD 4", self.int_atom())
                };
                let e = self.int_expr(1);
                self.line(&format!("{a}[{idx}] := {e};"));
            }
            11..=13 if nested => {
                let c = self.bool_expr(2);
                self.line(&format!("IF {c} THEN"));
                self.indent += 1;
                self.block(depth + 1, 3);
                self.indent -= 1;
                if self.rng.gen_bool(0.3) {
                    let c = self.bool_expr(1);
                    self.line(&format!("ELSIF {c} THEN"));
                    self.indent += 1;
                    self.block(depth + 1, 2);
                    self.indent -= 1;
                }
                if self.rng.gen_bool(0.5) {
                    self.line("ELSE");
                    self.indent += 1;
                    self.block(depth + 1, 2);
                    self.indent -= 1;
                }
                self.line("END_IF;");
            }
            14 if nested => {
                let s = self.int_expr(1);
                self.line(&format!("CASE {s} OF"));
                self.indent += 1;
                let a = self.rng.gen_range(-2..=2);
                self.line(&format!("{a}:"));
                self.indent += 1;
                self.block(depth + 1, 2);
                self.indent -= 1;
                let b = a + self.rng.gen_range(1..=3);
                self.line(&format!("{}, {}..{}:", b, b + 2, b + 4));
                self.indent += 1;
                self.block(depth + 1, 2);
                self.indent -= 1;
                self.line("ELSE");
                self.indent += 1;
                self.block(depth + 1, 1);
                self.indent -= 2;
                self.line("END_CASE;");
            }
            15..=16 if nested => {
                self.has_loop = true;
                let k = self.counter();
                let hi = self.rng.gen_range(0..=3);
                self.line(&format!("FOR {k} := 0 TO {hi} DO"));
                self.indent += 1;
                self.block(depth + 1, 2);
                self.indent -= 1;
                self.line("END_FOR;");
            }
            17 if nested => {
                self.has_loop = true;
                let k = self.counter();
                let hi = self.rng.gen_range(1..=3);
                self.line(&format!("{k} := 0;"));
                let extra = self.bool_expr(1);
                self.line(&format!("WHILE {k} < {hi} AND {extra} DO"));
                self.indent += 1;
                self.block(depth + 1, 2);
                self.line(&format!("{k} := {k} + 1;"));
                self.indent -= 1;
                self.line("END_WHILE;");
            }
            18 if nested => {
                self.has_loop = true;
                let k = self.counter();
                let hi = self.rng.gen_range(1..=3);
                self.line(&format!("{k} := 0;"));
                self.line("REPEAT");
                self.indent += 1;
                self.block(depth + 1, 2);
                self.line(&format!("{k} := {k} + 1;"));
                self.indent -= 1;
                self.line(&format!("UNTIL {k} >= {hi} END_REPEAT;"));
            }
            19 if !self.instances.is_empty() => {
                let i = self.pick(&self.instances.clone()).to_string();
                let e = self.bool_expr(1);
                let r = self.bool_atom();
                self.line(&format!("{i}(set := {e}, reset := {r});"));
            }
            _ if !self.bool_out.is_empty() && self.rng.gen_bool(0.5) => {
                let t = self.pick(&self.bool_out.clone()).to_string();
                let e = self.bool_expr(2);
                self.line(&format!("{t} := {e};"));
            }
            _ if !self.int_out.is_empty() => {
                let t = self.pick(&self.int_out.clone()).to_string();
                let e = self.int_expr(2);
                self.line(&format!("{t} := {e};"));
            }
            _ => {}
        }
    }

    /// An assertion over the program state that is neither always nor
    /// never violated too often.
    fn assertion(&mut self) -> String {
        // requirements cannot call functions
        let functions = core::mem::take(&mut self.functions);
        let a = self.assertion_expr();
        self.functions = functions;
        a
    }

    fn assertion_expr(&mut self) -> String {
        let mut state: Vec<String> = self.bool_out.clone();
        state.extend(self.instances.iter().map(|i| format!("{i}.q")));
        match self.rng.gen_range(0..4) {
            0 if !self.int_out.is_empty() => {
                let v = self.pick(&self.int_out.clone()).to_string();
                let c = self.rng.gen_range(-10..=20);
                let op = ["<", "<=", ">", ">=", "<>"][self.rng.gen_range(0..5)];
                format!("{v} {op} {c}")
            }
            1 if state.len() >= 2 => {
                let a = self.pick(&state).to_string();
                let b = self.pick(&state).to_string();
                format!("NOT ({a} AND NOT {b})")
            }
            _ => self.bool_expr(2),
        }
    }

    fn declare(&mut self, kind: &str, vars: &[(String, &str)]) {
        if vars.is_empty() {
            return;
        }
        self.line(kind);
        for (n, t) in vars {
            self.line(&format!("  {n} : {t};"));
        }
        self.line("END_VAR");
    }
}

/// Statement budget of generated program bodies.
pub const MAX_STATEMENTS: i32 = 30;

/// A single-program unit with one assertion.
pub fn random_program(seed: u64) -> Generated {
    let mut g = Gen::new(seed);
    let n_int = g.rng.gen_range(0..=2usize);
    let n_bool = g.rng.gen_range(if n_int == 0 { 1 } else { 0 }..=(8 - 4 * n_int).min(4));
    g.bools = (0..n_bool).map(|i| format!("b{i}")).collect();
    let ints: Vec<String> = (0..n_int).map(|i| format!("i{i}")).collect();
    for i in &ints {
        if g.rng.gen_bool(0.4) {
            g.compared.push(i.clone());
        } else {
            g.ints.push(i.clone());
        }
    }
    g.bool_out = (0..g.rng.gen_range(1..=3)).map(|i| format!("x{i}")).collect();
    g.int_out = (0..g.rng.gen_range(1..=2)).map(|i| format!("n{i}")).collect();
    if g.rng.gen_bool(0.3) {
        g.array = Some("arr".into());
    }
    g.budget = g.rng.gen_range(4..=MAX_STATEMENTS);

    // body first: counters are declared once known
    let mut body = Gen { out: String::new(), indent: 0, ..g };
    body.block(0, MAX_STATEMENTS as u32);
    let assertion = body.assertion();
    let at_end = body.rng.gen_bool(0.8);
    let mut lines: Vec<String> = body.out.lines().map(String::from).collect();
    let top: Vec<usize> = (0..lines.len()).filter(|i| !lines[*i].starts_with(' ')).collect();
    let pos = if at_end || top.is_empty() {
        lines.len()
    } else {
        // before a top-level statement start that closes no block
        let i = top[body.rng.gen_range(0..top.len())];
        if lines[i].starts_with("END_") || lines[i].starts_with("ELS") || lines[i].starts_with("UNTIL") {
            lines.len()
        } else {
            i
        }
    };
    lines.insert(pos, format!("//#ASSERT {assertion}"));

    let mut g = body;
    g.out.clear();
    g.line("PROGRAM P");
    let mut inputs: Vec<(String, &str)> = g.bools.iter().map(|b| (b.clone(), "BOOL")).collect();
    inputs.extend(ints.iter().map(|i| (i.clone(), "INT")));
    g.declare("VAR_INPUT", &inputs);
    let outs: Vec<(String, &str)> = g.bool_out.iter().map(|b| (b.clone(), "BOOL")).collect();
    g.declare("VAR_OUTPUT", &outs);
    let mut locals: Vec<(String, &str)> = g.int_out.iter().map(|n| (n.clone(), "INT")).collect();
    if let Some(a) = &g.array {
        locals.push((a.clone(), "ARRAY[0..3] OF INT"));
    }
    g.declare("VAR", &locals);
    let temps: Vec<(String, &str)> = (0..g.counters).map(|k| (format!("k{k}"), "INT")).collect();
    g.declare("VAR_TEMP", &temps);
    let mut source = g.out.clone();
    for l in lines {
        let _ = writeln!(source, "  {l}");
    }
    source.push_str("END_PROGRAM\n");
    Generated { seed, source, entry: "P".into(), small_inputs: ints, has_loop: g.has_loop, callees: 0 }
}

/// A program calling one to three BOOL functions and possibly a latch
/// function block, asserting over their results.
pub fn random_multi_function(seed: u64) -> Generated {
    let mut g = Gen::new(seed ^ 0x5eed_f00d);
    let mut units = String::new();
    let n_fun = g.rng.gen_range(1..=3);
    for f in 0..n_fun {
        let name = format!("F{f}");
        let int_param = g.rng.gen_bool(0.4);
        let mut params = alloc::vec![(String::from("x"), true)];
        if int_param {
            params.push(("v".into(), false));
        }
        let mut body = Gen::new(seed.wrapping_mul(31).wrapping_add(f));
        body.bools = alloc::vec!["x".into()];
        if int_param {
            body.compared = alloc::vec!["v".into()];
        }
        body.bool_out = alloc::vec!["t".into()];
        body.budget = body.rng.gen_range(1..=4);
        body.indent = 1;
        body.block(1, 4);
        // results that are often constrained, so abstraction can be spurious
        let result = match body.rng.gen_range(0..4) {
            0 => "x AND NOT x".to_string(),
            1 => "t OR x".to_string(),
            2 => "t AND x".to_string(),
            _ => body.bool_expr(2),
        };
        let _ = writeln!(units, "FUNCTION {name} : BOOL");
        let _ = write!(units, "VAR_INPUT\n  x : BOOL;\n");
        if int_param {
            units.push_str("  v : INT;\n");
        }
        let _ = write!(units, "END_VAR\nVAR\n  t : BOOL;\nEND_VAR\n");
        if body.counters > 0 {
            units.push_str("VAR_TEMP\n");
            for k in 0..body.counters {
                let _ = writeln!(units, "  k{k} : INT;");
            }
            units.push_str("END_VAR\n");
        }
        units.push_str("  t := FALSE;\n");
        units.push_str(&body.out);
        let _ = write!(units, "  {name} := {result};\nEND_FUNCTION\n\n");
        g.functions.push((name, params));
    }
    let latch = g.rng.gen_bool(0.4);
    if latch {
        units.push_str(
            "FUNCTION_BLOCK Latch\nVAR_INPUT\n  set : BOOL;\n  reset : BOOL;\nEND_VAR\nVAR_OUTPUT\n  q : BOOL;\nEND_VAR\n\
             \x20 IF reset THEN\n    q := FALSE;\n  ELSIF set THEN\n    q := TRUE;\n  END_IF;\nEND_FUNCTION_BLOCK\n\n",
        );
        g.instances.push("l0".into());
    }
    g.bools = (0..g.rng.gen_range(1..=3)).map(|i| format!("b{i}")).collect();
    g.bool_out = (0..g.rng.gen_range(1..=2)).map(|i| format!("y{i}")).collect();
    g.budget = g.rng.gen_range(3..=10);
    // every callee is called at least once
    for (name, _) in g.functions.clone() {
        let t = g.pick(&g.bool_out.clone()).to_string();
        let f = g.functions.iter().position(|(n, _)| *n == name).unwrap();
        let call = {
            let saved = core::mem::take(&mut g.functions);
            g.functions.push(saved[f].clone());
            let c = g.call();
            g.functions = saved;
            c
        };
        g.line(&format!("{t} := {call};"));
    }
    if latch {
        let e = g.bool_expr(1);
        g.line(&format!("l0(set := {e}, reset := FALSE);"));
    }
    g.block(0, 10);
    let assertion = g.assertion();
    g.line(&format!("//#ASSERT {assertion}"));
    let body = core::mem::take(&mut g.out);

    let mut head = Gen::new(0);
    head.line("PROGRAM P");
    let inputs: Vec<(String, &str)> = g.bools.iter().map(|b| (b.clone(), "BOOL")).collect();
    head.declare("VAR_INPUT", &inputs);
    let outs: Vec<(String, &str)> = g.bool_out.iter().map(|b| (b.clone(), "BOOL")).collect();
    head.declare("VAR_OUTPUT", &outs);
    let mut locals: Vec<(String, &str)> = g.int_out.iter().map(|n| (n.clone(), "INT")).collect();
    if latch {
        locals.push(("l0".into(), "Latch"));
    }
    head.declare("VAR", &locals);
    let temps: Vec<(String, &str)> = (0..g.counters).map(|k| (format!("k{k}"), "INT")).collect();
    head.declare("VAR_TEMP", &temps);
    let mut source = units;
    source.push_str(&head.out);
    for l in body.lines() {
        let _ = writeln!(source, "  {l}");
    }
    source.push_str("END_PROGRAM\n");
    Generated {
        seed,
        source,
        entry: "P".into(),
        small_inputs: Vec::new(),
        has_loop: g.has_loop,
        callees: n_fun as usize + latch as usize,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn programs_load_and_are_reproducible() {
        for seed in 0..200 {
            let g = random_program(seed);
            assert_eq!(g, random_program(seed));
            let net = g.network();
            assert!(net.branching_factor() <= 256, "seed {seed}: {}", net.branching_factor());
            let m = random_multi_function(seed);
            assert_eq!(m.network().callees.len(), m.callees, "{}", m.source);
        }
    }
}
