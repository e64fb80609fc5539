//! Model emission for external checkers (NuSMV, CBMC) and parsing of their
//! output back into verdicts.
//!
//! Emitters take reduced problems; networks with call sites are inlined
//! first. Running the tools needs a process API and lives in the std crate;
//! this module only describes a run ([`ToolRun`]) and interprets it.

mod c;
mod parse;
mod smv;
#[cfg(test)]
mod tests;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cfa::{inline_callees, CfaNetwork, ExprKind, LocId, VarId};
use crate::requirements::{Property, VerificationProblem};
use crate::types::{Domain, ScalarType, Span};

pub use c::emit_c;
pub use parse::parse_tool_output;
pub use smv::emit_smv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelFormat {
    Smv,
    C,
}

impl ModelFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ModelFormat::Smv => "smv",
            ModelFormat::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("{feature} is not supported by this backend (at {}..{})", span.start, span.end)]
    Unsupported { feature: String, span: Span },
}

const SMV_KEYWORDS: &[&str] = &[
    "MODULE",
    "VAR",
    "IVAR",
    "FROZENVAR",
    "DEFINE",
    "ASSIGN",
    "INIT",
    "INVAR",
    "TRANS",
    "INVARSPEC",
    "SPEC",
    "CTLSPEC",
    "LTLSPEC",
    "PSLSPEC",
    "FAIRNESS",
    "JUSTICE",
    "COMPASSION",
    "CONSTANTS",
    "NAME",
    "init",
    "next",
    "case",
    "esac",
    "TRUE",
    "FALSE",
    "boolean",
    "word",
    "signed",
    "unsigned",
    "array",
    "of",
    "mod",
    "xor",
    "xnor",
    "in",
    "union",
    "self",
    "process",
    "integer",
    "real",
    "count",
    "abs",
    "max",
    "min",
    "toint",
    "bool",
    "extend",
    "resize",
    "swconst",
    "uwconst",
    "sizeof",
    "floor",
    "typeof",
    "EX",
    "AX",
    "EF",
    "AF",
    "EG",
    "AG",
    "E",
    "A",
    "U",
    "V",
    "X",
    "F",
    "G",
    "Y",
    "Z",
    "H",
    "O",
    "S",
    "T",
    "BU",
    "EBF",
    "ABF",
    "EBG",
    "ABG",
];

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern", "float",
    "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed", "sizeof",
    "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while", "_Bool", "main",
    "assert", "int16_t", "int32_t", "int8_t", "bool", "true", "false",
];

/// Bijection between CFA names (variables, or array cells `a[3]`) and
/// identifiers of the emitted model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NameMap {
    to_ident: BTreeMap<String, String>,
    to_name: BTreeMap<String, String>,
}

impl NameMap {
    fn new() -> Self {
        NameMap::default()
    }

    /// Reserve an identifier for `name`, derived from it and unique among
    /// identifiers handed out so far and `keywords`.
    fn insert(&mut self, name: &str, keywords: &[&str]) -> String {
        if let Some(id) = self.to_ident.get(name) {
            return id.clone();
        }
        let id = self.fresh(name, keywords);
        self.to_ident.insert(name.into(), id.clone());
        self.to_name.insert(id.clone(), name.into());
        id
    }

    /// A unique identifier not tied to a CFA name.
    fn fresh(&self, base: &str, keywords: &[&str]) -> String {
        let mut s: String = base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
            s.insert(0, 'v');
        }
        let taken = |x: &str| self.to_name.contains_key(x) || keywords.contains(&x);
        if !taken(&s) {
            return s;
        }
        (2..).map(|k| alloc::format!("{s}_{k}")).find(|c| !taken(c)).unwrap()
    }

    /// Reserve an auxiliary identifier (location counter, choice sites).
    fn aux(&mut self, base: &str, keywords: &[&str]) -> String {
        let id = self.fresh(base, keywords);
        self.to_name.insert(id.clone(), String::new());
        id
    }

    pub fn ident(&self, name: &str) -> Option<&str> {
        self.to_ident.get(name).map(String::as_str)
    }

    pub fn name(&self, ident: &str) -> Option<&str> {
        self.to_name.get(ident).map(String::as_str).filter(|n| !n.is_empty())
    }

    /// (CFA name, identifier) pairs in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.to_ident.iter().map(|(n, i)| (n.as_str(), i.as_str()))
    }

    pub fn len(&self) -> usize {
        self.to_ident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_ident.is_empty()
    }
}

/// A nondeterministic assignment of the model and the identifier carrying
/// its value in tool traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSite {
    pub ident: String,
    /// Transition of the main automaton.
    pub transition: usize,
    /// Part of the cycle-start input havoc.
    pub input: bool,
    pub ty: ScalarType,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedModel {
    pub format: ModelFormat,
    pub text: String,
    pub map: NameMap,
    /// Name of the emitted property.
    pub property_label: String,
    /// The inlined network the model was emitted from, for mapping traces.
    pub net: CfaNetwork,
    pub property: Property,
    pub sites: Vec<ChoiceSite>,
    /// Identifier of the location variable (SMV) or cycle counter (C).
    pub control: String,
}

/// One execution of an external tool.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ToolRun {
    pub command: Vec<String>,
    pub exit_code: Option<i32>,
    /// Standard output followed by standard error.
    pub output: String,
    pub wall_ms: u64,
    pub timed_out: bool,
}

pub(crate) fn inlined(p: &VerificationProblem) -> CfaNetwork {
    if p.net.callees.is_empty() {
        p.net.clone()
    } else {
        inline_callees(&p.net)
    }
}

/// Nondeterministic assignments in transition order.
pub(crate) fn choice_sites(net: &CfaNetwork, map: &mut NameMap, keywords: &[&str]) -> Vec<ChoiceSite> {
    let havoc = net.main.cycle_start;
    let mut out = Vec::new();
    for (ti, t) in net.main.transitions.iter().enumerate() {
        for a in &t.assignments {
            if let ExprKind::Nondet(d) = &a.value.kind {
                let input = Some(t.source) == havoc && t.kind == crate::cfa::TransKind::Havoc;
                let base = if input { "in_" } else { "nd_" };
                let mut cell = net.var(a.target.var).name.clone();
                if let Some(i) = a.target.index.as_ref().and_then(|i| i.as_const()) {
                    cell = alloc::format!("{cell}_{i}");
                }
                let ident = map.aux(&alloc::format!("{base}{cell}"), keywords);
                out.push(ChoiceSite { ident, transition: ti, input, ty: a.value.ty, domain: d.clone() });
            }
        }
    }
    out
}

/// Cells of a variable with their CFA names, (var, cell index, name).
pub(crate) fn cells(net: &CfaNetwork, v: VarId) -> Vec<(usize, String)> {
    let var = net.var(v);
    (0..var.ty.cells()).map(|c| (c, net.cell_name(v, c))).collect()
}

pub(crate) fn loc_name(l: LocId) -> String {
    alloc::format!("l{}", l.0)
}

pub(crate) fn property_label(p: &VerificationProblem, keywords: &[&str], map: &mut NameMap) -> String {
    map.aux(&alloc::format!("prop_{}", p.name), keywords)
}
