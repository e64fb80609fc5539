//! Requirements: assertion directives and instantiated patterns, each turned
//! into one verification problem with a single invariant.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cfa::{CfaNetwork, Expr, ExprDisplay, LocId, LocRole};
use crate::ops::BinOp;
use crate::types::{ScalarType, Span};

/// Where a property must hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckAt {
    EndOfCycle,
    /// Every location anchoring the assertion with this id.
    Anchor(u32),
}

/// An invariant: `expr` is TRUE whenever control is at one of the `at`
/// locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub expr: Expr,
    pub at: CheckAt,
}

impl Property {
    /// Locations of `net`'s main automaton where the property is checked,
    /// with the expression to check there (anchors carry their own copy,
    /// renamed by inlining).
    pub fn check_points<'n>(&'n self, net: &'n CfaNetwork) -> Vec<(LocId, &'n Expr)> {
        match self.at {
            CheckAt::EndOfCycle => alloc::vec![(net.main.end, &self.expr)],
            CheckAt::Anchor(id) => net
                .main
                .locations
                .values()
                .filter_map(|l| match &l.role {
                    LocRole::AssertionAnchor { assertion, expr } if *assertion == id => Some((l.id, expr)),
                    _ => None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PatternId {
    /// If α is true at the end of the PLC cycle, then β should always be
    /// true at the end of the same cycle.
    P1,
    /// β is always true at the end of the PLC cycle.
    P2,
    /// α and β are never true at the same time at the end of the PLC cycle.
    P3,
}

/// A requirement sentence with placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RequirementPattern {
    pub id: PatternId,
    pub text: &'static str,
    pub placeholders: &'static [&'static str],
}

pub const PATTERNS: [RequirementPattern; 3] = [
    RequirementPattern {
        id: PatternId::P1,
        text: "If {alpha} is true at the end of the PLC cycle, then {beta} should always be true at the end of the same cycle.",
        placeholders: &["alpha", "beta"],
    },
    RequirementPattern {
        id: PatternId::P2,
        text: "{beta} is always true at the end of the PLC cycle.",
        placeholders: &["beta"],
    },
    RequirementPattern {
        id: PatternId::P3,
        text: "{alpha} and {beta} are never true at the same time at the end of the PLC cycle.",
        placeholders: &["alpha", "beta"],
    },
];

impl PatternId {
    pub fn parse(s: &str) -> Option<PatternId> {
        match s {
            "P1" => Some(PatternId::P1),
            "P2" => Some(PatternId::P2),
            "P3" => Some(PatternId::P3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PatternId::P1 => "P1",
            PatternId::P2 => "P2",
            PatternId::P3 => "P3",
        }
    }

    pub fn pattern(self) -> &'static RequirementPattern {
        &PATTERNS[self as usize]
    }
}

impl RequirementPattern {
    /// Build the property from bound placeholders.
    pub fn template(&self, b: &BTreeMap<String, Expr>) -> Property {
        let expr = match self.id {
            // α → β
            PatternId::P1 => Expr::binary(BinOp::Or, b["alpha"].clone().not(), b["beta"].clone()),
            PatternId::P2 => b["beta"].clone(),
            PatternId::P3 => Expr::binary(BinOp::And, b["alpha"].clone(), b["beta"].clone()).not(),
        };
        Property { expr, at: CheckAt::EndOfCycle }
    }
}

/// Which requirement a problem came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Assertion { id: u32, label: String, text: String, span: Span, unit: String },
    Pattern { id: PatternId, sentence: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Engine,
    NuSmv,
    Cbmc,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<BackendKind> {
        match s {
            "engine" => Some(BackendKind::Engine),
            "nusmv" => Some(BackendKind::NuSmv),
            "cbmc" => Some(BackendKind::Cbmc),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Engine => "engine",
            BackendKind::NuSmv => "nusmv",
            BackendKind::Cbmc => "cbmc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionSwitches {
    pub fold: bool,
    pub unreach: bool,
    pub coi: bool,
    pub valueset: bool,
}

impl Default for ReductionSwitches {
    fn default() -> Self {
        ReductionSwitches { fold: true, unreach: true, coi: true, valueset: false }
    }
}

/// Per-problem verification settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemConfig {
    /// Maximum number of cycles explored.
    pub bound: u32,
    pub max_states: u64,
    pub backend: BackendKind,
    pub reductions: ReductionSwitches,
    pub iterative: bool,
    pub max_iters: u32,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            bound: 10,
            max_states: 10_000_000,
            backend: BackendKind::Engine,
            reductions: ReductionSwitches::default(),
            iterative: false,
            max_iters: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationProblem {
    /// Report name: the assertion label or the pattern id.
    pub name: String,
    pub net: CfaNetwork,
    pub property: Property,
    pub config: ProblemConfig,
    pub provenance: Provenance,
}

impl VerificationProblem {
    /// The same problem over another network (a reduced or inlined variant).
    pub fn with_net(&self, net: CfaNetwork) -> VerificationProblem {
        VerificationProblem { net, ..self.clone() }
    }

    /// Display text of the property.
    pub fn property_text(&self) -> String {
        match &self.provenance {
            Provenance::Assertion { text, .. } => text.clone(),
            Provenance::Pattern { .. } => {
                format!("{}", ExprDisplay::new(&self.property.expr, &self.net))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequirementError {
    #[error("the program contains no assertions")]
    NoAssertions,
    #[error("no assertion named `{0}`")]
    UnknownAssertion(String),
    #[error("unknown requirement pattern `{0}`")]
    UnknownPattern(String),
    #[error("pattern {pattern} needs a binding for `{placeholder}`")]
    Unbound { pattern: &'static str, placeholder: &'static str },
    #[error("binding for `{placeholder}` must be BOOL, found {found}")]
    NotBool { placeholder: String, found: ScalarType },
}

/// One problem per assertion directive, checked at the directive's anchor.
pub fn assertions_to_problems(net: &CfaNetwork) -> Result<Vec<VerificationProblem>, RequirementError> {
    if net.assertions.is_empty() {
        return Err(RequirementError::NoAssertions);
    }
    Ok(net
        .assertions
        .iter()
        .map(|a| VerificationProblem {
            name: a.label(),
            net: net.clone(),
            property: Property { expr: a.expr.clone(), at: CheckAt::Anchor(a.id) },
            config: ProblemConfig::default(),
            provenance: Provenance::Assertion {
                id: a.id,
                label: a.label(),
                text: a.text.clone(),
                span: a.span,
                unit: a.unit.clone(),
            },
        })
        .collect())
}

/// Problems for the assertions whose labels are listed in `select`, in the
/// order given.
pub fn select_assertions(net: &CfaNetwork, select: &[String]) -> Result<Vec<VerificationProblem>, RequirementError> {
    let all = assertions_to_problems(net)?;
    select
        .iter()
        .map(|s| {
            all.iter().find(|p| &p.name == s).cloned().ok_or_else(|| RequirementError::UnknownAssertion(s.clone()))
        })
        .collect()
}

/// Instantiate pattern `pattern` with `bindings` (placeholder name to a
/// BOOL expression over the entry scope of `net`). Placeholders may be
/// spelled `alpha`/`beta` or `α`/`β`.
pub fn instantiate_pattern(
    pattern: &str,
    bindings: &BTreeMap<String, Expr>,
    net: &CfaNetwork,
) -> Result<VerificationProblem, RequirementError> {
    let id = PatternId::parse(pattern).ok_or_else(|| RequirementError::UnknownPattern(pattern.into()))?;
    let pat = id.pattern();
    let mut bound = BTreeMap::new();
    for (k, e) in bindings {
        let key = match k.as_str() {
            "α" => "alpha",
            "β" => "beta",
            other => other,
        };
        if e.ty != ScalarType::Bool {
            return Err(RequirementError::NotBool { placeholder: k.clone(), found: e.ty });
        }
        bound.insert(String::from(key), e.clone());
    }
    let mut sentence = String::from(pat.text);
    for ph in pat.placeholders {
        let e = bound.get(*ph).ok_or(RequirementError::Unbound { pattern: id.name(), placeholder: ph })?;
        sentence = sentence.replace(&format!("{{{ph}}}"), &format!("{}", ExprDisplay::new(e, net)));
    }
    Ok(VerificationProblem {
        name: String::from(id.name()),
        net: net.clone(),
        property: pat.template(&bound),
        config: ProblemConfig::default(),
        provenance: Provenance::Pattern { id, sentence },
    })
}
