//! Syntax tree of the Structured Text subset.
//!
//! The parser fills in everything except expression types; resolution then
//! sets `Expr::ty` on every node and `Call::resolved` on every call.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ops::{BinOp, UnOp};
use crate::types::{ElementaryType, ScalarType, Span, Value};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypedAst {
    pub units: Vec<Unit>,
}

impl TypedAst {
    pub fn unit(&self, name: &str) -> Option<&Unit> {
        self.units.iter().find(|u| u.name == name)
    }

    /// Unit owning the block `id`.
    pub fn unit_of_block(&self, id: BlockId) -> Option<&Unit> {
        self.units.iter().find(|u| u.body.contains_block(id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitKind {
    Program,
    FunctionBlock,
    Function(ScalarType),
}

impl UnitKind {
    pub fn keyword(self) -> &'static str {
        match self {
            UnitKind::Program => "PROGRAM",
            UnitKind::FunctionBlock => "FUNCTION_BLOCK",
            UnitKind::Function(_) => "FUNCTION",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub name: String,
    pub kind: UnitKind,
    pub vars: Vec<VarDecl>,
    pub body: Block,
    pub span: Span,
}

impl Unit {
    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| v.section == VarSection::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &VarDecl> {
        self.vars.iter().filter(|v| v.section == VarSection::Output)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarSection {
    Input,
    Output,
    Local,
    Temp,
    Constant,
}

impl VarSection {
    pub fn keyword(self) -> &'static str {
        match self {
            VarSection::Input => "VAR_INPUT",
            VarSection::Output => "VAR_OUTPUT",
            VarSection::Local => "VAR",
            VarSection::Temp => "VAR_TEMP",
            VarSection::Constant => "VAR CONSTANT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclType {
    Elementary(ElementaryType),
    /// Instance of the named function block.
    Instance(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: DeclType,
    pub section: VarSection,
    /// Initial cell values; one entry for scalars, one per element for arrays.
    pub init: Option<Vec<Value>>,
    /// Implicit return variable of a FUNCTION.
    pub is_return: bool,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    pub stmts: Vec<Stmt>,
    /// From the first byte after the opening keyword to the closing keyword.
    pub span: Span,
}

impl Block {
    pub fn contains_block(&self, id: BlockId) -> bool {
        self.id == id || self.stmts.iter().any(|s| s.child_blocks().any(|b| b.contains_block(id)))
    }

    /// Depth-first walk over this block and all nested blocks.
    pub fn walk_blocks<'a>(&'a self, f: &mut dyn FnMut(&'a Block)) {
        f(self);
        for s in &self.stmts {
            for b in s.child_blocks() {
                b.walk_blocks(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Assign { target: LValue, value: Expr },
    If { branches: Vec<(Expr, Block)>, else_block: Option<Block> },
    Case { selector: Expr, arms: Vec<CaseArm>, else_block: Option<Block> },
    For { var: String, var_span: Span, from: Expr, to: Expr, step: i64, body: Block },
    While { cond: Expr, body: Block },
    Repeat { body: Block, until: Expr },
    Call(Call),
    Return,
    Exit,
    Empty,
}

impl Stmt {
    pub fn child_blocks(&self) -> impl Iterator<Item = &Block> {
        let mut out: Vec<&Block> = Vec::new();
        match &self.kind {
            StmtKind::If { branches, else_block } => {
                out.extend(branches.iter().map(|(_, b)| b));
                out.extend(else_block.iter());
            }
            StmtKind::Case { arms, else_block, .. } => {
                out.extend(arms.iter().map(|a| &a.body));
                out.extend(else_block.iter());
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } | StmtKind::Repeat { body, .. } => out.push(body),
            _ => {}
        }
        out.into_iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseArm {
    pub labels: Vec<CaseLabel>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    Value(i64),
    Range(i64, i64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LValue {
    /// Variable name, possibly qualified (`inst.q`).
    pub name: String,
    pub index: Option<Box<Expr>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallKind {
    Function(String),
    Instance { instance: String, block: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Call {
    pub callee: String,
    pub args: Vec<Arg>,
    pub span: Span,
    pub resolved: Option<CallKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Arg {
    Positional(Expr),
    Input { param: String, value: Expr },
    Output { param: String, target: LValue },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    /// Set by resolution; `None` only before it runs.
    pub ty: Option<ScalarType>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Var(String),
    Index { array: String, index: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call(Call),
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, ty: None, span }
    }

    /// Resolved type. Panics if called before resolution.
    pub fn scalar_type(&self) -> ScalarType {
        self.ty.expect("expression type resolved")
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Index { index, .. } => index.walk(f),
            ExprKind::Unary { operand, .. } => operand.walk(f),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.walk(f);
                rhs.walk(f);
            }
            ExprKind::Call(call) => {
                for a in &call.args {
                    match a {
                        Arg::Positional(e) | Arg::Input { value: e, .. } => e.walk(f),
                        Arg::Output { target, .. } => {
                            if let Some(i) = &target.index {
                                i.walk(f)
                            }
                        }
                    }
                }
            }
            _ => {}
        }
    }
}

/// Position of an assertion: before statement `index` of block `block`
/// (`index == stmts.len()` means after the last statement).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Anchor {
    pub block: BlockId,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionDirective {
    pub name: Option<String>,
    pub expression_text: String,
    pub expr: Expr,
    /// Span of the whole comment.
    pub span: Span,
    pub unit: String,
    pub anchor: Anchor,
}
