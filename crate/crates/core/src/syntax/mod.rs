//! Structured Text front end: lexing, parsing, resolution and assertion
//! directives (`//#ASSERT <expr>` or `//#ASSERT:<name> <expr>`).

pub mod ast;
pub mod diag;
pub mod lexer;
mod parser;
mod resolve;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use ast::*;
pub use diag::{Diagnostic, Diagnostics, Severity};
pub use lexer::{lex, tokenize, Keyword, Op, Punct, Token, TokenKind};
pub use resolve::{lookup_var, VarInfo};

use crate::types::{ScalarType, Span};
use parser::Parser;
use resolve::Resolver;

pub const ASSERT_PREFIX: &str = "//#ASSERT";

/// One input file. `file` is its index in the job's source list and is
/// recorded in every span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub path: String,
    pub text: String,
    pub file: u32,
}

impl SourceUnit {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceUnit { path: path.into(), text: text.into(), file: 0 }
    }

    pub fn with_file(mut self, file: u32) -> Self {
        self.file = file;
        self
    }
}

/// Parse and resolve a single unit.
pub fn parse(unit: &SourceUnit) -> Result<TypedAst, Diagnostics> {
    parse_sources(core::slice::from_ref(unit))
}

/// Parse several files into one namespace and resolve it.
pub fn parse_sources(units: &[SourceUnit]) -> Result<TypedAst, Diagnostics> {
    let mut ast = TypedAst::default();
    let mut next_block = 0u32;
    let mut diags = Vec::new();
    for unit in units {
        let (tokens, lex_diags) = lex(&unit.text, unit.file);
        if lex_diags.iter().any(Diagnostic::is_error) {
            diags.extend(lex_diags);
            continue;
        }
        let mut p = Parser::new(&tokens, unit.file, unit.text.len(), &mut next_block);
        match p.parse_units() {
            Ok(units) => ast.units.extend(units),
            Err(d) => diags.push(d),
        }
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    resolve::resolve(&mut ast)?;
    Ok(ast)
}

/// Parse `text` as a BOOL expression in the scope of `unit_name`.
/// `file`/`base` place the spans inside the originating file.
pub fn parse_expr_in_scope(
    ast: &TypedAst,
    unit_name: &str,
    text: &str,
    file: u32,
    base: u32,
    expected: Option<ScalarType>,
) -> Result<Expr, Diagnostics> {
    let unit = ast
        .unit(unit_name)
        .ok_or_else(|| Diagnostic::error(Span::new(file, base, base), format!("unknown unit `{unit_name}`")))?;
    let (tokens, lex_diags) = lexer::lex_at(text, file, base);
    if lex_diags.iter().any(Diagnostic::is_error) {
        return Err(Diagnostics(lex_diags));
    }
    let mut counter = 0u32;
    let mut p = Parser::new(&tokens, file, base as usize + text.len(), &mut counter);
    let mut e = p.expr()?;
    if !p.at_end() {
        return Err(p.trailing_error().into());
    }
    let t = Resolver::new(ast).standalone_expr(unit, &mut e, expected)?;
    if let Some(exp) = expected {
        if t != exp {
            return Err(Diagnostic::error(e.span, format!("type mismatch: expected {exp}, found {t}")).into());
        }
    }
    Ok(e)
}

/// Collect the assertion directives of one file. `tokens` must come from the
/// same file as (some of) the units in `ast`.
pub fn extract_assertions(tokens: &[Token<'_>], ast: &TypedAst) -> Result<Vec<AssertionDirective>, Diagnostics> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Comment) {
        let Some(rest) = tok.lexeme.strip_prefix(ASSERT_PREFIX) else {
            continue;
        };
        match directive(tok, rest, ast) {
            Ok(d) => out.push(d),
            Err(ds) => diags.extend(ds.0),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(Diagnostics(diags))
    }
}

fn directive(tok: &Token<'_>, rest: &str, ast: &TypedAst) -> Result<AssertionDirective, Diagnostics> {
    let span = tok.span;
    let mut offset = span.start + ASSERT_PREFIX.len() as u32;
    let (name, expr_part) = if let Some(named) = rest.strip_prefix(':') {
        let end = named.find(char::is_whitespace).unwrap_or(named.len());
        let name = &named[..end];
        if name.is_empty() {
            return Err(Diagnostic::error(span, "assertion name after `:` is empty").into());
        }
        offset += 1 + end as u32;
        (Some(name.to_string()), &named[end..])
    } else if rest.is_empty() || rest.starts_with(char::is_whitespace) {
        (None, rest)
    } else {
        return Err(Diagnostic::error(span, format!("malformed assertion directive `{}`", tok.lexeme)).into());
    };
    let leading = expr_part.len() - expr_part.trim_start().len();
    let text = expr_part.trim();
    offset += leading as u32;
    if text.is_empty() {
        return Err(Diagnostic::error(span, "assertion has no expression").into());
    }

    let at = span.start;
    let unit = ast
        .units
        .iter()
        .find(|u| u.body.span.file == span.file && u.body.span.start <= at && at <= u.body.span.end)
        .ok_or_else(|| Diagnostic::error(span, "assertion outside of a statement body"))?;
    let mut best: Option<&Block> = None;
    unit.body.walk_blocks(&mut |b| {
        if b.span.start <= at && at <= b.span.end && best.is_none_or(|cur| b.span.len() <= cur.span.len()) {
            best = Some(b);
        }
    });
    let block = best.unwrap_or(&unit.body);
    let index = block.stmts.iter().take_while(|s| s.span.start < at).count();

    let expr = parse_expr_in_scope(ast, &unit.name, text, span.file, offset, Some(ScalarType::Bool)).map_err(|ds| {
        let msgs: Vec<Diagnostic> =
            ds.0.into_iter().map(|d| Diagnostic { message: format!("in assertion: {}", d.message), ..d }).collect();
        Diagnostics(msgs)
    })?;
    Ok(AssertionDirective {
        name,
        expression_text: text.to_string(),
        expr,
        span,
        unit: unit.name.clone(),
        anchor: Anchor { block: block.id, index },
    })
}

/// Parsed program together with all of its assertion directives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub ast: TypedAst,
    pub assertions: Vec<AssertionDirective>,
}

/// Parse, resolve and extract assertions for a set of files.
pub fn load(units: &[SourceUnit]) -> Result<Program, Diagnostics> {
    let ast = parse_sources(units)?;
    let mut assertions = Vec::new();
    let mut diags = Vec::new();
    for unit in units {
        let tokens = tokenize(&unit.text, unit.file).map_err(Diagnostics)?;
        match extract_assertions(&tokens, &ast) {
            Ok(a) => assertions.extend(a),
            Err(d) => diags.extend(d.0),
        }
    }
    if !diags.is_empty() {
        return Err(Diagnostics(diags));
    }
    Ok(Program { ast, assertions })
}

#[cfg(test)]
mod tests;
