//! Recursive-descent parser producing an unresolved syntax tree.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::ast::*;
use super::diag::Diagnostic;
use super::lexer::{Keyword, Op, Punct, Token, TokenKind};
use crate::ops::{BinOp, UnOp};
use crate::types::{ElementaryType, ScalarType, Span, Value};

type PResult<T> = Result<T, Diagnostic>;

pub(crate) struct Parser<'t, 'a> {
    tokens: Vec<&'t Token<'a>>,
    pos: usize,
    file: u32,
    eof: u32,
    next_block: &'t mut u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Expected {
    Kw(Keyword),
    Op(Op),
    Punct(Punct),
    Ident,
    Literal,
    Expression,
    Statement,
    Type,
    Unit,
}

impl Expected {
    fn describe(self) -> String {
        match self {
            Expected::Kw(k) => k.text().to_string(),
            Expected::Op(o) => op_text(o).to_string(),
            Expected::Punct(p) => punct_text(p).to_string(),
            Expected::Ident => "identifier".into(),
            Expected::Literal => "literal".into(),
            Expected::Expression => "expression".into(),
            Expected::Statement => "statement".into(),
            Expected::Type => "type".into(),
            Expected::Unit => "PROGRAM, FUNCTION_BLOCK or FUNCTION".into(),
        }
    }
}

fn op_text(o: Op) -> &'static str {
    match o {
        Op::Assign => ":=",
        Op::Arrow => "=>",
        Op::Eq => "=",
        Op::Ne => "<>",
        Op::Lt => "<",
        Op::Le => "<=",
        Op::Gt => ">",
        Op::Ge => ">=",
        Op::Plus => "+",
        Op::Minus => "-",
        Op::Star => "*",
        Op::Slash => "/",
    }
}

fn punct_text(p: Punct) -> &'static str {
    match p {
        Punct::LParen => "(",
        Punct::RParen => ")",
        Punct::LBracket => "[",
        Punct::RBracket => "]",
        Punct::Comma => ",",
        Punct::Semi => ";",
        Punct::Colon => ":",
        Punct::DotDot => "..",
        Punct::Dot => ".",
    }
}

impl<'t, 'a> Parser<'t, 'a> {
    pub(crate) fn new(tokens: &'t [Token<'a>], file: u32, text_len: usize, next_block: &'t mut u32) -> Self {
        Parser {
            tokens: tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect(),
            pos: 0,
            file,
            eof: text_len as u32,
            next_block,
        }
    }

    fn peek(&self) -> Option<&'t Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn peek_kind_at(&self, off: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + off).map(|t| t.kind)
    }

    fn here(&self) -> Span {
        match self.peek() {
            Some(t) => t.span,
            None => Span::new(self.file, self.eof, self.eof),
        }
    }

    fn prev_end(&self) -> u32 {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn bump(&mut self) -> &'t Token<'a> {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn unexpected(&self, expected: &[Expected]) -> Diagnostic {
        let mut list: Vec<String> = expected.iter().map(|e| e.describe()).collect();
        list.dedup();
        let found = match self.peek() {
            Some(t) => format!("`{}`", t.lexeme),
            None => "end of input".into(),
        };
        let msg = if list.len() == 1 {
            format!("syntax error: expected {}, found {found}", list[0])
        } else {
            format!("syntax error: expected one of {}, found {found}", list.join(", "))
        };
        Diagnostic::error(self.here(), msg)
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek_kind() == Some(TokenKind::Keyword(kw))
    }

    fn at_punct(&self, p: Punct) -> bool {
        self.peek_kind() == Some(TokenKind::Punct(p))
    }

    fn at_op(&self, o: Op) -> bool {
        self.peek_kind() == Some(TokenKind::Op(o))
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[Expected::Kw(kw)]))
        }
    }

    fn expect_punct(&mut self, p: Punct) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[Expected::Punct(p)]))
        }
    }

    fn expect_op(&mut self, o: Op) -> PResult<Span> {
        if self.at_op(o) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&[Expected::Op(o)]))
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                self.pos += 1;
                Ok((t.lexeme.to_string(), t.span))
            }
            _ => Err(self.unexpected(&[Expected::Ident])),
        }
    }

    fn new_block(&mut self, stmts: Vec<Stmt>, start: u32, end: u32) -> Block {
        let id = BlockId(*self.next_block);
        *self.next_block += 1;
        Block { id, stmts, span: Span::new(self.file, start, end) }
    }

    pub(crate) fn parse_units(&mut self) -> PResult<Vec<Unit>> {
        let mut units = Vec::new();
        while self.peek().is_some() {
            units.push(self.unit()?);
        }
        Ok(units)
    }

    fn unit(&mut self) -> PResult<Unit> {
        let start = self.here();
        let (kind_kw, end_kw) = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Program)) => (Keyword::Program, Keyword::EndProgram),
            Some(TokenKind::Keyword(Keyword::FunctionBlock)) => (Keyword::FunctionBlock, Keyword::EndFunctionBlock),
            Some(TokenKind::Keyword(Keyword::Function)) => (Keyword::Function, Keyword::EndFunction),
            _ => return Err(self.unexpected(&[Expected::Unit])),
        };
        self.pos += 1;
        let (name, name_span) = self.expect_ident()?;
        let mut vars = Vec::new();
        let kind = match kind_kw {
            Keyword::Program => UnitKind::Program,
            Keyword::FunctionBlock => UnitKind::FunctionBlock,
            _ => {
                self.expect_punct(Punct::Colon)?;
                let ret = self.scalar_type()?;
                vars.push(VarDecl {
                    name: name.clone(),
                    ty: DeclType::Elementary(ElementaryType::Scalar(ret)),
                    section: VarSection::Output,
                    init: None,
                    is_return: true,
                    span: name_span,
                });
                UnitKind::Function(ret)
            }
        };
        loop {
            let section = match self.peek_kind() {
                Some(TokenKind::Keyword(Keyword::VarInput)) => VarSection::Input,
                Some(TokenKind::Keyword(Keyword::VarOutput)) => VarSection::Output,
                Some(TokenKind::Keyword(Keyword::VarTemp)) => VarSection::Temp,
                Some(TokenKind::Keyword(Keyword::Var)) => {
                    if self.peek_kind_at(1) == Some(TokenKind::Keyword(Keyword::Constant)) {
                        self.pos += 1;
                        VarSection::Constant
                    } else {
                        VarSection::Local
                    }
                }
                _ => break,
            };
            self.pos += 1;
            while !self.at_kw(Keyword::EndVar) {
                self.var_decls(section, &mut vars)?;
            }
            self.bump();
        }
        let body_start = self.prev_end();
        let stmts = self.statements(&[end_kw])?;
        let body_end = self.here().start;
        let end_span = self.expect_kw(end_kw)?;
        self.eat_punct(Punct::Semi);
        let body = self.new_block(stmts, body_start, body_end);
        Ok(Unit { name, kind, vars, body, span: start.join(end_span) })
    }

    fn var_decls(&mut self, section: VarSection, out: &mut Vec<VarDecl>) -> PResult<()> {
        let mut names = vec![self.expect_ident()?];
        while self.eat_punct(Punct::Comma) {
            names.push(self.expect_ident()?);
        }
        self.expect_punct(Punct::Colon)?;
        let ty = self.decl_type()?;
        let init = if self.at_op(Op::Assign) {
            self.bump();
            Some(self.initializer()?)
        } else {
            None
        };
        self.expect_punct(Punct::Semi)?;
        for (name, span) in names {
            out.push(VarDecl { name, ty: ty.clone(), section, init: init.clone(), is_return: false, span });
        }
        Ok(())
    }

    fn scalar_type(&mut self) -> PResult<ScalarType> {
        let t = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Bool)) => ScalarType::Bool,
            Some(TokenKind::Keyword(Keyword::Int)) => ScalarType::Int,
            Some(TokenKind::Keyword(Keyword::Dint)) => ScalarType::Dint,
            _ => return Err(self.unexpected(&[Expected::Type])),
        };
        self.pos += 1;
        Ok(t)
    }

    fn decl_type(&mut self) -> PResult<DeclType> {
        match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Array)) => {
                self.bump();
                self.expect_punct(Punct::LBracket)?;
                let lo_span = self.here();
                let lo = self.signed_int()?;
                self.expect_punct(Punct::DotDot)?;
                let hi = self.signed_int()?;
                self.expect_punct(Punct::RBracket)?;
                self.expect_kw(Keyword::Of)?;
                if self.at_kw(Keyword::Array) {
                    return Err(Diagnostic::error(self.here(), "arrays of arrays are not supported"));
                }
                let elem = self.scalar_type()?;
                if lo > hi {
                    return Err(Diagnostic::error(lo_span, format!("empty array range {lo}..{hi}")));
                }
                Ok(DeclType::Elementary(ElementaryType::Array { lo, hi, elem }))
            }
            Some(TokenKind::Ident) => {
                let (name, _) = self.expect_ident()?;
                Ok(DeclType::Instance(name))
            }
            _ => Ok(DeclType::Elementary(ElementaryType::Scalar(self.scalar_type()?))),
        }
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = if self.at_op(Op::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.peek_kind() {
            Some(TokenKind::Int(v)) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.unexpected(&[Expected::Literal])),
        }
    }

    fn literal_value(&mut self) -> PResult<Value> {
        match self.peek_kind() {
            Some(TokenKind::Bool(b)) => {
                self.bump();
                Ok(Value::Bool(b))
            }
            _ => Ok(Value::Int(self.signed_int()?)),
        }
    }

    fn initializer(&mut self) -> PResult<Vec<Value>> {
        if self.eat_punct(Punct::LBracket) {
            let mut vals = vec![self.literal_value()?];
            while self.eat_punct(Punct::Comma) {
                vals.push(self.literal_value()?);
            }
            self.expect_punct(Punct::RBracket)?;
            Ok(vals)
        } else {
            Ok(vec![self.literal_value()?])
        }
    }

    fn at_any_kw(&self, kws: &[Keyword]) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Keyword(k)) if kws.contains(&k))
    }

    /// Statements up to (not including) one of the `terminators`.
    fn statements(&mut self, terminators: &[Keyword]) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        loop {
            if self.at_any_kw(terminators) {
                return Ok(out);
            }
            if self.peek().is_none() {
                let exp: Vec<Expected> = terminators.iter().map(|k| Expected::Kw(*k)).collect();
                return Err(self.unexpected(&exp));
            }
            out.push(self.statement(terminators)?);
        }
    }

    fn statement(&mut self, terminators: &[Keyword]) -> PResult<Stmt> {
        let start = self.here();
        let kind = match self.peek_kind() {
            Some(TokenKind::Punct(Punct::Semi)) => {
                self.bump();
                return Ok(Stmt { kind: StmtKind::Empty, span: start });
            }
            Some(TokenKind::Keyword(Keyword::If)) => self.if_stmt()?,
            Some(TokenKind::Keyword(Keyword::Case)) => self.case_stmt()?,
            Some(TokenKind::Keyword(Keyword::For)) => self.for_stmt()?,
            Some(TokenKind::Keyword(Keyword::While)) => self.while_stmt()?,
            Some(TokenKind::Keyword(Keyword::Repeat)) => self.repeat_stmt()?,
            Some(TokenKind::Keyword(Keyword::Return)) => {
                self.bump();
                self.expect_punct(Punct::Semi)?;
                StmtKind::Return
            }
            Some(TokenKind::Keyword(Keyword::Exit)) => {
                self.bump();
                self.expect_punct(Punct::Semi)?;
                StmtKind::Exit
            }
            Some(TokenKind::Ident) => self.assign_or_call()?,
            _ => {
                let mut exp = vec![Expected::Statement];
                exp.extend(terminators.iter().map(|k| Expected::Kw(*k)));
                return Err(self.unexpected(&exp));
            }
        };
        let end = self.prev_end();
        Ok(Stmt { kind, span: Span::new(self.file, start.start, end) })
    }

    fn qualified_name(&mut self) -> PResult<(String, Span)> {
        let (mut name, mut span) = self.expect_ident()?;
        while self.at_punct(Punct::Dot) {
            self.bump();
            let (part, s) = self.expect_ident()?;
            name.push('.');
            name.push_str(&part);
            span = span.join(s);
        }
        Ok((name, span))
    }

    fn assign_or_call(&mut self) -> PResult<StmtKind> {
        let (name, name_span) = self.qualified_name()?;
        if self.at_punct(Punct::LParen) {
            let call = self.call_args(name, name_span)?;
            self.expect_punct(Punct::Semi)?;
            return Ok(StmtKind::Call(call));
        }
        let target = self.lvalue_rest(name, name_span)?;
        if !self.at_op(Op::Assign) {
            let mut exp = vec![Expected::Op(Op::Assign)];
            if target.index.is_none() {
                exp.push(Expected::Punct(Punct::LParen));
                exp.push(Expected::Punct(Punct::LBracket));
            }
            return Err(self.unexpected(&exp));
        }
        self.bump();
        let value = self.expr()?;
        self.expect_punct(Punct::Semi)?;
        Ok(StmtKind::Assign { target, value })
    }

    fn lvalue_rest(&mut self, name: String, name_span: Span) -> PResult<LValue> {
        if self.eat_punct(Punct::LBracket) {
            let index = self.expr()?;
            let end = self.expect_punct(Punct::RBracket)?;
            Ok(LValue { name, index: Some(Box::new(index)), span: name_span.join(end) })
        } else {
            Ok(LValue { name, index: None, span: name_span })
        }
    }

    fn lvalue(&mut self) -> PResult<LValue> {
        let (name, span) = self.qualified_name()?;
        self.lvalue_rest(name, span)
    }

    fn call_args(&mut self, callee: String, callee_span: Span) -> PResult<Call> {
        self.expect_punct(Punct::LParen)?;
        let mut args = Vec::new();
        if !self.at_punct(Punct::RParen) {
            loop {
                let is_named = self.peek_kind() == Some(TokenKind::Ident)
                    && matches!(self.peek_kind_at(1), Some(TokenKind::Op(Op::Assign | Op::Arrow)));
                if is_named {
                    let (param, _) = self.expect_ident()?;
                    if self.at_op(Op::Assign) {
                        self.bump();
                        args.push(Arg::Input { param, value: self.expr()? });
                    } else {
                        self.bump();
                        args.push(Arg::Output { param, target: self.lvalue()? });
                    }
                } else {
                    args.push(Arg::Positional(self.expr()?));
                }
                if !self.eat_punct(Punct::Comma) {
                    break;
                }
            }
        }
        let end = self.expect_punct(Punct::RParen)?;
        Ok(Call { callee, args, span: callee_span.join(end), resolved: None })
    }

    fn block_until(&mut self, terminators: &[Keyword]) -> PResult<Block> {
        let start = self.prev_end();
        let stmts = self.statements(terminators)?;
        let end = self.here().start;
        Ok(self.new_block(stmts, start, end))
    }

    fn end_stmt(&mut self, kw: Keyword) -> PResult<()> {
        self.expect_kw(kw)?;
        self.eat_punct(Punct::Semi);
        Ok(())
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::If)?;
        let mut branches = Vec::new();
        let term = [Keyword::Elsif, Keyword::Else, Keyword::EndIf];
        let cond = self.expr()?;
        self.expect_kw(Keyword::Then)?;
        branches.push((cond, self.block_until(&term)?));
        let mut else_block = None;
        loop {
            if self.eat_kw(Keyword::Elsif) {
                let cond = self.expr()?;
                self.expect_kw(Keyword::Then)?;
                branches.push((cond, self.block_until(&term)?));
            } else if self.eat_kw(Keyword::Else) {
                else_block = Some(self.block_until(&[Keyword::EndIf])?);
                break;
            } else {
                break;
            }
        }
        self.end_stmt(Keyword::EndIf)?;
        Ok(StmtKind::If { branches, else_block })
    }

    fn at_case_label(&self) -> bool {
        match self.peek_kind() {
            Some(TokenKind::Int(_)) => true,
            Some(TokenKind::Op(Op::Minus)) => {
                matches!(self.peek_kind_at(1), Some(TokenKind::Int(_)))
            }
            _ => false,
        }
    }

    fn case_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::Case)?;
        let selector = self.expr()?;
        self.expect_kw(Keyword::Of)?;
        let mut arms = Vec::new();
        let mut else_block = None;
        loop {
            if self.at_case_label() {
                let arm_start = self.here();
                let mut labels = Vec::new();
                loop {
                    let lo = self.signed_int()?;
                    if self.eat_punct(Punct::DotDot) {
                        let hi = self.signed_int()?;
                        labels.push(CaseLabel::Range(lo, hi));
                    } else {
                        labels.push(CaseLabel::Value(lo));
                    }
                    if !self.eat_punct(Punct::Comma) {
                        break;
                    }
                }
                self.expect_punct(Punct::Colon)?;
                let start = self.prev_end();
                let mut stmts = Vec::new();
                while !self.at_case_label() && !self.at_any_kw(&[Keyword::Else, Keyword::EndCase]) {
                    if self.peek().is_none() {
                        return Err(self.unexpected(&[Expected::Kw(Keyword::EndCase)]));
                    }
                    stmts.push(self.statement(&[Keyword::Else, Keyword::EndCase])?);
                }
                let end = self.here().start;
                let body = self.new_block(stmts, start, end);
                let span = Span::new(self.file, arm_start.start, end);
                arms.push(CaseArm { labels, body, span });
            } else if self.eat_kw(Keyword::Else) {
                else_block = Some(self.block_until(&[Keyword::EndCase])?);
                break;
            } else if self.at_kw(Keyword::EndCase) {
                break;
            } else {
                return Err(self.unexpected(&[
                    Expected::Literal,
                    Expected::Kw(Keyword::Else),
                    Expected::Kw(Keyword::EndCase),
                ]));
            }
        }
        self.end_stmt(Keyword::EndCase)?;
        Ok(StmtKind::Case { selector, arms, else_block })
    }

    fn for_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::For)?;
        let (var, var_span) = self.expect_ident()?;
        self.expect_op(Op::Assign)?;
        let from = self.expr()?;
        self.expect_kw(Keyword::To)?;
        let to = self.expr()?;
        let step = if self.eat_kw(Keyword::By) {
            let span = self.here();
            let s = self.signed_int()?;
            if s == 0 {
                return Err(Diagnostic::error(span, "FOR step must be non-zero"));
            }
            s
        } else {
            1
        };
        self.expect_kw(Keyword::Do)?;
        let body = self.block_until(&[Keyword::EndFor])?;
        self.end_stmt(Keyword::EndFor)?;
        Ok(StmtKind::For { var, var_span, from, to, step, body })
    }

    fn while_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::While)?;
        let cond = self.expr()?;
        self.expect_kw(Keyword::Do)?;
        let body = self.block_until(&[Keyword::EndWhile])?;
        self.end_stmt(Keyword::EndWhile)?;
        Ok(StmtKind::While { cond, body })
    }

    fn repeat_stmt(&mut self) -> PResult<StmtKind> {
        self.expect_kw(Keyword::Repeat)?;
        let body = self.block_until(&[Keyword::Until])?;
        self.expect_kw(Keyword::Until)?;
        let until = self.expr()?;
        self.end_stmt(Keyword::EndRepeat)?;
        Ok(StmtKind::Repeat { body, until })
    }

    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    pub(crate) fn at_end(&self) -> bool {
        self.peek().is_none()
    }

    pub(crate) fn trailing_error(&self) -> Diagnostic {
        let found = self.peek().map(|t| t.lexeme).unwrap_or("");
        Diagnostic::error(self.here(), format!("syntax error: unexpected `{found}` after expression"))
    }

    fn peek_binop(&self) -> Option<BinOp> {
        Some(match self.peek_kind()? {
            TokenKind::Keyword(Keyword::Or) => BinOp::Or,
            TokenKind::Keyword(Keyword::Xor) => BinOp::Xor,
            TokenKind::Keyword(Keyword::And) => BinOp::And,
            TokenKind::Keyword(Keyword::Mod) => BinOp::Mod,
            TokenKind::Op(Op::Eq) => BinOp::Eq,
            TokenKind::Op(Op::Ne) => BinOp::Ne,
            TokenKind::Op(Op::Lt) => BinOp::Lt,
            TokenKind::Op(Op::Le) => BinOp::Le,
            TokenKind::Op(Op::Gt) => BinOp::Gt,
            TokenKind::Op(Op::Ge) => BinOp::Ge,
            TokenKind::Op(Op::Plus) => BinOp::Add,
            TokenKind::Op(Op::Minus) => BinOp::Sub,
            TokenKind::Op(Op::Star) => BinOp::Mul,
            TokenKind::Op(Op::Slash) => BinOp::Div,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(prec + 1)?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.here();
        if self.eat_kw(Keyword::Not) {
            let operand = self.unary()?;
            let span = start.join(operand.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnOp::Not, operand: Box::new(operand) }, span));
        }
        if self.at_op(Op::Minus) {
            self.bump();
            // negative literals are folded so that -32768 is a valid INT
            if let Some(TokenKind::Int(v)) = self.peek_kind() {
                let t = self.bump();
                return Ok(Expr::new(ExprKind::Int(-v), start.join(t.span)));
            }
            let operand = self.unary()?;
            let span = start.join(operand.span);
            return Ok(Expr::new(ExprKind::Unary { op: UnOp::Neg, operand: Box::new(operand) }, span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.here();
        match self.peek_kind() {
            Some(TokenKind::Int(v)) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), start))
            }
            Some(TokenKind::Bool(b)) => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(b), start))
            }
            Some(TokenKind::Punct(Punct::LParen)) => {
                self.bump();
                let mut e = self.expr()?;
                let end = self.expect_punct(Punct::RParen)?;
                e.span = start.join(end);
                Ok(e)
            }
            Some(TokenKind::Ident) => {
                let (name, span) = self.qualified_name()?;
                if self.at_punct(Punct::LParen) {
                    let call = self.call_args(name, span)?;
                    let span = call.span;
                    Ok(Expr::new(ExprKind::Call(call), span))
                } else if self.eat_punct(Punct::LBracket) {
                    let index = self.expr()?;
                    let end = self.expect_punct(Punct::RBracket)?;
                    Ok(Expr::new(ExprKind::Index { array: name, index: Box::new(index) }, span.join(end)))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), span))
                }
            }
            _ => Err(self.unexpected(&[Expected::Expression])),
        }
    }
}
