//! Tokenizer for the Structured Text subset.
//!
//! Comments are kept as tokens because assertion directives live in them.
//! Malformed input yields `TokenKind::Error` tokens plus a diagnostic so the
//! token stream always covers the whole input.

use alloc::format;
use alloc::vec::Vec;

use super::diag::Diagnostic;
use crate::types::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Program,
    EndProgram,
    FunctionBlock,
    EndFunctionBlock,
    Function,
    EndFunction,
    Var,
    VarInput,
    VarOutput,
    VarTemp,
    Constant,
    EndVar,
    If,
    Then,
    Elsif,
    Else,
    EndIf,
    Case,
    Of,
    EndCase,
    For,
    To,
    By,
    Do,
    EndFor,
    While,
    EndWhile,
    Repeat,
    Until,
    EndRepeat,
    Return,
    Exit,
    And,
    Or,
    Xor,
    Not,
    Mod,
    Array,
    Bool,
    Int,
    Dint,
}

const KEYWORDS: &[(&str, Keyword)] = &[
    ("PROGRAM", Keyword::Program),
    ("END_PROGRAM", Keyword::EndProgram),
    ("FUNCTION_BLOCK", Keyword::FunctionBlock),
    ("END_FUNCTION_BLOCK", Keyword::EndFunctionBlock),
    ("FUNCTION", Keyword::Function),
    ("END_FUNCTION", Keyword::EndFunction),
    ("VAR", Keyword::Var),
    ("VAR_INPUT", Keyword::VarInput),
    ("VAR_OUTPUT", Keyword::VarOutput),
    ("VAR_TEMP", Keyword::VarTemp),
    ("CONSTANT", Keyword::Constant),
    ("END_VAR", Keyword::EndVar),
    ("IF", Keyword::If),
    ("THEN", Keyword::Then),
    ("ELSIF", Keyword::Elsif),
    ("ELSE", Keyword::Else),
    ("END_IF", Keyword::EndIf),
    ("CASE", Keyword::Case),
    ("OF", Keyword::Of),
    ("END_CASE", Keyword::EndCase),
    ("FOR", Keyword::For),
    ("TO", Keyword::To),
    ("BY", Keyword::By),
    ("DO", Keyword::Do),
    ("END_FOR", Keyword::EndFor),
    ("WHILE", Keyword::While),
    ("END_WHILE", Keyword::EndWhile),
    ("REPEAT", Keyword::Repeat),
    ("UNTIL", Keyword::Until),
    ("END_REPEAT", Keyword::EndRepeat),
    ("RETURN", Keyword::Return),
    ("EXIT", Keyword::Exit),
    ("AND", Keyword::And),
    ("OR", Keyword::Or),
    ("XOR", Keyword::Xor),
    ("NOT", Keyword::Not),
    ("MOD", Keyword::Mod),
    ("ARRAY", Keyword::Array),
    ("BOOL", Keyword::Bool),
    ("INT", Keyword::Int),
    ("DINT", Keyword::Dint),
];

impl Keyword {
    pub fn text(self) -> &'static str {
        KEYWORDS.iter().find(|(_, k)| *k == self).map(|(s, _)| *s).unwrap_or("?")
    }

    fn lookup(word: &str) -> Option<Keyword> {
        KEYWORDS.iter().find(|(s, _)| s.eq_ignore_ascii_case(word)).map(|(_, k)| *k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Assign,
    Arrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    DotDot,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Int(i64),
    Bool(bool),
    Op(Op),
    Punct(Punct),
    Comment,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub lexeme: &'a str,
    pub span: Span,
}

/// Lex `text`, always covering every non-whitespace byte with a token.
pub fn lex(text: &str, file: u32) -> (Vec<Token<'_>>, Vec<Diagnostic>) {
    lex_at(text, file, 0)
}

/// Like [`lex`] for a fragment starting at byte `base` of its file.
pub fn lex_at(text: &str, file: u32, base: u32) -> (Vec<Token<'_>>, Vec<Diagnostic>) {
    Lexer { text, bytes: text.as_bytes(), pos: 0, file, base, tokens: Vec::new(), diags: Vec::new() }.run()
}

/// Strict tokenization: any lexical error fails the whole unit.
pub fn tokenize(text: &str, file: u32) -> Result<Vec<Token<'_>>, Vec<Diagnostic>> {
    let (tokens, diags) = lex(text, file);
    if diags.iter().any(Diagnostic::is_error) {
        Err(diags)
    } else {
        Ok(tokens)
    }
}

struct Lexer<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    file: u32,
    base: u32,
    tokens: Vec<Token<'a>>,
    diags: Vec<Diagnostic>,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> (Vec<Token<'a>>, Vec<Diagnostic>) {
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_whitespace() {
                self.pos += 1;
                continue;
            }
            let start = self.pos;
            let kind = self.next_kind(c);
            self.push(kind, start);
        }
        (self.tokens, self.diags)
    }

    fn span(&self, start: usize) -> Span {
        Span::new(self.file, self.base + start as u32, self.base + self.pos as u32)
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let span = self.span(start);
        self.tokens.push(Token { kind, lexeme: &self.text[start..self.pos], span });
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn error(&mut self, start: usize, msg: alloc::string::String) -> TokenKind {
        let span = self.span(start);
        self.diags.push(Diagnostic::error(span, msg));
        TokenKind::Error
    }

    fn next_kind(&mut self, c: u8) -> TokenKind {
        let start = self.pos;
        match c {
            b'/' if self.peek(1) == Some(b'/') => {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                // keep a trailing '\r' out of the lexeme
                if self.pos > start && self.bytes[self.pos - 1] == b'\r' {
                    self.pos -= 1;
                }
                TokenKind::Comment
            }
            b'(' if self.peek(1) == Some(b'*') => self.block_comment(start, b')'),
            b'/' if self.peek(1) == Some(b'*') => self.block_comment(start, b'/'),
            b'0'..=b'9' => self.number(start),
            c if c == b'_' || c.is_ascii_alphabetic() => {
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos] == b'_' || self.bytes[self.pos].is_ascii_alphanumeric())
                {
                    self.pos += 1;
                }
                let word = &self.text[start..self.pos];
                if word.eq_ignore_ascii_case("TRUE") {
                    TokenKind::Bool(true)
                } else if word.eq_ignore_ascii_case("FALSE") {
                    TokenKind::Bool(false)
                } else if let Some(kw) = Keyword::lookup(word) {
                    TokenKind::Keyword(kw)
                } else {
                    TokenKind::Ident
                }
            }
            _ => self.symbol(start, c),
        }
    }

    fn block_comment(&mut self, start: usize, close: u8) -> TokenKind {
        self.pos += 2;
        loop {
            if self.pos + 1 >= self.bytes.len() {
                self.pos = self.bytes.len();
                return self.error(start, "unterminated block comment".into());
            }
            if self.bytes[self.pos] == b'*' && self.bytes[self.pos + 1] == close {
                self.pos += 2;
                return TokenKind::Comment;
            }
            self.pos += 1;
        }
    }

    fn number(&mut self, start: usize) -> TokenKind {
        let alnum = |b: u8| b == b'_' || b.is_ascii_alphanumeric();
        while matches!(self.peek(0), Some(b'0'..=b'9' | b'_')) {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'#') {
            let base_text = &self.text[start..self.pos];
            self.pos += 1;
            let digits_start = self.pos;
            while self.pos < self.bytes.len() && alnum(self.bytes[self.pos]) {
                self.pos += 1;
            }
            let digits = &self.text[digits_start..self.pos];
            if base_text != "16" {
                return self.error(start, format!("unsupported integer base `{base_text}#`"));
            }
            return match parse_digits(digits, 16) {
                Some(v) => TokenKind::Int(v),
                None => {
                    let lexeme = &self.text[start..self.pos];
                    self.error(start, format!("malformed hexadecimal literal `{lexeme}`"))
                }
            };
        }
        // trailing letters glued to digits: `12ab`
        if self.pos < self.bytes.len() && alnum(self.bytes[self.pos]) {
            while self.pos < self.bytes.len() && alnum(self.bytes[self.pos]) {
                self.pos += 1;
            }
            let lexeme = &self.text[start..self.pos];
            return self.error(start, format!("malformed integer literal `{lexeme}`"));
        }
        match parse_digits(&self.text[start..self.pos], 10) {
            Some(v) => TokenKind::Int(v),
            None => {
                let lexeme = &self.text[start..self.pos];
                self.error(start, format!("integer literal `{lexeme}` out of range"))
            }
        }
    }

    fn symbol(&mut self, start: usize, c: u8) -> TokenKind {
        let two = self.peek(1);
        let (kind, len) = match (c, two) {
            (b':', Some(b'=')) => (TokenKind::Op(Op::Assign), 2),
            (b'=', Some(b'>')) => (TokenKind::Op(Op::Arrow), 2),
            (b'<', Some(b'>')) => (TokenKind::Op(Op::Ne), 2),
            (b'<', Some(b'=')) => (TokenKind::Op(Op::Le), 2),
            (b'>', Some(b'=')) => (TokenKind::Op(Op::Ge), 2),
            (b'.', Some(b'.')) => (TokenKind::Punct(Punct::DotDot), 2),
            (b'=', _) => (TokenKind::Op(Op::Eq), 1),
            (b'<', _) => (TokenKind::Op(Op::Lt), 1),
            (b'>', _) => (TokenKind::Op(Op::Gt), 1),
            (b'+', _) => (TokenKind::Op(Op::Plus), 1),
            (b'-', _) => (TokenKind::Op(Op::Minus), 1),
            (b'*', _) => (TokenKind::Op(Op::Star), 1),
            (b'/', _) => (TokenKind::Op(Op::Slash), 1),
            (b'(', _) => (TokenKind::Punct(Punct::LParen), 1),
            (b')', _) => (TokenKind::Punct(Punct::RParen), 1),
            (b'[', _) => (TokenKind::Punct(Punct::LBracket), 1),
            (b']', _) => (TokenKind::Punct(Punct::RBracket), 1),
            (b',', _) => (TokenKind::Punct(Punct::Comma), 1),
            (b';', _) => (TokenKind::Punct(Punct::Semi), 1),
            (b':', _) => (TokenKind::Punct(Punct::Colon), 1),
            (b'.', _) => (TokenKind::Punct(Punct::Dot), 1),
            _ => {
                // consume one whole UTF-8 character
                let ch = self.text[start..].chars().next().map(char::len_utf8).unwrap_or(1);
                self.pos += ch;
                let lexeme = &self.text[start..self.pos];
                return self.error(start, format!("unexpected character `{lexeme}`"));
            }
        };
        self.pos += len;
        kind
    }
}

fn parse_digits(digits: &str, radix: u32) -> Option<i64> {
    let mut value: i64 = 0;
    let mut seen = false;
    let mut last_underscore = true;
    for ch in digits.chars() {
        if ch == '_' {
            if last_underscore {
                return None;
            }
            last_underscore = true;
            continue;
        }
        let d = ch.to_digit(radix)? as i64;
        value = value.checked_mul(radix as i64)?.checked_add(d)?;
        seen = true;
        last_underscore = false;
    }
    if !seen || last_underscore {
        return None;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src, 0).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn simple_assignment() {
        assert_eq!(
            kinds("x := 1;"),
            alloc::vec![TokenKind::Ident, TokenKind::Op(Op::Assign), TokenKind::Int(1), TokenKind::Punct(Punct::Semi)]
        );
    }

    #[test]
    fn assertion_comment_is_one_token() {
        let toks = tokenize("//#ASSERT On<>Off", 0).unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::Comment);
        assert_eq!(toks[0].lexeme, "//#ASSERT On<>Off");
    }

    #[test]
    fn malformed_hex_is_a_diagnostic() {
        let errs = tokenize("16#ZZ", 0).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("16#ZZ"));
    }

    #[test]
    fn hex_and_separators() {
        assert_eq!(kinds("16#FF 1_000"), alloc::vec![TokenKind::Int(255), TokenKind::Int(1000)]);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(
            kinds("if If IF true"),
            alloc::vec![
                TokenKind::Keyword(Keyword::If),
                TokenKind::Keyword(Keyword::If),
                TokenKind::Keyword(Keyword::If),
                TokenKind::Bool(true)
            ]
        );
    }

    #[test]
    fn unterminated_block_comment() {
        let errs = tokenize("x := 1; (* never closed", 0).unwrap_err();
        assert!(errs[0].message.contains("unterminated"));
    }

    #[test]
    fn unknown_character_does_not_panic() {
        let (toks, diags) = lex("a := §;", 0);
        assert_eq!(diags.len(), 1);
        assert!(toks.iter().any(|t| t.kind == TokenKind::Error && t.lexeme == "§"));
    }
}
