//! Lexer for the surface language.
//!
//! Tokens carry the 1-based line/column of their first character. `#`
//! starts a comment running to the end of the line. The edge brackets of a
//! `connect` statement (`-[` and `]->`) are single tokens and only form
//! when the characters are adjacent, so `a - [1]` still lexes as a minus
//! followed by a list literal.

use super::Diagnostic;
use std::fmt;

/// A 1-based source position counted in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Pos {
        Pos { line, col }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// One lexical token.
#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    // Keywords.
    Node,
    Edge,
    Walker,
    Object,
    Has,
    Can,
    With,
    Entry,
    Exit,
    Spawn,
    Visit,
    Skip,
    Disengage,
    Del,
    Report,
    Let,
    If,
    Else,
    For,
    In,
    Connect,
    SelfKw,
    Here,
    Visitor,
    Path,
    True,
    False,
    Null,
    And,
    Or,
    Not,
    // Literals and names.
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    // Punctuation.
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Dot,
    Assign,
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
    Percent,
    /// `->`
    Arrow,
    /// `-[` opening the edge part of a `connect`.
    EdgeOpen,
    /// `]->` closing the edge part of a `connect`.
    EdgeClose,
    Eof,
}

impl Tok {
    /// Human-readable description used in "expected ..." diagnostics.
    pub fn describe(&self) -> String {
        let fixed = match self {
            Tok::Node => "`node`",
            Tok::Edge => "`edge`",
            Tok::Walker => "`walker`",
            Tok::Object => "`object`",
            Tok::Has => "`has`",
            Tok::Can => "`can`",
            Tok::With => "`with`",
            Tok::Entry => "`entry`",
            Tok::Exit => "`exit`",
            Tok::Spawn => "`spawn`",
            Tok::Visit => "`visit`",
            Tok::Skip => "`skip`",
            Tok::Disengage => "`disengage`",
            Tok::Del => "`del`",
            Tok::Report => "`report`",
            Tok::Let => "`let`",
            Tok::If => "`if`",
            Tok::Else => "`else`",
            Tok::For => "`for`",
            Tok::In => "`in`",
            Tok::Connect => "`connect`",
            Tok::SelfKw => "`self`",
            Tok::Here => "`here`",
            Tok::Visitor => "`visitor`",
            Tok::Path => "`path`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Null => "`null`",
            Tok::And => "`and`",
            Tok::Or => "`or`",
            Tok::Not => "`not`",
            Tok::Ident(_) => "identifier",
            Tok::Int(_) => "integer literal",
            Tok::Float(_) => "float literal",
            Tok::Str(_) => "string literal",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBracket => "`[`",
            Tok::RBracket => "`]`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Colon => "`:`",
            Tok::Dot => "`.`",
            Tok::Assign => "`=`",
            Tok::Eq => "`==`",
            Tok::Ne => "`!=`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Percent => "`%`",
            Tok::Arrow => "`->`",
            Tok::EdgeOpen => "`-[`",
            Tok::EdgeClose => "`]->`",
            Tok::Eof => "end of input",
        };
        fixed.to_string()
    }
}

/// A token plus the position of its first character.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "node" => Tok::Node,
        "edge" => Tok::Edge,
        "walker" => Tok::Walker,
        "object" => Tok::Object,
        "has" => Tok::Has,
        "can" => Tok::Can,
        "with" => Tok::With,
        "entry" => Tok::Entry,
        "exit" => Tok::Exit,
        "spawn" => Tok::Spawn,
        "visit" => Tok::Visit,
        "skip" => Tok::Skip,
        "disengage" => Tok::Disengage,
        "del" => Tok::Del,
        "report" => Tok::Report,
        "let" => Tok::Let,
        "if" => Tok::If,
        "else" => Tok::Else,
        "for" => Tok::For,
        "in" => Tok::In,
        "connect" => Tok::Connect,
        "self" => Tok::SelfKw,
        "here" => Tok::Here,
        "visitor" => Tok::Visitor,
        "path" => Tok::Path,
        "true" => Tok::True,
        "false" => Tok::False,
        "null" => Tok::Null,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        _ => return None,
    })
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            chars: src.chars().peekable(),
            pos: Pos::new(1, 1),
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn eat(&mut self, want: char) -> bool {
        if self.peek() == Some(want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn number(&mut self, start: Pos, first: char) -> Result<Token, Diagnostic> {
        let mut text = String::from(first);
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // A dot only continues the number when a digit follows, so member
        // access on an integer-valued expression stays unambiguous.
        let mut is_float = false;
        if self.peek() == Some('.') {
            let mut ahead = self.chars.clone();
            ahead.next();
            if ahead.peek().is_some_and(|c| c.is_ascii_digit()) {
                is_float = true;
                text.push('.');
                self.bump();
                while let Some(c) = self.peek() {
                    if c.is_ascii_digit() {
                        text.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
        }
        let tok = if is_float {
            match text.parse::<f64>() {
                Ok(x) => Tok::Float(x),
                Err(_) => {
                    return Err(Diagnostic::error(start, format!("invalid float literal `{text}`")))
                }
            }
        } else {
            match text.parse::<i64>() {
                Ok(n) => Tok::Int(n),
                Err(_) => {
                    return Err(Diagnostic::error(
                        start,
                        format!("integer literal `{text}` is out of range"),
                    ))
                }
            }
        };
        Ok(Token { tok, pos: start })
    }

    fn string(&mut self, start: Pos) -> Result<Token, Diagnostic> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(Diagnostic::error(start, "unterminated string literal")),
                Some('"') => break,
                Some('\n') => return Err(Diagnostic::error(start, "unterminated string literal")),
                Some('\\') => {
                    let esc_pos = self.pos;
                    match self.bump() {
                        Some('n') => out.push('\n'),
                        Some('t') => out.push('\t'),
                        Some('r') => out.push('\r'),
                        Some('\\') => out.push('\\'),
                        Some('"') => out.push('"'),
                        Some(other) => {
                            return Err(Diagnostic::error(
                                esc_pos,
                                format!("unknown escape `\\{other}` in string literal"),
                            ))
                        }
                        None => return Err(Diagnostic::error(start, "unterminated string literal")),
                    }
                }
                Some(c) => out.push(c),
            }
        }
        Ok(Token {
            tok: Tok::Str(out),
            pos: start,
        })
    }
}

/// Tokenize a whole source text, failing on the first lexical error.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer::new(src);
    let mut out = Vec::new();
    loop {
        while let Some(c) = lx.peek() {
            if c == '#' {
                while let Some(c) = lx.peek() {
                    if c == '\n' {
                        break;
                    }
                    lx.bump();
                }
            } else if c.is_whitespace() {
                lx.bump();
            } else {
                break;
            }
        }
        let start = lx.pos;
        let Some(c) = lx.bump() else {
            out.push(Token {
                tok: Tok::Eof,
                pos: start,
            });
            return Ok(out);
        };
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => {
                // `]->` closes a connect edge only when written adjacently.
                let mut ahead = lx.chars.clone();
                if ahead.next() == Some('-') && ahead.next() == Some('>') {
                    lx.bump();
                    lx.bump();
                    Tok::EdgeClose
                } else {
                    Tok::RBracket
                }
            }
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            '.' => Tok::Dot,
            '=' => {
                if lx.eat('=') {
                    Tok::Eq
                } else {
                    Tok::Assign
                }
            }
            '!' => {
                if lx.eat('=') {
                    Tok::Ne
                } else {
                    return Err(Diagnostic::error(
                        start,
                        "unexpected `!` (use `not` for negation, `!=` for inequality)",
                    ));
                }
            }
            '<' => {
                if lx.eat('=') {
                    Tok::Le
                } else {
                    Tok::Lt
                }
            }
            '>' => {
                if lx.eat('=') {
                    Tok::Ge
                } else {
                    Tok::Gt
                }
            }
            '+' => Tok::Plus,
            '-' => {
                if lx.eat('[') {
                    Tok::EdgeOpen
                } else if lx.eat('>') {
                    Tok::Arrow
                } else {
                    Tok::Minus
                }
            }
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '%' => Tok::Percent,
            '"' => {
                out.push(lx.string(start)?);
                continue;
            }
            c if c.is_ascii_digit() => {
                out.push(lx.number(start, c)?);
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(c) = lx.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        word.push(c);
                        lx.bump();
                    } else {
                        break;
                    }
                }
                keyword(&word).unwrap_or(Tok::Ident(word))
            }
            other => {
                return Err(Diagnostic::error(
                    start,
                    format!("unexpected character `{other}`"),
                ))
            }
        };
        out.push(Token { tok, pos: start });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_keywords_idents_and_punctuation() {
        assert_eq!(
            toks("let x = out(here);"),
            vec![
                Tok::Let,
                Tok::Ident("x".into()),
                Tok::Assign,
                Tok::Ident("out".into()),
                Tok::LParen,
                Tok::Here,
                Tok::RParen,
                Tok::Semi,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn lexes_numbers_strings_and_comments() {
        assert_eq!(
            toks("1 2.5 \"a\\nb\" # trailing\n3"),
            vec![
                Tok::Int(1),
                Tok::Float(2.5),
                Tok::Str("a\nb".into()),
                Tok::Int(3),
                Tok::Eof,
            ]
        );
        // A dot without a following digit is member access, not a float.
        assert_eq!(
            toks("x.y"),
            vec![
                Tok::Ident("x".into()),
                Tok::Dot,
                Tok::Ident("y".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn edge_brackets_require_adjacency() {
        assert_eq!(
            toks("a -[F]-> b"),
            vec![
                Tok::Ident("a".into()),
                Tok::EdgeOpen,
                Tok::Ident("F".into()),
                Tok::EdgeClose,
                Tok::Ident("b".into()),
                Tok::Eof,
            ]
        );
        // With a space the minus stays a minus and the bracket opens a list.
        assert_eq!(
            toks("a - [1]"),
            vec![
                Tok::Ident("a".into()),
                Tok::Minus,
                Tok::LBracket,
                Tok::Int(1),
                Tok::RBracket,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn positions_are_one_based_lines_and_columns() {
        let toks = tokenize("let x\n  = 1;").unwrap();
        let at: Vec<(u32, u32)> = toks.iter().map(|t| (t.pos.line, t.pos.col)).collect();
        assert_eq!(at, vec![(1, 1), (1, 5), (2, 3), (2, 5), (2, 6), (2, 7)]);
    }

    #[test]
    fn reports_lexical_errors_with_positions() {
        let err = tokenize("let ~ = 1;").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 5));
        assert!(err.message.contains("unexpected character"));

        let err = tokenize("\"open").unwrap_err();
        assert!(err.message.contains("unterminated"));

        let err = tokenize("99999999999999999999").unwrap_err();
        assert!(err.message.contains("out of range"));
    }
}
