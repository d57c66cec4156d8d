//! Recursive-descent parser.
//!
//! Parsing stops at the first syntax error and reports it with the set of
//! tokens that would have been accepted there. Constructor literals
//! (`Type{...}`) are not allowed at the top level of an `if` or `for`
//! header, where the brace would be read as the block opener; parenthesize
//! to use one there.

use super::ast::{
    AbilityDecl, ArchetypeDecl, BinOp, Expr, ExprKind, FieldDecl, Program, Stmt, UnOp,
};
use super::token::{tokenize, Pos, Tok, Token};
use super::Diagnostic;
use crate::abilities::Phase;
use crate::archetype::{ArchetypeKind, ValueKind};
use crate::graph::Direction;

/// Parse a whole source text into a program.
pub fn parse(src: &str) -> Result<Program, Diagnostic> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0 };
    p.program()
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, want: &Tok) -> bool {
        if self.peek() == want {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: &Tok) -> Result<Pos, Diagnostic> {
        if self.peek() == want {
            Ok(self.bump().pos)
        } else {
            Err(self.expected(&want.describe()))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), Diagnostic> {
        match self.peek() {
            Tok::Ident(_) => {
                let t = self.bump();
                match t.tok {
                    Tok::Ident(name) => Ok((name, t.pos)),
                    _ => unreachable!(),
                }
            }
            _ => Err(self.expected("identifier")),
        }
    }

    fn expected(&self, what: &str) -> Diagnostic {
        Diagnostic::error(
            self.pos(),
            format!("expected {what}, found {}", self.peek().describe()),
        )
    }

    fn program(&mut self) -> Result<Program, Diagnostic> {
        let mut decls = Vec::new();
        let mut driver = Vec::new();
        while *self.peek() != Tok::Eof {
            match self.peek() {
                Tok::Node | Tok::Edge | Tok::Walker | Tok::Object => {
                    decls.push(self.archetype_decl()?)
                }
                _ => driver.push(self.stmt()?),
            }
        }
        Ok(Program { decls, driver })
    }

    fn archetype_decl(&mut self) -> Result<ArchetypeDecl, Diagnostic> {
        let t = self.bump();
        let kind = match t.tok {
            Tok::Node => ArchetypeKind::Node,
            Tok::Edge => ArchetypeKind::Edge,
            Tok::Walker => ArchetypeKind::Walker,
            Tok::Object => ArchetypeKind::Object,
            _ => unreachable!("caller checked the keyword"),
        };
        let (name, _) = self.expect_ident()?;
        let parent = if self.eat(&Tok::Colon) {
            Some(self.expect_ident()?.0)
        } else {
            None
        };
        self.expect(&Tok::LBrace)?;
        let mut fields = Vec::new();
        let mut abilities = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Has => fields.push(self.field_decl()?),
                Tok::Can => abilities.push(self.ability_decl()?),
                _ => return Err(self.expected("`has`, `can`, or `}`")),
            }
        }
        Ok(ArchetypeDecl {
            kind,
            name,
            parent,
            fields,
            abilities,
            pos: t.pos,
        })
    }

    fn field_decl(&mut self) -> Result<FieldDecl, Diagnostic> {
        let pos = self.expect(&Tok::Has)?;
        let (name, _) = self.expect_ident()?;
        self.expect(&Tok::Colon)?;
        let kind_pos = self.pos();
        let (kind_name, _) = match self.peek() {
            Tok::Ident(_) => self.expect_ident()?,
            _ => {
                return Err(self.expected(
                    "a field kind (`int`, `float`, `str`, `bool`, `list`, `map`, or `ref`)",
                ))
            }
        };
        let kind = ValueKind::parse(&kind_name).ok_or_else(|| {
            Diagnostic::error(
                kind_pos,
                format!(
                    "unknown field kind `{kind_name}` (expected `int`, `float`, `str`, \
                     `bool`, `list`, `map`, or `ref`)"
                ),
            )
        })?;
        let default = if self.eat(&Tok::Assign) {
            Some(self.literal_default()?)
        } else {
            None
        };
        self.expect(&Tok::Semi)?;
        Ok(FieldDecl {
            name,
            kind,
            default,
            pos,
        })
    }

    /// Field defaults are scalar literals: no expressions, no references to
    /// other instances.
    fn literal_default(&mut self) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        let negative = self.eat(&Tok::Minus);
        let t = self.bump();
        let kind = match t.tok {
            Tok::Int(n) => ExprKind::Int(n),
            Tok::Float(x) => ExprKind::Float(x),
            Tok::Str(s) if !negative => ExprKind::Str(s),
            Tok::True if !negative => ExprKind::Bool(true),
            Tok::False if !negative => ExprKind::Bool(false),
            Tok::Null if !negative => ExprKind::Null,
            _ => {
                return Err(Diagnostic::error(
                    pos,
                    format!(
                        "expected a literal default (number, string, `true`, `false`, \
                         or `null`), found {}",
                        t.tok.describe()
                    ),
                ))
            }
        };
        let lit = Expr { kind, pos: t.pos };
        Ok(if negative {
            Expr {
                kind: ExprKind::Unary {
                    op: UnOp::Neg,
                    operand: Box::new(lit),
                },
                pos,
            }
        } else {
            lit
        })
    }

    fn ability_decl(&mut self) -> Result<AbilityDecl, Diagnostic> {
        let pos = self.expect(&Tok::Can)?;
        let (name, _) = self.expect_ident()?;
        self.expect(&Tok::With)?;
        let (trigger, _) = self.expect_ident()?;
        let phase = match self.peek() {
            Tok::Entry => {
                self.bump();
                Phase::Entry
            }
            Tok::Exit => {
                self.bump();
                Phase::Exit
            }
            _ => return Err(self.expected("`entry` or `exit`")),
        };
        let body = self.block()?;
        Ok(AbilityDecl {
            name,
            trigger,
            phase,
            body,
            pos,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        self.expect(&Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if *self.peek() == Tok::Eof {
                return Err(self.expected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let pos = self.pos();
        match self.peek() {
            Tok::Let => {
                self.bump();
                let (name, _) = self.expect_ident()?;
                self.expect(&Tok::Assign)?;
                let value = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Let { name, value, pos })
            }
            Tok::If => self.if_stmt(),
            Tok::For => {
                self.bump();
                let (var, _) = self.expect_ident()?;
                self.expect(&Tok::In)?;
                let iter = self.expr(false)?;
                let body = self.block()?;
                Ok(Stmt::For {
                    var,
                    iter,
                    body,
                    pos,
                })
            }
            Tok::Spawn => {
                self.bump();
                let walker = self.expr(true)?;
                self.expect(&Tok::With)?;
                let target = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Spawn {
                    walker,
                    target,
                    pos,
                })
            }
            Tok::Visit => {
                self.bump();
                let target = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Visit { target, pos })
            }
            Tok::Skip => {
                self.bump();
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Skip { pos })
            }
            Tok::Disengage => {
                self.bump();
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Disengage { pos })
            }
            Tok::Del => {
                self.bump();
                let target = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Del { target, pos })
            }
            Tok::Report => {
                self.bump();
                let value = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Report { value, pos })
            }
            Tok::Connect => {
                self.bump();
                let src = self.expr(true)?;
                self.expect(&Tok::EdgeOpen)?;
                let (edge_type, _) = self.expect_ident()?;
                let fields = if *self.peek() == Tok::LBrace {
                    self.field_inits()?
                } else {
                    Vec::new()
                };
                self.expect(&Tok::EdgeClose)?;
                let dst = self.expr(true)?;
                self.expect(&Tok::Semi)?;
                Ok(Stmt::Connect {
                    src,
                    edge_type,
                    fields,
                    dst,
                    pos,
                })
            }
            _ => {
                let expr = self.expr(true)?;
                if self.eat(&Tok::Assign) {
                    if !matches!(
                        expr.kind,
                        ExprKind::Name(_) | ExprKind::Field { .. } | ExprKind::Index { .. }
                    ) {
                        return Err(Diagnostic::error(
                            expr.pos,
                            "invalid assignment target (expected a name, field access, \
                             or index)",
                        ));
                    }
                    let value = self.expr(true)?;
                    self.expect(&Tok::Semi)?;
                    Ok(Stmt::Assign {
                        target: expr,
                        value,
                        pos,
                    })
                } else {
                    self.expect(&Tok::Semi)?;
                    Ok(Stmt::Expr { expr, pos })
                }
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, Diagnostic> {
        let pos = self.expect(&Tok::If)?;
        let cond = self.expr(false)?;
        let then = self.block()?;
        let els = if self.eat(&Tok::Else) {
            if *self.peek() == Tok::If {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If {
            cond,
            then,
            els,
            pos,
        })
    }

    fn field_inits(&mut self) -> Result<Vec<(String, Expr)>, Diagnostic> {
        self.expect(&Tok::LBrace)?;
        let mut fields = Vec::new();
        if !self.eat(&Tok::RBrace) {
            loop {
                let (name, _) = self.expect_ident()?;
                self.expect(&Tok::Assign)?;
                let value = self.expr(true)?;
                fields.push((name, value));
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(&Tok::RBrace)?;
                break;
            }
        }
        Ok(fields)
    }

    /// `allow_struct` gates `Type{...}` literals: they are rejected at the
    /// top level of `if`/`for` headers where `{` must open the block.
    fn expr(&mut self, allow_struct: bool) -> Result<Expr, Diagnostic> {
        self.or_expr(allow_struct)
    }

    fn or_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut lhs = self.and_expr(s)?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.and_expr(s)?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut lhs = self.cmp_expr(s)?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.cmp_expr(s)?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut lhs = self.add_expr(s)?;
        loop {
            let op = match self.peek() {
                Tok::Eq => BinOp::Eq,
                Tok::Ne => BinOp::Ne,
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            self.bump();
            let rhs = self.add_expr(s)?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn add_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut lhs = self.mul_expr(s)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul_expr(s)?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary_expr(s)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Rem,
                _ => break,
            };
            self.bump();
            let rhs = self.unary_expr(s)?;
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Not => UnOp::Not,
            Tok::Minus => UnOp::Neg,
            _ => return self.postfix_expr(s),
        };
        self.bump();
        let operand = self.unary_expr(s)?;
        Ok(Expr {
            kind: ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            pos,
        })
    }

    fn postfix_expr(&mut self, s: bool) -> Result<Expr, Diagnostic> {
        let mut expr = self.primary(s)?;
        loop {
            if self.eat(&Tok::Dot) {
                let (name, _) = self.expect_ident()?;
                expr = Expr {
                    pos: expr.pos,
                    kind: ExprKind::Field {
                        base: Box::new(expr),
                        name,
                    },
                };
            } else if self.eat(&Tok::LBracket) {
                let index = self.expr(true)?;
                self.expect(&Tok::RBracket)?;
                expr = Expr {
                    pos: expr.pos,
                    kind: ExprKind::Index {
                        base: Box::new(expr),
                        index: Box::new(index),
                    },
                };
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn primary(&mut self, allow_struct: bool) -> Result<Expr, Diagnostic> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                ExprKind::Int(n)
            }
            Tok::Float(x) => {
                self.bump();
                ExprKind::Float(x)
            }
            Tok::Str(sv) => {
                self.bump();
                ExprKind::Str(sv)
            }
            Tok::True => {
                self.bump();
                ExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                ExprKind::Bool(false)
            }
            Tok::Null => {
                self.bump();
                ExprKind::Null
            }
            Tok::SelfKw => {
                self.bump();
                ExprKind::SelfRef
            }
            Tok::Here => {
                self.bump();
                ExprKind::Here
            }
            Tok::Visitor => {
                self.bump();
                ExprKind::Visitor
            }
            Tok::Path => {
                self.bump();
                ExprKind::PathRef
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr(true)?;
                self.expect(&Tok::RParen)?;
                return Ok(inner);
            }
            Tok::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        items.push(self.expr(true)?);
                        if self.eat(&Tok::Comma) {
                            continue;
                        }
                        self.expect(&Tok::RBracket)?;
                        break;
                    }
                }
                ExprKind::List(items)
            }
            // `in(...)` is the inbound node query; `in` is otherwise a
            // keyword (for-in), so it is handled outside the ident arm.
            Tok::In => {
                self.bump();
                return self.query_tail(pos, QueryFamily::Nodes, Direction::In);
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LParen => return self.call_or_query(pos, name),
                    Tok::LBrace if allow_struct => {
                        let fields = self.field_inits()?;
                        ExprKind::Construct {
                            type_name: name,
                            fields,
                        }
                    }
                    _ => ExprKind::Name(name),
                }
            }
            _ => {
                return Err(self.expected(
                    "an expression (a literal, a name, `self`, `here`, `visitor`, \
                     `path`, `[`, `(`, `not`, or `-`)",
                ))
            }
        };
        Ok(Expr { kind, pos })
    }

    fn call_or_query(&mut self, pos: Pos, name: String) -> Result<Expr, Diagnostic> {
        match name.as_str() {
            "out" => self.query_tail(pos, QueryFamily::Nodes, Direction::Out),
            "any" => self.query_tail(pos, QueryFamily::Nodes, Direction::Any),
            "out_edges" => self.query_tail(pos, QueryFamily::Edges, Direction::Out),
            "in_edges" => self.query_tail(pos, QueryFamily::Edges, Direction::In),
            "any_edges" => self.query_tail(pos, QueryFamily::Edges, Direction::Any),
            "pathq" => self.path_query_tail(pos),
            _ => {
                self.expect(&Tok::LParen)?;
                let mut args = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        args.push(self.expr(true)?);
                        if self.eat(&Tok::Comma) {
                            continue;
                        }
                        self.expect(&Tok::RParen)?;
                        break;
                    }
                }
                Ok(Expr {
                    kind: ExprKind::Call { name, args },
                    pos,
                })
            }
        }
    }

    fn query_tail(
        &mut self,
        pos: Pos,
        family: QueryFamily,
        dir: Direction,
    ) -> Result<Expr, Diagnostic> {
        self.expect(&Tok::LParen)?;
        let base = Box::new(self.expr(true)?);
        let filter = if self.eat(&Tok::Comma) {
            Some(self.expect_ident()?.0)
        } else {
            None
        };
        self.expect(&Tok::RParen)?;
        let kind = match family {
            QueryFamily::Nodes => ExprKind::NodesQuery { dir, base, filter },
            QueryFamily::Edges => ExprKind::EdgesQuery { dir, base, filter },
        };
        Ok(Expr { kind, pos })
    }

    fn path_query_tail(&mut self, pos: Pos) -> Result<Expr, Diagnostic> {
        self.expect(&Tok::LParen)?;
        let origin = Box::new(self.expr(true)?);
        self.expect(&Tok::Comma)?;
        let (type_name, _) = self.expect_ident()?;
        self.expect(&Tok::Comma)?;
        let include_edges = Box::new(self.expr(true)?);
        self.expect(&Tok::Comma)?;
        let dir = match self.peek() {
            Tok::In => {
                self.bump();
                Direction::In
            }
            Tok::Ident(w) if w == "out" => {
                self.bump();
                Direction::Out
            }
            Tok::Ident(w) if w == "any" => {
                self.bump();
                Direction::Any
            }
            _ => return Err(self.expected("a direction (`out`, `in`, or `any`)")),
        };
        self.expect(&Tok::RParen)?;
        Ok(Expr {
            kind: ExprKind::PathQuery {
                origin,
                type_name,
                include_edges,
                dir,
            },
            pos,
        })
    }
}

enum QueryFamily {
    Nodes,
    Edges,
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    Expr {
        pos: lhs.pos,
        kind: ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
    }
}
