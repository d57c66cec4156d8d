//! Abstract syntax for the surface language.
//!
//! Every statement and expression carries the position of its first token.
//! [`Program::normalized`] returns a copy with all positions zeroed so two
//! parses can be compared structurally regardless of layout — the printer
//! round-trip property is stated in exactly those terms.

use super::token::Pos;
use crate::abilities::Phase;
use crate::archetype::{ArchetypeKind, ValueKind};
use crate::graph::Direction;

/// A parsed program: archetype declarations plus the top-level driver
/// statements, each in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub decls: Vec<ArchetypeDecl>,
    pub driver: Vec<Stmt>,
}

/// `node Name : Parent { has ...; can ... }` and the other three roles.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeDecl {
    pub kind: ArchetypeKind,
    pub name: String,
    pub parent: Option<String>,
    pub fields: Vec<FieldDecl>,
    pub abilities: Vec<AbilityDecl>,
    pub pos: Pos,
}

/// `has name: kind = default;` — the default, when present, is restricted
/// to a scalar literal (or `null` for `ref` fields) by the parser.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub kind: ValueKind,
    pub default: Option<Expr>,
    pub pos: Pos,
}

/// `can name with Trigger entry { ... }`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbilityDecl {
    pub name: String,
    pub trigger: String,
    pub phase: Phase,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

/// One statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
        pos: Pos,
    },
    /// `target = value;` where the target is a name, field access, or index.
    Assign {
        target: Expr,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Expr,
        then: Vec<Stmt>,
        /// An `else if` chain parses as a single nested `If` in here.
        els: Vec<Stmt>,
        pos: Pos,
    },
    For {
        var: String,
        iter: Expr,
        body: Vec<Stmt>,
        pos: Pos,
    },
    /// `spawn walker with target;`
    Spawn {
        walker: Expr,
        target: Expr,
        pos: Pos,
    },
    Visit {
        target: Expr,
        pos: Pos,
    },
    Skip {
        pos: Pos,
    },
    Disengage {
        pos: Pos,
    },
    Del {
        target: Expr,
        pos: Pos,
    },
    Report {
        value: Expr,
        pos: Pos,
    },
    /// `connect src -[EdgeType{fields}]-> dst;`
    Connect {
        src: Expr,
        edge_type: String,
        fields: Vec<(String, Expr)>,
        dst: Expr,
        pos: Pos,
    },
    Expr {
        expr: Expr,
        pos: Pos,
    },
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::Let { pos, .. }
            | Stmt::Assign { pos, .. }
            | Stmt::If { pos, .. }
            | Stmt::For { pos, .. }
            | Stmt::Spawn { pos, .. }
            | Stmt::Visit { pos, .. }
            | Stmt::Skip { pos }
            | Stmt::Disengage { pos }
            | Stmt::Del { pos, .. }
            | Stmt::Report { pos, .. }
            | Stmt::Connect { pos, .. }
            | Stmt::Expr { pos, .. } => *pos,
        }
    }
}

/// An expression with the position of its first token.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

/// Binary operators in increasing precedence groups: `or` < `and` <
/// comparisons < additive < multiplicative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

/// Expression forms.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Null,
    List(Vec<Expr>),
    /// A local variable reference.
    Name(String),
    /// The ability owner (`self`).
    SelfRef,
    /// The current location, from walker-owned abilities.
    Here,
    /// The triggering walker, from node- or edge-owned abilities.
    Visitor,
    /// The destination queue of the current walker, as a list of refs.
    PathRef,
    Field {
        base: Box<Expr>,
        name: String,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    /// A builtin call such as `len(x)` or `search_tweets(a, b)`.
    Call {
        name: String,
        args: Vec<Expr>,
    },
    /// `Type{field = expr, ...}` creating a node, walker, or object.
    Construct {
        type_name: String,
        fields: Vec<(String, Expr)>,
    },
    /// `out(x)`, `in(x, T)`, `any(x)`: adjacent nodes through matching edges.
    NodesQuery {
        dir: Direction,
        base: Box<Expr>,
        filter: Option<String>,
    },
    /// `out_edges(x)`, `in_edges(x, T)`, `any_edges(x)`: incident edges.
    EdgesQuery {
        dir: Direction,
        base: Box<Expr>,
        filter: Option<String>,
    },
    /// `pathq(origin, Type, include_edges, dir)`.
    PathQuery {
        origin: Box<Expr>,
        type_name: String,
        include_edges: Box<Expr>,
        dir: Direction,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
}

impl Program {
    /// A copy with every source position zeroed, for structural comparison.
    pub fn normalized(&self) -> Program {
        Program {
            decls: self
                .decls
                .iter()
                .map(|d| ArchetypeDecl {
                    kind: d.kind,
                    name: d.name.clone(),
                    parent: d.parent.clone(),
                    fields: d
                        .fields
                        .iter()
                        .map(|f| FieldDecl {
                            name: f.name.clone(),
                            kind: f.kind,
                            default: f.default.as_ref().map(norm_expr),
                            pos: Pos::default(),
                        })
                        .collect(),
                    abilities: d
                        .abilities
                        .iter()
                        .map(|a| AbilityDecl {
                            name: a.name.clone(),
                            trigger: a.trigger.clone(),
                            phase: a.phase,
                            body: norm_block(&a.body),
                            pos: Pos::default(),
                        })
                        .collect(),
                    pos: Pos::default(),
                })
                .collect(),
            driver: norm_block(&self.driver),
        }
    }
}

fn norm_block(stmts: &[Stmt]) -> Vec<Stmt> {
    stmts.iter().map(norm_stmt).collect()
}

fn norm_stmt(stmt: &Stmt) -> Stmt {
    let pos = Pos::default();
    match stmt {
        Stmt::Let { name, value, .. } => Stmt::Let {
            name: name.clone(),
            value: norm_expr(value),
            pos,
        },
        Stmt::Assign { target, value, .. } => Stmt::Assign {
            target: norm_expr(target),
            value: norm_expr(value),
            pos,
        },
        Stmt::If {
            cond, then, els, ..
        } => Stmt::If {
            cond: norm_expr(cond),
            then: norm_block(then),
            els: norm_block(els),
            pos,
        },
        Stmt::For {
            var, iter, body, ..
        } => Stmt::For {
            var: var.clone(),
            iter: norm_expr(iter),
            body: norm_block(body),
            pos,
        },
        Stmt::Spawn { walker, target, .. } => Stmt::Spawn {
            walker: norm_expr(walker),
            target: norm_expr(target),
            pos,
        },
        Stmt::Visit { target, .. } => Stmt::Visit {
            target: norm_expr(target),
            pos,
        },
        Stmt::Skip { .. } => Stmt::Skip { pos },
        Stmt::Disengage { .. } => Stmt::Disengage { pos },
        Stmt::Del { target, .. } => Stmt::Del {
            target: norm_expr(target),
            pos,
        },
        Stmt::Report { value, .. } => Stmt::Report {
            value: norm_expr(value),
            pos,
        },
        Stmt::Connect {
            src,
            edge_type,
            fields,
            dst,
            ..
        } => Stmt::Connect {
            src: norm_expr(src),
            edge_type: edge_type.clone(),
            fields: fields
                .iter()
                .map(|(n, e)| (n.clone(), norm_expr(e)))
                .collect(),
            dst: norm_expr(dst),
            pos,
        },
        Stmt::Expr { expr, .. } => Stmt::Expr {
            expr: norm_expr(expr),
            pos,
        },
    }
}

fn norm_expr(expr: &Expr) -> Expr {
    let kind = match &expr.kind {
        ExprKind::Int(n) => ExprKind::Int(*n),
        ExprKind::Float(x) => ExprKind::Float(*x),
        ExprKind::Str(s) => ExprKind::Str(s.clone()),
        ExprKind::Bool(b) => ExprKind::Bool(*b),
        ExprKind::Null => ExprKind::Null,
        ExprKind::List(items) => ExprKind::List(items.iter().map(norm_expr).collect()),
        ExprKind::Name(n) => ExprKind::Name(n.clone()),
        ExprKind::SelfRef => ExprKind::SelfRef,
        ExprKind::Here => ExprKind::Here,
        ExprKind::Visitor => ExprKind::Visitor,
        ExprKind::PathRef => ExprKind::PathRef,
        ExprKind::Field { base, name } => ExprKind::Field {
            base: Box::new(norm_expr(base)),
            name: name.clone(),
        },
        ExprKind::Index { base, index } => ExprKind::Index {
            base: Box::new(norm_expr(base)),
            index: Box::new(norm_expr(index)),
        },
        ExprKind::Call { name, args } => ExprKind::Call {
            name: name.clone(),
            args: args.iter().map(norm_expr).collect(),
        },
        ExprKind::Construct { type_name, fields } => ExprKind::Construct {
            type_name: type_name.clone(),
            fields: fields
                .iter()
                .map(|(n, e)| (n.clone(), norm_expr(e)))
                .collect(),
        },
        ExprKind::NodesQuery { dir, base, filter } => ExprKind::NodesQuery {
            dir: *dir,
            base: Box::new(norm_expr(base)),
            filter: filter.clone(),
        },
        ExprKind::EdgesQuery { dir, base, filter } => ExprKind::EdgesQuery {
            dir: *dir,
            base: Box::new(norm_expr(base)),
            filter: filter.clone(),
        },
        ExprKind::PathQuery {
            origin,
            type_name,
            include_edges,
            dir,
        } => ExprKind::PathQuery {
            origin: Box::new(norm_expr(origin)),
            type_name: type_name.clone(),
            include_edges: Box::new(norm_expr(include_edges)),
            dir: *dir,
        },
        ExprKind::Binary { op, lhs, rhs } => ExprKind::Binary {
            op: *op,
            lhs: Box::new(norm_expr(lhs)),
            rhs: Box::new(norm_expr(rhs)),
        },
        ExprKind::Unary { op, operand } => ExprKind::Unary {
            op: *op,
            operand: Box::new(norm_expr(operand)),
        },
    };
    Expr {
        kind,
        pos: Pos::default(),
    }
}
