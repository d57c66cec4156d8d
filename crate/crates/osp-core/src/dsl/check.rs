//! Static checks, run after parsing and before interpretation.
//!
//! Unlike the parser, the checker does not stop early: it collects every
//! fault it can find, each with a source position. Checks cover archetype
//! structure (duplicate names, parent cycles and role mismatches, field
//! redeclaration, default kinds, trigger roles), name resolution of locals,
//! and context rules: `visit`, `skip`, `disengage`, `self`, and `path` make
//! sense only inside ability bodies, `here` only in walker-owned abilities,
//! and `visitor` only in node- or edge-owned abilities.

use super::ast::{ArchetypeDecl, Expr, ExprKind, Program, Stmt, UnOp};
use super::token::Pos;
use super::Diagnostic;
use crate::archetype::{ArchetypeKind, ValueKind};
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet};

/// Check a parsed program, returning every diagnostic found (empty means
/// the program is ready to run).
pub fn check(program: &Program) -> Vec<Diagnostic> {
    let mut ck = Checker {
        archs: BTreeMap::new(),
        diags: Vec::new(),
    };
    ck.collect_archetypes(program);
    ck.check_structure(program);
    for decl in &program.decls {
        for ability in &decl.abilities {
            let mut scopes = Scopes::new();
            let ctx = BodyCtx::Ability {
                owner_kind: decl.kind,
            };
            scopes.push();
            for stmt in &ability.body {
                ck.check_stmt(&ctx, &mut scopes, stmt);
            }
            scopes.pop();
        }
    }
    let mut scopes = Scopes::new();
    scopes.push();
    for stmt in &program.driver {
        ck.check_stmt(&BodyCtx::Driver, &mut scopes, stmt);
    }
    ck.diags
}

struct ArchInfo {
    kind: ArchetypeKind,
    parent: Option<String>,
    own_fields: Vec<(String, ValueKind)>,
}

enum BodyCtx {
    Driver,
    Ability { owner_kind: ArchetypeKind },
}

struct Scopes {
    stack: Vec<BTreeSet<String>>,
}

impl Scopes {
    fn new() -> Scopes {
        Scopes { stack: Vec::new() }
    }

    fn push(&mut self) {
        self.stack.push(BTreeSet::new());
    }

    fn pop(&mut self) {
        self.stack.pop();
    }

    fn declare(&mut self, name: &str) {
        if let Some(top) = self.stack.last_mut() {
            top.insert(name.to_string());
        }
    }

    fn resolves(&self, name: &str) -> bool {
        self.stack.iter().any(|s| s.contains(name))
    }
}

struct Checker {
    archs: BTreeMap<String, ArchInfo>,
    diags: Vec<Diagnostic>,
}

impl Checker {
    fn error(&mut self, pos: Pos, message: impl Into<String>) {
        self.diags.push(Diagnostic::error(pos, message));
    }

    fn collect_archetypes(&mut self, program: &Program) {
        for decl in &program.decls {
            if self.archs.contains_key(&decl.name) {
                self.error(decl.pos, format!("duplicate archetype `{}`", decl.name));
                continue;
            }
            self.archs.insert(
                decl.name.clone(),
                ArchInfo {
                    kind: decl.kind,
                    parent: decl.parent.clone(),
                    own_fields: decl
                        .fields
                        .iter()
                        .map(|f| (f.name.clone(), f.kind))
                        .collect(),
                },
            );
        }
    }

    /// Walk the parent chain of `name`; `None` when the ancestry is broken
    /// (missing parent or a cycle), which is reported elsewhere.
    fn ancestry(&self, name: &str) -> Option<Vec<&ArchInfo>> {
        let mut chain = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = Some(name.to_string());
        while let Some(n) = cur {
            if !seen.insert(n.clone()) {
                return None;
            }
            let info = self.archs.get(&n)?;
            chain.push(info);
            cur = info.parent.clone();
        }
        Some(chain)
    }

    /// Fields visible on `name`, own plus inherited, or `None` when the
    /// ancestry is broken.
    fn effective_fields(&self, name: &str) -> Option<Vec<(String, ValueKind)>> {
        let chain = self.ancestry(name)?;
        let mut out = Vec::new();
        for info in chain.iter().rev() {
            out.extend(info.own_fields.iter().cloned());
        }
        Some(out)
    }

    fn check_structure(&mut self, program: &Program) {
        for decl in &program.decls {
            self.check_parent(decl);
            self.check_fields(decl);
            self.check_abilities(decl);
        }
    }

    fn check_parent(&mut self, decl: &ArchetypeDecl) {
        let Some(parent) = &decl.parent else {
            return;
        };
        match self.archs.get(parent) {
            None => {
                self.error(
                    decl.pos,
                    format!("unknown parent archetype `{parent}` for `{}`", decl.name),
                );
            }
            Some(p) => {
                if p.kind != decl.kind {
                    self.error(
                        decl.pos,
                        format!(
                            "`{}` is a {} but its parent `{parent}` is a {}",
                            decl.name, decl.kind, p.kind
                        ),
                    );
                } else if self.ancestry(&decl.name).is_none() {
                    self.error(
                        decl.pos,
                        format!("inheritance cycle through `{}`", decl.name),
                    );
                }
            }
        }
    }

    fn check_fields(&mut self, decl: &ArchetypeDecl) {
        let mut seen = BTreeSet::new();
        let inherited: BTreeSet<String> = decl
            .parent
            .as_ref()
            .and_then(|p| self.effective_fields(p))
            .map(|fs| fs.into_iter().map(|(n, _)| n).collect())
            .unwrap_or_default();
        for field in &decl.fields {
            if !seen.insert(field.name.clone()) {
                self.error(
                    field.pos,
                    format!("duplicate field `{}` on `{}`", field.name, decl.name),
                );
            }
            if inherited.contains(&field.name) {
                self.error(
                    field.pos,
                    format!(
                        "field `{}` on `{}` is already declared by an ancestor",
                        field.name, decl.name
                    ),
                );
            }
            if let Some(default) = &field.default {
                if let Some(value) = const_literal(default) {
                    if !value.conforms(field.kind) {
                        self.error(
                            default.pos,
                            format!(
                                "default for `{}` has kind {} but the field is declared {}",
                                field.name,
                                value.kind_name(),
                                field.kind
                            ),
                        );
                    }
                } else {
                    self.error(default.pos, "field defaults must be literals");
                }
            }
        }
    }

    fn check_abilities(&mut self, decl: &ArchetypeDecl) {
        for ability in &decl.abilities {
            if decl.kind == ArchetypeKind::Object {
                self.error(
                    ability.pos,
                    format!(
                        "object archetype `{}` cannot declare abilities",
                        decl.name
                    ),
                );
                continue;
            }
            match self.archs.get(&ability.trigger) {
                None => {
                    self.error(
                        ability.pos,
                        format!("unknown trigger archetype `{}`", ability.trigger),
                    );
                }
                Some(t) => {
                    let ok = match decl.kind {
                        ArchetypeKind::Node | ArchetypeKind::Edge => {
                            t.kind == ArchetypeKind::Walker
                        }
                        ArchetypeKind::Walker => {
                            matches!(t.kind, ArchetypeKind::Node | ArchetypeKind::Edge)
                        }
                        ArchetypeKind::Object => false,
                    };
                    if !ok {
                        self.error(
                            ability.pos,
                            format!(
                                "a {} ability must trigger on {}, but `{}` is a {}",
                                decl.kind,
                                if decl.kind == ArchetypeKind::Walker {
                                    "a node or edge archetype"
                                } else {
                                    "a walker archetype"
                                },
                                ability.trigger,
                                t.kind
                            ),
                        );
                    }
                }
            }
        }
    }

    fn check_stmt(&mut self, ctx: &BodyCtx, scopes: &mut Scopes, stmt: &Stmt) {
        match stmt {
            Stmt::Let { name, value, .. } => {
                self.check_expr(ctx, scopes, value);
                scopes.declare(name);
            }
            Stmt::Assign { target, value, .. } => {
                self.check_expr(ctx, scopes, target);
                self.check_expr(ctx, scopes, value);
            }
            Stmt::If {
                cond, then, els, ..
            } => {
                self.check_expr(ctx, scopes, cond);
                self.check_block(ctx, scopes, then);
                self.check_block(ctx, scopes, els);
            }
            Stmt::For {
                var, iter, body, ..
            } => {
                self.check_expr(ctx, scopes, iter);
                scopes.push();
                scopes.declare(var);
                for s in body {
                    self.check_stmt(ctx, scopes, s);
                }
                scopes.pop();
            }
            Stmt::Spawn { walker, target, .. } => {
                self.check_expr(ctx, scopes, walker);
                self.check_expr(ctx, scopes, target);
            }
            Stmt::Visit { target, pos } => {
                self.require_ability(ctx, *pos, "`visit`");
                self.check_expr(ctx, scopes, target);
            }
            Stmt::Skip { pos } => self.require_ability(ctx, *pos, "`skip`"),
            Stmt::Disengage { pos } => self.require_ability(ctx, *pos, "`disengage`"),
            Stmt::Del { target, .. } => self.check_expr(ctx, scopes, target),
            Stmt::Report { value, .. } => self.check_expr(ctx, scopes, value),
            Stmt::Connect {
                src,
                edge_type,
                fields,
                dst,
                pos,
            } => {
                self.check_expr(ctx, scopes, src);
                self.check_expr(ctx, scopes, dst);
                match self.archs.get(edge_type) {
                    None => {
                        self.error(*pos, format!("unknown edge archetype `{edge_type}`"));
                    }
                    Some(info) if info.kind != ArchetypeKind::Edge => {
                        let kind = info.kind;
                        self.error(
                            *pos,
                            format!("`{edge_type}` is a {kind} archetype, not an edge"),
                        );
                    }
                    Some(_) => self.check_field_inits(edge_type, fields),
                }
                for (_, value) in fields {
                    self.check_expr(ctx, scopes, value);
                }
            }
            Stmt::Expr { expr, .. } => self.check_expr(ctx, scopes, expr),
        }
    }

    fn check_block(&mut self, ctx: &BodyCtx, scopes: &mut Scopes, stmts: &[Stmt]) {
        scopes.push();
        for s in stmts {
            self.check_stmt(ctx, scopes, s);
        }
        scopes.pop();
    }

    fn check_field_inits(&mut self, type_name: &str, fields: &[(String, Expr)]) {
        let Some(known) = self.effective_fields(type_name) else {
            return;
        };
        for (name, value) in fields {
            if !known.iter().any(|(n, _)| n == name) {
                self.error(value.pos, format!("`{type_name}` has no field `{name}`"));
            }
        }
    }

    fn require_ability(&mut self, ctx: &BodyCtx, pos: Pos, what: &str) {
        if matches!(ctx, BodyCtx::Driver) {
            self.error(pos, format!("{what} is only allowed inside ability bodies"));
        }
    }

    fn check_expr(&mut self, ctx: &BodyCtx, scopes: &mut Scopes, expr: &Expr) {
        match &expr.kind {
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Str(_)
            | ExprKind::Bool(_)
            | ExprKind::Null => {}
            ExprKind::List(items) => {
                for item in items {
                    self.check_expr(ctx, scopes, item);
                }
            }
            ExprKind::Name(name) => {
                if !scopes.resolves(name) {
                    self.error(expr.pos, format!("unknown name `{name}`"));
                }
            }
            ExprKind::SelfRef => {
                if matches!(ctx, BodyCtx::Driver) {
                    self.error(expr.pos, "`self` is only available inside ability bodies");
                }
            }
            ExprKind::Here => match ctx {
                BodyCtx::Driver => {
                    self.error(expr.pos, "`here` is only available inside ability bodies")
                }
                BodyCtx::Ability { owner_kind } if *owner_kind != ArchetypeKind::Walker => {
                    self.error(expr.pos, "`here` is only available in walker-owned abilities")
                }
                _ => {}
            },
            ExprKind::Visitor => match ctx {
                BodyCtx::Driver => {
                    self.error(expr.pos, "`visitor` is only available inside ability bodies")
                }
                BodyCtx::Ability { owner_kind }
                    if !matches!(owner_kind, ArchetypeKind::Node | ArchetypeKind::Edge) =>
                {
                    self.error(
                        expr.pos,
                        "`visitor` is only available in node- or edge-owned abilities",
                    )
                }
                _ => {}
            },
            ExprKind::PathRef => {
                if matches!(ctx, BodyCtx::Driver) {
                    self.error(expr.pos, "`path` is only available inside ability bodies");
                }
            }
            ExprKind::Field { base, .. } => self.check_expr(ctx, scopes, base),
            ExprKind::Index { base, index } => {
                self.check_expr(ctx, scopes, base);
                self.check_expr(ctx, scopes, index);
            }
            ExprKind::Call { name, args } => {
                let arity = match name.as_str() {
                    "len" | "src" | "dst" => Some(1),
                    "search_tweets" => Some(2),
                    "substr" => Some(3),
                    _ => None,
                };
                match arity {
                    None => self.error(expr.pos, format!("unknown function `{name}`")),
                    Some(n) if args.len() != n => self.error(
                        expr.pos,
                        format!("`{name}` takes {n} argument(s), got {}", args.len()),
                    ),
                    Some(_) => {}
                }
                for arg in args {
                    self.check_expr(ctx, scopes, arg);
                }
            }
            ExprKind::Construct { type_name, fields } => {
                match self.archs.get(type_name) {
                    None => self.error(expr.pos, format!("unknown archetype `{type_name}`")),
                    Some(info) if info.kind == ArchetypeKind::Edge => self.error(
                        expr.pos,
                        "edge instances are created with `connect`, not a constructor",
                    ),
                    Some(_) => self.check_field_inits(type_name, fields),
                }
                for (_, value) in fields {
                    self.check_expr(ctx, scopes, value);
                }
            }
            ExprKind::NodesQuery { base, filter, .. } => {
                self.check_expr(ctx, scopes, base);
                self.check_filter(filter.as_deref(), ArchetypeKind::Node, expr.pos);
            }
            ExprKind::EdgesQuery { base, filter, .. } => {
                self.check_expr(ctx, scopes, base);
                self.check_filter(filter.as_deref(), ArchetypeKind::Edge, expr.pos);
            }
            ExprKind::PathQuery {
                origin,
                type_name,
                include_edges,
                ..
            } => {
                self.check_expr(ctx, scopes, origin);
                self.check_expr(ctx, scopes, include_edges);
                match self.archs.get(type_name) {
                    None => self.error(expr.pos, format!("unknown archetype `{type_name}`")),
                    Some(info)
                        if !matches!(
                            info.kind,
                            ArchetypeKind::Node | ArchetypeKind::Edge
                        ) =>
                    {
                        self.error(
                            expr.pos,
                            format!(
                                "`pathq` filters on a node or edge archetype, but \
                                 `{type_name}` is a {}",
                                info.kind
                            ),
                        )
                    }
                    Some(_) => {}
                }
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                self.check_expr(ctx, scopes, lhs);
                self.check_expr(ctx, scopes, rhs);
            }
            ExprKind::Unary { operand, .. } => self.check_expr(ctx, scopes, operand),
        }
    }

    fn check_filter(&mut self, filter: Option<&str>, want: ArchetypeKind, pos: Pos) {
        let Some(name) = filter else {
            return;
        };
        match self.archs.get(name) {
            None => self.error(pos, format!("unknown archetype `{name}`")),
            Some(info) if info.kind != want => self.error(
                pos,
                format!(
                    "this query filters on {} archetypes, but `{name}` is a {}",
                    want, info.kind
                ),
            ),
            Some(_) => {}
        }
    }
}

/// Evaluate a parser-approved default literal to a value.
pub(super) fn const_literal(expr: &Expr) -> Option<Value> {
    match &expr.kind {
        ExprKind::Int(n) => Some(Value::Int(*n)),
        ExprKind::Float(x) => Some(Value::Float(*x)),
        ExprKind::Str(s) => Some(Value::Str(s.clone())),
        ExprKind::Bool(b) => Some(Value::Bool(*b)),
        ExprKind::Null => Some(Value::Null),
        ExprKind::Unary {
            op: UnOp::Neg,
            operand,
        } => match const_literal(operand)? {
            Value::Int(n) => Some(Value::Int(n.checked_neg()?)),
            Value::Float(x) => Some(Value::Float(-x)),
            _ => None,
        },
        _ => None,
    }
}
