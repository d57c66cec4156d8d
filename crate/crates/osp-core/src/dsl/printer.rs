//! Canonical pretty-printer.
//!
//! Printing then reparsing yields a structurally identical program
//! (positions aside): parenthesization is driven by operator precedence,
//! strings re-escape exactly the escapes the lexer understands, and the
//! output layout is fixed (two-space indent, one statement per line), so
//! the printed form is also a normal form — printing is idempotent.

use super::ast::{BinOp, Expr, ExprKind, Program, Stmt, UnOp};
use crate::graph::Direction;
use std::fmt::Write;

/// Render a program in canonical form.
pub fn print(program: &Program) -> String {
    let mut out = String::new();
    for decl in &program.decls {
        let head = format!(
            "{} {}{}",
            decl.kind,
            decl.name,
            match &decl.parent {
                Some(p) => format!(" : {p}"),
                None => String::new(),
            }
        );
        if decl.fields.is_empty() && decl.abilities.is_empty() {
            let _ = writeln!(out, "{head} {{}}");
            continue;
        }
        let _ = writeln!(out, "{head} {{");
        for field in &decl.fields {
            let _ = write!(out, "  has {}: {}", field.name, field.kind);
            if let Some(default) = &field.default {
                out.push_str(" = ");
                print_expr(&mut out, default);
            }
            out.push_str(";\n");
        }
        for ability in &decl.abilities {
            let _ = write!(
                out,
                "  can {} with {} {}",
                ability.name, ability.trigger, ability.phase
            );
            if ability.body.is_empty() {
                out.push_str(" {}\n");
            } else {
                out.push_str(" {\n");
                print_block(&mut out, &ability.body, 2);
                out.push_str("  }\n");
            }
        }
        out.push_str("}\n");
    }
    print_block(&mut out, &program.driver, 0);
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    for stmt in stmts {
        print_stmt(out, stmt, depth);
    }
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match stmt {
        Stmt::Let { name, value, .. } => {
            let _ = write!(out, "let {name} = ");
            print_expr(out, value);
            out.push_str(";\n");
        }
        Stmt::Assign { target, value, .. } => {
            print_expr(out, target);
            out.push_str(" = ");
            print_expr(out, value);
            out.push_str(";\n");
        }
        Stmt::If { .. } => print_if(out, stmt, depth),
        Stmt::For {
            var, iter, body, ..
        } => {
            let _ = write!(out, "for {var} in ");
            print_expr(out, iter);
            out.push_str(" {\n");
            print_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
        Stmt::Spawn { walker, target, .. } => {
            out.push_str("spawn ");
            print_expr(out, walker);
            out.push_str(" with ");
            print_expr(out, target);
            out.push_str(";\n");
        }
        Stmt::Visit { target, .. } => {
            out.push_str("visit ");
            print_expr(out, target);
            out.push_str(";\n");
        }
        Stmt::Skip { .. } => out.push_str("skip;\n"),
        Stmt::Disengage { .. } => out.push_str("disengage;\n"),
        Stmt::Del { target, .. } => {
            out.push_str("del ");
            print_expr(out, target);
            out.push_str(";\n");
        }
        Stmt::Report { value, .. } => {
            out.push_str("report ");
            print_expr(out, value);
            out.push_str(";\n");
        }
        Stmt::Connect {
            src,
            edge_type,
            fields,
            dst,
            ..
        } => {
            out.push_str("connect ");
            print_expr(out, src);
            let _ = write!(out, " -[{edge_type}");
            if !fields.is_empty() {
                print_field_inits(out, fields);
            }
            out.push_str("]-> ");
            print_expr(out, dst);
            out.push_str(";\n");
        }
        Stmt::Expr { expr, .. } => {
            print_expr(out, expr);
            out.push_str(";\n");
        }
    }
}

/// Print an `if`, folding a single nested `If` in the else branch into an
/// `else if` chain. The caller has already written the indent.
fn print_if(out: &mut String, stmt: &Stmt, depth: usize) {
    let Stmt::If {
        cond, then, els, ..
    } = stmt
    else {
        unreachable!("print_if is only called on if statements");
    };
    out.push_str("if ");
    print_expr(out, cond);
    out.push_str(" {\n");
    print_block(out, then, depth + 1);
    indent(out, depth);
    out.push('}');
    match els.as_slice() {
        [] => out.push('\n'),
        [nested @ Stmt::If { .. }] => {
            out.push_str(" else ");
            print_if(out, nested, depth);
        }
        _ => {
            out.push_str(" else {\n");
            print_block(out, els, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

fn print_field_inits(out: &mut String, fields: &[(String, Expr)]) {
    out.push('{');
    for (i, (name, value)) in fields.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{name} = ");
        print_expr(out, value);
    }
    out.push('}');
}

/// Binding strength: higher binds tighter. Postfix and atoms are 7.
fn prec(expr: &Expr) -> u8 {
    match &expr.kind {
        ExprKind::Binary { op, .. } => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        },
        ExprKind::Unary { .. } => 6,
        _ => 7,
    }
}

fn print_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Float(x) => {
            let _ = write!(out, "{x:?}");
        }
        ExprKind::Str(s) => print_str(out, s),
        ExprKind::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        ExprKind::Null => out.push_str("null"),
        ExprKind::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, item);
            }
            out.push(']');
        }
        ExprKind::Name(name) => out.push_str(name),
        ExprKind::SelfRef => out.push_str("self"),
        ExprKind::Here => out.push_str("here"),
        ExprKind::Visitor => out.push_str("visitor"),
        ExprKind::PathRef => out.push_str("path"),
        ExprKind::Field { base, name } => {
            print_operand(out, base, 7, false);
            let _ = write!(out, ".{name}");
        }
        ExprKind::Index { base, index } => {
            print_operand(out, base, 7, false);
            out.push('[');
            print_expr(out, index);
            out.push(']');
        }
        ExprKind::Call { name, args } => {
            let _ = write!(out, "{name}(");
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(out, arg);
            }
            out.push(')');
        }
        ExprKind::Construct { type_name, fields } => {
            out.push_str(type_name);
            print_field_inits(out, fields);
        }
        ExprKind::NodesQuery { dir, base, filter } => {
            print_query(out, dir_word(*dir), base, filter.as_deref());
        }
        ExprKind::EdgesQuery { dir, base, filter } => {
            let name = match dir {
                Direction::Out => "out_edges",
                Direction::In => "in_edges",
                Direction::Any => "any_edges",
            };
            print_query(out, name, base, filter.as_deref());
        }
        ExprKind::PathQuery {
            origin,
            type_name,
            include_edges,
            dir,
        } => {
            out.push_str("pathq(");
            print_expr(out, origin);
            let _ = write!(out, ", {type_name}, ");
            print_expr(out, include_edges);
            let _ = write!(out, ", {})", dir_word(*dir));
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let my = prec(expr);
            print_operand(out, lhs, my, false);
            let _ = write!(out, " {} ", op_text(*op));
            print_operand(out, rhs, my, true);
        }
        ExprKind::Unary { op, operand } => {
            match op {
                UnOp::Not => out.push_str("not "),
                UnOp::Neg => out.push('-'),
            }
            // A negated operand must not start with `[`: `-[` would lex as
            // the connect edge-opener.
            let mut text = String::new();
            print_operand(&mut text, operand, 6, false);
            if *op == UnOp::Neg && text.starts_with('[') {
                let _ = write!(out, "({text})");
            } else {
                out.push_str(&text);
            }
        }
    }
}

fn print_query(out: &mut String, name: &str, base: &Expr, filter: Option<&str>) {
    let _ = write!(out, "{name}(");
    print_expr(out, base);
    if let Some(f) = filter {
        let _ = write!(out, ", {f}");
    }
    out.push(')');
}

/// Print a child expression, parenthesizing when its precedence is lower
/// than the parent's (or equal, for the right side of a left-associative
/// binary operator).
fn print_operand(out: &mut String, child: &Expr, parent_prec: u8, is_right: bool) {
    let p = prec(child);
    let needs = p < parent_prec || (is_right && p == parent_prec);
    if needs {
        out.push('(');
        print_expr(out, child);
        out.push(')');
    } else {
        print_expr(out, child);
    }
}

fn dir_word(dir: Direction) -> &'static str {
    match dir {
        Direction::Out => "out",
        Direction::In => "in",
        Direction::Any => "any",
    }
}

fn op_text(op: BinOp) -> &'static str {
    match op {
        BinOp::Or => "or",
        BinOp::And => "and",
        BinOp::Eq => "==",
        BinOp::Ne => "!=",
        BinOp::Lt => "<",
        BinOp::Le => "<=",
        BinOp::Gt => ">",
        BinOp::Ge => ">=",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::Rem => "%",
    }
}

fn print_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out.push('"');
}
