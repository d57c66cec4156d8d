//! Tree-walking interpreter: builds a registry from the declarations,
//! installs interpreted ability bodies, and runs the driver statements.
//!
//! Runtime values are the engine's property values plus a path value, which
//! exists only during evaluation — paths can be visited, spawned on, and
//! iterated, but not stored in fields or lists. Script-level faults
//! (type errors, bad indexes, division by zero) become
//! [`RuntimeError::Script`] with the source position baked into the
//! message; engine errors propagate unchanged so their structure (budget
//! exhaustion in particular) stays visible to callers.

use super::ast::{BinOp, Expr, ExprKind, Program, Stmt, UnOp};
use super::check::{check, const_literal};
use super::parser::parse;
use super::token::Pos;
use super::Diagnostic;
use crate::abilities::{AbilityBody, AbilityDef, Flow, Invocation};
use crate::archetype::{FieldDef, Registry};
use crate::engine::{Engine, SpawnTarget, VisitTarget, DRIVER};
use crate::error::RuntimeError;
use crate::graph::{InstanceId, SystemState};
use crate::path::{path_query, PathCollection};
use crate::value::Value;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Everything a successful run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// The full event trace, one event per line.
    pub trace: String,
    /// Report payloads in emission order.
    pub reports: Vec<String>,
    /// Final graph snapshot.
    pub snapshot: String,
}

/// Why a run did not complete.
#[derive(Debug)]
pub enum RunFailure {
    /// The source failed to parse or check; nothing was executed.
    Diagnostics(Vec<Diagnostic>),
    /// Execution started and a statement failed. The trace and reports
    /// cover everything up to the failure.
    Runtime {
        /// Position of the driver statement that raised the error.
        pos: Pos,
        error: RuntimeError,
        trace: String,
        reports: Vec<String>,
    },
}

/// Parse, check, and run a source text with the given step budget.
pub fn run_source(src: &str, budget: u64) -> Result<RunOutput, RunFailure> {
    let program = parse(src).map_err(|d| RunFailure::Diagnostics(vec![d]))?;
    run_program(&program, budget)
}

/// Check and run an already-parsed program.
pub fn run_program(program: &Program, budget: u64) -> Result<RunOutput, RunFailure> {
    let diags = check(program);
    if !diags.is_empty() {
        return Err(RunFailure::Diagnostics(diags));
    }
    let registry = build_registry(program).map_err(RunFailure::Diagnostics)?;
    let mut engine = Engine::with_budget(Arc::new(registry), budget);
    let mut frame = Frame::new();
    frame.push();
    for stmt in &program.driver {
        if let Err(error) = exec_stmt(&mut engine, None, &mut frame, stmt) {
            return Err(RunFailure::Runtime {
                pos: stmt.pos(),
                error,
                trace: engine.trace_text(),
                reports: engine.reports().to_vec(),
            });
        }
    }
    Ok(RunOutput {
        trace: engine.trace_text(),
        reports: engine.reports().to_vec(),
        snapshot: engine.state().snapshot(),
    })
}

/// Build a registry from checked declarations: archetypes in dependency
/// order (parents first), then fields, then interpreted ability bodies.
pub fn build_registry(program: &Program) -> Result<Registry, Vec<Diagnostic>> {
    let mut reg = Registry::new();
    let fail = |pos: Pos, e: crate::error::CoreError| vec![Diagnostic::error(pos, e.to_string())];
    // Parents must exist before their children, so register in dependency
    // order; the checker already rejected unknown parents and cycles.
    let mut pending: Vec<usize> = (0..program.decls.len()).collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut deferred = Vec::new();
        for i in pending.drain(..) {
            let decl = &program.decls[i];
            let parent = match &decl.parent {
                None => None,
                Some(p) => match reg.lookup(p) {
                    Some(id) => Some(id),
                    None => {
                        deferred.push(i);
                        continue;
                    }
                },
            };
            reg.add_archetype(&decl.name, decl.kind, parent)
                .map_err(|e| fail(decl.pos, e))?;
        }
        assert!(
            deferred.len() < before,
            "checked programs have no unresolved parents"
        );
        pending = deferred;
    }
    for decl in &program.decls {
        let id = reg.lookup(&decl.name).expect("just registered");
        for field in &decl.fields {
            let default = match &field.default {
                Some(expr) => const_literal(expr)
                    .expect("the checker only passes literal defaults"),
                None => Value::default_for(field.kind),
            };
            reg.add_field(
                id,
                FieldDef {
                    name: field.name.clone(),
                    kind: field.kind,
                    default,
                },
            )
            .map_err(|e| fail(field.pos, e))?;
        }
    }
    for decl in &program.decls {
        let owner = reg.lookup(&decl.name).expect("just registered");
        for ability in &decl.abilities {
            let trigger = reg
                .lookup(&ability.trigger)
                .expect("the checker resolved the trigger");
            let def = AbilityDef {
                name: ability.name.clone(),
                trigger,
                phase: ability.phase,
                body: Arc::new(DslBody {
                    stmts: Arc::new(ability.body.clone()),
                }),
            };
            reg.add_ability(owner, def).map_err(|e| fail(ability.pos, e))?;
        }
    }
    Ok(reg)
}

/// An interpreted ability body: the statements of one `can` block.
struct DslBody {
    stmts: Arc<Vec<Stmt>>,
}

impl AbilityBody for DslBody {
    fn run(&self, engine: &mut Engine, inv: &Invocation) -> Result<Flow, RuntimeError> {
        let mut frame = Frame::new();
        let sig = exec_block(engine, Some(inv), &mut frame, &self.stmts)?;
        Ok(match sig {
            Sig::Normal => Flow::Continue,
            Sig::Skip => Flow::Skip,
            Sig::Disengage => Flow::Disengage,
        })
    }
}

/// A runtime value: a property value, or a path (evaluation-only).
#[derive(Debug, Clone, PartialEq)]
enum RtValue {
    Plain(Value),
    Path(PathCollection),
}

impl RtValue {
    fn kind_name(&self) -> &'static str {
        match self {
            RtValue::Plain(v) => v.kind_name(),
            RtValue::Path(_) => "path",
        }
    }

    /// Unwrap to a storable property value; paths are evaluation-only.
    fn plain(self, pos: Pos) -> Result<Value, RuntimeError> {
        match self {
            RtValue::Plain(v) => Ok(v),
            RtValue::Path(_) => Err(script(
                pos,
                "a path value cannot be stored; visit it, spawn on it, or iterate it",
            )),
        }
    }

    fn as_ref_id(&self, pos: Pos, what: &str) -> Result<InstanceId, RuntimeError> {
        match self {
            RtValue::Plain(Value::Ref(id)) => Ok(*id),
            other => Err(script(
                pos,
                format!("{what} must be an instance reference, got {}", other.kind_name()),
            )),
        }
    }

    fn as_bool(&self, pos: Pos, what: &str) -> Result<bool, RuntimeError> {
        match self {
            RtValue::Plain(Value::Bool(b)) => Ok(*b),
            other => Err(script(
                pos,
                format!("{what} must be a bool, got {}", other.kind_name()),
            )),
        }
    }
}

/// Lexical scopes of one execution context (the driver or one ability
/// invocation).
struct Frame {
    scopes: Vec<BTreeMap<String, RtValue>>,
}

impl Frame {
    fn new() -> Frame {
        Frame { scopes: Vec::new() }
    }

    fn push(&mut self) {
        self.scopes.push(BTreeMap::new());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }

    fn declare(&mut self, name: &str, value: RtValue) {
        self.scopes
            .last_mut()
            .expect("a frame always has a scope while executing")
            .insert(name.to_string(), value);
    }

    fn get(&self, name: &str) -> Option<&RtValue> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn assign(&mut self, name: &str, value: RtValue) -> bool {
        for scope in self.scopes.iter_mut().rev() {
            if let Some(slot) = scope.get_mut(name) {
                *slot = value;
                return true;
            }
        }
        false
    }
}

/// Control signal a statement hands upward.
enum Sig {
    Normal,
    Skip,
    Disengage,
}

fn script(pos: Pos, msg: impl Into<String>) -> RuntimeError {
    RuntimeError::Script(format!("{pos}: {}", msg.into()))
}

fn exec_block(
    engine: &mut Engine,
    inv: Option<&Invocation>,
    frame: &mut Frame,
    stmts: &[Stmt],
) -> Result<Sig, RuntimeError> {
    frame.push();
    for stmt in stmts {
        match exec_stmt(engine, inv, frame, stmt) {
            Ok(Sig::Normal) => {}
            other => {
                frame.pop();
                return other;
            }
        }
    }
    frame.pop();
    Ok(Sig::Normal)
}

fn exec_stmt(
    engine: &mut Engine,
    inv: Option<&Invocation>,
    frame: &mut Frame,
    stmt: &Stmt,
) -> Result<Sig, RuntimeError> {
    match stmt {
        Stmt::Let { name, value, .. } => {
            let v = eval(engine, inv, frame, value)?;
            frame.declare(name, v);
            Ok(Sig::Normal)
        }
        Stmt::Assign { target, value, .. } => {
            let v = eval(engine, inv, frame, value)?;
            assign_target(engine, inv, frame, target, v)?;
            Ok(Sig::Normal)
        }
        Stmt::If {
            cond, then, els, ..
        } => {
            let c = eval(engine, inv, frame, cond)?.as_bool(cond.pos, "an `if` condition")?;
            if c {
                exec_block(engine, inv, frame, then)
            } else {
                exec_block(engine, inv, frame, els)
            }
        }
        Stmt::For {
            var, iter, body, ..
        } => {
            let items: Vec<RtValue> = match eval(engine, inv, frame, iter)? {
                RtValue::Plain(Value::List(xs)) => xs.into_iter().map(RtValue::Plain).collect(),
                RtValue::Path(p) => p
                    .elements
                    .into_iter()
                    .map(|id| RtValue::Plain(Value::Ref(id)))
                    .collect(),
                other => {
                    return Err(script(
                        iter.pos,
                        format!("`for` iterates over a list or path, got {}", other.kind_name()),
                    ))
                }
            };
            for item in items {
                frame.push();
                frame.declare(var, item);
                for s in body {
                    match exec_stmt(engine, inv, frame, s) {
                        Ok(Sig::Normal) => {}
                        other => {
                            frame.pop();
                            return other;
                        }
                    }
                }
                frame.pop();
            }
            Ok(Sig::Normal)
        }
        Stmt::Spawn { walker, target, .. } => {
            let w = eval(engine, inv, frame, walker)?.as_ref_id(walker.pos, "the spawned walker")?;
            let t = match eval(engine, inv, frame, target)? {
                RtValue::Path(p) => SpawnTarget::Path(p),
                v => {
                    let id = v.as_ref_id(target.pos, "the spawn target")?;
                    if engine.state().is_edge(id) {
                        SpawnTarget::Edge(id)
                    } else {
                        SpawnTarget::Node(id)
                    }
                }
            };
            engine.spawn(w, t)?;
            Ok(Sig::Normal)
        }
        Stmt::Visit { target, pos } => {
            let inv = inv.ok_or_else(|| script(*pos, "`visit` outside an ability body"))?;
            let w = inv.walker;
            match eval(engine, Some(inv), frame, target)? {
                RtValue::Path(p) => engine.visit(w, VisitTarget::Path(p))?,
                RtValue::Plain(Value::Ref(id)) => visit_one(engine, w, id)?,
                RtValue::Plain(Value::List(items)) => {
                    for item in items {
                        match item {
                            Value::Ref(id) => visit_one(engine, w, id)?,
                            other => {
                                return Err(script(
                                    target.pos,
                                    format!(
                                        "`visit` of a list expects instance references, \
                                         got {}",
                                        other.kind_name()
                                    ),
                                ))
                            }
                        }
                    }
                }
                other => {
                    return Err(script(
                        target.pos,
                        format!(
                            "`visit` expects a node, an edge, a list of them, or a path, \
                             got {}",
                            other.kind_name()
                        ),
                    ))
                }
            }
            Ok(Sig::Normal)
        }
        Stmt::Skip { pos } => {
            if inv.is_none() {
                return Err(script(*pos, "`skip` outside an ability body"));
            }
            Ok(Sig::Skip)
        }
        Stmt::Disengage { pos } => {
            if inv.is_none() {
                return Err(script(*pos, "`disengage` outside an ability body"));
            }
            Ok(Sig::Disengage)
        }
        Stmt::Del { target, .. } => {
            let id = eval(engine, inv, frame, target)?.as_ref_id(target.pos, "`del` target")?;
            engine.state_mut().delete(id).map_err(RuntimeError::from)?;
            Ok(Sig::Normal)
        }
        Stmt::Report { value, .. } => {
            let v = eval(engine, inv, frame, value)?;
            let text = render_rt(engine.state(), &v);
            let walker = inv.map(|i| i.walker).unwrap_or(DRIVER);
            engine.report(walker, text);
            Ok(Sig::Normal)
        }
        Stmt::Connect {
            src,
            edge_type,
            fields,
            dst,
            pos,
        } => {
            let s = eval(engine, inv, frame, src)?.as_ref_id(src.pos, "the connect source")?;
            let d = eval(engine, inv, frame, dst)?.as_ref_id(dst.pos, "the connect target")?;
            let mut props = Vec::new();
            for (name, value) in fields {
                let v = eval(engine, inv, frame, value)?.plain(value.pos)?;
                props.push((name.clone(), v));
            }
            let arch = engine
                .state()
                .registry()
                .lookup(edge_type)
                .ok_or_else(|| script(*pos, format!("unknown edge archetype `{edge_type}`")))?;
            engine
                .state_mut()
                .create_edge(arch, s, d, props)
                .map_err(RuntimeError::from)?;
            Ok(Sig::Normal)
        }
        Stmt::Expr { expr, .. } => {
            eval(engine, inv, frame, expr)?;
            Ok(Sig::Normal)
        }
    }
}

/// Enqueue a single visit target, dispatching on the instance's role.
fn visit_one(engine: &mut Engine, w: InstanceId, id: InstanceId) -> Result<(), RuntimeError> {
    let target = if engine.state().is_edge(id) {
        VisitTarget::Edge(id)
    } else {
        VisitTarget::Node(id)
    };
    engine.visit(w, target)
}

fn assign_target(
    engine: &mut Engine,
    inv: Option<&Invocation>,
    frame: &mut Frame,
    target: &Expr,
    value: RtValue,
) -> Result<(), RuntimeError> {
    match &target.kind {
        ExprKind::Name(name) => {
            if !frame.assign(name, value) {
                return Err(script(target.pos, format!("unknown name `{name}`")));
            }
            Ok(())
        }
        ExprKind::Field { base, name } => {
            let id = eval(engine, inv, frame, base)?.as_ref_id(base.pos, "the assignment base")?;
            let v = value.plain(target.pos)?;
            engine
                .state_mut()
                .set_prop(id, name, v)
                .map_err(RuntimeError::from)
        }
        ExprKind::Index { base, index } => {
            let idx = eval(engine, inv, frame, index)?;
            let container = eval(engine, inv, frame, base)?;
            let updated = match container {
                RtValue::Plain(Value::List(mut xs)) => {
                    let i = index_in(&idx, xs.len(), index.pos)?;
                    xs[i] = value.plain(target.pos)?;
                    RtValue::Plain(Value::List(xs))
                }
                RtValue::Plain(Value::Map(mut m)) => {
                    let RtValue::Plain(Value::Str(key)) = idx else {
                        return Err(script(index.pos, "map keys are strings"));
                    };
                    m.insert(key, value.plain(target.pos)?);
                    RtValue::Plain(Value::Map(m))
                }
                other => {
                    return Err(script(
                        base.pos,
                        format!("cannot index-assign into {}", other.kind_name()),
                    ))
                }
            };
            assign_target(engine, inv, frame, base, updated)
        }
        _ => Err(script(target.pos, "invalid assignment target")),
    }
}

/// Validate a list index against a length.
fn index_in(idx: &RtValue, len: usize, pos: Pos) -> Result<usize, RuntimeError> {
    let RtValue::Plain(Value::Int(i)) = idx else {
        return Err(script(pos, format!("list indexes are ints, got {}", idx.kind_name())));
    };
    if *i < 0 || *i as usize >= len {
        return Err(script(
            pos,
            format!("index {i} out of range for a list of length {len}"),
        ));
    }
    Ok(*i as usize)
}

fn eval(
    engine: &mut Engine,
    inv: Option<&Invocation>,
    frame: &mut Frame,
    expr: &Expr,
) -> Result<RtValue, RuntimeError> {
    let pos = expr.pos;
    match &expr.kind {
        ExprKind::Int(n) => Ok(RtValue::Plain(Value::Int(*n))),
        ExprKind::Float(x) => Ok(RtValue::Plain(Value::Float(*x))),
        ExprKind::Str(s) => Ok(RtValue::Plain(Value::Str(s.clone()))),
        ExprKind::Bool(b) => Ok(RtValue::Plain(Value::Bool(*b))),
        ExprKind::Null => Ok(RtValue::Plain(Value::Null)),
        ExprKind::List(items) => {
            let mut out = Vec::new();
            for item in items {
                out.push(eval(engine, inv, frame, item)?.plain(item.pos)?);
            }
            Ok(RtValue::Plain(Value::List(out)))
        }
        ExprKind::Name(name) => frame
            .get(name)
            .cloned()
            .ok_or_else(|| script(pos, format!("unknown name `{name}`"))),
        ExprKind::SelfRef => {
            let inv = inv.ok_or_else(|| script(pos, "`self` outside an ability body"))?;
            Ok(RtValue::Plain(Value::Ref(inv.self_ref())))
        }
        ExprKind::Here => {
            let inv = inv.ok_or_else(|| script(pos, "`here` outside an ability body"))?;
            let id = inv
                .here()
                .ok_or_else(|| script(pos, "`here` is only available in walker-owned abilities"))?;
            Ok(RtValue::Plain(Value::Ref(id)))
        }
        ExprKind::Visitor => {
            let inv = inv.ok_or_else(|| script(pos, "`visitor` outside an ability body"))?;
            let id = inv.visitor().ok_or_else(|| {
                script(pos, "`visitor` is only available in node- or edge-owned abilities")
            })?;
            Ok(RtValue::Plain(Value::Ref(id)))
        }
        ExprKind::PathRef => {
            let inv = inv.ok_or_else(|| script(pos, "`path` outside an ability body"))?;
            let refs = engine
                .state()
                .queue(inv.walker)
                .iter()
                .map(|id| Value::Ref(*id))
                .collect();
            Ok(RtValue::Plain(Value::List(refs)))
        }
        ExprKind::Field { base, name } => {
            let id = eval(engine, inv, frame, base)?.as_ref_id(base.pos, "a field access base")?;
            let v = engine
                .state()
                .get_prop(id, name)
                .map_err(RuntimeError::from)?
                .clone();
            Ok(RtValue::Plain(v))
        }
        ExprKind::Index { base, index } => {
            let idx = eval(engine, inv, frame, index)?;
            match eval(engine, inv, frame, base)? {
                RtValue::Plain(Value::List(xs)) => {
                    let i = index_in(&idx, xs.len(), index.pos)?;
                    Ok(RtValue::Plain(xs[i].clone()))
                }
                RtValue::Plain(Value::Map(m)) => {
                    let RtValue::Plain(Value::Str(key)) = idx else {
                        return Err(script(index.pos, "map keys are strings"));
                    };
                    m.get(&key).cloned().map(RtValue::Plain).ok_or_else(|| {
                        script(index.pos, format!("map has no key {key:?}"))
                    })
                }
                other => Err(script(
                    base.pos,
                    format!("cannot index into {}", other.kind_name()),
                )),
            }
        }
        ExprKind::Call { name, args } => eval_call(engine, inv, frame, pos, name, args),
        ExprKind::Construct { type_name, fields } => {
            let mut props = Vec::new();
            for (name, value) in fields {
                let v = eval(engine, inv, frame, value)?.plain(value.pos)?;
                props.push((name.clone(), v));
            }
            let arch = engine
                .state()
                .registry()
                .lookup(type_name)
                .ok_or_else(|| script(pos, format!("unknown archetype `{type_name}`")))?;
            let id = engine
                .state_mut()
                .create_object(arch, props)
                .map_err(RuntimeError::from)?;
            Ok(RtValue::Plain(Value::Ref(id)))
        }
        ExprKind::NodesQuery { dir, base, filter } => {
            let node =
                eval(engine, inv, frame, base)?.as_ref_id(base.pos, "a node query base")?;
            let filter_arch = resolve_filter(engine.state(), filter.as_deref(), pos)?;
            let st = engine.state();
            let mut out = Vec::new();
            for edge in st.edges_at(node, *dir, None).map_err(RuntimeError::from)? {
                let (s, d) = st.edge_endpoints(edge).map_err(RuntimeError::from)?;
                let far = if s == node { d } else { s };
                if let Some(f) = filter_arch {
                    let arch = st.instance(far).map_err(RuntimeError::from)?.archetype;
                    if !st.registry().is_subtype(arch, f) {
                        continue;
                    }
                }
                out.push(Value::Ref(far));
            }
            Ok(RtValue::Plain(Value::List(out)))
        }
        ExprKind::EdgesQuery { dir, base, filter } => {
            let node =
                eval(engine, inv, frame, base)?.as_ref_id(base.pos, "an edge query base")?;
            let filter_arch = resolve_filter(engine.state(), filter.as_deref(), pos)?;
            let edges = engine
                .state()
                .edges_at(node, *dir, filter_arch)
                .map_err(RuntimeError::from)?;
            Ok(RtValue::Plain(Value::List(
                edges.into_iter().map(Value::Ref).collect(),
            )))
        }
        ExprKind::PathQuery {
            origin,
            type_name,
            include_edges,
            dir,
        } => {
            let o = eval(engine, inv, frame, origin)?.as_ref_id(origin.pos, "a path query origin")?;
            let include =
                eval(engine, inv, frame, include_edges)?.as_bool(include_edges.pos, "include_edges")?;
            let st = engine.state();
            let t = st
                .registry()
                .lookup(type_name)
                .ok_or_else(|| script(pos, format!("unknown archetype `{type_name}`")))?;
            let tkind = st.registry().kind(t);
            // Elements of the filter's role must match it (by subtype);
            // elements of the other role pass, so a node filter still
            // crosses edges and `include_edges` keeps its meaning.
            let pred = |id: InstanceId| -> bool {
                let Ok(arch_kind) = st.instance(id).map(|i| (i.archetype, i.role())) else {
                    return false;
                };
                let (arch, role) = arch_kind;
                if role == tkind {
                    st.registry().is_subtype(arch, t)
                } else {
                    true
                }
            };
            let p = path_query(st, o, &pred, include, *dir).map_err(RuntimeError::from)?;
            Ok(RtValue::Path(p))
        }
        ExprKind::Binary { op, lhs, rhs } => {
            if matches!(op, BinOp::And | BinOp::Or) {
                let l = eval(engine, inv, frame, lhs)?.as_bool(lhs.pos, "a logic operand")?;
                let out = match (op, l) {
                    (BinOp::And, false) => false,
                    (BinOp::Or, true) => true,
                    _ => eval(engine, inv, frame, rhs)?.as_bool(rhs.pos, "a logic operand")?,
                };
                return Ok(RtValue::Plain(Value::Bool(out)));
            }
            let l = eval(engine, inv, frame, lhs)?;
            let r = eval(engine, inv, frame, rhs)?;
            eval_binary(*op, l, r, pos)
        }
        ExprKind::Unary { op, operand } => {
            let v = eval(engine, inv, frame, operand)?;
            match op {
                UnOp::Not => Ok(RtValue::Plain(Value::Bool(
                    !v.as_bool(operand.pos, "a `not` operand")?,
                ))),
                UnOp::Neg => match v {
                    RtValue::Plain(Value::Int(n)) => n
                        .checked_neg()
                        .map(|n| RtValue::Plain(Value::Int(n)))
                        .ok_or_else(|| script(pos, "integer overflow")),
                    RtValue::Plain(Value::Float(x)) => Ok(RtValue::Plain(Value::Float(-x))),
                    other => Err(script(
                        operand.pos,
                        format!("cannot negate {}", other.kind_name()),
                    )),
                },
            }
        }
    }
}

fn resolve_filter(
    state: &SystemState,
    filter: Option<&str>,
    pos: Pos,
) -> Result<Option<crate::archetype::ArchetypeId>, RuntimeError> {
    match filter {
        None => Ok(None),
        Some(name) => state
            .registry()
            .lookup(name)
            .map(Some)
            .ok_or_else(|| script(pos, format!("unknown archetype `{name}`"))),
    }
}

fn eval_call(
    engine: &mut Engine,
    inv: Option<&Invocation>,
    frame: &mut Frame,
    pos: Pos,
    name: &str,
    args: &[Expr],
) -> Result<RtValue, RuntimeError> {
    let mut vals = Vec::new();
    for arg in args {
        vals.push(eval(engine, inv, frame, arg)?);
    }
    let arg = |i: usize| -> &RtValue { &vals[i] };
    match (name, vals.len()) {
        ("len", 1) => {
            let n = match arg(0) {
                RtValue::Plain(Value::Str(s)) => s.chars().count(),
                RtValue::Plain(Value::List(xs)) => xs.len(),
                RtValue::Plain(Value::Map(m)) => m.len(),
                RtValue::Path(p) => p.elements.len(),
                other => {
                    return Err(script(
                        pos,
                        format!("`len` takes a str, list, map, or path, got {}", other.kind_name()),
                    ))
                }
            };
            Ok(RtValue::Plain(Value::Int(n as i64)))
        }
        ("substr", 3) => {
            let RtValue::Plain(Value::Str(s)) = arg(0) else {
                return Err(script(pos, "`substr` takes a str and two ints"));
            };
            let (RtValue::Plain(Value::Int(a)), RtValue::Plain(Value::Int(b))) = (arg(1), arg(2))
            else {
                return Err(script(pos, "`substr` takes a str and two ints"));
            };
            let chars: Vec<char> = s.chars().collect();
            let n = chars.len() as i64;
            let lo = (*a).clamp(0, n) as usize;
            let hi = (*b).clamp(lo as i64, n) as usize;
            Ok(RtValue::Plain(Value::Str(chars[lo..hi].iter().collect())))
        }
        ("search_tweets", 2) => {
            let (RtValue::Plain(Value::Str(a)), RtValue::Plain(Value::Str(b))) = (arg(0), arg(1))
            else {
                return Err(script(pos, "`search_tweets` takes two strs"));
            };
            Ok(RtValue::Plain(Value::Float(similarity(a, b))))
        }
        ("src", 1) | ("dst", 1) => {
            let id = arg(0).as_ref_id(pos, "the argument of `src`/`dst`")?;
            let (s, d) = engine.state().edge_endpoints(id).map_err(RuntimeError::from)?;
            Ok(RtValue::Plain(Value::Ref(if name == "src" { s } else { d })))
        }
        _ => Err(script(pos, format!("unknown function `{name}`"))),
    }
}

/// Similarity of two texts in `[0, 1]`: the length of their longest common
/// subsequence over the length of the longer text; two empty texts match
/// exactly.
fn similarity(a: &str, b: &str) -> f64 {
    let aa: Vec<char> = a.chars().collect();
    let bb: Vec<char> = b.chars().collect();
    if aa.is_empty() && bb.is_empty() {
        return 1.0;
    }
    let mut prev = vec![0usize; bb.len() + 1];
    let mut cur = vec![0usize; bb.len() + 1];
    for &ca in &aa {
        for (j, &cb) in bb.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
        cur.fill(0);
    }
    let lcs = prev[bb.len()];
    lcs as f64 / aa.len().max(bb.len()) as f64
}

enum Nums {
    Ints(i64, i64),
    Floats(f64, f64),
}

fn nums(l: &Value, r: &Value) -> Option<Nums> {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => Some(Nums::Ints(*a, *b)),
        (Value::Int(a), Value::Float(b)) => Some(Nums::Floats(*a as f64, *b)),
        (Value::Float(a), Value::Int(b)) => Some(Nums::Floats(*a, *b as f64)),
        (Value::Float(a), Value::Float(b)) => Some(Nums::Floats(*a, *b)),
        _ => None,
    }
}

fn eval_binary(op: BinOp, l: RtValue, r: RtValue, pos: Pos) -> Result<RtValue, RuntimeError> {
    use Value as V;
    if matches!(op, BinOp::Eq | BinOp::Ne) {
        let eq = l == r;
        return Ok(RtValue::Plain(V::Bool(if op == BinOp::Eq { eq } else { !eq })));
    }
    let type_err = |op_name: &str| {
        script(
            pos,
            format!("cannot apply `{op_name}` to {} and {}", l.kind_name(), r.kind_name()),
        )
    };
    let (RtValue::Plain(lv), RtValue::Plain(rv)) = (&l, &r) else {
        return Err(type_err(op_symbol(op)));
    };
    let out = match op {
        BinOp::Add => match (lv, rv) {
            (V::Str(a), V::Str(b)) => V::Str(format!("{a}{b}")),
            (V::List(a), V::List(b)) => {
                let mut xs = a.clone();
                xs.extend(b.iter().cloned());
                V::List(xs)
            }
            _ => match nums(lv, rv).ok_or_else(|| type_err("+"))? {
                Nums::Ints(a, b) => {
                    V::Int(a.checked_add(b).ok_or_else(|| script(pos, "integer overflow"))?)
                }
                Nums::Floats(a, b) => V::Float(a + b),
            },
        },
        BinOp::Sub | BinOp::Mul => match nums(lv, rv).ok_or_else(|| type_err(op_symbol(op)))? {
            Nums::Ints(a, b) => {
                let n = if op == BinOp::Sub {
                    a.checked_sub(b)
                } else {
                    a.checked_mul(b)
                };
                V::Int(n.ok_or_else(|| script(pos, "integer overflow"))?)
            }
            Nums::Floats(a, b) => V::Float(if op == BinOp::Sub { a - b } else { a * b }),
        },
        BinOp::Div | BinOp::Rem => match nums(lv, rv).ok_or_else(|| type_err(op_symbol(op)))? {
            Nums::Ints(_, 0) => return Err(script(pos, "division by zero")),
            Nums::Ints(a, b) => {
                let n = if op == BinOp::Div {
                    a.checked_div(b)
                } else {
                    a.checked_rem(b)
                };
                V::Int(n.ok_or_else(|| script(pos, "integer overflow"))?)
            }
            Nums::Floats(a, b) => V::Float(if op == BinOp::Div { a / b } else { a % b }),
        },
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            let ord = match (lv, rv) {
                (V::Str(a), V::Str(b)) => a.cmp(b),
                _ => match nums(lv, rv).ok_or_else(|| type_err(op_symbol(op)))? {
                    Nums::Ints(a, b) => a.cmp(&b),
                    Nums::Floats(a, b) => a
                        .partial_cmp(&b)
                        .ok_or_else(|| script(pos, "cannot order NaN"))?,
                },
            };
            let ok = match op {
                BinOp::Lt => ord.is_lt(),
                BinOp::Le => ord.is_le(),
                BinOp::Gt => ord.is_gt(),
                BinOp::Ge => ord.is_ge(),
                _ => unreachable!(),
            };
            V::Bool(ok)
        }
        BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne => unreachable!("handled above"),
    };
    Ok(RtValue::Plain(out))
}

fn op_symbol(op: BinOp) -> &'static str {
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

/// Render a runtime value for a report: property values render deeply
/// (refs include archetype and props), paths render origin plus elements.
fn render_rt(state: &SystemState, v: &RtValue) -> String {
    match v {
        RtValue::Plain(value) => state.render_value_deep(value),
        RtValue::Path(p) => {
            let mut out = format!("path(@{})[", p.origin);
            for (i, el) in p.elements.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('@');
                out.push_str(&el.to_string());
            }
            out.push(']');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> RunOutput {
        match run_source(src, 10_000) {
            Ok(out) => out,
            Err(RunFailure::Diagnostics(ds)) => {
                panic!("diagnostics: {}", ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))
            }
            Err(RunFailure::Runtime { pos, error, .. }) => {
                panic!("runtime error at {pos}: {error}")
            }
        }
    }

    fn runtime_err(src: &str) -> (Pos, RuntimeError) {
        match run_source(src, 10_000) {
            Err(RunFailure::Runtime { pos, error, .. }) => (pos, error),
            Ok(_) => panic!("expected a runtime failure"),
            Err(RunFailure::Diagnostics(ds)) => panic!("unexpected diagnostics: {ds:?}"),
        }
    }

    #[test]
    fn reports_and_driver_arithmetic() {
        let out = run("report 1 + 2 * 3;\nreport \"a\" + \"b\";\nreport [1] + [2];\n");
        assert_eq!(out.reports, vec!["7", "\"ab\"", "[1,2]"]);
    }

    #[test]
    fn constructors_apply_defaults_and_overrides() {
        let out = run(
            "node Profile { has username: str = \"anon\"; has karma: int = 7; }\n\
             let a = Profile{username = \"alice\"};\n\
             report a.username;\nreport a.karma;\nreport a;\n",
        );
        assert_eq!(out.reports[0], "\"alice\"");
        assert_eq!(out.reports[1], "7");
        assert_eq!(out.reports[2], "Profile#1{username=\"alice\",karma=7}");
    }

    #[test]
    fn connect_builds_edges_and_queries_see_them() {
        let out = run(
            "node Spot { has tag: str = \"\"; }\n\
             edge Link { has weight: int = 0; }\n\
             let a = Spot{tag = \"a\"};\n\
             let b = Spot{tag = \"b\"};\n\
             let c = Spot{tag = \"c\"};\n\
             connect a -[Link{weight = 2}]-> b;\n\
             connect a -[Link]-> c;\n\
             connect c -[Link]-> a;\n\
             report len(out(a));\n\
             report len(in(a));\n\
             report len(any(a));\n\
             report len(out_edges(a, Link));\n\
             let e = out_edges(a)[0];\n\
             report e.weight;\n\
             report src(e) == a and dst(e) == b;\n",
        );
        assert_eq!(out.reports, vec!["2", "1", "3", "2", "2", "true"]);
    }

    #[test]
    fn walkers_traverse_and_see_context() {
        let out = run(
            "node Spot { has tag: str = \"\";\n\
             \x20 can note with Agent entry { report self.tag + \"<-\" + visitor.mood; } }\n\
             edge Link {}\n\
             walker Agent { has mood: str = \"curious\";\n\
             \x20 can roam with Spot entry { visit out(here); } }\n\
             let a = Spot{tag = \"a\"};\n\
             let b = Spot{tag = \"b\"};\n\
             connect a -[Link]-> b;\n\
             spawn Agent{} with a;\n",
        );
        assert_eq!(out.reports, vec!["\"a<-curious\"", "\"b<-curious\""]);
        assert!(out.trace.contains("spawn"));
        assert!(out.trace.contains("Spot.note/entry"));
    }

    #[test]
    fn path_ref_names_the_destination_queue() {
        let out = run(
            "node Spot {}\n\
             edge Link {}\n\
             walker Agent {\n\
             \x20 can fan with Spot entry {\n\
             \x20   visit out(here);\n\
             \x20   report len(path);\n\
             \x20   skip;\n\
             \x20 }\n\
             }\n\
             let hub = Spot{};\n\
             connect hub -[Link]-> Spot{};\n\
             connect hub -[Link]-> Spot{};\n\
             spawn Agent{} with hub;\n",
        );
        // At the hub both neighbors are queued; after skipping to the first
        // neighbor the queue holds one; at the last it is empty.
        assert_eq!(out.reports, vec!["2", "1", "0"]);
    }

    #[test]
    fn pathq_produces_visitable_paths() {
        let out = run(
            "node Profile {}\n\
             node Tweet { has text: str = \"\"; }\n\
             edge Post {}\n\
             walker Reader {\n\
             \x20 has seen: int = 0;\n\
             \x20 has scanned: bool = false;\n\
             \x20 can scan with Profile entry {\n\
             \x20   if not self.scanned {\n\
             \x20     self.scanned = true;\n\
             \x20     visit pathq(here, Tweet, false, out);\n\
             \x20   }\n\
             \x20 }\n\
             \x20 can count with Tweet entry { self.seen = self.seen + 1; }\n\
             }\n\
             let p = Profile{};\n\
             connect p -[Post]-> Tweet{text = \"one\"};\n\
             connect p -[Post]-> Tweet{text = \"two\"};\n\
             let w = Reader{};\n\
             spawn w with p;\n\
             report w.seen;\n\
             report pathq(p, Tweet, true, out);\n",
        );
        assert_eq!(out.reports[0], "2");
        // include_edges keeps the entry edge before each tweet.
        assert_eq!(out.reports[1], "path(@1)[@3, @2, @5, @4]");
    }

    #[test]
    fn spawn_accepts_path_targets() {
        let out = run(
            "node Spot { has tag: str = \"\";\n\
             \x20 can note with Agent entry { report self.tag; } }\n\
             edge Link {}\n\
             walker Agent {}\n\
             let a = Spot{tag = \"a\"};\n\
             let b = Spot{tag = \"b\"};\n\
             connect a -[Link]-> b;\n\
             spawn Agent{} with pathq(a, Spot, false, out);\n",
        );
        assert_eq!(out.reports, vec!["\"a\"", "\"b\""]);
    }

    #[test]
    fn disengage_stops_the_walk() {
        let out = run(
            "node Spot { has stop: bool = false; }\n\
             edge Link {}\n\
             walker Agent {\n\
             \x20 can roam with Spot entry {\n\
             \x20   if here.stop { disengage; }\n\
             \x20   report here;\n\
             \x20   visit out(here);\n\
             \x20 }\n\
             }\n\
             let a = Spot{};\n\
             let b = Spot{stop = true};\n\
             let c = Spot{};\n\
             connect a -[Link]-> b;\n\
             connect b -[Link]-> c;\n\
             spawn Agent{} with a;\n",
        );
        // b disengages before reporting, so only a is reported and c is
        // never reached.
        assert_eq!(out.reports.len(), 1);
        assert_eq!(out.reports[0], "Spot#1{stop=false}");
        assert!(out.trace.contains("disengage"));
        assert!(!out.trace.contains("loc=3"), "walker must never reach c:\n{}", out.trace);
    }

    #[test]
    fn for_loops_conditionals_and_assignment() {
        let out = run(
            "let total = 0;\n\
             for x in [1, 2, 3, 4] {\n\
             \x20 if x % 2 == 0 { total = total + x; }\n\
             }\n\
             report total;\n\
             let m = [10, 20];\n\
             m[1] = 25;\n\
             report m;\n",
        );
        assert_eq!(out.reports, vec!["6", "[10,25]"]);
    }

    #[test]
    fn builtins_compute_expected_values() {
        let out = run(
            "report len(\"héllo\");\n\
             report substr(\"walker\", 1, 4);\n\
             report substr(\"walker\", -3, 99);\n\
             report search_tweets(\"\", \"\");\n\
             report search_tweets(\"abcd\", \"bd\");\n\
             report search_tweets(\"same\", \"same\");\n\
             report search_tweets(\"abc\", \"xyz\");\n",
        );
        assert_eq!(
            out.reports,
            vec!["5", "\"alk\"", "\"walker\"", "1.0", "0.5", "1.0", "0.0"]
        );
    }

    #[test]
    fn script_errors_carry_positions() {
        let (pos, err) = runtime_err("let x = 1;\nreport x / 0;\n");
        assert_eq!((pos.line, pos.col), (2, 1));
        // The expression position (the left operand, 2:8) is baked into
        // the message.
        assert!(err.to_string().contains("2:8: division by zero"), "{err}");

        let (_, err) = runtime_err("report [1, 2][5];\n");
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn engine_errors_surface_with_statement_positions() {
        let (pos, err) = runtime_err(
            "node Spot {}\nwalker Agent {}\n\
             let a = Spot{};\ndel a;\nspawn Agent{} with a;\n",
        );
        assert_eq!(pos.line, 5);
        assert!(matches!(err, RuntimeError::Core(_)), "{err:?}");
    }

    #[test]
    fn del_rejects_active_walkers() {
        let (_, err) = runtime_err(
            "node Spot { can bite with Agent entry { del visitor; } }\n\
             walker Agent {}\n\
             spawn Agent{} with Spot{};\n",
        );
        assert!(err.to_string().contains("active"), "{err}");
    }

    #[test]
    fn budget_exhaustion_is_recognizable() {
        let src = "node Spot {}\nedge Link {}\n\
                   walker Agent { can loop_on with Spot entry { visit out(here); } }\n\
                   let a = Spot{};\nlet b = Spot{};\n\
                   connect a -[Link]-> b;\nconnect b -[Link]-> a;\n\
                   spawn Agent{} with a;\n";
        match run_source(src, 25) {
            Err(RunFailure::Runtime { error, trace, .. }) => {
                assert!(error.is_budget(), "{error}");
                assert!(trace.lines().last().unwrap().contains("error"));
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_block_execution() {
        match run_source("report missing;\n", 100) {
            Err(RunFailure::Diagnostics(ds)) => {
                assert_eq!(ds.len(), 1);
                assert!(ds[0].message.contains("unknown name"));
            }
            other => panic!("expected diagnostics, got {other:?}"),
        }
    }

    #[test]
    fn walker_inheritance_runs_ancestor_abilities() {
        let out = run(
            "node Spot {}\n\
             walker Base { can hello with Spot entry { report \"base\"; } }\n\
             walker Child : Base { can more with Spot entry { report \"child\"; } }\n\
             spawn Child{} with Spot{};\n",
        );
        assert_eq!(out.reports, vec!["\"base\"", "\"child\""]);
    }

    #[test]
    fn determinism_double_run() {
        let src = "node Spot { has tag: str = \"\"; }\nedge Link {}\n\
                   walker Agent { can roam with Spot entry { visit out(here); } }\n\
                   let a = Spot{tag = \"a\"};\nlet b = Spot{tag = \"b\"};\n\
                   connect a -[Link]-> b;\nspawn Agent{} with a;\nreport 1;\n";
        let one = run(src);
        let two = run(src);
        assert_eq!(one, two);
    }
}
