//! The walker execution engine: spawn and visit in all their variants, the
//! movement loop between nodes and edges, edge auto-queueing, skip and
//! disengage, queue exhaustion, and deterministic trace emission.
//!
//! # The traversal loop
//!
//! [`Engine::spawn`] places an inactive walker per its target, then drives
//! it to quiescence synchronously (nested spawns from ability bodies stack
//! recursively). Each iteration of the loop:
//!
//! 1. charges one step against the budget and emits `arrive`;
//! 2. runs the entry phase — the location's matching abilities, then the
//!    walker's;
//! 3. standing on an edge, appends the exit node to the queue unless the
//!    whole queue already contains it (`autoqueue`);
//! 4. with an empty queue: at a node, emits `exhaust` and deactivates the
//!    walker in place (the location is preserved — the walker rests there);
//!    on an edge this is a fatal error, edges cannot be terminal;
//! 5. runs the exit phase — the walker's matching abilities, then the
//!    location's;
//! 6. dequeues the head and relocates (`depart` + `move`). Adjacency is the
//!    enqueueing statement's precondition, not the dequeue's: the queue is
//!    an itinerary, so sibling targets enqueued from one hub are reached in
//!    turn without re-walking the hub. Edge stays remain strict — entering
//!    an edge records the entry side (the current node when incident, the
//!    edge's source otherwise), leaving it must target its far node, and
//!    edge→edge movement is impossible.
//!
//! A body returning [`Flow::Skip`] abandons the rest of its phase and all
//! exit abilities and moves immediately (same validation, `skip` event); a
//! body returning [`Flow::Disengage`] removes the walker from the graph
//! with its queue cleared and properties retained. Neither runs any further
//! abilities at the abandoned location. Skip aborts an edge's entry phase
//! before auto-queueing happens, so a skip on an edge with an emptied queue
//! is the same fatal error as ordinary edge exhaustion.

use crate::abilities::{Flow, Invocation, OwnerSide, Phase};
use crate::archetype::{ArchetypeId, Registry};
use crate::error::{CoreError, RuntimeError};
use crate::graph::{Direction, InstanceId, SystemState};
use crate::path::{expand_path, validate_path, PathCollection};
use crate::trace::{Trace, TraceEvent, TraceKind};
use std::sync::Arc;

/// Walker id reported for events raised outside any walker context.
pub const DRIVER: InstanceId = InstanceId(0);

/// Default step budget guarding against unbounded traversals.
pub const DEFAULT_BUDGET: u64 = 100_000;

/// Where a spawn places its walker.
#[derive(Debug, Clone, PartialEq)]
pub enum SpawnTarget {
    Node(InstanceId),
    /// On an edge; entry side defaults to the edge's source.
    Edge(InstanceId),
    /// On an edge entered from an explicit endpoint.
    EdgeDirected { edge: InstanceId, entry: InstanceId },
    /// At the path's first element, with the rest queued verbatim.
    Path(PathCollection),
}

/// What a visit statement enqueues.
#[derive(Debug, Clone, PartialEq)]
pub enum VisitTarget {
    Node(InstanceId),
    Edge(InstanceId),
    /// Every incident edge matching the direction (and archetype filter),
    /// each followed by its far endpoint, in edge-id order.
    Direction {
        dir: Direction,
        filter: Option<ArchetypeId>,
    },
    /// A path collection, revalidated and expanded from the current node.
    Path(PathCollection),
}

/// Outcome of running one ability phase.
enum PhaseOutcome {
    Completed,
    Raised(Flow),
    /// The walker was deactivated or relocated under our feet (e.g. its
    /// location was deleted by a body); abandon the phase quietly.
    Interrupted,
}

/// The execution engine: owns the system state, the trace, collected
/// reports, and the step budget.
#[derive(Debug)]
pub struct Engine {
    state: SystemState,
    trace: Trace,
    reports: Vec<String>,
    budget: u64,
    steps: u64,
}

impl Engine {
    pub fn new(registry: Arc<Registry>) -> Engine {
        Engine {
            state: SystemState::new(registry),
            trace: Trace::new(),
            reports: Vec::new(),
            budget: DEFAULT_BUDGET,
            steps: 0,
        }
    }

    pub fn with_budget(registry: Arc<Registry>, budget: u64) -> Engine {
        let mut e = Engine::new(registry);
        e.budget = budget.max(1);
        e
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut SystemState {
        &mut self.state
    }

    pub fn events(&self) -> &[TraceEvent] {
        self.trace.events()
    }

    pub fn trace_text(&self) -> String {
        self.trace.render()
    }

    pub fn reports(&self) -> &[String] {
        &self.reports
    }

    fn emit(&mut self, kind: TraceKind, walker: InstanceId, detail: impl Into<String>) {
        let loc = if walker == DRIVER {
            None
        } else {
            self.state.location(walker)
        };
        self.trace.push(kind, walker, loc, detail);
    }

    /// Record a report payload: appended to the report list and traced.
    pub fn report(&mut self, walker: InstanceId, payload: impl Into<String>) {
        let payload = payload.into();
        self.emit(TraceKind::Report, walker, payload.clone());
        self.reports.push(payload);
    }

    // ---- spawn -----------------------------------------------------------

    /// Activate an inactive walker at the target and run it to quiescence.
    pub fn spawn(&mut self, w: InstanceId, target: SpawnTarget) -> Result<(), RuntimeError> {
        self.state.expect_walker(w).map_err(RuntimeError::from)?;
        if self.state.is_active(w) {
            return Err(RuntimeError::SpawnActive(w));
        }
        match target {
            SpawnTarget::Node(n) => {
                self.state.expect_node(n).map_err(RuntimeError::from)?;
                self.state.set_queue(w, Vec::new());
                self.place(w, n);
            }
            SpawnTarget::Edge(e) => {
                let (src, dst) = self.state.edge_endpoints(e).map_err(RuntimeError::from)?;
                self.state.set_queue(w, vec![dst]);
                self.place(w, e);
                self.state.set_source(w, e, src);
            }
            SpawnTarget::EdgeDirected { edge, entry } => {
                let (src, dst) = self.state.edge_endpoints(edge).map_err(RuntimeError::from)?;
                if entry != src && entry != dst {
                    return Err(CoreError::NotAnEndpoint { edge, node: entry }.into());
                }
                let far = self.state.next_node(edge, entry).map_err(RuntimeError::from)?;
                self.state.set_queue(w, vec![far]);
                self.place(w, edge);
                self.state.set_source(w, edge, entry);
            }
            SpawnTarget::Path(p) => {
                validate_path(&self.state, p.origin, &p.elements)?;
                let Some((&first, rest)) = p.elements.split_first() else {
                    return Err(RuntimeError::EmptySpawnPath);
                };
                if self.state.is_node(first) {
                    self.state.set_queue(w, rest.to_vec());
                    self.place(w, first);
                } else {
                    // First element is an edge: entered from its source,
                    // with the destination queued ahead of the remainder.
                    let (src, dst) = self.state.edge_endpoints(first).map_err(RuntimeError::from)?;
                    let mut queue = vec![dst];
                    queue.extend_from_slice(rest);
                    self.state.set_queue(w, queue);
                    self.place(w, first);
                    self.state.set_source(w, first, src);
                }
            }
        }
        self.emit(TraceKind::Spawn, w, "");
        self.run_walker(w)
    }

    fn place(&mut self, w: InstanceId, loc: InstanceId) {
        self.state.set_location(w, Some(loc));
        self.state.set_active(w, true);
    }

    // ---- visit -----------------------------------------------------------

    /// Append destinations to an active walker's queue. Enqueue only — the
    /// walker moves when its traversal loop dequeues.
    pub fn visit(&mut self, w: InstanceId, target: VisitTarget) -> Result<(), RuntimeError> {
        self.state.expect_walker(w).map_err(RuntimeError::from)?;
        if !self.state.is_active(w) {
            return Err(RuntimeError::WalkerInactive(w));
        }
        let loc = self.state.location(w).expect("active walkers are located");
        if self.state.is_edge(loc) {
            return Err(RuntimeError::VisitFromEdge { walker: w, edge: loc });
        }
        match target {
            VisitTarget::Node(n) => {
                self.state.expect_node(n).map_err(RuntimeError::from)?;
                if !self.state.has_connecting_edge(loc, n) {
                    return Err(RuntimeError::NotAdjacent {
                        walker: w,
                        from: loc,
                        target: n,
                    });
                }
                self.state.queue_push(w, n);
            }
            VisitTarget::Edge(e) => {
                let (src, dst) = self.state.edge_endpoints(e).map_err(RuntimeError::from)?;
                if loc != src && loc != dst {
                    return Err(RuntimeError::NotIncident {
                        walker: w,
                        from: loc,
                        edge: e,
                    });
                }
                let far = self.state.next_node(e, loc).map_err(RuntimeError::from)?;
                self.state.queue_push(w, e);
                self.state.queue_push(w, far);
            }
            VisitTarget::Direction { dir, filter } => {
                let edges = self
                    .state
                    .edges_at(loc, dir, filter)
                    .map_err(RuntimeError::from)?;
                for e in edges {
                    let far = self.state.next_node(e, loc).expect("incident edge");
                    self.state.queue_push(w, e);
                    self.state.queue_push(w, far);
                }
            }
            VisitTarget::Path(p) => {
                validate_path(&self.state, p.origin, &p.elements)?;
                let Some(&first) = p.elements.first() else {
                    return Ok(()); // visiting an empty path enqueues nothing
                };
                let reachable = if self.state.is_node(first) {
                    first == loc || self.state.has_connecting_edge(loc, first)
                } else {
                    let (src, dst) = self.state.edge_endpoints(first).map_err(RuntimeError::from)?;
                    loc == src || loc == dst
                };
                if !reachable {
                    return Err(RuntimeError::PathStartUnreachable {
                        walker: w,
                        from: loc,
                        first,
                    });
                }
                for dest in expand_path(&self.state, &p, loc)? {
                    self.state.queue_push(w, dest);
                }
            }
        }
        Ok(())
    }

    // ---- skip / disengage ------------------------------------------------

    /// The skip transition: bypass whatever phase work remains and move to
    /// the queue head immediately. With an empty queue this exhausts at a
    /// node and is fatal on an edge. Inside a run, bodies request this by
    /// returning [`Flow::Skip`]; the engine then resumes the traversal loop
    /// at the new location.
    pub fn skip(&mut self, w: InstanceId) -> Result<(), RuntimeError> {
        if !self.state.is_active(w) {
            return Err(RuntimeError::WalkerInactive(w));
        }
        let loc = self.state.location(w).expect("active walkers are located");
        self.emit(TraceKind::Skip, w, "");
        match self.state.queue_pop(w) {
            None => {
                if self.state.is_node(loc) {
                    self.exhaust(w);
                    Ok(())
                } else {
                    let err = RuntimeError::EdgeTerminal { walker: w, edge: loc };
                    self.emit(TraceKind::Error, w, err.to_string());
                    Err(err)
                }
            }
            Some(head) => self.relocate(w, loc, head, true),
        }
    }

    /// The disengage transition: clear the queue, leave the graph, go
    /// inactive. Properties are retained. Bodies request this by returning
    /// [`Flow::Disengage`].
    pub fn disengage(&mut self, w: InstanceId) -> Result<(), RuntimeError> {
        if !self.state.is_active(w) {
            return Err(RuntimeError::WalkerInactive(w));
        }
        let loc = self.state.location(w).expect("active walkers are located");
        self.emit(TraceKind::Disengage, w, "");
        self.state.queue_clear(w);
        if self.state.is_edge(loc) {
            self.state.clear_source(w, loc);
        }
        self.state.set_location(w, None);
        self.state.set_active(w, false);
        Ok(())
    }

    // ---- the traversal loop ---------------------------------------------

    fn run_walker(&mut self, w: InstanceId) -> Result<(), RuntimeError> {
        loop {
            self.steps += 1;
            if self.steps > self.budget {
                let err = RuntimeError::BudgetExceeded(self.budget);
                self.emit(TraceKind::Error, w, err.to_string());
                return Err(err);
            }
            let Some(loc) = self.state.location(w) else {
                return Ok(());
            };
            self.emit(TraceKind::Arrive, w, "");

            match self.run_phase(w, loc, Phase::Entry)? {
                PhaseOutcome::Raised(Flow::Skip) => {
                    self.skip(w)?;
                    if self.state.is_active(w) {
                        continue;
                    }
                    return Ok(());
                }
                PhaseOutcome::Raised(Flow::Disengage) => {
                    self.disengage(w)?;
                    return Ok(());
                }
                PhaseOutcome::Raised(Flow::Continue) => unreachable!(),
                PhaseOutcome::Interrupted => {
                    if self.state.is_active(w) {
                        continue;
                    }
                    return Ok(());
                }
                PhaseOutcome::Completed => {}
            }

            if self.state.is_edge(loc) {
                self.auto_queue(w, loc);
            }

            if self.state.queue(w).is_empty() {
                if self.state.is_node(loc) {
                    self.exhaust(w);
                    return Ok(());
                }
                let err = RuntimeError::EdgeTerminal { walker: w, edge: loc };
                self.emit(TraceKind::Error, w, err.to_string());
                return Err(err);
            }

            match self.run_phase(w, loc, Phase::Exit)? {
                PhaseOutcome::Raised(Flow::Skip) => {
                    self.skip(w)?;
                    if self.state.is_active(w) {
                        continue;
                    }
                    return Ok(());
                }
                PhaseOutcome::Raised(Flow::Disengage) => {
                    self.disengage(w)?;
                    return Ok(());
                }
                PhaseOutcome::Raised(Flow::Continue) => unreachable!(),
                PhaseOutcome::Interrupted => {
                    if self.state.is_active(w) {
                        continue;
                    }
                    return Ok(());
                }
                PhaseOutcome::Completed => {}
            }

            let head = self.state.queue_pop(w).expect("checked nonempty above");
            self.emit(TraceKind::Depart, w, "");
            self.relocate(w, loc, head, false)?;
        }
    }

    /// Queue exhaustion at a node: the walker goes inactive but stays put.
    fn exhaust(&mut self, w: InstanceId) {
        self.emit(TraceKind::Exhaust, w, "");
        self.state.set_active(w, false);
    }

    /// After an edge's entry phase, append the exit node to the queue
    /// unless the whole queue already holds it.
    fn auto_queue(&mut self, w: InstanceId, edge: InstanceId) {
        let entry = self
            .state
            .source(w, edge)
            .expect("walker on an edge always has a source");
        let far = self.state.next_node(edge, entry).expect("entry is an endpoint");
        if !self.state.queue(w).contains(&far) {
            self.state.queue_push(w, far);
            self.emit(TraceKind::AutoQueue, w, format!("queued={far}"));
        }
    }

    /// Movement to a dequeued destination. Adjacency was the enqueuing
    /// statement's precondition; the dequeue itself relocates directly (the
    /// queue is an itinerary of places, so sibling targets enqueued from a
    /// hub are reached without re-walking the hub). Leaving an edge stays
    /// strict: the only exit is its far node, and edge→edge is impossible.
    /// `via_skip` means the `skip` event was already emitted in place of
    /// `depart`; otherwise a `move` event follows the caller's `depart`.
    fn relocate(
        &mut self,
        w: InstanceId,
        from: InstanceId,
        head: InstanceId,
        via_skip: bool,
    ) -> Result<(), RuntimeError> {
        let fail = |engine: &mut Engine, err: RuntimeError| {
            engine.emit(TraceKind::Error, w, err.to_string());
            Err(err)
        };
        if self.state.is_node(from) {
            if self.state.is_edge(head) {
                // Entering an edge records the entry side: the current node
                // when incident, the edge's source otherwise.
                let (src, dst) = self.state.edge_endpoints(head).map_err(RuntimeError::from)?;
                let entry = if from == src || from == dst { from } else { src };
                self.state.set_location(w, Some(head));
                self.state.set_source(w, head, entry);
            } else {
                self.state.expect_node(head).map_err(RuntimeError::from)?;
                self.state.set_location(w, Some(head));
            }
        } else {
            // Leaving an edge: the only legal destination is its exit node.
            if self.state.is_edge(head) {
                return fail(self, RuntimeError::EdgeToEdge { walker: w, from, head });
            }
            let entry = self
                .state
                .source(w, from)
                .expect("walker on an edge always has a source");
            let far = self.state.next_node(from, entry).map_err(RuntimeError::from)?;
            if head != far {
                return fail(
                    self,
                    RuntimeError::WrongExitNode {
                        walker: w,
                        edge: from,
                        target: head,
                    },
                );
            }
            self.state.clear_source(w, from);
            self.state.set_location(w, Some(head));
        }
        if !via_skip {
            self.emit(TraceKind::Move, w, "");
        }
        Ok(())
    }

    /// Run one ability phase. Entry: location abilities then walker
    /// abilities; exit: walker abilities then location abilities. The match
    /// list is fixed when the phase starts; a body raising skip/disengage
    /// aborts the remainder.
    fn run_phase(
        &mut self,
        w: InstanceId,
        loc: InstanceId,
        phase: Phase,
    ) -> Result<PhaseOutcome, RuntimeError> {
        let registry = self.state.registry().clone();
        let walker_arch = self.state.instance(w).map_err(RuntimeError::from)?.archetype;
        let loc_arch = self.state.instance(loc).map_err(RuntimeError::from)?.archetype;

        let location_side = registry
            .matching_abilities(loc_arch, walker_arch, phase)
            .into_iter()
            .map(|(decl, i)| (OwnerSide::Location, decl, i));
        let walker_side = registry
            .matching_abilities(walker_arch, loc_arch, phase)
            .into_iter()
            .map(|(decl, i)| (OwnerSide::Walker, decl, i));
        let plan: Vec<(OwnerSide, ArchetypeId, usize)> = match phase {
            Phase::Entry => location_side.chain(walker_side).collect(),
            Phase::Exit => walker_side.chain(location_side).collect(),
        };

        for (side, decl, index) in plan {
            // A previous body may have deleted the location or deactivated
            // the walker; stop quietly and let the loop reassess.
            if !self.state.is_active(w) || self.state.location(w) != Some(loc) {
                return Ok(PhaseOutcome::Interrupted);
            }
            let def = registry.ability(decl, index);
            let name = def.name.clone();
            let body = def.body.clone();
            self.emit(
                TraceKind::Ability,
                w,
                format!("{}.{}/{}", registry.name(decl), name, phase),
            );
            let inv = Invocation {
                walker: w,
                location: loc,
                owner: match side {
                    OwnerSide::Location => loc,
                    OwnerSide::Walker => w,
                },
                side,
                phase,
                declared_by: decl,
                ability: name.clone(),
            };
            match body.run(self, &inv) {
                Ok(Flow::Continue) => {}
                Ok(flow) => return Ok(PhaseOutcome::Raised(flow)),
                Err(source) => {
                    let err = RuntimeError::AbilityFailed {
                        walker: w,
                        location: loc,
                        ability: name,
                        source: Box::new(source),
                    };
                    self.emit(TraceKind::Error, w, err.to_string());
                    return Err(err);
                }
            }
        }
        Ok(PhaseOutcome::Completed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abilities::AbilityDef;
    use crate::archetype::{ArchetypeKind, FieldDef, ValueKind};
    use crate::error::PathError;
    use crate::trace::TraceKind;
    use crate::value::Value;
    use std::sync::Mutex;

    /// Shared label log for ability bodies.
    type Log = Arc<Mutex<Vec<String>>>;

    fn log() -> Log {
        Arc::new(Mutex::new(Vec::new()))
    }

    fn note(log: &Log, s: impl Into<String>) {
        log.lock().unwrap().push(s.into());
    }

    fn taken(log: &Log) -> Vec<String> {
        log.lock().unwrap().clone()
    }

    /// Registry with Spot (node, flag: bool), Link (edge), Agent (walker).
    fn base() -> (Registry, ArchetypeId, ArchetypeId, ArchetypeId) {
        let mut reg = Registry::new();
        let spot = reg.add_archetype("Spot", ArchetypeKind::Node, None).unwrap();
        reg.add_field(spot, FieldDef::new("flag", ValueKind::Bool)).unwrap();
        let link = reg.add_archetype("Link", ArchetypeKind::Edge, None).unwrap();
        let agent = reg.add_archetype("Agent", ArchetypeKind::Walker, None).unwrap();
        (reg, spot, link, agent)
    }

    fn engine(reg: Registry) -> Engine {
        Engine::new(Arc::new(reg))
    }

    fn node(e: &mut Engine, arch: ArchetypeId) -> InstanceId {
        e.state_mut().create_object(arch, vec![]).unwrap()
    }

    fn flagged(e: &mut Engine, arch: ArchetypeId) -> InstanceId {
        e.state_mut()
            .create_object(arch, vec![("flag".to_string(), Value::Bool(true))])
            .unwrap()
    }

    fn edge(e: &mut Engine, arch: ArchetypeId, a: InstanceId, b: InstanceId) -> InstanceId {
        e.state_mut().create_edge(arch, a, b, vec![]).unwrap()
    }

    fn kinds(e: &Engine) -> Vec<TraceKind> {
        e.events().iter().map(|ev| ev.kind).collect()
    }

    fn arrivals(e: &Engine) -> Vec<InstanceId> {
        e.events()
            .iter()
            .filter(|ev| ev.kind == TraceKind::Arrive)
            .map(|ev| ev.loc.unwrap())
            .collect()
    }

    // ---- spawn -----------------------------------------------------------

    #[test]
    fn spawn_on_bare_node_exhausts_in_place() {
        let (reg, spot, _, agent) = base();
        let mut e = engine(reg);
        let n = node(&mut e, spot);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        assert_eq!(kinds(&e), vec![TraceKind::Spawn, TraceKind::Arrive, TraceKind::Exhaust]);
        assert!(!e.state().is_active(w));
        assert_eq!(e.state().location(w), Some(n), "exhaustion rests in place");
        e.state().check_integrity().unwrap();
    }

    #[test]
    fn spawn_on_edge_crosses_to_destination_with_exact_trace() {
        let (reg, spot, link, agent) = base();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let ab = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Edge(ab)).unwrap();
        assert_eq!(e.state().location(w), Some(b));
        assert!(!e.state().is_active(w));
        assert_eq!(e.state().source(w, ab), None, "source row dropped on exit");
        let expected = "\
1 spawn w=4 loc=3
2 arrive w=4 loc=3
3 depart w=4 loc=3
4 move w=4 loc=2
5 arrive w=4 loc=2
6 exhaust w=4 loc=2
";
        assert_eq!(e.trace_text(), expected);
    }

    #[test]
    fn directed_spawn_enters_from_the_chosen_side() {
        let (reg, spot, link, agent) = base();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let ab = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::EdgeDirected { edge: ab, entry: b }).unwrap();
        assert_eq!(e.state().location(w), Some(a), "entered at b, crossed to a");
    }

    #[test]
    fn spawn_rejects_active_walkers_dead_targets_and_empty_paths() {
        let (reg, spot, link, agent) = base();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let w = node(&mut e, agent);
        let _ = link;
        e.state_mut().set_location(w, Some(a));
        e.state_mut().set_active(w, true);
        assert_eq!(e.spawn(w, SpawnTarget::Node(a)), Err(RuntimeError::SpawnActive(w)));
        e.state_mut().set_location(w, None);
        e.state_mut().set_active(w, false);
        assert!(e.spawn(w, SpawnTarget::Node(InstanceId(99))).is_err());
        assert_eq!(
            e.spawn(w, SpawnTarget::Path(PathCollection { origin: a, elements: vec![] })),
            Err(RuntimeError::EmptySpawnPath)
        );
        let bad = PathCollection { origin: a, elements: vec![InstanceId(99)] };
        assert_eq!(
            e.spawn(w, SpawnTarget::Path(bad)),
            Err(RuntimeError::Path(PathError::BadElement(InstanceId(99))))
        );
    }

    #[test]
    fn spawn_on_node_first_path_walks_elements_in_order() {
        let (reg, spot, link, agent) = base();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let c = node(&mut e, spot);
        let e1 = edge(&mut e, link, a, b);
        let e2 = edge(&mut e, link, b, c);
        let w = node(&mut e, agent);
        let p = PathCollection { origin: a, elements: vec![a, e1, b, e2, c] };
        e.spawn(w, SpawnTarget::Path(p)).unwrap();
        assert_eq!(arrivals(&e), vec![a, e1, b, e2, c]);
        assert_eq!(e.state().location(w), Some(c));
        assert!(!e.state().is_active(w));
    }

    #[test]
    fn spawn_on_edge_first_path_queues_destination_verbatim() {
        // Path [e1, b] spawns with queue [b, b]: the destination is always
        // prepended, and the listed b is kept verbatim, so the walker
        // re-arrives at b once before exhausting.
        let (reg, spot, link, agent) = base();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let e1 = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        let p = PathCollection { origin: a, elements: vec![e1, b] };
        e.spawn(w, SpawnTarget::Path(p)).unwrap();
        assert_eq!(arrivals(&e), vec![e1, b, b]);
        assert_eq!(e.state().location(w), Some(b));
    }

    // ---- visit -----------------------------------------------------------

    /// Walker-side entry ability on flagged Spots that runs `f` once.
    fn on_flagged_spot(
        reg: &mut Registry,
        agent: ArchetypeId,
        spot: ArchetypeId,
        name: &str,
        f: impl Fn(&mut Engine, &Invocation) -> Result<Flow, RuntimeError> + Send + Sync + 'static,
    ) {
        reg.add_ability(
            agent,
            AbilityDef::from_fn(name, spot, Phase::Entry, move |e, inv| {
                let here = inv.here().unwrap();
                if e.state().get_prop(here, "flag") == Ok(&Value::Bool(true)) {
                    f(e, inv)
                } else {
                    Ok(Flow::Continue)
                }
            }),
        )
        .unwrap();
    }

    #[test]
    fn visits_enqueue_fifo_and_sibling_targets_are_reached_in_turn() {
        let (mut reg, spot, link, agent) = base();
        on_flagged_spot(&mut reg, agent, spot, "fan_out", |e, inv| {
            let here = inv.here().unwrap();
            let siblings: Vec<InstanceId> = e
                .state()
                .edges_at(here, Direction::Out, None)
                .unwrap()
                .into_iter()
                .map(|ed| e.state().next_node(ed, here).unwrap())
                .collect();
            for s in siblings {
                e.visit(inv.walker, VisitTarget::Node(s))?;
            }
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let hub = flagged(&mut e, spot);
        let b = node(&mut e, spot);
        let c = node(&mut e, spot);
        edge(&mut e, link, hub, b);
        edge(&mut e, link, hub, c);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(hub)).unwrap();
        // b enqueued before c (edge-id order), and c is reached from b
        // directly even though they are not adjacent.
        assert_eq!(arrivals(&e), vec![hub, b, c]);
        assert_eq!(e.state().location(w), Some(c));
    }

    #[test]
    fn visit_rejects_bad_targets_at_enqueue_time() {
        let (mut reg, spot, link, agent) = base();
        let errors: Arc<Mutex<Vec<RuntimeError>>> = Arc::new(Mutex::new(Vec::new()));
        let sink = errors.clone();
        on_flagged_spot(&mut reg, agent, spot, "probe", move |e, inv| {
            let spot = e.state().registry().lookup("Spot").unwrap();
            let link = e.state().registry().lookup("Link").unwrap();
            let island = e.state_mut().create_object(spot, vec![]).unwrap();
            let push = |r: Result<(), RuntimeError>| sink.lock().unwrap().push(r.unwrap_err());
            push(e.visit(inv.walker, VisitTarget::Node(island)));
            let far1 = e.state_mut().create_object(spot, vec![]).unwrap();
            let far2 = e.state_mut().create_object(spot, vec![]).unwrap();
            let stray = e.state_mut().create_edge(link, far1, far2, vec![]).unwrap();
            push(e.visit(inv.walker, VisitTarget::Edge(stray)));
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let hub = flagged(&mut e, spot);
        let _ = link;
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(hub)).unwrap();
        let errs = errors.lock().unwrap();
        assert!(matches!(errs[0], RuntimeError::NotAdjacent { .. }), "{:?}", errs[0]);
        assert!(matches!(errs[1], RuntimeError::NotIncident { .. }), "{:?}", errs[1]);
        drop(errs);
        assert_eq!(
            e.visit(w, VisitTarget::Node(hub)),
            Err(RuntimeError::WalkerInactive(w)),
            "visit needs an active walker"
        );
    }

    #[test]
    fn visit_from_an_edge_is_rejected() {
        let (mut reg, spot, link, agent) = base();
        let errors: Arc<Mutex<Vec<RuntimeError>>> = Arc::new(Mutex::new(Vec::new()));
        let sink = errors.clone();
        reg.add_ability(
            agent,
            AbilityDef::from_fn("mid_edge", link, Phase::Entry, move |e, inv| {
                let here = inv.here().unwrap();
                let exit = e.state().next_node(here, e.state().source(inv.walker, here).unwrap());
                sink.lock()
                    .unwrap()
                    .push(e.visit(inv.walker, VisitTarget::Node(exit.unwrap())).unwrap_err());
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let ab = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Edge(ab)).unwrap();
        let errs = errors.lock().unwrap();
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0], RuntimeError::VisitFromEdge { .. }));
    }

    #[test]
    fn direction_visit_walks_edge_far_pairs_in_edge_id_order() {
        let (mut reg, spot, link, agent) = base();
        let sources = log();
        let seen = sources.clone();
        on_flagged_spot(&mut reg, agent, spot, "fan_out", |e, inv| {
            e.visit(inv.walker, VisitTarget::Direction { dir: Direction::Out, filter: None })?;
            Ok(Flow::Continue)
        });
        reg.add_ability(
            agent,
            AbilityDef::from_fn("watch", link, Phase::Entry, move |e, inv| {
                let here = inv.here().unwrap();
                let src = e.state().source(inv.walker, here).unwrap();
                seen.lock().unwrap().push(format!("on {here} from {src}"));
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let hub = flagged(&mut e, spot);
        let t1 = node(&mut e, spot);
        let t2 = node(&mut e, spot);
        let t3 = node(&mut e, spot);
        let p1 = edge(&mut e, link, hub, t1);
        let p2 = edge(&mut e, link, hub, t2);
        let p3 = edge(&mut e, link, hub, t3);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(hub)).unwrap();
        assert_eq!(arrivals(&e), vec![hub, p1, t1, p2, t2, p3, t3]);
        // Every edge stay was entered from the hub, including the later
        // pairs reached from a sibling leaf.
        assert_eq!(
            taken(&sources),
            vec![
                format!("on {p1} from {hub}"),
                format!("on {p2} from {hub}"),
                format!("on {p3} from {hub}"),
            ]
        );
        // Locations never contain two consecutive edges.
        let locs = arrivals(&e);
        for pair in locs.windows(2) {
            assert!(!(e.state().is_edge(pair[0]) && e.state().is_edge(pair[1])));
        }
        // Pairs carry their own far node, so auto-queue never fires.
        assert!(!kinds(&e).contains(&TraceKind::AutoQueue));
    }

    #[test]
    fn direction_visit_honors_archetype_filter() {
        let (mut reg, spot, link, agent) = base();
        let post = reg.add_archetype("Post", ArchetypeKind::Edge, None).unwrap();
        on_flagged_spot(&mut reg, agent, spot, "fan_out", move |e, inv| {
            e.visit(inv.walker, VisitTarget::Direction { dir: Direction::Out, filter: Some(post) })?;
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let hub = flagged(&mut e, spot);
        let b = node(&mut e, spot);
        let c = node(&mut e, spot);
        edge(&mut e, link, hub, b);
        let pc = edge(&mut e, post, hub, c);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(hub)).unwrap();
        assert_eq!(arrivals(&e), vec![hub, pc, c], "only the Post edge is taken");
    }

    #[test]
    fn path_visit_expands_and_walks_inserted_hops() {
        let (mut reg, spot, link, agent) = base();
        on_flagged_spot(&mut reg, agent, spot, "route", |e, inv| {
            let here = inv.here().unwrap();
            // One-shot: the inserted hop revisits the origin, which must
            // not re-issue the path visit.
            e.state_mut().set_prop(here, "flag", Value::Bool(false)).unwrap();
            // Diamond fixture: [b, c, d] is valid (every element connects
            // to the prefix) but b and c are not adjacent, so expansion
            // bridges them through the origin.
            let nodes = e.state().nodes();
            let p = PathCollection { origin: here, elements: nodes[1..].to_vec() };
            e.visit(inv.walker, VisitTarget::Path(p))
                .map(|_| Flow::Continue)
        });
        let mut e = engine(reg);
        let a = flagged(&mut e, spot);
        let b = node(&mut e, spot);
        let c = node(&mut e, spot);
        let d = node(&mut e, spot);
        edge(&mut e, link, a, b);
        edge(&mut e, link, a, c);
        edge(&mut e, link, b, d);
        edge(&mut e, link, c, d);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(a)).unwrap();
        assert_eq!(arrivals(&e), vec![a, b, a, c, d], "a inserted to bridge b→c");
    }

    #[test]
    fn unreachable_path_start_is_rejected() {
        let (mut reg, spot, link, agent) = base();
        let errors: Arc<Mutex<Vec<RuntimeError>>> = Arc::new(Mutex::new(Vec::new()));
        let sink = errors.clone();
        on_flagged_spot(&mut reg, agent, spot, "route", move |e, inv| {
            let far = *e.state().nodes().last().unwrap();
            let hop = e.state().undirected_neighbors(far)[0];
            // Path anchored at the remote pair, nowhere near the walker.
            let p = PathCollection { origin: hop, elements: vec![far] };
            sink.lock()
                .unwrap()
                .push(e.visit(inv.walker, VisitTarget::Path(p)).unwrap_err());
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let a = flagged(&mut e, spot);
        let b = node(&mut e, spot);
        let c = node(&mut e, spot);
        edge(&mut e, link, b, c);
        let _ = a;
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(a)).unwrap();
        let errs = errors.lock().unwrap();
        assert!(matches!(errs[0], RuntimeError::PathStartUnreachable { .. }), "{:?}", errs[0]);
    }

    // ---- auto-queue ------------------------------------------------------

    #[test]
    fn auto_queue_appends_missing_exit_node() {
        let (mut reg, spot, link, agent) = base();
        // A body that empties the queue while standing on the edge: the
        // auto-queue step must restore the exit node afterwards.
        reg.add_ability(
            agent,
            AbilityDef::from_fn("drain", link, Phase::Entry, |e, inv| {
                e.state_mut().queue_clear(inv.walker);
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let ab = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Edge(ab)).unwrap();
        assert_eq!(e.state().location(w), Some(b), "exit node restored and taken");
        let auto: Vec<&TraceEvent> = e
            .events()
            .iter()
            .filter(|ev| ev.kind == TraceKind::AutoQueue)
            .collect();
        assert_eq!(auto.len(), 1);
        assert_eq!(auto[0].detail, format!("queued={b}"));
    }

    // ---- skip / disengage ------------------------------------------------

    #[test]
    fn skip_bypasses_rest_of_phase_and_all_exit_abilities() {
        let (mut reg, spot, link, agent) = base();
        let seen = log();
        let l1 = seen.clone();
        let l2 = seen.clone();
        let l3 = seen.clone();
        let l4 = seen.clone();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("first", agent, Phase::Entry, move |e, inv| {
                note(&l1, "first");
                let here = inv.self_ref();
                if e.state().get_prop(here, "flag") == Ok(&Value::Bool(true)) {
                    return Ok(Flow::Skip);
                }
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("second", agent, Phase::Entry, move |_, _| {
                note(&l2, "second");
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        reg.add_ability(
            agent,
            AbilityDef::from_fn("walker_entry", spot, Phase::Entry, move |_, _| {
                note(&l3, "walker_entry");
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("exit_watch", agent, Phase::Exit, move |_, _| {
                note(&l4, "exit_watch");
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let n1 = flagged(&mut e, spot);
        let n2 = node(&mut e, spot);
        edge(&mut e, link, n1, n2);
        let w = node(&mut e, agent);
        let p = PathCollection { origin: n1, elements: vec![n1, n2] };
        e.spawn(w, SpawnTarget::Path(p)).unwrap();
        // At n1 only `first` ran; the full complement ran at unflagged n2.
        assert_eq!(
            taken(&seen),
            vec!["first", "first", "second", "walker_entry"],
            "skip cut n1 short; n2 (queue empty) runs entry only, no exit"
        );
        let ks = kinds(&e);
        assert_eq!(
            ks,
            vec![
                TraceKind::Spawn,
                TraceKind::Arrive,
                TraceKind::Ability,
                TraceKind::Skip,
                TraceKind::Arrive,
                TraceKind::Ability,
                TraceKind::Ability,
                TraceKind::Ability,
                TraceKind::Exhaust,
            ],
            "no depart/move pair for a skip, and no exit abilities at n1"
        );
        assert_eq!(e.state().location(w), Some(n2));
    }

    #[test]
    fn skip_with_empty_queue_exhausts_at_a_node() {
        let (mut reg, spot, _, agent) = base();
        on_flagged_spot(&mut reg, agent, spot, "bail", |_, _| Ok(Flow::Skip));
        let mut e = engine(reg);
        let n = flagged(&mut e, spot);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        assert_eq!(
            kinds(&e),
            vec![
                TraceKind::Spawn,
                TraceKind::Arrive,
                TraceKind::Ability,
                TraceKind::Skip,
                TraceKind::Exhaust,
            ]
        );
        assert!(!e.state().is_active(w));
        assert_eq!(e.state().location(w), Some(n));
    }

    #[test]
    fn skip_on_an_edge_with_empty_queue_is_fatal() {
        let (mut reg, spot, link, agent) = base();
        reg.add_ability(
            agent,
            AbilityDef::from_fn("drain_and_skip", link, Phase::Entry, |e, inv| {
                e.state_mut().queue_clear(inv.walker);
                Ok(Flow::Skip)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        let ab = edge(&mut e, link, a, b);
        let w = node(&mut e, agent);
        let err = e.spawn(w, SpawnTarget::Edge(ab)).unwrap_err();
        assert_eq!(err, RuntimeError::EdgeTerminal { walker: w, edge: ab });
        assert_eq!(kinds(&e).last(), Some(&TraceKind::Error));
    }

    #[test]
    fn disengage_clears_queue_preserves_props_and_allows_respawn() {
        let (mut reg, spot, link, agent) = base();
        reg.add_field(agent, FieldDef::new("mood", ValueKind::Str)).unwrap();
        on_flagged_spot(&mut reg, agent, spot, "leave", |e, inv| {
            e.state_mut()
                .set_prop(inv.walker, "mood", Value::Str("done".into()))
                .unwrap();
            Ok(Flow::Disengage)
        });
        let mut e = engine(reg);
        let a = node(&mut e, spot);
        let b = flagged(&mut e, spot);
        let c = node(&mut e, spot);
        edge(&mut e, link, a, b);
        edge(&mut e, link, b, c);
        let w = node(&mut e, agent);
        let p = PathCollection { origin: a, elements: vec![a, b, c] };
        e.spawn(w, SpawnTarget::Path(p)).unwrap();
        assert!(!e.state().is_active(w));
        assert_eq!(e.state().location(w), None, "disengage leaves the graph");
        assert!(e.state().queue(w).is_empty(), "pending c was dropped");
        assert_eq!(e.state().get_prop(w, "mood"), Ok(&Value::Str("done".into())));
        assert!(!arrivals(&e).contains(&c));
        assert_eq!(kinds(&e).last(), Some(&TraceKind::Disengage));
        // A disengaged walker is an ordinary inactive object again.
        e.spawn(w, SpawnTarget::Node(c)).unwrap();
        assert_eq!(e.state().location(w), Some(c));
    }

    #[test]
    fn skip_and_disengage_require_an_active_walker() {
        let (reg, _, _, agent) = base();
        let mut e = engine(reg);
        let w = node(&mut e, agent);
        assert_eq!(e.skip(w), Err(RuntimeError::WalkerInactive(w)));
        assert_eq!(e.disengage(w), Err(RuntimeError::WalkerInactive(w)));
    }

    // ---- ability ordering and context ------------------------------------

    #[test]
    fn phase_order_is_location_entry_walker_entry_walker_exit_location_exit() {
        let (mut reg, spot, link, agent) = base();
        let seen = log();
        for (owner, trigger, name, phase) in [
            (spot, agent, "loc_entry", Phase::Entry),
            (spot, agent, "loc_exit", Phase::Exit),
            (agent, spot, "walker_entry", Phase::Entry),
            (agent, spot, "walker_exit", Phase::Exit),
        ] {
            let l = seen.clone();
            reg.add_ability(
                owner,
                AbilityDef::from_fn(name, trigger, phase, move |e, inv| {
                    note(&l, format!("{}@{}", inv.ability, e.state().location(inv.walker).unwrap()));
                    Ok(Flow::Continue)
                }),
            )
            .unwrap();
        }
        let mut e = engine(reg);
        let n1 = node(&mut e, spot);
        let n2 = node(&mut e, spot);
        edge(&mut e, link, n1, n2);
        let w = node(&mut e, agent);
        let p = PathCollection { origin: n1, elements: vec![n1, n2] };
        e.spawn(w, SpawnTarget::Path(p)).unwrap();
        assert_eq!(
            taken(&seen),
            vec![
                format!("loc_entry@{n1}"),
                format!("walker_entry@{n1}"),
                format!("walker_exit@{n1}"),
                format!("loc_exit@{n1}"),
                format!("loc_entry@{n2}"),
                format!("walker_entry@{n2}"),
            ],
            "exit phase runs only when there is somewhere to go"
        );
    }

    #[test]
    fn triggers_match_walker_subtypes_but_not_supertypes() {
        let (mut reg, spot, _, agent) = base();
        let scout = reg.add_archetype("Scout", ArchetypeKind::Walker, Some(agent)).unwrap();
        let seen = log();
        let l1 = seen.clone();
        let l2 = seen.clone();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("on_agent", agent, Phase::Entry, move |_, inv| {
                note(&l1, format!("on_agent:{}", inv.walker));
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("on_scout", scout, Phase::Entry, move |_, inv| {
                note(&l2, format!("on_scout:{}", inv.walker));
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let n = node(&mut e, spot);
        let plain = node(&mut e, agent);
        let sub = node(&mut e, scout);
        e.spawn(plain, SpawnTarget::Node(n)).unwrap();
        e.spawn(sub, SpawnTarget::Node(n)).unwrap();
        assert_eq!(
            taken(&seen),
            vec![
                format!("on_agent:{plain}"),
                format!("on_agent:{sub}"),
                format!("on_scout:{sub}"),
            ],
            "scout matches both triggers, plain agent only the base one"
        );
    }

    #[test]
    fn inherited_abilities_run_ancestor_first_with_declaring_name_in_trace() {
        let (mut reg, spot, _, agent) = base();
        let scout = reg.add_archetype("Scout", ArchetypeKind::Walker, Some(agent)).unwrap();
        reg.add_ability(agent, AbilityDef::from_fn("base", spot, Phase::Entry, |_, _| Ok(Flow::Continue)))
            .unwrap();
        reg.add_ability(scout, AbilityDef::from_fn("extra", spot, Phase::Entry, |_, _| Ok(Flow::Continue)))
            .unwrap();
        let mut e = engine(reg);
        let n = node(&mut e, spot);
        let w = node(&mut e, scout);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        let details: Vec<&str> = e
            .events()
            .iter()
            .filter(|ev| ev.kind == TraceKind::Ability)
            .map(|ev| ev.detail.as_str())
            .collect();
        assert_eq!(details, vec!["Agent.base/entry", "Scout.extra/entry"]);
    }

    #[test]
    fn ability_event_is_emitted_before_the_body_runs() {
        let (mut reg, spot, _, agent) = base();
        on_flagged_spot(&mut reg, agent, spot, "speak", |e, inv| {
            e.report(inv.walker, "hello");
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let n = flagged(&mut e, spot);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        let ks = kinds(&e);
        let ability = ks.iter().position(|k| *k == TraceKind::Ability).unwrap();
        let report = ks.iter().position(|k| *k == TraceKind::Report).unwrap();
        assert!(ability < report);
        assert_eq!(e.reports(), ["hello"]);
    }

    #[test]
    fn nested_spawn_runs_to_quiescence_inside_the_outer_body() {
        let (mut reg, spot, link, agent) = base();
        let _ = link;
        on_flagged_spot(&mut reg, agent, spot, "delegate", |e, inv| {
            let spot = e.state().registry().lookup("Spot").unwrap();
            let agent = e.state().registry().lookup("Agent").unwrap();
            let leaf = e.state_mut().create_object(spot, vec![]).unwrap();
            let helper = e.state_mut().create_object(agent, vec![]).unwrap();
            e.spawn(helper, SpawnTarget::Node(leaf))?;
            assert!(!e.state().is_active(helper), "nested run completed");
            e.report(inv.walker, format!("helper={helper}"));
            Ok(Flow::Continue)
        });
        let mut e = engine(reg);
        let n = flagged(&mut e, spot);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        // The helper's spawn/arrive/exhaust sit between the outer walker's
        // ability event and its report.
        let walkers: Vec<(TraceKind, InstanceId)> =
            e.events().iter().map(|ev| (ev.kind, ev.walker)).collect();
        let helper = e.state().walkers()[1];
        assert_eq!(
            walkers,
            vec![
                (TraceKind::Spawn, w),
                (TraceKind::Arrive, w),
                (TraceKind::Ability, w),
                (TraceKind::Spawn, helper),
                (TraceKind::Arrive, helper),
                // The helper triggers the same ability; its body is guarded
                // by the unset flag and does nothing.
                (TraceKind::Ability, helper),
                (TraceKind::Exhaust, helper),
                (TraceKind::Report, w),
                (TraceKind::Exhaust, w),
            ]
        );
    }

    #[test]
    fn body_deactivating_the_walker_interrupts_the_phase_quietly() {
        let (mut reg, spot, _, agent) = base();
        let seen = log();
        let l1 = seen.clone();
        let l2 = seen.clone();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("pull_out", agent, Phase::Entry, move |e, inv| {
                note(&l1, "pull_out");
                let v = inv.visitor().unwrap();
                e.disengage(v)?;
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        reg.add_ability(
            spot,
            AbilityDef::from_fn("never", agent, Phase::Entry, move |_, _| {
                note(&l2, "never");
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = engine(reg);
        let n = node(&mut e, spot);
        let w = node(&mut e, agent);
        e.spawn(w, SpawnTarget::Node(n)).unwrap();
        assert_eq!(taken(&seen), vec!["pull_out"], "rest of the plan abandoned");
        assert!(!e.state().is_active(w));
        assert_eq!(e.state().location(w), None);
    }

    #[test]
    fn failing_body_wraps_into_ability_failed_with_error_event() {
        let (mut reg, spot, _, agent) = base();
        on_flagged_spot(&mut reg, agent, spot, "explode", |_, _| {
            Err(RuntimeError::Script("boom".into()))
        });
        let mut e = engine(reg);
        let n = flagged(&mut e, spot);
        let w = node(&mut e, agent);
        let err = e.spawn(w, SpawnTarget::Node(n)).unwrap_err();
        match &err {
            RuntimeError::AbilityFailed { ability, source, .. } => {
                assert_eq!(ability, "explode");
                assert_eq!(**source, RuntimeError::Script("boom".into()));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(!err.is_budget());
        assert_eq!(kinds(&e).last(), Some(&TraceKind::Error));
    }

    // ---- budget and determinism ------------------------------------------

    #[test]
    fn cycles_hit_the_step_budget() {
        let (mut reg, spot, link, agent) = base();
        reg.add_ability(
            agent,
            AbilityDef::from_fn("chase", spot, Phase::Entry, |e, inv| {
                e.visit(inv.walker, VisitTarget::Direction { dir: Direction::Out, filter: None })?;
                Ok(Flow::Continue)
            }),
        )
        .unwrap();
        let mut e = Engine::with_budget(Arc::new(reg), 7);
        let a = node(&mut e, spot);
        let b = node(&mut e, spot);
        edge(&mut e, link, a, b);
        edge(&mut e, link, b, a);
        let w = node(&mut e, agent);
        let err = e.spawn(w, SpawnTarget::Node(a)).unwrap_err();
        assert_eq!(err, RuntimeError::BudgetExceeded(7));
        assert!(err.is_budget());
        assert_eq!(arrivals(&e).len(), 7, "one arrival per budgeted step");
        assert_eq!(kinds(&e).last(), Some(&TraceKind::Error));
    }

    #[test]
    fn identical_runs_produce_identical_traces_and_snapshots() {
        fn run() -> (String, String) {
            let (mut reg, spot, link, agent) = base();
            on_flagged_spot(&mut reg, agent, spot, "fan_out", |e, inv| {
                e.visit(inv.walker, VisitTarget::Direction { dir: Direction::Out, filter: None })?;
                Ok(Flow::Continue)
            });
            let mut e = engine(reg);
            let hub = flagged(&mut e, spot);
            let b = node(&mut e, spot);
            let c = node(&mut e, spot);
            edge(&mut e, link, hub, b);
            edge(&mut e, link, hub, c);
            let w = node(&mut e, agent);
            e.spawn(w, SpawnTarget::Node(hub)).unwrap();
            (e.trace_text(), e.state().snapshot())
        }
        let (t1, s1) = run();
        let (t2, s2) = run();
        assert_eq!(t1, t2);
        assert_eq!(s1, s2);
    }
}
