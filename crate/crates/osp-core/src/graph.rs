//! The typed graph and all bookkeeping a traversal depends on.
//!
//! [`SystemState`] owns every instance (objects, nodes, edges, walkers) plus
//! the per-walker traversal state: destination queue, current location,
//! activity flag, and — while a walker stands on an edge — the entry node it
//! came from. Deletion keeps everything referentially sound: removing a node
//! removes its incident edges, purges all ids that vanished from every
//! queue, and deactivates walkers whose location was removed.
//!
//! Determinism is structural: instance ids are handed out by a monotone
//! counter, all collections are ordered (`BTreeMap`/`BTreeSet`), and every
//! enumeration walks ids in ascending order.

use crate::archetype::{ArchetypeId, ArchetypeKind, Registry, ValueKind};
use crate::error::CoreError;
use crate::value::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Identity of one instance. Ids start at 1 and are never reused; id 0 is
/// reserved to mean "no walker" in trace output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub u64);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Direction selector for edge enumeration at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Any,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
            Direction::Any => "any",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Role-specific payload of an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InstanceData {
    Object,
    Node,
    Edge { src: InstanceId, dst: InstanceId },
    Walker,
}

/// One live instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: InstanceId,
    pub archetype: ArchetypeId,
    pub props: BTreeMap<String, Value>,
    pub data: InstanceData,
}

impl Instance {
    pub fn role(&self) -> ArchetypeKind {
        match self.data {
            InstanceData::Object => ArchetypeKind::Object,
            InstanceData::Node => ArchetypeKind::Node,
            InstanceData::Edge { .. } => ArchetypeKind::Edge,
            InstanceData::Walker => ArchetypeKind::Walker,
        }
    }
}

/// The complete runtime state: instances plus walker traversal bookkeeping.
#[derive(Debug)]
pub struct SystemState {
    registry: Arc<Registry>,
    instances: BTreeMap<InstanceId, Instance>,
    /// Destination queue per walker; a row exists for every live walker.
    queues: BTreeMap<InstanceId, Vec<InstanceId>>,
    /// Present iff the walker is somewhere on the graph (active, or resting
    /// on a node after queue exhaustion).
    locations: BTreeMap<InstanceId, InstanceId>,
    active: BTreeSet<InstanceId>,
    /// `(walker, edge) -> entry node`, defined exactly while the walker
    /// stands on that edge.
    sources: BTreeMap<(InstanceId, InstanceId), InstanceId>,
    next_id: u64,
}

impl SystemState {
    pub fn new(registry: Arc<Registry>) -> SystemState {
        SystemState {
            registry,
            instances: BTreeMap::new(),
            queues: BTreeMap::new(),
            locations: BTreeMap::new(),
            active: BTreeSet::new(),
            sources: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    fn fresh_id(&mut self) -> InstanceId {
        let id = InstanceId(self.next_id);
        self.next_id += 1;
        id
    }

    /// Validate provided properties against an archetype's effective schema
    /// and fill in defaults for omitted fields.
    fn build_props(
        &self,
        arch: ArchetypeId,
        props: Vec<(String, Value)>,
    ) -> Result<BTreeMap<String, Value>, CoreError> {
        let arch_name = self.registry.name(arch).to_string();
        let schema: Vec<_> = self
            .registry
            .effective_fields(arch)
            .into_iter()
            .cloned()
            .collect();
        let mut out: BTreeMap<String, Value> = schema
            .iter()
            .map(|f| (f.name.clone(), f.default.clone()))
            .collect();
        for (name, value) in props {
            let field = schema.iter().find(|f| f.name == name).ok_or_else(|| {
                CoreError::UnknownField {
                    archetype: arch_name.clone(),
                    field: name.clone(),
                }
            })?;
            if !value.conforms(field.kind) {
                return Err(CoreError::FieldKindMismatch {
                    archetype: arch_name.clone(),
                    field: name,
                    expected: field.kind,
                    got: value.kind().unwrap_or(ValueKind::Ref),
                });
            }
            out.insert(name, value);
        }
        Ok(out)
    }

    /// Create an object, node, or walker instance. Edges need endpoints and
    /// go through [`SystemState::create_edge`].
    pub fn create_object(
        &mut self,
        arch: ArchetypeId,
        props: Vec<(String, Value)>,
    ) -> Result<InstanceId, CoreError> {
        let kind = self.registry.kind(arch);
        if kind == ArchetypeKind::Edge {
            return Err(CoreError::EdgeNeedsEndpoints(
                self.registry.name(arch).to_string(),
            ));
        }
        let props = self.build_props(arch, props)?;
        let id = self.fresh_id();
        let data = match kind {
            ArchetypeKind::Object => InstanceData::Object,
            ArchetypeKind::Node => InstanceData::Node,
            ArchetypeKind::Walker => InstanceData::Walker,
            ArchetypeKind::Edge => unreachable!(),
        };
        self.instances.insert(
            id,
            Instance {
                id,
                archetype: arch,
                props,
                data,
            },
        );
        if kind == ArchetypeKind::Walker {
            // Walkers are born off-graph: empty queue, no location, inactive.
            self.queues.insert(id, Vec::new());
        }
        Ok(id)
    }

    /// Create an edge between two live nodes.
    pub fn create_edge(
        &mut self,
        arch: ArchetypeId,
        src: InstanceId,
        dst: InstanceId,
        props: Vec<(String, Value)>,
    ) -> Result<InstanceId, CoreError> {
        if self.registry.kind(arch) != ArchetypeKind::Edge {
            return Err(CoreError::NotAnEdgeArchetype(
                self.registry.name(arch).to_string(),
            ));
        }
        if !self.is_node(src) {
            return Err(CoreError::DanglingEndpoint {
                which: "source",
                id: src,
            });
        }
        if !self.is_node(dst) {
            return Err(CoreError::DanglingEndpoint {
                which: "destination",
                id: dst,
            });
        }
        let props = self.build_props(arch, props)?;
        let id = self.fresh_id();
        self.instances.insert(
            id,
            Instance {
                id,
                archetype: arch,
                props,
                data: InstanceData::Edge { src, dst },
            },
        );
        Ok(id)
    }

    // ---- lookups ---------------------------------------------------------

    pub fn is_live(&self, id: InstanceId) -> bool {
        self.instances.contains_key(&id)
    }

    pub fn instance(&self, id: InstanceId) -> Result<&Instance, CoreError> {
        self.instances.get(&id).ok_or(CoreError::UnknownInstance(id))
    }

    pub fn is_node(&self, id: InstanceId) -> bool {
        matches!(
            self.instances.get(&id),
            Some(Instance {
                data: InstanceData::Node,
                ..
            })
        )
    }

    pub fn is_edge(&self, id: InstanceId) -> bool {
        matches!(
            self.instances.get(&id),
            Some(Instance {
                data: InstanceData::Edge { .. },
                ..
            })
        )
    }

    pub fn is_walker(&self, id: InstanceId) -> bool {
        matches!(
            self.instances.get(&id),
            Some(Instance {
                data: InstanceData::Walker,
                ..
            })
        )
    }

    fn expect_role(&self, id: InstanceId, role: ArchetypeKind) -> Result<&Instance, CoreError> {
        let inst = self.instance(id)?;
        if inst.role() != role {
            return Err(CoreError::KindExpected {
                id,
                expected: role.name(),
                actual: inst.role().name(),
            });
        }
        Ok(inst)
    }

    pub fn expect_node(&self, id: InstanceId) -> Result<&Instance, CoreError> {
        self.expect_role(id, ArchetypeKind::Node)
    }

    pub fn expect_edge(&self, id: InstanceId) -> Result<&Instance, CoreError> {
        self.expect_role(id, ArchetypeKind::Edge)
    }

    pub fn expect_walker(&self, id: InstanceId) -> Result<&Instance, CoreError> {
        self.expect_role(id, ArchetypeKind::Walker)
    }

    /// Endpoints `(src, dst)` of an edge.
    pub fn edge_endpoints(&self, edge: InstanceId) -> Result<(InstanceId, InstanceId), CoreError> {
        match self.expect_edge(edge)?.data {
            InstanceData::Edge { src, dst } => Ok((src, dst)),
            _ => unreachable!(),
        }
    }

    /// The endpoint of `edge` opposite to `from`. For a self-loop both
    /// endpoints coincide, so the result is `from` itself.
    pub fn next_node(&self, edge: InstanceId, from: InstanceId) -> Result<InstanceId, CoreError> {
        let (src, dst) = self.edge_endpoints(edge)?;
        if from == src {
            Ok(dst)
        } else if from == dst {
            Ok(src)
        } else {
            Err(CoreError::NotAnEndpoint { edge, node: from })
        }
    }

    /// Edges incident to `node` in the given direction, ascending by id,
    /// optionally filtered to edges whose archetype is `filter` or a
    /// descendant of it. A self-loop matches every direction and appears
    /// once.
    pub fn edges_at(
        &self,
        node: InstanceId,
        dir: Direction,
        filter: Option<ArchetypeId>,
    ) -> Result<Vec<InstanceId>, CoreError> {
        self.expect_node(node)?;
        let mut out = Vec::new();
        for (id, inst) in &self.instances {
            let InstanceData::Edge { src, dst } = inst.data else {
                continue;
            };
            let hit = match dir {
                Direction::Out => src == node,
                Direction::In => dst == node,
                Direction::Any => src == node || dst == node,
            };
            if !hit {
                continue;
            }
            if let Some(f) = filter {
                if !self.registry.is_subtype(inst.archetype, f) {
                    continue;
                }
            }
            out.push(*id);
        }
        Ok(out)
    }

    /// Whether any edge (in either direction) connects `a` and `b`.
    pub fn has_connecting_edge(&self, a: InstanceId, b: InstanceId) -> bool {
        self.instances.values().any(|inst| {
            matches!(
                inst.data,
                InstanceData::Edge { src, dst }
                    if (src == a && dst == b) || (src == b && dst == a)
            )
        })
    }

    /// Nodes reachable from `n` across one edge in either direction,
    /// deduplicated, ascending by id. A self-loop contributes `n` itself.
    pub fn undirected_neighbors(&self, n: InstanceId) -> Vec<InstanceId> {
        let mut out = BTreeSet::new();
        for inst in self.instances.values() {
            if let InstanceData::Edge { src, dst } = inst.data {
                if src == n {
                    out.insert(dst);
                }
                if dst == n {
                    out.insert(src);
                }
            }
        }
        out.into_iter().collect()
    }

    /// All live instance ids of one role, ascending.
    fn ids_of_role(&self, role: ArchetypeKind) -> Vec<InstanceId> {
        self.instances
            .values()
            .filter(|i| i.role() == role)
            .map(|i| i.id)
            .collect()
    }

    pub fn nodes(&self) -> Vec<InstanceId> {
        self.ids_of_role(ArchetypeKind::Node)
    }

    pub fn edges(&self) -> Vec<InstanceId> {
        self.ids_of_role(ArchetypeKind::Edge)
    }

    pub fn walkers(&self) -> Vec<InstanceId> {
        self.ids_of_role(ArchetypeKind::Walker)
    }

    pub fn objects(&self) -> Vec<InstanceId> {
        self.ids_of_role(ArchetypeKind::Object)
    }

    // ---- properties ------------------------------------------------------

    pub fn get_prop(&self, id: InstanceId, name: &str) -> Result<&Value, CoreError> {
        let inst = self.instance(id)?;
        inst.props.get(name).ok_or_else(|| CoreError::UnknownField {
            archetype: self.registry.name(inst.archetype).to_string(),
            field: name.to_string(),
        })
    }

    /// Assign a property. The declared field kind is enforced here too, so
    /// schemas hold for the whole life of an instance, not just at birth.
    pub fn set_prop(&mut self, id: InstanceId, name: &str, value: Value) -> Result<(), CoreError> {
        let inst = self.instance(id)?;
        let arch = inst.archetype;
        let arch_name = self.registry.name(arch).to_string();
        let field = self
            .registry
            .field(arch, name)
            .ok_or_else(|| CoreError::UnknownField {
                archetype: arch_name.clone(),
                field: name.to_string(),
            })?;
        if !value.conforms(field.kind) {
            return Err(CoreError::FieldKindMismatch {
                archetype: arch_name,
                field: name.to_string(),
                expected: field.kind,
                got: value.kind().unwrap_or(ValueKind::Ref),
            });
        }
        self.instances
            .get_mut(&id)
            .expect("instance checked above")
            .props
            .insert(name.to_string(), value);
        Ok(())
    }

    // ---- walker traversal state -----------------------------------------

    pub fn location(&self, walker: InstanceId) -> Option<InstanceId> {
        self.locations.get(&walker).copied()
    }

    pub fn is_active(&self, walker: InstanceId) -> bool {
        self.active.contains(&walker)
    }

    pub fn queue(&self, walker: InstanceId) -> &[InstanceId] {
        self.queues.get(&walker).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn queue_push(&mut self, walker: InstanceId, dest: InstanceId) {
        self.queues.entry(walker).or_default().push(dest);
    }

    pub fn queue_pop(&mut self, walker: InstanceId) -> Option<InstanceId> {
        let q = self.queues.get_mut(&walker)?;
        if q.is_empty() {
            None
        } else {
            Some(q.remove(0))
        }
    }

    pub fn queue_clear(&mut self, walker: InstanceId) {
        if let Some(q) = self.queues.get_mut(&walker) {
            q.clear();
        }
    }

    pub fn set_queue(&mut self, walker: InstanceId, queue: Vec<InstanceId>) {
        self.queues.insert(walker, queue);
    }

    /// Entry node recorded for a walker standing on `edge`.
    pub fn source(&self, walker: InstanceId, edge: InstanceId) -> Option<InstanceId> {
        self.sources.get(&(walker, edge)).copied()
    }

    pub(crate) fn set_location(&mut self, walker: InstanceId, loc: Option<InstanceId>) {
        match loc {
            Some(l) => {
                self.locations.insert(walker, l);
            }
            None => {
                self.locations.remove(&walker);
            }
        }
    }

    pub(crate) fn set_active(&mut self, walker: InstanceId, active: bool) {
        if active {
            self.active.insert(walker);
        } else {
            self.active.remove(&walker);
        }
    }

    pub(crate) fn set_source(&mut self, walker: InstanceId, edge: InstanceId, entry: InstanceId) {
        self.sources.insert((walker, edge), entry);
    }

    pub(crate) fn clear_source(&mut self, walker: InstanceId, edge: InstanceId) {
        self.sources.remove(&(walker, edge));
    }

    // ---- deletion --------------------------------------------------------

    /// Remove ids that no longer exist from every queue, then sweep
    /// location/activity/source rows for walkers whose location vanished.
    fn sweep_removed(&mut self, removed: &BTreeSet<InstanceId>) {
        for q in self.queues.values_mut() {
            q.retain(|id| !removed.contains(id));
        }
        let displaced: Vec<InstanceId> = self
            .locations
            .iter()
            .filter(|(_, loc)| removed.contains(loc))
            .map(|(w, _)| *w)
            .collect();
        for w in displaced {
            self.locations.remove(&w);
            self.active.remove(&w);
        }
        self.sources
            .retain(|(_, edge), entry| !removed.contains(edge) && !removed.contains(entry));
    }

    /// Delete an edge. Queues are purged of the edge id (queued nodes past
    /// it survive); a walker standing on the edge is deactivated and
    /// unlocated.
    pub fn delete_edge(&mut self, edge: InstanceId) -> Result<(), CoreError> {
        self.expect_edge(edge)?;
        self.instances.remove(&edge);
        let removed = BTreeSet::from([edge]);
        self.sweep_removed(&removed);
        Ok(())
    }

    /// Delete a node and cascade: incident edges are deleted with it, every
    /// queue loses all removed ids, and walkers standing on the node or an
    /// incident edge are deactivated and unlocated.
    pub fn delete_node(&mut self, node: InstanceId) -> Result<(), CoreError> {
        self.expect_node(node)?;
        let mut removed: BTreeSet<InstanceId> = BTreeSet::from([node]);
        for (id, inst) in &self.instances {
            if let InstanceData::Edge { src, dst } = inst.data {
                if src == node || dst == node {
                    removed.insert(*id);
                }
            }
        }
        for id in &removed {
            self.instances.remove(id);
        }
        self.sweep_removed(&removed);
        Ok(())
    }

    /// Delete an object or an inactive walker.
    pub fn delete_object(&mut self, id: InstanceId) -> Result<(), CoreError> {
        let inst = self.instance(id)?;
        match inst.role() {
            ArchetypeKind::Object => {
                self.instances.remove(&id);
                Ok(())
            }
            ArchetypeKind::Walker => {
                if self.is_active(id) {
                    return Err(CoreError::DeleteActiveWalker(id));
                }
                self.instances.remove(&id);
                self.queues.remove(&id);
                self.locations.remove(&id);
                self.sources.retain(|(w, _), _| *w != id);
                Ok(())
            }
            other => Err(CoreError::KindExpected {
                id,
                expected: "object or walker",
                actual: other.name(),
            }),
        }
    }

    /// Delete any instance, dispatching on its role.
    pub fn delete(&mut self, id: InstanceId) -> Result<(), CoreError> {
        match self.instance(id)?.role() {
            ArchetypeKind::Node => self.delete_node(id),
            ArchetypeKind::Edge => self.delete_edge(id),
            _ => self.delete_object(id),
        }
    }

    // ---- rendering -------------------------------------------------------

    /// Render one instance's properties in declaration order.
    fn render_props(&self, inst: &Instance) -> String {
        let mut out = String::from("{");
        let mut first = true;
        for field in self.registry.effective_fields(inst.archetype) {
            if let Some(v) = inst.props.get(&field.name) {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&field.name);
                out.push('=');
                out.push_str(&v.render());
            }
        }
        out.push('}');
        out
    }

    /// Deterministic dump of the whole state, one record per instance in
    /// ascending id order:
    ///
    /// ```text
    /// NODE <id> <archetype> {props}
    /// EDGE <id> <archetype> <src> -> <dst> {props}
    /// WALKER <id> <archetype> loc=<id|none> active=<bool> queue=[ids] {props}
    /// OBJECT <id> <archetype> {props}
    /// ```
    pub fn snapshot(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for inst in self.instances.values() {
            let name = self.registry.name(inst.archetype);
            let props = self.render_props(inst);
            match inst.data {
                InstanceData::Node => {
                    let _ = writeln!(out, "NODE {} {} {}", inst.id, name, props);
                }
                InstanceData::Edge { src, dst } => {
                    let _ = writeln!(out, "EDGE {} {} {} -> {} {}", inst.id, name, src, dst, props);
                }
                InstanceData::Walker => {
                    let loc = match self.location(inst.id) {
                        Some(l) => l.to_string(),
                        None => "none".to_string(),
                    };
                    let queue = self
                        .queue(inst.id)
                        .iter()
                        .map(|id| id.to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    let _ = writeln!(
                        out,
                        "WALKER {} {} loc={} active={} queue=[{}] {}",
                        inst.id,
                        name,
                        loc,
                        self.is_active(inst.id),
                        queue,
                        props
                    );
                }
                InstanceData::Object => {
                    let _ = writeln!(out, "OBJECT {} {} {}", inst.id, name, props);
                }
            }
        }
        out
    }

    /// Report rendering: a top-level reference to a live instance expands to
    /// `Archetype#id{props}` (edges show endpoints as `Archetype#id[src->dst]{props}`);
    /// a dangling top-level reference renders as `@id(dead)`. Nested
    /// references inside lists/maps/props stay as bare `@id`.
    pub fn render_value_deep(&self, value: &Value) -> String {
        match value {
            Value::Ref(id) => match self.instances.get(id) {
                Some(inst) => {
                    let name = self.registry.name(inst.archetype);
                    match inst.data {
                        InstanceData::Edge { src, dst } => {
                            format!("{name}#{}[{}->{}]{}", inst.id, src, dst, self.render_props(inst))
                        }
                        _ => format!("{name}#{}{}", inst.id, self.render_props(inst)),
                    }
                }
                None => format!("@{id}(dead)"),
            },
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(|v| self.render_value_deep(v)).collect();
                format!("[{}]", inner.join(","))
            }
            other => other.render(),
        }
    }

    // ---- integrity -------------------------------------------------------

    /// Check every structural invariant, returning a description of the
    /// first violation. Used by tests after each mutation batch.
    pub fn check_integrity(&self) -> Result<(), String> {
        for inst in self.instances.values() {
            if inst.id.0 >= self.next_id {
                return Err(format!("instance {} not below id counter {}", inst.id, self.next_id));
            }
            if let InstanceData::Edge { src, dst } = inst.data {
                if !self.is_node(src) {
                    return Err(format!("edge {} has dead source {}", inst.id, src));
                }
                if !self.is_node(dst) {
                    return Err(format!("edge {} has dead destination {}", inst.id, dst));
                }
            }
        }
        for (w, q) in &self.queues {
            if !self.is_walker(*w) {
                return Err(format!("queue row for non-walker {w}"));
            }
            for id in q {
                if !self.is_node(*id) && !self.is_edge(*id) {
                    return Err(format!("queue of {w} holds dead or non-spatial id {id}"));
                }
            }
        }
        for w in self.walkers() {
            if !self.queues.contains_key(&w) {
                return Err(format!("walker {w} has no queue row"));
            }
        }
        for (w, loc) in &self.locations {
            if !self.is_walker(*w) {
                return Err(format!("location row for non-walker {w}"));
            }
            if !self.is_node(*loc) && !self.is_edge(*loc) {
                return Err(format!("walker {w} located at dead id {loc}"));
            }
            // Resting (inactive but located) is legal only on nodes.
            if self.is_edge(*loc) && !self.is_active(*w) {
                return Err(format!("inactive walker {w} located on edge {loc}"));
            }
        }
        for w in &self.active {
            if !self.is_walker(*w) {
                return Err(format!("active row for non-walker {w}"));
            }
            if !self.locations.contains_key(w) {
                return Err(format!("active walker {w} has no location"));
            }
        }
        // Source rows correspond exactly to walkers standing on edges.
        for ((w, e), entry) in &self.sources {
            if self.location(*w) != Some(*e) {
                return Err(format!("stale source row ({w},{e})"));
            }
            let (src, dst) = self
                .edge_endpoints(*e)
                .map_err(|_| format!("source row ({w},{e}) for dead edge"))?;
            if *entry != src && *entry != dst {
                return Err(format!("source row ({w},{e}) entry {entry} not an endpoint"));
            }
        }
        for (w, loc) in &self.locations {
            if self.is_edge(*loc) && self.source(*w, *loc).is_none() {
                return Err(format!("walker {w} on edge {loc} has no source row"));
            }
        }
        Ok(())
    }
}
