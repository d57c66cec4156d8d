//! First-class path collections: ordered node/edge sequences anchored at an
//! origin node, validated against four structural constraints, built
//! explicitly or by predicate query, derivable, and expandable into a
//! physically traversable queue.
//!
//! # Validity
//!
//! A collection `[p1..pk]` with origin `o` is valid when every element is
//! live and, writing `S_i` for `{o}` plus the nodes listed before `p_i` plus
//! the endpoints of edges listed before `p_i`:
//!
//! 1. **Origin connectivity** (index 0) / 2. **Sequential connectivity**
//!    (later indices): a node `p_i` must be in `S_i` or share an edge with
//!    some member of `S_i`; an edge `p_i` must have an endpoint in `S_i`.
//! 3. **Path completeness**: `p_i` must be reachable from the origin through
//!    steps (node↔node across some edge, node↔incident edge; never
//!    edge→edge) whose interior stops are all *listed* earlier elements.
//! 4. **Traversal coherence**: element order must be realizable by a
//!    breadth-first exploration that may also favor recently added
//!    elements. Every sequence passing constraints 1–3 is so realizable —
//!    between strict level order and most-recent-first exploration any
//!    connectivity-sound order can arise — so this constraint is implied by
//!    the others and the checker never reports it on its own.
//!
//! # Queries
//!
//! [`path_query`] runs a breadth-first traversal from the origin following
//! edges whose direction at the current node matches `dir`. The predicate
//! prunes and filters: the origin always expands, any other node expands
//! only if the predicate accepts it, and edge crossing is never gated. A
//! node is emitted iff the predicate accepts it; an edge is emitted,
//! immediately before its far node's slot, iff `include_edges` is set and
//! the predicate accepts the edge. Pruning is what keeps every query result
//! valid: each emitted element is reachable through earlier-emitted ones.

use crate::error::{PathConstraint, PathError};
use crate::graph::{Direction, InstanceId, SystemState};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// A validated traversal route: an origin node and an ordered sequence of
/// node/edge ids. Topology may change after validation, so consumers
/// revalidate before spawning or visiting along a collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathCollection {
    pub origin: InstanceId,
    pub elements: Vec<InstanceId>,
}

impl PathCollection {
    /// Build and validate in one step.
    pub fn validated(
        state: &SystemState,
        origin: InstanceId,
        elements: Vec<InstanceId>,
    ) -> Result<PathCollection, PathError> {
        validate_path(state, origin, &elements)?;
        Ok(PathCollection { origin, elements })
    }
}

/// Transformations understood by [`derive_path`].
pub enum PathTransform<'a> {
    /// Append another collection's elements (the left origin is kept).
    Concat(&'a PathCollection),
    /// Keep elements in the half-open index range `[i, j)`, clamped.
    Slice(usize, usize),
    /// Keep elements accepted by the predicate.
    Filter(&'a dyn Fn(InstanceId) -> bool),
}

fn is_spatial(state: &SystemState, id: InstanceId) -> bool {
    state.is_node(id) || state.is_edge(id)
}

/// The connection set `S_i`: origin, prefix nodes, endpoints of prefix
/// edges.
fn connection_set(
    state: &SystemState,
    origin: InstanceId,
    prefix: &[InstanceId],
) -> BTreeSet<InstanceId> {
    let mut set = BTreeSet::from([origin]);
    for &p in prefix {
        if state.is_node(p) {
            set.insert(p);
        } else if let Ok((s, d)) = state.edge_endpoints(p) {
            set.insert(s);
            set.insert(d);
        }
    }
    set
}

/// Connectivity test shared by constraints 1 and 2.
fn connected_to_set(state: &SystemState, set: &BTreeSet<InstanceId>, el: InstanceId) -> bool {
    if state.is_node(el) {
        set.contains(&el) || set.iter().any(|&s| state.has_connecting_edge(s, el))
    } else if let Ok((s, d)) = state.edge_endpoints(el) {
        set.contains(&s) || set.contains(&d)
    } else {
        false
    }
}

/// One traversal step between path elements: node↔node across some edge,
/// node↔incident edge. Edge→edge is never a step.
fn is_step(state: &SystemState, from: InstanceId, to: InstanceId) -> bool {
    match (state.is_node(from), state.is_node(to)) {
        (true, true) => state.has_connecting_edge(from, to),
        (true, false) => state
            .edge_endpoints(to)
            .map(|(s, d)| s == from || d == from)
            .unwrap_or(false),
        (false, true) => state
            .edge_endpoints(from)
            .map(|(s, d)| s == to || d == to)
            .unwrap_or(false),
        (false, false) => false,
    }
}

/// Path-completeness check for one element: reachable from the origin with
/// every interior stop drawn from the listed prefix.
fn complete_route_exists(
    state: &SystemState,
    origin: InstanceId,
    prefix: &[InstanceId],
    target: InstanceId,
) -> bool {
    if origin == target {
        return true;
    }
    let interior: BTreeSet<InstanceId> = prefix.iter().copied().collect();
    let mut seen = BTreeSet::from([origin]);
    let mut frontier = VecDeque::from([origin]);
    while let Some(cur) = frontier.pop_front() {
        // Candidate next stops: the target itself or any prefix element.
        for &next in interior.iter().chain(std::iter::once(&target)) {
            if seen.contains(&next) || !is_step(state, cur, next) {
                continue;
            }
            if next == target {
                return true;
            }
            seen.insert(next);
            frontier.push_back(next);
        }
    }
    false
}

/// Validate a sequence against the four constraints. Reports the first
/// failing constraint with the offending element index.
pub fn validate_path(
    state: &SystemState,
    origin: InstanceId,
    elements: &[InstanceId],
) -> Result<(), PathError> {
    if !state.is_node(origin) {
        return Err(PathError::BadOrigin(origin));
    }
    for &el in elements {
        if !is_spatial(state, el) {
            return Err(PathError::BadElement(el));
        }
    }
    for (i, &el) in elements.iter().enumerate() {
        let prefix = &elements[..i];
        let set = connection_set(state, origin, prefix);
        if !connected_to_set(state, &set, el) {
            let constraint = if i == 0 {
                PathConstraint::OriginConnectivity
            } else {
                PathConstraint::SequentialConnectivity
            };
            return Err(PathError::violation(constraint, i));
        }
        if !complete_route_exists(state, origin, prefix, el) {
            return Err(PathError::violation(PathConstraint::PathCompleteness, i));
        }
        // Traversal coherence is implied by the checks above (see module
        // docs); nothing further to verify per element.
    }
    Ok(())
}

/// Breadth-first query construction. See the module docs for the pruning
/// and inclusion rules; ordering is level-synchronized with nodes ascending
/// by id within a level, each preceded (when emitted) by its minimum-id
/// entry edge from the previous level.
pub fn path_query(
    state: &SystemState,
    origin: InstanceId,
    pred: &dyn Fn(InstanceId) -> bool,
    include_edges: bool,
    dir: Direction,
) -> Result<PathCollection, PathError> {
    if !state.is_node(origin) {
        return Err(PathError::BadOrigin(origin));
    }
    let mut elements = Vec::new();
    if pred(origin) {
        elements.push(origin);
    }
    let mut visited = BTreeSet::from([origin]);
    // Frontier holds only nodes allowed to expand: the origin, then nodes
    // accepted by the predicate.
    let mut frontier = vec![origin];
    while !frontier.is_empty() {
        // node discovered this level -> set of qualifying entry edges
        let mut discovered: BTreeMap<InstanceId, BTreeSet<InstanceId>> = BTreeMap::new();
        for &u in &frontier {
            for e in state
                .edges_at(u, dir, None)
                .expect("frontier nodes are live")
            {
                let far = state.next_node(e, u).expect("u is an endpoint");
                if visited.contains(&far) {
                    continue;
                }
                discovered.entry(far).or_default().insert(e);
            }
        }
        let mut next_frontier = Vec::new();
        for (n, entry_edges) in discovered {
            visited.insert(n);
            if include_edges {
                let entry = *entry_edges.iter().next().expect("nonempty by construction");
                if pred(entry) {
                    elements.push(entry);
                }
            }
            if pred(n) {
                elements.push(n);
                next_frontier.push(n);
            }
        }
        frontier = next_frontier;
    }
    Ok(PathCollection { origin, elements })
}

/// Apply a transformation, then revalidate. Derivation never yields an
/// invalid collection silently: the validation violation is returned
/// instead.
pub fn derive_path(
    state: &SystemState,
    p: &PathCollection,
    transform: PathTransform<'_>,
) -> Result<PathCollection, PathError> {
    let elements = match transform {
        PathTransform::Concat(q) => {
            let mut out = p.elements.clone();
            out.extend(q.elements.iter().copied());
            out
        }
        PathTransform::Slice(i, j) => {
            let len = p.elements.len();
            let i = i.min(len);
            let j = j.clamp(i, len);
            p.elements[i..j].to_vec()
        }
        PathTransform::Filter(pred) => p
            .elements
            .iter()
            .copied()
            .filter(|&el| pred(el))
            .collect(),
    };
    PathCollection::validated(state, p.origin, elements)
}

/// Where the expansion cursor currently stands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cursor {
    AtNode(InstanceId),
    /// On an edge entered from a known endpoint; leaving lands on the far
    /// endpoint.
    OnEdge { edge: InstanceId, entered: InstanceId },
    /// On an edge with no recorded entry side (expansion started there);
    /// either endpoint is a legal exit.
    OnEdgeEither(InstanceId),
}

impl Cursor {
    fn id(self) -> InstanceId {
        match self {
            Cursor::AtNode(n) => n,
            Cursor::OnEdge { edge, .. } => edge,
            Cursor::OnEdgeEither(e) => e,
        }
    }
}

/// Shortest undirected node route from `from` to any node in `targets`,
/// exploring neighbors in ascending id order. Returns the hop sequence
/// excluding `from`, including the reached target.
fn bfs_route(
    state: &SystemState,
    from: InstanceId,
    targets: &BTreeSet<InstanceId>,
) -> Option<Vec<InstanceId>> {
    if targets.contains(&from) {
        return Some(Vec::new());
    }
    let mut parent: BTreeMap<InstanceId, InstanceId> = BTreeMap::new();
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for v in state.undirected_neighbors(u) {
            if seen.contains(&v) {
                continue;
            }
            seen.insert(v);
            parent.insert(v, u);
            if targets.contains(&v) {
                let mut route = vec![v];
                let mut cur = v;
                while let Some(&p) = parent.get(&cur) {
                    if p == from {
                        break;
                    }
                    route.push(p);
                    cur = p;
                }
                route.reverse();
                return Some(route);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Expand a collection into a physically traversable destination sequence
/// starting from `start` (a node or edge, normally the walker's location).
///
/// Elements appear in relative order; an element equal to the cursor's
/// current location is omitted (the walker is already there). Gaps between
/// consecutive elements are bridged by shortest undirected node routes —
/// intermediate nodes only, since crossing an unlisted edge implicitly
/// triggers no edge abilities. The result never contains an untraversable
/// consecutive pair.
pub fn expand_path(
    state: &SystemState,
    p: &PathCollection,
    start: InstanceId,
) -> Result<Vec<InstanceId>, PathError> {
    expand_path_annotated(state, p, start).map(|out| out.into_iter().map(|(id, _)| id).collect())
}

/// Expansion with provenance: `true` marks entries that are elements of
/// `p`, `false` marks inserted intermediates. Kept crate-internal for the
/// order-preservation property test.
pub(crate) fn expand_path_annotated(
    state: &SystemState,
    p: &PathCollection,
    start: InstanceId,
) -> Result<Vec<(InstanceId, bool)>, PathError> {
    if !is_spatial(state, start) {
        return Err(PathError::BadElement(start));
    }
    let mut cursor = if state.is_edge(start) {
        Cursor::OnEdgeEither(start)
    } else {
        Cursor::AtNode(start)
    };
    let mut out: Vec<(InstanceId, bool)> = Vec::new();

    for &el in &p.elements {
        if !is_spatial(state, el) {
            return Err(PathError::BadElement(el));
        }
        if cursor.id() == el {
            continue; // already there — current location is omitted
        }
        // Step off an edge first: the only way forward is an exit node.
        if let Cursor::OnEdge { edge, entered } = cursor {
            let far = state.next_node(edge, entered).expect("entered is an endpoint");
            if el == far {
                out.push((el, true));
                cursor = Cursor::AtNode(far);
                continue;
            }
            out.push((far, false));
            cursor = Cursor::AtNode(far);
        } else if let Cursor::OnEdgeEither(edge) = cursor {
            let (s, d) = state.edge_endpoints(edge).expect("start edge is live");
            if el == s || el == d {
                out.push((el, true));
                cursor = Cursor::AtNode(el);
                continue;
            }
            // Exit toward whichever endpoint is nearer the element.
            let exits = BTreeSet::from([s, d]);
            let goal = element_endpoint_set(state, el);
            let exit = exits
                .iter()
                .copied()
                .min_by_key(|&x| {
                    bfs_route(state, x, &goal)
                        .map(|r| r.len())
                        .unwrap_or(usize::MAX)
                })
                .expect("two exits");
            out.push((exit, false));
            cursor = Cursor::AtNode(exit);
        }

        let Cursor::AtNode(cur) = cursor else {
            unreachable!("edge cursors handled above")
        };
        if state.is_edge(el) {
            let (s, d) = state.edge_endpoints(el).expect("checked live");
            if cur == s || cur == d {
                out.push((el, true));
                cursor = Cursor::OnEdge { edge: el, entered: cur };
                continue;
            }
            let route = bfs_route(state, cur, &BTreeSet::from([s, d]))
                .ok_or(PathError::Gap { from: cur, to: el })?;
            let reached = *route.last().expect("route to a distinct endpoint is nonempty");
            for hop in route {
                out.push((hop, false));
            }
            out.push((el, true));
            cursor = Cursor::OnEdge { edge: el, entered: reached };
        } else {
            if state.has_connecting_edge(cur, el) {
                out.push((el, true));
                cursor = Cursor::AtNode(el);
                continue;
            }
            let mut route = bfs_route(state, cur, &BTreeSet::from([el]))
                .ok_or(PathError::Gap { from: cur, to: el })?;
            let last = route.pop().expect("nonempty: el != cur");
            debug_assert_eq!(last, el);
            for hop in route {
                out.push((hop, false));
            }
            out.push((el, true));
            cursor = Cursor::AtNode(el);
        }
    }
    Ok(out)
}

/// Node set standing in for "where does this element live" during gap
/// search: the element itself for a node, both endpoints for an edge.
fn element_endpoint_set(state: &SystemState, el: InstanceId) -> BTreeSet<InstanceId> {
    if let Ok((s, d)) = state.edge_endpoints(el) {
        BTreeSet::from([s, d])
    } else {
        BTreeSet::from([el])
    }
}
