//! Error types shared across the runtime.
//!
//! Three layers: [`CoreError`] for registry/graph violations, [`PathError`]
//! for path-collection validation and expansion, and [`RuntimeError`] for
//! anything a traversal can raise (which wraps the other two).

use crate::archetype::ValueKind;
use crate::graph::InstanceId;
use thiserror::Error;

/// Errors raised by registry construction and direct graph-state operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("unknown archetype `{0}`")]
    UnknownArchetype(String),
    #[error("duplicate archetype `{0}`")]
    DuplicateArchetype(String),
    #[error("archetype `{child}` cannot extend `{parent}`: {reason}")]
    BadParent {
        child: String,
        parent: String,
        reason: String,
    },
    #[error("duplicate field `{field}` on archetype `{archetype}`")]
    DuplicateField { archetype: String, field: String },
    #[error("archetype `{archetype}` has no field `{field}`")]
    UnknownField { archetype: String, field: String },
    #[error("field `{field}` on `{archetype}` expects {expected}, got {got}")]
    FieldKindMismatch {
        archetype: String,
        field: String,
        expected: ValueKind,
        got: ValueKind,
    },
    #[error("abilities may not be attached to object archetype `{0}`")]
    AbilityOnObject(String),
    #[error("ability `{ability}` on `{owner}` has incompatible trigger `{trigger}`: {reason}")]
    BadTrigger {
        owner: String,
        ability: String,
        trigger: String,
        reason: String,
    },
    #[error("no instance with id {0}")]
    UnknownInstance(InstanceId),
    #[error("instance {id} is a {actual}, expected a {expected}")]
    KindExpected {
        id: InstanceId,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("edge {which} endpoint {id} is not a live node")]
    DanglingEndpoint { which: &'static str, id: InstanceId },
    #[error("node {node} is not an endpoint of edge {edge}")]
    NotAnEndpoint { edge: InstanceId, node: InstanceId },
    #[error("walker {0} is active and cannot be deleted")]
    DeleteActiveWalker(InstanceId),
    #[error("cannot create an instance of edge archetype `{0}` without endpoints")]
    EdgeNeedsEndpoints(String),
    #[error("cannot create edge from non-edge archetype `{0}`")]
    NotAnEdgeArchetype(String),
}

/// Which path-collection constraint a sequence violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathConstraint {
    OriginConnectivity,
    SequentialConnectivity,
    PathCompleteness,
    TraversalCoherence,
}

impl std::fmt::Display for PathConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PathConstraint::OriginConnectivity => "origin connectivity",
            PathConstraint::SequentialConnectivity => "sequential connectivity",
            PathConstraint::PathCompleteness => "path completeness",
            PathConstraint::TraversalCoherence => "traversal coherence",
        };
        f.write_str(name)
    }
}

/// Errors raised by path validation, querying, and expansion.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path origin {0} is not a live node")]
    BadOrigin(InstanceId),
    #[error("path element {0} is not a live node or edge")]
    BadElement(InstanceId),
    #[error("path violates {constraint} at element index {index}")]
    Violation {
        constraint: PathConstraint,
        index: usize,
    },
    #[error("path expansion found no route from {from} to {to}")]
    Gap { from: InstanceId, to: InstanceId },
}

impl PathError {
    /// Convenience constructor used throughout the validator.
    pub fn violation(constraint: PathConstraint, index: usize) -> Self {
        PathError::Violation { constraint, index }
    }
}

/// Errors raised while driving walkers. Fatal: the run that raised one stops.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("walker {0} is already active and cannot be spawned")]
    SpawnActive(InstanceId),
    #[error("walker {0} is not active")]
    WalkerInactive(InstanceId),
    #[error("cannot spawn on an empty path")]
    EmptySpawnPath,
    #[error("walker {walker} cannot issue a visit while on edge {edge}")]
    VisitFromEdge { walker: InstanceId, edge: InstanceId },
    #[error("walker {walker} at {from} cannot visit {target}: no connecting edge")]
    NotAdjacent {
        walker: InstanceId,
        from: InstanceId,
        target: InstanceId,
    },
    #[error("walker {walker} at {from} cannot visit edge {edge}: not incident")]
    NotIncident {
        walker: InstanceId,
        from: InstanceId,
        edge: InstanceId,
    },
    #[error("walker {walker} at {from} cannot reach path start {first}")]
    PathStartUnreachable {
        walker: InstanceId,
        from: InstanceId,
        first: InstanceId,
    },
    #[error("walker {walker} exhausted its queue on edge {edge}: an edge cannot be a terminal location")]
    EdgeTerminal { walker: InstanceId, edge: InstanceId },
    #[error("walker {walker} cannot move from edge {from} directly to edge {head}")]
    EdgeToEdge {
        walker: InstanceId,
        from: InstanceId,
        head: InstanceId,
    },
    #[error("walker {walker} left edge {edge} toward {target}, which is not its exit node")]
    WrongExitNode {
        walker: InstanceId,
        edge: InstanceId,
        target: InstanceId,
    },
    #[error("step budget of {0} exceeded")]
    BudgetExceeded(u64),
    #[error("ability `{ability}` failed for walker {walker} at {location}: {source}")]
    AbilityFailed {
        walker: InstanceId,
        location: InstanceId,
        ability: String,
        #[source]
        source: Box<RuntimeError>,
    },
    /// Raised by host-provided ability bodies and the DSL interpreter.
    #[error("{0}")]
    Script(String),
}

impl RuntimeError {
    /// True for budget exhaustion, which callers map to a dedicated exit code.
    pub fn is_budget(&self) -> bool {
        match self {
            RuntimeError::BudgetExceeded(_) => true,
            RuntimeError::AbilityFailed { source, .. } => source.is_budget(),
            _ => false,
        }
    }
}
