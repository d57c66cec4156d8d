//! Object-spatial runtime: a typed in-memory graph of node and edge
//! instances traversed by mobile walker entities.
//!
//! Computation is organized around four archetype roles. Objects hold plain
//! data; nodes and edges form a directed graph; walkers travel it. Code
//! lives in *abilities* attached to node, edge, and walker archetypes:
//! when a walker arrives somewhere, the location's matching entry abilities
//! run, then the walker's; on departure the walker's exit abilities run,
//! then the location's. Movement is queue-driven — `visit` appends
//! destinations, the engine dequeues and relocates — with first-class
//! validated path collections for route-shaped values.
//!
//! The crate exposes three layers:
//!
//! - [`graph::SystemState`] — instances, connectivity, walker bookkeeping,
//!   cascading deletion, snapshots;
//! - [`engine::Engine`] — the deterministic traversal loop with trace
//!   emission, driven programmatically via [`abilities::AbilityBody`];
//! - [`dsl`] — a small textual language (`.osp` files) compiled onto the
//!   two layers above, used by the `osp` command-line binary.

pub mod abilities;
pub mod archetype;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod graph;
pub mod path;
pub mod trace;
pub mod value;

pub use abilities::{AbilityBody, AbilityDef, Flow, Invocation, OwnerSide, Phase};
pub use archetype::{ArchetypeId, ArchetypeKind, FieldDef, Registry, ValueKind};
pub use engine::{Engine, SpawnTarget, VisitTarget, DEFAULT_BUDGET, DRIVER};
pub use error::{CoreError, PathConstraint, PathError, RuntimeError};
pub use graph::{Direction, InstanceId, SystemState};
pub use path::{derive_path, expand_path, path_query, validate_path, PathCollection, PathTransform};
pub use trace::{TraceEvent, TraceKind};
pub use value::Value;
