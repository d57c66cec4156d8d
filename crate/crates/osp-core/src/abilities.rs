//! Abilities: code attached to archetypes that fires when a walker and a
//! location meet.
//!
//! A node or edge archetype owns abilities triggered by walker archetypes;
//! a walker archetype owns abilities triggered by node or edge archetypes.
//! On arrival the location's matching entry abilities run first, then the
//! walker's; on departure the walker's matching exit abilities run first,
//! then the location's. A trigger matches when the counterpart's archetype
//! is the trigger archetype or declares it as an ancestor.
//!
//! Bodies are host code behind the [`AbilityBody`] trait; the DSL installs
//! interpreted bodies through the same interface. A body signals traversal
//! control by returning a [`Flow`] — it must not relocate its own walker
//! directly, since the engine finishes the phase bookkeeping after the body
//! returns.

use crate::archetype::ArchetypeId;
use crate::engine::Engine;
use crate::error::RuntimeError;
use crate::graph::InstanceId;
use std::fmt;
use std::sync::Arc;

/// When an ability fires relative to the walker's stay at a location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Entry,
    Exit,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Entry => "entry",
            Phase::Exit => "exit",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What an ability body asks the engine to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    /// Proceed normally with the remaining abilities of the phase.
    Continue,
    /// Abandon the remaining abilities of this phase and all exit abilities,
    /// and move immediately to the next queued destination.
    Skip,
    /// Terminate the traversal: clear the queue, leave the graph, go
    /// inactive. Properties are retained.
    Disengage,
}

/// Which side of the walker/location pair owns the executing ability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnerSide {
    Location,
    Walker,
}

/// Everything a body may need to know about why it is running.
///
/// Contextual references follow the owner's perspective: for a location
/// ability `self` is the location and `visitor` is the walker; for a walker
/// ability `self` is the walker and `here` is the location. The mapping is
/// provided by [`Invocation::self_ref`], [`Invocation::here`], and
/// [`Invocation::visitor`].
#[derive(Debug, Clone)]
pub struct Invocation {
    pub walker: InstanceId,
    pub location: InstanceId,
    /// Instance that owns the ability (equal to `walker` or `location`).
    pub owner: InstanceId,
    pub side: OwnerSide,
    pub phase: Phase,
    /// Archetype that declared the ability (an ancestor for inherited ones).
    pub declared_by: ArchetypeId,
    pub ability: String,
}

impl Invocation {
    /// The instance `self` refers to inside the body.
    pub fn self_ref(&self) -> InstanceId {
        self.owner
    }

    /// The location, visible as `here` from walker-owned abilities only.
    pub fn here(&self) -> Option<InstanceId> {
        match self.side {
            OwnerSide::Walker => Some(self.location),
            OwnerSide::Location => None,
        }
    }

    /// The walker, visible as `visitor` from location-owned abilities only.
    pub fn visitor(&self) -> Option<InstanceId> {
        match self.side {
            OwnerSide::Location => Some(self.walker),
            OwnerSide::Walker => None,
        }
    }
}

/// An executable ability body. Implementations get mutable access to the
/// whole engine, so they can read and write properties, build graph
/// structure, enqueue visits for the invoking walker, and spawn other
/// walkers (spawns are synchronous and reentrant).
pub trait AbilityBody: Send + Sync {
    fn run(&self, engine: &mut Engine, inv: &Invocation) -> Result<Flow, RuntimeError>;
}

/// A declared ability: name, trigger archetype, phase, body.
#[derive(Clone)]
pub struct AbilityDef {
    pub name: String,
    pub trigger: ArchetypeId,
    pub phase: Phase,
    pub body: Arc<dyn AbilityBody>,
}

impl fmt::Debug for AbilityDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbilityDef")
            .field("name", &self.name)
            .field("trigger", &self.trigger)
            .field("phase", &self.phase)
            .finish_non_exhaustive()
    }
}

/// Convenience body built from a closure, mainly for host-driven setups and
/// tests.
pub struct FnBody<F>(pub F);

impl<F> AbilityBody for FnBody<F>
where
    F: Fn(&mut Engine, &Invocation) -> Result<Flow, RuntimeError> + Send + Sync,
{
    fn run(&self, engine: &mut Engine, inv: &Invocation) -> Result<Flow, RuntimeError> {
        (self.0)(engine, inv)
    }
}

impl AbilityDef {
    /// Build an ability from a closure body.
    pub fn from_fn<F>(name: &str, trigger: ArchetypeId, phase: Phase, body: F) -> AbilityDef
    where
        F: Fn(&mut Engine, &Invocation) -> Result<Flow, RuntimeError> + Send + Sync + 'static,
    {
        AbilityDef {
            name: name.to_string(),
            trigger,
            phase,
            body: Arc::new(FnBody(body)),
        }
    }
}
