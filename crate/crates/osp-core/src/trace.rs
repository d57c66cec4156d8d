//! Execution traces: one event per observable runtime step.
//!
//! Traces are the primary debugging surface and the object golden tests
//! compare, so rendering must be byte-deterministic: events carry a
//! monotone sequence number and print as
//!
//! ```text
//! <seq> <kind> w=<walker-id> loc=<id|none> <detail>
//! ```
//!
//! with the trailing detail omitted when empty. Walker id 0 is reserved for
//! events raised outside any walker context (driver code).

use crate::graph::InstanceId;
use std::fmt;

/// Event kinds, in rough lifecycle order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Walker placed onto the graph.
    Spawn,
    /// Walker is now at a location and its entry phase is about to run.
    Arrive,
    /// One ability executed; detail is `<owner-archetype>.<name>/<phase>`.
    Ability,
    /// Exit phase finished; walker is leaving its location.
    Depart,
    /// Walker relocated to the dequeued destination.
    Move,
    /// Standing on an edge, the exit node was appended to the queue.
    AutoQueue,
    /// Remaining phase work bypassed; immediate move follows.
    Skip,
    /// Walker removed itself from the graph.
    Disengage,
    /// Queue empty at a node; walker went inactive in place.
    Exhaust,
    /// A report payload was emitted.
    Report,
    /// A fatal runtime error; detail carries the message.
    Error,
}

impl TraceKind {
    pub fn name(self) -> &'static str {
        match self {
            TraceKind::Spawn => "spawn",
            TraceKind::Arrive => "arrive",
            TraceKind::Ability => "ability",
            TraceKind::Depart => "depart",
            TraceKind::Move => "move",
            TraceKind::AutoQueue => "autoqueue",
            TraceKind::Skip => "skip",
            TraceKind::Disengage => "disengage",
            TraceKind::Exhaust => "exhaust",
            TraceKind::Report => "report",
            TraceKind::Error => "error",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One trace event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: TraceKind,
    /// Walker the event belongs to; 0 for driver-context events.
    pub walker: InstanceId,
    /// Walker location when the event fired, if any.
    pub loc: Option<InstanceId>,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} w={} loc=", self.seq, self.kind, self.walker)?;
        match self.loc {
            Some(id) => write!(f, "{id}")?,
            None => write!(f, "none")?,
        }
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Append-only event buffer with its own sequence counter.
#[derive(Debug, Default)]
pub struct Trace {
    events: Vec<TraceEvent>,
    next_seq: u64,
}

impl Trace {
    pub fn new() -> Trace {
        Trace {
            events: Vec::new(),
            next_seq: 1,
        }
    }

    pub fn push(
        &mut self,
        kind: TraceKind,
        walker: InstanceId,
        loc: Option<InstanceId>,
        detail: impl Into<String>,
    ) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.events.push(TraceEvent {
            seq,
            kind,
            walker,
            loc,
            detail: detail.into(),
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    /// Full rendering, one event per line (with trailing newline when
    /// non-empty).
    pub fn render(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&ev.to_string());
            out.push('\n');
        }
        out
    }
}
