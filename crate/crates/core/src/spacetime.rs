//! Deterministic message timeline between agents at fixed 1-D positions,
//! with light-cone validation.
//!
//! Units: c = 1, so times and distances share a scale. A receive event may
//! never precede its send by less than the separation of the endpoints
//! (adversarial messages may be slower, never faster). The protocol's trust
//! anchor is the check at the verifier pair: V2 must hold P2's answer
//! strictly before light could carry V1's challenge matrix to V2. Verifier
//! positions are declared and trusted; prover positions are labels only.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpacetimeError {
    #[error("receive at t={recv} precedes light-cone arrival t={earliest} for message {msg}")]
    CausalityViolationInConstruction {
        msg: u64,
        recv: f64,
        earliest: f64,
    },
    #[error("events reference different runs: {0} vs {1}")]
    MismatchedRun(u64, u64),
    #[error("message {0} has no matching send event")]
    OrphanReceive(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AgentId {
    P1,
    P2,
    V1,
    V2,
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            AgentId::P1 => "P1",
            AgentId::P2 => "P2",
            AgentId::V1 => "V1",
            AgentId::V2 => "V2",
        };
        f.write_str(s)
    }
}

/// Agent positions on a line; the verifiers' separation D = |V1 − V2| is
/// the quantity the timing check trusts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteLayout {
    pub p1: f64,
    pub p2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl SiteLayout {
    /// P1/V1 co-located at 0, P2/V2 co-located at distance d.
    pub fn colocated(d: f64) -> Self {
        SiteLayout {
            p1: 0.0,
            p2: d,
            v1: 0.0,
            v2: d,
        }
    }

    pub fn position(&self, a: AgentId) -> f64 {
        match a {
            AgentId::P1 => self.p1,
            AgentId::P2 => self.p2,
            AgentId::V1 => self.v1,
            AgentId::V2 => self.v2,
        }
    }

    pub fn distance(&self, a: AgentId, b: AgentId) -> f64 {
        (self.position(a) - self.position(b)).abs()
    }

    /// D = |V1 − V2|.
    pub fn verifier_separation(&self) -> f64 {
        self.distance(AgentId::V1, AgentId::V2)
    }
}

impl Default for SiteLayout {
    fn default() -> Self {
        SiteLayout::colocated(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Send,
    Receive,
}

/// One endpoint of a message in transit.
#[derive(Debug, Clone, Serialize)]
pub struct SpacetimeEvent {
    pub kind: EventKind,
    /// Message label as it appears in serialized timelines.
    pub msg: String,
    #[serde(skip)]
    pub msg_id: u64,
    pub from: AgentId,
    pub to: AgentId,
    pub time: f64,
}

/// Time-ordered, light-cone-validated event list.
#[derive(Debug, Clone, Serialize)]
pub struct Timeline {
    events: Vec<SpacetimeEvent>,
}

const TIME_EPS: f64 = 1e-12;

/// Stable time ordering, ties broken by (time, message id, send-before-
/// receive); every receive is checked against its send's light cone.
pub fn schedule(
    mut events: Vec<SpacetimeEvent>,
    layout: &SiteLayout,
) -> Result<Timeline, SpacetimeError> {
    for ev in events.iter().filter(|e| e.kind == EventKind::Receive) {
        let send = events
            .iter()
            .find(|s| s.kind == EventKind::Send && s.msg_id == ev.msg_id)
            .ok_or(SpacetimeError::OrphanReceive(ev.msg_id))?;
        let earliest = send.time + layout.distance(send.from, send.to);
        if ev.time + TIME_EPS < earliest {
            return Err(SpacetimeError::CausalityViolationInConstruction {
                msg: ev.msg_id,
                recv: ev.time,
                earliest,
            });
        }
    }
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then(a.msg_id.cmp(&b.msg_id))
            .then_with(|| match (a.kind, b.kind) {
                (EventKind::Send, EventKind::Receive) => std::cmp::Ordering::Less,
                (EventKind::Receive, EventKind::Send) => std::cmp::Ordering::Greater,
                _ => std::cmp::Ordering::Equal,
            })
    });
    Ok(Timeline { events })
}

impl Timeline {
    pub fn events(&self) -> &[SpacetimeEvent] {
        &self.events
    }

    pub fn find(&self, kind: EventKind, label: &str) -> Option<&SpacetimeEvent> {
        self.events.iter().find(|e| e.kind == kind && e.msg == label)
    }

    /// One JSON object per line: {kind, msg, from, to, time}.
    pub fn to_json_lines(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Outcome of the no-superluminal-signaling check.
#[derive(Debug, Clone, Serialize)]
pub struct CausalityVerdict {
    pub pass: bool,
    /// Deadline minus the answer's arrival; pass iff strictly positive.
    pub slack: f64,
    pub explanation: String,
}

/// The verifier-side timing gate: the answer received at V2 must arrive
/// strictly before light could carry the V1-side challenge to V2. Equality
/// at the deadline fails (conservative reading of "before").
pub fn nss_check(
    b_send_at_v1: &SpacetimeEvent,
    answer_recv_at_v2: &SpacetimeEvent,
    layout: &SiteLayout,
    run_id: (u64, u64),
) -> Result<CausalityVerdict, SpacetimeError> {
    if run_id.0 != run_id.1 {
        return Err(SpacetimeError::MismatchedRun(run_id.0, run_id.1));
    }
    let deadline = b_send_at_v1.time + layout.verifier_separation();
    let slack = deadline - answer_recv_at_v2.time;
    let pass = slack > 0.0;
    let explanation = if pass {
        format!(
            "answer at t={} beats the light cone from t={} over D={} by {slack}",
            answer_recv_at_v2.time,
            b_send_at_v1.time,
            layout.verifier_separation()
        )
    } else {
        format!(
            "answer at t={} does not precede the light-cone deadline t={deadline}",
            answer_recv_at_v2.time
        )
    };
    Ok(CausalityVerdict {
        pass,
        slack,
        explanation,
    })
}

/// Builder for protocol runs: allocates message ids and accumulates events.
#[derive(Debug, Default)]
pub struct EventLog {
    next_id: u64,
    events: Vec<SpacetimeEvent>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a message sent at `send_time`, arriving exactly at light
    /// speed plus `extra_delay`.
    pub fn message(
        &mut self,
        label: &str,
        from: AgentId,
        to: AgentId,
        send_time: f64,
        extra_delay: f64,
        layout: &SiteLayout,
    ) -> (u64, f64) {
        let id = self.next_id;
        self.next_id += 1;
        let arrival = send_time + layout.distance(from, to) + extra_delay;
        self.events.push(SpacetimeEvent {
            kind: EventKind::Send,
            msg: label.to_string(),
            msg_id: id,
            from,
            to,
            time: send_time,
        });
        self.events.push(SpacetimeEvent {
            kind: EventKind::Receive,
            msg: label.to_string(),
            msg_id: id,
            from,
            to,
            time: arrival,
        });
        (id, arrival)
    }

    pub fn into_timeline(self, layout: &SiteLayout) -> Result<Timeline, SpacetimeError> {
        schedule(self.events, layout)
    }
}
