use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::state::AgentStatus;

/// Time source for trace timings and invocation timestamps.
pub trait Clock: Send + Sync {
    /// Milliseconds since the clock's origin; never decreases.
    fn now_ms(&self) -> u64;
}

#[derive(Debug)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for MonotonicClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }
}

/// Advances by a fixed tick on every reading, so traces are reproducible.
#[derive(Debug)]
pub struct TickClock {
    now: AtomicU64,
    tick: u64,
}

impl TickClock {
    pub fn new(tick: u64) -> Self {
        Self { now: AtomicU64::new(0), tick }
    }
}

impl Default for TickClock {
    fn default() -> Self {
        Self::new(1)
    }
}

impl Clock for TickClock {
    fn now_ms(&self) -> u64 {
        self.now.fetch_add(self.tick, Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Planner,
    Executor,
    Responder,
}

/// One line of the run trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node: Node,
    pub status_before: AgentStatus,
    pub status_after: AgentStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    pub elapsed_ms: u64,
}

pub fn write_trace_jsonl<W: Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_clock_is_deterministic() {
        let c = TickClock::new(5);
        assert_eq!([c.now_ms(), c.now_ms(), c.now_ms()], [0, 5, 10]);
    }

    #[test]
    fn trace_lines_omit_absent_fields() {
        let r = TraceRecord {
            node: Node::Responder,
            status_before: AgentStatus::Respond,
            status_after: AgentStatus::Success,
            tool: None,
            success: None,
            elapsed_ms: 0,
        };
        let mut buf = Vec::new();
        write_trace_jsonl(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"node\":\"responder\",\"status_before\":\"RESPOND\",\"status_after\":\"SUCCESS\",\"elapsed_ms\":0}\n"
        );
    }
}
