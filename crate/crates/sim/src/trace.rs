//! Line-oriented simulation trace.

use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub time_ms: u64,
    pub actor: String,
    pub event: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = if self.detail.is_empty() { "-" } else { &self.detail };
        write!(f, "time={} actor={} event={} detail={}", self.time_ms, self.actor, self.event, detail)
    }
}

/// Events in nondecreasing time order; `push` enforces it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimTrace {
    events: Vec<TraceEvent>,
}

impl SimTrace {
    pub fn push(&mut self, time_ms: u64, actor: impl Into<String>, event: &'static str, detail: impl Into<String>) {
        let last = self.events.last().map_or(0, |e| e.time_ms);
        assert!(time_ms >= last, "trace time went backwards: {time_ms} < {last}");
        self.events.push(TraceEvent {
            time_ms,
            actor: actor.into(),
            event,
            detail: detail.into(),
        });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn count(&self, event: &str) -> usize {
        self.events.iter().filter(|e| e.event == event).count()
    }

    /// One record per line, newline terminated.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_one_line_per_event() {
        let mut t = SimTrace::default();
        t.push(0, "uav-1", "send", "bytes=100");
        t.push(0, "fog-0", "accept", "");
        t.push(5, "cloud", "commit", "height=1");
        assert_eq!(
            t.render(),
            "time=0 actor=uav-1 event=send detail=bytes=100\n\
             time=0 actor=fog-0 event=accept detail=-\n\
             time=5 actor=cloud event=commit detail=height=1\n"
        );
        assert_eq!(t.count("send"), 1);
    }

    #[test]
    #[should_panic(expected = "backwards")]
    fn rejects_time_travel() {
        let mut t = SimTrace::default();
        t.push(10, "a", "x", "");
        t.push(9, "a", "x", "");
    }
}
