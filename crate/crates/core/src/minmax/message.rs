//! In-process neighbor-to-neighbor message layer with a locality audit.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub reader: usize,
    pub sender: usize,
    pub round: usize,
    pub channel: String,
}

/// Records every cross-agent read and every read that crossed a non-edge.
#[derive(Debug, Default)]
pub struct LocalityAudit {
    reads: AtomicU64,
    violations: Mutex<Vec<Violation>>,
}

impl LocalityAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reads(&self) -> u64 {
        self.reads.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> Vec<Violation> {
        self.violations.lock().expect("audit lock").clone()
    }

    pub fn is_clean(&self) -> bool {
        self.violations.lock().expect("audit lock").is_empty()
    }

    fn record(&self, v: Violation) {
        self.violations.lock().expect("audit lock").push(v);
    }
}

/// One round of messages: agent `i` posted `messages[i]`; reads are only
/// allowed along edges of `topology` (and from oneself).
pub struct MessageBus<'a, M> {
    topology: &'a Topology,
    round: usize,
    channel: &'a str,
    messages: Vec<M>,
    audit: &'a LocalityAudit,
}

impl<'a, M> MessageBus<'a, M> {
    pub fn publish(
        topology: &'a Topology,
        round: usize,
        channel: &'a str,
        messages: Vec<M>,
        audit: &'a LocalityAudit,
    ) -> Result<Self> {
        if messages.len() != topology.n_agents() {
            return Err(Error::arg(format!(
                "{} messages posted on a {}-agent network",
                messages.len(),
                topology.n_agents()
            )));
        }
        Ok(Self {
            topology,
            round,
            channel,
            messages,
            audit,
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    pub fn read(&self, reader: usize, sender: usize) -> Result<&M> {
        self.audit.reads.fetch_add(1, Ordering::Relaxed);
        if reader >= self.messages.len() || sender >= self.messages.len() {
            return Err(Error::arg(format!("agent {reader} or {sender} is not on the bus")));
        }
        if !self.topology.in_neighborhood(reader, sender) {
            self.audit.record(Violation {
                reader,
                sender,
                round: self.round,
                channel: self.channel.to_string(),
            });
            return Err(Error::Locality {
                reader,
                sender,
                round: self.round,
            });
        }
        Ok(&self.messages[sender])
    }

    /// Messages from the closed neighborhood of `reader`, ascending by sender.
    pub fn gather(&self, reader: usize) -> Result<Vec<(usize, &M)>> {
        self.topology
            .neighborhood(reader)?
            .into_iter()
            .map(|j| self.read(reader, j).map(|m| (j, m)))
            .collect()
    }
}
