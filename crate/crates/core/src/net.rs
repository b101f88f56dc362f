//! Channel events and who gets to see them.
//!
//! Every classical message, pad exchange, qubit hand-off and abort flag of a
//! run is appended to a [`Network`]. The adversary's view and the persisted
//! transcript are both projections of this log.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Authenticated broadcast.
    Broadcast,
    /// Pairwise private classical message.
    Private,
    /// A participant's published share in a parity round.
    Publish,
    /// A one-time pad bit shared by a pair.
    Pad,
    /// A qubit sent over a private quantum channel (no classical payload).
    Quantum,
    /// A subprotocol output as learned by its recipients.
    Output,
    /// Public abort announcement.
    Abort,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Broadcast => "broadcast",
            Channel::Private => "private",
            Channel::Publish => "publish",
            Channel::Pad => "pad",
            Channel::Quantum => "quantum",
            Channel::Output => "output",
            Channel::Abort => "abort",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "broadcast" => Channel::Broadcast,
            "private" => Channel::Private,
            "publish" => Channel::Publish,
            "pad" => Channel::Pad,
            "quantum" => Channel::Quantum,
            "output" => Channel::Output,
            "abort" => Channel::Abort,
            other => return Err(format!("unknown channel `{other}`")),
        })
    }
}

/// Which participants observe an event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scope {
    All,
    Parties(Vec<usize>),
}

impl Scope {
    pub fn pair(a: usize, b: usize) -> Self {
        if a == b {
            Scope::Parties(vec![a])
        } else {
            Scope::Parties(vec![a.min(b), a.max(b)])
        }
    }

    pub fn includes(&self, party: usize) -> bool {
        match self {
            Scope::All => true,
            Scope::Parties(p) => p.contains(&party),
        }
    }

    pub fn intersects(&self, coalition: &BTreeSet<usize>) -> bool {
        match self {
            Scope::All => true,
            Scope::Parties(p) => p.iter().any(|x| coalition.contains(x)),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::All => f.write_str("*"),
            Scope::Parties(p) => {
                let parts: Vec<String> = p.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "*" {
            return Ok(Scope::All);
        }
        s.split(',')
            .map(|p| p.parse::<usize>().map_err(|e| format!("bad scope `{s}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Scope::Parties)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub round: u64,
    pub step: String,
    /// `None` for events no single participant emits (outputs, aborts).
    pub emitter: Option<usize>,
    pub channel: Channel,
    pub scope: Scope,
    pub payload: Vec<bool>,
}

impl Event {
    pub fn visible_to(&self, coalition: &BTreeSet<usize>) -> bool {
        self.scope.intersects(coalition)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Network {
    n: usize,
    round: u64,
    step: String,
    events: Vec<Event>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            round: 0,
            step: "0".into(),
            events: Vec::new(),
        }
    }

    pub fn participants(&self) -> usize {
        self.n
    }

    pub fn set_step(&mut self, step: &str) {
        step.clone_into(&mut self.step);
    }

    pub fn step(&self) -> &str {
        &self.step
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn next_round(&mut self) -> u64 {
        self.round += 1;
        self.round
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn log(&mut self, emitter: Option<usize>, channel: Channel, scope: Scope, payload: Vec<bool>) {
        self.events.push(Event {
            round: self.round,
            step: self.step.clone(),
            emitter,
            channel,
            scope,
            payload,
        });
    }

    pub fn broadcast(&mut self, emitter: usize, payload: Vec<bool>) {
        self.log(Some(emitter), Channel::Broadcast, Scope::All, payload);
    }

    pub fn private(&mut self, from: usize, to: usize, payload: Vec<bool>) {
        self.log(Some(from), Channel::Private, Scope::pair(from, to), payload);
    }

    pub fn quantum(&mut self, from: usize, to: usize) {
        self.log(Some(from), Channel::Quantum, Scope::pair(from, to), Vec::new());
    }

    pub fn abort(&mut self) {
        self.log(None, Channel::Abort, Scope::All, Vec::new());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_text_round_trip() {
        for s in [Scope::All, Scope::Parties(vec![0, 3]), Scope::Parties(vec![2])] {
            assert_eq!(s.to_string().parse::<Scope>().unwrap(), s);
        }
    }

    #[test]
    fn private_events_only_reach_endpoints() {
        let mut net = Network::new(4);
        net.private(1, 2, vec![true]);
        let e = &net.events()[0];
        assert!(e.visible_to(&BTreeSet::from([2])));
        assert!(!e.visible_to(&BTreeSet::from([0, 3])));
    }
}
