//! Domain types shared by every scheduler: requests, allocation profiles and
//! the tolerances used for all real-valued comparisons.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Absolute tolerance for equality and bound checks on traffic volumes.
pub const EPS: f64 = 1e-9;

/// Amounts at or below this are treated as zero and never stored.
pub const DUST: f64 = 1e-12;

/// Timeslot index. Slot `t` covers the interval `(t - 1, t]` of the timeline.
pub type Slot = u64;

/// Default slot length in seconds (5 minutes). Metadata only.
pub const DEFAULT_SLOT_SECS: f64 = 300.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u64);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    /// Content is available at arrival.
    #[default]
    Elastic,
    /// Bandwidth is booked ahead of the content; see
    /// [`LinkScheduler::reserve`](crate::link::LinkScheduler::reserve).
    Reservation,
}

/// A deadline-constrained transfer demand.
///
/// The wire form matches the request file format:
/// `{id, volume, arrival, deadline, src?, dst?, kind?}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub volume: f64,
    pub arrival: Slot,
    pub deadline: Slot,
    #[serde(rename = "src", default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(rename = "dst", default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<String>,
    #[serde(default)]
    pub kind: RequestKind,
}

impl Request {
    pub fn elastic(id: u64, volume: f64, arrival: Slot, deadline: Slot) -> Self {
        Self {
            id: RequestId(id),
            volume,
            arrival,
            deadline,
            source: None,
            destination: None,
            kind: RequestKind::Elastic,
        }
    }

    pub fn reservation(id: u64, volume: f64, arrival: Slot, deadline: Slot) -> Self {
        Self {
            kind: RequestKind::Reservation,
            ..Self::elastic(id, volume, arrival, deadline)
        }
    }

    pub fn between(mut self, source: impl Into<String>, destination: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self.destination = Some(destination.into());
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.volume.is_finite() && self.volume > 0.0) {
            return Err(ModelError::NonPositiveVolume {
                id: self.id,
                volume: self.volume,
            });
        }
        if self.deadline <= self.arrival {
            return Err(ModelError::EmptyWindow {
                id: self.id,
                arrival: self.arrival,
                deadline: self.deadline,
            });
        }
        if let (Some(s), Some(d)) = (&self.source, &self.destination) {
            if s == d {
                return Err(ModelError::SameEndpoints { id: self.id });
            }
        }
        Ok(())
    }
}

/// Parses a request file: a JSON array of requests.
pub fn parse_requests(text: &str) -> Result<Vec<Request>, ModelError> {
    let requests: Vec<Request> = serde_json::from_str(text)?;
    for r in &requests {
        r.validate()?;
    }
    Ok(requests)
}

/// Sparse map from an allocation key to a strictly positive amount.
///
/// `K` is [`Slot`] on a single link and `(Slot, LinkId)` in a network.
/// Serialized as a list of `[key, amount]` pairs since JSON map keys must be
/// strings.
#[derive(Clone, Debug, PartialEq)]
pub struct AllocationProfile<K: Ord = Slot> {
    entries: BTreeMap<K, f64>,
}

impl<K: Ord> Default for AllocationProfile<K> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<K: Ord + Copy> AllocationProfile<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `amount` to the entry at `key`. Dust is dropped.
    pub fn add(&mut self, key: K, amount: f64) {
        if amount <= DUST {
            return;
        }
        *self.entries.entry(key).or_insert(0.0) += amount;
    }

    /// Removes up to `amount` from `key`, deleting the entry once it hits dust.
    /// Returns what was actually removed.
    pub fn take(&mut self, key: K, amount: f64) -> f64 {
        let Some(v) = self.entries.get_mut(&key) else {
            return 0.0;
        };
        let taken = amount.min(*v);
        *v -= taken;
        if *v <= DUST {
            self.entries.remove(&key);
        }
        taken
    }

    pub fn remove(&mut self, key: K) -> f64 {
        self.entries.remove(&key).unwrap_or(0.0)
    }

    pub fn get(&self, key: K) -> f64 {
        self.entries.get(&key).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (K, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn first_key(&self) -> Option<K> {
        self.entries.keys().next().copied()
    }

    pub fn retain(&mut self, f: impl FnMut(&K, &mut f64) -> bool) {
        self.entries.retain(f)
    }
}

impl<K: Ord + Serialize> Serialize for AllocationProfile<K> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(&self.entries)
    }
}

impl<'de, K: Ord + Deserialize<'de>> Deserialize<'de> for AllocationProfile<K> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(K, f64)>::deserialize(d)?;
        Ok(Self {
            entries: pairs.into_iter().collect(),
        })
    }
}

impl AllocationProfile<Slot> {
    /// Objective of the single-link problem: `sum E(t) * (td - t)`.
    pub fn deadline_cost(&self, deadline: Slot) -> f64 {
        self.iter()
            .map(|(t, e)| e * deadline.saturating_sub(t) as f64)
            .sum()
    }
}

impl<K: Ord + Copy> FromIterator<(K, f64)> for AllocationProfile<K> {
    fn from_iter<I: IntoIterator<Item = (K, f64)>>(iter: I) -> Self {
        let mut p = Self::new();
        for (k, v) in iter {
            p.add(k, v);
        }
        p
    }
}
