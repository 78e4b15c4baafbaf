use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::artifacts::{Artifact, ArtifactKind};
use crate::toolgraph::{GraphError, NodeId, ToolGraph};
use crate::util::sha256_hex;

/// Opaque reference to a pool entry, rendered as `kind:counter`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Handle {
    kind: ArtifactKind,
    counter: u32,
}

impl Handle {
    pub fn kind(&self) -> ArtifactKind {
        self.kind
    }

    pub fn counter(&self) -> u32 {
        self.counter
    }
}

impl fmt::Display for Handle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.counter)
    }
}

impl FromStr for Handle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, counter) = s.split_once(':').ok_or_else(|| format!("`{s}` is not a handle of the form kind:counter"))?;
        let kind = kind.parse().map_err(|()| format!("`{s}` has unknown artifact kind `{kind}`"))?;
        let counter = counter
            .parse::<u32>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| format!("`{s}` has an invalid counter"))?;
        Ok(Handle { kind, counter })
    }
}

impl Serialize for Handle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Handle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoolError {
    #[error("dangling handle {handle}: evicted (produced by {producer})")]
    Evicted { handle: Handle, producer: NodeId },
    #[error("dangling handle {handle}: no such entry in the resource pool")]
    Unknown { handle: Handle },
    #[error("payload of kind {actual} cannot be stored as {expected}")]
    KindMismatch { expected: ArtifactKind, actual: ArtifactKind },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub payload: Arc<Artifact>,
    pub producer: NodeId,
    pub created_seq: u32,
}

/// One line of a pool listing as written to session directories.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSnapshotEntry {
    pub handle: Handle,
    pub kind: ArtifactKind,
    pub producer: NodeId,
    pub created_seq: u32,
    pub live: bool,
    /// SHA-256 of the serialized payload; absent for evicted entries.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct ResourcePool {
    session_id: String,
    counters: BTreeMap<ArtifactKind, u32>,
    entries: BTreeMap<Handle, PoolEntry>,
    evicted: BTreeMap<Handle, (NodeId, u32)>,
}

impl ResourcePool {
    pub fn new(session_id: impl Into<String>) -> Self {
        ResourcePool { session_id: session_id.into(), ..Default::default() }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores `payload` under a fresh handle. Counters only grow, so a handle
    /// is never reissued, not even after eviction.
    pub fn put(&mut self, kind: ArtifactKind, payload: Artifact, producer: NodeId, seq: u32) -> Result<Handle, PoolError> {
        if payload.kind() != kind {
            return Err(PoolError::KindMismatch { expected: kind, actual: payload.kind() });
        }
        let counter = self.counters.entry(kind).or_insert(0);
        *counter += 1;
        let handle = Handle { kind, counter: *counter };
        self.entries.insert(handle, PoolEntry { payload: Arc::new(payload), producer, created_seq: seq });
        Ok(handle)
    }

    pub fn get(&self, handle: &Handle) -> Result<&Arc<Artifact>, PoolError> {
        self.entry(handle).map(|e| &e.payload)
    }

    pub fn entry(&self, handle: &Handle) -> Result<&PoolEntry, PoolError> {
        if let Some(e) = self.entries.get(handle) {
            return Ok(e);
        }
        match self.evicted.get(handle) {
            Some((producer, _)) => Err(PoolError::Evicted { handle: *handle, producer: producer.clone() }),
            None => Err(PoolError::Unknown { handle: *handle }),
        }
    }

    pub fn is_live(&self, handle: &Handle) -> bool {
        self.entries.contains_key(handle)
    }

    pub fn live_handles(&self) -> impl Iterator<Item = (&Handle, &PoolEntry)> {
        self.entries.iter()
    }

    /// Evicts every entry produced by `node` or one of its descendants in
    /// `graph`. Returns the evicted handles ordered by creation seq.
    pub fn evict_descendants(&mut self, graph: &ToolGraph, node: &NodeId) -> Result<Vec<Handle>, PoolError> {
        let mut tainted = graph.descendants(node)?;
        tainted.insert(node.clone());
        let mut hit: Vec<(u32, Handle)> = self
            .entries
            .iter()
            .filter(|(_, e)| tainted.contains(&e.producer))
            .map(|(h, e)| (e.created_seq, *h))
            .collect();
        hit.sort();
        for (_, h) in &hit {
            let e = self.entries.remove(h).expect("entry listed above");
            self.evicted.insert(*h, (e.producer, e.created_seq));
        }
        Ok(hit.into_iter().map(|(_, h)| h).collect())
    }

    /// Live and evicted entries in creation order.
    pub fn snapshot(&self) -> Vec<PoolSnapshotEntry> {
        let mut out: Vec<PoolSnapshotEntry> = self
            .entries
            .iter()
            .map(|(h, e)| PoolSnapshotEntry {
                handle: *h,
                kind: h.kind,
                producer: e.producer.clone(),
                created_seq: e.created_seq,
                live: true,
                digest: Some(sha256_hex(&serde_json::to_vec(&*e.payload).expect("artifacts serialize"))),
            })
            .chain(self.evicted.iter().map(|(h, (producer, seq))| PoolSnapshotEntry {
                handle: *h,
                kind: h.kind,
                producer: producer.clone(),
                created_seq: *seq,
                live: false,
                digest: None,
            }))
            .collect();
        out.sort_by_key(|e| (e.created_seq, e.handle));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdetoolkit::artifacts::{Domain, ScalarValue};
    use crate::toolgraph::{DepKind, NodeKind};

    fn domain(x: f64) -> Artifact {
        Artifact::Domain(Domain::Interval { xmin: 0.0, xmax: x })
    }

    #[test]
    fn put_then_get_is_identity() {
        let mut pool = ResourcePool::new("s");
        let h = pool.put(ArtifactKind::Domain, domain(1.0), NodeId::new("n1"), 1).unwrap();
        assert_eq!(h.to_string(), "domain:1");
        assert_eq!(**pool.get(&h).unwrap(), domain(1.0));
        // get does not consume
        assert!(pool.get(&h).is_ok());
    }

    #[test]
    fn handles_are_fresh() {
        let mut pool = ResourcePool::new("s");
        let a = pool.put(ArtifactKind::Domain, domain(1.0), NodeId::new("n1"), 1).unwrap();
        let b = pool.put(ArtifactKind::Domain, domain(2.0), NodeId::new("n2"), 2).unwrap();
        assert_eq!((a.to_string().as_str(), b.to_string().as_str()), ("domain:1", "domain:2"));
    }

    #[test]
    fn unknown_handle_is_dangling() {
        let pool = ResourcePool::new("s");
        let h: Handle = "domain:99".parse().unwrap();
        assert_eq!(pool.get(&h).unwrap_err(), PoolError::Unknown { handle: h });
    }

    #[test]
    fn kind_mismatch_on_put() {
        let mut pool = ResourcePool::new("s");
        let err = pool.put(ArtifactKind::Pde, domain(1.0), NodeId::new("n1"), 1).unwrap_err();
        assert!(matches!(err, PoolError::KindMismatch { .. }));
    }

    #[test]
    fn handle_parsing() {
        assert!("domain".parse::<Handle>().is_err());
        assert!("mesh:1".parse::<Handle>().is_err());
        assert!("domain:0".parse::<Handle>().is_err());
        assert!("domain:x".parse::<Handle>().is_err());
        assert_eq!("timedomain:3".parse::<Handle>().unwrap().to_string(), "timedomain:3");
    }

    fn chain() -> ToolGraph {
        let mut g = ToolGraph::new();
        for (i, role) in ["A", "B", "C"].iter().enumerate() {
            g.add_node(NodeId::new(*role), *role, NodeKind::Tool, i as u32 + 1).unwrap();
        }
        g.add_edge(&NodeId::new("A"), &NodeId::new("B"), DepKind::Data).unwrap();
        g.add_edge(&NodeId::new("B"), &NodeId::new("C"), DepKind::Data).unwrap();
        g
    }

    fn scalar(v: f64) -> Artifact {
        Artifact::Scalar(ScalarValue { name: "v".into(), value: v })
    }

    fn fill(pool: &mut ResourcePool, producers: &[&str]) -> Vec<Handle> {
        producers
            .iter()
            .enumerate()
            .map(|(i, p)| pool.put(ArtifactKind::Scalar, scalar(i as f64), NodeId::new(*p), i as u32 + 1).unwrap())
            .collect()
    }

    #[test]
    fn eviction_follows_taint() {
        let g = chain();
        let mut pool = ResourcePool::new("s");
        let h = fill(&mut pool, &["A", "B", "C"]);
        assert_eq!(pool.clone().evict_descendants(&g, &NodeId::new("A")).unwrap(), h);
        assert_eq!(pool.evict_descendants(&g, &NodeId::new("C")).unwrap(), vec![h[2]]);
        assert_eq!(pool.len(), 2);
    }

    #[test]
    fn eviction_skips_non_producers() {
        let g = chain();
        let mut pool = ResourcePool::new("s");
        let h = fill(&mut pool, &["A", "C"]);
        assert_eq!(pool.evict_descendants(&g, &NodeId::new("A")).unwrap(), h);
    }

    #[test]
    fn evicted_handles_name_their_producer_and_stay_dead() {
        let g = chain();
        let mut pool = ResourcePool::new("s");
        let h = fill(&mut pool, &["A"]);
        pool.evict_descendants(&g, &NodeId::new("A")).unwrap();
        assert_eq!(pool.get(&h[0]).unwrap_err(), PoolError::Evicted { handle: h[0], producer: NodeId::new("A") });
        let again = pool.put(ArtifactKind::Scalar, scalar(9.0), NodeId::new("A"), 4).unwrap();
        assert_ne!(again, h[0]);
        assert!(pool.get(&h[0]).is_err());
    }

    #[test]
    fn eviction_at_unknown_node_fails() {
        let mut pool = ResourcePool::new("s");
        assert!(pool.evict_descendants(&chain(), &NodeId::new("Z")).is_err());
    }

    #[test]
    fn snapshot_is_in_creation_order() {
        let g = chain();
        let mut pool = ResourcePool::new("s");
        fill(&mut pool, &["C", "B", "A"]);
        pool.evict_descendants(&g, &NodeId::new("B")).unwrap();
        let snap = pool.snapshot();
        let seqs: Vec<u32> = snap.iter().map(|e| e.created_seq).collect();
        assert_eq!(seqs, vec![1, 2, 3]);
        assert_eq!(snap.iter().filter(|e| e.live).count(), 1);
        assert!(snap[2].digest.as_ref().is_some_and(|d| d.len() == 64));
    }
}
