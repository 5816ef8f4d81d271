//! Directed, capacitated network of datacenters.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Index of a link in [`Topology::links`].
pub type LinkId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub id: String,
    pub src: String,
    pub dst: String,
    pub capacity: f64,
}

/// Wire form: `{nodes: [string], links: [{id, src, dst, capacity}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology", into = "RawTopology")]
pub struct Topology {
    nodes: Vec<String>,
    links: Vec<LinkSpec>,
    #[serde(skip)]
    node_index: HashMap<String, usize>,
    #[serde(skip)]
    endpoints: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct RawTopology {
    nodes: Vec<String>,
    links: Vec<LinkSpec>,
}

impl TryFrom<RawTopology> for Topology {
    type Error = ModelError;

    fn try_from(raw: RawTopology) -> Result<Self, Self::Error> {
        Topology::new(raw.nodes, raw.links)
    }
}

impl From<Topology> for RawTopology {
    fn from(t: Topology) -> Self {
        RawTopology {
            nodes: t.nodes,
            links: t.links,
        }
    }
}

impl Topology {
    pub fn new(nodes: Vec<String>, links: Vec<LinkSpec>) -> Result<Self, ModelError> {
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(ModelError::Topology(format!("duplicate node {n:?}")));
            }
        }
        if links.is_empty() {
            return Err(ModelError::Topology("at least one link is required".into()));
        }
        let mut seen = HashSet::new();
        let mut endpoints = Vec::with_capacity(links.len());
        for l in &links {
            if !seen.insert(l.id.as_str()) {
                return Err(ModelError::Topology(format!("duplicate link id {:?}", l.id)));
            }
            let lookup = |n: &str| {
                node_index.get(n).copied().ok_or_else(|| {
                    ModelError::Topology(format!("link {:?} references unknown node {n:?}", l.id))
                })
            };
            let (s, d) = (lookup(&l.src)?, lookup(&l.dst)?);
            if s == d {
                return Err(ModelError::Topology(format!("link {:?} is a self-loop", l.id)));
            }
            if !(l.capacity.is_finite() && l.capacity > 0.0) {
                return Err(ModelError::BadCapacity(l.capacity));
            }
            endpoints.push((s, d));
        }
        Ok(Self {
            nodes,
            links,
            node_index,
            endpoints,
        })
    }

    /// Builds a topology from `(src, dst, capacity)` triples, naming links
    /// `L1..Lm` in order.
    pub fn from_edges<'a>(edges: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self, ModelError> {
        let mut nodes: Vec<String> = Vec::new();
        let mut links = Vec::new();
        for (i, (s, d, c)) in edges.into_iter().enumerate() {
            for n in [s, d] {
                if !nodes.iter().any(|x| x == n) {
                    nodes.push(n.to_string());
                }
            }
            links.push(LinkSpec {
                id: format!("L{}", i + 1),
                src: s.to_string(),
                dst: d.to_string(),
                capacity: c,
            });
        }
        Self::new(nodes, links)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    /// `(src, dst)` node indices per link.
    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    /// The same topology with every capacity multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        let links = self
            .links
            .iter()
            .map(|l| LinkSpec {
                capacity: l.capacity * factor,
                ..l.clone()
            })
            .collect();
        Self::new(self.nodes.clone(), links)
    }
}
