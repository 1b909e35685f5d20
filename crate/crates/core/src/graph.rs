//! The profile graph: a star of typed, weighted, temporally bucketed relation
//! edges around the target, with filters, ranking, path finding and a
//! canonical JSON form.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::digest::short_hash;
use crate::extraction::{EntityMention, EntityType, SourceKind};
use crate::relations::RelationType;
use crate::text::{tokenize, StopWords};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("no mentions to build a graph from")]
    EmptyInput,
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("invalid filter: {0}")]
    BadFilter(String),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

/// Interval index of a year: before 2004, 2004-2007, 2008-2011, 2012-2015,
/// 2016 onwards.
pub fn temporal_bucket(year: i32) -> u8 {
    match year {
        ..2004 => 0,
        2004..2008 => 1,
        2008..2012 => 2,
        2012..2016 => 3,
        _ => 4,
    }
}

/// Content hash identifying an entity across graphs.
pub fn node_id(name: &str, entity_type: EntityType) -> String {
    short_hash(format!("{}\u{1f}{}", name.to_lowercase(), entity_type.as_str()).as_bytes())
}

pub fn edge_id(source: &str, target: &str) -> String {
    short_hash(format!("{source}->{target}").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphTarget {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub weight: usize,
    pub bucket: Option<u8>,
    pub sources: BTreeSet<SourceKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloudTerm {
    pub term: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub types: BTreeSet<RelationType>,
    pub weight: usize,
    pub years: BTreeSet<i32>,
    pub cloud: Vec<CloudTerm>,
    pub snippets: Vec<String>,
    pub sources: BTreeSet<SourceKind>,
}

/// The target node comes first; every edge runs from it to one leaf.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileGraph {
    pub format_version: u32,
    pub target: GraphTarget,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<RelationEdge>,
}

/// A mention with the relation types assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedMention {
    pub mention: EntityMention,
    pub types: BTreeSet<RelationType>,
}

/// Word-cloud counts: context tokens of every snippet, minus stopwords and
/// the entity's own tokens, ordered by count then term.
pub fn cloud_terms<'a>(contexts: impl IntoIterator<Item = &'a str>, entity_tokens: &[String], stopwords: &StopWords) -> Vec<CloudTerm> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for text in contexts {
        for t in tokenize(text) {
            let numeric = t.chars().all(|c| c.is_ascii_digit());
            if !numeric && !stopwords.contains(&t) && !entity_tokens.contains(&t) {
                *counts.entry(t).or_default() += 1;
            }
        }
    }
    let mut terms: Vec<CloudTerm> = counts.into_iter().map(|(term, count)| CloudTerm { term, count }).collect();
    terms.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.term.cmp(&b.term)));
    terms
}

fn snippet(m: &EntityMention) -> String {
    let mut parts = m.context_before.clone();
    parts.push(m.entity.name());
    parts.extend(m.context_after.iter().cloned());
    parts.join(" ")
}

/// Merge mentions per (lowercase surface, type) into one node and one edge
/// from the target. Edge types are the union of the mentions' types with the
/// `fallback` type dropped when another type is present.
pub fn build_graph(
    target_name: &str,
    mentions: &[TypedMention],
    fallback: Option<&RelationType>,
    stopwords: &StopWords,
) -> Result<ProfileGraph, GraphError> {
    if mentions.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    let mut ordered: Vec<&TypedMention> = mentions.iter().collect();
    ordered.sort_by(|a, b| {
        (&a.mention.page_id, a.mention.span).cmp(&(&b.mention.page_id, b.mention.span))
    });
    let mut groups: BTreeMap<(String, EntityType), Vec<&TypedMention>> = BTreeMap::new();
    for m in ordered {
        let e = &m.mention.entity;
        groups.entry((e.key(), e.entity_type)).or_default().push(m);
    }

    let target = GraphTarget { id: node_id(target_name, EntityType::Person), name: target_name.to_string() };
    let mut leaves = Vec::new();
    let mut all_sources = BTreeSet::new();
    let target_tokens = tokenize(target_name);
    for ((key, ty), group) in groups {
        // Display name: most frequent casing, then lexicographically smallest.
        let mut casings: BTreeMap<String, usize> = BTreeMap::new();
        for m in &group {
            *casings.entry(m.mention.entity.name()).or_default() += 1;
        }
        let name = casings.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).unwrap().0.clone();
        let id = node_id(&key, ty);
        let years: BTreeSet<i32> = group.iter().flat_map(|m| m.mention.years.iter().copied()).collect();
        let sources: BTreeSet<SourceKind> = group.iter().map(|m| m.mention.source_kind).collect();
        let mut types: BTreeSet<RelationType> = group.iter().flat_map(|m| m.types.iter().cloned()).collect();
        if let Some(f) = fallback {
            if types.len() > 1 {
                types.remove(f);
            }
        }
        if types.is_empty() {
            types.extend(fallback.cloned());
        }
        let snippets: Vec<String> = group.iter().map(|m| snippet(&m.mention)).collect();
        let excluded: Vec<String> = tokenize(&key).into_iter().chain(target_tokens.iter().cloned()).collect();
        let cloud = cloud_terms(snippets.iter().map(String::as_str), &excluded, stopwords);
        all_sources.extend(sources.iter().copied());
        let node = GraphNode {
            id: id.clone(),
            name,
            entity_type: ty,
            weight: group.len(),
            bucket: years.iter().next_back().map(|&y| temporal_bucket(y)),
            sources: sources.clone(),
        };
        let edge = RelationEdge {
            id: edge_id(&target.id, &id),
            source: target.id.clone(),
            target: id,
            types,
            weight: group.len(),
            years,
            cloud,
            snippets,
            sources,
        };
        leaves.push((node, edge));
    }
    leaves.sort_by(|a, b| rank_order(&a.0, &b.0));

    let root = GraphNode {
        id: target.id.clone(),
        name: target.name.clone(),
        entity_type: EntityType::Person,
        weight: mentions.len(),
        bucket: None,
        sources: all_sources,
    };
    let (nodes, edges): (Vec<_>, Vec<_>) = leaves.into_iter().unzip();
    Ok(ProfileGraph {
        format_version: FORMAT_VERSION,
        target,
        nodes: std::iter::once(root).chain(nodes).collect(),
        edges,
    })
}

/// Descending weight, then name, then type.
fn rank_order(a: &GraphNode, b: &GraphNode) -> std::cmp::Ordering {
    b.weight
        .cmp(&a.weight)
        .then_with(|| a.name.cmp(&b.name))
        .then_with(|| a.entity_type.cmp(&b.entity_type))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphFilter {
    pub relation_types: Option<BTreeSet<RelationType>>,
    pub entity_types: Option<BTreeSet<EntityType>>,
    pub sources: Option<BTreeSet<SourceKind>>,
    pub top_k: Option<usize>,
    pub year_range: Option<(i32, i32)>,
}

impl GraphFilter {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.top_k == Some(0) {
            return Err(GraphError::BadFilter("top_k must be positive".into()));
        }
        if let Some((lo, hi)) = self.year_range {
            if lo > hi {
                return Err(GraphError::BadFilter(format!("year range {lo}..{hi} is inverted")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        *self == GraphFilter::default()
    }
}

impl ProfileGraph {
    pub fn target_node(&self) -> &GraphNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn edge(&self, id: &str) -> Option<&RelationEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Structural checks for graphs read from disk.
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::Malformed(m));
        let Some(root) = self.nodes.first() else { return bad("no nodes".into()) };
        if root.id != self.target.id {
            return bad("first node is not the target".into());
        }
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        if ids.len() != self.nodes.len() {
            return bad("duplicate node id".into());
        }
        for e in &self.edges {
            if e.source != self.target.id || !ids.contains(e.target.as_str()) {
                return bad(format!("edge {} references a missing node", e.id));
            }
            if e.types.is_empty() || e.weight == 0 || e.snippets.is_empty() {
                return bad(format!("edge {} is incomplete", e.id));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        export_graph_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let g: ProfileGraph = serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

fn intersects<T: Ord>(a: &BTreeSet<T>, b: &Option<BTreeSet<T>>) -> bool {
    b.as_ref().is_none_or(|b| a.iter().any(|x| b.contains(x)))
}

/// Keep edges matching every present criterion, then the `top_k` heaviest
/// remaining leaves. The target node always stays.
pub fn apply_filter(graph: &ProfileGraph, filter: &GraphFilter) -> ProfileGraph {
    let nodes: BTreeMap<&str, &GraphNode> = graph.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let passing: Vec<&RelationEdge> = graph
        .edges
        .iter()
        .filter(|e| {
            let leaf = nodes[e.target.as_str()];
            intersects(&e.types, &filter.relation_types)
                && filter.entity_types.as_ref().is_none_or(|t| t.contains(&leaf.entity_type))
                && intersects(&e.sources, &filter.sources)
                && filter.year_range.is_none_or(|(lo, hi)| e.years.range(lo..=hi).next().is_some())
        })
        .collect();
    let mut leaves: Vec<&GraphNode> = passing.iter().map(|e| nodes[e.target.as_str()]).collect();
    leaves.sort_by(|a, b| rank_order(a, b));
    leaves.dedup_by(|a, b| a.id == b.id);
    if let Some(k) = filter.top_k {
        leaves.truncate(k);
    }
    let kept: BTreeSet<&str> = leaves.iter().map(|n| n.id.as_str()).collect();
    ProfileGraph {
        format_version: graph.format_version,
        target: graph.target.clone(),
        nodes: graph
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, n)| *i == 0 || kept.contains(n.id.as_str()))
            .map(|(_, n)| n.clone())
            .collect(),
        edges: passing.into_iter().filter(|e| kept.contains(e.target.as_str())).cloned().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntity {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub weight: usize,
}

/// Filtered non-target nodes by descending weight, ties by name.
pub fn ranked_entities(graph: &ProfileGraph, filter: &GraphFilter) -> Vec<RankedEntity> {
    let filtered = apply_filter(graph, filter);
    let mut leaves: Vec<&GraphNode> = filtered.nodes.iter().skip(1).collect();
    leaves.sort_by(|a, b| rank_order(a, b));
    leaves
        .into_iter()
        .map(|n| RankedEntity { id: n.id.clone(), name: n.name.clone(), entity_type: n.entity_type, weight: n.weight })
        .collect()
}

/// Canonical form: sorted keys, two-space indentation, trailing newline.
pub fn export_graph_json(graph: &ProfileGraph) -> String {
    canonical_json(graph)
}

/// Any serializable value with object keys sorted.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes");
    let mut out = serde_json::to_string_pretty(&v).expect("value serializes");
    out.push('\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathNode {
    pub id: String,
    pub name: String,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub edge: String,
    pub node: PathNode,
}

/// Several profile graphs merged by node identity, as an undirected graph.
#[derive(Debug, Clone, Default)]
pub struct MergedGraph {
    nodes: BTreeMap<String, PathNode>,
    adjacency: BTreeMap<String, BTreeMap<String, String>>,
}

impl MergedGraph {
    pub fn new<'a>(graphs: impl IntoIterator<Item = &'a ProfileGraph>) -> Self {
        let mut merged = Self::default();
        for g in graphs {
            for n in &g.nodes {
                merged.nodes.entry(n.id.clone()).or_insert_with(|| PathNode {
                    id: n.id.clone(),
                    name: n.name.clone(),
                    entity_type: n.entity_type,
                });
            }
            for e in &g.edges {
                merged.adjacency.entry(e.source.clone()).or_default().entry(e.target.clone()).or_insert(e.id.clone());
                merged.adjacency.entry(e.target.clone()).or_default().entry(e.source.clone()).or_insert(e.id.clone());
            }
        }
        merged
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A node id, or a case-insensitive name. A name shared by several types
    /// resolves to the first type in person, organization, location,
    /// unclassified order.
    pub fn resolve(&self, query: &str) -> Result<&PathNode, GraphError> {
        if let Some(n) = self.nodes.get(query) {
            return Ok(n);
        }
        let lower = query.to_lowercase();
        self.nodes
            .values()
            .filter(|n| n.name.to_lowercase() == lower)
            .min_by_key(|n| n.entity_type)
            .ok_or_else(|| GraphError::UnknownEntity(query.to_string()))
    }

    fn sort_key(&self, id: &str) -> (String, EntityType, String) {
        let n = &self.nodes[id];
        (n.name.to_lowercase(), n.entity_type, n.id.clone())
    }

    fn neighbours(&self, id: &str) -> impl Iterator<Item = (&String, &String)> {
        self.adjacency.get(id).into_iter().flatten()
    }

    /// Shortest path by hop count; among shortest paths the one whose node
    /// sequence is lexicographically smallest by (name, type). `Some(vec![])`
    /// when `from` and `to` coincide, `None` when unreachable within `max_hops`.
    pub fn find_path(&self, from: &str, to: &str, max_hops: usize) -> Result<Option<Vec<PathStep>>, GraphError> {
        let from = self.resolve(from)?.id.clone();
        let to = self.resolve(to)?.id.clone();
        // Distances to `to`, then a greedy walk choosing the smallest next node.
        let mut dist: BTreeMap<&str, usize> = BTreeMap::from([(to.as_str(), 0)]);
        let mut queue = VecDeque::from([to.as_str()]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            for (v, _) in self.neighbours(u) {
                if !dist.contains_key(v.as_str()) {
                    dist.insert(v.as_str(), d + 1);
                    queue.push_back(v.as_str());
                }
            }
        }
        let Some(&total) = dist.get(from.as_str()) else { return Ok(None) };
        if total > max_hops {
            return Ok(None);
        }
        let mut path = Vec::with_capacity(total);
        let mut current = from.as_str();
        for remaining in (0..total).rev() {
            let (next, edge) = self
                .neighbours(current)
                .filter(|(v, _)| dist.get(v.as_str()) == Some(&remaining))
                .min_by_key(|(v, _)| self.sort_key(v))
                .expect("a neighbour one hop closer exists");
            path.push(PathStep { edge: edge.clone(), node: self.nodes[next].clone() });
            current = next;
        }
        Ok(Some(path))
    }
}
