use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::DesignSpaceError;
use crate::corpus::TagDimension;

/// A named group of concepts within one dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptCluster {
    pub label: String,
    pub dimension: TagDimension,
    pub members: Vec<String>,
}

/// Manual corrections to machine clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ClusterEdit {
    /// Fold `from` into `into`; optionally relabel the result.
    Merge {
        dimension: TagDimension,
        into: String,
        from: String,
        #[serde(default)]
        label: Option<String>,
    },
    /// Move `members` out of `cluster` into a new cluster `new_label`.
    Split {
        dimension: TagDimension,
        cluster: String,
        members: Vec<String>,
        new_label: String,
    },
    /// Move one concept to another existing cluster.
    Move {
        dimension: TagDimension,
        concept: String,
        to: String,
    },
    Rename {
        dimension: TagDimension,
        from: String,
        to: String,
    },
}

/// Clusters for all clustered dimensions, with the log of edits applied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<ConceptCluster>,
    #[serde(default)]
    pub edit_log: Vec<ClusterEdit>,
}

impl ClusterSet {
    /// Groups `concepts` by k-means assignment, labeling clusters
    /// `cluster-<i>` in order of first member.
    pub fn from_assignments(
        dimension: TagDimension,
        concepts: &[String],
        assignments: &[usize],
    ) -> ClusterSet {
        let mut order: Vec<usize> = Vec::new();
        let mut groups: HashMap<usize, Vec<String>> = HashMap::new();
        for (c, &a) in concepts.iter().zip(assignments) {
            if !groups.contains_key(&a) {
                order.push(a);
            }
            groups.entry(a).or_default().push(c.clone());
        }
        let clusters = order
            .into_iter()
            .enumerate()
            .map(|(i, a)| ConceptCluster {
                label: format!("cluster-{i}"),
                dimension,
                members: groups.remove(&a).unwrap_or_default(),
            })
            .collect();
        ClusterSet { clusters, edit_log: Vec::new() }
    }

    pub fn extend(&mut self, other: ClusterSet) {
        self.clusters.extend(other.clusters);
        self.edit_log.extend(other.edit_log);
    }

    pub fn in_dimension(&self, dimension: TagDimension) -> impl Iterator<Item = &ConceptCluster> {
        self.clusters.iter().filter(move |c| c.dimension == dimension)
    }

    /// Label of the cluster holding `concept`, if any.
    pub fn cluster_of(&self, dimension: TagDimension, concept: &str) -> Option<&str> {
        self.in_dimension(dimension)
            .find(|c| c.members.iter().any(|m| m == concept))
            .map(|c| c.label.as_str())
    }

    /// Non-empty members, unique labels per dimension, and each concept in at
    /// most one cluster per dimension.
    pub fn check_invariants(&self) -> Result<(), DesignSpaceError> {
        let mut labels = BTreeSet::new();
        let mut owner: HashMap<(TagDimension, &str), &str> = HashMap::new();
        for c in &self.clusters {
            if c.members.is_empty() {
                return Err(DesignSpaceError::Cluster(format!("cluster `{}` is empty", c.label)));
            }
            if !labels.insert((c.dimension, c.label.as_str())) {
                return Err(DesignSpaceError::Cluster(format!(
                    "duplicate label `{}` in `{}`",
                    c.label, c.dimension
                )));
            }
            for m in &c.members {
                if let Some(prev) = owner.insert((c.dimension, m.as_str()), &c.label) {
                    return Err(DesignSpaceError::Cluster(format!(
                        "concept `{m}` is in both `{prev}` and `{}`",
                        c.label
                    )));
                }
            }
        }
        Ok(())
    }

    fn index(&self, dimension: TagDimension, label: &str) -> Result<usize, DesignSpaceError> {
        self.clusters
            .iter()
            .position(|c| c.dimension == dimension && c.label == label)
            .ok_or_else(|| DesignSpaceError::Cluster(format!("no cluster `{label}` in `{dimension}`")))
    }

    fn label_taken(&self, dimension: TagDimension, label: &str, except: &[usize]) -> bool {
        self.clusters
            .iter()
            .enumerate()
            .any(|(i, c)| !except.contains(&i) && c.dimension == dimension && c.label == label)
    }

    fn apply(&mut self, edit: &ClusterEdit) -> Result<(), DesignSpaceError> {
        match edit {
            ClusterEdit::Merge { dimension, into, from, label } => {
                let a = self.index(*dimension, into)?;
                let b = self.index(*dimension, from)?;
                if a == b {
                    return Err(DesignSpaceError::Cluster("cannot merge a cluster with itself".into()));
                }
                if let Some(l) = label {
                    if self.label_taken(*dimension, l, &[a, b]) {
                        return Err(DesignSpaceError::Cluster(format!("label `{l}` already exists")));
                    }
                }
                let moved = std::mem::take(&mut self.clusters[b].members);
                self.clusters[a].members.extend(moved);
                if let Some(l) = label {
                    self.clusters[a].label = l.clone();
                }
                self.clusters.remove(b);
            }
            ClusterEdit::Split { dimension, cluster, members, new_label } => {
                let a = self.index(*dimension, cluster)?;
                if self.label_taken(*dimension, new_label, &[]) {
                    return Err(DesignSpaceError::Cluster(format!("label `{new_label}` already exists")));
                }
                let wanted: BTreeSet<&str> = members.iter().map(String::as_str).collect();
                if wanted.is_empty() {
                    return Err(DesignSpaceError::Cluster("split needs at least one member".into()));
                }
                for w in &wanted {
                    if !self.clusters[a].members.iter().any(|m| m == w) {
                        return Err(DesignSpaceError::Cluster(format!("`{w}` is not in `{cluster}`")));
                    }
                }
                let (out, keep): (Vec<String>, Vec<String>) = self.clusters[a]
                    .members
                    .drain(..)
                    .partition(|m| wanted.contains(m.as_str()));
                if keep.is_empty() {
                    self.clusters[a].members = out;
                    return Err(DesignSpaceError::Cluster("split would leave the cluster empty".into()));
                }
                self.clusters[a].members = keep;
                self.clusters.push(ConceptCluster {
                    label: new_label.clone(),
                    dimension: *dimension,
                    members: out,
                });
            }
            ClusterEdit::Move { dimension, concept, to } => {
                let target = self.index(*dimension, to)?;
                let source = self
                    .clusters
                    .iter()
                    .position(|c| c.dimension == *dimension && c.members.iter().any(|m| m == concept))
                    .ok_or_else(|| DesignSpaceError::Cluster(format!("unknown concept `{concept}`")))?;
                if source == target {
                    return Ok(());
                }
                self.clusters[source].members.retain(|m| m != concept);
                self.clusters[target].members.push(concept.clone());
                if self.clusters[source].members.is_empty() {
                    self.clusters.remove(source);
                }
            }
            ClusterEdit::Rename { dimension, from, to } => {
                let a = self.index(*dimension, from)?;
                if self.label_taken(*dimension, to, &[a]) {
                    return Err(DesignSpaceError::Cluster(format!("label `{to}` already exists")));
                }
                self.clusters[a].label = to.clone();
            }
        }
        Ok(())
    }
}

/// Applies edits in order. Either all edits apply or the input is returned
/// unchanged with the first error.
pub fn adjust_clusters(clusters: &ClusterSet, edits: &[ClusterEdit]) -> Result<ClusterSet, DesignSpaceError> {
    let mut next = clusters.clone();
    for e in edits {
        next.apply(e)?;
        next.edit_log.push(e.clone());
    }
    next.check_invariants()?;
    Ok(next)
}
