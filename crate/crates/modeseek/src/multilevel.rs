//! Multi-resolution clustering results shared by every algorithm module.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which algorithm produced a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Algorithm {
    #[serde(rename = "ms")]
    ModeSeeking,
    #[serde(rename = "fms")]
    FastModeSeeking { c: usize },
    #[serde(rename = "kmeans")]
    KMeans,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::ModeSeeking => write!(f, "ms"),
            Algorithm::FastModeSeeking { c } => write!(f, "fms-{c}"),
            Algorithm::KMeans => write!(f, "kmeans"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub algorithm: Algorithm,
    /// Seed of the random source, `None` for the deterministic exact pass.
    pub seed: Option<u64>,
}

/// One clustering resolution: a complete partition of the dataset produced by
/// a single neighborhood size (or kMeans cluster count).
///
/// `prototypes[c]` is the representative object of cluster `c`: the modal
/// object for mode seeking, the medoid for kMeans. Cluster indices are
/// assigned by ascending prototype id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusteringLevel {
    /// Resolution parameter that produced this level.
    pub k: usize,
    /// Cluster index per object, each in `0..num_clusters()`.
    pub assignment: Vec<u32>,
    /// Representative object per cluster.
    pub prototypes: Vec<u32>,
}

impl ClusteringLevel {
    pub fn num_objects(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.prototypes.len()
    }

    /// Object ids grouped by cluster.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut groups = vec![Vec::new(); self.num_clusters()];
        for (i, &c) in self.assignment.iter().enumerate() {
            groups[c as usize].push(i as u32);
        }
        groups
    }

    /// Per-cluster member counts.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_clusters()];
        for &c in &self.assignment {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Checks the structural invariants: indices in range, no empty cluster,
    /// every prototype a member of its own cluster.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_objects();
        let nc = self.num_clusters();
        if nc == 0 || n == 0 {
            return Err(Error::InternalInvariant("empty clustering level".into()));
        }
        let mut seen = vec![false; nc];
        for (i, &c) in self.assignment.iter().enumerate() {
            if c as usize >= nc {
                return Err(Error::InternalInvariant(format!(
                    "object {i} assigned to cluster {c}, only {nc} clusters"
                )));
            }
            seen[c as usize] = true;
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(Error::InternalInvariant(format!("cluster {empty} is empty")));
        }
        for (c, &p) in self.prototypes.iter().enumerate() {
            if p as usize >= n {
                return Err(Error::InternalInvariant(format!(
                    "prototype {p} of cluster {c} out of range"
                )));
            }
            if self.assignment[p as usize] as usize != c {
                return Err(Error::InternalInvariant(format!(
                    "prototype {p} does not belong to its cluster {c}"
                )));
            }
        }
        Ok(())
    }
}

/// A set of clustering levels over one dataset, ordered from low resolution
/// (fewest clusters) to high resolution; ties broken by larger k first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiLevelClustering {
    pub levels: Vec<ClusteringLevel>,
    pub provenance: Provenance,
}

impl MultiLevelClustering {
    pub fn new(mut levels: Vec<ClusteringLevel>, provenance: Provenance) -> Self {
        levels.sort_by(|a, b| {
            a.num_clusters()
                .cmp(&b.num_clusters())
                .then(b.k.cmp(&a.k))
        });
        Self { levels, provenance }
    }

    pub fn num_objects(&self) -> usize {
        self.levels.first().map_or(0, |l| l.num_objects())
    }

    /// Level whose cluster count is closest to `budget` (ties go to the
    /// cheaper, lower-resolution level).
    pub fn level_closest_to_budget(&self, budget: usize) -> usize {
        let mut best = 0;
        let mut best_gap = usize::MAX;
        for (i, level) in self.levels.iter().enumerate() {
            let gap = level.num_clusters().abs_diff(budget);
            if gap < best_gap {
                best_gap = gap;
                best = i;
            }
        }
        best
    }

    /// Level index with the given resolution parameter, if present.
    pub fn level_with_k(&self, k: usize) -> Option<usize> {
        self.levels.iter().position(|l| l.k == k)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_objects();
        for level in &self.levels {
            level.validate()?;
            if level.num_objects() != n {
                return Err(Error::InternalInvariant(
                    "levels disagree on object count".into(),
                ));
            }
        }
        if !self
            .levels
            .windows(2)
            .all(|w| w[0].num_clusters() <= w[1].num_clusters())
        {
            return Err(Error::InternalInvariant(
                "levels not ordered by resolution".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(k: usize, assignment: Vec<u32>, prototypes: Vec<u32>) -> ClusteringLevel {
        ClusteringLevel {
            k,
            assignment,
            prototypes,
        }
    }

    #[test]
    fn orders_low_to_high_resolution() {
        let coarse = level(8, vec![0, 0, 0, 0], vec![0]);
        let fine = level(2, vec![0, 1, 0, 1], vec![0, 1]);
        let ml = MultiLevelClustering::new(
            vec![fine.clone(), coarse.clone()],
            Provenance {
                algorithm: Algorithm::ModeSeeking,
                seed: None,
            },
        );
        assert_eq!(ml.levels[0], coarse);
        assert_eq!(ml.levels[1], fine);
        ml.validate().unwrap();
    }

    #[test]
    fn equal_counts_tie_breaks_by_larger_k_first() {
        let a = level(3, vec![0, 1], vec![0, 1]);
        let b = level(5, vec![0, 1], vec![0, 1]);
        let ml = MultiLevelClustering::new(
            vec![a, b],
            Provenance {
                algorithm: Algorithm::ModeSeeking,
                seed: None,
            },
        );
        assert_eq!(ml.levels[0].k, 5);
        assert_eq!(ml.levels[1].k, 3);
    }

    #[test]
    fn validate_catches_broken_levels() {
        let bad_proto = level(2, vec![0, 0], vec![1]); // prototype in range but ok
        assert!(bad_proto.validate().is_ok());
        let foreign = level(2, vec![0, 1], vec![1, 0]); // prototypes swapped
        assert!(foreign.validate().is_err());
        let empty = ClusteringLevel {
            k: 2,
            assignment: vec![0, 0],
            prototypes: vec![0, 1],
        };
        assert!(empty.validate().is_err());
    }

    #[test]
    fn budget_selection_prefers_closest() {
        let mk = |nc: usize, k: usize| {
            let assignment = (0..nc as u32).collect::<Vec<_>>();
            let prototypes = (0..nc as u32).collect::<Vec<_>>();
            level(k, assignment, prototypes)
        };
        let ml = MultiLevelClustering::new(
            vec![mk(2, 50), mk(10, 20), mk(40, 5)],
            Provenance {
                algorithm: Algorithm::ModeSeeking,
                seed: None,
            },
        );
        assert_eq!(ml.level_closest_to_budget(9), 1);
        assert_eq!(ml.level_closest_to_budget(1000), 2);
        assert_eq!(ml.level_closest_to_budget(1), 0);
    }
}
