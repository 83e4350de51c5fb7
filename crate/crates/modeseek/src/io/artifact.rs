//! Versioned clustering artifacts.
//!
//! One JSON file decouples the expensive clustering run from the cheap,
//! repeatable evaluation and labeling passes. The file records provenance
//! (algorithm, parameters, seed, dataset checksum), every level, and
//! optionally a confidence matrix. Loading checks the schema version first
//! and verifies structural invariants before handing anything back.

use crate::error::{Error, Result};
use crate::labeling::ConfidenceMatrix;
use crate::multilevel::{Algorithm, ClusteringLevel, MultiLevelClustering, Provenance};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactProvenance {
    pub algorithm: Algorithm,
    pub seed: Option<u64>,
    /// Checksum of the dataset the clustering was computed from.
    pub dataset_checksum: String,
    /// Extra knobs echoed for reproducibility (schedule parameters, counts,
    /// iteration caps...).
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    pub num_clusters: usize,
    pub assignment: Vec<u32>,
    /// Modal objects for mode seeking, medoids for kMeans.
    pub prototypes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    /// Level index the matrix belongs to.
    pub level_tag: Option<usize>,
    /// Class names, column order.
    pub classes: Vec<String>,
    pub n: usize,
    pub r: usize,
    /// Row-major n x r values.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringArtifact {
    pub schema_version: u32,
    pub provenance: ArtifactProvenance,
    pub levels: Vec<LevelRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidences: Option<ConfidenceRecord>,
}

impl ClusteringArtifact {
    pub fn from_clustering(
        clustering: &MultiLevelClustering,
        dataset_checksum: String,
        params: BTreeMap<String, String>,
    ) -> Self {
        Self {
            schema_version: ARTIFACT_SCHEMA_VERSION,
            provenance: ArtifactProvenance {
                algorithm: clustering.provenance.algorithm,
                seed: clustering.provenance.seed,
                dataset_checksum,
                params,
            },
            levels: clustering
                .levels
                .iter()
                .map(|l| LevelRecord {
                    k: l.k,
                    num_clusters: l.num_clusters(),
                    assignment: l.assignment.clone(),
                    prototypes: l.prototypes.clone(),
                })
                .collect(),
            confidences: None,
        }
    }

    /// Reconstructs the clustering, re-validating every level.
    pub fn to_clustering(&self) -> Result<MultiLevelClustering> {
        let levels: Vec<ClusteringLevel> = self
            .levels
            .iter()
            .map(|record| {
                if record.num_clusters != record.prototypes.len() {
                    return Err(Error::InternalInvariant(format!(
                        "level k={} declares {} clusters but has {} prototypes",
                        record.k,
                        record.num_clusters,
                        record.prototypes.len()
                    )));
                }
                let level = ClusteringLevel {
                    k: record.k,
                    assignment: record.assignment.clone(),
                    prototypes: record.prototypes.clone(),
                };
                level.validate()?;
                Ok(level)
            })
            .collect::<Result<_>>()?;
        let clustering = MultiLevelClustering::new(
            levels,
            Provenance {
                algorithm: self.provenance.algorithm,
                seed: self.provenance.seed,
            },
        );
        clustering.validate()?;
        Ok(clustering)
    }

    /// Verifies the artifact was produced from the given dataset.
    pub fn check_dataset(&self, checksum: &str) -> Result<()> {
        if self.provenance.dataset_checksum != checksum {
            return Err(Error::ChecksumMismatch {
                expected: self.provenance.dataset_checksum.clone(),
                actual: checksum.to_string(),
            });
        }
        Ok(())
    }

    pub fn attach_confidences(
        &mut self,
        conf: &ConfidenceMatrix,
        classes: Vec<String>,
    ) {
        let n = conf.num_objects();
        let r = conf.num_classes();
        let mut values = Vec::with_capacity(n * r);
        for i in 0..n {
            values.extend_from_slice(conf.row(i));
        }
        self.confidences = Some(ConfidenceRecord {
            level_tag: conf.level_tag,
            classes,
            n,
            r,
            values,
        });
    }
}

/// Writes the artifact as pretty JSON.
pub fn save_artifact(artifact: &ClusteringArtifact, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(artifact)
        .map_err(|e| Error::InternalInvariant(format!("artifact serialization failed: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Reads an artifact, checking the schema version before anything else.
/// Truncated or malformed files fail outright; no partial artifact escapes.
pub fn load_artifact(path: &Path) -> Result<ClusteringArtifact> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        location: format!("line {}", e.line()),
        message: e.to_string(),
    })?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            location: "top level".into(),
            message: "missing schema_version".into(),
        })?;
    if found != ARTIFACT_SCHEMA_VERSION as u64 {
        return Err(Error::SchemaVersion {
            found,
            supported: ARTIFACT_SCHEMA_VERSION as u64,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        location: "document".into(),
        message: e.to_string(),
    })
}
