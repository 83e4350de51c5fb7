//! Datasets: dense feature matrices with optional class labels.
//!
//! Objects are addressed by contiguous ids `0..n-1`; every algorithm in this
//! crate refers to objects by id, never by feature content. Class labels are
//! stored as dense integers `0..r-1` with the original label names retained
//! for reports.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::HashMap;

/// Euclidean distance between two feature vectors.
///
/// This is the single distance routine used by every algorithm module, so an
/// alternate metric only needs to be swapped in here.
#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    euclidean_sq(a, b).sqrt()
}

/// Squared Euclidean distance; same argmin as [`euclidean`].
#[inline]
pub fn euclidean_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc
}

/// Bidirectional map between label names and dense class ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelAlphabet {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelAlphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I: IntoIterator<Item = S>, S: Into<String>>(names: I) -> Self {
        let mut a = Self::new();
        for name in names {
            a.intern(&name.into());
        }
        a
    }

    /// Returns the dense id for `name`, adding it if unseen.
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Per-object class labels plus the name table they were interned with.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLabels {
    pub values: Vec<u32>,
    pub alphabet: LabelAlphabet,
}

/// Dense `n x d` feature matrix with optional per-object class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Option<ClassLabels>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major feature buffer.
    pub fn from_flat(n: usize, d: usize, features: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one object and one feature, got n={n}, d={d}"
            )));
        }
        if features.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "feature buffer holds {} values, expected n*d = {}",
                features.len(),
                n * d
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature value at object {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            features,
            n,
            d,
            labels: None,
        })
    }

    /// Builds a dataset from one `Vec` per object.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidDataset("no objects".into()));
        }
        let d = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "object {i} has {} features, expected {d}",
                    row.len()
                )));
            }
        }
        let mut features = Vec::with_capacity(n * d);
        for row in &rows {
            features.extend_from_slice(row);
        }
        Self::from_flat(n, d, features)
    }

    /// Attaches dense class labels; every value must index into `alphabet`.
    pub fn with_labels(mut self, values: Vec<u32>, alphabet: LabelAlphabet) -> Result<Self> {
        if values.len() != self.n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} objects",
                values.len(),
                self.n
            )));
        }
        if alphabet.is_empty() {
            return Err(Error::InvalidDataset("empty label alphabet".into()));
        }
        let r = alphabet.len() as u32;
        if let Some(&bad) = values.iter().find(|&&v| v >= r) {
            return Err(Error::InvalidDataset(format!(
                "label id {bad} outside alphabet of {r} classes"
            )));
        }
        self.labels = Some(ClassLabels { values, alphabet });
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn labels(&self) -> Option<&ClassLabels> {
        self.labels.as_ref()
    }

    pub fn label_values(&self) -> Option<&[u32]> {
        self.labels.as_ref().map(|l| l.values.as_slice())
    }

    /// Number of classes, when labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.alphabet.len())
    }

    fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.n {
            return Err(Error::IdOutOfRange { id, n: self.n });
        }
        Ok(())
    }

    /// Euclidean distance between objects `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_id(i)?;
        self.check_id(j)?;
        Ok(euclidean(self.row(i), self.row(j)))
    }

    /// Distances from object `i` to each candidate, in candidate order.
    pub fn distances_to(&self, i: usize, candidates: &[usize]) -> Result<Vec<f64>> {
        self.check_id(i)?;
        let from = self.row(i);
        candidates
            .iter()
            .map(|&j| {
                self.check_id(j)?;
                Ok(euclidean(from, self.row(j)))
            })
            .collect()
    }

    /// New dataset holding the selected objects (labels carried along).
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidDataset("empty subset".into()));
        }
        let mut features = Vec::with_capacity(ids.len() * self.d);
        for &id in ids {
            self.check_id(id)?;
            features.extend_from_slice(self.row(id));
        }
        let labels = self.labels.as_ref().map(|l| ClassLabels {
            values: ids.iter().map(|&id| l.values[id]).collect(),
            alphabet: l.alphabet.clone(),
        });
        Ok(Self {
            features,
            n: ids.len(),
            d: self.d,
            labels,
        })
    }

    /// Content checksum used to tie artifacts to the data they came from.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"modeseek-dataset-v1");
        h.update((self.n as u64).to_le_bytes());
        h.update((self.d as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_le_bytes());
        }
        if let Some(l) = &self.labels {
            h.update([1u8]);
            for v in &l.values {
                h.update(v.to_le_bytes());
            }
            for name in l.alphabet.names() {
                h.update(name.as_bytes());
                h.update([0u8]);
            }
        } else {
            h.update([0u8]);
        }
        let digest = h.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
