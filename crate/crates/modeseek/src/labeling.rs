//! Active-learning classification on top of multi-level clusterings.
//!
//! The cheap route to a labeled dataset: ask an oracle (ground truth or a
//! human at a prompt) for the class of each cluster prototype, then give
//! every object its cluster's prototype label. Confidence propagation
//! refines this by walking from a chosen start level toward higher
//! resolution, replacing every object's class-confidence row with its
//! cluster average at each level. Nesting rewrites the levels so that every
//! fine cluster sits inside exactly one coarse cluster. Rejection trades
//! coverage for accuracy by dropping low-confidence objects.

use crate::dataset::{Dataset, LabelAlphabet};
use crate::error::{Error, Result};
use crate::multilevel::{ClusteringLevel, MultiLevelClustering};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::{BufRead, Write};

/// Answers "what class is object X?" once per object, caching replies.
///
/// Ground-truth oracles read the dataset labels; interactive oracles speak a
/// line protocol: the prompt `label object <id> ?` goes to the output
/// stream, a one-token reply comes back on the input stream, and the token
/// `?` marks the cluster as unlabeled.
pub struct LabelOracle {
    source: OracleSource,
    alphabet: LabelAlphabet,
    answers: HashMap<usize, Option<u32>>,
    queries_used: usize,
}

enum OracleSource {
    GroundTruth(Vec<u32>),
    Interactive {
        input: Box<dyn BufRead>,
        output: Box<dyn Write>,
        /// Optional preview of the object shown before the prompt.
        render: Option<Box<dyn Fn(usize) -> Option<String>>>,
    },
}

impl LabelOracle {
    /// Oracle backed by the dataset's own labels.
    pub fn ground_truth(dataset: &Dataset) -> Result<Self> {
        let labels = dataset.labels().ok_or(Error::MissingLabels)?;
        Ok(Self {
            source: OracleSource::GroundTruth(labels.values.clone()),
            alphabet: labels.alphabet.clone(),
            answers: HashMap::new(),
            queries_used: 0,
        })
    }

    /// Oracle that prompts on `output` and reads one-token answers from
    /// `input`. Seeding the alphabet with the dataset's label names keeps
    /// interactive answers comparable with ground truth.
    pub fn interactive(
        input: impl BufRead + 'static,
        output: impl Write + 'static,
        alphabet: LabelAlphabet,
    ) -> Self {
        Self {
            source: OracleSource::Interactive {
                input: Box::new(input),
                output: Box::new(output),
                render: None,
            },
            alphabet,
            answers: HashMap::new(),
            queries_used: 0,
        }
    }

    /// Attaches an object preview shown before each interactive prompt.
    pub fn with_renderer(mut self, render: impl Fn(usize) -> Option<String> + 'static) -> Self {
        if let OracleSource::Interactive {
            render: slot, ..
        } = &mut self.source
        {
            *slot = Some(Box::new(render));
        }
        self
    }

    /// Class of the given object, `None` when the oracle declines. Repeat
    /// queries hit the cache and do not count.
    pub fn query(&mut self, object: usize) -> Result<Option<u32>> {
        if let Some(&cached) = self.answers.get(&object) {
            return Ok(cached);
        }
        let answer = match &mut self.source {
            OracleSource::GroundTruth(labels) => labels.get(object).copied().map(Some).ok_or(
                Error::IdOutOfRange {
                    id: object,
                    n: labels.len(),
                },
            )?,
            OracleSource::Interactive {
                input,
                output,
                render,
            } => {
                if let Some(render) = render {
                    if let Some(preview) = render(object) {
                        writeln!(output, "{preview}")?;
                    }
                }
                writeln!(output, "label object {object} ?")?;
                output.flush()?;
                let mut line = String::new();
                if input.read_line(&mut line)? == 0 {
                    return Err(Error::OracleClosed);
                }
                match line.split_whitespace().next() {
                    None | Some("?") => None,
                    Some(token) => Some(self.alphabet.intern(token)),
                }
            }
        };
        self.answers.insert(object, answer);
        self.queries_used += 1;
        Ok(answer)
    }

    pub fn queries_used(&self) -> usize {
        self.queries_used
    }

    /// Classes seen so far (fixed up front for ground truth).
    pub fn num_classes(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &LabelAlphabet {
        &self.alphabet
    }
}

/// Result of labeling one clustering level through its prototypes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveLabels {
    /// Per-object class, `None` for members of unlabeled clusters.
    pub object_labels: Vec<Option<u32>>,
    /// Per-cluster class as answered by the oracle.
    pub cluster_labels: Vec<Option<u32>>,
    /// Oracle queries spent here (= number of clusters on a fresh oracle).
    pub queries: usize,
    /// Clusters the oracle declined to label.
    pub unlabeled_clusters: usize,
}

/// Labels every cluster prototype through the oracle (one query each) and
/// assigns each object its cluster's label.
pub fn active_label(level: &ClusteringLevel, oracle: &mut LabelOracle) -> Result<ActiveLabels> {
    let before = oracle.queries_used();
    let mut cluster_labels = Vec::with_capacity(level.num_clusters());
    for &proto in &level.prototypes {
        cluster_labels.push(oracle.query(proto as usize)?);
    }
    let object_labels = level
        .assignment
        .iter()
        .map(|&c| cluster_labels[c as usize])
        .collect();
    let unlabeled_clusters = cluster_labels.iter().filter(|l| l.is_none()).count();
    Ok(ActiveLabels {
        object_labels,
        cluster_labels,
        queries: oracle.queries_used() - before,
        unlabeled_clusters,
    })
}

/// Budget-capped variant: once `cap` oracle queries have been spent, the
/// remaining clusters stay unlabeled instead of prompting further.
pub fn active_label_capped(
    level: &ClusteringLevel,
    oracle: &mut LabelOracle,
    cap: Option<usize>,
) -> Result<ActiveLabels> {
    let Some(cap) = cap else {
        return active_label(level, oracle);
    };
    let before = oracle.queries_used();
    let mut cluster_labels = Vec::with_capacity(level.num_clusters());
    for &proto in &level.prototypes {
        if oracle.queries_used() - before >= cap {
            cluster_labels.push(None);
        } else {
            cluster_labels.push(oracle.query(proto as usize)?);
        }
    }
    let object_labels = level
        .assignment
        .iter()
        .map(|&c| cluster_labels[c as usize])
        .collect();
    let unlabeled_clusters = cluster_labels.iter().filter(|l| l.is_none()).count();
    Ok(ActiveLabels {
        object_labels,
        cluster_labels,
        queries: oracle.queries_used() - before,
        unlabeled_clusters,
    })
}

/// Row-stochastic n x r matrix of per-object class confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    values: Vec<f64>,
    n: usize,
    r: usize,
    /// Index of the clustering level that last shaped this matrix.
    pub level_tag: Option<usize>,
}

impl ConfidenceMatrix {
    /// One-hot rows from an active-labeling result: confidence 1 for the
    /// cluster's class. Members of unlabeled clusters get a uniform row,
    /// which keeps rows stochastic while carrying no class information.
    pub fn one_hot(labels: &ActiveLabels, num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::param("num_classes", "need at least one class"));
        }
        let n = labels.object_labels.len();
        let r = num_classes;
        let mut values = vec![0.0; n * r];
        for (i, label) in labels.object_labels.iter().enumerate() {
            match label {
                Some(class) => values[i * r + *class as usize] = 1.0,
                None => values[i * r..(i + 1) * r].fill(1.0 / r as f64),
            }
        }
        Ok(Self {
            values,
            n,
            r,
            level_tag: None,
        })
    }

    pub fn num_objects(&self) -> usize {
        self.n
    }

    pub fn num_classes(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.r..(i + 1) * self.r]
    }

    /// Highest confidence in the row.
    pub fn max_confidence(&self, i: usize) -> f64 {
        self.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Per-object argmax class; ties go to the lowest class index.
    pub fn predictions(&self) -> Vec<u32> {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0usize;
                for (c, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = c;
                    }
                }
                best as u32
            })
            .collect()
    }

    /// Largest deviation of any row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Replaces every object's confidence row with the mean row of its cluster.
///
/// This is one multiplication by the cluster-averaging matrix of `level`,
/// computed cluster by cluster so the n x n matrix never exists.
pub fn cluster_average(level: &ClusteringLevel, conf: &ConfidenceMatrix) -> ConfidenceMatrix {
    assert_eq!(level.num_objects(), conf.n, "level and matrix disagree on n");
    let r = conf.r;
    let groups = level.members();
    let mut cluster_rows = vec![0.0f64; groups.len() * r];

    cluster_rows
        .par_chunks_mut(r)
        .zip(groups.par_iter())
        .for_each(|(mean, members)| {
            for &obj in members {
                for (m, v) in mean.iter_mut().zip(conf.row(obj as usize)) {
                    *m += v;
                }
            }
            let inv = 1.0 / members.len() as f64;
            for m in mean.iter_mut() {
                *m *= inv;
            }
        });

    let mut values = vec![0.0f64; conf.n * r];
    values
        .par_chunks_mut(r)
        .zip(level.assignment.par_iter())
        .for_each(|(row, &c)| {
            row.copy_from_slice(&cluster_rows[c as usize * r..(c as usize + 1) * r]);
        });

    ConfidenceMatrix {
        values,
        n: conf.n,
        r,
        level_tag: conf.level_tag,
    }
}

/// Outcome of a propagation run.
#[derive(Debug)]
pub struct Propagation {
    /// Confidences at the final (highest-resolution) level.
    pub confidences: ConfidenceMatrix,
    /// The labeling that seeded the chain.
    pub initial: ActiveLabels,
    pub start_level: usize,
}

/// Seeds one-hot confidences by active labeling at `start_level`, then
/// averages them through every higher-resolution level in turn. The
/// returned matrix belongs to the final level; predictions are its row
/// argmaxes.
pub fn propagate_confidences(
    clustering: &MultiLevelClustering,
    start_level: usize,
    oracle: &mut LabelOracle,
) -> Result<Propagation> {
    if start_level >= clustering.levels.len() {
        return Err(Error::param(
            "start_level",
            format!(
                "level {start_level} out of range ({} levels)",
                clustering.levels.len()
            ),
        ));
    }
    let initial = active_label(&clustering.levels[start_level], oracle)?;
    let r = oracle.num_classes();
    let mut conf = ConfidenceMatrix::one_hot(&initial, r)?;
    conf.level_tag = Some(start_level);
    for (li, level) in clustering.levels.iter().enumerate().skip(start_level + 1) {
        conf = cluster_average(level, &conf);
        conf.level_tag = Some(li);
    }
    Ok(Propagation {
        confidences: conf,
        initial,
        start_level,
    })
}

/// Rewrites the levels so that every fine cluster lies inside exactly one
/// coarse cluster.
///
/// Top-down from the highest-resolution level: all objects of fine clusters
/// whose prototypes share a coarse cluster merge into one rewritten coarse
/// cluster. The rewritten cluster keeps the original prototype when it is
/// still a member, otherwise it takes the prototype of its largest
/// constituting fine cluster (ties to the lower fine-cluster index).
pub fn nest_levels(clustering: &MultiLevelClustering) -> MultiLevelClustering {
    let mut levels = clustering.levels.clone();
    if levels.len() < 2 {
        return clustering.clone();
    }

    for li in (0..levels.len() - 1).rev() {
        let (coarse_part, fine_part) = levels.split_at_mut(li + 1);
        let coarse = &coarse_part[li];
        let fine = &fine_part[0];

        let fine_sizes = fine.cluster_sizes();
        // Coarse target of each fine cluster, via its prototype.
        let targets: Vec<u32> = fine
            .prototypes
            .iter()
            .map(|&p| coarse.assignment[p as usize])
            .collect();

        // Surviving coarse clusters in ascending original index order.
        let mut new_index = vec![u32::MAX; coarse.num_clusters()];
        let mut survivors = Vec::new();
        for &t in &targets {
            if new_index[t as usize] == u32::MAX {
                new_index[t as usize] = 0; // mark
                survivors.push(t);
            }
        }
        survivors.sort_unstable();
        for (new_c, &old_c) in survivors.iter().enumerate() {
            new_index[old_c as usize] = new_c as u32;
        }

        let assignment: Vec<u32> = fine
            .assignment
            .iter()
            .map(|&fc| new_index[targets[fc as usize] as usize])
            .collect();

        let mut prototypes = Vec::with_capacity(survivors.len());
        for (new_c, &old_c) in survivors.iter().enumerate() {
            let original = coarse.prototypes[old_c as usize];
            if assignment[original as usize] == new_c as u32 {
                prototypes.push(original);
            } else {
                // Largest constituting fine cluster wins, ties to the lower
                // fine-cluster index.
                let mut best_fine = usize::MAX;
                let mut best_size = 0usize;
                for (fc, &t) in targets.iter().enumerate() {
                    if t == old_c && fine_sizes[fc] > best_size {
                        best_size = fine_sizes[fc];
                        best_fine = fc;
                    }
                }
                prototypes.push(fine.prototypes[best_fine]);
            }
        }

        let k = coarse.k;
        coarse_part[li] = ClusteringLevel {
            k,
            assignment,
            prototypes,
        };
    }

    MultiLevelClustering::new(levels, clustering.provenance.clone())
}

/// One point of a reject curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectPoint {
    pub threshold: f64,
    /// Fraction of evaluated objects rejected at this threshold.
    pub reject_rate: f64,
    /// Classification error among the accepted objects; `None` when
    /// everything was rejected.
    pub error_on_accepted: Option<f64>,
}

/// Sweeps confidence thresholds: objects whose top confidence falls below a
/// threshold are rejected, and the error is recomputed over the survivors.
/// Only objects with both a prediction and a truth label participate.
pub fn reject_curve(
    confidences: &ConfidenceMatrix,
    predictions: &[Option<u32>],
    truth: &[u32],
    thresholds: &[f64],
) -> Result<Vec<RejectPoint>> {
    if predictions.len() != truth.len() || predictions.len() != confidences.num_objects() {
        return Err(Error::param(
            "predictions",
            "confidences, predictions, and truth must have equal length",
        ));
    }
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::param("thresholds", "must lie in [0, 1]"));
    }

    let evaluated: Vec<(f64, bool)> = predictions
        .iter()
        .enumerate()
        .filter_map(|(i, pred)| {
            pred.map(|p| (confidences.max_confidence(i), p != truth[i]))
        })
        .collect();
    if evaluated.is_empty() {
        return Err(Error::param("predictions", "no labeled predictions"));
    }

    let total = evaluated.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&tau| {
            let mut accepted = 0usize;
            let mut wrong = 0usize;
            for &(conf, is_wrong) in &evaluated {
                if conf >= tau {
                    accepted += 1;
                    if is_wrong {
                        wrong += 1;
                    }
                }
            }
            RejectPoint {
                threshold: tau,
                reject_rate: 1.0 - accepted as f64 / total,
                error_on_accepted: (accepted > 0).then(|| wrong as f64 / accepted as f64),
            }
        })
        .collect())
}
