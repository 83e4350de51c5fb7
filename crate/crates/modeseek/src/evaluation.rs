//! Quality and performance measurement: normalized mutual information
//! against ground truth, classification error, nearest-neighbor baselines,
//! learning curves over clustering levels, and timing-scaling benchmarks.

use crate::dataset::{euclidean, Dataset};
use crate::error::{Error, Result};
use crate::labeling::{active_label, propagate_confidences, nest_levels, LabelOracle};
use crate::multilevel::MultiLevelClustering;
use crate::random::RandomSource;
use rayon::prelude::*;
use std::time::Instant;

/// Cluster-by-class co-occurrence counts over the labeled objects.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    counts: Vec<u64>,
    clusters: usize,
    classes: usize,
    total: u64,
}

impl ContingencyTable {
    pub fn from_assignments(assignment: &[u32], labels: &[u32]) -> Result<Self> {
        if assignment.len() != labels.len() {
            return Err(Error::param(
                "labels",
                "assignment and label vectors must have equal length",
            ));
        }
        if assignment.is_empty() {
            return Err(Error::param("labels", "need at least one labeled object"));
        }
        let clusters = *assignment.iter().max().unwrap() as usize + 1;
        let classes = *labels.iter().max().unwrap() as usize + 1;
        let mut counts = vec![0u64; clusters * classes];
        for (&c, &l) in assignment.iter().zip(labels) {
            counts[c as usize * classes + l as usize] += 1;
        }
        Ok(Self {
            counts,
            clusters,
            classes,
            total: assignment.len() as u64,
        })
    }

    pub fn count(&self, cluster: usize, class: usize) -> u64 {
        self.counts[cluster * self.classes + class]
    }

    pub fn cluster_marginals(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.clusters];
        for c in 0..self.clusters {
            m[c] = self.counts[c * self.classes..(c + 1) * self.classes]
                .iter()
                .sum();
        }
        m
    }

    pub fn class_marginals(&self) -> Vec<u64> {
        let mut m = vec![0u64; self.classes];
        for c in 0..self.clusters {
            for (j, slot) in m.iter_mut().enumerate() {
                *slot += self.counts[c * self.classes + j];
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

fn entropy(marginals: &[u64], total: f64) -> f64 {
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information between a clustering and the class labels, normalized
/// by the smaller of the two entropies so the value lies in [0, 1].
///
/// Conventions: `0 ln 0 = 0`; when both marginals are degenerate (one
/// cluster and one class) the value is 1 by convention, and when exactly one
/// is degenerate the mutual information is 0. Natural logarithms internally;
/// the normalized value is base-independent.
pub fn nmi(assignment: &[u32], labels: &[u32]) -> Result<f64> {
    let table = ContingencyTable::from_assignments(assignment, labels)?;
    let total = table.total() as f64;
    let cluster_marginals = table.cluster_marginals();
    let class_marginals = table.class_marginals();
    let h_clusters = entropy(&cluster_marginals, total);
    let h_classes = entropy(&class_marginals, total);
    let h_min = h_clusters.min(h_classes);
    if h_min == 0.0 {
        return Ok(if h_clusters == 0.0 && h_classes == 0.0 {
            1.0
        } else {
            0.0
        });
    }

    let mut information = 0.0;
    for c in 0..cluster_marginals.len() {
        for j in 0..class_marginals.len() {
            let joint = table.count(c, j);
            if joint == 0 {
                continue;
            }
            let p = joint as f64 / total;
            information += p
                * ((joint as f64 * total)
                    / (cluster_marginals[c] as f64 * class_marginals[j] as f64))
                    .ln();
        }
    }
    Ok(information / h_min)
}

/// Fraction of mismatches among objects that carry a prediction. `None` when
/// nothing was predicted.
pub fn classification_error(predictions: &[Option<u32>], truth: &[u32]) -> Option<f64> {
    assert_eq!(predictions.len(), truth.len());
    let mut included = 0u64;
    let mut wrong = 0u64;
    for (pred, &t) in predictions.iter().zip(truth) {
        if let Some(p) = pred {
            included += 1;
            if *p != t {
                wrong += 1;
            }
        }
    }
    (included > 0).then(|| wrong as f64 / included as f64)
}

/// Nearest-neighbor classification: each query takes the label of its
/// closest training object (ties to the lower id). With `leave_one_out`, a
/// query that is itself a training object skips itself.
pub fn nn1_classify(
    dataset: &Dataset,
    train_ids: &[usize],
    query_ids: &[usize],
    leave_one_out: bool,
) -> Result<Vec<u32>> {
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    if train_ids.is_empty() {
        return Err(Error::param("train_ids", "training set must not be empty"));
    }
    let n = dataset.len();
    for &id in train_ids.iter().chain(query_ids) {
        if id >= n {
            return Err(Error::IdOutOfRange { id, n });
        }
    }

    Ok(query_ids
        .par_iter()
        .map(|&q| {
            let row = dataset.row(q);
            let mut best_id = usize::MAX;
            let mut best_d = f64::INFINITY;
            for &t in train_ids {
                if leave_one_out && t == q {
                    continue;
                }
                let d = euclidean(row, dataset.row(t));
                if d < best_d || (d == best_d && t < best_id) {
                    best_d = d;
                    best_id = t;
                }
            }
            labels.values[best_id]
        })
        .collect())
}

/// One point of any emitted curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

/// Classifier evaluated along the levels of a multi-level clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMethod {
    /// Prototype labeling at the level itself.
    ActiveLabel,
    /// Confidence propagation from the level to the highest resolution.
    Propagated,
    /// Same, over the nested rewrite of the levels.
    NestedPropagated,
    /// 1NN trained on a random subset of the level's size, averaged over
    /// `repetitions` seeds.
    RandomNn1 { repetitions: usize },
}

impl CurveMethod {
    pub fn series_name(&self) -> &'static str {
        match self {
            CurveMethod::ActiveLabel => "al",
            CurveMethod::Propagated => "alc",
            CurveMethod::NestedPropagated => "aln",
            CurveMethod::RandomNn1 { .. } => "random-1nn",
        }
    }
}

/// Classification error as a function of labels spent, one point per level.
///
/// The abscissa is the number of labeled objects: the cluster count of the
/// level (and exactly the oracle query count for the labeling methods), or
/// the training-set size for the random baseline.
pub fn learning_curve(
    clustering: &MultiLevelClustering,
    method: CurveMethod,
    dataset: &Dataset,
    rng: &RandomSource,
) -> Result<Vec<CurvePoint>> {
    let truth = dataset
        .label_values()
        .ok_or(Error::MissingLabels)?
        .to_vec();
    let n = dataset.len();
    let series = method.series_name().to_string();

    let nested;
    let walked: &MultiLevelClustering = match method {
        CurveMethod::NestedPropagated => {
            nested = nest_levels(clustering);
            &nested
        }
        _ => clustering,
    };

    let mut points = Vec::with_capacity(walked.levels.len());
    for (li, level) in walked.levels.iter().enumerate() {
        let (x, error) = match method {
            CurveMethod::ActiveLabel => {
                let mut oracle = LabelOracle::ground_truth(dataset)?;
                let al = active_label(level, &mut oracle)?;
                let err = classification_error(&al.object_labels, &truth)
                    .expect("ground-truth oracle labels every cluster");
                (al.queries as f64, err)
            }
            CurveMethod::Propagated | CurveMethod::NestedPropagated => {
                let mut oracle = LabelOracle::ground_truth(dataset)?;
                let prop = propagate_confidences(walked, li, &mut oracle)?;
                let preds: Vec<Option<u32>> =
                    prop.confidences.predictions().into_iter().map(Some).collect();
                let err = classification_error(&preds, &truth).unwrap();
                (prop.initial.queries as f64, err)
            }
            CurveMethod::RandomNn1 { repetitions } => {
                let budget = level.num_clusters().min(n);
                let queries: Vec<usize> = (0..n).collect();
                let mut total = 0.0;
                for rep in 0..repetitions.max(1) {
                    let mut child = rng.child((li * 1000 + rep) as u64);
                    let train = child.sample_indices(n, budget);
                    let preds: Vec<Option<u32>> = nn1_classify(dataset, &train, &queries, false)?
                        .into_iter()
                        .map(Some)
                        .collect();
                    total += classification_error(&preds, &truth).unwrap();
                }
                (budget as f64, total / repetitions.max(1) as f64)
            }
        };
        points.push(CurvePoint {
            series: series.clone(),
            x,
            y: error,
        });
    }
    Ok(points)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x.ln(), y.max(1e-9).ln()))
        .collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in logs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    num / den
}

/// Wall-clock scaling report for one algorithm.
#[derive(Debug, Clone)]
pub struct TimingReport {
    pub points: Vec<CurvePoint>,
    /// Fitted log-log exponent of seconds against dataset size.
    pub exponent: f64,
}

/// Runs `algorithm` on random subsets of the dataset, one per requested
/// size, and fits the log-log slope of wall time against size. A warm-up
/// run on the smallest size is discarded before measuring; each size is
/// then timed `repetitions` times and the fastest run recorded, which
/// approximates the undisturbed cost under scheduler noise. Runs are
/// strictly sequential so timings do not pollute each other.
pub fn timing_benchmark<F>(
    dataset: &Dataset,
    sizes: &[usize],
    repetitions: usize,
    series: &str,
    rng: &mut RandomSource,
    mut algorithm: F,
) -> Result<TimingReport>
where
    F: FnMut(&Dataset) -> Result<()>,
{
    if sizes.len() < 3 {
        return Err(Error::param("sizes", "need at least 3 dataset sizes"));
    }
    if repetitions == 0 {
        return Err(Error::param("repetitions", "need at least 1 repetition"));
    }
    let n = dataset.len();
    if sizes.iter().any(|&s| s == 0 || s > n) {
        return Err(Error::param(
            "sizes",
            format!("sizes must lie in 1..={n}"),
        ));
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();

    let subset_for = |size: usize, rng: &mut RandomSource| -> Result<Dataset> {
        let ids = rng.sample_indices(n, size);
        dataset.subset(&ids)
    };

    // Warm-up, discarded.
    let warm = subset_for(sorted[0], rng)?;
    algorithm(&warm)?;

    let mut points = Vec::with_capacity(sorted.len());
    for &size in &sorted {
        let subset = subset_for(size, rng)?;
        let mut runs = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let start = Instant::now();
            algorithm(&subset)?;
            runs.push(start.elapsed().as_secs_f64());
        }
        runs.sort_unstable_by(f64::total_cmp);
        let seconds = runs[0];
        points.push(CurvePoint {
            series: series.to_string(),
            x: size as f64,
            y: seconds,
        });
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    Ok(TimingReport {
        exponent: fit_loglog_slope(&pairs),
        points,
    })
}
