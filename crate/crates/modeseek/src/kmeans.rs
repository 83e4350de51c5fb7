//! Plain Lloyd kMeans with medoid extraction, used as the comparison
//! baseline. No kMeans++ seeding, no mini-batching, no triangle-inequality
//! acceleration: the baseline stays the textbook procedure.
//!
//! Every point-to-mean evaluation is counted, so a run of eta assignment
//! passes over k means costs exactly `(eta * k + 1) * n` distance
//! computations including the final medoid pass.

use crate::dataset::{euclidean_sq, Dataset};
use crate::error::{Error, Result};
use crate::multilevel::{Algorithm, ClusteringLevel, MultiLevelClustering, Provenance};
use crate::random::RandomSource;
use rayon::prelude::*;
use std::time::{Duration, Instant};

/// Fixed chunk size for the deterministic parallel reductions; partial sums
/// are merged in chunk order so results do not depend on the worker count.
const REDUCE_CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    /// Hard cap on assignment passes.
    pub max_iterations: usize,
    /// Optional wall-clock budget, checked once per iteration.
    pub time_budget: Option<Duration>,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            time_budget: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// Cluster index per object, in `0..k`.
    pub assignment: Vec<u32>,
    /// Final cluster means, row-major k x d.
    pub means: Vec<f64>,
    /// Per cluster, the member object closest to the cluster mean.
    pub medoids: Vec<u32>,
    /// Number of assignment passes performed.
    pub iterations_used: usize,
    /// Exact count of point-to-mean distance evaluations.
    pub distance_computations: u64,
    /// Sum of squared distances to the assigned mean, one entry per
    /// assignment pass; non-increasing.
    pub objective_trace: Vec<f64>,
}

impl KMeansResult {
    pub fn num_clusters(&self) -> usize {
        self.medoids.len()
    }

    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }
}

struct MeanAccumulator {
    sums: Vec<f64>,
    counts: Vec<u64>,
}

/// Per-cluster feature sums and member counts, reduced in fixed chunk order.
fn accumulate_means(dataset: &Dataset, assignment: &[u32], k: usize) -> MeanAccumulator {
    let d = dataset.dim();
    let partials: Vec<MeanAccumulator> = assignment
        .par_chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(chunk, part)| {
            let mut acc = MeanAccumulator {
                sums: vec![0.0; k * d],
                counts: vec![0; k],
            };
            let base = chunk * REDUCE_CHUNK;
            for (off, &c) in part.iter().enumerate() {
                let row = dataset.row(base + off);
                let dst = &mut acc.sums[c as usize * d..(c as usize + 1) * d];
                for (s, v) in dst.iter_mut().zip(row) {
                    *s += v;
                }
                acc.counts[c as usize] += 1;
            }
            acc
        })
        .collect();

    let mut total = MeanAccumulator {
        sums: vec![0.0; k * d],
        counts: vec![0; k],
    };
    for part in partials {
        for (t, p) in total.sums.iter_mut().zip(&part.sums) {
            *t += p;
        }
        for (t, p) in total.counts.iter_mut().zip(&part.counts) {
            *t += p;
        }
    }
    total
}

/// Lloyd iteration from k distinct random initial objects.
///
/// Stops at convergence (no assignment change), `max_iterations`, or the
/// time budget, whichever comes first. A cluster that loses all members is
/// reseeded with the object farthest from its currently assigned mean, so
/// the result always has exactly k non-empty clusters.
pub fn kmeans_cluster(
    dataset: &Dataset,
    k: usize,
    options: &KMeansOptions,
    rng: &mut RandomSource,
) -> Result<KMeansResult> {
    let n = dataset.len();
    let d = dataset.dim();
    if k == 0 || k > n {
        return Err(Error::param(
            "k",
            format!("cluster count must be in 1..={n}, got {k}"),
        ));
    }
    if options.max_iterations == 0 {
        return Err(Error::param("max_iterations", "must be at least 1"));
    }

    let start = Instant::now();
    let mut means = Vec::with_capacity(k * d);
    for id in rng.sample_indices(n, k) {
        means.extend_from_slice(dataset.row(id));
    }

    let mut assignment = vec![0u32; n];
    let mut best_dist = vec![0.0f64; n];
    let mut prev_assignment: Option<Vec<u32>> = None;
    let mut distance_computations = 0u64;
    let mut objective_trace: Vec<f64> = Vec::new();
    let mut iterations_used = 0usize;

    loop {
        // Assignment pass: n * k distance evaluations.
        assignment
            .par_iter_mut()
            .zip(best_dist.par_iter_mut())
            .enumerate()
            .for_each(|(i, (slot, dist_slot))| {
                let row = dataset.row(i);
                let mut best = 0u32;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let dc = euclidean_sq(row, &means[c * d..(c + 1) * d]);
                    if dc < best_d {
                        best_d = dc;
                        best = c as u32;
                    }
                }
                *slot = best;
                *dist_slot = best_d;
            });
        distance_computations += (n as u64) * (k as u64);
        iterations_used += 1;
        objective_trace.push(best_dist.iter().sum());

        let converged = prev_assignment.as_deref() == Some(assignment.as_slice());

        // Reseed empty clusters with the worst-fitted objects; reuses the
        // distances cached by the assignment pass, so the accounting above
        // stays exact.
        let mut acc = accumulate_means(dataset, &assignment, k);
        let empties: Vec<usize> = (0..k).filter(|&c| acc.counts[c] == 0).collect();
        if !empties.is_empty() {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_unstable_by(|&a, &b| best_dist[b].total_cmp(&best_dist[a]).then(a.cmp(&b)));
            let mut cursor = 0;
            for &c in &empties {
                // Donor cluster must keep at least one member.
                while cursor < n {
                    let obj = order[cursor];
                    cursor += 1;
                    let donor = assignment[obj] as usize;
                    if acc.counts[donor] > 1 {
                        acc.counts[donor] -= 1;
                        acc.counts[c] += 1;
                        assignment[obj] = c as u32;
                        break;
                    }
                }
            }
            acc = accumulate_means(dataset, &assignment, k);
        }

        for c in 0..k {
            let count = acc.counts[c] as f64;
            for (dst, s) in means[c * d..(c + 1) * d]
                .iter_mut()
                .zip(&acc.sums[c * d..(c + 1) * d])
            {
                *dst = s / count;
            }
        }

        if converged
            || iterations_used >= options.max_iterations
            || options.time_budget.is_some_and(|b| start.elapsed() >= b)
        {
            break;
        }
        prev_assignment = Some(assignment.clone());
    }

    // Medoid pass: one distance per object; ties go to the lower id.
    let mut medoids = vec![u32::MAX; k];
    let mut medoid_dist = vec![f64::INFINITY; k];
    for i in 0..n {
        let c = assignment[i] as usize;
        let dc = euclidean_sq(dataset.row(i), &means[c * d..(c + 1) * d]);
        if dc < medoid_dist[c] {
            medoid_dist[c] = dc;
            medoids[c] = i as u32;
        }
    }
    distance_computations += n as u64;

    Ok(KMeansResult {
        assignment,
        means,
        medoids,
        iterations_used,
        distance_computations,
        objective_trace,
    })
}

/// One kMeans run per requested cluster count; the medoids serve as the
/// per-level prototypes in place of modal objects.
pub fn kmeans_multilevel(
    dataset: &Dataset,
    cluster_counts: &[usize],
    options: &KMeansOptions,
    rng: &RandomSource,
) -> Result<MultiLevelClustering> {
    if cluster_counts.is_empty() {
        return Err(Error::param("cluster_counts", "must not be empty"));
    }
    let mut levels = Vec::with_capacity(cluster_counts.len());
    for (i, &count) in cluster_counts.iter().enumerate() {
        let mut child = rng.child(i as u64);
        let result = kmeans_cluster(dataset, count, options, &mut child)?;
        // Clusters renumbered by ascending medoid id to match the modal
        // object convention.
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_unstable_by_key(|&c| result.medoids[c]);
        let mut remap = vec![0u32; count];
        for (new_c, &old_c) in order.iter().enumerate() {
            remap[old_c] = new_c as u32;
        }
        levels.push(ClusteringLevel {
            k: count,
            assignment: result
                .assignment
                .iter()
                .map(|&c| remap[c as usize])
                .collect(),
            prototypes: order.iter().map(|&c| result.medoids[c]).collect(),
        });
    }
    Ok(MultiLevelClustering::new(
        levels,
        Provenance {
            algorithm: Algorithm::KMeans,
            seed: Some(rng.seed()),
        },
    ))
}
