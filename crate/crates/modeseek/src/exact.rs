//! The original kNN mode seeking algorithm.
//!
//! Two full-dataset passes handle every scheduled neighborhood size at once:
//! the first ranks all pairwise distances per object and stores one density
//! per size, the second recomputes the ranking and stores one ascent link per
//! size (the neighbor with the highest density, self included). Distances are
//! recomputed rather than stored, keeping auxiliary memory at O(n * |K|).
//! Link resolution then collapses each level's link forest into clusters.
//!
//! The output is a deterministic function of (dataset, schedule): there is no
//! randomness anywhere in this module.

use crate::dataset::{euclidean_sq, Dataset};
use crate::error::{Error, Result};
use crate::multilevel::{Algorithm, ClusteringLevel, MultiLevelClustering, Provenance};
use crate::passes;
use crate::schedule::NeighborhoodSchedule;
use rayon::prelude::*;

/// Per-object density estimates, one column per scheduled neighborhood size.
/// Entry (i, k) is the reciprocal of the distance from object i to its k-th
/// nearest neighbor, self counted at rank 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    sizes: Vec<usize>,
    n: usize,
    values: Vec<f64>,
}

impl DensityTable {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_objects(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn value(&self, object: usize, size_index: usize) -> f64 {
        self.values[object * self.sizes.len() + size_index]
    }

    pub fn row(&self, object: usize) -> &[f64] {
        let nk = self.sizes.len();
        &self.values[object * nk..(object + 1) * nk]
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn from_parts(sizes: Vec<usize>, n: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * sizes.len());
        Self { sizes, n, values }
    }
}

/// Per-object ascent links, one column per scheduled neighborhood size.
/// Entry (i, k) is the id of the highest-density object among the k nearest
/// neighbors of i (self included); ties go to the lower id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AscentLinkTable {
    sizes: Vec<usize>,
    n: usize,
    links: Vec<u32>,
}

impl AscentLinkTable {
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_objects(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn link(&self, object: usize, size_index: usize) -> u32 {
        self.links[object * self.sizes.len() + size_index]
    }

    /// All links for one neighborhood size, indexed by object.
    pub fn level_links(&self, size_index: usize) -> Vec<u32> {
        let nk = self.sizes.len();
        (0..self.n)
            .map(|i| self.links[i * nk + size_index])
            .collect()
    }

    pub(crate) fn from_parts(sizes: Vec<usize>, n: usize, links: Vec<u32>) -> Self {
        debug_assert_eq!(links.len(), n * sizes.len());
        Self { sizes, n, links }
    }
}

fn validate_schedule(dataset: &Dataset, schedule: &NeighborhoodSchedule) -> Result<()> {
    let n = dataset.len();
    if schedule.max_size() > n {
        return Err(Error::ScheduleMismatch(format!(
            "neighborhood size {} exceeds dataset size {n}",
            schedule.max_size()
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidDataset("more than u32::MAX objects".into()));
    }
    Ok(())
}

/// First pass: rank each object's distances to the whole dataset and store
/// the density for every scheduled size. The full distance matrix is never
/// materialized; each worker keeps one reusable row of candidates.
pub fn compute_densities(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
) -> Result<DensityTable> {
    validate_schedule(dataset, schedule)?;
    let n = dataset.len();
    let sizes = schedule.sizes().to_vec();
    let nk = sizes.len();
    let prefix = sizes[nk - 1].max(2).min(n);

    let mut raw = vec![0.0f64; n * nk];
    let mut first_neighbor = vec![0.0f64; n];

    raw.par_chunks_mut(nk)
        .zip(first_neighbor.par_iter_mut())
        .enumerate()
        .for_each_init(
            || Vec::with_capacity(n),
            |row: &mut Vec<u128>, (i, (row_out, first_out))| {
                row.clear();
                let from = dataset.row(i);
                row.extend(
                    (0..n).map(|j| passes::pack_key(euclidean_sq(from, dataset.row(j)), j as u32)),
                );
                passes::sort_prefix(row, prefix);
                *first_out =
                    passes::raw_ranked_distances(&row[..prefix], n, &sizes, false, row_out, None);
            },
        );

    passes::finalize_densities(&mut raw, &first_neighbor);
    Ok(DensityTable::from_parts(sizes, n, raw))
}

/// Second pass: recompute each object's ranking and store, for every
/// scheduled size, the highest-density neighbor inside the rank window.
pub fn compute_ascent_links(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
    densities: &DensityTable,
) -> Result<AscentLinkTable> {
    validate_schedule(dataset, schedule)?;
    if densities.sizes() != schedule.sizes() {
        return Err(Error::ScheduleMismatch(
            "density table was computed with a different schedule".into(),
        ));
    }
    if densities.num_objects() != dataset.len() {
        return Err(Error::ScheduleMismatch(
            "density table was computed for a different dataset".into(),
        ));
    }
    let n = dataset.len();
    let sizes = schedule.sizes().to_vec();
    let nk = sizes.len();
    let prefix = sizes[nk - 1].min(n);
    let density_values = densities.values();

    let mut links = vec![0u32; n * nk];
    links
        .par_chunks_mut(nk)
        .enumerate()
        .for_each_init(
            || Vec::with_capacity(n),
            |row: &mut Vec<u128>, (i, row_out)| {
                row.clear();
                let from = dataset.row(i);
                row.extend(
                    (0..n).map(|j| passes::pack_key(euclidean_sq(from, dataset.row(j)), j as u32)),
                );
                passes::sort_prefix(row, prefix);
                passes::link_row(&row[..prefix], n, &sizes, false, density_values, row_out);
            },
        );

    Ok(AscentLinkTable::from_parts(sizes, n, links))
}

/// A single resolved level: links collapsed to their roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedLinks {
    /// Cluster index per object, numbered by ascending root id.
    pub assignment: Vec<u32>,
    /// Root object ids, ascending. These are the modal objects.
    pub prototypes: Vec<u32>,
    /// Number of link-jumping rounds that changed something.
    pub rounds: usize,
}

/// Collapses one level's links by synchronous link jumping
/// (`u[i] <- u[u[i]]` for all objects per round) until nothing changes.
///
/// The ascent-link construction guarantees a forest, so the number of
/// changing rounds is at most `ceil(log2 n)`; anything past that bound, or a
/// stable state whose targets are not link fixpoints, means the input links
/// were corrupt and is reported rather than silently mis-clustered.
pub fn resolve_links(links: &[u32]) -> Result<ResolvedLinks> {
    let n = links.len();
    if n == 0 {
        return Err(Error::InternalInvariant("empty link table".into()));
    }
    let max_rounds = (usize::BITS - (n - 1).max(1).leading_zeros()) as usize + 2;

    let mut cur = links.to_vec();
    let mut next = vec![0u32; n];
    let mut rounds = 0usize;
    loop {
        let mut changed = false;
        for i in 0..n {
            let t = cur[cur[i] as usize];
            if t != cur[i] {
                changed = true;
            }
            next[i] = t;
        }
        if !changed {
            break;
        }
        std::mem::swap(&mut cur, &mut next);
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::InternalInvariant(
                "link resolution did not converge; the link table contains a cycle".into(),
            ));
        }
    }

    let mut prototypes: Vec<u32> = cur.clone();
    prototypes.sort_unstable();
    prototypes.dedup();
    for &root in &prototypes {
        if links[root as usize] != root {
            return Err(Error::InternalInvariant(format!(
                "resolved root {root} is not a fixpoint of the original links"
            )));
        }
    }
    let assignment = cur
        .iter()
        .map(|r| prototypes.binary_search(r).unwrap() as u32)
        .collect();
    Ok(ResolvedLinks {
        assignment,
        prototypes,
        rounds,
    })
}

/// Resolves every level of a link table into a multi-level clustering.
pub fn resolve_modes(
    links: &AscentLinkTable,
    provenance: Provenance,
) -> Result<MultiLevelClustering> {
    let levels: Vec<ClusteringLevel> = links
        .sizes()
        .par_iter()
        .enumerate()
        .map(|(ki, &k)| {
            let resolved = resolve_links(&links.level_links(ki))?;
            Ok(ClusteringLevel {
                k,
                assignment: resolved.assignment,
                prototypes: resolved.prototypes,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MultiLevelClustering::new(levels, provenance))
}

/// Convenience wrapper: both passes plus resolution.
pub fn ms_cluster(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
) -> Result<MultiLevelClustering> {
    let densities = compute_densities(dataset, schedule)?;
    let links = compute_ascent_links(dataset, schedule, &densities)?;
    resolve_modes(
        &links,
        Provenance {
            algorithm: Algorithm::ModeSeeking,
            seed: None,
        },
    )
}
