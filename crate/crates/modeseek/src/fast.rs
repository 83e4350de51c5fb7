//! The fast mode seeking variant.
//!
//! A random prototype set splits the space into cells: every object belongs
//! to the cell of its nearest prototype, and each prototype additionally owns
//! an overlapping cell of all objects that count it among their c nearest
//! prototypes. Neighborhood searches are then restricted to the overlapping
//! cell of the object's own prototype, cutting the distance count from n^2 to
//! the order of n * sqrt(cn). The three passes mirror the exact algorithm;
//! link resolution is shared with it.

use crate::dataset::{euclidean_sq, Dataset};
use crate::error::{Error, Result};
use crate::exact::{resolve_modes, AscentLinkTable, DensityTable};
use crate::multilevel::{Algorithm, MultiLevelClustering, Provenance};
use crate::passes;
use crate::random::RandomSource;
use crate::schedule::NeighborhoodSchedule;
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

/// Fraction of the average cell size below which a prototype is dropped:
/// cells with fewer than `n / (3m)` members are removed in a single pruning
/// round and all objects are reassigned among the survivors.
pub const PRUNE_FRACTION: f64 = 1.0 / 3.0;

/// Prototype cells for candidate pruning.
///
/// `p_assignment[i]` indexes the surviving prototype nearest to object `i`
/// (its non-overlapping cell); `q_members[p]` lists, in ascending id order,
/// every object that counts prototype `p` among its c nearest prototypes
/// (the overlapping cell). Each non-overlapping cell is contained in the
/// overlapping cell of the same prototype.
#[derive(Debug, Clone)]
pub struct CellIndex {
    requested_c: usize,
    c: usize,
    prototypes: Vec<u32>,
    p_assignment: Vec<u32>,
    p_members: Vec<Vec<u32>>,
    q_members: Vec<Vec<u32>>,
    initial_prototypes: usize,
    pruned: usize,
    distance_computations: u64,
}

/// Copies the given object rows into one contiguous buffer. The passes work
/// cell by cell against such buffers so the hot loops stay cache-resident
/// instead of striding across the whole feature matrix.
fn gather_rows(dataset: &Dataset, ids: &[u32]) -> Vec<f64> {
    let d = dataset.dim();
    let mut rows = Vec::with_capacity(ids.len() * d);
    for &id in ids {
        rows.extend_from_slice(dataset.row(id as usize));
    }
    rows
}

/// Per-object list of the c nearest prototypes, nearest first.
fn nearest_prototypes(dataset: &Dataset, prototypes: &[u32], c: usize) -> Vec<Vec<u32>> {
    let n = dataset.len();
    let d = dataset.dim();
    let proto_rows = gather_rows(dataset, prototypes);
    let mut lists = vec![Vec::new(); n];
    lists.par_iter_mut().enumerate().for_each_init(
        || Vec::with_capacity(prototypes.len()),
        |row: &mut Vec<u128>, (i, list)| {
            row.clear();
            let from = dataset.row(i);
            row.extend((0..prototypes.len()).map(|pi| {
                passes::pack_key(euclidean_sq(from, &proto_rows[pi * d..(pi + 1) * d]), pi as u32)
            }));
            passes::sort_prefix(row, c);
            list.extend(row[..c].iter().map(|&key| passes::key_id(key)));
        },
    );
    lists
}

impl CellIndex {
    /// Samples `round(sqrt(c * n))` prototypes uniformly without replacement,
    /// assigns every object its c nearest prototypes, removes undersized
    /// cells once, and rebuilds the assignments against the survivors.
    ///
    /// When the prototype set (after sampling or pruning) is smaller than
    /// `c`, c is clamped to the available count; [`CellIndex::was_clamped`]
    /// records that the requested complexity was not met.
    pub fn build(dataset: &Dataset, c: usize, rng: &mut RandomSource) -> Result<Self> {
        let n = dataset.len();
        if c < 1 {
            return Err(Error::param("c", "complexity must be at least 1"));
        }

        let m = ((c as f64 * n as f64).sqrt().round() as usize).clamp(1, n);
        let mut prototypes: Vec<u32> = rng
            .sample_indices(n, m)
            .into_iter()
            .map(|p| p as u32)
            .collect();
        prototypes.sort_unstable();
        let mut distance_computations = n as u64 * m as u64;

        let c0 = c.min(m);
        let lists = nearest_prototypes(dataset, &prototypes, c0);

        // P-cell sizes come from the nearest prototype only.
        let mut sizes = vec![0usize; m];
        for list in &lists {
            sizes[list[0] as usize] += 1;
        }
        let threshold = n as f64 * PRUNE_FRACTION / m as f64;
        let survivors: Vec<u32> = prototypes
            .iter()
            .zip(&sizes)
            .filter(|&(_, &size)| size as f64 >= threshold)
            .map(|(&p, _)| p)
            .collect();
        let pruned = m - survivors.len();

        let (prototypes, c_eff, lists) = if pruned > 0 {
            let c_eff = c.min(survivors.len());
            distance_computations += n as u64 * survivors.len() as u64;
            let lists = nearest_prototypes(dataset, &survivors, c_eff);
            (survivors, c_eff, lists)
        } else {
            (prototypes, c0, lists)
        };

        let mut q_members = vec![Vec::new(); prototypes.len()];
        let mut p_members = vec![Vec::new(); prototypes.len()];
        let mut p_assignment = vec![0u32; n];
        for (i, list) in lists.iter().enumerate() {
            p_assignment[i] = list[0];
            p_members[list[0] as usize].push(i as u32);
            for &pi in list {
                q_members[pi as usize].push(i as u32);
            }
        }

        Ok(Self {
            requested_c: c,
            c: c_eff,
            prototypes,
            p_assignment,
            p_members,
            q_members,
            initial_prototypes: m,
            pruned,
            distance_computations,
        })
    }

    /// Effective complexity after clamping.
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn was_clamped(&self) -> bool {
        self.c != self.requested_c
    }

    /// Surviving prototype object ids, ascending.
    pub fn prototypes(&self) -> &[u32] {
        &self.prototypes
    }

    pub fn initial_prototype_count(&self) -> usize {
        self.initial_prototypes
    }

    pub fn pruned_cells(&self) -> usize {
        self.pruned
    }

    /// Candidate set for object `i`: the overlapping cell of its prototype.
    #[inline]
    pub fn search_set(&self, i: usize) -> &[u32] {
        &self.q_members[self.p_assignment[i] as usize]
    }

    /// Index (into `prototypes`) of the nearest surviving prototype per object.
    pub fn p_assignment(&self) -> &[u32] {
        &self.p_assignment
    }

    /// Overlapping-cell member lists, indexed like `prototypes`.
    pub fn q_cells(&self) -> &[Vec<u32>] {
        &self.q_members
    }

    /// Non-overlapping cell member lists, indexed like `prototypes`.
    pub fn p_cells(&self) -> &[Vec<u32>] {
        &self.p_members
    }

    pub fn mean_q_cell_size(&self) -> f64 {
        let total: usize = self.q_members.iter().map(Vec::len).sum();
        total as f64 / self.q_members.len() as f64
    }

    /// Distance evaluations spent building the index.
    pub fn distance_computations(&self) -> u64 {
        self.distance_computations
    }
}

/// Diagnostics of one fast clustering run.
#[derive(Debug, Clone)]
pub struct FmsStats {
    /// Total distance evaluations: index build plus both passes.
    pub distance_computations: u64,
    /// Per level (k, number of objects whose k was clamped to the cell size).
    pub clamp_counts: Vec<(usize, u64)>,
    pub initial_prototypes: usize,
    pub surviving_prototypes: usize,
    pub pruned_cells: usize,
    pub effective_c: usize,
    pub mean_q_cell_size: f64,
}

/// Clustering plus run diagnostics.
#[derive(Debug, Clone)]
pub struct FmsOutput {
    pub clustering: MultiLevelClustering,
    pub stats: FmsStats,
}

/// Densities over cell-restricted candidate sets.
///
/// Work proceeds cell by cell: the overlapping cell's rows are gathered into
/// one contiguous buffer and every member of the matching non-overlapping
/// cell is ranked against it. Candidates are addressed by their position in
/// the (ascending) member list, which orders exactly like object ids, so the
/// output is identical to a per-object pass over global ids.
pub fn fms_densities(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
    index: &CellIndex,
    clamp_hits: &[AtomicU64],
    distance_counter: &AtomicU64,
) -> DensityTable {
    let n = dataset.len();
    let d = dataset.dim();
    let sizes = schedule.sizes().to_vec();
    let nk = sizes.len();

    let cells: Vec<(Vec<f64>, Vec<f64>)> = index
        .p_cells()
        .par_iter()
        .zip(index.q_cells().par_iter())
        .map(|(members, q)| {
            let len = q.len();
            let local_rows = gather_rows(dataset, q);
            distance_counter
                .fetch_add(members.len() as u64 * len as u64, Ordering::Relaxed);

            // Distinct effective ranks for this cell, descending, plus rank 2
            // for the duplicate floor. Only these order statistics are ever
            // read, so selection replaces sorting.
            let effs: Vec<usize> = sizes
                .iter()
                .map(|&k| passes::effective_k(k, len, true))
                .collect();
            let mut ranks = effs.clone();
            if len >= 2 {
                ranks.push(2);
            }
            ranks.sort_unstable_by(|a, b| b.cmp(a));
            ranks.dedup();
            for (ki, (&k, &eff)) in sizes.iter().zip(&effs).enumerate() {
                if eff != k {
                    clamp_hits[ki].fetch_add(members.len() as u64, Ordering::Relaxed);
                }
            }

            let mut raw_block = vec![0.0f64; members.len() * nk];
            let mut first_block = vec![0.0f64; members.len()];
            let mut row: Vec<u128> = Vec::with_capacity(len);
            for (mi, &i) in members.iter().enumerate() {
                row.clear();
                let from = dataset.row(i as usize);
                row.extend((0..len).map(|j| {
                    passes::pack_key(euclidean_sq(from, &local_rows[j * d..(j + 1) * d]), j as u32)
                }));
                passes::select_ranks(&mut row, &ranks);
                let out = &mut raw_block[mi * nk..(mi + 1) * nk];
                for (ki, &eff) in effs.iter().enumerate() {
                    out[ki] = passes::key_distance_sq(row[eff - 1]).sqrt();
                }
                first_block[mi] = if len >= 2 {
                    passes::key_distance_sq(row[1]).sqrt()
                } else {
                    0.0
                };
            }
            (raw_block, first_block)
        })
        .collect();

    let mut raw = vec![0.0f64; n * nk];
    let mut first_neighbor = vec![0.0f64; n];
    for (members, (raw_block, first_block)) in index.p_cells().iter().zip(cells) {
        for (mi, &i) in members.iter().enumerate() {
            let i = i as usize;
            raw[i * nk..(i + 1) * nk].copy_from_slice(&raw_block[mi * nk..(mi + 1) * nk]);
            first_neighbor[i] = first_block[mi];
        }
    }

    passes::finalize_densities(&mut raw, &first_neighbor);
    DensityTable::from_parts(sizes, n, raw)
}

/// Ascent links over cell-restricted candidate sets; same cell-by-cell
/// layout as the density pass, with the cell's density rows gathered
/// alongside its feature rows.
pub fn fms_ascent_links(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
    index: &CellIndex,
    densities: &DensityTable,
    distance_counter: &AtomicU64,
) -> AscentLinkTable {
    let n = dataset.len();
    let d = dataset.dim();
    let sizes = schedule.sizes().to_vec();
    let nk = sizes.len();
    let density_values = densities.values();

    let cells: Vec<Vec<u32>> = index
        .p_cells()
        .par_iter()
        .zip(index.q_cells().par_iter())
        .map(|(members, q)| {
            let local_rows = gather_rows(dataset, q);
            // Level-major density layout: each level's argmax scan walks one
            // small contiguous row of the cell.
            let len = q.len();
            let mut level_densities = vec![0.0f64; len * nk];
            for (lj, &j) in q.iter().enumerate() {
                let row = &density_values[j as usize * nk..(j as usize + 1) * nk];
                for (ki, &f) in row.iter().enumerate() {
                    level_densities[ki * len + lj] = f;
                }
            }

            // Levels with k >= len clamp to the window "whole cell minus the
            // member's farthest candidate". The top two density holders of
            // the cell decide every such argmax, so they are computed once
            // per level and shared by all members. Sizes ascend, so the
            // clamped levels form a suffix.
            let clamped_from = sizes.partition_point(|&k| k < len);
            let top2: Vec<(u32, u32)> = (clamped_from..nk)
                .map(|ki| {
                    let level = &level_densities[ki * len..(ki + 1) * len];
                    let mut best = 0usize;
                    let mut second = usize::MAX;
                    for j in 1..len {
                        if level[j] > level[best] {
                            second = best;
                            best = j;
                        } else if second == usize::MAX || level[j] > level[second] {
                            second = j;
                        }
                    }
                    (best as u32, if len > 1 { second as u32 } else { best as u32 })
                })
                .collect();

            distance_counter
                .fetch_add(members.len() as u64 * q.len() as u64, Ordering::Relaxed);

            // Unclamped windows are prefix sets established by descending
            // rank selection; the argmax inside a window is order-free, so
            // no sorting is needed.
            let mut window_ranks: Vec<usize> =
                sizes[..clamped_from].iter().rev().copied().collect();
            window_ranks.dedup();

            let mut link_block = vec![0u32; members.len() * nk];
            let mut row: Vec<u128> = Vec::with_capacity(len);
            for (mi, &i) in members.iter().enumerate() {
                row.clear();
                let from = dataset.row(i as usize);
                row.extend((0..len).map(|j| {
                    passes::pack_key(euclidean_sq(from, &local_rows[j * d..(j + 1) * d]), j as u32)
                }));
                // The farthest candidate (largest key) is the one excluded
                // from clamped windows; find it before any reordering.
                let farthest = passes::key_id(*row.iter().max().unwrap());
                passes::select_ranks(&mut row, &window_ranks);
                let out = &mut link_block[mi * nk..(mi + 1) * nk];
                for (ki, &k) in sizes.iter().enumerate().take(clamped_from) {
                    let level = &level_densities[ki * len..(ki + 1) * len];
                    let mut best_local = passes::key_id(row[0]);
                    let mut best_f = level[best_local as usize];
                    for &key in &row[1..k] {
                        let cand = passes::key_id(key);
                        let f = level[cand as usize];
                        if f > best_f || (f == best_f && cand < best_local) {
                            best_f = f;
                            best_local = cand;
                        }
                    }
                    // Cell member lists ascend, so local order is id order.
                    out[ki] = q[best_local as usize];
                }
                for ki in clamped_from..nk {
                    let (best, second) = top2[ki - clamped_from];
                    let winner = if best != farthest { best } else { second };
                    out[ki] = q[winner as usize];
                }
            }
            link_block
        })
        .collect();

    let mut links = vec![0u32; n * nk];
    for (members, link_block) in index.p_cells().iter().zip(cells) {
        for (mi, &i) in members.iter().enumerate() {
            let i = i as usize;
            links[i * nk..(i + 1) * nk].copy_from_slice(&link_block[mi * nk..(mi + 1) * nk]);
        }
    }

    AscentLinkTable::from_parts(sizes, n, links)
}

/// Runs the fast algorithm end to end: index build, cell-restricted density
/// and link passes, shared link resolution.
///
/// When a cell is smaller than a scheduled k, that object's k clamps to the
/// cell size minus one; the per-level clamp counts in the returned stats make
/// the approximation visible.
pub fn fms_cluster(
    dataset: &Dataset,
    schedule: &NeighborhoodSchedule,
    c: usize,
    rng: &mut RandomSource,
) -> Result<FmsOutput> {
    if schedule.max_size() > dataset.len() {
        return Err(Error::ScheduleMismatch(format!(
            "neighborhood size {} exceeds dataset size {}",
            schedule.max_size(),
            dataset.len()
        )));
    }
    let seed = rng.seed();
    let index = CellIndex::build(dataset, c, rng)?;

    let clamp_hits: Vec<AtomicU64> = schedule.sizes().iter().map(|_| AtomicU64::new(0)).collect();
    let distance_counter = AtomicU64::new(index.distance_computations());

    let densities = fms_densities(dataset, schedule, &index, &clamp_hits, &distance_counter);
    let links = fms_ascent_links(dataset, schedule, &index, &densities, &distance_counter);
    let clustering = resolve_modes(
        &links,
        Provenance {
            algorithm: Algorithm::FastModeSeeking { c },
            seed: Some(seed),
        },
    )?;

    let stats = FmsStats {
        distance_computations: distance_counter.into_inner(),
        clamp_counts: schedule
            .sizes()
            .iter()
            .zip(&clamp_hits)
            .map(|(&k, hits)| (k, hits.load(Ordering::Relaxed)))
            .collect(),
        initial_prototypes: index.initial_prototype_count(),
        surviving_prototypes: index.prototypes().len(),
        pruned_cells: index.pruned_cells(),
        effective_c: index.c(),
        mean_q_cell_size: index.mean_q_cell_size(),
    };
    Ok(FmsOutput { clustering, stats })
}
