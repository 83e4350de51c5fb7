//! Per-object row machinery shared by the exact and cell-restricted passes.
//!
//! Both algorithms rank a candidate set, read off the k-th ranked distance
//! for every scheduled k (self sits at rank 1 with distance zero), and later
//! pick the highest-density candidate inside each rank window. The only
//! differences between the two algorithms are the candidate set and whether
//! oversized k values clamp to the cell size.
//!
//! Candidate entries are packed into single `u128` keys: the high 64 bits
//! hold the IEEE representation of the squared distance (order-isomorphic to
//! the value for nonnegative floats), the low 32 bits the candidate id. The
//! canonical ranking is therefore plain integer order on the keys, which is
//! exactly `(squared distance, id)` and, since squaring and square root are
//! monotone, exactly `(distance, id)`. Square roots are taken only of the
//! few ranked values actually read.

use std::sync::atomic::{AtomicU64, Ordering};

/// Floor factor for coincident objects: a zero k-th neighbor distance would
/// give an infinite density, so distances are floored at
/// `1e-12 * mean nonzero first-neighbor distance`.
pub const DUPLICATE_DISTANCE_EPSILON: f64 = 1e-12;

#[inline]
pub(crate) fn pack_key(distance_sq: f64, id: u32) -> u128 {
    debug_assert!(distance_sq >= 0.0);
    ((distance_sq.to_bits() as u128) << 32) | id as u128
}

#[inline]
pub(crate) fn key_distance_sq(key: u128) -> f64 {
    f64::from_bits((key >> 32) as u64)
}

#[inline]
pub(crate) fn key_id(key: u128) -> u32 {
    key as u32
}

/// Orders the first `prefix` keys of `row` ascending.
///
/// Selection before sorting is a pure optimization: keys are unique (the id
/// is part of the key), so the sorted prefix is identical to the prefix of a
/// full sort, element for element.
pub(crate) fn sort_prefix(row: &mut [u128], prefix: usize) {
    let len = row.len();
    if prefix < len {
        row.select_nth_unstable(prefix - 1);
        row[..prefix].sort_unstable();
    } else {
        row.sort_unstable();
    }
}

/// Establishes the order statistic at every rank in `ranks` (strictly
/// descending, each at least 1) by successive selection on shrinking
/// prefixes, avoiding a full sort.
///
/// Afterwards `row[rank - 1]` holds the rank-th smallest key for every
/// requested rank, and each prefix `row[..rank]` holds exactly the rank
/// smallest keys (in no particular order). Ranks are unique under the
/// strict total key order, so the values and prefix sets are identical to
/// what a full sort would produce.
pub(crate) fn select_ranks(row: &mut [u128], ranks: &[usize]) {
    debug_assert!(ranks.windows(2).all(|w| w[0] > w[1]));
    let mut upper = row.len();
    for &rank in ranks {
        debug_assert!(rank >= 1 && rank <= upper);
        row[..upper].select_nth_unstable(rank - 1);
        upper = rank - 1;
        if upper == 0 {
            break;
        }
    }
}

/// Effective neighborhood size for a candidate row of `len` entries. The
/// exact pass validates `k <= n` up front and never clamps; the cell pass
/// clamps oversized k to `len - 1` (one-object cells degenerate to rank 1).
#[inline]
pub(crate) fn effective_k(k: usize, len: usize, clamp: bool) -> usize {
    if !clamp {
        debug_assert!(k <= len);
        return k;
    }
    if k >= len {
        (len - 1).max(1)
    } else {
        k
    }
}

/// Reads the k-th ranked distance for every scheduled size from the sorted
/// prefix of a candidate row. `row_len` is the full candidate count (the
/// clamp bound); the prefix only needs to cover the effective ranks.
/// Returns the first-neighbor distance (rank 2) used for the duplicate
/// floor, or 0.0 when the row has a single entry.
pub(crate) fn raw_ranked_distances(
    sorted_prefix: &[u128],
    row_len: usize,
    sizes: &[usize],
    clamp: bool,
    out: &mut [f64],
    clamp_hits: Option<&[AtomicU64]>,
) -> f64 {
    debug_assert_eq!(out.len(), sizes.len());
    for (ki, &k) in sizes.iter().enumerate() {
        let eff = effective_k(k, row_len, clamp);
        if eff != k {
            if let Some(hits) = clamp_hits {
                hits[ki].fetch_add(1, Ordering::Relaxed);
            }
        }
        out[ki] = key_distance_sq(sorted_prefix[eff - 1]).sqrt();
    }
    if sorted_prefix.len() >= 2 {
        key_distance_sq(sorted_prefix[1]).sqrt()
    } else {
        0.0
    }
}

/// Turns raw ranked distances into densities `1 / max(s, floor)` in place.
/// `first_neighbor` holds one rank-2 distance per object; the floor is
/// `DUPLICATE_DISTANCE_EPSILON` times their nonzero mean (1.0 when every
/// object coincides with its first neighbor).
pub(crate) fn finalize_densities(raw: &mut [f64], first_neighbor: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &d in first_neighbor {
        if d > 0.0 {
            sum += d;
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 1.0 };
    let floor = DUPLICATE_DISTANCE_EPSILON * mean;
    for s in raw.iter_mut() {
        *s = 1.0 / s.max(floor);
    }
    floor
}

/// For every scheduled size, the candidate inside the rank window with the
/// highest density; ties resolve to the lower candidate id. Densities are
/// laid out row-major, one row of `sizes.len()` values per candidate id.
pub(crate) fn link_row(
    sorted_prefix: &[u128],
    row_len: usize,
    sizes: &[usize],
    clamp: bool,
    densities: &[f64],
    out: &mut [u32],
) {
    debug_assert_eq!(out.len(), sizes.len());
    let nk = sizes.len();
    for (ki, &k) in sizes.iter().enumerate() {
        let eff = effective_k(k, row_len, clamp);
        let mut best_id = key_id(sorted_prefix[0]);
        let mut best_f = densities[best_id as usize * nk + ki];
        for &key in &sorted_prefix[1..eff] {
            let cand = key_id(key);
            let f = densities[cand as usize * nk + ki];
            if f > best_f || (f == best_f && cand < best_id) {
                best_f = f;
                best_id = cand;
            }
        }
        out[ki] = best_id;
    }
}
