//! Shared helpers for the integration suites: dataset generators and an
//! independent naive reference implementation of the exact algorithm.

#![allow(dead_code)]

use modeseek::dataset::Dataset;
use modeseek::LabelAlphabet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Uniform random dataset in [-scale, scale]^d.
pub fn random_dataset(seed: u64, n: usize, d: usize, scale: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect();
    Dataset::from_rows(rows).unwrap()
}

/// Balanced Gaussian mixture with labels = component index.
pub fn gaussian_mixture(
    seed: u64,
    n: usize,
    d: usize,
    components: usize,
    center_spread: f64,
    sigma: f64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..components)
        .map(|_| {
            (0..d)
                .map(|_| rng.random_range(-center_spread..center_spread))
                .collect()
        })
        .collect();
    let normal = Normal::new(0.0, sigma).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let component = i % components;
        rows.push(
            centers[component]
                .iter()
                .map(|&c| c + normal.sample(&mut rng))
                .collect::<Vec<f64>>(),
        );
        labels.push(component as u32);
    }
    let alphabet = LabelAlphabet::from_names((0..components).map(|c| c.to_string()));
    Dataset::from_rows(rows)
        .unwrap()
        .with_labels(labels, alphabet)
        .unwrap()
}

/// Plainly written squared Euclidean distance, independent of the library
/// kernel but performing the identical IEEE operation sequence.
pub fn oracle_distance_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for c in 0..a.len() {
        let t = a[c] - b[c];
        acc += t * t;
    }
    acc
}

/// Naive full-matrix reference for the exact algorithm: materializes the
/// n x n distance matrix, fully sorts every row, and resolves links by
/// chasing them object by object.
pub struct NaiveMs {
    pub sizes: Vec<usize>,
    pub n: usize,
    /// Row-major n x |K| densities.
    pub densities: Vec<f64>,
    /// Row-major n x |K| ascent links.
    pub links: Vec<u32>,
    /// Per size: (assignment, prototypes).
    pub levels: Vec<(Vec<u32>, Vec<u32>)>,
}

pub fn naive_ms(dataset: &Dataset, sizes: &[usize]) -> NaiveMs {
    let n = dataset.len();
    let nk = sizes.len();

    let mut dist_sq = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            dist_sq[i * n + j] = oracle_distance_sq(dataset.row(i), dataset.row(j));
        }
    }

    // Full argsort of every row by the canonical (squared distance, id) key.
    let mut order = vec![0u32; n * n];
    for i in 0..n {
        let row = &dist_sq[i * n..(i + 1) * n];
        let ids = &mut order[i * n..(i + 1) * n];
        for (j, slot) in ids.iter_mut().enumerate() {
            *slot = j as u32;
        }
        ids.sort_by(|&a, &b| {
            row[a as usize]
                .total_cmp(&row[b as usize])
                .then(a.cmp(&b))
        });
    }

    // Duplicate floor from the mean nonzero first-neighbor distance.
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        if n >= 2 {
            let second = order[i * n + 1] as usize;
            let d = dist_sq[i * n + second].sqrt();
            if d > 0.0 {
                sum += d;
                count += 1;
            }
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 1.0 };
    let floor = 1e-12 * mean;

    let mut densities = vec![0.0f64; n * nk];
    for i in 0..n {
        for (ki, &k) in sizes.iter().enumerate() {
            let neighbor = order[i * n + (k - 1)] as usize;
            densities[i * nk + ki] = 1.0 / dist_sq[i * n + neighbor].sqrt().max(floor);
        }
    }

    let mut links = vec![0u32; n * nk];
    for i in 0..n {
        for (ki, &k) in sizes.iter().enumerate() {
            let mut best = order[i * n] as usize;
            for w in 1..k {
                let cand = order[i * n + w] as usize;
                let fc = densities[cand * nk + ki];
                let fb = densities[best * nk + ki];
                if fc > fb || (fc == fb && cand < best) {
                    best = cand;
                }
            }
            links[i * nk + ki] = best as u32;
        }
    }

    // Resolution by per-object chasing.
    let mut levels = Vec::with_capacity(nk);
    for ki in 0..nk {
        let mut roots = vec![0u32; n];
        for i in 0..n {
            let mut cur = i;
            let mut guard = 0;
            while links[cur * nk + ki] as usize != cur {
                cur = links[cur * nk + ki] as usize;
                guard += 1;
                assert!(guard <= n, "link chain does not terminate");
            }
            roots[i] = cur as u32;
        }
        let mut prototypes: Vec<u32> = roots.clone();
        prototypes.sort_unstable();
        prototypes.dedup();
        let assignment: Vec<u32> = roots
            .iter()
            .map(|r| prototypes.binary_search(r).unwrap() as u32)
            .collect();
        levels.push((assignment, prototypes));
    }

    NaiveMs {
        sizes: sizes.to_vec(),
        n,
        densities,
        links,
        levels,
    }
}

pub fn pass(criterion: &str) {
    println!("ACCEPTANCE {criterion}: PASS");
}

pub fn skip(criterion: &str, reason: &str) {
    println!("ACCEPTANCE {criterion}: SKIP ({reason})");
}
