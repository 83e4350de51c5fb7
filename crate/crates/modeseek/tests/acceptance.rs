//! Acceptance suite: one test per criterion, each printing a PASS line.
//! The wall-time scaling criterion lives in its own binary
//! (`acceptance_scaling`) so concurrent tests cannot pollute its timings.

mod common;

use common::{gaussian_mixture, naive_ms, pass, random_dataset, skip};
use modeseek::evaluation::{classification_error, nmi, nn1_classify};
use modeseek::exact::{compute_ascent_links, compute_densities, ms_cluster, resolve_modes};
use modeseek::fast::fms_cluster;
use modeseek::io::{load_dataset, DataFormat, DatasetFile};
use modeseek::kmeans::{kmeans_cluster, KMeansOptions};
use modeseek::labeling::{
    active_label, cluster_average, nest_levels, propagate_confidences, ConfidenceMatrix,
    LabelOracle,
};
use modeseek::multilevel::{Algorithm, ClusteringLevel, MultiLevelClustering, Provenance};
use modeseek::schedule::NeighborhoodSchedule;
use modeseek::RandomSource;
use std::time::Instant;

fn random_multilevel(seed: u64, n: usize, cluster_counts: &[usize]) -> MultiLevelClustering {
    let mut rng = RandomSource::new(seed);
    let mut levels = Vec::new();
    for (li, &clusters) in cluster_counts.iter().enumerate() {
        let mut assignment: Vec<u32> = (0..n).map(|_| rng.usize_below(clusters) as u32).collect();
        for c in 0..clusters {
            assignment[c] = c as u32;
        }
        let mut prototypes = vec![0u32; clusters];
        for c in 0..clusters as u32 {
            prototypes[c as usize] = assignment.iter().position(|&a| a == c).unwrap() as u32;
        }
        let level = ClusteringLevel {
            k: 1000 - li,
            assignment,
            prototypes,
        };
        level.validate().unwrap();
        levels.push(level);
    }
    MultiLevelClustering::new(
        levels,
        Provenance {
            algorithm: Algorithm::ModeSeeking,
            seed: Some(seed),
        },
    )
}

#[test]
fn criterion_01_brute_force_oracle_equivalence() {
    let started = Instant::now();
    for trial in 0..20u64 {
        let n = 30 + (trial as usize * 97) % 471; // 30..=500
        let d = 1 + (trial as usize) % 10;
        let dataset = random_dataset(1000 + trial, n, d, 50.0);
        let schedule = NeighborhoodSchedule::geometric(
            n,
            modeseek::schedule::DEFAULT_BASE,
            modeseek::schedule::DEFAULT_RATIO,
            modeseek::schedule::DEFAULT_CAP_FRACTION,
        )
        .unwrap();

        let reference = naive_ms(&dataset, schedule.sizes());
        let densities = compute_densities(&dataset, &schedule).unwrap();
        let links = compute_ascent_links(&dataset, &schedule, &densities).unwrap();
        let nk = schedule.len();
        for i in 0..n {
            for ki in 0..nk {
                assert_eq!(
                    densities.value(i, ki),
                    reference.densities[i * nk + ki],
                    "trial {trial}: density mismatch at object {i}, size index {ki}"
                );
                assert_eq!(
                    links.link(i, ki),
                    reference.links[i * nk + ki],
                    "trial {trial}: link mismatch at object {i}, size index {ki}"
                );
            }
        }

        let clustering = resolve_modes(
            &links,
            Provenance {
                algorithm: Algorithm::ModeSeeking,
                seed: None,
            },
        )
        .unwrap();
        for (ki, k) in schedule.sizes().iter().enumerate() {
            let level_idx = clustering.level_with_k(*k).unwrap();
            let level = &clustering.levels[level_idx];
            let (ref_assignment, ref_prototypes) = &reference.levels[ki];
            assert_eq!(&level.assignment, ref_assignment, "trial {trial}, k={k}");
            assert_eq!(&level.prototypes, ref_prototypes, "trial {trial}, k={k}");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "oracle equivalence took {elapsed:.1}s, budget 10s");
    pass("criterion 1 (brute-force oracle equivalence, 20 datasets)");
}

#[test]
fn exact_oracle_on_a_hand_picked_schedule() {
    // Companion to criterion 1: the naive reference also pins a non-geometric
    // schedule on 300 random 3-D points.
    let dataset = random_dataset(77, 300, 3, 10.0);
    let schedule = NeighborhoodSchedule::from_sizes(300, vec![2, 5, 10]).unwrap();
    let reference = naive_ms(&dataset, schedule.sizes());
    let densities = compute_densities(&dataset, &schedule).unwrap();
    let links = compute_ascent_links(&dataset, &schedule, &densities).unwrap();
    for i in 0..300 {
        for ki in 0..3 {
            assert_eq!(densities.value(i, ki), reference.densities[i * 3 + ki]);
            assert_eq!(links.link(i, ki), reference.links[i * 3 + ki]);
        }
    }
}

#[test]
fn criterion_02_fms_degeneracy_bit_identical() {
    for (n, c, seed) in [(300usize, 300usize, 5u64), (2000, 2000, 9)] {
        let dataset = random_dataset(seed, n, 5, 20.0);
        let schedule = NeighborhoodSchedule::geometric(n, 2, 1.21, 0.1).unwrap();
        let ms = ms_cluster(&dataset, &schedule).unwrap();
        let fms = fms_cluster(&dataset, &schedule, c, &mut RandomSource::new(seed)).unwrap();
        assert_eq!(
            ms.levels, fms.clustering.levels,
            "n={n}: full-coverage cells must reproduce the exact algorithm"
        );
        assert!(fms.stats.clamp_counts.iter().all(|&(_, hits)| hits == 0));
    }
    pass("criterion 2 (FMS with c >= m is bit-identical to MS)");
}

#[test]
fn criterion_03_fms_approximation_quality() {
    let n = 10_000;
    let dataset = gaussian_mixture(42, n, 8, 20, 10.0, 1.0);
    let schedule = NeighborhoodSchedule::geometric(n, 2, 1.21, 0.1).unwrap();
    let ms = ms_cluster(&dataset, &schedule).unwrap();
    let fms = fms_cluster(&dataset, &schedule, 6, &mut RandomSource::new(7))
        .unwrap()
        .clustering;

    let mut checked = 0;
    for &k in schedule.sizes().iter().filter(|&&k| k <= 20) {
        let ms_count = ms.levels[ms.level_with_k(k).unwrap()].num_clusters() as f64;
        let fms_count = fms.levels[fms.level_with_k(k).unwrap()].num_clusters() as f64;
        let deviation = (fms_count - ms_count).abs() / ms_count;
        println!(
            "  k={k}: MS {ms_count} clusters, FMS-6 {fms_count} clusters, deviation {:.3}",
            deviation
        );
        assert!(
            deviation <= 0.10,
            "k={k}: cluster-count deviation {deviation:.3} exceeds 0.10"
        );
        checked += 1;
    }
    assert!(checked >= 5, "schedule covered only {checked} sizes below 21");
    pass("criterion 3 (FMS-6 cluster counts within 10% of MS for k <= 20)");
}

#[test]
fn criterion_05_degenerate_neighborhood_sizes() {
    for trial in 0..10u64 {
        let n = 20 + (trial as usize * 13) % 100;
        let dataset = random_dataset(300 + trial, n, 3, 10.0);
        let schedule = NeighborhoodSchedule::from_sizes(n, vec![1, n]).unwrap();
        let clustering = ms_cluster(&dataset, &schedule).unwrap();
        let coarse = &clustering.levels[0];
        let fine = &clustering.levels[1];
        assert_eq!(coarse.k, n);
        assert_eq!(coarse.num_clusters(), 1, "k=n must give one cluster");
        assert_eq!(fine.k, 1);
        assert_eq!(fine.num_clusters(), n, "k=1 must give n singletons");
    }
    pass("criterion 5 (k=n gives 1 cluster, k=1 gives n clusters, 10 datasets)");
}

#[test]
fn criterion_06_nmi_properties() {
    // Identity clustering on balanced classes.
    let labels: Vec<u32> = (0..120).map(|i| i % 4).collect();
    assert!((nmi(&labels, &labels).unwrap() - 1.0).abs() <= 1e-12);
    // Single cluster, multiple classes.
    assert_eq!(nmi(&vec![0u32; 120], &labels).unwrap(), 0.0);
    // Singleton clusters.
    let singletons: Vec<u32> = (0..120).collect();
    assert!((nmi(&singletons, &labels).unwrap() - 1.0).abs() <= 1e-12);

    // Direct double-summation oracle on 50 random instances.
    let mut rng = RandomSource::new(60);
    for trial in 0..50 {
        let n = 40 + rng.usize_below(60);
        let clusters = 2 + rng.usize_below(8);
        let classes = 2 + rng.usize_below(5);
        let a: Vec<u32> = (0..n).map(|_| rng.usize_below(clusters) as u32).collect();
        let b: Vec<u32> = (0..n).map(|_| rng.usize_below(classes) as u32).collect();
        let got = nmi(&a, &b).unwrap();

        let nf = n as f64;
        let mut joint = vec![0.0f64; clusters * classes];
        let mut pa = vec![0.0f64; clusters];
        let mut pb = vec![0.0f64; classes];
        for i in 0..n {
            joint[a[i] as usize * classes + b[i] as usize] += 1.0 / nf;
            pa[a[i] as usize] += 1.0 / nf;
            pb[b[i] as usize] += 1.0 / nf;
        }
        let mut information = 0.0;
        for ci in 0..clusters {
            for cj in 0..classes {
                let p = joint[ci * classes + cj];
                if p > 0.0 {
                    information += p * (p / (pa[ci] * pb[cj])).ln();
                }
            }
        }
        let entropy =
            |ps: &[f64]| -> f64 { ps.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum() };
        let h_min = entropy(&pa).min(entropy(&pb));
        let want = if h_min == 0.0 {
            if entropy(&pa) == 0.0 && entropy(&pb) == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            information / h_min
        };
        assert!(
            (got - want).abs() <= 1e-12,
            "trial {trial}: {got} vs oracle {want}"
        );

        // Symmetry and relabeling invariance (full property test runs in the
        // unit suite).
        assert!((nmi(&b, &a).unwrap() - got).abs() <= 1e-12);
        let relabeled: Vec<u32> = a.iter().map(|&c| (clusters as u32 - 1) - c).collect();
        assert!((nmi(&relabeled, &b).unwrap() - got).abs() <= 1e-12);
    }
    pass("criterion 6 (NMI identities, oracle equality, symmetry/relabeling)");
}

#[test]
fn criterion_07_confidence_propagation() {
    let n = 50;
    let classes = 3;
    let labels: Vec<u32> = (0..n as u32).map(|i| i % classes as u32).collect();
    let alphabet = modeseek::LabelAlphabet::from_names(["a", "b", "c"]);
    let dataset = random_dataset(11, n, 2, 1.0)
        .with_labels(labels.clone(), alphabet)
        .unwrap();
    let clustering = random_multilevel(13, n, &[3, 8, 17, 33]);

    // Library propagation from the coarsest level.
    let mut oracle = LabelOracle::ground_truth(&dataset).unwrap();
    let prop = propagate_confidences(&clustering, 0, &mut oracle).unwrap();
    assert!(
        prop.confidences.max_row_sum_error() <= 1e-9,
        "rows must stay stochastic"
    );

    // Dense averaging-matrix chain product, computed independently.
    let mut oracle2 = LabelOracle::ground_truth(&dataset).unwrap();
    let initial = active_label(&clustering.levels[0], &mut oracle2).unwrap();
    let mut q: Vec<f64> = vec![0.0; n * classes];
    for (i, label) in initial.object_labels.iter().enumerate() {
        q[i * classes + label.unwrap() as usize] = 1.0;
    }
    for level in &clustering.levels[1..] {
        let clusters = level.num_clusters();
        let mut a = vec![0.0f64; n * n];
        for c in 0..clusters as u32 {
            let members: Vec<usize> = (0..n)
                .filter(|&i| level.assignment[i] == c)
                .collect();
            let w = 1.0 / members.len() as f64;
            for &t in &members {
                for &t2 in &members {
                    a[t * n + t2] = w;
                }
            }
        }
        let mut next = vec![0.0f64; n * classes];
        for i in 0..n {
            for j in 0..classes {
                let mut acc = 0.0;
                for t in 0..n {
                    acc += a[i * n + t] * q[t * classes + j];
                }
                next[i * classes + j] = acc;
            }
        }
        q = next;
        // Row stochasticity holds at every link of the chain.
        for i in 0..n {
            let sum: f64 = q[i * classes..(i + 1) * classes].iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
        }
    }
    for i in 0..n {
        for j in 0..classes {
            let got = prop.confidences.row(i)[j];
            let want = q[i * classes + j];
            assert!(
                (got - want).abs() <= 1e-12,
                "dense chain mismatch at ({i},{j}): {got} vs {want}"
            );
        }
    }

    // Single-level propagation equals plain active labeling exactly.
    let single = MultiLevelClustering::new(
        vec![clustering.levels[1].clone()],
        clustering.provenance.clone(),
    );
    let mut oracle3 = LabelOracle::ground_truth(&dataset).unwrap();
    let single_prop = propagate_confidences(&single, 0, &mut oracle3).unwrap();
    let mut oracle4 = LabelOracle::ground_truth(&dataset).unwrap();
    let al = active_label(&single.levels[0], &mut oracle4).unwrap();
    for (p, l) in single_prop
        .confidences
        .predictions()
        .iter()
        .zip(&al.object_labels)
    {
        assert_eq!(Some(*p), *l);
    }

    // Stochasticity survives a long mixed chain as well.
    let deep = random_multilevel(99, n, &[2, 4, 7, 12, 20, 33, 44]);
    let mut conf = ConfidenceMatrix::one_hot(
        &active_label(
            &deep.levels[0],
            &mut LabelOracle::ground_truth(&dataset).unwrap(),
        )
        .unwrap(),
        classes,
    )
    .unwrap();
    for level in &deep.levels[1..] {
        conf = cluster_average(level, &conf);
        assert!(conf.max_row_sum_error() <= 1e-9);
    }

    pass("criterion 7 (row-stochastic propagation equals dense chain product)");
}

#[test]
fn criterion_08_nesting() {
    // Strict inclusion on random instances; nested input is a fixpoint.
    for seed in [3u64, 17, 29] {
        let clustering = random_multilevel(seed, 60, &[4, 9, 21, 40]);
        let nested = nest_levels(&clustering);
        nested.validate().unwrap();
        for pair in nested.levels.windows(2) {
            let (coarse, fine) = (&pair[0], &pair[1]);
            for members in fine.members() {
                let mut targets: Vec<u32> = members
                    .iter()
                    .map(|&obj| coarse.assignment[obj as usize])
                    .collect();
                targets.dedup();
                assert_eq!(targets.len(), 1, "fine cluster straddles coarse clusters");
            }
        }
        assert_eq!(nest_levels(&nested).levels, nested.levels, "not a fixpoint");
    }

    // Prototype rule: kept when still a member.
    let fine = ClusteringLevel {
        k: 2,
        assignment: vec![0, 0, 1, 1],
        prototypes: vec![0, 2],
    };
    let coarse = ClusteringLevel {
        k: 4,
        assignment: vec![0, 1, 0, 1],
        prototypes: vec![0, 1],
    };
    let clustering = MultiLevelClustering::new(
        vec![coarse, fine],
        Provenance {
            algorithm: Algorithm::ModeSeeking,
            seed: None,
        },
    );
    let nested = nest_levels(&clustering);
    assert_eq!(nested.levels[0].assignment, vec![0, 0, 0, 0]);
    assert_eq!(nested.levels[0].prototypes, vec![0]);

    // Prototype rule: replaced by the largest constituting fine cluster when
    // the original prototype drifts away (tie to the lower fine index).
    let fine = ClusteringLevel {
        k: 2,
        assignment: vec![0, 0, 1, 1, 2, 2],
        prototypes: vec![0, 2, 4],
    };
    let coarse = ClusteringLevel {
        k: 6,
        assignment: vec![0, 1, 1, 1, 1, 0],
        prototypes: vec![5, 2],
    };
    let clustering = MultiLevelClustering::new(
        vec![coarse, fine],
        Provenance {
            algorithm: Algorithm::ModeSeeking,
            seed: None,
        },
    );
    let nested = nest_levels(&clustering);
    assert_eq!(nested.levels[0].assignment, vec![0, 0, 1, 1, 1, 1]);
    assert_eq!(nested.levels[0].prototypes, vec![0, 2]);

    pass("criterion 8 (nesting: strict inclusion, fixpoint, prototype rules)");
}

#[test]
fn criterion_09_oracle_budget() {
    let n = 200;
    let labels: Vec<u32> = (0..n as u32).map(|i| i % 5).collect();
    let alphabet = modeseek::LabelAlphabet::from_names(["a", "b", "c", "d", "e"]);
    let dataset = random_dataset(21, n, 2, 1.0)
        .with_labels(labels, alphabet)
        .unwrap();
    for counts in [vec![7usize], vec![3, 19, 64]] {
        let clustering = random_multilevel(5, n, &counts);
        for level in &clustering.levels {
            let mut oracle = LabelOracle::ground_truth(&dataset).unwrap();
            let al = active_label(level, &mut oracle).unwrap();
            assert_eq!(al.queries, level.num_clusters(), "query count must equal N exactly");
            assert_eq!(oracle.queries_used(), level.num_clusters());
            // A second pass over the same level adds nothing.
            let again = active_label(level, &mut oracle).unwrap();
            assert_eq!(again.queries, 0);
            assert_eq!(oracle.queries_used(), level.num_clusters());
        }
    }
    pass("criterion 9 (active labeling queries exactly one oracle call per cluster)");
}

#[test]
fn criterion_10_kmeans_accounting() {
    let dataset = gaussian_mixture(31, 600, 4, 6, 8.0, 1.0);
    let options = KMeansOptions {
        max_iterations: 50,
        time_budget: None,
    };
    for (k, seed) in [(1usize, 0u64), (7, 1), (23, 2)] {
        let result = kmeans_cluster(&dataset, k, &options, &mut RandomSource::new(seed)).unwrap();
        let eta = result.iterations_used as u64;
        assert_eq!(
            result.distance_computations,
            (eta * k as u64 + 1) * 600,
            "distance counter must equal (eta*k + 1)*n"
        );
        for w in result.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "objective must not increase");
        }
        let mut sizes = vec![0usize; k];
        for &c in &result.assignment {
            sizes[c as usize] += 1;
        }
        assert!(sizes.iter().all(|&s| s > 0), "all {k} clusters must survive");
        assert_eq!(result.medoids.len(), k);
    }
    pass("criterion 10 (kMeans accounting, monotone objective, exact k)");
}

#[test]
fn criterion_11_mnist_reproduction() {
    let Some(dir) = std::env::var_os("MODESEEK_MNIST_DIR") else {
        skip(
            "criterion 11 (MNIST reproduction)",
            "set MODESEEK_MNIST_DIR to a directory with mnist8x8.f32 + mnist8x8.labels",
        );
        return;
    };
    let dir = std::path::PathBuf::from(dir);
    let mut spec = DatasetFile::new(dir.join("mnist8x8.f32"), DataFormat::RawF32);
    spec.label_file = Some(dir.join("mnist8x8.labels"));
    let dataset = load_dataset(&spec).expect("MNIST raw-f32 pair must parse");
    assert_eq!(dataset.dim(), 64, "expected 8x8 vectors");

    // Leave-one-out nearest neighbor error.
    let all: Vec<usize> = (0..dataset.len()).collect();
    let preds: Vec<Option<u32>> = nn1_classify(&dataset, &all, &all, true)
        .unwrap()
        .into_iter()
        .map(Some)
        .collect();
    let error = classification_error(&preds, dataset.label_values().unwrap()).unwrap();
    println!("  leave-one-out 1NN error: {error:.4}");
    assert!(
        (error - 0.020).abs() <= 0.005,
        "LOO 1NN error {error:.4} outside 0.020 +/- 0.005"
    );

    // Full multi-level clustering in the expected time class.
    let schedule = NeighborhoodSchedule::geometric(dataset.len(), 2, 1.21, 0.1).unwrap();
    let started = Instant::now();
    let out = fms_cluster(&dataset, &schedule, 6, &mut RandomSource::new(1)).unwrap();
    let seconds = started.elapsed().as_secs_f64();
    println!(
        "  FMS-6 multilevel clustering: {seconds:.1}s, {} levels",
        out.clustering.levels.len()
    );
    assert!(
        seconds <= 146.0,
        "FMS-6 took {seconds:.1}s, above 10x the expected 14.6s class"
    );
    pass("criterion 11 (MNIST: LOO 1NN error and FMS-6 runtime class)");
}

#[test]
fn criterion_12_active_learning_direction() {
    // 10-class synthetic surrogate with overlapping components.
    let n = 10_000;
    let dataset = gaussian_mixture(77, n, 8, 10, 2.0, 1.0);
    let schedule = NeighborhoodSchedule::geometric(n, 2, 1.21, 0.1).unwrap();
    let fms = fms_cluster(&dataset, &schedule, 6, &mut RandomSource::new(3))
        .unwrap()
        .clustering;

    let level_index = fms.level_closest_to_budget(1000);
    let level = &fms.levels[level_index];
    let budget = level.num_clusters();
    let mut oracle = LabelOracle::ground_truth(&dataset).unwrap();
    let al = active_label(level, &mut oracle).unwrap();
    let truth = dataset.label_values().unwrap();
    let al_error = classification_error(&al.object_labels, truth).unwrap();

    let mut baseline_total = 0.0;
    let reps = 10;
    let base_rng = RandomSource::new(55);
    let queries: Vec<usize> = (0..n).collect();
    for rep in 0..reps {
        let mut rng = base_rng.child(rep);
        let train = rng.sample_indices(n, budget);
        let preds: Vec<Option<u32>> = nn1_classify(&dataset, &train, &queries, false)
            .unwrap()
            .into_iter()
            .map(Some)
            .collect();
        baseline_total += classification_error(&preds, truth).unwrap();
    }
    let baseline_error = baseline_total / reps as f64;
    println!(
        "  budget {budget}: FMS-AL error {al_error:.4}, Random-1NN error {baseline_error:.4}"
    );
    assert!(
        al_error < baseline_error,
        "FMS-AL ({al_error:.4}) should beat Random-1NN ({baseline_error:.4}) at {budget} labels"
    );
    pass("criterion 12 (FMS-AL beats Random-1NN at the ~1000-label budget)");
}
