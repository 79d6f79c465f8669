mod common;

use common::{adjusted_rand_index, random_points, rng, two_blobs};
use diffmap::datasets::generate_helix;
use diffmap::embedding::{diffusion_distance, diffusion_map, kmeans_cluster, relative_embedding_error};
use diffmap::kernel::gaussian_kernel_matrix;
use diffmap::spectral::{deterministic_model, symmetric_matrix};
use diffmap::{DataMatrix, EigenSolver, EmbeddingParams, SpectralModel};
use proptest::prelude::*;
use rand::Rng;

fn model_for(x: &DataMatrix, sigma: f64, d: usize) -> SpectralModel {
    let k = gaussian_kernel_matrix(x, sigma).unwrap();
    let deg = k.row_sums();
    let a = symmetric_matrix(&k, &deg).unwrap();
    deterministic_model(a.as_ref(), &deg, d, EigenSolver::Dense).unwrap()
}

fn helix_model() -> SpectralModel {
    model_for(&generate_helix(300, 0.05, 1).unwrap(), 0.5, 12)
}

fn column_norm(e: &diffmap::DiffusionEmbedding, c: usize) -> f64 {
    (0..e.n()).map(|i| e.coords[(i, c)].powi(2)).sum::<f64>().sqrt()
}

#[test]
fn doubling_t_scales_columns_by_half_power() {
    let model = helix_model();
    for t in [1.0, 2.5, 7.0] {
        let e1 = diffusion_map(&model, &EmbeddingParams::new(t, 10)).unwrap();
        let e2 = diffusion_map(&model, &EmbeddingParams::new(2.0 * t, 10)).unwrap();
        for c in 0..10 {
            // Recomputed directly from the eigenvalue, not from the weights.
            let factor = model.eigenvalues[c].powf(t / 2.0);
            let got = column_norm(&e2, c);
            let want = factor * column_norm(&e1, c);
            assert!((got - want).abs() <= 1e-12 * want.max(1e-300), "t={t} c={c}");
        }
    }
}

#[test]
fn distance_matches_termwise_sum() {
    let model = helix_model();
    let t = 3.0;
    let e = diffusion_map(&model, &EmbeddingParams::new(t, 8)).unwrap();
    let psi = &model.eigenvectors_markov;
    let mut r = rng(7);
    for _ in 0..50 {
        let (i, j) = (r.random_range(0..300), r.random_range(0..300));
        let oracle: f64 = (0..8)
            .map(|c| model.eigenvalues[c].powf(t) * (psi[(i, c)] - psi[(j, c)]).powi(2))
            .sum();
        let got = diffusion_distance(&e, i, j).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle.max(1e-12), "({i}, {j})");
        assert_eq!(got, diffusion_distance(&e, j, i).unwrap());
    }
    assert_eq!(diffusion_distance(&e, 5, 5).unwrap(), 0.0);
    assert!(diffusion_distance(&e, 0, 300).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_root_obeys_triangle_inequality(i in 0usize..120, j in 0usize..120, k in 0usize..120, t in 0.5f64..20.0) {
        let x = random_points(120, 3, 4);
        let model = model_for(&x, 0.3, 6);
        let e = diffusion_map(&model, &EmbeddingParams::new(t, 6)).unwrap();
        let d = |a, b| diffusion_distance(&e, a, b).unwrap().sqrt();
        prop_assert!(d(i, k) <= d(i, j) + d(j, k) + 1e-12);
    }
}

#[test]
fn trivial_component_is_constant() {
    let model = helix_model();
    let v: Vec<f64> = (0..300).map(|i| model.eigenvectors_markov[(i, 0)]).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    assert!(sd / mean.abs() < 1e-6, "coefficient of variation {}", sd / mean.abs());

    let kept = diffusion_map(&model, &EmbeddingParams::new(1.0, 5).drop_trivial(true)).unwrap();
    assert_eq!(kept.component_eigenvalues, model.eigenvalues[1..6].to_vec());
}

#[test]
fn zeroed_column_error_is_its_share_of_the_norm() {
    let model = helix_model();
    let reference = diffusion_map(&model, &EmbeddingParams::new(1.0, 6)).unwrap();
    let mut approx = reference.clone();
    for i in 0..approx.n() {
        approx.coords[(i, 3)] = 0.0;
    }
    let total: f64 = (0..6).map(|c| column_norm(&reference, c).powi(2)).sum::<f64>().sqrt();
    let want = column_norm(&reference, 3) / total;
    let got = relative_embedding_error(&reference, &approx).unwrap();
    assert!((got - want).abs() < 1e-14);

    let mut flipped = reference.clone();
    for i in 0..flipped.n() {
        for c in 0..6 {
            flipped.coords[(i, c)] = -flipped.coords[(i, c)];
        }
    }
    assert_eq!(relative_embedding_error(&reference, &flipped).unwrap(), 0.0);
}

#[test]
fn kmeans_inertia_never_increases() {
    let x = random_points(500, 3, 12);
    let model = model_for(&x, 0.2, 8);
    let e = diffusion_map(&model, &EmbeddingParams::new(1.0, 7).drop_trivial(true)).unwrap();
    for (k, seed) in [(2, 0u64), (5, 1), (9, 2), (20, 3)] {
        let c = kmeans_cluster(&e, k, seed, 100).unwrap();
        for w in c.inertia_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "k={k}: {:?}", c.inertia_history);
        }
        let mut counts = vec![0; k];
        for &l in &c.labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&n| n > 0));
    }
}

#[test]
fn separated_blobs_are_recovered() {
    for seed in 0..3 {
        let (x, truth) = two_blobs(200, 6.0, 0.5, seed);
        let model = model_for(&x, 1.0, 6);
        let e = diffusion_map(&model, &EmbeddingParams::new(100.0, 4).drop_trivial(true)).unwrap();
        let c = kmeans_cluster(&e, 2, seed, 100).unwrap();
        assert_eq!(adjusted_rand_index(&c.labels, &truth), 1.0, "seed {seed}");
    }
}
