mod common;

use common::*;
use dwtest::baselines::{self, EnergyStatistic, KnnStatistic, MmdStatistic, TwoSampleStatistic};
use dwtest::delaunay::{self, WeightMatrix, DEFAULT_ETA};
use dwtest::dwtest as dw;
use dwtest::permutation::{self, permuted_labels};
use dwtest::{dataset, manifold, rng};
use ndarray::Array2;
use rand::seq::SliceRandom;

fn labels_half(n: usize) -> Vec<u8> {
    (0..n).map(|i| (i < n / 2) as u8).collect()
}

#[test]
fn permutation_p_values_are_uniform_under_exchangeable_labels() {
    let cloud = gaussian_cloud(40, 2, 1);
    let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    let base = labels_half(40);
    let ps: Vec<f64> = (0..2000u64)
        .map(|r| {
            let labels = permuted_labels(&base, 99, r);
            dw::permutation_test(&w, &labels, 200, r).unwrap().p_value
        })
        .collect();
    assert!(ks_uniform(&ps) < 0.05, "ks {}", ks_uniform(&ps));
}

#[test]
fn statistic_is_invariant_under_index_relabeling() {
    let cloud = gaussian_cloud(30, 3, 2);
    let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    let labels = labels_half(30);
    let mut perm: Vec<usize> = (0..30).collect();
    perm.shuffle(&mut rng::seeded(4));
    // Point i moves to position perm[i].
    let dense = w.to_dense();
    let mut moved = Array2::zeros((30, 30));
    let mut moved_labels = vec![0u8; 30];
    for i in 0..30 {
        moved_labels[perm[i]] = labels[i];
        for j in 0..30 {
            moved[[perm[i], perm[j]]] = dense[[i, j]];
        }
    }
    let wp = WeightMatrix::from_dense(&moved).unwrap();
    let a = dw::statistic(&w, &labels).unwrap();
    let b = dw::statistic(&wp, &moved_labels).unwrap();
    assert!((a - b).abs() < 1e-12);
    let ma = dw::null_moments(&w, 15, 15).unwrap();
    let mb = dw::null_moments(&wp, 15, 15).unwrap();
    assert!((ma.variance - mb.variance).abs() < 1e-12);
}

#[test]
fn moments_match_enumeration_for_delaunay_weights() {
    for seed in 0..3 {
        let cloud = gaussian_cloud(8, 2, 40 + seed);
        let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
        let (mean, var) = enumerate_moments(&w, 4);
        let m = dw::null_moments(&w, 4, 4).unwrap();
        assert!((mean - m.mean).abs() < 1e-10);
        assert!((var - m.variance).abs() < 1e-10);
    }
}

#[test]
fn z_test_agrees_with_permutation_decisions() {
    let mut agree = 0;
    let reps = 60;
    for r in 0..reps {
        let sample = dataset::gen_gaussian_null(100, 100, 5, 700 + r).unwrap();
        let emb = manifold::embed(sample.points().view(), Some(5), None).unwrap();
        let w = delaunay::weight_matrix(&emb.cloud, DEFAULT_ETA).unwrap();
        let z = dw::z_test(&w, sample.labels()).unwrap();
        let p = dw::permutation_test(&w, sample.labels(), 200, r).unwrap();
        if (z.p_value <= 0.05) == (p.p_value <= 0.05) {
            agree += 1;
        }
    }
    assert!(agree as f64 >= 0.9 * reps as f64, "{agree}/{reps}");
}

#[test]
fn baselines_are_invariant_under_rigid_motion_and_relabeling() {
    let sample = dataset::gen_gaussian_null(15, 15, 4, 3).unwrap();
    let pts = sample.points();
    let labels = sample.labels();
    // Rotate the first two coordinates and translate everything.
    let (c, s) = (0.6f64, 0.8f64);
    let mut moved = pts.clone();
    for mut row in moved.rows_mut() {
        let (x, y) = (row[0], row[1]);
        row[0] = c * x - s * y + 3.0;
        row[1] = s * x + c * y - 1.0;
        row[2] += 0.5;
    }
    let pairs: [(Box<dyn TwoSampleStatistic>, Box<dyn TwoSampleStatistic>); 3] = [
        (Box::new(KnnStatistic::new(pts.view(), 5).unwrap()), Box::new(KnnStatistic::new(moved.view(), 5).unwrap())),
        (Box::new(EnergyStatistic::new(pts.view())), Box::new(EnergyStatistic::new(moved.view()))),
        (
            Box::new(MmdStatistic::new(pts.view(), 4, 1.0).unwrap()),
            Box::new(MmdStatistic::new(moved.view(), 4, 1.0).unwrap()),
        ),
    ];
    for (a, b) in &pairs {
        assert!((a.evaluate(labels) - b.evaluate(labels)).abs() < 1e-9, "{}", a.name());
    }

    let mut order: Vec<usize> = (0..30).collect();
    order.reverse();
    let shuffled = pts.select(ndarray::Axis(0), &order);
    let shuffled_labels: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
    let e1 = baselines::energy_statistic(pts.view(), labels).unwrap();
    let e2 = baselines::energy_statistic(shuffled.view(), &shuffled_labels).unwrap();
    assert!((e1 - e2).abs() < 1e-12);
    let m1 = baselines::mmd_statistic(pts.view(), labels, 4, 1.0).unwrap();
    let m2 = baselines::mmd_statistic(shuffled.view(), &shuffled_labels, 4, 1.0).unwrap();
    assert!((m1 - m2).abs() < 1e-12);
}

#[test]
fn mmd_bandwidth_for_twenty_dimensions() {
    let sample = dataset::gen_gaussian_null(50, 50, 20, 5).unwrap();
    let h = baselines::mmd_bandwidth(sample.points().view(), 20, 1.0).unwrap();
    let total_var: f64 = sample.points().var_axis(ndarray::Axis(0), 1.0).sum();
    assert!((h - total_var.sqrt() * 100f64.powf(-1.0 / 22.0)).abs() < 1e-12);
    // Total variance is close to d for standard normal data.
    assert!((h - 20f64.sqrt() * 100f64.powf(-1.0 / 22.0)).abs() < 0.5);
}

#[test]
fn wrapped_baselines_are_uniform_under_the_null() {
    let sample = dataset::gen_gaussian_null(20, 20, 3, 8).unwrap();
    let stat = EnergyStatistic::new(sample.points().view());
    let ps: Vec<f64> = (0..500u64)
        .map(|r| {
            let labels = permuted_labels(sample.labels(), 5, r);
            permutation::permutation_test(&stat, &labels, 99, 1000 + r).unwrap().p_value
        })
        .collect();
    assert!(ks_uniform(&ps) < 0.08);
}

#[test]
fn image_pipeline_runs_end_to_end() {
    let template = dataset::ImageTemplate::synthetic_digit();
    let sample = dataset::gen_image_sample(&template, dataset::ImageScenario::Location, 40, 40, 2).unwrap();
    let cfg = dw::DwConfig { d: Some(3), permutations: 99, seed: 1, ..dw::DwConfig::default() };
    let res = dw::run_dw_test(&sample, &cfg).unwrap();
    assert!(res.p_value > 0.0 && res.p_value <= 1.0);
    assert_eq!(res.param("d_used"), Some("3"));
}
