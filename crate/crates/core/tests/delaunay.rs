mod common;

use common::*;
use dwtest::delaunay::{self, brute_force_delaunay_excluding, verify_empty_ball, DEFAULT_ETA};
use dwtest::manifold::EmbeddedCloud;
use ndarray::array;
use proptest::prelude::*;

fn check_against_brute_force(cloud: &EmbeddedCloud) {
    let located = located_simplices(cloud, DEFAULT_ETA);
    for (i, s) in located.iter().enumerate() {
        assert!(verify_empty_ball(cloud, s, Some(i)).unwrap(), "query {i}: {s:?} is not Delaunay");
        let tri = brute_force_delaunay_excluding(cloud, Some(i)).unwrap();
        assert!(tri.contains(s), "query {i}: {s:?} not in brute-force triangulation");
        let p = hull_projection_oracle(cloud, i, &tri);
        assert!(contains(cloud, s, &p, 1e-9), "query {i}: {s:?} misses the hull projection");
    }
}

#[test]
fn small_clouds_match_brute_force() {
    for d in 1..=3 {
        for seed in 0..5 {
            let n = [12, 20, 30][d - 1];
            check_against_brute_force(&gaussian_cloud(n, d, 100 * d as u64 + seed));
        }
    }
}

#[test]
fn quadrilateral_with_interior_and_exterior_points() {
    let cloud = EmbeddedCloud::new(array![[0.0, 0.0], [4.0, 0.3], [3.7, 3.1], [0.2, 3.6], [1.9, 1.4], [6.0, 5.0]]).unwrap();
    check_against_brute_force(&cloud);
}

#[test]
fn interior_queries_contain_themselves() {
    let cloud = gaussian_cloud(60, 2, 5);
    let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    let mut interior = 0;
    for (i, row) in w.rows().iter().enumerate() {
        if contains(&cloud, row.simplex(), cloud.point(i), 1e-9) {
            interior += 1;
            assert!(dwtest::linalg::dist(row.projection(), cloud.point(i)) < 1e-9);
        }
    }
    assert!(interior > 30);
}

#[test]
fn exterior_projection_is_optimal() {
    let cloud = gaussian_cloud(40, 3, 8);
    let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    for (i, row) in w.rows().iter().enumerate() {
        let z = cloud.point(i);
        let p = row.projection();
        let dz: Vec<f64> = z.iter().zip(p).map(|(a, b)| a - b).collect();
        for &v in row.simplex().vertices() {
            let dv: Vec<f64> = cloud.point(v).iter().zip(p).map(|(a, b)| a - b).collect();
            assert!(dwtest::linalg::dot(&dz, &dv) <= 1e-8, "row {i}");
        }
    }
}

#[test]
fn high_dimensional_rows_hold_invariants() {
    for (n, d) in [(100, 20), (120, 50)] {
        let cloud = gaussian_cloud(n, d, 77);
        let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
        assert_eq!(row_invariant_failure(&w, &cloud), None);
    }
}

#[test]
fn weights_are_similarity_invariant() {
    let cloud = gaussian_cloud(50, 3, 21);
    let moved = EmbeddedCloud::new(cloud.coords().mapv(|v| 3.5 * v + 2.0)).unwrap();
    let a = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    let b = delaunay::weight_matrix(&moved, DEFAULT_ETA).unwrap();
    for i in 0..cloud.n() {
        assert_eq!(a.row(i).simplex(), b.row(i).simplex());
        for &(j, v) in a.row(i).entries() {
            assert!((v - b.get(i, j)).abs() < 1e-9);
        }
    }
}

#[test]
fn located_simplices_do_not_depend_on_eta() {
    let cloud = gaussian_cloud(80, 4, 3);
    let base = located_simplices(&cloud, 10.0);
    assert_eq!(located_simplices(&cloud, 5.0), base);
    assert_eq!(located_simplices(&cloud, 20.0), base);
}

#[test]
fn neighborhood_sizes_cover_the_simplex() {
    let cloud = gaussian_cloud(30, 2, 1);
    let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
    let sizes = w.neighborhood_sizes();
    assert!(sizes.iter().all(|&s| s >= 1 && s <= cloud.n()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_clouds_give_stochastic_rows(seed in 0u64..10_000, d in 1usize..6, extra in 2usize..40) {
        let cloud = uniform_cube_cloud(d + extra, d, seed);
        let w = delaunay::weight_matrix(&cloud, DEFAULT_ETA).unwrap();
        prop_assert_eq!(row_invariant_failure(&w, &cloud), None);
    }
}
