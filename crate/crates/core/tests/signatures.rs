use std::f64::consts::PI;

use mfml::mesh::shapes::{bend, cylinder, icosphere};
use mfml::mesh::TriangleMesh;
use mfml::signatures::{
    compute_hks, compute_shape_dna, compute_sihks, compute_wks, scale_invariant_transform, wks_kernel_weights,
    ShapeDnaNormalization, ShapeDnaParams, SiHksParams, WksParams,
};
use mfml::spectral::{build_laplacian, EigenOptions, LaplacianOptions, SpectralBasis};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn basis(mesh: &TriangleMesh, k: usize) -> SpectralBasis {
    build_laplacian(mesh, LaplacianOptions::default()).unwrap().eigs(&EigenOptions::new(k)).unwrap()
}

/// Largest distance of any row from the mean row, relative to the mean row's norm.
fn row_spread(m: &DMatrix<f64>) -> f64 {
    let mean = m.row_mean();
    m.row_iter().map(|r| (r - &mean).norm()).fold(0.0, f64::max) / mean.norm()
}

#[test]
fn wks_rows_lie_in_unit_interval_and_weights_sum_to_one() {
    let b = basis(&cylinder(40.0, 300.0, 12, 16, 2), 60);
    let wks = compute_wks(&b, &WksParams::default()).unwrap();
    assert_eq!(wks.dim(), 100);
    assert!(wks.values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    let w = wks_kernel_weights(&b, &WksParams::default()).unwrap();
    for row in w.row_iter() {
        assert!((row.sum() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sphere_vertices_share_wks_and_sihks_rows() {
    // 100 eigenpairs close the l ≤ 9 eigenspaces, where Σ_m φ_lm² is constant on a sphere.
    let b = basis(&icosphere(4, 1000.0), 100);
    let wks = compute_wks(&b, &WksParams::default()).unwrap();
    assert!(row_spread(&wks.values) < 0.02, "WKS spread {}", row_spread(&wks.values));
    let sihks = compute_sihks(&b, &SiHksParams::default()).unwrap();
    assert_eq!(sihks.dim(), 50);
    assert!(row_spread(&sihks.values) < 0.02, "siHKS spread {}", row_spread(&sihks.values));
}

#[test]
fn bending_a_cylinder_barely_changes_wks() {
    let straight = cylinder(40.0, 500.0, 24, 24, 3);
    let bent = bend(&straight, 150.0, 200.0, PI / 3.0);
    let a = compute_wks(&basis(&straight, 100), &WksParams::default()).unwrap().values;
    let b = compute_wks(&basis(&bent, 100), &WksParams::default()).unwrap().values;
    let mean: f64 = (0..a.nrows()).map(|i| (a.row(i) - b.row(i)).norm() / a.row(i).norm()).sum::<f64>() / a.nrows() as f64;
    assert!(mean < 0.05, "mean per-vertex WKS discrepancy {mean}");
}

#[test]
fn eigenfunction_sign_flips_change_nothing() {
    let b = basis(&icosphere(2, 300.0), 60);
    let mut flipped = b.clone();
    for k in (1..60).step_by(3) {
        flipped.eigenfunctions.column_mut(k).neg_mut();
    }
    let pairs = [
        (compute_wks(&b, &WksParams::default()).unwrap().values, compute_wks(&flipped, &WksParams::default()).unwrap().values),
        (
            compute_sihks(&b, &SiHksParams::default()).unwrap().values,
            compute_sihks(&flipped, &SiHksParams::default()).unwrap().values,
        ),
        (compute_hks(&b, &[0.1, 10.0]).unwrap().values, compute_hks(&flipped, &[0.1, 10.0]).unwrap().values),
    ];
    for (x, y) in pairs {
        assert!((x - y).amax() < 1e-12);
    }
}

#[test]
fn hks_decreases_in_time() {
    let b = basis(&cylinder(40.0, 300.0, 12, 16, 2), 40);
    let times: Vec<f64> = (0..12).map(|i| 10f64.powf(i as f64 * 0.5)).collect();
    let hks = compute_hks(&b, &times).unwrap().values;
    for row in hks.row_iter() {
        assert!(row.iter().zip(row.iter().skip(1)).all(|(a, b)| b < a));
    }
}

#[test]
fn hks_of_a_constant_mode_is_constant() {
    let c = 0.5;
    let single = SpectralBasis {
        eigenvalues: vec![0.0],
        eigenfunctions: DMatrix::from_element(4, 1, c),
        mass: vec![1.0; 4],
    };
    let hks = compute_hks(&single, &[0.01, 1.0, 100.0]).unwrap().values;
    assert!(hks.iter().all(|v| (v - c * c).abs() < 1e-15));
}

#[test]
fn hks_on_the_unit_sphere_matches_the_heat_trace() {
    let b = basis(&icosphere(4, 1.0), 100);
    let t = 0.1;
    let exact: f64 = (0..10).map(|l| (2 * l + 1) as f64 / (4.0 * PI) * (-((l * (l + 1)) as f64) * t).exp()).sum();
    let hks = compute_hks(&b, &[t]).unwrap().values;
    for v in hks.iter() {
        assert!((v - exact).abs() / exact < 0.05, "HKS {v} vs {exact}");
    }
}

#[test]
fn constant_log_derivative_concentrates_at_frequency_zero() {
    let series: Vec<f64> = (0..385).map(|i| 3.0 - 0.25 * i as f64).collect();
    let out = scale_invariant_transform(&series, 50);
    assert!((out[0] - 0.25 * 384.0).abs() < 1e-9);
    assert!(out[1..].iter().all(|v| v.abs() < 1e-9));
}

#[test]
fn shape_dna_of_the_unit_sphere() {
    let b = basis(&icosphere(4, 1.0), 40);
    let dna = compute_shape_dna(&b, &ShapeDnaParams::default()).unwrap().values;
    assert_eq!(dna.len(), 40);
    assert!(dna[0].abs() < 1e-8);
    let mut l = 1;
    let mut start = 1;
    while start < 40 {
        let exact = 4.0 * PI * (l * (l + 1)) as f64;
        for v in dna.iter().skip(start).take(2 * l + 1) {
            assert!((v - exact).abs() / exact < 0.05, "l = {l}: {v} vs {exact}");
        }
        start += 2 * l + 1;
        l += 1;
    }
    assert!(dna.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn shape_dna_is_scale_invariant() {
    let mesh = cylinder(40.0, 300.0, 12, 16, 2);
    let a = compute_shape_dna(&basis(&mesh, 41), &ShapeDnaParams::default()).unwrap().values;
    let b = compute_shape_dna(&basis(&mesh.scaled(3.0), 41), &ShapeDnaParams::default()).unwrap().values;
    for (x, y) in a.iter().zip(&b).skip(1) {
        assert!((x - y).abs() / x < 1e-6);
    }
    let p = ShapeDnaParams {
        normalization: ShapeDnaNormalization::FirstEigenvalue,
        ..Default::default()
    };
    let c = compute_shape_dna(&basis(&mesh, 41), &p).unwrap().values;
    assert!(c.windows(2).all(|w| w[1] >= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sihks_is_scale_invariant(s in 0.5f64..2.0) {
        let mesh = icosphere(3, 1000.0).map_vertices(|[x, y, z]| [x, 0.8 * y, 0.6 * z]);
        let a = compute_sihks(&basis(&mesh, 100), &SiHksParams::default()).unwrap().values;
        let b = compute_sihks(&basis(&mesh.scaled(s), 100), &SiHksParams::default()).unwrap().values;
        for i in 0..a.nrows() {
            let rel = (a.row(i) - b.row(i)).norm() / a.row(i).norm();
            prop_assert!(rel < 1e-3, "vertex {} relative change {}", i, rel);
        }
    }
}
