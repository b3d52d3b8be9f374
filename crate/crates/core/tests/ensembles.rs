//! Sampler properties and calibration of the KS harness.

use rand_distr::{Distribution, StandardNormal};

use bstm_core::linalg::hermitian_eigenvalues;
use bstm_core::quad::{integrate, QuadOptions};
use bstm_core::randmat::{beta_eig_pdf, sample_beta_eigenvalues, sample_isotropic_unitary, sample_matrix_beta};
use bstm_core::statcheck::{ks_per_index, ks_two_sample, lemma4_suite, sup_distance};
use bstm_core::RngHandle;

#[test]
fn beta_is_unitarily_invariant() {
    let mut r1 = RngHandle::new(51);
    let mut r2 = RngHandle::new(52);
    let u = sample_isotropic_unitary(2, 2, &mut RngHandle::new(53));
    let a: Vec<Vec<f64>> = (0..10_000)
        .map(|_| {
            let c = sample_matrix_beta(2, 3, 2, &mut r1).unwrap();
            hermitian_eigenvalues(&(&u * c * u.adjoint()))
        })
        .collect();
    let b: Vec<Vec<f64>> = (0..10_000).map(|_| sample_beta_eigenvalues(2, 3, 2, &mut r2).unwrap()).collect();
    for r in ks_per_index("unitary invariance", &a, &b).unwrap() {
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn scalar_beta_sampler_matches_density() {
    for (p, n) in [(2, 3), (1, 1), (4, 2)] {
        let mut rng = RngHandle::new(54);
        let x: Vec<f64> = (0..10_000).map(|_| sample_beta_eigenvalues(1, p, n, &mut rng).unwrap()[0]).collect();
        let cdf = |t: f64| {
            integrate(|s| beta_eig_pdf(1, p, n, &[s]).unwrap_or(0.0), 0.0, t.clamp(0.0, 1.0), QuadOptions::default()).value
        };
        let d = sup_distance(&x, cdf).unwrap();
        assert!(d < 0.02, "p = {p}, n = {n}: {d}");
    }
}

#[test]
fn isotropic_unitary_first_entry_law() {
    // |Φ_11|² of a T×M isotropic matrix is Beta(1, T-1): CDF 1 - (1 - x)^{T-1}.
    let mut rng = RngHandle::new(55);
    let x: Vec<f64> = (0..10_000).map(|_| sample_isotropic_unitary(5, 2, &mut rng)[(0, 0)].norm_sqr()).collect();
    let d = sup_distance(&x, |t| 1.0 - (1.0 - t.clamp(0.0, 1.0)).powi(4)).unwrap();
    assert!(d < 0.02, "{d}");
}

#[test]
fn ks_calibration_under_the_null() {
    let passes = (0..100u64)
        .filter(|&s| {
            let mut r = RngHandle::new(1000 + s);
            let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
            let b: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
            ks_two_sample(&a, &b).unwrap().passed
        })
        .count();
    assert!(passes >= 95, "{passes}");
}

#[test]
fn lemma4_suite_calibration() {
    // one report per seed for the scalar case; false failures at most 5 in 100
    let failures = (0..100u64)
        .filter(|&s| !lemma4_suite(&[(1, 1, 1)], 1000, &RngHandle::new(2000 + s)).unwrap()[0].passed)
        .count();
    assert!(failures <= 5, "{failures}");
}
