use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use atlascut::stats::{fit_gaussian, fit_gmm, fit_gmm_traced};

#[test]
fn two_clusters_of_three() {
    let samples = [0.0, 0.0, 0.0, 10.0, 10.0, 10.0];
    let m = fit_gmm(&samples, 2, 0).unwrap();
    let mut means = m.means().to_vec();
    means.sort_by(f64::total_cmp);
    assert!(means[0].abs() < 1e-6 && (means[1] - 10.0).abs() < 1e-6, "{means:?}");
    for w in m.weights() {
        assert!((w - 0.5).abs() < 1e-6);
    }
}

#[test]
fn log_likelihood_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for seed in 0..20 {
        let samples: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..255.0)).collect();
        let (_, trace) = fit_gmm_traced(&samples, 3, seed).unwrap();
        assert!(!trace.log_likelihood.is_empty());
        for w in trace.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn same_seed_same_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = Normal::new(100.0, 20.0).unwrap();
    let samples: Vec<f64> = (0..500).map(|_| d.sample(&mut rng)).collect();
    assert_eq!(fit_gmm(&samples, 3, 5).unwrap(), fit_gmm(&samples, 3, 5).unwrap());
}

#[test]
fn single_gaussian_is_the_sample_moments() {
    let m = fit_gaussian(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!((m.means()[0] - 2.5).abs() < 1e-12);
    assert!((m.variances()[0] - 1.25).abs() < 1e-12);
}

#[test]
fn empty_input_is_rejected() {
    assert!(fit_gmm(&[], 2, 0).is_err());
    assert!(fit_gaussian(&[]).is_err());
}
