//! Fits Gaussian mixtures with EM and prints the log-likelihood trace.
//!
//!     cargo run --example gmm_fit

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use atlascut::stats::fit_gmm_traced;

fn main() -> atlascut::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let parts = [(30.0, 8.0, 0.5), (80.0, 10.0, 0.2), (170.0, 15.0, 0.3)];
    let samples: Vec<f64> = (0..3000)
        .map(|_| {
            let u: f64 = rng.random();
            let (m, s, _) = if u < 0.5 { parts[0] } else if u < 0.7 { parts[1] } else { parts[2] };
            Normal::new(m, s).unwrap().sample(&mut rng)
        })
        .collect();

    for k in 1..=4 {
        let (m, trace) = fit_gmm_traced(&samples, k, 0)?;
        println!(
            "K={k}: {} iterations, converged {}, mean log-likelihood {:.4}",
            trace.iterations,
            trace.converged,
            trace.log_likelihood.last().copied().unwrap_or(f64::NAN)
        );
        for j in 0..m.k() {
            println!(
                "    w {:.3}  mean {:7.2}  sd {:6.2}",
                m.weights()[j],
                m.means()[j],
                m.variances()[j].sqrt()
            );
        }
    }
    Ok(())
}
