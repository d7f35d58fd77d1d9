//! Binary segmentation of a noisy square with a contrast-weighted graph cut,
//! compared against thresholding alone.
//!
//!     cargo run --example graph_cut

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use atlascut::graphcut::{solve, EnergyField};
use atlascut::grid::{Grid2, LabelMask};
use atlascut::stats::{neg_log_likelihood_field, GaussianMixture};

fn main() -> atlascut::Result<()> {
    let n = 48;
    let truth = LabelMask::from_fn(n, n, |x, y| (12..36).contains(&x) && (12..36).contains(&y));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 35.0).unwrap();
    let pixels = Grid2::from_fn(n, n, |x, y| {
        let base = if *truth.get(x, y) { 170.0 } else { 90.0 };
        base + noise.sample(&mut rng)
    });

    let fg = neg_log_likelihood_field(&pixels, &GaussianMixture::single(170.0, 35.0 * 35.0)?, None);
    let bg = neg_log_likelihood_field(&pixels, &GaussianMixture::single(90.0, 35.0 * 35.0)?, None);
    let threshold = LabelMask::from_fn(n, n, |x, y| fg.get(x, y) < bg.get(x, y));

    for tau in [1.0, 8.0, 32.0, 64.0] {
        let e = EnergyField::with_contrast(fg.clone(), bg.clone(), &pixels, tau)?;
        let cut = solve(&e, None)?;
        println!(
            "tau {tau:>3}: {:>4} wrong pixels, energy {:.2}",
            cut.labels.and_not(&truth).count() + truth.and_not(&cut.labels).count(),
            e.energy_of(&cut.labels)?
        );
    }
    println!(
        "threshold: {:>4} wrong pixels",
        threshold.and_not(&truth).count() + truth.and_not(&threshold).count()
    );
    Ok(())
}
