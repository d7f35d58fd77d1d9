//! Builds an atlas from phantom subjects, saves and reloads it, and
//! propagates its myocardium prior onto a new case.
//!
//!     cargo run --release --example atlas [out_dir]

use atlascut::atlas::{build_atlas, load_atlas, propagate_prior, save_atlas};
use atlascut::registration::RegistrationOptions;
use atlascut::validation::{generate_phantom, phantom_subjects, subject_specs, PhantomSpec};

fn main() -> atlascut::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example_atlas".into());
    let base = PhantomSpec::default();
    let subjects = phantom_subjects(&subject_specs(&base, 3, 11))?;
    let opts = RegistrationOptions::default();
    let atlas = build_atlas(&subjects[0].volume, &subjects[0].id, &subjects, &opts)?;
    for (id, m) in atlas.meta.subject_ids.iter().zip(&atlas.meta.final_metrics) {
        println!("{id}: final SSD {m:.2}");
    }
    save_atlas(&atlas, &out)?;
    let atlas = load_atlas(&out)?;
    println!("atlas saved to {out}");

    let test = generate_phantom(&base)?;
    let propagated = propagate_prior(&atlas, test.end_diastole(), &opts)?;
    let (mut agree, mut total) = (0usize, 0usize);
    for (p, g) in propagated.prior.voxels().iter().zip(test.gt_myo.labels()) {
        if *p > 0.5 || *g == 1 {
            total += 1;
            agree += usize::from((*p > 0.5) == (*g == 1));
        }
    }
    println!("prior > 0.5 agrees with the myocardium on {:.1}% of the union", 100.0 * agree as f64 / total as f64);
    Ok(())
}
