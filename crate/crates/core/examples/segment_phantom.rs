//! Builds an atlas from four varied phantom subjects, segments the default
//! phantom and prints the evaluation table.
//!
//!     cargo run --release --example segment_phantom [atlas_seed]

use std::time::Instant;

use atlascut::atlas::build_atlas;
use atlascut::pipeline::{run_pipeline, PipelineConfig};
use atlascut::registration::RegistrationOptions;
use atlascut::validation::{evaluate, generate_phantom, phantom_subjects, subject_specs, PhantomSpec};

fn main() -> atlascut::Result<()> {
    env_logger::init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let base = PhantomSpec::default();

    let t = Instant::now();
    let subjects = phantom_subjects(&subject_specs(&base, 4, seed))?;
    let reference = subjects[0].volume.clone();
    let atlas = build_atlas(&reference, &subjects[0].id, &subjects, &RegistrationOptions::default())?;
    println!("atlas from {} subjects in {:.2} s", atlas.n_subjects(), t.elapsed().as_secs_f64());

    let test_spec = base;
    let phantom = generate_phantom(&test_spec)?;
    let range = (0, test_spec.n_slices - 1);
    let cfg = PipelineConfig::default().with_slice_range(range.0, range.1);

    let t = Instant::now();
    let result = run_pipeline(&atlas, phantom.end_diastole(), &cfg, false)?;
    println!("segmented in {:.2} s {:?}", t.elapsed().as_secs_f64(), result.timings);
    for s in &result.slices {
        println!(
            "  slice {:2}: {} iteration(s), converged {}, changes {:?}{}",
            s.z,
            s.iterations,
            s.converged,
            s.parameter_changes.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>(),
            s.skipped.as_deref().map(|r| format!(" skipped: {r}")).unwrap_or_default()
        );
    }

    let report = evaluate(&result.bp, &result.myo, &phantom.gt_bp, &phantom.gt_myo, range)?;
    println!("{}", report.render_text());
    for (a, b) in report.myocardium.per_slice.iter().zip(&report.blood_pool.per_slice) {
        println!(
            "  z {:2}: myo dice {:.3}  bp dice {:.3}",
            a.z,
            a.metrics.dice.unwrap_or(f64::NAN),
            b.metrics.dice.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
