//! Writes a synthetic cine phantom in the on-disk case layout.
//!
//!     cargo run --example phantom [out_dir]

use atlascut::validation::{generate_phantom, write_phantom, PhantomSpec};

fn main() -> atlascut::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example_phantom".into());
    let spec = PhantomSpec::default();
    let p = generate_phantom(&spec)?;
    write_phantom(&p, &spec, &out)?;
    for z in 0..spec.n_slices {
        println!(
            "slice {z:2}: bp {:5} px, myo {:5} px, bp radius {:.1}",
            p.gt_bp.slice(z).count(),
            p.gt_myo.slice(z).count(),
            spec.bp_radius(z)
        );
    }
    println!("wrote {} frames to {out}", p.frames.len());
    Ok(())
}
