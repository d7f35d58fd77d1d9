//! Warps a phantom slice with a known affine and recovers it by intensity
//! registration.
//!
//!     cargo run --release --example register

use atlascut::registration::{register_affine, resample, AffineTransform, Image3, Interpolation, RegistrationOptions};
use atlascut::validation::{generate_phantom, PhantomSpec};
use atlascut::volume::normalize_volume;

fn main() -> atlascut::Result<()> {
    let phantom = generate_phantom(&PhantomSpec::default())?;
    let v = normalize_volume(phantom.end_diastole())?;
    let fixed = Image3::from_grid(&v.extract_slice(v.nz() / 2)?.pixels);
    let c = fixed.center();

    let truth = AffineTransform::similarity_2d(c, 6.0, [1.06, 0.95], [3.0, -2.5]);
    let warped = resample(&fixed, &truth, fixed.dims, Interpolation::Linear)?;
    let r = register_affine(&warped, &fixed, &AffineTransform::identity(2, c), None, &RegistrationOptions::default())?;

    println!("iterations {}, final SSD {:.3}", r.iterations, r.final_metric);
    for p in [[40.0, 40.0, 0.0], [90.0, 50.0, 0.0], [64.0, 90.0, 0.0]] {
        let (a, b) = (truth.apply(p), r.transform.apply(p));
        println!(
            "({:>3}, {:>3}) -> truth ({:7.3}, {:7.3})  found ({:7.3}, {:7.3})",
            p[0], p[1], a[0], a[1], b[0], b[1]
        );
    }
    Ok(())
}
