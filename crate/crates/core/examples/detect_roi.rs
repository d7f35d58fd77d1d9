//! Locates the moving heart in a cine phantom from temporal variation.
//!
//!     cargo run --example detect_roi

use atlascut::pipeline::{detect_roi_xy, temporal_std};
use atlascut::validation::{generate_phantom, PhantomSpec};

fn main() -> atlascut::Result<()> {
    let spec = PhantomSpec::default();
    let phantom = generate_phantom(&spec)?;
    let std = temporal_std(&phantom.frames)?;
    let peak = std.data().iter().copied().fold(0.0, f64::max);
    println!("{} frames, peak temporal std {peak:.1}", phantom.frames.len());
    let roi = detect_roi_xy(&phantom.frames)?;
    println!("ROI {roi:?}");
    let cropped = phantom.end_diastole().crop_xy(roi.x0, roi.y0, roi.width, roi.height)?;
    println!("cropped volume {:?}", cropped.dims());
    let inside = (0..spec.n_slices)
        .map(|z| phantom.gt_myo.slice(z))
        .all(|m| m.foreground().iter().all(|&(x, y)| roi.contains(x, y)));
    println!("all myocardium inside ROI: {inside}");
    Ok(())
}
