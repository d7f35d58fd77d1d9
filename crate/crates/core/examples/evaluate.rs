//! Scores a deliberately shifted prediction against phantom ground truth and
//! prints the stratified report.
//!
//!     cargo run --example evaluate

use atlascut::validation::{evaluate, generate_phantom, PhantomSpec};
use atlascut::volume::MaskVolume;

fn shifted(m: &MaskVolume, dx: usize) -> atlascut::Result<MaskVolume> {
    let mut out = MaskVolume::empty(m.dims());
    for z in 0..m.dims()[2] {
        let s = m.slice(z);
        let moved = atlascut::grid::LabelMask::from_fn(s.nx(), s.ny(), |x, y| x >= dx && *s.get(x - dx, y));
        out.set_slice(z, &moved);
    }
    Ok(out)
}

fn main() -> atlascut::Result<()> {
    let spec = PhantomSpec::default();
    let p = generate_phantom(&spec)?;
    let pred_bp = shifted(&p.gt_bp, 1)?;
    let pred_myo = shifted(&p.gt_myo, 2)?;
    let report = evaluate(&pred_bp, &pred_myo, &p.gt_bp, &p.gt_myo, (0, spec.n_slices - 1))?;
    print!("{}", report.render_text());
    Ok(())
}
