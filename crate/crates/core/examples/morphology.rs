//! Otsu thresholding, components, hole filling, convex hull and signed
//! distance on a synthetic ring with a notch.
//!
//!     cargo run --example morphology

use atlascut::grid::{Grid2, LabelMask};
use atlascut::imageops::{
    connected_components, convex_hull_mask, fill_holes, inner_component, otsu_threshold, signed_distance,
};

fn show(name: &str, m: &LabelMask) {
    println!("{name} ({} px)", m.count());
    for y in (0..m.ny()).step_by(2) {
        let row: String = (0..m.nx()).map(|x| if *m.get(x, y) { '#' } else { '.' }).collect();
        println!("  {row}");
    }
}

fn main() -> atlascut::Result<()> {
    let n = 32;
    let pixels = Grid2::from_fn(n, n, |x, y| {
        let r = (x as f64 - 15.5).hypot(y as f64 - 15.5);
        let notch = x > 22 && (13..19).contains(&y);
        if (7.0..11.0).contains(&r) && !notch {
            180.0
        } else {
            40.0 + ((x * 7 + y * 3) % 11) as f64
        }
    });
    let t = otsu_threshold(&pixels, &LabelMask::filled(n, n, true))?;
    let ring = LabelMask::threshold(&pixels, t);
    println!("otsu threshold {t}, components {}", connected_components(&ring).sizes().len());
    show("ring", &ring);
    show("filled", &fill_holes(&ring));
    show("hull", &convex_hull_mask(&ring));
    show("inner background component", &inner_component(&ring.not()));

    let d = signed_distance(&ring)?;
    let row: Vec<String> = (0..n).map(|x| format!("{:.0}", d.get(x, 16))).collect();
    println!("signed distance along y=16: {}", row.join(" "));
    Ok(())
}
