//! In-plane region of interest from cardiac motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask};
use crate::imageops::{dilate_disk, largest_component, otsu_threshold};
use crate::volume::Volume;

/// Axis-aligned rectangle `[x0, x0 + width) × [y0, y0 + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiXY {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl RoiXY {
    pub fn full(nx: usize, ny: usize) -> Self {
        Self {
            x0: 0,
            y0: 0,
            width: nx,
            height: ny,
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }

    pub fn crop(&self, v: &Volume) -> Result<Volume> {
        v.crop_xy(self.x0, self.y0, self.width, self.height)
    }
}

/// Per-pixel temporal standard deviation, averaged over slices.
pub fn temporal_std(frames: &[Volume]) -> Result<Grid2<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidArgument("no frames".into()))?;
    let [nx, ny, nz] = first.dims();
    if frames.iter().any(|f| f.dims() != first.dims()) {
        return Err(Error::DimensionMismatch("cine frames differ in size".into()));
    }
    let n = frames.len() as f64;
    let plane = nx * ny;
    let mut out = vec![0.0; plane];
    for i in 0..plane * nz {
        let mean = frames.iter().map(|f| f64::from(f.voxels()[i])).sum::<f64>() / n;
        let var = frames
            .iter()
            .map(|f| (f64::from(f.voxels()[i]) - mean).powi(2))
            .sum::<f64>()
            / n;
        out[i % plane] += var.sqrt() / nz as f64;
    }
    Grid2::from_vec(nx, ny, out)
}

const BRIDGE_RADIUS: f64 = 2.0;

/// Bounding box of the main moving region, padded by 10% per side.
///
/// The temporal standard deviation map is Otsu-thresholded and the largest
/// component kept after a small dilation. When motion is uniform over the frame, the whole frame is
/// returned.
pub fn detect_roi_xy(frames: &[Volume]) -> Result<RoiXY> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument("ROI detection needs at least 2 frames".into()));
    }
    let std = temporal_std(frames)?;
    let (nx, ny) = std.dims();
    let max = std.data().iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Degenerate(
            "cine shows no motion; supply the ROI manually".into(),
        ));
    }
    let scaled = std.map(|&v| v / max * 255.0);
    let everything = LabelMask::filled(nx, ny, true);
    let Ok(t) = otsu_threshold(&scaled, &everything) else {
        return Ok(RoiXY::full(nx, ny));
    };
    // Leading and trailing edges of a moving structure are bridged first.
    let moving = largest_component(&dilate_disk(&LabelMask::threshold(&scaled, t), BRIDGE_RADIUS)?);
    let Some((x0, y0, x1, y1)) = moving.bounding_box() else {
        return Ok(RoiXY::full(nx, ny));
    };
    let pad_x = ((x1 + 1 - x0) as f64 * 0.1).ceil() as usize;
    let pad_y = ((y1 + 1 - y0) as f64 * 0.1).ceil() as usize;
    let xa = x0.saturating_sub(pad_x);
    let ya = y0.saturating_sub(pad_y);
    let xb = (x1 + 1 + pad_x).min(nx);
    let yb = (y1 + 1 + pad_y).min(ny);
    Ok(RoiXY {
        x0: xa,
        y0: ya,
        width: xb - xa,
        height: yb - ya,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(n: usize, f: impl Fn(usize, usize) -> f32) -> Volume {
        let mut v = Vec::new();
        for y in 0..n {
            for x in 0..n {
                v.push(f(x, y));
            }
        }
        Volume::new([n, n, 1], [1.0; 3], v).unwrap()
    }

    #[test]
    fn static_cine_is_rejected() {
        let a = frame(16, |x, _| x as f32);
        assert!(matches!(detect_roi_xy(&[a.clone(), a]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn whole_frame_motion_gives_full_frame() {
        let a = frame(16, |_, _| 0.0);
        let b = frame(16, |_, _| 10.0);
        assert_eq!(detect_roi_xy(&[a, b]).unwrap(), RoiXY::full(16, 16));
    }

    #[test]
    fn moving_square_is_enclosed() {
        let sq = |off: usize| frame(64, move |x, y| if (20 + off..30 + off).contains(&x) && (25..35).contains(&y) { 200.0 } else { 20.0 });
        let roi = detect_roi_xy(&[sq(0), sq(3), sq(6)]).unwrap();
        assert!(roi.contains(20, 25) && roi.contains(35, 34));
        assert!(!roi.contains(5, 5));
    }
}
