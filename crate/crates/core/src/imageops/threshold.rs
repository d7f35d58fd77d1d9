use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask};

use super::histogram::{bin_of, Histogram, BINS};

/// Otsu threshold over the 256-bin histogram of the ROI pixels.
///
/// Returns the bin index `t` maximizing between-class variance for the split
/// `{bin <= t} | {bin > t}`; the lowest maximizer wins ties. Foreground pixels
/// are those with `bin_of(v) > t`, see [`above_threshold`].
pub fn otsu_threshold(pixels: &Grid2<f64>, roi: &LabelMask) -> Result<f64> {
    pixels.check_dims(roi, "otsu roi")?;
    otsu_from_histogram(&Histogram::from_roi(pixels, roi))
}

pub fn otsu_threshold_values(values: &[f64]) -> Result<f64> {
    otsu_from_histogram(&Histogram::from_values(values.iter().copied()))
}

pub fn otsu_from_histogram(h: &Histogram) -> Result<f64> {
    if h.occupied_bins() < 2 {
        return Err(Error::Degenerate(
            "otsu: ROI needs at least two distinct intensity bins".into(),
        ));
    }
    let counts = h.counts();
    let n: u128 = counts.iter().map(|&c| c as u128).sum();
    let s: u128 = counts
        .iter()
        .enumerate()
        .map(|(b, &c)| b as u128 * c as u128)
        .sum();

    // Between-class variance is proportional to (n*s0 - n0*s)^2 / (n0*n1);
    // compare candidates as exact fractions.
    let mut best: Option<(usize, u128, u128)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for (t, &c) in counts.iter().enumerate().take(BINS - 1) {
        n0 += c as u128;
        s0 += t as u128 * c as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (n * s0).abs_diff(n0 * s);
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => match (num.checked_mul(bd), bn.checked_mul(den)) {
                (Some(a), Some(b)) => a > b,
                _ => num as f64 / den as f64 > bn as f64 / bd as f64,
            },
        };
        if better {
            best = Some((t, num, den));
        }
    }
    Ok(best.map(|(t, _, _)| t as f64).expect("two occupied bins"))
}

/// Pixels of `roi` whose bin lies strictly above the Otsu bin `t`.
pub fn above_threshold(pixels: &Grid2<f64>, roi: &LabelMask, t: f64) -> LabelMask {
    pixels.zip_map(roi, |&v, &inside| inside && bin_of(v) as f64 > t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_masses_take_lowest_split() {
        let mut v = vec![0.0; 4];
        v.extend([255.0; 4]);
        assert_eq!(otsu_threshold_values(&v).unwrap(), 0.0);
    }

    #[test]
    fn three_clusters() {
        let mut v = vec![10.0; 100];
        v.extend([200.0; 100]);
        v.extend([205.0; 3]);
        let t = otsu_threshold_values(&v).unwrap();
        assert!((10.0..200.0).contains(&t), "t = {t}");
    }

    #[test]
    fn single_value_is_degenerate() {
        assert!(otsu_threshold_values(&[7.0; 5]).is_err());
        assert!(otsu_threshold_values(&[]).is_err());
    }

    #[test]
    fn roi_restricts_samples() {
        let px = Grid2::from_vec(4, 1, vec![0.0, 100.0, 200.0, 255.0]).unwrap();
        let roi = Grid2::from_vec(4, 1, vec![false, true, true, false]).unwrap();
        let t = otsu_threshold(&px, &roi).unwrap();
        assert_eq!(t, 100.0);
        let fg = above_threshold(&px, &roi, t);
        assert_eq!(fg.data(), &[false, false, true, false]);
    }
}
