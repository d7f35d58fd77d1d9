use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask};
use crate::volume::Slice;

pub const BINS: usize = 256;

/// Bin of an intensity on the normalized `[0, 255]` scale.
#[inline]
pub fn bin_of(v: f64) -> usize {
    if v.is_nan() || v <= 0.0 {
        0
    } else {
        (v.floor() as usize).min(BINS - 1)
    }
}

/// 256-bin intensity histogram over `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u64>,
}

impl Default for Histogram {
    fn default() -> Self {
        Self {
            counts: vec![0; BINS],
        }
    }
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::default();
        for v in values {
            h.counts[bin_of(v)] += 1;
        }
        h
    }

    /// Histogram of `pixels` restricted to `roi`.
    pub fn from_roi(pixels: &Grid2<f64>, roi: &LabelMask) -> Self {
        Self::from_values(
            pixels
                .data()
                .iter()
                .zip(roi.data())
                .filter(|(_, &inside)| inside)
                .map(|(&v, _)| v),
        )
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.len() != BINS {
            return Err(Error::InvalidArgument(format!(
                "histogram needs {BINS} bins, got {}",
                counts.len()
            )));
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Normalized cumulative distribution, `cdf[b] = P(bin <= b)`.
    pub fn cdf(&self) -> Vec<f64> {
        let total = self.total() as f64;
        let mut acc = 0u64;
        self.counts
            .iter()
            .map(|&c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Monotone CDF-matching of the ROI pixels of `src` onto `reference`.
///
/// Each source bin maps to the smallest reference bin whose cumulative mass
/// reaches the source bin's cumulative mass. Pixels outside `roi` keep their
/// values.
pub fn histogram_match(src: &Slice, roi: &LabelMask, reference: &Histogram) -> Result<Slice> {
    src.pixels.check_dims(roi, "histogram_match roi")?;
    let src_hist = Histogram::from_roi(&src.pixels, roi);
    if src_hist.total() == 0 {
        return Err(Error::Degenerate("histogram_match: empty ROI".into()));
    }
    if reference.total() == 0 {
        return Err(Error::Degenerate(
            "histogram_match: empty reference histogram".into(),
        ));
    }
    let lut = matching_lut(&src_hist, reference);
    let pixels = src.pixels.zip_map(roi, |&v, &inside| {
        if inside {
            lut[bin_of(v)]
        } else {
            v
        }
    });
    Ok(Slice::new(pixels, src.z_index))
}

/// [`histogram_match`] over a flat list of values (e.g. a whole volume).
pub fn match_values(values: &[f64], reference: &Histogram) -> Result<Vec<f64>> {
    if values.is_empty() || reference.total() == 0 {
        return Err(Error::Degenerate("match_values: empty histogram".into()));
    }
    let lut = matching_lut(&Histogram::from_values(values.iter().copied()), reference);
    Ok(values.iter().map(|&v| lut[bin_of(v)]).collect())
}

fn matching_lut(src: &Histogram, reference: &Histogram) -> Vec<f64> {
    const EPS: f64 = 1e-12;
    let src_cdf = src.cdf();
    let ref_cdf = reference.cdf();
    let mut lut = vec![0.0; BINS];
    let mut j = 0;
    for (b, &c) in src_cdf.iter().enumerate() {
        while j < BINS - 1 && ref_cdf[j] < c - EPS {
            j += 1;
        }
        lut[b] = j as f64;
    }
    lut
}
