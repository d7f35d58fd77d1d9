//! Single-cut myocardium segmentation around a segmented blood pool.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphcut::{min_cut, EnergyField};
use crate::grid::{Grid2, LabelMask, LikelihoodField, ProbabilityMap};
use crate::imageops::{components_touching, fill_holes, histogram_match, truncated_outside_distance, Histogram};
use crate::stats::{fit_gaussian, fit_gmm, masked_samples, neg_log_likelihood_field, nll, GaussianMixture, MAX_NLL};
use crate::volume::{MaskVolume, Volume};

use super::config::PipelineConfig;
use super::END_SLICES;

/// Volume-wide intensity models of the myocardium stage.
#[derive(Debug, Clone)]
pub struct MyoModels {
    pub myocardium: GaussianMixture,
    pub background: GaussianMixture,
    /// ROI histogram of the mid-slice that every slice is matched to.
    pub reference: Histogram,
    pub mid_slice: usize,
}

fn prior_roi(prior: &ProbabilityMap, cfg: &PipelineConfig) -> LabelMask {
    fill_holes(&LabelMask::threshold(prior, cfg.low_threshold))
}

/// Slice `z` histogram-matched inside its prior ROI to `reference`.
pub fn matched_slice(v: &Volume, prior: &Volume, z: usize, reference: &Histogram, cfg: &PipelineConfig) -> Result<(Grid2<f64>, LabelMask)> {
    let s = v.extract_slice(z)?;
    let roi = prior_roi(&prior.extract_slice(z)?.pixels, cfg);
    if !roi.any() {
        return Ok((s.pixels, roi));
    }
    Ok((histogram_match(&s, &roi, reference)?.pixels, roi))
}

/// Slices whose samples train the models: the range without its first and
/// last [`END_SLICES`] slices, or the whole range when that leaves nothing.
pub fn model_slices(range: (usize, usize)) -> Vec<usize> {
    let (z0, z1) = range;
    if z1 + 1 - z0 > 2 * END_SLICES {
        (z0 + END_SLICES..=z1 - END_SLICES).collect()
    } else {
        (z0..=z1).collect()
    }
}

/// Fits one myocardium Gaussian and a three-component background mixture
/// from the histogram-matched mid-slices.
pub fn myo_models(v: &Volume, refined_prior: &Volume, cfg: &PipelineConfig) -> Result<MyoModels> {
    let range = cfg.range()?;
    if v.dims() != refined_prior.dims() {
        return Err(Error::DimensionMismatch("volume and prior differ".into()));
    }
    let mid_slice = (range.0 + range.1) / 2;
    let mid = v.extract_slice(mid_slice)?;
    let mid_roi = prior_roi(&refined_prior.extract_slice(mid_slice)?.pixels, cfg);
    let reference = Histogram::from_roi(&mid.pixels, &mid_roi);
    if reference.total() == 0 {
        return Err(Error::Degenerate("mid-slice prior ROI is empty".into()));
    }
    let mut myo = Vec::new();
    let mut bg = Vec::new();
    for z in model_slices(range) {
        let (pixels, roi) = matched_slice(v, refined_prior, z, &reference, cfg)?;
        let prior = refined_prior.extract_slice(z)?.pixels;
        let myo_mask = LabelMask::threshold(&prior, cfg.prior_threshold).and(&roi);
        myo.extend(masked_samples(&pixels, &myo_mask));
        bg.extend(masked_samples(&pixels, &roi.and_not(&myo_mask)));
    }
    if myo.is_empty() {
        return Err(Error::Degenerate("no myocardium samples above the prior threshold".into()));
    }
    Ok(MyoModels {
        myocardium: fit_gaussian(&myo)?,
        background: fit_gmm(&bg, 3, cfg.seed)?,
        reference,
        mid_slice,
    })
}

/// Unary costs of one slice, kept for inspection.
#[derive(Debug, Clone)]
pub struct MyoTerms {
    pub fg_cost: LikelihoodField,
    pub bg_cost: LikelihoodField,
    /// Distance term of the myocardium label alone.
    pub distance_cost: LikelihoodField,
}

/// Data terms: weighted intensity NLL, prior NLL and endocardial distance
/// cost. BP pixels get the maximal myocardium cost; outside the BP the
/// myocardium cost grows linearly with distance up to the cap, and the
/// background pays the maximal cost inside the band.
pub fn myo_terms(
    pixels: &Grid2<f64>,
    bp: &LabelMask,
    prior: &ProbabilityMap,
    models: &MyoModels,
    cfg: &PipelineConfig,
) -> Result<MyoTerms> {
    pixels.check_dims(bp, "blood pool")?;
    pixels.check_dims(prior, "prior")?;
    let [w1, w2, w3] = cfg.myo_weights;
    let td = truncated_outside_distance(bp, cfg.distance_cap)?;
    let cap = td.cap;
    let int_fg = neg_log_likelihood_field(pixels, &models.myocardium, None);
    let int_bg = neg_log_likelihood_field(pixels, &models.background, None);
    let n = pixels.len();
    let mut fg = Vec::with_capacity(n);
    let mut bg = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for i in 0..n {
        let p = prior.data()[i];
        let (d_fg, d_bg) = if td.interior.data()[i] {
            (MAX_NLL, 0.0)
        } else {
            let d = td.distance.data()[i];
            (d / cap * MAX_NLL, if d < cap { MAX_NLL } else { 0.0 })
        };
        fg.push(w1 * int_fg.data()[i] + w2 * nll(p) + w3 * d_fg);
        bg.push(w1 * int_bg.data()[i] + w2 * nll(1.0 - p) + w3 * d_bg);
        dist.push(d_fg);
    }
    let (nx, ny) = pixels.dims();
    Ok(MyoTerms {
        fg_cost: Grid2::from_vec(nx, ny, fg)?,
        bg_cost: Grid2::from_vec(nx, ny, bg)?,
        distance_cost: Grid2::from_vec(nx, ny, dist)?,
    })
}

/// Myocardium of one slice: a single cut at τ = 1, reduced to the
/// components adjacent to the blood pool.
pub fn segment_myocardium_slice(
    pixels: &Grid2<f64>,
    bp: &LabelMask,
    prior: &ProbabilityMap,
    models: &MyoModels,
    cfg: &PipelineConfig,
) -> Result<(LabelMask, MyoTerms)> {
    let terms = myo_terms(pixels, bp, prior, models, cfg)?;
    let e = EnergyField::with_contrast(terms.fg_cost.clone(), terms.bg_cost.clone(), pixels, 1.0)?;
    let cut = min_cut(&e, None)?.and_not(bp);
    Ok((components_touching(&cut, bp), terms))
}

/// Segments every slice of the range that has a blood pool, in parallel.
pub fn segment_myocardium(
    v: &Volume,
    bp: &MaskVolume,
    refined_prior: &Volume,
    models: &MyoModels,
    cfg: &PipelineConfig,
) -> Result<(MaskVolume, Vec<(usize, MyoTerms)>)> {
    let range = cfg.range()?;
    if bp.dims() != v.dims() || refined_prior.dims() != v.dims() {
        return Err(Error::DimensionMismatch("volume, BP and prior differ".into()));
    }
    let results: Vec<Option<(usize, LabelMask, MyoTerms)>> = (range.0..=range.1)
        .into_par_iter()
        .map(|z| {
            let bp_z = bp.slice(z);
            if !bp_z.any() {
                return Ok(None);
            }
            let (pixels, _) = matched_slice(v, refined_prior, z, &models.reference, cfg)?;
            let prior = refined_prior.extract_slice(z)?.pixels;
            let (m, terms) = segment_myocardium_slice(&pixels, &bp_z, &prior, models, cfg)?;
            Ok(Some((z, m, terms)))
        })
        .collect::<Result<_>>()?;
    let mut out = MaskVolume::empty(v.dims());
    let mut terms = Vec::new();
    for (z, m, t) in results.into_iter().flatten() {
        out.set_slice(z, &m);
        terms.push((z, t));
    }
    Ok((out, terms))
}
