//! Iterative blood pool segmentation of single slices.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphcut::{data_term, min_cut, EnergyField};
use crate::grid::{Grid2, LabelMask, ProbabilityMap};
use crate::imageops::{
    above_threshold, components_touching, convex_hull_mask, erode_by_circumscribed_fraction,
    erode_disk, fill_holes, holes, inner_component, largest_component, otsu_threshold,
    signed_distance,
};
use crate::registration::{
    register_affine, resample_field, AffineTransform, Image3, Interpolation, RegionBox,
};
use crate::stats::{fit_gaussian, fit_gmm, masked_samples, neg_log_likelihood_field, nll, GaussianMixture};

use super::config::PipelineConfig;

fn unsegmentable(z: usize, reason: impl Into<String>) -> Error {
    Error::Unsegmentable {
        z,
        reason: reason.into(),
    }
}

/// Prior-derived maps used by the BP data term.
#[derive(Debug, Clone)]
pub struct PriorMaps {
    /// `1 - P / max(P)`.
    pub bp_bg_map: ProbabilityMap,
    /// Filled `P > prior_threshold`, eroded by the configured fraction.
    pub bp_roi: LabelMask,
    /// `bp_bg_map` inside `bp_roi`, zero elsewhere.
    pub bp_prior: ProbabilityMap,
}

pub fn prior_maps(prior: &ProbabilityMap, cfg: &PipelineConfig, z: usize) -> Result<PriorMaps> {
    let max = prior.data().iter().copied().fold(0.0f64, f64::max);
    if !(max > 0.0) {
        return Err(unsegmentable(z, "myocardial prior is zero on this slice"));
    }
    let bp_bg_map = prior.map(|&p| 1.0 - p / max);
    let filled = fill_holes(&LabelMask::threshold(prior, cfg.prior_threshold));
    if !filled.any() {
        return Err(unsegmentable(z, "prior never exceeds the threshold"));
    }
    let bp_roi = erode_by_circumscribed_fraction(&filled, cfg.erosion_fraction)?.mask;
    if !bp_roi.any() {
        return Err(unsegmentable(z, "BP ROI vanishes after erosion"));
    }
    let bp_prior = bp_bg_map.zip_map(&bp_roi, |&b, &inside| if inside { b } else { 0.0 });
    Ok(PriorMaps {
        bp_bg_map,
        bp_roi,
        bp_prior,
    })
}

/// Everything derived from the prior before the first cut.
#[derive(Debug, Clone)]
pub struct PriorStructures {
    pub maps: PriorMaps,
    /// Enclosed component of `bp_bg_map > 0.5`.
    pub high_confidence: LabelMask,
    /// Otsu foreground inside `high_confidence`.
    pub init_bp: LabelMask,
}

pub fn bp_prior_structures(
    pixels: &Grid2<f64>,
    prior: &ProbabilityMap,
    cfg: &PipelineConfig,
    z: usize,
) -> Result<PriorStructures> {
    pixels.check_dims(prior, "prior")?;
    let maps = prior_maps(prior, cfg, z)?;
    let high_confidence = inner_component(&LabelMask::threshold(&maps.bp_bg_map, 0.5));
    if !high_confidence.any() {
        return Err(unsegmentable(z, "no high-confidence BP region"));
    }
    let init_bp = match otsu_threshold(pixels, &high_confidence) {
        Ok(t) => above_threshold(pixels, &high_confidence, t),
        Err(_) => high_confidence.clone(),
    };
    Ok(PriorStructures {
        maps,
        high_confidence,
        init_bp,
    })
}

/// BP intensity model (one Gaussian) and background model (two-component
/// mixture over the low-threshold prior region minus `bp`).
pub fn bp_models(
    pixels: &Grid2<f64>,
    bp: &LabelMask,
    prior: &ProbabilityMap,
    cfg: &PipelineConfig,
    z: usize,
) -> Result<(GaussianMixture, GaussianMixture)> {
    let bp_samples = masked_samples(pixels, bp);
    let bg_region = fill_holes(&LabelMask::threshold(prior, cfg.low_threshold)).and_not(bp);
    let bg_samples = masked_samples(pixels, &bg_region);
    let bp_model = fit_gaussian(&bp_samples).map_err(|e| unsegmentable(z, format!("BP model: {e}")))?;
    let bg_model = fit_gmm(&bg_samples, 2, cfg.seed ^ z as u64)
        .map_err(|e| unsegmentable(z, format!("background model: {e}")))?;
    Ok((bp_model, bg_model))
}

/// Graph for one BP cut at iteration `tau`.
pub fn bp_energy(
    pixels: &Grid2<f64>,
    maps: &PriorMaps,
    bp_model: &GaussianMixture,
    bg_model: &GaussianMixture,
    tau: usize,
) -> Result<EnergyField> {
    let tau = tau as f64;
    let fg = data_term(
        tau,
        &neg_log_likelihood_field(pixels, bp_model, None),
        &maps.bp_prior.map(|&p| nll(p)),
    )?;
    let bg = data_term(
        tau,
        &neg_log_likelihood_field(pixels, bg_model, None),
        &maps.bp_prior.map(|&p| nll(1.0 - p)),
    )?;
    EnergyField::with_contrast(fg, bg, pixels, tau)
}

/// Outcome of [`segment_bp_slice`].
#[derive(Debug, Clone)]
pub struct BpSliceResult {
    pub z: usize,
    /// Convex hull of the last cut.
    pub bp: LabelMask,
    /// Original prior mapped by the last refinement transform.
    pub refined_prior: ProbabilityMap,
    pub iterations: usize,
    pub converged: bool,
    /// Refinement parameter change after each iteration.
    pub parameter_changes: Vec<f64>,
    pub transforms: Vec<AffineTransform>,
    /// Blood pool / background map of the final iteration.
    pub bp_bg_map: ProbabilityMap,
}

/// Per-slice summary kept in the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceLog {
    pub z: usize,
    pub iterations: usize,
    pub converged: bool,
    pub parameter_changes: Vec<f64>,
    /// Set when the slice could not be segmented.
    pub skipped: Option<String>,
}

impl BpSliceResult {
    pub fn log(&self) -> SliceLog {
        SliceLog {
            z: self.z,
            iterations: self.iterations,
            converged: self.converged,
            parameter_changes: self.parameter_changes.clone(),
            skipped: None,
        }
    }
}

/// Shape the refinement moves: the hole of the thresholded original prior.
fn prior_shape(prior: &ProbabilityMap, structures: &PriorStructures, cfg: &PipelineConfig) -> LabelMask {
    let hole = inner_component(&holes(&LabelMask::threshold(prior, cfg.prior_threshold)));
    if hole.any() {
        hole
    } else {
        structures.high_confidence.clone()
    }
}

/// Keeps the cut components anchored on the locked pixels, or the largest one.
fn main_region(cut: &LabelMask, locked: Option<&LabelMask>) -> LabelMask {
    match locked {
        Some(l) if l.any() => components_touching(cut, l),
        _ => largest_component(cut),
    }
}

fn union_bbox(a: &LabelMask, b: &LabelMask) -> Option<(usize, usize, usize, usize)> {
    a.or(b).bounding_box()
}

struct Refiner<'a> {
    moving: Image3,
    shape: &'a LabelMask,
    center: [f64; 3],
    cfg: &'a PipelineConfig,
}

impl Refiner<'_> {
    /// Affine taking the prior's BP shape onto `target`, compared as signed
    /// distance maps.
    fn fit(&self, target: &LabelMask) -> Result<AffineTransform> {
        let fixed = Image3::from_grid(&signed_distance(target)?);
        let (nx, ny) = target.dims();
        let bbox = union_bbox(target, self.shape).expect("nonempty shapes");
        let region = RegionBox::around_2d(bbox, self.cfg.refinement_margin, [nx, ny, 1]);
        let init = AffineTransform::identity(2, self.center);
        Ok(register_affine(&fixed, &self.moving, &init, Some(region), &self.cfg.refinement)?.transform)
    }
}

fn param_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Runs the cut / refine loop on one slice.
///
/// `pixels` are normalized intensities and `prior` the myocardial prior of
/// the slice. `locked` pixels (typically from the neighbouring slice) are
/// forced to BP in the first cut; each later cut locks the previous one.
pub fn segment_bp_slice(
    pixels: &Grid2<f64>,
    prior: &ProbabilityMap,
    locked: Option<&LabelMask>,
    cfg: &PipelineConfig,
    z: usize,
) -> Result<BpSliceResult> {
    let structures = bp_prior_structures(pixels, prior, cfg, z)?;
    let shape = prior_shape(prior, &structures, cfg);
    let (cx, cy) = shape.centroid().expect("nonempty shape");
    let refiner = Refiner {
        moving: Image3::from_grid(&signed_distance(&shape).map_err(|e| unsegmentable(z, e.to_string()))?),
        shape: &shape,
        center: [cx, cy, 0.0],
        cfg,
    };
    let identity = AffineTransform::identity(2, refiner.center);
    let dof = cfg.refinement.dof;

    let (mut bp_model, mut bg_model) = bp_models(pixels, &structures.init_bp, prior, cfg, z)?;
    let mut maps = structures.maps;
    let mut lock: Option<LabelMask> = locked.map(|l| l.and(&maps.bp_roi)).filter(|l| l.any());
    let mut prev_params = identity.params(dof);
    let mut last_cut: Option<LabelMask> = None;
    let mut refined = prior.clone();
    let mut result_map = maps.bp_bg_map.clone();
    let mut changes = Vec::new();
    let mut transforms = Vec::new();
    let mut converged = false;

    for tau in 1..=cfg.max_iterations {
        let energy = bp_energy(pixels, &maps, &bp_model, &bg_model, tau)?;
        let cut = main_region(&min_cut(&energy, lock.as_ref())?, lock.as_ref());
        if !cut.any() {
            if last_cut.is_some() {
                warn!("slice {z}: empty cut at iteration {tau}; keeping the previous one");
                break;
            }
            return Err(unsegmentable(z, "graph cut found no blood pool"));
        }
        let hull = convex_hull_mask(&cut);
        let t = match refiner.fit(&hull) {
            Ok(t) => t,
            Err(e) => {
                warn!("slice {z}: refinement failed at iteration {tau}: {e}");
                last_cut = Some(cut);
                break;
            }
        };
        let params = t.params(dof);
        let change = param_distance(&params, &prev_params);
        debug!("slice {z} iteration {tau}: parameter change {change:.4}");
        changes.push(change);
        refined = resample_field(prior, &t, Interpolation::Linear)?.map(|p| p.clamp(0.0, 1.0));
        transforms.push(t);
        result_map = maps.bp_bg_map.clone();
        last_cut = Some(cut.clone());
        if change < cfg.convergence_tol {
            converged = true;
            break;
        }
        if tau == cfg.max_iterations {
            break;
        }
        prev_params = params;
        maps = match prior_maps(&refined, cfg, z) {
            Ok(m) => m,
            Err(e) => {
                warn!("slice {z}: refined prior unusable ({e}); stopping");
                break;
            }
        };
        match bp_models(pixels, &cut, &refined, cfg, z) {
            Ok((b, g)) => {
                bp_model = b;
                bg_model = g;
            }
            Err(e) => warn!("slice {z}: keeping previous models ({e})"),
        }
        lock = Some(cut);
    }

    let cut = last_cut.expect("at least one cut");
    Ok(BpSliceResult {
        z,
        bp: convex_hull_mask(&cut),
        refined_prior: refined,
        iterations: changes.len().max(1),
        converged,
        parameter_changes: changes,
        transforms,
        bp_bg_map: result_map,
    })
}

/// Neighbour BP eroded for use as the next slice's locked set.
pub fn inter_slice_lock(neighbour_bp: &LabelMask, cfg: &PipelineConfig) -> Result<LabelMask> {
    erode_disk(neighbour_bp, cfg.lock_erosion)
}
