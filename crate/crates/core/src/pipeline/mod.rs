//! Blood pool and myocardium segmentation of one end-diastolic volume.

mod bp;
mod config;
mod myo;
mod roi;

use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::atlas::{propagate_prior, Atlas};
use crate::error::{Error, Result};
use crate::grid::{Grid2, LabelMask};
use crate::registration::RegistrationResult;
use crate::volume::{normalize_volume, MaskVolume, Slice, Volume};

pub use crate::validation::END_SLICES;
pub use bp::{
    bp_energy, bp_models, bp_prior_structures, inter_slice_lock, prior_maps, segment_bp_slice,
    BpSliceResult, PriorMaps, PriorStructures, SliceLog,
};
pub use config::PipelineConfig;
pub use myo::{
    matched_slice, model_slices, myo_models, myo_terms, segment_myocardium,
    segment_myocardium_slice, MyoModels, MyoTerms,
};
pub use roi::{detect_roi_xy, temporal_std, RoiXY};

/// Mid-slice first, then alternating outward: mid, mid+1, mid-1, mid+2, ...
pub fn processing_order(range: (usize, usize)) -> Vec<usize> {
    let (z0, z1) = range;
    let mid = (z0 + z1) / 2;
    let mut out = vec![mid];
    for k in 1..=(z1 - z0) {
        if mid + k <= z1 {
            out.push(mid + k);
        }
        if mid >= z0 + k {
            out.push(mid - k);
        }
    }
    out
}

/// Blood pool of a whole volume plus the refined priors.
#[derive(Debug, Clone)]
pub struct BpVolume {
    pub bp: MaskVolume,
    /// Original prior outside the range or on skipped slices.
    pub refined_prior: Volume,
    pub bp_bg_map: Volume,
    /// One entry per slice, in processing order.
    pub slices: Vec<SliceLog>,
}

type ChainItem = (usize, std::result::Result<BpSliceResult, String>);

fn run_chain(
    v: &Volume,
    prior: &Volume,
    zs: impl Iterator<Item = usize>,
    mut neighbour: Option<LabelMask>,
    cfg: &PipelineConfig,
) -> Result<Vec<ChainItem>> {
    let mut out = Vec::new();
    for z in zs {
        let pixels = v.extract_slice(z)?.pixels;
        let p = prior.extract_slice(z)?.pixels;
        let lock = match (&neighbour, cfg.inter_slice_locking) {
            (Some(n), true) => Some(inter_slice_lock(n, cfg)?),
            _ => None,
        };
        match segment_bp_slice(&pixels, &p, lock.as_ref(), cfg, z) {
            Ok(r) => {
                neighbour = Some(r.bp.clone());
                out.push((z, Ok(r)));
            }
            Err(Error::Unsegmentable { reason, .. }) => {
                warn!("slice {z} skipped: {reason}");
                out.push((z, Err(reason)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Segments the blood pool slice by slice from the mid-slice outward.
///
/// Each slice locks the eroded BP of its already segmented neighbour
/// towards the mid-slice. The two directions are independent once the
/// mid-slice is done and run concurrently.
pub fn segment_bp_volume(v: &Volume, prior: &Volume, cfg: &PipelineConfig) -> Result<BpVolume> {
    cfg.validate()?;
    let (z0, z1) = cfg.range()?;
    if v.dims() != prior.dims() {
        return Err(Error::DimensionMismatch("volume and prior differ".into()));
    }
    if z1 >= v.nz() {
        return Err(Error::Config(format!("slice_range end {z1} beyond {} slices", v.nz())));
    }
    let mid = (z0 + z1) / 2;
    let first = run_chain(v, prior, std::iter::once(mid), None, cfg)?;
    let seed = first[0].1.as_ref().ok().map(|r| r.bp.clone());
    let (up, down) = rayon::join(
        || run_chain(v, prior, mid + 1..=z1, seed.clone(), cfg),
        || run_chain(v, prior, (z0..mid).rev(), seed.clone(), cfg),
    );
    let mut by_z: Vec<Option<ChainItem>> = vec![None; v.nz()];
    for item in first.into_iter().chain(up?).chain(down?) {
        let z = item.0;
        by_z[z] = Some(item);
    }

    let mut bp = MaskVolume::empty(v.dims());
    let mut refined_prior = prior.clone();
    let mut bp_bg_map = Volume::zeros(v.dims(), v.spacing())?;
    let mut slices = Vec::new();
    for z in processing_order((z0, z1)) {
        let (_, item) = by_z[z].take().expect("every slice processed once");
        match item {
            Ok(r) => {
                bp.set_slice(z, &r.bp);
                refined_prior.replace_slice_in_place(z, &Slice::new(r.refined_prior.clone(), z))?;
                bp_bg_map.replace_slice_in_place(z, &Slice::new(r.bp_bg_map.clone(), z))?;
                slices.push(r.log());
            }
            Err(reason) => slices.push(SliceLog {
                z,
                iterations: 0,
                converged: false,
                parameter_changes: Vec::new(),
                skipped: Some(reason),
            }),
        }
    }
    Ok(BpVolume {
        bp,
        refined_prior,
        bp_bg_map,
        slices,
    })
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub normalize: f64,
    pub propagate_prior: f64,
    pub blood_pool: f64,
    pub myocardium: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub bp: MaskVolume,
    pub myo: MaskVolume,
    /// Per-slice BP iteration log in processing order.
    pub slices: Vec<SliceLog>,
    pub prior_initial: Volume,
    pub prior_final: Volume,
    pub registration: RegistrationResult,
    pub timings: StageTimings,
    /// Named intermediate volumes, filled when requested.
    pub debug: Vec<(String, Volume)>,
}

impl SegmentationResult {
    pub fn order(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.z).collect()
    }

    /// `(z, iterations)` for every segmented slice.
    pub fn iterations_per_slice(&self) -> Vec<(usize, usize)> {
        self.slices
            .iter()
            .filter(|s| s.skipped.is_none())
            .map(|s| (s.z, s.iterations))
            .collect()
    }
}

fn field_volume(dims: [usize; 3], spacing: [f64; 3], slices: &[(usize, &Grid2<f64>)]) -> Result<Volume> {
    let mut v = Volume::zeros(dims, spacing)?;
    for (z, g) in slices {
        v.replace_slice_in_place(*z, &Slice::new((*g).clone(), *z))?;
    }
    Ok(v)
}

/// Normalizes `test`, propagates the atlas prior, then segments the blood
/// pool and the myocardium. With `collect_debug` the intermediate fields are
/// returned as named volumes.
pub fn run_pipeline(atlas: &Atlas, test: &Volume, cfg: &PipelineConfig, collect_debug: bool) -> Result<SegmentationResult> {
    cfg.validate()?;
    let started = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let v = normalize_volume(test).map_err(|e| e.in_stage("normalize"))?;
    timings.normalize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let propagated = propagate_prior(atlas, &v, &cfg.registration).map_err(|e| e.in_stage("propagate_prior"))?;
    timings.propagate_prior = t.elapsed().as_secs_f64();
    info!(
        "prior propagated: metric {:.2} after {} iterations",
        propagated.registration.final_metric, propagated.registration.iterations
    );

    let t = Instant::now();
    let bpv = segment_bp_volume(&v, &propagated.prior, cfg).map_err(|e| e.in_stage("blood_pool"))?;
    timings.blood_pool = t.elapsed().as_secs_f64();
    if !bpv.bp.labels().iter().any(|&l| l > 0) {
        return Err(Error::Degenerate("no slice could be segmented".into()).in_stage("blood_pool"));
    }

    let t = Instant::now();
    let (myo, terms) = myo_models(&v, &bpv.refined_prior, cfg)
        .and_then(|models| segment_myocardium(&v, &bpv.bp, &bpv.refined_prior, &models, cfg))
        .map_err(|e| e.in_stage("myocardium"))?;
    timings.myocardium = t.elapsed().as_secs_f64();
    timings.total = started.elapsed().as_secs_f64();

    let mut debug = Vec::new();
    if collect_debug {
        let (dims, sp) = (v.dims(), v.spacing());
        let pick = |f: fn(&MyoTerms) -> &Grid2<f64>| -> Vec<(usize, &Grid2<f64>)> {
            terms.iter().map(|(z, t)| (*z, f(t))).collect()
        };
        debug.push(("normalized".to_string(), v.clone()));
        debug.push(("prior_initial".to_string(), propagated.prior.clone()));
        debug.push(("prior_refined".to_string(), bpv.refined_prior.clone()));
        debug.push(("bp_bg_map".to_string(), bpv.bp_bg_map.clone()));
        debug.push(("myo_fg_cost".to_string(), field_volume(dims, sp, &pick(|t| &t.fg_cost))?));
        debug.push(("myo_bg_cost".to_string(), field_volume(dims, sp, &pick(|t| &t.bg_cost))?));
        debug.push(("myo_distance_cost".to_string(), field_volume(dims, sp, &pick(|t| &t.distance_cost))?));
    }

    Ok(SegmentationResult {
        bp: bpv.bp,
        myo,
        slices: bpv.slices,
        prior_initial: propagated.prior,
        prior_final: bpv.refined_prior,
        registration: propagated.registration,
        timings,
        debug,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_alternates_outward() {
        assert_eq!(processing_order((0, 11)), vec![5, 6, 4, 7, 3, 8, 2, 9, 1, 10, 0, 11]);
        assert_eq!(processing_order((3, 3)), vec![3]);
        assert_eq!(processing_order((2, 4)), vec![3, 4, 2]);
    }
}
