//! Average appearance atlas and probabilistic myocardium prior.

use std::fs;
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageops::{match_values, Histogram};
use crate::registration::{
    register_affine, resample_mask_volume, resample_volume, AffineTransform, Image3,
    Interpolation, RegistrationOptions, RegistrationResult,
};
use crate::volume::{load_volume, normalize_volume, save_volume, MaskVolume, Volume};

/// One training volume with its expert myocardium labels.
#[derive(Debug, Clone)]
pub struct AtlasSubject {
    pub id: String,
    pub volume: Volume,
    pub labels: MaskVolume,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtlasMeta {
    pub n_subjects: usize,
    pub reference_id: String,
    pub subject_ids: Vec<String>,
    pub registration: RegistrationOptions,
    /// Subject-to-reference transforms in subject order.
    pub transforms: Vec<AffineTransform>,
    pub final_metrics: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    /// Voxelwise mean of the aligned, histogram-matched subject volumes.
    pub appearance: Volume,
    /// Voxelwise mean of the aligned binary labels, in `[0, 1]`.
    pub prior: Volume,
    pub meta: AtlasMeta,
}

impl Atlas {
    pub fn n_subjects(&self) -> usize {
        self.meta.n_subjects
    }

    pub fn reference_id(&self) -> &str {
        &self.meta.reference_id
    }
}

/// Voxel-grid centre of a `dims` volume.
pub(crate) fn grid_center(dims: [usize; 3]) -> [f64; 3] {
    [
        (dims[0] as f64 - 1.0) / 2.0,
        (dims[1] as f64 - 1.0) / 2.0,
        (dims[2] as f64 - 1.0) / 2.0,
    ]
}

/// Identity-shaped transform taking the centre of `moving_dims` onto the
/// centre of `fixed_dims`.
pub(crate) fn center_alignment(moving_dims: [usize; 3], fixed_dims: [usize; 3]) -> AffineTransform {
    let cm = grid_center(moving_dims);
    let cf = grid_center(fixed_dims);
    AffineTransform::new(
        3,
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        [cf[0] - cm[0], cf[1] - cm[1], cf[2] - cm[2]],
        cm,
    )
    .expect("identity is invertible")
}

struct Aligned {
    volume: Volume,
    labels: MaskVolume,
    registration: RegistrationResult,
}

fn align_subject(reference: &Volume, ref_hist: &Histogram, s: &AtlasSubject, opts: &RegistrationOptions) -> Result<Aligned> {
    if s.labels.dims() != s.volume.dims() {
        return Err(Error::DimensionMismatch(format!(
            "labels {:?} vs volume {:?}",
            s.labels.dims(),
            s.volume.dims()
        )));
    }
    let normalized = normalize_volume(&s.volume)?;
    let values: Vec<f64> = normalized.voxels().iter().map(|&v| f64::from(v)).collect();
    let matched = match_values(&values, ref_hist)?;
    let matched = Volume::new(
        normalized.dims(),
        normalized.spacing(),
        matched.into_iter().map(|v| v as f32).collect(),
    )?;
    let init = center_alignment(matched.dims(), reference.dims());
    let registration = register_affine(
        &Image3::from_volume(reference),
        &Image3::from_volume(&matched),
        &init,
        None,
        opts,
    )?;
    let t = &registration.transform;
    let volume = resample_volume(&matched, t, reference.dims(), Interpolation::Linear)?;
    let labels = resample_mask_volume(&s.labels, t, reference.dims())?;
    Ok(Aligned {
        volume,
        labels,
        registration,
    })
}

/// Registers every subject to `reference` (after histogram matching) and
/// averages the aligned volumes and labels on the reference grid.
pub fn build_atlas(
    reference: &Volume,
    reference_id: &str,
    subjects: &[AtlasSubject],
    opts: &RegistrationOptions,
) -> Result<Atlas> {
    if subjects.is_empty() {
        return Err(Error::InvalidArgument("atlas needs at least one subject".into()));
    }
    let reference = normalize_volume(reference)?;
    let ref_hist = Histogram::from_values(reference.voxels().iter().map(|&v| f64::from(v)));

    let aligned: Vec<Aligned> = subjects
        .par_iter()
        .map(|s| {
            align_subject(&reference, &ref_hist, s, opts).map_err(|e| Error::Atlas {
                subject: s.id.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let n = reference.voxels().len();
    let mut appearance = vec![0.0f64; n];
    let mut prior = vec![0.0f64; n];
    for a in &aligned {
        for (acc, &v) in appearance.iter_mut().zip(a.volume.voxels()) {
            *acc += f64::from(v);
        }
        for (acc, &l) in prior.iter_mut().zip(a.labels.labels()) {
            *acc += f64::from(l);
        }
        info!(
            "aligned subject: metric {:.3}, {} iterations",
            a.registration.final_metric, a.registration.iterations
        );
    }
    let k = aligned.len() as f64;
    let appearance = Volume::new(
        reference.dims(),
        reference.spacing(),
        appearance.into_iter().map(|v| (v / k) as f32).collect(),
    )?;
    let prior = Volume::new(
        reference.dims(),
        reference.spacing(),
        prior.into_iter().map(|v| (v / k) as f32).collect(),
    )?;
    Ok(Atlas {
        appearance,
        prior,
        meta: AtlasMeta {
            n_subjects: subjects.len(),
            reference_id: reference_id.to_string(),
            subject_ids: subjects.iter().map(|s| s.id.clone()).collect(),
            registration: opts.clone(),
            transforms: aligned.iter().map(|a| a.registration.transform.clone()).collect(),
            final_metrics: aligned.iter().map(|a| a.registration.final_metric).collect(),
        },
    })
}

/// Prior mapped onto a test volume.
#[derive(Debug, Clone)]
pub struct PropagatedPrior {
    pub prior: Volume,
    pub registration: RegistrationResult,
}

/// Registers the atlas appearance to `test` and carries the prior along
/// (trilinear, clamped to `[0, 1]`).
pub fn propagate_prior(atlas: &Atlas, test: &Volume, opts: &RegistrationOptions) -> Result<PropagatedPrior> {
    let init = center_alignment(atlas.appearance.dims(), test.dims());
    let registration = register_affine(
        &Image3::from_volume(test),
        &Image3::from_volume(&atlas.appearance),
        &init,
        None,
        opts,
    )?;
    let mut prior = resample_volume(&atlas.prior, &registration.transform, test.dims(), Interpolation::Linear)?;
    for v in prior.voxels_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(PropagatedPrior {
        prior: prior.with_spacing(test.spacing()),
        registration,
    })
}

pub fn save_atlas(atlas: &Atlas, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_volume(&atlas.appearance, dir.join("appearance"))?;
    save_volume(&atlas.prior, dir.join("prior"))?;
    let meta = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&atlas.meta).expect("meta serializes");
    fs::write(&meta, text).map_err(|e| Error::io(&meta, e))
}

pub fn load_atlas(dir: impl AsRef<Path>) -> Result<Atlas> {
    let dir = dir.as_ref();
    let appearance = load_volume(dir.join("appearance"))?;
    let prior = load_volume(dir.join("prior"))?;
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: AtlasMeta =
        serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if appearance.dims() != prior.dims() {
        return Err(Error::format(dir, "appearance and prior dims differ"));
    }
    if meta.n_subjects == 0 {
        return Err(Error::format(&meta_path, "n_subjects must be >= 1"));
    }
    if prior.voxels().iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::format(dir.join("prior.raw"), "prior values outside [0, 1]"));
    }
    Ok(Atlas {
        appearance,
        prior,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_volume(n: usize, nz: usize, r_in: f64, r_out: f64) -> (Volume, MaskVolume) {
        let c = (n as f64 - 1.0) / 2.0;
        let mut vox = Vec::new();
        let mut lab = Vec::new();
        for _ in 0..nz {
            for y in 0..n {
                for x in 0..n {
                    let r = (x as f64 - c).hypot(y as f64 - c);
                    let myo = r > r_in && r <= r_out;
                    vox.push(if r <= r_in { 200.0 } else if myo { 80.0 } else { 30.0 });
                    lab.push(u8::from(myo));
                }
            }
        }
        (
            Volume::new([n, n, nz], [1.0; 3], vox).unwrap(),
            MaskVolume::new([n, n, nz], lab).unwrap(),
        )
    }

    #[test]
    fn identical_subjects_reproduce_reference() {
        let (v, m) = ring_volume(32, 3, 6.0, 10.0);
        let subjects: Vec<AtlasSubject> = (0..2)
            .map(|i| AtlasSubject {
                id: format!("s{i}"),
                volume: v.clone(),
                labels: m.clone(),
            })
            .collect();
        let atlas = build_atlas(&v, "ref", &subjects, &RegistrationOptions::default()).unwrap();
        assert_eq!(atlas.n_subjects(), 2);
        let norm = normalize_volume(&v).unwrap();
        let max_app = atlas
            .appearance
            .voxels()
            .iter()
            .zip(norm.voxels())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(max_app < 1.0, "appearance differs by {max_app}");
        let prior_diff = atlas
            .prior
            .voxels()
            .iter()
            .zip(m.labels())
            .filter(|(p, &l)| (**p - f32::from(l)).abs() > 1e-6)
            .count();
        assert_eq!(prior_diff, 0);
    }

    #[test]
    fn empty_subject_list_is_rejected() {
        let (v, _) = ring_volume(8, 1, 2.0, 3.0);
        assert!(build_atlas(&v, "ref", &[], &RegistrationOptions::default()).is_err());
    }
}
