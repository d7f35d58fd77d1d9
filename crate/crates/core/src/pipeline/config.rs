use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::registration::RegistrationOptions;

/// Settings for one segmentation run. Every field except `slice_range` has a
/// default; the slice range is the one manual input and must be supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Inclusive `(z_start, z_end)` extent of the left ventricle.
    pub slice_range: Option<(usize, usize)>,
    /// Fraction of the circumscribed radius by which the BP ROI is eroded.
    pub erosion_fraction: f64,
    /// Truncation of the endocardial distance, in pixels.
    pub distance_cap: f64,
    pub prior_threshold: f64,
    /// Myocardial prior level bounding the background sample region.
    pub low_threshold: f64,
    /// Weights of the intensity, prior and distance terms of the myocardium stage.
    pub myo_weights: [f64; 3],
    pub max_iterations: usize,
    /// Threshold on the norm of the change in refinement parameters.
    pub convergence_tol: f64,
    /// Erosion radius applied to the neighbouring slice's BP before locking.
    pub lock_erosion: f64,
    pub inter_slice_locking: bool,
    /// Pixel margin around the shapes compared by the 2D refinement.
    pub refinement_margin: usize,
    pub seed: u64,
    /// 3D atlas-to-test registration.
    pub registration: RegistrationOptions,
    /// 2D prior refinement registration.
    pub refinement: RegistrationOptions,
    /// Crop to a motion-derived in-plane ROI before segmenting.
    pub detect_roi: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            slice_range: None,
            erosion_fraction: 0.15,
            distance_cap: 10.0,
            prior_threshold: 0.5,
            low_threshold: 0.1,
            myo_weights: [0.2, 0.3, 0.5],
            max_iterations: 10,
            convergence_tol: 0.01,
            lock_erosion: 2.0,
            inter_slice_locking: true,
            refinement_margin: 8,
            seed: 0,
            registration: RegistrationOptions::default(),
            refinement: RegistrationOptions::default(),
            detect_roi: false,
        }
    }
}

impl PipelineConfig {
    pub fn with_slice_range(mut self, z0: usize, z1: usize) -> Self {
        self.slice_range = Some((z0, z1));
        self
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// The slice range, or a usage error when it was not given.
    pub fn range(&self) -> Result<(usize, usize)> {
        self.slice_range.ok_or_else(|| {
            Error::Config(
                "slice_range is required: give the first and last slice of the left ventricle".into(),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        let (z0, z1) = self.range()?;
        if z0 > z1 {
            return Err(Error::Config(format!("slice_range start {z0} exceeds end {z1}")));
        }
        if !(self.erosion_fraction > 0.0 && self.erosion_fraction < 1.0) {
            return Err(Error::Config(format!(
                "erosion_fraction must lie in (0, 1), got {}",
                self.erosion_fraction
            )));
        }
        if !(self.distance_cap > 0.0) {
            return Err(Error::Config("distance_cap must be positive".into()));
        }
        for (name, v) in [("prior_threshold", self.prior_threshold), ("low_threshold", self.low_threshold)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        let w = self.myo_weights;
        if w.iter().any(|&x| !(x >= 0.0)) || ((w[0] + w[1] + w[2]) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "myo_weights must be non-negative and sum to 1, got {w:?}"
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) || !(self.lock_erosion >= 0.0) {
            return Err(Error::Config("convergence_tol and lock_erosion must be positive".into()));
        }
        self.registration.validate()?;
        self.refinement.validate()
    }

    /// Weights ordered w1 <= w2 <= w3, the recommended setting.
    pub fn weights_increasing(&self) -> bool {
        let w = self.myo_weights;
        w[0] <= w[1] && w[1] <= w[2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_slice_range_is_a_usage_error() {
        let err = PipelineConfig::default().validate().unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("slice_range")));
    }

    #[test]
    fn defaults_validate_once_range_given() {
        let cfg = PipelineConfig::default().with_slice_range(0, 11);
        cfg.validate().unwrap();
        assert!(cfg.weights_increasing());
    }

    #[test]
    fn weights_must_sum_to_one() {
        let mut cfg = PipelineConfig::default().with_slice_range(0, 3);
        cfg.myo_weights = [0.2, 0.3, 0.6];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn json_overrides_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"slice_range": [2, 9], "distance_cap": 6}"#).unwrap();
        assert_eq!(cfg.slice_range, Some((2, 9)));
        assert_eq!(cfg.distance_cap, 6.0);
        assert_eq!(cfg.max_iterations, 10);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
