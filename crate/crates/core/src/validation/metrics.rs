use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::LabelMask;
use crate::imageops::dilate_disk;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts over the pixels of `region`.
    pub fn from_masks(pred: &LabelMask, gt: &LabelMask, region: &LabelMask) -> Result<Self> {
        pred.check_dims(gt, "ground truth")?;
        pred.check_dims(region, "evaluation region")?;
        let mut c = Self::default();
        for ((&p, &g), &r) in pred.data().iter().zip(gt.data()).zip(region.data()) {
            if !r {
                continue;
            }
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Metrics {
            dice: ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
            jaccard: ratio(self.tp, self.tp + self.fp + self.fn_),
            sensitivity: ratio(self.tp, self.tp + self.fn_),
            specificity: ratio(self.tn, self.tn + self.fp),
            ppv: ratio(self.tp, self.tp + self.fp),
            npv: ratio(self.tn, self.tn + self.fn_),
        }
    }
}

/// The six overlap metrics; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub dice: Option<f64>,
    pub jaccard: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
}

impl Metrics {
    pub const NAMES: [&'static str; 6] = ["Dice", "Jaccard", "Sensitivity", "Specificity", "PPV", "NPV"];

    pub fn values(&self) -> [Option<f64>; 6] {
        [
            self.dice,
            self.jaccard,
            self.sensitivity,
            self.specificity,
            self.ppv,
            self.npv,
        ]
    }
}

/// Ground-truth myocardium dilated by a quarter of its equivalent-disk radius.
/// An empty slice yields an empty region.
pub fn evaluation_region(gt_myo: &LabelMask) -> Result<LabelMask> {
    let area = gt_myo.count() as f64;
    if area == 0.0 {
        return Ok(LabelMask::empty(gt_myo.nx(), gt_myo.ny()));
    }
    let r_eq = (area / std::f64::consts::PI).sqrt();
    // Ties round to even.
    dilate_disk(gt_myo, (r_eq / 4.0).round_ties_even())
}

pub fn compute_metrics(pred: &LabelMask, gt: &LabelMask, region: &LabelMask) -> Result<Metrics> {
    Ok(ConfusionCounts::from_masks(pred, gt, region)?.metrics())
}
