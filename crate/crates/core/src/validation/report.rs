use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::MaskVolume;

use super::metrics::{compute_metrics, evaluation_region, ConfusionCounts, Metrics};

/// Slices at each end of the LV range counted as apical/basal.
pub const END_SLICES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub z: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Mean and population standard deviation over the slices where a metric is defined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean: Some(mean),
            std: Some(var.sqrt()),
            n: v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub n_slices: usize,
    pub dice: Summary,
    pub jaccard: Summary,
    pub sensitivity: Summary,
    pub specificity: Summary,
    pub ppv: Summary,
    pub npv: Summary,
}

impl StratumSummary {
    fn of(slices: &[&SliceMetrics]) -> Self {
        let col = |f: fn(&Metrics) -> Option<f64>| Summary::of(slices.iter().map(|s| f(&s.metrics)));
        Self {
            n_slices: slices.len(),
            dice: col(|m| m.dice),
            jaccard: col(|m| m.jaccard),
            sensitivity: col(|m| m.sensitivity),
            specificity: col(|m| m.specificity),
            ppv: col(|m| m.ppv),
            npv: col(|m| m.npv),
        }
    }

    pub fn rows(&self) -> [Summary; 6] {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub structure: String,
    /// Inclusive LV slice range.
    pub slice_range: (usize, usize),
    /// False when the range is too short to split into strata.
    pub stratified: bool,
    pub mid: Option<StratumSummary>,
    pub apical_basal: Option<StratumSummary>,
    pub all: StratumSummary,
    pub per_slice: Vec<SliceMetrics>,
}

/// Groups per-slice metrics into mid and apical/basal strata. Ranges of
/// fewer than five slices produce the all-slices stratum only.
pub fn stratified_report(structure: &str, per_slice: &[SliceMetrics], slice_range: (usize, usize)) -> MetricReport {
    let (z0, z1) = slice_range;
    let in_range: Vec<&SliceMetrics> = per_slice.iter().filter(|s| s.z >= z0 && s.z <= z1).collect();
    let n = z1 + 1 - z0;
    let stratified = n >= 2 * END_SLICES + 1;
    let is_end = |z: usize| z < z0 + END_SLICES || z + END_SLICES > z1;
    let (mid, apical_basal) = if stratified {
        let ends: Vec<_> = in_range.iter().copied().filter(|s| is_end(s.z)).collect();
        let mids: Vec<_> = in_range.iter().copied().filter(|s| !is_end(s.z)).collect();
        (Some(StratumSummary::of(&mids)), Some(StratumSummary::of(&ends)))
    } else {
        (None, None)
    };
    MetricReport {
        structure: structure.to_string(),
        slice_range,
        stratified,
        mid,
        apical_basal,
        all: StratumSummary::of(&in_range),
        per_slice: in_range.into_iter().copied().collect(),
    }
}

fn cell(s: &Summary) -> String {
    match (s.mean, s.std) {
        (Some(m), Some(d)) => format!("{m:.3} ± {d:.3}"),
        _ => "n/a".to_string(),
    }
}

impl MetricReport {
    /// Metrics as rows, strata as columns.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let (z0, z1) = self.slice_range;
        let _ = writeln!(out, "{} (slices {z0}..={z1})", self.structure);
        let _ = writeln!(
            out,
            "{:<18}{:<20}{:<24}{:<20}",
            "Assessment Metric", "Mid-Slices", "Apical/Basal-Slices", "All Slices"
        );
        let none = [Summary::default(); 6];
        let mid = self.mid.map(|s| s.rows()).unwrap_or(none);
        let ends = self.apical_basal.map(|s| s.rows()).unwrap_or(none);
        let all = self.all.rows();
        for (i, name) in Metrics::NAMES.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:<18}{:<20}{:<24}{:<20}",
                name,
                cell(&mid[i]),
                cell(&ends[i]),
                cell(&all[i])
            );
        }
        if !self.stratified {
            let _ = writeln!(out, "(fewer than 5 slices: not stratified)");
        }
        out
    }
}

/// Reports for both structures of one segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub myocardium: MetricReport,
    pub blood_pool: MetricReport,
}

impl EvaluationReport {
    pub fn render_text(&self) -> String {
        format!("{}\n{}", self.myocardium.render_text(), self.blood_pool.render_text())
    }
}

fn check_range(dims: [usize; 3], range: (usize, usize)) -> Result<()> {
    if range.0 > range.1 || range.1 >= dims[2] {
        return Err(Error::InvalidArgument(format!(
            "slice range {}..={} invalid for {} slices",
            range.0, range.1, dims[2]
        )));
    }
    Ok(())
}

/// Per-slice myocardium metrics inside the dilated ground-truth region.
/// Slices with empty ground truth are skipped.
pub fn myocardium_metrics(pred: &MaskVolume, gt: &MaskVolume, range: (usize, usize)) -> Result<Vec<SliceMetrics>> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch(format!("pred {:?} vs gt {:?}", pred.dims(), gt.dims())));
    }
    check_range(gt.dims(), range)?;
    let mut out = Vec::new();
    for z in range.0..=range.1 {
        let g = gt.slice(z);
        let region = evaluation_region(&g)?;
        if !region.any() {
            continue;
        }
        let p = pred.slice(z);
        let counts = ConfusionCounts::from_masks(&p, &g, &region)?;
        out.push(SliceMetrics {
            z,
            counts,
            metrics: compute_metrics(&p, &g, &region)?,
        });
    }
    Ok(out)
}

/// Per-slice blood pool metrics over the full frame.
pub fn blood_pool_metrics(pred: &MaskVolume, gt: &MaskVolume, range: (usize, usize)) -> Result<Vec<SliceMetrics>> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch(format!("pred {:?} vs gt {:?}", pred.dims(), gt.dims())));
    }
    check_range(gt.dims(), range)?;
    let mut out = Vec::new();
    for z in range.0..=range.1 {
        let g = gt.slice(z);
        let p = pred.slice(z);
        let region = crate::grid::LabelMask::filled(g.nx(), g.ny(), true);
        let counts = ConfusionCounts::from_masks(&p, &g, &region)?;
        out.push(SliceMetrics {
            z,
            counts,
            metrics: counts.metrics(),
        });
    }
    Ok(out)
}

/// Pooled Dice over a set of slices (sum of counts, not mean of ratios).
pub fn pooled_dice(slices: &[SliceMetrics]) -> Option<f64> {
    let mut c = ConfusionCounts::default();
    for s in slices {
        c.add(&s.counts);
    }
    c.metrics().dice
}

pub fn evaluate(
    pred_bp: &MaskVolume,
    pred_myo: &MaskVolume,
    gt_bp: &MaskVolume,
    gt_myo: &MaskVolume,
    range: (usize, usize),
) -> Result<EvaluationReport> {
    let myo = myocardium_metrics(pred_myo, gt_myo, range)?;
    let bp = blood_pool_metrics(pred_bp, gt_bp, range)?;
    Ok(EvaluationReport {
        myocardium: stratified_report("Myocardium", &myo, range),
        blood_pool: stratified_report("Blood pool", &bp, range),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, v: f64) -> Vec<SliceMetrics> {
        (0..n)
            .map(|z| SliceMetrics {
                z,
                counts: ConfusionCounts::default(),
                metrics: Metrics {
                    dice: Some(v),
                    jaccard: Some(v),
                    sensitivity: Some(v),
                    specificity: Some(v),
                    ppv: Some(v),
                    npv: Some(v),
                },
            })
            .collect()
    }

    #[test]
    fn twelve_slices_split_four_eight() {
        let r = stratified_report("Myocardium", &uniform(12, 0.8), (0, 11));
        assert!(r.stratified);
        assert_eq!(r.apical_basal.unwrap().n_slices, 4);
        assert_eq!(r.mid.unwrap().n_slices, 8);
        for s in [r.mid.unwrap(), r.apical_basal.unwrap(), r.all] {
            assert!((s.dice.mean.unwrap() - 0.8).abs() < 1e-12);
            assert!(s.dice.std.unwrap() < 1e-12);
        }
    }

    #[test]
    fn short_range_is_not_split() {
        let r = stratified_report("Myocardium", &uniform(4, 0.5), (0, 3));
        assert!(!r.stratified);
        assert!(r.mid.is_none());
        assert_eq!(r.all.n_slices, 4);
        assert!(r.render_text().contains("not stratified"));
    }

    #[test]
    fn json_round_trip() {
        let r = stratified_report("Myocardium", &uniform(7, 0.3), (0, 6));
        let s = serde_json::to_string(&r).unwrap();
        let back: MetricReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn population_std() {
        let s = Summary::of([Some(1.0), Some(3.0), None]);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.std, Some(1.0));
        assert_eq!(s.n, 2);
    }
}
