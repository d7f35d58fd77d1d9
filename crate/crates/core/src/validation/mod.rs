//! Evaluation metrics, stratified reports and synthetic phantoms.

mod metrics;
mod phantom;
mod report;

pub use metrics::{compute_metrics, evaluation_region, ConfusionCounts, Metrics};
pub use phantom::{
    generate_phantom, phantom_subjects, subject_specs, write_phantom, Phantom, PhantomIntensities, PhantomSpec,
};
pub use report::{
    blood_pool_metrics, evaluate, myocardium_metrics, pooled_dice, stratified_report,
    EvaluationReport, MetricReport, SliceMetrics, StratumSummary, Summary, END_SLICES,
};
