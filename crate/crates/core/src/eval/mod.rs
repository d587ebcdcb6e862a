//! Evaluation: F1 / Macro F1 metrics, the prevalence-matched random-guess
//! baseline, cross-validation orchestration and report rendering.

mod baseline;
mod cv;
mod metrics;
mod report;

pub use baseline::{random_guess_baseline, BaselineMode, BaselineResult, LabelBaseline};
pub use cv::{cross_validate, CvInput, FoldResult, LabelSummary, TierSummary};
pub use metrics::{f1, macro_f1, ConfusionCounts};
pub use report::{render_report, LabelReport, Report, TierMetric};
