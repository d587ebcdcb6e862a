//! Report rendering: per-label scores next to the random baseline, with
//! labels beating the baseline by more than one pooled standard deviation
//! flagged.

use serde::{Deserialize, Serialize};

use super::baseline::BaselineResult;
use super::cv::TierSummary;
use crate::corpus::Tier;

/// Score reported for a tier: two-class Macro F1 for category, semantics and
/// existence; positive-class F1 for phase, whose per-phase baseline tracks
/// prevalence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierMetric {
    MacroF1,
    PositiveF1,
}

impl TierMetric {
    pub fn for_tier(tier: Tier) -> TierMetric {
        match tier {
            Tier::Phase => TierMetric::PositiveF1,
            _ => TierMetric::MacroF1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            TierMetric::MacroF1 => "macro_f1",
            TierMetric::PositiveF1 => "f1",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelReport {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
    pub n_defined_folds: usize,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tier: Tier,
    pub metric: String,
    pub baseline_mode: String,
    pub labels: Vec<LabelReport>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("tier: {} [{}]\n", self.tier, self.metric));
        out.push_str(&format!("baseline: {}\n", self.baseline_mode));
        out.push_str(&format!(
            "{:<18} {:>16} {:>16} {:>7} {:>5}\n",
            "label", "random-guess", "model", "folds", "flag"
        ));
        for l in &self.labels {
            out.push_str(&format!(
                "{:<18} {:>7.1}% \u{b1} {:>4.1}% {:>7.1}% \u{b1} {:>4.1}% {:>7} {:>5}\n",
                l.name,
                100.0 * l.baseline_mean,
                100.0 * l.baseline_std,
                100.0 * l.mean,
                100.0 * l.std,
                l.n_defined_folds,
                if l.flagged { "*" } else { "" },
            ));
        }
        out
    }
}

/// Joins a cross-validation summary with a baseline. Both must carry the
/// tier's labels in schema order.
pub fn render_report(summary: &TierSummary, baseline: &BaselineResult) -> Report {
    let metric = TierMetric::for_tier(summary.tier);
    let labels = summary
        .labels
        .iter()
        .zip(&baseline.labels)
        .map(|(s, b)| {
            let (mean, std) = match metric {
                TierMetric::MacroF1 => (s.macro_f1_mean, s.macro_f1_std),
                TierMetric::PositiveF1 => (s.f1_mean, s.f1_std),
            };
            let (baseline_mean, baseline_std) = match metric {
                TierMetric::MacroF1 => (b.macro_f1_mean, b.macro_f1_std),
                TierMetric::PositiveF1 => (b.f1_mean, b.f1_std),
            };
            let pooled = ((std.powi(2) + baseline_std.powi(2)) / 2.0).sqrt();
            LabelReport {
                name: s.name.clone(),
                mean,
                std,
                baseline_mean,
                baseline_std,
                n_defined_folds: s.n_defined_folds,
                flagged: s.n_defined_folds > 0 && mean > baseline_mean + pooled,
            }
        })
        .collect();
    Report {
        tier: summary.tier,
        metric: metric.name().to_string(),
        baseline_mode: baseline.mode.clone(),
        labels,
    }
}
