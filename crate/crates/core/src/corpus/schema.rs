//! Fixed gesture-property schema: tiers and label names.

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::{Error, Result};

/// Number of property labels across the category, semantics and phase tiers.
pub const N_PROPERTY_LABELS: usize = 13;

/// Annotation tiers. Existence is derived from phase coverage rather than
/// annotated directly; the other three tiers carry the 13 property labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Existence,
    Category,
    Semantics,
    Phase,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Existence, Tier::Category, Tier::Semantics, Tier::Phase];

    /// Tiers that carry interval annotations (all but existence).
    pub const PROPERTY_TIERS: [Tier; 3] = [Tier::Category, Tier::Semantics, Tier::Phase];

    pub fn name(self) -> &'static str {
        match self {
            Tier::Existence => "existence",
            Tier::Category => "category",
            Tier::Semantics => "semantics",
            Tier::Phase => "phase",
        }
    }

    pub fn parse(name: &str) -> Result<Tier> {
        match name {
            "existence" => Ok(Tier::Existence),
            "category" => Ok(Tier::Category),
            "semantics" => Ok(Tier::Semantics),
            "phase" => Ok(Tier::Phase),
            other => Err(Error::UnknownTier(other.to_string())),
        }
    }
}

impl std::fmt::Display for Tier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

const CATEGORY_LABELS: [&str; 4] = ["deictic", "beat", "iconic", "discourse"];
const SEMANTICS_LABELS: [&str; 4] = ["amount", "shape", "direction", "size"];
const PHASE_LABELS: [&str; 5] = [
    "preparation",
    "pre_stroke_hold",
    "stroke",
    "post_stroke_hold",
    "retraction",
];
const EXISTENCE_LABELS: [&str; 1] = ["gesture"];

/// The fixed label schema. Property labels occupy a flat index space of
/// [`N_PROPERTY_LABELS`] columns ordered category, semantics, phase.
#[derive(Debug, Clone, Copy, Default)]
pub struct GesturePropertySchema;

impl GesturePropertySchema {
    pub fn labels(self, tier: Tier) -> &'static [&'static str] {
        match tier {
            Tier::Existence => &EXISTENCE_LABELS,
            Tier::Category => &CATEGORY_LABELS,
            Tier::Semantics => &SEMANTICS_LABELS,
            Tier::Phase => &PHASE_LABELS,
        }
    }

    /// Column range of a tier within the flat property-label space.
    /// Existence has no columns there (it is a separate derived vector).
    pub fn tier_range(self, tier: Tier) -> Range<usize> {
        match tier {
            Tier::Existence => 0..0,
            Tier::Category => 0..4,
            Tier::Semantics => 4..8,
            Tier::Phase => 8..13,
        }
    }

    /// All 13 property labels in flat-column order.
    pub fn property_labels(self) -> [&'static str; N_PROPERTY_LABELS] {
        [
            "deictic",
            "beat",
            "iconic",
            "discourse",
            "amount",
            "shape",
            "direction",
            "size",
            "preparation",
            "pre_stroke_hold",
            "stroke",
            "post_stroke_hold",
            "retraction",
        ]
    }

    /// Flat column of a (tier, label) pair.
    pub fn column(self, tier: Tier, label: &str) -> Result<usize> {
        let pos = self.labels(tier).iter().position(|l| *l == label).ok_or_else(|| {
            Error::UnknownLabel { tier: tier.name().to_string(), label: label.to_string() }
        })?;
        Ok(self.tier_range(tier).start + pos)
    }

    /// Tier owning a flat property column.
    pub fn tier_of_column(self, column: usize) -> Tier {
        debug_assert!(column < N_PROPERTY_LABELS);
        match column {
            0..=3 => Tier::Category,
            4..=7 => Tier::Semantics,
            _ => Tier::Phase,
        }
    }
}
