//! Gesture-property corpus: schema, annotated recordings, rasterization to a
//! 5 fps frame grid, prevalence statistics, and synthetic oracle corpora.

mod interchange;
mod rasterize;
mod schema;
mod stats;
mod synth;
mod types;

pub use interchange::{load_corpus, save_corpus, CorpusLoad, Manifest, ManifestEntry, RecordIssue};
pub use rasterize::rasterize;
pub use schema::{GesturePropertySchema, Tier, N_PROPERTY_LABELS};
pub use stats::{prevalence, PrevalenceScope};
pub use synth::{make_synthetic_corpus, SyntheticSpec, LABEL_TONES_HZ, SLOT_SECONDS};
pub use types::{AnnotatedRecording, FrameGrid, IntervalAnnotation, Word};
