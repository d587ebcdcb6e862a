//! Conditional normalizing flow over per-frame pose vectors: affine coupling
//! layers whose scale and shift are produced by small conditioner networks
//! fed with the pass-through half and a conditioning vector (speech features
//! plus gesture-property bits). Supports exact likelihood and sampling.

mod checkpoint;
mod coupling;
mod params;
mod train;

pub use checkpoint::{load_flow, save_flow};
pub use coupling::{flow_forward, flow_inverse, log_likelihood, nll_and_grad};
pub use params::{init_flow, CouplingParams, FlowParams, FlowSpec};
pub use train::{sample, train_flow, FlowEpochLog, FlowTrainConfig};
