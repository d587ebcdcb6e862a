//! Dilated temporal CNN classifiers over sliding feature windows: one model
//! for gesture existence and one per property tier, trained with weighted
//! binary cross-entropy.

mod checkpoint;
mod net;
mod params;
mod train;

pub use checkpoint::{load_params, save_params};
pub use net::{batch_loss, batch_loss_grad, forward};
pub use params::{init_model, DilatedConvSpec, ModelParams};
pub use train::{predict, train, EpochLog, TrainConfig};
