//! Losses, the Adam optimizer, the training loop and grid search.

mod adam;
mod grid;
mod loss;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use grid::{grid_search, GridOutcome, GridPoint, GridSpec, Trial};
pub use loss::{classification_loss, l2_penalty, regression_loss, Loss, PROBABILITY_FLOOR};
pub use trainer::{
    append_epoch_record, check_compatible, dialogue_gradients, dialogue_loss, train, train_model,
    write_epoch_log, EpochRecord, TrainConfig, TrainOutcome,
};
