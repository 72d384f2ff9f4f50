//! Single recurrent cell (LSTM or GRU) followed by a sigmoid output unit,
//! trained with binary cross-entropy, full backpropagation through time
//! and Adam.

mod cell;
mod error;
mod gradcheck;
mod latency;
mod model;
mod train;

pub use cell::{loss_and_grad, Workspace};
pub use error::{Error, Result};
pub use gradcheck::{grad_check, GradCheckDims};
pub use latency::{measure_latency, LatencyReport};
pub use model::{CellKind, Normalization, RecurrentModel, MODEL_FORMAT_VERSION};
pub use train::{accuracy, evaluate, train, train_split, write_trace_csv, EpochStats, TrainConfig, TrainOutcome, TrainTrace};
