//! Attention-based LSTM encoder-decoder with lexicon bias.

pub mod beam;
pub mod io;
pub mod lexicon;
pub mod linalg;
pub mod lstm;
pub mod model;
pub mod params;
pub mod train;
pub mod vocab;

pub use beam::{beam_search, Hypothesis};
pub use model::Model;
pub use train::{train, ParallelData, TrainOutcome, TrainingConfig};
pub use vocab::Vocabulary;

#[derive(Debug, thiserror::Error)]
pub enum NmtError {
    #[error("empty source sequence")]
    EmptyInput,
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient check needs dropout disabled (got rate {0})")]
    DropoutInGradientCheck(f64),
    #[error("model file: {0}")]
    Format(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
}
