//! From-scratch differentiable engine: dense layers, the mean-pool toy
//! encoder, flat and hierarchy-wired classifier heads, the weighted binary
//! cross-entropy, Adam and the training loop.

mod activation;
mod adam;
mod checkpoint;
mod dense;
mod encoder;
mod external;
mod gradcheck;
pub mod head;
mod loss;
mod model;
mod params;
mod train;

pub use activation::{relu, relu_in_place, sigmoid, softplus};
pub use adam::{Adam, AdamConfig};
pub use checkpoint::{
    Checkpoint, FeatureDescriptor, NamedArray, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use dense::Dense;
pub use encoder::{EncoderConfig, ToyEncoder, Vocab, OOV, PAD};
pub use external::ExternalEmbeddings;
pub use gradcheck::{gradient_check, GroupCheck};
pub use head::{ClassifierHead, HeadFactory, HeadRegistry, HeadSpec, Wiring};
pub use loss::{LossConfig, LOG_EPS};
pub use model::{
    assign, Encoded, FeatureForward, FeatureInit, Features, Model, ModelForward, Sample,
};
pub use params::{Gradients, ParamView};
pub use train::{
    batch_loss_and_gradients, evaluate_split, train, write_epoch_log, EpochLog, SplitStats,
    TrainConfig, TrainOutcome,
};
