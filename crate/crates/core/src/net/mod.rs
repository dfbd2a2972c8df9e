//! Small dense and convolutional networks with backprop, weight
//! conditioning and normalization baselines.

pub mod checkpoint;
pub mod conv;
pub mod data;
pub mod loss;
pub mod network;
pub mod norm;
pub mod spec;
pub mod train;
pub mod weights;

pub use data::Dataset;
pub use loss::LossKind;
pub use network::{Mode, Network};
pub use spec::{Activation, Conditioning, LayerKind, LayerSpec, Normalization, WeightReparam};
pub use train::{train, TrainConfig, TrainTrace};
