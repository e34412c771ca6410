//! Deep belief network trained offline and evaluated on p-bit neurons.

pub mod infer;
pub mod mnist;
pub mod model;
pub mod train;

pub use infer::{activation_voltage, evaluate, evaluate_ideal, infer_stochastic, Evaluation, InferenceConfig, Prediction, StartState};
pub use mnist::{load_mnist, Dataset, Split};
pub use model::{argmax, sigmoid, DbnModel, TrainingMeta};
pub use train::{train_cd1, TrainConfig};
