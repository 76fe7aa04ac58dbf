pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod net;
pub mod optim;
pub mod scaling;
pub mod tasks;

pub use error::{Error, Result};
pub use linalg::{Matrix, RngState};
pub use net::{Activation, DenseNet, InitScheme, NetworkConfig};
pub use optim::{TrainConfig, TrainReport};
pub use tasks::Dataset;
