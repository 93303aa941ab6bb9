//! Interpretable networks assembled from nilpotent logic.
//!
//! The first layer holds membership perceptrons that measure the truth of
//! linear inequalities; deeper layers are frozen perceptrons computing
//! continuous-valued logical and decision operators. Only the first layer
//! learns, yet gradients reach it through the frozen logic above.
//!
//! ```
//! use nilnet::compiler::{compile_with, parse_expression, CompileOptions};
//! use nilnet::network::Network;
//!
//! let expr = parse_expression("((x>0) AND (y>0)) OR ((x<0) AND (y<0))").unwrap();
//! let net = Network::assemble(compile_with(&expr, &CompileOptions::hard()).unwrap()).unwrap();
//! assert_eq!(net.predict(&[0.5, 0.5]).unwrap().label, 1);
//! assert_eq!(net.predict(&[0.5, -0.5]).unwrap().label, 0);
//! ```

pub mod compiler;
pub mod data;
pub mod error;
pub mod logic;
pub mod model_file;
pub mod network;
pub mod operators;
pub mod trainer;

pub use compiler::{compile_to_network, compile_with, explain_network, parse_expression, CompileOptions, Expr};
pub use data::{generate_dataset, split, DatasetConfig, DatasetKind, LabeledPoint};
pub use error::{
    CompileError, ConfigError, DataError, DomainError, ModelFileError, NetworkError, ShapeError, TrainError,
};
pub use logic::{cut, negate, sigmoid, squash, squash_partials, Generator, SquashingParams};
pub use model_file::{load_model, save_model, ModelFile};
pub use network::{Activation, GradientSet, InputFeature, LayerSpec, Network, NetworkSpec, Prediction};
pub use operators::{operator_to_perceptron, OperatorKind, OperatorSpec, ThresholdSpec, UnaryOpSpec};
pub use trainer::{accuracy, evaluate_grid, run_training, GridSnapshot, SessionStatus, TrainConfig, TrainingSession};
