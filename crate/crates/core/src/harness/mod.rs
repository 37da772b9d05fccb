//! Desk-scale reproduction rig: synthetic thin-structure scenes, a minimal
//! fully-convolutional model with hand-derived gradients, momentum SGD with
//! the poly schedule, checkpoints, and ablation drivers.

pub mod ablation;
pub mod checkpoint;
pub mod model;
pub mod synth;
pub mod train;

pub use ablation::{run_ablation, AblationAxis, AblationTable};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use model::TinyFcn;
pub use synth::{generate_dataset, generate_scene, Dataset, DatasetConfig, SceneConfig, SyntheticScene};
pub use train::{
    evaluate, evaluate_loss, gradient_check, hard_proportion_sweep, poly_lr, train, LossKind,
    TrainConfig,
};
