pub mod eval;
pub mod ssim;
pub mod ssl_map;
pub mod sweep;
pub mod train;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "segstruct", version, about = "Structural similarity loss tools for segmentation maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Mean SSIM between two maps (PGM labels or SEGT tensors)
    Ssim(ssim::SsimArgs),
    /// Structural error map, hard mask, and SSL summary for a label/probability pair
    #[command(name = "ssl-map")]
    SslMap(ssl_map::SslMapArgs),
    /// Train the desk-scale model on synthetic scenes
    Train(train::TrainArgs),
    /// Evaluate predictions or a checkpoint with mIoU and pixel accuracy
    Eval(eval::EvalArgs),
    /// Sweep an ablation axis over seeds, or hard proportions over beta on a frozen checkpoint
    Sweep(sweep::SweepArgs),
}

/// Window and SSL parameters shared by several commands; defaults are the
/// reference configuration.
#[derive(Args, Clone, Debug)]
pub struct SslOpts {
    /// Window size k (odd)
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Gaussian window standard deviation
    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,
    /// Hard-example threshold factor in [0, 1)
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Normalization stability constant
    #[arg(long, default_value_t = 0.01)]
    pub c4: f64,
    /// Combined-objective weight in [0, 1]
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Disable hard-example mining
    #[arg(long)]
    pub no_ohem: bool,
    /// Disable error reweighting
    #[arg(long)]
    pub no_reweight: bool,
}

impl SslOpts {
    pub fn to_params(&self) -> segstruct_core::Result<segstruct_core::SslParams> {
        segstruct_core::SslParams::new(
            segstruct_core::GaussianWindow::new(self.k, self.sigma)?,
            self.c4,
            self.beta,
            self.lambda,
            !self.no_ohem,
            !self.no_reweight,
        )
    }
}

/// Synthetic dataset geometry shared by train/eval/sweep.
#[derive(Args, Clone, Debug)]
pub struct DataOpts {
    #[arg(long, default_value_t = 200)]
    pub train_scenes: usize,
    #[arg(long, default_value_t = 50)]
    pub val_scenes: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    /// Thin-appendage width in pixels (1 or 2)
    #[arg(long, default_value_t = 1)]
    pub appendage_width: usize,
}

impl DataOpts {
    pub fn to_config(&self) -> segstruct_core::harness::DatasetConfig {
        segstruct_core::harness::DatasetConfig {
            scene: segstruct_core::harness::SceneConfig {
                height: self.height,
                width: self.width,
                class_count: self.classes,
                appendage_width: self.appendage_width,
                ..Default::default()
            },
            train_scenes: self.train_scenes,
            val_scenes: self.val_scenes,
        }
    }
}
