use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use segstruct_core::harness::checkpoint::save_checkpoint;
use segstruct_core::harness::synth::derive_seed;
use segstruct_core::harness::train::log_to_csv;
use segstruct_core::harness::{evaluate, generate_dataset, train, LossKind, TinyFcn, TrainConfig};
use segstruct_core::Result;

use crate::commands::{DataOpts, SslOpts};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Objective: ce|bce|ssim|ssim_ms|ssl|combined
    #[arg(long, default_value = "combined")]
    pub loss: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for log, checkpoint, metrics, and manifest
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub slow_start_steps: usize,
    #[command(flatten)]
    pub ssl: SslOpts,
    #[command(flatten)]
    pub data: DataOpts,
}

pub fn build_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::new(LossKind::from_str(&args.loss)?, args.seed).with_base_lr(args.lr);
    cfg.max_iter = args.iters;
    cfg.slow_start_steps = args.slow_start_steps;
    cfg.ssl = args.ssl.to_params()?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: TrainArgs) -> Result<()> {
    let cfg = build_config(&args)?;
    let data_cfg = args.data.to_config();
    let dataset = generate_dataset(&data_cfg, args.seed)?;
    let mut model = TinyFcn::new(data_cfg.scene.class_count, derive_seed(args.seed, 3, 0))?;

    std::fs::create_dir_all(&args.out)?;
    let outcome = train(&mut model, &dataset, &cfg, Some(&args.out))?;
    let eval = evaluate(&model, &dataset.val)?;

    std::fs::write(args.out.join("log.csv"), log_to_csv(&outcome.log))?;
    save_checkpoint(&model, &args.out)?;
    std::fs::write(args.out.join("metrics.csv"), eval.confusion.to_csv()?)?;
    std::fs::write(
        args.out.join("config.txt"),
        format!(
            "loss={}\nseed={}\niters={}\nlr={}\nslow_start_steps={}\nk={}\nsigma={}\nbeta={}\nc4={}\nlambda={}\nohem={}\nreweight={}\n\
             train_scenes={}\nval_scenes={}\nheight={}\nwidth={}\nclasses={}\nappendage_width={}\ngradient_check_max_rel={}\n",
            cfg.loss,
            cfg.seed,
            cfg.max_iter,
            cfg.base_lr,
            cfg.slow_start_steps,
            args.ssl.k,
            args.ssl.sigma,
            args.ssl.beta,
            args.ssl.c4,
            args.ssl.lambda,
            !args.ssl.no_ohem,
            !args.ssl.no_reweight,
            args.data.train_scenes,
            args.data.val_scenes,
            args.data.height,
            args.data.width,
            args.data.classes,
            args.data.appendage_width,
            outcome.gradient_check_max_rel,
        ),
    )?;
    std::fs::write(
        args.out.join("manifest.txt"),
        "log.csv\ncheckpoint.segt\ncheckpoint.manifest\nmetrics.csv\nconfig.txt\n",
    )?;

    println!("val_miou,{}", eval.miou);
    println!("val_pixel_accuracy,{}", eval.pixel_accuracy);
    Ok(())
}
