use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use segstruct_core::harness::ablation::{run_ablation, table_to_csv, AblationAxis};
use segstruct_core::harness::checkpoint::load_checkpoint;
use segstruct_core::harness::train::hard_proportion_sweep;
use segstruct_core::harness::{generate_dataset, LossKind, TrainConfig};
use segstruct_core::{Error, Result};

use crate::commands::{DataOpts, SslOpts};

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Axis: beta|sigma|region_size|ohem|reweight|loss_kind
    #[arg(long)]
    pub param: String,
    /// Comma-separated axis values
    #[arg(long)]
    pub values: String,
    /// Comma-separated seeds (ablation mode, >= 3)
    #[arg(long, default_value = "1,2,3")]
    pub seeds: String,
    /// Frozen-checkpoint mode: recompute hard proportions over beta on the
    /// validation split instead of training
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Base objective for ablation runs
    #[arg(long, default_value = "combined")]
    pub loss: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 100)]
    pub slow_start_steps: usize,
    /// Concurrent training runs in ablation mode
    #[arg(long, default_value_t = 2)]
    pub workers: usize,
    #[command(flatten)]
    pub ssl: SslOpts,
    #[command(flatten)]
    pub data: DataOpts,
    /// Also write the result CSV here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: SweepArgs) -> Result<()> {
    let values: Vec<String> = args.values.split(',').map(str::to_string).collect();
    let csv = if let Some(dir) = &args.checkpoint {
        if args.param != "beta" {
            return Err(Error::InvalidArgument(format!(
                "frozen-checkpoint sweeps support only beta, got {:?}",
                args.param
            )));
        }
        let betas: Vec<f64> = values
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad beta {v:?}")))
            })
            .collect::<Result<_>>()?;
        let model = load_checkpoint(dir)?;
        let dataset = generate_dataset(&args.data.to_config(), args.seed)?;
        let params = args.ssl.to_params()?;
        let rows = hard_proportion_sweep(&model, &dataset.val, &params, &betas)?;
        let mut csv = String::from("beta,hard_proportion\n");
        for (beta, proportion) in rows {
            csv.push_str(&format!("{beta},{proportion}\n"));
        }
        csv
    } else {
        let axis = AblationAxis::from_str(&args.param)?;
        let seeds: Vec<u64> = args
            .seeds
            .split(',')
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad seed {s:?}")))
            })
            .collect::<Result<_>>()?;
        let mut base = TrainConfig::new(LossKind::from_str(&args.loss)?, args.seed)
            .with_base_lr(args.lr);
        base.max_iter = args.iters;
        base.slow_start_steps = args.slow_start_steps;
        base.ssl = args.ssl.to_params()?;
        base.validate()?;
        let table = run_ablation(
            &base,
            &args.data.to_config(),
            axis,
            &values,
            &seeds,
            args.workers,
        )?;
        table_to_csv(&table)
    };
    print!("{csv}");
    if let Some(path) = args.out {
        std::fs::write(path, csv)?;
    }
    Ok(())
}
