use std::path::PathBuf;

use clap::Args;
use segstruct_core::harness::checkpoint::load_checkpoint;
use segstruct_core::harness::{evaluate, generate_dataset};
use segstruct_core::io::read_labels_pgm;
use segstruct_core::{ConfusionMatrix, Error, Result};

use crate::commands::DataOpts;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Ground-truth label PGMs (repeatable, zipped with --pred)
    #[arg(long)]
    pub truth: Vec<PathBuf>,
    /// Predicted label PGMs (repeatable)
    #[arg(long)]
    pub pred: Vec<PathBuf>,
    /// Class count for the PGM pairs (inferred from the first truth map
    /// when absent)
    #[arg(long)]
    pub label_classes: Option<usize>,
    /// Evaluate this checkpoint on a regenerated validation split instead
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub data: DataOpts,
    /// Also write the metrics CSV here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let csv = if let Some(dir) = &args.checkpoint {
        let model = load_checkpoint(dir)?;
        let dataset = generate_dataset(&args.data.to_config(), args.seed)?;
        let outcome = evaluate(&model, &dataset.val)?;
        outcome.confusion.to_csv()?
    } else {
        if args.truth.is_empty() || args.truth.len() != args.pred.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching --truth/--pred lists (got {} and {}) or --checkpoint",
                args.truth.len(),
                args.pred.len()
            )));
        }
        let first = read_labels_pgm(&args.truth[0], args.label_classes)?;
        let classes = args.label_classes.unwrap_or_else(|| first.class_count());
        let mut confusion = ConfusionMatrix::new(classes);
        for (truth_path, pred_path) in args.truth.iter().zip(&args.pred) {
            let truth = read_labels_pgm(truth_path, Some(classes))?;
            let pred = read_labels_pgm(pred_path, Some(classes))?;
            confusion.accumulate(&truth, &pred)?;
        }
        confusion.to_csv()?
    };
    print!("{csv}");
    if let Some(path) = args.out {
        std::fs::write(path, csv)?;
    }
    Ok(())
}
