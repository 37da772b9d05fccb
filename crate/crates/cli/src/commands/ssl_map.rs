use std::path::PathBuf;

use clap::Args;
use segstruct_core::io::{read_labels_pgm, read_segt};
use segstruct_core::ssl::{e_max, ssl_total};
use segstruct_core::{Error, LogitMap, Plane, ProbabilityMap, Result, Tensor};

use crate::commands::SslOpts;
use crate::heatmap::write_heatmap;

#[derive(Args, Debug)]
pub struct SslMapArgs {
    /// Ground-truth labels (PGM, value = class id, 255 = void)
    pub labels: PathBuf,
    /// Predicted probabilities (SEGT, H×W×C in [0, 1])
    pub probabilities: PathBuf,
    #[command(flatten)]
    pub ssl: SslOpts,
    /// Directory for e-map/mask PGMs and the summary CSV
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Per-pixel max across channels, for rendering H×W×C fields as one plane.
fn channel_max(t: &Tensor) -> Plane {
    let mut out = Plane::zeros(t.height(), t.width());
    for ch in 0..t.channels() {
        for r in 0..t.height() {
            for c in 0..t.width() {
                let v = t.get(r, c, ch);
                if v > out.get(r, c) {
                    out.set(r, c, v);
                }
            }
        }
    }
    out
}

/// Probabilities arrive as a file; the loss runs on logits. Invert the
/// sigmoid with clamping so saturated values stay finite.
fn logits_from_probabilities(probs: &ProbabilityMap) -> LogitMap {
    let t = probs.tensor();
    let data: Vec<f64> = t
        .as_slice()
        .iter()
        .map(|&p| {
            let p = p.clamp(1e-12, 1.0 - 1e-12);
            (p / (1.0 - p)).ln()
        })
        .collect();
    LogitMap::new(Tensor::from_vec(t.height(), t.width(), t.channels(), data).expect("same shape"))
        .expect("clamped logits are finite")
}

pub fn run(args: SslMapArgs) -> Result<()> {
    let probs_tensor = read_segt(&args.probabilities)?;
    let labels = read_labels_pgm(&args.labels, Some(probs_tensor.channels()))?;
    if labels.height() != probs_tensor.height() || labels.width() != probs_tensor.width() {
        return Err(Error::shape(
            "ssl-map inputs",
            format!("{}x{} labels", labels.height(), labels.width()),
            probs_tensor.shape_string(),
        ));
    }
    let probs = ProbabilityMap::new(probs_tensor)?;
    let params = args.ssl.to_params()?;
    let logits = logits_from_probabilities(&probs);
    let report = ssl_total(&labels, &logits, &params)?;
    let bound = e_max(&params);

    let csv = format!(
        "total,hard_count,hard_proportion,e_max\n{},{},{},{}\n",
        report.total, report.hard_count, report.hard_proportion, bound
    );
    print!("{csv}");

    if let Some(dir) = args.out_dir {
        std::fs::create_dir_all(&dir)?;
        write_heatmap(&dir.join("e_map.pgm"), &channel_max(&report.error_map))?;
        write_heatmap(&dir.join("mask.pgm"), &channel_max(&report.hard_mask))?;
        std::fs::write(dir.join("summary.csv"), csv)?;
    }
    Ok(())
}
