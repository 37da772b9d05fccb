//! Ablation experiment driver: sweep one configuration axis over a value
//! grid and a set of seeds, train one model per (value, seed) pair, and
//! tabulate validation mIoU. Runs are independent, so they may execute on
//! worker threads; results are written back by job index and the table is
//! identical regardless of scheduling.

use std::str::FromStr;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::stats::GaussianWindow;

use super::model::TinyFcn;
use super::synth::{derive_seed, generate_dataset, DatasetConfig};
use super::train::{evaluate, train, LossKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    Beta,
    Sigma,
    RegionSize,
    Ohem,
    Reweight,
    LossKind,
}

impl AblationAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            AblationAxis::Beta => "beta",
            AblationAxis::Sigma => "sigma",
            AblationAxis::RegionSize => "region_size",
            AblationAxis::Ohem => "ohem",
            AblationAxis::Reweight => "reweight",
            AblationAxis::LossKind => "loss_kind",
        }
    }
}

impl FromStr for AblationAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(AblationAxis::Beta),
            "sigma" => Ok(AblationAxis::Sigma),
            "region_size" => Ok(AblationAxis::RegionSize),
            "ohem" => Ok(AblationAxis::Ohem),
            "reweight" => Ok(AblationAxis::Reweight),
            "loss_kind" => Ok(AblationAxis::LossKind),
            other => Err(Error::InvalidArgument(format!(
                "unknown ablation axis {other:?}; expected beta|sigma|region_size|ohem|reweight|loss_kind"
            ))),
        }
    }
}

/// Derive the run configuration for one axis value.
pub fn apply_axis(base: &TrainConfig, axis: AblationAxis, value: &str) -> Result<TrainConfig> {
    let mut cfg = base.clone();
    match axis {
        AblationAxis::Beta => {
            let beta: f64 = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad beta {value:?}")))?;
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidArgument(format!("beta {beta} outside [0,1)")));
            }
            cfg.ssl.beta = beta;
        }
        AblationAxis::Sigma => {
            let sigma: f64 = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad sigma {value:?}")))?;
            cfg.ssl.window = GaussianWindow::new(cfg.ssl.window.size(), sigma)?;
        }
        AblationAxis::RegionSize => {
            let size: usize = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad region size {value:?}")))?;
            cfg.ssl.window = GaussianWindow::new(size, cfg.ssl.window.sigma())?;
        }
        AblationAxis::Ohem => {
            cfg.ssl.ohem_enabled = parse_switch(value)?;
        }
        AblationAxis::Reweight => {
            cfg.ssl.reweight_enabled = parse_switch(value)?;
        }
        AblationAxis::LossKind => {
            cfg.loss = LossKind::from_str(value)?;
        }
    }
    Ok(cfg)
}

fn parse_switch(value: &str) -> Result<bool> {
    match value {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(Error::InvalidArgument(format!(
            "bad switch value {other:?}; expected on|off"
        ))),
    }
}

/// One training run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRun {
    pub value: String,
    pub seed: u64,
    pub val_miou: f64,
    /// Mean of the logged per-step hard proportion; absent for losses
    /// without a mining stage.
    pub mean_hard_proportion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSummary {
    pub value: String,
    pub miou_mean: f64,
    pub miou_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub axis: String,
    pub runs: Vec<AblationRun>,
    pub summaries: Vec<AblationSummary>,
}

/// Run the sweep. Requires at least 3 seeds. `workers` bounds the number
/// of concurrent runs (each run itself stays single-threaded).
pub fn run_ablation(
    base: &TrainConfig,
    data_cfg: &DatasetConfig,
    axis: AblationAxis,
    values: &[String],
    seeds: &[u64],
    workers: usize,
) -> Result<AblationTable> {
    if seeds.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "ablation needs at least 3 seeds, got {}",
            seeds.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("no axis values given".into()));
    }
    // validate the whole grid up front so worker threads only see good configs
    let mut jobs: Vec<(usize, TrainConfig, String, u64)> = Vec::new();
    for value in values {
        let cfg = apply_axis(base, axis, value)?;
        for &seed in seeds {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            jobs.push((jobs.len(), cfg, value.clone(), seed));
        }
    }

    let results: Mutex<Vec<Option<AblationRun>>> = Mutex::new(vec![None; jobs.len()]);
    let errors: Mutex<Vec<Error>> = Mutex::new(Vec::new());
    let queue: Mutex<std::vec::IntoIter<(usize, TrainConfig, String, u64)>> =
        Mutex::new(jobs.into_iter());

    let worker_count = workers.max(1);
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let job = queue.lock().expect("queue lock").next();
                let Some((index, cfg, value, seed)) = job else {
                    return;
                };
                match run_one(&cfg, data_cfg, &value, seed) {
                    Ok(run) => results.lock().expect("results lock")[index] = Some(run),
                    Err(e) => errors.lock().expect("errors lock").push(e),
                }
            });
        }
    });

    if let Some(e) = errors.into_inner().expect("errors lock").into_iter().next() {
        return Err(e);
    }
    let runs: Vec<AblationRun> = results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job completed"))
        .collect();

    let summaries = aggregate_runs(values, &runs);
    Ok(AblationTable {
        axis: axis.as_str().to_string(),
        runs,
        summaries,
    })
}

fn run_one(cfg: &TrainConfig, data_cfg: &DatasetConfig, value: &str, seed: u64) -> Result<AblationRun> {
    let dataset = generate_dataset(data_cfg, seed)?;
    let mut model = TinyFcn::new(data_cfg.scene.class_count, derive_seed(seed, 3, 0))?;
    let outcome = train(&mut model, &dataset, cfg, None)?;
    let eval = evaluate(&model, &dataset.val)?;
    let proportions: Vec<f64> = outcome
        .log
        .iter()
        .filter_map(|row| row.hard_proportion)
        .collect();
    let mean_hard_proportion = if proportions.is_empty() {
        None
    } else {
        Some(proportions.iter().sum::<f64>() / proportions.len() as f64)
    };
    Ok(AblationRun {
        value: value.to_string(),
        seed,
        val_miou: eval.miou,
        mean_hard_proportion,
    })
}

/// Mean and sample standard deviation of val mIoU per axis value, in the
/// given value order.
pub fn aggregate_runs(values: &[String], runs: &[AblationRun]) -> Vec<AblationSummary> {
    values
        .iter()
        .map(|value| {
            let mious: Vec<f64> = runs
                .iter()
                .filter(|r| &r.value == value)
                .map(|r| r.val_miou)
                .collect();
            let n = mious.len() as f64;
            let mean = mious.iter().sum::<f64>() / n;
            let var = if mious.len() > 1 {
                mious.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            AblationSummary {
                value: value.clone(),
                miou_mean: mean,
                miou_std: var.sqrt(),
            }
        })
        .collect()
}

pub const ABLATION_CSV_HEADER: &str =
    "kind,axis,value,seed,val_miou,miou_mean,miou_std,mean_hard_proportion";

pub fn table_to_csv(table: &AblationTable) -> String {
    let mut out = String::from(ABLATION_CSV_HEADER);
    out.push('\n');
    for run in &table.runs {
        let hp = run
            .mean_hard_proportion
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "run,{},{},{},{},,,{}\n",
            table.axis, run.value, run.seed, run.val_miou, hp
        ));
    }
    for s in &table.summaries {
        out.push_str(&format!(
            "summary,{},{},,,{},{},\n",
            table.axis, s.value, s.miou_mean, s.miou_std
        ));
    }
    out
}

/// Reload a table written by [`table_to_csv`].
pub fn parse_table_csv(text: &str) -> Result<AblationTable> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format {
        format: "ablation CSV",
        detail: "empty file".into(),
    })?;
    if header != ABLATION_CSV_HEADER {
        return Err(Error::Format {
            format: "ablation CSV",
            detail: format!("unexpected header {header:?}"),
        });
    }
    let mut axis = String::new();
    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format {
                format: "ablation CSV",
                detail: format!("expected 8 fields, got {}: {line:?}", fields.len()),
            });
        }
        axis = fields[1].to_string();
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Format {
                format: "ablation CSV",
                detail: format!("bad {what}: {s:?}"),
            })
        };
        match fields[0] {
            "run" => runs.push(AblationRun {
                value: fields[2].to_string(),
                seed: fields[3].parse().map_err(|_| Error::Format {
                    format: "ablation CSV",
                    detail: format!("bad seed {:?}", fields[3]),
                })?,
                val_miou: parse(fields[4], "val_miou")?,
                mean_hard_proportion: if fields[7].is_empty() {
                    None
                } else {
                    Some(parse(fields[7], "mean_hard_proportion")?)
                },
            }),
            "summary" => summaries.push(AblationSummary {
                value: fields[2].to_string(),
                miou_mean: parse(fields[5], "miou_mean")?,
                miou_std: parse(fields[6], "miou_std")?,
            }),
            other => {
                return Err(Error::Format {
                    format: "ablation CSV",
                    detail: format!("unknown row kind {other:?}"),
                })
            }
        }
    }
    Ok(AblationTable {
        axis,
        runs,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::SceneConfig;

    fn small_setup() -> (TrainConfig, DatasetConfig) {
        let mut cfg = TrainConfig::new(LossKind::Ssl, 0);
        cfg.max_iter = 8;
        cfg.slow_start_steps = 2;
        let data = DatasetConfig {
            scene: SceneConfig {
                height: 32,
                width: 32,
                ..Default::default()
            },
            train_scenes: 3,
            val_scenes: 2,
        };
        (cfg, data)
    }

    #[test]
    fn axis_parsing_and_application() {
        let (cfg, _) = small_setup();
        let c = apply_axis(&cfg, AblationAxis::Beta, "0.08").unwrap();
        assert_eq!(c.ssl.beta, 0.08);
        let c = apply_axis(&cfg, AblationAxis::Sigma, "2.5").unwrap();
        assert_eq!(c.ssl.window.sigma(), 2.5);
        let c = apply_axis(&cfg, AblationAxis::RegionSize, "11").unwrap();
        assert_eq!(c.ssl.window.size(), 11);
        let c = apply_axis(&cfg, AblationAxis::Ohem, "off").unwrap();
        assert!(!c.ssl.ohem_enabled);
        let c = apply_axis(&cfg, AblationAxis::LossKind, "bce").unwrap();
        assert_eq!(c.loss, LossKind::Bce);
        assert!(apply_axis(&cfg, AblationAxis::RegionSize, "4").is_err());
        assert!(apply_axis(&cfg, AblationAxis::Beta, "1.2").is_err());
        assert!("nope".parse::<AblationAxis>().is_err());
    }

    #[test]
    fn requires_three_seeds() {
        let (cfg, data) = small_setup();
        let err = run_ablation(
            &cfg,
            &data,
            AblationAxis::Ohem,
            &["on".into(), "off".into()],
            &[1, 2],
            1,
        );
        assert!(err.is_err());
    }

    #[test]
    fn ohem_axis_produces_two_rows_per_seed() {
        let (cfg, data) = small_setup();
        let table = run_ablation(
            &cfg,
            &data,
            AblationAxis::Ohem,
            &["on".into(), "off".into()],
            &[1, 2, 3],
            2,
        )
        .unwrap();
        assert_eq!(table.runs.len(), 6);
        assert_eq!(table.summaries.len(), 2);
        // fixed ordering: all seeds of the first value first
        assert!(table.runs[..3].iter().all(|r| r.value == "on"));
        assert!(table.runs[3..].iter().all(|r| r.value == "off"));
        // ssl runs log hard proportions
        assert!(table.runs.iter().all(|r| r.mean_hard_proportion.is_some()));
    }

    #[test]
    fn table_round_trips_and_reaggregates_identically() {
        let (cfg, data) = small_setup();
        let values = vec!["on".to_string(), "off".to_string()];
        let table = run_ablation(&cfg, &data, AblationAxis::Reweight, &values, &[1, 2, 3], 2)
            .unwrap();
        let csv = table_to_csv(&table);
        let back = parse_table_csv(&csv).unwrap();
        assert_eq!(back, table);
        let reaggregated = aggregate_runs(&values, &back.runs);
        assert_eq!(reaggregated, table.summaries);
    }

    #[test]
    fn parallel_and_sequential_tables_agree() {
        let (cfg, data) = small_setup();
        let values = vec!["0.08".to_string(), "0.12".to_string()];
        let seq = run_ablation(&cfg, &data, AblationAxis::Beta, &values, &[1, 2, 3], 1).unwrap();
        let par = run_ablation(&cfg, &data, AblationAxis::Beta, &values, &[1, 2, 3], 4).unwrap();
        assert_eq!(seq, par);
    }
}
