//! Momentum-SGD training with the poly learning-rate schedule and a slow
//! start, per-step CSV logging, and finite-difference verification of the
//! model gradients at initialization.
//!
//! Training is single-threaded by contract: a full run is bit-reproducible
//! from (seed, config).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{one_hot, LabelMap, LogitMap, Tensor};
use crate::metrics::ConfusionMatrix;
use crate::report::LossReport;
use crate::ssim::{ssim_loss, ssim_ms_loss, SsimParams};
use crate::ssl::{bce_mean, combined_loss, softmax_ce, ssl_frozen_value, ssl_total, SslParams};

use super::checkpoint::save_checkpoint;
use super::model::{ModelGradients, TinyFcn};
use super::synth::{derive_seed, Dataset, SyntheticScene};

pub const POLY_POWER: f64 = 0.9;

/// Training objective selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Ce,
    Bce,
    Ssim,
    SsimMs,
    Ssl,
    Combined,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Ce => "ce",
            LossKind::Bce => "bce",
            LossKind::Ssim => "ssim",
            LossKind::SsimMs => "ssim_ms",
            LossKind::Ssl => "ssl",
            LossKind::Combined => "combined",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(LossKind::Ce),
            "bce" => Ok(LossKind::Bce),
            "ssim" => Ok(LossKind::Ssim),
            "ssim_ms" => Ok(LossKind::SsimMs),
            "ssl" => Ok(LossKind::Ssl),
            "combined" => Ok(LossKind::Combined),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss kind {other:?}; expected ce|bce|ssim|ssim_ms|ssl|combined"
            ))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub ssl: SslParams,
    pub base_lr: f64,
    pub max_iter: usize,
    pub momentum: f64,
    pub slow_start_steps: usize,
    pub slow_start_lr: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(loss: LossKind, seed: u64) -> Self {
        // stable across every loss kind at desk scale; the mining stage
        // concentrates gradient mass on few elements, so the structural
        // losses run hotter than plain BCE at the same rate
        let base_lr = 0.1;
        TrainConfig {
            loss,
            ssl: SslParams::default(),
            base_lr,
            max_iter: 2000,
            momentum: 0.9,
            slow_start_steps: 100,
            slow_start_lr: base_lr / 7.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter <= self.slow_start_steps {
            return Err(Error::InvalidArgument(format!(
                "max_iter ({}) must exceed slow_start_steps ({})",
                self.max_iter, self.slow_start_steps
            )));
        }
        if !(self.base_lr > 0.0) {
            return Err(Error::InvalidArgument("base_lr must be positive".into()));
        }
        Ok(())
    }

    /// Keep the slow-start ratio when the base rate changes.
    pub fn with_base_lr(mut self, base_lr: f64) -> Self {
        self.base_lr = base_lr;
        self.slow_start_lr = base_lr / 7.0;
        self
    }
}

/// Poly schedule: base·(1 − iter/max_iter)^power.
pub fn poly_lr(iter: usize, max_iter: usize, base: f64, power: f64) -> f64 {
    base * (1.0 - iter as f64 / max_iter as f64).powf(power)
}

/// Schedule with the slow start applied to the first `slow_start_steps`.
pub fn effective_lr(cfg: &TrainConfig, iter: usize) -> f64 {
    if iter < cfg.slow_start_steps {
        cfg.slow_start_lr
    } else {
        poly_lr(iter, cfg.max_iter, cfg.base_lr, POLY_POWER)
    }
}

/// Evaluate the configured loss for one (labels, logits) pair.
pub fn evaluate_loss(labels: &LabelMap, logits: &LogitMap, cfg: &TrainConfig) -> Result<LossReport> {
    match cfg.loss {
        LossKind::Ce => softmax_ce(labels, logits),
        LossKind::Bce => bce_mean(labels, logits),
        LossKind::Ssim => {
            let y = one_hot(labels);
            ssim_loss(&y, logits, &cfg.ssl.window, &SsimParams::default())
        }
        LossKind::SsimMs => {
            let y = one_hot(labels);
            ssim_ms_loss(&y, logits, &cfg.ssl.window, SsimParams::default().c2)
        }
        LossKind::Ssl => {
            let report = ssl_total(labels, logits, &cfg.ssl)?;
            Ok(report.into_loss_report(labels, logits))
        }
        LossKind::Combined => combined_loss(labels, logits, &cfg.ssl),
    }
}

/// Loss value with the structure factors frozen at a base point, matching
/// the stop-gradient contract of the structural losses. `frozen` carries
/// (effective weight map, hard count) captured at the base point and is
/// ignored by losses without a mining stage.
pub fn frozen_loss_value(
    labels: &LabelMap,
    logits: &LogitMap,
    cfg: &TrainConfig,
    frozen: Option<&(Tensor, usize)>,
) -> Result<f64> {
    match cfg.loss {
        LossKind::Ce => Ok(softmax_ce(labels, logits)?.total),
        LossKind::Bce => Ok(bce_mean(labels, logits)?.total),
        LossKind::Ssim => {
            let y = one_hot(labels);
            Ok(ssim_loss(&y, logits, &cfg.ssl.window, &SsimParams::default())?.total)
        }
        LossKind::SsimMs => {
            let y = one_hot(labels);
            Ok(ssim_ms_loss(&y, logits, &cfg.ssl.window, SsimParams::default().c2)?.total)
        }
        LossKind::Ssl => {
            let (weights, count) = frozen
                .ok_or_else(|| Error::InvalidArgument("frozen structure required for ssl".into()))?;
            ssl_frozen_value(labels, logits, weights, *count)
        }
        LossKind::Combined => {
            let (weights, count) = frozen
                .ok_or_else(|| Error::InvalidArgument("frozen structure required".into()))?;
            let bce = bce_mean(labels, logits)?.total;
            let ssl = ssl_frozen_value(labels, logits, weights, *count)?;
            Ok(cfg.ssl.lambda * bce + (1.0 - cfg.ssl.lambda) * ssl)
        }
    }
}

/// Capture the stop-gradient factors (e·f, M) at the current logits.
pub fn capture_frozen_structure(
    labels: &LabelMap,
    logits: &LogitMap,
    cfg: &TrainConfig,
) -> Result<Option<(Tensor, usize)>> {
    match cfg.loss {
        LossKind::Ssl | LossKind::Combined => {
            let report = ssl_total(labels, logits, &cfg.ssl)?;
            Ok(Some((report.effective_weights(&cfg.ssl), report.hard_count)))
        }
        _ => Ok(None),
    }
}

/// Verify backprop against central finite differences on `coords`
/// deterministic parameter coordinates. Coordinates whose ±ε probes
/// straddle a rectifier kink are skipped: the objective is not
/// differentiable there and the central difference is not an oracle.
/// Returns the max relative error over the checked coordinates.
pub fn gradient_check(
    model: &TinyFcn,
    scene: &SyntheticScene,
    cfg: &TrainConfig,
    coords: usize,
    eps: f64,
) -> Result<f64> {
    let (logits, cache) = model.forward(&scene.image)?;
    let report = evaluate_loss(&scene.labels, &logits, cfg)?;
    let grads = model.backward(&cache, &report.gradient)?;
    let frozen = capture_frozen_structure(&scene.labels, &logits, cfg)?;

    let n = model.parameter_count();
    // coordinates carrying a vanishing share of the gradient are
    // roundoff-limited in FD; floor the denominator at 0.1% of the
    // largest coordinate so noise there cannot mask or mimic a defect
    let gmax = grads
        .layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(&l.bias))
        .fold(0.0f64, |m, &g| m.max(g.abs()));
    let floor = (1e-3 * gmax).max(1e-12);

    let mut max_rel: f64 = 0.0;
    let mut checked = 0usize;
    let mut candidate = 0u64;
    while checked < coords && candidate < 40 * coords as u64 {
        let index = (derive_seed(cfg.seed, 4, candidate) % n as u64) as usize;
        candidate += 1;
        let base = model.parameter(index);
        let mut probe = model.clone();

        probe.set_parameter(index, base + eps);
        let (logits_plus, cache_plus) = probe.forward(&scene.image)?;
        let plus = frozen_loss_value(&scene.labels, &logits_plus, cfg, frozen.as_ref())?;

        probe.set_parameter(index, base - eps);
        let (logits_minus, cache_minus) = probe.forward(&scene.image)?;
        let minus = frozen_loss_value(&scene.labels, &logits_minus, cfg, frozen.as_ref())?;

        if cache_plus.relu_signs() != cache_minus.relu_signs() {
            continue;
        }
        checked += 1;

        let fd = (plus - minus) / (2.0 * eps);
        let analytic = TinyFcn::gradient_at(&grads, index);
        let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(floor);
        max_rel = max_rel.max(rel);
    }
    if checked == 0 {
        return Err(Error::InvalidArgument(
            "gradient check found no kink-free coordinates".into(),
        ));
    }
    Ok(max_rel)
}

/// One training-log row; the hard-example columns are empty for losses
/// without a mining stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub iter: usize,
    pub lr: f64,
    pub loss: f64,
    pub hard_count: Option<usize>,
    pub hard_proportion: Option<f64>,
}

pub const LOG_CSV_HEADER: &str = "iter,lr,loss,hard_count,hard_proportion";

pub fn log_to_csv(log: &[StepLog]) -> String {
    let mut out = String::from(LOG_CSV_HEADER);
    out.push('\n');
    for row in log {
        let hc = row.hard_count.map(|v| v.to_string()).unwrap_or_default();
        let hp = row.hard_proportion.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", row.iter, row.lr, row.loss, hc, hp));
    }
    out
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub log: Vec<StepLog>,
    pub gradient_check_max_rel: f64,
}

const GRADIENT_CHECK_COORDS: usize = 10;
// Central differences on parameter coordinates are roundoff-limited below
// 1e-4: loss roundoff ~5e-15 divided by 2ε must stay small against
// gradients down to ~1e-6.
const GRADIENT_CHECK_EPS: f64 = 1e-4;
const GRADIENT_CHECK_TOLERANCE: f64 = 1e-5;

/// Train in place. `diagnostics_dir` receives a state dump if the loss
/// turns non-finite (defaults to a directory under the system temp dir).
pub fn train(
    model: &mut TinyFcn,
    dataset: &Dataset,
    cfg: &TrainConfig,
    diagnostics_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }

    let gradient_check_max_rel =
        gradient_check(model, &dataset.train[0], cfg, GRADIENT_CHECK_COORDS, GRADIENT_CHECK_EPS)?;
    if gradient_check_max_rel > GRADIENT_CHECK_TOLERANCE {
        return Err(Error::GradientCheck {
            max_rel: gradient_check_max_rel,
            tolerance: GRADIENT_CHECK_TOLERANCE,
            coordinate: 0,
        });
    }

    let mut velocity: Vec<(Vec<f64>, Vec<f64>)> = model
        .layers
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
        .collect();

    let mut log = Vec::with_capacity(cfg.max_iter);
    let n_scenes = dataset.train.len();
    let mut order: Vec<usize> = (0..n_scenes).collect();
    let mut epoch = 0u64;
    reshuffle(&mut order, cfg.seed, epoch);

    for iter in 0..cfg.max_iter {
        if iter % n_scenes == 0 && iter > 0 {
            epoch += 1;
            reshuffle(&mut order, cfg.seed, epoch);
        }
        let scene = &dataset.train[order[iter % n_scenes]];
        let lr = effective_lr(cfg, iter);

        // a diverged model overflows the logits before the loss is even
        // evaluated; both stages abort through the same dump
        let (logits, cache) = match model.forward(&scene.image) {
            Ok(pair) => pair,
            Err(Error::InvalidArgument(_)) => {
                let dump = dump_diagnostics(model, cfg, iter, scene, diagnostics_dir)?;
                return Err(Error::NonFiniteLoss { iter, dump });
            }
            Err(e) => return Err(e),
        };
        let report = evaluate_loss(&scene.labels, &logits, cfg)?;
        if !report.total.is_finite() {
            let dump = dump_diagnostics(model, cfg, iter, scene, diagnostics_dir)?;
            return Err(Error::NonFiniteLoss { iter, dump });
        }
        let grads = model.backward(&cache, &report.gradient)?;
        apply_momentum_sgd(model, &grads, &mut velocity, cfg.momentum, lr);

        log.push(StepLog {
            iter,
            lr,
            loss: report.total,
            hard_count: report.hard_count,
            hard_proportion: report.hard_proportion,
        });
    }

    Ok(TrainOutcome {
        log,
        gradient_check_max_rel,
    })
}

fn reshuffle(order: &mut [usize], seed: u64, epoch: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, epoch));
    order.shuffle(&mut rng);
}

fn apply_momentum_sgd(
    model: &mut TinyFcn,
    grads: &ModelGradients,
    velocity: &mut [(Vec<f64>, Vec<f64>)],
    momentum: f64,
    lr: f64,
) {
    for (l, layer) in model.layers.iter_mut().enumerate() {
        let (vw, vb) = &mut velocity[l];
        let g = &grads.layers[l];
        for i in 0..layer.weights.len() {
            vw[i] = momentum * vw[i] + g.weights[i];
            layer.weights[i] -= lr * vw[i];
        }
        for i in 0..layer.bias.len() {
            vb[i] = momentum * vb[i] + g.bias[i];
            layer.bias[i] -= lr * vb[i];
        }
    }
}

fn dump_diagnostics(
    model: &TinyFcn,
    cfg: &TrainConfig,
    iter: usize,
    scene: &SyntheticScene,
    dir: Option<&Path>,
) -> Result<PathBuf> {
    let dump = match dir {
        Some(d) => d.join("nonfinite-dump"),
        None => std::env::temp_dir().join(format!("segstruct-dump-{}-{}", cfg.seed, iter)),
    };
    std::fs::create_dir_all(&dump)?;
    save_checkpoint(model, &dump)?;
    std::fs::write(
        dump.join("state.txt"),
        format!(
            "iter={iter}\nloss_kind={}\nseed={}\nscene_seed={}\n",
            cfg.loss, cfg.seed, scene.seed
        ),
    )?;
    Ok(dump)
}

/// Forward the val split and score predictions against ground truth.
#[derive(Debug)]
pub struct EvalOutcome {
    pub confusion: ConfusionMatrix,
    pub miou: f64,
    pub pixel_accuracy: f64,
}

pub fn evaluate(model: &TinyFcn, scenes: &[SyntheticScene]) -> Result<EvalOutcome> {
    if scenes.is_empty() {
        return Err(Error::NoPixels);
    }
    let mut confusion = ConfusionMatrix::new(model.class_count);
    for scene in scenes {
        let (logits, _) = model.forward(&scene.image)?;
        let probs = crate::grid::sigmoid(&logits);
        let pred = crate::grid::argmax_labels(&probs);
        confusion.accumulate(&scene.labels, &pred)?;
    }
    let miou = confusion.miou()?;
    let pixel_accuracy = confusion.pixel_accuracy()?;
    Ok(EvalOutcome {
        confusion,
        miou,
        pixel_accuracy,
    })
}

/// Mean hard-example proportion over scenes for each β, all on the same
/// frozen model. The structural error is computed once per scene; only the
/// threshold varies.
pub fn hard_proportion_sweep(
    model: &TinyFcn,
    scenes: &[SyntheticScene],
    base: &SslParams,
    betas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    use crate::grid::VOID;
    use crate::ssl::{e_max, structural_error};

    if scenes.is_empty() {
        return Err(Error::NoPixels);
    }
    let bound = e_max(base);
    let mut totals = vec![0.0f64; betas.len()];
    for scene in scenes {
        let (logits, _) = model.forward(&scene.image)?;
        let probs = crate::grid::sigmoid(&logits);
        let y = one_hot(&scene.labels);
        let e = structural_error(&y, &probs, base)?;
        let non_void = scene.labels.non_void_count() * e.channels();
        if non_void == 0 {
            continue;
        }
        for (bi, &beta) in betas.iter().enumerate() {
            let threshold = beta * bound;
            let mut count = 0usize;
            for ch in 0..e.channels() {
                for r in 0..e.height() {
                    for c in 0..e.width() {
                        if scene.labels.get(r, c) != VOID && e.get(r, c, ch) > threshold {
                            count += 1;
                        }
                    }
                }
            }
            totals[bi] += count as f64 / non_void as f64;
        }
    }
    Ok(betas
        .iter()
        .zip(&totals)
        .map(|(&b, &t)| (b, t / scenes.len() as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_dataset, DatasetConfig, SceneConfig};

    fn tiny_dataset(seed: u64) -> Dataset {
        let config = DatasetConfig {
            scene: SceneConfig {
                height: 32,
                width: 32,
                ..Default::default()
            },
            train_scenes: 4,
            val_scenes: 2,
        };
        generate_dataset(&config, seed).unwrap()
    }

    fn short_config(loss: LossKind, seed: u64) -> TrainConfig {
        let mut cfg = TrainConfig::new(loss, seed);
        cfg.max_iter = 12;
        cfg.slow_start_steps = 4;
        cfg
    }

    #[test]
    fn loss_kind_round_trips_through_strings() {
        for kind in [
            LossKind::Ce,
            LossKind::Bce,
            LossKind::Ssim,
            LossKind::SsimMs,
            LossKind::Ssl,
            LossKind::Combined,
        ] {
            assert_eq!(LossKind::from_str(kind.as_str()).unwrap(), kind);
        }
        assert!(LossKind::from_str("dice").is_err());
    }

    #[test]
    fn poly_schedule_reference_points() {
        let base = 0.007;
        assert_eq!(poly_lr(2000, 2000, base, POLY_POWER), 0.0);
        let mid = poly_lr(1000, 2000, base, POLY_POWER);
        assert!((mid - base * 0.5f64.powf(0.9)).abs() < 1e-15);
        assert!((mid / base - 0.5359).abs() < 1e-4);
        // boundary: poly applies from slow_start_steps onwards
        let cfg = TrainConfig::new(LossKind::Bce, 0).with_base_lr(base);
        assert_eq!(effective_lr(&cfg, 0), base / 7.0);
        assert_eq!(effective_lr(&cfg, 99), base / 7.0);
        assert_eq!(
            effective_lr(&cfg, 100),
            poly_lr(100, cfg.max_iter, base, POLY_POWER)
        );
    }

    #[test]
    fn config_validation_rejects_short_runs() {
        let mut cfg = TrainConfig::new(LossKind::Bce, 0);
        cfg.max_iter = 50;
        cfg.slow_start_steps = 100;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let dataset = tiny_dataset(3);
        let mut cfg = short_config(LossKind::Bce, 3);
        // validation requires a positive base rate; park every real step
        // inside a zero-rate slow start and leave one ~1e-300 poly step
        cfg.base_lr = 1e-300;
        cfg.slow_start_lr = 0.0;
        cfg.slow_start_steps = 6;
        cfg.max_iter = 7;
        let mut model = TinyFcn::new(3, 3).unwrap();
        let before = model.layers[0].weights.clone();
        let _ = train(&mut model, &dataset, &cfg, None).unwrap();
        for (a, b) in before.iter().zip(&model.layers[0].weights) {
            assert!((a - b).abs() < 1e-250);
        }
    }

    #[test]
    fn quadratic_surrogate_converges_with_momentum() {
        // single parameter, loss (w - 3)²/2: the optimizer must reach the
        // analytic minimum
        let mut w = 0.0f64;
        let mut v = 0.0f64;
        for _ in 0..400 {
            let g = w - 3.0;
            v = 0.9 * v + g;
            w -= 0.05 * v;
        }
        assert!((w - 3.0).abs() < 1e-6, "converged to {w}");
    }

    #[test]
    fn training_is_bit_reproducible() {
        let dataset = tiny_dataset(5);
        let cfg = short_config(LossKind::Combined, 5);
        let mut m1 = TinyFcn::new(3, 5).unwrap();
        let mut m2 = TinyFcn::new(3, 5).unwrap();
        let o1 = train(&mut m1, &dataset, &cfg, None).unwrap();
        let o2 = train(&mut m2, &dataset, &cfg, None).unwrap();
        assert_eq!(o1.log, o2.log);
        for (a, b) in m1.layers.iter().zip(&m2.layers) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
        }
    }

    #[test]
    fn lambda_one_combined_tracks_bce_exactly() {
        let dataset = tiny_dataset(6);
        let mut cfg_ssl = short_config(LossKind::Combined, 6);
        cfg_ssl.ssl.lambda = 1.0;
        let cfg_bce = short_config(LossKind::Bce, 6);
        let mut m1 = TinyFcn::new(3, 6).unwrap();
        let mut m2 = TinyFcn::new(3, 6).unwrap();
        let o1 = train(&mut m1, &dataset, &cfg_ssl, None).unwrap();
        let o2 = train(&mut m2, &dataset, &cfg_bce, None).unwrap();
        for (a, b) in o1.log.iter().zip(&o2.log) {
            assert_eq!(a.loss, b.loss, "losses diverged at iter {}", a.iter);
        }
        for (a, b) in m1.layers.iter().zip(&m2.layers) {
            assert_eq!(a.weights, b.weights);
        }
    }

    #[test]
    fn model_gradients_match_finite_differences_for_every_loss() {
        let dataset = tiny_dataset(7);
        for loss in [
            LossKind::Ce,
            LossKind::Bce,
            LossKind::Ssim,
            LossKind::SsimMs,
            LossKind::Ssl,
            LossKind::Combined,
        ] {
            let cfg = short_config(loss, 7);
            let model = TinyFcn::new(3, 7).unwrap();
            let max_rel = gradient_check(&model, &dataset.train[0], &cfg, 10, 1e-4).unwrap();
            assert!(max_rel <= 1e-5, "{loss}: max relative error {max_rel}");
        }
    }

    #[test]
    fn diverged_run_aborts_with_diagnostic_dump() {
        let dataset = tiny_dataset(13);
        let mut cfg = short_config(LossKind::Bce, 13);
        // an absurd rate overflows the parameters within a step or two
        cfg.base_lr = 1e200;
        cfg.slow_start_lr = 1e200;
        let dir = tempfile::tempdir().unwrap();
        let mut model = TinyFcn::new(3, 13).unwrap();
        match train(&mut model, &dataset, &cfg, Some(dir.path())) {
            Err(Error::NonFiniteLoss { dump, .. }) => {
                assert!(dump.join("state.txt").exists());
                assert!(dump.join("checkpoint.segt").exists());
            }
            other => panic!("expected NonFiniteLoss, got {other:?}"),
        }
    }

    #[test]
    fn log_csv_has_fixed_header() {
        let log = vec![StepLog {
            iter: 0,
            lr: 0.05,
            loss: 1.25,
            hard_count: Some(3),
            hard_proportion: Some(0.25),
        }];
        let csv = log_to_csv(&log);
        assert!(csv.starts_with("iter,lr,loss,hard_count,hard_proportion\n"));
        assert!(csv.contains("0,0.05,1.25,3,0.25"));
    }

    #[test]
    fn evaluate_perfect_model_scores_one() {
        // a model that reproduces one-hot ground truth exactly is not
        // constructible here; instead check evaluate() wiring on the
        // identity case via confusion on ground-truth labels
        let dataset = tiny_dataset(9);
        let mut confusion = ConfusionMatrix::new(3);
        for scene in &dataset.val {
            confusion.accumulate(&scene.labels, &scene.labels).unwrap();
        }
        assert_eq!(confusion.miou().unwrap(), 1.0);
    }

    #[test]
    fn hard_proportion_sweep_is_non_increasing() {
        let dataset = tiny_dataset(11);
        let model = TinyFcn::new(3, 11).unwrap();
        let betas = [0.06, 0.08, 0.10, 0.12];
        let rows =
            hard_proportion_sweep(&model, &dataset.val, &SslParams::default(), &betas).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].1 <= pair[0].1, "{rows:?}");
        }
    }
}
