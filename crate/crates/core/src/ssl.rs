//! Structural similarity loss for segmentation: local standard
//! normalization of the ground-truth and prediction planes, a structural
//! error `e = |y_nor − p_nor|`, hard-example selection against the
//! theoretical maximum of `e`, and a sigmoid cross entropy reweighted by
//! `e` over the selected elements.
//!
//! Gradient contract: `e`, the hard mask `f`, and all local statistics are
//! constants during backpropagation. Only the cross-entropy factor carries
//! gradient, so the gradient of the total is exactly zero wherever `f = 0`
//! and `(e·f/M)·(σ(z) − y)` elsewhere.

use crate::error::{Error, Result};
use crate::grid::{one_hot, sigmoid, stable_sigmoid, LabelMap, LogitMap, Plane, ProbabilityMap, Tensor, VOID};
use crate::report::LossReport;
use crate::stats::{GaussianWindow, LocalStatsField};

/// Parameters of the structural similarity loss.
///
/// Defaults follow the reference configuration: 3×3 window with σ = 1.5,
/// C4 = 0.01, β = 0.1, λ = 0.5, with both the mining and reweighting
/// stages enabled.
#[derive(Debug, Clone)]
pub struct SslParams {
    pub window: GaussianWindow,
    pub c4: f64,
    pub beta: f64,
    pub lambda: f64,
    pub ohem_enabled: bool,
    pub reweight_enabled: bool,
}

impl SslParams {
    pub fn new(
        window: GaussianWindow,
        c4: f64,
        beta: f64,
        lambda: f64,
        ohem_enabled: bool,
        reweight_enabled: bool,
    ) -> Result<Self> {
        if !(c4 > 0.0) {
            return Err(Error::InvalidArgument(format!("C4 must be positive, got {c4}")));
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "beta must be in [0, 1), got {beta}"
            )));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be in [0, 1], got {lambda}"
            )));
        }
        Ok(SslParams {
            window,
            c4,
            beta,
            lambda,
            ohem_enabled,
            reweight_enabled,
        })
    }
}

impl Default for SslParams {
    fn default() -> Self {
        SslParams {
            window: GaussianWindow::new(3, 1.5).expect("valid default window"),
            c4: 0.01,
            beta: 0.1,
            lambda: 0.5,
            ohem_enabled: true,
            reweight_enabled: true,
        }
    }
}

/// Full outcome of one structural-similarity-loss evaluation.
#[derive(Debug, Clone)]
pub struct SslReport {
    pub total: f64,
    /// Structural error e ≥ 0, per element.
    pub error_map: Tensor,
    /// Hard mask f ∈ {0, 1}, zero at void pixels.
    pub hard_mask: Tensor,
    /// M = Σ f.
    pub hard_count: usize,
    /// M over the number of non-void elements.
    pub hard_proportion: f64,
    /// Gradient w.r.t. the logits; zero wherever f = 0.
    pub gradient: Tensor,
}

impl SslReport {
    /// Per-element stop-gradient weights: e·f with reweighting on, plain f
    /// otherwise.
    pub fn effective_weights(&self, params: &SslParams) -> Tensor {
        let mut out = self.hard_mask.clone();
        if params.reweight_enabled {
            for (w, &e) in out.as_mut_slice().iter_mut().zip(self.error_map.as_slice()) {
                *w *= e;
            }
        }
        out
    }

    /// Flatten into the generic loss report; the loss map holds the
    /// per-element weighted cross-entropy contributions.
    pub fn into_loss_report(self, labels: &LabelMap, logits: &LogitMap) -> LossReport {
        let t = logits.tensor();
        let (h, w, channels) = (t.height(), t.width(), t.channels());
        let mut loss_map = Tensor::zeros(h, w, channels);
        for ch in 0..channels {
            for r in 0..h {
                for c in 0..w {
                    if self.hard_mask.get(r, c, ch) == 0.0 {
                        continue;
                    }
                    let yv = if labels.get(r, c) as usize == ch { 1.0 } else { 0.0 };
                    let e = self.error_map.get(r, c, ch);
                    loss_map.set(r, c, ch, e * sigmoid_bce(t.get(r, c, ch), yv));
                }
            }
        }
        LossReport {
            total: self.total,
            loss_map,
            gradient: self.gradient,
            hard_count: Some(self.hard_count),
            hard_proportion: Some(self.hard_proportion),
        }
    }
}

/// Forward value of the structural loss with the stop-gradient factors
/// frozen: (1/M)·Σ weights·BCE(z, y), where `weights` is the e·f (or f)
/// map captured at a base point. This is the objective finite differences
/// must probe to match the analytic gradient.
pub fn ssl_frozen_value(
    labels: &LabelMap,
    logits: &LogitMap,
    weights: &Tensor,
    hard_count: usize,
) -> Result<f64> {
    check_label_logit_shapes(labels, logits, "ssl_frozen_value")?;
    if hard_count == 0 {
        return Ok(0.0);
    }
    let t = logits.tensor();
    let mut total = 0.0;
    for ch in 0..t.channels() {
        for r in 0..t.height() {
            for c in 0..t.width() {
                let w = weights.get(r, c, ch);
                if w == 0.0 {
                    continue;
                }
                let yv = if labels.get(r, c) as usize == ch { 1.0 } else { 0.0 };
                total += w * sigmoid_bce(t.get(r, c, ch), yv);
            }
        }
    }
    Ok(total / hard_count as f64)
}

/// Local standard normalization (x − μ + C4) / (σ + C4).
pub fn normalize_plane(plane: &Plane, mean: &Plane, stddev: &Plane, c4: f64) -> Plane {
    let mut out = Plane::zeros(plane.height(), plane.width());
    for i in 0..out.as_slice().len() {
        out.as_mut_slice()[i] =
            (plane.as_slice()[i] - mean.as_slice()[i] + c4) / (stddev.as_slice()[i] + c4);
    }
    out
}

/// Structural error e = |y_nor − p_nor|, per channel with independent
/// statistics. Both sides use the same E[x²] − μ² variance path.
pub fn structural_error(
    y: &ProbabilityMap,
    p: &ProbabilityMap,
    params: &SslParams,
) -> Result<Tensor> {
    let (yt, pt) = (y.tensor(), p.tensor());
    if !yt.same_shape(pt) {
        return Err(Error::shape(
            "structural_error",
            yt.shape_string(),
            pt.shape_string(),
        ));
    }
    let mut e = Tensor::zeros(yt.height(), yt.width(), yt.channels());
    for ch in 0..yt.channels() {
        let yp = yt.plane(ch);
        let pp = pt.plane(ch);
        let ys = LocalStatsField::compute(&yp, &params.window);
        let ps = LocalStatsField::compute(&pp, &params.window);
        let ynor = normalize_plane(&yp, &ys.mean, &ys.stddev(), params.c4);
        let pnor = normalize_plane(&pp, &ps.mean, &ps.stddev(), params.c4);
        let dst = e.plane_slice_mut(ch);
        for i in 0..dst.len() {
            dst[i] = (ynor.as_slice()[i] - pnor.as_slice()[i]).abs();
        }
    }
    Ok(e)
}

/// Theoretical maximum of the structural error. The normalized value is
/// maximal for a lone-positive window (center 1, all other pixels 0) and
/// minimal in the opposite configuration, so with w_c the center weight:
///
/// e_max = 2(1 − w_c) / (√(w_c(1 − w_c)) + C4)
///
/// Depends only on the window and C4, never on image contents. Degenerates
/// to 0 at k = 1 (σ = 0, every normalized value is 1).
pub fn e_max(params: &SslParams) -> f64 {
    let wc = params.window.center_weight();
    let sigma = (wc * (1.0 - wc)).max(0.0).sqrt();
    2.0 * (1.0 - wc) / (sigma + params.c4)
}

/// Hard-example mask f = 1{e > β·e_max}; void pixels are forced to 0. With
/// mining disabled every non-void element is kept. Returns the mask and M.
pub fn hard_mask(e: &Tensor, labels: &LabelMap, params: &SslParams) -> Result<(Tensor, usize)> {
    if e.height() != labels.height() || e.width() != labels.width() {
        return Err(Error::shape(
            "hard_mask",
            e.shape_string(),
            format!("{}x{} labels", labels.height(), labels.width()),
        ));
    }
    let threshold = params.beta * e_max(params);
    let mut mask = Tensor::zeros(e.height(), e.width(), e.channels());
    let mut count = 0usize;
    for ch in 0..e.channels() {
        for r in 0..e.height() {
            for c in 0..e.width() {
                if labels.get(r, c) == VOID {
                    continue;
                }
                let keep = if params.ohem_enabled {
                    e.get(r, c, ch) > threshold
                } else {
                    true
                };
                if keep {
                    mask.set(r, c, ch, 1.0);
                    count += 1;
                }
            }
        }
    }
    Ok((mask, count))
}

/// Numerically stable sigmoid cross entropy of a logit against a binary
/// target: max(z, 0) − z·y + ln(1 + exp(−|z|)).
#[inline]
pub fn sigmoid_bce(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn check_label_logit_shapes(labels: &LabelMap, logits: &LogitMap, context: &str) -> Result<()> {
    let t = logits.tensor();
    if labels.height() != t.height()
        || labels.width() != t.width()
        || labels.class_count() != t.channels()
    {
        return Err(Error::shape(
            context,
            format!(
                "{}x{} labels with {} classes",
                labels.height(),
                labels.width(),
                labels.class_count()
            ),
            t.shape_string(),
        ));
    }
    Ok(())
}

/// Plain sigmoid cross entropy averaged over non-void elements
/// (elements = non-void pixels × channels), with gradient (σ(z) − y)/N.
pub fn bce_mean(labels: &LabelMap, logits: &LogitMap) -> Result<LossReport> {
    check_label_logit_shapes(labels, logits, "bce_mean")?;
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let y = one_hot(labels);
    let n_elems = labels.non_void_count() * channels;
    let mut loss_map = Tensor::zeros(h, w, channels);
    let mut gradient = Tensor::zeros(h, w, channels);
    if n_elems == 0 {
        return Ok(LossReport::plain(0.0, loss_map, gradient));
    }
    let scale = 1.0 / n_elems as f64;
    let mut total = 0.0;
    for ch in 0..channels {
        for r in 0..h {
            for c in 0..w {
                if labels.get(r, c) == VOID {
                    continue;
                }
                let z = t.get(r, c, ch);
                let yv = y.tensor().get(r, c, ch);
                let bce = sigmoid_bce(z, yv);
                loss_map.set(r, c, ch, bce);
                total += bce;
                gradient.set(r, c, ch, (stable_sigmoid(z) - yv) * scale);
            }
        }
    }
    Ok(LossReport::plain(total * scale, loss_map, gradient))
}

/// Total structural similarity loss over the map:
/// (1/M) Σ e·f·BCE over non-void elements, with e treated as a constant
/// weighting coefficient (no gradient through e, f, or the statistics).
/// With reweighting disabled the factor e is replaced by 1. M = 0 yields
/// zero loss and zero gradient.
pub fn ssl_total(labels: &LabelMap, logits: &LogitMap, params: &SslParams) -> Result<SslReport> {
    check_label_logit_shapes(labels, logits, "ssl_total")?;
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let y = one_hot(labels);
    let p = sigmoid(logits);
    let error_map = structural_error(&y, &p, params)?;
    let (mask, hard_count) = hard_mask(&error_map, labels, params)?;
    let non_void_elems = labels.non_void_count() * channels;
    let hard_proportion = if non_void_elems == 0 {
        0.0
    } else {
        hard_count as f64 / non_void_elems as f64
    };

    let mut gradient = Tensor::zeros(h, w, channels);
    let mut total = 0.0;
    if hard_count > 0 {
        let scale = 1.0 / hard_count as f64;
        for ch in 0..channels {
            for r in 0..h {
                for c in 0..w {
                    if mask.get(r, c, ch) == 0.0 {
                        continue;
                    }
                    let weight = if params.reweight_enabled {
                        error_map.get(r, c, ch)
                    } else {
                        1.0
                    };
                    let z = t.get(r, c, ch);
                    let yv = y.tensor().get(r, c, ch);
                    total += weight * sigmoid_bce(z, yv);
                    gradient.set(r, c, ch, weight * scale * (stable_sigmoid(z) - yv));
                }
            }
        }
        total *= scale;
    }

    Ok(SslReport {
        total,
        error_map,
        hard_mask: mask,
        hard_count,
        hard_proportion,
        gradient,
    })
}

/// Combined objective λ·L_bce + (1 − λ)·L_ssl with the same convex
/// combination of gradients.
pub fn combined_loss(labels: &LabelMap, logits: &LogitMap, params: &SslParams) -> Result<LossReport> {
    let bce = bce_mean(labels, logits)?;
    let ssl = ssl_total(labels, logits, params)?;
    let lambda = params.lambda;
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let mut loss_map = Tensor::zeros(h, w, channels);
    let mut gradient = Tensor::zeros(h, w, channels);
    for i in 0..gradient.as_slice().len() {
        gradient.as_mut_slice()[i] =
            lambda * bce.gradient.as_slice()[i] + (1.0 - lambda) * ssl.gradient.as_slice()[i];
        let ssl_elem = ssl.error_map.as_slice()[i]
            * ssl.hard_mask.as_slice()[i]
            * bce.loss_map.as_slice()[i];
        loss_map.as_mut_slice()[i] = lambda * bce.loss_map.as_slice()[i] + (1.0 - lambda) * ssl_elem;
    }
    Ok(LossReport {
        total: lambda * bce.total + (1.0 - lambda) * ssl.total,
        loss_map,
        gradient,
        hard_count: Some(ssl.hard_count),
        hard_proportion: Some(ssl.hard_proportion),
    })
}

/// Softmax cross entropy baseline: −(1/N) Σ y·log p with softmax across
/// channels per pixel, void pixels excluded from N. The per-pixel loss map
/// has a single channel; the gradient is (softmax − y)/N.
pub fn softmax_ce(labels: &LabelMap, logits: &LogitMap) -> Result<LossReport> {
    check_label_logit_shapes(labels, logits, "softmax_ce")?;
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let n = labels.non_void_count();
    let mut loss_map = Tensor::zeros(h, w, 1);
    let mut gradient = Tensor::zeros(h, w, channels);
    if n == 0 {
        return Ok(LossReport::plain(0.0, loss_map, gradient));
    }
    let scale = 1.0 / n as f64;
    let mut total = 0.0;
    let mut probs = vec![0.0f64; channels];
    for r in 0..h {
        for c in 0..w {
            let id = labels.get(r, c);
            if id == VOID {
                continue;
            }
            let mut max = f64::NEG_INFINITY;
            for ch in 0..channels {
                max = max.max(t.get(r, c, ch));
            }
            let mut sum = 0.0;
            for ch in 0..channels {
                let e = (t.get(r, c, ch) - max).exp();
                probs[ch] = e;
                sum += e;
            }
            let log_sum = max + sum.ln();
            let pixel_loss = log_sum - t.get(r, c, id as usize);
            loss_map.set(r, c, 0, pixel_loss);
            total += pixel_loss;
            for ch in 0..channels {
                let p = probs[ch] / sum;
                let yv = if ch == id as usize { 1.0 } else { 0.0 };
                gradient.set(r, c, ch, (p - yv) * scale);
            }
        }
    }
    Ok(LossReport::plain(total * scale, loss_map, gradient))
}
