//! SSIM index components, the simplified index, and the two SSIM-derived
//! losses used as training baselines.
//!
//! The index combines a luminance term and a contrast-structure term
//! computed from Gaussian-weighted local statistics. Both losses carry
//! analytic gradients with respect to the logits; unlike the structural
//! similarity loss, the gradients here flow through the local statistics.

use crate::error::{Error, Result};
use crate::grid::{sigmoid, LogitMap, Plane, ProbabilityMap, Tensor};
use crate::report::LossReport;
use crate::stats::{
    convolve_adjoint, local_covariance, local_mean, local_variance_raw, reflect_index,
    GaussianWindow,
};

/// Stabilization constants and component exponents for the SSIM index.
///
/// Defaults are the standard constants for unit dynamic range:
/// C1 = 0.01², C2 = 0.03², C3 = C2/2, with all exponents 1 (the simplified
/// form of the index).
#[derive(Debug, Clone, PartialEq)]
pub struct SsimParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub alpha: f64,
    pub theta: f64,
    pub gamma: f64,
}

impl SsimParams {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "SSIM constants must be positive, got C1={c1}, C2={c2}"
            )));
        }
        Ok(SsimParams {
            c1,
            c2,
            c3: c2 / 2.0,
            alpha: 1.0,
            theta: 1.0,
            gamma: 1.0,
        })
    }
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams::new(0.01 * 0.01, 0.03 * 0.03).expect("positive constants")
    }
}

/// Luminance term (2μxμy + C1) / (μx² + μy² + C1).
pub fn luminance_term(mu_x: f64, mu_y: f64, c1: f64) -> f64 {
    (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
}

/// Contrast term (2σxσy + C2) / (σx² + σy² + C2); takes standard deviations.
pub fn contrast_term(sigma_x: f64, sigma_y: f64, c2: f64) -> f64 {
    (2.0 * sigma_x * sigma_y + c2) / (sigma_x * sigma_x + sigma_y * sigma_y + c2)
}

/// Structure term (σxy + C3) / (σxσy + C3); the Pearson correlation
/// coefficient when C3 = 0.
pub fn structure_term(sigma_xy: f64, sigma_x: f64, sigma_y: f64, c3: f64) -> f64 {
    (sigma_xy + c3) / (sigma_x * sigma_y + c3)
}

fn weighted_patch_stats(x: &Plane, y: &Plane, win: &GaussianWindow) -> (f64, f64, f64, f64, f64) {
    let k = win.size();
    let (mut mx, mut my, mut ex2, mut ey2, mut exy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in 0..k {
        for c in 0..k {
            let w = win.weight_at(r, c);
            let a = x.get(r, c);
            let b = y.get(r, c);
            mx += w * a;
            my += w * b;
            ex2 += w * a * a;
            ey2 += w * b * b;
            exy += w * a * b;
        }
    }
    let vx = ex2 - mx * mx;
    let vy = ey2 - my * my;
    let cov = exy - mx * my;
    (mx, my, vx, vy, cov)
}

/// Simplified SSIM index S1·S2 between two k×k patches, with statistics
/// weighted by the window. Always in [−1, 1].
pub fn ssim(x: &Plane, y: &Plane, win: &GaussianWindow, params: &SsimParams) -> Result<f64> {
    let k = win.size();
    if x.height() != k || x.width() != k || !x.same_shape(y) {
        return Err(Error::shape(
            "ssim patch",
            format!("{}x{} and {}x{}", x.height(), x.width(), y.height(), y.width()),
            format!("{k}x{k} window"),
        ));
    }
    let (mx, my, vx, vy, cov) = weighted_patch_stats(x, y, win);
    let s1 = luminance_term(mx, my, params.c1);
    let s2 = (2.0 * cov + params.c2) / (vx + vy + params.c2);
    Ok(s1 * s2)
}

/// Per-pixel simplified SSIM between two planes, window statistics
/// computed with reflect padding.
pub fn ssim_plane_map(
    x: &Plane,
    y: &Plane,
    win: &GaussianWindow,
    params: &SsimParams,
) -> Result<Plane> {
    if !x.same_shape(y) {
        return Err(Error::shape(
            "ssim_plane_map",
            format!("{}x{}", x.height(), x.width()),
            format!("{}x{}", y.height(), y.width()),
        ));
    }
    let mu_x = local_mean(x, win);
    let mu_y = local_mean(y, win);
    let vx = local_variance_raw(x, &mu_x, win);
    let vy = local_variance_raw(y, &mu_y, win);
    let cov = local_covariance(x, y, &mu_x, &mu_y, win);
    let mut out = Plane::zeros(x.height(), x.width());
    for i in 0..out.as_slice().len() {
        let s1 = luminance_term(mu_x.as_slice()[i], mu_y.as_slice()[i], params.c1);
        let s2 = (2.0 * cov.as_slice()[i] + params.c2)
            / (vx.as_slice()[i] + vy.as_slice()[i] + params.c2);
        out.as_mut_slice()[i] = s1 * s2;
    }
    Ok(out)
}

fn check_same_shape(y: &Tensor, z: &Tensor, context: &str) -> Result<()> {
    if !y.same_shape(z) {
        return Err(Error::shape(context, y.shape_string(), z.shape_string()));
    }
    Ok(())
}

/// SSIM loss: mean over pixels and channels of 1 − SSIM, with the analytic
/// gradient taken through the local statistics and the sigmoid.
pub fn ssim_loss(
    y_map: &ProbabilityMap,
    logits: &LogitMap,
    win: &GaussianWindow,
    params: &SsimParams,
) -> Result<LossReport> {
    check_same_shape(y_map.tensor(), logits.tensor(), "ssim_loss")?;
    let p_map = sigmoid(logits);
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let n_total = (h * w * channels) as f64;

    let mut loss_map = Tensor::zeros(h, w, channels);
    let mut gradient = Tensor::zeros(h, w, channels);
    let mut total = 0.0;

    for ch in 0..channels {
        let y = y_map.tensor().plane(ch);
        let p = p_map.tensor().plane(ch);
        let mu_y = local_mean(&y, win);
        let mu_p = local_mean(&p, win);
        let vy = local_variance_raw(&y, &mu_y, win);
        let vp = local_variance_raw(&p, &mu_p, win);
        let cov = local_covariance(&y, &p, &mu_y, &mu_p, win);

        let npix = h * w;
        let mut f1 = Plane::zeros(h, w); // B * dA/dμp
        let mut f2 = Plane::zeros(h, w); // multiplies (p_j − μp)
        let mut f3 = Plane::zeros(h, w); // multiplies (y_j − μy)
        let mut f2mu = Plane::zeros(h, w);
        let mut f3mu = Plane::zeros(h, w);
        for i in 0..npix {
            let (my, mp) = (mu_y.as_slice()[i], mu_p.as_slice()[i]);
            let d1 = my * my + mp * mp + params.c1;
            let d2 = vy.as_slice()[i] + vp.as_slice()[i] + params.c2;
            let a = (2.0 * my * mp + params.c1) / d1;
            let b = (2.0 * cov.as_slice()[i] + params.c2) / d2;
            loss_map.plane_slice_mut(ch)[i] = 1.0 - a * b;
            total += 1.0 - a * b;
            f1.as_mut_slice()[i] = b * (2.0 * my - 2.0 * mp * a) / d1;
            f2.as_mut_slice()[i] = -2.0 * a * b / d2;
            f3.as_mut_slice()[i] = a * 2.0 / d2;
            f2mu.as_mut_slice()[i] = f2.as_slice()[i] * mp;
            f3mu.as_mut_slice()[i] = f3.as_slice()[i] * my;
        }

        let t1 = convolve_adjoint(&f1, win);
        let t2 = convolve_adjoint(&f2, win);
        let t2mu = convolve_adjoint(&f2mu, win);
        let t3 = convolve_adjoint(&f3, win);
        let t3mu = convolve_adjoint(&f3mu, win);

        let grad_plane = gradient.plane_slice_mut(ch);
        for i in 0..npix {
            let pj = p.as_slice()[i];
            let yj = y.as_slice()[i];
            let dl_dp = -(t1.as_slice()[i]
                + pj * t2.as_slice()[i]
                - t2mu.as_slice()[i]
                + yj * t3.as_slice()[i]
                - t3mu.as_slice()[i])
                / n_total;
            grad_plane[i] = dl_dp * pj * (1.0 - pj);
        }
    }

    Ok(LossReport::plain(total / n_total, loss_map, gradient))
}

/// Mean-subtracted SSIM loss: per location,
/// ‖x_m − y_m‖² / (‖x_m‖² + ‖y_m‖² + (N−1)·C2) over the k×k patch with
/// uniform statistics (N = k²), averaged over locations and channels.
/// Always in [0, 2].
pub fn ssim_ms_loss(
    y_map: &ProbabilityMap,
    logits: &LogitMap,
    win: &GaussianWindow,
    c2: f64,
) -> Result<LossReport> {
    check_same_shape(y_map.tensor(), logits.tensor(), "ssim_ms_loss")?;
    let p_map = sigmoid(logits);
    let t = logits.tensor();
    let (h, w, channels) = (t.height(), t.width(), t.channels());
    let n_total = (h * w * channels) as f64;
    let k = win.size();
    let half = win.half() as isize;
    let patch_n = (k * k) as f64;
    let stab = (patch_n - 1.0) * c2;

    let mut loss_map = Tensor::zeros(h, w, channels);
    let mut gradient = Tensor::zeros(h, w, channels);
    let mut total = 0.0;

    let mut px = vec![0.0f64; k * k];
    let mut py = vec![0.0f64; k * k];
    let mut rows = vec![0usize; k * k];
    let mut cols = vec![0usize; k * k];

    for ch in 0..channels {
        let y = y_map.tensor().plane(ch);
        let p = p_map.tensor().plane(ch);
        let mut grad_p = Plane::zeros(h, w);
        for r in 0..h {
            for c in 0..w {
                let mut idx = 0;
                let (mut sx, mut sy) = (0.0, 0.0);
                for dy in -half..=half {
                    for dx in -half..=half {
                        let rr = reflect_index(r as isize + dy, h);
                        let cc = reflect_index(c as isize + dx, w);
                        let a = p.get(rr, cc);
                        let b = y.get(rr, cc);
                        px[idx] = a;
                        py[idx] = b;
                        rows[idx] = rr;
                        cols[idx] = cc;
                        sx += a;
                        sy += b;
                        idx += 1;
                    }
                }
                let mx = sx / patch_n;
                let my = sy / patch_n;
                let (mut num, mut den) = (0.0, stab);
                for i in 0..k * k {
                    let xm = px[i] - mx;
                    let ym = py[i] - my;
                    num += (xm - ym) * (xm - ym);
                    den += xm * xm + ym * ym;
                }
                let value = num / den;
                loss_map.set(r, c, ch, value);
                total += value;
                // d(num/den)/dx_l = (2(xm_l − ym_l) − value·2·xm_l)/den;
                // the mean-subtraction terms cancel because Σxm = Σym = 0
                for i in 0..k * k {
                    let xm = px[i] - mx;
                    let ym = py[i] - my;
                    let g = (2.0 * (xm - ym) - value * 2.0 * xm) / den / n_total;
                    let cur = grad_p.get(rows[i], cols[i]);
                    grad_p.set(rows[i], cols[i], cur + g);
                }
            }
        }
        let grad_plane = gradient.plane_slice_mut(ch);
        for i in 0..h * w {
            let pj = p.as_slice()[i];
            grad_plane[i] = grad_p.as_slice()[i] * pj * (1.0 - pj);
        }
    }

    Ok(LossReport::plain(total / n_total, loss_map, gradient))
}
