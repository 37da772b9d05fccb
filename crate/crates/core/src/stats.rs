//! Circular-symmetric Gaussian windows and per-pixel weighted local
//! statistics computed by separable convolution.
//!
//! Borders use reflect (symmetric) padding so every pixel receives a
//! full-support statistic and derived loss maps keep the input resolution.
//! Summation order within each output pixel is fixed, so results are
//! bit-identical regardless of how callers parallelize over rows or planes.

use crate::error::{Error, Result};
use crate::grid::Plane;

/// k×k circular-symmetric Gaussian weights, normalized to unit sum.
///
/// The 2-D weights are the outer product of a normalized 1-D profile,
/// which is what makes the row/column separable evaluation exact.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    size: usize,
    sigma: f64,
    weights_1d: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussianWindow {
    /// Build a window; `size` must be odd and ≥ 1, `sigma` positive.
    pub fn new(size: usize, sigma: f64) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "window size must be odd and >= 1, got {size}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "window sigma must be positive, got {sigma}"
            )));
        }
        let half = (size / 2) as isize;
        let mut weights_1d: Vec<f64> = (-half..=half)
            .map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp())
            .collect();
        let sum: f64 = weights_1d.iter().sum();
        for w in &mut weights_1d {
            *w /= sum;
        }
        let mut weights = Vec::with_capacity(size * size);
        for &wy in &weights_1d {
            for &wx in &weights_1d {
                weights.push(wy * wx);
            }
        }
        Ok(GaussianWindow {
            size,
            sigma,
            weights_1d,
            weights,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn half(&self) -> usize {
        self.size / 2
    }

    /// 2-D weights, row-major over (dy, dx) offsets.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_1d(&self) -> &[f64] {
        &self.weights_1d
    }

    #[inline]
    pub fn weight_at(&self, dy: usize, dx: usize) -> f64 {
        self.weights[dy * self.size + dx]
    }

    /// Weight of the window center.
    pub fn center_weight(&self) -> f64 {
        let h = self.half();
        self.weight_at(h, h)
    }
}

/// Construct a window (free-function form).
pub fn gaussian_window(size: usize, sigma: f64) -> Result<GaussianWindow> {
    GaussianWindow::new(size, sigma)
}

/// Map an out-of-range index back inside `[0, n)` by symmetric reflection
/// (the edge sample is repeated: -1 -> 0, n -> n-1).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// One reflected row of length `w + 2*half`.
fn padded_row(src: &[f64], w: usize, half: usize, out: &mut Vec<f64>) {
    out.clear();
    for i in 0..w + 2 * half {
        out.push(src[reflect_index(i as isize - half as isize, w)]);
    }
}

/// Horizontal 1-D pass with reflect padding.
fn row_pass(plane: &Plane, g: &[f64], out: &mut Plane) {
    let (h, w) = (plane.height(), plane.width());
    let half = g.len() / 2;
    let mut padded = Vec::with_capacity(w + 2 * half);
    for r in 0..h {
        padded_row(plane.row(r), w, half, &mut padded);
        let dst = out.row_mut(r);
        for c in 0..w {
            let mut acc = 0.0;
            for (d, &gv) in g.iter().enumerate() {
                acc += gv * padded[c + d];
            }
            dst[c] = acc;
        }
    }
}

/// Vertical 1-D pass with reflect padding; rows stay the inner loop so the
/// access pattern is contiguous.
fn col_pass(plane: &Plane, g: &[f64], out: &mut Plane) {
    let (h, w) = (plane.height(), plane.width());
    let half = g.len() / 2;
    for r in 0..h {
        let dst = out.row_mut(r);
        dst.fill(0.0);
        for (d, &gv) in g.iter().enumerate() {
            let src = plane.row(reflect_index(r as isize + d as isize - half as isize, h));
            for c in 0..w {
                dst[c] += gv * src[c];
            }
        }
    }
}

/// Per-pixel Gaussian-weighted local mean; the window is centered at each
/// pixel and moves over the full image. Separable row+column evaluation.
pub fn local_mean(plane: &Plane, win: &GaussianWindow) -> Plane {
    if win.size() == 1 {
        return plane.clone();
    }
    let g = win.weights_1d();
    let mut tmp = Plane::zeros(plane.height(), plane.width());
    let mut out = Plane::zeros(plane.height(), plane.width());
    row_pass(plane, g, &mut tmp);
    col_pass(&tmp, g, &mut out);
    out
}

/// Transpose of [`local_mean`] as a linear operator (reflect-padded
/// convolution is not self-adjoint at the borders). Needed by analytic
/// gradients that flow through local statistics.
pub fn convolve_adjoint(field: &Plane, win: &GaussianWindow) -> Plane {
    if win.size() == 1 {
        return field.clone();
    }
    let g = win.weights_1d();
    let (h, w) = (field.height(), field.width());
    let half = g.len() / 2;

    // adjoint of the column pass: scatter rows upward/downward
    let mut tmp = Plane::zeros(h, w);
    for r in 0..h {
        let src = field.row(r);
        for (d, &gv) in g.iter().enumerate() {
            let tr = reflect_index(r as isize + d as isize - half as isize, h);
            let dst = tmp.row_mut(tr);
            for c in 0..w {
                dst[c] += gv * src[c];
            }
        }
    }

    // adjoint of the row pass: scatter into a padded buffer, then fold the
    // reflected margins back in
    let mut out = Plane::zeros(h, w);
    let mut buf = vec![0.0f64; w + 2 * half];
    for r in 0..h {
        buf.fill(0.0);
        let src = tmp.row(r);
        for c in 0..w {
            let v = src[c];
            for (d, &gv) in g.iter().enumerate() {
                buf[c + d] += gv * v;
            }
        }
        let dst = out.row_mut(r);
        for (i, &v) in buf.iter().enumerate() {
            dst[reflect_index(i as isize - half as isize, w)] += v;
        }
    }
    out
}

/// Raw weighted variance Σwᵢxᵢ² − μ², no clamping. Cancellation can leave a
/// negative epsilon here; callers that need σ use the clamped form.
pub fn local_variance_raw(plane: &Plane, mean: &Plane, win: &GaussianWindow) -> Plane {
    let sq = plane.map(|v| v * v);
    let second = local_mean(&sq, win);
    let mut out = Plane::zeros(plane.height(), plane.width());
    for (o, (&s, &m)) in out
        .as_mut_slice()
        .iter_mut()
        .zip(second.as_slice().iter().zip(mean.as_slice()))
    {
        *o = s - m * m;
    }
    out
}

/// Weighted variance Σwᵢxᵢ² − μ², clamped at 0.
pub fn local_variance(plane: &Plane, mean: &Plane, win: &GaussianWindow) -> Plane {
    let mut v = local_variance_raw(plane, mean, win);
    for x in v.as_mut_slice() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    v
}

/// Weighted covariance Σwᵢxᵢyᵢ − μx·μy.
pub fn local_covariance(
    x: &Plane,
    y: &Plane,
    mean_x: &Plane,
    mean_y: &Plane,
    win: &GaussianWindow,
) -> Plane {
    debug_assert!(x.same_shape(y));
    let mut prod = Plane::zeros(x.height(), x.width());
    for (o, (&a, &b)) in prod
        .as_mut_slice()
        .iter_mut()
        .zip(x.as_slice().iter().zip(y.as_slice()))
    {
        *o = a * b;
    }
    let second = local_mean(&prod, win);
    let mut out = Plane::zeros(x.height(), x.width());
    for i in 0..out.as_slice().len() {
        out.as_mut_slice()[i] = second.as_slice()[i] - mean_x.as_slice()[i] * mean_y.as_slice()[i];
    }
    out
}

/// Per-pixel weighted mean and (clamped) variance for one plane.
#[derive(Debug, Clone)]
pub struct LocalStatsField {
    pub mean: Plane,
    pub variance: Plane,
}

impl LocalStatsField {
    pub fn compute(plane: &Plane, win: &GaussianWindow) -> Self {
        let mean = local_mean(plane, win);
        let variance = local_variance(plane, &mean, win);
        LocalStatsField { mean, variance }
    }

    /// Elementwise standard deviation.
    pub fn stddev(&self) -> Plane {
        self.variance.map(f64::sqrt)
    }
}
