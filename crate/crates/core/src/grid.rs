//! Dense 2-D/3-D grid containers and label encoding.
//!
//! Storage is row-major with the channel as the outermost plane index:
//! a `Tensor` element `(row, col, channel)` lives at `(channel * h + row) * w + col`,
//! so each channel plane is a contiguous slice. All modules address grids
//! as `(row, col, channel)`.

use crate::error::{Error, Result};

/// Sentinel id for pixels excluded from losses and metrics.
pub const VOID: u8 = 255;

/// A single H×W plane of `f64` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn zeros(height: usize, width: usize) -> Self {
        Plane {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(
                "Plane::from_vec",
                format!("{}x{}", height, width),
                format!("{} values", data.len()),
            ));
        }
        Ok(Plane {
            height,
            width,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        Plane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Elementwise map into a new plane.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// H×W×C tensor of `f64` values, channel-outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Tensor {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * channels {
            return Err(Error::shape(
                "Tensor::from_vec",
                format!("{}x{}x{}", height, width, channels),
                format!("{} values", data.len()),
            ));
        }
        Ok(Tensor {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn from_planes(planes: Vec<Plane>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidArgument("Tensor::from_planes: no planes".into()))?;
        let (h, w) = (first.height(), first.width());
        let mut data = Vec::with_capacity(h * w * planes.len());
        for p in &planes {
            if !p.same_shape(first) {
                return Err(Error::shape(
                    "Tensor::from_planes",
                    format!("{}x{}", h, w),
                    format!("{}x{}", p.height(), p.width()),
                ));
            }
            data.extend_from_slice(p.as_slice());
        }
        Ok(Tensor {
            height: h,
            width: w,
            channels: planes.len(),
            data,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, channel: usize) -> usize {
        (channel * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[self.index(row, col, channel)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        let i = self.index(row, col, channel);
        self.data[i] = value;
    }

    pub fn plane_slice(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn plane_slice_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[channel * n..(channel + 1) * n]
    }

    /// Copy of one channel plane.
    pub fn plane(&self, channel: usize) -> Plane {
        Plane {
            height: self.height,
            width: self.width,
            data: self.plane_slice(channel).to_vec(),
        }
    }

    pub fn set_plane(&mut self, channel: usize, plane: &Plane) {
        debug_assert_eq!(plane.height(), self.height);
        debug_assert_eq!(plane.width(), self.width);
        self.plane_slice_mut(channel).copy_from_slice(plane.as_slice());
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// Per-pixel integer class ids with a void marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    class_count: usize,
    ids: Vec<u8>,
}

impl LabelMap {
    /// Validated construction: every non-void id must be `< class_count`
    /// and `class_count` must fit below the void sentinel.
    pub fn new(height: usize, width: usize, class_count: usize, ids: Vec<u8>) -> Result<Self> {
        if class_count < 1 || class_count > VOID as usize {
            return Err(Error::InvalidArgument(format!(
                "class_count must be in 1..={}, got {}",
                VOID, class_count
            )));
        }
        if ids.len() != height * width {
            return Err(Error::shape(
                "LabelMap::new",
                format!("{}x{}", height, width),
                format!("{} ids", ids.len()),
            ));
        }
        if let Some(bad) = ids
            .iter()
            .find(|&&id| id != VOID && (id as usize) >= class_count)
        {
            return Err(Error::InvalidArgument(format!(
                "label id {} out of range for {} classes",
                bad, class_count
            )));
        }
        Ok(LabelMap {
            height,
            width,
            class_count,
            ids,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.ids[row * self.width + col]
    }

    #[inline]
    pub fn is_void(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == VOID
    }

    pub fn ids(&self) -> &[u8] {
        &self.ids
    }

    pub fn non_void_count(&self) -> usize {
        self.ids.iter().filter(|&&id| id != VOID).count()
    }

    pub fn same_shape(&self, other: &LabelMap) -> bool {
        self.height == other.height && self.width == other.width
    }
}

/// H×W×C probabilities in `[0, 1]`. Channel planes are independent
/// one-vs-rest views; no per-pixel sum-to-one constraint is imposed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    tensor: Tensor,
}

impl ProbabilityMap {
    pub fn new(tensor: Tensor) -> Result<Self> {
        if let Some(&bad) = tensor
            .as_slice()
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "probability value {} outside [0, 1]",
                bad
            )));
        }
        Ok(ProbabilityMap { tensor })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor {
        self.tensor
    }
}

/// H×W×C pre-activation values; all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMap {
    tensor: Tensor,
}

impl LogitMap {
    pub fn new(tensor: Tensor) -> Result<Self> {
        if let Some(&bad) = tensor.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "logit value {} is not finite",
                bad
            )));
        }
        Ok(LogitMap { tensor })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn into_tensor(self) -> Tensor {
        self.tensor
    }
}

/// Expand labels to C binary planes. Plane `c` holds 1 where the id equals
/// `c`; void pixels are zero in every plane.
pub fn one_hot(labels: &LabelMap) -> ProbabilityMap {
    let (h, w, c) = (labels.height(), labels.width(), labels.class_count());
    let mut t = Tensor::zeros(h, w, c);
    for row in 0..h {
        for col in 0..w {
            let id = labels.get(row, col);
            if id != VOID {
                t.set(row, col, id as usize, 1.0);
            }
        }
    }
    ProbabilityMap { tensor: t }
}

/// Numerically stable logistic function; exact at 0, saturates without
/// overflow for |z| up to the f64 exponent range.
#[inline]
pub fn stable_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Elementwise sigmoid of a logit map.
pub fn sigmoid(logits: &LogitMap) -> ProbabilityMap {
    let t = logits.tensor();
    let data = t.as_slice().iter().map(|&z| stable_sigmoid(z)).collect();
    ProbabilityMap {
        tensor: Tensor::from_vec(t.height(), t.width(), t.channels(), data)
            .expect("shape preserved"),
    }
}

/// Per-pixel argmax over channels; ties break to the lowest class index.
pub fn argmax_labels(probs: &ProbabilityMap) -> LabelMap {
    let t = probs.tensor();
    let (h, w, c) = (t.height(), t.width(), t.channels());
    let mut ids = vec![0u8; h * w];
    for row in 0..h {
        for col in 0..w {
            let mut best = 0usize;
            let mut best_v = t.get(row, col, 0);
            for ch in 1..c {
                let v = t.get(row, col, ch);
                if v > best_v {
                    best_v = v;
                    best = ch;
                }
            }
            ids[row * w + col] = best as u8;
        }
    }
    LabelMap {
        height: h,
        width: w,
        class_count: c,
        ids,
    }
}
