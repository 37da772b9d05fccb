//! Segmentation quality metrics: confusion matrix, per-class IoU, mIoU,
//! and pixel accuracy. Void pixels are excluded everywhere.

use crate::error::{Error, Result};
use crate::grid::{LabelMap, VOID};

/// C×C counts; rows index the ground-truth class, columns the prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    class_count: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_count: usize) -> Self {
        ConfusionMatrix {
            class_count,
            counts: vec![0; class_count * class_count],
        }
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    #[inline]
    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.class_count + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Add one image pair; void ground-truth pixels are skipped.
    pub fn accumulate(&mut self, truth: &LabelMap, pred: &LabelMap) -> Result<()> {
        if !truth.same_shape(pred) {
            return Err(Error::shape(
                "ConfusionMatrix::accumulate",
                format!("{}x{}", truth.height(), truth.width()),
                format!("{}x{}", pred.height(), pred.width()),
            ));
        }
        if truth.class_count() != self.class_count || pred.class_count() != self.class_count {
            return Err(Error::shape(
                "ConfusionMatrix::accumulate",
                format!("{} classes", self.class_count),
                format!(
                    "{} truth / {} pred classes",
                    truth.class_count(),
                    pred.class_count()
                ),
            ));
        }
        for (&t, &p) in truth.ids().iter().zip(pred.ids()) {
            if t == VOID {
                continue;
            }
            // a void prediction counts as a miss against class 0..C; the
            // synthetic harness never predicts void, but guard anyway
            if p == VOID {
                continue;
            }
            self.counts[t as usize * self.class_count + p as usize] += 1;
        }
        Ok(())
    }

    /// Elementwise sum; merging per-batch matrices equals sequential
    /// accumulation.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.class_count != self.class_count {
            return Err(Error::shape(
                "ConfusionMatrix::merge",
                format!("{} classes", self.class_count),
                format!("{} classes", other.class_count),
            ));
        }
        for (a, &b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// IoU_c = TP / (TP + FP + FN); `None` for classes that never appear in
    /// either the truth or the prediction.
    pub fn per_class_iou(&self) -> Vec<Option<f64>> {
        (0..self.class_count)
            .map(|c| {
                let tp = self.get(c, c);
                let fp: u64 = (0..self.class_count)
                    .filter(|&t| t != c)
                    .map(|t| self.get(t, c))
                    .sum();
                let fn_: u64 = (0..self.class_count)
                    .filter(|&p| p != c)
                    .map(|p| self.get(c, p))
                    .sum();
                let denom = tp + fp + fn_;
                if denom == 0 {
                    None
                } else {
                    Some(tp as f64 / denom as f64)
                }
            })
            .collect()
    }

    /// Mean IoU over classes with a nonzero denominator.
    pub fn miou(&self) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::NoPixels);
        }
        let ious: Vec<f64> = self.per_class_iou().into_iter().flatten().collect();
        if ious.is_empty() {
            return Err(Error::NoPixels);
        }
        Ok(ious.iter().sum::<f64>() / ious.len() as f64)
    }

    pub fn pixel_accuracy(&self) -> Result<f64> {
        let total = self.total();
        if total == 0 {
            return Err(Error::NoPixels);
        }
        let trace: u64 = (0..self.class_count).map(|c| self.get(c, c)).sum();
        Ok(trace as f64 / total as f64)
    }

    /// CSV rows: one per class (name, IoU, note), then summary rows for
    /// mIoU and pixel accuracy. Classes excluded from the mean carry an
    /// `excluded` note and an empty value.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("name,value,note\n");
        for (c, iou) in self.per_class_iou().into_iter().enumerate() {
            match iou {
                Some(v) => out.push_str(&format!("class_{c},{v},\n")),
                None => out.push_str(&format!("class_{c},,excluded\n")),
            }
        }
        out.push_str(&format!("miou,{},\n", self.miou()?));
        out.push_str(&format!("pixel_accuracy,{},\n", self.pixel_accuracy()?));
        Ok(out)
    }
}
