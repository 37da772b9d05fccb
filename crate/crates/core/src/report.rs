use crate::grid::Tensor;

/// Outcome of a loss evaluation: the scalar objective, the per-element loss
/// map (values before aggregation), and the analytic gradient with respect
/// to the logits. Hard-example statistics are present only for losses with
/// a mining stage.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub total: f64,
    pub loss_map: Tensor,
    pub gradient: Tensor,
    pub hard_count: Option<usize>,
    pub hard_proportion: Option<f64>,
}

impl LossReport {
    pub fn plain(total: f64, loss_map: Tensor, gradient: Tensor) -> Self {
        LossReport {
            total,
            loss_map,
            gradient,
            hard_count: None,
            hard_proportion: None,
        }
    }
}
