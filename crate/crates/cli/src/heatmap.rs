//! Grayscale renders of real-valued fields: 8-bit PGM with a linear,
//! monotone mapping onto [0, 255] and a sidecar text file recording the
//! mapped min/max.

use std::path::Path;

use segstruct_core::io::write_pgm;
use segstruct_core::{Plane, Result};

/// Write `plane` as a PGM heatmap plus `<stem>.txt` sidecar. A constant
/// field maps to 0 with min == max recorded.
pub fn write_heatmap(path: &Path, plane: &Plane) -> Result<()> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in plane.as_slice() {
        min = min.min(v);
        max = max.max(v);
    }
    if plane.as_slice().is_empty() {
        min = 0.0;
        max = 0.0;
    }
    let span = max - min;
    let bytes: Vec<u8> = plane
        .as_slice()
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - min) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect();
    write_pgm(path, plane.height(), plane.width(), &bytes)?;
    let sidecar = path.with_extension("txt");
    std::fs::write(sidecar, format!("min={min}\nmax={max}\n"))?;
    Ok(())
}
