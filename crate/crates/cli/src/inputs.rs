//! Shared input loading: classify a path as PGM label map or SEGT tensor
//! and produce an H×W×C tensor (labels are one-hot expanded).

use std::path::Path;

use segstruct_core::io::{read_labels_pgm, read_segt, sniff_kind, FileKind};
use segstruct_core::{one_hot, Error, Result, Tensor};

pub enum LoadedMap {
    /// One-hot planes from a PGM label map.
    Labels(segstruct_core::LabelMap),
    /// Raw SEGT tensor.
    Tensor(Tensor),
}

pub fn load_map(path: &Path, classes: Option<usize>) -> Result<LoadedMap> {
    match sniff_kind(path)? {
        FileKind::Pgm => Ok(LoadedMap::Labels(read_labels_pgm(path, classes)?)),
        FileKind::Segt => Ok(LoadedMap::Tensor(read_segt(path)?)),
        FileKind::Unknown => Err(Error::Format {
            format: "input",
            detail: format!("{} is neither P5 PGM nor SEGT", path.display()),
        }),
    }
}

/// Expand to a tensor; PGM inputs need a class count, taken from
/// `classes`, the paired tensor, or the labels' own inferred count.
pub fn to_tensor(map: LoadedMap, classes: Option<usize>, paired_channels: Option<usize>) -> Result<Tensor> {
    match map {
        LoadedMap::Tensor(t) => Ok(t),
        LoadedMap::Labels(labels) => {
            let c = classes
                .or(paired_channels)
                .unwrap_or_else(|| labels.class_count());
            let labels = segstruct_core::LabelMap::new(
                labels.height(),
                labels.width(),
                c,
                labels.ids().to_vec(),
            )?;
            Ok(one_hot(&labels).into_tensor())
        }
    }
}
