//! Checkpoints: one SEGT record per parameter tensor concatenated into
//! `checkpoint.segt`, plus a `checkpoint.manifest` text file with one
//! `name shape byte-offset` line per record.

use std::fs::File;
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Tensor;
use crate::io::{read_segt_from, write_segt_to};

use super::model::{ConvLayer, TinyFcn};

pub const CHECKPOINT_FILE: &str = "checkpoint.segt";
pub const MANIFEST_FILE: &str = "checkpoint.manifest";

fn weight_tensor(layer: &ConvLayer) -> Tensor {
    // rows = out channel, cols = in_channels*3*3 in weight order
    Tensor::from_vec(
        layer.out_channels,
        layer.in_channels * 9,
        1,
        layer.weights.clone(),
    )
    .expect("weight buffer matches layer dims")
}

fn bias_tensor(layer: &ConvLayer) -> Tensor {
    Tensor::from_vec(1, layer.out_channels, 1, layer.bias.clone())
        .expect("bias buffer matches layer dims")
}

pub fn save_checkpoint(model: &TinyFcn, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut blob = BufWriter::new(File::create(dir.join(CHECKPOINT_FILE))?);
    let mut manifest = String::new();
    let mut offset = 0u64;
    for (l, layer) in model.layers.iter().enumerate() {
        for (suffix, tensor, shape) in [
            (
                "weight",
                weight_tensor(layer),
                format!("{}x{}x3x3", layer.out_channels, layer.in_channels),
            ),
            ("bias", bias_tensor(layer), format!("{}", layer.out_channels)),
        ] {
            let mut bytes = Vec::new();
            write_segt_to(&mut bytes, &tensor)?;
            manifest.push_str(&format!("layer{l}.{suffix} {shape} {offset}\n"));
            blob.write_all(&bytes)?;
            offset += bytes.len() as u64;
        }
    }
    blob.flush()?;
    std::fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<TinyFcn> {
    let manifest = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut blob = File::open(dir.join(CHECKPOINT_FILE))?;

    let mut layers: Vec<ConvLayer> = Vec::new();
    let mut pending_weights: Option<(usize, usize, Vec<f64>)> = None;
    for line in manifest.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Format {
                format: "checkpoint manifest",
                detail: format!("expected 'name shape offset', got {line:?}"),
            });
        }
        let (name, shape, offset) = (fields[0], fields[1], fields[2]);
        let offset: u64 = offset.parse().map_err(|_| Error::Format {
            format: "checkpoint manifest",
            detail: format!("bad offset in {line:?}"),
        })?;
        blob.seek(SeekFrom::Start(offset))?;
        let tensor = read_segt_from(&mut blob)?;

        if name.ends_with(".weight") {
            let dims: Vec<usize> = shape
                .split('x')
                .map(|d| d.parse().unwrap_or(0))
                .collect();
            if dims.len() != 4 || dims[2] != 3 || dims[3] != 3 {
                return Err(Error::Format {
                    format: "checkpoint manifest",
                    detail: format!("unsupported weight shape {shape}"),
                });
            }
            pending_weights = Some((dims[0], dims[1], tensor.as_slice().to_vec()));
        } else if name.ends_with(".bias") {
            let (out_c, in_c, weights) = pending_weights.take().ok_or_else(|| Error::Format {
                format: "checkpoint manifest",
                detail: format!("bias {name} without a preceding weight record"),
            })?;
            layers.push(ConvLayer {
                in_channels: in_c,
                out_channels: out_c,
                weights,
                bias: tensor.as_slice().to_vec(),
            });
        }
    }
    if layers.is_empty() {
        return Err(Error::Format {
            format: "checkpoint manifest",
            detail: "no layers found".into(),
        });
    }
    TinyFcn::from_layers(layers)
}

/// Read the raw checkpoint bytes (for byte-identity comparisons).
pub fn checkpoint_bytes(dir: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(dir.join(CHECKPOINT_FILE))?.read_to_end(&mut bytes)?;
    Ok(bytes)
}
