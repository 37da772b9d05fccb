use std::path::PathBuf;

use clap::Args;
use segstruct_core::ssim::ssim_plane_map;
use segstruct_core::{Error, GaussianWindow, Plane, Result, SsimParams, Tensor};

use crate::inputs::{load_map, to_tensor, LoadedMap};

#[derive(Args, Debug)]
pub struct SsimArgs {
    /// Reference map (PGM or SEGT)
    pub reference: PathBuf,
    /// Prediction map (PGM or SEGT)
    pub prediction: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 1.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub c1: f64,
    #[arg(long, default_value_t = 9e-4)]
    pub c2: f64,
    /// Class count when expanding PGM labels
    #[arg(long)]
    pub classes: Option<usize>,
    /// Write the per-location SSIM map as SEGT
    #[arg(long)]
    pub map: Option<PathBuf>,
}

fn channels_of(map: &LoadedMap) -> Option<usize> {
    match map {
        LoadedMap::Tensor(t) => Some(t.channels()),
        LoadedMap::Labels(_) => None,
    }
}

pub fn run(args: SsimArgs) -> Result<()> {
    let reference = load_map(&args.reference, args.classes)?;
    let prediction = load_map(&args.prediction, args.classes)?;
    let ref_channels = channels_of(&reference);
    let pred_channels = channels_of(&prediction);
    let reference = to_tensor(reference, args.classes, pred_channels)?;
    let prediction = to_tensor(prediction, args.classes, ref_channels)?;
    if !reference.same_shape(&prediction) {
        return Err(Error::shape(
            "ssim inputs",
            reference.shape_string(),
            prediction.shape_string(),
        ));
    }

    let win = GaussianWindow::new(args.k, args.sigma)?;
    let params = SsimParams::new(args.c1, args.c2)?;

    let mut maps: Vec<Plane> = Vec::with_capacity(reference.channels());
    println!("channel,mean_ssim");
    let mut overall = 0.0;
    for ch in 0..reference.channels() {
        let map = ssim_plane_map(&reference.plane(ch), &prediction.plane(ch), &win, &params)?;
        let mean = map.as_slice().iter().sum::<f64>() / map.as_slice().len() as f64;
        println!("{ch},{mean}");
        overall += mean;
        maps.push(map);
    }
    overall /= reference.channels() as f64;
    println!("overall,{overall}");

    if let Some(path) = args.map {
        let tensor = Tensor::from_planes(maps)?;
        segstruct_core::io::write_segt(&path, &tensor)?;
    }
    Ok(())
}
