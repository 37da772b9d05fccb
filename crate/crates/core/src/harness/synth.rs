//! Synthetic thin-structure scenes: colored shapes on a noisy background,
//! one foreground component with a 1–2 pixel appendage, and an occluding
//! rectangle painted over foreground pixels whose labels stay foreground.
//! Everything is a deterministic function of (config, seed).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{LabelMap, Tensor};

/// Geometry and noise settings for one scene.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    /// Background plus this many foreground classes.
    pub class_count: usize,
    /// Width of the thin appendage in pixels (1 or 2).
    pub appendage_width: usize,
    /// Per-pixel uniform color noise amplitude.
    pub noise: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            height: 64,
            width: 64,
            class_count: 3,
            appendage_width: 1,
            noise: 0.06,
        }
    }
}

/// Dataset sizing on top of a scene config.
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub scene: SceneConfig,
    pub train_scenes: usize,
    pub val_scenes: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            scene: SceneConfig::default(),
            train_scenes: 200,
            val_scenes: 50,
        }
    }
}

/// One generated scene: RGB image in [0, 1] plus its label map.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: Tensor,
    pub labels: LabelMap,
    pub seed: u64,
}

/// Per-class pixel counts over a split.
#[derive(Debug, Clone, Default)]
pub struct LabelStats {
    pub class_pixels: Vec<u64>,
    pub total_pixels: u64,
}

impl LabelStats {
    fn accumulate(&mut self, labels: &LabelMap) {
        if self.class_pixels.len() < labels.class_count() {
            self.class_pixels.resize(labels.class_count(), 0);
        }
        for &id in labels.ids() {
            if (id as usize) < self.class_pixels.len() {
                self.class_pixels[id as usize] += 1;
            }
        }
        self.total_pixels += (labels.height() * labels.width()) as u64;
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<SyntheticScene>,
    pub val: Vec<SyntheticScene>,
    pub train_stats: LabelStats,
    pub val_stats: LabelStats,
}

fn validate(config: &SceneConfig) -> Result<()> {
    if config.height < 32 || config.width < 32 {
        return Err(Error::InvalidArgument(
            "scene must be at least 32x32 to fit body, appendage and occluder".into(),
        ));
    }
    if config.class_count < 2 || config.class_count > 8 {
        return Err(Error::InvalidArgument(format!(
            "class_count must be in 2..=8, got {}",
            config.class_count
        )));
    }
    if !(1..=2).contains(&config.appendage_width) {
        return Err(Error::InvalidArgument(format!(
            "appendage_width must be 1 or 2, got {}",
            config.appendage_width
        )));
    }
    Ok(())
}

fn fill_ellipse(labels: &mut [u8], w: usize, cy: f64, cx: f64, ry: f64, rx: f64, id: u8) {
    let h = labels.len() / w;
    for r in 0..h {
        for c in 0..w {
            let dy = (r as f64 - cy) / ry;
            let dx = (c as f64 - cx) / rx;
            if dy * dy + dx * dx <= 1.0 {
                labels[r * w + c] = id;
            }
        }
    }
}

/// Rasterize a straight appendage of the given width from (sy, sx) along
/// (dy, dx) for `len` steps.
fn draw_appendage(
    labels: &mut [u8],
    h: usize,
    w: usize,
    sy: f64,
    sx: f64,
    dy: f64,
    dx: f64,
    len: usize,
    width: usize,
    id: u8,
) {
    for t in 0..len {
        let y = sy + dy * t as f64;
        let x = sx + dx * t as f64;
        for oy in 0..width {
            for ox in 0..width {
                let ry = (y + oy as f64).round() as isize;
                let rx = (x + ox as f64).round() as isize;
                if ry >= 0 && rx >= 0 && (ry as usize) < h && (rx as usize) < w {
                    labels[ry as usize * w + rx as usize] = id;
                }
            }
        }
    }
}

/// Build one scene from its own seed.
pub fn generate_scene(config: &SceneConfig, seed: u64) -> Result<SyntheticScene> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (config.height, config.width);
    let mut ids = vec![0u8; h * w];

    // secondary foreground shapes for classes 2.. (drawn first; the
    // appendage-bearing class-1 component wins overlaps)
    for class in 2..config.class_count {
        let ry = rng.random_range(4.0..8.0);
        let rx = rng.random_range(4.0..8.0);
        let cy = rng.random_range(ry..h as f64 - ry);
        let cx = rng.random_range(rx..w as f64 - rx);
        fill_ellipse(&mut ids, w, cy, cx, ry, rx, class as u8);
    }

    // class-1 body: an ellipse kept away from the borders so the occluder
    // and the appendage both fit
    let ry = rng.random_range(7.0..11.0);
    let rx = rng.random_range(7.0..11.0);
    let margin = 14.0;
    let cy = rng.random_range(margin..h as f64 - margin);
    let cx = rng.random_range(margin..w as f64 - margin);
    fill_ellipse(&mut ids, w, cy, cx, ry, rx, 1);

    // thin appendage: a straight limb growing out of the body
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let (dy, dx) = (angle.sin(), angle.cos());
    let len = rng.random_range(8..14);
    let sy = cy + dy * (ry - 1.0);
    let sx = cx + dx * (rx - 1.0);
    draw_appendage(
        &mut ids,
        h,
        w,
        sy,
        sx,
        dy,
        dx,
        len,
        config.appendage_width,
        1,
    );

    // occluder rectangle inside the body: painted over the image below,
    // labels keep class 1
    let occ_h = rng.random_range(4..7).min(2 * ry as usize / 2 + 1);
    let occ_w = rng.random_range(4..7).min(2 * rx as usize / 2 + 1);
    let occ_r0 = (cy - occ_h as f64 / 2.0).round().max(0.0) as usize;
    let occ_c0 = (cx - occ_w as f64 / 2.0).round().max(0.0) as usize;
    let occ_r1 = (occ_r0 + occ_h).min(h);
    let occ_c1 = (occ_c0 + occ_w).min(w);

    let labels = LabelMap::new(h, w, config.class_count, ids)?;

    // colors: background dark-ish, each class gets its own band so the
    // mapping is learnable from color alone except where occluded
    let mut class_colors = Vec::with_capacity(config.class_count);
    let bg: [f64; 3] = [
        rng.random_range(0.10..0.30),
        rng.random_range(0.10..0.30),
        rng.random_range(0.10..0.30),
    ];
    class_colors.push(bg);
    for class in 1..config.class_count {
        let hue = class as f64 / config.class_count as f64;
        class_colors.push([
            0.45 + 0.45 * (hue * std::f64::consts::TAU).sin().abs(),
            rng.random_range(0.35..0.75),
            0.45 + 0.45 * (hue * std::f64::consts::TAU).cos().abs(),
        ]);
    }
    let occluder_color: [f64; 3] = [
        rng.random_range(0.85..1.0) - config.noise,
        rng.random_range(0.85..1.0) - config.noise,
        rng.random_range(0.85..1.0) - config.noise,
    ];

    let mut image = Tensor::zeros(h, w, 3);
    for r in 0..h {
        for c in 0..w {
            let occluded = r >= occ_r0 && r < occ_r1 && c >= occ_c0 && c < occ_c1;
            let base = if occluded {
                &occluder_color
            } else {
                &class_colors[labels.get(r, c) as usize]
            };
            for ch in 0..3 {
                let noise = rng.random_range(-config.noise..config.noise);
                image.set(r, c, ch, (base[ch] + noise).clamp(0.0, 1.0));
            }
        }
    }

    Ok(SyntheticScene {
        image,
        labels,
        seed,
    })
}

/// Generate a reproducible train/val split. Scene seeds are derived from
/// the master seed, with the validation stream offset so splits never
/// share scenes.
pub fn generate_dataset(config: &DatasetConfig, seed: u64) -> Result<Dataset> {
    validate(&config.scene)?;
    let mut train = Vec::with_capacity(config.train_scenes);
    let mut val = Vec::with_capacity(config.val_scenes);
    let mut train_stats = LabelStats::default();
    let mut val_stats = LabelStats::default();
    for i in 0..config.train_scenes {
        let scene = generate_scene(&config.scene, derive_seed(seed, 0, i as u64))?;
        train_stats.accumulate(&scene.labels);
        train.push(scene);
    }
    for i in 0..config.val_scenes {
        let scene = generate_scene(&config.scene, derive_seed(seed, 1, i as u64))?;
        val_stats.accumulate(&scene.labels);
        val.push(scene);
    }
    Ok(Dataset {
        train,
        val,
        train_stats,
        val_stats,
    })
}

/// SplitMix64 over (seed, split, index).
pub fn derive_seed(seed: u64, split: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(split.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(index.wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
