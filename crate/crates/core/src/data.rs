//! Landmark samples, synthetic expression data, normalization, patch
//! extraction, flip augmentation and stratified splits.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::math::{exp, round, sqrt};
use crate::seed::{derive_seed, rng_from, salt};
use crate::{Error, Result};

/// `n` square patches of side `size`, row-major per patch, in landmark order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    pub size: usize,
    pub data: Vec<f64>,
}

impl PatchSet {
    pub fn count(&self) -> usize {
        self.data.len() / (self.size * self.size)
    }

    pub fn patch(&self, i: usize) -> &[f64] {
        let a2 = self.size * self.size;
        &self.data[i * a2..(i + 1) * a2]
    }
}

/// Externally computed per-landmark embeddings, `n x dim` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSample {
    pub id: String,
    pub label: usize,
    /// `(x, y)` per landmark in normalized units.
    pub coords: Vec<[f64; 2]>,
    pub patches: Option<PatchSet>,
    pub embeddings: Option<Embeddings>,
}

impl LandmarkSample {
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    /// The `2 x n` coordinate matrix, row-major (x row, then y row).
    pub fn coord_matrix(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(2 * self.n());
        m.extend(self.coords.iter().map(|c| c[0]));
        m.extend(self.coords.iter().map(|c| c[1]));
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub n: usize,
    pub num_classes: usize,
    pub samples: Vec<LandmarkSample>,
    pub mirror_map: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(n: usize, num_classes: usize, samples: Vec<LandmarkSample>, mirror_map: Option<Vec<usize>>) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid("dataset", "need at least 2 classes"));
        }
        if let Some(m) = &mirror_map {
            check_mirror_map(m, n)?;
        }
        for s in &samples {
            check_sample(s, n, num_classes)?;
        }
        Ok(Self {
            n,
            num_classes,
            samples,
            mirror_map,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.num_classes];
        for s in &self.samples {
            c[s.label] += 1;
        }
        c
    }

    pub fn patch_size(&self) -> Option<usize> {
        self.samples.first().and_then(|s| s.patches.as_ref()).map(|p| p.size)
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            n: self.n,
            num_classes: self.num_classes,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            mirror_map: self.mirror_map.clone(),
        }
    }
}

fn check_sample(s: &LandmarkSample, n: usize, k: usize) -> Result<()> {
    if s.coords.len() != n {
        return Err(Error::dim("sample landmarks", n, s.coords.len()));
    }
    if s.coords.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample", format!("{}: non-finite coordinate", s.id)));
    }
    if s.label >= k {
        return Err(Error::invalid("sample", format!("{}: label {} >= {k}", s.id, s.label)));
    }
    if let Some(p) = &s.patches {
        if p.size == 0 || p.data.len() != n * p.size * p.size {
            return Err(Error::dim("sample patches", n * p.size * p.size, p.data.len()));
        }
    }
    if let Some(e) = &s.embeddings {
        if e.data.len() != n * e.dim {
            return Err(Error::dim("sample embeddings", n * e.dim, e.data.len()));
        }
    }
    Ok(())
}

/// Checks that `map` is an involution on `0..n`.
pub fn check_mirror_map(map: &[usize], n: usize) -> Result<()> {
    if map.len() != n {
        return Err(Error::dim("mirror map", n, map.len()));
    }
    for (i, &j) in map.iter().enumerate() {
        if j >= n || map[j] != i {
            return Err(Error::invalid("mirror map", format!("not an involution at {i}")));
        }
    }
    Ok(())
}

/// Landmark 0 fixed, then pairs `(1, 2), (3, 4), ...`; a final unpaired index
/// stays on the midline.
pub fn default_mirror_map(n: usize) -> Vec<usize> {
    let mut m: Vec<usize> = (0..n).collect();
    let mut i = 1;
    while i + 1 < n {
        m.swap(i, i + 1);
        i += 2;
    }
    m
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Translates the centroid to the origin and scales the RMS distance from it
/// to 1. Degenerate (all-equal) inputs are only centered.
pub fn normalize_landmarks(coords: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = coords.len() as f64;
    let cx = coords.iter().map(|c| c[0]).sum::<f64>() / n;
    let cy = coords.iter().map(|c| c[1]).sum::<f64>() / n;
    let rms = sqrt(coords.iter().map(|c| sq(c[0] - cx) + sq(c[1] - cy)).sum::<f64>() / n);
    let s = if rms > 0.0 { 1.0 / rms } else { 1.0 };
    coords.iter().map(|c| [(c[0] - cx) * s, (c[1] - cy) * s]).collect()
}

/// Scale from normalized units to the unit display square.
pub const DISPLAY_SCALE: f64 = 0.18;

/// Maps normalized coordinates into pixel `(column, row)` positions of an
/// `height x width` image; `y` points up in landmark space.
pub fn display_pixels(coords: &[[f64; 2]], height: usize, width: usize) -> Vec<[f64; 2]> {
    coords
        .iter()
        .map(|c| {
            let u = (0.5 + DISPLAY_SCALE * c[0]).clamp(0.0, 1.0);
            let v = (0.5 - DISPLAY_SCALE * c[1]).clamp(0.0, 1.0);
            [u * (width - 1) as f64, v * (height - 1) as f64]
        })
        .collect()
}

/// Single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::dim("image pixels", height * width, data.len()));
        }
        Ok(Self { height, width, data })
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }
}

/// Cuts an `a x a` patch around each pixel-space landmark `(column, row)`.
/// Pixels outside the image are replaced by the nearest edge pixel.
pub fn extract_patches(image: &GrayImage, pixels: &[[f64; 2]], a: usize) -> Result<PatchSet> {
    if a == 0 || a > image.height.min(image.width) {
        return Err(Error::invalid(
            "patch size",
            format!("{a} must be in 1..={}", image.height.min(image.width)),
        ));
    }
    let half = (a / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut data = Vec::with_capacity(pixels.len() * a * a);
    for p in pixels {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::invalid("patch centre", "non-finite landmark position"));
        }
        let cx = round(p[0]) as isize;
        let cy = round(p[1]) as isize;
        for dy in 0..a as isize {
            let row = clamp(cy - half + dy, image.height);
            for dx in 0..a as isize {
                let col = clamp(cx - half + dx, image.width);
                data.push(image.at(row, col));
            }
        }
    }
    Ok(PatchSet { size: a, data })
}

fn mirror_patch(src: &[f64], a: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(a * a);
    for r in 0..a {
        out.extend(src[r * a..(r + 1) * a].iter().rev());
    }
    out
}

/// Mirrors the sample left-right with the given probability.
///
/// One uniform draw is consumed whether or not the flip fires. A flip negates
/// `x` (the normalized frame is centred, so this is `x -> 1 - x` in the unit
/// display square), relabels landmarks through `mirror_map` and mirrors every
/// patch.
pub fn augment_flip<R: Rng>(
    sample: &LandmarkSample,
    probability: f64,
    mirror_map: Option<&[usize]>,
    rng: &mut R,
) -> Result<LandmarkSample> {
    let fire = rng.random::<f64>() < probability;
    if !fire {
        return Ok(sample.clone());
    }
    flip(sample, mirror_map)
}

/// Unconditional left-right mirror.
pub fn flip(sample: &LandmarkSample, mirror_map: Option<&[usize]>) -> Result<LandmarkSample> {
    let map = mirror_map.ok_or_else(|| Error::invalid("flip", "no mirror map available"))?;
    let n = sample.n();
    check_mirror_map(map, n)?;
    if sample.embeddings.is_some() {
        return Err(Error::invalid("flip", "precomputed embeddings cannot be mirrored"));
    }
    let coords = (0..n)
        .map(|i| {
            let c = sample.coords[map[i]];
            [-c[0], c[1]]
        })
        .collect();
    let patches = sample.patches.as_ref().map(|p| {
        let mut data = Vec::with_capacity(p.data.len());
        for i in 0..n {
            data.extend(mirror_patch(p.patch(map[i]), p.size));
        }
        PatchSet { size: p.size, data }
    });
    Ok(LandmarkSample {
        id: sample.id.clone(),
        label: sample.label,
        coords,
        patches,
        embeddings: None,
    })
}

/// Stratified train/validation split. Within each class the samples are
/// shuffled with `seed` and `round(fraction * count)` of them (at least one,
/// leaving at least one) go to training. Both halves keep dataset order.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction", format!("{train_fraction} not in (0, 1)")));
    }
    let mut rng = rng_from(seed, salt::SPLIT);
    let mut in_train = vec![false; dataset.len()];
    for class in 0..dataset.num_classes {
        let mut idx: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.samples[i].label == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::invalid(
                "split",
                format!("class {class} has {} sample(s), need at least 2", idx.len()),
            ));
        }
        idx.shuffle(&mut rng);
        let take = (round(train_fraction * idx.len() as f64) as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..take] {
            in_train[i] = true;
        }
    }
    let train: Vec<usize> = (0..dataset.len()).filter(|&i| in_train[i]).collect();
    let val: Vec<usize> = (0..dataset.len()).filter(|&i| !in_train[i]).collect();
    Ok((dataset.subset(&train), dataset.subset(&val)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Nose,
    Eye,
    Brow,
    Mouth,
    Jaw,
    Cheek,
}

const REGIONS: usize = 6;

impl Region {
    fn index(self) -> usize {
        self as usize
    }
}

/// Left-side template positions for mirrored pairs, in pairing order.
const PAIR_SLOTS: [([f64; 2], Region); 10] = [
    ([-0.40, 0.30], Region::Eye),
    ([-0.30, -0.45], Region::Mouth),
    ([-0.42, 0.55], Region::Brow),
    ([-0.15, 0.30], Region::Eye),
    ([-0.55, -0.15], Region::Jaw),
    ([-0.15, 0.52], Region::Brow),
    ([-0.12, -0.38], Region::Mouth),
    ([-0.35, 0.00], Region::Cheek),
    ([-0.12, -0.55], Region::Mouth),
    ([-0.30, -0.75], Region::Jaw),
];

/// Midline template positions for unpaired landmarks other than the root.
const MIDLINE_SLOTS: [([f64; 2], Region); 4] = [
    ([0.0, -0.58], Region::Mouth),
    ([0.0, -0.85], Region::Jaw),
    ([0.0, 0.75], Region::Brow),
    ([0.0, -0.40], Region::Mouth),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n: usize,
    pub num_classes: usize,
    pub samples_per_class: usize,
    /// Per-coordinate jitter. Identity and intensity variation scale with it,
    /// so zero noise yields identical samples within a class.
    pub noise_std: f64,
    pub deform_scale: f64,
    pub seed: u64,
    /// Defaults to [`default_mirror_map`].
    pub mirror_map: Option<Vec<usize>>,
    pub image_size: usize,
    /// Side of the patches cut around each landmark; 0 disables patches.
    pub patch_size: usize,
    /// Class `c` gets `round(samples_per_class * (1 - skew)^c)` samples
    /// (at least 2); 0 is balanced.
    pub skew: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 15,
            num_classes: 4,
            samples_per_class: 200,
            noise_std: 0.05,
            deform_scale: 0.3,
            seed: 0,
            mirror_map: None,
            image_size: 60,
            patch_size: 17,
            skew: 0.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::invalid("synthetic config", format!("n must be >= 4, got {}", self.n)));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("synthetic config", "need at least 2 classes"));
        }
        if self.samples_per_class == 0 {
            return Err(Error::invalid("synthetic config", "samples_per_class must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite() && self.deform_scale.is_finite()) {
            return Err(Error::invalid("synthetic config", "noise_std/deform_scale must be finite, noise >= 0"));
        }
        if !(0.0..1.0).contains(&self.skew) {
            return Err(Error::invalid("synthetic config", "skew must be in [0, 1)"));
        }
        if let Some(m) = &self.mirror_map {
            check_mirror_map(m, self.n)?;
            if m[0] != 0 {
                return Err(Error::invalid("mirror map", "the root landmark 0 must map to itself"));
            }
        }
        if self.patch_size > 0 && self.patch_size > self.image_size {
            return Err(Error::invalid("synthetic config", "patch_size exceeds image_size"));
        }
        Ok(())
    }

    pub fn mirror(&self) -> Vec<usize> {
        self.mirror_map.clone().unwrap_or_else(|| default_mirror_map(self.n))
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        (0..self.num_classes)
            .map(|c| {
                let f = crate::math::powf(1.0 - self.skew, c as f64);
                (round(self.samples_per_class as f64 * f) as usize).max(2)
            })
            .collect()
    }
}

/// Neutral face layout and per-class deformation/texture fields.
struct Template {
    base: Vec<[f64; 2]>,
    regions: Vec<Region>,
    /// Side sign per landmark: -1 left, +1 right, 0 midline.
    side: Vec<f64>,
    displacement: Vec<Vec<[f64; 2]>>,
    texture: Vec<[f64; REGIONS]>,
}

/// Overall strength of the class displacement fields before `deform_scale`.
const FIELD_GAIN: f64 = 2.0;

fn build_template(config: &SyntheticConfig) -> Template {
    let n = config.n;
    let mirror = config.mirror();
    let mut base = vec![[0.0; 2]; n];
    let mut regions = vec![Region::Nose; n];
    let mut side = vec![0.0; n];
    let (mut pair_k, mut mid_k) = (0usize, 0usize);
    for i in 1..n {
        let j = mirror[i];
        if j == i {
            let (p, r) = if mid_k < MIDLINE_SLOTS.len() {
                MIDLINE_SLOTS[mid_k]
            } else {
                ([0.0, -1.0 - 0.12 * (mid_k - MIDLINE_SLOTS.len()) as f64], Region::Jaw)
            };
            mid_k += 1;
            base[i] = p;
            regions[i] = r;
        } else if j > i {
            let (p, r) = if pair_k < PAIR_SLOTS.len() {
                PAIR_SLOTS[pair_k]
            } else {
                // Extra pairs go round an outer contour.
                let t = (pair_k - PAIR_SLOTS.len()) as f64 * 0.45 + 0.3;
                ([-0.75 * libm::cos(t) - 0.05, 0.95 * libm::sin(t) - 0.2], Region::Jaw)
            };
            pair_k += 1;
            base[i] = p;
            base[j] = [-p[0], p[1]];
            regions[i] = r;
            regions[j] = r;
            side[i] = -1.0;
            side[j] = 1.0;
        }
    }
    let others = (n - 1) as f64;
    base[0] = [
        base[1..].iter().map(|p| p[0]).sum::<f64>() / others,
        base[1..].iter().map(|p| p[1]).sum::<f64>() / others,
    ];

    let mut rng = rng_from(config.seed, salt::SYNTH ^ 0xf1e1d);
    let mut displacement = Vec::with_capacity(config.num_classes);
    let mut texture = Vec::with_capacity(config.num_classes);
    for class in 0..config.num_classes {
        // Region displacement as (inward/outward along side, vertical).
        let mut field = [[0.0f64; 2]; REGIONS];
        let mut tex = [0.0f64; REGIONS];
        match class {
            0 => {}
            1 => {
                field[Region::Mouth.index()] = [0.35, 0.25];
                field[Region::Cheek.index()] = [0.05, 0.15];
                tex[Region::Cheek.index()] = 0.8;
                tex[Region::Mouth.index()] = 0.5;
            }
            2 => {
                field[Region::Brow.index()] = [0.0, 0.35];
                field[Region::Eye.index()] = [0.0, 0.10];
                field[Region::Mouth.index()] = [-0.10, -0.25];
                field[Region::Jaw.index()] = [0.0, -0.25];
                tex[Region::Brow.index()] = 0.8;
                tex[Region::Jaw.index()] = -0.4;
            }
            3 => {
                field[Region::Brow.index()] = [-0.20, -0.30];
                field[Region::Eye.index()] = [0.0, -0.12];
                field[Region::Mouth.index()] = [-0.15, 0.0];
                tex[Region::Brow.index()] = -0.8;
                tex[Region::Eye.index()] = 0.5;
            }
            _ => {
                for r in 0..REGIONS {
                    field[r] = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
                    tex[r] = rng.random_range(-0.8..0.8);
                }
            }
        }
        let disp = (0..n)
            .map(|i| {
                let f = field[regions[i].index()];
                [FIELD_GAIN * f[0] * side[i], FIELD_GAIN * f[1]]
            })
            .collect();
        displacement.push(disp);
        texture.push(tex);
    }
    Template {
        base,
        regions,
        side,
        displacement,
        texture,
    }
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Raw (unnormalized) landmarks of one sample.
fn sample_shape<R: Rng>(t: &Template, class: usize, config: &SyntheticConfig, rng: &mut R) -> (Vec<[f64; 2]>, f64) {
    let s = config.noise_std;
    let intensity = (1.0 + 3.0 * s * gauss(rng)).clamp(0.2, 1.8);
    let sx = 1.0 + s * gauss(rng);
    let sy = 1.0 + s * gauss(rng);
    let mouth_w = 1.0 + s * gauss(rng);
    let n = t.base.len();
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let d = t.displacement[class][i];
        let mut x = t.base[i][0] + config.deform_scale * intensity * d[0];
        let y = t.base[i][1] + config.deform_scale * intensity * d[1];
        if t.regions[i] == Region::Mouth {
            x *= mouth_w;
        }
        pts.push([sx * x + s * gauss(rng), sy * y + s * gauss(rng)]);
    }
    (pts, intensity)
}

fn render<R: Rng>(
    t: &Template,
    class: usize,
    intensity: f64,
    coords: &[[f64; 2]],
    config: &SyntheticConfig,
    rng: &mut R,
) -> GrayImage {
    let size = config.image_size;
    let mut data = vec![0.1; size * size];
    let sigma = 1.5;
    let reach = (4.0 * sigma) as isize;
    for (i, p) in display_pixels(coords, size, size).iter().enumerate() {
        let region = t.regions[i].index();
        let amp = 0.45 + config.deform_scale * intensity * t.texture[class][region];
        let (cx, cy) = (p[0], p[1]);
        let (ix, iy) = (round(cx) as isize, round(cy) as isize);
        for row in (iy - reach).max(0)..=(iy + reach).min(size as isize - 1) {
            for col in (ix - reach).max(0)..=(ix + reach).min(size as isize - 1) {
                let d2 = sq(col as f64 - cx) + sq(row as f64 - cy);
                data[row as usize * size + col as usize] += amp * exp(-d2 / (2.0 * sigma * sigma));
            }
        }
        // Horizontal stroke marks the landmark's side so mirrored patches differ.
        if t.side[i] != 0.0 {
            let col = (ix + (2.0 * t.side[i]) as isize).clamp(0, size as isize - 1) as usize;
            let row = iy.clamp(0, size as isize - 1) as usize;
            data[row * size + col] += 0.2;
        }
    }
    for v in &mut data {
        *v = (*v + config.noise_std * gauss(rng)).clamp(0.0, 1.0);
    }
    GrayImage {
        height: size,
        width: size,
        data,
    }
}

/// Generates a labelled synthetic expression dataset.
///
/// Each class is a neutral template plus a class-specific region displacement
/// (mouth spread, brow raise, eye narrowing, ...) and a matching texture gain.
/// Sample order is class-major and fully determined by `config.seed`.
pub fn synth_generate(config: &SyntheticConfig) -> Result<Dataset> {
    config.validate()?;
    let template = build_template(config);
    let mut samples = Vec::new();
    let mut next_id = 0usize;
    for (class, &count) in config.class_sizes().iter().enumerate() {
        for k in 0..count {
            let mut rng: ChaCha8Rng =
                rand::SeedableRng::seed_from_u64(derive_seed(derive_seed(config.seed, salt::SYNTH), (class as u64) << 32 | k as u64));
            let (raw, intensity) = sample_shape(&template, class, config, &mut rng);
            let coords = normalize_landmarks(&raw);
            let patches = if config.patch_size > 0 {
                let img = render(&template, class, intensity, &coords, config, &mut rng);
                let px = display_pixels(&coords, img.height, img.width);
                Some(extract_patches(&img, &px, config.patch_size)?)
            } else {
                None
            };
            samples.push(LandmarkSample {
                id: format!("s{next_id:05}"),
                label: class,
                coords,
                patches,
                embeddings: None,
            });
            next_id += 1;
        }
    }
    Dataset::new(config.n, config.num_classes, samples, Some(config.mirror()))
}

/// Noise-free normalized shape of every class.
pub fn class_templates(config: &SyntheticConfig) -> Vec<Vec<[f64; 2]>> {
    let t = build_template(config);
    (0..config.num_classes)
        .map(|class| {
            let raw: Vec<[f64; 2]> = (0..config.n)
                .map(|i| {
                    let d = t.displacement[class][i];
                    [
                        t.base[i][0] + config.deform_scale * d[0],
                        t.base[i][1] + config.deform_scale * d[1],
                    ]
                })
                .collect();
            normalize_landmarks(&raw)
        })
        .collect()
}

/// Index of the template closest to `coords` in squared Euclidean distance.
pub fn nearest_template(templates: &[Vec<[f64; 2]>], coords: &[[f64; 2]]) -> usize {
    let dist = |t: &Vec<[f64; 2]>| -> f64 {
        t.iter()
            .zip(coords)
            .map(|(a, b)| sq(a[0] - b[0]) + sq(a[1] - b[1]))
            .sum()
    };
    let mut best = 0;
    for k in 1..templates.len() {
        if dist(&templates[k]) < dist(&templates[best]) {
            best = k;
        }
    }
    best
}
