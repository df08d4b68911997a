//! Entropy models for the two latent tensors: a Gaussian conditional over
//! quantized scales for the main latent and a smoothed-histogram factorized
//! prior for the hyper-latent, plus the seeded synthetic-latent source that
//! stands in for a neural encoder.
//!
//! All table construction is pure and deterministic; every random draw goes
//! through a keyed ChaCha stream so the same seed reproduces the same
//! latents on any platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rans::{CdfTable, DEFAULT_PRECISION_BITS};
use crate::tile::LatentTile;

/// Default two-sided tail mass left outside the coded symbol range, 2^-9.
pub const DEFAULT_TAIL_MASS: f64 = 1.0 / 512.0;

const DOMAIN_CHANNEL_SCALES: u8 = 0;
const DOMAIN_CALIBRATION: u8 = 1;
const DOMAIN_TILE: u8 = 2;
pub(crate) const DOMAIN_STRESSOR: u8 = 3;

/// Deterministic per-purpose RNG stream: (seed, domain, index) fully keys it.
pub(crate) fn rng_for(seed: u64, domain: u8, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16] = domain;
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in [0, 1) with 53 random bits.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal CDF. Built so that `phi(-x) == 1 - phi(x)` holds exactly
/// in floating point, which keeps quantized tables symmetric.
pub fn std_normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        1.0 - std_normal_cdf(-x)
    } else {
        0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
    }
}

/// Strictly increasing grid of Gaussian scale levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTable {
    levels: Vec<f64>,
}

impl ScaleTable {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidParameter(
                "scale table needs at least 2 levels".into(),
            ));
        }
        if !levels[0].is_finite() || levels[0] <= 0.0 {
            return Err(Error::InvalidParameter(
                "scale levels must be positive".into(),
            ));
        }
        for w in levels.windows(2) {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::InvalidParameter(
                    "scale levels must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { levels })
    }

    /// `count` log-spaced levels over `[min, max]`.
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 || min <= 0.0 || max <= min {
            return Err(Error::InvalidParameter(format!(
                "bad log-spaced grid ({min}, {max}, {count})"
            )));
        }
        let (lo, hi) = (libm::log(min), libm::log(max));
        let step = (hi - lo) / (count - 1) as f64;
        let levels = (0..count)
            .map(|i| libm::exp(lo + step * i as f64))
            .collect();
        Self::new(levels)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for ScaleTable {
    /// 64 log-spaced levels over [0.11, 256].
    fn default() -> Self {
        Self::log_spaced(0.11, 256.0, 64).expect("default grid is valid")
    }
}

/// Smallest index `i` with `levels[i] >= sigma`, clamped to the last index.
pub fn quantize_scale(sigma: f64, table: &ScaleTable) -> usize {
    let idx = table.levels.partition_point(|&l| l < sigma);
    idx.min(table.levels.len() - 1)
}

/// Quantized CDF of a zero-mean Gaussian discretized to integer bins.
///
/// The symbol range `[-L, L]` uses the smallest `L` whose two-sided tail
/// beyond `+-(L + 0.5)` is at most `tail_mass`; the leftover tail mass is
/// folded into the two edge bins. Every in-range symbol gets frequency >= 1.
pub fn build_gaussian_cdf(sigma: f64, precision_bits: u32, tail_mass: f64) -> Result<CdfTable> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !(tail_mass > 0.0 && tail_mass <= 0.01) {
        return Err(Error::InvalidParameter(format!(
            "tail_mass must be in (0, 0.01], got {tail_mass}"
        )));
    }
    let mut half_width = 0u32;
    loop {
        let tail = 2.0 * (1.0 - std_normal_cdf((half_width as f64 + 0.5) / sigma));
        if tail <= tail_mass {
            break;
        }
        half_width += 1;
        if 2 * half_width as usize + 1 > 1 << 16 {
            return Err(crate::error::CdfViolation::AlphabetTooLarge(
                2 * half_width as usize + 1,
            )
            .into());
        }
    }
    let bins = 2 * half_width as usize + 1;
    let mut points = Vec::with_capacity(bins + 1);
    points.push(0.0);
    for j in 1..bins {
        let edge = -(half_width as f64) + j as f64 - 0.5;
        points.push(std_normal_cdf(edge / sigma));
    }
    points.push(1.0);
    let codable = vec![true; bins];
    CdfTable::from_cumulative(precision_bits, &points, &codable, -(half_width as i32))
}

/// Gaussian conditional entropy model: one quantized CDF per scale level.
#[derive(Debug, Clone)]
pub struct GaussianConditional {
    scale_table: ScaleTable,
    tail_mass: f64,
    precision_bits: u32,
    tables: Vec<CdfTable>,
    id: u32,
}

impl GaussianConditional {
    pub fn new(scale_table: ScaleTable, tail_mass: f64, precision_bits: u32) -> Result<Self> {
        let tables: Vec<CdfTable> = scale_table
            .levels()
            .iter()
            .map(|&s| build_gaussian_cdf(s, precision_bits, tail_mass))
            .collect::<Result<_>>()?;
        let mut h = crc32fast::Hasher::new();
        h.update(&precision_bits.to_le_bytes());
        h.update(&tail_mass.to_le_bytes());
        for t in &tables {
            h.update(&t.fingerprint().to_le_bytes());
        }
        let id = h.finalize();
        Ok(Self {
            scale_table,
            tail_mass,
            precision_bits,
            tables,
            id,
        })
    }

    pub fn with_defaults() -> Result<Self> {
        Self::new(ScaleTable::default(), DEFAULT_TAIL_MASS, DEFAULT_PRECISION_BITS)
    }

    pub fn scale_table(&self) -> &ScaleTable {
        &self.scale_table
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn level_count(&self) -> usize {
        self.tables.len()
    }

    pub fn table_for_level(&self, level: usize) -> &CdfTable {
        &self.tables[level]
    }

    pub fn quantize(&self, sigma: f64) -> usize {
        quantize_scale(sigma, &self.scale_table)
    }

    /// Stable identifier stored in coded-file headers.
    pub fn id(&self) -> u32 {
        self.id
    }
}

/// Per-channel histogram prior over a bounded integer support.
#[derive(Debug, Clone)]
pub struct FactorizedPrior {
    tables: Vec<CdfTable>,
    id: u32,
}

/// Raw per-channel occurrence counts; `offset` is the integer value of
/// counts[0].
#[derive(Debug, Clone)]
pub struct ChannelCounts {
    pub offset: i32,
    pub counts: Vec<u64>,
}

impl FactorizedPrior {
    /// Builds channel tables from counts with Laplace smoothing:
    /// weight(v) = count(v) + pseudo_count. With a zero pseudo-count,
    /// unobserved values stay uncodable.
    pub fn from_counts(
        channels: &[ChannelCounts],
        pseudo_count: f64,
        precision_bits: u32,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::EmptyChannel(0));
        }
        if !(pseudo_count >= 0.0 && pseudo_count.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pseudo_count must be non-negative, got {pseudo_count}"
            )));
        }
        let tables: Vec<CdfTable> = channels
            .iter()
            .map(|ch| {
                let weights: Vec<f64> = ch
                    .counts
                    .iter()
                    .map(|&c| c as f64 + pseudo_count)
                    .collect();
                CdfTable::from_weights(precision_bits, &weights, ch.offset)
            })
            .collect::<Result<_>>()?;
        let mut h = crc32fast::Hasher::new();
        h.update(&(tables.len() as u32).to_le_bytes());
        for t in &tables {
            h.update(&t.fingerprint().to_le_bytes());
        }
        let id = h.finalize();
        Ok(Self { tables, id })
    }

    pub fn channels(&self) -> usize {
        self.tables.len()
    }

    pub fn channel_table(&self, channel: usize) -> &CdfTable {
        &self.tables[channel]
    }

    pub fn id(&self) -> u32 {
        self.id
    }
}

/// Fits a factorized prior: per-channel support `[min-1, max+1]` over the
/// observed values, frequencies proportional to `count + pseudo_count`.
pub fn fit_factorized(
    samples: &[Vec<i32>],
    pseudo_count: f64,
    precision_bits: u32,
) -> Result<FactorizedPrior> {
    if samples.is_empty() {
        return Err(Error::EmptyChannel(0));
    }
    let mut channels = Vec::with_capacity(samples.len());
    for (c, values) in samples.iter().enumerate() {
        if values.is_empty() {
            return Err(Error::EmptyChannel(c));
        }
        let min = *values.iter().min().unwrap() - 1;
        let max = *values.iter().max().unwrap() + 1;
        let width = (max - min + 1) as usize;
        let mut counts = vec![0u64; width];
        for &v in values {
            counts[(v - min) as usize] += 1;
        }
        channels.push(ChannelCounts {
            offset: min,
            counts,
        });
    }
    FactorizedPrior::from_counts(&channels, pseudo_count, precision_bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelSize {
    S,
    M,
    L,
}

impl ModelSize {
    pub fn wire_code(self) -> u8 {
        match self {
            ModelSize::S => 0,
            ModelSize::M => 1,
            ModelSize::L => 2,
        }
    }

    pub fn from_wire_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ModelSize::S),
            1 => Some(ModelSize::M),
            2 => Some(ModelSize::L),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelSize::S => "S",
            ModelSize::M => "M",
            ModelSize::L => "L",
        }
    }
}

impl std::str::FromStr for ModelSize {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" | "s" => Ok(ModelSize::S),
            "M" | "m" => Ok(ModelSize::M),
            "L" | "l" => Ok(ModelSize::L),
            other => Err(Error::InvalidParameter(format!(
                "unknown model size '{other}'"
            ))),
        }
    }
}

/// Shape of the latent tensors a (simulated) encoder emits per tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub model_size: ModelSize,
    pub y_channels: u32,
    pub z_channels: u32,
    /// Spatial downsampling of the main latent relative to tile pixels.
    pub y_stride: u32,
    /// Spatial downsampling of the hyper-latent; a multiple of `y_stride`.
    pub z_stride: u32,
    pub element_bits: u32,
}

impl LatentSpec {
    /// Declared defaults per size: channels 128/64, 192/96, 256/128 for
    /// S/M/L, strides 16 and 64, 16-bit elements.
    pub fn for_size(size: ModelSize) -> Self {
        let (y_channels, z_channels) = match size {
            ModelSize::S => (128, 64),
            ModelSize::M => (192, 96),
            ModelSize::L => (256, 128),
        };
        Self {
            model_size: size,
            y_channels,
            z_channels,
            y_stride: 16,
            z_stride: 64,
            element_bits: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.y_channels == 0 {
            return Err(Error::InvalidParameter("y_channels must be positive".into()));
        }
        for (name, s) in [("y_stride", self.y_stride), ("z_stride", self.z_stride)] {
            if s == 0 || !s.is_power_of_two() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a power of two, got {s}"
                )));
            }
        }
        if self.z_stride < self.y_stride {
            return Err(Error::InvalidParameter(
                "z_stride must not be smaller than y_stride".into(),
            ));
        }
        if self.element_bits == 0 || self.element_bits > 32 {
            return Err(Error::InvalidParameter(format!(
                "element_bits must be in [1, 32], got {}",
                self.element_bits
            )));
        }
        Ok(())
    }

    fn spatial(&self, tile_dim: u32, stride: u32) -> Result<u32> {
        if tile_dim == 0 || !tile_dim.is_multiple_of(stride) {
            return Err(Error::StrideMismatch { tile_dim, stride });
        }
        Ok(tile_dim / stride)
    }

    pub fn y_spatial(&self, tile_dim: u32) -> Result<u32> {
        self.spatial(tile_dim, self.y_stride)
    }

    pub fn z_spatial(&self, tile_dim: u32) -> Result<u32> {
        self.spatial(tile_dim, self.z_stride)
    }

    pub fn y_elements(&self, tile_dim: u32) -> Result<u64> {
        let s = self.y_spatial(tile_dim)? as u64;
        Ok(self.y_channels as u64 * s * s)
    }

    pub fn z_elements(&self, tile_dim: u32) -> Result<u64> {
        if self.z_channels == 0 {
            return Ok(0);
        }
        let s = self.z_spatial(tile_dim)? as u64;
        Ok(self.z_channels as u64 * s * s)
    }
}

/// Parameters of the synthetic latent generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLatentConfig {
    /// Probability an element is exactly zero. Must be in [0, 1).
    pub sparsity: f64,
    /// Per-channel base scales are drawn log-uniformly from this range.
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Scale of the hyper-latent distribution.
    pub z_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticLatentConfig {
    fn default() -> Self {
        Self {
            sparsity: 0.9,
            sigma_min: 0.11,
            sigma_max: 1.0,
            z_sigma: 1.5,
            seed: 42,
        }
    }
}

impl SyntheticLatentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sparsity >= 0.0 && self.sparsity < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sparsity must be in [0, 1), got {}",
                self.sparsity
            )));
        }
        if !(self.sigma_min > 0.0 && self.sigma_max >= self.sigma_min) {
            return Err(Error::InvalidParameter(format!(
                "sigma range [{}, {}] invalid",
                self.sigma_min, self.sigma_max
            )));
        }
        if !self.z_sigma.is_finite() || self.z_sigma <= 0.0 {
            return Err(Error::InvalidParameter("z_sigma must be positive".into()));
        }
        Ok(())
    }
}

/// Per-channel base scale indices plus the jitter rule that turns a decoded
/// hyper-latent into per-element scale indices for the main latent. This is
/// the stand-in for a hyper-decoder: both coder sides evaluate it, so scale
/// indices never travel in the file. Its fingerprint is folded into the
/// scale-table id stored in file headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleMap {
    base_level: Vec<u16>,
}

impl ScaleMap {
    pub fn new(base_level: Vec<u16>) -> Self {
        Self { base_level }
    }

    pub fn channels(&self) -> usize {
        self.base_level.len()
    }

    /// base level of the channel, shifted by the co-located hyper-latent
    /// value, clamped to the level grid.
    pub fn indices_for(
        &self,
        z: &[i16],
        z_shape: (u32, u32, u32),
        y_shape: (u32, u32, u32),
        level_count: usize,
    ) -> Vec<u16> {
        let (zc, zh, zw) = (z_shape.0 as usize, z_shape.1 as usize, z_shape.2 as usize);
        let (yc, yh, yw) = (y_shape.0 as usize, y_shape.1 as usize, y_shape.2 as usize);
        let max_level = (level_count - 1) as i32;
        let mut out = Vec::with_capacity(yc * yh * yw);
        for c in 0..yc {
            let base = self.base_level[c % self.base_level.len().max(1)] as i32;
            for h in 0..yh {
                for w in 0..yw {
                    let jitter = if zc == 0 {
                        0
                    } else {
                        let (zc_i, zh_i, zw_i) = (c % zc, h * zh / yh.max(1), w * zw / yw.max(1));
                        z[(zc_i * zh + zh_i) * zw + zw_i] as i32
                    };
                    out.push((base + jitter).clamp(0, max_level) as u16);
                }
            }
        }
        out
    }

    pub fn fingerprint(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        for &b in &self.base_level {
            h.update(&b.to_le_bytes());
        }
        h.finalize()
    }
}

/// The full model bundle a tile codec needs: Gaussian conditional for the
/// main latent, factorized prior for the hyper-latent, and the scale map
/// deriving side information from the hyper-latent.
#[derive(Debug, Clone)]
pub struct TileModels {
    pub gc: GaussianConditional,
    pub fp: FactorizedPrior,
    pub scale_map: ScaleMap,
}

impl TileModels {
    /// Identifier for the scale side of the bundle (tables + map).
    pub fn scale_id(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        h.update(&self.gc.id().to_le_bytes());
        h.update(&self.scale_map.fingerprint().to_le_bytes());
        h.finalize()
    }

    pub fn factorized_id(&self) -> u32 {
        self.fp.id()
    }

    pub fn sigma_indices(
        &self,
        z: &[i16],
        z_shape: (u32, u32, u32),
        y_shape: (u32, u32, u32),
    ) -> Vec<u16> {
        self.scale_map
            .indices_for(z, z_shape, y_shape, self.gc.level_count())
    }
}

const CALIBRATION_TILES: u64 = 32;
const FACTORIZED_PSEUDO_COUNT: f64 = 1.0;

/// Deterministic tile generator plus the entropy models fitted to it.
///
/// The hyper-latent is drawn from a per-spec discretized Gaussian; the
/// per-element scale index of the main latent comes from the [`ScaleMap`]
/// applied to the hyper-latent. Every value the generator emits is codable
/// under [`Self::models`].
pub struct SyntheticSource {
    spec: LatentSpec,
    cfg: SyntheticLatentConfig,
    tile_dim: u32,
    models: TileModels,
    z_gen: CdfTable,
    zero_threshold: u32,
}

impl SyntheticSource {
    pub fn new(spec: LatentSpec, cfg: SyntheticLatentConfig, tile_dim: u32) -> Result<Self> {
        Self::with_scale_table(spec, cfg, tile_dim, ScaleTable::default())
    }

    pub fn with_scale_table(
        spec: LatentSpec,
        cfg: SyntheticLatentConfig,
        tile_dim: u32,
        scale_table: ScaleTable,
    ) -> Result<Self> {
        spec.validate()?;
        cfg.validate()?;
        spec.y_spatial(tile_dim)?;
        if spec.z_channels > 0 {
            spec.z_spatial(tile_dim)?;
        }
        let gc = GaussianConditional::new(scale_table, DEFAULT_TAIL_MASS, DEFAULT_PRECISION_BITS)?;

        let mut rng = rng_for(cfg.seed, DOMAIN_CHANNEL_SCALES, 0);
        let (lo, hi) = (libm::log(cfg.sigma_min), libm::log(cfg.sigma_max));
        let base_level: Vec<u16> = (0..spec.y_channels)
            .map(|_| {
                let sigma = libm::exp(lo + unit_f64(&mut rng) * (hi - lo));
                gc.quantize(sigma) as u16
            })
            .collect();

        let z_gen = build_gaussian_cdf(cfg.z_sigma, DEFAULT_PRECISION_BITS, DEFAULT_TAIL_MASS)?;
        let zero_threshold = (cfg.sparsity * 4294967296.0) as u64;
        let zero_threshold = zero_threshold.min(u32::MAX as u64) as u32;

        // Fit the hyper-latent prior on a seeded calibration batch. The
        // support is the generator table's full range, so any later draw is
        // codable (pseudo-count smoothing keeps every bin positive).
        let z_spatial = if spec.z_channels > 0 {
            spec.z_spatial(tile_dim)? as usize
        } else {
            0
        };
        let plane = z_spatial * z_spatial;
        let width = z_gen.alphabet_size();
        let offset = z_gen.alphabet_offset();
        let zero_idx = z_gen.index_of(0).expect("zero is always in range");
        let mut channels: Vec<ChannelCounts> = (0..spec.z_channels.max(1))
            .map(|_| ChannelCounts {
                offset,
                counts: vec![0u64; width],
            })
            .collect();
        for cal in 0..CALIBRATION_TILES {
            let mut rng = rng_for(cfg.seed, DOMAIN_CALIBRATION, cal);
            for ch in channels.iter_mut() {
                for _ in 0..plane.max(1) {
                    let idx = if rng.next_u32() < zero_threshold {
                        zero_idx
                    } else {
                        z_gen.sample(&mut rng)
                    };
                    ch.counts[idx] += 1;
                }
            }
        }
        let fp = FactorizedPrior::from_counts(
            &channels,
            FACTORIZED_PSEUDO_COUNT,
            DEFAULT_PRECISION_BITS,
        )?;
        let models = TileModels {
            gc,
            fp,
            scale_map: ScaleMap::new(base_level),
        };

        Ok(Self {
            spec,
            cfg,
            tile_dim,
            models,
            z_gen,
            zero_threshold,
        })
    }

    pub fn spec(&self) -> &LatentSpec {
        &self.spec
    }

    pub fn config(&self) -> &SyntheticLatentConfig {
        &self.cfg
    }

    pub fn tile_dim(&self) -> u32 {
        self.tile_dim
    }

    pub fn models(&self) -> &TileModels {
        &self.models
    }

    pub fn gaussian(&self) -> &GaussianConditional {
        &self.models.gc
    }

    pub fn factorized(&self) -> &FactorizedPrior {
        &self.models.fp
    }

    /// Deterministic latent pair for `(seed, tile_id)`, placed at grid
    /// position `(row, col)`.
    pub fn generate_at(&self, tile_id: u64, row: u16, col: u16) -> LatentTile {
        let mut rng = rng_for(self.cfg.seed, DOMAIN_TILE, tile_id);
        let ys = self.spec.y_spatial(self.tile_dim).expect("validated");
        let zs = if self.spec.z_channels > 0 {
            self.spec.z_spatial(self.tile_dim).expect("validated")
        } else {
            0
        };
        let z_shape = (self.spec.z_channels, zs, zs);
        let y_shape = (self.spec.y_channels, ys, ys);

        let z_len = (z_shape.0 * z_shape.1 * z_shape.2) as usize;
        let mut z = Vec::with_capacity(z_len);
        for _ in 0..z_len {
            if rng.next_u32() < self.zero_threshold {
                z.push(0i16);
            } else {
                let idx = self.z_gen.sample(&mut rng);
                z.push(self.z_gen.value_of(idx) as i16);
            }
        }

        let sigma_idx = self.models.sigma_indices(&z, z_shape, y_shape);

        let y_len = (y_shape.0 * y_shape.1 * y_shape.2) as usize;
        let mut y = Vec::with_capacity(y_len);
        for &level in sigma_idx.iter() {
            if rng.next_u32() < self.zero_threshold {
                y.push(0i16);
            } else {
                let table = self.models.gc.table_for_level(level as usize);
                let idx = table.sample(&mut rng);
                y.push(table.value_of(idx) as i16);
            }
        }

        LatentTile {
            row,
            col,
            y,
            y_shape,
            sigma_idx,
            z,
            z_shape,
        }
    }

    pub fn generate(&self, tile_id: u64) -> LatentTile {
        self.generate_at(tile_id, 0, 0)
    }
}

/// One-shot convenience wrapper around [`SyntheticSource`]; reuse the source
/// when generating many tiles, model fitting is the expensive part.
pub fn generate_synthetic_latent(
    spec: LatentSpec,
    cfg: SyntheticLatentConfig,
    tile_dim: u32,
    tile_id: u64,
) -> Result<LatentTile> {
    Ok(SyntheticSource::new(spec, cfg, tile_dim)?.generate(tile_id))
}

/// Exact information content of a tile under the given models, in bits:
/// the main latent under its per-element scale tables, the hyper-latent
/// under its channel histograms. A zero-probability symbol is an error.
pub fn estimate_bits(
    tile: &LatentTile,
    gc: &GaussianConditional,
    fp: &FactorizedPrior,
) -> Result<f64> {
    let mut bits = 0.0;
    let (zc, zh, zw) = tile.z_shape;
    let plane = (zh * zw) as usize;
    if zc as usize > fp.channels() {
        return Err(Error::ShapeMismatch(format!(
            "tile has {} hyper-latent channels, prior has {}",
            zc,
            fp.channels()
        )));
    }
    for (pos, &v) in tile.z.iter().enumerate() {
        let table = fp.channel_table(pos / plane.max(1));
        let idx = table
            .index_of(v as i32)
            .ok_or(Error::UncodableSymbol { position: pos, index: v as i64 })?;
        bits += table
            .bits_for(idx)
            .ok_or(Error::UncodableSymbol { position: pos, index: v as i64 })?;
    }
    for (pos, (&v, &level)) in tile.y.iter().zip(tile.sigma_idx.iter()).enumerate() {
        if level as usize >= gc.level_count() {
            return Err(Error::ShapeMismatch(format!(
                "scale index {level} out of range at element {pos}"
            )));
        }
        let table = gc.table_for_level(level as usize);
        let idx = table
            .index_of(v as i32)
            .ok_or(Error::UncodableSymbol { position: pos, index: v as i64 })?;
        bits += table
            .bits_for(idx)
            .ok_or(Error::UncodableSymbol { position: pos, index: v as i64 })?;
    }
    Ok(bits)
}

/// Bits-per-pixel of a tile-sized payload.
pub fn bits_per_pixel(total_bits: f64, tile_dim: u32) -> f64 {
    total_bits / (tile_dim as f64 * tile_dim as f64)
}
