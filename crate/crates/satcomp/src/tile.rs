//! Image tiling and the per-tile coded-file format.
//!
//! A coded file carries everything the entropy stage emits for one tile:
//! header, hyper-latent stream, main-latent stream, CRC32 trailer. The
//! hyper-latent stream comes first because decoding derives the main
//! latent's scale side information from it.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! magic "FCF1" (4) | version u8 | model_size u8 |
//! tile_row u16 | tile_col u16 | tile_dim u16 |
//! y_channels u16 | y_h u16 | y_w u16 |
//! z_channels u16 | z_h u16 | z_w u16 |
//! scale_table_id u32 | factorized_id u32 |
//! z_len u32 | z_symbol_count u32 | y_len u32 | y_symbol_count u32 |
//! z bytes | y bytes | crc32 u32
//! ```

use crate::entropy::{LatentSpec, ModelSize, TileModels};
use crate::error::{Error, Result};
use crate::rans::{CodedStream, RansDecoder, RansEncoder};

pub const FILE_MAGIC: [u8; 4] = *b"FCF1";
pub const FILE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 48;
/// Fixed per-file overhead beyond the worst-case payload bound: header,
/// CRC trailer, and one 4-byte state flush per stream.
pub const FILE_OVERHEAD_BYTES: u64 = HEADER_LEN as u64 + 4 + 8;

/// Tile decomposition of one image, padding included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub tile_dim: u32,
    pub rows: u32,
    pub cols: u32,
    pub pad_right: u32,
    pub pad_bottom: u32,
}

/// Splits `width x height` pixels into `tile_dim`-sized tiles, zero-padding
/// the right and bottom edges to full tiles.
pub fn partition(width: u32, height: u32, tile_dim: u32) -> Result<TileGrid> {
    if width == 0 || height == 0 || tile_dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "partition needs positive dimensions, got {width}x{height} tile {tile_dim}"
        )));
    }
    let cols = width.div_ceil(tile_dim);
    let rows = height.div_ceil(tile_dim);
    Ok(TileGrid {
        image_id: String::new(),
        image_width: width,
        image_height: height,
        tile_dim,
        rows,
        cols,
        pad_right: cols * tile_dim - width,
        pad_bottom: rows * tile_dim - height,
    })
}

impl TileGrid {
    pub fn with_image_id(mut self, id: impl Into<String>) -> Self {
        self.image_id = id.into();
        self
    }

    pub fn tile_count(&self) -> u64 {
        self.rows as u64 * self.cols as u64
    }
}

/// Row-major tile visit order; tiles of one image stay contiguous.
pub fn tile_order(grid: &TileGrid) -> Vec<(u32, u32)> {
    let mut order = Vec::with_capacity(grid.tile_count() as usize);
    for row in 0..grid.rows {
        for col in 0..grid.cols {
            order.push((row, col));
        }
    }
    order
}

/// Worst-case coded size of one tile in bytes, from the latent tensor
/// dimensionality alone: `(y_elements + z_elements) * element_bits / 8`,
/// rounded up. Sparsity-exploiting serialization is deliberately not
/// assumed.
pub fn bound_file_size(spec: &LatentSpec, tile_dim: u32) -> Result<u64> {
    spec.validate()?;
    let elements = spec.y_elements(tile_dim)? + spec.z_elements(tile_dim)?;
    Ok((elements * spec.element_bits as u64).div_ceil(8))
}

/// Quantized latent pair for one tile, plus the scale side information of
/// the main latent. Tensors are channel-major `[c][h][w]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentTile {
    pub row: u16,
    pub col: u16,
    pub y: Vec<i16>,
    pub y_shape: (u32, u32, u32),
    /// Per-element scale index into the Gaussian conditional's level grid;
    /// parallel to `y`. Always equal to the scale map applied to `z`.
    pub sigma_idx: Vec<u16>,
    pub z: Vec<i16>,
    pub z_shape: (u32, u32, u32),
}

impl LatentTile {
    pub fn y_elements(&self) -> usize {
        self.y.len()
    }

    pub fn z_elements(&self) -> usize {
        self.z.len()
    }
}

/// Parsed (or about-to-be-serialized) coded tile file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedFile {
    pub model_size: ModelSize,
    pub tile_row: u16,
    pub tile_col: u16,
    pub tile_dim: u16,
    pub y_shape: (u16, u16, u16),
    pub z_shape: (u16, u16, u16),
    pub scale_table_id: u32,
    pub factorized_id: u32,
    pub z_stream: CodedStream,
    pub y_stream: CodedStream,
}

impl CodedFile {
    /// Total serialized length including header and CRC.
    pub fn coded_len(&self) -> usize {
        HEADER_LEN + self.z_stream.bytes.len() + self.y_stream.bytes.len() + 4
    }

    /// Entropy-coded payload bytes only (both streams, flushes included).
    pub fn stream_bytes(&self) -> usize {
        self.z_stream.bytes.len() + self.y_stream.bytes.len()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.coded_len());
        out.extend_from_slice(&FILE_MAGIC);
        out.push(FILE_VERSION);
        out.push(self.model_size.wire_code());
        for v in [
            self.tile_row,
            self.tile_col,
            self.tile_dim,
            self.y_shape.0,
            self.y_shape.1,
            self.y_shape.2,
            self.z_shape.0,
            self.z_shape.1,
            self.z_shape.2,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in [
            self.scale_table_id,
            self.factorized_id,
            self.z_stream.bytes.len() as u32,
            self.z_stream.symbol_count,
            self.y_stream.bytes.len() as u32,
            self.y_stream.symbol_count,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        debug_assert_eq!(out.len(), HEADER_LEN);
        out.extend_from_slice(&self.z_stream.bytes);
        out.extend_from_slice(&self.y_stream.bytes);
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN + 4 {
            return Err(Error::TruncatedStream);
        }
        if bytes[0..4] != FILE_MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes[4] != FILE_VERSION {
            return Err(Error::UnsupportedVersion(bytes[4]));
        }
        let model_size = ModelSize::from_wire_code(bytes[5])
            .ok_or(Error::CorruptStream("unknown model size code"))?;
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at =
            |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
        let tile_row = u16_at(6);
        let tile_col = u16_at(8);
        let tile_dim = u16_at(10);
        let y_shape = (u16_at(12), u16_at(14), u16_at(16));
        let z_shape = (u16_at(18), u16_at(20), u16_at(22));
        let scale_table_id = u32_at(24);
        let factorized_id = u32_at(28);
        let z_len = u32_at(32) as usize;
        let z_symbol_count = u32_at(36);
        let y_len = u32_at(40) as usize;
        let y_symbol_count = u32_at(44);
        let expected = HEADER_LEN
            .checked_add(z_len)
            .and_then(|v| v.checked_add(y_len))
            .and_then(|v| v.checked_add(4))
            .ok_or(Error::CorruptStream("stream lengths overflow"))?;
        if bytes.len() != expected {
            return Err(Error::CorruptStream("file length disagrees with header"));
        }
        let body_end = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
        let computed = crc32fast::hash(&bytes[..body_end]);
        if stored != computed {
            return Err(Error::CrcMismatch { stored, computed });
        }
        let z_bytes = bytes[HEADER_LEN..HEADER_LEN + z_len].to_vec();
        let y_bytes = bytes[HEADER_LEN + z_len..body_end].to_vec();
        Ok(Self {
            model_size,
            tile_row,
            tile_col,
            tile_dim,
            y_shape,
            z_shape,
            scale_table_id,
            factorized_id,
            z_stream: CodedStream {
                bytes: z_bytes,
                symbol_count: z_symbol_count,
            },
            y_stream: CodedStream {
                bytes: y_bytes,
                symbol_count: y_symbol_count,
            },
        })
    }
}

fn check_tile_shapes(tile: &LatentTile, spec: &LatentSpec, tile_dim: u32) -> Result<()> {
    let ys = spec.y_spatial(tile_dim)?;
    let zs = if spec.z_channels > 0 {
        spec.z_spatial(tile_dim)?
    } else {
        0
    };
    if tile.y_shape != (spec.y_channels, ys, ys) {
        return Err(Error::ShapeMismatch(format!(
            "main latent shape {:?} does not match spec {:?}",
            tile.y_shape,
            (spec.y_channels, ys, ys)
        )));
    }
    if tile.z_shape != (spec.z_channels, zs, zs) {
        return Err(Error::ShapeMismatch(format!(
            "hyper-latent shape {:?} does not match spec {:?}",
            tile.z_shape,
            (spec.z_channels, zs, zs)
        )));
    }
    let y_len = (tile.y_shape.0 * tile.y_shape.1 * tile.y_shape.2) as usize;
    let z_len = (tile.z_shape.0 * tile.z_shape.1 * tile.z_shape.2) as usize;
    if tile.y.len() != y_len || tile.sigma_idx.len() != y_len || tile.z.len() != z_len {
        return Err(Error::ShapeMismatch(format!(
            "tensor lengths y={} sigma={} z={} disagree with shapes",
            tile.y.len(),
            tile.sigma_idx.len(),
            tile.z.len()
        )));
    }
    if tile_dim > u16::MAX as u32 {
        return Err(Error::InvalidParameter(format!(
            "tile_dim {tile_dim} exceeds the file format limit"
        )));
    }
    Ok(())
}

/// Entropy-codes one tile into its file representation.
///
/// The hyper-latent is coded per channel under the factorized prior, the
/// main latent per element under the Gaussian conditional table selected by
/// its scale index. The tile's stored `sigma_idx` must equal the scale map
/// applied to its hyper-latent, since a decoder re-derives it that way.
pub fn encode_tile(
    tile: &LatentTile,
    spec: &LatentSpec,
    tile_dim: u32,
    models: &TileModels,
) -> Result<CodedFile> {
    check_tile_shapes(tile, spec, tile_dim)?;
    let derived = models.sigma_indices(&tile.z, tile.z_shape, tile.y_shape);
    if let Some(position) = tile
        .sigma_idx
        .iter()
        .zip(derived.iter())
        .position(|(a, b)| a != b)
    {
        return Err(Error::SideInfoMismatch { position });
    }

    let z_plane = (tile.z_shape.1 * tile.z_shape.2) as usize;
    let mut enc = RansEncoder::new();
    for (pos, &v) in tile.z.iter().enumerate().rev() {
        let table = models.fp.channel_table(pos / z_plane.max(1));
        let idx = table.index_of(v as i32).ok_or(Error::UncodableSymbol {
            position: pos,
            index: v as i64,
        })?;
        enc.push(idx, table).map_err(|e| match e {
            Error::UncodableSymbol { .. } => Error::UncodableSymbol {
                position: pos,
                index: v as i64,
            },
            other => other,
        })?;
    }
    let z_stream = enc.finish();

    let mut enc = RansEncoder::new();
    for (pos, (&v, &level)) in tile.y.iter().zip(tile.sigma_idx.iter()).enumerate().rev() {
        let table = models.gc.table_for_level(level as usize);
        let idx = table.index_of(v as i32).ok_or(Error::UncodableSymbol {
            position: pos,
            index: v as i64,
        })?;
        enc.push(idx, table).map_err(|e| match e {
            Error::UncodableSymbol { .. } => Error::UncodableSymbol {
                position: pos,
                index: v as i64,
            },
            other => other,
        })?;
    }
    let y_stream = enc.finish();

    Ok(CodedFile {
        model_size: spec.model_size,
        tile_row: tile.row,
        tile_col: tile.col,
        tile_dim: tile_dim as u16,
        y_shape: (
            tile.y_shape.0 as u16,
            tile.y_shape.1 as u16,
            tile.y_shape.2 as u16,
        ),
        z_shape: (
            tile.z_shape.0 as u16,
            tile.z_shape.1 as u16,
            tile.z_shape.2 as u16,
        ),
        scale_table_id: models.scale_id(),
        factorized_id: models.factorized_id(),
        z_stream,
        y_stream,
    })
}

/// Inverse of [`encode_tile`]: exact reconstruction, or an error on any
/// model mismatch or corruption.
pub fn decode_tile(file: &CodedFile, models: &TileModels) -> Result<LatentTile> {
    if file.scale_table_id != models.scale_id() {
        return Err(Error::ModelIdMismatch {
            field: "scale_table_id",
            expected: models.scale_id(),
            found: file.scale_table_id,
        });
    }
    if file.factorized_id != models.factorized_id() {
        return Err(Error::ModelIdMismatch {
            field: "factorized_id",
            expected: models.factorized_id(),
            found: file.factorized_id,
        });
    }
    let z_shape = (
        file.z_shape.0 as u32,
        file.z_shape.1 as u32,
        file.z_shape.2 as u32,
    );
    let y_shape = (
        file.y_shape.0 as u32,
        file.y_shape.1 as u32,
        file.y_shape.2 as u32,
    );
    let z_len = (z_shape.0 * z_shape.1 * z_shape.2) as usize;
    let y_len = (y_shape.0 * y_shape.1 * y_shape.2) as usize;
    if file.z_stream.symbol_count as usize != z_len || file.y_stream.symbol_count as usize != y_len
    {
        return Err(Error::CorruptStream("symbol counts disagree with shapes"));
    }
    if z_shape.0 as usize > models.fp.channels() {
        return Err(Error::ShapeMismatch(format!(
            "file has {} hyper-latent channels, prior has {}",
            z_shape.0,
            models.fp.channels()
        )));
    }

    let z_plane = (z_shape.1 * z_shape.2) as usize;
    let mut dec = RansDecoder::new(&file.z_stream.bytes)?;
    let mut z = Vec::with_capacity(z_len);
    for pos in 0..z_len {
        let table = models.fp.channel_table(pos / z_plane.max(1));
        let idx = dec.pop(table)?;
        let value = table.value_of(idx);
        z.push(
            i16::try_from(value).map_err(|_| Error::CorruptStream("symbol exceeds i16 range"))?,
        );
    }
    dec.finish()?;

    let sigma_idx = models.sigma_indices(&z, z_shape, y_shape);

    let mut dec = RansDecoder::new(&file.y_stream.bytes)?;
    let mut y = Vec::with_capacity(y_len);
    for &level in sigma_idx.iter() {
        let table = models.gc.table_for_level(level as usize);
        let idx = dec.pop(table)?;
        let value = table.value_of(idx);
        y.push(
            i16::try_from(value).map_err(|_| Error::CorruptStream("symbol exceeds i16 range"))?,
        );
    }
    dec.finish()?;

    Ok(LatentTile {
        row: file.tile_row,
        col: file.tile_col,
        y,
        y_shape,
        sigma_idx,
        z,
        z_shape,
    })
}
