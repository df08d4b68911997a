//! Byte-oriented range-variant ANS coder over quantized CDF tables.
//!
//! Parameterization: 32-bit state, 8-bit renormalization, lower state bound
//! 2^23. Symbols are encoded in reverse order and decoded forward; the final
//! encoder state is flushed as 4 little-endian bytes at the *front* of the
//! stream, followed by the renormalization bytes in decoder consumption
//! order. Tables are plain cumulative-frequency arrays; no precomputed
//! symbol-lookup table is built.

use rand_core::RngCore;

use crate::error::{CdfViolation, Error, Result};

/// Lower bound of the coder state. Renormalization keeps the state in
/// `[STATE_LOWER_BOUND, STATE_LOWER_BOUND << 8)` between symbols.
pub const STATE_LOWER_BOUND: u32 = 1 << 23;

/// Default table precision: total frequency = 2^16.
pub const DEFAULT_PRECISION_BITS: u32 = 16;

/// Checks the CDF-table invariants, reporting the first violation.
///
/// A table is valid when `precision_bits` is in `[8, 16]`, `cum_freq` starts
/// at 0, is monotonically non-decreasing, and ends at `2^precision_bits`.
/// Equal adjacent entries are allowed; they mark zero-frequency (uncodable)
/// symbols.
pub fn validate_cdf(precision_bits: u32, cum_freq: &[u32]) -> std::result::Result<(), CdfViolation> {
    if !(8..=16).contains(&precision_bits) {
        return Err(CdfViolation::PrecisionOutOfRange(precision_bits));
    }
    if cum_freq.len() < 2 {
        return Err(CdfViolation::TooFewEntries(cum_freq.len()));
    }
    if cum_freq.len() - 1 > 1 << 16 {
        return Err(CdfViolation::AlphabetTooLarge(cum_freq.len() - 1));
    }
    if cum_freq[0] != 0 {
        return Err(CdfViolation::FirstNotZero(cum_freq[0]));
    }
    for i in 1..cum_freq.len() {
        if cum_freq[i] < cum_freq[i - 1] {
            return Err(CdfViolation::NotMonotonic(i));
        }
    }
    let expected = 1u32 << precision_bits;
    let actual = *cum_freq.last().unwrap();
    if actual != expected {
        return Err(CdfViolation::TotalMismatch { expected, actual });
    }
    Ok(())
}

/// Quantized cumulative-frequency table.
///
/// `cum_freq` has `alphabet_size + 1` entries; symbol index `i` covers the
/// half-open range `[cum_freq[i], cum_freq[i+1])` and maps to the integer
/// value `alphabet_offset + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CdfTable {
    precision_bits: u32,
    cum_freq: Vec<u32>,
    alphabet_offset: i32,
}

impl CdfTable {
    pub fn new(precision_bits: u32, cum_freq: Vec<u32>, alphabet_offset: i32) -> Result<Self> {
        validate_cdf(precision_bits, &cum_freq)?;
        Ok(Self {
            precision_bits,
            cum_freq,
            alphabet_offset,
        })
    }

    /// Builds a table from non-negative per-symbol weights.
    ///
    /// Cumulative weights are scaled to `2^precision_bits` and rounded;
    /// every symbol with positive weight is guaranteed a frequency of at
    /// least 1, zero-weight symbols stay uncodable.
    pub fn from_weights(precision_bits: u32, weights: &[f64], alphabet_offset: i32) -> Result<Self> {
        if weights.is_empty() {
            return Err(CdfViolation::TooFewEntries(1).into());
        }
        let mut total = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "weight {w} at index {i} must be finite and non-negative"
                )));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "at least one weight must be positive".into(),
            ));
        }
        let mut points = Vec::with_capacity(weights.len() + 1);
        let mut running = 0.0;
        points.push(0.0);
        for &w in weights {
            running += w;
            points.push(running / total);
        }
        let codable: Vec<bool> = weights.iter().map(|&w| w > 0.0).collect();
        Self::from_cumulative(precision_bits, &points, &codable, alphabet_offset)
    }

    /// Builds a table from cumulative points `points[0..=n]` in `[0, 1]`.
    ///
    /// `points[0]` and `points[n]` are pinned to 0 and 1; interior points are
    /// scaled by `2^precision_bits` and rounded to nearest. Bins flagged in
    /// `codable` are then forced to width >= 1 by a forward/backward clamp.
    pub fn from_cumulative(
        precision_bits: u32,
        points: &[f64],
        codable: &[bool],
        alphabet_offset: i32,
    ) -> Result<Self> {
        if !(8..=16).contains(&precision_bits) {
            return Err(CdfViolation::PrecisionOutOfRange(precision_bits).into());
        }
        let n = points.len().saturating_sub(1);
        if n == 0 {
            return Err(CdfViolation::TooFewEntries(points.len()).into());
        }
        if n > 1 << 16 {
            return Err(CdfViolation::AlphabetTooLarge(n).into());
        }
        if codable.len() != n {
            return Err(Error::InvalidParameter(format!(
                "codable mask length {} != bin count {n}",
                codable.len()
            )));
        }
        let total = 1u32 << precision_bits;
        let codable_count = codable.iter().filter(|&&c| c).count() as u32;
        if codable_count > total {
            return Err(Error::InvalidParameter(format!(
                "{codable_count} codable symbols cannot fit a total of {total}"
            )));
        }
        let mut cum = vec![0u32; n + 1];
        cum[n] = total;
        for j in 1..n {
            let p = points[j].clamp(0.0, 1.0);
            cum[j] = (p * total as f64).round() as u32;
        }
        // Forward: reserve one slot per codable bin seen so far.
        for j in 1..n {
            let min_cum = cum[j - 1] + u32::from(codable[j - 1]);
            if cum[j] < min_cum {
                cum[j] = min_cum;
            }
        }
        // Backward: leave room for the codable bins still to come.
        for j in (1..n).rev() {
            let max_cum = cum[j + 1] - u32::from(codable[j]);
            if cum[j] > max_cum {
                cum[j] = max_cum;
            }
        }
        Self::new(precision_bits, cum, alphabet_offset)
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// Total frequency, `2^precision_bits`.
    pub fn total(&self) -> u32 {
        1 << self.precision_bits
    }

    pub fn alphabet_size(&self) -> usize {
        self.cum_freq.len() - 1
    }

    pub fn alphabet_offset(&self) -> i32 {
        self.alphabet_offset
    }

    pub fn cum(&self, index: usize) -> u32 {
        self.cum_freq[index]
    }

    pub fn freq(&self, index: usize) -> u32 {
        self.cum_freq[index + 1] - self.cum_freq[index]
    }

    pub fn is_codable(&self, index: usize) -> bool {
        index < self.alphabet_size() && self.freq(index) > 0
    }

    /// Integer value the symbol index stands for.
    pub fn value_of(&self, index: usize) -> i32 {
        self.alphabet_offset + index as i32
    }

    /// Symbol index for an integer value, if it falls in the alphabet.
    pub fn index_of(&self, value: i32) -> Option<usize> {
        let idx = value.checked_sub(self.alphabet_offset)?;
        if idx >= 0 && (idx as usize) < self.alphabet_size() {
            Some(idx as usize)
        } else {
            None
        }
    }

    /// Largest codable integer value; tables built from weights are
    /// symmetric around zero so the smallest is its negation.
    pub fn max_value(&self) -> i32 {
        self.value_of(self.alphabet_size() - 1)
    }

    /// Information content of a symbol under this table, in bits.
    pub fn bits_for(&self, index: usize) -> Option<f64> {
        let f = self.freq(index);
        if f == 0 {
            None
        } else {
            Some(self.precision_bits as f64 - libm::log2(f as f64))
        }
    }

    /// Locates the symbol whose frequency range contains `cum_value`.
    fn symbol_for_cum(&self, cum_value: u32) -> usize {
        debug_assert!(cum_value < self.total());
        // Last index with cum_freq[idx] <= cum_value; zero-frequency
        // neighbours collapse onto the codable owner of the range.
        self.cum_freq.partition_point(|&c| c <= cum_value) - 1
    }

    /// Draws a symbol index from the table distribution. Only codable
    /// symbols can be produced. The draw consumes one `u32` from the RNG;
    /// the total is a power of two so masking is bias-free.
    pub fn sample(&self, rng: &mut impl RngCore) -> usize {
        let u = rng.next_u32() & (self.total() - 1);
        self.symbol_for_cum(u)
    }

    /// Stable content hash used as a model identifier in file headers.
    pub fn fingerprint(&self) -> u32 {
        let mut h = crc32fast::Hasher::new();
        h.update(&self.precision_bits.to_le_bytes());
        h.update(&self.alphabet_offset.to_le_bytes());
        for &c in &self.cum_freq {
            h.update(&c.to_le_bytes());
        }
        h.finalize()
    }
}

/// An entropy-coded byte sequence plus the symbol count needed to decode it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedStream {
    pub bytes: Vec<u8>,
    pub symbol_count: u32,
}

/// Streaming encoder. Symbols must be pushed in *reverse* of the order the
/// decoder will read them; each push may use a different table, as long as
/// the decoder applies the same table sequence forward.
pub struct RansEncoder {
    state: u32,
    tail: Vec<u8>,
    pushed: u32,
}

impl RansEncoder {
    pub fn new() -> Self {
        Self {
            state: STATE_LOWER_BOUND,
            tail: Vec::new(),
            pushed: 0,
        }
    }

    pub fn push(&mut self, index: usize, table: &CdfTable) -> Result<()> {
        if !table.is_codable(index) {
            return Err(Error::UncodableSymbol {
                position: self.pushed as usize,
                index: index as i64,
            });
        }
        let freq = table.freq(index);
        let start = table.cum(index);
        let x_max = ((STATE_LOWER_BOUND >> table.precision_bits()) << 8) * freq;
        while self.state >= x_max {
            self.tail.push((self.state & 0xff) as u8);
            self.state >>= 8;
        }
        self.state = (self.state / freq) * table.total() + (self.state % freq) + start;
        self.pushed += 1;
        Ok(())
    }

    pub fn finish(mut self) -> CodedStream {
        let mut bytes = Vec::with_capacity(4 + self.tail.len());
        bytes.extend_from_slice(&self.state.to_le_bytes());
        self.tail.reverse();
        bytes.extend_from_slice(&self.tail);
        CodedStream {
            bytes,
            symbol_count: self.pushed,
        }
    }
}

impl Default for RansEncoder {
    fn default() -> Self {
        Self::new()
    }
}

/// Streaming decoder over a coded byte slice.
pub struct RansDecoder<'a> {
    state: u32,
    rest: &'a [u8],
}

impl<'a> RansDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::TruncatedStream);
        }
        let state = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
        if !(STATE_LOWER_BOUND..STATE_LOWER_BOUND << 8).contains(&state) {
            return Err(Error::CorruptStream("initial state out of range"));
        }
        Ok(Self {
            state,
            rest: &bytes[4..],
        })
    }

    pub fn pop(&mut self, table: &CdfTable) -> Result<usize> {
        let total = table.total();
        let cum_value = self.state & (total - 1);
        let index = table.symbol_for_cum(cum_value);
        let freq = table.freq(index);
        debug_assert!(freq > 0);
        self.state = freq * (self.state >> table.precision_bits()) + cum_value - table.cum(index);
        while self.state < STATE_LOWER_BOUND {
            let (&byte, rest) = self.rest.split_first().ok_or(Error::TruncatedStream)?;
            self.state = (self.state << 8) | byte as u32;
            self.rest = rest;
        }
        Ok(index)
    }

    /// Verifies the stream ended cleanly: state back at the lower bound and
    /// every byte consumed. A failure signals corruption.
    pub fn finish(self) -> Result<()> {
        if self.state != STATE_LOWER_BOUND {
            return Err(Error::CorruptStream("final state out of range"));
        }
        if !self.rest.is_empty() {
            return Err(Error::CorruptStream("trailing bytes after final symbol"));
        }
        Ok(())
    }
}

/// Encodes symbol indices into a self-delimiting byte stream.
///
/// Deterministic: identical `(symbols, table)` always yield identical bytes.
pub fn encode_stream(symbols: &[usize], table: &CdfTable) -> Result<CodedStream> {
    for (position, &index) in symbols.iter().enumerate() {
        if !table.is_codable(index) {
            return Err(Error::UncodableSymbol {
                position,
                index: index as i64,
            });
        }
    }
    let mut enc = RansEncoder::new();
    for &index in symbols.iter().rev() {
        enc.push(index, table)?;
    }
    let mut stream = enc.finish();
    stream.symbol_count = symbols.len() as u32;
    Ok(stream)
}

/// Decodes exactly `n` symbols; inverse of [`encode_stream`] under the same
/// table.
pub fn decode_stream(stream: &CodedStream, table: &CdfTable, n: u32) -> Result<Vec<usize>> {
    let mut dec = RansDecoder::new(&stream.bytes)?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(dec.pop(table)?);
    }
    dec.finish()?;
    Ok(out)
}
