//! PN chip generation and per-bit spreading/despreading.
//!
//! The LFSR runs the linear recurrence whose characteristic polynomial is
//! `taps`: for `taps = x^m + c_{m-1} x^{m-1} + ... + c_1 x + 1`,
//! `a[k+m] = sum c_i a[k+i] (mod 2)` with `c_0 = 1`. Bit `i` of the seed is
//! `a[i]`. A primitive `taps` polynomial yields an m-sequence of period
//! `2^m - 1`. Chip bits map to bipolar values with `0 -> +1`, `1 -> -1`.

use crate::{Bit, Error, Result};

/// x^7 + x^3 + 1, a primitive degree-7 polynomial (period 127).
pub const DEFAULT_TAPS: u32 = 0o211;
pub const DEFAULT_SPREADING_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PnCode {
    taps: u32,
    seed: u32,
    chips_per_bit: usize,
    user_index: usize,
}

impl Default for PnCode {
    fn default() -> Self {
        Self { taps: DEFAULT_TAPS, seed: 1, chips_per_bit: DEFAULT_SPREADING_FACTOR, user_index: 0 }
    }
}

impl PnCode {
    pub fn new(taps: u32, seed: u32, chips_per_bit: usize) -> Result<Self> {
        if taps < 0b11 || taps & 1 == 0 {
            return Err(Error::InvalidPnCode(format!(
                "feedback polynomial {taps:o} must have degree >= 1 and a constant term"
            )));
        }
        if taps >> 31 != 0 {
            return Err(Error::InvalidPnCode(format!("feedback polynomial {taps:o} is too long")));
        }
        if chips_per_bit == 0 {
            return Err(Error::InvalidPnCode("chips_per_bit must be at least 1".into()));
        }
        let code = Self { taps, seed, chips_per_bit, user_index: 0 };
        if seed & code.register_mask() == 0 || seed > code.register_mask() {
            return Err(Error::DegenerateSeed);
        }
        Ok(code)
    }

    /// Same LFSR with a register start that is distinct for every user index
    /// below the sequence period.
    pub fn for_user(&self, user_index: usize) -> Self {
        let period = self.register_mask() as u64;
        // Offset seeds are spread over the nonzero register values.
        let stride = (period / 2).max(1) | 1;
        let seed = ((self.seed as u64 - 1 + user_index as u64 * stride) % period + 1) as u32;
        Self { seed, user_index, ..*self }
    }

    pub fn degree(&self) -> u32 {
        31 - self.taps.leading_zeros()
    }

    pub fn period_upper_bound(&self) -> u64 {
        (1u64 << self.degree()) - 1
    }

    fn register_mask(&self) -> u32 {
        ((1u64 << self.degree()) - 1) as u32
    }

    pub fn taps(&self) -> u32 {
        self.taps
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn chips_per_bit(&self) -> usize {
        self.chips_per_bit
    }

    pub fn user_index(&self) -> usize {
        self.user_index
    }

    /// Chip bits (0/1) as produced by the register.
    pub fn chip_bits(&self) -> impl Iterator<Item = Bit> + '_ {
        let degree = self.degree();
        let feedback = self.taps & self.register_mask();
        let mut state = self.seed;
        std::iter::from_fn(move || {
            let out = (state & 1) as Bit;
            let fb = (state & feedback).count_ones() & 1;
            state = (state >> 1) | (fb << (degree - 1));
            Some(out)
        })
    }
}

/// Real-valued chip samples; transmitted chips are exactly `+1` or `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipStream(pub Vec<f64>);

impl ChipStream {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Chips re-binarized by sign, `+1 -> 0`, `-1 -> 1` (zero maps to 0).
    pub fn to_bits(&self) -> Vec<Bit> {
        self.0.iter().map(|&c| (c < 0.0) as Bit).collect()
    }

    pub fn from_bits(bits: &[Bit]) -> Self {
        Self(bits.iter().map(|&b| bipolar(b)).collect())
    }
}

#[inline]
fn bipolar(b: Bit) -> f64 {
    if b & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn pn_generate(code: &PnCode, n_chips: usize) -> Result<ChipStream> {
    if code.seed & code.register_mask() == 0 {
        return Err(Error::DegenerateSeed);
    }
    if n_chips == 0 {
        return Err(Error::InvalidPnCode("at least one chip must be requested".into()));
    }
    Ok(ChipStream(code.chip_bits().take(n_chips).map(bipolar).collect()))
}

/// Multiplies each bipolar bit by the next `chips_per_bit` PN chips.
pub fn spread(bits: &[Bit], code: &PnCode) -> Result<ChipStream> {
    if bits.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let pn = pn_generate(code, bits.len() * code.chips_per_bit)?;
    let chips =
        pn.0.chunks_exact(code.chips_per_bit)
            .zip(bits)
            .flat_map(|(window, &b)| window.iter().map(move |&c| c * bipolar(b)))
            .collect();
    Ok(ChipStream(chips))
}

/// Correlates each `chips_per_bit` window with the PN code; a negative
/// correlation decodes to 1, anything else (including an exact tie) to 0.
pub fn despread(chips: &ChipStream, code: &PnCode) -> Result<Vec<Bit>> {
    let n = code.chips_per_bit;
    if !chips.len().is_multiple_of(n) {
        return Err(Error::MisalignedChips { len: chips.len(), chips_per_bit: n });
    }
    if chips.is_empty() {
        return Ok(Vec::new());
    }
    let pn = pn_generate(code, chips.len())?;
    Ok(chips
        .0
        .chunks_exact(n)
        .zip(pn.0.chunks_exact(n))
        .map(|(rx, c)| {
            let corr: f64 = rx.iter().zip(c).map(|(r, c)| r * c).sum();
            (corr < 0.0) as Bit
        })
        .collect())
}

/// Spreads in the bit domain: equivalent to `spread` followed by
/// re-binarization, i.e. each chip bit is `bit XOR pn_bit`.
pub fn spread_bits(bits: &[Bit], code: &PnCode) -> Result<Vec<Bit>> {
    Ok(spread(bits, code)?.to_bits())
}

/// Inverse of [`spread_bits`] for hard chip decisions.
pub fn despread_bits(chip_bits: &[Bit], code: &PnCode) -> Result<Vec<Bit>> {
    despread(&ChipStream::from_bits(chip_bits), code)
}
