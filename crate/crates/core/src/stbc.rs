//! Alamouti space-time block code over two transmit antennas and
//! zero-forcing combining over any number of receive antennas.
//!
//! Slot 1 sends `(s1, s2) / sqrt(2)`, slot 2 sends `(-conj(s2), conj(s1)) / sqrt(2)`
//! from antennas 1 and 2. Receive antenna `r` observes
//! `y[r][t] = sum_a h[r][a] x[t][a] + n`. Stacking `y[r][0]` and `conj(y[r][1])`
//! for every antenna gives `y~ = A s / sqrt(2) + n~` with rows
//! `[h_r1, h_r2]` and `[conj(h_r2), -conj(h_r1)]`, and `A^H A = |H|_F^2 I`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::{Error, Result};

/// Below this squared Frobenius norm a draw is treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Row-major `rx x tx` complex channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rx: usize,
    tx: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(rx: usize, tx: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rx == 0 || tx == 0 || entries.len() != rx * tx {
            return Err(Error::Shape(format!("{} entries for a {rx}x{tx} channel matrix", entries.len())));
        }
        Ok(Self { rx, tx, entries })
    }

    /// Ones on the leading diagonal, zeros elsewhere.
    pub fn identity(rx: usize, tx: usize) -> Self {
        let entries = (0..rx * tx)
            .map(|i| if i / tx == i % tx { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self { rx, tx, entries }
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    #[inline]
    pub fn get(&self, r: usize, a: usize) -> Complex64 {
        self.entries[r * self.tx + a]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }
}

/// One quasi-static channel draw together with the receiver noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ChannelMatrix,
    pub noise_var: f64,
}

/// `tx[slot][antenna]` for one Alamouti block, power split included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StbcBlock {
    pub tx: [[Complex64; 2]; 2],
}

pub fn stbc_encode(s1: Complex64, s2: Complex64) -> StbcBlock {
    StbcBlock {
        tx: [[s1 * FRAC_1_SQRT_2, s2 * FRAC_1_SQRT_2], [-s2.conj() * FRAC_1_SQRT_2, s1.conj() * FRAC_1_SQRT_2]],
    }
}

/// Noiseless received samples `y[r][slot]` for a block sent through `h`.
pub fn propagate_block(block: &StbcBlock, h: &ChannelMatrix) -> Vec<[Complex64; 2]> {
    (0..h.rx())
        .map(|r| {
            let slot = |t: usize| h.get(r, 0) * block.tx[t][0] + h.get(r, 1) * block.tx[t][1];
            [slot(0), slot(1)]
        })
        .collect()
}

/// The `2M x 2` effective matrix of the stacked model (without the power split).
pub fn stacked_matrix(h: &ChannelMatrix) -> Result<Vec<[Complex64; 2]>> {
    if h.tx() != 2 {
        return Err(Error::Shape(format!("Alamouti needs 2 transmit antennas, channel has {}", h.tx())));
    }
    Ok((0..h.rx())
        .flat_map(|r| {
            let (h1, h2) = (h.get(r, 0), h.get(r, 1));
            [[h1, h2], [h2.conj(), -h1.conj()]]
        })
        .collect())
}

/// Zero-forcing estimate of `(s1, s2)` from `y[r][slot]`, plus `|H|_F^2`.
///
/// With the orthogonal stacked matrix the pseudo-inverse reduces to
/// `(A^H A)^{-1} A^H = A^H / |H|_F^2`; the `sqrt(2)` undoes the transmit power split.
pub fn zf_combine(y: &[[Complex64; 2]], h: &ChannelMatrix) -> Result<(Complex64, Complex64, f64)> {
    if y.len() != h.rx() {
        return Err(Error::Shape(format!("{} received rows for {} antennas", y.len(), h.rx())));
    }
    let a = stacked_matrix(h)?;
    let gain = h.frobenius_sqr();
    if gain < SINGULAR_THRESHOLD {
        return Err(Error::SingularChannel(gain));
    }
    let stacked = y.iter().flat_map(|row| [row[0], row[1].conj()]);
    let (mut s1, mut s2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (row, v) in a.iter().zip(stacked) {
        s1 += row[0].conj() * v;
        s2 += row[1].conj() * v;
    }
    let scale = std::f64::consts::SQRT_2 / gain;
    Ok((s1 * scale, s2 * scale, gain))
}

/// Zero-forcing for a single transmit antenna: `h^H y / |h|^2`.
pub fn zf_single(y: &[Complex64], h: &ChannelMatrix) -> Result<(Complex64, f64)> {
    if h.tx() != 1 || y.len() != h.rx() {
        return Err(Error::Shape(format!("{} samples for a {}x{} channel", y.len(), h.rx(), h.tx())));
    }
    let gain = h.frobenius_sqr();
    if gain < SINGULAR_THRESHOLD {
        return Err(Error::SingularChannel(gain));
    }
    let acc: Complex64 = y.iter().zip(h.entries()).map(|(y, h)| h.conj() * y).sum();
    Ok((acc / gain, gain))
}
