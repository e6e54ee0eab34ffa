//! Flat Rayleigh fading, AWGN and the random-stream plumbing behind them.
//!
//! Every random draw in a trial comes from a [`Substream`] keyed by
//! `(master_seed, trial_index, tag)`. The key is hashed with SplitMix64 into a
//! ChaCha8 seed, so a trial's draws never depend on which thread ran it or in
//! what order.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ofdm::{OfdmModem, OfdmSymbol};
use crate::stbc::ChannelMatrix;
use crate::{Error, Result};

/// Subsystems that draw random numbers within a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Source,
    Fading,
    Noise,
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Source => 1,
            StreamTag::Fading => 2,
            StreamTag::Noise => 3,
        }
    }
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the substream `(master, trial, tag, lane)`.
///
/// `lane` separates independent streams under one tag (per user, or the
/// retry index after a singular fading draw).
pub fn mix(master: u64, trial: u64, tag: StreamTag, lane: u64) -> u64 {
    let mut z = splitmix64(master);
    z = splitmix64(z ^ trial);
    z = splitmix64(z ^ tag.code());
    splitmix64(z ^ lane)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rng {
    pub master_seed: u64,
}

impl Rng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn substream(&self, trial: u64, tag: StreamTag, lane: u64) -> Substream {
        Substream(ChaCha8Rng::seed_from_u64(mix(self.master_seed, trial, tag, lane)))
    }
}

/// A deterministic generator for one (trial, subsystem) pair.
#[derive(Debug, Clone)]
pub struct Substream(ChaCha8Rng);

impl Substream {
    pub fn from_seed(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn bit(&mut self) -> u8 {
        rand::Rng::random::<bool>(&mut self.0) as u8
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.bit()).collect()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Circularly-symmetric complex Gaussian with unit total variance.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * FRAC_1_SQRT_2
    }

    pub fn uniform(&mut self) -> f64 {
        rand::Rng::random::<f64>(&mut self.0)
    }
}

/// Average received Es/N0 per receive antenna per subcarrier, in dB, with
/// `Es = 1`. `+inf` means noiseless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub snr_db: f64,
}

impl SnrPoint {
    pub fn new(snr_db: f64) -> Self {
        Self { snr_db }
    }

    pub fn noiseless() -> Self {
        Self { snr_db: f64::INFINITY }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Total complex noise variance `10^(-snr/10)`.
    pub fn noise_var(&self) -> f64 {
        if self.is_noiseless() {
            0.0
        } else {
            10f64.powf(-self.snr_db / 10.0)
        }
    }

    /// Eb/N0 in dB for `info_bits_per_symbol` information bits carried by
    /// each modulated symbol.
    pub fn eb_n0_db(&self, info_bits_per_symbol: f64) -> f64 {
        self.snr_db - 10.0 * info_bits_per_symbol.log10()
    }

    /// Inverse of [`SnrPoint::eb_n0_db`].
    pub fn from_eb_n0_db(eb_n0_db: f64, info_bits_per_symbol: f64) -> Self {
        Self { snr_db: eb_n0_db + 10.0 * info_bits_per_symbol.log10() }
    }
}

/// `rx x tx` matrix of independent CN(0, 1) entries.
pub fn rayleigh_draw(stream: &mut Substream, rx: usize, tx: usize) -> ChannelMatrix {
    let entries = (0..rx * tx).map(|_| stream.complex_normal()).collect();
    ChannelMatrix::new(rx, tx, entries).expect("positive dimensions")
}

/// Adds CN(0, sigma^2) noise to every sample in place.
pub fn awgn_add(x: &mut [Complex64], snr: SnrPoint, stream: &mut Substream) {
    let var = snr.noise_var();
    if var == 0.0 {
        return;
    }
    let sigma = var.sqrt();
    for v in x {
        *v += stream.complex_normal() * sigma;
    }
}

/// Passes one OFDM symbol per transmit antenna through a frequency-flat
/// MIMO channel with one matrix per subcarrier; returns one OFDM symbol per
/// receive antenna, noiseless and with a fresh cyclic prefix.
///
/// Receive antenna `r` sees `Y_r[k] = sum_a H_k[r][a] X_a[k]` on subcarrier `k`.
pub fn propagate_flat(tx: &[OfdmSymbol], channels: &[ChannelMatrix], modem: &OfdmModem) -> Result<Vec<OfdmSymbol>> {
    let n = modem.params().n_subcarriers();
    if channels.len() != n {
        return Err(Error::Shape(format!("{} channel matrices for {n} subcarriers", channels.len())));
    }
    let n_tx = channels[0].tx();
    let n_rx = channels[0].rx();
    if tx.len() != n_tx {
        return Err(Error::Shape(format!("{} transmit symbols for {n_tx} antennas", tx.len())));
    }
    let freq: Vec<Vec<Complex64>> = tx.iter().map(|s| modem.demodulate(s)).collect::<Result<_>>()?;
    (0..n_rx)
        .map(|r| {
            let mixed: Vec<Complex64> =
                (0..n).map(|k| (0..n_tx).map(|a| channels[k].get(r, a) * freq[a][k]).sum()).collect();
            modem.modulate(&mixed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let rng = Rng::new(42);
        let a: Vec<f64> = {
            let mut s = rng.substream(7, StreamTag::Noise, 0);
            (0..8).map(|_| s.standard_normal()).collect()
        };
        let mut s = rng.substream(7, StreamTag::Noise, 0);
        let b: Vec<f64> = (0..8).map(|_| s.standard_normal()).collect();
        assert_eq!(a, b);
        let mut other = rng.substream(8, StreamTag::Noise, 0);
        assert_ne!(other.standard_normal(), a[0]);
        let mut other = rng.substream(7, StreamTag::Fading, 0);
        assert_ne!(other.standard_normal(), a[0]);
        assert_ne!(mix(1, 2, StreamTag::Source, 0), mix(1, 2, StreamTag::Source, 1));
    }

    #[test]
    fn noise_variance_convention() {
        assert_eq!(SnrPoint::new(0.0).noise_var(), 1.0);
        assert!((SnrPoint::new(10.0).noise_var() - 0.1).abs() < 1e-15);
        assert_eq!(SnrPoint::noiseless().noise_var(), 0.0);
        let p = SnrPoint::new(3.0);
        assert!((SnrPoint::from_eb_n0_db(p.eb_n0_db(2.0), 2.0).snr_db - 3.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_is_identity() {
        let mut x = vec![Complex64::new(1.0, -2.0); 16];
        let before = x.clone();
        awgn_add(&mut x, SnrPoint::noiseless(), &mut Substream::from_seed(1));
        assert_eq!(x, before);
    }

    #[test]
    fn empirical_noise_variance() {
        let n = 1_000_000;
        for snr_db in [-5.0, 0.0, 7.0] {
            let snr = SnrPoint::new(snr_db);
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            awgn_add(&mut x, snr, &mut Substream::from_seed(9));
            let var = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
            assert!((var / snr.noise_var() - 1.0).abs() < 0.01, "{snr_db}: {var}");
        }
    }

    #[test]
    fn flat_propagation_is_per_subcarrier_mixing() {
        use crate::ofdm::OfdmParams;
        let modem = OfdmModem::new(OfdmParams::new(16, 4).unwrap());
        let mut s = Substream::from_seed(8);
        let x: Vec<Vec<Complex64>> = (0..2).map(|_| (0..16).map(|_| s.complex_normal()).collect()).collect();
        let tx: Vec<OfdmSymbol> = x.iter().map(|f| modem.modulate(f).unwrap()).collect();
        let h: Vec<ChannelMatrix> = (0..16).map(|_| rayleigh_draw(&mut s, 3, 2)).collect();
        let rx = propagate_flat(&tx, &h, &modem).unwrap();
        assert_eq!(rx.len(), 3);
        for (r, sym) in rx.iter().enumerate() {
            assert_eq!(&sym.samples[..4], &sym.samples[16..]);
            let y = modem.demodulate(sym).unwrap();
            for k in 0..16 {
                let want = h[k].get(r, 0) * x[0][k] + h[k].get(r, 1) * x[1][k];
                assert!((y[k] - want).norm() < 1e-12);
            }
        }
        assert!(propagate_flat(&tx[..1], &h, &modem).is_err());
    }

    /// E|H|_F^2 = 6 for the 3x2 channel.
    #[test]
    fn frobenius_mean() {
        let mut s = Substream::from_seed(12);
        let n = 100_000;
        let mean = (0..n).map(|_| rayleigh_draw(&mut s, 3, 2).frobenius_sqr()).sum::<f64>() / n as f64;
        assert!((mean / 6.0 - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn rayleigh_moments() {
        let mut s = Substream::from_seed(4);
        let draws = 1_000_000 / 6 + 1;
        let mut sum = 0.0;
        let mut tail = 0usize;
        let mut count = 0usize;
        for _ in 0..draws {
            let h = rayleigh_draw(&mut s, 3, 2);
            assert_eq!((h.rx(), h.tx()), (3, 2));
            for e in h.entries() {
                sum += e.norm_sqr();
                tail += (e.norm_sqr() > 1.0) as usize;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let p = tail as f64 / count as f64;
        assert!((mean - 1.0).abs() < 0.005, "mean {mean}");
        assert!((p - (-1f64).exp()).abs() < 0.005, "tail {p}");
    }
}
