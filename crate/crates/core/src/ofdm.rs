//! OFDM symbol framing: IDFT across subcarriers plus a cyclic-prefix guard.

use num_complex::Complex64;

use crate::dft::Dft;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OfdmParams {
    n_subcarriers: usize,
    cp_len: usize,
}

impl OfdmParams {
    /// Reduced sizing that keeps the 1/5 prefix ratio.
    pub const DESK: OfdmParams = OfdmParams { n_subcarriers: 64, cp_len: 12 };
    pub const PAPER: OfdmParams = OfdmParams { n_subcarriers: 6400, cp_len: 1280 };

    pub fn new(n_subcarriers: usize, cp_len: usize) -> Result<Self> {
        if n_subcarriers < 2 {
            return Err(Error::InvalidOfdm("subcarriers must be at least 2".into()));
        }
        if cp_len == 0 {
            return Err(Error::InvalidOfdm("cp_len must be positive".into()));
        }
        if cp_len >= n_subcarriers {
            return Err(Error::InvalidOfdm("cp_len must be < subcarriers".into()));
        }
        Ok(Self { n_subcarriers, cp_len })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self::DESK
    }
}

/// Time-domain samples of one OFDM symbol, prefix first.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    pub samples: Vec<Complex64>,
}

impl OfdmSymbol {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// An [`OfdmParams`] with its transform plan.
#[derive(Debug, Clone)]
pub struct OfdmModem {
    params: OfdmParams,
    dft: Dft,
}

impl OfdmModem {
    pub fn new(params: OfdmParams) -> Self {
        let dft = Dft::new(params.n_subcarriers).expect("n_subcarriers >= 2");
        Self { params, dft }
    }

    pub fn params(&self) -> OfdmParams {
        self.params
    }

    pub fn dft(&self) -> &Dft {
        &self.dft
    }

    pub fn modulate(&self, freq_symbols: &[Complex64]) -> Result<OfdmSymbol> {
        let n = self.params.n_subcarriers;
        if freq_symbols.len() != n {
            return Err(Error::OfdmBlockLength { expected: n, actual: freq_symbols.len() });
        }
        let body = self.dft.inverse(freq_symbols)?;
        Ok(self.with_prefix(&body))
    }

    /// Prepends the last `cp_len` samples of `body`.
    pub fn with_prefix(&self, body: &[Complex64]) -> OfdmSymbol {
        let cp = self.params.cp_len;
        let mut samples = Vec::with_capacity(body.len() + cp);
        samples.extend_from_slice(&body[body.len() - cp..]);
        samples.extend_from_slice(body);
        OfdmSymbol { samples }
    }

    pub fn demodulate(&self, symbol: &OfdmSymbol) -> Result<Vec<Complex64>> {
        let expected = self.params.symbol_len();
        if symbol.len() != expected {
            return Err(Error::OfdmBlockLength { expected, actual: symbol.len() });
        }
        self.dft.forward(&symbol.samples[self.params.cp_len..])
    }
}

pub fn ofdm_modulate(freq_symbols: &[Complex64], params: OfdmParams) -> Result<OfdmSymbol> {
    OfdmModem::new(params).modulate(freq_symbols)
}

pub fn ofdm_demodulate(symbol: &OfdmSymbol, params: OfdmParams) -> Result<Vec<Complex64>> {
    OfdmModem::new(params).demodulate(symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_block(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn params_validation() {
        assert!(OfdmParams::new(64, 12).is_ok());
        assert!(OfdmParams::new(64, 64).is_err());
        assert!(OfdmParams::new(64, 0).is_err());
        assert!(OfdmParams::new(1, 0).is_err());
    }

    #[test]
    fn symbol_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sym = ofdm_modulate(&random_block(64, &mut rng), OfdmParams::DESK).unwrap();
        assert_eq!(sym.len(), 76);
        assert_eq!(OfdmParams::PAPER.symbol_len(), 7680);
        let p = OfdmParams::PAPER;
        let big = ofdm_modulate(&random_block(6400, &mut rng), p).unwrap();
        assert_eq!(big.len(), 7680);
        assert_eq!(&big.samples[..1280], &big.samples[6400..]);
    }

    #[test]
    fn cyclic_prefix_and_loopback() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, cp) in [(8, 1), (60, 12), (64, 12), (100, 20)] {
            let p = OfdmParams::new(n, cp).unwrap();
            let modem = OfdmModem::new(p);
            let s = random_block(n, &mut rng);
            let sym = modem.modulate(&s).unwrap();
            assert_eq!(&sym.samples[..cp], &sym.samples[n..]);
            let back = modem.demodulate(&sym).unwrap();
            assert!(s.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-10));
        }
    }

    #[test]
    fn wrong_lengths() {
        let modem = OfdmModem::new(OfdmParams::DESK);
        assert!(matches!(modem.modulate(&[Complex64::new(0.0, 0.0); 63]), Err(Error::OfdmBlockLength { .. })));
        let short = OfdmSymbol { samples: vec![Complex64::new(0.0, 0.0); 64] };
        assert!(matches!(modem.demodulate(&short), Err(Error::OfdmBlockLength { .. })));
    }

    #[test]
    fn flat_gain_scales_every_subcarrier() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let modem = OfdmModem::new(OfdmParams::DESK);
        let s = random_block(64, &mut rng);
        let g = Complex64::new(0.3, -1.7);
        let mut sym = modem.modulate(&s).unwrap();
        sym.samples.iter_mut().for_each(|x| *x *= g);
        let y = modem.demodulate(&sym).unwrap();
        assert!(s.iter().zip(&y).all(|(a, b)| (a * g - b).norm() < 1e-10));
    }

    /// A multipath channel shorter than the prefix acts as a per-subcarrier
    /// gain equal to its (unnormalized) frequency response.
    #[test]
    fn prefix_absorbs_short_multipath() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = OfdmParams::DESK;
        let modem = OfdmModem::new(p);
        for delay in 1..p.cp_len() {
            let taps = random_block(delay + 1, &mut rng);
            let s = random_block(64, &mut rng);
            let tx = modem.modulate(&s).unwrap();
            // linear convolution; samples before the symbol are zero
            let rx: Vec<Complex64> =
                (0..tx.len()).map(|t| (0..=delay.min(t)).map(|d| taps[d] * tx.samples[t - d]).sum()).collect();
            let y = modem.demodulate(&OfdmSymbol { samples: rx }).unwrap();
            for k in 0..64 {
                let h: Complex64 = taps
                    .iter()
                    .enumerate()
                    .map(|(d, &c)| c * Complex64::from_polar(1.0, -2.0 * PI * (k * d) as f64 / 64.0))
                    .sum();
                assert!((y[k] - h * s[k]).norm() < 1e-10, "delay {delay} k {k}");
            }
        }
    }
}
