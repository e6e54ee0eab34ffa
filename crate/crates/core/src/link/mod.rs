//! End-to-end chain assembly and the Monte-Carlo BER engine.
//!
//! One trial sends `frame_bits` random information bits per user through
//!
//! ```text
//! conv_encode -> spread (chip bits) -> modulate -> subcarrier mapping
//!   -> Alamouti per subcarrier over OFDM symbol pairs -> IDFT + CP per antenna
//!   -> flat Rayleigh MIMO channel + AWGN
//!   -> CP removal + DFT per receive antenna -> ZF combining per subcarrier
//!   -> demodulate -> despread -> viterbi_decode
//! ```
//!
//! and counts information-bit errors for user 0. Users occupy interleaved
//! subcarrier sets (user `u` owns subcarriers `k` with `k % users == u`) and
//! their time-domain waveforms add on the channel input.

mod reference;
mod sweep;

pub use reference::{
    calibration_checks, mrc_bpsk_ber, rayleigh_bpsk_ber, reference_chain, reference_config, CalibrationCheck,
    ReferenceChain, CALIBRATION_BITS, CALIBRATION_TOLERANCE,
};
pub use sweep::{run_point, run_sweep, run_sweeps, BerRecord};

use num_complex::Complex64;

use crate::channel::{awgn_add, propagate_flat, rayleigh_draw, Rng, SnrPoint, StreamTag};
use crate::fec::{conv_encode, viterbi_decode, ConvCode};
use crate::modem::{demodulate, modulate_padded, ModScheme, Modulation};
use crate::ofdm::{OfdmModem, OfdmParams, OfdmSymbol};
use crate::spreading::{despread_bits, spread_bits, PnCode};
use crate::stbc::{stbc_encode, zf_combine, zf_single, ChannelMatrix, SINGULAR_THRESHOLD};
use crate::{Bit, Error, Result};

pub const DEFAULT_FRAME_BITS: usize = 1024;
pub const DEFAULT_TARGET_ERRORS: u64 = 200;
pub const DEFAULT_MAX_BITS: u64 = 10_000_000;
pub const MIN_MAX_BITS: u64 = 10_000;
pub const MAX_RX_ANTENNAS: usize = 4;

/// Evenly spaced SNR points from `start` to `stop` inclusive, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Default for SnrGrid {
    fn default() -> Self {
        Self { start_db: -10.0, stop_db: 20.0, step_db: 1.0 }
    }
}

impl SnrGrid {
    pub fn single(snr_db: f64) -> Self {
        Self { start_db: snr_db, stop_db: snr_db, step_db: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start_db.is_finite() && self.stop_db.is_finite() && self.step_db.is_finite()) {
            return Err(Error::InvalidConfig("SNR grid values must be finite".into()));
        }
        if self.stop_db < self.start_db {
            return Err(Error::InvalidConfig("snr_stop_db must be >= snr_start_db".into()));
        }
        if self.step_db <= 0.0 {
            return Err(Error::InvalidConfig("snr_step_db must be positive".into()));
        }
        Ok(())
    }

    /// Grid values, rounded to 1e-9 dB so decimal steps print cleanly.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let v = self.start_db + i as f64 * self.step_db;
                let r = (v * 1e9).round() / 1e9;
                if r == 0.0 {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }
}

/// Per-SNR-point stopping rule: stop once either bound is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub target_errors: u64,
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { target_errors: DEFAULT_TARGET_ERRORS, max_bits: DEFAULT_MAX_BITS }
    }
}

/// Blocks that reduced reference chains skip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bypass {
    /// Skip convolutional coding.
    pub fec: bool,
    /// Skip PN spreading.
    pub spreading: bool,
    /// Replace fading and noise with an identity channel.
    pub channel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub modulation: Modulation,
    pub code: ConvCode,
    /// PN code of user 0; other users derive theirs with [`PnCode::for_user`].
    pub pn: PnCode,
    pub users: usize,
    pub ofdm: OfdmParams,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub snr: SnrGrid,
    pub stop: StopRule,
    pub seed: u64,
    pub frame_bits: usize,
    pub bypass: Bypass,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            modulation: Modulation::Qpsk,
            code: ConvCode::default(),
            pn: PnCode::default(),
            users: 1,
            ofdm: OfdmParams::DESK,
            tx_antennas: 2,
            rx_antennas: 3,
            snr: SnrGrid::default(),
            stop: StopRule::default(),
            seed: 1,
            frame_bits: DEFAULT_FRAME_BITS,
            bypass: Bypass::default(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.tx_antennas) {
            return Err(Error::InvalidConfig("tx_antennas must be 1 or 2".into()));
        }
        if !(1..=MAX_RX_ANTENNAS).contains(&self.rx_antennas) {
            return Err(Error::InvalidConfig(format!("rx_antennas must be in 1..={MAX_RX_ANTENNAS}")));
        }
        if self.users == 0 || self.users > self.ofdm.n_subcarriers() {
            return Err(Error::InvalidConfig("users must be in 1..=subcarriers".into()));
        }
        if self.frame_bits == 0 {
            return Err(Error::InvalidConfig("frame_bits must be positive".into()));
        }
        if self.stop.max_bits < MIN_MAX_BITS {
            return Err(Error::InvalidConfig(format!("max_bits must be >= {MIN_MAX_BITS}")));
        }
        if self.stop.target_errors == 0 {
            return Err(Error::InvalidConfig("target_errors must be >= 1".into()));
        }
        self.snr.validate()
    }

    /// Information bits carried per modulated symbol (before overheads such
    /// as the trellis tail and frame padding).
    pub fn info_bits_per_symbol(&self) -> f64 {
        let mut r = self.modulation.bits_per_symbol() as f64;
        if !self.bypass.fec {
            r *= 0.5;
        }
        if !self.bypass.spreading {
            r /= self.pn.chips_per_bit() as f64;
        }
        r
    }

    pub fn eb_n0_db(&self, snr: SnrPoint) -> f64 {
        snr.eb_n0_db(self.info_bits_per_symbol())
    }
}

/// Bit and error counts from one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub bits: u64,
    pub errors: u64,
    /// Fading draws replaced because they were numerically singular.
    pub resampled: u64,
}

/// A validated configuration with its precomputed tables.
#[derive(Debug, Clone)]
pub struct Link {
    cfg: LinkConfig,
    scheme: ModScheme,
    modem: OfdmModem,
    pn_codes: Vec<PnCode>,
    /// Subcarrier indices owned by each user.
    carriers: Vec<Vec<usize>>,
    symbols_per_user: usize,
    /// OFDM symbols per frame, a multiple of the transmit antenna count.
    ofdm_symbols: usize,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Result<Self> {
        cfg.validate()?;
        let scheme = ModScheme::new(cfg.modulation);
        let modem = OfdmModem::new(cfg.ofdm);
        let pn_codes = (0..cfg.users).map(|u| cfg.pn.for_user(u)).collect();
        let n = cfg.ofdm.n_subcarriers();
        let carriers: Vec<Vec<usize>> = (0..cfg.users).map(|u| (u..n).step_by(cfg.users).collect()).collect();

        let coded = if cfg.bypass.fec { cfg.frame_bits } else { cfg.code.coded_len(cfg.frame_bits) };
        let chips = if cfg.bypass.spreading { coded } else { coded * cfg.pn.chips_per_bit() };
        let symbols_per_user = chips.div_ceil(cfg.modulation.bits_per_symbol());
        let narrowest = carriers.iter().map(Vec::len).min().unwrap_or(1);
        let ofdm_symbols = symbols_per_user.div_ceil(narrowest).next_multiple_of(cfg.tx_antennas);

        Ok(Self { cfg, scheme, modem, pn_codes, carriers, symbols_per_user, ofdm_symbols })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn ofdm_symbols_per_frame(&self) -> usize {
        self.ofdm_symbols
    }

    fn transmit_bits(&self, info: &[Bit], user: usize) -> Result<Vec<Bit>> {
        let coded = if self.cfg.bypass.fec { info.to_vec() } else { conv_encode(info, &self.cfg.code)? };
        if self.cfg.bypass.spreading {
            Ok(coded)
        } else {
            spread_bits(&coded, &self.pn_codes[user])
        }
    }

    fn receive_bits(&self, chip_bits: Vec<Bit>) -> Result<Vec<Bit>> {
        let coded = if self.cfg.bypass.spreading { chip_bits } else { despread_bits(&chip_bits, &self.pn_codes[0])? };
        if self.cfg.bypass.fec {
            Ok(coded)
        } else {
            viterbi_decode(&coded, &self.cfg.code)
        }
    }

    /// Frequency-domain grid `[ofdm_symbol][antenna][subcarrier]` for one user.
    fn user_grid(&self, symbols: &[Complex64], user: usize) -> Vec<Vec<Vec<Complex64>>> {
        let n = self.cfg.ofdm.n_subcarriers();
        let tx = self.cfg.tx_antennas;
        let carriers = &self.carriers[user];
        let width = carriers.len();
        let filler = self.scheme.points()[0];
        let symbol_at = |o: usize, i: usize| symbols.get(o * width + i).copied().unwrap_or(filler);
        let zero = Complex64::new(0.0, 0.0);
        let mut grid = vec![vec![vec![zero; n]; tx]; self.ofdm_symbols];
        for block in 0..self.ofdm_symbols / tx {
            for (i, &k) in carriers.iter().enumerate() {
                if tx == 1 {
                    grid[block][0][k] = symbol_at(block, i);
                } else {
                    let b = stbc_encode(symbol_at(2 * block, i), symbol_at(2 * block + 1, i));
                    for (slot, row) in b.tx.iter().enumerate() {
                        for (a, &x) in row.iter().enumerate() {
                            grid[2 * block + slot][a][k] = x;
                        }
                    }
                }
            }
        }
        grid
    }

    fn draw_channel(
        &self,
        stream: &mut crate::channel::Substream,
        rng: &Rng,
        trial: u64,
        resampled: &mut u64,
    ) -> ChannelMatrix {
        let (rx, tx) = (self.cfg.rx_antennas, self.cfg.tx_antennas);
        if self.cfg.bypass.channel {
            return ChannelMatrix::identity(rx, tx);
        }
        let mut h = rayleigh_draw(stream, rx, tx);
        while h.frobenius_sqr() < SINGULAR_THRESHOLD {
            *resampled += 1;
            *stream = rng.substream(trial, StreamTag::Fading, *resampled);
            h = rayleigh_draw(stream, rx, tx);
        }
        h
    }

    /// Runs one frame at `snr`; deterministic in `(seed, trial)`.
    pub fn run_trial(&self, snr: SnrPoint, trial: u64) -> Result<TrialOutcome> {
        let cfg = &self.cfg;
        let rng = Rng::new(cfg.seed);
        let (tx, rx, n) = (cfg.tx_antennas, cfg.rx_antennas, cfg.ofdm.n_subcarriers());
        let snr = if cfg.bypass.channel { SnrPoint::noiseless() } else { snr };

        // Transmit side: every user's waveform, summed per antenna.
        let mut info0 = Vec::new();
        let mut symbols0 = 0usize;
        let mut pad0 = 0usize;
        let mut waveform: Vec<Vec<OfdmSymbol>> = Vec::new();
        for user in 0..cfg.users {
            let info = rng.substream(trial, StreamTag::Source, user as u64).bits(cfg.frame_bits);
            let bits = self.transmit_bits(&info, user)?;
            let (symbols, pad) = modulate_padded(&bits, &self.scheme);
            debug_assert_eq!(symbols.len(), self.symbols_per_user);
            let grid = self.user_grid(&symbols, user);
            let time: Vec<Vec<OfdmSymbol>> = grid
                .iter()
                .map(|per_antenna| per_antenna.iter().map(|g| self.modem.modulate(g)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            if user == 0 {
                info0 = info;
                symbols0 = symbols.len();
                pad0 = pad;
                waveform = time;
            } else {
                for (acc, add) in waveform.iter_mut().flatten().zip(time.iter().flatten()) {
                    for (a, b) in acc.samples.iter_mut().zip(&add.samples) {
                        *a += b;
                    }
                }
            }
        }

        // Channel and receiver, one STBC block (tx OFDM symbols) at a time.
        let mut fading = rng.substream(trial, StreamTag::Fading, 0);
        let mut noise = rng.substream(trial, StreamTag::Noise, 0);
        let mut outcome = TrialOutcome::default();
        let carriers = &self.carriers[0];
        let width = carriers.len();
        let mut estimates = vec![Complex64::new(0.0, 0.0); self.ofdm_symbols * width];

        for block in 0..self.ofdm_symbols / tx {
            let channels: Vec<ChannelMatrix> =
                (0..n).map(|_| self.draw_channel(&mut fading, &rng, trial, &mut outcome.resampled)).collect();
            // received[slot][rx][subcarrier]
            let mut received = Vec::with_capacity(tx);
            for slot in 0..tx {
                let mut per_rx = propagate_flat(&waveform[block * tx + slot], &channels, &self.modem)?;
                let mut freq = Vec::with_capacity(rx);
                for sym in &mut per_rx {
                    awgn_add(&mut sym.samples, snr, &mut noise);
                    freq.push(self.modem.demodulate(sym)?);
                }
                received.push(freq);
            }
            for (i, &k) in carriers.iter().enumerate() {
                let h = &channels[k];
                if tx == 1 {
                    let y: Vec<Complex64> = (0..rx).map(|r| received[0][r][k]).collect();
                    estimates[block * width + i] = zf_single(&y, h)?.0;
                } else {
                    let y: Vec<[Complex64; 2]> = (0..rx).map(|r| [received[0][r][k], received[1][r][k]]).collect();
                    let (s1, s2, _) = zf_combine(&y, h)?;
                    estimates[2 * block * width + i] = s1;
                    estimates[(2 * block + 1) * width + i] = s2;
                }
            }
        }

        estimates.truncate(symbols0);
        let mut chip_bits = demodulate(&estimates, &self.scheme);
        chip_bits.truncate(chip_bits.len() - pad0);
        let decoded = self.receive_bits(chip_bits)?;
        outcome.bits = info0.len() as u64;
        outcome.errors = info0.iter().zip(&decoded).filter(|(a, b)| a != b).count() as u64;
        Ok(outcome)
    }
}

/// Convenience wrapper: builds the chain and runs one trial.
pub fn run_trial(cfg: &LinkConfig, snr: SnrPoint, trial_index: u64) -> Result<TrialOutcome> {
    Link::new(cfg.clone())?.run_trial(snr, trial_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        assert_eq!(SnrGrid::default().points().len(), 31);
        assert_eq!(SnrGrid::single(-4.0).points(), vec![-4.0]);
        let g = SnrGrid { start_db: 0.0, stop_db: 1.0, step_db: 0.1 };
        let p = g.points();
        assert_eq!(p.len(), 11);
        assert_eq!(p[3], 0.3);
        assert!(SnrGrid { start_db: 1.0, stop_db: 0.0, step_db: 1.0 }.validate().is_err());
        assert!(SnrGrid { start_db: 0.0, stop_db: 1.0, step_db: 0.0 }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(LinkConfig::default().validate().is_ok());
        let bad = [
            LinkConfig { tx_antennas: 3, ..Default::default() },
            LinkConfig { rx_antennas: 0, ..Default::default() },
            LinkConfig { rx_antennas: 5, ..Default::default() },
            LinkConfig { users: 0, ..Default::default() },
            LinkConfig { stop: StopRule { target_errors: 0, max_bits: 10_000 }, ..Default::default() },
            LinkConfig { stop: StopRule { target_errors: 1, max_bits: 9_999 }, ..Default::default() },
        ];
        for cfg in bad {
            assert!(Link::new(cfg).is_err());
        }
    }

    #[test]
    fn frame_layout() {
        let link = Link::new(LinkConfig::default()).unwrap();
        // 1024 info bits -> 2054 coded -> 16432 chips -> 8216 QPSK symbols
        assert_eq!(link.symbols_per_user, 8216);
        assert_eq!(link.ofdm_symbols_per_frame(), 130);
        let eb = LinkConfig::default().eb_n0_db(SnrPoint::new(0.0));
        assert!((eb - 10.0 * 8f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_trial_is_error_free() {
        for m in Modulation::ALL {
            let cfg = LinkConfig { modulation: m, frame_bits: 200, ..Default::default() };
            let out = run_trial(&cfg, SnrPoint::noiseless(), 3).unwrap();
            assert_eq!((out.bits, out.errors), (200, 0), "{m}");
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = LinkConfig { modulation: Modulation::Qam16, frame_bits: 256, ..Default::default() };
        let a = run_trial(&cfg, SnrPoint::new(-2.0), 17).unwrap();
        let b = run_trial(&cfg, SnrPoint::new(-2.0), 17).unwrap();
        assert_eq!(a, b);
        assert!(a.errors > 0);
    }
}
