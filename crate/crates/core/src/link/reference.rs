//! Reduced chains with closed-form BER, used to calibrate the simulator.
//!
//! With coding and spreading bypassed, Gray-labelled QPSK carries two
//! independent antipodal bits per symbol, so its per-bit error rate at a
//! given Eb/N0 equals that of BPSK. Alamouti over `M` receive antennas with
//! the transmit power split behaves as `2M`-branch maximal-ratio combining
//! with per-branch mean Eb/N0 halved.

use super::{run_point, run_sweep, BerRecord, Bypass, LinkConfig, StopRule};
use crate::channel::SnrPoint;
use crate::modem::Modulation;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceChain {
    /// No coding, no spreading, one transmit and one receive antenna.
    UncodedSiso,
    /// No coding, no spreading, Alamouti with the given receive antennas.
    UncodedAlamouti { rx: usize },
    /// Every block bypassed that can be: identity channel, no noise.
    BypassAll,
}

/// Average BPSK bit error rate over flat Rayleigh fading at mean SNR `gamma`
/// (linear): `(1 - sqrt(gamma / (1 + gamma))) / 2`.
pub fn rayleigh_bpsk_ber(gamma: f64) -> f64 {
    0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt())
}

/// BPSK over `branches` i.i.d. Rayleigh branches with maximal-ratio
/// combining, mean per-branch SNR `gamma` (linear).
pub fn mrc_bpsk_ber(gamma: f64, branches: u32) -> f64 {
    let mu = (gamma / (1.0 + gamma)).sqrt();
    let lo = (1.0 - mu) / 2.0;
    let hi = (1.0 + mu) / 2.0;
    let mut binom = 1.0;
    let mut sum = 0.0;
    for l in 0..branches {
        if l > 0 {
            // C(L-1+l, l) from C(L-2+l, l-1)
            binom *= (branches - 1 + l) as f64 / l as f64;
        }
        sum += binom * hi.powi(l as i32);
    }
    lo.powi(branches as i32) * sum
}

pub fn reference_config(cfg: &LinkConfig, chain: ReferenceChain) -> LinkConfig {
    let uncoded = Bypass { fec: true, spreading: true, channel: false };
    match chain {
        ReferenceChain::UncodedSiso => LinkConfig { tx_antennas: 1, rx_antennas: 1, bypass: uncoded, ..cfg.clone() },
        ReferenceChain::UncodedAlamouti { rx } => {
            LinkConfig { tx_antennas: 2, rx_antennas: rx, bypass: uncoded, ..cfg.clone() }
        }
        ReferenceChain::BypassAll => {
            LinkConfig { bypass: Bypass { fec: true, spreading: true, channel: true }, ..cfg.clone() }
        }
    }
}

/// Sweeps the reduced chain over the configured SNR grid.
pub fn reference_chain(cfg: &LinkConfig, chain: ReferenceChain, threads: Option<usize>) -> Result<Vec<BerRecord>> {
    run_sweep(&reference_config(cfg, chain), threads)
}

/// One closed-form comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCheck {
    pub name: String,
    pub eb_n0_db: f64,
    pub measured: f64,
    pub expected: f64,
    /// Relative tolerance; zero means the measurement must match exactly.
    pub tolerance: f64,
    pub bits: u64,
}

impl CalibrationCheck {
    pub fn passed(&self) -> bool {
        if self.tolerance == 0.0 {
            self.measured == self.expected
        } else {
            ((self.measured - self.expected) / self.expected).abs() <= self.tolerance
        }
    }
}

pub const CALIBRATION_BITS: u64 = 2_000_000;
pub const CALIBRATION_TOLERANCE: f64 = 0.10;

/// The calibration suite: uncoded SISO and Alamouti QPSK against their
/// closed forms, plus the bypass-everything loopback.
pub fn calibration_checks(cfg: &LinkConfig, threads: Option<usize>) -> Result<Vec<CalibrationCheck>> {
    let base = LinkConfig {
        modulation: Modulation::Qpsk,
        users: 1,
        stop: StopRule { target_errors: u64::MAX, max_bits: CALIBRATION_BITS },
        ..cfg.clone()
    };
    let lin = |db: f64| 10f64.powf(db / 10.0);
    let mut checks = Vec::new();

    let mut run = |name: String, chain: ReferenceChain, eb_n0_db: f64, expected: f64, tolerance: f64| -> Result<()> {
        let c = reference_config(&base, chain);
        let snr = SnrPoint::from_eb_n0_db(eb_n0_db, c.info_bits_per_symbol());
        let r = run_point(&c, snr, threads)?;
        checks.push(CalibrationCheck { name, eb_n0_db, measured: r.ber(), expected, tolerance, bits: r.bits });
        Ok(())
    };

    for eb in [0.0, 5.0, 10.0] {
        run(
            format!("uncoded 1x1 QPSK @ Eb/N0 {eb} dB"),
            ReferenceChain::UncodedSiso,
            eb,
            rayleigh_bpsk_ber(lin(eb)),
            CALIBRATION_TOLERANCE,
        )?;
    }
    for eb in [0.0, 5.0, 10.0] {
        run(
            format!("uncoded 2x1 Alamouti QPSK @ Eb/N0 {eb} dB"),
            ReferenceChain::UncodedAlamouti { rx: 1 },
            eb,
            mrc_bpsk_ber(lin(eb) / 2.0, 2),
            CALIBRATION_TOLERANCE,
        )?;
    }
    run(
        "uncoded 2x3 Alamouti QPSK @ Eb/N0 0 dB".into(),
        ReferenceChain::UncodedAlamouti { rx: 3 },
        0.0,
        mrc_bpsk_ber(lin(0.0) / 2.0, 6),
        CALIBRATION_TOLERANCE,
    )?;
    run("bypass-all loopback".into(), ReferenceChain::BypassAll, 0.0, 0.0, 0.0)?;
    Ok(checks)
}
