//! Link-level simulator for a rate-1/2 convolutionally coded, PN-spread,
//! OFDM-framed, Alamouti 2x3 MIMO MC-CDMA system over flat Rayleigh fading.
//!
//! The transmit chain is
//! `conv_encode -> spread -> modulate -> OFDM (IDFT + CP) -> Alamouti`,
//! the receive chain undoes it with CP removal, DFT, zero-forcing combining,
//! minimum-distance demapping, PN despreading and hard-decision Viterbi.
//! [`link::run_sweep`] drives deterministic Monte-Carlo BER sweeps over that
//! chain and [`io`] holds the config grammar and CSV schema used by the CLI.

pub mod channel;
pub mod dft;
mod error;
pub mod fec;
pub mod io;
pub mod link;
pub mod modem;
pub mod ofdm;
pub mod selftest;
pub mod spreading;
pub mod stbc;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// A single binary value, always 0 or 1.
pub type Bit = u8;
