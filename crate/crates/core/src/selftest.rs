//! Fast invariant checks that need no statistics: every noiseless path must
//! return exactly what went in.

use num_complex::Complex64;

use crate::channel::{rayleigh_draw, SnrPoint, Substream};
use crate::dft::{naive_dft, Dft, Direction};
use crate::fec::{conv_encode, viterbi_decode, ConvCode};
use crate::link::{Bypass, Link, LinkConfig};
use crate::modem::{demodulate, modulate_padded, ModScheme, Modulation};
use crate::ofdm::{OfdmModem, OfdmParams};
use crate::spreading::{despread, spread, PnCode};
use crate::stbc::{propagate_block, stbc_encode, zf_combine};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl SelfCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

fn fec_checks(rng: &mut Substream) -> Result<SelfCheck> {
    let code = ConvCode::default();
    let mut worst = 0usize;
    for len in 1..=64 {
        let msg = rng.bits(len);
        let mut coded = conv_encode(&msg, &code)?;
        let mismatches = |d: &[u8]| d.iter().zip(&msg).filter(|(a, b)| a != b).count();
        worst = worst.max(mismatches(&viterbi_decode(&coded, &code)?));
        // two flips far apart are always within the free distance budget
        coded[0] ^= 1;
        let last = coded.len() - 1;
        if last >= 12 {
            coded[last] ^= 1;
        }
        worst = worst.max(mismatches(&viterbi_decode(&coded, &code)?));
    }
    Ok(SelfCheck::new("fec: encode/decode, isolated errors", worst == 0, format!("{worst} residual bit errors")))
}

fn spreading_check(rng: &mut Substream) -> Result<SelfCheck> {
    let code = PnCode::default();
    let bits = rng.bits(500);
    let mut chips = spread(&bits, &code)?;
    for i in (0..chips.len()).step_by(code.chips_per_bit()) {
        chips.0[i] = -chips.0[i];
    }
    let back = despread(&chips, &code)?;
    let ok = back == bits;
    Ok(SelfCheck::new("spreading: round trip with one flipped chip per bit", ok, format!("{} bits", bits.len())))
}

fn modem_check() -> SelfCheck {
    let mut bad = Vec::new();
    for m in Modulation::ALL {
        let scheme = ModScheme::new(m);
        let k = m.bits_per_symbol();
        let bits: Vec<u8> =
            (0..m.order()).flat_map(|label| (0..k).rev().map(move |b| ((label >> b) & 1) as u8)).collect();
        let (symbols, _) = modulate_padded(&bits, &scheme);
        let energy = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
        if demodulate(&symbols, &scheme) != bits || (energy - 1.0).abs() > 1e-12 {
            bad.push(m.name());
        }
    }
    SelfCheck::new("modem: every label round trips, unit energy", bad.is_empty(), format!("failing: {bad:?}"))
}

fn dft_check(rng: &mut Substream) -> Result<SelfCheck> {
    let mut worst = 0f64;
    for n in [1, 2, 3, 8, 12, 60, 64, 100, 128, 256] {
        let x: Vec<Complex64> = (0..n).map(|_| rng.complex_normal()).collect();
        let dft = Dft::new(n)?;
        let fast = dft.forward(&x)?;
        let slow = naive_dft(&x, Direction::Forward);
        let back = dft.inverse(&fast)?;
        for i in 0..n {
            worst = worst.max((fast[i] - slow[i]).norm()).max((back[i] - x[i]).norm());
        }
    }
    Ok(SelfCheck::new("dft: matches direct sum, inverse pair", worst < 1e-9, format!("max deviation {worst:.2e}")))
}

fn ofdm_check(rng: &mut Substream) -> Result<SelfCheck> {
    let mut worst = 0f64;
    for params in [OfdmParams::DESK, OfdmParams::new(100, 20)?] {
        let modem = OfdmModem::new(params);
        let x: Vec<Complex64> = (0..params.n_subcarriers()).map(|_| rng.complex_normal()).collect();
        let y = modem.demodulate(&modem.modulate(&x)?)?;
        worst = x.iter().zip(&y).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
    }
    Ok(SelfCheck::new("ofdm: modulate/demodulate", worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn stbc_check(rng: &mut Substream) -> SelfCheck {
    let scheme = ModScheme::new(Modulation::Qam64);
    let pts = scheme.points();
    let mut wrong = 0;
    let mut singular = 0;
    for i in 0..4000 {
        let rx = 1 + i % 4;
        let h = rayleigh_draw(rng, rx, 2);
        let (a, b) = (pts[i % 64], pts[(i * 7 + 3) % 64]);
        let y = propagate_block(&stbc_encode(a, b), &h);
        match zf_combine(&y, &h) {
            Ok((s1, s2, _)) => {
                wrong += (scheme.nearest_label(s1) != i % 64) as usize
                    + (scheme.nearest_label(s2) != (i * 7 + 3) % 64) as usize
            }
            Err(_) => singular += 1,
        }
    }
    SelfCheck::new(
        "stbc: noiseless Alamouti recovers symbols",
        wrong == 0,
        format!("{wrong} wrong, {singular} singular draws"),
    )
}

fn link_check() -> Result<SelfCheck> {
    let mut failures = Vec::new();
    let mut bits = 0;
    for m in Modulation::ALL {
        for rx in 1..=3 {
            for users in 1..=2 {
                let cfg = LinkConfig { modulation: m, rx_antennas: rx, users, frame_bits: 256, ..Default::default() };
                let link = Link::new(cfg)?;
                for trial in 0..2 {
                    let o = link.run_trial(SnrPoint::noiseless(), trial)?;
                    bits += o.bits;
                    if o.errors != 0 {
                        failures.push(format!("{} rx{rx} users{users}", m.name()));
                    }
                }
            }
        }
        let cfg = LinkConfig {
            modulation: m,
            bypass: Bypass { fec: true, spreading: true, channel: true },
            frame_bits: 256,
            ..Default::default()
        };
        let o = Link::new(cfg)?.run_trial(SnrPoint::new(-10.0), 0)?;
        bits += o.bits;
        if o.errors != 0 {
            failures.push(format!("{} bypass-all", m.name()));
        }
    }
    Ok(SelfCheck::new(
        "link: noiseless loopback, all schemes x 1..3 rx x 1..2 users, bypass-all",
        failures.is_empty(),
        if failures.is_empty() { format!("{bits} bits, 0 errors") } else { failures.join("; ") },
    ))
}

/// Runs every check; an `Err` means a check could not even be set up.
pub fn run_selftest() -> Result<Vec<SelfCheck>> {
    let mut rng = Substream::from_seed(0x5E1F);
    Ok(vec![
        fec_checks(&mut rng)?,
        spreading_check(&mut rng)?,
        modem_check(),
        dft_check(&mut rng)?,
        ofdm_check(&mut rng)?,
        stbc_check(&mut rng),
        link_check()?,
    ])
}
