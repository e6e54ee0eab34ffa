//! Constellation mapping for the six supported schemes.
//!
//! Bits are grouped MSB-first into labels. Every table is normalized to unit
//! average symbol energy.
//!
//! | scheme | geometry | labelling |
//! |--------|----------|-----------|
//! | QPSK   | 2x2 square | Gray, bit 0 on I, bit 1 on Q |
//! | PSK8   | phases k*pi/4 | Gray over k |
//! | QAM8   | 4x2 rectangle, I in {+-1,+-3}, Q in {+-1} | Gray, 2 bits on I, 1 on Q |
//! | QAM16  | 4x4 square | Gray, 2 bits per axis |
//! | QAM32  | 6x6 cross (corners removed) | quasi-Gray, see [`cross32_point`] |
//! | QAM64  | 8x8 square | Gray, 3 bits per axis |
//!
//! Each PAM axis maps its Gray-coded bits to levels in decreasing order, so
//! the all-zero label sits at the most positive level (for QPSK `00` is
//! `(1 + j)/sqrt(2)`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::{Bit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulation {
    Qpsk,
    Psk8,
    Qam8,
    Qam16,
    Qam32,
    Qam64,
}

impl Modulation {
    pub const ALL: [Modulation; 6] =
        [Modulation::Qpsk, Modulation::Psk8, Modulation::Qam8, Modulation::Qam16, Modulation::Qam32, Modulation::Qam64];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "PSK8",
            Modulation::Qam8 => "QAM8",
            Modulation::Qam16 => "QAM16",
            Modulation::Qam32 => "QAM32",
            Modulation::Qam64 => "QAM64",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Psk8 | Modulation::Qam8 => 3,
            Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
        }
    }

    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    /// Accepts the canonical names plus `8PSK`, `8-PSK`, `16-QAM`, `16QAM`
    /// and similar spellings, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect::<String>().to_uppercase();
        Ok(match key.as_str() {
            "QPSK" | "4QAM" | "QAM4" | "4PSK" | "PSK4" => Modulation::Qpsk,
            "PSK8" | "8PSK" => Modulation::Psk8,
            "QAM8" | "8QAM" => Modulation::Qam8,
            "QAM16" | "16QAM" => Modulation::Qam16,
            "QAM32" | "32QAM" => Modulation::Qam32,
            "QAM64" | "64QAM" => Modulation::Qam64,
            _ => return Err(Error::UnknownModulation(s.to_string())),
        })
    }
}

fn gray_inverse(mut g: usize) -> usize {
    let mut x = g;
    while g > 0 {
        g >>= 1;
        x ^= g;
    }
    x
}

/// Level of a Gray-coded PAM axis with `levels` points spaced 2 apart.
fn pam_level(bits: usize, levels: usize) -> f64 {
    let position = gray_inverse(bits);
    (levels as f64 - 1.0) - 2.0 * position as f64
}

/// Unnormalized 32-cross point for a 5-bit label.
///
/// The label is first placed on an 8x4 Gray rectangle (3 bits on I,
/// 2 bits on Q). The two outer columns (I = +-7) are folded onto the
/// missing rows of the cross: `(+-7, q)` moves to `(+-(4 - |q|), 5 sgn q)`.
pub fn cross32_point(label: usize) -> (f64, f64) {
    let i = pam_level(label >> 2, 8);
    let q = pam_level(label & 0b11, 4);
    if i.abs() == 7.0 {
        (i.signum() * (4.0 - q.abs()), 5.0 * q.signum())
    } else {
        (i, q)
    }
}

/// A constellation table indexed by label.
#[derive(Debug, Clone, PartialEq)]
pub struct ModScheme {
    modulation: Modulation,
    points: Vec<Complex64>,
}

impl ModScheme {
    pub fn new(modulation: Modulation) -> Self {
        let m = modulation.order();
        let raw: Vec<Complex64> = (0..m)
            .map(|label| match modulation {
                Modulation::Qpsk => Complex64::new(pam_level(label >> 1, 2), pam_level(label & 1, 2)),
                Modulation::Psk8 => Complex64::from_polar(1.0, gray_inverse(label) as f64 * PI / 4.0),
                Modulation::Qam8 => Complex64::new(pam_level(label >> 1, 4), pam_level(label & 1, 2)),
                Modulation::Qam16 => Complex64::new(pam_level(label >> 2, 4), pam_level(label & 3, 4)),
                Modulation::Qam32 => {
                    let (i, q) = cross32_point(label);
                    Complex64::new(i, q)
                }
                Modulation::Qam64 => Complex64::new(pam_level(label >> 3, 8), pam_level(label & 7, 8)),
            })
            .collect();
        let energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
        let scale = energy.sqrt().recip();
        Self { modulation, points: raw.into_iter().map(|p| p * scale).collect() }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (a, p) in self.points.iter().enumerate() {
            for q in &self.points[a + 1..] {
                d = d.min((p - q).norm());
            }
        }
        d
    }

    /// Label of the nearest point; ties go to the lowest label.
    pub fn nearest_label(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    /// `label,I,Q` rows, one per point, with a header line.
    pub fn to_csv(&self) -> String {
        let k = self.bits_per_symbol();
        let mut out = String::from("label,I,Q\n");
        for (label, p) in self.points.iter().enumerate() {
            out.push_str(&format!("{label:0k$b},{:.12},{:.12}\n", p.re, p.im));
        }
        out
    }
}

/// Number of zero bits needed to bring `len` to a multiple of `bits_per_symbol`.
pub fn padding_for(len: usize, bits_per_symbol: usize) -> usize {
    (bits_per_symbol - len % bits_per_symbol) % bits_per_symbol
}

/// Maps MSB-first bit groups to constellation points. The length must
/// already be a multiple of the scheme's bits per symbol; see [`padding_for`].
pub fn modulate(bits: &[Bit], scheme: &ModScheme) -> Result<Vec<Complex64>> {
    let k = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::MisalignedSymbols { len: bits.len(), bits_per_symbol: k });
    }
    Ok(bits
        .chunks_exact(k)
        .map(|group| {
            let label = group.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            scheme.points[label]
        })
        .collect())
}

/// Zero-pads to a symbol boundary and modulates; returns the symbols and the
/// number of padding bits appended.
pub fn modulate_padded(bits: &[Bit], scheme: &ModScheme) -> (Vec<Complex64>, usize) {
    let pad = padding_for(bits.len(), scheme.bits_per_symbol());
    let mut padded = Vec::with_capacity(bits.len() + pad);
    padded.extend_from_slice(bits);
    padded.resize(bits.len() + pad, 0);
    (modulate(&padded, scheme).expect("padded to a symbol boundary"), pad)
}

/// Minimum-Euclidean-distance demapping.
pub fn demodulate(symbols: &[Complex64], scheme: &ModScheme) -> Vec<Bit> {
    let k = scheme.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * k);
    for &y in symbols {
        let label = scheme.nearest_label(y);
        out.extend((0..k).rev().map(|i| ((label >> i) & 1) as Bit));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn gray_inverse_undoes_binary_reflection() {
        for x in 0..256usize {
            assert_eq!(gray_inverse(x ^ (x >> 1)), x);
        }
    }

    #[test]
    fn unit_average_energy() {
        for m in Modulation::ALL {
            let s = ModScheme::new(m);
            assert_eq!(s.points().len(), m.order());
            let e = s.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m.order() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m}: {e}");
        }
    }

    #[test]
    fn points_are_distinct() {
        for m in Modulation::ALL {
            assert!(ModScheme::new(m).min_distance() > 0.1, "{m}");
        }
    }

    #[test]
    fn qpsk_zero_label() {
        let s = ModScheme::new(Modulation::Qpsk);
        let p = modulate(&[0, 0], &s).unwrap()[0];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p - Complex64::new(r, r)).norm() < 1e-15);
    }

    #[test]
    fn qam64_corner() {
        // average energy of the 8x8 grid with levels +-1..+-7 is 2 * 21 = 42
        let s = ModScheme::new(Modulation::Qam64);
        let p = modulate(&[0; 6], &s).unwrap()[0];
        let c = 7.0 / 42f64.sqrt();
        assert!((p - Complex64::new(c, c)).norm() < 1e-14);
    }

    #[test]
    fn known_normalizations() {
        // (label-independent) average energies before scaling
        let cases = [
            (Modulation::Qam8, 6.0, Complex64::new(3.0, 1.0)),
            (Modulation::Qam16, 10.0, Complex64::new(3.0, 3.0)),
            (Modulation::Qam32, 20.0, Complex64::new(5.0, 3.0)),
        ];
        for (m, energy, corner) in cases {
            let s = ModScheme::new(m);
            let target = corner / f64::sqrt(energy);
            assert!(s.points().iter().any(|p| (p - target).norm() < 1e-12), "{m}");
        }
    }

    #[test]
    fn cross32_geometry() {
        let mut pts: Vec<(i32, i32)> = (0..32).map(cross32_point).map(|(i, q)| (i as i32, q as i32)).collect();
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), 32);
        for (i, q) in pts {
            assert!(i.abs() <= 5 && q.abs() <= 5 && !(i.abs() == 5 && q.abs() == 5));
            assert!(i % 2 != 0 && q % 2 != 0);
        }
    }

    /// For square Gray tables every pair of nearest neighbours differs in one bit.
    #[test]
    fn gray_adjacency() {
        for m in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64, Modulation::Qam8, Modulation::Psk8] {
            let s = ModScheme::new(m);
            let d = s.min_distance();
            for (a, p) in s.points().iter().enumerate() {
                for (b, q) in s.points().iter().enumerate() {
                    if a != b && ((p - q).norm() - d).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{m}: {a:b} vs {b:b}");
                    }
                }
            }
        }
    }

    /// Folding costs Gray adjacency on 4 of the 52 nearest-neighbour pairs.
    #[test]
    fn cross32_adjacency() {
        let s = ModScheme::new(Modulation::Qam32);
        let d = s.min_distance();
        let (mut pairs, mut non_gray) = (0, 0);
        for a in 0..32usize {
            for b in a + 1..32 {
                if ((s.points()[a] - s.points()[b]).norm() - d).abs() < 1e-9 {
                    pairs += 1;
                    non_gray += ((a ^ b).count_ones() != 1) as usize;
                }
            }
        }
        assert_eq!((pairs, non_gray), (52, 4));
    }

    #[test]
    fn origin_tie_breaks_to_zero() {
        let s = ModScheme::new(Modulation::Qpsk);
        assert_eq!(demodulate(&[Complex64::new(0.0, 0.0)], &s), vec![0, 0]);
    }

    #[test]
    fn misaligned_bits_rejected() {
        let s = ModScheme::new(Modulation::Qam16);
        assert!(matches!(modulate(&[0; 5], &s), Err(Error::MisalignedSymbols { .. })));
        let (syms, pad) = modulate_padded(&[1; 5], &s);
        assert_eq!((syms.len(), pad), (2, 3));
    }

    #[test]
    fn perturbation_below_half_min_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in Modulation::ALL {
            let s = ModScheme::new(m);
            let radius = 0.4999 * s.min_distance();
            for (label, &p) in s.points().iter().enumerate() {
                for _ in 0..64 {
                    let y = p + Complex64::from_polar(rng.random::<f64>() * radius, rng.random::<f64>() * 2.0 * PI);
                    assert_eq!(s.nearest_label(y), label, "{m}");
                }
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("qpsk".parse::<Modulation>().unwrap(), Modulation::Qpsk);
        assert_eq!("8-PSK".parse::<Modulation>().unwrap(), Modulation::Psk8);
        assert_eq!("64QAM".parse::<Modulation>().unwrap(), Modulation::Qam64);
        for m in Modulation::ALL {
            assert_eq!(m.name().parse::<Modulation>().unwrap(), m);
        }
        assert!("BPSK".parse::<Modulation>().is_err());
    }

    /// Symbol error rate at fixed Es/N0 grows with constellation size.
    #[test]
    fn ser_monotone_in_order() {
        let es_n0 = 10f64.powf(12.0 / 10.0);
        let sigma = (0.5 / es_n0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut prev = 0.0;
        for m in [Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64] {
            let s = ModScheme::new(m);
            let n = 40_000;
            let mut errors = 0;
            for _ in 0..n {
                let label = rng.random_range(0..m.order());
                let nr: f64 = StandardNormal.sample(&mut rng);
                let ni: f64 = StandardNormal.sample(&mut rng);
                let y = s.points()[label] + Complex64::new(nr, ni) * sigma;
                errors += (s.nearest_label(y) != label) as usize;
            }
            let ser = errors as f64 / n as f64;
            assert!(ser >= prev, "{m}: {ser} < {prev}");
            prev = ser;
        }
    }

    proptest::proptest! {
        #[test]
        fn loopback(bits in proptest::collection::vec(0u8..2, 0..300), idx in 0usize..6) {
            let s = ModScheme::new(Modulation::ALL[idx]);
            let (syms, pad) = modulate_padded(&bits, &s);
            let mut back = demodulate(&syms, &s);
            back.truncate(back.len() - pad);
            proptest::prop_assert_eq!(back, bits);
        }
    }
}
