//! Property tests against independent brute-force oracles.

use mimo_mccdma::fec::{conv_encode, viterbi_decode, ConvCode};
use mimo_mccdma::modem::{demodulate, modulate, ModScheme, Modulation};
use mimo_mccdma::spreading::{despread_bits, spread_bits, PnCode};
use proptest::prelude::*;

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn all_messages(len: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1usize << len).map(move |m| (0..len).rev().map(|b| ((m >> b) & 1) as u8).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// Viterbi output is a minimum-distance codeword, and the unique one when
    /// the minimum is unique.
    #[test]
    fn viterbi_is_maximum_likelihood(
        msg in prop::collection::vec(0u8..2, 1..=12),
        flips in prop::collection::vec(any::<prop::sample::Index>(), 0..=3),
    ) {
        let code = ConvCode::default();
        let mut rx = conv_encode(&msg, &code).unwrap();
        for f in &flips {
            let i = f.index(rx.len());
            rx[i] ^= 1;
        }
        let decoded = viterbi_decode(&rx, &code).unwrap();
        let d_dec = hamming(&conv_encode(&decoded, &code).unwrap(), &rx);
        let dists: Vec<usize> = all_messages(msg.len())
            .map(|m| hamming(&conv_encode(&m, &code).unwrap(), &rx))
            .collect();
        let d_min = *dists.iter().min().unwrap();
        prop_assert_eq!(d_dec, d_min);
        if dists.iter().filter(|&&d| d == d_min).count() == 1 {
            let ml = all_messages(msg.len()).zip(&dists).find(|(_, &d)| d == d_min).unwrap().0;
            prop_assert_eq!(decoded, ml);
        }
    }

    #[test]
    fn modem_round_trip(bits in prop::collection::vec(0u8..2, 0..120), which in 0usize..6) {
        let m = Modulation::ALL[which];
        let k = m.bits_per_symbol();
        let bits = &bits[..bits.len() / k * k];
        let scheme = ModScheme::new(m);
        prop_assert_eq!(demodulate(&modulate(bits, &scheme).unwrap(), &scheme), bits.to_vec());
    }

    #[test]
    fn spreading_round_trip(bits in prop::collection::vec(0u8..2, 1..200), user in 0usize..4) {
        let code = PnCode::default().for_user(user);
        prop_assert_eq!(despread_bits(&spread_bits(&bits, &code).unwrap(), &code).unwrap(), bits);
    }
}

/// Codes with free distance >= 5 correct any two errors.
#[test]
fn two_errors_always_corrected_for_standard_codes() {
    for (memory, g) in [(2, [0o5, 0o7]), (3, [0o15, 0o17]), (6, [0o133, 0o171])] {
        let code = ConvCode::new(memory, g).unwrap();
        for msg in all_messages(6) {
            let tx = conv_encode(&msg, &code).unwrap();
            for i in 0..tx.len() {
                for j in i + 1..tx.len() {
                    let mut rx = tx.clone();
                    rx[i] ^= 1;
                    rx[j] ^= 1;
                    assert_eq!(viterbi_decode(&rx, &code).unwrap(), msg, "{g:?} flips {i},{j}");
                }
            }
        }
    }
}
