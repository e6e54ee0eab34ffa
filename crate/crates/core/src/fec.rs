//! Rate-1/2 non-systematic feed-forward convolutional code with a
//! hard-decision Viterbi decoder.
//!
//! Generators use the usual octal convention: the most significant of the
//! `K = v + 1` bits taps the current input, the least significant taps the
//! input `v` instants ago. The encoder state holds the last `v` inputs with
//! the most recent one in the most significant position, so a register
//! holding `s1 = 1, s2 = 1, s3 = 0` is state `0b110 = 6`.

use crate::{Bit, Error, Result};

const MAX_MEMORY: usize = 12;

/// A rate-1/2 feed-forward convolutional code, always terminated with
/// `memory` zero tail bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvCode {
    memory: usize,
    generators: [u32; 2],
}

impl Default for ConvCode {
    /// The 8-state, K = 4 code with generators (15, 17) octal, free distance 6.
    fn default() -> Self {
        Self { memory: 3, generators: [0o15, 0o17] }
    }
}

impl ConvCode {
    pub fn new(memory: usize, generators: [u32; 2]) -> Result<Self> {
        if memory == 0 || memory > MAX_MEMORY {
            return Err(Error::InvalidCode(format!("memory must be in 1..={MAX_MEMORY}, got {memory}")));
        }
        let limit = 1u32 << (memory + 1);
        for &g in &generators {
            if g == 0 {
                return Err(Error::InvalidCode("all-zero generator".into()));
            }
            if g >= limit {
                return Err(Error::InvalidCode(format!("generator {g:o} has more than {} taps", memory + 1)));
            }
            if g & (limit >> 1) == 0 {
                return Err(Error::InvalidCode(format!("generator {g:o} does not tap the current input")));
            }
        }
        Ok(Self { memory, generators })
    }

    /// Parses generators given as octal strings, e.g. `("15", "17")`.
    pub fn from_octal(memory: usize, g0: &str, g1: &str) -> Result<Self> {
        let parse = |s: &str| {
            u32::from_str_radix(s.trim(), 8).map_err(|_| Error::InvalidCode(format!("{s:?} is not an octal generator")))
        };
        Self::new(memory, [parse(g0)?, parse(g1)?])
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn constraint_length(&self) -> usize {
        self.memory + 1
    }

    pub fn generators(&self) -> [u32; 2] {
        self.generators
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory
    }

    /// Generators formatted as octal strings.
    pub fn generators_octal(&self) -> [String; 2] {
        [format!("{:o}", self.generators[0]), format!("{:o}", self.generators[1])]
    }

    /// Coded length for `info_len` information bits, tail included.
    pub fn coded_len(&self, info_len: usize) -> usize {
        2 * (info_len + self.memory)
    }

    #[inline]
    fn next_state(&self, state: usize, input: Bit) -> usize {
        ((input as usize) << (self.memory - 1)) | (state >> 1)
    }

    #[inline]
    fn output(&self, state: usize, input: Bit) -> (Bit, Bit) {
        let window = ((input as u32) << self.memory) | state as u32;
        (
            ((window & self.generators[0]).count_ones() & 1) as Bit,
            ((window & self.generators[1]).count_ones() & 1) as Bit,
        )
    }
}

/// Encodes `info` and appends the zero tail, returning `2 * (len + v)` bits
/// with the two generator outputs interleaved per input instant.
pub fn conv_encode(info: &[Bit], code: &ConvCode) -> Result<Vec<Bit>> {
    if info.is_empty() {
        return Err(Error::EmptyMessage);
    }
    let mut out = Vec::with_capacity(code.coded_len(info.len()));
    let mut state = 0usize;
    let tail = std::iter::repeat_n(0, code.memory);
    for bit in info.iter().map(|&b| b & 1).chain(tail) {
        let (a, b) = code.output(state, bit);
        out.push(a);
        out.push(b);
        state = code.next_state(state, bit);
    }
    debug_assert_eq!(state, 0);
    Ok(out)
}

/// Hard-decision Viterbi decoding over the terminated trellis.
///
/// Returns the information sequence whose codeword is closest in Hamming
/// distance to `coded`. On equal path metrics the lower-numbered predecessor
/// state wins.
pub fn viterbi_decode(coded: &[Bit], code: &ConvCode) -> Result<Vec<Bit>> {
    if !coded.len().is_multiple_of(2) {
        return Err(Error::MisalignedCodeword(coded.len()));
    }
    let min = 2 * (code.memory + 1);
    if coded.len() < min {
        return Err(Error::ShortCodeword { len: coded.len(), min });
    }

    let states = code.num_states();
    let mask = states - 1;
    let steps = coded.len() / 2;
    let unreachable = u32::MAX / 2;

    // Branch outputs indexed by [state][input], packed as (first << 1) | second.
    let outputs: Vec<[u8; 2]> = (0..states)
        .map(|s| {
            let pack = |d| {
                let (a, b) = code.output(s, d);
                (a << 1) | b
            };
            [pack(0), pack(1)]
        })
        .collect();

    let mut metrics = vec![unreachable; states];
    metrics[0] = 0;
    let mut next = vec![0u32; states];
    // One bit per (step, state): true when the higher-numbered predecessor won.
    let mut decisions = vec![false; steps * states];

    for (step, pair) in coded.chunks_exact(2).enumerate() {
        let received = ((pair[0] & 1) << 1) | (pair[1] & 1);
        let row = &mut decisions[step * states..(step + 1) * states];
        for (ns, slot) in next.iter_mut().enumerate() {
            let input = ns >> (code.memory - 1);
            let lo = (ns << 1) & mask;
            let hi = lo | 1;
            let branch = |s: usize| (outputs[s][input] ^ received).count_ones();
            let m_lo = metrics[lo].saturating_add(branch(lo));
            let m_hi = metrics[hi].saturating_add(branch(hi));
            if m_hi < m_lo {
                *slot = m_hi;
                row[ns] = true;
            } else {
                *slot = m_lo;
            }
        }
        std::mem::swap(&mut metrics, &mut next);
    }

    // Terminated paths end in state 0; walk the survivors back from there.
    let mut state = 0usize;
    let mut bits = vec![0 as Bit; steps];
    for step in (0..steps).rev() {
        bits[step] = (state >> (code.memory - 1)) as Bit;
        let lo = (state << 1) & mask;
        state = if decisions[step * states + state] { lo | 1 } else { lo };
    }
    debug_assert_eq!(state, 0);
    bits.truncate(steps - code.memory);
    Ok(bits)
}
