//! Unitary discrete Fourier transform for arbitrary lengths.
//!
//! A [`Dft`] plan factors `N` into primes and runs a recursive mixed-radix
//! decimation-in-time Cooley-Tukey transform. Each stage applies a generic
//! radix-`p` butterfly, so a prime factor `p` costs `O(N p)`; lengths such
//! as 6400 = 2^8 * 5^2 stay close to `O(N log N)`. Both directions are scaled
//! by `1/sqrt(N)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// A precomputed transform plan; immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Dft {
    len: usize,
    factors: Vec<usize>,
    /// `exp(-2 pi i k / N)` for `k` in `0..N`.
    twiddles: Vec<Complex64>,
    scale: f64,
}

fn factorize(mut n: usize) -> Vec<usize> {
    let mut factors = Vec::new();
    // radix 4 where possible keeps the recursion shallow
    while n.is_multiple_of(4) {
        factors.push(4);
        n /= 4;
    }
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            factors.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    factors
}

impl Dft {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyTransform);
        }
        let twiddles = (0..len).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64)).collect();
        Ok(Self { len, factors: factorize(len), twiddles, scale: (len as f64).sqrt().recip() })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn forward(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(input, Direction::Forward)
    }

    pub fn inverse(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        self.transform(input, Direction::Inverse)
    }

    pub fn transform(&self, input: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
        if input.len() != self.len {
            return Err(Error::TransformLength { expected: self.len, actual: input.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.len];
        let mut scratch = Vec::with_capacity(self.factors.iter().copied().max().unwrap_or(1));
        self.recurse(input, 1, &mut out, &self.factors, direction, &mut scratch);
        for x in &mut out {
            *x *= self.scale;
        }
        Ok(out)
    }

    #[inline]
    fn twiddle(&self, index: usize, direction: Direction) -> Complex64 {
        let w = self.twiddles[index];
        match direction {
            Direction::Forward => w,
            Direction::Inverse => w.conj(),
        }
    }

    /// Transforms `input[0], input[stride], ...` (`out.len()` samples) into `out`.
    fn recurse(
        &self,
        input: &[Complex64],
        stride: usize,
        out: &mut [Complex64],
        factors: &[usize],
        direction: Direction,
        scratch: &mut Vec<Complex64>,
    ) {
        let n = out.len();
        let Some((&radix, rest)) = factors.split_first() else {
            out[0] = input[0];
            return;
        };
        let m = n / radix;
        for q in 0..radix {
            self.recurse(&input[q * stride..], stride * radix, &mut out[q * m..(q + 1) * m], rest, direction, scratch);
        }

        // X[k + r m] = sum_q W_n^{q k} Y_q[k] W_radix^{q r}
        let step = self.len / n;
        let radix_step = self.len / radix;
        for k in 0..m {
            scratch.clear();
            scratch.extend((0..radix).map(|q| out[q * m + k] * self.twiddle(q * k * step, direction)));
            if radix == 2 {
                let (a, b) = (scratch[0], scratch[1]);
                out[k] = a + b;
                out[k + m] = a - b;
                continue;
            }
            if radix == 4 {
                let (a, b, c, d) = (scratch[0], scratch[1], scratch[2], scratch[3]);
                // multiplying by -j (forward) or +j (inverse)
                let rot = |z: Complex64| match direction {
                    Direction::Forward => Complex64::new(z.im, -z.re),
                    Direction::Inverse => Complex64::new(-z.im, z.re),
                };
                let (s0, s1) = (a + c, a - c);
                let (t0, t1) = (b + d, rot(b - d));
                out[k] = s0 + t0;
                out[k + m] = s1 + t1;
                out[k + 2 * m] = s0 - t0;
                out[k + 3 * m] = s1 - t1;
                continue;
            }
            for r in 0..radix {
                let mut acc = Complex64::new(0.0, 0.0);
                for (q, &y) in scratch.iter().enumerate() {
                    acc += y * self.twiddle((q * r % radix) * radix_step, direction);
                }
                out[k + r * m] = acc;
            }
        }
    }
}

/// Direct `O(N^2)` unitary DFT.
pub fn naive_dft(input: &[Complex64], direction: Direction) -> Vec<Complex64> {
    let n = input.len();
    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    let scale = (n as f64).sqrt().recip();
    (0..n)
        .map(|k| {
            input
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    let angle = sign * 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    x * Complex64::from_polar(1.0, angle)
                })
                .sum::<Complex64>()
                * scale
        })
        .collect()
}
