//! Deterministic seeded generators.
//!
//! Two kinds of randomness live here:
//!
//! * the bit-exact perturbation direction `dir(x)`, a pure function of the
//!   element's bit pattern and a seed, built on SplitMix64 so that any
//!   implementation can reproduce it;
//! * seeded test data (random elements, unitaries, unimodular scalars) drawn
//!   from ChaCha8, used for probes and sample sweeps.
//!
//! # Canonical encoding and mixing
//!
//! The entries of an element are visited row-major; each entry contributes
//! its real part then its imaginary part as the little-endian IEEE-754 bit
//! pattern of an `f64`, read as a `u64` word `w`. Starting from `h = seed`,
//! every word is absorbed as `h = mix(h ^ w)` where `mix` is the SplitMix64
//! output function applied to `z + 0x9E3779B97F4A7C15`. The final `h` seeds a
//! SplitMix64 stream; successive outputs `o` are mapped to
//! `(o >> 11) · 2⁻⁵³ · 2 − 1 ∈ [−1, 1)` and consumed in (re, im) pairs, one
//! pair per entry, row-major.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::talg::{norm, AlgebraCtx, Element, Shape};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.state);
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        out
    }

    /// Uniform double in `[-1, 1)`.
    pub fn next_signed_unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Hash of the canonical byte encoding of `x`.
pub fn hash_element(x: &Element, seed: u64) -> u64 {
    x.as_slice().iter().fold(seed, |h, c| {
        let h = mix64(h ^ u64::from_le_bytes(c.re.to_le_bytes()));
        mix64(h ^ u64::from_le_bytes(c.im.to_le_bytes()))
    })
}

/// Unnormalized pseudo-random direction attached to `x`.
pub fn raw_direction(x: &Element, seed: u64) -> Element {
    let mut gen = SplitMix64::new(hash_element(x, seed));
    let data = (0..x.shape().len())
        .map(|_| {
            let re = gen.next_signed_unit();
            let im = gen.next_signed_unit();
            Complex64::new(re, im)
        })
        .collect();
    Element::from_flat(x.shape(), data).expect("generated entries are finite")
}

/// Seed for a named sub-task, stable under adding or removing other tasks.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(mix64(master), |h, b| mix64(h ^ u64::from(b)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Element with independent standard complex Gaussian entries.
pub fn gaussian_element(shape: Shape, rng: &mut impl Rng) -> Element {
    Element::from_fn(shape, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Gaussian direction rescaled to the requested norm.
pub fn element_with_norm(
    ctx: &AlgebraCtx,
    shape: Shape,
    target: f64,
    rng: &mut impl Rng,
) -> Result<Element> {
    loop {
        let g = gaussian_element(shape, rng);
        let n = norm(ctx, &g)?;
        if n > 0.0 {
            return Ok(g.scale_re(target / n));
        }
    }
}

/// Unitary matrix from Gram-Schmidt on Gaussian columns.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> Element {
    let g = gaussian_element(Shape::Matrix(n), rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<Complex64> = (0..n).map(|i| g.get(i, j)).collect();
        // two passes keep the columns orthonormal to machine precision
        for _ in 0..2 {
            for q in &cols {
                let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let len = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|c| *c /= len);
        cols.push(v);
    }
    Element::from_fn(Shape::Matrix(n), |i, j| cols[j][i])
}

pub fn random_unimodular(rng: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
}
