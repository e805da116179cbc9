//! Seeded random streams and the samplers used by the checks.
//!
//! A [`SeededStream`] is a ChaCha8 generator keyed by a base seed and
//! positioned on one of 2^64 independent stream ids, so work split into
//! chunks can give every chunk its own stream without coordination.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::special::lgamma;

/// Base seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 20_140_716;

#[derive(Clone, Debug)]
pub struct SeededStream {
    base_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl SeededStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(stream_id);
        Self {
            base_seed,
            stream_id,
            rng,
        }
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream on the same base seed whose id is derived from this
    /// stream's id and `tag`.
    pub fn child(&self, tag: u64) -> SeededStream {
        SeededStream::new(self.base_seed, derive_stream_id(self.stream_id, tag))
    }
}

impl RngCore for SeededStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Mix a parent stream id with a tag (splitmix64 finalizer).
pub fn derive_stream_id(parent: u64, tag: u64) -> u64 {
    let mut z = parent
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag)
        .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(op, format!("{name} must be positive and finite, got {v}")))
    }
}

pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64]) {
    for x in buf {
        *x = rng.sample(StandardNormal);
    }
}

pub fn sample_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    positive("sample_gamma", "shape", shape)?;
    positive("sample_gamma", "scale", scale)?;
    let g = Gamma::new(shape, scale).map_err(|e| Error::domain("sample_gamma", e.to_string()))?;
    Ok(g.sample(rng))
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    positive("sample_beta", "a", a)?;
    positive("sample_beta", "b", b)?;
    let d = Beta::new(a, b).map_err(|e| Error::domain("sample_beta", e.to_string()))?;
    Ok(d.sample(rng))
}

pub fn sample_binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("sample_binomial", format!("p must lie in [0, 1], got {p}")));
    }
    let d = Binomial::new(n, p).map_err(|e| Error::domain("sample_binomial", e.to_string()))?;
    Ok(d.sample(rng))
}

/// Inverse-gamma with shape `a` and scale `b`: the reciprocal of
/// Gamma(a, rate b).
#[derive(Clone, Copy, Debug)]
pub struct InverseGamma {
    gamma: Gamma<f64>,
}

impl InverseGamma {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        positive("inverse_gamma", "a", a)?;
        positive("inverse_gamma", "b", b)?;
        let gamma =
            Gamma::new(a, 1.0 / b).map_err(|e| Error::domain("inverse_gamma", e.to_string()))?;
        Ok(Self { gamma })
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) {
        for x in buf {
            *x = self.sample(rng);
        }
    }
}

impl Distribution<f64> for InverseGamma {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        1.0 / self.gamma.sample(rng)
    }
}

pub fn sample_inverse_gamma(stream: &mut SeededStream, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    let d = InverseGamma::new(a, b)?;
    let mut out = vec![0.0; n];
    d.fill(stream, &mut out);
    Ok(out)
}

/// Exponential power law with scale `tau` and shape `q`, standardized so the
/// variance is `tau²`.
#[derive(Clone, Copy, Debug)]
pub struct ExpPower {
    gamma: Gamma<f64>,
    inv_q: f64,
    scale: f64,
}

impl ExpPower {
    pub fn new(tau: f64, q: f64) -> Result<Self> {
        positive("exp_power", "tau", tau)?;
        positive("exp_power", "q", q)?;
        let gamma =
            Gamma::new(1.0 / q, 1.0).map_err(|e| Error::domain("exp_power", e.to_string()))?;
        let c = (0.5 * (lgamma(3.0 / q) - lgamma(1.0 / q))).exp();
        Ok(Self {
            gamma,
            inv_q: 1.0 / q,
            scale: tau / c,
        })
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) {
        for x in buf {
            *x = self.sample(rng);
        }
    }
}

impl Distribution<f64> for ExpPower {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.gamma.sample(rng).powf(self.inv_q);
        if rng.random::<bool>() {
            self.scale * w
        } else {
            -self.scale * w
        }
    }
}

pub fn sample_exp_power(stream: &mut SeededStream, tau: f64, q: f64, n: usize) -> Result<Vec<f64>> {
    let d = ExpPower::new(tau, q)?;
    let mut out = vec![0.0; n];
    d.fill(stream, &mut out);
    Ok(out)
}

/// Dirichlet law drawn as normalized independent gammas.
#[derive(Clone, Debug)]
pub struct Dirichlet {
    alpha: Vec<f64>,
    gammas: Vec<Gamma<f64>>,
}

impl Dirichlet {
    pub fn new(alpha: &[f64]) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(Error::domain("dirichlet", "need at least two components"));
        }
        let mut gammas = Vec::with_capacity(alpha.len());
        for &a in alpha {
            positive("dirichlet", "alpha_k", a)?;
            gammas.push(Gamma::new(a, 1.0).map_err(|e| Error::domain("dirichlet", e.to_string()))?);
        }
        Ok(Self {
            alpha: alpha.to_vec(),
            gammas,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Write one draw into `out`, which must have length `dim()`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.gammas.len());
        let mut total = 0.0;
        for (o, g) in out.iter_mut().zip(&self.gammas) {
            *o = g.sample(rng);
            total += *o;
        }
        if total > 0.0 {
            for o in out.iter_mut() {
                *o /= total;
            }
        } else {
            // every gamma underflowed (tiny shapes): fall back to a vertex
            let k = rng.random_range(0..out.len());
            out.fill(0.0);
            out[k] = 1.0;
        }
    }
}

impl Distribution<Vec<f64>> for Dirichlet {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }
}

pub fn sample_dirichlet(stream: &mut SeededStream, alpha: &[f64]) -> Result<Vec<f64>> {
    Ok(Dirichlet::new(alpha)?.sample(stream))
}

fn validate_probabilities(op: &'static str, theta: &[f64]) -> Result<()> {
    if theta.is_empty() {
        return Err(Error::domain(op, "empty probability vector"));
    }
    if theta.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::domain(op, "probabilities must be finite and non-negative"));
    }
    let s: f64 = theta.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::domain(op, format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Multinomial counts via successive conditional binomials, written into
/// `out` (same length as `theta`).
pub fn multinomial_into<R: Rng + ?Sized>(
    rng: &mut R,
    n_trials: u64,
    theta: &[f64],
    out: &mut [u64],
) -> Result<()> {
    validate_probabilities("sample_multinomial", theta)?;
    debug_assert_eq!(out.len(), theta.len());
    let k = theta.len();
    let mut remaining = n_trials;
    let mut mass = 1.0;
    out.fill(0);
    for i in 0..k - 1 {
        if remaining == 0 {
            return Ok(());
        }
        let p = if mass > 0.0 { (theta[i] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let x = if p >= 1.0 {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, p)
                .map_err(|e| Error::domain("sample_multinomial", e.to_string()))?
                .sample(rng)
        };
        out[i] = x;
        remaining -= x;
        mass -= theta[i];
    }
    out[k - 1] = remaining;
    Ok(())
}

pub fn sample_multinomial(stream: &mut SeededStream, n_trials: u64, theta: &[f64]) -> Result<Vec<u64>> {
    let mut out = vec![0; theta.len()];
    multinomial_into(stream, n_trials, theta, &mut out)?;
    Ok(out)
}
