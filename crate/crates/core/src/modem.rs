//! Symbol-rate QPSK over AWGN.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Independent streams for one run are
//! obtained by applying `jump()` (2^128 steps) `index` times to the seeded
//! generator: stream 0 draws payload bits, stream 1 draws channel noise.
//! Uniform doubles use the top 53 bits of each output, and Gaussian pairs come
//! from the Box–Muller transform, one pair per complex sample (cosine branch
//! to I, sine branch to Q). Outputs are therefore byte-reproducible across
//! platforms for a given seed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::link::{case_scenario, snr_db};

pub const MAX_CONSTELLATION_POINTS: usize = 4096;

const BIT_STREAM: u32 = 0;
const NOISE_STREAM: u32 = 1;

/// Generator for stream `index` of run `seed`.
pub fn rng_stream(seed: u64, index: u32) -> Xoshiro256PlusPlus {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for _ in 0..index {
        rng.jump();
    }
    rng
}

fn uniform(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normals.
fn box_muller(rng: &mut impl RngCore) -> (f64, f64) {
    // 1 - u lies in (0, 1], keeping ln finite
    let u1 = 1.0 - uniform(rng);
    let u2 = uniform(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitStream(Vec<u8>);

impl BitStream {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.len() < 2 || !bits.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "QPSK needs an even number of at least two bits, got {}",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bit values must be 0 or 1"));
        }
        Ok(BitStream(bits))
    }

    pub fn random(len: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_stream(seed, BIT_STREAM);
        let mut bits = Vec::with_capacity(len);
        while bits.len() < len {
            let word = rng.next_u64();
            let take = (len - bits.len()).min(64);
            bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
        }
        Self::new(bits)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqStream(Vec<Complex64>);

impl IqStream {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid("IQ stream contains a non-finite sample"));
        }
        Ok(IqStream(samples))
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        IqStream(self.0.iter().map(|s| -s).collect())
    }
}

fn map_symbol(b0: u8, b1: u8) -> Complex64 {
    Complex64::new(1.0 - 2.0 * b0 as f64, 1.0 - 2.0 * b1 as f64) * FRAC_1_SQRT_2
}

/// Gray-mapped QPSK with unit average symbol energy.
pub fn qpsk_modulate(bits: &BitStream) -> IqStream {
    IqStream(bits.0.chunks_exact(2).map(|p| map_symbol(p[0], p[1])).collect())
}

/// Adds circular Gaussian noise of total power `10^(-snr/10)` per symbol.
/// An infinite SNR returns the input unchanged.
pub fn apply_channel(iq: &IqStream, snr_db: f64, seed: u64) -> Result<IqStream> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("channel SNR must be finite or +inf, got {snr_db}")));
    }
    if snr_db == f64::INFINITY {
        return Ok(iq.clone());
    }
    let sigma = (10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
    let mut rng = rng_stream(seed, NOISE_STREAM);
    let out = iq
        .0
        .iter()
        .map(|s| {
            let (ni, nq) = box_muller(&mut rng);
            s + Complex64::new(ni * sigma, nq * sigma)
        })
        .collect();
    Ok(IqStream(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModemReport {
    pub snr_estimate_db: f64,
    pub evm_percent: f64,
    pub ber: f64,
    pub bit_count: usize,
    pub bit_errors: usize,
    /// Leading received symbols, at most [`MAX_CONSTELLATION_POINTS`].
    pub constellation: Vec<Complex64>,
}

impl ModemReport {
    pub const CONSTELLATION_CSV_HEADER: &'static str = "i,q";

    /// Flat `key=value` block.
    pub fn to_text(&self) -> String {
        format!(
            "snr_estimate_db={}\nevm_percent={}\nber={}\nbit_count={}\nbit_errors={}\n",
            sig6(self.snr_estimate_db),
            sig6(self.evm_percent),
            sig6(self.ber),
            self.bit_count,
            self.bit_errors
        )
    }

    pub fn constellation_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CONSTELLATION_CSV_HEADER);
        for p in &self.constellation {
            out.push_str(&format!("{},{}\n", sig6(p.re), sig6(p.im)));
        }
        out
    }
}

/// Sign decisions against a known reference; EVM is data-aided.
pub fn qpsk_demodulate(iq: &IqStream, reference: &BitStream) -> Result<ModemReport> {
    if reference.len() != 2 * iq.len() {
        return Err(Error::invalid(format!(
            "reference has {} bits for {} symbols",
            reference.len(),
            iq.len()
        )));
    }
    let mut errors = 0usize;
    let mut err_power = 0.0;
    let mut ref_power = 0.0;
    for (s, pair) in iq.0.iter().zip(reference.0.chunks_exact(2)) {
        let ideal = map_symbol(pair[0], pair[1]);
        errors += usize::from(u8::from(s.re < 0.0) != pair[0]);
        errors += usize::from(u8::from(s.im < 0.0) != pair[1]);
        err_power += (s - ideal).norm_sqr();
        ref_power += ideal.norm_sqr();
    }
    let evm = (err_power / ref_power).sqrt();
    Ok(ModemReport {
        snr_estimate_db: -20.0 * evm.log10(),
        evm_percent: 100.0 * evm,
        ber: errors as f64 / reference.len() as f64,
        bit_count: reference.len(),
        bit_errors: errors,
        constellation: iq.0.iter().take(MAX_CONSTELLATION_POINTS).copied().collect(),
    })
}

/// Random bits → QPSK → AWGN at `snr_db` → decisions.
pub fn simulate(nbits: usize, snr_db: f64, seed: u64) -> Result<ModemReport> {
    let bits = BitStream::random(nbits, seed)?;
    let rx = apply_channel(&qpsk_modulate(&bits), snr_db, seed)?;
    qpsk_demodulate(&rx, &bits)
}

/// Runs one of the five relay experiments at the SNR its link budget gives.
pub fn run_case(case_id: u8, nbits: usize, seed: u64) -> Result<ModemReport> {
    let scenario = case_scenario(case_id)?;
    simulate(nbits, snr_db(&scenario)?, seed)
}
