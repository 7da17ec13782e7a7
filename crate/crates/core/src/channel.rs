//! Simulated downlink: rate + propagation latency and i.i.d. bit flips on
//! the parameter section.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{Container, DeltaContainer};
use crate::error::{Error, Result};
use crate::rng::{self, tags};

/// Library tier a link originates from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Edge,
    Local,
    Central,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Edge, Tier::Local, Tier::Central];

    pub fn default_prop_delay_s(self) -> f64 {
        match self {
            Tier::Edge => 1e-3,
            Tier::Local => 10e-3,
            Tier::Central => 50e-3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Edge => "edge",
            Tier::Local => "local",
            Tier::Central => "central",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown tier {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub rate_bps: f64,
    pub ber: f64,
    pub prop_delay_s: f64,
    pub seed: u64,
    pub tier: Tier,
}

impl ChannelProfile {
    /// Profile with the tier's default propagation delay.
    pub fn for_tier(tier: Tier, rate_bps: f64, ber: f64, seed: u64) -> Self {
        Self { rate_bps, ber, prop_delay_s: tier.default_prop_delay_s(), seed, tier }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate_bps.is_finite() && self.rate_bps > 0.0) {
            return Err(Error::InvalidArgument(format!("rate_bps must be positive, got {}", self.rate_bps)));
        }
        check_ber(self.ber)?;
        if !(self.prop_delay_s.is_finite() && self.prop_delay_s >= 0.0) {
            return Err(Error::InvalidArgument(format!("prop_delay_s must be non-negative, got {}", self.prop_delay_s)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

fn check_ber(ber: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ber) {
        return Err(Error::InvalidArgument(format!("ber must be in [0, 1], got {ber}")));
    }
    Ok(())
}

pub fn link_latency(payload_bits: u64, profile: &ChannelProfile) -> f64 {
    payload_bits as f64 / profile.rate_bps + profile.prop_delay_s
}

/// Flips each of the first `n_bits` bits of `bytes` (MSB first) with probability `ber`.
///
/// Returns the number of flips.
pub fn flip_bits(bytes: &mut [u8], n_bits: u64, ber: f64, seed: u64) -> Result<u64> {
    check_ber(ber)?;
    if n_bits > bytes.len() as u64 * 8 {
        return Err(Error::InvalidArgument(format!("{n_bits} bits exceed a {}-byte buffer", bytes.len())));
    }
    if ber == 0.0 {
        return Ok(0);
    }
    let mut r = rng::stream(seed, tags::CHANNEL, 0);
    let mut flips = 0;
    for i in 0..n_bits {
        if r.gen_bool(ber) {
            bytes[(i / 8) as usize] ^= 0x80 >> (i % 8);
            flips += 1;
        }
    }
    Ok(flips)
}

/// Returns a corrupted copy of `bits` and the flip count.
pub fn inject_bit_errors(bits: &[u8], ber: f64, seed: u64) -> Result<(Vec<u8>, u64)> {
    let mut out = bits.to_vec();
    let n = out.len() as u64 * 8;
    let flips = flip_bits(&mut out, n, ber, seed)?;
    Ok((out, flips))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub latency_s: f64,
    pub flipped_bits: u64,
}

/// Sends a container: topology arrives intact, parameter bits may flip.
pub fn transmit(container: &Container, profile: &ChannelProfile) -> Result<(Container, LinkReport)> {
    profile.validate()?;
    let mut rx = container.clone();
    let (range, bits) = container.param_section()?;
    let flipped_bits = flip_bits(&mut rx.bytes_mut()[range], bits, profile.ber, profile.seed)?;
    Ok((rx, LinkReport { latency_s: link_latency(container.bit_len(), profile), flipped_bits }))
}

/// Sends a delta container; latency counts only its parameter bits.
pub fn transmit_delta(delta: &DeltaContainer, profile: &ChannelProfile) -> Result<(DeltaContainer, LinkReport)> {
    profile.validate()?;
    let mut rx = delta.clone();
    let (range, bits) = delta.param_section()?;
    let flipped_bits = flip_bits(&mut rx.bytes_mut()[range], bits, profile.ber, profile.seed)?;
    Ok((rx, LinkReport { latency_s: link_latency(bits, profile), flipped_bits }))
}
