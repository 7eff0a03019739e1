//! Exogenous arrival laws and the seeded sampler that draws from them.
//!
//! Each `(switch, commodity)` source owns a ChaCha8 substream selected by a
//! stream id derived from the two ids, so a source's sequence depends only on
//! the master seed and its own identity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CommodityId, SwitchId};

/// Integer per-slot arrival distribution with bounded support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalLaw {
    /// Exactly `value` packets every slot.
    Constant { value: u64 },
    /// Uniform over the integers `lo..=hi`.
    Uniform { lo: u64, hi: u64 },
    /// `scale` packets with probability `p`, otherwise none.
    Bernoulli { p: f64, scale: u64 },
}

impl ArrivalLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            ArrivalLaw::Constant { value } => value as f64,
            ArrivalLaw::Uniform { lo, hi } => (lo + hi) as f64 / 2.0,
            ArrivalLaw::Bernoulli { p, scale } => p * scale as f64,
        }
    }

    /// Largest value the law can produce.
    pub fn max(&self) -> u64 {
        match *self {
            ArrivalLaw::Constant { value } => value,
            ArrivalLaw::Uniform { hi, .. } => hi,
            ArrivalLaw::Bernoulli { scale, .. } => scale,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match *self {
            ArrivalLaw::Uniform { lo, hi } if lo > hi => Err(format!("uniform lo {lo} > hi {hi}")),
            ArrivalLaw::Bernoulli { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(format!("bernoulli p {p} outside [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        match *self {
            ArrivalLaw::Constant { value } => value,
            ArrivalLaw::Uniform { lo, hi } => rng.gen_range(lo..=hi),
            ArrivalLaw::Bernoulli { p, scale } => {
                if rng.gen_bool(p) {
                    scale
                } else {
                    0
                }
            }
        }
    }
}

/// Arrival laws per source plus a global thinning factor used by load sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSpec {
    pub sources: BTreeMap<(SwitchId, CommodityId), ArrivalLaw>,
    /// Each sampled packet is kept independently with this probability.
    pub scale: f64,
}

impl Default for ArrivalSpec {
    fn default() -> Self {
        ArrivalSpec {
            sources: BTreeMap::new(),
            scale: 1.0,
        }
    }
}

impl ArrivalSpec {
    pub fn max_support(&self) -> u64 {
        self.sources.values().map(ArrivalLaw::max).max().unwrap_or(0)
    }

    pub fn mean(&self, switch: SwitchId, commodity: CommodityId) -> f64 {
        self.sources
            .get(&(switch, commodity))
            .map(|l| l.mean() * self.scale)
            .unwrap_or(0.0)
    }
}

fn stream_id(switch: SwitchId, commodity: CommodityId) -> u64 {
    ((switch.0 as u64) << 32) | commodity.0 as u64
}

/// Seeded per-source sampler.
#[derive(Debug, Clone)]
pub struct ArrivalSampler {
    keys: Vec<(SwitchId, CommodityId)>,
    laws: Vec<ArrivalLaw>,
    rngs: Vec<ChaCha8Rng>,
    scale: f64,
}

impl ArrivalSampler {
    pub fn new(spec: &ArrivalSpec, seed: u64) -> Self {
        let mut keys = Vec::new();
        let mut laws = Vec::new();
        let mut rngs = Vec::new();
        for (&(i, d), law) in &spec.sources {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_id(i, d));
            keys.push((i, d));
            laws.push(*law);
            rngs.push(rng);
        }
        ArrivalSampler {
            keys,
            laws,
            rngs,
            scale: spec.scale,
        }
    }

    /// Sources in the order used by [`ArrivalSampler::sample_into`].
    pub fn keys(&self) -> &[(SwitchId, CommodityId)] {
        &self.keys
    }

    /// Draws one slot of arrivals; `out[n]` belongs to `keys()[n]`.
    pub fn sample_into(&mut self, out: &mut [u64]) {
        let thin = self.scale < 1.0;
        for ((law, rng), slot) in self.laws.iter().zip(self.rngs.iter_mut()).zip(out.iter_mut()) {
            let raw = law.sample(rng);
            *slot = if thin {
                (0..raw).filter(|_| rng.gen_bool(self.scale)).count() as u64
            } else {
                raw
            };
        }
    }

    pub fn sample(&mut self) -> BTreeMap<(SwitchId, CommodityId), u64> {
        let mut buf = vec![0; self.keys.len()];
        self.sample_into(&mut buf);
        self.keys.iter().copied().zip(buf).collect()
    }
}
