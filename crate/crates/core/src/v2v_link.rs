//! Redundant V2V channels between consecutive vehicles.
//!
//! A transmitted command `u` arrives on each of the `N` channels as
//! `U_j = u + ν_j + η_j`: `ν_j` is bounded channel noise (it absorbs delays,
//! dropouts and quantization), `η_j` is an attacker injection that is only
//! non-zero on the currently compromised set.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::channel_set::{ChannelSet, MAX_CHANNELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDistribution {
    /// `U(−b, b)`.
    Uniform,
    /// Zero-mean Gaussian with the given standard deviation, resampled until
    /// it lands in `[−b, b]`.
    TruncatedGaussian { std: f64 },
    /// No noise at all.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub noise_bound: f64,
    pub distribution: NoiseDistribution,
}

impl ChannelModel {
    pub fn uniform(bound: f64) -> Self {
        Self {
            noise_bound: bound,
            distribution: NoiseDistribution::Uniform,
        }
    }

    pub fn noiseless() -> Self {
        Self {
            noise_bound: 0.0,
            distribution: NoiseDistribution::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_bound >= 0.0 && self.noise_bound.is_finite()) {
            return Err(Error::Config(format!(
                "channel noise bound must be finite and non-negative, got {}",
                self.noise_bound
            )));
        }
        if let NoiseDistribution::TruncatedGaussian { std } = self.distribution {
            if !(std > 0.0 && std.is_finite()) {
                return Err(Error::Config(format!(
                    "truncated gaussian std must be positive, got {std}"
                )));
            }
        }
        Ok(())
    }

    /// Draws one noise sample; always within `[−noise_bound, noise_bound]`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let b = self.noise_bound;
        if b == 0.0 {
            return 0.0;
        }
        match self.distribution {
            NoiseDistribution::Zero => 0.0,
            NoiseDistribution::Uniform => rng.random_range(-b..=b),
            NoiseDistribution::TruncatedGaussian { std } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let x = z * std;
                if x.abs() <= b {
                    break x;
                }
            },
        }
    }
}

/// Distribution of injected attack magnitudes. Not truncated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MagnitudeDistribution {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    Constant(f64),
}

impl Default for MagnitudeDistribution {
    fn default() -> Self {
        MagnitudeDistribution::Gaussian {
            mean: 0.0,
            std: 5.0,
        }
    }
}

impl MagnitudeDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MagnitudeDistribution::Gaussian { mean, std } => {
                if !(mean.is_finite() && std >= 0.0 && std.is_finite()) {
                    return Err(Error::Config(format!(
                        "attack gaussian needs finite mean and std >= 0, got mean={mean}, std={std}"
                    )));
                }
            }
            MagnitudeDistribution::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::Config(format!(
                        "attack uniform range [{low}, {high}] is invalid"
                    )));
                }
            }
            MagnitudeDistribution::Constant(c) => {
                if !c.is_finite() {
                    return Err(Error::Config("attack constant must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MagnitudeDistribution::Gaussian { mean, std } => {
                if std == 0.0 {
                    mean
                } else {
                    Normal::new(mean, std).expect("validated").sample(rng)
                }
            }
            MagnitudeDistribution::Uniform { low, high } => {
                if low == high {
                    low
                } else {
                    rng.random_range(low..high)
                }
            }
            MagnitudeDistribution::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    None,
    /// One channel, chosen uniformly at random every step.
    RandomSingleChannel,
    /// The same channel set every step.
    FixedSet(ChannelSet),
    /// `q` consecutive channels (cyclically) starting at `k mod N`.
    RoundRobin,
    /// The non-identifiability construction against a shadow command
    /// `u + offset`; compromises `q ≥ N/2` channels.
    Ambiguity { offset: f64 },
    /// Explicit per-step sets; steps not listed are attack-free.
    CustomSchedule(BTreeMap<usize, ChannelSet>),
}

impl AttackKind {
    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::RandomSingleChannel => "random_single_channel",
            AttackKind::FixedSet(_) => "fixed_set",
            AttackKind::RoundRobin => "round_robin",
            AttackKind::Ambiguity { .. } => "ambiguity",
            AttackKind::CustomSchedule(_) => "custom_schedule",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackPolicy {
    pub kind: AttackKind,
    /// Maximum number of simultaneously compromised channels.
    pub q: usize,
    pub magnitude: MagnitudeDistribution,
}

impl AttackPolicy {
    pub fn none(q: usize) -> Self {
        Self {
            kind: AttackKind::None,
            q,
            magnitude: MagnitudeDistribution::default(),
        }
    }

    pub fn random_single_channel(magnitude: MagnitudeDistribution) -> Self {
        Self {
            kind: AttackKind::RandomSingleChannel,
            q: 1,
            magnitude,
        }
    }

    /// Checks the policy against a link of `n` channels.
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.q > n {
            return Err(Error::Config(format!(
                "attack budget q={} exceeds the {n} available channels",
                self.q
            )));
        }
        self.magnitude.validate()?;
        let all = ChannelSet::all(n);
        match &self.kind {
            AttackKind::None => {}
            AttackKind::RandomSingleChannel => {
                if self.q < 1 {
                    return Err(Error::Config(
                        "random_single_channel attacks need q >= 1".into(),
                    ));
                }
            }
            AttackKind::FixedSet(set) => {
                if !set.is_subset_of(all) {
                    return Err(Error::Config(format!(
                        "fixed attack set {set} references channels beyond {n}"
                    )));
                }
                if set.len() > self.q {
                    return Err(Error::Config(format!(
                        "fixed attack set {set} has more than q={} channels",
                        self.q
                    )));
                }
            }
            AttackKind::RoundRobin => {}
            AttackKind::Ambiguity { offset } => {
                if 2 * self.q < n {
                    return Err(Error::Config(format!(
                        "ambiguity attacks need q >= N/2, got q={} with N={n}",
                        self.q
                    )));
                }
                if !offset.is_finite() {
                    return Err(Error::Config("ambiguity offset must be finite".into()));
                }
            }
            AttackKind::CustomSchedule(schedule) => {
                for (k, set) in schedule {
                    if !set.is_subset_of(all) {
                        return Err(Error::Config(format!(
                            "scheduled attack set {set} at step {k} references channels beyond {n}"
                        )));
                    }
                    if set.len() > self.q {
                        return Err(Error::Config(format!(
                            "scheduled attack set {set} at step {k} has more than q={} channels",
                            self.q
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The `N` received copies of one transmitted command.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFrame {
    pub values: Vec<f64>,
    /// Ground-truth compromised channels; evaluation only.
    pub true_attack_support: ChannelSet,
    /// Ground-truth transmitted command; evaluation only.
    pub true_command: f64,
}

impl ChannelFrame {
    pub fn channel_count(&self) -> usize {
        self.values.len()
    }
}

/// Sends `u` over the link's channels at step `k`.
///
/// The draw order per call is fixed (noise for every channel in index
/// order, then the attack set, then one magnitude per attacked channel in
/// index order) so equal seeds give bit-identical frames.
pub fn transmit<R: Rng + ?Sized>(
    u: f64,
    channels: &[ChannelModel],
    policy: &AttackPolicy,
    k: usize,
    rng: &mut R,
) -> Result<ChannelFrame> {
    let n = channels.len();
    if n == 0 || n > MAX_CHANNELS {
        return Err(Error::Config(format!(
            "a link needs between 1 and {MAX_CHANNELS} channels, got {n}"
        )));
    }
    policy.validate(n)?;

    let noise: Vec<f64> = channels.iter().map(|c| c.sample_noise(rng)).collect();

    if let AttackKind::Ambiguity { offset } = policy.kind {
        let q = policy.q;
        let w = ChannelSet::from_indices(0..q)?;
        let w_bar = ChannelSet::from_indices(n - q..n)?;
        let (frame, _) = ambiguity_attack_pair(u, u + offset, n, q, w, w_bar, &noise)?;
        return Ok(frame);
    }

    let support = match &policy.kind {
        AttackKind::None => ChannelSet::EMPTY,
        AttackKind::RandomSingleChannel => ChannelSet::singleton(rng.random_range(0..n)),
        AttackKind::FixedSet(set) => *set,
        AttackKind::RoundRobin => {
            ChannelSet::from_indices((0..policy.q).map(|t| (k + t) % n))?
        }
        AttackKind::CustomSchedule(schedule) => {
            schedule.get(&k).copied().unwrap_or(ChannelSet::EMPTY)
        }
        AttackKind::Ambiguity { .. } => unreachable!(),
    };

    let mut values: Vec<f64> = noise.iter().map(|nu| u + nu).collect();
    for j in support.iter() {
        values[j] += policy.magnitude.sample(rng);
    }
    Ok(ChannelFrame {
        values,
        true_attack_support: support,
        true_command: u,
    })
}

/// Builds two frames for different commands `u ≠ ū` that are received
/// identically when `q ≥ N/2`.
///
/// With `I = W ∩ W̄`, channels in `W̄∖I` carry `u + ν` (clean for `u`,
/// injected `u − ū` for `ū`), channels in `W∖I` carry `ū + ν`, and channels
/// in `I` carry `u + ū + ν`. Both frames share the same value vector, so
/// they are identical bit for bit.
pub fn ambiguity_attack_pair(
    u: f64,
    u_bar: f64,
    n: usize,
    q: usize,
    w: ChannelSet,
    w_bar: ChannelSet,
    noise: &[f64],
) -> Result<(ChannelFrame, ChannelFrame)> {
    if n == 0 || n > MAX_CHANNELS {
        return Err(Error::Config(format!("invalid channel count {n}")));
    }
    if 2 * q < n {
        return Err(Error::Config(format!(
            "ambiguity construction needs q >= N/2, got q={q}, N={n}"
        )));
    }
    if w.len() != q || w_bar.len() != q {
        return Err(Error::Config(format!(
            "attack sets must both have q={q} channels, got {} and {}",
            w.len(),
            w_bar.len()
        )));
    }
    if w.union(w_bar) != ChannelSet::all(n) {
        return Err(Error::Config(format!(
            "attack sets {w} and {w_bar} must cover all {n} channels"
        )));
    }
    if noise.len() != n {
        return Err(Error::Dimension(format!(
            "{} noise samples for {n} channels",
            noise.len()
        )));
    }
    let shared = w.intersection(w_bar);
    let values: Vec<f64> = (0..n)
        .map(|j| {
            if shared.contains(j) {
                u + u_bar + noise[j]
            } else if w_bar.contains(j) {
                u + noise[j]
            } else {
                u_bar + noise[j]
            }
        })
        .collect();
    let frame = ChannelFrame {
        values: values.clone(),
        true_attack_support: w,
        true_command: u,
    };
    let frame_bar = ChannelFrame {
        values,
        true_attack_support: w_bar,
        true_command: u_bar,
    };
    Ok((frame, frame_bar))
}
