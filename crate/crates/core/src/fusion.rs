//! Subset-averaging reconstruction of a command received over redundant,
//! partially compromised channels.
//!
//! Every subset `J` of `N − q` channels is scored by its spread, the largest
//! deviation of a member from the subset mean. The least-spread subset `σ`
//! wins and its mean is the fused command. When fewer than `N/2` channels
//! are attacked, `σ` always contains at least one clean channel and the
//! fused value is within `3‖ν‖∞` of the true command.
//!
//! The reconstruction error `û − u` is always called the *fusion error*
//! here, to keep it apart from the vehicle spacing error `e`.

use crate::channel_set::{combinations, ChannelSet, MAX_CHANNELS};
use crate::error::{Error, Result};
use crate::v2v_link::ChannelModel;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub u_hat: f64,
    /// Selected subset, of cardinality `N − q`.
    pub sigma: ChannelSet,
    /// Spread of the selected subset.
    pub pi_sigma: f64,
    /// `3‖ν‖∞` when the channel bounds are known; a reported certificate,
    /// never used to clip `u_hat`.
    pub error_bound: Option<f64>,
}

fn check_subset(values: &[f64], subset: ChannelSet) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if subset.upper_bound() > values.len() {
        return Err(Error::Dimension(format!(
            "subset {subset} references channels beyond the {} received",
            values.len()
        )));
    }
    Ok(())
}

/// Mean of the received values over `subset`.
pub fn subset_average(values: &[f64], subset: ChannelSet) -> Result<f64> {
    check_subset(values, subset)?;
    Ok(mean_unchecked(values, subset))
}

/// Largest `|mean_J − U_j|` over `j ∈ J`.
pub fn subset_spread(values: &[f64], subset: ChannelSet) -> Result<f64> {
    check_subset(values, subset)?;
    Ok(spread_unchecked(values, subset, mean_unchecked(values, subset)))
}

// Shifted by the first member so that identical values average exactly.
fn mean_unchecked(values: &[f64], subset: ChannelSet) -> f64 {
    let Some(first) = subset.first() else {
        return f64::NAN;
    };
    let pivot = values[first];
    pivot + subset.iter().map(|j| values[j] - pivot).sum::<f64>() / subset.len() as f64
}

fn spread_unchecked(values: &[f64], subset: ChannelSet, mean: f64) -> f64 {
    subset
        .iter()
        .map(|j| (mean - values[j]).abs())
        .fold(0.0, f64::max)
}

/// `true` iff a command sent over `n` channels can be uniquely recovered
/// when up to `q` of them are attacked, i.e. `2q < n`.
pub fn is_reconstructible(n: usize, q: usize) -> bool {
    2 * q < n
}

/// `‖ν‖∞`: the largest per-channel noise bound (0 for an empty link).
pub fn noise_bound_inf(channels: &[ChannelModel]) -> f64 {
    channels.iter().map(|c| c.noise_bound).fold(0.0, f64::max)
}

/// Fuses the received values assuming at most `q` attacked channels.
///
/// Refuses budgets with `2q ≥ N`, where no algorithm can recover the
/// command.
pub fn fuse(values: &[f64], q: usize) -> Result<FusionOutcome> {
    if !is_reconstructible(values.len(), q) {
        return Err(Error::NotReconstructible {
            n: values.len(),
            q,
        });
    }
    fuse_unchecked(values, q)
}

/// [`fuse`] with the `3‖ν‖∞` certificate attached.
pub fn fuse_with_bounds(values: &[f64], q: usize, channels: &[ChannelModel]) -> Result<FusionOutcome> {
    if channels.len() != values.len() {
        return Err(Error::Dimension(format!(
            "{} channel models for {} received values",
            channels.len(),
            values.len()
        )));
    }
    let mut out = fuse(values, q)?;
    out.error_bound = Some(3.0 * noise_bound_inf(channels));
    Ok(out)
}

/// The least-spread search without the reconstructibility check, for
/// falsification experiments with `2q ≥ N`. Still requires `q < N`.
///
/// Subsets are visited in lexicographic order and only a strictly smaller
/// spread replaces the incumbent, so ties go to the lexicographically
/// smallest subset.
pub fn fuse_unchecked(values: &[f64], q: usize) -> Result<FusionOutcome> {
    let n = values.len();
    if n == 0 || n > MAX_CHANNELS {
        return Err(Error::Dimension(format!("cannot fuse {n} channels")));
    }
    if q >= n {
        return Err(Error::NotReconstructible { n, q });
    }
    let mut best: Option<(f64, ChannelSet, f64)> = None;
    for subset in combinations(n, n - q) {
        let mean = mean_unchecked(values, subset);
        let spread = spread_unchecked(values, subset, mean);
        if best.is_none_or(|(s, _, _)| spread < s) {
            best = Some((spread, subset, mean));
        }
    }
    let (pi_sigma, sigma, u_hat) = best.expect("at least one subset");
    Ok(FusionOutcome {
        u_hat,
        sigma,
        pi_sigma,
        error_bound: None,
    })
}
