//! Attack detection and channel isolation with known per-channel noise
//! bounds.
//!
//! Detection compares every channel with the all-channel mean against
//! `τ_j = ‖ν‖∞ + ‖ν_j‖∞`. Isolation picks a reference channel `j*` from the
//! fusion subset and flags every channel with
//! `|U_{j*} − U_j| > ‖ν_{j*}‖∞ + ‖ν_j‖∞`.
//!
//! Both tests are sufficient conditions only: an attack-free frame with
//! in-bound noise never raises an alarm, but small injections can slip
//! through. Verdicts are for evaluation; they never alter the fused value
//! that drives the controller.

use rand::Rng;

use crate::channel_set::ChannelSet;
use crate::error::{Error, Result};
use crate::fusion::{noise_bound_inf, subset_average};
use crate::rng::StreamRng;
use crate::v2v_link::ChannelModel;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorThresholds {
    pub detection: Vec<f64>,
    pub isolation_base: Vec<f64>,
}

impl MonitorThresholds {
    pub fn from_channels(channels: &[ChannelModel]) -> Self {
        Self {
            detection: detection_thresholds(channels),
            isolation_base: channels.iter().map(|c| c.noise_bound).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorVerdict {
    pub detected: bool,
    /// Diagnostic only; not an isolation result.
    pub flagged_by_detection: ChannelSet,
    pub isolated: ChannelSet,
    pub reference_channel: usize,
}

/// How the isolation reference `j*` is drawn from the fusion subset.
#[derive(Debug, Clone)]
pub enum ReferenceSelector {
    SmallestIndex,
    SeededRandom(Box<StreamRng>),
}

impl ReferenceSelector {
    pub fn seeded(rng: StreamRng) -> Self {
        ReferenceSelector::SeededRandom(Box::new(rng))
    }

    fn pick(&mut self, sigma: ChannelSet) -> Result<usize> {
        let first = sigma.first().ok_or(Error::EmptySubset)?;
        Ok(match self {
            ReferenceSelector::SmallestIndex => first,
            ReferenceSelector::SeededRandom(rng) => {
                let nth = rng.random_range(0..sigma.len());
                sigma.iter().nth(nth).expect("index below cardinality")
            }
        })
    }
}

/// Floating-point allowance for residuals of `ops` roundings on values of
/// magnitude `scale`, so noise sitting exactly on its bound never alarms.
fn rounding_slack(ops: usize, scale: f64) -> f64 {
    2.0 * ops as f64 * f64::EPSILON * scale
}

/// `τ_j = ‖ν‖∞ + ‖ν_j‖∞` for every channel.
pub fn detection_thresholds(channels: &[ChannelModel]) -> Vec<f64> {
    let inf = noise_bound_inf(channels);
    channels.iter().map(|c| inf + c.noise_bound).collect()
}

/// Flags every channel whose distance from the all-channel mean exceeds its
/// threshold; an attack is detected when any channel is flagged.
pub fn detect(values: &[f64], thresholds: &[f64]) -> Result<(bool, ChannelSet)> {
    if values.len() != thresholds.len() {
        return Err(Error::Dimension(format!(
            "{} thresholds for {} channels",
            thresholds.len(),
            values.len()
        )));
    }
    if values.is_empty() {
        return Ok((false, ChannelSet::EMPTY));
    }
    let mean = subset_average(values, ChannelSet::all(values.len()))?;
    let scale = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let slack = rounding_slack(values.len() + 2, scale);
    let mut flagged = ChannelSet::EMPTY;
    for (j, (u, tau)) in values.iter().zip(thresholds).enumerate() {
        if (mean - u).abs() > *tau + slack {
            flagged.insert(j);
        }
    }
    Ok((!flagged.is_empty(), flagged))
}

/// Isolates channels that disagree with the reference channel by more than
/// the two channels' combined noise bounds. Returns `(isolated, j*)`.
pub fn isolate(
    values: &[f64],
    sigma: ChannelSet,
    channels: &[ChannelModel],
    selector: &mut ReferenceSelector,
) -> Result<(ChannelSet, usize)> {
    if values.len() != channels.len() {
        return Err(Error::Dimension(format!(
            "{} channel models for {} received values",
            channels.len(),
            values.len()
        )));
    }
    if sigma.upper_bound() > values.len() {
        return Err(Error::Dimension(format!(
            "subset {sigma} references channels beyond the {} received",
            values.len()
        )));
    }
    let reference = selector.pick(sigma)?;
    let u_ref = values[reference];
    let b_ref = channels[reference].noise_bound;
    let mut isolated = ChannelSet::EMPTY;
    for (j, (u, ch)) in values.iter().zip(channels).enumerate() {
        let slack = rounding_slack(2, u_ref.abs().max(u.abs()));
        if (u_ref - u).abs() > b_ref + ch.noise_bound + slack {
            isolated.insert(j);
        }
    }
    Ok((isolated, reference))
}

/// Runs detection and isolation on one frame.
pub fn monitor(
    values: &[f64],
    sigma: ChannelSet,
    channels: &[ChannelModel],
    thresholds: &MonitorThresholds,
    selector: &mut ReferenceSelector,
) -> Result<MonitorVerdict> {
    let (detected, flagged_by_detection) = detect(values, &thresholds.detection)?;
    let (isolated, reference_channel) = isolate(values, sigma, channels, selector)?;
    Ok(MonitorVerdict {
        detected,
        flagged_by_detection,
        isolated,
        reference_channel,
    })
}
