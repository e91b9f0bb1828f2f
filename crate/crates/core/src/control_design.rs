//! Gain checks, the H-infinity performance plant of a follower, and
//! string-stability measurements.
//!
//! Gains are inputs, not synthesized here. The performance plant maps the
//! disturbance vector `[ω_d, v_{i−1} + ω_v, û_{i−1}]` to `z = [e, v]`; its
//! H-infinity norm is the worst-case L2 amplification of sensor noise,
//! predecessor motion and fusion error into tracking error and velocity.

use crate::error::{Error, Result};
use crate::numerics::{hinf_norm, is_hurwitz, Matrix, StateSpacePlant};
use crate::platoon_model::{build_follower, ControllerGains, VehicleParams};

/// `kp > 0`, `kd > 0` and `kd > kp·tau`.
pub fn validate_gains(gains: &ControllerGains, tau: f64) -> bool {
    gains.is_valid_for(tau)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformancePlant {
    pub plant: StateSpacePlant,
}

/// `z = [e, v]`.
pub fn performance_output() -> Matrix {
    Matrix::from_rows(&[[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
}

pub fn performance_plant(params: &VehicleParams, gains: &ControllerGains) -> Result<PerformancePlant> {
    let (a, b) = build_follower(params, gains)?;
    let c = performance_output();
    let d = Matrix::zeros(2, 3);
    Ok(PerformancePlant {
        plant: StateSpacePlant::new(a, b, c, d)?,
    })
}

/// H-infinity norm from `[ω_d, v_{i−1} + ω_v, û_{i−1}]` to `[e, v]`.
pub fn closed_loop_hinf(params: &VehicleParams, gains: &ControllerGains, tol: f64) -> Result<f64> {
    let pp = performance_plant(params, gains)?;
    if !is_hurwitz(pp.plant.a())? {
        return Err(Error::NotHurwitz {
            abscissa: crate::numerics::spectral_abscissa(pp.plant.a())?,
        });
    }
    hinf_norm(&pp.plant, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    SpacingError,
    Velocity,
    Acceleration,
}

impl SignalKind {
    pub fn name(self) -> &'static str {
        match self {
            SignalKind::SpacingError => "e",
            SignalKind::Velocity => "v",
            SignalKind::Acceleration => "a",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalNorm {
    L2,
    LInf,
}

impl SignalNorm {
    pub fn name(self) -> &'static str {
        match self {
            SignalNorm::L2 => "l2",
            SignalNorm::LInf => "linf",
        }
    }

    /// Sampled norm: `sqrt(Ts·Σ z²)` or `max |z|`.
    pub fn eval(self, samples: &[f64], ts: f64) -> f64 {
        match self {
            SignalNorm::L2 => (ts * samples.iter().map(|z| z * z).sum::<f64>()).sqrt(),
            SignalNorm::LInf => samples.iter().fold(0.0, |m, z| m.max(z.abs())),
        }
    }
}

/// Default tolerance on the norm ratio for noisy runs.
pub const DEFAULT_STRING_STABILITY_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct StringStabilityReport {
    /// One norm per vehicle, in platoon order.
    pub per_vehicle_norms: Vec<f64>,
    pub monotone: bool,
    /// `max_{i≥2} ‖z_i‖ / ‖z_{i−1}‖`, with `0/0 = 0`.
    pub worst_ratio: f64,
}

/// Checks that the signal norm does not grow from one vehicle to the next.
///
/// `traces[i]` is the sampled signal of the `i`-th vehicle in platoon
/// order; all traces must share length and sampling period. The platoon is
/// reported monotone when `worst_ratio ≤ 1 + slack`.
pub fn string_stability_check(
    traces: &[Vec<f64>],
    ts: f64,
    norm: SignalNorm,
    slack: f64,
) -> Result<StringStabilityReport> {
    if let Some(first) = traces.first() {
        if let Some(bad) = traces.iter().position(|t| t.len() != first.len()) {
            return Err(Error::Dimension(format!(
                "trace {bad} has {} samples, trace 0 has {}",
                traces[bad].len(),
                first.len()
            )));
        }
    }
    if !(ts > 0.0) {
        return Err(Error::Domain(format!("sampling period must be positive, got {ts}")));
    }
    if !(slack >= 0.0) {
        return Err(Error::Domain(format!("slack must be non-negative, got {slack}")));
    }
    let norms: Vec<f64> = traces.iter().map(|t| norm.eval(t, ts)).collect();
    let worst_ratio = norms
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (_, 0.0) => 0.0,
            (0.0, _) => f64::INFINITY,
            (a, b) => b / a,
        })
        .fold(0.0, f64::max);
    Ok(StringStabilityReport {
        per_vehicle_norms: norms,
        monotone: worst_ratio <= 1.0 + slack,
        worst_ratio,
    })
}
