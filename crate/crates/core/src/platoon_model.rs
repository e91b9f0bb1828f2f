//! Continuous-time vehicle models, their exact discretization and the
//! discrete state update.
//!
//! Each vehicle carries the state `[e, v, a, u]`: spacing error, velocity,
//! acceleration and the dynamic controller state (desired acceleration).
//! The closed-loop follower takes three inputs, in this order:
//!
//! 1. the distance-sensor noise `ω_d`,
//! 2. the measured predecessor velocity `v_{i−1} + ω_v`,
//! 3. the fed-forward predecessor command `û_{i−1}`.
//!
//! Setting the two noise terms to zero recovers the noise-free platoon
//! model, so only the three-input form is built here.
//!
//! The open-loop matrix used for controller synthesis in the H-infinity
//! reformulation has a different sign/placement pattern in its first two
//! rows than this closed-loop form. That open-loop form is not reproduced;
//! the closed-loop matrices below are the ones simulated and analysed.

use crate::error::{Error, Result};
use crate::numerics::{zoh_discretize, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    /// Headway time constant (s).
    pub h: f64,
    /// Driveline time constant (s).
    pub tau: f64,
    /// Standstill distance (m).
    pub r: f64,
    /// Vehicle length (m).
    pub length: f64,
}

impl VehicleParams {
    pub fn new(h: f64, tau: f64) -> Result<Self> {
        let p = Self {
            h,
            tau,
            r: 0.0,
            length: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "headway h must be positive, got {}",
                self.h
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "driveline constant tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "vehicle length must be non-negative, got {}",
                self.length
            )));
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidParameter("standstill distance must be finite".into()));
        }
        Ok(())
    }
}

/// Spacing-error state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub e: f64,
    pub v: f64,
    pub a: f64,
    pub u: f64,
}

impl VehicleState {
    pub const ZERO: Self = Self {
        e: 0.0,
        v: 0.0,
        a: 0.0,
        u: 0.0,
    };

    /// Equilibrium cruising at velocity `v`.
    pub fn cruising(v: f64) -> Self {
        Self { v, ..Self::ZERO }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.e, self.v, self.a, self.u]
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match *x {
            [e, v, a, u] => Ok(Self { e, v, a, u }),
            _ => Err(Error::Dimension(format!(
                "vehicle state has 4 entries, got {}",
                x.len()
            ))),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// PD gains of the dynamic controller (the jerk gain is fixed at zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub kp: f64,
    pub kd: f64,
}

impl ControllerGains {
    pub const fn new(kp: f64, kd: f64) -> Self {
        Self { kp, kd }
    }

    /// `kp > 0`, `kd > 0` and `kd > kp·tau`.
    pub fn is_valid_for(&self, tau: f64) -> bool {
        self.kp > 0.0 && self.kd > 0.0 && self.kd > self.kp * tau
    }

    pub fn check(&self, tau: f64) -> Result<()> {
        if self.is_valid_for(tau) {
            Ok(())
        } else {
            Err(Error::InvalidGains {
                kp: self.kp,
                kd: self.kd,
                tau,
            })
        }
    }
}

/// Zero-order-hold equivalent `x(k+1) = Ad x(k) + Bd ε(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePlant {
    ad: Matrix,
    bd: Matrix,
    ts: f64,
}

impl DiscretePlant {
    pub fn from_continuous(ac: &Matrix, bc: &Matrix, ts: f64) -> Result<Self> {
        if ac.shape() != (4, 4) {
            return Err(Error::Dimension(format!(
                "vehicle model has 4 states, got {}x{} system matrix",
                ac.rows(),
                ac.cols()
            )));
        }
        let (ad, bd) = zoh_discretize(ac, bc, ts)?;
        Ok(Self { ad, bd, ts })
    }

    pub fn ad(&self) -> &Matrix {
        &self.ad
    }

    pub fn bd(&self) -> &Matrix {
        &self.bd
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn input_count(&self) -> usize {
        self.bd.cols()
    }

    pub fn step(&self, state: &VehicleState, input: &[f64]) -> Result<VehicleState> {
        if input.len() != self.bd.cols() {
            return Err(Error::Dimension(format!(
                "plant takes {} inputs, got {}",
                self.bd.cols(),
                input.len()
            )));
        }
        let x = state.to_array();
        let mut next = [0.0; 4];
        for (i, out) in next.iter_mut().enumerate() {
            let ax: f64 = self.ad.row(i).iter().zip(&x).map(|(a, b)| a * b).sum();
            let bu: f64 = self.bd.row(i).iter().zip(input).map(|(a, b)| a * b).sum();
            *out = ax + bu;
        }
        VehicleState::from_slice(&next)
    }
}

/// Closed-loop follower matrices `(A_c, B̃)` with inputs
/// `[ω_d, v_{i−1} + ω_v, û_{i−1}]`.
pub fn build_follower(params: &VehicleParams, gains: &ControllerGains) -> Result<(Matrix, Matrix)> {
    params.validate()?;
    gains.check(params.tau)?;
    let VehicleParams { h, tau, .. } = *params;
    let ControllerGains { kp, kd } = *gains;
    let ac = Matrix::from_rows(&[
        [0.0, -1.0, -h, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0 / tau, 1.0 / tau],
        [kp / h, -kd / h, -kd, -1.0 / h],
    ]);
    let bc = Matrix::from_rows(&[
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [kp / h, kd / h, 1.0 / h],
    ]);
    Ok((ac, bc))
}

/// Virtual reference vehicle driven by the desired leader acceleration.
/// Its spacing error has no dynamics, so `A_c0` is singular.
pub fn build_leader(params: &VehicleParams) -> Result<(Matrix, Matrix)> {
    params.validate()?;
    let VehicleParams { h, tau, .. } = *params;
    let ac = Matrix::from_rows(&[
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0 / tau, 1.0 / tau],
        [0.0, 0.0, 0.0, -1.0 / h],
    ]);
    let bc = Matrix::column(&[0.0, 0.0, 0.0, 1.0 / h]);
    Ok((ac, bc))
}

pub fn discretize_follower(
    params: &VehicleParams,
    gains: &ControllerGains,
    ts: f64,
) -> Result<DiscretePlant> {
    let (ac, bc) = build_follower(params, gains)?;
    DiscretePlant::from_continuous(&ac, &bc, ts)
}

pub fn discretize_leader(params: &VehicleParams, ts: f64) -> Result<DiscretePlant> {
    let (ac, bc) = build_leader(params)?;
    DiscretePlant::from_continuous(&ac, &bc, ts)
}

/// Constant-headway spacing policy `r + h·v`. Negative velocities are not
/// clamped.
pub fn desired_distance(params: &VehicleParams, v: f64) -> f64 {
    params.r + params.h * v
}
