//! Closed-loop platoon simulation and scenario metrics.
//!
//! Vehicle 0 is the virtual reference vehicle driven by the desired leader
//! acceleration `ε_0`. Vehicles `1..=m` are followers. Follower `i` measures
//! its spacing and its predecessor's velocity with on-board sensors and
//! receives the predecessor's command `u_{i−1}` either directly or over a
//! redundant, possibly attacked link.

use crate::attack_monitor::{monitor, MonitorThresholds, MonitorVerdict, ReferenceSelector};
use crate::channel_set::ChannelSet;
use crate::control_design::{
    string_stability_check, SignalKind, SignalNorm, StringStabilityReport,
    DEFAULT_STRING_STABILITY_SLACK,
};
use crate::error::{Error, Result};
use crate::fusion::{fuse_unchecked, is_reconstructible, noise_bound_inf, FusionOutcome};
use crate::platoon_model::{
    discretize_follower, discretize_leader, ControllerGains, DiscretePlant, VehicleParams,
    VehicleState,
};
use crate::rng::{stream_rng, StreamPurpose, StreamRng};
use crate::v2v_link::{transmit, AttackPolicy, ChannelModel};
use rand::Rng;

/// Default bound on the state ∞-norm used as the boundedness witness.
pub const DEFAULT_ISS_CEILING: f64 = 1e4;

/// Boundary snapping tolerance for profile lookups, in seconds.
const PROFILE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSegment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// Piecewise-constant desired leader acceleration over `[start, end)`
/// intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeaderProfile {
    segments: Vec<ProfileSegment>,
}

impl LeaderProfile {
    pub fn new(segments: Vec<ProfileSegment>) -> Result<Self> {
        for (n, s) in segments.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.value.is_finite()) {
                return Err(Error::Config(format!("profile row {} is not finite", n + 1)));
            }
            if s.start >= s.end {
                return Err(Error::Config(format!(
                    "profile row {} has start {} >= end {}",
                    n + 1,
                    s.start,
                    s.end
                )));
            }
            if n > 0 && s.start < segments[n - 1].end {
                return Err(Error::Config(format!(
                    "profile row {} overlaps or precedes row {}",
                    n + 1,
                    n
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Hard braking and coasting in 5 s phases over 20 s.
    pub fn table1() -> Self {
        let seg = |start, end, value| ProfileSegment { start, end, value };
        Self {
            segments: vec![
                seg(0.0, 5.0, -10.0),
                seg(5.0, 10.0, 0.0),
                seg(10.0, 15.0, -10.0),
                seg(15.0, 20.0, 0.0),
            ],
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[ProfileSegment] {
        &self.segments
    }

    /// Value at time `t`. Gaps and times past the table hold the last
    /// segment started; times before the first segment give 0.
    pub fn value(&self, t: f64) -> f64 {
        let mut out = 0.0;
        for s in &self.segments {
            if t + PROFILE_EPS < s.start {
                break;
            }
            out = s.value;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReferenceRule {
    #[default]
    SmallestIndex,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub channels: Vec<ChannelModel>,
    pub policy: AttackPolicy,
    pub reference: ReferenceRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleConfig {
    pub params: VehicleParams,
    pub gains: ControllerGains,
    /// Bound of the uniform distance-sensor noise `ω_d`.
    pub sensor_noise_d: f64,
    /// Bound of the uniform velocity-sensor noise `ω_v`.
    pub sensor_noise_v: f64,
    /// `None` receives the predecessor's command exactly.
    pub link: Option<LinkConfig>,
}

/// Inclusive range of step indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepWindow {
    pub first: usize,
    pub last: usize,
}

impl StepWindow {
    pub fn contains(&self, k: usize) -> bool {
        self.first <= k && k <= self.last
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    /// Parameters of the virtual reference vehicle.
    pub leader: VehicleParams,
    pub vehicles: Vec<VehicleConfig>,
    pub ts: f64,
    pub horizon: f64,
    pub profile: LeaderProfile,
    pub master_seed: u64,
    pub initial_velocity: f64,
    /// Allows links with `2q ≥ N`.
    pub falsification: bool,
    pub detection_window: Option<StepWindow>,
    pub isolation_window: Option<StepWindow>,
    pub string_stability_slack: f64,
    pub iss_ceiling: f64,
}

impl ScenarioConfig {
    /// A scenario with no vehicles and default settings.
    pub fn new(name: impl Into<String>, leader: VehicleParams, ts: f64, horizon: f64) -> Self {
        Self {
            name: name.into(),
            leader,
            vehicles: Vec::new(),
            ts,
            horizon,
            profile: LeaderProfile::zero(),
            master_seed: 0,
            initial_velocity: 0.0,
            falsification: false,
            detection_window: None,
            isolation_window: None,
            string_stability_slack: DEFAULT_STRING_STABILITY_SLACK,
            iss_ceiling: DEFAULT_ISS_CEILING,
        }
    }

    pub fn step_count(&self) -> usize {
        (self.horizon / self.ts + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.vehicles.is_empty() {
            return Err(Error::Config("a platoon needs at least one vehicle".into()));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::Config(format!("Ts must be positive, got {}", self.ts)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.step_count() == 0 {
            return Err(Error::Config("horizon is shorter than one sampling period".into()));
        }
        if !self.initial_velocity.is_finite() {
            return Err(Error::Config("initial velocity must be finite".into()));
        }
        if !(self.string_stability_slack >= 0.0) {
            return Err(Error::Config("string-stability slack must be non-negative".into()));
        }
        if !(self.iss_ceiling > 0.0) {
            return Err(Error::Config("boundedness ceiling must be positive".into()));
        }
        for w in [self.detection_window, self.isolation_window].into_iter().flatten() {
            if w.first > w.last {
                return Err(Error::Config(format!(
                    "step window {}..{} is empty",
                    w.first, w.last
                )));
            }
        }
        self.leader
            .validate()
            .map_err(|e| Error::Config(format!("leader: {e}")))?;
        for (n, v) in self.vehicles.iter().enumerate() {
            let i = n + 1;
            v.params
                .validate()
                .map_err(|e| Error::Config(format!("vehicle {i}: {e}")))?;
            v.gains
                .check(v.params.tau)
                .map_err(|e| Error::Config(format!("vehicle {i}: {e}")))?;
            for (label, b) in [("distance", v.sensor_noise_d), ("velocity", v.sensor_noise_v)] {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(Error::Config(format!(
                        "vehicle {i}: {label} sensor noise bound must be finite and >= 0"
                    )));
                }
            }
            if let Some(link) = &v.link {
                let n_ch = link.channels.len();
                if n_ch == 0 || n_ch > crate::channel_set::MAX_CHANNELS {
                    return Err(Error::Config(format!(
                        "link into vehicle {i}: channel count {n_ch} out of range"
                    )));
                }
                for ch in &link.channels {
                    ch.validate()
                        .map_err(|e| Error::Config(format!("link into vehicle {i}: {e}")))?;
                }
                link.policy
                    .validate(n_ch)
                    .map_err(|e| Error::Config(format!("link into vehicle {i}: {e}")))?;
                if link.policy.q >= n_ch {
                    return Err(Error::NotReconstructible {
                        n: n_ch,
                        q: link.policy.q,
                    });
                }
                if !self.falsification && !is_reconstructible(n_ch, link.policy.q) {
                    return Err(Error::NotReconstructible {
                        n: n_ch,
                        q: link.policy.q,
                    });
                }
            }
        }
        Ok(())
    }
}

/// What one link saw and decided at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    pub values: Vec<f64>,
    pub true_support: ChannelSet,
    pub true_command: f64,
    pub fusion: FusionOutcome,
    pub verdict: MonitorVerdict,
}

impl LinkRecord {
    /// `û − u`.
    pub fn fusion_error(&self) -> f64 {
        self.fusion.u_hat - self.true_command
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub t: f64,
    /// States at the start of the step; index 0 is the reference vehicle.
    pub states: Vec<VehicleState>,
    /// Command fed forward into each follower, index `i − 1` for vehicle `i`.
    pub u_hat: Vec<f64>,
    /// Link records, index `i − 1` for vehicle `i`.
    pub links: Vec<Option<LinkRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub config: ScenarioConfig,
    pub steps: Vec<StepRecord>,
}

impl SimTrace {
    /// Samples of one signal of vehicle `i` (0 is the reference vehicle).
    pub fn signal(&self, vehicle: usize, kind: SignalKind) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| {
                let x = s.states[vehicle];
                match kind {
                    SignalKind::SpacingError => x.e,
                    SignalKind::Velocity => x.v,
                    SignalKind::Acceleration => x.a,
                }
            })
            .collect()
    }

    pub fn vehicle_count(&self) -> usize {
        self.config.vehicles.len()
    }
}

struct Follower {
    plant: DiscretePlant,
    sensors: StreamRng,
    link: Option<LinkRuntime>,
}

struct LinkRuntime {
    rng: StreamRng,
    selector: ReferenceSelector,
    thresholds: MonitorThresholds,
}

fn uniform<R: Rng>(rng: &mut R, bound: f64) -> f64 {
    if bound == 0.0 {
        0.0
    } else {
        rng.random_range(-bound..=bound)
    }
}

/// Simulates the scenario for `floor(horizon / Ts)` steps.
pub fn run_scenario(config: &ScenarioConfig) -> Result<SimTrace> {
    config.validate()?;
    let seed = config.master_seed;
    let id = config.name.as_str();
    let leader = discretize_leader(&config.leader, config.ts)?;
    let mut followers = Vec::with_capacity(config.vehicles.len());
    for (n, v) in config.vehicles.iter().enumerate() {
        let i = (n + 1) as u64;
        let link = v.link.as_ref().map(|l| LinkRuntime {
            rng: stream_rng(seed, id, StreamPurpose::Link, i),
            selector: match l.reference {
                ReferenceRule::SmallestIndex => ReferenceSelector::SmallestIndex,
                ReferenceRule::Random => {
                    ReferenceSelector::seeded(stream_rng(seed, id, StreamPurpose::Reference, i))
                }
            },
            thresholds: MonitorThresholds::from_channels(&l.channels),
        });
        followers.push(Follower {
            plant: discretize_follower(&v.params, &v.gains, config.ts)?,
            sensors: stream_rng(seed, id, StreamPurpose::Sensors, i),
            link,
        });
    }

    let steps = config.step_count();
    let m = config.vehicles.len();
    let mut states = vec![VehicleState::cruising(config.initial_velocity); m + 1];
    let mut records = Vec::with_capacity(steps);

    for k in 0..steps {
        let t = k as f64 * config.ts;
        let mut next = Vec::with_capacity(m + 1);
        next.push(leader.step(&states[0], &[config.profile.value(t)])?);

        let mut u_hats = Vec::with_capacity(m);
        let mut links = Vec::with_capacity(m);
        for (n, (vc, f)) in config.vehicles.iter().zip(followers.iter_mut()).enumerate() {
            let pred = states[n];
            let (u_hat, record) = match (&vc.link, &mut f.link) {
                (Some(lc), Some(rt)) => {
                    let frame = transmit(pred.u, &lc.channels, &lc.policy, k, &mut rt.rng)?;
                    let mut fusion = fuse_unchecked(&frame.values, lc.policy.q)?;
                    fusion.error_bound = Some(3.0 * noise_bound_inf(&lc.channels));
                    let verdict = monitor(
                        &frame.values,
                        fusion.sigma,
                        &lc.channels,
                        &rt.thresholds,
                        &mut rt.selector,
                    )?;
                    (
                        fusion.u_hat,
                        Some(LinkRecord {
                            values: frame.values,
                            true_support: frame.true_attack_support,
                            true_command: frame.true_command,
                            fusion,
                            verdict,
                        }),
                    )
                }
                _ => (pred.u, None),
            };
            let w_d = uniform(&mut f.sensors, vc.sensor_noise_d);
            let w_v = uniform(&mut f.sensors, vc.sensor_noise_v);
            let x = f.plant.step(&states[n + 1], &[w_d, pred.v + w_v, u_hat])?;
            if !x.is_finite() {
                return Err(Error::Divergence {
                    step: k,
                    vehicle: n + 1,
                });
            }
            next.push(x);
            u_hats.push(u_hat);
            links.push(record);
        }
        if !next[0].is_finite() {
            return Err(Error::Divergence { step: k, vehicle: 0 });
        }

        records.push(StepRecord {
            k,
            t,
            states: std::mem::replace(&mut states, next),
            u_hat: u_hats,
            links,
        });
    }

    Ok(SimTrace {
        config: config.clone(),
        steps: records,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics {
    /// Receiving vehicle.
    pub vehicle: usize,
    pub max_fusion_error: f64,
    /// `3‖ν‖∞` for the link's channels.
    pub error_bound: f64,
    pub bound_violations: usize,
    pub attacked_steps_detection: usize,
    pub detected_steps: usize,
    /// Detected over attacked steps in the detection window; `None` when no
    /// step in the window was attacked.
    pub detection_rate: Option<f64>,
    /// Detections on attack-free steps in the detection window.
    pub false_alarms: usize,
    pub attacked_steps_isolation: usize,
    pub exact_isolations: usize,
    /// Steps whose isolated set equals the true support, over attacked steps
    /// in the isolation window.
    pub isolation_exact_rate: Option<f64>,
    /// Pooled `|Ŵ ∩ W| / |Ŵ|` over the isolation window.
    pub isolation_precision: Option<f64>,
    /// Pooled `|Ŵ ∩ W| / |W|` over the isolation window.
    pub isolation_recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StringStabilityEntry {
    pub signal: SignalKind,
    pub norm: SignalNorm,
    pub report: StringStabilityReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub steps: usize,
    pub links: Vec<LinkMetrics>,
    /// Follower signals (vehicles `1..=m`) for every signal and norm.
    pub string_stability: Vec<StringStabilityEntry>,
    pub max_state_norm: f64,
    pub iss_ceiling: f64,
    pub bounded: bool,
}

impl Metrics {
    pub fn string_stability_for(&self, signal: SignalKind, norm: SignalNorm) -> Option<&StringStabilityReport> {
        self.string_stability
            .iter()
            .find(|s| s.signal == signal && s.norm == norm)
            .map(|s| &s.report)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(trace: &SimTrace) -> Result<Metrics> {
    let cfg = &trace.config;
    let all = StepWindow {
        first: 0,
        last: usize::MAX,
    };
    let det_window = cfg.detection_window.unwrap_or(all);
    let iso_window = cfg.isolation_window.unwrap_or(all);

    let mut links = Vec::new();
    for (n, vc) in cfg.vehicles.iter().enumerate() {
        let Some(lc) = &vc.link else { continue };
        let error_bound = 3.0 * noise_bound_inf(&lc.channels);
        let mut lm = LinkMetrics {
            vehicle: n + 1,
            max_fusion_error: 0.0,
            error_bound,
            bound_violations: 0,
            attacked_steps_detection: 0,
            detected_steps: 0,
            detection_rate: None,
            false_alarms: 0,
            attacked_steps_isolation: 0,
            exact_isolations: 0,
            isolation_exact_rate: None,
            isolation_precision: None,
            isolation_recall: None,
        };
        let (mut hits, mut flagged, mut truth) = (0usize, 0usize, 0usize);
        for step in &trace.steps {
            let rec = step.links[n].as_ref().ok_or_else(|| {
                Error::Dimension(format!("step {} lacks a record for link {}", step.k, n + 1))
            })?;
            let err = rec.fusion_error().abs();
            lm.max_fusion_error = lm.max_fusion_error.max(err);
            if err > error_bound {
                lm.bound_violations += 1;
            }
            let attacked = !rec.true_support.is_empty();
            if det_window.contains(step.k) {
                if attacked {
                    lm.attacked_steps_detection += 1;
                    if rec.verdict.detected {
                        lm.detected_steps += 1;
                    }
                } else if rec.verdict.detected {
                    lm.false_alarms += 1;
                }
            }
            if iso_window.contains(step.k) {
                let iso = rec.verdict.isolated;
                if attacked {
                    lm.attacked_steps_isolation += 1;
                    if iso == rec.true_support {
                        lm.exact_isolations += 1;
                    }
                }
                hits += iso.intersection(rec.true_support).len();
                flagged += iso.len();
                truth += rec.true_support.len();
            }
        }
        lm.detection_rate = ratio(lm.detected_steps, lm.attacked_steps_detection);
        lm.isolation_exact_rate = ratio(lm.exact_isolations, lm.attacked_steps_isolation);
        lm.isolation_precision = ratio(hits, flagged);
        lm.isolation_recall = ratio(hits, truth);
        links.push(lm);
    }

    let m = cfg.vehicles.len();
    let mut string_stability = Vec::new();
    for signal in [SignalKind::SpacingError, SignalKind::Velocity, SignalKind::Acceleration] {
        let traces: Vec<Vec<f64>> = (1..=m).map(|i| trace.signal(i, signal)).collect();
        for norm in [SignalNorm::L2, SignalNorm::LInf] {
            let report = string_stability_check(&traces, cfg.ts, norm, cfg.string_stability_slack)?;
            string_stability.push(StringStabilityEntry {
                signal,
                norm,
                report,
            });
        }
    }

    let max_state_norm = trace
        .steps
        .iter()
        .flat_map(|s| s.states.iter())
        .map(VehicleState::max_abs)
        .fold(0.0, f64::max);

    Ok(Metrics {
        steps: trace.steps.len(),
        links,
        string_stability,
        max_state_norm,
        iss_ceiling: cfg.iss_ceiling,
        bounded: max_state_norm < cfg.iss_ceiling,
    })
}
