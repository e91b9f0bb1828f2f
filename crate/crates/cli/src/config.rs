//! Scenario file format.
//!
//! ```text
//! # comment
//! [platoon]
//! name = example1
//! vehicles = 2
//!
//! [sim]
//! ts = 0.01
//! horizon = 20
//! seed = 1
//!
//! [vehicle.default]
//! h = 0.5
//! tau = 0.1
//! kp = 5.002
//! kd = 305.1862
//!
//! [link.2]
//! bounds = 0.01 0.02 0.03
//! attack = random_single_channel
//!
//! [leader_profile]
//! 0 5 -10
//! 5 10 0
//! ```
//!
//! `[vehicle.default]` supplies every key a `[vehicle.i]` section leaves
//! out. Vehicle 1 follows the virtual reference vehicle, whose parameters
//! default to vehicle 1's.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use platoon_shield::channel_set::ChannelSet;
use platoon_shield::platoon_model::{ControllerGains, VehicleParams};
use platoon_shield::sim_runner::{
    LeaderProfile, LinkConfig, ProfileSegment, ReferenceRule, ScenarioConfig, StepWindow,
    VehicleConfig,
};
use platoon_shield::v2v_link::{
    AttackKind, AttackPolicy, ChannelModel, MagnitudeDistribution, NoiseDistribution,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
    /// Raw rows of `[leader_profile]`.
    rows: Vec<(usize, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, CliError> {
    let mut sections: Vec<Section> = Vec::new();
    let mut seen = HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, "section", "unterminated section header"))?
                .trim()
                .to_string();
            if !seen.insert(name.clone()) {
                return Err(parse_err(line, &name, "duplicate section"));
            }
            sections.push(Section {
                name,
                line,
                entries: Vec::new(),
                rows: Vec::new(),
            });
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| parse_err(line, "section", "content before the first section header"))?;
        if section.name == "leader_profile" {
            section.rows.push((line, content.to_string()));
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, content, "expected `key = value`"))?;
        let key = key.trim().to_string();
        if section.get(&key).is_some() {
            return Err(parse_err(line, &key, format!("duplicate key in [{}]", section.name)));
        }
        section.entries.push(Entry {
            line,
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(sections)
}

fn parse_f64(e: &Entry) -> Result<f64, CliError> {
    let x: f64 = e
        .value
        .parse()
        .map_err(|_| parse_err(e.line, &e.key, format!("'{}' is not a number", e.value)))?;
    if !x.is_finite() {
        return Err(parse_err(e.line, &e.key, "value must be finite"));
    }
    Ok(x)
}

fn parse_usize(e: &Entry) -> Result<usize, CliError> {
    e.value
        .parse()
        .map_err(|_| parse_err(e.line, &e.key, format!("'{}' is not a non-negative integer", e.value)))
}

fn parse_u64(e: &Entry) -> Result<u64, CliError> {
    e.value
        .parse()
        .map_err(|_| parse_err(e.line, &e.key, format!("'{}' is not a non-negative integer", e.value)))
}

fn parse_bool(e: &Entry) -> Result<bool, CliError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(parse_err(e.line, &e.key, format!("'{other}' is not a boolean"))),
    }
}

fn parse_window(e: &Entry) -> Result<StepWindow, CliError> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    let [first, last] = parts[..] else {
        return Err(parse_err(e.line, &e.key, "expected `first last` step indices"));
    };
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(e.line, &e.key, format!("'{s}' is not a step index")))
    };
    let w = StepWindow {
        first: num(first)?,
        last: num(last)?,
    };
    if w.first > w.last {
        return Err(parse_err(e.line, &e.key, "window start exceeds its end"));
    }
    Ok(w)
}

fn parse_set(e: &Entry, s: &str) -> Result<ChannelSet, CliError> {
    ChannelSet::parse_one_based(s).map_err(|err| parse_err(e.line, &e.key, err.to_string()))
}

/// Checks that every key of `section` is in `allowed`.
fn check_keys(section: &Section, allowed: &[&str]) -> Result<(), CliError> {
    for e in &section.entries {
        if !allowed.contains(&e.key.as_str()) {
            return Err(parse_err(
                e.line,
                &e.key,
                format!("unknown key in [{}]; expected one of: {}", section.name, allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

const PLATOON_KEYS: &[&str] = &["name", "vehicles", "leader_h", "leader_tau", "falsification"];
const SIM_KEYS: &[&str] = &[
    "ts",
    "horizon",
    "seed",
    "initial_velocity",
    "detection_window",
    "isolation_window",
    "string_stability_slack",
    "iss_ceiling",
];
const VEHICLE_KEYS: &[&str] = &[
    "h",
    "tau",
    "r",
    "length",
    "kp",
    "kd",
    "sensor_noise_d",
    "sensor_noise_v",
];
const LINK_KEYS: &[&str] = &[
    "bounds",
    "noise",
    "noise_std",
    "attack",
    "q",
    "magnitude",
    "attack_mean",
    "attack_std",
    "attack_low",
    "attack_high",
    "attack_value",
    "fixed_set",
    "schedule",
    "ambiguity_offset",
    "reference",
];

fn vehicle_config(
    index: usize,
    own: Option<&Section>,
    default: Option<&Section>,
    header_line: usize,
) -> Result<VehicleConfig, CliError> {
    let lookup = |key: &str| own.and_then(|s| s.get(key)).or_else(|| default.and_then(|s| s.get(key)));
    let required = |key: &str| {
        lookup(key).ok_or_else(|| {
            parse_err(
                own.map_or(header_line, |s| s.line),
                key,
                format!("vehicle {index} has no `{key}` in [vehicle.{index}] or [vehicle.default]"),
            )
        })
    };
    let optional = |key: &str, fallback: f64| lookup(key).map_or(Ok(fallback), parse_f64);
    let params = VehicleParams {
        h: parse_f64(required("h")?)?,
        tau: parse_f64(required("tau")?)?,
        r: optional("r", 0.0)?,
        length: optional("length", 0.0)?,
    };
    let gains = ControllerGains::new(parse_f64(required("kp")?)?, parse_f64(required("kd")?)?);
    Ok(VehicleConfig {
        params,
        gains,
        sensor_noise_d: optional("sensor_noise_d", 0.0)?,
        sensor_noise_v: optional("sensor_noise_v", 0.0)?,
        link: None,
    })
}

fn link_config(s: &Section) -> Result<LinkConfig, CliError> {
    check_keys(s, LINK_KEYS)?;
    let bounds_entry = s
        .get("bounds")
        .ok_or_else(|| parse_err(s.line, "bounds", format!("[{}] needs per-channel `bounds`", s.name)))?;
    let mut bounds = Vec::new();
    for tok in bounds_entry.value.split_whitespace() {
        let b: f64 = tok.parse().map_err(|_| {
            parse_err(bounds_entry.line, "bounds", format!("'{tok}' is not a number"))
        })?;
        if !(b >= 0.0 && b.is_finite()) {
            return Err(parse_err(bounds_entry.line, "bounds", "bounds must be finite and >= 0"));
        }
        bounds.push(b);
    }
    if bounds.is_empty() {
        return Err(parse_err(bounds_entry.line, "bounds", "at least one channel is required"));
    }
    let distribution = match s.get("noise") {
        None => NoiseDistribution::Uniform,
        Some(e) => match e.value.as_str() {
            "uniform" => NoiseDistribution::Uniform,
            "zero" => NoiseDistribution::Zero,
            "truncated_gaussian" => {
                let std = s.get("noise_std").ok_or_else(|| {
                    parse_err(e.line, "noise_std", "truncated_gaussian noise needs `noise_std`")
                })?;
                NoiseDistribution::TruncatedGaussian { std: parse_f64(std)? }
            }
            other => {
                return Err(parse_err(
                    e.line,
                    "noise",
                    format!("unknown noise '{other}'; expected uniform, truncated_gaussian or zero"),
                ))
            }
        },
    };
    let channels: Vec<ChannelModel> = bounds
        .into_iter()
        .map(|b| ChannelModel {
            noise_bound: b,
            distribution,
        })
        .collect();

    let f = |key: &str, fallback: f64| s.get(key).map_or(Ok(fallback), parse_f64);
    let magnitude = match s.get("magnitude").map(|e| (e, e.value.as_str())) {
        None | Some((_, "gaussian")) => MagnitudeDistribution::Gaussian {
            mean: f("attack_mean", 0.0)?,
            std: f("attack_std", 5.0)?,
        },
        Some((_, "uniform")) => MagnitudeDistribution::Uniform {
            low: f("attack_low", -10.0)?,
            high: f("attack_high", 10.0)?,
        },
        Some((_, "constant")) => MagnitudeDistribution::Constant(f("attack_value", 1.0)?),
        Some((e, other)) => {
            return Err(parse_err(
                e.line,
                "magnitude",
                format!("unknown magnitude '{other}'; expected gaussian, uniform or constant"),
            ))
        }
    };

    let attack = s.get("attack");
    let kind = match attack.map(|e| e.value.as_str()) {
        None | Some("none") => AttackKind::None,
        Some("random_single_channel") => AttackKind::RandomSingleChannel,
        Some("round_robin") => AttackKind::RoundRobin,
        Some("fixed_set") => {
            let e = s
                .get("fixed_set")
                .ok_or_else(|| parse_err(s.line, "fixed_set", "fixed_set attacks need `fixed_set`"))?;
            AttackKind::FixedSet(parse_set(e, &e.value)?)
        }
        Some("ambiguity") => AttackKind::Ambiguity {
            offset: f("ambiguity_offset", 1.0)?,
        },
        Some("schedule") => {
            let e = s
                .get("schedule")
                .ok_or_else(|| parse_err(s.line, "schedule", "schedule attacks need `schedule`"))?;
            let mut map = BTreeMap::new();
            for tok in e.value.split_whitespace() {
                let (k, set) = tok
                    .split_once(':')
                    .ok_or_else(|| parse_err(e.line, "schedule", format!("'{tok}' is not `step:set`")))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| parse_err(e.line, "schedule", format!("'{k}' is not a step index")))?;
                if map.insert(k, parse_set(e, set)?).is_some() {
                    return Err(parse_err(e.line, "schedule", format!("step {k} listed twice")));
                }
            }
            AttackKind::CustomSchedule(map)
        }
        Some(other) => {
            return Err(parse_err(
                attack.map_or(s.line, |e| e.line),
                "attack",
                format!(
                    "unknown attack '{other}'; expected none, random_single_channel, round_robin, fixed_set, ambiguity or schedule"
                ),
            ))
        }
    };
    let default_q = match &kind {
        AttackKind::None => 0,
        AttackKind::FixedSet(set) => set.len(),
        AttackKind::CustomSchedule(map) => map.values().map(|s| s.len()).max().unwrap_or(0),
        AttackKind::Ambiguity { .. } => channels.len().div_ceil(2),
        _ => 1,
    };
    let q = s.get("q").map_or(Ok(default_q), parse_usize)?;
    let reference = match s.get("reference").map(|e| (e, e.value.as_str())) {
        None | Some((_, "smallest")) => ReferenceRule::SmallestIndex,
        Some((_, "random")) => ReferenceRule::Random,
        Some((e, other)) => {
            return Err(parse_err(
                e.line,
                "reference",
                format!("unknown reference rule '{other}'; expected smallest or random"),
            ))
        }
    };
    Ok(LinkConfig {
        channels,
        policy: AttackPolicy { kind, q, magnitude },
        reference,
    })
}

fn leader_profile(s: &Section) -> Result<LeaderProfile, CliError> {
    let mut segments = Vec::new();
    for (line, row) in &s.rows {
        let nums: Result<Vec<f64>, _> = row.split_whitespace().map(str::parse::<f64>).collect();
        let nums = nums.map_err(|_| parse_err(*line, "leader_profile", format!("'{row}' is not three numbers")))?;
        let [start, end, value] = nums[..] else {
            return Err(parse_err(*line, "leader_profile", "expected `t_start t_end value`"));
        };
        segments.push(ProfileSegment { start, end, value });
    }
    LeaderProfile::new(segments).map_err(|e| parse_err(s.line, "leader_profile", e.to_string()))
}

/// Parses a scenario file. Field-level problems carry their line number;
/// cross-field invariants are checked by [`ScenarioConfig::validate`].
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, CliError> {
    let sections = split_sections(text)?;
    let by_name: BTreeMap<&str, &Section> = sections.iter().map(|s| (s.name.as_str(), s)).collect();

    let platoon = by_name
        .get("platoon")
        .ok_or_else(|| parse_err(1, "platoon", "missing [platoon] section"))?;
    check_keys(platoon, PLATOON_KEYS)?;
    let sim = by_name
        .get("sim")
        .ok_or_else(|| parse_err(1, "sim", "missing [sim] section"))?;
    check_keys(sim, SIM_KEYS)?;

    let count_entry = platoon
        .get("vehicles")
        .ok_or_else(|| parse_err(platoon.line, "vehicles", "[platoon] needs `vehicles`"))?;
    let m = parse_usize(count_entry)?;
    if m == 0 {
        return Err(parse_err(count_entry.line, "vehicles", "a platoon needs at least one vehicle"));
    }

    for s in &sections {
        let known = match s.name.as_str() {
            "platoon" | "sim" | "leader_profile" | "vehicle.default" => true,
            name => {
                let index = name
                    .strip_prefix("vehicle.")
                    .or_else(|| name.strip_prefix("link."))
                    .map(|i| i.parse::<usize>());
                match index {
                    Some(Ok(i)) if (1..=m).contains(&i) => true,
                    Some(_) => {
                        return Err(parse_err(
                            s.line,
                            name,
                            format!("section index must be a vehicle number in 1..={m}"),
                        ))
                    }
                    None => false,
                }
            }
        };
        if !known {
            return Err(parse_err(s.line, &s.name, "unknown section"));
        }
        if s.name.starts_with("vehicle.") {
            check_keys(s, VEHICLE_KEYS)?;
        }
    }

    let ts_e = sim
        .get("ts")
        .ok_or_else(|| parse_err(sim.line, "ts", "[sim] needs `ts`"))?;
    let horizon_e = sim
        .get("horizon")
        .ok_or_else(|| parse_err(sim.line, "horizon", "[sim] needs `horizon`"))?;

    let default = by_name.get("vehicle.default").copied();
    let mut vehicles = Vec::with_capacity(m);
    for i in 1..=m {
        let own = by_name.get(format!("vehicle.{i}").as_str()).copied();
        let mut v = vehicle_config(i, own, default, platoon.line)?;
        if let Some(link) = by_name.get(format!("link.{i}").as_str()) {
            v.link = Some(link_config(link)?);
        }
        vehicles.push(v);
    }

    let name = platoon.get("name").map_or("scenario".to_string(), |e| e.value.clone());
    let mut leader = vehicles[0].params;
    if let Some(e) = platoon.get("leader_h") {
        leader.h = parse_f64(e)?;
    }
    if let Some(e) = platoon.get("leader_tau") {
        leader.tau = parse_f64(e)?;
    }
    let mut cfg = ScenarioConfig::new(name, leader, parse_f64(ts_e)?, parse_f64(horizon_e)?);
    cfg.vehicles = vehicles;
    if let Some(s) = by_name.get("leader_profile") {
        cfg.profile = leader_profile(s)?;
    }
    if let Some(e) = sim.get("seed") {
        cfg.master_seed = parse_u64(e)?;
    }
    if let Some(e) = sim.get("initial_velocity") {
        cfg.initial_velocity = parse_f64(e)?;
    }
    if let Some(e) = sim.get("detection_window") {
        cfg.detection_window = Some(parse_window(e)?);
    }
    if let Some(e) = sim.get("isolation_window") {
        cfg.isolation_window = Some(parse_window(e)?);
    }
    if let Some(e) = sim.get("string_stability_slack") {
        cfg.string_stability_slack = parse_f64(e)?;
    }
    if let Some(e) = sim.get("iss_ceiling") {
        cfg.iss_ceiling = parse_f64(e)?;
    }
    if let Some(e) = platoon.get("falsification") {
        cfg.falsification = parse_bool(e)?;
    }
    Ok(cfg)
}

/// Parses and validates.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig, CliError> {
    let cfg = parse_scenario(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a fully explicit scenario file that parses back to `cfg`.
pub fn serialize_scenario(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "[platoon]");
    let _ = writeln!(w, "name = {}", cfg.name);
    let _ = writeln!(w, "vehicles = {}", cfg.vehicles.len());
    let _ = writeln!(w, "leader_h = {}", cfg.leader.h);
    let _ = writeln!(w, "leader_tau = {}", cfg.leader.tau);
    let _ = writeln!(w, "falsification = {}", cfg.falsification);
    let _ = writeln!(w, "\n[sim]");
    let _ = writeln!(w, "ts = {}", cfg.ts);
    let _ = writeln!(w, "horizon = {}", cfg.horizon);
    let _ = writeln!(w, "seed = {}", cfg.master_seed);
    let _ = writeln!(w, "initial_velocity = {}", cfg.initial_velocity);
    if let Some(d) = cfg.detection_window {
        let _ = writeln!(w, "detection_window = {} {}", d.first, d.last);
    }
    if let Some(d) = cfg.isolation_window {
        let _ = writeln!(w, "isolation_window = {} {}", d.first, d.last);
    }
    let _ = writeln!(w, "string_stability_slack = {}", cfg.string_stability_slack);
    let _ = writeln!(w, "iss_ceiling = {}", cfg.iss_ceiling);

    for (n, v) in cfg.vehicles.iter().enumerate() {
        let i = n + 1;
        let _ = writeln!(w, "\n[vehicle.{i}]");
        let _ = writeln!(w, "h = {}", v.params.h);
        let _ = writeln!(w, "tau = {}", v.params.tau);
        let _ = writeln!(w, "r = {}", v.params.r);
        let _ = writeln!(w, "length = {}", v.params.length);
        let _ = writeln!(w, "kp = {}", v.gains.kp);
        let _ = writeln!(w, "kd = {}", v.gains.kd);
        let _ = writeln!(w, "sensor_noise_d = {}", v.sensor_noise_d);
        let _ = writeln!(w, "sensor_noise_v = {}", v.sensor_noise_v);
        if let Some(link) = &v.link {
            write_link(w, i, link);
        }
    }

    if !cfg.profile.segments().is_empty() {
        let _ = writeln!(w, "\n[leader_profile]");
        for s in cfg.profile.segments() {
            let _ = writeln!(w, "{} {} {}", s.start, s.end, s.value);
        }
    }
    out
}

fn write_link(w: &mut String, i: usize, link: &LinkConfig) {
    let _ = writeln!(w, "\n[link.{i}]");
    let bounds: Vec<String> = link.channels.iter().map(|c| c.noise_bound.to_string()).collect();
    let _ = writeln!(w, "bounds = {}", bounds.join(" "));
    // Channels of one link share a distribution in this format.
    match link.channels.first().map(|c| c.distribution) {
        Some(NoiseDistribution::Zero) => {
            let _ = writeln!(w, "noise = zero");
        }
        Some(NoiseDistribution::TruncatedGaussian { std }) => {
            let _ = writeln!(w, "noise = truncated_gaussian");
            let _ = writeln!(w, "noise_std = {std}");
        }
        _ => {
            let _ = writeln!(w, "noise = uniform");
        }
    }
    let p = &link.policy;
    let _ = writeln!(w, "attack = {}", match &p.kind {
        AttackKind::CustomSchedule(_) => "schedule",
        k => k.name(),
    });
    let _ = writeln!(w, "q = {}", p.q);
    match &p.kind {
        AttackKind::FixedSet(set) => {
            let _ = writeln!(w, "fixed_set = {set}");
        }
        AttackKind::Ambiguity { offset } => {
            let _ = writeln!(w, "ambiguity_offset = {offset}");
        }
        AttackKind::CustomSchedule(map) => {
            let items: Vec<String> = map.iter().map(|(k, s)| format!("{k}:{s}")).collect();
            let _ = writeln!(w, "schedule = {}", items.join(" "));
        }
        _ => {}
    }
    match p.magnitude {
        MagnitudeDistribution::Gaussian { mean, std } => {
            let _ = writeln!(w, "magnitude = gaussian\nattack_mean = {mean}\nattack_std = {std}");
        }
        MagnitudeDistribution::Uniform { low, high } => {
            let _ = writeln!(w, "magnitude = uniform\nattack_low = {low}\nattack_high = {high}");
        }
        MagnitudeDistribution::Constant(c) => {
            let _ = writeln!(w, "magnitude = constant\nattack_value = {c}");
        }
    }
    let _ = writeln!(w, "reference = {}", match link.reference {
        ReferenceRule::SmallestIndex => "smallest",
        ReferenceRule::Random => "random",
    });
}
