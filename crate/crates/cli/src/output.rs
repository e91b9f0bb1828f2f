//! Trace, metric and plot-data serializers.

use std::fmt::Write as _;

use platoon_shield::control_design::{SignalKind, SignalNorm};
use platoon_shield::sim_runner::{Metrics, SimTrace};

/// `%.9g`-style formatting: 9 significant digits, trailing zeros removed.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_rate(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), fmt_g9)
}

pub const TRACE_HEADER: &str =
    "k,t,vehicle,e,v,a,u,u_hat,fusion_err,sigma,detected,isolated,true_support";

/// One row per step and vehicle. Vehicle 0 is the reference vehicle and
/// leaves the feedforward columns empty; followers without a link show the
/// exact command with zero fusion error and `-` for every set.
pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.steps.len() * (trace.vehicle_count() + 1) * 96);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for step in &trace.steps {
        for (i, x) in step.states.iter().enumerate() {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                step.k,
                fmt_g9(step.t),
                i,
                fmt_g9(x.e),
                fmt_g9(x.v),
                fmt_g9(x.a),
                fmt_g9(x.u)
            );
            if i == 0 {
                out.push_str(",,,-,,-,-\n");
                continue;
            }
            let u_hat = step.u_hat[i - 1];
            match &step.links[i - 1] {
                Some(rec) => {
                    let _ = writeln!(
                        out,
                        ",{},{},{},{},{},{}",
                        fmt_g9(u_hat),
                        fmt_g9(rec.fusion_error()),
                        rec.fusion.sigma,
                        u8::from(rec.verdict.detected),
                        rec.verdict.isolated,
                        rec.true_support
                    );
                }
                None => {
                    let _ = writeln!(out, ",{},0,-,0,-,-", fmt_g9(u_hat));
                }
            }
        }
    }
    out
}

/// `key = value` lines.
pub fn metrics_text(trace: &SimTrace, metrics: &Metrics) -> String {
    let cfg = &trace.config;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "scenario = {}", cfg.name);
    let _ = writeln!(w, "seed = {}", cfg.master_seed);
    let _ = writeln!(w, "vehicles = {}", cfg.vehicles.len());
    let _ = writeln!(w, "steps = {}", metrics.steps);
    let _ = writeln!(w, "ts = {}", fmt_g9(cfg.ts));
    let _ = writeln!(w, "max_state_norm = {}", fmt_g9(metrics.max_state_norm));
    let _ = writeln!(w, "iss_ceiling = {}", fmt_g9(metrics.iss_ceiling));
    let _ = writeln!(w, "bounded = {}", metrics.bounded);
    for l in &metrics.links {
        let p = format!("link.{}", l.vehicle);
        let _ = writeln!(w, "{p}.max_fusion_error = {}", fmt_g9(l.max_fusion_error));
        let _ = writeln!(w, "{p}.error_bound = {}", fmt_g9(l.error_bound));
        let _ = writeln!(w, "{p}.bound_violations = {}", l.bound_violations);
        let _ = writeln!(w, "{p}.attacked_steps_detection = {}", l.attacked_steps_detection);
        let _ = writeln!(w, "{p}.detected_steps = {}", l.detected_steps);
        let _ = writeln!(w, "{p}.detection_rate = {}", opt_rate(l.detection_rate));
        let _ = writeln!(w, "{p}.false_alarms = {}", l.false_alarms);
        let _ = writeln!(w, "{p}.attacked_steps_isolation = {}", l.attacked_steps_isolation);
        let _ = writeln!(w, "{p}.exact_isolations = {}", l.exact_isolations);
        let _ = writeln!(w, "{p}.isolation_exact_rate = {}", opt_rate(l.isolation_exact_rate));
        let _ = writeln!(w, "{p}.isolation_precision = {}", opt_rate(l.isolation_precision));
        let _ = writeln!(w, "{p}.isolation_recall = {}", opt_rate(l.isolation_recall));
    }
    for s in &metrics.string_stability {
        let p = format!("string_stability.{}.{}", s.signal.name(), s.norm.name());
        let norms: Vec<String> = s.report.per_vehicle_norms.iter().map(|x| fmt_g9(*x)).collect();
        let _ = writeln!(w, "{p}.norms = {}", norms.join(" "));
        let _ = writeln!(w, "{p}.worst_ratio = {}", fmt_g9(s.report.worst_ratio));
        let _ = writeln!(w, "{p}.monotone = {}", s.report.monotone);
    }
    out
}

/// A named two-column `t value` data file.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    pub name: String,
    pub title: String,
    pub contents: String,
}

fn series(name: String, title: String, points: impl Iterator<Item = (f64, f64)>) -> PlotFile {
    let mut contents = String::new();
    for (t, y) in points {
        let _ = writeln!(contents, "{} {}", fmt_g9(t), fmt_g9(y));
    }
    PlotFile {
        name,
        title,
        contents,
    }
}

/// Per-vehicle state signals, and per-link transmitted versus fused
/// commands plus true and isolated attacked channels.
pub fn plot_files(trace: &SimTrace) -> Vec<PlotFile> {
    let mut files = Vec::new();
    let t: Vec<f64> = trace.steps.iter().map(|s| s.t).collect();
    for i in 0..=trace.vehicle_count() {
        for (kind, label) in [
            (SignalKind::Velocity, "velocity"),
            (SignalKind::SpacingError, "spacing_error"),
            (SignalKind::Acceleration, "acceleration"),
        ] {
            if i == 0 && kind == SignalKind::SpacingError {
                continue;
            }
            let y = trace.signal(i, kind);
            files.push(series(
                format!("vehicle{i}_{label}.dat"),
                format!("vehicle {i} {label}"),
                t.iter().copied().zip(y),
            ));
        }
    }
    for (n, vc) in trace.config.vehicles.iter().enumerate() {
        if vc.link.is_none() {
            continue;
        }
        let i = n + 1;
        let recs = || trace.steps.iter().filter_map(move |s| s.links[n].as_ref().map(|r| (s.t, r)));
        files.push(series(
            format!("link{i}_command.dat"),
            format!("u{} transmitted", i - 1),
            recs().map(|(t, r)| (t, r.true_command)),
        ));
        files.push(series(
            format!("link{i}_fused.dat"),
            format!("u{} fused", i - 1),
            recs().map(|(t, r)| (t, r.fusion.u_hat)),
        ));
        files.push(series(
            format!("link{i}_attacked.dat"),
            format!("link {i} attacked channel"),
            recs().flat_map(|(t, r)| r.true_support.iter().map(move |j| (t, (j + 1) as f64))),
        ));
        files.push(series(
            format!("link{i}_isolated.dat"),
            format!("link {i} isolated channel"),
            recs().flat_map(|(t, r)| r.verdict.isolated.iter().map(move |j| (t, (j + 1) as f64))),
        ));
    }
    files
}

/// Gnuplot script drawing one PNG per family of plot files.
pub fn gnuplot_script(trace: &SimTrace, files: &[PlotFile]) -> String {
    let mut s = String::from("set terminal pngcairo size 900,500\nset key outside\nset xlabel 't (s)'\n");
    let family = |suffix: &str, out: &str, ylabel: &str, style: &str, s: &mut String| {
        let members: Vec<&PlotFile> = files.iter().filter(|f| f.name.ends_with(suffix)).collect();
        if members.is_empty() {
            return;
        }
        let _ = writeln!(s, "\nset output '{out}'\nset ylabel '{ylabel}'");
        let parts: Vec<String> = members
            .iter()
            .map(|f| format!("'{}' using 1:2 with {style} title '{}'", f.name, f.title))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
    };
    family("_velocity.dat", "velocity.png", "v (m/s)", "lines", &mut s);
    family("_spacing_error.dat", "spacing_error.png", "e (m)", "lines", &mut s);
    family("_acceleration.dat", "acceleration.png", "a (m/s^2)", "lines", &mut s);
    for (n, vc) in trace.config.vehicles.iter().enumerate() {
        if vc.link.is_some() {
            let i = n + 1;
            family(&format!("link{i}_command.dat"), &format!("link{i}_fusion.png"), "u", "lines", &mut s);
            let _ = writeln!(s, "replot 'link{i}_fused.dat' using 1:2 with lines title 'u{} fused'", i - 1);
            let _ = writeln!(
                s,
                "\nset output 'link{i}_isolation.png'\nset ylabel 'channel'\nplot 'link{i}_attacked.dat' using 1:2 with points pt 6 title 'attacked', \\\n     'link{i}_isolated.dat' using 1:2 with points pt 2 title 'isolated'"
            );
        }
    }
    s
}

/// Summary of a string-stability entry for console output.
pub fn string_stability_line(metrics: &Metrics, signal: SignalKind, norm: SignalNorm) -> Option<String> {
    metrics.string_stability_for(signal, norm).map(|r| {
        format!(
            "{}/{}: worst ratio {} ({})",
            signal.name(),
            norm.name(),
            fmt_g9(r.worst_ratio),
            if r.monotone { "monotone" } else { "amplifying" }
        )
    })
}
