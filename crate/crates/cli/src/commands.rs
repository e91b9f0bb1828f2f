use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use platoon_shield::control_design::closed_loop_hinf;
use platoon_shield::platoon_model::{ControllerGains, VehicleParams};
use platoon_shield::sim_runner::{compute_metrics, run_scenario, Metrics, ScenarioConfig, SimTrace};

use crate::config::load_scenario;
use crate::error::CliError;
use crate::output::{fmt_g9, gnuplot_script, metrics_text, plot_files, trace_csv};

/// Environment variable consulted when no `--seed` is given.
pub const SEED_ENV: &str = "PLATOON_SHIELD_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub scenario: PathBuf,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Paths relative to `out_dir`.
    pub files: Vec<PathBuf>,
    pub exit_status: i32,
}

impl RunManifest {
    fn text(&self) -> String {
        let mut s = format!(
            "scenario = {}\nseed = {}\nout_dir = {}\nexit_status = {}\n",
            self.scenario.display(),
            self.seed,
            self.out_dir.display(),
            self.exit_status
        );
        for f in &self.files {
            s.push_str(&format!("file = {}\n", f.display()));
        }
        s
    }
}

/// Reads and validates a scenario file.
pub fn read_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
    load_scenario(&text)
}

/// `--seed`, then the environment variable, then the file's own seed.
pub fn resolve_seed(flag: Option<u64>, file_seed: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}='{v}' is not a non-negative integer"))),
        Err(_) => Ok(file_seed),
    }
}

/// Runs one simulation and its metrics.
pub fn simulate(cfg: &ScenarioConfig) -> Result<(SimTrace, Metrics), CliError> {
    let trace = run_scenario(cfg)?;
    let metrics = compute_metrics(&trace)?;
    Ok((trace, metrics))
}

struct Writer {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, rel: impl AsRef<Path>, contents: &str) -> Result<(), CliError> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(rel.to_path_buf());
        Ok(())
    }
}

/// Simulates the scenario and writes `trace.csv`, `metrics.txt`, plot data
/// under `plots/` and `manifest.txt`. Nothing is written unless the
/// scenario parses, validates and simulates without error.
pub fn cmd_run(
    scenario: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    emit_plot_script: bool,
) -> Result<(RunManifest, Metrics), CliError> {
    let mut cfg = read_scenario(scenario)?;
    cfg.master_seed = resolve_seed(seed, cfg.master_seed)?;
    let (trace, metrics) = simulate(&cfg)?;

    let mut w = Writer {
        root: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    w.write("trace.csv", &trace_csv(&trace))?;
    w.write("metrics.txt", &metrics_text(&trace, &metrics))?;
    let plots = plot_files(&trace);
    for p in &plots {
        w.write(Path::new("plots").join(&p.name), &p.contents)?;
    }
    if emit_plot_script {
        w.write("plots/plots.gp", &gnuplot_script(&trace, &plots))?;
    }
    let mut manifest = RunManifest {
        scenario: scenario.to_path_buf(),
        seed: cfg.master_seed,
        out_dir: out_dir.to_path_buf(),
        files: w.files.clone(),
        exit_status: 0,
    };
    manifest.files.push("manifest.txt".into());
    w.write("manifest.txt", &manifest.text())?;
    Ok((manifest, metrics))
}

/// Closed-loop H-infinity norm formatted to 4 decimals.
pub fn cmd_hinf(h: f64, tau: f64, kp: f64, kd: f64, tol: f64) -> Result<String, CliError> {
    let params = VehicleParams::new(h, tau)?;
    let gains = ControllerGains::new(kp, kd);
    let gamma = closed_loop_hinf(&params, &gains, tol)?;
    Ok(format!("{gamma:.4}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRates {
    pub seed: u64,
    pub link: usize,
    pub detection_rate: Option<f64>,
    pub isolation_exact_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub metric: &'static str,
    pub link: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Seeds with a defined rate.
    pub count: usize,
}

fn summarize(metric: &'static str, link: usize, xs: &[f64]) -> Option<RateSummary> {
    if xs.is_empty() {
        return None;
    }
    Some(RateSummary {
        metric,
        link,
        mean: xs.iter().sum::<f64>() / xs.len() as f64,
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        count: xs.len(),
    })
}

/// Runs `cfg` under master seeds `base, base+1, …` in parallel.
pub fn sweep_rates(cfg: &ScenarioConfig, base_seed: u64, seeds: usize) -> Result<Vec<SeedRates>, CliError> {
    let per_seed: Result<Vec<Vec<SeedRates>>, CliError> = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let mut c = cfg.clone();
            c.master_seed = base_seed.wrapping_add(s);
            let (_, m) = simulate(&c)?;
            Ok(m.links
                .iter()
                .map(|l| SeedRates {
                    seed: c.master_seed,
                    link: l.vehicle,
                    detection_rate: l.detection_rate,
                    isolation_exact_rate: l.isolation_exact_rate,
                })
                .collect())
        })
        .collect();
    Ok(per_seed?.into_iter().flatten().collect())
}

pub fn rate_summaries(rates: &[SeedRates]) -> Vec<RateSummary> {
    let mut links: Vec<usize> = rates.iter().map(|r| r.link).collect();
    links.sort_unstable();
    links.dedup();
    let mut out = Vec::new();
    for link in links {
        let of_link: Vec<&SeedRates> = rates.iter().filter(|r| r.link == link).collect();
        let det: Vec<f64> = of_link.iter().filter_map(|r| r.detection_rate).collect();
        let iso: Vec<f64> = of_link.iter().filter_map(|r| r.isolation_exact_rate).collect();
        out.extend(summarize("detection_rate", link, &det));
        out.extend(summarize("isolation_exact_rate", link, &iso));
    }
    out
}

/// Multi-seed rate estimation; writes `rates.csv`, `per_seed.csv` and
/// `manifest.txt`.
pub fn cmd_sweep(
    scenario: &Path,
    seeds: usize,
    base_seed: Option<u64>,
    out_dir: &Path,
) -> Result<(RunManifest, Vec<RateSummary>), CliError> {
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let cfg = read_scenario(scenario)?;
    let base = resolve_seed(base_seed, cfg.master_seed)?;
    let rates = sweep_rates(&cfg, base, seeds)?;
    let summary = rate_summaries(&rates);

    let opt = |x: Option<f64>| x.map_or_else(|| "n/a".into(), fmt_g9);
    let mut per_seed = String::from("seed,link,detection_rate,isolation_exact_rate\n");
    for r in &rates {
        per_seed.push_str(&format!(
            "{},{},{},{}\n",
            r.seed,
            r.link,
            opt(r.detection_rate),
            opt(r.isolation_exact_rate)
        ));
    }
    let mut rates_csv = String::from("metric,link,mean,min,max,seeds\n");
    for s in &summary {
        rates_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.metric,
            s.link,
            fmt_g9(s.mean),
            fmt_g9(s.min),
            fmt_g9(s.max),
            s.count
        ));
    }

    let mut w = Writer {
        root: out_dir.to_path_buf(),
        files: Vec::new(),
    };
    w.write("rates.csv", &rates_csv)?;
    w.write("per_seed.csv", &per_seed)?;
    let mut manifest = RunManifest {
        scenario: scenario.to_path_buf(),
        seed: base,
        out_dir: out_dir.to_path_buf(),
        files: w.files.clone(),
        exit_status: 0,
    };
    manifest.files.push("manifest.txt".into());
    w.write("manifest.txt", &manifest.text())?;
    Ok((manifest, summary))
}
