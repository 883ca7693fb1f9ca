use std::path::{Path, PathBuf};

use genbath::amplifier::{build_amplifier, simulate_representation, steady_state_predictions, Amplifier, AmplifierRun};
use genbath::husimi::husimi_q;
use genbath::lindblad::window_stats;
use genbath::validation::{acceptance, acceptance_from_runs, compare_runs, run_both, steady_window, CheckOutcome};
use genbath::{AmplifierConfig, Predictions, ThermoRecord};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{husimi_csv, husimi_file_name, timeseries_csv, write, write_json};
use crate::{Cli, CliError, Command, Outcome};

pub fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = cli.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Simulate { check } => simulate(&cfg, &out, check),
        Command::VerifyEquivalence { check } => verify_equivalence(&cfg, &out, check),
        Command::Predict => predict(&cfg, &out),
        Command::Husimi { times } => husimi(&cfg, &out, &times),
        Command::Check => check_all(&cfg),
    }
}

fn prepare(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))
}

#[derive(Debug, Serialize)]
struct PredictionsOut {
    dn_dt: f64,
    sigma_z: f64,
    #[serde(rename = "dHext_dt")]
    dhext_dt: f64,
    #[serde(rename = "dHsys_dt")]
    dhsys_dt: f64,
    work: f64,
    heat: f64,
    fano: f64,
    correlator: Option<f64>,
}

impl From<Predictions> for PredictionsOut {
    fn from(p: Predictions) -> Self {
        Self {
            dn_dt: p.dn_dt,
            sigma_z: p.sigma_z,
            dhext_dt: p.dhext_dt,
            dhsys_dt: p.dhsys_dt,
            work: p.work,
            heat: p.heat,
            fano: p.fano,
            correlator: p.correlator,
        }
    }
}

#[derive(Debug, Serialize)]
struct CheckOut {
    id: &'static str,
    description: &'static str,
    value: f64,
    bound: String,
    passed: bool,
}

impl From<&CheckOutcome> for CheckOut {
    fn from(c: &CheckOutcome) -> Self {
        Self { id: c.id, description: c.description, value: c.value, bound: c.bound.clone(), passed: c.passed }
    }
}

#[derive(Debug, Serialize)]
struct SteadyWindow {
    start: f64,
    end: f64,
    samples: usize,
    dn_dt: f64,
    sigma_z: f64,
    work_power: f64,
    heat_power: f64,
    #[serde(rename = "dHext_dt")]
    dhext_dt: f64,
    #[serde(rename = "dHsys_dt")]
    dhsys_dt: f64,
}

/// Largest absolute entry of each residual column.
#[derive(Debug, Serialize)]
struct ResidualMax {
    residual_first_law: f64,
    residual_cost_identity: f64,
}

#[derive(Debug, Serialize)]
struct MonitorMax {
    trace_error: f64,
    hermiticity_error: f64,
    leak_top2: f64,
}

#[derive(Debug, Serialize)]
struct Integration {
    accepted_steps: usize,
    rejected_steps: usize,
    rhs_evals: usize,
    error_estimate: f64,
    degraded: bool,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    samples: usize,
    steady_window: SteadyWindow,
    predictions: PredictionsOut,
    residual_max: ResidualMax,
    monitor_max: MonitorMax,
    integration: Integration,
    checks: Vec<CheckOut>,
    all_passed: bool,
}

fn steady(cfg: &AmplifierConfig, run: &AmplifierRun) -> Result<SteadyWindow, CliError> {
    let window = steady_window(cfg)?;
    let s = &run.series;
    let times = s.times();
    let mean = |f: fn(&ThermoRecord) -> f64| window_stats(&times, &s.values(f), window);
    let dn = mean(|r| r.dn_dt)?;
    Ok(SteadyWindow {
        start: window.0,
        end: window.1,
        samples: dn.samples,
        dn_dt: dn.mean,
        sigma_z: mean(|r| r.sigma_z)?.mean,
        work_power: mean(|r| r.work_power)?.mean,
        heat_power: mean(|r| r.heat_power)?.mean,
        dhext_dt: mean(|r| r.dhext_dt)?.mean,
        dhsys_dt: mean(|r| r.dhsys_dt)?.mean,
    })
}

fn simulate(cfg: &RunConfig, out: &Path, check: bool) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let (amp, gen, th) = run_both(&cfg.amplifier())?;
    let run = selected(&amp, &gen, &th);
    let report = acceptance_from_runs(&amp, &gen, &th, &grid)?;
    let s = &run.series;
    let traj = &run.trajectory;
    let stats = traj.stats();
    let summary = Summary {
        config: cfg,
        samples: s.len(),
        steady_window: steady(&amp.config, run)?,
        predictions: steady_state_predictions(&amp.config).into(),
        residual_max: ResidualMax {
            residual_first_law: s.max_abs(|r| r.residual_first_law),
            residual_cost_identity: s.max_abs(|r| r.residual_cost_identity),
        },
        monitor_max: MonitorMax {
            trace_error: s.max_abs(|r| r.trace_error),
            hermiticity_error: traj.monitors().iter().fold(0.0, |m, x| m.max(x.hermiticity_error)),
            leak_top2: s.max_abs(|r| r.leak_top2),
        },
        integration: Integration {
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            rhs_evals: stats.rhs_evals,
            error_estimate: stats.error_estimate,
            degraded: traj.is_degraded(),
        },
        checks: report.checks.iter().map(CheckOut::from).collect(),
        all_passed: report.all_passed(),
    };
    prepare(out)?;
    write(&out.join("timeseries.csv"), &timeseries_csv(s))?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(if traj.is_degraded() {
        Outcome::Degraded
    } else if check && !report.all_passed() {
        Outcome::ChecksFailed
    } else {
        Outcome::Success
    })
}

fn selected<'a>(amp: &Amplifier, gen: &'a AmplifierRun, th: &'a AmplifierRun) -> &'a AmplifierRun {
    match amp.config.representation {
        genbath::Representation::Generalized => gen,
        genbath::Representation::Thermal => th,
    }
}

/// Tolerances applied by `verify-equivalence --check`.
const EQUIVALENCE_TOL: Tolerances = Tolerances { n_mean: 1e-6, n_sq: 1e-6, husimi: 1e-8, qubit_flip: 1e-6 };

#[derive(Debug, Clone, Copy, Serialize)]
struct Tolerances {
    n_mean: f64,
    n_sq: f64,
    husimi: f64,
    qubit_flip: f64,
}

#[derive(Debug, Serialize)]
struct EquivalenceOut<'a> {
    config: &'a RunConfig,
    max_abs_diff: Tolerances,
    tolerance: Tolerances,
    passed: bool,
    degraded: bool,
}

fn verify_equivalence(cfg: &RunConfig, out: &Path, check: bool) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let (amp, gen, th) = run_both(&cfg.amplifier())?;
    let eq = compare_runs(&amp, &gen, &th, &grid)?;
    let d = Tolerances { n_mean: eq.n_mean, n_sq: eq.n_sq, husimi: eq.husimi, qubit_flip: eq.qubit_flip };
    let t = EQUIVALENCE_TOL;
    let passed = d.n_mean <= t.n_mean && d.n_sq <= t.n_sq && d.husimi <= t.husimi && d.qubit_flip <= t.qubit_flip;
    let degraded = gen.trajectory.is_degraded() || th.trajectory.is_degraded();
    println!(
        "max |d<n>| = {:.3e}, max |d<n^2>| = {:.3e}, max |dQ| = {:.3e}, max |sz_gen + sz_th| = {:.3e}",
        d.n_mean, d.n_sq, d.husimi, d.qubit_flip
    );
    prepare(out)?;
    write_json(&out.join("equivalence.json"), &EquivalenceOut { config: cfg, max_abs_diff: d, tolerance: t, passed, degraded })?;
    Ok(if degraded {
        Outcome::Degraded
    } else if check && !passed {
        Outcome::ChecksFailed
    } else {
        Outcome::Success
    })
}

#[derive(Debug, Serialize)]
struct Normalized {
    work_over_omega_gamma: f64,
    heat_over_omega_gamma: f64,
    #[serde(rename = "dHext_dt_over_omega_gamma")]
    dhext_dt_over_omega_gamma: f64,
    dn_dt_over_gamma: f64,
}

#[derive(Debug, Serialize)]
struct PredictionsFile<'a> {
    config: &'a RunConfig,
    predictions: PredictionsOut,
    normalized: Normalized,
}

fn predict(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let a = cfg.amplifier();
    let p = steady_state_predictions(&a);
    let wy = a.omega * a.gamma;
    let normalized = Normalized {
        work_over_omega_gamma: p.work / wy,
        heat_over_omega_gamma: p.heat / wy,
        dhext_dt_over_omega_gamma: p.dhext_dt / wy,
        dn_dt_over_gamma: p.dn_dt / a.gamma,
    };
    prepare(out)?;
    write_json(&out.join("predictions.json"), &PredictionsFile { config: cfg, predictions: p.into(), normalized })?;
    Ok(Outcome::Success)
}

/// Index of the sample at `t` (units of `1/gamma`), if `t` is one.
fn sample_index(t: f64, cfg: &AmplifierConfig) -> Option<usize> {
    let k = t / cfg.sample_interval;
    let r = k.round();
    let on_grid = (k - r).abs() <= 1e-9 * r.max(1.0);
    let in_range = t >= 0.0 && t <= cfg.t_max * (1.0 + 1e-12) + 1e-12;
    (on_grid && in_range).then_some(r as usize)
}

fn husimi(cfg: &RunConfig, out: &Path, times: &[f64]) -> Result<Outcome, CliError> {
    let mut a = cfg.amplifier();
    let mut last = 0;
    for &t in times {
        let k = sample_index(t, &a).ok_or_else(|| {
            CliError::Config(format!(
                "time {t} is not a sample of the run (interval {}, t_max {})",
                a.sample_interval, a.t_max
            ))
        })?;
        last = last.max(k);
    }
    a.t_max = last as f64 * a.sample_interval;
    let grid = cfg.grid()?;
    let amp = build_amplifier(&a)?;
    let run = simulate_representation(&amp, a.representation)?;
    let unit = a.time_unit()?;
    prepare(out)?;
    for &t in times {
        let q = husimi_q(&run.cavity_at(&amp, t * unit)?, &grid)?;
        write(&out.join(husimi_file_name(t)), &husimi_csv(&q))?;
    }
    Ok(if run.trajectory.is_degraded() { Outcome::Degraded } else { Outcome::Success })
}

fn check_all(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = acceptance(&cfg.amplifier(), &cfg.grid()?)?;
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{} {verdict}: {} = {:.6e} (need {})", c.id, c.description, c.value, c.bound);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", report.checks.len() - failed);
    Ok(if failed == 0 { Outcome::Success } else { Outcome::ChecksFailed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_times() {
        let cfg = AmplifierConfig::default();
        assert_eq!(sample_index(0.0, &cfg), Some(0));
        assert_eq!(sample_index(20.0, &cfg), Some(400));
        assert_eq!(sample_index(0.15, &cfg), Some(3));
        assert_eq!(sample_index(0.07, &cfg), None);
        assert_eq!(sample_index(20.05, &cfg), None);
        assert_eq!(sample_index(-0.05, &cfg), None);
    }
}
