//! Adaptive Dormand-Prince 5(4) and fixed-step RK4 integration of a
//! [`MasterEquation`], sampled on a uniform time grid.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CompiledEquation, MasterEquation};
use crate::error::{Error, Result};
use crate::operator::{c, DensityMatrix, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Embedded Dormand-Prince 5(4) with error control on the max-norm of rho.
    DormandPrince,
    /// Classical 4th-order Runge-Kutta with a fixed step (`max_step`).
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; also the step used by [`Method::Rk4`].
    pub max_step: f64,
    pub sample_interval: f64,
    pub method: Method,
    /// Slot holding the truncated bosonic mode whose top two Fock levels are
    /// monitored.
    pub fock_slot: Option<usize>,
    /// Top-two Fock population above which integration aborts.
    pub leak_threshold: f64,
    /// Sample-level thresholds above which a run is flagged degraded.
    pub trace_threshold: f64,
    pub hermiticity_threshold: f64,
    /// Dormand-Prince steps are capped at `stability_limit / B`, with `B` from
    /// [`MasterEquation::generator_bound`]. Error control alone lets the step
    /// grow until the fastest, unpopulated modes sit just outside the stability
    /// region, where they are amplified a little on every step. `INFINITY`
    /// disables the cap.
    pub stability_limit: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: f64::INFINITY,
            sample_interval: 0.05,
            method: Method::DormandPrince,
            fock_slot: None,
            leak_threshold: 1e-6,
            trace_threshold: 1e-8,
            hermiticity_threshold: 1e-9,
            stability_limit: 0.9,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rtol", self.rtol)?;
        positive("atol", self.atol)?;
        positive("max_step", self.max_step)?;
        positive("sample_interval", self.sample_interval)?;
        positive("stability_limit", self.stability_limit)?;
        if !self.sample_interval.is_finite() {
            return Err(Error::Config("sample_interval must be finite".into()));
        }
        if self.method == Method::Rk4 && !self.max_step.is_finite() {
            return Err(Error::Config("fixed-step RK4 needs a finite max_step".into()));
        }
        Ok(())
    }
}

/// Numerical-health record for one sample, measured before re-symmetrizing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleMonitor {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub top2_fock_leakage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Sum over accepted steps of the max-norm of the embedded error estimate.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    monitors: Vec<SampleMonitor>,
    degraded: bool,
    stats: IntegrationStats,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn monitors(&self) -> &[SampleMonitor] {
        &self.monitors
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when some sample breached the trace or Hermiticity threshold.
    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    pub fn stats(&self) -> &IntegrationStats {
        &self.stats
    }

    pub fn last(&self) -> Option<(f64, &DensityMatrix)> {
        self.times.last().map(|&t| (t, self.states.last().unwrap()))
    }

    /// Index of the sample at time `t` (to within a part in 1e9 of the
    /// sampling grid).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let scale = self.times.last().copied().unwrap_or(1.0).abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * scale)
            .ok_or(Error::TimeNotSampled(t))
    }

    /// Minimum eigenvalue of each requested sample; the on-demand positivity
    /// audit.
    pub fn audit_positivity(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.states[i].min_eigenvalue()).collect()
    }

    pub fn map_states(&self, f: impl Fn(f64, &DensityMatrix) -> Result<DensityMatrix>) -> Result<Self> {
        let states = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| f(t, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { states, ..self.clone() })
    }
}

struct LeakProbe {
    indices: Vec<usize>,
}

impl LeakProbe {
    fn new(me: &MasterEquation, slot: Option<usize>) -> Result<Option<Self>> {
        let Some(slot) = slot else { return Ok(None) };
        let space = me.space();
        if slot >= space.slots() {
            return Err(Error::InvalidSlot { slot, slots: space.slots() });
        }
        let d = space.dims()[slot];
        let indices = (0..space.dim())
            .filter(|&i| space.multi_index(i)[slot] + 2 >= d)
            .collect();
        Ok(Some(Self { indices }))
    }

    fn leak(&self, rho: &DMatrix<Complex64>) -> f64 {
        self.indices.iter().map(|&i| rho[(i, i)].re).sum()
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

type M = DMatrix<Complex64>;

fn lin(y: &M, h: f64, terms: &[(f64, &M)]) -> M {
    let mut out = y.clone();
    for &(a, k) in terms {
        if a != 0.0 {
            let w = h * a;
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += v * w;
            }
        }
    }
    out
}

const ONE_C: Complex64 = Complex64::new(1.0, 0.0);

struct Stepper<'a> {
    eq: &'a CompiledEquation,
    dim: usize,
    evals: usize,
}

impl Stepper<'_> {
    fn f(&mut self, y: &M, t: f64) -> M {
        let mut out = M::zeros(self.dim, self.dim);
        self.eq.eval(y, t, &mut out);
        self.evals += 1;
        out
    }

    /// One Dormand-Prince attempt; returns (y_new, k7, error matrix).
    fn dopri(&mut self, y: &M, k1: &M, t: f64, h: f64) -> (M, M, M) {
        let k2 = self.f(&lin(y, h, &[(A21, k1)]), t + C2 * h);
        let k3 = self.f(&lin(y, h, &[(A31, k1), (A32, &k2)]), t + C3 * h);
        let k4 = self.f(&lin(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]), t + C4 * h);
        let k5 = self.f(
            &lin(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            t + C5 * h,
        );
        let k6 = self.f(
            &lin(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            t + h,
        );
        let y_new = lin(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = self.f(&y_new, t + h);
        let zero = M::zeros(self.dim, self.dim);
        let err = lin(
            &zero,
            h,
            &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        (y_new, k7, err)
    }

    fn rk4(&mut self, y: &M, t: f64, h: f64) -> M {
        let k1 = self.f(y, t);
        let k2 = self.f(&lin(y, h, &[(0.5, &k1)]), t + 0.5 * h);
        let k3 = self.f(&lin(y, h, &[(0.5, &k2)]), t + 0.5 * h);
        let k4 = self.f(&lin(y, h, &[(1.0, &k3)]), t + h);
        lin(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)])
    }
}

fn scaled_error(err: &M, y: &M, y_new: &M, cfg: &IntegratorConfig) -> f64 {
    err.iter()
        .zip(y.iter().zip(y_new.iter()))
        .map(|(e, (a, b))| e.norm() / (cfg.atol + cfg.rtol * a.norm().max(b.norm())))
        .fold(0.0, f64::max)
}

fn max_norm(m: &M) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

/// Hairer's starting-step heuristic on the max-norm.
fn initial_step(stepper: &mut Stepper<'_>, y: &M, f0: &M, t: f64, cfg: &IntegratorConfig, h_max: f64) -> f64 {
    let sc = |m: &M, base: &M| {
        m.iter()
            .zip(base.iter())
            .map(|(v, b)| v.norm() / (cfg.atol + cfg.rtol * b.norm()))
            .fold(0.0, f64::max)
    };
    let d0 = sc(y, y);
    let d1 = sc(f0, y);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = lin(y, h0, &[(1.0, f0)]);
    let f1 = stepper.f(&y1, t + h0);
    let d2 = sc(&(&f1 - f0), y) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Integrates `me` from `rho0` at `t = 0` to `t_max`, recording samples at
/// every multiple of `cfg.sample_interval`.
///
/// Each sample is re-symmetrized, `rho <- (rho + rho^dag)/2`, before it is
/// recorded and before integration continues; monitors are measured on the
/// raw state.
pub fn evolve(
    me: &MasterEquation,
    rho0: &DensityMatrix,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if rho0.space() != me.space() {
        return Err(Error::SpaceMismatch {
            left: me.space().dims().to_vec(),
            right: rho0.space().dims().to_vec(),
        });
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::Config(format!("t_max must be finite and nonnegative, got {t_max}")));
    }
    let probe = LeakProbe::new(me, cfg.fock_slot)?;
    let eq = me.compile();
    let dim = me.space().dim();
    let mut stepper = Stepper { eq: &eq, dim, evals: 0 };
    let bound = me.generator_bound();
    let h_max = if bound > 0.0 { cfg.max_step.min(cfg.stability_limit / bound) } else { cfg.max_step };

    let dt = cfg.sample_interval;
    let n_samples = (t_max / dt + 1e-9).floor() as usize;
    let sample_time = |k: usize| k as f64 * dt;

    let mut traj = Trajectory {
        times: Vec::with_capacity(n_samples + 1),
        states: Vec::with_capacity(n_samples + 1),
        monitors: Vec::with_capacity(n_samples + 1),
        degraded: false,
        stats: IntegrationStats::default(),
    };

    let mut y = rho0.matrix().clone();
    record(&mut traj, &mut y, 0.0, me, probe.as_ref(), cfg)?;

    let mut t = 0.0;
    let mut h = f64::NAN;
    let mut k1: Option<M> = None;
    for k in 1..=n_samples {
        let target = sample_time(k);
        match cfg.method {
            Method::Rk4 => {
                let span = target - t;
                let steps = (span / cfg.max_step - 1e-9).ceil().max(1.0) as usize;
                let hs = span / steps as f64;
                for s in 0..steps {
                    y = stepper.rk4(&y, t + s as f64 * hs, hs);
                    traj.stats.accepted += 1;
                }
            }
            Method::DormandPrince => {
                while t < target {
                    let f0 = match k1.take() {
                        Some(f) => f,
                        None => stepper.f(&y, t),
                    };
                    if h.is_nan() {
                        h = initial_step(&mut stepper, &y, &f0, t, cfg, h_max);
                    }
                    let remaining = target - t;
                    let clipped = h >= remaining;
                    let h_try = if clipped { remaining } else { h };
                    if h_try < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                        return Err(Error::StepUnderflow { t, step: h_try });
                    }
                    let (y_new, k7, err) = stepper.dopri(&y, &f0, t, h_try);
                    let norm = scaled_error(&err, &y, &y_new, cfg);
                    let fac = if norm == 0.0 {
                        FAC_MAX
                    } else {
                        (SAFETY * norm.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                    };
                    if norm <= 1.0 {
                        traj.stats.accepted += 1;
                        traj.stats.error_estimate += max_norm(&err);
                        t = if clipped { target } else { t + h_try };
                        y = y_new;
                        k1 = Some(k7);
                        h = if clipped && fac >= 1.0 { h } else { h_try * fac };
                    } else {
                        traj.stats.rejected += 1;
                        h = h_try * fac.min(1.0);
                        k1 = Some(f0);
                    }
                    h = h.min(h_max);
                }
                // The recorded state is re-symmetrized, so the cached stage
                // no longer matches it.
                k1 = None;
            }
        }
        t = target;
        record(&mut traj, &mut y, target, me, probe.as_ref(), cfg)?;
    }
    traj.stats.rhs_evals = stepper.evals;
    Ok(traj)
}

fn record(
    traj: &mut Trajectory,
    y: &mut M,
    t: f64,
    me: &MasterEquation,
    probe: Option<&LeakProbe>,
    cfg: &IntegratorConfig,
) -> Result<()> {
    let raw = Operator::from_parts(me.space().clone(), y.clone());
    let hermiticity_error = raw.hermiticity_error();
    let sym = (y.clone() + y.adjoint()) * c(0.5);
    *y = sym;
    let trace_error = (y.trace() - ONE_C).norm();
    let top2_fock_leakage = probe.map_or(0.0, |p| p.leak(y));
    if top2_fock_leakage > cfg.leak_threshold {
        return Err(Error::TruncationLeakage { t, leak: top2_fock_leakage, threshold: cfg.leak_threshold });
    }
    if trace_error > cfg.trace_threshold || hermiticity_error > cfg.hermiticity_threshold {
        traj.degraded = true;
    }
    traj.times.push(t);
    traj.states
        .push(DensityMatrix::new_unchecked(Operator::from_parts(me.space().clone(), y.clone())));
    traj.monitors.push(SampleMonitor { trace_error, hermiticity_error, top2_fock_leakage });
    Ok(())
}

/// Mean of a sampled series over a time window and its largest deviation
/// from that mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    pub spread: f64,
    pub samples: usize,
}

/// Statistics of `values` (sampled at `times`) over the closed window.
pub fn window_stats(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<WindowStats> {
    let (a, b) = window;
    let eps = 1e-9 * b.abs().max(1.0);
    let picked: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= a - eps && t <= b + eps)
        .map(|(_, &v)| v)
        .collect();
    if picked.is_empty() {
        return Err(Error::EmptyWindow(a, b));
    }
    let mean = picked.iter().sum::<f64>() / picked.len() as f64;
    let spread = picked.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    Ok(WindowStats { mean, spread, samples: picked.len() })
}

/// Window statistics for several rate series sampled on `traj`'s grid.
pub fn detect_steady_window(
    traj: &Trajectory,
    rates: &[&[f64]],
    window: (f64, f64),
) -> Result<Vec<WindowStats>> {
    let (lo, hi) = (traj.times.first().copied(), traj.times.last().copied());
    match (lo, hi) {
        (Some(lo), Some(hi)) if window.0 <= window.1 && window.0 >= lo - 1e-9 && window.1 <= hi + 1e-9 => {}
        _ => return Err(Error::EmptyWindow(window.0, window.1)),
    }
    rates.iter().map(|r| window_stats(&traj.times, r, window)).collect()
}
