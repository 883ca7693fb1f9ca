//! The acceptance checks of the amplifier, packaged for the command line.

use crate::amplifier::{build_amplifier, simulate_representation, Amplifier, AmplifierConfig, AmplifierRun};
use crate::bath::{interaction_frame_unitary, Representation};
use crate::error::Result;
use crate::husimi::{husimi_q, HusimiEvaluator, HusimiGrid};
use crate::ledger::ThermoRecord;
use crate::lindblad::{evolve, thermal_qubit_channels, window_stats, Channel, IntegratorConfig, MasterEquation};
use crate::operator::{
    c, dissipator_apply, expectation, kron, sigma_minus, sigma_z, thermal_state, DensityMatrix,
    HilbertSpace, Operator,
};
use crate::random::{random_density, random_hermitian, random_operator, random_unitary, Rng};
use crate::schedule::ScheduledOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: &'static str,
    pub description: &'static str,
    pub value: f64,
    /// Human-readable acceptance band for `value`.
    pub bound: String,
    pub passed: bool,
}

impl CheckOutcome {
    fn within(id: &'static str, description: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Self { id, description, value, bound: format!("[{lo}, {hi}]"), passed: value >= lo && value <= hi }
    }

    fn at_most(id: &'static str, description: &'static str, value: f64, max: f64) -> Self {
        Self { id, description, value, bound: format!("<= {max:e}"), passed: value <= max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceReport {
    pub checks: Vec<CheckOutcome>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Discrepancies between independent integrations of the two members.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub n_mean: f64,
    pub n_sq: f64,
    pub husimi: f64,
    /// `max |<sz>_gen + <sz>_th|`
    pub qubit_flip: f64,
}

/// Runs both members concurrently.
pub fn run_both(cfg: &AmplifierConfig) -> Result<(Amplifier, AmplifierRun, AmplifierRun)> {
    let amp = build_amplifier(cfg)?;
    let (gen, th) = rayon::join(
        || simulate_representation(&amp, Representation::Generalized),
        || simulate_representation(&amp, Representation::Thermal),
    );
    Ok((amp, gen?, th?))
}

pub fn compare_runs(
    amp: &Amplifier,
    gen: &AmplifierRun,
    th: &AmplifierRun,
    grid: &HusimiGrid,
) -> Result<EquivalenceReport> {
    let mut rep = EquivalenceReport { n_mean: 0.0, n_sq: 0.0, husimi: 0.0, qubit_flip: 0.0 };
    for (rg, rt) in gen.trajectory.states().iter().zip(th.trajectory.states()) {
        let dn = expectation(&amp.number, rg)? - expectation(&amp.number, rt)?;
        let dn2 = expectation(&amp.number_sq, rg)? - expectation(&amp.number_sq, rt)?;
        let flip = amp.sigma_z_of(rg)? + amp.sigma_z_of(rt)?;
        rep.n_mean = rep.n_mean.max(dn.norm());
        rep.n_sq = rep.n_sq.max(dn2.norm());
        rep.qubit_flip = rep.qubit_flip.max(flip.abs());
    }
    if let (Some((_, rg)), Some((_, rt))) = (gen.trajectory.last(), th.trajectory.last()) {
        let qg = husimi_q(&amp.cavity_state(rg)?, grid)?;
        let qt = husimi_q(&amp.cavity_state(rt)?, grid)?;
        rep.husimi = qg.max_abs_diff(&qt)?;
    }
    Ok(rep)
}

/// Worst deviation found by each seeded property suite, with its tolerance.
pub fn property_suites(seed: u64, trials: usize) -> Vec<(&'static str, f64, f64)> {
    let mut rng = Rng::seeded(seed);
    let space = HilbertSpace::new(vec![2, 3]).unwrap();
    let mut trace = 0.0_f64;
    let mut fixed = 0.0_f64;
    let mut cov = 0.0_f64;
    let mut unit = 0.0_f64;
    let mut kr = 0.0_f64;
    for _ in 0..trials {
        let rho = random_density(&space, &mut rng);
        let jump = random_operator(&space, &mut rng);
        trace = trace.max(dissipator_apply(&jump, &rho).unwrap().trace().norm());

        let omega = rng.uniform(0.2, 3.0);
        let temp = rng.uniform(0.05, 5.0);
        let h = sigma_z().scale(c(omega / 2.0));
        let rho_t = thermal_state(&h, temp).unwrap();
        let mut sum = Operator::zeros(&HilbertSpace::qubit());
        for ch in thermal_qubit_channels(omega, 1.0, temp).unwrap() {
            sum = &sum + &dissipator_apply(ch.static_jump().unwrap(), &rho_t).unwrap().scale(c(ch.rate()));
        }
        fixed = fixed.max(sum.max_abs());

        let u = random_unitary(&space, &mut rng);
        let rate = rng.uniform(0.0, 2.0);
        let inner = DensityMatrix::new(&(&u.adjoint() * rho.op()) * &u).unwrap();
        let lhs = &(&u * &dissipator_apply(&jump, &inner).unwrap()) * &u.adjoint();
        let rhs = dissipator_apply(&(&(&u * &jump) * &u.adjoint()), &rho).unwrap();
        cov = cov.max((&lhs - &rhs).scale(c(rate)).max_abs());

        let hs = random_hermitian(&space, &mut rng);
        let t = rng.uniform(-10.0, 10.0);
        unit = unit.max(interaction_frame_unitary(&hs, &u, t).unwrap().unitarity_error());

        let a = random_operator(&HilbertSpace::qubit(), &mut rng);
        let b = random_operator(&HilbertSpace::fock(3).unwrap(), &mut rng);
        let k = kron(&a, &b);
        for row in 0..6 {
            for col in 0..6 {
                let brute = a.get(row / 3, col / 3) * b.get(row % 3, col % 3);
                kr = kr.max((k.get(row, col) - brute).norm());
            }
        }
    }
    vec![
        ("dissipator trace", trace, 1e-12),
        ("thermal fixed point", fixed, 1e-12),
        ("covariance of L_UT", cov, 1e-12),
        ("U(t) unitarity", unit, 1e-12),
        ("kron brute force", kr, 1e-13),
    ]
}

/// Largest error of single-qubit decay against `2 exp(-gamma t) - 1` on
/// `gamma t in [0, 5]`.
pub fn decay_oracle_error(gamma: f64) -> Result<f64> {
    let q = HilbertSpace::qubit();
    let me = MasterEquation::new(ScheduledOperator::zero(&q), vec![Channel::new(sigma_minus(), gamma, "decay")?])?;
    let e = DensityMatrix::basis(&q, 1)?;
    let cfg = IntegratorConfig { sample_interval: 0.05 / gamma, ..Default::default() };
    let traj = evolve(&me, &e, 5.0 / gamma, &cfg)?;
    let mut worst = 0.0_f64;
    for (&t, rho) in traj.times().iter().zip(traj.states()) {
        let sz = expectation(&sigma_z(), rho)?.re;
        worst = worst.max((sz - (2.0 * (-gamma * t).exp() - 1.0)).abs());
    }
    Ok(worst)
}

/// The steady window: the last `5/gamma` of the run.
pub fn steady_window(cfg: &AmplifierConfig) -> Result<(f64, f64)> {
    let unit = cfg.time_unit()?;
    let end = cfg.t_max * unit;
    Ok(((end - 5.0 * unit).max(0.0), end))
}

/// Every acceptance check for `cfg` (the flagship when defaulted).
pub fn acceptance(cfg: &AmplifierConfig, grid: &HusimiGrid) -> Result<AcceptanceReport> {
    let (amp, gen, th) = run_both(cfg)?;
    acceptance_from_runs(&amp, &gen, &th, grid)
}

/// The acceptance checks on runs of both members that already exist.
pub fn acceptance_from_runs(
    amp: &Amplifier,
    gen: &AmplifierRun,
    th: &AmplifierRun,
    grid: &HusimiGrid,
) -> Result<AcceptanceReport> {
    let cfg = &amp.config;
    let run = match cfg.representation {
        Representation::Generalized => gen,
        Representation::Thermal => th,
    };
    let s = &run.series;
    let last = *s.last().expect("a run has at least one sample");
    let (w, y) = (cfg.omega, cfg.gamma);
    let times = s.times();
    let window = steady_window(cfg)?;
    let mean = |f: fn(&ThermoRecord) -> f64| -> Result<f64> {
        Ok(window_stats(&times, &s.values(f), window)?.mean)
    };
    let eq = compare_runs(amp, gen, th, grid)?;
    let cav = amp.cavity_state(run.trajectory.last().unwrap().1)?;
    let eval = HusimiEvaluator::new(&cav)?;
    let r = eval.peak_radius(grid.re_max.abs().max(grid.im_max.abs()));
    let props = property_suites(2024, 50);
    let prop_worst = props.iter().map(|(_, v, tol)| v / tol).fold(0.0, f64::max);

    let checks = vec![
        CheckOutcome::within("A1", "steady-window d<n>/dt / gamma", mean(|r| r.dn_dt)? / y, 0.49, 0.51),
        CheckOutcome::at_most("A2", "|<sigma_z>| at t_max", last.sigma_z.abs(), 0.02),
        CheckOutcome::within("A3", "Fano factor at t_max", last.fano.unwrap_or(f64::NAN), 0.95, 1.05),
        CheckOutcome::within("A4", "steady-window work / (omega gamma)", mean(|r| r.work_power)? / (w * y), 0.98, 1.02),
        CheckOutcome::within("A5", "steady-window heat / (omega gamma)", mean(|r| r.heat_power)? / (w * y), -0.52, -0.48),
        CheckOutcome::at_most(
            "A6",
            "max |work - 2 dHext/dt| / (omega gamma)",
            s.max_abs(|r| r.residual_cost_identity) / (w * y),
            1e-6,
        ),
        CheckOutcome::at_most(
            "A7",
            "max |first-law residual| / (omega gamma)",
            s.max_abs(|r| r.residual_first_law) / (w * y),
            1e-6,
        ),
        CheckOutcome::at_most(
            "A8",
            "representation mismatch, worst of dn/1e-6, dQ/1e-8, flip/1e-6",
            (eq.n_mean / 1e-6).max(eq.husimi / 1e-8).max(eq.qubit_flip / 1e-6),
            1.0,
        ),
        CheckOutcome::at_most("A9", "qubit decay vs closed form", decay_oracle_error(1.0)?, 1e-8),
        CheckOutcome::at_most("A10", "property suites, worst deviation / tolerance", prop_worst, 1.0),
        CheckOutcome::at_most("A11", "Husimi angular variation at peak radius", eval.angular_variation(r, 720), 1e-6),
    ];
    Ok(AcceptanceReport { checks })
}
