//! Master equations `drho/dt = -i[H(t), rho] + sum_k rate_k D[c_k(t)] rho`
//! and their time integration.

mod integrator;

pub use integrator::{
    detect_steady_window, evolve, window_stats, IntegrationStats, IntegratorConfig, Method,
    SampleMonitor, Trajectory, WindowStats,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{c, DensityMatrix, HilbertSpace, Operator, I, ONE};
use crate::schedule::ScheduledOperator;
use crate::sparse::SparseOp;

/// A dissipative channel: jump operator and nonnegative rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    jump: ScheduledOperator,
    rate: f64,
    label: String,
}

impl Channel {
    pub fn new(jump: Operator, rate: f64, label: impl Into<String>) -> Result<Self> {
        Self::scheduled(ScheduledOperator::constant(jump), rate, label)
    }

    pub fn scheduled(jump: ScheduledOperator, rate: f64, label: impl Into<String>) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::InvalidRate(rate));
        }
        Ok(Self { jump, rate, label: label.into() })
    }

    pub fn jump(&self) -> &ScheduledOperator {
        &self.jump
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn space(&self) -> &HilbertSpace {
        self.jump.space()
    }

    /// The jump operator when it carries no time dependence, up to a global
    /// phase (which cancels inside a dissipator).
    pub fn static_jump(&self) -> Option<&Operator> {
        self.jump.single_phase()
    }

    pub fn jump_at(&self, t: f64) -> Operator {
        self.jump.eval(t)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Thermal qubit channels for `H = omega sigma_z / 2` at temperature `T`:
/// `sigma_-` at `gamma (n + 1)` and `sigma_+` at `gamma n` with
/// `n = 1/(e^{omega/T} - 1)`. `T = 0` keeps only the decay channel.
pub fn thermal_qubit_channels(omega: f64, gamma: f64, temperature: f64) -> Result<Vec<Channel>> {
    use crate::operator::{sigma_minus, sigma_plus};
    if temperature.is_nan() || temperature < 0.0 {
        return Err(Error::NegativeTemperature(temperature));
    }
    if !temperature.is_finite() {
        return Err(Error::Config("thermal channels need a finite temperature".into()));
    }
    if temperature == 0.0 {
        return Ok(vec![Channel::new(sigma_minus(), gamma, "decay")?]);
    }
    let n_bar = 1.0 / (omega / temperature).exp_m1();
    Ok(vec![
        Channel::new(sigma_minus(), gamma * (n_bar + 1.0), "decay")?,
        Channel::new(sigma_plus(), gamma * n_bar, "absorption")?,
    ])
}

struct CompiledTerm {
    freq: f64,
    op: SparseOp,
}

enum CompiledChannel {
    Static { rate: f64, jump: SparseOp, jdj: SparseOp },
    Scheduled { rate: f64, jump: ScheduledOperator },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterEquation {
    space: HilbertSpace,
    hamiltonian: ScheduledOperator,
    channels: Vec<Channel>,
}

impl MasterEquation {
    pub fn new(hamiltonian: ScheduledOperator, channels: Vec<Channel>) -> Result<Self> {
        let space = hamiltonian.space().clone();
        for ch in &channels {
            if ch.space() != &space {
                return Err(Error::SpaceMismatch {
                    left: space.dims().to_vec(),
                    right: ch.space().dims().to_vec(),
                });
            }
        }
        Ok(Self { space, hamiltonian, channels })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &ScheduledOperator {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// True when neither the Hamiltonian nor any jump depends on time.
    pub fn is_autonomous(&self) -> bool {
        self.hamiltonian.is_static() && self.channels.iter().all(|c| c.static_jump().is_some())
    }

    /// Upper bound on the operator norm of the generator over all times,
    /// `2 sum ||H_k|| + sum_ch 2 rate (sum ||c_k||)^2`.
    pub fn generator_bound(&self) -> f64 {
        let h: f64 = self.hamiltonian.terms().iter().map(|t| t.op.spectral_norm()).sum();
        let d: f64 = self
            .channels
            .iter()
            .map(|ch| {
                let c: f64 = ch.jump().terms().iter().map(|t| t.op.spectral_norm()).sum();
                2.0 * ch.rate() * c * c
            })
            .sum();
        2.0 * h + d
    }

    /// `-i[H(t), rho] + sum_k rate_k D[c_k(t)] rho`.
    pub fn rhs(&self, rho: &DensityMatrix, t: f64) -> Result<Operator> {
        if rho.space() != &self.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims().to_vec(),
                right: rho.space().dims().to_vec(),
            });
        }
        let compiled = self.compile();
        let d = self.space.dim();
        let mut out = DMatrix::zeros(d, d);
        compiled.eval(rho.matrix(), t, &mut out);
        Ok(Operator::from_parts(self.space.clone(), out))
    }

    pub(crate) fn compile(&self) -> CompiledEquation {
        let hamiltonian = self
            .hamiltonian
            .terms()
            .iter()
            .map(|t| CompiledTerm { freq: t.freq, op: SparseOp::from_dense(t.op.matrix()) })
            .collect();
        let channels = self
            .channels
            .iter()
            .filter(|ch| ch.rate > 0.0 && !ch.jump.is_zero())
            .map(|ch| match ch.static_jump() {
                Some(j) => {
                    let jump = SparseOp::from_dense(j.matrix());
                    let jdj = SparseOp::from_dense(&(j.adjoint().matrix() * j.matrix()));
                    CompiledChannel::Static { rate: ch.rate, jump, jdj }
                }
                None => CompiledChannel::Scheduled { rate: ch.rate, jump: ch.jump.clone() },
            })
            .collect();
        CompiledEquation { dim: self.space.dim(), hamiltonian, channels }
    }
}

/// Free-function form of [`MasterEquation::rhs`].
pub fn rhs(me: &MasterEquation, rho: &DensityMatrix, t: f64) -> Result<Operator> {
    me.rhs(rho, t)
}

pub(crate) struct CompiledEquation {
    dim: usize,
    hamiltonian: Vec<CompiledTerm>,
    channels: Vec<CompiledChannel>,
}

impl CompiledEquation {
    /// Writes the right-hand side at `(rho, t)` into `out`.
    pub(crate) fn eval(&self, rho: &DMatrix<Complex64>, t: f64, out: &mut DMatrix<Complex64>) {
        out.fill(Complex64::new(0.0, 0.0));
        for term in &self.hamiltonian {
            let coef = if term.freq == 0.0 { -I } else { -I * (I * term.freq * t).exp() };
            term.op.acc_left(coef, rho, out);
            term.op.acc_right(-coef, rho, out);
        }
        let mut scratch = DMatrix::zeros(self.dim, self.dim);
        for ch in &self.channels {
            match ch {
                CompiledChannel::Static { rate, jump, jdj } => {
                    dissipate(*rate, jump, jdj, rho, &mut scratch, out);
                }
                CompiledChannel::Scheduled { rate, jump } => {
                    let j = jump.eval(t);
                    let sj = SparseOp::from_dense(j.matrix());
                    let jdj = SparseOp::from_dense(&(j.adjoint().matrix() * j.matrix()));
                    dissipate(*rate, &sj, &jdj, rho, &mut scratch, out);
                }
            }
        }
    }
}

fn dissipate(
    rate: f64,
    jump: &SparseOp,
    jdj: &SparseOp,
    rho: &DMatrix<Complex64>,
    scratch: &mut DMatrix<Complex64>,
    out: &mut DMatrix<Complex64>,
) {
    scratch.fill(Complex64::new(0.0, 0.0));
    jump.acc_left(ONE, rho, scratch);
    jump.acc_right_adjoint(c(rate), scratch, out);
    jdj.acc_left(c(-0.5 * rate), rho, out);
    jdj.acc_right(c(-0.5 * rate), rho, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{
        dissipator_apply, kron, sigma_minus, sigma_plus, sigma_z, thermal_state, HERMITIAN_TOL,
    };
    use crate::random::{random_density, random_hermitian, random_operator, Rng};

    fn qubit() -> HilbertSpace {
        HilbertSpace::qubit()
    }

    #[test]
    fn rhs_precession_of_coherence() {
        let omega = 1.7;
        let h = sigma_z().scale(c(omega / 2.0));
        let me = MasterEquation::new(ScheduledOperator::constant(h), vec![]).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let plus = DensityMatrix::pure(&qubit(), &[c(s), c(s)]).unwrap();
        let d = me.rhs(&plus, 0.0).unwrap();
        // d rho_ge/dt = -i (H_gg - H_ee) rho_ge = +i omega rho_ge
        let expect = I * omega * plus.op().get(0, 1);
        assert!((d.get(0, 1) - expect).norm() < 1e-15);
        assert!((d.get(0, 1).norm() - omega / 2.0).abs() < 1e-15);
        assert!(d.trace().norm() < 1e-15);
    }

    #[test]
    fn rhs_single_decay() {
        let gamma = 0.8;
        let me = MasterEquation::new(
            ScheduledOperator::zero(&qubit()),
            vec![Channel::new(sigma_minus(), gamma, "decay").unwrap()],
        )
        .unwrap();
        let e = DensityMatrix::basis(&qubit(), 1).unwrap();
        let d = me.rhs(&e, 0.0).unwrap();
        let g = DensityMatrix::basis(&qubit(), 0).unwrap();
        let expect = (g.op() - e.op()).scale(c(gamma));
        assert!(d.max_diff(&expect) < 1e-16);
    }

    #[test]
    fn rhs_vanishes_at_thermal_fixed_point() {
        let (omega, gamma, temp) = (1.0, 0.3, 0.7);
        let h = sigma_z().scale(c(omega / 2.0));
        let me = MasterEquation::new(
            ScheduledOperator::constant(h.clone()),
            thermal_qubit_channels(omega, gamma, temp).unwrap(),
        )
        .unwrap();
        let rho = thermal_state(&h, temp).unwrap();
        assert!(me.rhs(&rho, 0.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn sparse_rhs_matches_dense_definition() {
        let mut rng = Rng::seeded(5);
        let space = HilbertSpace::new(vec![2, 3]).unwrap();
        let h = random_hermitian(&space, &mut rng);
        let j1 = random_operator(&space, &mut rng);
        let j2 = kron(&sigma_plus(), &Operator::identity(&HilbertSpace::fock(3).unwrap()));
        let me = MasterEquation::new(
            ScheduledOperator::constant(h.clone()),
            vec![
                Channel::new(j1.clone(), 0.4, "a").unwrap(),
                Channel::new(j2.clone(), 1.1, "b").unwrap(),
            ],
        )
        .unwrap();
        let rho = random_density(&space, &mut rng);
        let dense = &(&h.commutator(rho.op()).unwrap().scale(-I)
            + &dissipator_apply(&j1, &rho).unwrap().scale(c(0.4)))
            + &dissipator_apply(&j2, &rho).unwrap().scale(c(1.1));
        let fast = me.rhs(&rho, 0.3).unwrap();
        assert!(fast.max_diff(&dense) < 1e-13);
        assert!(fast.trace().norm() < 1e-12);
        assert!(fast.hermiticity_error() < HERMITIAN_TOL);
    }

    #[test]
    fn scheduled_channel_matches_evaluated_jump() {
        use crate::schedule::PhaseTerm;
        let jump = ScheduledOperator::from_terms(
            &qubit(),
            vec![
                PhaseTerm { freq: 2.0, op: sigma_minus() },
                PhaseTerm { freq: 0.0, op: sigma_z().scale(c(0.3)) },
            ],
        )
        .unwrap();
        let ch = Channel::scheduled(jump.clone(), 0.9, "mixed").unwrap();
        assert!(ch.static_jump().is_none());
        let me = MasterEquation::new(ScheduledOperator::zero(&qubit()), vec![ch]).unwrap();
        let mut rng = Rng::seeded(9);
        let rho = random_density(&qubit(), &mut rng);
        let t = 0.77;
        let expect = dissipator_apply(&jump.eval(t), &rho).unwrap().scale(c(0.9));
        assert!(me.rhs(&rho, t).unwrap().max_diff(&expect) < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(Channel::new(sigma_minus(), -1.0, "x"), Err(Error::InvalidRate(_))));
        let other = HilbertSpace::fock(3).unwrap();
        let ch = Channel::new(Operator::identity(&other), 1.0, "x").unwrap();
        assert!(matches!(
            MasterEquation::new(ScheduledOperator::zero(&qubit()), vec![ch]),
            Err(Error::SpaceMismatch { .. })
        ));
        let me = MasterEquation::new(ScheduledOperator::zero(&qubit()), vec![]).unwrap();
        let rho = DensityMatrix::basis(&other, 0).unwrap();
        assert!(matches!(me.rhs(&rho, 0.0), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn thermal_channels_at_zero_temperature() {
        let chans = thermal_qubit_channels(1.0, 2.0, 0.0).unwrap();
        assert_eq!(chans.len(), 1);
        assert_eq!(chans[0].rate(), 2.0);
        let warm = thermal_qubit_channels(1.0, 2.0, 1.0).unwrap();
        let n_bar = 1.0 / (1f64.exp() - 1.0);
        assert!((warm[0].rate() - 2.0 * (n_bar + 1.0)).abs() < 1e-14);
        assert!((warm[1].rate() - 2.0 * n_bar).abs() < 1e-14);
    }
}
