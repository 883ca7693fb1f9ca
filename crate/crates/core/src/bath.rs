//! Generalized thermal baths and their unitary equivalence to a thermal bath
//! plus an explicit drive.
//!
//! A generalized bath relaxes the system to `U rho_T U^dag`. In the frame
//! co-rotating with the system Hamiltonian its jump operators are
//! `U(t) c U(t)^dag`, with
//!
//! ```text
//! U(t) = exp(-i H_sys t) U exp(i H_sys t).
//! ```
//!
//! Conjugating the whole master equation by `U(t)` gives the *thermal*
//! representation: the untransformed thermal channels, and the coupling `V`
//! to the external system replaced by the drive `V~(t) = U(t)^dag V U(t)`.
//! The work the drive supplies is `Tr[dV~/dt rho]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lindblad::{Channel, MasterEquation};
use crate::operator::{
    c, kron, matrix_exp, partial_trace_keep, thermal_state, DensityMatrix, HilbertSpace,
    Operator, I,
};
use crate::schedule::{heisenberg_components, PhaseTerm, ScheduledOperator};
use crate::sparse::SparseOp;

pub const UNITARITY_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// Thermal channels, temperature and the unitary defining the bath.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedBathSpec {
    h_sys: Operator,
    u: Operator,
    thermal_channels: Vec<Channel>,
    temperature: f64,
}

impl GeneralizedBathSpec {
    pub fn new(
        h_sys: Operator,
        u: Operator,
        thermal_channels: Vec<Channel>,
        temperature: f64,
    ) -> Result<Self> {
        h_sys.check_same_space(&u)?;
        let herm = h_sys.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let unit = u.unitarity_error();
        if unit > UNITARITY_TOL {
            return Err(Error::NotUnitary(unit));
        }
        if temperature.is_nan() || temperature < 0.0 {
            return Err(Error::NegativeTemperature(temperature));
        }
        for ch in &thermal_channels {
            if ch.space() != h_sys.space() {
                return Err(Error::SpaceMismatch {
                    left: h_sys.space().dims().to_vec(),
                    right: ch.space().dims().to_vec(),
                });
            }
        }
        Ok(Self { h_sys, u, thermal_channels, temperature })
    }

    pub fn h_sys(&self) -> &Operator {
        &self.h_sys
    }

    pub fn u(&self) -> &Operator {
        &self.u
    }

    pub fn thermal_channels(&self) -> &[Channel] {
        &self.thermal_channels
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn system_space(&self) -> &HilbertSpace {
        self.h_sys.space()
    }

    /// `U rho_T U^dag`, the state the generalized bath relaxes to.
    pub fn fixed_point(&self) -> Result<DensityMatrix> {
        let rho_t = thermal_state(&self.h_sys, self.temperature)?;
        let op = &(&self.u * rho_t.op()) * &self.u.adjoint();
        Ok(DensityMatrix::new_unchecked(op))
    }
}

/// `U(t) = exp(-i h t) u exp(i h t)`.
pub fn interaction_frame_unitary(h_sys: &Operator, u: &Operator, t: f64) -> Result<Operator> {
    h_sys.check_same_space(u)?;
    let unit = u.unitarity_error();
    if unit > UNITARITY_TOL {
        return Err(Error::NotUnitary(unit));
    }
    let herm = h_sys.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let fwd = matrix_exp(h_sys, -I * t);
    let back = matrix_exp(h_sys, I * t);
    Ok(&(&fwd * u) * &back)
}

/// `U(t)` as a phase schedule over the Bohr frequencies of `h_sys`.
pub fn frame_unitary_schedule(h_sys: &Operator, u: &Operator) -> Result<ScheduledOperator> {
    // heisenberg_components gives e^{iht} u e^{-iht}; U(t) runs the other way.
    let terms = heisenberg_components(h_sys, u)?
        .into_iter()
        .map(|t| PhaseTerm { freq: -t.freq, op: t.op })
        .collect();
    ScheduledOperator::from_terms(u.space(), terms)
}

/// Jump operators of the generalized bath, `c_k -> U(t) c_k U(t)^dag`, rates
/// unchanged. A jump that only picks up a global phase is emitted as a
/// static channel.
pub fn transform_channels(bath: &GeneralizedBathSpec) -> Result<Vec<Channel>> {
    let ut = frame_unitary_schedule(&bath.h_sys, &bath.u)?;
    let ut_dag = ut.adjoint();
    bath.thermal_channels
        .iter()
        .map(|ch| {
            let jump = ut.mul(ch.jump())?.mul(&ut_dag)?;
            let label = format!("{} (transformed)", ch.label());
            match jump.single_phase() {
                Some(op) => Channel::new(op.clone(), ch.rate(), label),
                None => Channel::scheduled(jump, ch.rate(), label),
            }
        })
        .collect()
}

/// System slots followed by external slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    system: HilbertSpace,
    external: HilbertSpace,
    joint: HilbertSpace,
}

impl Layout {
    pub fn new(system: HilbertSpace, external: HilbertSpace) -> Self {
        let joint = system.tensor(&external);
        Self { system, external, joint }
    }

    pub fn system(&self) -> &HilbertSpace {
        &self.system
    }

    pub fn external(&self) -> &HilbertSpace {
        &self.external
    }

    pub fn joint(&self) -> &HilbertSpace {
        &self.joint
    }

    pub fn system_slots(&self) -> std::ops::Range<usize> {
        0..self.system.slots()
    }

    pub fn external_slots(&self) -> std::ops::Range<usize> {
        self.system.slots()..self.joint.slots()
    }

    pub fn embed_system(&self, op: &Operator) -> Result<Operator> {
        self.check(op.space(), &self.system)?;
        Ok(kron(op, &Operator::identity(&self.external)))
    }

    pub fn embed_external(&self, op: &Operator) -> Result<Operator> {
        self.check(op.space(), &self.external)?;
        Ok(kron(&Operator::identity(&self.system), op))
    }

    pub fn embed_system_schedule(&self, s: &ScheduledOperator) -> Result<ScheduledOperator> {
        let terms = s
            .terms()
            .iter()
            .map(|t| Ok(PhaseTerm { freq: t.freq, op: self.embed_system(&t.op)? }))
            .collect::<Result<Vec<_>>>()?;
        ScheduledOperator::from_terms(&self.joint, terms)
    }

    /// Fails unless `op` is `A (x) I_external` for some system operator `A`.
    pub fn check_system_local(&self, op: &Operator) -> Result<Operator> {
        self.check(op.space(), &self.joint)?;
        let slots: Vec<usize> = self.system_slots().collect();
        let reduced = partial_trace_keep(op, &slots)?;
        let local = reduced.scale(c(1.0 / self.external.dim() as f64));
        let rebuilt = self.embed_system(&local)?;
        let dev = rebuilt.max_diff(op);
        if dev > 1e-12 * op.max_abs().max(1.0) {
            return Err(Error::NotSystemLocal(dev));
        }
        Ok(local)
    }

    fn check(&self, got: &HilbertSpace, want: &HilbertSpace) -> Result<()> {
        if got != want {
            return Err(Error::SpaceMismatch {
                left: want.dims().to_vec(),
                right: got.dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// `V~(t) = U(t)^dag V U(t)` and its analytic derivative, for `U` acting on
/// the system slots only.
pub fn transform_coupling(
    layout: &Layout,
    h_sys_embedded: &Operator,
    u_embedded: &Operator,
    v: &Operator,
) -> Result<(ScheduledOperator, ScheduledOperator)> {
    layout.check_system_local(u_embedded)?;
    h_sys_embedded.check_same_space(v)?;
    let herm = v.hermiticity_error();
    if herm > HERMITIAN_TOL * v.max_abs().max(1.0) {
        return Err(Error::NotHermitian(herm));
    }
    let ut = frame_unitary_schedule(h_sys_embedded, u_embedded)?;
    let v_tilde = ut
        .adjoint()
        .mul(&ScheduledOperator::constant(v.clone()))?
        .mul(&ut)?
        .require_hermitian()?;
    let dv_tilde = v_tilde.derivative().require_hermitian()?;
    Ok((v_tilde, dv_tilde))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Co-rotating with `H_sys + H_ext`; only available when every generator
    /// becomes static there.
    Rotating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `rho -> U(t) rho U(t)^dag`
    ThermalToGeneralized,
    /// `rho -> U(t)^dag rho U(t)`
    GeneralizedToThermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Generalized,
    Thermal,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Generalized => "generalized",
            Representation::Thermal => "thermal",
        }
    }
}

/// Both sides of the equivalence, expressed in a common frame, with the
/// operators needed for the energy ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationPair {
    pub generalized: MasterEquation,
    pub thermal: MasterEquation,
    pub frame: Frame,
    pub layout: Layout,
    /// Embedded `H_sys` and `H_ext`; both commute with the frame rotation.
    pub h_sys: Operator,
    pub h_ext: Operator,
    /// The change of coordinates in this frame: thermal -> generalized.
    pub frame_unitary: ScheduledOperator,
    /// Drive `V~` and its lab-frame time derivative, both expressed in this
    /// frame.
    pub drive: ScheduledOperator,
    pub drive_rate: ScheduledOperator,
    /// Embedded, untransformed thermal channels in this frame.
    pub thermal_channels: Vec<Channel>,
}

impl RepresentationPair {
    pub fn member(&self, representation: Representation) -> &MasterEquation {
        match representation {
            Representation::Generalized => &self.generalized,
            Representation::Thermal => &self.thermal,
        }
    }

    /// Expresses a state given in `from` in the thermal representation.
    pub fn thermal_image(&self, rho: &DensityMatrix, t: f64, from: Representation) -> Result<DensityMatrix> {
        match from {
            Representation::Thermal => Ok(rho.clone()),
            Representation::Generalized => self.to_thermal(rho, t),
        }
    }

    pub fn map_state(&self, rho: &DensityMatrix, t: f64, direction: Direction) -> Result<DensityMatrix> {
        let u = self.frame_unitary.eval(t);
        conjugate_state(rho, &u, direction)
    }

    pub fn to_thermal(&self, rho_generalized: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.map_state(rho_generalized, t, Direction::GeneralizedToThermal)
    }

    pub fn to_generalized(&self, rho_thermal: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.map_state(rho_thermal, t, Direction::ThermalToGeneralized)
    }
}

fn conjugate_state(rho: &DensityMatrix, u: &Operator, direction: Direction) -> Result<DensityMatrix> {
    u.check_same_space(rho.op())?;
    let sparse = SparseOp::from_dense(u.matrix());
    let sparse = match direction {
        Direction::ThermalToGeneralized => sparse,
        Direction::GeneralizedToThermal => sparse.adjoint(),
    };
    let m: DMatrix<_> = sparse.conjugate(rho.matrix());
    Ok(DensityMatrix::new_unchecked(Operator::from_parts(rho.space().clone(), m)))
}

/// Lab-frame change of coordinates between the two representations.
pub fn map_state_between_representations(
    rho: &DensityMatrix,
    h_sys_embedded: &Operator,
    u_embedded: &Operator,
    t: f64,
    direction: Direction,
) -> Result<DensityMatrix> {
    let u = interaction_frame_unitary(h_sys_embedded, u_embedded, t)?;
    conjugate_state(rho, &u, direction)
}

fn rotate_static(s: &ScheduledOperator, h0: &Operator, what: &str) -> Result<Operator> {
    let rotated = s.rotate(h0)?;
    rotated.as_static().ok_or_else(|| {
        Error::UnsupportedFrame(format!(
            "{what} keeps explicit time dependence in the rotating frame (non-resonant configuration)"
        ))
    })
}

fn rotate_channel(ch: &Channel, h0: &Operator) -> Result<Channel> {
    let rotated = ch.jump().rotate(h0)?;
    match rotated.single_phase() {
        Some(op) => Channel::new(op.clone(), ch.rate(), ch.label()),
        None => Err(Error::UnsupportedFrame(format!(
            "channel '{}' is not a single-frequency jump in the rotating frame",
            ch.label()
        ))),
    }
}

/// Builds the generalized-bath master equation (`H_sys + H_ext + V` with the
/// transformed channels) and its thermal counterpart (`H_sys + H_ext + V~(t)`
/// with the thermal channels) in the requested frame.
pub fn build_representations(
    bath: &GeneralizedBathSpec,
    h_ext: &Operator,
    v: &Operator,
    frame: Frame,
) -> Result<RepresentationPair> {
    let layout = Layout::new(bath.system_space().clone(), h_ext.space().clone());
    let h_sys_e = layout.embed_system(&bath.h_sys)?;
    let h_ext_e = layout.embed_external(h_ext)?;
    let u_e = layout.embed_system(&bath.u)?;
    v.check_same_space(&h_sys_e)?;

    let (v_tilde, dv_tilde) = transform_coupling(&layout, &h_sys_e, &u_e, v)?;
    let frame_unitary = frame_unitary_schedule(&h_sys_e, &u_e)?;
    let generalized_channels = transform_channels(bath)?
        .iter()
        .map(|ch| Channel::scheduled(layout.embed_system_schedule(ch.jump())?, ch.rate(), ch.label()))
        .collect::<Result<Vec<_>>>()?;
    let thermal_channels = bath
        .thermal_channels
        .iter()
        .map(|ch| Channel::scheduled(layout.embed_system_schedule(ch.jump())?, ch.rate(), ch.label()))
        .collect::<Result<Vec<_>>>()?;
    let free = &h_sys_e + &h_ext_e;

    match frame {
        Frame::Lab => {
            let generalized = MasterEquation::new(
                ScheduledOperator::constant(&free + v),
                generalized_channels,
            )?;
            let thermal = MasterEquation::new(
                ScheduledOperator::constant(free.clone()).add(&v_tilde)?,
                thermal_channels.clone(),
            )?;
            Ok(RepresentationPair {
                generalized,
                thermal,
                frame,
                layout,
                h_sys: h_sys_e,
                h_ext: h_ext_e,
                frame_unitary,
                drive: v_tilde,
                drive_rate: dv_tilde,
                thermal_channels,
            })
        }
        Frame::Rotating => {
            let h0 = &free;
            let gen_h = rotate_static(&ScheduledOperator::constant(v.clone()), h0, "coupling V")?;
            let th_h = rotate_static(&v_tilde, h0, "drive V~(t)")?;
            let gen_ch = generalized_channels
                .iter()
                .map(|ch| rotate_channel(ch, h0))
                .collect::<Result<Vec<_>>>()?;
            let th_ch = thermal_channels
                .iter()
                .map(|ch| rotate_channel(ch, h0))
                .collect::<Result<Vec<_>>>()?;
            let generalized = MasterEquation::new(ScheduledOperator::constant(gen_h), gen_ch)?;
            let thermal = MasterEquation::new(ScheduledOperator::constant(th_h), th_ch.clone())?;
            Ok(RepresentationPair {
                generalized,
                thermal,
                frame,
                layout,
                h_sys: h_sys_e,
                h_ext: h_ext_e,
                frame_unitary: frame_unitary.rotate(h0)?,
                drive: v_tilde.rotate(h0)?,
                drive_rate: dv_tilde.rotate(h0)?,
                thermal_channels: th_ch,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::thermal_qubit_channels;
    use crate::operator::{
        destroy, dissipator_apply, expectation, number, sigma_minus, sigma_plus, sigma_x,
        sigma_y, sigma_z, ONE, ZERO,
    };
    use crate::random::{random_density, random_hermitian, random_unitary, Rng};

    fn flipped_vacuum(omega: f64, gamma: f64) -> GeneralizedBathSpec {
        GeneralizedBathSpec::new(
            sigma_z().scale(c(omega / 2.0)),
            sigma_x(),
            thermal_qubit_channels(omega, gamma, 0.0).unwrap(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn frame_unitary_at_zero_is_u() {
        let mut rng = Rng::seeded(21);
        let q = HilbertSpace::qubit();
        let h = random_hermitian(&q, &mut rng);
        let u = random_unitary(&q, &mut rng);
        assert!(interaction_frame_unitary(&h, &u, 0.0).unwrap().max_diff(&u) < 1e-15);
    }

    #[test]
    fn frame_unitary_of_symmetry_is_constant() {
        let mut rng = Rng::seeded(22);
        let h = sigma_z().scale(c(1.3));
        let u = matrix_exp(&sigma_z(), I * 0.4);
        for _ in 0..5 {
            let t = rng.uniform(-10.0, 10.0);
            assert!(interaction_frame_unitary(&h, &u, t).unwrap().max_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn flipped_frame_at_quarter_period_is_pauli_y() {
        let omega = 2.0;
        let h = sigma_z().scale(c(omega / 2.0));
        let t = std::f64::consts::FRAC_PI_2 / omega;
        let got = interaction_frame_unitary(&h, &sigma_x(), t).unwrap();
        // Brute-force oracle: the same triple product with independently
        // built diagonal exponentials.
        let phase = |s: f64| (I * s * omega * t / 2.0).exp();
        let fwd = Operator::from_diagonal(&HilbertSpace::qubit(), &[phase(1.0), phase(-1.0)]).unwrap();
        let oracle = &(&fwd * &sigma_x()) * &fwd.adjoint();
        assert!(got.max_diff(&oracle) < 1e-15);
        // e^{-i wt} s+ + e^{i wt} s- at wt = pi/2 is -i s+ + i s-, i.e. sigma_y.
        assert!(got.max_diff(&sigma_y()) < 1e-15);
        assert!((got.get(1, 0) - (-I)).norm() < 1e-15);
        assert!((got.get(0, 1) - I).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let h = sigma_z();
        assert!(matches!(interaction_frame_unitary(&h, &sigma_plus(), 1.0), Err(Error::NotUnitary(_))));
        assert!(GeneralizedBathSpec::new(h, sigma_plus(), vec![], 0.0).is_err());
    }

    #[test]
    fn schedule_matches_direct_unitary() {
        let mut rng = Rng::seeded(23);
        let q = HilbertSpace::new(vec![3]).unwrap();
        let h = random_hermitian(&q, &mut rng);
        let u = random_unitary(&q, &mut rng);
        let s = frame_unitary_schedule(&h, &u).unwrap();
        for _ in 0..5 {
            let t = rng.uniform(-4.0, 4.0);
            let direct = interaction_frame_unitary(&h, &u, t).unwrap();
            assert!(s.eval(t).max_diff(&direct) < 1e-12);
        }
    }

    #[test]
    fn identity_transform_leaves_channels() {
        let bath = GeneralizedBathSpec::new(
            sigma_z(),
            Operator::identity(&HilbertSpace::qubit()),
            thermal_qubit_channels(2.0, 1.0, 0.5).unwrap(),
            0.5,
        )
        .unwrap();
        let out = transform_channels(&bath).unwrap();
        for (a, b) in out.iter().zip(bath.thermal_channels()) {
            assert_eq!(a.static_jump().unwrap(), b.static_jump().unwrap());
            assert_eq!(a.rate(), b.rate());
        }
    }

    #[test]
    fn flipped_vacuum_channel_is_static_raising() {
        let bath = flipped_vacuum(10.0, 1.0);
        let out = transform_channels(&bath).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].rate(), 1.0);
        assert_eq!(out[0].static_jump().unwrap().max_diff(&sigma_plus()), 0.0);
        // The full schedule carries the global phase e^{-2 i omega t}.
        let t = 0.123;
        let ut = interaction_frame_unitary(bath.h_sys(), bath.u(), t).unwrap();
        let direct = &(&ut * &sigma_minus()) * &ut.adjoint();
        let expect = sigma_plus().scale((-I * 20.0 * t).exp());
        assert!(direct.max_diff(&expect) < 1e-14);
        // Fixed point of the flipped vacuum is the excited state.
        let e = DensityMatrix::basis(&HilbertSpace::qubit(), 1).unwrap();
        assert!(bath.fixed_point().unwrap().op().max_diff(e.op()) < 1e-15);
        assert!(dissipator_apply(&sigma_plus(), &e).unwrap().is_zero(0.0));
    }

    #[test]
    fn transformed_jumps_match_triple_product() {
        let mut rng = Rng::seeded(24);
        let q = HilbertSpace::qubit();
        for _ in 0..5 {
            let u = random_unitary(&q, &mut rng);
            let h = sigma_z().scale(c(rng.uniform(0.5, 3.0)));
            let bath = GeneralizedBathSpec::new(
                h.clone(),
                u.clone(),
                vec![Channel::new(sigma_minus(), 1.0, "decay").unwrap()],
                0.0,
            )
            .unwrap();
            let ch = &transform_channels(&bath).unwrap()[0];
            let t = rng.uniform(-5.0, 5.0);
            let ut = interaction_frame_unitary(&h, &u, t).unwrap();
            let direct = &(&ut * &sigma_minus()) * &ut.adjoint();
            assert!(ch.jump_at(t).max_diff(&direct) < 1e-13);
        }
    }

    #[test]
    fn covariance_of_the_dissipator() {
        let mut rng = Rng::seeded(25);
        let q = HilbertSpace::new(vec![3]).unwrap();
        for _ in 0..10 {
            let u = random_unitary(&q, &mut rng);
            let rho = random_density(&q, &mut rng);
            let jumps: Vec<(Operator, f64)> = (0..3)
                .map(|_| (random_hermitian(&q, &mut rng), rng.uniform(0.0, 2.0)))
                .collect();
            // U L_T[U^dag rho U] U^dag
            let inner = DensityMatrix::new_unchecked(&(&u.adjoint() * rho.op()) * &u);
            let mut lhs = Operator::zeros(&q);
            let mut rhs = Operator::zeros(&q);
            for (cop, rate) in &jumps {
                let d = dissipator_apply(cop, &inner).unwrap().scale(c(*rate));
                lhs = &lhs + &(&(&u * &d) * &u.adjoint());
                let conj = &(&u * cop) * &u.adjoint();
                rhs = &rhs + &dissipator_apply(&conj, &rho).unwrap().scale(c(*rate));
            }
            assert!(lhs.max_diff(&rhs) < 1e-12);
        }
    }

    fn amplifier_parts(n: usize, omega: f64, g: f64) -> (Layout, Operator, Operator, Operator) {
        let layout = Layout::new(HilbertSpace::qubit(), HilbertSpace::fock(n).unwrap());
        let a = layout.embed_external(&destroy(n).unwrap()).unwrap();
        let sp = layout.embed_system(&sigma_plus()).unwrap();
        let sm = layout.embed_system(&sigma_minus()).unwrap();
        let v = (&(&sp * &a) - &(&a.adjoint() * &sm)).scale(I * g);
        let h_sys = layout.embed_system(&sigma_z().scale(c(omega / 2.0))).unwrap();
        (layout, h_sys, v, a)
    }

    #[test]
    fn amplifier_drive_is_the_anti_jaynes_cummings_pump() {
        let (n, omega, g) = (5, 3.0, 0.7);
        let (layout, h_sys, v, a) = amplifier_parts(n, omega, g);
        let u = layout.embed_system(&sigma_x()).unwrap();
        let (vt, dvt) = transform_coupling(&layout, &h_sys, &u, &v).unwrap();
        let sp = layout.embed_system(&sigma_plus()).unwrap();
        let sm = layout.embed_system(&sigma_minus()).unwrap();
        let sm_a = &sm * &a;
        let ad_sp = &a.adjoint() * &sp;
        let mut rng = Rng::seeded(26);
        for _ in 0..5 {
            let t = rng.uniform(-2.0, 2.0);
            let ph = (I * 2.0 * omega * t).exp();
            let expect = (&sm_a.scale(ph) - &ad_sp.scale(ph.conj())).scale(I * g);
            assert!(vt.eval(t).max_diff(&expect) < 1e-13);
            let dexpect = (&sm_a.scale(ph) + &ad_sp.scale(ph.conj())).scale(c(-2.0 * omega * g));
            assert!(dvt.eval(t).max_diff(&dexpect) < 1e-12);
            // central finite differences of V~ with step 1e-6/omega
            let h = 1e-6 / omega;
            let fd = (&vt.eval(t + h) - &vt.eval(t - h)).scale(c(0.5 / h));
            assert!(dvt.eval(t).max_diff(&fd) < 1e-7);
            assert!(vt.eval(t).is_hermitian(1e-13));
        }
        assert_eq!(vt.terms().len(), 2);
    }

    #[test]
    fn commuting_transform_gives_static_coupling() {
        let (layout, h_sys, v, _) = amplifier_parts(4, 2.0, 1.0);
        let u = layout.embed_system(&matrix_exp(&sigma_z(), I * 0.3)).unwrap();
        let (vt, dvt) = transform_coupling(&layout, &h_sys, &u, &v).unwrap();
        assert!(vt.is_static());
        assert!(dvt.is_zero());
    }

    #[test]
    fn transform_must_be_system_local() {
        let (layout, h_sys, v, a) = amplifier_parts(4, 2.0, 1.0);
        let n = &a.adjoint() * &a;
        let bad = matrix_exp(&n, I * 0.5);
        assert!(matches!(
            transform_coupling(&layout, &h_sys, &bad, &v),
            Err(Error::NotSystemLocal(_))
        ));
    }

    fn amplifier_pair(n: usize, omega: f64, g: f64, gamma: f64, frame: Frame) -> RepresentationPair {
        let (_, _, v, _) = amplifier_parts(n, omega, g);
        let h_ext = number(n).unwrap().scale(c(omega));
        let h_ext = &h_ext + &Operator::identity(h_ext.space()).scale(c(omega / 2.0));
        build_representations(&flipped_vacuum(omega, gamma), &h_ext, &v, frame).unwrap()
    }

    #[test]
    fn rotating_frame_members_are_static() {
        let (n, omega, g, gamma) = (6, 10.0, 1.5, 1.0);
        let pair = amplifier_pair(n, omega, g, gamma, Frame::Rotating);
        let (_, _, v, a) = amplifier_parts(n, omega, g);
        let layout = &pair.layout;
        let sp = layout.embed_system(&sigma_plus()).unwrap();
        let sm = layout.embed_system(&sigma_minus()).unwrap();

        let gen_h = pair.generalized.hamiltonian().as_static().unwrap();
        assert_eq!(gen_h.max_diff(&v), 0.0);
        assert_eq!(pair.generalized.channels().len(), 1);
        let ch = &pair.generalized.channels()[0];
        assert_eq!(ch.rate(), gamma);
        assert_eq!(ch.static_jump().unwrap().max_diff(&sp), 0.0);

        let th_h = pair.thermal.hamiltonian().as_static().unwrap();
        let expect = (&(&sm * &a) - &(&a.adjoint() * &sp)).scale(I * g);
        assert!(th_h.max_diff(&expect) < 1e-14);
        assert_eq!(pair.thermal.channels()[0].static_jump().unwrap().max_diff(&sm), 0.0);

        let work = pair.drive_rate.as_static().unwrap();
        let wexpect = (&(&sm * &a) + &(&a.adjoint() * &sp)).scale(c(-2.0 * omega * g));
        assert!(work.max_diff(&wexpect) < 1e-12);
        assert!(pair.frame_unitary.as_static().unwrap().max_diff(&layout.embed_system(&sigma_x()).unwrap()) < 1e-15);
    }

    #[test]
    fn lab_frame_thermal_member_carries_the_pump() {
        let (n, omega, g, gamma) = (4, 10.0, 1.0, 1.0);
        let pair = amplifier_pair(n, omega, g, gamma, Frame::Lab);
        let t = 0.31;
        let free = &pair.h_sys + &pair.h_ext;
        let h = pair.thermal.hamiltonian().eval(t);
        let drive = &h - &free;
        assert!(drive.max_diff(&pair.drive.eval(t)) < 1e-13);
        assert!(!pair.thermal.is_autonomous());
        assert!(pair.generalized.is_autonomous());
    }

    #[test]
    fn identity_transform_gives_identical_members() {
        let (_, _, v, _) = amplifier_parts(4, 2.0, 1.0);
        let bath = GeneralizedBathSpec::new(
            sigma_z(),
            Operator::identity(&HilbertSpace::qubit()),
            thermal_qubit_channels(2.0, 1.0, 0.0).unwrap(),
            0.0,
        )
        .unwrap();
        let h_ext = number(4).unwrap().scale(c(2.0));
        for frame in [Frame::Lab, Frame::Rotating] {
            let pair = build_representations(&bath, &h_ext, &v, frame).unwrap();
            let a = pair.generalized.hamiltonian().eval(0.7);
            let b = pair.thermal.hamiltonian().eval(0.7);
            assert!(a.max_diff(&b) < 1e-14);
            assert!(pair.drive_rate.is_zero());
        }
    }

    #[test]
    fn non_resonant_rotating_frame_is_unsupported() {
        let (_, _, v, _) = amplifier_parts(4, 2.0, 1.0);
        let h_ext = number(4).unwrap().scale(c(2.5));
        let err = build_representations(&flipped_vacuum(2.0, 1.0), &h_ext, &v, Frame::Rotating);
        assert!(matches!(err, Err(Error::UnsupportedFrame(_))));
    }

    #[test]
    fn state_maps() {
        let (n, omega) = (4, 3.0);
        let (layout, h_sys, _, a) = amplifier_parts(n, omega, 1.0);
        let u = layout.embed_system(&sigma_x()).unwrap();
        let mut rng = Rng::seeded(27);
        let rho = random_density(layout.joint(), &mut rng);
        let num = &a.adjoint() * &a;
        let sz = layout.embed_system(&sigma_z()).unwrap();
        for _ in 0..3 {
            let t = rng.uniform(0.0, 5.0);
            let fwd = map_state_between_representations(&rho, &h_sys, &u, t, Direction::ThermalToGeneralized).unwrap();
            let back = map_state_between_representations(&fwd, &h_sys, &u, t, Direction::GeneralizedToThermal).unwrap();
            assert!(back.op().max_diff(rho.op()) < 1e-13);
            let n0 = expectation(&num, &rho).unwrap();
            let n1 = expectation(&num, &fwd).unwrap();
            assert!((n0 - n1).norm() < 1e-13);
            let z0 = expectation(&sz, &rho).unwrap();
            let z1 = expectation(&sz, &fwd).unwrap();
            assert!((z0 + z1).norm() < 1e-13);
            // explicit triple product
            let ut = interaction_frame_unitary(&h_sys, &u, t).unwrap();
            let direct = &(&ut * rho.op()) * &ut.adjoint();
            assert!(fwd.op().max_diff(&direct) < 1e-13);
            assert!((fwd.op().trace() - ONE).norm() < 1e-13);
        }
        let _ = ZERO;
    }
}
