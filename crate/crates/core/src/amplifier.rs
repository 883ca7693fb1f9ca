//! Qubit + resonant cavity amplifier powered by a flipped vacuum bath.
//!
//! `H_sys = w sz/2`, `H_ext = w (n + 1/2)`, `V = i g (s+ a - a^dag s-)`, and
//! the qubit sees the zero-temperature bath transformed by `sx`, which pumps
//! it towards `|e>`.

use rayon::prelude::*;

use crate::bath::{build_representations, Frame, GeneralizedBathSpec, Representation, RepresentationPair};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, thermal_qubit_channels, IntegratorConfig, Trajectory};
use crate::ledger::{FlowProbe, ThermoRecord, ThermoSeries};
use crate::operator::{
    c, destroy, expectation, number, partial_trace, sigma_minus, sigma_plus, sigma_x, sigma_z,
    trace_of_product, DensityMatrix, HilbertSpace, Operator, I,
};

/// Below this mean occupation the Fano factor is reported as absent.
pub const FANO_MIN_OCCUPATION: f64 = 1e-6;

pub const QUBIT_SLOT: usize = 0;
pub const CAVITY_SLOT: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplifierConfig {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub n_fock: usize,
    /// Run length in units of `1/gamma`.
    pub t_max: f64,
    /// Sample spacing in units of `1/gamma`.
    pub sample_interval: f64,
    pub rtol: f64,
    pub atol: f64,
    pub representation: Representation,
    pub frame: Frame,
}

impl Default for AmplifierConfig {
    fn default() -> Self {
        Self {
            omega: 10.0,
            g: 10.0,
            gamma: 1.0,
            n_fock: 60,
            t_max: 20.0,
            sample_interval: 0.05,
            rtol: 1e-8,
            atol: 1e-10,
            representation: Representation::Generalized,
            frame: Frame::Rotating,
        }
    }
}

impl AmplifierConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: String| if ok { Ok(()) } else { Err(Error::Config(msg)) };
        check(self.omega > 0.0 && self.omega.is_finite(), format!("omega must be positive, got {}", self.omega))?;
        check(self.g >= 0.0 && self.g.is_finite(), format!("g must be nonnegative, got {}", self.g))?;
        check(self.gamma >= 0.0 && self.gamma.is_finite(), format!("gamma must be nonnegative, got {}", self.gamma))?;
        check(self.n_fock >= 2, format!("n_fock must be at least 2, got {}", self.n_fock))?;
        check(self.t_max >= 0.0 && self.t_max.is_finite(), format!("t_max must be nonnegative, got {}", self.t_max))?;
        check(
            self.sample_interval > 0.0 && self.sample_interval.is_finite(),
            format!("sample_interval must be positive, got {}", self.sample_interval),
        )?;
        check(self.rtol > 0.0, format!("rtol must be positive, got {}", self.rtol))?;
        check(self.atol > 0.0, format!("atol must be positive, got {}", self.atol))?;
        Ok(())
    }

    /// `1/gamma`, the unit of `t_max` and `sample_interval`.
    pub fn time_unit(&self) -> Result<f64> {
        if self.gamma > 0.0 {
            Ok(1.0 / self.gamma)
        } else {
            Err(Error::Config("times are measured in 1/gamma, which needs gamma > 0".into()))
        }
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        Ok(IntegratorConfig {
            rtol: self.rtol,
            atol: self.atol,
            sample_interval: self.sample_interval * self.time_unit()?,
            fock_slot: Some(CAVITY_SLOT),
            ..Default::default()
        })
    }
}

/// The amplifier's representation pair and the operators its diagnostics
/// need, all on the joint qubit (x) cavity space.
#[derive(Debug, Clone)]
pub struct Amplifier {
    pub config: AmplifierConfig,
    pub pair: RepresentationPair,
    pub number: Operator,
    pub number_sq: Operator,
    pub sigma_z: Operator,
    /// `sigma_- a`, whose real part fixes the work power.
    pub correlator: Operator,
}

pub fn build_amplifier(cfg: &AmplifierConfig) -> Result<Amplifier> {
    cfg.validate()?;
    let (omega, g, n) = (cfg.omega, cfg.g, cfg.n_fock);
    let bath = GeneralizedBathSpec::new(
        sigma_z().scale(c(omega / 2.0)),
        sigma_x(),
        thermal_qubit_channels(omega, cfg.gamma, 0.0)?,
        0.0,
    )?;
    let fock = HilbertSpace::fock(n)?;
    let h_ext = &number(n)?.scale(c(omega)) + &Operator::identity(&fock).scale(c(omega / 2.0));
    let layout = crate::bath::Layout::new(HilbertSpace::qubit(), fock);
    let a = layout.embed_external(&destroy(n)?)?;
    let sp = layout.embed_system(&sigma_plus())?;
    let sm = layout.embed_system(&sigma_minus())?;
    let v = (&(&sp * &a) - &(&a.adjoint() * &sm)).scale(I * g);
    let pair = build_representations(&bath, &h_ext, &v, cfg.frame)?;
    let num = layout.embed_external(&number(n)?)?;
    Ok(Amplifier {
        config: cfg.clone(),
        number_sq: &num * &num,
        number: num,
        sigma_z: layout.embed_system(&sigma_z())?,
        correlator: &sm * &a,
        pair,
    })
}

impl Amplifier {
    pub fn space(&self) -> &HilbertSpace {
        self.pair.layout.joint()
    }

    /// `|g, 0>` for the generalized member; its image `U(0)^dag |g,0> = |e,0>`
    /// for the thermal one.
    pub fn initial_state(&self, representation: Representation) -> Result<DensityMatrix> {
        let g0 = DensityMatrix::basis(self.space(), 0)?;
        match representation {
            Representation::Generalized => Ok(g0),
            Representation::Thermal => self.pair.to_thermal(&g0, 0.0),
        }
    }

    pub fn cavity_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        partial_trace(rho, CAVITY_SLOT)
    }

    pub fn qubit_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        partial_trace(rho, QUBIT_SLOT)
    }

    pub fn sigma_z_of(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(expectation(&self.sigma_z, rho)?.re)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonStats {
    pub n_mean: f64,
    pub n_var: f64,
    pub fano: Option<f64>,
}

/// Mean, variance and Fano factor of a single-mode state.
pub fn photon_statistics(rho_ext: &DensityMatrix) -> Result<PhotonStats> {
    let dims = rho_ext.space().dims();
    if dims.len() != 1 {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    let pops = rho_ext.populations();
    let (m1, m2) = pops.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, p)| {
        let k = k as f64;
        (a + k * p, b + k * k * p)
    });
    Ok(stats_from_moments(m1, m2))
}

fn stats_from_moments(n_mean: f64, n_sq: f64) -> PhotonStats {
    // Rounding can push the variance of a number state a hair below zero.
    let n_var = (n_sq - n_mean * n_mean).max(0.0);
    let fano = (n_mean >= FANO_MIN_OCCUPATION).then(|| n_var / n_mean);
    PhotonStats { n_mean, n_var, fano }
}

/// Closed-form steady state under the Poissonian ansatz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predictions {
    pub dn_dt: f64,
    pub sigma_z: f64,
    pub dhext_dt: f64,
    pub dhsys_dt: f64,
    pub work: f64,
    pub heat: f64,
    pub fano: f64,
    /// `Re<sigma_- a>` in the thermal representation; absent for `g = 0`.
    pub correlator: Option<f64>,
}

pub fn steady_state_predictions(cfg: &AmplifierConfig) -> Predictions {
    let (w, y) = (cfg.omega, cfg.gamma);
    Predictions {
        dn_dt: 0.5 * y,
        sigma_z: 0.0,
        dhext_dt: 0.5 * w * y,
        dhsys_dt: 0.0,
        work: w * y,
        heat: -0.5 * w * y,
        fano: 1.0,
        correlator: (cfg.g > 0.0).then(|| -y / (4.0 * cfg.g)),
    }
}

#[derive(Debug, Clone)]
pub struct AmplifierRun {
    pub representation: Representation,
    pub trajectory: Trajectory,
    pub series: ThermoSeries,
}

impl AmplifierRun {
    /// Cavity state at the sample nearest `t` (absolute time).
    pub fn cavity_at(&self, amp: &Amplifier, t: f64) -> Result<DensityMatrix> {
        let k = self.trajectory.index_of(t)?;
        amp.cavity_state(&self.trajectory.states()[k])
    }
}

/// Integrates one member of the amplifier from its initial state and
/// evaluates the ledger at every sample.
pub fn simulate_representation(amp: &Amplifier, representation: Representation) -> Result<AmplifierRun> {
    let cfg = &amp.config;
    let t_max = cfg.t_max * cfg.time_unit()?;
    let rho0 = amp.initial_state(representation)?;
    let trajectory = evolve(amp.pair.member(representation), &rho0, t_max, &cfg.integrator()?)?;
    let series = ledger_series(amp, representation, &trajectory)?;
    Ok(AmplifierRun { representation, trajectory, series })
}

/// Runs the representation selected in `cfg`.
pub fn simulate(cfg: &AmplifierConfig) -> Result<(Amplifier, AmplifierRun)> {
    let amp = build_amplifier(cfg)?;
    let run = simulate_representation(&amp, cfg.representation)?;
    Ok((amp, run))
}

pub fn ledger_series(amp: &Amplifier, representation: Representation, traj: &Trajectory) -> Result<ThermoSeries> {
    let probe = FlowProbe::new(&amp.pair)?;
    let member = amp.pair.member(representation).compile();
    let dim = amp.space().dim();
    let records = traj
        .times()
        .par_iter()
        .zip(traj.states().par_iter())
        .zip(traj.monitors().par_iter())
        .map(|((&t, rho), mon)| {
            let n_mean = expectation(&amp.number, rho)?.re;
            let n_sq = expectation(&amp.number_sq, rho)?.re;
            let stats = stats_from_moments(n_mean, n_sq);
            let mut d = nalgebra::DMatrix::zeros(dim, dim);
            member.eval(rho.matrix(), t, &mut d);
            let dn_dt = trace_of_product(amp.number.matrix(), &d).re;
            let thermal = amp.pair.thermal_image(rho, t, representation)?;
            let flows = probe.flows(&thermal, t)?;
            let res = flows.residuals();
            Ok(ThermoRecord {
                t,
                n_mean: stats.n_mean,
                n_var: stats.n_var,
                fano: stats.fano,
                sigma_z: amp.sigma_z_of(rho)?,
                dn_dt,
                work_power: flows.work,
                heat_power: flows.heat,
                dhext_dt: flows.dhext_dt,
                dhsys_dt: flows.dhsys_dt,
                residual_first_law: res.first_law,
                residual_cost_identity: res.cost_identity,
                trace_error: mon.trace_error,
                leak_top2: mon.top2_fock_leakage,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThermoSeries::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{coherent_state, kron, thermal_state};

    fn small(frame: Frame) -> AmplifierConfig {
        AmplifierConfig { n_fock: 8, t_max: 0.5, frame, ..Default::default() }
    }

    #[test]
    fn members_in_the_rotating_frame() {
        let amp = build_amplifier(&small(Frame::Rotating)).unwrap();
        let layout = &amp.pair.layout;
        let a = layout.embed_external(&destroy(8).unwrap()).unwrap();
        let sp = layout.embed_system(&sigma_plus()).unwrap();
        let sm = layout.embed_system(&sigma_minus()).unwrap();
        let v = (&(&sp * &a) - &(&a.adjoint() * &sm)).scale(I * 10.0);
        assert_eq!(amp.pair.generalized.hamiltonian().as_static().unwrap().max_diff(&v), 0.0);
        let ch = &amp.pair.generalized.channels()[0];
        assert_eq!((ch.static_jump().unwrap().max_diff(&sp), ch.rate()), (0.0, 1.0));
    }

    #[test]
    fn lab_thermal_drive_is_the_pump() {
        let amp = build_amplifier(&small(Frame::Lab)).unwrap();
        let (w, g) = (10.0, 10.0);
        let a = &amp.correlator; // s- a
        let t = 0.37;
        let ph = (I * 2.0 * w * t).exp();
        let expect = (&a.scale(ph) - &a.adjoint().scale(ph.conj())).scale(I * g);
        assert!(amp.pair.drive.eval(t).max_diff(&expect) < 1e-12);
    }

    #[test]
    fn initial_states() {
        let amp = build_amplifier(&small(Frame::Rotating)).unwrap();
        let g0 = amp.initial_state(Representation::Generalized).unwrap();
        let e0 = amp.initial_state(Representation::Thermal).unwrap();
        assert_eq!(g0.op().get(0, 0).re, 1.0);
        assert_eq!(e0.op().get(8, 8).re, 1.0);
        assert_eq!(amp.sigma_z_of(&g0).unwrap(), -1.0);
        assert_eq!(amp.sigma_z_of(&e0).unwrap(), 1.0);
    }

    #[test]
    fn ground_state_is_dark_without_pumping() {
        let cfg = AmplifierConfig { gamma: 0.0, n_fock: 6, ..Default::default() };
        let amp = build_amplifier(&cfg).unwrap();
        let rho = amp.initial_state(Representation::Generalized).unwrap();
        assert!(amp.pair.generalized.rhs(&rho, 0.0).unwrap().max_abs() < 1e-15);
        assert!(amp.config.time_unit().is_err());
    }

    #[test]
    fn photon_statistics_examples() {
        let coh = coherent_state(c(2.0), 40).unwrap();
        let s = photon_statistics(&coh).unwrap();
        assert!((s.n_mean - 4.0).abs() < 1e-10);
        assert!((s.fano.unwrap() - 1.0).abs() < 1e-9);
        let fock = DensityMatrix::basis(&HilbertSpace::fock(5).unwrap(), 2).unwrap();
        let s = photon_statistics(&fock).unwrap();
        assert_eq!((s.n_mean, s.n_var, s.fano), (2.0, 0.0, Some(0.0)));
        let vac = DensityMatrix::basis(&HilbertSpace::fock(5).unwrap(), 0).unwrap();
        assert_eq!(photon_statistics(&vac).unwrap().fano, None);
        // Bose-Einstein oracle: p_k = nbar^k/(nbar+1)^{k+1}, variance nbar(nbar+1)
        let n = 60;
        let th = thermal_state(&number(n).unwrap(), 1.0 / 3f64.ln()).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for k in 0..n {
            let p = 0.5f64.powi(k as i32) / 1.5f64.powi(k as i32 + 1);
            m1 += k as f64 * p;
            m2 += (k * k) as f64 * p;
        }
        let s = photon_statistics(&th).unwrap();
        assert!((s.n_mean - m1).abs() < 1e-12 && (s.n_mean - 0.5).abs() < 1e-10);
        assert!((s.fano.unwrap() - (m2 - m1 * m1) / m1).abs() < 1e-10);
        assert!((s.fano.unwrap() - 1.5).abs() < 1e-9);
        let joint = kron(fock.op(), fock.op());
        assert!(photon_statistics(&DensityMatrix::new(joint).unwrap()).is_err());
    }

    #[test]
    fn predictions() {
        let p = steady_state_predictions(&AmplifierConfig::default());
        assert_eq!((p.work, p.heat, p.dhext_dt, p.dhsys_dt), (10.0, -5.0, 5.0, 0.0));
        assert_eq!((p.dn_dt, p.sigma_z, p.fano), (0.5, 0.0, 1.0));
        assert!((p.correlator.unwrap() + 0.025).abs() < 1e-15);
        let p = steady_state_predictions(&AmplifierConfig { g: 0.0, ..Default::default() });
        assert_eq!(p.correlator, None);
    }

    #[test]
    fn short_run_ledger() {
        let (amp, run) = simulate(&AmplifierConfig { n_fock: 12, t_max: 1.0, ..Default::default() }).unwrap();
        let s = &run.series;
        assert_eq!(s.len(), 21);
        let first = s.records()[0];
        assert_eq!((first.n_mean, first.work_power, first.dhext_dt, first.fano), (0.0, 0.0, 0.0, None));
        // thermal image of |g,0> is |e,0>, which decays into the vacuum
        assert!((first.heat_power + 10.0).abs() < 1e-12);
        for r in s.records() {
            assert!(r.residual_cost_identity.abs() < 1e-9 && r.residual_first_law.abs() < 1e-9);
            assert!(r.n_var >= 0.0);
        }
        let n: Vec<f64> = s.values(|r| r.n_mean);
        assert!(n.windows(2).all(|w| w[1] >= w[0]));
        let cav = run.cavity_at(&amp, 1.0).unwrap();
        let st = photon_statistics(&cav).unwrap();
        assert!((st.n_mean - s.last().unwrap().n_mean).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        for bad in [
            AmplifierConfig { omega: 0.0, ..Default::default() },
            AmplifierConfig { gamma: -1.0, ..Default::default() },
            AmplifierConfig { n_fock: 1, ..Default::default() },
            AmplifierConfig { sample_interval: 0.0, ..Default::default() },
            AmplifierConfig { rtol: 0.0, ..Default::default() },
        ] {
            assert!(matches!(build_amplifier(&bad), Err(Error::Config(_))));
        }
    }
}
