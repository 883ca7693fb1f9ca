//! Work, heat and energy flows along a trajectory.
//!
//! Sign convention: `heat > 0` is energy entering the system from the bath,
//! `work > 0` is work supplied by the external source. All flows are taken
//! from the master-equation right-hand side, never from finite differences.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::RepresentationPair;
use crate::error::{Error, Result};
use crate::lindblad::{Channel, CompiledEquation, MasterEquation};
use crate::operator::{c, trace_of_product, DensityMatrix, Operator};
use crate::schedule::ScheduledOperator;

const IMAG_TOL: f64 = 1e-9;

fn real_part(z: Complex64, scale: f64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(z.im.abs()));
    }
    Ok(z.re)
}

/// `c^dag X c - {c^dag c, X}/2`, the Heisenberg-picture dissipator.
pub fn adjoint_dissipator(jump: &Operator, obs: &Operator) -> Result<Operator> {
    jump.check_same_space(obs)?;
    let jd = jump.adjoint();
    let jdj = &jd * jump;
    let sandwich = &(&jd * obs) * jump;
    let anti = &(&jdj * obs) + &(obs * &jdj);
    Ok(&sandwich - &anti.scale(c(0.5)))
}

/// `sum_k gamma_k D^dag[c_k(t)] H`; its expectation is the heat current.
pub fn heat_observable(h_sys: &Operator, channels: &[Channel], t: f64) -> Result<Operator> {
    let mut out = Operator::zeros(h_sys.space());
    for ch in channels {
        let d = adjoint_dissipator(&ch.jump_at(t), h_sys)?;
        out = &out + &d.scale(c(ch.rate()));
    }
    Ok(out)
}

/// `Tr[dV~/dt rho]` with `rho` in the thermal representation.
pub fn work_power(dv_tilde_dt: &ScheduledOperator, rho_thermal: &DensityMatrix, t: f64) -> Result<f64> {
    let op = dv_tilde_dt.eval(t);
    op.check_same_space(rho_thermal.op())?;
    real_part(trace_of_product(op.matrix(), rho_thermal.matrix()), op.max_abs())
}

/// `Tr[H_sys L_0[rho]]` for the untransformed thermal channels.
pub fn heat_power(
    h_sys_embedded: &Operator,
    thermal_channels: &[Channel],
    rho_thermal: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    let obs = heat_observable(h_sys_embedded, thermal_channels, t)?;
    obs.check_same_space(rho_thermal.op())?;
    real_part(trace_of_product(obs.matrix(), rho_thermal.matrix()), obs.max_abs())
}

/// Heat current of a qubit with splitting `omega` decaying into a vacuum at
/// rate `gamma`.
pub fn vacuum_qubit_heat(omega: f64, gamma: f64, sigma_z: f64) -> f64 {
    -0.5 * omega * gamma * (1.0 + sigma_z)
}

/// `d<H>/dt = Tr[H rhs(rho, t)]` for a time-independent observable.
pub fn energy_flow(h: &Operator, me: &MasterEquation, rho: &DensityMatrix, t: f64) -> Result<f64> {
    h.check_same_space(rho.op())?;
    let d = me.rhs(rho, t)?;
    real_part(trace_of_product(h.matrix(), d.matrix()), h.max_abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `work - 2 dH_ext/dt`
    pub cost_identity: f64,
    /// `work + heat - dH_ext/dt - dH_sys/dt`
    pub first_law: f64,
}

pub fn first_law_residuals(work: f64, heat: f64, dhext_dt: f64, dhsys_dt: f64) -> Residuals {
    Residuals {
        cost_identity: work - 2.0 * dhext_dt,
        first_law: work + heat - dhext_dt - dhsys_dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Flows {
    pub work: f64,
    pub heat: f64,
    pub dhext_dt: f64,
    pub dhsys_dt: f64,
}

impl Flows {
    pub fn residuals(&self) -> Residuals {
        first_law_residuals(self.work, self.heat, self.dhext_dt, self.dhsys_dt)
    }

    /// Part of the work that goes to the system rather than the external mode.
    pub fn lost_to_system(&self) -> f64 {
        self.dhsys_dt - self.heat
    }
}

enum DriveRate {
    Static(DMatrix<Complex64>),
    Scheduled(ScheduledOperator),
}

enum HeatObservable {
    Static(DMatrix<Complex64>),
    PerTime { h_sys: Operator, channels: Vec<Channel> },
}

/// Precompiled evaluator of all ledger flows for one representation pair.
pub struct FlowProbe {
    thermal: CompiledEquation,
    h_sys: DMatrix<Complex64>,
    h_ext: DMatrix<Complex64>,
    drive_rate: DriveRate,
    heat: HeatObservable,
    scale: f64,
}

impl FlowProbe {
    pub fn new(pair: &RepresentationPair) -> Result<Self> {
        let heat = if pair.thermal_channels.iter().all(|ch| ch.static_jump().is_some()) {
            HeatObservable::Static(heat_observable(&pair.h_sys, &pair.thermal_channels, 0.0)?.into_matrix())
        } else {
            HeatObservable::PerTime { h_sys: pair.h_sys.clone(), channels: pair.thermal_channels.clone() }
        };
        let drive_rate = match pair.drive_rate.as_static() {
            Some(op) => DriveRate::Static(op.into_matrix()),
            None => DriveRate::Scheduled(pair.drive_rate.clone()),
        };
        Ok(Self {
            thermal: pair.thermal.compile(),
            h_sys: pair.h_sys.matrix().clone(),
            h_ext: pair.h_ext.matrix().clone(),
            drive_rate,
            heat,
            scale: pair.h_sys.max_abs() + pair.h_ext.max_abs() + pair.drive_rate.scale(),
        })
    }

    /// All four flows at a thermal-representation state.
    pub fn flows(&self, rho_thermal: &DensityMatrix, t: f64) -> Result<Flows> {
        let rho = rho_thermal.matrix();
        if rho.nrows() != self.h_sys.nrows() {
            return Err(Error::ShapeMismatch { rows: rho.nrows(), cols: rho.ncols(), dim: self.h_sys.nrows() });
        }
        let n = rho.nrows();
        let mut d = DMatrix::zeros(n, n);
        self.thermal.eval(rho, t, &mut d);
        let work = match &self.drive_rate {
            DriveRate::Static(m) => trace_of_product(m, rho),
            DriveRate::Scheduled(s) => trace_of_product(s.eval(t).matrix(), rho),
        };
        let heat = match &self.heat {
            HeatObservable::Static(m) => trace_of_product(m, rho),
            HeatObservable::PerTime { h_sys, channels } => {
                trace_of_product(heat_observable(h_sys, channels, t)?.matrix(), rho)
            }
        };
        Ok(Flows {
            work: real_part(work, self.scale)?,
            heat: real_part(heat, self.scale)?,
            dhext_dt: real_part(trace_of_product(&self.h_ext, &d), self.scale)?,
            dhsys_dt: real_part(trace_of_product(&self.h_sys, &d), self.scale)?,
        })
    }
}

/// Column names of a [`ThermoRecord`] row, in output order.
pub const COLUMNS: [&str; 14] = [
    "t",
    "n_mean",
    "n_var",
    "fano",
    "sigma_z",
    "dn_dt",
    "work_power",
    "heat_power",
    "dHext_dt",
    "dHsys_dt",
    "residual_first_law",
    "residual_cost_identity",
    "trace_error",
    "leak_top2",
];

/// One sample of the ledger. Flows are those of the thermal representation;
/// `sigma_z` is taken in the representation that was integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoRecord {
    pub t: f64,
    pub n_mean: f64,
    pub n_var: f64,
    /// Absent while `n_mean < 1e-6`.
    pub fano: Option<f64>,
    pub sigma_z: f64,
    pub dn_dt: f64,
    pub work_power: f64,
    pub heat_power: f64,
    pub dhext_dt: f64,
    pub dhsys_dt: f64,
    pub residual_first_law: f64,
    pub residual_cost_identity: f64,
    pub trace_error: f64,
    pub leak_top2: f64,
}

impl ThermoRecord {
    pub fn row(&self) -> [Option<f64>; 14] {
        [
            Some(self.t),
            Some(self.n_mean),
            Some(self.n_var),
            self.fano,
            Some(self.sigma_z),
            Some(self.dn_dt),
            Some(self.work_power),
            Some(self.heat_power),
            Some(self.dhext_dt),
            Some(self.dhsys_dt),
            Some(self.residual_first_law),
            Some(self.residual_cost_identity),
            Some(self.trace_error),
            Some(self.leak_top2),
        ]
    }

    pub fn flows(&self) -> Flows {
        Flows {
            work: self.work_power,
            heat: self.heat_power,
            dhext_dt: self.dhext_dt,
            dhsys_dt: self.dhsys_dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ThermoSeries {
    records: Vec<ThermoRecord>,
}

impl ThermoSeries {
    pub fn new(records: Vec<ThermoRecord>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[ThermoRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&ThermoRecord> {
        self.records.last()
    }

    pub fn times(&self) -> Vec<f64> {
        self.values(|r| r.t)
    }

    pub fn values(&self, f: impl Fn(&ThermoRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// Column by name, `None` for an unknown name.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = COLUMNS.iter().position(|c| *c == name)?;
        Some(self.records.iter().map(|r| r.row()[k]).collect())
    }

    pub fn max_abs(&self, f: impl Fn(&ThermoRecord) -> f64) -> f64 {
        self.records.iter().map(|r| f(r).abs()).fold(0.0, f64::max)
    }
}
