//! Generalized thermal baths for Lindblad master equations, their unitary
//! equivalence to thermal baths plus a drive, the resulting work and heat
//! ledger, and a cavity amplifier powered by a flipped vacuum bath.

pub mod amplifier;
pub mod bath;
pub mod error;
pub mod husimi;
pub mod ledger;
pub mod lindblad;
pub mod operator;
pub mod random;
pub mod schedule;
pub mod sparse;
pub mod validation;

pub use amplifier::{AmplifierConfig, Predictions};
pub use bath::{Direction, Frame, GeneralizedBathSpec, Representation, RepresentationPair};
pub use error::{Error, Result};
pub use husimi::HusimiGrid;
pub use ledger::{Flows, ThermoRecord, ThermoSeries, COLUMNS};
pub use lindblad::{Channel, IntegratorConfig, MasterEquation, Method, Trajectory};
pub use operator::{DensityMatrix, HilbertSpace, Operator};
pub use schedule::{PhaseTerm, ScheduledOperator};
