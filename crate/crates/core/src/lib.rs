//! Exact simulation of three-photon GHZ correlations obtained from two-pair
//! down-conversion with a heralding trigger, and exact local-hidden-variable
//! feasibility checks against the resulting event pattern.
//!
//! The pipeline runs without floating point: states are polynomials in
//! creation operators over `Q(i)[√2]` ([`fock`], [`ring`]), the optical
//! elements are substitution rules ([`optics`]), events are classified into
//! right and wrong classes ([`events`]), analyzer statistics are exact
//! rationals ([`stats`]) and local models are decided by an exact simplex
//! ([`lhv`], [`simplex`]). [`sampler`] produces seeded Monte Carlo streams.

pub mod error;
pub mod events;
pub mod fock;
pub mod lhv;
pub mod optics;
pub mod ring;
pub mod sampler;
pub mod simplex;
pub mod source;
pub mod stats;
pub mod wire;

pub use error::{Error, Result};
pub use events::{classify_pattern, trigger_select, EventClass, Station, TriggerRule};
pub use fock::{Beam, ExactAmplitude, Mode, Occupation, Polarization, StatePolynomial};
pub use optics::{innsbruck_circuit, ModeTransform, OpticalCircuit};
pub use stats::{AnalyzerSetting, CircularConvention, OutcomeTable, SettingTriple};
