//! Simulation and analysis of concurrence measurement for two-photon pure
//! states using photonic Faraday rotation in low-Q cavities.
//!
//! Two copies of α|RR⟩ + β|RL⟩ + γ|LR⟩ + δ|LL⟩ are sent through cavity-based
//! parity checks; the probability that every ancilla atom is found unchanged
//! equals |αδ − βγ|² = C²/4.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimator;
pub mod faraday;
pub mod imperfect;
pub mod linalg;
pub mod oracle;
pub mod protocol;
pub mod qstate;

pub use error::{Error, Result};
pub use faraday::{CavityParams, FaradayPhases};
pub use imperfect::{ImperfectionParams, LeakModel};
pub use protocol::{ProtocolOutcome, TwoPhotonState};
pub use qstate::{Label, RegisterLayout, StateVector, C64};
