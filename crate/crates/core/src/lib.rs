//! Liouville-space simulation of pseudo twirling, noise tailoring and
//! pulse-inverse error mitigation for small qubit registers.

pub mod calibration;
pub mod error;
pub mod experiment;
pub mod kik;
pub mod linalg;
pub mod liouville;
pub mod noise;
pub mod pauli;
pub mod pulse;
pub mod twirl;

pub use error::{Error, Result};
pub use liouville::{StateVec, SuperOp};
pub use noise::NoiseModel;
pub use pauli::PauliString;
