//! Twirling engines: randomized compiling for Clifford gates and pseudo
//! twirling for gates generated by Pauli Hamiltonians.

pub mod plan;
pub mod pst;
pub mod rc;
pub mod virtual_z;

pub use plan::{TwirlMode, TwirlPlan};
pub use pst::{
    classify_calibration, pst_average, pst_gate, pst_second_order_predictor, GateModel, HamiltonianTerm, ParityClass,
    PstEngine,
};
pub use rc::rc_twirl;
pub use virtual_z::{virtual_z_twirl_set, TwirlClass};
