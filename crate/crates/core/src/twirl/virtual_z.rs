//! Twirl Paulis whose Z components are realized as virtual frame changes.
//!
//! A virtual Z is not executed: it is pushed through the gate by shifting the
//! phase of the drive. That flips the sign of the controllable drive terms
//! but leaves drive-independent errors and noise untouched, and the two
//! virtual Z frames of the sandwich cancel. The error is therefore twirled
//! only by the physical part of the Pauli, and distinct twirls collapse onto
//! the same effective twirl.

use crate::error::{Error, Result};
use crate::liouville::SuperOp;
use crate::noise::NoiseModel;
use crate::pauli::{all_paulis, sign_of, PauliString};

use super::plan::mean_fixed_order;
use super::pst::{GateModel, HamiltonianTerm, PstEngine};

/// Twirls that realize the same channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwirlClass {
    /// The physical Pauli that actually conjugates the errors.
    pub effective: PauliString,
    pub members: Vec<PauliString>,
}

fn mask_of(n: usize, virtual_qubits: &[usize]) -> Result<u64> {
    virtual_qubits.iter().try_fold(0u64, |m, &q| {
        if q >= n {
            Err(Error::Invalid(format!("virtual-Z qubit {q} out of range for {n} qubits")))
        } else {
            Ok(m | 1 << q)
        }
    })
}

/// Physical part of `alpha` when Z is virtual on the qubits in `virtual_qubits`.
pub fn physical_part(alpha: &PauliString, virtual_qubits: &[usize]) -> Result<PauliString> {
    Ok(alpha.without_z_on(mask_of(alpha.num_qubits(), virtual_qubits)?))
}

/// Partition all `4ⁿ` twirls by their physical part, in index order of the
/// effective Pauli. With no virtual qubits every class is a singleton.
pub fn virtual_z_twirl_set(n: usize, virtual_qubits: &[usize]) -> Result<Vec<TwirlClass>> {
    let mask = mask_of(n, virtual_qubits)?;
    let mut classes: Vec<TwirlClass> = Vec::new();
    for alpha in all_paulis(n) {
        let effective = alpha.without_z_on(mask);
        match classes.iter_mut().find(|c| c.effective == effective) {
            Some(c) => c.members.push(alpha),
            None => classes.push(TwirlClass { effective, members: vec![alpha] }),
        }
    }
    classes.sort_by_key(|c| c.effective.index());
    Ok(classes)
}

/// Realization of the twirl `alpha` when its Z components on
/// `virtual_qubits` are implemented as frame changes.
pub fn pst_gate_virtual_z(
    gate: &GateModel,
    alpha: &PauliString,
    virtual_qubits: &[usize],
    extra_coherent: &[HamiltonianTerm],
    noise: &NoiseModel,
) -> Result<SuperOp> {
    let mask = mask_of(gate.n, virtual_qubits)?;
    let physical = alpha.without_z_on(mask);
    let frame = PauliString::from_bits(gate.n, 0, alpha.z_bits() & mask)?;
    let engine = PstEngine::new(gate, extra_coherent, noise)?;
    // Requested PST sign, then the phase shift from pushing the virtual frame
    // through the drive.
    let generator = engine.generator_with_signs(|term| {
        if term.controllable() {
            gate.drive_sign(term, alpha) * f64::from(sign_of(&frame, &term.pauli))
        } else {
            1.0
        }
    });
    let inner = generator.scale(gate.duration).expm();
    Ok(engine.sandwich(&physical, &inner))
}

/// Average of [`pst_gate_virtual_z`] over `twirls`.
pub fn pst_average_virtual_z(
    gate: &GateModel,
    twirls: &[PauliString],
    virtual_qubits: &[usize],
    extra_coherent: &[HamiltonianTerm],
    noise: &NoiseModel,
) -> Result<SuperOp> {
    let terms = twirls
        .iter()
        .map(|a| pst_gate_virtual_z(gate, a, virtual_qubits, extra_coherent, noise))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_fixed_order(&terms))
}
