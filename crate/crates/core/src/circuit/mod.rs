//! Gate-level simulation: a pure statevector backend, a density-matrix
//! backend with depolarizing noise, random-state preparation circuits and
//! Bell-pair measurement.

mod gate;
mod kernel;
mod measure;
mod noise;
mod random;
mod state;

use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

pub use gate::{Gate, GateKind, GateMatrix};
pub use measure::{bell_probs, bell_projector, prepare_initial, sample_shots, RegisterLayout};
pub use noise::NoiseModel;
pub use random::{random_state_circuit, seeded_random_state_circuit};
pub use state::{
    apply_circuit, apply_circuit_adjoint, apply_circuit_trajectory, DensityMatrix, QuantumState, StateVector,
};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new() }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Self::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    pub(crate) fn push_unchecked(&mut self, gate: Gate) {
        debug_assert!(gate.validate(self.width).is_ok());
        self.gates.push(gate);
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.width != self.width {
            return Err(Error::DimensionMismatch { expected: self.width, actual: other.width });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// Relabels qubit `q` as `map[q]` on a register of `width` qubits.
    pub fn remap(&self, width: usize, map: &[usize]) -> Result<Circuit> {
        if map.len() != self.width {
            return Err(Error::DimensionMismatch { expected: self.width, actual: map.len() });
        }
        let mut out = Circuit::new(width);
        for g in &self.gates {
            let mut h = g.clone();
            h.qubits = g.qubits.iter().map(|&q| map[q]).collect();
            out.push(h)?;
        }
        Ok(out)
    }

    /// Adjoint circuit: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit { width: self.width, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    /// Dense unitary of the whole circuit, built column by column.
    pub fn to_unitary(&self) -> CMatrix {
        let dim = 1usize << self.width;
        let mut u = CMatrix::from_element(dim, dim, ZERO);
        for col in 0..dim {
            let mut amps = vec![ZERO; dim];
            amps[col] = crate::linalg::ONE;
            let mut s = StateVector::from_amplitudes(amps).expect("power-of-two length");
            for g in &self.gates {
                s.apply_gate(g);
            }
            for (r, a) in s.amplitudes().iter().enumerate() {
                u[(r, col)] = *a;
            }
        }
        u
    }
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.gates.len()))?;
        for g in &self.gates {
            seq.serialize_element(g)?;
        }
        seq.end()
    }
}
