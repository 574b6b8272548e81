use rand::Rng;

use super::gate::Gate;
use super::kernel;
use super::noise::NoiseModel;
use super::Circuit;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, CMatrix, C64, ONE, ZERO};
use crate::pauli::Pauli;

/// Pure register state; basis index with qubit 0 most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    nqubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(nqubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << nqubits];
        amps[0] = ONE;
        Self { nqubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let nqubits = crate::linalg::log2_dim(amps.len())?;
        Ok(Self { nqubits, amps })
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        kernel::apply(&mut self.amps, self.nqubits, &gate.qubits, &gate.matrix());
    }

    /// Applies `u (x) I` where `u` acts on the leading `log2(u.nrows())` qubits.
    pub fn apply_leading_operator(&mut self, u: &CMatrix) -> Result<()> {
        let k = crate::linalg::log2_dim(u.nrows())?;
        if k > self.nqubits {
            return Err(Error::DimensionMismatch { expected: 1 << self.nqubits, actual: u.nrows() });
        }
        let inner = 1usize << (self.nqubits - k);
        let outer = 1usize << k;
        let mut out = vec![ZERO; self.amps.len()];
        for r in 0..outer {
            for s in 0..outer {
                let w = u[(r, s)];
                if w == ZERO {
                    continue;
                }
                let (dst, src) = (r * inner, s * inner);
                for e in 0..inner {
                    out[dst + e] += w * self.amps[src + e];
                }
            }
        }
        self.amps = out;
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Tensor product `self (x) other` (self on the leading qubits).
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        StateVector { nqubits: self.nqubits + other.nqubits, amps }
    }
}

/// Row-major `2^Q x 2^Q` matrix on a register. Holds density matrices, and
/// also Hermitian observables evolved in the Heisenberg picture.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    nqubits: usize,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn zero_state(nqubits: usize) -> Self {
        Self::from_pure(&StateVector::zero(nqubits))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let mut data = Vec::with_capacity(a.len() * a.len());
        for x in a {
            data.extend(a.iter().map(|y| x * y.conj()));
        }
        Self { nqubits: psi.nqubits(), data }
    }

    pub fn maximally_mixed(nqubits: usize) -> Self {
        let dim = 1usize << nqubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { nqubits, data }
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let nqubits = crate::linalg::log2_dim(m.nrows())?;
        if m.ncols() != m.nrows() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
        }
        let dim = m.nrows();
        Ok(Self { nqubits, data: (0..dim * dim).map(|i| m[(i / dim, i % dim)]).collect() })
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = self.dim();
        CMatrix::from_fn(dim, dim, |r, c| self.data[r * dim + c])
    }

    pub fn nqubits(&self) -> usize {
        self.nqubits
    }

    pub fn dim(&self) -> usize {
        1 << self.nqubits
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim() + c]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// `rho -> U rho U^†`.
    pub fn apply_gate(&mut self, gate: &Gate) {
        let m = gate.matrix();
        let q = self.nqubits;
        let cols: Vec<usize> = gate.qubits.iter().map(|&x| q + x).collect();
        kernel::apply(&mut self.data, 2 * q, &gate.qubits, &m);
        kernel::apply(&mut self.data, 2 * q, &cols, &m.conj());
    }

    /// Heisenberg-picture update `A -> U^† A U`.
    pub fn apply_gate_adjoint(&mut self, gate: &Gate) {
        let m = gate.matrix().adjoint();
        let q = self.nqubits;
        let cols: Vec<usize> = gate.qubits.iter().map(|&x| q + x).collect();
        kernel::apply(&mut self.data, 2 * q, &gate.qubits, &m);
        kernel::apply(&mut self.data, 2 * q, &cols, &m.conj());
    }

    pub fn depolarize(&mut self, qubits: &[usize], lambda: f64) {
        kernel::depolarize(&mut self.data, self.nqubits, qubits, lambda);
    }

    /// `rho -> (u (x) I) rho (u (x) I)^†` with `u` on the leading qubits.
    pub fn apply_leading_operator(&mut self, u: &CMatrix) -> Result<()> {
        let k = crate::linalg::log2_dim(u.nrows())?;
        if k > self.nqubits {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: u.nrows() });
        }
        let rest = 1usize << (self.nqubits - k);
        let full = u.kronecker(&CMatrix::identity(rest, rest));
        let m = &full * self.to_matrix() * full.adjoint();
        *self = Self::from_matrix(&m)?;
        Ok(())
    }

    /// `Re tr(A rho)` for Hermitian `A` (`self`) and `rho`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        self.data.iter().zip(&rho.data).map(|(a, r)| (a * r.conj()).re).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.to_matrix())?.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// `self (x) other`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let m = self.to_matrix().kronecker(&other.to_matrix());
        DensityMatrix::from_matrix(&m).expect("power-of-two dimension")
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i].re).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn width(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.nqubits(),
            QuantumState::Mixed(r) => r.nqubits(),
        }
    }

    pub fn into_mixed(self) -> DensityMatrix {
        match self {
            QuantumState::Pure(s) => DensityMatrix::from_pure(&s),
            QuantumState::Mixed(r) => r,
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match self {
            QuantumState::Pure(s) => s.apply_gate(gate),
            QuantumState::Mixed(r) => r.apply_gate(gate),
        }
    }
}

/// Applies `circuit` gate by gate. With a noise model (density-matrix
/// backend only) every gate is followed by a depolarizing channel on its
/// support at the model's effective rate.
pub fn apply_circuit(state: QuantumState, circuit: &Circuit, noise: Option<&NoiseModel>) -> Result<QuantumState> {
    if state.width() != circuit.width() {
        return Err(Error::DimensionMismatch { expected: circuit.width(), actual: state.width() });
    }
    match state {
        QuantumState::Pure(mut s) => {
            if noise.is_some() {
                return Err(Error::NoiseOnPureState);
            }
            for g in circuit.gates() {
                s.apply_gate(g);
            }
            Ok(QuantumState::Pure(s))
        }
        QuantumState::Mixed(mut rho) => {
            let lambda = noise.map_or(0.0, NoiseModel::effective_rate);
            for g in circuit.gates() {
                rho.apply_gate(g);
                rho.depolarize(&g.qubits, lambda);
            }
            Ok(QuantumState::Mixed(rho))
        }
    }
}

/// Heisenberg-picture adjoint of [`apply_circuit`] on the density backend:
/// returns `A'` with `tr(A' rho) = tr(A Phi(rho))` for every `rho`.
pub fn apply_circuit_adjoint(
    mut observable: DensityMatrix,
    circuit: &Circuit,
    noise: Option<&NoiseModel>,
) -> Result<DensityMatrix> {
    if observable.nqubits() != circuit.width() {
        return Err(Error::DimensionMismatch { expected: circuit.width(), actual: observable.nqubits() });
    }
    let lambda = noise.map_or(0.0, NoiseModel::effective_rate);
    for g in circuit.gates().iter().rev() {
        observable.depolarize(&g.qubits, lambda);
        observable.apply_gate_adjoint(g);
    }
    Ok(observable)
}

/// One stochastic Pauli trajectory: after each gate, with probability equal
/// to the effective rate, a uniformly random Pauli string on the gate's
/// support (identity included) is applied. Averaging over trajectories
/// reproduces the depolarizing channel of [`apply_circuit`].
pub fn apply_circuit_trajectory<R: Rng + ?Sized>(
    mut state: StateVector,
    circuit: &Circuit,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<StateVector> {
    if state.nqubits() != circuit.width() {
        return Err(Error::DimensionMismatch { expected: circuit.width(), actual: state.nqubits() });
    }
    let lambda = noise.effective_rate();
    for g in circuit.gates() {
        state.apply_gate(g);
        if lambda > 0.0 && rng.random::<f64>() < lambda {
            for &q in &g.qubits {
                let p = Pauli::from_index(rng.random_range(0..4u8)).unwrap();
                if let Some(err) = Gate::pauli(p, q) {
                    state.apply_gate(&err);
                }
            }
        }
    }
    Ok(state)
}
