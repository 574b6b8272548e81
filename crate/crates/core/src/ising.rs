//! Mixed-field Ising chain `H = J sum Z_n Z_{n+1} + h_x sum X_n + h_z sum Z_n`
//! with open boundaries: exact propagators, Heisenberg evolution and
//! first-order Trotter circuits.

use std::sync::OnceLock;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix, C64, ZERO};
use crate::pauli::{expand_operator, OperatorExpansion, Pauli, PauliString};

/// Alignment tolerance for `t / dt`, relative to the number of steps.
const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct HamiltonianSpec {
    n_sites: usize,
    coupling_j: f64,
    field_hx: f64,
    field_hz: f64,
    terms: Vec<(PauliString, f64)>,
    spectrum: OnceLock<(Vec<f64>, CMatrix)>,
}

impl Clone for HamiltonianSpec {
    fn clone(&self) -> Self {
        Self {
            n_sites: self.n_sites,
            coupling_j: self.coupling_j,
            field_hx: self.field_hx,
            field_hz: self.field_hz,
            terms: self.terms.clone(),
            spectrum: self.spectrum.clone(),
        }
    }
}

impl PartialEq for HamiltonianSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n_sites == other.n_sites && self.terms == other.terms
    }
}

pub fn build_hamiltonian(n_sites: usize, coupling_j: f64, field_hx: f64, field_hz: f64) -> Result<HamiltonianSpec> {
    if n_sites < 2 {
        return Err(Error::TooFewSites { min: 2, actual: n_sites });
    }
    let mut terms = Vec::with_capacity(3 * n_sites - 1);
    for n in 0..n_sites - 1 {
        let mut letters = vec![Pauli::I; n_sites];
        letters[n] = Pauli::Z;
        letters[n + 1] = Pauli::Z;
        terms.push((PauliString::new(letters), coupling_j));
    }
    for n in 1..=n_sites {
        terms.push((PauliString::single(n_sites, n, Pauli::X)?, field_hx));
    }
    if field_hz != 0.0 {
        for n in 1..=n_sites {
            terms.push((PauliString::single(n_sites, n, Pauli::Z)?, field_hz));
        }
    }
    Ok(HamiltonianSpec { n_sites, coupling_j, field_hx, field_hz, terms, spectrum: OnceLock::new() })
}

impl HamiltonianSpec {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn coupling_j(&self) -> f64 {
        self.coupling_j
    }

    pub fn field_hx(&self) -> f64 {
        self.field_hx
    }

    pub fn field_hz(&self) -> f64 {
        self.field_hz
    }

    pub fn terms(&self) -> &[(PauliString, f64)] {
        &self.terms
    }

    /// Dense `2^N x 2^N` matrix. Every term is a signed permutation, so the
    /// matrix is assembled entry by entry rather than via Kronecker products.
    pub fn dense(&self) -> CMatrix {
        let n = self.n_sites;
        let dim = 1usize << n;
        let mut h = CMatrix::from_element(dim, dim, ZERO);
        for (p, c) in &self.terms {
            for col in 0..dim {
                let mut row = col;
                let mut amp = C64::new(*c, 0.0);
                for (q, letter) in p.letters().iter().enumerate() {
                    let b = 1usize << (n - 1 - q);
                    let bit = col & b != 0;
                    match letter {
                        Pauli::I => {}
                        Pauli::X => row ^= b,
                        Pauli::Y => {
                            row ^= b;
                            amp *= if bit { C64::new(0.0, -1.0) } else { C64::new(0.0, 1.0) };
                        }
                        Pauli::Z => {
                            if bit {
                                amp = -amp;
                            }
                        }
                    }
                }
                h[(row, col)] += amp;
            }
        }
        h
    }

    /// Eigenvalues and eigenvectors, computed once and shared by clones made
    /// afterwards.
    pub fn spectrum(&self) -> Result<&(Vec<f64>, CMatrix)> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = hermitian_eigen(&self.dense())?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    /// Number of gates in one Trotter step.
    pub fn gates_per_step(&self) -> usize {
        let z = if self.field_hz != 0.0 { self.n_sites } else { 0 };
        (self.n_sites - 1) + self.n_sites + z
    }
}

/// `steps` Trotter steps of size `dt` reaching time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrotterPlan {
    dt: f64,
    t: f64,
    steps: usize,
}

impl TrotterPlan {
    pub fn new(t: f64, dt: f64) -> Result<Self> {
        let steps = aligned_steps(t, dt)?;
        Ok(Self { dt, t, steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

/// `t / dt` as an integer, or an error when `t` is not on the `dt` grid.
pub fn aligned_steps(t: f64, dt: f64) -> Result<usize> {
    if dt.is_nan() || dt <= 0.0 || !t.is_finite() || t < 0.0 {
        return Err(Error::MisalignedTime { t, dt });
    }
    let ratio = t / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > ALIGN_TOL * steps.max(1.0) {
        return Err(Error::MisalignedTime { t, dt });
    }
    Ok(steps as usize)
}

/// `U(t) = exp(-i H t)` from the cached eigendecomposition.
pub fn exact_propagator(h: &HamiltonianSpec, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::OutOfRange { value: t, lo: f64::MIN, hi: f64::MAX });
    }
    let (energies, v) = h.spectrum()?;
    let mut vd = v.clone();
    for (j, e) in energies.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e * t);
        for x in vd.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    Ok(vd * v.adjoint())
}

/// `O(t) = e^{iHt} O e^{-iHt}` as a dense matrix.
pub fn heisenberg_matrix(o0: &CMatrix, h: &HamiltonianSpec, t: f64) -> Result<CMatrix> {
    let dim = 1usize << h.n_sites();
    if o0.nrows() != dim || o0.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: o0.nrows() });
    }
    let u = exact_propagator(h, t)?;
    Ok(u.adjoint() * o0 * u)
}

pub fn heisenberg_evolve(o0: &CMatrix, h: &HamiltonianSpec, t: f64) -> Result<OperatorExpansion> {
    expand_operator(&heisenberg_matrix(o0, h, t)?, h.n_sites())
}

/// One first-order step for `exp(-i sign H dt)` in the order ZZ, X, Z.
fn trotter_step(h: &HamiltonianSpec, dt: f64, sign: f64) -> Vec<Gate> {
    let n = h.n_sites();
    let mut gates = Vec::with_capacity(h.gates_per_step());
    for q in 0..n - 1 {
        gates.push(Gate::rzz(q, q + 1, 2.0 * h.coupling_j * dt * sign));
    }
    for q in 0..n {
        gates.push(Gate::rx(q, 2.0 * h.field_hx * dt * sign));
    }
    if h.field_hz != 0.0 {
        for q in 0..n {
            gates.push(Gate::rz(q, 2.0 * h.field_hz * dt * sign));
        }
    }
    gates
}

/// Lie-Trotter circuit on `N` qubits approximating `exp(-i sign H t)`.
///
/// `sign = +1` repeats the step ZZ, X, Z layers. `sign = -1` returns the
/// exact inverse of the `+1` circuit (gates reversed with negated angles),
/// so a backward circuit undoes the forward one gate for gate.
pub fn trotter_circuit(h: &HamiltonianSpec, plan: &TrotterPlan, sign: i8) -> Circuit {
    let step = trotter_step(h, plan.dt, 1.0);
    let mut c = Circuit::new(h.n_sites());
    for _ in 0..plan.steps {
        for g in &step {
            c.push_unchecked(g.clone());
        }
    }
    if sign < 0 {
        c.inverse()
    } else {
        c
    }
}

/// One forward Trotter step as a circuit.
pub fn trotter_step_circuit(h: &HamiltonianSpec, dt: f64) -> Circuit {
    let mut c = Circuit::new(h.n_sites());
    for g in trotter_step(h, dt, 1.0) {
        c.push_unchecked(g);
    }
    c
}
