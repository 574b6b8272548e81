use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I, ONE, ZERO};
use crate::pauli::Pauli;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    RotX,
    RotY,
    RotZ,
    RotZz,
    Cz,
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
    Cnot,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::RotZz | GateKind::Cz | GateKind::Cnot => 2,
            _ => 1,
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RotX | GateKind::RotY | GateKind::RotZ | GateKind::RotZz)
    }
}

/// A gate on one or two qubits. Rotations use the `exp(-i angle sigma / 2)`
/// convention; for two-qubit gates `qubits[0]` is the more significant
/// factor of the 4x4 matrix (and the control of `cnot`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<f64>,
}

/// Unitary of a gate, with a diagonal fast path.
#[derive(Clone, Debug, PartialEq)]
pub enum GateMatrix {
    Diag1([C64; 2]),
    Dense1([[C64; 2]; 2]),
    Diag2([C64; 4]),
    Dense2([[C64; 4]; 4]),
}

impl GateMatrix {
    pub fn conj(&self) -> GateMatrix {
        match self {
            GateMatrix::Diag1(d) => GateMatrix::Diag1(d.map(|z| z.conj())),
            GateMatrix::Dense1(m) => GateMatrix::Dense1(m.map(|row| row.map(|z| z.conj()))),
            GateMatrix::Diag2(d) => GateMatrix::Diag2(d.map(|z| z.conj())),
            GateMatrix::Dense2(m) => GateMatrix::Dense2(m.map(|row| row.map(|z| z.conj()))),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> GateMatrix {
        match self {
            GateMatrix::Diag1(_) | GateMatrix::Diag2(_) => self.conj(),
            GateMatrix::Dense1(m) => {
                let mut out = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        out[r][c] = m[c][r].conj();
                    }
                }
                GateMatrix::Dense1(out)
            }
            GateMatrix::Dense2(m) => {
                let mut out = [[ZERO; 4]; 4];
                for r in 0..4 {
                    for c in 0..4 {
                        out[r][c] = m[c][r].conj();
                    }
                }
                GateMatrix::Dense2(out)
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            GateMatrix::Diag1(d) => CMatrix::from_fn(2, 2, |r, c| if r == c { d[r] } else { ZERO }),
            GateMatrix::Dense1(m) => CMatrix::from_fn(2, 2, |r, c| m[r][c]),
            GateMatrix::Diag2(d) => CMatrix::from_fn(4, 4, |r, c| if r == c { d[r] } else { ZERO }),
            GateMatrix::Dense2(m) => CMatrix::from_fn(4, 4, |r, c| m[r][c]),
        }
    }
}

impl Gate {
    fn one(kind: GateKind, q: usize, angle: Option<f64>) -> Self {
        Self { kind, qubits: vec![q], angle }
    }

    fn two(kind: GateKind, a: usize, b: usize, angle: Option<f64>) -> Self {
        Self { kind, qubits: vec![a, b], angle }
    }

    pub fn rx(q: usize, angle: f64) -> Self {
        Self::one(GateKind::RotX, q, Some(angle))
    }

    pub fn ry(q: usize, angle: f64) -> Self {
        Self::one(GateKind::RotY, q, Some(angle))
    }

    pub fn rz(q: usize, angle: f64) -> Self {
        Self::one(GateKind::RotZ, q, Some(angle))
    }

    pub fn rzz(a: usize, b: usize, angle: f64) -> Self {
        Self::two(GateKind::RotZz, a, b, Some(angle))
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::two(GateKind::Cz, a, b, None)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cnot, control, target, None)
    }

    pub fn h(q: usize) -> Self {
        Self::one(GateKind::Hadamard, q, None)
    }

    pub fn x(q: usize) -> Self {
        Self::one(GateKind::PauliX, q, None)
    }

    pub fn y(q: usize) -> Self {
        Self::one(GateKind::PauliY, q, None)
    }

    pub fn z(q: usize) -> Self {
        Self::one(GateKind::PauliZ, q, None)
    }

    /// The Pauli gate for a letter; `None` for the identity.
    pub fn pauli(p: Pauli, q: usize) -> Option<Self> {
        match p {
            Pauli::I => None,
            Pauli::X => Some(Self::x(q)),
            Pauli::Y => Some(Self::y(q)),
            Pauli::Z => Some(Self::z(q)),
        }
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    fn angle_or_zero(&self) -> f64 {
        self.angle.unwrap_or(0.0)
    }

    pub fn inverse(&self) -> Gate {
        let mut g = self.clone();
        if self.kind.is_rotation() {
            g.angle = Some(-self.angle_or_zero());
        }
        g
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        let bad = self.qubits.len() != self.arity()
            || self.qubits.iter().any(|&q| q >= width)
            || (self.arity() == 2 && self.qubits[0] == self.qubits[1])
            || (self.kind.is_rotation() && !self.angle.is_some_and(f64::is_finite));
        if bad {
            return Err(Error::InvalidGate { gate: self.to_string(), width });
        }
        Ok(())
    }

    pub fn matrix(&self) -> GateMatrix {
        let theta = self.angle_or_zero();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let phase = |x: f64| C64::from_polar(1.0, x);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self.kind {
            GateKind::RotX => GateMatrix::Dense1([[C64::new(c, 0.0), -I * s], [-I * s, C64::new(c, 0.0)]]),
            GateKind::RotY => {
                GateMatrix::Dense1([[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]])
            }
            GateKind::RotZ => GateMatrix::Diag1([phase(-theta / 2.0), phase(theta / 2.0)]),
            GateKind::RotZz => {
                let (m, p) = (phase(-theta / 2.0), phase(theta / 2.0));
                GateMatrix::Diag2([m, p, p, m])
            }
            GateKind::Cz => GateMatrix::Diag2([ONE, ONE, ONE, -ONE]),
            GateKind::PauliX => GateMatrix::Dense1(Pauli::X.matrix()),
            GateKind::PauliY => GateMatrix::Dense1(Pauli::Y.matrix()),
            GateKind::PauliZ => GateMatrix::Diag1([ONE, -ONE]),
            GateKind::Hadamard => {
                GateMatrix::Dense1([[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]])
            }
            GateKind::Cnot => {
                let mut m = [[ZERO; 4]; 4];
                m[0][0] = ONE;
                m[1][1] = ONE;
                m[2][3] = ONE;
                m[3][2] = ONE;
                GateMatrix::Dense2(m)
            }
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.kind, self.qubits)?;
        if let Some(a) = self.angle {
            write!(f, "({a})")?;
        }
        Ok(())
    }
}
