//! In-place gate kernels on amplitude arrays. Qubit `q` of an `nbits`
//! register is bit `nbits - 1 - q` of the basis index.

use super::gate::GateMatrix;
use crate::linalg::C64;

#[inline]
fn bit(nbits: usize, q: usize) -> usize {
    1usize << (nbits - 1 - q)
}

pub fn apply(amps: &mut [C64], nbits: usize, qubits: &[usize], m: &GateMatrix) {
    match m {
        GateMatrix::Diag1(d) => diag1(amps, nbits, qubits[0], d),
        GateMatrix::Dense1(u) => dense1(amps, nbits, qubits[0], u),
        GateMatrix::Diag2(d) => diag2(amps, nbits, qubits[0], qubits[1], d),
        GateMatrix::Dense2(u) => dense2(amps, nbits, qubits[0], qubits[1], u),
    }
}

fn diag1(amps: &mut [C64], nbits: usize, q: usize, d: &[C64; 2]) {
    let b = bit(nbits, q);
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= d[usize::from(i & b != 0)];
    }
}

fn dense1(amps: &mut [C64], nbits: usize, q: usize, u: &[[C64; 2]; 2]) {
    let b = bit(nbits, q);
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + b {
            let (a0, a1) = (amps[i], amps[i + b]);
            amps[i] = u[0][0] * a0 + u[0][1] * a1;
            amps[i + b] = u[1][0] * a0 + u[1][1] * a1;
        }
        base += 2 * b;
    }
}

fn diag2(amps: &mut [C64], nbits: usize, qa: usize, qb: usize, d: &[C64; 4]) {
    let (ba, bb) = (bit(nbits, qa), bit(nbits, qb));
    for (i, a) in amps.iter_mut().enumerate() {
        let idx = (usize::from(i & ba != 0) << 1) | usize::from(i & bb != 0);
        *a *= d[idx];
    }
}

fn dense2(amps: &mut [C64], nbits: usize, qa: usize, qb: usize, u: &[[C64; 4]; 4]) {
    let (ba, bb) = (bit(nbits, qa), bit(nbits, qb));
    for i in 0..amps.len() {
        if i & ba != 0 || i & bb != 0 {
            continue;
        }
        let idx = [i, i | bb, i | ba, i | ba | bb];
        let v = idx.map(|j| amps[j]);
        for (r, &j) in idx.iter().enumerate() {
            amps[j] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
        }
    }
}

/// Replaces the reduced state on `qubits` of a row-major density matrix by
/// the maximally mixed state with weight `lambda`:
/// `rho -> (1 - lambda) rho + lambda (I / 2^k) (x) tr_k(rho)`.
/// The map is self-adjoint, so the same kernel serves Heisenberg-picture
/// evolution of observables.
pub fn depolarize(data: &mut [C64], nqubits: usize, qubits: &[usize], lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    let dim = 1usize << nqubits;
    let mask = qubits.iter().fold(0usize, |m, &q| m | bit(nqubits, q));
    let subs: Vec<usize> = (0..dim).filter(|s| s & !mask == 0).collect();
    let inv = 1.0 / subs.len() as f64;
    let keep = 1.0 - lambda;
    for r0 in (0..dim).filter(|r| r & mask == 0) {
        for c0 in (0..dim).filter(|c| c & mask == 0) {
            let s: C64 = subs.iter().map(|&x| data[(r0 | x) * dim + (c0 | x)]).sum::<C64>() * inv;
            for &x in &subs {
                for &y in &subs {
                    let idx = (r0 | x) * dim + (c0 | y);
                    data[idx] *= keep;
                    if x == y {
                        data[idx] += s * lambda;
                    }
                }
            }
        }
    }
}
