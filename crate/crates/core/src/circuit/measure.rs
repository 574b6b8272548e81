use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::state::{DensityMatrix, QuantumState, StateVector};
use super::{apply_circuit, Circuit, Gate};
use crate::error::{Error, Result};
use crate::holevo::BellBasis;
use crate::linalg::{C64, ZERO};
use crate::pauli::check_site;

/// `N` system qubits (qubit `n - 1` holds site `n`) plus one ancilla at
/// qubit `N`, paired with the probed site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    n_sites: usize,
    probe_site: usize,
}

impl RegisterLayout {
    pub fn new(n_sites: usize, probe_site: usize) -> Result<Self> {
        check_site(probe_site, n_sites)?;
        Ok(Self { n_sites, probe_site })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn probe_site(&self) -> usize {
        self.probe_site
    }

    pub fn width(&self) -> usize {
        self.n_sites + 1
    }

    pub fn probe_qubit(&self) -> usize {
        self.probe_site - 1
    }

    pub fn ancilla(&self) -> usize {
        self.n_sites
    }

    /// System qubits other than the probe, in site order.
    pub fn rest_qubits(&self) -> Vec<usize> {
        (0..self.n_sites).filter(|&q| q != self.probe_qubit()).collect()
    }

    /// Full-register circuit: Bell pair on (probe, ancilla) via hadamard and
    /// cnot, then `psi` mapped onto the remaining system qubits.
    pub fn initial_circuit(&self, psi: &Circuit) -> Result<Circuit> {
        if psi.width() != self.n_sites - 1 {
            return Err(Error::DimensionMismatch { expected: self.n_sites - 1, actual: psi.width() });
        }
        let mut c = Circuit::new(self.width());
        c.push(Gate::h(self.probe_qubit()))?;
        c.push(Gate::cnot(self.probe_qubit(), self.ancilla()))?;
        c.append(&psi.remap(self.width(), &self.rest_qubits())?)?;
        Ok(c)
    }

    /// `|B0> (probe, ancilla)` tensored with `rest` placed on the other
    /// system qubits, built directly from amplitudes.
    pub fn embed_bell_pure(&self, rest: &StateVector) -> StateVector {
        let width = self.width();
        let rest_q = self.rest_qubits();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![ZERO; 1 << width];
        for (ri, &a) in rest.amplitudes().iter().enumerate() {
            let mut base = 0usize;
            for (pos, &q) in rest_q.iter().enumerate() {
                if ri >> (rest_q.len() - 1 - pos) & 1 == 1 {
                    base |= 1 << (width - 1 - q);
                }
            }
            let both = (1 << (width - 1 - self.probe_qubit())) | (1 << (width - 1 - self.ancilla()));
            amps[base] = a * s;
            amps[base | both] = a * s;
        }
        StateVector::from_amplitudes(amps).expect("power-of-two length")
    }

    /// `pair (x) rest` as a full-register density matrix, with `pair` on
    /// (probe, ancilla) and `rest` on the other system qubits.
    pub fn embed_mixed(&self, pair: &DensityMatrix, rest: &DensityMatrix) -> DensityMatrix {
        let width = self.width();
        let dim = 1usize << width;
        let rest_q = self.rest_qubits();
        let (pb, ab) = (1 << (width - 1 - self.probe_qubit()), 1 << (width - 1 - self.ancilla()));
        let split = |i: usize| {
            let p = (usize::from(i & pb != 0) << 1) | usize::from(i & ab != 0);
            let r = rest_q.iter().fold(0usize, |acc, &q| (acc << 1) | usize::from(i & (1 << (width - 1 - q)) != 0));
            (p, r)
        };
        let parts: Vec<(usize, usize)> = (0..dim).map(split).collect();
        let mut out = DensityMatrix::maximally_mixed(width);
        let data = out.data_mut();
        for (r, &(pr, rr)) in parts.iter().enumerate() {
            for (c, &(pc, rc)) in parts.iter().enumerate() {
                data[r * dim + c] = pair.get(pr, pc) * rest.get(rr, rc);
            }
        }
        out
    }
}

/// Fresh protocol state: Bell pair on (probe, ancilla) and `psi` applied to
/// `|0...0>` on the remaining `N - 1` system qubits.
pub fn prepare_initial(layout: &RegisterLayout, psi: &Circuit) -> Result<QuantumState> {
    let c = layout.initial_circuit(psi)?;
    apply_circuit(QuantumState::Pure(StateVector::zero(layout.width())), &c, None)
}

/// Outcome bits `(a, b)` after cnot(a -> b) then hadamard(a) identify the
/// Bell state: 00 -> B0, 01 -> B1, 11 -> B2, 10 -> B3.
const OUTCOME_TO_BELL: [usize; 4] = [0, 1, 3, 2];

/// Bell-basis probabilities `P_i = <B^i| rho_(a,b) |B^i>` on qubit pair `(a, b)`.
pub fn bell_probs(state: &QuantumState, a: usize, b: usize) -> Result<[f64; 4]> {
    let width = state.width();
    let mut basis_change = Circuit::new(width);
    basis_change.push(Gate::cnot(a, b))?;
    basis_change.push(Gate::h(a))?;
    let rotated = apply_circuit(state.clone(), &basis_change, None)?;
    let diag = match &rotated {
        QuantumState::Pure(s) => s.probabilities(),
        QuantumState::Mixed(r) => r.diagonal(),
    };
    let (ba, bb) = (1usize << (width - 1 - a), 1usize << (width - 1 - b));
    let mut probs = [0.0; 4];
    for (i, p) in diag.into_iter().enumerate() {
        let outcome = (usize::from(i & ba != 0) << 1) | usize::from(i & bb != 0);
        probs[OUTCOME_TO_BELL[outcome]] += p;
    }
    Ok(probs)
}

/// `|B^i><B^i|` on `(a, b)` tensored with the identity elsewhere.
pub fn bell_projector(width: usize, a: usize, b: usize, i: usize) -> DensityMatrix {
    let dim = 1usize << width;
    let (ba, bb) = (1usize << (width - 1 - a), 1usize << (width - 1 - b));
    let mask = ba | bb;
    let v = BellBasis::state(i);
    let local = |x: usize| (usize::from(x & ba != 0) << 1) | usize::from(x & bb != 0);
    let mut out = DensityMatrix::maximally_mixed(width);
    let data = out.data_mut();
    for r in 0..dim {
        for c in 0..dim {
            data[r * dim + c] =
                if r & !mask == c & !mask { v[local(r)] * v[local(c)].conj() } else { C64::new(0.0, 0.0) };
        }
    }
    out
}

/// Multinomial estimate of `probs` from `shots` draws; `shots == 0` returns
/// the exact probabilities.
pub fn sample_shots<R: Rng + ?Sized>(probs: &[f64; 4], shots: u64, rng: &mut R) -> [f64; 4] {
    if shots == 0 {
        return *probs;
    }
    let clean = probs.map(|p| p.max(0.0));
    let total: f64 = clean.iter().sum();
    let mut remaining_n = shots;
    let mut remaining_p = 1.0;
    let mut out = [0.0; 4];
    for i in 0..4 {
        let p = clean[i] / total;
        let k = if i == 3 || remaining_n == 0 {
            remaining_n
        } else {
            let q = (p / remaining_p).clamp(0.0, 1.0);
            Binomial::new(remaining_n, q).expect("valid binomial").sample(rng)
        };
        out[i] = k as f64 / shots as f64;
        remaining_n -= k;
        remaining_p -= p;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::seeded_random_state_circuit;
    use crate::seed::derive_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fresh_state_is_bell_zero() {
        let layout = RegisterLayout::new(3, 2).unwrap();
        let s = prepare_initial(&layout, &Circuit::new(2)).unwrap();
        let p = bell_probs(&s, layout.probe_qubit(), layout.ancilla()).unwrap();
        assert_eq!(p.map(|x| (x * 1e12).round() / 1e12), [1.0, 0.0, 0.0, 0.0]);
        // |B0> on (site 2, ancilla), |00> on sites 1 and 3: amplitudes at 0000 and 0101.
        if let QuantumState::Pure(v) = &s {
            let s2 = std::f64::consts::FRAC_1_SQRT_2;
            assert_abs_diff_eq!(v.amplitudes()[0b0000].re, s2, epsilon = 1e-15);
            assert_abs_diff_eq!(v.amplitudes()[0b0101].re, s2, epsilon = 1e-15);
            assert_abs_diff_eq!(v.norm_sqr(), 1.0, epsilon = 1e-15);
        } else {
            panic!("expected pure state");
        }
    }

    #[test]
    fn embedding_matches_gate_preparation() {
        for probe in 1..=4 {
            let layout = RegisterLayout::new(4, probe).unwrap();
            let psi = seeded_random_state_circuit(3, 3, 11, probe as u64);
            let rest = match apply_circuit(QuantumState::Pure(StateVector::zero(3)), &psi, None).unwrap() {
                QuantumState::Pure(s) => s,
                _ => unreachable!(),
            };
            let direct = layout.embed_bell_pure(&rest);
            let gated = match prepare_initial(&layout, &psi).unwrap() {
                QuantumState::Pure(s) => s,
                _ => unreachable!(),
            };
            for (a, b) in direct.amplitudes().iter().zip(gated.amplitudes()) {
                assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
            }
            let pair = DensityMatrix::from_pure(&StateVector::from_amplitudes(BellBasis::state(0).to_vec()).unwrap());
            let mixed = layout.embed_mixed(&pair, &DensityMatrix::from_pure(&rest));
            let expected = DensityMatrix::from_pure(&gated);
            for (a, b) in mixed.data().iter().zip(expected.data()) {
                assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn bell_states_measure_to_their_index() {
        for i in 0..4 {
            let s = QuantumState::Pure(StateVector::from_amplitudes(BellBasis::state(i).to_vec()).unwrap());
            let p = bell_probs(&s, 0, 1).unwrap();
            for (j, pj) in p.iter().enumerate() {
                assert_abs_diff_eq!(*pj, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        let mixed = QuantumState::Mixed(DensityMatrix::maximally_mixed(2));
        for p in bell_probs(&mixed, 0, 1).unwrap() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn pauli_on_probe_moves_bell_index() {
        // X on the probe qubit maps B0 to B1.
        let layout = RegisterLayout::new(7, 4).unwrap();
        let mut s = prepare_initial(&layout, &seeded_random_state_circuit(6, 8, 3, 0)).unwrap();
        s.apply_gate(&Gate::x(layout.probe_qubit()));
        let p = bell_probs(&s, layout.probe_qubit(), layout.ancilla()).unwrap();
        assert_abs_diff_eq!(p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projector_expectation_matches_basis_change() {
        let layout = RegisterLayout::new(3, 1).unwrap();
        let mut s = prepare_initial(&layout, &seeded_random_state_circuit(2, 2, 4, 0)).unwrap();
        s.apply_gate(&Gate::rx(0, 0.7));
        s.apply_gate(&Gate::rzz(0, 1, 0.4));
        let direct = bell_probs(&s, 0, 3).unwrap();
        let rho = s.into_mixed();
        for (i, d) in direct.iter().enumerate() {
            assert_abs_diff_eq!(bell_projector(4, 0, 3, i).expectation(&rho), *d, epsilon = 1e-13);
        }
    }

    #[test]
    fn shots_of_a_certain_outcome() {
        let mut rng = derive_rng(1, &[]);
        assert_eq!(sample_shots(&[1.0, 0.0, 0.0, 0.0], 17, &mut rng), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(sample_shots(&[0.1, 0.2, 0.3, 0.4], 0, &mut rng), [0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn uniform_shots_within_binomial_bound() {
        // sd of a component at 1000 shots is sqrt(0.1875/1000) = 0.0137; 0.05 is
        // 3.65 sd, so per-component violations have probability ~2.6e-4.
        let mut ok = 0;
        for seed in 0..200u64 {
            let mut rng = derive_rng(seed, &[]);
            let p = sample_shots(&[0.25; 4], 1000, &mut rng);
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            if p.iter().all(|x| (x - 0.25).abs() <= 0.05) {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.95 * 200.0, "{ok} / 200 within bound");
    }

    #[test]
    fn shot_error_shrinks_as_inverse_sqrt() {
        let probs = [0.4, 0.3, 0.2, 0.1];
        let rms = |shots: u64| {
            let mut acc = 0.0;
            for seed in 0..400u64 {
                let mut rng = derive_rng(seed, &[shots]);
                let p = sample_shots(&probs, shots, &mut rng);
                acc += p.iter().zip(&probs).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            }
            (acc / 400.0).sqrt()
        };
        let ratio = rms(100) / rms(10_000);
        assert!((7.0..14.0).contains(&ratio), "ratio {ratio}");
    }
}
