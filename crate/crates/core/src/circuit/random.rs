use std::f64::consts::TAU;

use rand::Rng;

use super::{Circuit, Gate};
use crate::seed::{derive_rng, STREAM_ENSEMBLE};

/// Random-state preparation circuit of `depth` blocks on `width` qubits.
///
/// Each block rotates every qubit about a uniformly chosen axis in
/// {X, Y, Z} by a uniform angle in `[0, 2pi)`, then applies a brickwork CZ
/// layer: even blocks pair `(0,1), (2,3), ...`, odd blocks `(1,2), (3,4), ...`.
pub fn random_state_circuit<R: Rng + ?Sized>(width: usize, depth: usize, rng: &mut R) -> Circuit {
    let mut c = Circuit::new(width);
    for block in 0..depth {
        for q in 0..width {
            let angle = rng.random_range(0.0..TAU);
            let g = match rng.random_range(0..3u8) {
                0 => Gate::rx(q, angle),
                1 => Gate::ry(q, angle),
                _ => Gate::rz(q, angle),
            };
            c.push_unchecked(g);
        }
        let mut a = block % 2;
        while a + 1 < width {
            c.push_unchecked(Gate::cz(a, a + 1));
            a += 2;
        }
    }
    c
}

/// Circuit for ensemble member `member` under master seed `seed`.
pub fn seeded_random_state_circuit(width: usize, depth: usize, seed: u64, member: u64) -> Circuit {
    let mut rng = derive_rng(seed, &[STREAM_ENSEMBLE, member]);
    random_state_circuit(width, depth, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;

    fn count(c: &Circuit, pred: impl Fn(GateKind) -> bool) -> usize {
        c.gates().iter().filter(|g| pred(g.kind)).count()
    }

    #[test]
    fn block_structure() {
        let c = seeded_random_state_circuit(2, 1, 1, 0);
        assert_eq!(count(&c, |k| k.is_rotation()), 2);
        assert_eq!(count(&c, |k| k == GateKind::Cz), 1);

        let c = seeded_random_state_circuit(6, 8, 1, 0);
        assert_eq!(count(&c, |k| k.is_rotation()), 48);
        // 3 pairs on even blocks, 2 on odd blocks.
        assert_eq!(count(&c, |k| k == GateKind::Cz), 4 * 3 + 4 * 2);
        let odd_block_cz: Vec<_> = c.gates()[6 + 3..6 + 3 + 6 + 2]
            .iter()
            .filter(|g| g.kind == GateKind::Cz)
            .map(|g| g.qubits.clone())
            .collect();
        assert_eq!(odd_block_cz, vec![vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(seeded_random_state_circuit(5, 4, 99, 3), seeded_random_state_circuit(5, 4, 99, 3));
        assert_ne!(seeded_random_state_circuit(5, 4, 99, 3), seeded_random_state_circuit(5, 4, 99, 4));
    }

    #[test]
    fn angles_in_range() {
        let c = seeded_random_state_circuit(4, 20, 5, 0);
        for g in c.gates().iter().filter(|g| g.kind.is_rotation()) {
            let a = g.angle.unwrap();
            assert!((0.0..TAU).contains(&a));
        }
    }
}
