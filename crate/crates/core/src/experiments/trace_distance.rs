//! Distance between the random-state ensemble average and the maximally
//! mixed state.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{apply_circuit, seeded_random_state_circuit, QuantumState, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::seed::{derive_seed, STREAM_TRACE};

/// Largest register for which ensemble densities are formed.
pub const MAX_TRACE_QUBITS: usize = 12;

/// `(1/2) sum of singular values of (a - b)`.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * (a - b).singular_values().iter().sum::<f64>()
}

/// `(1/M) sum_k |psi_k><psi_k|` over `m` random-circuit states on `width`
/// qubits. Members are drawn from the stream keyed by `seed`.
pub fn ensemble_density(width: usize, m: usize, depth: usize, seed: u64) -> Result<CMatrix> {
    if width == 0 || width > MAX_TRACE_QUBITS {
        return Err(Error::SizeGuard { max: MAX_TRACE_QUBITS, requested: width });
    }
    let dim = 1usize << width;
    let states: Vec<Vec<C64>> = (0..m as u64)
        .into_par_iter()
        .map(|k| {
            let c = seeded_random_state_circuit(width, depth, seed, k);
            match apply_circuit(QuantumState::Pure(StateVector::zero(width)), &c, None) {
                Ok(QuantumState::Pure(s)) => s.amplitudes().to_vec(),
                _ => unreachable!("noiseless pure evolution"),
            }
        })
        .collect();
    let mut rho = CMatrix::from_element(dim, dim, ZERO);
    for a in &states {
        for r in 0..dim {
            for c in 0..dim {
                rho[(r, c)] += a[r] * a[c].conj();
            }
        }
    }
    Ok(rho / C64::new(m as f64, 0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceDistanceRow {
    pub n_sites: usize,
    pub ensemble_size: usize,
    pub mean: f64,
    pub std_error: f64,
    pub replicates: Vec<f64>,
}

/// For each chain length `N` and ensemble size `M`, the distance between
/// the `M`-state average on `N - 1` qubits and `I / 2^(N-1)`, over
/// `replicates` independent ensembles.
pub fn run_trace_distance(
    n_list: &[usize],
    m_list: &[usize],
    depth: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<TraceDistanceRow>> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        if n < 2 {
            return Err(Error::TooFewSites { min: 2, actual: n });
        }
        let width = n - 1;
        let dim = 1usize << width;
        let target = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        for &m in m_list {
            let replicates: Vec<f64> = (0..replicates as u64)
                .map(|r| {
                    let s = derive_seed(seed, &[STREAM_TRACE, n as u64, m as u64, r]);
                    Ok(trace_distance(&ensemble_density(width, m, depth, s)?, &target))
                })
                .collect::<Result<_>>()?;
            let k = replicates.len() as f64;
            let mean = replicates.iter().sum::<f64>() / k;
            let var =
                if k > 1.0 { replicates.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
            rows.push(TraceDistanceRow { n_sites: n, ensemble_size: m, mean, std_error: (var / k).sqrt(), replicates });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln D` against `ln M` for one chain length.
pub fn loglog_slope(rows: &[TraceDistanceRow], n_sites: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.n_sites == n_sites && r.mean > 0.0)
        .map(|r| ((r.ensemble_size as f64).ln(), r.mean.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_pure_qubit_is_half_from_mixed() {
        let rows = run_trace_distance(&[2], &[1], 8, 3, 5).unwrap();
        assert_abs_diff_eq!(rows[0].mean, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[0].std_error, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ensemble_density_is_a_state() {
        let rho = ensemble_density(3, 20, 4, 1).unwrap();
        assert_abs_diff_eq!(crate::linalg::trace(&rho).re, 1.0, epsilon = 1e-12);
        assert!(crate::linalg::hermiticity_defect(&rho) < 1e-14);
        assert!(crate::linalg::hermitian_eigenvalues(&rho).unwrap().iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn distance_shrinks_with_ensemble_size() {
        let rows = run_trace_distance(&[3], &[4, 64], 8, 4, 2).unwrap();
        assert!(rows[1].mean < rows[0].mean);
        assert!(loglog_slope(&rows, 3).unwrap() < 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let a = run_trace_distance(&[3], &[8], 4, 2, 9).unwrap();
        assert_eq!(a, run_trace_distance(&[3], &[8], 4, 2, 9).unwrap());
        assert_ne!(a, run_trace_distance(&[3], &[8], 4, 2, 10).unwrap());
    }
}
