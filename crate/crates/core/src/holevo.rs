//! Channel-state duality, Bell-basis reduced matrices, entropies and the
//! Holevo information of pairs of operators. Entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, trace, CMatrix, C64, ZERO};
use crate::mitigation::MitigationTarget;
use crate::pauli::{check_site, index_letter, OperatorExpansion, SiteDistribution};

/// Exact dual states are limited to this many qubits (`2N`).
pub const DUAL_STATE_MAX_QUBITS: usize = 16;

/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

const PROB_TOL: f64 = 1e-8;

/// The Bell basis `B^i = (sigma^i (x) I) |B^0>`, `|B^0> = (|00> + |11>)/sqrt 2`,
/// with amplitudes over `|n n'>` in the order 00, 01, 10, 11.
pub struct BellBasis;

impl BellBasis {
    pub fn state(i: usize) -> [C64; 4] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let (z, p, m) = (ZERO, C64::new(s, 0.0), C64::new(-s, 0.0));
        match i {
            0 => [p, z, z, p],
            1 => [z, p, p, z],
            2 => [z, C64::new(0.0, -s), C64::new(0.0, s), z],
            3 => [p, z, z, m],
            _ => panic!("Bell index {i} out of range"),
        }
    }

    /// `<B^i|B^j>`.
    pub fn overlap(i: usize, j: usize) -> C64 {
        let (a, b) = (Self::state(i), Self::state(j));
        a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum()
    }
}

/// Pure dual state `|O> = sum_k C_k (x)_n |B^{k_n}>` on `2N` qubits, stored
/// in the per-site Bell product basis (index `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    n_sites: usize,
    amps: Vec<C64>,
}

impl DualState {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitudes in the computational basis of qubits ordered
    /// `1, 1', 2, 2', ..., N, N'` (first qubit most significant).
    pub fn to_computational(&self) -> Vec<C64> {
        let n = self.n_sites;
        let bell: Vec<[C64; 4]> = (0..4).map(BellBasis::state).collect();
        let mut out = vec![ZERO; 1 << (2 * n)];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for (k, &c) in self.amps.iter().enumerate() {
                if c == ZERO {
                    continue;
                }
                let mut term = c;
                for site in 1..=n {
                    let pair = (idx >> (2 * (n - site))) & 3;
                    term *= bell[index_letter(k as u64, n, site)][pair];
                    if term == ZERO {
                        break;
                    }
                }
                acc += term;
            }
            *slot = acc;
        }
        out
    }
}

pub fn dual_state(e: &OperatorExpansion) -> Result<DualState> {
    let n = e.n_sites();
    if 2 * n > DUAL_STATE_MAX_QUBITS {
        return Err(Error::SizeGuard { max: DUAL_STATE_MAX_QUBITS, requested: 2 * n });
    }
    let amps = e.dense().iter().map(|&c| C64::new(c, 0.0)).collect();
    Ok(DualState { n_sites: n, amps })
}

/// Reduced state of pair `(n, n')` of a dual state, in the Bell basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteReducedMatrix {
    pub site: usize,
    pub rho: CMatrix,
}

impl SiteReducedMatrix {
    pub fn diagonal(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| self.rho[(i, i)].re)
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..4).all(|r| (0..4).all(|c| r == c || self.rho[(r, c)].norm() <= tol))
    }

    pub fn distribution(&self) -> SiteDistribution {
        SiteDistribution { site: self.site, probs: self.diagonal() }
    }
}

/// `rho_ab = sum_rest C_(a, rest) C_(b, rest)`, computed from coefficients
/// without forming the dual state.
pub fn reduced_site_matrix(e: &OperatorExpansion, site: usize) -> Result<SiteReducedMatrix> {
    let n = e.n_sites();
    check_site(site, n)?;
    let coeffs = e.dense();
    let stride = 1usize << (2 * (n - site));
    let outer = 1usize << (2 * (site - 1));
    let mut rho = [[0.0f64; 4]; 4];
    for hi in 0..outer {
        for lo in 0..stride {
            let base = hi * 4 * stride + lo;
            let v = [0, 1, 2, 3].map(|a| coeffs[base + a * stride]);
            if v.iter().all(|x| *x == 0.0) {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    rho[a][b] += v[a] * v[b];
                }
            }
        }
    }
    Ok(SiteReducedMatrix { site, rho: CMatrix::from_fn(4, 4, |r, c| C64::new(rho[r][c], 0.0)) })
}

/// `S(rho) = -sum lambda log2 lambda`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &CMatrix) -> Result<f64> {
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidDensity(format!("trace {tr}")));
    }
    if hermiticity_defect(rho) > 1e-10 {
        return Err(Error::InvalidDensity("not Hermitian".into()));
    }
    let mut s = 0.0;
    for lambda in hermitian_eigenvalues(rho)? {
        if lambda < -EIGEN_CLAMP {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {lambda:e}")));
        }
        if lambda > 0.0 {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Shannon entropy in bits.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|x| **x > 0.0).map(|x| -x * x.log2()).sum()
}

/// Holevo quantity `S(sum p_i rho_i) - sum p_i S(rho_i)` of a general ensemble.
pub fn holevo_information(states: &[CMatrix], weights: &[f64]) -> Result<f64> {
    if states.len() != weights.len() || states.is_empty() {
        return Err(Error::LengthMismatch { expected: states.len(), actual: weights.len() });
    }
    let dim = states[0].nrows();
    let mut avg = CMatrix::from_element(dim, dim, ZERO);
    let mut mean_entropy = 0.0;
    for (rho, &w) in states.iter().zip(weights) {
        avg += rho * C64::new(w, 0.0);
        mean_entropy += w * von_neumann_entropy(rho)?;
    }
    Ok(von_neumann_entropy(&avg)? - mean_entropy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Exact,
    BellDiagonal,
    ProtocolSampled,
    Mitigated,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::BellDiagonal => "bell-diagonal",
            Variant::ProtocolSampled => "protocol-sampled",
            Variant::Mitigated => "mitigated",
        }
    }
}

/// Holevo information at one site and time, with the Bell probabilities of
/// both operators. For mitigated records `chi` is clipped to `[0, 1]` and
/// `raw_chi` holds the unclipped extrapolant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolevoRecord {
    pub site: usize,
    pub time: f64,
    pub probs_1: [f64; 4],
    pub probs_2: [f64; 4],
    pub chi: f64,
    pub variant: Variant,
    pub raw_chi: Option<f64>,
    pub target: Option<MitigationTarget>,
}

impl HolevoRecord {
    pub fn new(site: usize, time: f64, probs_1: [f64; 4], probs_2: [f64; 4], chi: f64, variant: Variant) -> Self {
        Self { site, time, probs_1, probs_2, chi, variant, raw_chi: None, target: None }
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn was_clipped(&self) -> bool {
        self.raw_chi.is_some_and(|r| r != self.chi)
    }
}

/// Holevo information of the equal-weight pair of reduced states, using the
/// full (possibly non-diagonal) 4x4 matrices. `time` is left at zero.
pub fn holevo_exact(e1: &OperatorExpansion, e2: &OperatorExpansion, site: usize) -> Result<HolevoRecord> {
    let r1 = reduced_site_matrix(e1, site)?;
    let r2 = reduced_site_matrix(e2, site)?;
    let avg = (&r1.rho + &r2.rho) * C64::new(0.5, 0.0);
    let chi = von_neumann_entropy(&avg)? - 0.5 * (von_neumann_entropy(&r1.rho)? + von_neumann_entropy(&r2.rho)?);
    Ok(HolevoRecord::new(site, 0.0, r1.diagonal(), r2.diagonal(), chi.clamp(0.0, 1.0), Variant::Exact))
}

/// Holevo information from the Bell-basis diagonals only.
pub fn holevo_bell_diagonal(e1: &OperatorExpansion, e2: &OperatorExpansion, site: usize) -> Result<HolevoRecord> {
    let p1 = reduced_site_matrix(e1, site)?.diagonal();
    let p2 = reduced_site_matrix(e2, site)?.diagonal();
    let chi = holevo_from_probs(&p1, &p2)?;
    Ok(HolevoRecord::new(site, 0.0, p1, p2, chi, Variant::BellDiagonal))
}

/// Checks a probability 4-vector and renormalizes it within tolerance.
pub fn normalize_probs(p: &[f64; 4]) -> Result<[f64; 4]> {
    if let Some(bad) = p.iter().find(|x| !x.is_finite() || **x < -PROB_TOL) {
        return Err(Error::InvalidProbabilities(format!("entry {bad} in {p:?}")));
    }
    let clipped = p.map(|x| x.max(0.0));
    let total: f64 = clipped.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidProbabilities(format!("sum {total} in {p:?}")));
    }
    Ok(clipped.map(|x| x / total))
}

/// `H((P1 + P2)/2) - (H(P1) + H(P2))/2` in bits.
pub fn holevo_from_probs(p1: &[f64; 4], p2: &[f64; 4]) -> Result<f64> {
    let (p1, p2) = (normalize_probs(p1)?, normalize_probs(p2)?);
    let mid: Vec<f64> = p1.iter().zip(&p2).map(|(a, b)| 0.5 * (a + b)).collect();
    let chi = shannon_entropy(&mid) - 0.5 * (shannon_entropy(&p1) + shannon_entropy(&p2));
    Ok(chi.clamp(0.0, 1.0))
}

/// Closed-form Holevo information against the identity background as a
/// function of local operator density `L`:
/// `chi(L) = (2 + log2[((1-L)/(2-L))^(1-L) / (2-L)]) / 2`, with `0^0 = 1`.
pub fn chi_of_density(density: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::OutOfRange { value: density, lo: 0.0, hi: 1.0 });
    }
    let p0 = 1.0 - density;
    let power_term = if p0 == 0.0 { 0.0 } else { p0 * (p0 / (2.0 - density)).log2() };
    Ok(0.5 * (2.0 + power_term - (2.0 - density).log2()))
}
