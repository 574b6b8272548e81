//! Pauli strings, operator expansion in the Pauli basis, operator size and
//! per-site operator density.
//!
//! A Pauli string on `N` sites is indexed by the base-4 integer
//! `k = k_1 k_2 ... k_N` with the letter of site 1 in the most significant
//! digit (`0 = I, 1 = X, 2 = Y, 3 = Z`). Dense matrices use the matching
//! Kronecker convention: site 1 is the most significant bit of a basis index.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{log2_dim, CMatrix, C64, I, ONE, ZERO};

/// Expansions on more sites than this are stored sparsely.
pub const DENSE_MAX_SITES: usize = 8;

const NORMALIZATION_TOL: f64 = 1e-8;
const IMAGINARY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(i: u8) -> Option<Pauli> {
        Self::ALL.get(i as usize).copied()
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        match self {
            Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
            Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
            Pauli::Y => [[ZERO, -I], [I, ZERO]],
            Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    pub fn dense(self) -> CMatrix {
        let m = self.matrix();
        CMatrix::from_fn(2, 2, |r, c| m[r][c])
    }

    pub fn symbol(self) -> char {
        ['I', 'X', 'Y', 'Z'][self as usize]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(Error::InvalidPauli(other.to_string())),
        }
    }
}

/// A tensor product of single-site Pauli letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters }
    }

    pub fn identity(n_sites: usize) -> Self {
        Self { letters: vec![Pauli::I; n_sites] }
    }

    /// `pauli` on `site` (1-based), identity elsewhere.
    pub fn single(n_sites: usize, site: usize, pauli: Pauli) -> Result<Self> {
        check_site(site, n_sites)?;
        let mut letters = vec![Pauli::I; n_sites];
        letters[site - 1] = pauli;
        Ok(Self { letters })
    }

    pub fn from_index(k: u64, n_sites: usize) -> Self {
        let letters = (0..n_sites)
            .map(|q| {
                let digit = (k >> (2 * (n_sites - 1 - q))) & 3;
                Pauli::from_index(digit as u8).unwrap()
            })
            .collect();
        Self { letters }
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Letter at `site` (1-based).
    pub fn letter(&self, site: usize) -> Pauli {
        self.letters[site - 1]
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|p| !p.is_identity()).count()
    }

    pub fn index(&self) -> u64 {
        self.letters.iter().fold(0u64, |k, p| (k << 2) | p.index() as u64)
    }

    /// Explicit `2^N x 2^N` matrix. Intended for small `N` and tests.
    pub fn to_matrix(&self) -> CMatrix {
        self.letters.iter().fold(CMatrix::from_element(1, 1, ONE), |acc, p| acc.kronecker(&p.dense()))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.letters {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars().map(|c| c.to_string().parse()).collect::<Result<Vec<_>>>().map(Self::new)
    }
}

pub fn weight(p: &PauliString) -> usize {
    p.weight()
}

/// Number of non-identity base-4 digits of an index.
pub fn index_weight(k: u64, n_sites: usize) -> usize {
    (0..n_sites).filter(|q| (k >> (2 * q)) & 3 != 0).count()
}

/// Letter of `site` (1-based) in index `k`.
pub fn index_letter(k: u64, n_sites: usize, site: usize) -> usize {
    ((k >> (2 * (n_sites - site))) & 3) as usize
}

pub(crate) fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site == 0 || site > n_sites {
        Err(Error::SiteOutOfRange { site, n_sites })
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Coefficients {
    Dense(Vec<f64>),
    Sparse(BTreeMap<u64, f64>),
}

/// Real Pauli-basis coefficients `C_k` of a Hermitian operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorExpansion {
    n_sites: usize,
    coeffs: Coefficients,
}

impl OperatorExpansion {
    /// Builds from a full coefficient vector of length `4^N`.
    pub fn from_dense(n_sites: usize, coeffs: Vec<f64>) -> Result<Self> {
        let expected = 1usize << (2 * n_sites);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: coeffs.len() });
        }
        if n_sites <= DENSE_MAX_SITES {
            return Ok(Self { n_sites, coeffs: Coefficients::Dense(coeffs) });
        }
        let map = coeffs.into_iter().enumerate().filter(|(_, c)| *c != 0.0).map(|(k, c)| (k as u64, c)).collect();
        Ok(Self { n_sites, coeffs: Coefficients::Sparse(map) })
    }

    /// Builds from `(k, C_k)` pairs; repeated indices accumulate.
    pub fn from_pairs(n_sites: usize, pairs: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let limit = 1u64 << (2 * n_sites);
        if n_sites <= DENSE_MAX_SITES {
            let mut dense = vec![0.0; limit as usize];
            for (k, c) in pairs {
                if k >= limit {
                    return Err(Error::DimensionMismatch { expected: limit as usize, actual: k as usize });
                }
                dense[k as usize] += c;
            }
            return Ok(Self { n_sites, coeffs: Coefficients::Dense(dense) });
        }
        let mut map = BTreeMap::new();
        for (k, c) in pairs {
            if k >= limit {
                return Err(Error::DimensionMismatch { expected: limit as usize, actual: k as usize });
            }
            *map.entry(k).or_insert(0.0) += c;
        }
        Ok(Self { n_sites, coeffs: Coefficients::Sparse(map) })
    }

    /// The single basis element `P`.
    pub fn basis(p: &PauliString) -> Self {
        Self::from_pairs(p.n_sites(), [(p.index(), 1.0)]).expect("index in range")
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.coeffs, Coefficients::Sparse(_))
    }

    pub fn coefficient(&self, k: u64) -> f64 {
        match &self.coeffs {
            Coefficients::Dense(v) => v.get(k as usize).copied().unwrap_or(0.0),
            Coefficients::Sparse(m) => m.get(&k).copied().unwrap_or(0.0),
        }
    }

    pub fn coefficient_of(&self, p: &PauliString) -> f64 {
        self.coefficient(p.index())
    }

    /// All `4^N` coefficients in index order.
    pub fn dense(&self) -> Cow<'_, [f64]> {
        match &self.coeffs {
            Coefficients::Dense(v) => Cow::Borrowed(v),
            Coefficients::Sparse(m) => {
                let mut v = vec![0.0; 1usize << (2 * self.n_sites)];
                for (&k, &c) in m {
                    v[k as usize] = c;
                }
                Cow::Owned(v)
            }
        }
    }

    /// Non-zero `(k, C_k)` pairs in increasing `k`.
    pub fn pairs(&self) -> Vec<(u64, f64)> {
        match &self.coeffs {
            Coefficients::Dense(v) => {
                v.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k as u64, *c)).collect()
            }
            Coefficients::Sparse(m) => m.iter().filter(|(_, c)| **c != 0.0).map(|(k, c)| (*k, *c)).collect(),
        }
    }

    /// `sum_k C_k^2`.
    pub fn norm_sq(&self) -> f64 {
        match &self.coeffs {
            Coefficients::Dense(v) => v.iter().map(|c| c * c).sum(),
            Coefficients::Sparse(m) => m.values().map(|c| c * c).sum(),
        }
    }

    /// `sum_k C_k P_k` as a dense matrix.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.n_sites;
        let dim = 1usize << n;
        let spread = spread_table(dim);
        let mut work = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let k = 2 * spread[r] + spread[c];
                work[r * dim + c] = C64::new(self.coefficient(k), 0.0);
            }
        }
        for b in 0..n {
            let bit = 1usize << b;
            for r in (0..dim).filter(|r| r & bit == 0) {
                for c in (0..dim).filter(|c| c & bit == 0) {
                    let (i00, i01, i10, i11) =
                        (r * dim + c, r * dim + (c | bit), (r | bit) * dim + c, (r | bit) * dim + (c | bit));
                    let (ci, cx, cy, cz) = (work[i00], work[i01], work[i10], work[i11]);
                    work[i00] = ci + cz;
                    work[i01] = cx - I * cy;
                    work[i10] = cx + I * cy;
                    work[i11] = ci - cz;
                }
            }
        }
        CMatrix::from_fn(dim, dim, |r, c| work[r * dim + c])
    }
}

impl Serialize for OperatorExpansion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = self.pairs();
        let mut seq = serializer.serialize_seq(Some(pairs.len()))?;
        for pair in &pairs {
            seq.serialize_element(pair)?;
        }
        seq.end()
    }
}

/// `spread[x]` places bit `b` of `x` at bit `2b`.
fn spread_table(dim: usize) -> Vec<u64> {
    (0..dim as u64)
        .map(|x| {
            let mut out = 0u64;
            let mut b = 0;
            let mut y = x;
            while y != 0 {
                out |= (y & 1) << (2 * b);
                y >>= 1;
                b += 1;
            }
            out
        })
        .collect()
}

/// Pauli coefficients `C_k = 2^-N tr(O P_k)` of a normalized Hermitian matrix.
///
/// The traces are computed by contracting one site at a time, which costs
/// `O(N 4^N)` and never materializes a Pauli string matrix.
pub fn expand_operator(o: &CMatrix, n_sites: usize) -> Result<OperatorExpansion> {
    if o.nrows() != o.ncols() {
        return Err(Error::DimensionMismatch { expected: o.nrows(), actual: o.ncols() });
    }
    let n = log2_dim(o.nrows())?;
    if n != n_sites {
        return Err(Error::DimensionMismatch { expected: 1 << n_sites, actual: o.nrows() });
    }
    let dim = o.nrows();
    let norm = o.iter().map(|z| z.norm_sqr()).sum::<f64>() / dim as f64;
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm, tol: NORMALIZATION_TOL });
    }

    let mut work: Vec<C64> = (0..dim * dim).map(|i| o[(i / dim, i % dim)]).collect();
    for b in 0..n {
        let bit = 1usize << b;
        for r in (0..dim).filter(|r| r & bit == 0) {
            for c in (0..dim).filter(|c| c & bit == 0) {
                let (i00, i01, i10, i11) =
                    (r * dim + c, r * dim + (c | bit), (r | bit) * dim + c, (r | bit) * dim + (c | bit));
                let (a, b01, b10, d) = (work[i00], work[i01], work[i10], work[i11]);
                work[i00] = (a + d) * 0.5;
                work[i01] = (b01 + b10) * 0.5;
                work[i10] = I * (b01 - b10) * 0.5;
                work[i11] = (a - d) * 0.5;
            }
        }
    }

    let spread = spread_table(dim);
    let mut coeffs = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let k = 2 * spread[r] + spread[c];
            let z = work[r * dim + c];
            if z.im.abs() > IMAGINARY_TOL {
                return Err(Error::NotHermitian { index: k, residue: z.im });
            }
            coeffs[k as usize] = z.re;
        }
    }
    OperatorExpansion::from_dense(n, coeffs)
}

/// Probability of each Pauli letter at one site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SiteDistribution {
    pub site: usize,
    pub probs: [f64; 4],
}

impl SiteDistribution {
    /// `L_n = 1 - P_0`.
    pub fn density(&self) -> f64 {
        1.0 - self.probs[0]
    }
}

/// Averaged operator size `L = sum_k C_k^2 l(P_k)`.
pub fn operator_size(e: &OperatorExpansion) -> f64 {
    let n = e.n_sites();
    e.pairs().iter().map(|&(k, c)| c * c * index_weight(k, n) as f64).sum()
}

/// Marginal letter distribution at `site` and the local density `L_n`.
pub fn site_density(e: &OperatorExpansion, site: usize) -> Result<(SiteDistribution, f64)> {
    let n = e.n_sites();
    check_site(site, n)?;
    let mut probs = [0.0; 4];
    for (k, c) in e.pairs() {
        probs[index_letter(k, n, site)] += c * c;
    }
    let dist = SiteDistribution { site, probs };
    let density = dist.density();
    Ok((dist, density))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights() {
        assert_eq!("III".parse::<PauliString>().unwrap().weight(), 0);
        assert_eq!("XIZ".parse::<PauliString>().unwrap().weight(), 2);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            assert_eq!(PauliString::new(vec![p]).weight(), 1);
        }
    }

    #[test]
    fn index_is_base4_with_site1_most_significant() {
        let p: PauliString = "XIZ".parse().unwrap();
        assert_eq!(p.index(), 16 + 3);
        assert_eq!(PauliString::from_index(19, 3), p);
        assert_eq!(index_letter(19, 3, 1), 1);
        assert_eq!(index_letter(19, 3, 3), 3);
        for k in 0..64 {
            assert_eq!(PauliString::from_index(k, 3).index(), k);
        }
    }

    #[test]
    fn basis_is_orthonormal_up_to_three_sites() {
        for n in 1..=3usize {
            let dim = 1usize << n;
            let mats: Vec<CMatrix> =
                (0..4u64.pow(n as u32)).map(|k| PauliString::from_index(k, n).to_matrix()).collect();
            for (a, pa) in mats.iter().enumerate() {
                for (b, pb) in mats.iter().enumerate() {
                    let ip = (pa * pb).trace() / dim as f64;
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ip.re, expected, epsilon = 1e-14);
                    assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn expand_basis_element() {
        let x1 = PauliString::single(2, 1, Pauli::X).unwrap();
        let e = expand_operator(&x1.to_matrix(), 2).unwrap();
        for k in 0..16 {
            let expected = if k == 4 { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(e.coefficient(k), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn expand_two_term_mixture() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xx: PauliString = "XX".parse().unwrap();
        let zz: PauliString = "ZZ".parse().unwrap();
        let o = (xx.to_matrix() + zz.to_matrix()) * C64::new(s, 0.0);
        let e = expand_operator(&o, 2).unwrap();
        assert_abs_diff_eq!(e.coefficient_of(&xx), s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.coefficient_of(&zz), s, epsilon = 1e-15);
        assert_abs_diff_eq!(e.norm_sq(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn expand_rejects_bad_input() {
        let m = CMatrix::identity(3, 3);
        assert!(matches!(expand_operator(&m, 2), Err(Error::NotPowerOfTwo(3))));
        let m = CMatrix::identity(4, 4) * C64::new(2.0, 0.0);
        assert!(matches!(expand_operator(&m, 2), Err(Error::NotNormalized { .. })));
        // i * (X Y) is Hermitian-normalized in magnitude but has an imaginary coefficient.
        let xy: PauliString = "XY".parse().unwrap();
        let m = xy.to_matrix() * I;
        assert!(matches!(expand_operator(&m, 2), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn size_and_density_of_single_letter() {
        let x4 = OperatorExpansion::basis(&PauliString::single(7, 4, Pauli::X).unwrap());
        assert_abs_diff_eq!(operator_size(&x4), 1.0);
        let (d4, l4) = site_density(&x4, 4).unwrap();
        assert_eq!(d4.probs, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(l4, 1.0);
        let (d1, l1) = site_density(&x4, 1).unwrap();
        assert_eq!(d1.probs, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(l1, 0.0);
        assert!(matches!(site_density(&x4, 8), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(site_density(&x4, 0), Err(Error::SiteOutOfRange { .. })));

        let id = OperatorExpansion::basis(&PauliString::identity(3));
        assert_eq!(operator_size(&id), 0.0);
    }

    #[test]
    fn sparse_storage_above_dense_limit() {
        let p = PauliString::single(9, 5, Pauli::Z).unwrap();
        let e = OperatorExpansion::basis(&p);
        assert!(e.is_sparse());
        assert_eq!(e.coefficient_of(&p), 1.0);
        assert_eq!(operator_size(&e), 1.0);
        assert_eq!(site_density(&e, 5).unwrap().0.probs, [0.0, 0.0, 0.0, 1.0]);
        let small = OperatorExpansion::basis(&PauliString::single(3, 1, Pauli::Z).unwrap());
        assert!(!small.is_sparse());
    }

    #[test]
    fn serializes_as_index_coefficient_pairs() {
        let e = OperatorExpansion::from_pairs(2, [(4, 0.6), (15, 0.8)]).unwrap();
        assert_eq!(serde_json::to_string(&e).unwrap(), "[[4,0.6],[15,0.8]]");
    }
}
