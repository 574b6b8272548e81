//! Self-check suite: module invariants at small sizes plus the chain from
//! Bell probabilities to the closed-form Holevo value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circuit::{
    apply_circuit, random_state_circuit, Circuit, DensityMatrix, NoiseModel, QuantumState, StateVector,
};
use crate::error::Result;
use crate::holevo::{
    chi_of_density, holevo_exact, holevo_from_probs, reduced_site_matrix, shannon_entropy, von_neumann_entropy,
    BellBasis,
};
use crate::ising::{build_hamiltonian, exact_propagator, heisenberg_evolve, trotter_circuit, TrotterPlan};
use crate::linalg::{max_abs_diff, operator_norm, unitarity_defect, CMatrix, C64};
use crate::mitigation::{mitigate, richardson_scheme};
use crate::pauli::{expand_operator, site_density, OperatorExpansion, Pauli, PauliString};
use crate::protocol::{
    evolved_expansion, measure_probs, measure_probs_reference, Evolution, Initialization, ProtocolConfig,
    ProtocolEngine,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("[{}] {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
        }
        let failed = self.failures().len();
        s.push_str(&format!("{} checks, {} failed\n", self.checks.len(), failed));
        s
    }
}

/// Replaceable pieces, so that the suite itself can be checked against
/// deliberately broken implementations.
#[derive(Clone, Copy)]
pub struct ValidateHooks {
    pub chi_of_density: fn(f64) -> Result<f64>,
}

impl Default for ValidateHooks {
    fn default() -> Self {
        Self { chi_of_density }
    }
}

/// Random normalized Hermitian expansion with dense Gaussian coefficients.
pub fn random_expansion(n: usize, rng: &mut impl Rng) -> OperatorExpansion {
    let coeffs: Vec<f64> = (0..1usize << (2 * n)).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    OperatorExpansion::from_dense(n, coeffs.into_iter().map(|c| c / norm).collect()).expect("normalized")
}

fn check(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name: name.into(), passed, detail },
        Err(e) => Check { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

pub fn run_validate() -> ValidationReport {
    run_validate_with(ValidateHooks::default())
}

pub fn run_validate_with(hooks: ValidateHooks) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut checks = Vec::new();

    checks.push(check("pauli expansion round trip", || {
        let mut worst: f64 = 0.0;
        for n in 1..=4 {
            let e = random_expansion(n, &mut rng);
            let back = expand_operator(&e.reconstruct(), n)?;
            worst =
                worst.max(e.dense().iter().zip(back.dense().iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        Ok((worst < 1e-12, format!("max coefficient error {worst:.2e}")))
    }));

    checks.push(check("bell basis orthonormal", || {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((BellBasis::overlap(i, j) - C64::new(target, 0.0)).norm());
            }
        }
        Ok((worst < 1e-14, format!("max overlap error {worst:.2e}")))
    }));

    checks.push(check("closed-form chain", || {
        let mut worst: f64 = 0.0;
        for k in 0..300 {
            let n = 2 + k % 3;
            let e = random_expansion(n, &mut rng);
            for site in 1..=n {
                let (dist, density) = site_density(&e, site)?;
                let lhs = holevo_from_probs(&[1.0, 0.0, 0.0, 0.0], &dist.probs)?;
                worst = worst.max((lhs - (hooks.chi_of_density)(density)?).abs());
            }
        }
        Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
    }));

    checks.push(check("saturation value", || {
        let chi = (hooks.chi_of_density)(0.75)?;
        Ok(((chi - 0.5487949406953986).abs() < 1e-12, format!("chi(0.75) = {chi:.4}")))
    }));

    checks.push(check("closed form increasing", || {
        let grid: Vec<f64> = (0..=1000).map(|i| (hooks.chi_of_density)(i as f64 / 1000.0)).collect::<Result<_>>()?;
        let ok = grid.windows(2).all(|w| w[1] > w[0]);
        Ok((ok, format!("{} grid points", grid.len())))
    }));

    checks.push(check("holevo symmetry and bounds", || {
        let mut ok = true;
        for n in 2..=4 {
            let (a, b) = (random_expansion(n, &mut rng), random_expansion(n, &mut rng));
            for site in 1..=n {
                let (ab, ba) = (holevo_exact(&a, &b, site)?.chi, holevo_exact(&b, &a, site)?.chi);
                ok &= ab == ba && (0.0..=1.0).contains(&ab);
            }
        }
        Ok((ok, "exact symmetry, chi in [0, 1]".into()))
    }));

    checks.push(check("dephasing inequality", || {
        let mut worst = f64::INFINITY;
        for n in 2..=4 {
            let e = random_expansion(n, &mut rng);
            for site in 1..=n {
                let r = reduced_site_matrix(&e, site)?;
                worst = worst.min(shannon_entropy(&r.diagonal()) - von_neumann_entropy(&r.rho)?);
            }
        }
        Ok((worst >= -1e-10, format!("min S(diag) - S(rho) = {worst:.2e}")))
    }));

    checks.push(check("richardson constraints", || {
        let ok = (1..=6).all(|o| richardson_scheme(o).map(|s| s.satisfies_constraints()).unwrap_or(false));
        Ok((ok, "orders 1..=6".into()))
    }));

    checks.push(check("richardson polynomial exactness", || {
        let s = richardson_scheme(3)?;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let values: Vec<f64> = s
                .scales()
                .iter()
                .map(|&x| c[0] + c[1] * x * 1e-3 + c[2] * (x * 1e-3).powi(2) + c[3] * (x * 1e-3).powi(3))
                .collect();
            worst = worst.max((mitigate(&values, &s)? - c[0]).abs());
        }
        Ok((worst < 1e-12, format!("max error {worst:.2e}")))
    }));

    checks.push(check("propagator unitarity and normalization", || {
        let h = build_hamiltonian(4, 1.0, 1.0, 0.3)?;
        let u = exact_propagator(&h, 1.3)?;
        let x = PauliString::single(4, 2, Pauli::X)?.to_matrix();
        let norm = heisenberg_evolve(&x, &h, 1.3)?.norm_sq();
        let ok = unitarity_defect(&u) < 1e-10 && (norm - 1.0).abs() < 1e-10;
        Ok((ok, format!("sum C^2 = {norm:.12}")))
    }));

    checks.push(check("parity conservation without longitudinal field", || {
        let h = build_hamiltonian(4, 1.0, 1.0, 0.0)?;
        let parity = PauliString::new(vec![Pauli::X; 4]);
        let c = heisenberg_evolve(&parity.to_matrix(), &h, 2.1)?.coefficient_of(&parity);
        Ok(((c - 1.0).abs() < 1e-10, format!("coefficient {c:.12}")))
    }));

    checks.push(check("trotter first order", || {
        let h = build_hamiltonian(4, 1.0, 1.0, 0.0)?;
        let exact = exact_propagator(&h, 1.0)?;
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&dt| Ok(operator_norm(&(trotter_circuit(&h, &TrotterPlan::new(1.0, dt)?, 1).to_unitary() - &exact))))
            .collect::<Result<_>>()?;
        let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
        Ok((ratios.iter().all(|r| (r - 2.0).abs() <= 0.3), format!("ratios {:.3}, {:.3}", ratios[0], ratios[1])))
    }));

    checks.push(check("backend equivalence at zero noise", || {
        let mut worst: f64 = 0.0;
        for width in 1..=4 {
            let c: Circuit = random_state_circuit(width, 4, &mut rng);
            let pure = apply_circuit(QuantumState::Pure(StateVector::zero(width)), &c, None)?.into_mixed();
            let mixed =
                apply_circuit(QuantumState::Mixed(DensityMatrix::zero_state(width)), &c, Some(&NoiseModel::new(0.0)?))?
                    .into_mixed();
            worst = worst.max(max_abs_diff(&pure.to_matrix(), &mixed.to_matrix()));
        }
        Ok((worst < 1e-10, format!("max difference {worst:.2e}")))
    }));

    checks.push(check("depolarizing fixed point", || {
        let c = random_state_circuit(3, 4, &mut rng);
        let out =
            apply_circuit(QuantumState::Mixed(DensityMatrix::maximally_mixed(3)), &c, Some(&NoiseModel::new(0.2)?))?
                .into_mixed();
        let d = max_abs_diff(&out.to_matrix(), &(CMatrix::identity(8, 8) / C64::new(8.0, 0.0)));
        Ok((d < 1e-10, format!("deviation {d:.2e}")))
    }));

    checks.push(check("protocol oracle equivalence", || {
        let mut worst: f64 = 0.0;
        for hz in [0.0, 0.3] {
            let mut cfg = ProtocolConfig::new(build_hamiltonian(4, 1.0, 1.0, hz)?, 2);
            cfg.initialization = Initialization::MaximallyMixed;
            cfg.evolution = Evolution::Exact;
            let times = [0.0, 0.5, 1.0, 2.0];
            let engine = ProtocolEngine::new(&cfg)?;
            let grid = engine.probs_grid(&[Pauli::X], &times, &[1, 2, 3, 4])?;
            for (ti, &t) in times.iter().enumerate() {
                let e = evolved_expansion(&cfg.hamiltonian, Pauli::X, 2, t)?;
                for site in 1..=4 {
                    let d = reduced_site_matrix(&e, site)?.diagonal();
                    for i in 0..4 {
                        worst = worst.max((grid[0][ti][site - 1][i] - d[i]).abs());
                    }
                }
            }
        }
        Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
    }));

    checks.push(check("protocol fast path matches gate-level simulation", || {
        let mut cfg = ProtocolConfig::new(build_hamiltonian(3, 1.0, 1.0, 0.3)?, 2);
        cfg.ensemble_size = 4;
        cfg.depth = 3;
        let mut worst: f64 = 0.0;
        for (noise, site) in [(None, 1), (Some(NoiseModel::new(0.01)?), 3)] {
            cfg.noise = noise;
            let a = measure_probs(&cfg, Pauli::Y, 0.3, site)?;
            let b = measure_probs_reference(&cfg, Pauli::Y, 0.3, site)?;
            worst = worst.max(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
        Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
    }));

    ValidationReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let report = run_validate();
        assert!(report.passed(), "{}", report.render());
        assert!(report.render().contains("chi(0.75) = 0.5488"));
    }

    #[test]
    fn sign_flip_in_closed_form_is_caught() {
        fn flipped(l: f64) -> Result<f64> {
            let p0 = 1.0 - l;
            let power = if p0 == 0.0 { 0.0 } else { p0 * (p0 / (2.0 - l)).log2() };
            Ok(0.5 * (2.0 - power - (2.0 - l).log2()))
        }
        let report = run_validate_with(ValidateHooks { chi_of_density: flipped });
        assert!(!report.passed());
        assert!(report.failures().iter().any(|c| c.name == "closed-form chain"));
    }
}
