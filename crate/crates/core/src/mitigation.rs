//! Richardson extrapolation to the zero-noise limit from runs at scaled
//! depolarizing rates `c_j p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holevo::{holevo_from_probs, HolevoRecord, Variant};
use crate::protocol::{HeatmapGrid, ProbGrid, ProtocolConfig, ProtocolEngine};

/// Quantity that is extrapolated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MitigationTarget {
    /// Extrapolate the Holevo information directly.
    #[default]
    Chi,
    /// Extrapolate each Bell probability, clip and renormalize, then
    /// evaluate the Holevo information.
    Probs,
}

impl std::str::FromStr for MitigationTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chi" => Ok(MitigationTarget::Chi),
            "probs" | "probabilities" => Ok(MitigationTarget::Probs),
            other => Err(Error::Config(format!("unknown mitigation target `{other}`"))),
        }
    }
}

impl std::fmt::Display for MitigationTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MitigationTarget::Chi => "chi",
            MitigationTarget::Probs => "probs",
        })
    }
}

/// Scale factors `c_j = j + 1` and integer weights `gamma_j` with
/// `sum gamma_j = 1` and `sum gamma_j c_j^k = 0` for `k = 1..=order`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RichardsonScheme {
    order: usize,
    scales: Vec<i64>,
    weights: Vec<i64>,
}

impl RichardsonScheme {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn scales(&self) -> Vec<f64> {
        self.scales.iter().map(|&c| c as f64).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.weights.iter().map(|&g| g as f64).collect()
    }

    pub fn integer_scales(&self) -> &[i64] {
        &self.scales
    }

    pub fn integer_weights(&self) -> &[i64] {
        &self.weights
    }

    /// `sum_j gamma_j c_j^k` for `k = 0..=order`, in exact integer arithmetic.
    pub fn moments(&self) -> Vec<i128> {
        (0..=self.order as u32)
            .map(|k| self.scales.iter().zip(&self.weights).map(|(&c, &g)| g as i128 * (c as i128).pow(k)).sum())
            .collect()
    }

    /// True when the zeroth moment is 1 and moments `1..=order` vanish.
    pub fn satisfies_constraints(&self) -> bool {
        self.moments().iter().enumerate().all(|(k, &m)| m == i128::from(k == 0))
    }
}

/// Scheme of order `n_c >= 1`. The weights solve the Vandermonde system in
/// closed form, `gamma_j = prod_{m != j} c_m / (c_m - c_j)`, which for
/// `c_j = j + 1` is the integer `(-1)^j binom(n_c + 1, j + 1)`.
pub fn richardson_scheme(order: usize) -> Result<RichardsonScheme> {
    if !(1..=20).contains(&order) {
        return Err(Error::OutOfRange { value: order as f64, lo: 1.0, hi: 20.0 });
    }
    let scales: Vec<i64> = (1..=order as i64 + 1).collect();
    let weights = scales
        .iter()
        .map(|&cj| {
            let (mut num, mut den) = (1i128, 1i128);
            for &cm in scales.iter().filter(|&&cm| cm != cj) {
                num *= cm as i128;
                den *= (cm - cj) as i128;
            }
            (num / den) as i64
        })
        .collect();
    let scheme = RichardsonScheme { order, scales, weights };
    debug_assert!(scheme.satisfies_constraints());
    Ok(scheme)
}

/// `sum_j gamma_j values_j`, with `values` ordered by scale factor.
///
/// Evaluated as `v_0 + sum_j gamma_j (v_j - v_0)`, which is the same sum
/// because the weights add to one, and returns `v_0` exactly when all
/// inputs coincide.
pub fn mitigate(values: &[f64], scheme: &RichardsonScheme) -> Result<f64> {
    if values.len() != scheme.weights.len() {
        return Err(Error::LengthMismatch { expected: scheme.weights.len(), actual: values.len() });
    }
    let v0 = values[0];
    Ok(v0 + values.iter().zip(&scheme.weights).map(|(v, &g)| g as f64 * (v - v0)).sum::<f64>())
}

/// Protocol runs of an operator pair at every scaled rate `c_j p`.
#[derive(Clone, Debug)]
pub struct ScaledRuns {
    pub scheme: RichardsonScheme,
    pub base_rate: f64,
    pub sites: Vec<usize>,
    pub times: Vec<f64>,
    /// One probability grid per scale factor, labels in pair order.
    pub grids: Vec<ProbGrid>,
}

/// Runs the protocol once per scale factor of `scheme` on the configured
/// times and the given probe sites.
pub fn scaled_runs(cfg: &ProtocolConfig, scheme: &RichardsonScheme, sites: &[usize]) -> Result<ScaledRuns> {
    let noise = cfg.noise.ok_or_else(|| Error::Config("mitigation requires a noise model".into()))?;
    let mut grids = Vec::with_capacity(scheme.scales.len());
    for c in scheme.scales() {
        let rate = c * noise.p * noise.scale;
        if rate > 1.0 {
            return Err(Error::NoiseRate(rate));
        }
        let mut scaled = cfg.clone();
        scaled.noise = Some(noise.scaled(noise.scale * c));
        let engine = ProtocolEngine::new(&scaled)?;
        grids.push(engine.probs_grid(&cfg.operator_pair, &cfg.times, sites)?);
    }
    Ok(ScaledRuns {
        scheme: scheme.clone(),
        base_rate: noise.p * noise.scale,
        sites: sites.to_vec(),
        times: cfg.times.clone(),
        grids,
    })
}

fn clip_renormalize(p: [f64; 4]) -> [f64; 4] {
    let clipped = p.map(|x| x.max(0.0));
    let total: f64 = clipped.iter().sum();
    clipped.map(|x| x / total)
}

impl ScaledRuns {
    /// Number of protocol runs per grid point.
    pub fn runs(&self) -> usize {
        self.grids.len()
    }

    fn chi_at(&self, scale: usize, ti: usize, si: usize) -> Result<f64> {
        let g = &self.grids[scale];
        holevo_from_probs(&g[0][ti][si], &g[1][ti][si])
    }

    /// Noisy records at scale index `scale` (0 is the base rate).
    pub fn at_scale(&self, scale: usize) -> Result<HeatmapGrid> {
        let mut cells = Vec::with_capacity(self.sites.len() * self.times.len());
        for (si, &site) in self.sites.iter().enumerate() {
            for (ti, &t) in self.times.iter().enumerate() {
                let g = &self.grids[scale];
                let chi = self.chi_at(scale, ti, si)?;
                cells.push(HolevoRecord::new(site, t, g[0][ti][si], g[1][ti][si], chi, Variant::ProtocolSampled));
            }
        }
        Ok(HeatmapGrid { sites: self.sites.clone(), times: self.times.clone(), cells })
    }

    /// Zero-noise extrapolated records. In `Chi` mode the extrapolant is
    /// clipped to `[0, 1]` and kept unclipped in `raw_chi`. The stored
    /// probabilities are the extrapolated vectors, clipped and renormalized.
    pub fn mitigated(&self, target: MitigationTarget) -> Result<HeatmapGrid> {
        let mut cells = Vec::with_capacity(self.sites.len() * self.times.len());
        for (si, &site) in self.sites.iter().enumerate() {
            for (ti, &t) in self.times.iter().enumerate() {
                let probs: Vec<[f64; 4]> = (0..2)
                    .map(|l| {
                        let mut out = [0.0; 4];
                        for (i, slot) in out.iter_mut().enumerate() {
                            let values: Vec<f64> = self.grids.iter().map(|g| g[l][ti][si][i]).collect();
                            *slot = mitigate(&values, &self.scheme)?;
                        }
                        Ok(clip_renormalize(out))
                    })
                    .collect::<Result<_>>()?;
                let (chi, raw) = match target {
                    MitigationTarget::Chi => {
                        let values: Vec<f64> =
                            (0..self.runs()).map(|j| self.chi_at(j, ti, si)).collect::<Result<_>>()?;
                        let raw = mitigate(&values, &self.scheme)?;
                        (raw.clamp(0.0, 1.0), Some(raw))
                    }
                    MitigationTarget::Probs => (holevo_from_probs(&probs[0], &probs[1])?, None),
                };
                let mut rec = HolevoRecord::new(site, t, probs[0], probs[1], chi, Variant::Mitigated);
                rec.raw_chi = raw;
                rec.target = Some(target);
                cells.push(rec);
            }
        }
        Ok(HeatmapGrid { sites: self.sites.clone(), times: self.times.clone(), cells })
    }
}

/// Zero-noise extrapolated Holevo information of the configured pair at one
/// grid point, from `order + 1` runs at rates `c_j p`.
pub fn mitigated_holevo(
    cfg: &ProtocolConfig,
    scheme: &RichardsonScheme,
    target: MitigationTarget,
    t: f64,
    site: usize,
) -> Result<HolevoRecord> {
    let mut point = cfg.clone();
    point.times = vec![t];
    let runs = scaled_runs(&point, scheme, &[site])?;
    Ok(runs.mitigated(target)?.cells.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn tabulated_schemes() {
        let s1 = richardson_scheme(1).unwrap();
        assert_eq!(s1.integer_scales(), &[1, 2]);
        assert_eq!(s1.integer_weights(), &[2, -1]);
        assert_eq!(richardson_scheme(2).unwrap().integer_weights(), &[3, -3, 1]);
        let s3 = richardson_scheme(3).unwrap();
        assert_eq!(s3.integer_scales(), &[1, 2, 3, 4]);
        assert_eq!(s3.integer_weights(), &[4, -6, 4, -1]);
        assert!(richardson_scheme(0).is_err());
    }

    #[test]
    fn constraints_hold_exactly() {
        for order in 1..=12 {
            let s = richardson_scheme(order).unwrap();
            assert!(s.satisfies_constraints(), "order {order}: {:?}", s.moments());
        }
    }

    #[test]
    fn linear_cancellation() {
        let s = richardson_scheme(1).unwrap();
        assert_abs_diff_eq!(mitigate(&[1.1, 1.2], &s).unwrap(), 1.0, epsilon = 1e-15);
        assert!(mitigate(&[1.0], &s).is_err());
    }

    #[test]
    fn constants_are_unchanged() {
        for order in 1..=4 {
            let s = richardson_scheme(order).unwrap();
            assert_abs_diff_eq!(mitigate(&vec![0.37; order + 1], &s).unwrap(), 0.37, epsilon = 1e-13);
        }
    }

    #[test]
    fn cubic_recovery() {
        let s = richardson_scheme(3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let p = 1e-3;
            let values: Vec<f64> = s
                .scales()
                .iter()
                .map(|&cj| {
                    let x = cj * p;
                    c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x
                })
                .collect();
            assert!((mitigate(&values, &s).unwrap() - c[0]).abs() < 1e-12);
        }
    }

    fn noisy_cfg(p: f64) -> ProtocolConfig {
        let h = crate::ising::build_hamiltonian(3, 1.0, 1.0, 0.0).unwrap();
        let mut c = ProtocolConfig::new(h, 2);
        c.operator_pair = [crate::pauli::Pauli::X, crate::pauli::Pauli::Y];
        c.ensemble_size = 3;
        c.depth = 2;
        c.times = vec![0.0, 0.2, 0.4];
        c.noise = Some(crate::circuit::NoiseModel::new(p).unwrap());
        c
    }

    #[test]
    fn zero_rate_reproduces_noiseless_value() {
        let c = noisy_cfg(0.0);
        let mut clean = c.clone();
        clean.noise = None;
        let s = richardson_scheme(3).unwrap();
        for target in [MitigationTarget::Chi, MitigationTarget::Probs] {
            let rec = mitigated_holevo(&c, &s, target, 0.4, 1).unwrap();
            let expected = crate::protocol::holevo_estimate(&clean, 0.4, 1).unwrap();
            assert!((rec.chi - expected.chi).abs() < 1e-12);
            assert_eq!(rec.variant, Variant::Mitigated);
            assert_eq!(rec.target, Some(target));
        }
    }

    #[test]
    fn one_run_per_scale() {
        let c = noisy_cfg(0.01);
        for order in 1..=3 {
            let runs = scaled_runs(&c, &richardson_scheme(order).unwrap(), &[1, 2]).unwrap();
            assert_eq!(runs.runs(), order + 1);
        }
    }

    #[test]
    fn extrapolation_moves_toward_noiseless() {
        let c = noisy_cfg(0.02);
        let mut clean = c.clone();
        clean.noise = None;
        let runs = scaled_runs(&c, &richardson_scheme(2).unwrap(), &[2]).unwrap();
        let noisy = runs.at_scale(0).unwrap();
        let mitigated = runs.mitigated(MitigationTarget::Chi).unwrap();
        let truth = crate::protocol::holevo_estimate(&clean, 0.4, 2).unwrap().chi;
        assert!((mitigated.get(0, 2).chi - truth).abs() < (noisy.get(0, 2).chi - truth).abs());
        assert!(mitigated.cells.iter().all(|r| r.raw_chi.is_some() && (0.0..=1.0).contains(&r.chi)));
    }

    #[test]
    fn rejects_rates_above_one() {
        let c = noisy_cfg(0.4);
        assert!(matches!(scaled_runs(&c, &richardson_scheme(3).unwrap(), &[1]), Err(Error::NoiseRate(_))));
        let mut clean = c.clone();
        clean.noise = None;
        assert!(scaled_runs(&clean, &richardson_scheme(1).unwrap(), &[1]).is_err());
    }

    #[test]
    fn target_parsing() {
        assert_eq!("chi".parse::<MitigationTarget>().unwrap(), MitigationTarget::Chi);
        assert_eq!("probs".parse::<MitigationTarget>().unwrap(), MitigationTarget::Probs);
        assert!("both".parse::<MitigationTarget>().is_err());
    }
}
