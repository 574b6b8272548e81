//! Bell-sampling measurement protocol: random-state ensemble on `N - 1`
//! qubits plus one Bell pair, forward evolution, operator insertion,
//! backward evolution and Bell measurement of the probed pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    apply_circuit, bell_probs, bell_projector, sample_shots, seeded_random_state_circuit, Circuit, DensityMatrix, Gate,
    NoiseModel, QuantumState, RegisterLayout, StateVector,
};
use crate::error::{Error, Result};
use crate::holevo::{
    holevo_bell_diagonal, holevo_exact, holevo_from_probs, normalize_probs, BellBasis, HolevoRecord, Variant,
};
use crate::ising::{
    aligned_steps, exact_propagator, heisenberg_evolve, trotter_circuit, trotter_step_circuit, HamiltonianSpec,
    TrotterPlan,
};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::pauli::{check_site, OperatorExpansion, Pauli, PauliString};
use crate::seed::{derive_rng, STREAM_SHOTS};

/// Largest chain handled by the noiseless engine (dense `2^N` operators).
pub const MAX_SITES: usize = 10;
/// Largest chain handled by the density-matrix engine (`N + 1` qubits).
pub const MAX_NOISY_SITES: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Ensemble of `M` random-circuit states on the unprobed qubits.
    #[default]
    RandomEnsemble,
    /// The exact maximally mixed state on the unprobed qubits.
    MaximallyMixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evolution {
    /// First-order Trotter circuits.
    #[default]
    Trotter,
    /// Exact propagator (noiseless only).
    Exact,
}

impl std::str::FromStr for Initialization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "random-ensemble" | "random" | "ensemble" => Ok(Self::RandomEnsemble),
            "maximally-mixed" | "mixed" | "exact" => Ok(Self::MaximallyMixed),
            other => Err(Error::Config(format!("unknown initialization `{other}`"))),
        }
    }
}

impl std::str::FromStr for Evolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trotter" => Ok(Self::Trotter),
            "exact" => Ok(Self::Exact),
            other => Err(Error::Config(format!("unknown evolution `{other}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub hamiltonian: HamiltonianSpec,
    pub dt: f64,
    pub operator_site: usize,
    pub operator_pair: [Pauli; 2],
    pub probe_site: usize,
    pub times: Vec<f64>,
    pub ensemble_size: usize,
    pub depth: usize,
    /// Shots per ensemble member; 0 means exact probabilities.
    pub shots: u64,
    pub noise: Option<NoiseModel>,
    pub seed: u64,
    pub initialization: Initialization,
    pub evolution: Evolution,
}

impl ProtocolConfig {
    /// Pair `(I, X)` at `operator_site`, probed there, `dt = 0.1`, times
    /// `0..=10`, `M = 500`, `d = 8`, exact probabilities, no noise.
    pub fn new(hamiltonian: HamiltonianSpec, operator_site: usize) -> Self {
        Self {
            hamiltonian,
            dt: 0.1,
            operator_site,
            operator_pair: [Pauli::I, Pauli::X],
            probe_site: operator_site,
            times: time_grid(10.0, 0.1),
            ensemble_size: 500,
            depth: 8,
            shots: 0,
            noise: None,
            seed: 0,
            initialization: Initialization::RandomEnsemble,
            evolution: Evolution::Trotter,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.hamiltonian.n_sites()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_sites();
        check_site(self.operator_site, n)?;
        check_site(self.probe_site, n)?;
        for &t in &self.times {
            aligned_steps(t, self.dt)?;
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if self.depth == 0 && self.initialization == Initialization::RandomEnsemble {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if self.noise.is_some() {
            if self.evolution == Evolution::Exact {
                return Err(Error::Config("noise requires trotter evolution".into()));
            }
            if n > MAX_NOISY_SITES {
                return Err(Error::SizeGuard { max: MAX_NOISY_SITES, requested: n });
            }
        }
        if n > MAX_SITES {
            return Err(Error::SizeGuard { max: MAX_SITES, requested: n });
        }
        Ok(())
    }
}

/// `0, dt, 2 dt, ..., t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let steps = (t_max / dt).round() as usize;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

/// Parses an operator pair such as `"I,X"` or `"XY"`.
pub fn parse_pair(s: &str) -> Result<[Pauli; 2]> {
    let letters: Vec<Pauli> = s
        .chars()
        .filter(|c| !matches!(c, ',' | ' ' | '(' | ')'))
        .map(|c| c.to_string().parse::<Pauli>())
        .collect::<Result<_>>()?;
    match letters.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidPauli(s.to_string())),
    }
}

/// Circuit on the `N` system qubits whose unitary is
/// `U_b P_site U_f ~ e^{iHt} P e^{-iHt}`: the forward Trotter circuit, the
/// Pauli gate, then the backward circuit. `I` inserts no gate.
pub fn evolve_operator_circuit(label: Pauli, site: usize, h: &HamiltonianSpec, t: f64, dt: f64) -> Result<Circuit> {
    check_site(site, h.n_sites())?;
    let plan = TrotterPlan::new(t, dt)?;
    let mut c = trotter_circuit(h, &plan, 1);
    if let Some(g) = Gate::pauli(label, site - 1) {
        c.push(g)?;
    }
    c.append(&trotter_circuit(h, &plan, -1))?;
    Ok(c)
}

/// Bell probabilities of the pair (probe, ancilla) after applying the
/// system operator `o` to `|B0> (x) rest`, where the unprobed system qubits
/// are in `rest`.
enum Rest<'a> {
    Pure(&'a [C64]),
    Mixed(&'a CMatrix),
    MaximallyMixed,
}

fn pair_probs(o: &CMatrix, n_sites: usize, probe_qubit: usize, rest: Rest<'_>) -> [f64; 4] {
    let d = 1usize << (n_sites - 1);
    let p = n_sites - 1 - probe_qubit;
    let low = (1usize << p) - 1;
    let insert = |r: usize, s: usize| ((r >> p) << (p + 1)) | (s << p) | (r & low);
    let blocks: Vec<CMatrix> =
        (0..4).map(|sb| CMatrix::from_fn(d, d, |r, c| o[(insert(r, sb >> 1), insert(c, sb & 1))])).collect();

    let mut sigma = [[ZERO; 4]; 4];
    match rest {
        Rest::Pure(psi) => {
            let v = nalgebra::DVector::from_column_slice(psi);
            let w: Vec<_> = blocks.iter().map(|b| b * &v).collect();
            for u in 0..4 {
                for x in 0..4 {
                    sigma[u][x] = w[x].dotc(&w[u]) * 0.5;
                }
            }
        }
        Rest::Mixed(rho) => {
            let xs: Vec<CMatrix> = blocks.iter().map(|b| b * rho).collect();
            for u in 0..4 {
                for x in 0..4 {
                    sigma[u][x] = blocks[x].dotc(&xs[u]) * 0.5;
                }
            }
        }
        Rest::MaximallyMixed => {
            let w = 0.5 / d as f64;
            for u in 0..4 {
                for x in 0..4 {
                    sigma[u][x] = blocks[x].dotc(&blocks[u]) * w;
                }
            }
        }
    }
    std::array::from_fn(|i| {
        let b = BellBasis::state(i);
        let mut acc = ZERO;
        for u in 0..4 {
            for x in 0..4 {
                acc += b[u].conj() * sigma[u][x] * b[x];
            }
        }
        acc.re
    })
}

fn finish(raw: [f64; 4]) -> Result<[f64; 4]> {
    normalize_probs(&raw)
}

fn shot_tags(label: Pauli, steps: usize, site: usize, member: usize) -> [u64; 5] {
    [STREAM_SHOTS, u64::from(label.index()), steps as u64, site as u64, member as u64]
}

/// Probabilities indexed `[label][time][site]`.
pub type ProbGrid = Vec<Vec<Vec<[f64; 4]>>>;

/// Prepared ensemble and evolution machinery for one configuration. Both
/// operators of a pair are measured against the same ensemble.
pub struct ProtocolEngine<'a> {
    cfg: &'a ProtocolConfig,
    members: Vec<Circuit>,
}

impl<'a> ProtocolEngine<'a> {
    pub fn new(cfg: &'a ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let members = match cfg.initialization {
            Initialization::RandomEnsemble => (0..cfg.ensemble_size as u64)
                .map(|k| seeded_random_state_circuit(cfg.n_sites() - 1, cfg.depth, cfg.seed, k))
                .collect(),
            Initialization::MaximallyMixed => Vec::new(),
        };
        Ok(Self { cfg, members })
    }

    pub fn config(&self) -> &ProtocolConfig {
        self.cfg
    }

    /// Random-circuit states of the unprobed qubits.
    pub fn member_states(&self) -> Vec<StateVector> {
        self.members
            .par_iter()
            .map(|c| match apply_circuit(QuantumState::Pure(StateVector::zero(c.width())), c, None) {
                Ok(QuantumState::Pure(s)) => s,
                _ => unreachable!("noiseless pure evolution"),
            })
            .collect()
    }

    /// Measured Bell probabilities for each label, time and probed site.
    pub fn probs_grid(&self, labels: &[Pauli], times: &[f64], sites: &[usize]) -> Result<ProbGrid> {
        let n = self.cfg.n_sites();
        for &s in sites {
            check_site(s, n)?;
        }
        let steps: Vec<usize> = times.iter().map(|&t| aligned_steps(t, self.cfg.dt)).collect::<Result<_>>()?;
        match self.cfg.noise {
            None => self.noiseless_grid(labels, times, &steps, sites),
            Some(noise) => self.noisy_grid(labels, &steps, sites, &noise),
        }
    }

    /// `O(t)` on the system qubits for every requested time.
    fn operator_sequence(&self, label: Pauli, times: &[f64], steps: &[usize]) -> Result<Vec<CMatrix>> {
        let h = &self.cfg.hamiltonian;
        let n = h.n_sites();
        let p = PauliString::single(n, self.cfg.operator_site, label)?.to_matrix();
        match self.cfg.evolution {
            Evolution::Exact => times
                .iter()
                .map(|&t| {
                    let u = exact_propagator(h, t)?;
                    Ok(u.adjoint() * &p * u)
                })
                .collect(),
            Evolution::Trotter => {
                let step = trotter_step_circuit(h, self.cfg.dt).to_unitary();
                let max = steps.iter().copied().max().unwrap_or(0);
                let mut by_step = vec![None; max + 1];
                let mut f = CMatrix::identity(1 << n, 1 << n);
                for (k, slot) in by_step.iter_mut().enumerate() {
                    if steps.contains(&k) {
                        *slot = Some(f.adjoint() * &p * &f);
                    }
                    if k < max {
                        f = &step * f;
                    }
                }
                Ok(steps.iter().map(|&k| by_step[k].clone().expect("requested step")).collect())
            }
        }
    }

    fn noiseless_grid(&self, labels: &[Pauli], times: &[f64], steps: &[usize], sites: &[usize]) -> Result<ProbGrid> {
        let n = self.cfg.n_sites();
        let states = if self.members.is_empty() { Vec::new() } else { self.member_states() };
        let compressed = (self.cfg.shots == 0 && !states.is_empty()).then(|| {
            let d = 1usize << (n - 1);
            let mut rho = CMatrix::from_element(d, d, ZERO);
            for s in &states {
                let v = nalgebra::DVector::from_column_slice(s.amplitudes());
                rho += &v * v.adjoint();
            }
            rho / C64::new(states.len() as f64, 0.0)
        });

        let mut grid = Vec::with_capacity(labels.len());
        for &label in labels {
            let ops = self.operator_sequence(label, times, steps)?;
            let per_time = ops
                .iter()
                .zip(steps)
                .map(|(o, &k)| {
                    sites
                        .par_iter()
                        .map(|&site| {
                            let q = site - 1;
                            let raw = if states.is_empty() {
                                pair_probs(o, n, q, Rest::MaximallyMixed)
                            } else if let Some(rho) = &compressed {
                                pair_probs(o, n, q, Rest::Mixed(rho))
                            } else {
                                let mut acc = [0.0; 4];
                                for (m, s) in states.iter().enumerate() {
                                    let exact = pair_probs(o, n, q, Rest::Pure(s.amplitudes()));
                                    let mut rng = derive_rng(self.cfg.seed, &shot_tags(label, k, site, m));
                                    let sampled = sample_shots(&exact, self.cfg.shots, &mut rng);
                                    for i in 0..4 {
                                        acc[i] += sampled[i];
                                    }
                                }
                                acc.map(|x| x / states.len() as f64)
                            };
                            finish(raw)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            grid.push(per_time);
        }
        Ok(grid)
    }

    /// Ensemble-averaged state of the unprobed qubits after noisy
    /// preparation.
    fn noisy_rest_state(&self, noise: &NoiseModel) -> Result<DensityMatrix> {
        let width = self.cfg.n_sites() - 1;
        if self.members.is_empty() {
            return Ok(DensityMatrix::maximally_mixed(width));
        }
        let states = self
            .members
            .par_iter()
            .map(|c| {
                Ok(apply_circuit(QuantumState::Mixed(DensityMatrix::zero_state(width)), c, Some(noise))?.into_mixed())
            })
            .collect::<Result<Vec<_>>>()?;
        let mut avg = DensityMatrix::maximally_mixed(width);
        let inv = 1.0 / states.len() as f64;
        avg.data_mut().iter_mut().for_each(|x| *x = ZERO);
        for s in &states {
            for (a, b) in avg.data_mut().iter_mut().zip(s.data()) {
                *a += b * inv;
            }
        }
        Ok(avg)
    }

    /// Density-matrix evaluation. With `P_i(t) = tr[B_t^dag(Pi_i) O(F_t(rho_0))]`
    /// the forward state and the Heisenberg-evolved Bell projectors are both
    /// advanced one Trotter step at a time and shared by all labels.
    fn noisy_grid(&self, labels: &[Pauli], steps: &[usize], sites: &[usize], noise: &NoiseModel) -> Result<ProbGrid> {
        let cfg = self.cfg;
        let n = cfg.n_sites();
        let rest = self.noisy_rest_state(noise)?;
        let mut pair_prep = Circuit::new(2);
        pair_prep.push(Gate::h(0))?;
        pair_prep.push(Gate::cnot(0, 1))?;
        let pair =
            apply_circuit(QuantumState::Mixed(DensityMatrix::zero_state(2)), &pair_prep, Some(noise))?.into_mixed();

        let forward = trotter_step_circuit(&cfg.hamiltonian, cfg.dt).remap(n + 1, &(0..n).collect::<Vec<_>>())?;
        let backward = forward.inverse();
        let max = steps.iter().copied().max().unwrap_or(0);
        let lambda = noise.effective_rate();
        let inserts: Vec<Option<Gate>> = labels.iter().map(|&l| Gate::pauli(l, cfg.operator_site - 1)).collect();

        let per_site = sites
            .par_iter()
            .map(|&site| {
                let layout = RegisterLayout::new(n, site)?;
                let (q, anc) = (layout.probe_qubit(), layout.ancilla());
                let mut rho = layout.embed_mixed(&pair, &rest);
                let mut projectors: Vec<DensityMatrix> = (0..4).map(|i| bell_projector(n + 1, q, anc, i)).collect();
                let mut by_step: Vec<Option<Vec<[f64; 4]>>> = vec![None; max + 1];
                for (k, slot) in by_step.iter_mut().enumerate() {
                    if steps.contains(&k) {
                        let row = inserts
                            .iter()
                            .map(|g| {
                                let mut r = rho.clone();
                                if let Some(g) = g {
                                    r.apply_gate(g);
                                    r.depolarize(&g.qubits, lambda);
                                }
                                finish(std::array::from_fn(|i| projectors[i].expectation(&r)))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        *slot = Some(row);
                    }
                    if k < max {
                        for g in forward.gates() {
                            rho.apply_gate(g);
                            rho.depolarize(&g.qubits, lambda);
                        }
                        for pi in projectors.iter_mut() {
                            for g in backward.gates().iter().rev() {
                                pi.depolarize(&g.qubits, lambda);
                                pi.apply_gate_adjoint(g);
                            }
                        }
                    }
                }
                Ok(by_step)
            })
            .collect::<Result<Vec<_>>>()?;

        let members = self.members.len().max(1) as u64;
        let mut grid = Vec::with_capacity(labels.len());
        for (li, &label) in labels.iter().enumerate() {
            let mut per_time = Vec::with_capacity(steps.len());
            for &k in steps {
                let mut row = Vec::with_capacity(sites.len());
                for (si, &site) in sites.iter().enumerate() {
                    let exact = per_site[si][k].as_ref().expect("requested step")[li];
                    let probs = if cfg.shots == 0 {
                        exact
                    } else {
                        let mut rng = derive_rng(cfg.seed, &shot_tags(label, k, site, usize::MAX));
                        sample_shots(&exact, cfg.shots * members, &mut rng)
                    };
                    row.push(finish(probs)?);
                }
                per_time.push(row);
            }
            grid.push(per_time);
        }
        Ok(grid)
    }
}

/// Gate-by-gate reference for [`measure_probs`]: every ensemble member is
/// simulated on the full `N + 1` qubit register.
pub fn measure_probs_reference(cfg: &ProtocolConfig, label: Pauli, t: f64, site: usize) -> Result<[f64; 4]> {
    cfg.validate()?;
    let n = cfg.n_sites();
    let layout = RegisterLayout::new(n, site)?;
    let width = layout.width();
    let system: Vec<usize> = (0..n).collect();
    let steps = aligned_steps(t, cfg.dt)?;
    let noise = cfg.noise.as_ref();

    let evolve = |state: QuantumState| -> Result<QuantumState> {
        match cfg.evolution {
            Evolution::Trotter => {
                let c = evolve_operator_circuit(label, cfg.operator_site, &cfg.hamiltonian, t, cfg.dt)?
                    .remap(width, &system)?;
                apply_circuit(state, &c, noise)
            }
            Evolution::Exact => {
                let u = exact_propagator(&cfg.hamiltonian, t)?;
                let p = PauliString::single(n, cfg.operator_site, label)?.to_matrix();
                let o = u.adjoint() * p * u;
                match state {
                    QuantumState::Pure(mut s) => {
                        s.apply_leading_operator(&o)?;
                        Ok(QuantumState::Pure(s))
                    }
                    QuantumState::Mixed(mut r) => {
                        r.apply_leading_operator(&o)?;
                        Ok(QuantumState::Mixed(r))
                    }
                }
            }
        }
    };

    let initial_states: Vec<QuantumState> = match cfg.initialization {
        Initialization::MaximallyMixed => {
            let mut pair_prep = Circuit::new(2);
            pair_prep.push(Gate::h(0))?;
            pair_prep.push(Gate::cnot(0, 1))?;
            let pair =
                apply_circuit(QuantumState::Mixed(DensityMatrix::zero_state(2)), &pair_prep, noise)?.into_mixed();
            vec![QuantumState::Mixed(layout.embed_mixed(&pair, &DensityMatrix::maximally_mixed(n - 1)))]
        }
        Initialization::RandomEnsemble => (0..cfg.ensemble_size as u64)
            .map(|k| {
                let psi = seeded_random_state_circuit(n - 1, cfg.depth, cfg.seed, k);
                let c = layout.initial_circuit(&psi)?;
                let zero = if noise.is_some() {
                    QuantumState::Mixed(DensityMatrix::zero_state(width))
                } else {
                    QuantumState::Pure(StateVector::zero(width))
                };
                apply_circuit(zero, &c, noise)
            })
            .collect::<Result<_>>()?,
    };

    let mut acc = [0.0; 4];
    let count = initial_states.len();
    for (m, state) in initial_states.into_iter().enumerate() {
        let exact = bell_probs(&evolve(state)?, layout.probe_qubit(), layout.ancilla())?;
        let probs = if noise.is_none() && cfg.shots > 0 {
            let mut rng = derive_rng(cfg.seed, &shot_tags(label, steps, site, m));
            sample_shots(&exact, cfg.shots, &mut rng)
        } else {
            exact
        };
        for i in 0..4 {
            acc[i] += probs[i];
        }
    }
    finish(acc.map(|x| x / count as f64))
}

/// Ensemble-averaged Bell probabilities at probe `site` after inserting
/// `label` at the configured operator site and evolving for time `t`.
pub fn measure_probs(cfg: &ProtocolConfig, label: Pauli, t: f64, site: usize) -> Result<[f64; 4]> {
    let engine = ProtocolEngine::new(cfg)?;
    Ok(engine.probs_grid(&[label], &[t], &[site])?[0][0][0])
}

/// Holevo information of the configured operator pair at `(t, site)`.
pub fn holevo_estimate(cfg: &ProtocolConfig, t: f64, site: usize) -> Result<HolevoRecord> {
    let engine = ProtocolEngine::new(cfg)?;
    let grid = engine.probs_grid(&cfg.operator_pair, &[t], &[site])?;
    let (p1, p2) = (grid[0][0][0], grid[1][0][0]);
    Ok(HolevoRecord::new(site, t, p1, p2, holevo_from_probs(&p1, &p2)?, Variant::ProtocolSampled))
}

/// Records over sites and times, stored site-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatmapGrid {
    pub sites: Vec<usize>,
    pub times: Vec<f64>,
    pub cells: Vec<HolevoRecord>,
}

impl HeatmapGrid {
    pub fn get(&self, site_idx: usize, time_idx: usize) -> &HolevoRecord {
        &self.cells[site_idx * self.times.len() + time_idx]
    }

    /// `chi[site_idx][time_idx]`.
    pub fn chi_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.sites.len()).map(|s| (0..self.times.len()).map(|t| self.get(s, t).chi).collect()).collect()
    }

    /// Largest per-cell `|chi - other.chi|`.
    pub fn max_abs_diff(&self, other: &HeatmapGrid) -> f64 {
        self.cells.iter().zip(&other.cells).map(|(a, b)| (a.chi - b.chi).abs()).fold(0.0, f64::max)
    }

    fn from_probs(sites: &[usize], times: &[f64], grid: &ProbGrid, variant: Variant) -> Result<Self> {
        let mut cells = Vec::with_capacity(sites.len() * times.len());
        for (si, &site) in sites.iter().enumerate() {
            for (ti, &t) in times.iter().enumerate() {
                let (p1, p2) = (grid[0][ti][si], grid[1][ti][si]);
                cells.push(HolevoRecord::new(site, t, p1, p2, holevo_from_probs(&p1, &p2)?, variant));
            }
        }
        Ok(Self { sites: sites.to_vec(), times: times.to_vec(), cells })
    }
}

/// Protocol estimate of the pair's Holevo information at every site and
/// configured time.
pub fn heatmap(cfg: &ProtocolConfig) -> Result<HeatmapGrid> {
    let engine = ProtocolEngine::new(cfg)?;
    let sites: Vec<usize> = (1..=cfg.n_sites()).collect();
    let grid = engine.probs_grid(&cfg.operator_pair, &cfg.times, &sites)?;
    HeatmapGrid::from_probs(&sites, &cfg.times, &grid, Variant::ProtocolSampled)
}

/// `sum_n (1 - P0_n)` from the measured probabilities of `label`.
pub fn protocol_operator_size(cfg: &ProtocolConfig, label: Pauli, t: f64) -> Result<f64> {
    let engine = ProtocolEngine::new(cfg)?;
    let sites: Vec<usize> = (1..=cfg.n_sites()).collect();
    let grid = engine.probs_grid(&[label], &[t], &sites)?;
    Ok(grid[0][0].iter().map(|p| 1.0 - p[0]).sum())
}

/// Exactly evolved expansion of `label` at `site`.
pub fn evolved_expansion(h: &HamiltonianSpec, label: Pauli, site: usize, t: f64) -> Result<OperatorExpansion> {
    let p = PauliString::single(h.n_sites(), site, label)?;
    if label == Pauli::I {
        return Ok(OperatorExpansion::basis(&p));
    }
    heisenberg_evolve(&p.to_matrix(), h, t)
}

/// Exact-oracle heatmap from Heisenberg-evolved expansions. `variant`
/// selects the full reduced matrices or their Bell diagonals.
pub fn oracle_heatmap(
    h: &HamiltonianSpec,
    operator_site: usize,
    pair: [Pauli; 2],
    times: &[f64],
    variant: Variant,
) -> Result<HeatmapGrid> {
    let n = h.n_sites();
    let sites: Vec<usize> = (1..=n).collect();
    let per_time = times
        .par_iter()
        .map(|&t| {
            let e1 = evolved_expansion(h, pair[0], operator_site, t)?;
            let e2 = evolved_expansion(h, pair[1], operator_site, t)?;
            sites
                .iter()
                .map(|&s| {
                    let rec = match variant {
                        Variant::Exact => holevo_exact(&e1, &e2, s)?,
                        Variant::BellDiagonal => holevo_bell_diagonal(&e1, &e2, s)?,
                        other => return Err(Error::Config(format!("oracle variant `{}`", other.label()))),
                    };
                    Ok(rec.at_time(t))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(n * times.len());
    for si in 0..n {
        for row in &per_time {
            cells.push(row[si].clone());
        }
    }
    Ok(HeatmapGrid { sites, times: times.to_vec(), cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holevo::reduced_site_matrix;
    use crate::ising::build_hamiltonian;
    use approx::assert_abs_diff_eq;

    fn cfg(n: usize, hz: f64, site: usize) -> ProtocolConfig {
        let mut c = ProtocolConfig::new(build_hamiltonian(n, 1.0, 1.0, hz).unwrap(), site);
        c.ensemble_size = 6;
        c.depth = 3;
        c.seed = 11;
        c.times = vec![0.0, 0.3, 0.5];
        c
    }

    fn close(a: [f64; 4], b: [f64; 4], tol: f64) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn operator_circuit_structure() {
        let h = build_hamiltonian(7, 1.0, 1.0, 0.3).unwrap();
        let c = evolve_operator_circuit(Pauli::X, 4, &h, 1.0, 0.1).unwrap();
        assert_eq!(c.len(), 2 * 10 * 20 + 1);
        assert_eq!(evolve_operator_circuit(Pauli::X, 4, &h, 0.0, 0.1).unwrap().gates(), &[Gate::x(3)]);
        assert!(evolve_operator_circuit(Pauli::X, 4, &h, 0.15, 0.1).is_err());

        let h3 = build_hamiltonian(3, 1.0, 1.0, 0.3).unwrap();
        let id = evolve_operator_circuit(Pauli::I, 2, &h3, 0.5, 0.1).unwrap().to_unitary();
        assert!(crate::linalg::max_abs_diff(&id, &CMatrix::identity(8, 8)) < 1e-12);
    }

    #[test]
    fn operator_circuit_matches_trotter_conjugation() {
        let h = build_hamiltonian(3, 1.0, 1.0, 0.3).unwrap();
        let u = evolve_operator_circuit(Pauli::Y, 2, &h, 0.4, 0.1).unwrap().to_unitary();
        let f = trotter_circuit(&h, &TrotterPlan::new(0.4, 0.1).unwrap(), 1).to_unitary();
        let p = PauliString::single(3, 2, Pauli::Y).unwrap().to_matrix();
        assert!(crate::linalg::max_abs_diff(&u, &(f.adjoint() * p * f)) < 1e-12);
    }

    #[test]
    fn trivial_anchors() {
        let c = cfg(4, 0.3, 3);
        assert_eq!(
            measure_probs(&c, Pauli::X, 0.0, 3).unwrap().map(|x| (x * 1e12).round() / 1e12),
            [0.0, 1.0, 0.0, 0.0]
        );
        for site in 1..=4 {
            let p = measure_probs(&c, Pauli::I, 0.5, site).unwrap();
            close(p, [1.0, 0.0, 0.0, 0.0], 1e-12);
        }
        let mut same = c.clone();
        same.operator_pair = [Pauli::X, Pauli::X];
        assert_abs_diff_eq!(holevo_estimate(&same, 0.5, 2).unwrap().chi, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(holevo_estimate(&c, 0.0, 3).unwrap().chi, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(protocol_operator_size(&c, Pauli::X, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(protocol_operator_size(&c, Pauli::I, 0.5).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fast_path_matches_gate_level_reference() {
        for (n, hz, op, probe) in [(3, 0.0, 2, 1), (4, 0.3, 2, 4), (4, 0.3, 1, 1)] {
            let c = cfg(n, hz, op);
            for label in [Pauli::X, Pauli::Y, Pauli::Z] {
                let fast = measure_probs(&c, label, 0.5, probe).unwrap();
                close(fast, measure_probs_reference(&c, label, 0.5, probe).unwrap(), 1e-10);
            }
        }
    }

    #[test]
    fn fast_path_matches_reference_with_shots() {
        let mut c = cfg(3, 0.3, 2);
        c.shots = 50;
        for probe in 1..=3 {
            let fast = measure_probs(&c, Pauli::Z, 0.3, probe).unwrap();
            close(fast, measure_probs_reference(&c, Pauli::Z, 0.3, probe).unwrap(), 1e-12);
        }
    }

    #[test]
    fn exact_paths_match_reference() {
        let mut c = cfg(3, 0.3, 2);
        c.evolution = Evolution::Exact;
        c.initialization = Initialization::MaximallyMixed;
        close(
            measure_probs(&c, Pauli::X, 0.5, 3).unwrap(),
            measure_probs_reference(&c, Pauli::X, 0.5, 3).unwrap(),
            1e-10,
        );
        c.initialization = Initialization::RandomEnsemble;
        close(
            measure_probs(&c, Pauli::Y, 0.5, 1).unwrap(),
            measure_probs_reference(&c, Pauli::Y, 0.5, 1).unwrap(),
            1e-10,
        );
    }

    #[test]
    fn noisy_sweep_matches_gate_level_reference() {
        let mut c = cfg(3, 0.3, 2);
        c.ensemble_size = 3;
        c.noise = Some(NoiseModel::new(0.02).unwrap());
        for (label, probe) in [(Pauli::X, 1), (Pauli::Y, 2), (Pauli::I, 3)] {
            let fast = measure_probs(&c, label, 0.3, probe).unwrap();
            close(fast, measure_probs_reference(&c, label, 0.3, probe).unwrap(), 1e-10);
        }
        c.initialization = Initialization::MaximallyMixed;
        close(
            measure_probs(&c, Pauli::X, 0.2, 3).unwrap(),
            measure_probs_reference(&c, Pauli::X, 0.2, 3).unwrap(),
            1e-10,
        );
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        let mut c = cfg(3, 0.3, 2);
        let clean = measure_probs(&c, Pauli::X, 0.5, 1).unwrap();
        c.noise = Some(NoiseModel::new(0.0).unwrap());
        close(measure_probs(&c, Pauli::X, 0.5, 1).unwrap(), clean, 1e-10);
    }

    #[test]
    fn maximally_mixed_initialization_is_the_oracle() {
        for hz in [0.0, 0.3] {
            let mut c = cfg(4, hz, 2);
            c.evolution = Evolution::Exact;
            c.initialization = Initialization::MaximallyMixed;
            let e = evolved_expansion(&c.hamiltonian, Pauli::Z, 2, 1.0).unwrap();
            let engine = ProtocolEngine::new(&c).unwrap();
            let grid = engine.probs_grid(&[Pauli::Z], &[1.0], &[1, 2, 3, 4]).unwrap();
            for site in 1..=4 {
                close(grid[0][0][site - 1], reduced_site_matrix(&e, site).unwrap().diagonal(), 1e-10);
            }
        }
    }

    #[test]
    fn heatmap_is_deterministic_and_bounded() {
        let mut c = cfg(4, 0.3, 2);
        c.shots = 20;
        let a = heatmap(&c).unwrap();
        let b = heatmap(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.cells.iter().all(|r| (0.0..=1.0).contains(&r.chi)));
        assert_eq!(a.get(1, 0).chi, 1.0);
        assert_eq!(a.get(0, 0).chi, 0.0);
    }

    #[test]
    fn oracle_heatmap_anchor_and_symmetry() {
        let h = build_hamiltonian(4, 1.0, 1.0, 0.0).unwrap();
        let g = oracle_heatmap(&h, 2, [Pauli::I, Pauli::X], &[0.0, 0.7], Variant::Exact).unwrap();
        for s in 0..4 {
            assert_abs_diff_eq!(g.get(s, 0).chi, if s == 1 { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
        let swapped = oracle_heatmap(&h, 2, [Pauli::X, Pauli::I], &[0.0, 0.7], Variant::Exact).unwrap();
        assert!(g.max_abs_diff(&swapped) < 1e-12);
        assert!(oracle_heatmap(&h, 2, [Pauli::I, Pauli::X], &[0.7], Variant::Mitigated).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(3, 0.0, 2);
        c.times = vec![0.05];
        assert!(ProtocolEngine::new(&c).is_err());
        let mut c = cfg(3, 0.0, 2);
        c.probe_site = 4;
        assert!(c.validate().is_err());
        let mut c = cfg(3, 0.0, 2);
        c.evolution = Evolution::Exact;
        c.noise = Some(NoiseModel::new(0.01).unwrap());
        assert!(c.validate().is_err());
        assert_eq!(parse_pair("I,X").unwrap(), [Pauli::I, Pauli::X]);
        assert_eq!(parse_pair("XY").unwrap(), [Pauli::X, Pauli::Y]);
        assert!(parse_pair("X").is_err());
        assert_eq!(time_grid(1.0, 0.1).len(), 11);
    }
}
