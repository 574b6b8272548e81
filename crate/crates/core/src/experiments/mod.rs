//! Scenario runners that turn configurations into CSV and JSON data files.

pub mod config;
pub mod output;
pub mod trace_distance;
pub mod validate;

use std::path::PathBuf;

use serde::Serialize;

pub use config::{ExperimentConfig, Scenario};
pub use trace_distance::{loglog_slope, run_trace_distance, TraceDistanceRow};
pub use validate::{run_validate, run_validate_with, Check, ValidateHooks, ValidationReport};

use crate::error::{Error, Result};
use crate::holevo::{chi_of_density, HolevoRecord, Variant};
use crate::mitigation::{richardson_scheme, scaled_runs, ScaledRuns};
use crate::pauli::{operator_size, site_density};
use crate::protocol::{evolved_expansion, heatmap, oracle_heatmap, HeatmapGrid, ProtocolEngine};
use output::{emit, fmt17, record_row, RECORD_HEADER};

pub struct TraceDistanceOutput {
    pub rows: Vec<TraceDistanceRow>,
    pub slopes: Vec<(usize, Option<f64>)>,
    pub files: Vec<PathBuf>,
}

pub fn trace_distance_scenario(cfg: &ExperimentConfig) -> Result<TraceDistanceOutput> {
    let rows = run_trace_distance(&cfg.td_sites, &cfg.td_ensemble, cfg.depth, cfg.td_replicates, cfg.seed)?;
    let slopes: Vec<(usize, Option<f64>)> = cfg.td_sites.iter().map(|&n| (n, loglog_slope(&rows, n))).collect();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n_sites.to_string(), r.ensemble_size.to_string(), fmt17(r.mean), fmt17(r.std_error)])
        .collect();
    let json = serde_json::json!({ "rows": rows, "slopes": slopes });
    let files = emit(cfg, "trace_distance", &["N", "M", "mean_D", "std_error"], &table, &json)?;
    Ok(TraceDistanceOutput { rows, slopes, files })
}

pub struct HeatmapOutput {
    pub protocol: HeatmapGrid,
    pub exact: HeatmapGrid,
    pub bell_diagonal: HeatmapGrid,
    pub files: Vec<PathBuf>,
}

fn grid_rows(grids: &[&HeatmapGrid]) -> Vec<Vec<String>> {
    grids.iter().flat_map(|g| g.cells.iter().map(record_row)).collect()
}

/// Protocol heatmap plus the exact and Bell-diagonal oracle heatmaps.
pub fn heatmap_scenario(cfg: &ExperimentConfig) -> Result<HeatmapOutput> {
    let p = cfg.protocol_config()?;
    let protocol = heatmap(&p)?;
    let exact = oracle_heatmap(&p.hamiltonian, p.operator_site, p.operator_pair, &p.times, Variant::Exact)?;
    let bell_diagonal =
        oracle_heatmap(&p.hamiltonian, p.operator_site, p.operator_pair, &p.times, Variant::BellDiagonal)?;
    let mut files = emit(cfg, "heatmap_protocol", &RECORD_HEADER, &grid_rows(&[&protocol]), &protocol)?;
    let oracle_json = serde_json::json!({ "exact": exact, "bell_diagonal": bell_diagonal });
    files.extend(emit(cfg, "heatmap_oracle", &RECORD_HEADER, &grid_rows(&[&exact, &bell_diagonal]), &oracle_json)?);
    Ok(HeatmapOutput { protocol, exact, bell_diagonal, files })
}

#[derive(Clone, Debug, Serialize)]
pub struct Curve {
    pub label: String,
    pub records: Vec<HolevoRecord>,
}

impl Curve {
    pub fn chi(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.chi).collect()
    }
}

pub struct NoiseStudyOutput {
    pub times: Vec<f64>,
    pub noiseless: Curve,
    pub noisy: Curve,
    pub mitigated: Vec<(usize, Curve)>,
    pub files: Vec<PathBuf>,
}

/// Holevo information at the probe site: noiseless, noisy at the base
/// rate, and extrapolated for every requested order. Scale factors are
/// nested, so one set of runs at the highest order serves every order.
pub fn noise_study_scenario(cfg: &ExperimentConfig) -> Result<NoiseStudyOutput> {
    let clean = cfg.protocol_config()?;
    let site = clean.probe_site;
    let single = |g: HeatmapGrid| g.cells;

    let engine = ProtocolEngine::new(&clean)?;
    let grid = engine.probs_grid(&clean.operator_pair, &clean.times, &[site])?;
    let noiseless: Vec<HolevoRecord> = clean
        .times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let (p1, p2) = (grid[0][ti][0], grid[1][ti][0]);
            Ok(HolevoRecord::new(
                site,
                t,
                p1,
                p2,
                crate::holevo::holevo_from_probs(&p1, &p2)?,
                Variant::ProtocolSampled,
            ))
        })
        .collect::<Result<_>>()?;

    let mut noisy_cfg = clean.clone();
    noisy_cfg.noise = Some(cfg.noise_model()?);
    let max_order = cfg.mitigation_order.iter().copied().max().unwrap_or(1);
    let all = scaled_runs(&noisy_cfg, &richardson_scheme(max_order)?, &[site])?;
    let noisy = single(all.at_scale(0)?);
    let mut mitigated = Vec::new();
    for &order in &cfg.mitigation_order {
        let view = ScaledRuns { scheme: richardson_scheme(order)?, grids: all.grids[..=order].to_vec(), ..all.clone() };
        mitigated.push((
            order,
            Curve { label: format!("mitigated-n{order}"), records: single(view.mitigated(cfg.mitigation_target)?) },
        ));
    }

    let out = NoiseStudyOutput {
        times: clean.times.clone(),
        noiseless: Curve { label: "noiseless".into(), records: noiseless },
        noisy: Curve { label: "noisy".into(), records: noisy },
        mitigated,
        files: Vec::new(),
    };
    let mut rows = Vec::new();
    let curves: Vec<&Curve> =
        [&out.noiseless, &out.noisy].into_iter().chain(out.mitigated.iter().map(|(_, c)| c)).collect();
    for c in &curves {
        for r in &c.records {
            let raw = r.raw_chi.map(fmt17).unwrap_or_default();
            rows.push(vec![fmt17(r.time), c.label.clone(), fmt17(r.chi), raw]);
        }
    }
    let files = emit(cfg, "noise_study", &["t", "curve", "chi", "raw_chi"], &rows, &curves)?;
    Ok(NoiseStudyOutput { files, ..out })
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityRow {
    pub t: f64,
    pub site: usize,
    pub density: f64,
    pub chi_closed_form: f64,
    pub operator_size: f64,
}

pub struct OracleOutput {
    pub exact: HeatmapGrid,
    pub bell_diagonal: HeatmapGrid,
    pub densities: Vec<DensityRow>,
    pub files: Vec<PathBuf>,
}

/// Exact Heisenberg-picture results: both Holevo variants, local operator
/// densities of the second operator with the closed-form Holevo value, and
/// its final expansion as `(k, C_k)` pairs.
pub fn oracle_scenario(cfg: &ExperimentConfig) -> Result<OracleOutput> {
    let p = cfg.protocol_config()?;
    let h = &p.hamiltonian;
    let exact = oracle_heatmap(h, p.operator_site, p.operator_pair, &p.times, Variant::Exact)?;
    let bell_diagonal = oracle_heatmap(h, p.operator_site, p.operator_pair, &p.times, Variant::BellDiagonal)?;
    let mut densities = Vec::new();
    let mut last = None;
    for &t in &p.times {
        let e = evolved_expansion(h, p.operator_pair[1], p.operator_site, t)?;
        let size = operator_size(&e);
        for site in 1..=h.n_sites() {
            let (_, density) = site_density(&e, site)?;
            densities.push(DensityRow {
                t,
                site,
                density,
                chi_closed_form: chi_of_density(density.clamp(0.0, 1.0))?,
                operator_size: size,
            });
        }
        last = Some(e);
    }
    let mut files = emit(
        cfg,
        "oracle_heatmap",
        &RECORD_HEADER,
        &grid_rows(&[&exact, &bell_diagonal]),
        &serde_json::json!({ "exact": exact, "bell_diagonal": bell_diagonal }),
    )?;
    let rows: Vec<Vec<String>> = densities
        .iter()
        .map(|d| {
            vec![fmt17(d.t), d.site.to_string(), fmt17(d.density), fmt17(d.chi_closed_form), fmt17(d.operator_size)]
        })
        .collect();
    files.extend(emit(
        cfg,
        "oracle_density",
        &["t", "site", "density", "chi_closed_form", "operator_size"],
        &rows,
        &densities,
    )?);
    if cfg.wants("json") {
        let e = last.ok_or_else(|| Error::Config("empty time grid".into()))?;
        let path = cfg.out_dir.join("oracle_expansion.json");
        output::write_json(&path, cfg, &e)?;
        files.push(path);
    }
    Ok(OracleOutput { exact, bell_diagonal, densities, files })
}
