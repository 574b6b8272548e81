use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::circuit::NoiseModel;
use crate::error::{Error, Result};
use crate::ising::build_hamiltonian;
use crate::mitigation::MitigationTarget;
use crate::protocol::{parse_pair, time_grid, Evolution, Initialization, ProtocolConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    TraceDistance,
    Heatmap,
    NoiseStudy,
    Oracle,
    Validate,
}

impl Scenario {
    pub const ALL: [Scenario; 5] =
        [Scenario::TraceDistance, Scenario::Heatmap, Scenario::NoiseStudy, Scenario::Oracle, Scenario::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::TraceDistance => "trace-distance",
            Scenario::Heatmap => "heatmap",
            Scenario::NoiseStudy => "noise-study",
            Scenario::Oracle => "oracle",
            Scenario::Validate => "validate",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

fn list_of<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: std::str::FromStr + Deserialize<'de>,
    T::Err: std::fmt::Display,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw<T> {
        List(Vec<T>),
        One(T),
        Text(String),
    }
    match Raw::<T>::deserialize(d)? {
        Raw::List(v) => Ok(v),
        Raw::One(x) => Ok(vec![x]),
        Raw::Text(s) => s
            .split(',')
            .filter(|x| !x.trim().is_empty())
            .map(|x| x.trim().parse::<T>().map_err(serde::de::Error::custom))
            .collect(),
    }
}

/// Flat experiment configuration. Every key can be set in a TOML file and
/// overridden by a command-line flag of the same name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,
    pub n_sites: usize,
    pub coupling_j: f64,
    pub field_hx: f64,
    pub field_hz: f64,
    pub trotter_dt: f64,
    pub operator_site: usize,
    pub operator_pair: String,
    pub probe_site: usize,
    pub t_max: f64,
    pub ensemble_size: usize,
    pub depth: usize,
    pub shots: u64,
    pub noise_p: f64,
    #[serde(deserialize_with = "list_of")]
    pub mitigation_order: Vec<usize>,
    pub mitigation_target: MitigationTarget,
    pub initialization: Initialization,
    pub evolution: Evolution,
    pub seed: u64,
    #[serde(deserialize_with = "list_of")]
    pub td_sites: Vec<usize>,
    #[serde(deserialize_with = "list_of")]
    pub td_ensemble: Vec<usize>,
    pub td_replicates: usize,
    pub out_dir: PathBuf,
    #[serde(deserialize_with = "list_of")]
    pub formats: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            n_sites: 7,
            coupling_j: 1.0,
            field_hx: 1.0,
            field_hz: 0.3,
            trotter_dt: 0.1,
            operator_site: 4,
            operator_pair: "I,X".into(),
            probe_site: 4,
            t_max: 10.0,
            ensemble_size: 500,
            depth: 8,
            shots: 0,
            noise_p: 1e-3,
            mitigation_order: vec![1, 2, 3],
            mitigation_target: MitigationTarget::Chi,
            initialization: Initialization::RandomEnsemble,
            evolution: Evolution::Trotter,
            seed: 0,
            td_sites: vec![3, 5, 7],
            td_ensemble: vec![16, 64, 256, 1024],
            td_replicates: 10,
            out_dir: PathBuf::from("out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

/// Parses a command-line value into the TOML value it most likely denotes.
fn parse_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Sets `key` (dashes or underscores) from a command-line string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim_start_matches('-').replace('-', "_");
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        if !Self::keys().contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        let mut v = parse_value(value);
        let expects_float = matches!(table.get(&key), Some(toml::Value::Float(_)));
        if let (true, toml::Value::Integer(i)) = (expects_float, &v) {
            v = toml::Value::Float(*i as f64);
        }
        let expects_text = matches!(table.get(&key), Some(toml::Value::String(_)) | Some(toml::Value::Array(_)) | None);
        if expects_text && !matches!(v, toml::Value::String(_)) {
            v = toml::Value::String(value.to_string());
        }
        table.insert(key.clone(), v);
        *self = table.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn keys() -> Vec<&'static str> {
        vec![
            "scenario",
            "n_sites",
            "coupling_j",
            "field_hx",
            "field_hz",
            "trotter_dt",
            "operator_site",
            "operator_pair",
            "probe_site",
            "t_max",
            "ensemble_size",
            "depth",
            "shots",
            "noise_p",
            "mitigation_order",
            "mitigation_target",
            "initialization",
            "evolution",
            "seed",
            "td_sites",
            "td_ensemble",
            "td_replicates",
            "out_dir",
            "formats",
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.trotter_dt <= 0.0 || self.t_max < 0.0 {
            return Err(Error::Config("trotter_dt must be positive and t_max non-negative".into()));
        }
        crate::ising::aligned_steps(self.t_max, self.trotter_dt)?;
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::Config(format!("noise_p {} outside [0, 1]", self.noise_p)));
        }
        parse_pair(&self.operator_pair)?;
        if self.mitigation_order.contains(&0) {
            return Err(Error::Config("mitigation orders start at 1".into()));
        }
        for f in &self.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("unknown format `{f}`")));
            }
        }
        self.protocol_config()?.validate()
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }

    /// Noiseless protocol configuration on the `[0, t_max]` grid.
    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let h = build_hamiltonian(self.n_sites, self.coupling_j, self.field_hx, self.field_hz)?;
        let mut p = ProtocolConfig::new(h, self.operator_site);
        p.dt = self.trotter_dt;
        p.operator_pair = parse_pair(&self.operator_pair)?;
        p.probe_site = self.probe_site;
        p.times = time_grid(self.t_max, self.trotter_dt);
        p.ensemble_size = self.ensemble_size;
        p.depth = self.depth;
        p.shots = self.shots;
        p.seed = self.seed;
        p.initialization = self.initialization;
        p.evolution = self.evolution;
        Ok(p)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_p)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// Git-style content hash of the resolved parameters: SHA-256 of
    /// `"blob <len>\0<canonical json>"`, hex encoded. Output location and
    /// formats are not parameters and are left out.
    pub fn content_hash(&self) -> String {
        let mut params = self.to_json();
        if let Some(map) = params.as_object_mut() {
            map.remove("out_dir");
            map.remove("formats");
        }
        let body = serde_json::to_string(&params).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_settings() {
        let c = ExperimentConfig::default();
        assert_eq!((c.n_sites, c.depth, c.operator_site), (7, 8, 4));
        assert_eq!((c.coupling_j, c.field_hx, c.trotter_dt, c.noise_p), (1.0, 1.0, 0.1, 1e-3));
        c.validate().unwrap();
    }

    #[test]
    fn toml_and_overrides() {
        let mut c = ExperimentConfig::from_toml_str(
            "scenario = \"heatmap\"\nn_sites = 4\nfield_hz = 0\nmitigation_order = \"1,3\"\ntd_sites = [3, 5]\n",
        )
        .unwrap();
        assert_eq!(c.scenario, Some(Scenario::Heatmap));
        assert_eq!(c.n_sites, 4);
        assert_eq!(c.mitigation_order, vec![1, 3]);
        assert_eq!(c.td_sites, vec![3, 5]);
        c.set("--noise-p", "0.01").unwrap();
        c.set("field_hz", "1").unwrap();
        c.set("operator_pair", "X,Y").unwrap();
        c.set("mitigation-order", "2").unwrap();
        c.set("mitigation_target", "probs").unwrap();
        c.set("out_dir", "/tmp/x").unwrap();
        assert_eq!(c.noise_p, 0.01);
        assert_eq!(c.field_hz, 1.0);
        assert_eq!(c.operator_pair, "X,Y");
        assert_eq!(c.mitigation_order, vec![2]);
        assert_eq!(c.mitigation_target, MitigationTarget::Probs);
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("n_sites", "many").is_err());
        assert!(ExperimentConfig::from_toml_str("unknown = 1").is_err());
    }

    #[test]
    fn hash_tracks_parameters() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a.content_hash().len(), 64);
        b.out_dir = PathBuf::from("elsewhere");
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 1;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn validation_catches_bad_values() {
        let bad = [
            ExperimentConfig { t_max: 0.25, ..Default::default() },
            ExperimentConfig { operator_site: 9, ..Default::default() },
            ExperimentConfig { formats: vec!["png".into()], ..Default::default() },
        ];
        assert!(bad.iter().all(|c| c.validate().is_err()));
    }
}
