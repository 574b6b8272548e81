use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;
use crate::holevo::HolevoRecord;

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV file preceded by `#` lines carrying the resolved config and its hash.
pub fn write_csv(path: &Path, cfg: &ExperimentConfig, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# config: {}\n", serde_json::to_string(&cfg.to_json())?));
    text.push_str(&format!("# hash: {}\n", cfg.content_hash()));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let body = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    text.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    std::fs::write(path, text)?;
    Ok(())
}

/// JSON document `{ "config", "hash", "data" }`.
pub fn write_json<T: Serialize>(path: &Path, cfg: &ExperimentConfig, data: &T) -> Result<()> {
    let doc = serde_json::json!({
        "config": cfg.to_json(),
        "hash": cfg.content_hash(),
        "data": data,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}

pub const RECORD_HEADER: [&str; 12] =
    ["site", "t", "chi", "P0_1", "P1_1", "P2_1", "P3_1", "P0_2", "P1_2", "P2_2", "P3_2", "variant"];

pub fn record_row(r: &HolevoRecord) -> Vec<String> {
    let mut row = vec![r.site.to_string(), fmt17(r.time), fmt17(r.chi)];
    row.extend(r.probs_1.iter().chain(&r.probs_2).map(|&p| fmt17(p)));
    row.push(r.variant.label().to_string());
    row
}

/// Writes `stem.csv` and/or `stem.json` under the output directory,
/// returning the paths written.
pub fn emit<T: Serialize>(
    cfg: &ExperimentConfig,
    stem: &str,
    header: &[&str],
    rows: &[Vec<String>],
    json: &T,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    if cfg.wants("csv") {
        let p = cfg.out_dir.join(format!("{stem}.csv"));
        write_csv(&p, cfg, header, rows)?;
        written.push(p);
    }
    if cfg.wants("json") {
        let p = cfg.out_dir.join(format!("{stem}.json"));
        write_json(&p, cfg, json)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt17(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn files_embed_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { out_dir: dir.path().to_path_buf(), ..Default::default() };
        let files = emit(&cfg, "demo", &["a", "b"], &[vec!["1".into(), fmt17(0.5)]], &vec![1, 2]).unwrap();
        assert_eq!(files.len(), 2);
        let csv = std::fs::read_to_string(&files[0]).unwrap();
        assert!(csv.starts_with("# config: {"));
        assert!(csv.contains(&format!("# hash: {}", cfg.content_hash())));
        assert!(csv.ends_with("a,b\n1,5.0000000000000000e-1\n"));
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[1]).unwrap()).unwrap();
        assert_eq!(json["hash"], cfg.content_hash());
        assert_eq!(json["data"], serde_json::json!([1, 2]));
    }
}
