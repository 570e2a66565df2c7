//! Scenario set directory: one CSV per scenario plus `manifest.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioSet, N_GROUPS};
use crate::error::{CoreError, Result};

/// Largest set written scenario by scenario.
pub const EXPORT_LIMIT: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub probability: f64,
    pub source_index: usize,
    /// Source day of the prices, weather, demand and availability groups.
    pub days: [usize; N_GROUPS],
    pub dr_level: f64,
    /// Daily hot-water energy per EWH, kJ.
    pub ewh_budget: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub seed: u64,
    pub source: String,
    pub slots_per_day: usize,
    pub groups: [String; N_GROUPS],
    pub n_solar: usize,
    pub n_ewh: usize,
    pub n_pev: usize,
    pub scenarios: Vec<ManifestEntry>,
}

fn header(s: &Scenario) -> Vec<String> {
    let mut h: Vec<String> = ["slot", "da_buy_price", "da_sell_price", "rt_price", "outdoor_temp", "irradiance"]
        .iter()
        .map(|x| x.to_string())
        .collect();
    h.extend((0..s.n_solar()).map(|m| format!("solar_{m}")));
    h.extend(["base_load", "heat_load", "dr"].iter().map(|x| x.to_string()));
    h.extend((0..s.n_ewh()).map(|j| format!("ewh_loss_{j}")));
    h.extend((0..s.n_pev()).map(|k| format!("pev_{k}")));
    h
}

fn write_scenario(path: &Path, s: &Scenario) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CoreError::csv(path, e))?;
    w.write_record(header(s)).map_err(|e| CoreError::csv(path, e))?;
    for t in 0..s.slots() {
        let mut row = vec![
            t.to_string(),
            format!("{:?}", s.da_buy[t]),
            format!("{:?}", s.da_sell[t]),
            format!("{:?}", s.rt[t]),
            format!("{:?}", s.outdoor_temp[t]),
            format!("{:?}", s.irradiance[t]),
        ];
        row.extend(s.solar.iter().map(|x| format!("{:?}", x[t])));
        row.push(format!("{:?}", s.base_load[t]));
        row.push(format!("{:?}", s.heat_load[t]));
        row.push(format!("{:?}", s.dr[t]));
        row.extend(s.heat_loss.iter().map(|x| format!("{:?}", x[t])));
        row.extend(s.availability.iter().map(|x| x[t].to_string()));
        w.write_record(&row).map_err(|e| CoreError::csv(path, e))?;
    }
    w.flush().map_err(|e| CoreError::io(path, e))
}

pub fn save_scenario_set(set: &ScenarioSet, dir: &Path) -> Result<Manifest> {
    if set.len() > EXPORT_LIMIT {
        return Err(CoreError::Dimension(format!(
            "{} scenarios exceed the export limit of {EXPORT_LIMIT}; reduce first",
            set.len()
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    let first = set.get(0);
    let mut entries = Vec::with_capacity(set.len());
    for (i, s) in set.iter().enumerate() {
        let file = format!("scenario_{i:04}.csv");
        write_scenario(&dir.join(&file), &s)?;
        entries.push(ManifestEntry {
            file,
            probability: s.probability,
            source_index: s.source,
            days: s.days,
            dr_level: s.dr_level,
            ewh_budget: s.ewh_budget.clone(),
        });
    }
    let manifest = Manifest {
        seed: set.seed,
        source: set.source.clone(),
        slots_per_day: set.slots(),
        groups: ["prices", "weather", "demand", "availability"].map(String::from),
        n_solar: first.n_solar(),
        n_ewh: first.n_ewh(),
        n_pev: first.n_pev(),
        scenarios: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CoreError::io(&path, e))?;
    Ok(manifest)
}

fn column(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| CoreError::MissingColumn {
        file: path.to_path_buf(),
        column: name.to_string(),
    })
}

fn read_scenario(dir: &Path, m: &Manifest, e: &ManifestEntry) -> Result<Scenario> {
    let path = dir.join(&e.file);
    let mut rdr = csv::Reader::from_path(&path).map_err(|err| CoreError::csv(&path, err))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|err| CoreError::csv(&path, err))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|err| CoreError::csv(&path, err))?;
        let mut row = Vec::with_capacity(rec.len());
        for field in rec.iter() {
            row.push(field.parse::<f64>().map_err(|_| CoreError::Data {
                file: path.clone(),
                message: format!("row {}: `{field}` is not a number", r + 2),
            })?);
        }
        rows.push(row);
    }
    if rows.len() != m.slots_per_day {
        return Err(CoreError::RaggedDay { file: path, expected: m.slots_per_day, found: rows.len() });
    }
    let col = |name: &str| -> Result<Vec<f64>> {
        let c = column(&path, &header, name)?;
        Ok(rows.iter().map(|r| r[c]).collect())
    };
    let mut availability = Vec::with_capacity(m.n_pev);
    for k in 0..m.n_pev {
        let name = format!("pev_{k}");
        let mut bits = Vec::with_capacity(rows.len());
        for v in col(&name)? {
            if v != 0.0 && v != 1.0 {
                return Err(CoreError::NonBinary { file: path.clone(), column: name, value: v });
            }
            bits.push(v as u8);
        }
        availability.push(bits);
    }
    Ok(Scenario {
        probability: e.probability,
        source: e.source_index,
        days: e.days,
        da_buy: col("da_buy_price")?,
        da_sell: col("da_sell_price")?,
        rt: col("rt_price")?,
        solar: (0..m.n_solar).map(|i| col(&format!("solar_{i}"))).collect::<Result<_>>()?,
        outdoor_temp: col("outdoor_temp")?,
        irradiance: col("irradiance")?,
        base_load: col("base_load")?,
        heat_load: col("heat_load")?,
        ewh_budget: e.ewh_budget.clone(),
        heat_loss: (0..m.n_ewh).map(|j| col(&format!("ewh_loss_{j}"))).collect::<Result<_>>()?,
        availability,
        dr_level: e.dr_level,
        dr: col("dr")?,
    })
}

pub fn load_scenario_set(dir: &Path) -> Result<ScenarioSet> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CoreError::io(&path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| CoreError::Config {
        path: format!("manifest.json:{}", e.path()),
        message: e.into_inner().to_string(),
    })?;
    let scenarios = manifest
        .scenarios
        .iter()
        .map(|e| read_scenario(dir, &manifest, e))
        .collect::<Result<Vec<_>>>()?;
    ScenarioSet::from_scenarios(scenarios, manifest.seed, manifest.source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_campus_config;
    use crate::scenario::{generate, reduce};
    use crate::synth::generate_history;

    #[test]
    fn round_trip() {
        let m = load_campus_config(r#"{"time": {"slots_per_day": 24}, "buildings": [{}, {}], "pevs": {"count": 3}}"#).unwrap();
        let h = generate_history(&m, 2, 3);
        let set = reduce(&generate(&h, &m.time, 5).unwrap(), 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_scenario_set(&set, dir.path()).unwrap();
        let back = load_scenario_set(dir.path()).unwrap();
        assert_eq!(back.scenarios(), set.scenarios());
        assert_eq!(back.seed, set.seed);
    }

    #[test]
    fn missing_manifest_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_scenario_set(dir.path()), Err(CoreError::Io { .. })));
    }
}
