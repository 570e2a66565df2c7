//! Historical day records, grouped the way scenarios are sampled.
//!
//! On disk each day is four CSV files in one directory:
//! `day_NN_prices.csv`, `day_NN_weather.csv`, `day_NN_demand.csv` and
//! `day_NN_availability.csv`, each with a header and one row per slot.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{CoreError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PriceDay {
    pub da_buy: Vec<f64>,
    pub da_sell: Vec<f64>,
    pub rt: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeatherDay {
    pub outdoor_temp: Vec<f64>,
    pub irradiance: Vec<f64>,
    /// Output per solar pack, kW.
    pub solar: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemandDay {
    pub base_load: Vec<f64>,
    pub heat_load: Vec<f64>,
    /// Hot-water energy drawn per EWH and slot, kJ. The daily budget is the sum.
    pub ewh_energy: Vec<Vec<f64>>,
    /// Heat loss per EWH and slot, kBtu.
    pub heat_loss: Vec<Vec<f64>>,
}

impl DemandDay {
    pub fn ewh_budget(&self, j: usize) -> f64 {
        self.ewh_energy[j].iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvailabilityDay {
    /// Per PEV, per slot: 1 when parked on campus.
    pub pev: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoricalDataset {
    pub slots_per_day: usize,
    pub prices: Vec<PriceDay>,
    pub weather: Vec<WeatherDay>,
    pub demand: Vec<DemandDay>,
    pub availability: Vec<AvailabilityDay>,
}

impl HistoricalDataset {
    pub fn days(&self) -> usize {
        self.prices.len()
    }

    pub fn n_solar(&self) -> usize {
        self.weather.first().map_or(0, |w| w.solar.len())
    }

    pub fn n_ewh(&self) -> usize {
        self.demand.first().map_or(0, |d| d.ewh_energy.len())
    }

    pub fn n_pev(&self) -> usize {
        self.availability.first().map_or(0, |a| a.pev.len())
    }

    /// Checks lengths, group sizes and value domains.
    pub fn check(&self) -> Result<()> {
        let days = self.days();
        if days == 0 {
            return Err(CoreError::EmptyDataset);
        }
        if self.weather.len() != days || self.demand.len() != days || self.availability.len() != days {
            return Err(CoreError::Dimension("every group needs the same number of days".into()));
        }
        let n = self.slots_per_day;
        let series_ok = |s: &[f64]| s.len() == n;
        for (k, p) in self.prices.iter().enumerate() {
            if ![&p.da_buy, &p.da_sell, &p.rt].iter().all(|s| series_ok(s)) {
                return Err(CoreError::Dimension(format!("prices day {k}")));
            }
            if p.da_buy.iter().chain(&p.da_sell).chain(&p.rt).any(|v| !(*v >= 0.0)) {
                return Err(CoreError::Dimension(format!("negative price on day {k}")));
            }
        }
        for (k, w) in self.weather.iter().enumerate() {
            if w.solar.len() != self.n_solar()
                || !series_ok(&w.outdoor_temp)
                || !series_ok(&w.irradiance)
                || !w.solar.iter().all(|s| series_ok(s))
            {
                return Err(CoreError::Dimension(format!("weather day {k}")));
            }
        }
        for (k, d) in self.demand.iter().enumerate() {
            if d.ewh_energy.len() != self.n_ewh()
                || d.heat_loss.len() != self.n_ewh()
                || !series_ok(&d.base_load)
                || !series_ok(&d.heat_load)
                || !d.ewh_energy.iter().chain(&d.heat_loss).all(|s| series_ok(s))
            {
                return Err(CoreError::Dimension(format!("demand day {k}")));
            }
        }
        for (k, a) in self.availability.iter().enumerate() {
            if a.pev.len() != self.n_pev() || !a.pev.iter().all(|s| s.len() == n) {
                return Err(CoreError::Dimension(format!("availability day {k}")));
            }
            if a.pev.iter().flatten().any(|v| *v > 1) {
                return Err(CoreError::Dimension(format!("non-binary availability on day {k}")));
            }
        }
        Ok(())
    }
}

pub const GROUPS: [&str; 4] = ["prices", "weather", "demand", "availability"];

pub fn day_file(dir: &Path, day: usize, group: &str) -> PathBuf {
    dir.join(format!("day_{:02}_{group}.csv", day + 1))
}

/// A parsed CSV: header order and numeric columns.
struct Table {
    path: PathBuf,
    columns: BTreeMap<String, Vec<f64>>,
    header: Vec<String>,
}

impl Table {
    fn read(path: &Path, slots: usize) -> Result<Table> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| CoreError::csv(path, e))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| CoreError::csv(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(slots); header.len()];
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| CoreError::csv(path, e))?;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| CoreError::Data {
                    file: path.to_path_buf(),
                    message: format!("row {}: `{field}` in column `{}` is not a number", r + 2, header[c]),
                })?;
                cols[c].push(v);
            }
        }
        let found = cols.first().map_or(0, Vec::len);
        if found != slots {
            return Err(CoreError::RaggedDay { file: path.to_path_buf(), expected: slots, found });
        }
        Ok(Table {
            path: path.to_path_buf(),
            columns: header.iter().cloned().zip(cols).collect(),
            header,
        })
    }

    fn take(&mut self, name: &str) -> Result<Vec<f64>> {
        self.columns.remove(name).ok_or_else(|| CoreError::MissingColumn {
            file: self.path.clone(),
            column: name.to_string(),
        })
    }

    /// Columns `prefix0, prefix1, ...` in index order.
    fn indexed(&mut self, prefix: &str) -> Result<Vec<Vec<f64>>> {
        let mut idx: Vec<usize> = self
            .header
            .iter()
            .filter_map(|h| h.strip_prefix(prefix).and_then(|s| s.parse().ok()))
            .collect();
        idx.sort_unstable();
        for (want, &got) in idx.iter().enumerate() {
            if want != got {
                return Err(CoreError::MissingColumn {
                    file: self.path.clone(),
                    column: format!("{prefix}{want}"),
                });
            }
        }
        idx.iter().map(|i| self.take(&format!("{prefix}{i}"))).collect()
    }
}

fn list_days(dir: &Path) -> Result<Vec<usize>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CoreError::io(dir, e))?;
    let mut days = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CoreError::io(dir, e))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(n) = name
            .strip_prefix("day_")
            .and_then(|s| s.strip_suffix("_prices.csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            if n >= 1 {
                days.push(n - 1);
            }
        }
    }
    days.sort_unstable();
    Ok(days)
}

/// Loads every day found in `dir`; days are numbered from 1 and must be contiguous.
pub fn load_historical(dir: &Path, slots_per_day: usize) -> Result<HistoricalDataset> {
    let days = list_days(dir)?;
    if days.is_empty() {
        return Err(CoreError::EmptyDataset);
    }
    if let Some((k, _)) = days.iter().enumerate().find(|(k, d)| *k != **d) {
        return Err(CoreError::Data {
            file: day_file(dir, k, "prices"),
            message: "day files must be numbered contiguously from 01".into(),
        });
    }
    let mut ds = HistoricalDataset {
        slots_per_day,
        prices: Vec::new(),
        weather: Vec::new(),
        demand: Vec::new(),
        availability: Vec::new(),
    };
    for &day in &days {
        let mut t = Table::read(&day_file(dir, day, "prices"), slots_per_day)?;
        let p = PriceDay { da_buy: t.take("da_buy_price")?, da_sell: t.take("da_sell_price")?, rt: t.take("rt_price")? };
        if let Some(v) = p.da_buy.iter().chain(&p.da_sell).chain(&p.rt).find(|v| !(**v >= 0.0)) {
            return Err(CoreError::Data { file: t.path, message: format!("negative price {v}") });
        }
        ds.prices.push(p);

        let mut t = Table::read(&day_file(dir, day, "weather"), slots_per_day)?;
        ds.weather.push(WeatherDay {
            outdoor_temp: t.take("outdoor_temp")?,
            irradiance: t.take("irradiance")?,
            solar: t.indexed("solar_")?,
        });

        let mut t = Table::read(&day_file(dir, day, "demand"), slots_per_day)?;
        ds.demand.push(DemandDay {
            base_load: t.take("base_load")?,
            heat_load: t.take("heat_load")?,
            ewh_energy: t.indexed("ewh_energy_")?,
            heat_loss: t.indexed("ewh_loss_")?,
        });

        let mut t = Table::read(&day_file(dir, day, "availability"), slots_per_day)?;
        let cols = t.indexed("pev_")?;
        let mut pev = Vec::with_capacity(cols.len());
        for (k, col) in cols.iter().enumerate() {
            let mut bits = Vec::with_capacity(col.len());
            for &v in col {
                if v != 0.0 && v != 1.0 {
                    return Err(CoreError::NonBinary { file: t.path.clone(), column: format!("pev_{k}"), value: v });
                }
                bits.push(v as u8);
            }
            pev.push(bits);
        }
        ds.availability.push(AvailabilityDay { pev });
    }
    ds.check()?;
    Ok(ds)
}

fn write_table(path: &Path, header: &[String], cols: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CoreError::csv(path, e))?;
    let mut row = vec!["slot".to_string()];
    row.extend(header.iter().cloned());
    w.write_record(&row).map_err(|e| CoreError::csv(path, e))?;
    let n = cols.first().map_or(0, |c| c.len());
    for t in 0..n {
        row.clear();
        row.push(t.to_string());
        row.extend(cols.iter().map(|c| format!("{:?}", c[t])));
        w.write_record(&row).map_err(|e| CoreError::csv(path, e))?;
    }
    w.flush().map_err(|e| CoreError::io(path, e))
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn save_historical(ds: &HistoricalDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    for day in 0..ds.days() {
        let p = &ds.prices[day];
        write_table(
            &day_file(dir, day, "prices"),
            &["da_buy_price".into(), "da_sell_price".into(), "rt_price".into()],
            &[&p.da_buy, &p.da_sell, &p.rt],
        )?;

        let w = &ds.weather[day];
        let mut header = vec!["outdoor_temp".to_string(), "irradiance".to_string()];
        header.extend(names("solar_", w.solar.len()));
        let mut cols: Vec<&[f64]> = vec![&w.outdoor_temp, &w.irradiance];
        cols.extend(w.solar.iter().map(Vec::as_slice));
        write_table(&day_file(dir, day, "weather"), &header, &cols)?;

        let d = &ds.demand[day];
        let mut header = vec!["base_load".to_string(), "heat_load".to_string()];
        header.extend(names("ewh_energy_", d.ewh_energy.len()));
        header.extend(names("ewh_loss_", d.heat_loss.len()));
        let mut cols: Vec<&[f64]> = vec![&d.base_load, &d.heat_load];
        cols.extend(d.ewh_energy.iter().map(Vec::as_slice));
        cols.extend(d.heat_loss.iter().map(Vec::as_slice));
        write_table(&day_file(dir, day, "demand"), &header, &cols)?;

        let a = &ds.availability[day];
        let header = names("pev_", a.pev.len());
        let as_f: Vec<Vec<f64>> = a.pev.iter().map(|s| s.iter().map(|&b| b as f64).collect()).collect();
        let cols: Vec<&[f64]> = as_f.iter().map(Vec::as_slice).collect();
        write_table(&day_file(dir, day, "availability"), &header, &cols)?;
    }
    Ok(())
}
