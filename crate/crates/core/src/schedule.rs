//! Solved day-ahead bids and per-scenario dispatch in physical units.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Dispatch of one scenario. Device series are indexed `[device][slot]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dispatch {
    pub scenario: usize,
    pub probability: f64,
    pub rt_buy: Vec<f64>,
    pub rt_sell: Vec<f64>,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    /// Electrical power per building, kW.
    pub hvac_power: Vec<Vec<f64>>,
    /// Indoor temperature per building as carried by the optimization model.
    pub hvac_indoor: Vec<Vec<f64>>,
    pub pev_power: Vec<Vec<f64>>,
    pub pev_energy: Vec<Vec<f64>>,
    pub ewh_power: Vec<Vec<f64>>,
    pub ewh_temp: Vec<Vec<f64>>,
    /// Heat per boiler, kBtu per slot.
    pub boiler_heat: Vec<Vec<f64>>,
    pub es_charge: Vec<Vec<f64>>,
    pub es_discharge: Vec<Vec<f64>>,
    pub es_energy: Vec<Vec<f64>>,
    /// 1 when the unit may charge, 0 when it may discharge.
    pub es_mode: Vec<Vec<f64>>,
    /// Comfort variables; 0 outside business hours.
    pub comfort_hvac: Vec<Vec<f64>>,
    pub comfort_pev: Vec<Vec<f64>>,
    pub comfort_ewh: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub slots: usize,
    pub da_buy: Vec<f64>,
    pub da_sell: Vec<f64>,
    pub dispatch: Vec<Dispatch>,
}

/// Fixed six-decimal rendering; tiny magnitudes and negative zero print as 0.
pub fn fmt_num(x: f64) -> String {
    if x.abs() < 5e-10 {
        return "0.000000".to_string();
    }
    format!("{x:.6}")
}

impl Schedule {
    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["scenario", "slot", "da_buy", "da_sell", "rt_buy", "rt_sell", "psi1", "psi2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let Some(d) = self.dispatch.first() else { return h };
        let mut add = |prefix: &str, n: usize| h.extend((0..n).map(|i| format!("{prefix}_{i}")));
        add("hvac_p", d.hvac_power.len());
        add("indoor", d.hvac_indoor.len());
        add("pev_p", d.pev_power.len());
        add("pev_e", d.pev_energy.len());
        add("ewh_l", d.ewh_power.len());
        add("ewh_c", d.ewh_temp.len());
        add("boiler_h", d.boiler_heat.len());
        add("es_ch", d.es_charge.len());
        add("es_dis", d.es_discharge.len());
        add("es_e", d.es_energy.len());
        add("es_u", d.es_mode.len());
        h
    }

    /// One row per scenario and slot.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for d in &self.dispatch {
            for t in 0..self.slots {
                let mut row = vec![d.scenario.to_string(), (t + 1).to_string()];
                for v in [self.da_buy[t], self.da_sell[t], d.rt_buy[t], d.rt_sell[t], d.psi1[t], d.psi2[t]] {
                    row.push(fmt_num(v));
                }
                for group in [
                    &d.hvac_power,
                    &d.hvac_indoor,
                    &d.pev_power,
                    &d.pev_energy,
                    &d.ewh_power,
                    &d.ewh_temp,
                    &d.boiler_heat,
                    &d.es_charge,
                    &d.es_discharge,
                    &d.es_energy,
                    &d.es_mode,
                ] {
                    row.extend(group.iter().map(|s| fmt_num(s[t])));
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| CoreError::csv(path, e))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("schedule serializes");
        std::fs::write(path, text).map_err(|e| CoreError::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Schedule> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CoreError::Data { file: path.to_path_buf(), message: e.to_string() })
    }
}
