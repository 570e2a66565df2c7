//! Two-settlement accounting of a solved schedule against one scenario.

use campus_core::scenario::Scenario;
use campus_core::schedule::{fmt_num, Dispatch, Schedule};
use campus_core::{CampusModel, CoreError};
use serde::{Deserialize, Serialize};

/// Cost components in one currency or in unified units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub da_cost: f64,
    pub rt_adjustment_cost: f64,
    pub penalty_cost: f64,
    pub pev_degradation: f64,
    pub es_degradation: f64,
    pub gas_cost: f64,
    pub total: f64,
}

impl CostBreakdown {
    fn close(mut self) -> Self {
        self.total = self.da_cost
            + self.rt_adjustment_cost
            + self.penalty_cost
            + self.pev_degradation
            + self.es_degradation
            + self.gas_cost;
        self
    }

    fn fields(&self) -> [f64; 7] {
        [
            self.da_cost,
            self.rt_adjustment_cost,
            self.penalty_cost,
            self.pev_degradation,
            self.es_degradation,
            self.gas_cost,
            self.total,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementResult {
    pub scenario: usize,
    pub probability: f64,
    /// Dollars.
    pub cost: CostBreakdown,
    /// Power terms divided by `p_base`, gas by boiler capacity.
    pub unified: CostBreakdown,
}

fn check(name: &str, len: usize, n: usize) -> Result<(), CoreError> {
    if len != n {
        return Err(CoreError::Dimension(format!("{name}: {len} slots, expected {n}")));
    }
    Ok(())
}

/// Settles the day-ahead bids `da` and the dispatch `d` at the prices of `sc`.
///
/// Market and degradation charges are energy charges (kW times slot hours);
/// the mismatch penalty is per kW, and boiler heat is already per slot.
pub fn settle(
    da: (&[f64], &[f64]),
    d: &Dispatch,
    sc: &Scenario,
    model: &CampusModel,
) -> Result<SettlementResult, CoreError> {
    let n = model.time.slots_per_day;
    let dt = model.time.slot_hours;
    let pb = model.p_base;
    for (name, len) in [
        ("da_buy", da.0.len()),
        ("da_sell", da.1.len()),
        ("rt_buy", d.rt_buy.len()),
        ("rt_sell", d.rt_sell.len()),
        ("scenario", sc.slots()),
        ("gas_price", model.grid.gas_price.len()),
    ] {
        check(name, len, n)?;
    }
    let storages = model.storages();
    let boilers = model.boilers();
    if d.pev_power.len() != model.pevs.len()
        || d.es_charge.len() != storages.len()
        || d.es_discharge.len() != storages.len()
        || d.boiler_heat.len() != boilers.len()
    {
        return Err(CoreError::Dimension("dispatch device counts differ from the campus".into()));
    }

    let mut c = CostBreakdown::default();
    let mut gas_unified = 0.0;
    let cp = model.grid.penalty_cost;
    for t in 0..n {
        c.da_cost += (sc.da_buy[t] * da.0[t] - sc.da_sell[t] * da.1[t]) * dt;
        c.rt_adjustment_cost += sc.rt[t] * ((d.rt_buy[t] - da.0[t]) - (d.rt_sell[t] - da.1[t])) * dt;
        c.penalty_cost += cp * ((da.0[t] - d.rt_buy[t]).abs() + (da.1[t] - d.rt_sell[t]).abs());
        for (k, p) in model.pevs.iter().enumerate() {
            c.pev_degradation += p.degradation_cost * d.pev_power[k][t] * p.eta_charge * dt;
        }
        for (u, (_, e)) in storages.iter().enumerate() {
            c.es_degradation += e.degradation_cost
                * (d.es_charge[u][t] * e.eta_charge + d.es_discharge[u][t] / e.eta_discharge)
                * dt;
        }
        for (b, (_, h)) in boilers.iter().enumerate() {
            let g = model.grid.gas_price[t] * d.boiler_heat[b][t];
            c.gas_cost += g;
            gas_unified += g / h.h_max;
        }
    }
    let cost = c.close();
    let unified = CostBreakdown {
        da_cost: cost.da_cost / pb,
        rt_adjustment_cost: cost.rt_adjustment_cost / pb,
        penalty_cost: cost.penalty_cost / pb,
        pev_degradation: cost.pev_degradation / pb,
        es_degradation: cost.es_degradation / pb,
        gas_cost: gas_unified,
        total: 0.0,
    }
    .close();
    Ok(SettlementResult { scenario: d.scenario, probability: d.probability, cost, unified })
}

/// Settlement of every scenario plus the probability-weighted expectation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementTable {
    pub scenarios: Vec<SettlementResult>,
    pub expected: CostBreakdown,
    pub expected_unified: CostBreakdown,
}

pub fn settle_all(schedule: &Schedule, scenarios: &[Scenario], model: &CampusModel) -> Result<SettlementTable, CoreError> {
    if scenarios.len() != schedule.dispatch.len() {
        return Err(CoreError::Dimension(format!(
            "{} dispatches for {} scenarios",
            schedule.dispatch.len(),
            scenarios.len()
        )));
    }
    let rows = schedule
        .dispatch
        .iter()
        .zip(scenarios)
        .map(|(d, sc)| settle((&schedule.da_buy, &schedule.da_sell), d, sc, model))
        .collect::<Result<Vec<_>, _>>()?;
    let expect = |f: &dyn Fn(&SettlementResult) -> CostBreakdown| {
        let mut e = CostBreakdown::default();
        for r in &rows {
            let b = f(r);
            e.da_cost += r.probability * b.da_cost;
            e.rt_adjustment_cost += r.probability * b.rt_adjustment_cost;
            e.penalty_cost += r.probability * b.penalty_cost;
            e.pev_degradation += r.probability * b.pev_degradation;
            e.es_degradation += r.probability * b.es_degradation;
            e.gas_cost += r.probability * b.gas_cost;
        }
        e.close()
    };
    let expected = expect(&|r| r.cost);
    let expected_unified = expect(&|r| r.unified);
    Ok(SettlementTable { scenarios: rows, expected, expected_unified })
}

const COMPONENTS: [&str; 7] = ["da_cost", "rt_adjustment_cost", "penalty_cost", "pev_degradation", "es_degradation", "gas_cost", "total"];

impl SettlementTable {
    /// One row per scenario and an `expected` row; dollar columns, then unified ones.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["scenario".to_string(), "probability".into()];
        header.extend(COMPONENTS.iter().map(|c| c.to_string()));
        header.extend(COMPONENTS.iter().map(|c| format!("unified_{c}")));
        w.write_record(&header)?;
        let row = |id: String, p: f64, a: &CostBreakdown, b: &CostBreakdown| {
            let mut r = vec![id, fmt_num(p)];
            r.extend(a.fields().iter().chain(b.fields().iter()).map(|v| format!("{v:.9}")));
            r
        };
        for s in &self.scenarios {
            w.write_record(row(s.scenario.to_string(), s.probability, &s.cost, &s.unified))?;
        }
        w.write_record(row("expected".into(), 1.0, &self.expected, &self.expected_unified))?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use campus_core::config::load_campus_config;

    fn bare_model() -> CampusModel {
        load_campus_config(
            r#"{"buildings": [{"ewhs": [], "boilers": [], "storages": []}],
                "pevs": {"count": 0},
                "grid": {"penalty_cost": 0.01, "gas_price": 0.0}}"#,
        )
        .unwrap()
    }

    fn flat_scenario(n: usize) -> Scenario {
        Scenario {
            probability: 1.0,
            source: 0,
            days: [0; 4],
            da_buy: vec![0.0; n],
            da_sell: vec![0.0; n],
            rt: vec![0.0; n],
            solar: vec![vec![0.0; n]],
            outdoor_temp: vec![25.0; n],
            irradiance: vec![0.0; n],
            base_load: vec![0.0; n],
            heat_load: vec![0.0; n],
            ewh_budget: vec![],
            heat_loss: vec![],
            availability: vec![],
            dr_level: 1.0,
            dr: vec![1.0; n],
        }
    }

    fn empty_dispatch(n: usize) -> Dispatch {
        Dispatch {
            probability: 1.0,
            rt_buy: vec![0.0; n],
            rt_sell: vec![0.0; n],
            psi1: vec![0.0; n],
            psi2: vec![0.0; n],
            hvac_power: vec![vec![0.0; n]],
            ..Default::default()
        }
    }

    #[test]
    fn single_slot_hand_example() {
        let m = bare_model();
        let n = m.time.slots_per_day;
        let mut sc = flat_scenario(n);
        sc.da_buy[0] = 0.05;
        sc.rt[0] = 0.04;
        let mut d = empty_dispatch(n);
        d.rt_buy[0] = 90.0;
        let mut buy = vec![0.0; n];
        buy[0] = 100.0;
        let sell = vec![0.0; n];
        let r = settle((&buy, &sell), &d, &sc, &m).unwrap();
        assert!((r.cost.da_cost - 1.25).abs() < 1e-12);
        assert!((r.cost.rt_adjustment_cost + 0.10).abs() < 1e-12);
        assert!((r.cost.penalty_cost - 0.10).abs() < 1e-12);
        assert!((r.cost.total - 1.25).abs() < 1e-12);
        assert!((r.unified.total - 1.25 / m.p_base).abs() < 1e-15);
    }

    #[test]
    fn matching_positions_have_no_penalty() {
        let m = bare_model();
        let n = m.time.slots_per_day;
        let sc = flat_scenario(n);
        let mut d = empty_dispatch(n);
        d.rt_buy = (0..n).map(|t| t as f64).collect();
        let buy = d.rt_buy.clone();
        let r = settle((&buy, &vec![0.0; n]), &d, &sc, &m).unwrap();
        assert_eq!(r.cost.penalty_cost, 0.0);
    }

    #[test]
    fn short_series_is_dimension_error() {
        let m = bare_model();
        let n = m.time.slots_per_day;
        let d = empty_dispatch(n - 1);
        let r = settle((&vec![0.0; n], &vec![0.0; n]), &d, &flat_scenario(n), &m);
        assert!(matches!(r, Err(CoreError::Dimension(_))));
    }
}
