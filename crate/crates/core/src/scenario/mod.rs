//! Scenario sets: Monte Carlo product of historical day groups, distances
//! and fast-forward reduction.

mod io;
mod metric;
mod reduce;

use std::borrow::Cow;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::campus::TimeGrid;
use crate::error::{CoreError, Result};
use crate::history::HistoricalDataset;

pub use io::{load_scenario_set, save_scenario_set, Manifest, ManifestEntry};
pub use metric::{scenario_distance, Normalizer};
pub use reduce::{kantorovich, reduce, reduce_with, ReduceOptions, Reduction};

pub const DR_MIN: f64 = 0.8;
pub const DR_MAX: f64 = 1.0;
/// Number of independently sampled day groups.
pub const N_GROUPS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub probability: f64,
    /// Index in the set this scenario was drawn from.
    pub source: usize,
    /// Source day of the price, weather, demand and availability groups.
    pub days: [usize; N_GROUPS],
    pub da_buy: Vec<f64>,
    pub da_sell: Vec<f64>,
    pub rt: Vec<f64>,
    /// Output per solar pack, kW.
    pub solar: Vec<Vec<f64>>,
    pub outdoor_temp: Vec<f64>,
    pub irradiance: Vec<f64>,
    pub base_load: Vec<f64>,
    pub heat_load: Vec<f64>,
    /// Daily hot-water energy per EWH, kJ.
    pub ewh_budget: Vec<f64>,
    /// Per EWH, per slot, kBtu.
    pub heat_loss: Vec<Vec<f64>>,
    /// Per PEV, per slot.
    pub availability: Vec<Vec<u8>>,
    /// Business-hour curtailment level drawn for this scenario.
    pub dr_level: f64,
    /// Per-slot DR signal: `dr_level` in business hours, 1 elsewhere.
    pub dr: Vec<f64>,
}

impl Scenario {
    pub fn slots(&self) -> usize {
        self.da_buy.len()
    }

    pub fn n_solar(&self) -> usize {
        self.solar.len()
    }

    pub fn n_ewh(&self) -> usize {
        self.ewh_budget.len()
    }

    pub fn n_pev(&self) -> usize {
        self.availability.len()
    }

    pub fn solar_total(&self, t: usize) -> f64 {
        self.solar.iter().map(|s| s[t]).sum()
    }

    /// Checks series lengths and value domains.
    pub fn check(&self, slots: usize) -> Result<()> {
        let per_slot = [
            &self.da_buy,
            &self.da_sell,
            &self.rt,
            &self.outdoor_temp,
            &self.irradiance,
            &self.base_load,
            &self.heat_load,
            &self.dr,
        ];
        let ok = per_slot.iter().all(|s| s.len() == slots)
            && self.solar.iter().chain(&self.heat_loss).all(|s| s.len() == slots)
            && self.availability.iter().all(|s| s.len() == slots)
            && self.heat_loss.len() == self.ewh_budget.len();
        if !ok {
            return Err(CoreError::Dimension(format!(
                "scenario {} does not cover {slots} slots",
                self.source
            )));
        }
        if !(self.probability > 0.0 && self.probability <= 1.0) {
            return Err(CoreError::Dimension(format!("scenario {} probability {}", self.source, self.probability)));
        }
        if self.dr.iter().any(|v| !(DR_MIN - 1e-12..=DR_MAX + 1e-12).contains(v)) {
            return Err(CoreError::Dimension(format!("scenario {} DR signal outside [0.8, 1]", self.source)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Store {
    Explicit(Vec<Scenario>),
    /// All day combinations of `hist`, equiprobable, with one DR level each.
    Product {
        hist: Arc<HistoricalDataset>,
        levels: Vec<f64>,
        time: TimeGrid,
    },
}

#[derive(Clone, Debug)]
pub struct ScenarioSet {
    store: Store,
    pub seed: u64,
    pub source: String,
}

fn dr_series(level: f64, time: &TimeGrid) -> Vec<f64> {
    (0..time.slots_per_day)
        .map(|t| if time.is_business(t) { level } else { 1.0 })
        .collect()
}

/// Neumaier-compensated sum.
pub fn exact_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub const PROBABILITY_TOL: f64 = 1e-12;

impl ScenarioSet {
    /// Builds an explicit set; probabilities must already sum to 1.
    pub fn from_scenarios(scenarios: Vec<Scenario>, seed: u64, source: impl Into<String>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(CoreError::NoScenarios);
        }
        let slots = scenarios[0].slots();
        for s in &scenarios {
            s.check(slots)?;
            if s.n_solar() != scenarios[0].n_solar()
                || s.n_ewh() != scenarios[0].n_ewh()
                || s.n_pev() != scenarios[0].n_pev()
            {
                return Err(CoreError::Dimension("scenarios have different device counts".into()));
            }
        }
        let total = exact_sum(scenarios.iter().map(|s| s.probability));
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(CoreError::Dimension(format!("probabilities sum to {total}")));
        }
        Ok(ScenarioSet { store: Store::Explicit(scenarios), seed, source: source.into() })
    }

    pub fn len(&self) -> usize {
        match &self.store {
            Store::Explicit(v) => v.len(),
            Store::Product { levels, .. } => levels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_product(&self) -> bool {
        matches!(self.store, Store::Product { .. })
    }

    pub fn probability(&self, i: usize) -> f64 {
        match &self.store {
            Store::Explicit(v) => v[i].probability,
            Store::Product { levels, .. } => 1.0 / levels.len() as f64,
        }
    }

    pub fn slots(&self) -> usize {
        match &self.store {
            Store::Explicit(v) => v[0].slots(),
            Store::Product { time, .. } => time.slots_per_day,
        }
    }

    /// Scenario `i`, materialized on demand for product sets.
    pub fn get(&self, i: usize) -> Cow<'_, Scenario> {
        match &self.store {
            Store::Explicit(v) => Cow::Borrowed(&v[i]),
            Store::Product { hist, levels, time } => {
                let days = split_index(i, hist.days());
                let (p, w, d, a) = (
                    &hist.prices[days[0]],
                    &hist.weather[days[1]],
                    &hist.demand[days[2]],
                    &hist.availability[days[3]],
                );
                Cow::Owned(Scenario {
                    probability: 1.0 / levels.len() as f64,
                    source: i,
                    days,
                    da_buy: p.da_buy.clone(),
                    da_sell: p.da_sell.clone(),
                    rt: p.rt.clone(),
                    solar: w.solar.clone(),
                    outdoor_temp: w.outdoor_temp.clone(),
                    irradiance: w.irradiance.clone(),
                    base_load: d.base_load.clone(),
                    heat_load: d.heat_load.clone(),
                    ewh_budget: (0..d.ewh_energy.len()).map(|j| d.ewh_budget(j)).collect(),
                    heat_loss: d.heat_loss.clone(),
                    availability: a.pev.clone(),
                    dr_level: levels[i],
                    dr: dr_series(levels[i], time),
                })
            }
        }
    }

    pub fn scenarios(&self) -> Vec<Scenario> {
        (0..self.len()).map(|i| self.get(i).into_owned()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Cow<'_, Scenario>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn total_probability(&self) -> f64 {
        exact_sum((0..self.len()).map(|i| self.probability(i)))
    }

    pub(crate) fn product_parts(&self) -> Option<(&HistoricalDataset, &[f64], &TimeGrid)> {
        match &self.store {
            Store::Product { hist, levels, time } => Some((hist, levels, time)),
            Store::Explicit(_) => None,
        }
    }
}

/// Day index of each group for product index `i` (price group most significant).
pub fn split_index(i: usize, days: usize) -> [usize; N_GROUPS] {
    let mut out = [0; N_GROUPS];
    let mut r = i;
    for g in (0..N_GROUPS).rev() {
        out[g] = r % days;
        r /= days;
    }
    out
}

pub fn join_index(days_idx: &[usize; N_GROUPS], days: usize) -> usize {
    days_idx.iter().fold(0, |acc, &d| acc * days + d)
}

/// All `days^4` day combinations of `hist`, each with probability `1/days^4`
/// and a DR level drawn uniformly on [0.8, 1] from `seed`.
pub fn generate(hist: &HistoricalDataset, time: &TimeGrid, seed: u64) -> Result<ScenarioSet> {
    if hist.days() == 0 {
        return Err(CoreError::EmptyDataset);
    }
    hist.check()?;
    if hist.slots_per_day != time.slots_per_day {
        return Err(CoreError::Dimension(format!(
            "history has {} slots per day, time grid {}",
            hist.slots_per_day, time.slots_per_day
        )));
    }
    let n = hist
        .days()
        .checked_pow(N_GROUPS as u32)
        .ok_or_else(|| CoreError::Dimension("too many days for a product set".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = (0..n).map(|_| rng.gen_range(DR_MIN..=DR_MAX)).collect();
    Ok(ScenarioSet {
        store: Store::Product { hist: Arc::new(hist.clone()), levels, time: time.clone() },
        seed,
        source: format!("product of {} historical days", hist.days()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_campus_config;
    use crate::synth::generate_history;

    fn small() -> (crate::CampusModel, HistoricalDataset) {
        let m = load_campus_config(r#"{"time": {"slots_per_day": 24}, "buildings": [{}, {}], "pevs": {"count": 3}}"#).unwrap();
        let h = generate_history(&m, 2, 3);
        (m, h)
    }

    #[test]
    fn index_split_round_trip() {
        for i in 0..81 {
            assert_eq!(join_index(&split_index(i, 3), 3), i);
        }
        assert_eq!(split_index(1, 30), [0, 0, 0, 1]);
        assert_eq!(split_index(27_000, 30), [1, 0, 0, 0]);
    }

    #[test]
    fn two_days_give_sixteen() {
        let (m, h) = small();
        let set = generate(&h, &m.time, 5).unwrap();
        assert_eq!(set.len(), 16);
        assert!((set.total_probability() - 1.0).abs() < 1e-12);
        let s = set.get(5);
        s.check(24).unwrap();
        assert_eq!(s.days, [0, 1, 0, 1]);
        assert!(s.dr.iter().enumerate().all(|(t, v)| m.time.is_business(t) || *v == 1.0));
    }

    #[test]
    fn seeds_only_change_dr() {
        let (m, h) = small();
        let a = generate(&h, &m.time, 1).unwrap();
        let b = generate(&h, &m.time, 2).unwrap();
        let a3 = a.get(3);
        let b3 = b.get(3);
        assert_eq!(a3.base_load, b3.base_load);
        assert_eq!(a3.da_buy, b3.da_buy);
        assert_ne!(a3.dr_level, b3.dr_level);
        assert_eq!(generate(&h, &m.time, 1).unwrap().get(3).dr, a3.dr);
    }

    #[test]
    fn one_day_one_scenario() {
        let (m, mut h) = small();
        h.prices.truncate(1);
        h.weather.truncate(1);
        h.demand.truncate(1);
        h.availability.truncate(1);
        let set = generate(&h, &m.time, 0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.probability(0), 1.0);
    }

    #[test]
    fn empty_history_errors() {
        let (m, mut h) = small();
        h.prices.clear();
        h.weather.clear();
        h.demand.clear();
        h.availability.clear();
        assert!(matches!(generate(&h, &m.time, 0), Err(CoreError::EmptyDataset)));
    }
}
