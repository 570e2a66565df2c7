//! Z-score distance between scenarios.
//!
//! Each named series gets one scale: its probability-weighted standard
//! deviation over all scenarios and slots. A constant series uses scale 1.

use std::borrow::Cow;

use super::{Scenario, ScenarioSet};
use crate::error::{CoreError, Result};
use crate::history::HistoricalDataset;
use crate::par::Exec;

/// Per-series scale factors, in [`series`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalizer {
    pub names: Vec<String>,
    pub scale: Vec<f64>,
}

/// Named numeric series of a scenario in a fixed order.
pub fn series(s: &Scenario) -> Vec<(String, Cow<'_, [f64]>)> {
    let mut out: Vec<(String, Cow<'_, [f64]>)> = vec![
        ("da_buy".into(), Cow::Borrowed(&s.da_buy[..])),
        ("da_sell".into(), Cow::Borrowed(&s.da_sell[..])),
        ("rt".into(), Cow::Borrowed(&s.rt[..])),
        ("outdoor_temp".into(), Cow::Borrowed(&s.outdoor_temp[..])),
        ("irradiance".into(), Cow::Borrowed(&s.irradiance[..])),
    ];
    for (m, x) in s.solar.iter().enumerate() {
        out.push((format!("solar_{m}"), Cow::Borrowed(&x[..])));
    }
    out.push(("base_load".into(), Cow::Borrowed(&s.base_load[..])));
    out.push(("heat_load".into(), Cow::Borrowed(&s.heat_load[..])));
    for (j, x) in s.ewh_budget.iter().enumerate() {
        out.push((format!("ewh_budget_{j}"), Cow::Owned(vec![*x])));
    }
    for (j, x) in s.heat_loss.iter().enumerate() {
        out.push((format!("heat_loss_{j}"), Cow::Borrowed(&x[..])));
    }
    for (k, x) in s.availability.iter().enumerate() {
        out.push((format!("pev_{k}"), Cow::Owned(x.iter().map(|&b| b as f64).collect())));
    }
    out.push(("dr".into(), Cow::Borrowed(&s.dr[..])));
    out
}

fn std_or_one(sum: f64, sum_sq: f64, weight: f64) -> f64 {
    if weight <= 0.0 {
        return 1.0;
    }
    let mean = sum / weight;
    let var = (sum_sq / weight - mean * mean).max(0.0);
    let sd = var.sqrt();
    if sd > 1e-12 * mean.abs().max(1.0) {
        sd
    } else {
        1.0
    }
}

impl Normalizer {
    pub fn unit(s: &Scenario) -> Normalizer {
        let names: Vec<String> = series(s).into_iter().map(|(n, _)| n).collect();
        Normalizer { scale: vec![1.0; names.len()], names }
    }

    /// Scales from every scenario of `set`, weighted by probability.
    pub fn fit(set: &ScenarioSet) -> Normalizer {
        if let Some((hist, levels, time)) = set.product_parts() {
            return fit_product(hist, levels, time.business_slots(), time.slots_per_day);
        }
        let first = set.get(0);
        let names: Vec<String> = series(&first).into_iter().map(|(n, _)| n).collect();
        let mut acc = vec![(0.0, 0.0, 0.0); names.len()];
        for s in set.iter() {
            let p = s.probability;
            for (k, (_, x)) in series(&s).iter().enumerate() {
                for v in x.iter() {
                    acc[k].0 += p * v;
                    acc[k].1 += p * v * v;
                    acc[k].2 += p;
                }
            }
        }
        let scale = acc.iter().map(|&(s, q, w)| std_or_one(s, q, w)).collect();
        Normalizer { names, scale }
    }
}

fn day_moments<'a>(days: impl Iterator<Item = &'a [f64]>) -> (f64, f64, f64) {
    let mut acc = (0.0, 0.0, 0.0);
    for x in days {
        for v in x {
            acc.0 += v;
            acc.1 += v * v;
            acc.2 += 1.0;
        }
    }
    acc
}

/// Product sets are uniform over the days of each group, so day moments suffice.
fn fit_product(hist: &HistoricalDataset, levels: &[f64], business: usize, slots: usize) -> Normalizer {
    let mut names = Vec::new();
    let mut scale = Vec::new();
    let mut push = |name: String, m: (f64, f64, f64)| {
        names.push(name);
        scale.push(std_or_one(m.0, m.1, m.2));
    };
    push("da_buy".into(), day_moments(hist.prices.iter().map(|p| &p.da_buy[..])));
    push("da_sell".into(), day_moments(hist.prices.iter().map(|p| &p.da_sell[..])));
    push("rt".into(), day_moments(hist.prices.iter().map(|p| &p.rt[..])));
    push("outdoor_temp".into(), day_moments(hist.weather.iter().map(|w| &w.outdoor_temp[..])));
    push("irradiance".into(), day_moments(hist.weather.iter().map(|w| &w.irradiance[..])));
    for m in 0..hist.n_solar() {
        push(format!("solar_{m}"), day_moments(hist.weather.iter().map(|w| &w.solar[m][..])));
    }
    push("base_load".into(), day_moments(hist.demand.iter().map(|d| &d.base_load[..])));
    push("heat_load".into(), day_moments(hist.demand.iter().map(|d| &d.heat_load[..])));
    let budgets: Vec<Vec<f64>> = (0..hist.n_ewh())
        .map(|j| hist.demand.iter().map(|d| d.ewh_budget(j)).collect())
        .collect();
    for (j, b) in budgets.iter().enumerate() {
        push(format!("ewh_budget_{j}"), day_moments(std::iter::once(&b[..])));
    }
    for j in 0..hist.n_ewh() {
        push(format!("heat_loss_{j}"), day_moments(hist.demand.iter().map(|d| &d.heat_loss[j][..])));
    }
    for k in 0..hist.n_pev() {
        let mut m = (0.0, 0.0, 0.0);
        for a in &hist.availability {
            for &b in &a.pev[k] {
                let v = b as f64;
                m.0 += v;
                m.1 += v * v;
                m.2 += 1.0;
            }
        }
        push(format!("pev_{k}"), m);
    }
    // Business slots carry the level, the rest carry 1.
    let n = levels.len() as f64;
    let off = (slots - business) as f64;
    let s: f64 = levels.iter().sum();
    let q: f64 = levels.iter().map(|v| v * v).sum();
    push(
        "dr".into(),
        (s * business as f64 + n * off, q * business as f64 + n * off, n * slots as f64),
    );
    Normalizer { names, scale }
}

/// Euclidean distance between z-scored concatenations of all series.
pub fn scenario_distance(a: &Scenario, b: &Scenario, norm: &Normalizer) -> Result<f64> {
    let sa = series(a);
    let sb = series(b);
    if sa.len() != sb.len() || sa.len() != norm.scale.len() {
        return Err(CoreError::Dimension(format!(
            "series count {} vs {} (normalizer {})",
            sa.len(),
            sb.len(),
            norm.scale.len()
        )));
    }
    let mut sum = 0.0;
    for (k, ((na, xa), (nb, xb))) in sa.iter().zip(&sb).enumerate() {
        if na != nb || xa.len() != xb.len() {
            return Err(CoreError::Dimension(format!("series `{na}` vs `{nb}`")));
        }
        let inv = 1.0 / norm.scale[k];
        for (u, v) in xa.iter().zip(xb.iter()) {
            let z = (u - v) * inv;
            sum += z * z;
        }
    }
    Ok(sum.sqrt())
}

/// Distance oracle used by the reduction.
pub(crate) trait Metric: Sync {
    fn len(&self) -> usize;
    fn prob(&self, i: usize) -> f64;
    fn dist(&self, i: usize, j: usize) -> f64;
}

pub(crate) struct MatrixMetric {
    n: usize,
    p: Vec<f64>,
    d: Vec<f64>,
}

impl MatrixMetric {
    pub fn new(set: &ScenarioSet, norm: &Normalizer, exec: Exec) -> Result<Self> {
        let n = set.len();
        let all = set.scenarios();
        let rows: Vec<Result<Vec<f64>>> = exec.map_range(n, |i| {
            (0..n).map(|j| scenario_distance(&all[i], &all[j], norm)).collect()
        });
        let mut d = Vec::with_capacity(n * n);
        for r in rows {
            d.extend(r?);
        }
        Ok(MatrixMetric { n, p: all.iter().map(|s| s.probability).collect(), d })
    }
}

impl Metric for MatrixMetric {
    fn len(&self) -> usize {
        self.n
    }
    fn prob(&self, i: usize) -> f64 {
        self.p[i]
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Distances of a product set from per-group day tables.
pub(crate) struct ProductMetric<'a> {
    pub days: usize,
    /// `tables[g][x * days + y]`: squared z-distance of group `g` between days x and y.
    pub tables: [Vec<f64>; super::N_GROUPS],
    pub levels: &'a [f64],
    /// Squared-distance weight of a unit DR level difference.
    pub dr_coef: f64,
}

impl<'a> ProductMetric<'a> {
    pub fn new(set: &'a ScenarioSet, norm: &Normalizer) -> Option<Self> {
        let (hist, levels, time) = set.product_parts()?;
        let days = hist.days();
        // A representative scenario per day of each group, with others fixed at day 0.
        let rep = |g: usize, day: usize| {
            let mut idx = [0usize; super::N_GROUPS];
            idx[g] = day;
            let s = set.get(super::join_index(&idx, days)).into_owned();
            series(&s)
                .into_iter()
                .map(|(n, x)| (n, x.into_owned()))
                .collect::<Vec<_>>()
        };
        let group_of = |name: &str| -> Option<usize> {
            if ["da_buy", "da_sell", "rt"].contains(&name) {
                Some(0)
            } else if name == "outdoor_temp" || name == "irradiance" || name.starts_with("solar_") {
                Some(1)
            } else if name == "base_load"
                || name == "heat_load"
                || name.starts_with("ewh_budget_")
                || name.starts_with("heat_loss_")
            {
                Some(2)
            } else if name.starts_with("pev_") {
                Some(3)
            } else {
                None
            }
        };
        let mut tables: [Vec<f64>; super::N_GROUPS] = Default::default();
        for (g, table) in tables.iter_mut().enumerate() {
            let reps: Vec<_> = (0..days).map(|d| rep(g, d)).collect();
            *table = vec![0.0; days * days];
            for x in 0..days {
                for y in 0..days {
                    let mut sum = 0.0;
                    for (k, ((name, a), (_, b))) in reps[x].iter().zip(&reps[y]).enumerate() {
                        if group_of(name) != Some(g) {
                            continue;
                        }
                        let inv = 1.0 / norm.scale[k];
                        for (u, v) in a.iter().zip(b) {
                            let z = (u - v) * inv;
                            sum += z * z;
                        }
                    }
                    table[x * days + y] = sum;
                }
            }
        }
        let dr_k = norm.names.iter().position(|n| n == "dr")?;
        let dr_coef = time.business_slots() as f64 / (norm.scale[dr_k] * norm.scale[dr_k]);
        Some(ProductMetric { days, tables, levels, dr_coef })
    }

    #[inline]
    pub fn dist2_split(&self, a: &[usize; 4], va: f64, b: &[usize; 4], vb: f64) -> f64 {
        let n = self.days;
        let dv = va - vb;
        self.tables[0][a[0] * n + b[0]]
            + self.tables[1][a[1] * n + b[1]]
            + self.tables[2][a[2] * n + b[2]]
            + self.tables[3][a[3] * n + b[3]]
            + self.dr_coef * dv * dv
    }
}

impl Metric for ProductMetric<'_> {
    fn len(&self) -> usize {
        self.levels.len()
    }
    fn prob(&self, _i: usize) -> f64 {
        1.0 / self.levels.len() as f64
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        let a = super::split_index(i, self.days);
        let b = super::split_index(j, self.days);
        self.dist2_split(&a, self.levels[i], &b, self.levels[j]).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_campus_config;
    use crate::scenario::generate;
    use crate::synth::generate_history;

    fn product() -> ScenarioSet {
        let m = load_campus_config(r#"{"time": {"slots_per_day": 24}, "buildings": [{}, {}], "pevs": {"count": 3}}"#).unwrap();
        let h = generate_history(&m, 2, 3);
        generate(&h, &m.time, 5).unwrap()
    }

    #[test]
    fn identical_scenarios_are_at_zero() {
        let set = product();
        let n = Normalizer::fit(&set);
        let s = set.get(3);
        assert_eq!(scenario_distance(&s, &s, &n).unwrap(), 0.0);
    }

    #[test]
    fn one_scale_unit_in_one_slot_is_one() {
        let set = product();
        let n = Normalizer::fit(&set);
        let a = set.get(0).into_owned();
        let mut b = a.clone();
        let k = n.names.iter().position(|x| x == "base_load").unwrap();
        b.base_load[7] += n.scale[k];
        assert!((scenario_distance(&a, &b, &n).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_fit_matches_explicit_fit() {
        let set = product();
        let explicit = ScenarioSet::from_scenarios(set.scenarios(), 0, "x").unwrap();
        let a = Normalizer::fit(&set);
        let b = Normalizer::fit(&explicit);
        assert_eq!(a.names, b.names);
        for (x, y) in a.scale.iter().zip(&b.scale) {
            assert!((x - y).abs() < 1e-9 * x.max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn product_metric_matches_direct_distance() {
        let set = product();
        let n = Normalizer::fit(&set);
        let pm = ProductMetric::new(&set, &n).unwrap();
        for i in 0..set.len() {
            for j in 0..set.len() {
                let direct = scenario_distance(&set.get(i), &set.get(j), &n).unwrap();
                let fast = pm.dist(i, j);
                assert!((direct - fast).abs() < 1e-9 * direct.max(1.0), "{i} {j}: {direct} {fast}");
            }
        }
    }

    #[test]
    fn mismatched_dimensions_error() {
        let set = product();
        let n = Normalizer::fit(&set);
        let a = set.get(0).into_owned();
        let mut b = a.clone();
        b.solar.pop();
        assert!(scenario_distance(&a, &b, &n).is_err());
    }
}
