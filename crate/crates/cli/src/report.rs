//! Comfort aggregation, case comparison and plot-ready series.

use std::path::{Path, PathBuf};

use campus_core::dynamics::Trajectory;
use campus_core::schedule::{fmt_num, Schedule};
use campus_core::{CampusModel, CoreError};
use serde::{Deserialize, Serialize};

/// Comfort of one simulated scenario. Per-device series are `None` outside business hours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComfortReport {
    pub hvac: Vec<Vec<Option<f64>>>,
    pub pev: Vec<Vec<Option<f64>>>,
    pub ewh: Vec<Vec<Option<f64>>>,
    /// Building-weighted sum over business slots.
    pub aggregate: f64,
    /// Value of `aggregate` with every comfort level at 1.
    pub attainable: f64,
    pub normalized: f64,
}

pub fn comfort_report(traj: &Trajectory, model: &CampusModel) -> Result<ComfortReport, CoreError> {
    let nb = model.buildings.len();
    let ewhs = model.ewhs();
    if traj.comfort_hvac.len() != nb || traj.comfort_pev.len() != model.pevs.len() || traj.comfort_ewh.len() != ewhs.len() {
        return Err(CoreError::Dimension("trajectory is missing device series".into()));
    }
    let n = traj.slots;
    let owner = model.pev_owner();
    let mut aggregate = 0.0;
    let mut attainable = 0.0;
    let value = |v: Option<f64>| v.unwrap_or(0.0).clamp(0.0, 1.0);
    for t in (0..n).filter(|&t| model.time.is_business(t)) {
        for i in 0..nb {
            aggregate += value(traj.comfort_hvac[i][t]);
            attainable += 1.0;
        }
        for (k, o) in owner.iter().enumerate() {
            let w = o.map(|i| model.pev_weight(i)).unwrap_or(0.0);
            aggregate += w * value(traj.comfort_pev[k][t]);
            attainable += w;
        }
        for j in 0..ewhs.len() {
            aggregate += value(traj.comfort_ewh[j][t]);
            attainable += 1.0;
        }
    }
    let normalized = if attainable > 0.0 { aggregate / attainable } else { 0.0 };
    let clamp = |s: &Vec<Vec<Option<f64>>>| s.iter().map(|d| d.iter().map(|v| v.map(|x| x.clamp(0.0, 1.0))).collect()).collect();
    Ok(ComfortReport {
        hvac: clamp(&traj.comfort_hvac),
        pev: clamp(&traj.comfort_pev),
        ewh: clamp(&traj.comfort_ewh),
        aggregate,
        attainable,
        normalized,
    })
}

/// Headline numbers of one run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub expected_unified_cost: f64,
    pub expected_comfort: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub with_comfort: RunSummary,
    pub without_comfort: RunSummary,
    /// Percent change from the without-comfort run.
    pub cost_increment_pct: f64,
    pub comfort_increment_pct: f64,
}

fn increment(with: f64, without: f64) -> f64 {
    if without == 0.0 {
        if with == 0.0 { 0.0 } else { f64::INFINITY.copysign(with) }
    } else {
        (with - without) / without.abs() * 100.0
    }
}

pub fn compare_cases(with_comfort: RunSummary, without_comfort: RunSummary) -> Result<ComparisonTable, CoreError> {
    let all = [with_comfort.expected_unified_cost, with_comfort.expected_comfort, without_comfort.expected_unified_cost, without_comfort.expected_comfort];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::Dimension("run summaries must be finite".into()));
    }
    Ok(ComparisonTable {
        with_comfort,
        without_comfort,
        cost_increment_pct: increment(with_comfort.expected_unified_cost, without_comfort.expected_unified_cost),
        comfort_increment_pct: increment(with_comfort.expected_comfort, without_comfort.expected_comfort),
    })
}

impl ComparisonTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["metric", "with_comfort", "without_comfort", "increment_pct"])?;
        w.write_record([
            "expected_unified_cost".to_string(),
            format!("{:.9}", self.with_comfort.expected_unified_cost),
            format!("{:.9}", self.without_comfort.expected_unified_cost),
            format!("{:.3}", self.cost_increment_pct),
        ])?;
        w.write_record([
            "expected_comfort".to_string(),
            format!("{:.9}", self.with_comfort.expected_comfort),
            format!("{:.9}", self.without_comfort.expected_comfort),
            format!("{:.3}", self.comfort_increment_pct),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Everything a figure may draw from.
pub struct RunOutputs<'a> {
    pub model: &'a CampusModel,
    pub schedule: &'a Schedule,
    pub trajectories: &'a [Trajectory],
    pub probabilities: &'a [f64],
}

pub const FIGURES: [&str; 5] = ["da-exchange", "indoor-temp", "comfort-hvac", "comfort-pev", "comfort-ewh"];

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("unknown figure `{id}`; valid ids: {}", FIGURES.join(", "))]
    UnknownFigure { id: String },
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn expected(out: &RunOutputs, f: impl Fn(&Trajectory, usize) -> f64) -> Vec<f64> {
    let n = out.schedule.slots;
    (0..n)
        .map(|t| out.trajectories.iter().zip(out.probabilities).map(|(tr, p)| p * f(tr, t)).sum())
        .collect()
}

/// Column names and per-slot values of a figure.
pub fn plot_series(out: &RunOutputs, id: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), PlotError> {
    let m = out.model;
    let pb = m.p_base;
    let names = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{}", i + 1)).collect::<Vec<_>>();
    let comfort = |pick: &dyn Fn(&Trajectory) -> &Vec<Vec<Option<f64>>>, n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|d| expected(out, |tr, t| pick(tr)[d][t].unwrap_or(0.0).clamp(0.0, 1.0))).collect()
    };
    match id {
        "da-exchange" => Ok((
            vec!["buy".into(), "sell".into()],
            vec![
                out.schedule.da_buy.iter().map(|g| g / pb).collect(),
                out.schedule.da_sell.iter().map(|g| g / pb).collect(),
            ],
        )),
        "indoor-temp" => {
            let cols = (0..m.buildings.len())
                .map(|i| expected(out, |tr, t| tr.hvac_state[i][t][0]))
                .collect();
            Ok((m.buildings.iter().map(|b| b.name.clone()).collect(), cols))
        }
        "comfort-hvac" => Ok((m.buildings.iter().map(|b| b.name.clone()).collect(), comfort(&|tr| &tr.comfort_hvac, m.buildings.len()))),
        "comfort-pev" => Ok((names("pev", m.pevs.len()), comfort(&|tr| &tr.comfort_pev, m.pevs.len()))),
        "comfort-ewh" => Ok((names("ewh", m.n_ewh()), comfort(&|tr| &tr.comfort_ewh, m.n_ewh()))),
        other => Err(PlotError::UnknownFigure { id: other.to_string() }),
    }
}

/// Writes `<dir>/<id>.csv` with a 1-based `slot` column followed by the figure's series.
pub fn emit_plot_data(out: &RunOutputs, id: &str, dir: &Path) -> Result<PathBuf, PlotError> {
    let (names, cols) = plot_series(out, id)?;
    std::fs::create_dir_all(dir).map_err(|e| CoreError::Io { path: dir.to_path_buf(), source: e })?;
    let path = dir.join(format!("{id}.csv"));
    let csv_err = |e: csv::Error| CoreError::Data { file: path.clone(), message: e.to_string() };
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["slot".to_string()];
    header.extend(names);
    w.write_record(&header).map_err(csv_err)?;
    for t in 0..out.schedule.slots {
        let mut row = vec![(t + 1).to_string()];
        row.extend(cols.iter().map(|c| fmt_num(c[t])));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CoreError::Io { path: path.clone(), source: e })?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use campus_core::config::load_campus_config;

    fn model() -> CampusModel {
        load_campus_config(r#"{"time": {"slots_per_day": 24, "slot_hours": 1.0}, "buildings": [{"pev_ids": [0], "population": 4}], "pevs": {"count": 1}}"#).unwrap()
    }

    fn trajectory(m: &CampusModel, level: impl Fn(usize) -> f64) -> Trajectory {
        let n = m.time.slots_per_day;
        let series = |d: usize| vec![(0..n).map(|t| m.time.is_business(t).then(|| level(t))).collect::<Vec<_>>(); d];
        Trajectory {
            slots: n,
            hvac_state: vec![vec![[24.0; 3]; n]],
            hvac_power: vec![vec![0.0; n]],
            pev_energy: vec![vec![0.0; n]],
            ewh_temp: vec![vec![40.0; n]],
            es_energy: vec![vec![0.0; n]],
            comfort_hvac: series(1),
            comfort_pev: series(1),
            comfort_ewh: series(1),
            power_residual: vec![0.0; n],
            heat_residual: vec![0.0; n],
            violations: vec![],
        }
    }

    #[test]
    fn normalized_extremes_and_half() {
        let m = model();
        assert_eq!(comfort_report(&trajectory(&m, |_| 1.0), &m).unwrap().normalized, 1.0);
        assert_eq!(comfort_report(&trajectory(&m, |_| 0.0), &m).unwrap().normalized, 0.0);
        let half = comfort_report(&trajectory(&m, |t| (t % 2) as f64), &m).unwrap();
        assert!((half.normalized - 0.5).abs() < 1e-12);
    }

    #[test]
    fn paper_increments() {
        let with = RunSummary { expected_unified_cost: 13.44, expected_comfort: 1.0 };
        let without = RunSummary { expected_unified_cost: 11.45, expected_comfort: 0.4 };
        let c = compare_cases(with, without).unwrap();
        assert!((c.cost_increment_pct - 17.38).abs() < 0.01);
        assert!((c.comfort_increment_pct - 150.0).abs() < 1e-9);
        let same = compare_cases(with, with).unwrap();
        assert_eq!((same.cost_increment_pct, same.comfort_increment_pct), (0.0, 0.0));
    }

    #[test]
    fn figures_have_expected_shape() {
        let m = model();
        let n = m.time.slots_per_day;
        let sched = Schedule { slots: n, da_buy: vec![m.p_base; n], da_sell: vec![0.0; n], dispatch: vec![] };
        let tr = [trajectory(&m, |_| 1.0)];
        let out = RunOutputs { model: &m, schedule: &sched, trajectories: &tr, probabilities: &[1.0] };
        let dir = tempfile::tempdir().unwrap();
        let p = emit_plot_data(&out, "da-exchange", dir.path()).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().next().unwrap(), "slot,buy,sell");
        assert_eq!(text.lines().count(), n + 1);
        assert!(text.lines().nth(1).unwrap().starts_with("1,1.000000,"));
        let (names, cols) = plot_series(&out, "indoor-temp").unwrap();
        assert_eq!(names.len(), m.buildings.len());
        assert_eq!(cols[0][0], 24.0);
        let err = emit_plot_data(&out, "nope", dir.path()).unwrap_err().to_string();
        assert!(err.contains("da-exchange") && err.contains("indoor-temp"));
    }
}
