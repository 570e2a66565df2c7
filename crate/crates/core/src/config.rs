//! JSON campus configuration.
//!
//! Every field is optional; omitted values fall back to [`crate::defaults`].
//! See `docs/campus-config.md` for the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::campus::{
    validate, BoilerParams, Building, CampusModel, ComfortBand, EsParams, EwhParams,
    GridMarketParams, HvacMode, HvacParams, Mat3, PevParams, TimeGrid,
};
use crate::defaults as d;
use crate::error::{CoreError, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampusDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buildings: Option<Vec<BuildingDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pevs: Option<PevsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<BasesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<HistoryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeDoc {
    pub slots_per_day: Option<usize>,
    pub slot_hours: Option<f64>,
    pub business_start_slot: Option<usize>,
    pub business_end_slot: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDoc {
    pub desired: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HvacDoc {
    pub beta: Option<Mat3>,
    pub alpha: Option<Mat3>,
    pub gamma: Option<[f64; 3]>,
    pub cop: Option<f64>,
    pub p_max: Option<f64>,
    pub mode: Option<HvacMode>,
    pub band: Option<BandDoc>,
    pub initial: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EwhDoc {
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub zeta: Option<f64>,
    pub mass: Option<f64>,
    pub c_water: Option<f64>,
    pub band: Option<BandDoc>,
    pub window: Option<[usize; 2]>,
    pub temp_init: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsDoc {
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub p_charge_max: Option<f64>,
    pub p_discharge_max: Option<f64>,
    pub eta_charge: Option<f64>,
    pub eta_discharge: Option<f64>,
    pub e_init: Option<f64>,
    pub degradation_cost: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoilerDoc {
    pub h_max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingDoc {
    pub name: Option<String>,
    pub hvac: Option<HvacDoc>,
    pub ewhs: Option<Vec<EwhDoc>>,
    pub boilers: Option<Vec<BoilerDoc>>,
    pub storages: Option<Vec<EsDoc>>,
    pub pev_ids: Option<Vec<usize>>,
    pub population: Option<u32>,
    pub solar_kw: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PevClassDoc {
    pub class: String,
    pub e_min: f64,
    pub e_max: f64,
    pub p_charge_max: f64,
    pub share: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PevDoc {
    pub class: Option<String>,
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub p_charge_max: Option<f64>,
    pub eta_charge: Option<f64>,
    pub e_desired: Option<f64>,
    pub e_base: Option<f64>,
    pub e_init: Option<f64>,
    pub degradation_cost: Option<f64>,
}

/// Either a generated fleet (`count` + `classes`) or an explicit `list`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PevsDoc {
    pub count: Option<usize>,
    pub classes: Option<Vec<PevClassDoc>>,
    pub list: Option<Vec<PevDoc>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GasPriceDoc {
    Flat(f64),
    Series(Vec<f64>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub g_max: Option<f64>,
    pub penalty_cost: Option<f64>,
    pub da_sell_ratio: Option<f64>,
    pub gas_price: Option<GasPriceDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasesDoc {
    pub p_base: Option<f64>,
    pub h_base: Option<f64>,
    pub solar_capacity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDoc {
    pub days: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryDoc {
    pub synthetic: Option<SyntheticDoc>,
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDoc {
    pub scenarios: Option<usize>,
    pub seed: Option<u64>,
    pub gap: Option<f64>,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum HistorySource {
    Synthetic { days: usize, seed: u64 },
    Dir(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub scenarios: usize,
    pub seed: u64,
    pub gap: f64,
    pub time_limit_s: Option<f64>,
    pub node_limit: Option<usize>,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            scenarios: 30,
            seed: 42,
            gap: 1e-4,
            time_limit_s: None,
            node_limit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub campus: CampusModel,
    pub history: HistorySource,
    pub run: RunSettings,
}

pub const DEFAULT_HISTORY_DAYS: usize = 30;

fn config_err(path: impl Into<String>, message: impl Into<String>) -> CoreError {
    CoreError::Config {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses a document, reporting the JSON path of any schema violation.
pub fn parse_document(text: &str) -> Result<CampusDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(path, e.into_inner().to_string())
    })
}

/// Parses, fills defaults and validates a campus configuration.
pub fn load_campus_config(text: &str) -> Result<CampusModel> {
    resolve_campus(&parse_document(text)?)
}

pub fn load_run_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
    let doc = parse_document(text)?;
    let campus = resolve_campus(&doc)?;
    let history = match &doc.history {
        Some(HistoryDoc { synthetic: Some(_), dir: Some(_) }) => {
            return Err(config_err("history", "give either `synthetic` or `dir`, not both"))
        }
        Some(HistoryDoc { dir: Some(dir), .. }) => {
            let dir = match base_dir {
                Some(base) if dir.is_relative() => base.join(dir),
                _ => dir.clone(),
            };
            HistorySource::Dir(dir)
        }
        Some(HistoryDoc { synthetic: Some(s), .. }) => HistorySource::Synthetic {
            days: s.days.unwrap_or(DEFAULT_HISTORY_DAYS),
            seed: s.seed.unwrap_or(7),
        },
        _ => HistorySource::Synthetic { days: DEFAULT_HISTORY_DAYS, seed: 7 },
    };
    let mut run = RunSettings::default();
    if let Some(r) = &doc.run {
        run.scenarios = r.scenarios.unwrap_or(run.scenarios);
        run.seed = r.seed.unwrap_or(run.seed);
        run.gap = r.gap.unwrap_or(run.gap);
        run.time_limit_s = r.time_limit_s;
        run.node_limit = r.node_limit;
    }
    if run.scenarios == 0 {
        return Err(config_err("run.scenarios", "scenarios >= 1 required"));
    }
    if !(run.gap >= 0.0) {
        return Err(config_err("run.gap", "gap >= 0 required"));
    }
    if let HistorySource::Synthetic { days: 0, .. } = history {
        return Err(config_err("history.synthetic.days", "days >= 1 required"));
    }
    Ok(RunConfig { campus, history, run })
}

pub fn load_run_config_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    load_run_config(&text, path.parent())
}

fn band(doc: Option<&BandDoc>, default: ComfortBand) -> ComfortBand {
    let Some(b) = doc else { return default };
    ComfortBand {
        desired: b.desired.unwrap_or(default.desired),
        delta: b.delta.unwrap_or(default.delta),
        epsilon: b.epsilon.unwrap_or(default.epsilon),
    }
}

fn resolve_time(doc: Option<&TimeDoc>) -> Result<TimeGrid> {
    let t = doc.cloned().unwrap_or_default();
    let slots = match (t.slots_per_day, t.slot_hours) {
        (Some(n), _) => n,
        (None, Some(h)) if h > 0.0 => (24.0 / h).round() as usize,
        (None, Some(_)) => return Err(config_err("time.slot_hours", "slot_hours > 0 required")),
        (None, None) => 96,
    };
    if slots == 0 {
        return Err(config_err("time.slots_per_day", "slots_per_day >= 1 required"));
    }
    let mut grid = d::time_grid(slots);
    if let Some(h) = t.slot_hours {
        grid.slot_hours = h;
    }
    if let Some(s) = t.business_start_slot {
        grid.business_start_slot = s;
    }
    if let Some(e) = t.business_end_slot {
        grid.business_end_slot = e;
    }
    Ok(grid)
}

fn resolve_hvac(doc: Option<&HvacDoc>, index: usize, time: &TimeGrid, p_base: f64) -> HvacParams {
    let h = doc.cloned().unwrap_or_default();
    let p_max = h.p_max.unwrap_or(d::HVAC_P_MAX[index % d::HVAC_P_MAX.len()]);
    let cop = h.cop.unwrap_or(d::HVAC_COP);
    let base = d::hvac_with(p_max, cop, time, p_base);
    HvacParams {
        beta: h.beta.unwrap_or(base.beta),
        alpha: h.alpha.unwrap_or(base.alpha),
        gamma: h.gamma.unwrap_or(base.gamma),
        cop,
        p_max,
        mode: h.mode.unwrap_or(base.mode),
        band: band(h.band.as_ref(), base.band),
        initial: h.initial.unwrap_or(base.initial),
    }
}

fn resolve_ewh(e: &EwhDoc, time: &TimeGrid) -> EwhParams {
    let base = d::ewh(time);
    EwhParams {
        l_min: e.l_min.unwrap_or(base.l_min),
        l_max: e.l_max.unwrap_or(base.l_max),
        zeta: e.zeta.unwrap_or(base.zeta),
        mass: e.mass.unwrap_or(base.mass),
        c_water: e.c_water.unwrap_or(base.c_water),
        band: band(e.band.as_ref(), base.band),
        window: e.window.map(|w| (w[0], w[1])).unwrap_or(base.window),
        temp_init: e.temp_init.unwrap_or(base.temp_init),
    }
}

fn resolve_es(e: &EsDoc) -> EsParams {
    let base = d::storage();
    EsParams {
        e_min: e.e_min.unwrap_or(base.e_min),
        e_max: e.e_max.unwrap_or(base.e_max),
        p_charge_max: e.p_charge_max.unwrap_or(base.p_charge_max),
        p_discharge_max: e.p_discharge_max.unwrap_or(base.p_discharge_max),
        eta_charge: e.eta_charge.unwrap_or(base.eta_charge),
        eta_discharge: e.eta_discharge.unwrap_or(base.eta_discharge),
        e_init: e.e_init.unwrap_or(base.e_init),
        degradation_cost: e.degradation_cost.unwrap_or(base.degradation_cost),
    }
}

fn resolve_pev(p: &PevDoc, k: usize) -> Result<PevParams> {
    let known = p
        .class
        .as_deref()
        .and_then(|c| d::PEV_CLASSES.iter().find(|x| x.0 == c));
    let (class, e_min, e_max, p_max) = match known {
        Some(c) => (c.0.to_string(), c.1, c.2, c.3),
        None => {
            let path = format!("pevs.list[{k}]");
            let e_max = p.e_max.ok_or_else(|| config_err(&path, "e_max required for a custom class"))?;
            let p_max = p
                .p_charge_max
                .ok_or_else(|| config_err(&path, "p_charge_max required for a custom class"))?;
            (p.class.clone().unwrap_or_else(|| "custom".into()), 0.0, e_max, p_max)
        }
    };
    let e_max = p.e_max.unwrap_or(e_max);
    let base = d::pev(&class, p.e_min.unwrap_or(e_min), e_max, p.p_charge_max.unwrap_or(p_max));
    Ok(PevParams {
        eta_charge: p.eta_charge.unwrap_or(base.eta_charge),
        e_desired: p.e_desired.unwrap_or(base.e_desired),
        e_base: p.e_base.unwrap_or(base.e_base),
        e_init: p.e_init.unwrap_or(base.e_init),
        degradation_cost: p.degradation_cost.unwrap_or(base.degradation_cost),
        ..base
    })
}

fn resolve_pevs(doc: Option<&PevsDoc>) -> Result<Vec<PevParams>> {
    let Some(p) = doc else { return Ok(d::fleet(d::PEVS)) };
    if let Some(list) = &p.list {
        if p.count.is_some() || p.classes.is_some() {
            return Err(config_err("pevs", "give either `list` or `count`/`classes`, not both"));
        }
        return list.iter().enumerate().map(|(k, x)| resolve_pev(x, k)).collect();
    }
    let count = p.count.unwrap_or(d::PEVS);
    match &p.classes {
        None => Ok(d::fleet(count)),
        Some(classes) => {
            let shares: Vec<f64> = classes.iter().map(|c| c.share).collect();
            if shares.iter().any(|s| !(*s >= 0.0)) {
                return Err(config_err("pevs.classes", "shares must be >= 0"));
            }
            let counts = d::fleet_counts(count, &shares);
            let mut out = Vec::with_capacity(count);
            for (c, &n) in classes.iter().zip(&counts) {
                for _ in 0..n {
                    out.push(d::pev(&c.class, c.e_min, c.e_max, c.p_charge_max));
                }
            }
            Ok(out)
        }
    }
}

fn resolve_campus(doc: &CampusDocument) -> Result<CampusModel> {
    let time = resolve_time(doc.time.as_ref())?;
    let bases = doc.bases.clone().unwrap_or_default();
    let p_base = bases.p_base.unwrap_or(d::P_BASE_KW);
    let h_base = bases.h_base.unwrap_or(d::H_BASE_KBTU);
    let solar_capacity = bases.solar_capacity.unwrap_or(d::SOLAR_CAPACITY_KW);
    let pevs = resolve_pevs(doc.pevs.as_ref())?;

    let docs = doc
        .buildings
        .clone()
        .unwrap_or_else(|| vec![BuildingDoc::default(); d::BUILDINGS]);
    let n = docs.len();
    let auto_assign = docs.iter().all(|b| b.pev_ids.is_none());
    let mut buildings = Vec::with_capacity(n);
    for (i, b) in docs.iter().enumerate() {
        let ewhs = match &b.ewhs {
            Some(list) => list.iter().map(|e| resolve_ewh(e, &time)).collect(),
            None => vec![d::ewh(&time)],
        };
        let boilers = match &b.boilers {
            Some(list) => list
                .iter()
                .map(|x| BoilerParams { h_max: x.h_max.unwrap_or(d::BOILER_H_MAX) })
                .collect(),
            None => vec![d::boiler()],
        };
        let storages = match &b.storages {
            Some(list) => list.iter().map(resolve_es).collect(),
            None => vec![d::storage()],
        };
        let pev_ids = match &b.pev_ids {
            Some(ids) => ids.clone(),
            None if auto_assign => (0..pevs.len()).filter(|k| k % n == i).collect(),
            None => Vec::new(),
        };
        buildings.push(Building {
            name: b.name.clone().unwrap_or_else(|| format!("cb{}", i + 1)),
            hvac: resolve_hvac(b.hvac.as_ref(), i, &time, p_base),
            ewhs,
            boilers,
            storages,
            pev_ids,
            population: b.population.unwrap_or(d::POPULATION),
            solar_kw: b.solar_kw.unwrap_or(solar_capacity / n.max(1) as f64),
        });
    }

    let g = doc.grid.clone().unwrap_or_default();
    let gas_price = match g.gas_price {
        None => vec![d::GAS_PRICE; time.slots_per_day],
        Some(GasPriceDoc::Flat(p)) => vec![p; time.slots_per_day],
        Some(GasPriceDoc::Series(s)) => s,
    };
    let model = CampusModel {
        time,
        buildings,
        pevs,
        grid: GridMarketParams {
            g_max: g.g_max.unwrap_or(d::G_MAX_KW),
            penalty_cost: g.penalty_cost.unwrap_or(d::PENALTY_COST),
            da_sell_ratio: g.da_sell_ratio.unwrap_or(d::DA_SELL_RATIO),
            gas_price,
        },
        p_base,
        h_base,
        solar_capacity,
    };
    let report = validate(&model);
    if !report.is_empty() {
        return Err(CoreError::Invalid(report.to_string()));
    }
    Ok(model)
}

fn band_doc(b: &ComfortBand) -> BandDoc {
    BandDoc {
        desired: Some(b.desired),
        delta: Some(b.delta),
        epsilon: Some(b.epsilon),
    }
}

/// Fully explicit document describing `m`.
pub fn to_document(m: &CampusModel) -> CampusDocument {
    let buildings = m
        .buildings
        .iter()
        .map(|b| BuildingDoc {
            name: Some(b.name.clone()),
            hvac: Some(HvacDoc {
                beta: Some(b.hvac.beta),
                alpha: Some(b.hvac.alpha),
                gamma: Some(b.hvac.gamma),
                cop: Some(b.hvac.cop),
                p_max: Some(b.hvac.p_max),
                mode: Some(b.hvac.mode),
                band: Some(band_doc(&b.hvac.band)),
                initial: Some(b.hvac.initial),
            }),
            ewhs: Some(
                b.ewhs
                    .iter()
                    .map(|e| EwhDoc {
                        l_min: Some(e.l_min),
                        l_max: Some(e.l_max),
                        zeta: Some(e.zeta),
                        mass: Some(e.mass),
                        c_water: Some(e.c_water),
                        band: Some(band_doc(&e.band)),
                        window: Some([e.window.0, e.window.1]),
                        temp_init: Some(e.temp_init),
                    })
                    .collect(),
            ),
            boilers: Some(b.boilers.iter().map(|x| BoilerDoc { h_max: Some(x.h_max) }).collect()),
            storages: Some(
                b.storages
                    .iter()
                    .map(|s| EsDoc {
                        e_min: Some(s.e_min),
                        e_max: Some(s.e_max),
                        p_charge_max: Some(s.p_charge_max),
                        p_discharge_max: Some(s.p_discharge_max),
                        eta_charge: Some(s.eta_charge),
                        eta_discharge: Some(s.eta_discharge),
                        e_init: Some(s.e_init),
                        degradation_cost: Some(s.degradation_cost),
                    })
                    .collect(),
            ),
            pev_ids: Some(b.pev_ids.clone()),
            population: Some(b.population),
            solar_kw: Some(b.solar_kw),
        })
        .collect();
    let list = m
        .pevs
        .iter()
        .map(|p| PevDoc {
            class: Some(p.class.clone()),
            e_min: Some(p.e_min),
            e_max: Some(p.e_max),
            p_charge_max: Some(p.p_charge_max),
            eta_charge: Some(p.eta_charge),
            e_desired: Some(p.e_desired),
            e_base: Some(p.e_base),
            e_init: Some(p.e_init),
            degradation_cost: Some(p.degradation_cost),
        })
        .collect();
    CampusDocument {
        time: Some(TimeDoc {
            slots_per_day: Some(m.time.slots_per_day),
            slot_hours: Some(m.time.slot_hours),
            business_start_slot: Some(m.time.business_start_slot),
            business_end_slot: Some(m.time.business_end_slot),
        }),
        buildings: Some(buildings),
        pevs: Some(PevsDoc { count: None, classes: None, list: Some(list) }),
        grid: Some(GridDoc {
            g_max: Some(m.grid.g_max),
            penalty_cost: Some(m.grid.penalty_cost),
            da_sell_ratio: Some(m.grid.da_sell_ratio),
            gas_price: Some(GasPriceDoc::Series(m.grid.gas_price.clone())),
        }),
        bases: Some(BasesDoc {
            p_base: Some(m.p_base),
            h_base: Some(m.h_base),
            solar_capacity: Some(m.solar_capacity),
        }),
        history: None,
        run: None,
    }
}

pub fn to_json_string(m: &CampusModel) -> String {
    serde_json::to_string_pretty(&to_document(m)).expect("campus document serializes")
}

/// The default six-building campus.
pub fn default_campus() -> CampusModel {
    load_campus_config("{}").expect("defaults are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let m = default_campus();
        assert_eq!(m.buildings.len(), 6);
        assert_eq!(m.pevs.len(), 50);
        assert_eq!(m.p_base, 1867.0);
        assert_eq!(m.time.slots_per_day, 96);
    }

    #[test]
    fn unknown_field_reports_path() {
        let err = load_campus_config(r#"{"grid": {"gmax": 3}}"#).unwrap_err();
        match err {
            CoreError::Config { path, message } => {
                assert_eq!(path, "grid.gmax");
                assert!(message.contains("gmax"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_reports_nested_path() {
        let err = load_campus_config(r#"{"buildings": [{}, {"hvac": {"cop": "x"}}]}"#).unwrap_err();
        match err {
            CoreError::Config { path, .. } => assert_eq!(path, "buildings[1].hvac.cop"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flat_gas_price_broadcasts() {
        let m = load_campus_config(r#"{"grid": {"gas_price": 0.01}}"#).unwrap();
        assert_eq!(m.grid.gas_price, vec![0.01; 96]);
    }

    #[test]
    fn explicit_pev_ids_are_kept() {
        let m = load_campus_config(
            r#"{"buildings": [{"pev_ids": [0, 1]}, {"pev_ids": [2]}],
                "pevs": {"list": [{"class": "leaf_sv"}, {"class": "leaf_sv"}, {"class": "model_s_75d"}]}}"#,
        )
        .unwrap();
        assert_eq!(m.buildings[0].pev_ids, vec![0, 1]);
        assert_eq!(m.pevs[2].e_max, 75.0);
    }

    #[test]
    fn list_and_count_conflict() {
        let err = load_campus_config(r#"{"pevs": {"count": 3, "list": []}}"#).unwrap_err();
        assert!(matches!(err, CoreError::Config { .. }));
    }

    #[test]
    fn run_section() {
        let rc = load_run_config(
            r#"{"history": {"dir": "hist"}, "run": {"scenarios": 5, "seed": 9}}"#,
            Some(Path::new("/cfg")),
        )
        .unwrap();
        assert_eq!(rc.history, HistorySource::Dir(PathBuf::from("/cfg/hist")));
        assert_eq!(rc.run.scenarios, 5);
        assert_eq!(rc.run.seed, 9);
        assert_eq!(rc.run.gap, 1e-4);
    }
}
