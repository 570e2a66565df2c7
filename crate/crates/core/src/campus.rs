//! Static description of the campus: time grid, buildings, devices, grid
//! connection and market parameters.
//!
//! Power quantities are physical kW everywhere except [`HvacParams::p_max`],
//! which is per-unit of [`CampusModel::p_base`]. Per-unit conversion happens
//! only when the objective is assembled.

use serde::{Deserialize, Serialize};

pub type Mat3 = [[f64; 3]; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub slots_per_day: usize,
    pub slot_hours: f64,
    pub business_start_slot: usize,
    /// Exclusive end of the business-hour range.
    pub business_end_slot: usize,
}

impl TimeGrid {
    pub fn is_business(&self, t: usize) -> bool {
        t >= self.business_start_slot && t < self.business_end_slot
    }

    pub fn business_slots(&self) -> usize {
        self.business_end_slot - self.business_start_slot
    }

    /// Slot index containing `hour` (0..24).
    pub fn slot_of_hour(&self, hour: f64) -> usize {
        ((hour / self.slot_hours).round() as usize).min(self.slots_per_day)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComfortBand {
    pub desired: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl ComfortBand {
    pub fn c_max(&self) -> f64 {
        self.desired + self.delta
    }

    pub fn c_min(&self) -> f64 {
        self.desired - self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HvacMode {
    Cooling,
    Heating,
}

impl HvacMode {
    /// The cooling/heating indicator σ.
    pub fn sigma(self) -> f64 {
        match self {
            HvacMode::Cooling => -1.0,
            HvacMode::Heating => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvacParams {
    pub beta: Mat3,
    /// Columns act on (outdoor temperature, irradiance, signed thermal power).
    pub alpha: Mat3,
    pub gamma: [f64; 3],
    pub cop: f64,
    /// Maximum electrical power, per-unit of `p_base`.
    pub p_max: f64,
    pub mode: HvacMode,
    pub band: ComfortBand,
    /// Indoor, inner-wall and outer-wall temperatures before the first slot.
    pub initial: [f64; 3],
}

impl HvacParams {
    pub fn p_max_kw(&self, p_base: f64) -> f64 {
        self.p_max * p_base
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PevParams {
    pub class: String,
    pub e_min: f64,
    pub e_max: f64,
    pub p_charge_max: f64,
    pub eta_charge: f64,
    pub e_desired: f64,
    pub e_base: f64,
    pub e_init: f64,
    pub degradation_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EwhParams {
    pub l_min: f64,
    pub l_max: f64,
    pub zeta: f64,
    /// Water mass in kg.
    pub mass: f64,
    /// Specific heat of water in kJ/(kg·°C).
    pub c_water: f64,
    pub band: ComfortBand,
    /// Inclusive slot range in which the heater may draw power.
    pub window: (usize, usize),
    pub temp_init: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsParams {
    pub e_min: f64,
    pub e_max: f64,
    pub p_charge_max: f64,
    pub p_discharge_max: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub e_init: f64,
    pub degradation_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoilerParams {
    /// Heat output limit in kBtu per slot.
    pub h_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub name: String,
    pub hvac: HvacParams,
    pub ewhs: Vec<EwhParams>,
    /// Boiler `b` feeds the tank of EWH `b` of the same building when one exists.
    pub boilers: Vec<BoilerParams>,
    pub storages: Vec<EsParams>,
    pub pev_ids: Vec<usize>,
    pub population: u32,
    /// Installed rooftop solar of this building's pack in kW.
    pub solar_kw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMarketParams {
    pub g_max: f64,
    pub penalty_cost: f64,
    pub da_sell_ratio: f64,
    /// Gas price per slot in $/kBtu.
    pub gas_price: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampusModel {
    pub time: TimeGrid,
    pub buildings: Vec<Building>,
    pub pevs: Vec<PevParams>,
    pub grid: GridMarketParams,
    pub p_base: f64,
    pub h_base: f64,
    pub solar_capacity: f64,
}

/// Global device indices in building order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeviceRef {
    pub building: usize,
    pub local: usize,
}

impl CampusModel {
    pub fn ewhs(&self) -> Vec<(DeviceRef, &EwhParams)> {
        collect(&self.buildings, |b| &b.ewhs)
    }

    pub fn storages(&self) -> Vec<(DeviceRef, &EsParams)> {
        collect(&self.buildings, |b| &b.storages)
    }

    pub fn boilers(&self) -> Vec<(DeviceRef, &BoilerParams)> {
        collect(&self.buildings, |b| &b.boilers)
    }

    pub fn n_ewh(&self) -> usize {
        self.buildings.iter().map(|b| b.ewhs.len()).sum()
    }

    pub fn n_es(&self) -> usize {
        self.buildings.iter().map(|b| b.storages.len()).sum()
    }

    pub fn n_boiler(&self) -> usize {
        self.buildings.iter().map(|b| b.boilers.len()).sum()
    }

    /// Global EWH index heated by global boiler `b`, if any.
    pub fn boiler_target(&self, b: usize) -> Option<usize> {
        let boilers = self.boilers();
        let (r, _) = boilers[b];
        if r.local < self.buildings[r.building].ewhs.len() {
            let offset: usize = self.buildings[..r.building].iter().map(|x| x.ewhs.len()).sum();
            Some(offset + r.local)
        } else {
            None
        }
    }

    /// Building owning each PEV (`None` when unassigned).
    pub fn pev_owner(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.pevs.len()];
        for (i, b) in self.buildings.iter().enumerate() {
            for &k in &b.pev_ids {
                if k < owner.len() {
                    owner[k] = Some(i);
                }
            }
        }
        owner
    }

    /// PEV comfort weight `N_i^k / N_i^p` of building `i`.
    pub fn pev_weight(&self, i: usize) -> f64 {
        let b = &self.buildings[i];
        b.pev_ids.len() as f64 / b.population.max(1) as f64
    }
}

fn collect<'a, T>(
    buildings: &'a [Building],
    f: impl Fn(&'a Building) -> &'a Vec<T>,
) -> Vec<(DeviceRef, &'a T)> {
    let mut out = Vec::new();
    for (i, b) in buildings.iter().enumerate() {
        for (k, d) in f(b).iter().enumerate() {
            out.push((DeviceRef { building: i, local: k }, d));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, path: &str, message: &str) {
        if !ok {
            self.push(path, message);
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

/// Spectral radius of a 3x3 matrix from the growth rate of its powers.
pub fn spectral_radius(m: &Mat3) -> f64 {
    let mut a = *m;
    let mut log_scale = 0.0f64;
    const SQUARINGS: u32 = 24;
    for _ in 0..SQUARINGS {
        a = matmul(&a, &a);
        log_scale *= 2.0;
        let norm = a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        for v in a.iter_mut().flatten() {
            *v /= norm;
        }
        log_scale += norm.ln();
    }
    (log_scale / 2f64.powi(SQUARINGS as i32)).exp()
}

pub fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn check_band(r: &mut ValidationReport, path: &str, band: &ComfortBand) {
    r.check(band.delta > 0.0, &format!("{path}.delta"), "delta > 0 required");
    r.check(
        band.epsilon >= 0.0 && band.epsilon < band.delta,
        &format!("{path}.epsilon"),
        "epsilon < delta required",
    );
}

/// Lists every violated invariant; empty iff the model is valid.
pub fn validate(m: &CampusModel) -> ValidationReport {
    let mut r = ValidationReport::default();
    let tg = &m.time;
    r.check(
        tg.slots_per_day > 0 && (tg.slots_per_day as f64 * tg.slot_hours - 24.0).abs() < 1e-9,
        "time",
        "slots_per_day x slot_hours must equal 24",
    );
    r.check(
        tg.business_start_slot < tg.business_end_slot && tg.business_end_slot <= tg.slots_per_day,
        "time.business",
        "0 <= business_start_slot < business_end_slot <= slots_per_day required",
    );
    r.check(m.p_base > 0.0, "bases.p_base", "p_base > 0 required");
    r.check(m.h_base > 0.0, "bases.h_base", "h_base > 0 required");
    r.check(m.solar_capacity >= 0.0, "bases.solar_capacity", "solar capacity >= 0 required");
    r.check(!m.buildings.is_empty(), "buildings", "at least one building required");

    let g = &m.grid;
    r.check(g.g_max > 0.0, "grid.g_max", "g_max > 0 required");
    r.check(g.penalty_cost >= 0.0, "grid.penalty_cost", "penalty_cost >= 0 required");
    r.check(
        g.da_sell_ratio > 0.0 && g.da_sell_ratio <= 1.0,
        "grid.da_sell_ratio",
        "0 < da_sell_ratio <= 1 required",
    );
    r.check(
        g.gas_price.len() == tg.slots_per_day,
        "grid.gas_price",
        "gas price series must have one entry per slot",
    );
    r.check(
        g.gas_price.iter().all(|p| *p >= 0.0 && p.is_finite()),
        "grid.gas_price",
        "gas prices must be finite and >= 0",
    );

    let mut seen = vec![0usize; m.pevs.len()];
    for (i, b) in m.buildings.iter().enumerate() {
        let p = format!("buildings[{i}]");
        let h = &b.hvac;
        r.check(h.gamma == [1.0, 0.0, 0.0], &format!("{p}.hvac.gamma"), "gamma = [1,0,0] required");
        r.check(
            spectral_radius(&h.beta) < 1.0,
            &format!("{p}.hvac.beta"),
            "spectral radius of beta < 1 required",
        );
        r.check(h.p_max > 0.0, &format!("{p}.hvac.p_max"), "p_max > 0 required");
        r.check(h.cop > 0.0, &format!("{p}.hvac.cop"), "cop > 0 required");
        r.check(
            h.beta.iter().chain(h.alpha.iter()).flatten().all(|v| v.is_finite())
                && h.initial.iter().all(|v| v.is_finite()),
            &format!("{p}.hvac"),
            "matrices and initial state must be finite",
        );
        check_band(&mut r, &format!("{p}.hvac.band"), &h.band);
        r.check(b.population >= 1, &format!("{p}.population"), "population >= 1 required");
        r.check(b.solar_kw >= 0.0, &format!("{p}.solar_kw"), "solar_kw >= 0 required");

        for (j, e) in b.ewhs.iter().enumerate() {
            let q = format!("{p}.ewhs[{j}]");
            r.check(
                0.0 <= e.l_min && e.l_min <= e.l_max,
                &format!("{q}.l_max"),
                "0 <= l_min <= l_max required",
            );
            r.check(e.zeta > 0.0, &format!("{q}.zeta"), "zeta > 0 required");
            r.check(e.mass > 0.0, &format!("{q}.mass"), "mass > 0 required");
            r.check(e.c_water > 0.0, &format!("{q}.c_water"), "c_water > 0 required");
            r.check(
                e.window.0 <= e.window.1 && e.window.1 < tg.slots_per_day,
                &format!("{q}.window"),
                "window must lie within the time grid",
            );
            r.check(e.band.delta > 0.0, &format!("{q}.band.delta"), "delta > 0 required");
        }
        for (j, s) in b.storages.iter().enumerate() {
            let q = format!("{p}.storages[{j}]");
            r.check(
                0.0 <= s.e_min && s.e_min < s.e_max,
                &format!("{q}.e_max"),
                "0 <= e_min < e_max required",
            );
            r.check(
                s.eta_charge > 0.0 && s.eta_charge <= 1.0 && s.eta_discharge > 0.0 && s.eta_discharge <= 1.0,
                &format!("{q}.eta"),
                "efficiencies must lie in (0, 1]",
            );
            r.check(
                s.e_min <= s.e_init && s.e_init <= s.e_max,
                &format!("{q}.e_init"),
                "e_min <= e_init <= e_max required",
            );
            r.check(
                s.p_charge_max >= 0.0 && s.p_discharge_max >= 0.0,
                &format!("{q}.p_max"),
                "rate limits must be >= 0",
            );
            r.check(s.degradation_cost >= 0.0, &format!("{q}.degradation_cost"), "degradation cost >= 0 required");
        }
        for (j, bo) in b.boilers.iter().enumerate() {
            r.check(bo.h_max > 0.0, &format!("{p}.boilers[{j}].h_max"), "h_max > 0 required");
        }
        for &k in &b.pev_ids {
            if k >= m.pevs.len() {
                r.push(format!("{p}.pev_ids"), format!("pev {k} does not exist"));
            } else {
                seen[k] += 1;
            }
        }
    }
    for (k, &count) in seen.iter().enumerate() {
        if count > 1 {
            r.push(format!("pevs[{k}]"), "pev not disjoint across buildings");
        } else if count == 0 {
            r.push(format!("pevs[{k}]"), "pev not assigned to any building");
        }
    }
    for (k, v) in m.pevs.iter().enumerate() {
        let q = format!("pevs[{k}]");
        r.check(
            0.0 <= v.e_min && v.e_min <= v.e_base && v.e_base < v.e_desired && v.e_desired <= v.e_max,
            &q,
            "0 <= e_min <= e_base < e_desired <= e_max required",
        );
        r.check(
            v.eta_charge > 0.0 && v.eta_charge <= 1.0,
            &format!("{q}.eta_charge"),
            "0 < eta_charge <= 1 required",
        );
        r.check(
            v.e_min <= v.e_init && v.e_init <= v.e_max,
            &format!("{q}.e_init"),
            "e_min <= e_init <= e_max required",
        );
        r.check(v.p_charge_max >= 0.0, &format!("{q}.p_charge_max"), "p_charge_max >= 0 required");
        r.check(v.degradation_cost >= 0.0, &format!("{q}.degradation_cost"), "degradation cost >= 0 required");
    }
    r
}
