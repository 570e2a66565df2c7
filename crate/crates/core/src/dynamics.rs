//! Forward device dynamics and closed-form comfort levels.
//!
//! These are the reference the MILP encoding is checked against.

use std::io::Write;
use std::path::Path;

use crate::campus::{CampusModel, ComfortBand, EsParams, EwhParams, HvacParams, PevParams};
use crate::error::{CoreError, Result};
use crate::scenario::Scenario;
use crate::schedule::{fmt_num, Dispatch};
use crate::units::{kbtu_to_kj, kw_to_kbtu, kw_to_kj};

/// Absolute tolerance for flagging violations in simulated schedules.
pub const SIM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HvacState {
    pub indoor: f64,
    pub inner_wall: f64,
    pub outer_wall: f64,
}

impl HvacState {
    pub fn from_array(x: [f64; 3]) -> Self {
        HvacState { indoor: x[0], inner_wall: x[1], outer_wall: x[2] }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.indoor, self.inner_wall, self.outer_wall]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HvacInput {
    pub outdoor: f64,
    pub irradiance: f64,
    /// Signed thermal power `sigma * cop * P`, kW.
    pub thermal_power: f64,
}

impl HvacInput {
    pub fn new(outdoor: f64, irradiance: f64, electric_kw: f64, params: &HvacParams) -> Self {
        HvacInput { outdoor, irradiance, thermal_power: params.mode.sigma() * params.cop * electric_kw }
    }
}

pub fn hvac_step(state: HvacState, input: HvacInput, params: &HvacParams) -> HvacState {
    let x = state.to_array();
    let u = [input.outdoor, input.irradiance, input.thermal_power];
    let mut next = [0.0; 3];
    for (i, n) in next.iter_mut().enumerate() {
        *n = (0..3).map(|j| params.beta[i][j] * x[j] + params.alpha[i][j] * u[j]).sum();
    }
    HvacState::from_array(next)
}

pub fn hvac_indoor(state: HvacState, params: &HvacParams) -> f64 {
    let x = state.to_array();
    (0..3).map(|i| params.gamma[i] * x[i]).sum()
}

/// 1 within `epsilon` of the setpoint, linear to 0 at `delta`, 0 beyond.
pub fn hvac_comfort(indoor: f64, band: &ComfortBand) -> f64 {
    let dev = (indoor - band.desired).abs();
    if dev <= band.epsilon {
        1.0
    } else if dev >= band.delta {
        0.0
    } else {
        (band.delta - dev) / (band.delta - band.epsilon)
    }
}

fn pev_advance(e: f64, p: f64, params: &PevParams, dt: f64) -> f64 {
    e + p * params.eta_charge * dt
}

pub fn pev_step(e: f64, p_charge: f64, params: &PevParams, dt: f64) -> Result<f64> {
    if p_charge < 0.0 || p_charge > params.p_charge_max {
        return Err(CoreError::Device(format!(
            "PEV charge {p_charge} kW outside [0, {}]",
            params.p_charge_max
        )));
    }
    Ok(pev_advance(e, p_charge, params, dt))
}

pub fn pev_comfort(e: f64, params: &PevParams) -> f64 {
    if e >= params.e_desired {
        1.0
    } else if e <= params.e_base {
        0.0
    } else {
        (e - params.e_base) / (params.e_desired - params.e_base)
    }
}

/// Tank temperature change over one slot.
pub fn ewh_increment(l_kw: f64, boiler_kbtu: f64, loss_kbtu: f64, params: &EwhParams, dt: f64) -> f64 {
    let kj = params.zeta * kw_to_kj(l_kw, dt) + kbtu_to_kj(boiler_kbtu) - kbtu_to_kj(loss_kbtu);
    kj / (params.mass * params.c_water)
}

/// Temperature at the end of slot `upto`, starting from `temp_init`.
pub fn ewh_temperature(
    power: &[f64],
    boiler: &[f64],
    heat_loss: &[f64],
    params: &EwhParams,
    upto: usize,
    dt: f64,
) -> Result<f64> {
    if power.len() <= upto || boiler.len() <= upto || heat_loss.len() <= upto {
        return Err(CoreError::Dimension(format!("EWH series shorter than slot {upto}")));
    }
    let mut c = params.temp_init;
    for t in 0..=upto {
        c += ewh_increment(power[t], boiler[t], heat_loss[t], params, dt);
    }
    if c < -273.15 {
        return Err(CoreError::Device(format!("EWH temperature {c} below absolute zero")));
    }
    Ok(c)
}

pub fn ewh_comfort(temp: f64, params: &EwhParams) -> f64 {
    let c_min = params.band.c_min();
    if temp >= params.band.desired {
        1.0
    } else if temp <= c_min {
        0.0
    } else {
        (temp - c_min) / (params.band.desired - c_min)
    }
}

fn es_advance(e: f64, ch: f64, dis: f64, params: &EsParams, dt: f64) -> f64 {
    e + ch * params.eta_charge * dt - dis * dt / params.eta_discharge
}

pub fn es_step(e: f64, p_charge: f64, p_discharge: f64, params: &EsParams, dt: f64) -> Result<f64> {
    if p_charge > 0.0 && p_discharge > 0.0 {
        return Err(CoreError::Device("simultaneous charge and discharge".into()));
    }
    if p_charge < 0.0 || p_charge > params.p_charge_max || p_discharge < 0.0 || p_discharge > params.p_discharge_max {
        return Err(CoreError::Device(format!("ES rate ({p_charge}, {p_discharge}) kW outside limits")));
    }
    Ok(es_advance(e, p_charge, p_discharge, params, dt))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimViolation {
    pub slot: usize,
    pub device: String,
    pub message: String,
}

/// Simulated states. Device series are `[device][slot]`; comfort is `None`
/// outside business hours.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub slots: usize,
    pub hvac_state: Vec<Vec<[f64; 3]>>,
    pub hvac_power: Vec<Vec<f64>>,
    pub pev_energy: Vec<Vec<f64>>,
    pub ewh_temp: Vec<Vec<f64>>,
    pub es_energy: Vec<Vec<f64>>,
    pub comfort_hvac: Vec<Vec<Option<f64>>>,
    pub comfort_pev: Vec<Vec<Option<f64>>>,
    pub comfort_ewh: Vec<Vec<Option<f64>>>,
    /// Supply minus demand, kW; zero when balanced.
    pub power_residual: Vec<f64>,
    /// Heat supplied minus heat load, kBtu; nonnegative when met.
    pub heat_residual: Vec<f64>,
    pub violations: Vec<SimViolation>,
}

impl Trajectory {
    pub fn max_power_residual(&self) -> f64 {
        self.power_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn min_heat_residual(&self) -> f64 {
        self.heat_residual.iter().fold(f64::INFINITY, |m, r| m.min(*r))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut h = vec!["slot".to_string(), "power_residual".into(), "heat_residual".into()];
        for i in 0..self.hvac_state.len() {
            h.extend([format!("indoor_{i}"), format!("inner_wall_{i}"), format!("outer_wall_{i}"), format!("hvac_p_{i}"), format!("j_hvac_{i}")]);
        }
        for k in 0..self.pev_energy.len() {
            h.extend([format!("pev_e_{k}"), format!("j_pev_{k}")]);
        }
        for j in 0..self.ewh_temp.len() {
            h.extend([format!("ewh_c_{j}"), format!("j_ewh_{j}")]);
        }
        h.extend((0..self.es_energy.len()).map(|n| format!("es_e_{n}")));
        w.write_record(&h)?;
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for t in 0..self.slots {
            let mut row = vec![(t + 1).to_string(), fmt_num(self.power_residual[t]), fmt_num(self.heat_residual[t])];
            for i in 0..self.hvac_state.len() {
                row.extend(self.hvac_state[i][t].iter().map(|v| fmt_num(*v)));
                row.push(fmt_num(self.hvac_power[i][t]));
                row.push(opt(self.comfort_hvac[i][t]));
            }
            for k in 0..self.pev_energy.len() {
                row.push(fmt_num(self.pev_energy[k][t]));
                row.push(opt(self.comfort_pev[k][t]));
            }
            for j in 0..self.ewh_temp.len() {
                row.push(fmt_num(self.ewh_temp[j][t]));
                row.push(opt(self.comfort_ewh[j][t]));
            }
            row.extend(self.es_energy.iter().map(|s| fmt_num(s[t])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f)).map_err(|e| CoreError::csv(path, e))
    }
}

fn check_len(name: &str, series: &[Vec<f64>], devices: usize, slots: usize) -> Result<()> {
    if series.len() != devices || series.iter().any(|s| s.len() != slots) {
        return Err(CoreError::Dimension(format!(
            "{name}: expected {devices} devices x {slots} slots"
        )));
    }
    Ok(())
}

/// Replays a dispatch through the device dynamics of `model` under `scenario`.
pub fn simulate_schedule(
    model: &CampusModel,
    da: (&[f64], &[f64]),
    d: &Dispatch,
    scenario: &Scenario,
) -> Result<Trajectory> {
    let n = model.time.slots_per_day;
    let dt = model.time.slot_hours;
    let nb = model.buildings.len();
    let ewhs = model.ewhs();
    let storages = model.storages();
    let boilers = model.boilers();
    if da.0.len() != n || da.1.len() != n {
        return Err(CoreError::Dimension("day-ahead series length".into()));
    }
    for (name, s) in [("rt_buy", &d.rt_buy), ("rt_sell", &d.rt_sell)] {
        if s.len() != n {
            return Err(CoreError::Dimension(format!("{name} length {}", s.len())));
        }
    }
    check_len("hvac_power", &d.hvac_power, nb, n)?;
    check_len("pev_power", &d.pev_power, model.pevs.len(), n)?;
    check_len("ewh_power", &d.ewh_power, ewhs.len(), n)?;
    check_len("boiler_heat", &d.boiler_heat, boilers.len(), n)?;
    check_len("es_charge", &d.es_charge, storages.len(), n)?;
    check_len("es_discharge", &d.es_discharge, storages.len(), n)?;
    scenario.check(n)?;
    if scenario.n_pev() != model.pevs.len() || scenario.n_ewh() != ewhs.len() {
        return Err(CoreError::Dimension("scenario device counts differ from the campus".into()));
    }

    let mut viol = Vec::new();
    let mut flag = |slot: usize, device: String, message: String| viol.push(SimViolation { slot, device, message });
    let g_max = model.grid.g_max;
    for t in 0..n {
        if da.0[t] > g_max + SIM_TOL || da.1[t] > g_max + SIM_TOL || da.0[t] < -SIM_TOL || da.1[t] < -SIM_TOL {
            flag(t, "pcc".into(), format!("day-ahead exchange outside [0, {g_max}]"));
        }
        let lim = g_max * scenario.dr[t];
        for (what, v) in [("buy", d.rt_buy[t]), ("sell", d.rt_sell[t])] {
            if v > lim + SIM_TOL || v < -SIM_TOL {
                flag(t, "pcc".into(), format!("real-time {what} {v} outside [0, {lim}]"));
            }
        }
    }

    let business = |t: usize| model.time.is_business(t);
    let mut hvac_state = Vec::with_capacity(nb);
    let mut comfort_hvac = Vec::with_capacity(nb);
    for (i, b) in model.buildings.iter().enumerate() {
        let h = &b.hvac;
        let p_max = h.p_max_kw(model.p_base);
        let mut x = HvacState::from_array(h.initial);
        let mut states = Vec::with_capacity(n);
        let mut comfort = Vec::with_capacity(n);
        for t in 0..n {
            let p = d.hvac_power[i][t];
            if p < -SIM_TOL || p > p_max + SIM_TOL {
                flag(t, format!("hvac_{i}"), format!("power {p} outside [0, {p_max}]"));
            }
            x = hvac_step(x, HvacInput::new(scenario.outdoor_temp[t], scenario.irradiance[t], p, h), h);
            let c = hvac_indoor(x, h);
            if business(t) {
                if c < h.band.c_min() - SIM_TOL || c > h.band.c_max() + SIM_TOL {
                    flag(t, format!("hvac_{i}"), format!("indoor {c} outside comfort band"));
                }
                comfort.push(Some(hvac_comfort(c, &h.band)));
            } else {
                comfort.push(None);
            }
            states.push(x.to_array());
        }
        hvac_state.push(states);
        comfort_hvac.push(comfort);
    }

    let mut pev_energy = Vec::with_capacity(model.pevs.len());
    let mut comfort_pev = Vec::with_capacity(model.pevs.len());
    for (k, pv) in model.pevs.iter().enumerate() {
        let mut e = pv.e_init;
        let mut es = Vec::with_capacity(n);
        let mut cs = Vec::with_capacity(n);
        for t in 0..n {
            let p = d.pev_power[k][t];
            let cap = pv.p_charge_max * scenario.availability[k][t] as f64;
            if p < -SIM_TOL || p > cap + SIM_TOL {
                flag(t, format!("pev_{k}"), format!("charge {p} outside [0, {cap}]"));
            }
            e = pev_advance(e, p, pv, dt);
            if e < pv.e_min - SIM_TOL || e > pv.e_max + SIM_TOL {
                flag(t, format!("pev_{k}"), format!("energy {e} outside [{}, {}]", pv.e_min, pv.e_max));
            }
            es.push(e);
            cs.push(business(t).then(|| pev_comfort(e, pv)));
        }
        pev_energy.push(es);
        comfort_pev.push(cs);
    }

    // Boiler heat reaching each tank.
    let mut tank_heat = vec![vec![0.0; n]; ewhs.len()];
    for b in 0..boilers.len() {
        if let Some(j) = model.boiler_target(b) {
            for t in 0..n {
                tank_heat[j][t] += d.boiler_heat[b][t];
            }
        }
        for t in 0..n {
            let h = d.boiler_heat[b][t];
            if h < -SIM_TOL || h > boilers[b].1.h_max + SIM_TOL {
                flag(t, format!("boiler_{b}"), format!("heat {h} outside [0, {}]", boilers[b].1.h_max));
            }
        }
    }
    let mut ewh_temp = Vec::with_capacity(ewhs.len());
    let mut comfort_ewh = Vec::with_capacity(ewhs.len());
    for (j, (_, e)) in ewhs.iter().enumerate() {
        let mut c = e.temp_init;
        let mut cs = Vec::with_capacity(n);
        let mut js = Vec::with_capacity(n);
        let mut energy = 0.0;
        for t in 0..n {
            let l = d.ewh_power[j][t];
            let in_window = t >= e.window.0 && t <= e.window.1;
            let (lo, hi) = if in_window { (e.l_min, e.l_max) } else { (0.0, 0.0) };
            if l < lo - SIM_TOL || l > hi + SIM_TOL {
                flag(t, format!("ewh_{j}"), format!("power {l} outside [{lo}, {hi}]"));
            }
            energy += kw_to_kj(l, dt);
            c += ewh_increment(l, tank_heat[j][t], scenario.heat_loss[j][t], e, dt);
            if business(t) {
                if c < e.band.c_min() - SIM_TOL || c > e.band.c_max() + SIM_TOL {
                    flag(t, format!("ewh_{j}"), format!("temperature {c} outside comfort band"));
                }
                js.push(Some(ewh_comfort(c, e)));
            } else {
                js.push(None);
            }
            cs.push(c);
        }
        let budget = scenario.ewh_budget[j];
        if (energy - budget).abs() > SIM_TOL * budget.abs().max(1.0) {
            flag(n - 1, format!("ewh_{j}"), format!("delivered {energy} kJ, budget {budget} kJ"));
        }
        ewh_temp.push(cs);
        comfort_ewh.push(js);
    }

    let mut es_energy = Vec::with_capacity(storages.len());
    for (u, (_, s)) in storages.iter().enumerate() {
        let mut e = s.e_init;
        let mut series = Vec::with_capacity(n);
        for t in 0..n {
            let (ch, dis) = (d.es_charge[u][t], d.es_discharge[u][t]);
            if ch > 1e-9 && dis > 1e-9 {
                flag(t, format!("es_{u}"), "simultaneous charge and discharge".into());
            }
            if ch < -SIM_TOL || ch > s.p_charge_max + SIM_TOL || dis < -SIM_TOL || dis > s.p_discharge_max + SIM_TOL {
                flag(t, format!("es_{u}"), format!("rates ({ch}, {dis}) outside limits"));
            }
            e = es_advance(e, ch, dis, s, dt);
            if e < s.e_min - SIM_TOL || e > s.e_max + SIM_TOL {
                flag(t, format!("es_{u}"), format!("energy {e} outside [{}, {}]", s.e_min, s.e_max));
            }
            series.push(e);
        }
        if (series[0] - series[n - 1]).abs() > SIM_TOL {
            flag(n - 1, format!("es_{u}"), "final energy differs from the first slot".into());
        }
        es_energy.push(series);
    }

    let mut power_residual = Vec::with_capacity(n);
    let mut heat_residual = Vec::with_capacity(n);
    for t in 0..n {
        let supply = scenario.solar_total(t)
            + d.rt_buy[t]
            - d.rt_sell[t]
            + d.es_discharge.iter().map(|s| s[t]).sum::<f64>()
            - d.es_charge.iter().map(|s| s[t]).sum::<f64>();
        let demand = scenario.base_load[t]
            + d.ewh_power.iter().map(|s| s[t]).sum::<f64>()
            + d.hvac_power.iter().map(|s| s[t]).sum::<f64>()
            + d.pev_power.iter().map(|s| s[t]).sum::<f64>();
        power_residual.push(supply - demand);
        let heat = ewhs
            .iter()
            .enumerate()
            .map(|(j, (_, e))| e.zeta * kw_to_kbtu(d.ewh_power[j][t], dt))
            .sum::<f64>()
            + d.boiler_heat.iter().map(|s| s[t]).sum::<f64>();
        heat_residual.push(heat - scenario.heat_load[t]);
    }
    for t in 0..n {
        if power_residual[t].abs() > SIM_TOL {
            flag(t, "balance".into(), format!("power residual {}", power_residual[t]));
        }
        if heat_residual[t] < -SIM_TOL {
            flag(t, "balance".into(), format!("heat shortfall {}", -heat_residual[t]));
        }
    }

    Ok(Trajectory {
        slots: n,
        hvac_state,
        hvac_power: d.hvac_power.clone(),
        pev_energy,
        ewh_temp,
        es_energy,
        comfort_hvac,
        comfort_pev,
        comfort_ewh,
        power_residual,
        heat_residual,
        violations: viol,
    })
}
