//! Default parameterization of the six-building campus.
//!
//! HVAC matrices are stable placeholders defined for 15-minute slots; real
//! studies should override them.

use crate::campus::{
    matmul, BoilerParams, ComfortBand, EsParams, EwhParams, HvacMode, HvacParams, Mat3, PevParams,
    TimeGrid,
};

pub const P_BASE_KW: f64 = 1867.0;
pub const H_BASE_KBTU: f64 = 1224.0;
pub const SOLAR_CAPACITY_KW: f64 = 1500.0;
pub const G_MAX_KW: f64 = 1867.0;
pub const DA_SELL_RATIO: f64 = 0.8;
pub const PENALTY_COST: f64 = 0.02;
pub const GAS_PRICE: f64 = 0.006;
pub const BUILDINGS: usize = 6;
pub const PEVS: usize = 50;
pub const POPULATION: u32 = 100;

pub const HVAC_P_MAX: [f64; 6] = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35];
pub const HVAC_COP: f64 = 3.0;
pub const HVAC_BAND: ComfortBand = ComfortBand { desired: 24.0, delta: 2.0, epsilon: 0.5 };
pub const HVAC_INITIAL: [f64; 3] = [24.0, 24.0, 24.0];
/// Indoor change per slot at full cooling power.
pub const HVAC_FULL_POWER_STEP: f64 = 0.5;
pub const BASE_SLOT_HOURS: f64 = 0.25;

pub const HVAC_BETA: Mat3 = [
    [0.9341, 0.05, 0.0],
    [0.02, 0.88, 0.10],
    [0.0, 0.02, 0.6627],
];

pub const PEV_ETA: f64 = 0.98;
pub const PEV_DESIRED_FRAC: f64 = 0.8;
pub const PEV_BASE_FRAC: f64 = 0.1;
pub const PEV_INIT_FRAC: f64 = 0.1;
pub const DEGRADATION_COST: f64 = 0.0035;

pub const EWH_L_MIN: f64 = 0.0;
pub const EWH_L_MAX: f64 = 50.0;
pub const EWH_ZETA: f64 = 1.2;
pub const EWH_MASS: f64 = 20_000.0;
pub const C_WATER: f64 = 4.186;
pub const EWH_BAND: ComfortBand = ComfortBand { desired: 40.0, delta: 10.0, epsilon: 0.0 };
pub const EWH_TEMP_INIT: f64 = 30.0;
/// Hours of the day during which the heater may run, as [start, end).
pub const EWH_WINDOW_HOURS: (f64, f64) = (6.0, 22.0);

pub const ES_E_MIN: f64 = 4.0;
pub const ES_E_MAX: f64 = 76.0;
pub const ES_P_MAX: f64 = 4.0;
pub const ES_ETA: f64 = 0.98;
pub const ES_E_INIT: f64 = 40.0;

pub const BOILER_H_MAX: f64 = 206.0;

/// (class, e_min, e_max, p_charge_max, market share).
pub const PEV_CLASSES: [(&str, f64, f64, f64, f64); 3] = [
    ("model_s_75d", 3.8, 75.0, 11.5, 0.70),
    ("model_x_100d", 5.0, 100.0, 17.2, 0.10),
    ("leaf_sv", 1.5, 30.0, 3.6, 0.02),
];

pub fn time_grid(slots_per_day: usize) -> TimeGrid {
    let slot_hours = 24.0 / slots_per_day as f64;
    TimeGrid {
        slots_per_day,
        slot_hours,
        business_start_slot: (8.0 / slot_hours).round() as usize,
        business_end_slot: (20.0 / slot_hours).round() as usize,
    }
}

/// Alpha for 15-minute slots; columns act on (outdoor, irradiance, thermal power).
pub fn hvac_alpha(cop: f64, p_max_kw: f64) -> Mat3 {
    let a02 = HVAC_FULL_POWER_STEP / (cop * p_max_kw);
    [[0.0159, 0.06, a02], [0.0, 0.02, 0.0], [0.3173, 0.08, 0.0]]
}

/// Exact discretization of `k` base slots per slot: `(beta^k, (I + beta + .. + beta^(k-1)) alpha)`.
pub fn resample(beta: &Mat3, alpha: &Mat3, k: usize) -> (Mat3, Mat3) {
    let mut power = identity();
    let mut sum = [[0.0; 3]; 3];
    for _ in 0..k {
        for i in 0..3 {
            for j in 0..3 {
                sum[i][j] += power[i][j];
            }
        }
        power = matmul(&power, beta);
    }
    (power, matmul(&sum, alpha))
}

pub fn identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

/// Base slots per slot, if the slot length is a whole multiple of 15 minutes.
pub fn base_slots_per_slot(slot_hours: f64) -> Option<usize> {
    let k = slot_hours / BASE_SLOT_HOURS;
    let r = k.round();
    (r >= 1.0 && (k - r).abs() < 1e-9).then_some(r as usize)
}

pub fn hvac(index: usize, time: &TimeGrid, p_base: f64) -> HvacParams {
    let p_max = HVAC_P_MAX[index % HVAC_P_MAX.len()];
    hvac_with(p_max, HVAC_COP, time, p_base)
}

pub fn hvac_with(p_max: f64, cop: f64, time: &TimeGrid, p_base: f64) -> HvacParams {
    let alpha = hvac_alpha(cop, p_max * p_base);
    let k = base_slots_per_slot(time.slot_hours).unwrap_or(1);
    let (beta, alpha) = resample(&HVAC_BETA, &alpha, k);
    HvacParams {
        beta,
        alpha,
        gamma: [1.0, 0.0, 0.0],
        cop,
        p_max,
        mode: HvacMode::Cooling,
        band: HVAC_BAND,
        initial: HVAC_INITIAL,
    }
}

pub fn ewh_window(time: &TimeGrid) -> (usize, usize) {
    let start = (EWH_WINDOW_HOURS.0 / time.slot_hours).round() as usize;
    let end = ((EWH_WINDOW_HOURS.1 / time.slot_hours).round() as usize).min(time.slots_per_day);
    (start, end.saturating_sub(1).max(start))
}

pub fn ewh(time: &TimeGrid) -> EwhParams {
    EwhParams {
        l_min: EWH_L_MIN,
        l_max: EWH_L_MAX,
        zeta: EWH_ZETA,
        mass: EWH_MASS,
        c_water: C_WATER,
        band: EWH_BAND,
        window: ewh_window(time),
        temp_init: EWH_TEMP_INIT,
    }
}

pub fn storage() -> EsParams {
    EsParams {
        e_min: ES_E_MIN,
        e_max: ES_E_MAX,
        p_charge_max: ES_P_MAX,
        p_discharge_max: ES_P_MAX,
        eta_charge: ES_ETA,
        eta_discharge: ES_ETA,
        e_init: ES_E_INIT,
        degradation_cost: DEGRADATION_COST,
    }
}

pub fn boiler() -> BoilerParams {
    BoilerParams { h_max: BOILER_H_MAX }
}

pub fn pev(class: &str, e_min: f64, e_max: f64, p_charge_max: f64) -> PevParams {
    PevParams {
        class: class.to_string(),
        e_min,
        e_max,
        p_charge_max,
        eta_charge: PEV_ETA,
        e_desired: PEV_DESIRED_FRAC * e_max,
        e_base: PEV_BASE_FRAC * e_max,
        e_init: PEV_INIT_FRAC * e_max,
        degradation_cost: DEGRADATION_COST,
    }
}

/// Class counts for a fleet of `n`: shares rounded, remainder to the last class.
pub fn fleet_counts(n: usize, shares: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = shares.iter().map(|s| (s * n as f64).round() as usize).collect();
    let Some(last) = counts.len().checked_sub(1) else {
        return counts;
    };
    let head: usize = counts[..last].iter().sum();
    counts[last] = n.saturating_sub(head);
    counts
}

/// Default fleet, class blocks in table order.
pub fn fleet(n: usize) -> Vec<PevParams> {
    let shares: Vec<f64> = PEV_CLASSES.iter().map(|c| c.4).collect();
    let counts = fleet_counts(n, &shares);
    let mut out = Vec::with_capacity(n);
    for (c, &count) in PEV_CLASSES.iter().zip(&counts) {
        for _ in 0..count {
            out.push(pev(c.0, c.1, c.2, c.3));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campus::spectral_radius;

    #[test]
    fn beta_radius_near_095() {
        let r = spectral_radius(&HVAC_BETA);
        assert!((r - 0.95).abs() < 2e-3, "{r}");
    }

    #[test]
    fn full_power_step_moves_half_degree() {
        let h = hvac(0, &time_grid(96), P_BASE_KW);
        let thermal = h.cop * h.p_max_kw(P_BASE_KW);
        assert!((h.alpha[0][2] * thermal - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resample_one_is_identity_map() {
        let a = hvac_alpha(3.0, 100.0);
        let (b1, a1) = resample(&HVAC_BETA, &a, 1);
        assert_eq!(b1, HVAC_BETA);
        assert_eq!(a1, a);
    }

    #[test]
    fn resample_matches_repeated_steps() {
        let a = hvac_alpha(3.0, 100.0);
        let (b4, a4) = resample(&HVAC_BETA, &a, 4);
        let u = [29.0, 0.7, -300.0];
        let mut x = [24.0, 25.0, 27.0];
        let start = x;
        for _ in 0..4 {
            let mut n = [0.0; 3];
            for i in 0..3 {
                n[i] = (0..3).map(|j| HVAC_BETA[i][j] * x[j] + a[i][j] * u[j]).sum();
            }
            x = n;
        }
        for i in 0..3 {
            let y: f64 = (0..3).map(|j| b4[i][j] * start[j] + a4[i][j] * u[j]).sum();
            assert!((y - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fleet_mix() {
        assert_eq!(fleet_counts(50, &[0.7, 0.1, 0.02]), vec![35, 5, 10]);
        let f = fleet(50);
        assert_eq!(f.len(), 50);
        assert_eq!(f[0].e_max, 75.0);
        assert_eq!(f[35].e_max, 100.0);
        assert_eq!(f[49].e_max, 30.0);
        assert!((f[0].e_desired - 60.0).abs() < 1e-12);
    }

    #[test]
    fn windows_scale_with_slot_length() {
        assert_eq!(ewh_window(&time_grid(96)), (24, 87));
        assert_eq!(ewh_window(&time_grid(24)), (6, 21));
        let t = time_grid(24);
        assert_eq!((t.business_start_slot, t.business_end_slot), (8, 20));
    }
}
