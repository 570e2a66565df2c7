//! Seeded synthetic history shaped like a warm-season campus.
//!
//! Stands in for measured load, weather and price records. Magnitudes scale
//! with `p_base`, `h_base` and the installed solar so that the default and
//! desk campuses both admit feasible schedules.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::campus::CampusModel;
use crate::history::{AvailabilityDay, DemandDay, HistoricalDataset, PriceDay, WeatherDay};
use crate::units::KJ_PER_KWH;

/// Daily hot-water energy per EWH, kWh.
pub const EWH_DAILY_KWH: f64 = 300.0;
/// Ambient tank loss per 15 minutes, kBtu.
pub const EWH_AMBIENT_LOSS: f64 = 2.0;

fn hour_of(t: usize, dt: f64) -> f64 {
    (t as f64 + 0.5) * dt
}

/// Smooth occupancy bump, 0 at night and 1 mid-afternoon.
fn occupancy(h: f64) -> f64 {
    if !(7.0..=21.0).contains(&h) {
        return 0.0;
    }
    (PI * (h - 7.0) / 14.0).sin().powi(2)
}

pub fn generate_history(m: &CampusModel, days: usize, seed: u64) -> HistoricalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.time.slots_per_day;
    let dt = m.time.slot_hours;
    let n_ewh = m.n_ewh();
    let ewh_list = m.ewhs();
    let loss_per_slot = EWH_AMBIENT_LOSS * dt / 0.25;

    let mut ds = HistoricalDataset {
        slots_per_day: n,
        prices: Vec::with_capacity(days),
        weather: Vec::with_capacity(days),
        demand: Vec::with_capacity(days),
        availability: Vec::with_capacity(days),
    };
    for _ in 0..days {
        let level: f64 = rng.gen_range(0.8..1.2);
        let mut da_buy = Vec::with_capacity(n);
        let mut rt = Vec::with_capacity(n);
        for t in 0..n {
            let h = hour_of(t, dt);
            let shape = 0.5 - 0.5 * (2.0 * PI * (h - 5.0) / 24.0).cos();
            let p = ((0.03 + 0.07 * shape) * level + rng.gen_range(-0.004..0.004)).max(0.005);
            da_buy.push(p);
            rt.push((p * rng.gen_range(0.85..1.15)).max(0.0));
        }
        let da_sell = da_buy.iter().map(|p| p * m.grid.da_sell_ratio).collect();
        ds.prices.push(PriceDay { da_buy, da_sell, rt });

        let warm: f64 = rng.gen_range(-1.0..1.0);
        let clear: f64 = rng.gen_range(0.7..1.0);
        let mut outdoor = Vec::with_capacity(n);
        let mut irr = Vec::with_capacity(n);
        for t in 0..n {
            let h = hour_of(t, dt);
            let c = 26.0 + warm + 3.0 * (2.0 * PI * (h - 15.0) / 24.0).cos() + rng.gen_range(-0.3..0.3);
            outdoor.push(c.clamp(21.0, 31.0));
            let sun = if (6.0..20.0).contains(&h) { (PI * (h - 6.0) / 14.0).sin() } else { 0.0 };
            irr.push((0.85 * clear * sun).max(0.0));
        }
        let solar = m
            .buildings
            .iter()
            .map(|b| {
                let f: f64 = rng.gen_range(0.9..1.0);
                irr.iter().map(|g| b.solar_kw * g * f).collect()
            })
            .collect();
        ds.weather.push(WeatherDay { outdoor_temp: outdoor, irradiance: irr, solar });

        let busy: f64 = rng.gen_range(0.9..1.1);
        let mut base_load = Vec::with_capacity(n);
        let mut heat_load = Vec::with_capacity(n);
        for t in 0..n {
            let o = occupancy(hour_of(t, dt));
            let jitter = rng.gen_range(0.97..1.03);
            base_load.push(m.p_base * (0.13 + 0.22 * o * busy) * jitter);
            heat_load.push(m.h_base * (0.3 + 0.6 * o * busy).min(0.9) * jitter.min(1.0));
        }
        let mut ewh_energy = Vec::with_capacity(n_ewh);
        let mut heat_loss = Vec::with_capacity(n_ewh);
        for (_, e) in &ewh_list {
            let (a, b) = e.window;
            let cap_kwh = e.l_max * dt * (b + 1 - a) as f64;
            let daily = (EWH_DAILY_KWH * rng.gen_range(0.85..1.15)).min(0.8 * cap_kwh).max(e.l_min * dt * (b + 1 - a) as f64);
            let weights: Vec<f64> = (0..n)
                .map(|t| if t >= a && t <= b { 0.2 + occupancy(hour_of(t, dt)) } else { 0.0 })
                .collect();
            let total: f64 = weights.iter().sum();
            ewh_energy.push(
                weights
                    .iter()
                    .map(|w| if total > 0.0 { daily * KJ_PER_KWH * w / total } else { 0.0 })
                    .collect(),
            );
            heat_loss.push(heat_load.iter().map(|q| q / n_ewh as f64 + loss_per_slot).collect());
        }
        ds.demand.push(DemandDay { base_load, heat_load, ewh_energy, heat_loss });

        let mut pev = Vec::with_capacity(m.pevs.len());
        for _ in 0..m.pevs.len() {
            let present = rng.gen_bool(0.9);
            let arrive: f64 = rng.gen_range(7.0..10.0);
            let depart: f64 = rng.gen_range(17.0..19.5);
            pev.push(
                (0..n)
                    .map(|t| {
                        let h = hour_of(t, dt);
                        u8::from(present && h >= arrive && h < depart)
                    })
                    .collect(),
            );
        }
        ds.availability.push(AvailabilityDay { pev });
    }
    ds
}
