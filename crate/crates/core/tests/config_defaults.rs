use campus_core::config::{default_campus, load_campus_config, load_run_config_file, to_json_string};
use campus_core::{validate, CampusModel};
use proptest::prelude::*;
use std::path::Path;

#[test]
fn json_round_trip_is_lossless() {
    let m = default_campus();
    let back = load_campus_config(&to_json_string(&m)).unwrap();
    assert_eq!(back, m);

    let desk = load_run_config_file(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json")).unwrap();
    let back = load_campus_config(&to_json_string(&desk.campus)).unwrap();
    assert_eq!(back, desk.campus);
}

#[test]
fn shipped_configs_validate() {
    for name in ["default.json", "desk.json"] {
        let cfg = load_run_config_file(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap();
        assert!(validate(&cfg.campus).is_empty(), "{name}: {}", validate(&cfg.campus));
    }
}

#[test]
fn comfort_parameters_match_published_table() {
    let m = default_campus();
    for b in &m.buildings {
        assert_eq!((b.hvac.band.desired, b.hvac.band.delta, b.hvac.band.epsilon), (24.0, 2.0, 0.5));
        for e in &b.ewhs {
            assert_eq!((e.band.desired, e.band.delta, e.temp_init), (40.0, 10.0, 30.0));
        }
    }
    for p in &m.pevs {
        assert!((p.e_desired - 0.8 * p.e_max).abs() < 1e-12);
        assert!((p.e_base - 0.1 * p.e_max).abs() < 1e-12);
        assert!((p.e_init - 0.1 * p.e_max).abs() < 1e-12);
    }
}

#[test]
fn hvac_limits_match_published_table() {
    let m = default_campus();
    let p: Vec<f64> = m.buildings.iter().map(|b| b.hvac.p_max).collect();
    assert_eq!(p, [0.1, 0.15, 0.2, 0.25, 0.3, 0.35]);
    assert!(m.buildings.iter().all(|b| b.hvac.mode.sigma() == -1.0));
}

#[test]
fn storage_matches_published_table() {
    let m = default_campus();
    let es: Vec<_> = m.buildings.iter().flat_map(|b| &b.storages).collect();
    assert_eq!(es.len(), 6);
    for s in es {
        assert_eq!((s.e_min, s.e_max, s.p_charge_max, s.p_discharge_max), (4.0, 76.0, 4.0, 4.0));
        assert_eq!((s.eta_charge, s.eta_discharge), (0.98, 0.98));
        // Half of the 80 kWh capacity.
        assert_eq!(s.e_init, 40.0);
        assert_eq!(s.degradation_cost, 0.0035);
    }
}

#[test]
fn fleet_matches_published_table() {
    let m = default_campus();
    assert_eq!(m.pevs.len(), 50);
    let spec = |class: &str| match class {
        "model_s_75d" => (3.8, 75.0, 11.5),
        "model_x_100d" => (5.0, 100.0, 17.2),
        "leaf_sv" => (1.5, 30.0, 3.6),
        other => panic!("unexpected class {other}"),
    };
    for p in &m.pevs {
        assert_eq!((p.e_min, p.e_max, p.p_charge_max), spec(&p.class));
        assert_eq!(p.degradation_cost, 0.0035);
    }
    let model_s = m.pevs.iter().filter(|p| p.class == "model_s_75d").count();
    let model_x = m.pevs.iter().filter(|p| p.class == "model_x_100d").count();
    assert!(model_s > model_x);
}

#[test]
fn campus_scalars() {
    let m = default_campus();
    assert_eq!((m.p_base, m.h_base), (1867.0, 1224.0));
    assert_eq!(m.grid.g_max, 1867.0);
    assert_eq!(m.grid.da_sell_ratio, 0.8);
    assert_eq!(m.buildings.len(), 6);
    assert_eq!(m.time.slots_per_day, 96);
    assert_eq!(m.time.slot_hours, 0.25);
    // Business hours 8 a.m. to 8 p.m.
    assert_eq!(m.time.business_slots(), 48);
    assert!(!m.time.is_business(31) && m.time.is_business(32) && m.time.is_business(79) && !m.time.is_business(80));
    for b in &m.buildings {
        assert_eq!((b.ewhs.len(), b.boilers.len(), b.storages.len()), (1, 1, 1));
        assert_eq!(b.boilers[0].h_max, 206.0);
        assert_eq!(b.ewhs[0].zeta, 1.2);
    }
}

fn breaks(m: &mut CampusModel, which: usize, scale: f64) -> &'static str {
    let b = which % m.buildings.len();
    match which % 7 {
        0 => {
            m.buildings[b].hvac.p_max = -scale;
            "hvac.p_max"
        }
        1 => {
            m.buildings[b].hvac.band.delta = -scale;
            "hvac.band"
        }
        2 => {
            let s = &mut m.buildings[b].storages[0];
            s.e_min = s.e_max + scale;
            "storages[0]"
        }
        3 => {
            m.buildings[b].boilers[0].h_max = -scale;
            "boilers[0].h_max"
        }
        4 => {
            m.p_base = -scale;
            "bases.p_base"
        }
        5 => {
            m.buildings[b].ewhs[0].mass = -scale;
            "ewhs[0].mass"
        }
        _ => {
            m.grid.g_max = -scale;
            "grid.g_max"
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn single_broken_field_is_reported_by_path(which in 0usize..42, scale in 0.01f64..100.0) {
        let mut m = default_campus();
        let field = breaks(&mut m, which, scale);
        let report = validate(&m);
        prop_assert!(!report.is_empty());
        prop_assert!(report.violations.iter().any(|v| v.path.contains(field)), "{field} not in {report}");
    }

    #[test]
    fn positive_rescaling_stays_valid(k in 0.1f64..3.0, b in 0usize..6) {
        let mut m = default_campus();
        m.buildings[b].hvac.p_max *= k;
        m.buildings[b].boilers[0].h_max *= k;
        m.grid.g_max *= k;
        prop_assert!(validate(&m).is_empty());
    }
}
