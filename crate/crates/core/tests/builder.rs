use std::path::Path;

use campus_core::builder::{build, extract_schedule, BuildOptions};
use campus_core::config::{load_campus_config, load_run_config_file, HistorySource, RunConfig};
use campus_core::dynamics::{ewh_comfort, hvac_comfort, pev_comfort, simulate_schedule};
use campus_core::scenario::{generate, reduce, ScenarioSet};
use campus_core::synth::generate_history;
use campus_milp::{solve_milp, MilpOptions, MilpStatus, VarKind};

fn desk() -> (RunConfig, ScenarioSet) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.json");
    let cfg = load_run_config_file(&path).unwrap();
    let HistorySource::Synthetic { days, seed } = cfg.history else { panic!("desk uses synthetic history") };
    let hist = generate_history(&cfg.campus, days, seed);
    let all = generate(&hist, &cfg.campus.time, cfg.run.seed).unwrap();
    let set = reduce(&all, cfg.run.scenarios).unwrap();
    (cfg, set)
}

#[test]
fn hand_count_single_building() {
    let m = load_campus_config(
        r#"{"time": {"slots_per_day": 4, "slot_hours": 6.0},
            "buildings": [{"ewhs": [{}], "boilers": [{}], "storages": [{}]}],
            "pevs": {"count": 0}}"#,
    )
    .unwrap();
    let hist = generate_history(&m, 1, 1);
    let set = generate(&hist, &m.time, 1).unwrap();
    assert_eq!(set.len(), 1);
    let built = build(&m, &set, &BuildOptions::default()).unwrap();
    let business: Vec<usize> = (0..4).filter(|&t| m.time.is_business(t)).collect();
    assert_eq!(business, vec![1, 2]);
    let st = built.statistics();
    // first stage 2x4; rt 8, psi 8, hvac power 4, hvac states 12, ewh power 4, ewh temp 4,
    // boiler 4, storage charge/discharge/energy 12, comfort 2 hvac + 2 ewh
    assert_eq!(st.continuous_vars, 8 + 8 + 8 + 4 + 12 + 4 + 4 + 4 + 12 + 4);
    assert_eq!(st.binary_vars, 4);
    // hvac 12, ewh budget 1, ewh temperature 4, storage 4, cyclic 1, power balance 4
    assert_eq!(st.equality_rows, 12 + 1 + 4 + 4 + 1 + 4);
    // storage rates 8, heat balance 4, penalty 16, comfort ramps 2x2 hvac + 2 ewh
    assert_eq!(st.inequality_rows, 8 + 4 + 16 + 4 + 2);
}

#[test]
fn empty_set_rejected() {
    assert!(ScenarioSet::from_scenarios(Vec::new(), 0, "empty").is_err());
}

#[test]
fn binary_count_is_units_times_slots_times_scenarios() {
    let (cfg, set) = desk();
    let built = build(&cfg.campus, &set, &BuildOptions::default()).unwrap();
    let st = built.statistics();
    assert_eq!(st.binary_vars, cfg.campus.n_es() * 24 * set.len());
    let binaries = built.milp.variables().iter().filter(|v| v.kind == VarKind::Binary).count();
    assert_eq!(binaries, st.binary_vars);
    // every storage keeps its cyclic row
    for s in 0..set.len() {
        for n in 0..cfg.campus.n_es() {
            let name = format!("escyc_n{n}_s{s}");
            assert!(built.milp.constraints().iter().any(|r| r.name == name), "{name}");
        }
    }
}

#[test]
fn desk_optimum_is_consistent_with_the_dynamics() {
    let (cfg, set) = desk();
    let m = &cfg.campus;
    let built = build(m, &set, &BuildOptions::default()).unwrap();
    let opts = MilpOptions { gap: 1e-4, ..Default::default() };
    let sol = solve_milp(&built.milp, &opts).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!(built.milp.max_violation(&sol.values).unwrap().max() <= 1e-6);
    let sched = extract_schedule(&built, m, &sol).unwrap();
    let l = &built.layout;
    for (s, d) in sched.dispatch.iter().enumerate() {
        let sc = set.get(s);
        let traj = simulate_schedule(m, (&sched.da_buy, &sched.da_sell), d, &sc).unwrap();
        assert!(traj.violations.is_empty(), "{:?}", &traj.violations[..traj.violations.len().min(3)]);
        assert!(traj.max_power_residual() <= 1e-6);
        assert!(traj.min_heat_residual() >= -1e-6);
        for &t in &l.comfort_slots {
            for i in 0..l.buildings {
                let j = sol.values[l.comfort_hvac(s, i, t).unwrap().0];
                let c = traj.hvac_state[i][t][0];
                assert!((j - hvac_comfort(c, &m.buildings[i].hvac.band)).abs() <= 1e-6, "hvac {i} t{t}");
            }
            for k in 0..l.pevs {
                let j = sol.values[l.comfort_pev(s, k, t).unwrap().0];
                assert!((j - pev_comfort(traj.pev_energy[k][t], &m.pevs[k])).abs() <= 1e-6, "pev {k} t{t}");
            }
            for (jj, (_, e)) in m.ewhs().iter().enumerate() {
                let j = sol.values[l.comfort_ewh(s, jj, t).unwrap().0];
                assert!((j - ewh_comfort(traj.ewh_temp[jj][t], e)).abs() <= 1e-6, "ewh {jj} t{t}");
            }
        }
        for t in 0..24 {
            assert!((d.psi1[t] - (sched.da_buy[t] - d.rt_buy[t]).abs()).abs() <= 1e-6);
            assert!((d.psi2[t] - (sched.da_sell[t] - d.rt_sell[t]).abs()).abs() <= 1e-6);
        }
    }
}
