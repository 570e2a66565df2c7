//! Acceptance checks. Prints one PASS/FAIL line per criterion and fails the
//! target if any criterion fails.
//!
//! Set `CAMPUS_ACCEPT_FAST=1` to skip the full-scale stages (criteria 1, 8 and
//! the timing half of 7); skipped checks are reported as SKIP, never as PASS.

#[path = "../../milp/tests/common/mod.rs"]
#[allow(dead_code)]
mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use campus_cli::pipeline::{run_pipeline, simulate_all, stage_build, stage_generate, stage_reduce, Flags, Run};
use campus_cli::report::comfort_report;
use campus_cli::settle::settle_all;
use campus_core::builder::{extract_schedule, BuiltModel};
use campus_core::dynamics::{ewh_comfort, hvac_comfort, pev_comfort, Trajectory};
use campus_core::scenario::{generate, kantorovich, reduce_with, Normalizer, ReduceOptions, ScenarioSet};
use campus_core::schedule::Schedule;
use campus_core::synth::generate_history;
use campus_milp::mps::{parse_mps, to_mps_string};
use campus_milp::{solve_external, solve_milp, MilpOptions, MilpSolution, MilpStatus};
use common::oracle::enumerate_binaries;
use common::random_milp::random_instance;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;
const GAP: f64 = 1e-4;
const EXCLUSIVE_TOL: f64 = 1e-9;
const PROB_TOL: f64 = 1e-12;
const BUILD_LIMIT: Duration = Duration::from_secs(60);
const RUN_LIMIT: Duration = Duration::from_secs(60);
const REDUCE_LIMIT: Duration = Duration::from_secs(30 * 60);
/// Wall-clock budget handed to HiGHS for the full-scale model. Without a start
/// point a single core does not finish the root LP in 30 minutes, so the
/// adapter first assembles an incumbent from per-scenario solves.
const EXTERNAL_TIME_LIMIT_S: u64 = 600;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[derive(Default)]
struct Report {
    lines: Vec<(usize, &'static str, String)>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}: {detail}");
        self.lines.push((id, verdict, detail));
    }

    fn skip(&mut self, id: usize, detail: String) {
        println!("criterion {id:>2} SKIP: {detail}");
        self.lines.push((id, "SKIP", detail));
    }

    fn failed(&self) -> usize {
        self.lines.iter().filter(|l| l.1 == "FAIL").count()
    }
}

struct Case {
    built: BuiltModel,
    sol: MilpSolution,
    schedule: Schedule,
    trajs: Vec<Trajectory>,
    set: ScenarioSet,
    run: Run,
    unified_cost: f64,
    comfort: f64,
    elapsed: Duration,
}

fn desk_case(no_comfort: bool, out: &Path) -> Case {
    let t0 = Instant::now();
    let mut flags = Flags::new(root().join("configs/desk.json"), out);
    flags.no_comfort = no_comfort;
    let mut run = Run::load(flags).unwrap();
    let hist = stage_generate(&mut run).unwrap();
    let (set, _) = stage_reduce(&mut run, &hist).unwrap();
    let built = stage_build(&mut run, &set, false).unwrap();
    let sol = solve_milp(&built.milp, &MilpOptions { gap: GAP, ..Default::default() }).unwrap();
    let schedule = extract_schedule(&built, &run.cfg.campus, &sol).unwrap();
    let trajs = simulate_all(&run, &set, &schedule).unwrap();
    let settlement = settle_all(&schedule, &set.scenarios(), &run.cfg.campus).unwrap();
    let comfort = trajs
        .iter()
        .enumerate()
        .map(|(s, tr)| set.probability(s) * comfort_report(tr, &run.cfg.campus).unwrap().normalized)
        .sum();
    let elapsed = t0.elapsed();
    Case { built, sol, schedule, trajs, set, run, unified_cost: settlement.expected_unified.total, comfort, elapsed }
}

fn max_exclusive_overlap(schedule: &Schedule) -> f64 {
    let mut worst: f64 = 0.0;
    for d in &schedule.dispatch {
        for (ch, dis) in d.es_charge.iter().zip(&d.es_discharge) {
            for t in 0..ch.len() {
                worst = worst.max(ch[t].min(dis[t]));
            }
        }
    }
    worst
}

fn criterion_2(r: &mut Report, with: &Case, without: &Case) {
    let allowance = 2.0 * GAP * without.unified_cost.abs().max(with.unified_cost.abs());
    let cost_ok = with.unified_cost >= without.unified_cost - allowance;
    let comfort_ok = without.comfort >= 0.9 || with.comfort - without.comfort >= 0.1;
    let time_ok = with.elapsed < RUN_LIMIT && without.elapsed < RUN_LIMIT;
    let statuses_ok = with.sol.status == MilpStatus::Optimal && without.sol.status == MilpStatus::Optimal;
    r.record(
        2,
        cost_ok && comfort_ok && time_ok && statuses_ok,
        format!(
            "unified cost with {:.6} >= without {:.6} (allowance {:.1e}); comfort with {:.4} vs without {:.4} (need +0.1 when < 0.9); runs {:.1?} / {:.1?} (< 60 s)",
            with.unified_cost, without.unified_cost, allowance, with.comfort, without.comfort, with.elapsed, without.elapsed
        ),
    );
}

fn criterion_3(r: &mut Report, c: &Case) {
    let m = &c.run.cfg.campus;
    let l = &c.built.layout;
    let x = &c.sol.values;
    let ewhs = m.ewhs();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (s, tr) in c.trajs.iter().enumerate() {
        for &t in &l.comfort_slots {
            for (i, b) in m.buildings.iter().enumerate() {
                let j = x[l.comfort_hvac(s, i, t).unwrap().0];
                worst = worst.max((j - hvac_comfort(tr.hvac_state[i][t][0], &b.hvac.band)).abs());
                checked += 1;
            }
            for (k, p) in m.pevs.iter().enumerate() {
                let j = x[l.comfort_pev(s, k, t).unwrap().0];
                worst = worst.max((j - pev_comfort(tr.pev_energy[k][t], p)).abs());
                checked += 1;
            }
            for (jj, (_, e)) in ewhs.iter().enumerate() {
                let j = x[l.comfort_ewh(s, jj, t).unwrap().0];
                worst = worst.max((j - ewh_comfort(tr.ewh_temp[jj][t], e)).abs());
                checked += 1;
            }
        }
    }
    r.record(3, checked > 0 && worst <= TOL, format!("{checked} comfort values, max |J - closed form| = {worst:.2e} (tol {TOL:.0e})"));
}

fn criterion_4(r: &mut Report, c: &Case) {
    let cp = c.run.cfg.campus.grid.penalty_cost;
    let mut worst: f64 = 0.0;
    for d in &c.schedule.dispatch {
        for t in 0..c.schedule.slots {
            worst = worst.max((d.psi1[t] - (c.schedule.da_buy[t] - d.rt_buy[t]).abs()).abs());
            worst = worst.max((d.psi2[t] - (c.schedule.da_sell[t] - d.rt_sell[t]).abs()).abs());
        }
    }
    r.record(4, cp > 0.0 && worst <= TOL, format!("c_p = {cp}, max |psi - |g_DA - g_RT|| = {worst:.2e} kW (tol {TOL:.0e})"));
}

/// One returned solution: label, worst MILP row violation and its replay.
type Replay<'a> = (&'a str, f64, &'a [Trajectory]);

fn criterion_5(r: &mut Report, replays: &[Replay]) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, rows, trajs) in replays {
        let power = trajs.iter().map(|t| t.max_power_residual()).fold(0.0, f64::max);
        let heat = trajs.iter().map(|t| t.min_heat_residual()).fold(f64::INFINITY, f64::min);
        let viol: usize = trajs.iter().map(|t| t.violations.len()).sum();
        pass &= power <= TOL && heat >= -TOL && viol == 0 && *rows <= TOL;
        parts.push(format!(
            "{label}: {} scenarios, max |power residual| {power:.2e} kW, min heat slack {heat:.2e} kBtu, {viol} device violations, max row violation {rows:.2e}",
            trajs.len()
        ));
    }
    r.record(5, pass, parts.join("; "));
}

fn criterion_6(r: &mut Report) {
    let mut pass = 0;
    let mut detail = String::new();
    let n = 50;
    for seed in 0..n {
        let inst = random_instance(10_000 + seed, 12, 30);
        let oracle = enumerate_binaries(&inst.dense, &inst.binaries);
        let sol = solve_milp(&inst.model, &MilpOptions { gap: 0.0, ..Default::default() }).unwrap();
        let ok = match oracle {
            None => sol.status == MilpStatus::Infeasible,
            Some(best) => sol.status == MilpStatus::Optimal && (sol.objective - best).abs() <= TOL,
        };
        if ok {
            pass += 1;
        } else if detail.is_empty() {
            detail = format!("; first mismatch seed {}: {:?} vs oracle {:?}", 10_000 + seed, sol.objective, oracle);
        }
    }
    r.record(6, pass == n, format!("{pass}/{n} random MILPs (<= 12 binaries, <= 30 continuous) match enumeration within {TOL:.0e}{detail}"));
}

/// Random explicit sets of 2..=6 scenarios with random probabilities.
fn small_sets() -> Vec<ScenarioSet> {
    let path = root().join("configs/desk.json");
    let cfg = campus_core::config::load_run_config_file(&path).unwrap();
    let hist = generate_history(&cfg.campus, 2, 99);
    let pool = generate(&hist, &cfg.campus.time, 5).unwrap().scenarios();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|_| {
            let n = rng.gen_range(2..=6);
            let mut pick: Vec<_> = pool.choose_multiple(&mut rng, n).cloned().collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            let mut acc = 0.0;
            for (i, s) in pick.iter_mut().enumerate() {
                s.probability = if i + 1 == n { 1.0 - acc } else { w[i] / total };
                acc += s.probability;
            }
            ScenarioSet::from_scenarios(pick, 1, "acceptance").unwrap()
        })
        .collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..(1 << n)).filter(|m| m.count_ones() as usize == k).map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect()).collect()
}

fn criterion_7_small(rng: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst_ratio: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let sets = small_sets();
    for set in &sets {
        let k = rng.gen_range(1..set.len());
        let norm = Normalizer::fit(set);
        let red = reduce_with(set, k, &ReduceOptions::default()).unwrap();
        let got = kantorovich(set, &red.selected, &norm).unwrap();
        let best = subsets(set.len(), k)
            .iter()
            .map(|sel| kantorovich(set, sel, &norm).unwrap())
            .fold(f64::INFINITY, f64::min);
        let ratio = if best > 0.0 { got / best } else if got == 0.0 { 1.0 } else { f64::INFINITY };
        worst_ratio = worst_ratio.max(ratio);
        worst_sum = worst_sum.max((red.set.total_probability() - 1.0).abs());
    }
    (
        worst_ratio <= 2.0 && worst_sum <= PROB_TOL,
        format!("{} sets: worst fast-forward / optimal Kantorovich ratio {worst_ratio:.3} (<= 2), max |sum p - 1| {worst_sum:.1e}", sets.len()),
    )
}

fn main() {
    let fast = std::env::var("CAMPUS_ACCEPT_FAST").is_ok_and(|v| v == "1");
    let mut r = Report::default();
    let tmp = tempfile::tempdir().unwrap();

    criterion_6(&mut r);

    let with = desk_case(false, &tmp.path().join("with"));
    let without = desk_case(true, &tmp.path().join("without"));
    criterion_2(&mut r, &with, &without);
    criterion_3(&mut r, &with);
    criterion_4(&mut r, &with);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (small_ok, small_detail) = criterion_7_small(&mut rng);

    let mut overlaps = vec![("desk with comfort", max_exclusive_overlap(&with.schedule)), ("desk without comfort", max_exclusive_overlap(&without.schedule))];
    debug_assert_eq!(with.set.len(), without.set.len());

    // Determinism: two full pipeline runs.
    let a = run_pipeline(Flags::new(root().join("configs/desk.json"), tmp.path().join("det_a"))).unwrap();
    let b = run_pipeline(Flags::new(root().join("configs/desk.json"), tmp.path().join("det_b"))).unwrap();
    let same = |f: &str| std::fs::read(tmp.path().join("det_a").join(f)).unwrap() == std::fs::read(tmp.path().join("det_b").join(f)).unwrap();
    let (sched_same, settle_same) = (same("schedule.csv"), same("settlement.csv"));
    r.record(
        10,
        sched_same && settle_same && a.summary == b.summary,
        format!("schedule.csv identical: {sched_same}, settlement.csv identical: {settle_same}"),
    );

    let mut full_replay: Option<(f64, Vec<Trajectory>)> = None;
    if fast {
        r.record(7, small_ok, format!("{small_detail}; full-scale timing skipped"));
        r.skip(1, "full-scale build skipped (CAMPUS_ACCEPT_FAST=1)".into());
        r.skip(8, "full-scale MPS round trip skipped (CAMPUS_ACCEPT_FAST=1)".into());
    } else {
        // Full scale: 30 days of history, 30^4 scenarios reduced to 30.
        let mut run = Run::load(Flags::new(root().join("configs/default.json"), tmp.path().join("default"))).unwrap();
        let hist = stage_generate(&mut run).unwrap();
        let t0 = Instant::now();
        let (set, info) = stage_reduce(&mut run, &hist).unwrap();
        let reduce_time = t0.elapsed();
        let sum_err = (set.total_probability() - 1.0).abs();
        r.record(
            7,
            small_ok && info.input == 810_000 && set.len() == 30 && reduce_time < REDUCE_LIMIT && sum_err <= PROB_TOL,
            format!("{small_detail}; full scale {} -> {} in {:.1?} (< 30 min), |sum p - 1| {sum_err:.1e}", info.input, set.len(), reduce_time),
        );

        let t0 = Instant::now();
        let built = stage_build(&mut run, &set, false).unwrap();
        let build_time = t0.elapsed();
        let st = built.statistics();
        r.record(
            1,
            st.binary_vars == 17_280 && build_time < BUILD_LIMIT,
            format!(
                "binaries {} (target 17280), build {:.1?} (< 60 s); continuous {}, equality rows {}, inequality rows {}",
                st.binary_vars, build_time, st.continuous_vars, st.equality_rows, st.inequality_rows
            ),
        );

        let text = to_mps_string(&built.milp).unwrap();
        let back = parse_mps(&text).unwrap();
        let stats_same = back.statistics() == st;
        let obj_same = back.objective() == built.milp.objective() && back.objective_constant() == built.milp.objective_constant();
        drop(text);
        let cmd = format!(
            "python3 {} --warm-start two-stage --time-limit {EXTERNAL_TIME_LIMIT_S}",
            root().join("scripts/highs_adapter.py").display()
        );
        let t0 = Instant::now();
        let ext = solve_external(&built.milp, &cmd, &tmp.path().join("external"));
        let ext_time = t0.elapsed();
        let (ext_ok, ext_detail) = match &ext {
            Ok(e) if matches!(e.status, MilpStatus::Optimal | MilpStatus::Feasible) => {
                (e.max_violation <= TOL, format!("HiGHS {:?} in {ext_time:.1?}, revalidated max violation {:.2e}", e.status, e.max_violation))
            }
            Ok(e) => (false, format!("HiGHS returned {:?} without a usable point after {ext_time:.1?}", e.status)),
            Err(err) => (false, format!("external solve failed after {ext_time:.1?}: {err}")),
        };
        r.record(8, stats_same && obj_same && ext_ok, format!("MPS statistics identical: {stats_same}, objective identical: {obj_same}; {ext_detail}"));
        if let Ok(e) = ext {
            if matches!(e.status, MilpStatus::Optimal | MilpStatus::Feasible) {
                let sol = MilpSolution { status: e.status, values: e.values, objective: e.objective, best_bound: f64::NAN, gap: f64::NAN, nodes: 0 };
                let sched = extract_schedule(&built, &run.cfg.campus, &sol).unwrap();
                overlaps.push(("full scale (HiGHS)", max_exclusive_overlap(&sched)));
                let trajs = simulate_all(&run, &set, &sched).unwrap();
                full_replay = Some((e.max_violation, trajs));
            }
        }
    }

    let rows = |c: &Case| c.built.milp.max_violation(&c.sol.values).unwrap().row;
    let mut replays: Vec<Replay> = vec![("desk with comfort", rows(&with), &with.trajs), ("desk without comfort", rows(&without), &without.trajs)];
    if let Some((v, trajs)) = &full_replay {
        replays.push(("full scale (HiGHS)", *v, trajs));
    }
    criterion_5(&mut r, &replays);

    let worst = overlaps.iter().map(|o| o.1).fold(0.0, f64::max);
    let detail: Vec<String> = overlaps.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    r.record(9, worst <= EXCLUSIVE_TOL, format!("max min(charge, discharge) per unit/slot/scenario: {} (tol {EXCLUSIVE_TOL:.0e})", detail.join(", ")));

    r.lines.sort_by_key(|l| l.0);
    println!("\nsummary");
    for (id, verdict, _) in &r.lines {
        println!("  criterion {id:>2}: {verdict}");
    }
    let failed = r.failed();
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
