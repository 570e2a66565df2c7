//! Stage runner shared by the subcommands: generate, reduce, build, solve,
//! simulate, settle, report. Every stage reads and writes artifacts in one
//! output directory so stages can also be run one at a time.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use campus_core::builder::{build, extract_schedule, BuildOptions, BuiltModel, ObjectiveParts};
use campus_core::config::{load_run_config_file, HistorySource, RunConfig};
use campus_core::dynamics::{simulate_schedule, Trajectory};
use campus_core::history::{load_historical, save_historical, HistoricalDataset};
use campus_core::par::Exec;
use campus_core::scenario::{generate, load_scenario_set, reduce_with, save_scenario_set, ReduceOptions, ScenarioSet};
use campus_core::schedule::Schedule;
use campus_core::synth::generate_history;
use campus_core::CoreError;
use campus_milp::mps::write_mps;
use campus_milp::{solve_external, solve_milp, MilpError, MilpOptions, MilpSolution, MilpStatus, ModelStatistics};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::report::{comfort_report, compare_cases, emit_plot_data, ComparisonTable, RunOutputs, RunSummary, FIGURES};
use crate::settle::{settle_all, SettlementTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Generate,
    Reduce,
    Build,
    Solve,
    Simulate,
    Settle,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Generate => "generate",
            Stage::Reduce => "reduce",
            Stage::Build => "build",
            Stage::Solve => "solve",
            Stage::Simulate => "simulate",
            Stage::Settle => "settle",
            Stage::Report => "report",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Infeasible,
    SolverLimit,
    Other,
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct AppError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl AppError {
    pub fn new(stage: Stage, kind: ErrorKind, message: impl Into<String>) -> Self {
        AppError { stage, kind, message: message.into() }
    }

    pub fn core(stage: Stage, e: CoreError) -> Self {
        let kind = match &e {
            CoreError::Config { .. } | CoreError::Invalid(_) => ErrorKind::Config,
            CoreError::Milp(MilpError::TooManyBinaries { .. }) => ErrorKind::SolverLimit,
            _ => ErrorKind::Other,
        };
        AppError::new(stage, kind, e.to_string())
    }

    pub fn milp(stage: Stage, e: MilpError) -> Self {
        AppError::core(stage, CoreError::Milp(e))
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Infeasible => 3,
            ErrorKind::SolverLimit => 4,
            ErrorKind::Other => 1,
        }
    }
}

fn io(stage: Stage, path: &Path, e: std::io::Error) -> AppError {
    AppError::new(stage, ErrorKind::Other, format!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverChoice {
    Internal,
    /// Command line of an MPS-driven solver wrapper.
    External(String),
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "internal" {
            return Ok(SolverChoice::Internal);
        }
        match s.strip_prefix("external:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(SolverChoice::External(cmd.trim().to_string())),
            _ => Err(format!("expected `internal` or `external:<cmd>`, got `{s}`")),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug)]
pub struct Flags {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub scenarios: Option<usize>,
    pub no_comfort: bool,
    pub solver: SolverChoice,
    pub gap: Option<f64>,
    pub out: PathBuf,
}

impl Flags {
    pub fn new(config: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Flags {
            config: config.into(),
            seed: None,
            scenarios: None,
            no_comfort: false,
            solver: SolverChoice::Internal,
            gap: None,
            out: out.into(),
        }
    }
}

/// A loaded config with overrides applied.
pub struct Run {
    pub cfg: RunConfig,
    pub flags: Flags,
    pub timings: Vec<(String, f64)>,
}

impl Run {
    pub fn load(flags: Flags) -> Result<Run, AppError> {
        let mut cfg = load_run_config_file(&flags.config).map_err(|e| match e {
            CoreError::Io { .. } => AppError::new(Stage::Config, ErrorKind::Config, e.to_string()),
            other => AppError::core(Stage::Config, other),
        })?;
        if let Some(s) = flags.seed {
            cfg.run.seed = s;
        }
        if let Some(n) = flags.scenarios {
            if n == 0 {
                return Err(AppError::new(Stage::Config, ErrorKind::Config, "--scenarios must be at least 1"));
            }
            cfg.run.scenarios = n;
        }
        if let Some(g) = flags.gap {
            if !(g >= 0.0) {
                return Err(AppError::new(Stage::Config, ErrorKind::Config, "--gap must be >= 0"));
            }
            cfg.run.gap = g;
        }
        std::fs::create_dir_all(&flags.out).map_err(|e| io(Stage::Config, &flags.out, e))?;
        Ok(Run { cfg, flags, timings: Vec::new() })
    }

    pub fn out(&self) -> &Path {
        &self.flags.out
    }

    fn timed<T>(&mut self, stage: Stage, f: impl FnOnce(&Self) -> Result<T, AppError>) -> Result<T, AppError> {
        let t0 = Instant::now();
        let r = f(self);
        self.timings.push((stage.to_string(), t0.elapsed().as_secs_f64()));
        log::info!("{stage} finished in {:.2?}", t0.elapsed());
        r
    }

    pub fn build_options(&self) -> BuildOptions {
        BuildOptions { include_comfort: !self.flags.no_comfort, ..Default::default() }
    }

    pub fn milp_options(&self) -> MilpOptions {
        MilpOptions {
            gap: self.cfg.run.gap,
            node_limit: self.cfg.run.node_limit,
            time_limit: self.cfg.run.time_limit_s.map(Duration::from_secs_f64),
            ..Default::default()
        }
    }
}

fn write_json<T: Serialize>(stage: Stage, path: &Path, value: &T) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(value).expect("serializable artifact") + "\n";
    std::fs::write(path, text).map_err(|e| io(stage, path, e))
}

pub fn stage_generate(run: &mut Run) -> Result<HistoricalDataset, AppError> {
    run.timed(Stage::Generate, |run| {
        let m = &run.cfg.campus;
        let hist = match &run.cfg.history {
            HistorySource::Synthetic { days, seed } => generate_history(m, *days, *seed),
            HistorySource::Dir(dir) => {
                load_historical(dir, m.time.slots_per_day).map_err(|e| AppError::core(Stage::Generate, e))?
            }
        };
        save_historical(&hist, &run.out().join("history")).map_err(|e| AppError::core(Stage::Generate, e))?;
        Ok(hist)
    })
}

/// Input and output sizes of the reduction, for the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReduceInfo {
    pub input: usize,
    pub output: usize,
    pub kantorovich: f64,
    pub sampled: bool,
}

pub fn stage_reduce(run: &mut Run, hist: &HistoricalDataset) -> Result<(ScenarioSet, ReduceInfo), AppError> {
    run.timed(Stage::Reduce, |run| {
        let err = |e| AppError::core(Stage::Reduce, e);
        let all = generate(hist, &run.cfg.campus.time, run.cfg.run.seed).map_err(err)?;
        let target = run.cfg.run.scenarios.min(all.len());
        let r = reduce_with(&all, target, &ReduceOptions::default()).map_err(err)?;
        save_scenario_set(&r.set, &run.out().join("scenarios")).map_err(err)?;
        let info = ReduceInfo { input: all.len(), output: r.set.len(), kantorovich: r.kantorovich, sampled: r.sampled };
        write_json(Stage::Reduce, &run.out().join("reduction.json"), &info)?;
        Ok((r.set, info))
    })
}

pub fn load_history(run: &Run) -> Result<HistoricalDataset, AppError> {
    let dir = run.out().join("history");
    load_historical(&dir, run.cfg.campus.time.slots_per_day).map_err(|e| AppError::core(Stage::Reduce, e))
}

pub fn load_scenarios(run: &Run, stage: Stage) -> Result<ScenarioSet, AppError> {
    let dir = run.out().join("scenarios");
    if !dir.join("manifest.json").exists() {
        return Err(AppError::new(stage, ErrorKind::Other, format!("{} has no scenario set; run `reduce` first", run.out().display())));
    }
    load_scenario_set(&dir).map_err(|e| AppError::core(stage, e))
}

pub fn stage_build(run: &mut Run, set: &ScenarioSet, write_model: bool) -> Result<BuiltModel, AppError> {
    run.timed(Stage::Build, |run| {
        let built = build(&run.cfg.campus, set, &run.build_options()).map_err(|e| AppError::core(Stage::Build, e))?;
        write_json(Stage::Build, &run.out().join("statistics.json"), &stats_json(&built.statistics()))?;
        if write_model {
            write_mps(&built.milp, &run.out().join("model.mps")).map_err(|e| AppError::milp(Stage::Build, e))?;
        }
        Ok(built)
    })
}

pub fn stats_json(st: &ModelStatistics) -> serde_json::Value {
    json!({
        "continuous_vars": st.continuous_vars,
        "binary_vars": st.binary_vars,
        "equality_rows": st.equality_rows,
        "inequality_rows": st.inequality_rows,
        "nonzeros": st.nonzeros,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    pub solver: String,
    pub status: String,
    pub objective: f64,
    pub best_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub parts: ObjectiveParts,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn stage_solve(run: &mut Run, built: &BuiltModel) -> Result<(Schedule, SolveInfo), AppError> {
    run.timed(Stage::Solve, |run| {
        let (sol, solver) = match &run.flags.solver {
            SolverChoice::Internal => {
                (solve_milp(&built.milp, &run.milp_options()).map_err(|e| AppError::milp(Stage::Solve, e))?, "internal".to_string())
            }
            SolverChoice::External(cmd) => {
                let ext = solve_external(&built.milp, cmd, &run.out().join("external"))
                    .map_err(|e| AppError::milp(Stage::Solve, e))?;
                let sol = MilpSolution {
                    status: ext.status,
                    values: ext.values,
                    objective: ext.objective,
                    best_bound: f64::NAN,
                    gap: f64::NAN,
                    nodes: 0,
                };
                (sol, format!("external:{cmd}"))
            }
        };
        match sol.status {
            MilpStatus::Optimal | MilpStatus::Feasible => {}
            MilpStatus::Infeasible | MilpStatus::Unbounded => {
                return Err(AppError::new(Stage::Solve, ErrorKind::Infeasible, format!("model is {:?}", sol.status).to_lowercase()))
            }
            MilpStatus::Limit => {
                return Err(AppError::new(Stage::Solve, ErrorKind::SolverLimit, "limit reached before an integer solution was found"))
            }
        }
        let schedule = extract_schedule(built, &run.cfg.campus, &sol).map_err(|e| AppError::core(Stage::Solve, e))?;
        let parts = built.objective_parts(&sol.values).map_err(|e| AppError::core(Stage::Solve, e))?;
        let info = SolveInfo {
            solver,
            status: format!("{:?}", sol.status).to_lowercase(),
            objective: sol.objective,
            best_bound: finite(sol.best_bound),
            gap: finite(sol.gap),
            nodes: sol.nodes,
            parts,
        };
        let err = |e| AppError::core(Stage::Solve, e);
        schedule.save_csv(&run.out().join("schedule.csv")).map_err(err)?;
        schedule.save_json(&run.out().join("schedule.json")).map_err(err)?;
        write_json(Stage::Solve, &run.out().join("solution.json"), &info)?;
        Ok((schedule, info))
    })
}

pub fn load_schedule(run: &Run, stage: Stage) -> Result<Schedule, AppError> {
    let path = run.out().join("schedule.json");
    if !path.exists() {
        return Err(AppError::new(stage, ErrorKind::Other, format!("{} is missing; run `solve` first", path.display())));
    }
    Schedule::load_json(&path).map_err(|e| AppError::core(stage, e))
}

/// Per-scenario replay through the device dynamics, parallel over scenarios.
pub fn simulate_all(run: &Run, set: &ScenarioSet, schedule: &Schedule) -> Result<Vec<Trajectory>, AppError> {
    if schedule.dispatch.len() != set.len() {
        return Err(AppError::new(
            Stage::Simulate,
            ErrorKind::Other,
            format!("schedule has {} scenarios, scenario set has {}", schedule.dispatch.len(), set.len()),
        ));
    }
    let m = &run.cfg.campus;
    Exec::default()
        .map_range(set.len(), |s| simulate_schedule(m, (&schedule.da_buy, &schedule.da_sell), &schedule.dispatch[s], &set.get(s)))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AppError::core(Stage::Simulate, e))
}

pub fn stage_simulate(run: &mut Run, set: &ScenarioSet, schedule: &Schedule) -> Result<Vec<Trajectory>, AppError> {
    run.timed(Stage::Simulate, |run| {
        let trajs = simulate_all(run, set, schedule)?;
        let dir = run.out().join("trajectories");
        std::fs::create_dir_all(&dir).map_err(|e| io(Stage::Simulate, &dir, e))?;
        let mut viol = csv::Writer::from_path(run.out().join("violations.csv"))
            .map_err(|e| AppError::new(Stage::Simulate, ErrorKind::Other, e.to_string()))?;
        let cerr = |e: csv::Error| AppError::new(Stage::Simulate, ErrorKind::Other, e.to_string());
        viol.write_record(["scenario", "slot", "device", "message"]).map_err(cerr)?;
        for (s, tr) in trajs.iter().enumerate() {
            tr.save_csv(&dir.join(format!("scenario_{s:04}.csv"))).map_err(|e| AppError::core(Stage::Simulate, e))?;
            for v in &tr.violations {
                viol.write_record([s.to_string(), (v.slot + 1).to_string(), v.device.clone(), v.message.clone()]).map_err(cerr)?;
            }
        }
        viol.flush().map_err(|e| io(Stage::Simulate, run.out(), e))?;
        let n: usize = trajs.iter().map(|t| t.violations.len()).sum();
        if n > 0 {
            log::warn!("simulation flagged {n} violations, see violations.csv");
        }
        Ok(trajs)
    })
}

pub fn stage_settle(run: &mut Run, set: &ScenarioSet, schedule: &Schedule) -> Result<SettlementTable, AppError> {
    run.timed(Stage::Settle, |run| {
        let table = settle_all(schedule, &set.scenarios(), &run.cfg.campus).map_err(|e| AppError::core(Stage::Settle, e))?;
        let path = run.out().join("settlement.csv");
        let f = std::fs::File::create(&path).map_err(|e| io(Stage::Settle, &path, e))?;
        table
            .write_csv(std::io::BufWriter::new(f))
            .map_err(|e| AppError::new(Stage::Settle, ErrorKind::Other, e.to_string()))?;
        Ok(table)
    })
}

/// Headline results of a run, also written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub include_comfort: bool,
    pub expected_unified_cost: f64,
    pub expected_cost: f64,
    pub expected_comfort: f64,
    pub violations: usize,
}

impl Summary {
    pub fn run_summary(&self) -> RunSummary {
        RunSummary { expected_unified_cost: self.expected_unified_cost, expected_comfort: self.expected_comfort }
    }
}

pub fn stage_report(
    run: &mut Run,
    set: &ScenarioSet,
    schedule: &Schedule,
    trajs: &[Trajectory],
    settlement: &SettlementTable,
) -> Result<Summary, AppError> {
    run.timed(Stage::Report, |run| {
        let m = &run.cfg.campus;
        let err = |e| AppError::core(Stage::Report, e);
        let cerr = |e: csv::Error| AppError::new(Stage::Report, ErrorKind::Other, e.to_string());
        let path = run.out().join("comfort.csv");
        let mut w = csv::Writer::from_path(&path).map_err(cerr)?;
        w.write_record(["scenario", "probability", "aggregate", "attainable", "normalized"]).map_err(cerr)?;
        let mut expected_comfort = 0.0;
        let probs: Vec<f64> = (0..set.len()).map(|s| set.probability(s)).collect();
        for (s, tr) in trajs.iter().enumerate() {
            let r = comfort_report(tr, m).map_err(err)?;
            expected_comfort += probs[s] * r.normalized;
            w.write_record([
                s.to_string(),
                format!("{:.9}", probs[s]),
                format!("{:.9}", r.aggregate),
                format!("{:.9}", r.attainable),
                format!("{:.9}", r.normalized),
            ])
            .map_err(cerr)?;
        }
        w.write_record(["expected".to_string(), format!("{:.9}", 1.0), String::new(), String::new(), format!("{expected_comfort:.9}")])
            .map_err(cerr)?;
        w.flush().map_err(|e| io(Stage::Report, &path, e))?;
        let outputs = RunOutputs { model: m, schedule, trajectories: trajs, probabilities: &probs };
        for id in FIGURES {
            emit_plot_data(&outputs, id, &run.out().join("figures"))
                .map_err(|e| AppError::new(Stage::Report, ErrorKind::Other, e.to_string()))?;
        }
        let summary = Summary {
            include_comfort: !run.flags.no_comfort,
            expected_unified_cost: settlement.expected_unified.total,
            expected_cost: settlement.expected.total,
            expected_comfort,
            violations: trajs.iter().map(|t| t.violations.len()).sum(),
        };
        write_json(Stage::Report, &run.out().join("summary.json"), &summary)?;
        Ok(summary)
    })
}

pub fn load_summary(dir: &Path) -> Result<Summary, AppError> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io(Stage::Report, &path, e))?;
    serde_json::from_str(&text).map_err(|e| AppError::new(Stage::Report, ErrorKind::Other, format!("{}: {e}", path.display())))
}

/// Orders two run summaries into with/without comfort and writes `comparison.csv` into `out`.
pub fn write_comparison(a: &Summary, b: &Summary, out: &Path) -> Result<ComparisonTable, AppError> {
    let (with, without) = match (a.include_comfort, b.include_comfort) {
        (true, false) => (a, b),
        (false, true) => (b, a),
        _ => {
            return Err(AppError::new(Stage::Report, ErrorKind::Other, "comparison needs one run with comfort and one without"));
        }
    };
    let table = compare_cases(with.run_summary(), without.run_summary()).map_err(|e| AppError::core(Stage::Report, e))?;
    let path = out.join("comparison.csv");
    let f = std::fs::File::create(&path).map_err(|e| io(Stage::Report, &path, e))?;
    table.write_csv(f).map_err(|e| AppError::new(Stage::Report, ErrorKind::Other, e.to_string()))?;
    Ok(table)
}

/// Artifacts of a full pipeline run.
pub struct PipelineOutput {
    pub summary: Summary,
    pub schedule: Schedule,
    pub settlement: SettlementTable,
    pub solve: SolveInfo,
    pub statistics: ModelStatistics,
}

/// generate -> reduce -> build -> solve -> simulate -> settle -> report, then the manifest.
pub fn run_pipeline(flags: Flags) -> Result<PipelineOutput, AppError> {
    let out = flags.out.clone();
    let _ = std::fs::remove_file(out.join("FAILED"));
    let result = (|| -> Result<PipelineOutput, AppError> {
        let mut run = Run::load(flags)?;
        let hist = stage_generate(&mut run)?;
        let (set, reduction) = stage_reduce(&mut run, &hist)?;
        let built = stage_build(&mut run, &set, true)?;
        let statistics = built.statistics();
        let (schedule, solve) = stage_solve(&mut run, &built)?;
        drop(built);
        let trajs = stage_simulate(&mut run, &set, &schedule)?;
        let settlement = stage_settle(&mut run, &set, &schedule)?;
        let summary = stage_report(&mut run, &set, &schedule, &trajs, &settlement)?;
        let manifest = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": run.flags.config.display().to_string(),
            "seed": run.cfg.run.seed,
            "scenarios": set.len(),
            "include_comfort": !run.flags.no_comfort,
            "gap_target": run.cfg.run.gap,
            "reduction": reduction,
            "statistics": stats_json(&statistics),
            "solve": solve,
            "summary": summary,
            "timings_s": run.timings.iter().map(|(k, v)| json!({"stage": k, "seconds": v})).collect::<Vec<_>>(),
        });
        write_json(Stage::Report, &run.out().join("manifest.json"), &manifest)?;
        Ok(PipelineOutput { summary, schedule, settlement, solve, statistics })
    })();
    if let Err(e) = &result {
        if out.is_dir() {
            let _ = std::fs::write(out.join("FAILED"), format!("{}\n{}\n", e.stage, e.message));
        }
    }
    result
}

/// Both cases on the same config: `out/with_comfort`, `out/without_comfort` and `out/comparison.csv`.
pub fn run_comparison(flags: Flags) -> Result<ComparisonTable, AppError> {
    let base = flags.out.clone();
    let with = run_pipeline(Flags { no_comfort: false, out: base.join("with_comfort"), ..flags.clone() })?;
    let without = run_pipeline(Flags { no_comfort: true, out: base.join("without_comfort"), ..flags })?;
    write_comparison(&with.summary, &without.summary, &base)
}
