use std::path::PathBuf;
use std::process::ExitCode;

use campus_cli::pipeline::{
    load_history, load_scenarios, load_schedule, load_summary, run_comparison, run_pipeline, simulate_all, stage_build,
    stage_generate, stage_reduce, stage_report, stage_settle, stage_simulate, stage_solve, write_comparison, AppError,
    Flags, Run, SolverChoice, Stage,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "campus-ems", version, about = "Stochastic demand-response scheduling for a campus of commercial buildings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Campus and run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed for scenario generation and reduction.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scenarios kept by the reduction.
    #[arg(long)]
    scenarios: Option<usize>,
    /// Drop the comfort terms from the objective.
    #[arg(long)]
    no_comfort: bool,
    /// `internal` or `external:<cmd>`.
    #[arg(long, default_value = "internal")]
    solver: SolverChoice,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Artifacts directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn flags(&self) -> Flags {
        Flags {
            config: self.config.clone(),
            seed: self.seed,
            scenarios: self.scenarios,
            no_comfort: self.no_comfort,
            solver: self.solver.clone(),
            gap: self.gap,
            out: self.out.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the historical dataset to `<out>/history`.
    Generate(Common),
    /// Generate all scenarios and reduce them into `<out>/scenarios`.
    Reduce(Common),
    /// Build the MILP, write `model.mps` and `statistics.json`.
    Build(Common),
    /// Build and solve, write `schedule.csv`.
    Solve(Common),
    /// Replay the schedule through the device dynamics.
    Simulate(Common),
    /// Settlement, comfort tables and figure data.
    Report {
        #[command(flatten)]
        common: Common,
        /// Second run directory to compare against.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Every stage in order.
    Pipeline {
        #[command(flatten)]
        common: Common,
        /// Run both the with- and without-comfort cases and compare them.
        #[arg(long)]
        compare: bool,
    },
}

fn run(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::Generate(c) => {
            let mut run = Run::load(c.flags())?;
            let h = stage_generate(&mut run)?;
            println!("wrote {} days to {}", h.days(), run.out().join("history").display());
        }
        Command::Reduce(c) => {
            let mut run = Run::load(c.flags())?;
            let hist = if run.out().join("history").is_dir() { load_history(&run)? } else { stage_generate(&mut run)? };
            let (_, info) = stage_reduce(&mut run, &hist)?;
            println!(
                "reduced {} scenarios to {} (kantorovich {:.6}{})",
                info.input,
                info.output,
                info.kantorovich,
                if info.sampled { ", sampled screening" } else { "" }
            );
        }
        Command::Build(c) => {
            let mut run = Run::load(c.flags())?;
            let set = load_scenarios(&run, Stage::Build)?;
            let built = stage_build(&mut run, &set, true)?;
            let st = built.statistics();
            println!("continuous_vars {}", st.continuous_vars);
            println!("binary_vars {}", st.binary_vars);
            println!("equality_rows {}", st.equality_rows);
            println!("inequality_rows {}", st.inequality_rows);
            println!("nonzeros {}", st.nonzeros);
        }
        Command::Solve(c) => {
            let mut run = Run::load(c.flags())?;
            let set = load_scenarios(&run, Stage::Solve)?;
            let built = stage_build(&mut run, &set, false)?;
            let (_, info) = stage_solve(&mut run, &built)?;
            println!(
                "{} objective {:.9} (unified cost {:.9}, comfort {:.6}) nodes {}",
                info.status, info.objective, info.parts.unified_cost, info.parts.comfort, info.nodes
            );
        }
        Command::Simulate(c) => {
            let mut run = Run::load(c.flags())?;
            let set = load_scenarios(&run, Stage::Simulate)?;
            let schedule = load_schedule(&run, Stage::Simulate)?;
            let trajs = stage_simulate(&mut run, &set, &schedule)?;
            let worst = trajs.iter().map(|t| t.max_power_residual()).fold(0.0, f64::max);
            let n: usize = trajs.iter().map(|t| t.violations.len()).sum();
            println!("max power residual {worst:.3e} kW, {n} violations");
        }
        Command::Report { common, against } => {
            let mut run = Run::load(common.flags())?;
            let set = load_scenarios(&run, Stage::Report)?;
            let schedule = load_schedule(&run, Stage::Report)?;
            let trajs = simulate_all(&run, &set, &schedule)?;
            let settlement = stage_settle(&mut run, &set, &schedule)?;
            let summary = stage_report(&mut run, &set, &schedule, &trajs, &settlement)?;
            println!(
                "expected unified cost {:.9}, expected comfort {:.6}",
                summary.expected_unified_cost, summary.expected_comfort
            );
            if let Some(dir) = against {
                let other = load_summary(&dir)?;
                let t = write_comparison(&summary, &other, run.out())?;
                println!("cost {:+.2}%, comfort {:+.2}%", t.cost_increment_pct, t.comfort_increment_pct);
            }
        }
        Command::Pipeline { common, compare } => {
            if compare {
                let t = run_comparison(common.flags())?;
                println!(
                    "with comfort: cost {:.9}, comfort {:.6}; without: cost {:.9}, comfort {:.6}; cost {:+.2}%, comfort {:+.2}%",
                    t.with_comfort.expected_unified_cost,
                    t.with_comfort.expected_comfort,
                    t.without_comfort.expected_unified_cost,
                    t.without_comfort.expected_comfort,
                    t.cost_increment_pct,
                    t.comfort_increment_pct
                );
            } else {
                let out = run_pipeline(common.flags())?;
                println!(
                    "{}: expected unified cost {:.9}, expected comfort {:.6}, {} violations",
                    out.solve.status, out.summary.expected_unified_cost, out.summary.expected_comfort, out.summary.violations
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
