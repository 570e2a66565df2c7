//! Best-bound branch and bound over the binary variables.
//!
//! Nodes are processed in fixed-size batches taken from the top of the
//! priority queue. A batch may be solved in parallel, but its results are
//! merged in node-id order so the search is identical either way.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::MilpError;
use crate::model::{MilpModel, VarKind};
use crate::simplex::{model_bounds, Basis, LpOptions, LpSolution, LpStatus, ScaledLp};

/// Distance from an integer below which a binary counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MilpOptions {
    /// Relative gap `(bound - incumbent) / max(1, |incumbent|)` at which to stop.
    pub gap: f64,
    pub node_limit: Option<usize>,
    pub time_limit: Option<Duration>,
    /// Largest binary count accepted unless `force` is set.
    pub max_binaries: usize,
    pub force: bool,
    /// Solve each node batch on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
    pub batch_size: usize,
    pub lp: LpOptions,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            gap: 1e-4,
            node_limit: None,
            time_limit: None,
            max_binaries: 5000,
            force: false,
            parallel: cfg!(feature = "parallel"),
            batch_size: 4,
            lp: LpOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// A limit was hit with an incumbent in hand.
    Feasible,
    Infeasible,
    Unbounded,
    /// A limit was hit before any integer solution was found.
    Limit,
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
}

pub fn relative_gap(bound: f64, objective: f64) -> f64 {
    ((bound - objective) / objective.abs().max(1.0)).max(0.0)
}

struct Node {
    id: usize,
    bound: f64,
    fixings: Vec<(usize, f64)>,
    basis: Option<Arc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Context<'a> {
    model: &'a MilpModel,
    lp: ScaledLp,
    lo: Vec<f64>,
    hi: Vec<f64>,
    binaries: Vec<usize>,
    opts: LpOptions,
}

impl Context<'_> {
    fn solve(
        &self,
        fixings: &[(usize, f64)],
        warm: Option<&Basis>,
    ) -> Result<(LpSolution, Basis), MilpError> {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        for &(j, v) in fixings {
            lo[j] = v;
            hi[j] = v;
        }
        self.lp.solve(self.model, &lo, &hi, warm, &self.opts)
    }

    fn most_fractional(&self, values: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_frac = INTEGRALITY_TOL;
        for &j in &self.binaries {
            let f = (values[j] - values[j].round()).abs();
            if f > best_frac {
                best_frac = f;
                best = Some(j);
            }
        }
        best
    }

    /// Fixes every binary at its rounded value and re-solves the LP so the
    /// returned point is integral exactly.
    fn polish(&self, values: &[f64], warm: Option<&Basis>) -> Result<Option<(Vec<f64>, f64)>, MilpError> {
        let fixings: Vec<(usize, f64)> = self
            .binaries
            .iter()
            .map(|&j| (j, values[j].round().clamp(0.0, 1.0)))
            .collect();
        let (sol, _) = self.solve(&fixings, warm)?;
        Ok(match sol.status {
            LpStatus::Optimal => Some((sol.values, sol.objective)),
            _ => None,
        })
    }
}

/// Solves `model` to the requested gap with the internal simplex.
pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    let start = Instant::now();
    let binaries: Vec<usize> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    if binaries.len() > opts.max_binaries && !opts.force {
        return Err(MilpError::TooManyBinaries {
            binaries: binaries.len(),
            limit: opts.max_binaries,
        });
    }
    let deadline = opts.time_limit.map(|t| start + t);
    let mut lp_opts = opts.lp.clone();
    lp_opts.deadline = deadline;
    let (lo, hi) = model_bounds(model);
    let ctx = Context {
        model,
        lp: ScaledLp::new(model),
        lo,
        hi,
        binaries,
        opts: lp_opts,
    };

    let (root, root_basis) = ctx.solve(&[], None)?;
    log::debug!("root LP: {:?} obj={} iters={}", root.status, root.objective, root.iterations);
    match root.status {
        LpStatus::Infeasible => return Ok(terminal(MilpStatus::Infeasible, model, 1)),
        LpStatus::Unbounded => return Ok(terminal(MilpStatus::Unbounded, model, 1)),
        LpStatus::Limit => return Ok(terminal(MilpStatus::Limit, model, 1)),
        LpStatus::Optimal => {}
    }

    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let root_basis = Arc::new(root_basis);
    // Rounding heuristic at the root.
    if let Some(cand) = ctx.polish(&root.values, Some(&root_basis))? {
        incumbent = Some(cand);
    }

    let mut open = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut nodes = 1usize;
    let mut hit_limit = false;
    // Largest bound among nodes discarded because they were within the gap.
    let mut pruned_bound = f64::NEG_INFINITY;
    branch_or_accept(
        &ctx,
        root,
        Some(root_basis),
        &[],
        &mut incumbent,
        &mut open,
        &mut next_id,
    )?;

    let parallel = opts.parallel && cfg!(feature = "parallel");
    loop {
        let inc_obj = incumbent.as_ref().map(|c| c.1);
        // Drop nodes that cannot improve on the incumbent by more than the gap.
        let mut batch = Vec::with_capacity(opts.batch_size);
        while batch.len() < opts.batch_size.max(1) {
            let Some(node) = open.pop() else { break };
            if let Some(obj) = inc_obj {
                if relative_gap(node.bound, obj) <= opts.gap {
                    pruned_bound = pruned_bound.max(node.bound);
                    open.clear();
                    break;
                }
            }
            batch.push(node);
        }
        if batch.is_empty() {
            break;
        }
        if opts.node_limit.is_some_and(|l| nodes >= l)
            || deadline.is_some_and(|d| Instant::now() >= d)
        {
            for n in batch {
                open.push(n);
            }
            break;
        }
        nodes += batch.len();

        let results = solve_batch(&ctx, &batch, parallel);
        for (node, res) in batch.iter().zip(results) {
            let (sol, basis) = res?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => continue,
                LpStatus::Unbounded => {
                    return Err(MilpError::Numerical(format!(
                        "node {} LP unbounded below a bounded root",
                        node.id
                    )))
                }
                LpStatus::Limit => {
                    hit_limit = true;
                    open.push(Node {
                        id: node.id,
                        bound: node.bound,
                        fixings: node.fixings.clone(),
                        basis: node.basis.clone(),
                    });
                    continue;
                }
            }
            if let Some((_, obj)) = &incumbent {
                if relative_gap(sol.objective, *obj) <= opts.gap {
                    pruned_bound = pruned_bound.max(sol.objective);
                    continue;
                }
            }
            branch_or_accept(
                &ctx,
                sol,
                Some(Arc::new(basis)),
                &node.fixings,
                &mut incumbent,
                &mut open,
                &mut next_id,
            )?;
        }
        if hit_limit {
            break;
        }
    }

    let best_open = open.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    log::debug!("branch and bound: {nodes} nodes, {:.3}s", start.elapsed().as_secs_f64());
    Ok(match incumbent {
        Some((values, objective)) => {
            let best_bound = best_open.max(pruned_bound).max(objective);
            let gap = relative_gap(best_bound, objective);
            let status = if open.is_empty() || gap <= opts.gap {
                MilpStatus::Optimal
            } else {
                MilpStatus::Feasible
            };
            MilpSolution {
                status,
                values,
                objective,
                best_bound,
                gap,
                nodes,
            }
        }
        None => {
            let mut t = terminal(
                if open.is_empty() {
                    MilpStatus::Infeasible
                } else {
                    MilpStatus::Limit
                },
                model,
                nodes,
            );
            t.best_bound = best_open;
            t
        }
    })
}

fn terminal(status: MilpStatus, model: &MilpModel, nodes: usize) -> MilpSolution {
    MilpSolution {
        status,
        values: vec![0.0; model.num_vars()],
        objective: f64::NAN,
        best_bound: f64::NAN,
        gap: f64::INFINITY,
        nodes,
    }
}

fn solve_batch(
    ctx: &Context<'_>,
    batch: &[Node],
    parallel: bool,
) -> Vec<Result<(LpSolution, Basis), MilpError>> {
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return batch
            .par_iter()
            .map(|n| ctx.solve(&n.fixings, n.basis.as_deref()))
            .collect();
    }
    let _ = parallel;
    batch
        .iter()
        .map(|n| ctx.solve(&n.fixings, n.basis.as_deref()))
        .collect()
}

fn branch_or_accept(
    ctx: &Context<'_>,
    sol: LpSolution,
    basis: Option<Arc<Basis>>,
    fixings: &[(usize, f64)],
    incumbent: &mut Option<(Vec<f64>, f64)>,
    open: &mut BinaryHeap<Node>,
    next_id: &mut usize,
) -> Result<(), MilpError> {
    match ctx.most_fractional(&sol.values) {
        None => {
            if let Some((values, obj)) = ctx.polish(&sol.values, basis.as_deref())? {
                if incumbent.as_ref().map_or(true, |c| obj > c.1) {
                    *incumbent = Some((values, obj));
                }
            }
        }
        Some(j) => {
            for v in [0.0, 1.0] {
                let mut f = fixings.to_vec();
                f.push((j, v));
                open.push(Node {
                    id: *next_id,
                    bound: sol.objective,
                    fixings: f,
                    basis: basis.clone(),
                });
                *next_id += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn knapsack() -> MilpModel {
        let mut m = MilpModel::new("k");
        let w = [5.0, 4.0, 6.0, 3.0];
        let v = [10.0, 40.0, 30.0, 50.0];
        let ids: Vec<_> = (0..4).map(|i| m.add_binary(format!("b{i}")).unwrap()).collect();
        for i in 0..4 {
            m.set_objective_coeff(ids[i], v[i]);
        }
        m.add_row(
            "cap",
            ids.iter().zip(w).map(|(&id, w)| (id, w)).collect(),
            Sense::Le,
            10.0,
        )
        .unwrap();
        m
    }

    #[test]
    fn solves_small_knapsack() {
        let s = solve_milp(&knapsack(), &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective - 90.0).abs() < 1e-9);
        assert_eq!(s.values, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let m = knapsack();
        let a = solve_milp(&m, &MilpOptions { parallel: false, ..Default::default() }).unwrap();
        let b = solve_milp(&m, &MilpOptions { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.nodes, b.nodes);
    }

    #[test]
    fn refuses_large_binary_counts() {
        let m = knapsack();
        let opts = MilpOptions { max_binaries: 2, ..Default::default() };
        assert!(matches!(
            solve_milp(&m, &opts),
            Err(MilpError::TooManyBinaries { binaries: 4, limit: 2 })
        ));
        let opts = MilpOptions { max_binaries: 2, force: true, ..Default::default() };
        assert!(solve_milp(&m, &opts).is_ok());
    }

    #[test]
    fn integer_infeasible() {
        let mut m = MilpModel::new("i");
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        m.add_row("r", vec![(a, 2.0), (b, 2.0)], Sense::Eq, 1.0).unwrap();
        let s = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
    }

    #[test]
    fn gap_helper() {
        assert_eq!(relative_gap(10.0, 10.0), 0.0);
        assert!((relative_gap(0.5, 0.0) - 0.5).abs() < 1e-15);
        assert!((relative_gap(110.0, 100.0) - 0.1).abs() < 1e-15);
    }
}
