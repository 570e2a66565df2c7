//! Fast-forward selection with probability redistribution.
//!
//! Sets up to [`ReduceOptions::exact_limit`] scenarios are reduced exactly.
//! Larger product sets screen candidates against a seeded sample of demand
//! points and re-rank the best few exactly over the full set.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metric::{MatrixMetric, Metric, Normalizer, ProductMetric};
use super::{exact_sum, split_index, Scenario, ScenarioSet};
use crate::error::{CoreError, Result};
use crate::par::Exec;

#[derive(Clone, Copy, Debug)]
pub struct ReduceOptions {
    pub exec: Exec,
    pub exact_limit: usize,
    pub sample_size: usize,
    pub rerank: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions { exec: Exec::default(), exact_limit: 4096, sample_size: 1024, rerank: 32 }
    }
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub set: ScenarioSet,
    /// Selected input indices in selection order.
    pub selected: Vec<usize>,
    /// Probability-weighted distance of every input scenario to its nearest survivor.
    pub kantorovich: f64,
    pub sampled: bool,
}

/// Probability-weighted nearest-survivor distance of `selected` within `set`.
pub fn kantorovich(set: &ScenarioSet, selected: &[usize], norm: &Normalizer) -> Result<f64> {
    let all = set.scenarios();
    let mut total = Vec::with_capacity(all.len());
    for s in &all {
        let mut best = f64::INFINITY;
        for &j in selected {
            best = best.min(super::scenario_distance(s, &all[j], norm)?);
        }
        total.push(s.probability * best);
    }
    Ok(exact_sum(total))
}

pub fn reduce(set: &ScenarioSet, target: usize) -> Result<ScenarioSet> {
    Ok(reduce_with(set, target, &ReduceOptions::default())?.set)
}

pub fn reduce_with(set: &ScenarioSet, target: usize, opts: &ReduceOptions) -> Result<Reduction> {
    let n = set.len();
    if n == 0 {
        return Err(CoreError::NoScenarios);
    }
    if target == 0 || target > n {
        return Err(CoreError::TargetOutOfRange { target, available: n });
    }
    if target == n {
        return Ok(Reduction { set: set.clone(), selected: (0..n).collect(), kantorovich: 0.0, sampled: false });
    }
    let norm = Normalizer::fit(set);
    let sampled = n > opts.exact_limit;
    let (selected, nearest) = match ProductMetric::new(set, &norm) {
        Some(pm) if sampled => fast_forward_sampled(&pm, target, opts, set.seed),
        Some(pm) => fast_forward(&pm, target, opts.exec),
        None if sampled => {
            return Err(CoreError::Dimension(format!(
                "explicit sets above {} scenarios are not supported",
                opts.exact_limit
            )))
        }
        None => fast_forward(&MatrixMetric::new(set, &norm, opts.exec)?, target, opts.exec),
    };
    let kd = exact_sum(nearest.iter().map(|&(_, d, p)| d * p));

    let mut order = selected.clone();
    order.sort_unstable();
    let slot_of = |i: usize| order.binary_search(&i).expect("owner is selected");
    let mut scenarios: Vec<Scenario> = order.iter().map(|&i| set.get(i).into_owned()).collect();
    if set.is_product() || uniform_probabilities(set) {
        let mut counts = vec![0usize; order.len()];
        for &(owner, _, _) in &nearest {
            counts[slot_of(owner)] += 1;
        }
        for (s, c) in scenarios.iter_mut().zip(&counts) {
            s.probability = *c as f64 / n as f64;
        }
    } else {
        let mut mass = vec![Vec::new(); order.len()];
        for (i, &(owner, _, _)) in nearest.iter().enumerate() {
            mass[slot_of(owner)].push(set.probability(i));
        }
        let q: Vec<f64> = mass.into_iter().map(exact_sum).collect();
        let total = exact_sum(q.iter().copied());
        for (s, qi) in scenarios.iter_mut().zip(&q) {
            s.probability = qi / total;
        }
    }
    let reduced = ScenarioSet::from_scenarios(
        scenarios,
        set.seed,
        format!("fast-forward {n} -> {target}{}", if sampled { " (sampled screening)" } else { "" }),
    )?;
    Ok(Reduction { set: reduced, selected, kantorovich: kd, sampled })
}

fn uniform_probabilities(set: &ScenarioSet) -> bool {
    let p0 = set.probability(0);
    (0..set.len()).all(|i| set.probability(i) == p0)
}

/// Lowest value, ties to the lowest index.
fn argmin(values: &[(usize, f64)]) -> usize {
    let mut best = values[0];
    for &(i, v) in &values[1..] {
        if v < best.1 || (v == best.1 && i < best.0) {
            best = (i, v);
        }
    }
    best.0
}

/// Exact fast-forward. Returns the selection and, per input scenario,
/// (nearest survivor, its distance, probability).
fn fast_forward<M: Metric>(m: &M, target: usize, exec: Exec) -> (Vec<usize>, Vec<(usize, f64, f64)>) {
    let n = m.len();
    let p: Vec<f64> = (0..n).map(|i| m.prob(i)).collect();
    let mut near = vec![f64::INFINITY; n];
    let mut chosen = vec![false; n];
    let mut selected = Vec::with_capacity(target);
    for _ in 0..target {
        let scores: Vec<(usize, f64)> = exec
            .map_range(n, |u| {
                if chosen[u] {
                    return None;
                }
                let z = exact_sum((0..n).map(|i| p[i] * near[i].min(m.dist(i, u))));
                Some((u, z))
            })
            .into_iter()
            .flatten()
            .collect();
        let u = argmin(&scores);
        chosen[u] = true;
        selected.push(u);
        let d: Vec<f64> = exec.map_range(n, |i| m.dist(i, u));
        for i in 0..n {
            near[i] = near[i].min(d[i]);
        }
    }
    (selected.clone(), assign(m, &selected, exec))
}

/// Nearest survivor of every scenario, ties to the lowest survivor index.
fn assign<M: Metric>(m: &M, selected: &[usize], exec: Exec) -> Vec<(usize, f64, f64)> {
    let mut sorted = selected.to_vec();
    sorted.sort_unstable();
    exec.map_range(m.len(), |i| {
        let mut best = (sorted[0], f64::INFINITY);
        for &s in &sorted {
            let d = if s == i { 0.0 } else { m.dist(i, s) };
            if d < best.1 {
                best = (s, d);
            }
        }
        (best.0, best.1, m.prob(i))
    })
}

fn fast_forward_sampled(
    m: &ProductMetric<'_>,
    target: usize,
    opts: &ReduceOptions,
    seed: u64,
) -> (Vec<usize>, Vec<(usize, f64, f64)>) {
    let n = m.len();
    let days = m.days;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d);
    let mut demand: Vec<usize> = sample(&mut rng, n, opts.sample_size.min(n)).into_vec();
    demand.sort_unstable();
    let demand_idx: Vec<[usize; 4]> = demand.iter().map(|&i| split_index(i, days)).collect();
    let demand_v: Vec<f64> = demand.iter().map(|&i| m.levels[i]).collect();

    // Squared nearest-survivor distance of every scenario.
    let mut near2 = vec![f64::INFINITY; n];
    let mut chosen = vec![false; n];
    let mut selected = Vec::with_capacity(target);
    let chunk = 4096;
    for _ in 0..target {
        let mut screen = vec![f64::INFINITY; n];
        opts.exec.fill_chunks(&mut screen, chunk, |start, out| {
            for (k, slot) in out.iter_mut().enumerate() {
                let u = start + k;
                if chosen[u] {
                    continue;
                }
                let iu = split_index(u, days);
                let vu = m.levels[u];
                let mut z = 0.0;
                for (s, &i) in demand.iter().enumerate() {
                    let d2 = m.dist2_split(&demand_idx[s], demand_v[s], &iu, vu);
                    z += d2.min(near2[i]).sqrt();
                }
                *slot = z;
            }
        });
        let mut ranked: Vec<usize> = (0..n).filter(|&u| !chosen[u]).collect();
        let r = opts.rerank.min(ranked.len());
        ranked.select_nth_unstable_by(r - 1, |&a, &b| screen[a].total_cmp(&screen[b]).then(a.cmp(&b)));
        ranked.truncate(r);
        ranked.sort_unstable();
        let exact: Vec<(usize, f64)> = ranked
            .iter()
            .map(|&u| {
                let iu = split_index(u, days);
                let vu = m.levels[u];
                let parts: Vec<f64> = opts.exec.map_range(n.div_ceil(chunk), |c| {
                    let lo = c * chunk;
                    let hi = (lo + chunk).min(n);
                    exact_sum((lo..hi).map(|i| {
                        let d2 = m.dist2_split(&split_index(i, days), m.levels[i], &iu, vu);
                        d2.min(near2[i]).sqrt()
                    }))
                });
                (u, exact_sum(parts) / n as f64)
            })
            .collect();
        let u = argmin(&exact);
        chosen[u] = true;
        selected.push(u);
        let iu = split_index(u, days);
        let vu = m.levels[u];
        opts.exec.fill_chunks(&mut near2, chunk, |start, out| {
            for (k, d) in out.iter_mut().enumerate() {
                let i = start + k;
                let d2 = if i == u { 0.0 } else { m.dist2_split(&split_index(i, days), m.levels[i], &iu, vu) };
                *d = d.min(d2);
            }
        });
    }
    let mut sorted = selected.clone();
    sorted.sort_unstable();
    let split_sel: Vec<([usize; 4], f64)> = sorted.iter().map(|&s| (split_index(s, days), m.levels[s])).collect();
    let p = 1.0 / n as f64;
    let nearest = opts.exec.map_range(n, |i| {
        let ii = split_index(i, days);
        let mut best = (sorted[0], f64::INFINITY);
        for (k, &s) in sorted.iter().enumerate() {
            let d2 = if s == i { 0.0 } else { m.dist2_split(&ii, m.levels[i], &split_sel[k].0, split_sel[k].1) };
            if d2 < best.1 {
                best = (s, d2);
            }
        }
        (best.0, best.1.sqrt(), p)
    });
    (selected, nearest)
}
