//! Seeded random MILP instances built twice: once as a library model and
//! once in the oracle's dense form.

#![allow(dead_code)]

use campus_milp::{MilpModel, Sense};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::oracle::{DenseLp, Rel};

pub struct Instance {
    pub model: MilpModel,
    pub dense: DenseLp,
    pub binaries: Vec<usize>,
}

/// At most `max_bin` binaries and `max_cont` continuous variables.
pub fn random_instance(seed: u64, max_bin: usize, max_cont: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(0..=max_bin);
    let nc = rng.gen_range(1..=max_cont);
    let n = nb + nc;
    let m_rows = rng.gen_range(1..=12);

    let mut model = MilpModel::new(format!("rand{seed}"));
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut binaries = Vec::new();
    // Interleave binaries and continuous columns.
    let mut kinds: Vec<bool> = (0..n).map(|j| j < nb).collect();
    for j in (1..n).rev() {
        let k = rng.gen_range(0..=j);
        kinds.swap(j, k);
    }
    for (j, &is_bin) in kinds.iter().enumerate() {
        if is_bin {
            model.add_binary(format!("b{j}")).unwrap();
            lo.push(0.0);
            hi.push(1.0);
            binaries.push(j);
        } else {
            let l = rng.gen_range(-3..=2) as f64;
            let u = l + rng.gen_range(1..=8) as f64;
            model.add_continuous(format!("x{j}"), l, u).unwrap();
            lo.push(l);
            hi.push(u);
        }
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-10..=10) as f64).collect();
    for (j, &cj) in c.iter().enumerate() {
        model.set_objective_coeff(campus_milp::VarId(j), cj);
    }

    // A reference point keeps most instances feasible.
    let point: Vec<f64> = (0..n)
        .map(|j| {
            if kinds[j] {
                rng.gen_range(0..=1) as f64
            } else {
                rng.gen_range(lo[j]..=hi[j])
            }
        })
        .collect();
    let mut rows = Vec::new();
    for i in 0..m_rows {
        let mut a = vec![0.0; n];
        for v in a.iter_mut() {
            if rng.gen_bool(0.4) {
                *v = rng.gen_range(-6..=6) as f64;
            }
        }
        let act: f64 = a.iter().zip(&point).map(|(a, x)| a * x).sum();
        let (rel, sense, b) = match rng.gen_range(0..10) {
            0 => (Rel::Eq, Sense::Eq, act),
            1..=5 => (Rel::Le, Sense::Le, (act + rng.gen_range(0.0..4.0)).round()),
            _ => (Rel::Ge, Sense::Ge, (act - rng.gen_range(0.0..4.0)).round()),
        };
        let coeffs = a
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (campus_milp::VarId(j), *v))
            .collect();
        model.add_row(format!("r{i}"), coeffs, sense, b).unwrap();
        rows.push((a, rel, b));
    }
    Instance {
        model,
        dense: DenseLp { c, rows, lo, hi },
        binaries,
    }
}
