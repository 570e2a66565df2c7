//! Dense two-phase tableau simplex with Bland's rule and exhaustive binary
//! enumeration. Deliberately shares no code with the library solver.

#![allow(dead_code)]

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct DenseLp {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<f64>, Rel, f64)>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

const EPS: f64 = 1e-9;

/// Maximum of `c·x` or `None` when infeasible. Bounds must be finite.
pub fn dense_max(lp: &DenseLp) -> Option<f64> {
    let n = lp.c.len();
    let shift: f64 = lp.c.iter().zip(&lp.lo).map(|(c, l)| c * l).sum();

    // Rows over y = x - lo, plus y <= hi - lo.
    let mut rows: Vec<(Vec<f64>, Rel, f64)> = Vec::new();
    for (a, rel, b) in &lp.rows {
        let b2 = b - a.iter().zip(&lp.lo).map(|(a, l)| a * l).sum::<f64>();
        rows.push((a.clone(), *rel, b2));
    }
    for j in 0..n {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, Rel::Le, lp.hi[j] - lp.lo[j]));
    }
    for r in rows.iter_mut() {
        if r.2 < 0.0 {
            r.0.iter_mut().for_each(|v| *v = -*v);
            r.2 = -r.2;
            r.1 = match r.1 {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Rel::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Rel::Le).count();
    let width = n + n_slack + n_art;
    let mut t = vec![vec![0.0; width + 1]; m + 1];
    let mut basis = vec![0usize; m];
    let mut is_art = vec![false; width];
    let (mut s, mut a) = (n, n + n_slack);
    for (i, (coef, rel, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(coef);
        t[i][width] = *b;
        match rel {
            Rel::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Rel::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                is_art[a] = true;
                basis[i] = a;
                a += 1;
            }
            Rel::Eq => {
                t[i][a] = 1.0;
                is_art[a] = true;
                basis[i] = a;
                a += 1;
            }
        }
    }

    // Phase 1: maximize -sum(artificials).
    for j in 0..width {
        t[m][j] = if is_art[j] { 1.0 } else { 0.0 };
    }
    t[m][width] = 0.0;
    for i in 0..m {
        if is_art[basis[i]] {
            for j in 0..=width {
                t[m][j] -= t[i][j];
            }
        }
    }
    run(&mut t, &mut basis, &vec![true; width]);
    if -t[m][width] > 1e-7 {
        return None;
    }
    // Drive zero-level artificials out of the basis where possible.
    for i in 0..m {
        if is_art[basis[i]] {
            if let Some(j) = (0..width).find(|&j| !is_art[j] && t[i][j].abs() > EPS) {
                pivot(&mut t, &mut basis, i, j);
            }
        }
    }

    // Phase 2.
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    for j in 0..=width {
        t[m][j] = 0.0;
    }
    for j in 0..n {
        t[m][j] = -lp.c[j];
    }
    for i in 0..m {
        let bj = basis[i];
        if bj < n && lp.c[bj] != 0.0 {
            let cb = lp.c[bj];
            for j in 0..=width {
                t[m][j] += cb * t[i][j];
            }
        }
    }
    run(&mut t, &mut basis, &allowed);
    Some(t[m][width] + shift)
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
    let p = t[r][q];
    t[r].iter_mut().for_each(|v| *v /= p);
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[q];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = q;
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize], allowed: &[bool]) {
    let m = basis.len();
    let width = allowed.len();
    for _ in 0..100_000 {
        let Some(q) = (0..width).find(|&j| allowed[j] && t[m][j] < -EPS) else {
            return;
        };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][q] > EPS {
                let ratio = t[i][width] / t[i][q];
                let better = match best {
                    None => true,
                    Some((bi, br)) => {
                        ratio < br - 1e-12 || ((ratio - br).abs() <= 1e-12 && basis[i] < basis[bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
        }
        let (r, _) = best.expect("bounded variables cannot give an unbounded ray");
        pivot(t, basis, r, q);
    }
    panic!("oracle simplex did not terminate");
}

/// Best objective over all 0/1 assignments of `binaries`, solving an LP per leaf.
pub fn enumerate_binaries(lp: &DenseLp, binaries: &[usize]) -> Option<f64> {
    let k = binaries.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << k) {
        let mut leaf = lp.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            leaf.lo[j] = v;
            leaf.hi[j] = v;
        }
        if let Some(v) = dense_max(&leaf) {
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}
