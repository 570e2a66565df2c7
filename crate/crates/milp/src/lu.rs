//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The factorization uses Markowitz pivot selection with threshold partial
//! pivoting over the active submatrix. Basis changes between
//! refactorizations are represented as eta columns.

const NONE: usize = usize::MAX;

/// Relative pivot threshold for Markowitz selection.
const THRESHOLD: f64 = 0.01;
/// Absolute magnitude below which a candidate pivot counts as zero.
const ZERO_PIVOT: f64 = 1e-11;
/// Number of rows/columns inspected before accepting the cheapest pivot seen.
const SEARCH_LIMIT: usize = 4;

/// One sparse column given as parallel row/value slices.
#[derive(Clone, Debug, Default)]
pub(crate) struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }
}

#[derive(Debug)]
pub(crate) struct Singular {
    /// Basis positions whose columns could not be pivoted.
    pub positions: Vec<usize>,
    /// Rows left without a pivot, same length as `positions`.
    pub rows: Vec<usize>,
}

/// Doubly linked lists of indices bucketed by nonzero count.
struct CountLists {
    head: Vec<usize>,
    next: Vec<usize>,
    prev: Vec<usize>,
    count: Vec<usize>,
}

impl CountLists {
    fn new(n: usize, max_count: usize) -> Self {
        Self {
            head: vec![NONE; max_count + 2],
            next: vec![NONE; n],
            prev: vec![NONE; n],
            count: vec![0; n],
        }
    }

    fn insert(&mut self, x: usize, c: usize) {
        let c = c.min(self.head.len() - 1);
        self.count[x] = c;
        self.prev[x] = NONE;
        self.next[x] = self.head[c];
        if self.head[c] != NONE {
            self.prev[self.head[c]] = x;
        }
        self.head[c] = x;
    }

    fn remove(&mut self, x: usize) {
        let c = self.count[x];
        if self.prev[x] != NONE {
            self.next[self.prev[x]] = self.next[x];
        } else {
            self.head[c] = self.next[x];
        }
        if self.next[x] != NONE {
            self.prev[self.next[x]] = self.prev[x];
        }
        self.next[x] = NONE;
        self.prev[x] = NONE;
    }

    fn update(&mut self, x: usize, c: usize) {
        self.remove(x);
        self.insert(x, c);
    }
}

/// `L` and `U` factors in pivot order.
#[derive(Clone, Debug, Default)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_diag: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

impl LuFactors {
    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Factorizes the `m x m` matrix whose columns are `cols`.
    pub fn factorize(m: usize, cols: &[SparseVec]) -> Result<Self, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut colpat: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (c, col) in cols.iter().enumerate() {
            for (&r, &v) in col.idx.iter().zip(&col.val) {
                if v != 0.0 {
                    rows[r].push((c, v));
                    colpat[c].push(r);
                }
            }
        }
        let mut col_lists = CountLists::new(m, m);
        let mut row_lists = CountLists::new(m, m);
        for c in 0..m {
            col_lists.insert(c, colpat[c].len());
        }
        for r in 0..m {
            row_lists.insert(r, rows[r].len());
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut work_pos = vec![NONE; m];

        let mut f = LuFactors {
            m,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };

        for _step in 0..m {
            let Some((pr, pc, pv)) = select_pivot(&rows, &colpat, &col_lists, &row_lists, m)
            else {
                break;
            };

            // U row: the remaining entries of the pivot row.
            let prow = std::mem::take(&mut rows[pr]);
            for &(c, v) in &prow {
                if c != pc {
                    f.u_idx.push(c);
                    f.u_val.push(v);
                }
                // Row `pr` leaves the active submatrix.
                if let Some(k) = colpat[c].iter().position(|&r| r == pr) {
                    colpat[c].swap_remove(k);
                }
                if c != pc {
                    col_lists.update(c, colpat[c].len());
                }
            }
            f.u_diag.push(pv);
            f.u_start.push(f.u_idx.len());

            // Eliminate the pivot column from every other active row.
            let elim_rows = std::mem::take(&mut colpat[pc]);
            for &i in &elim_rows {
                let row_i = &mut rows[i];
                let k = row_i
                    .iter()
                    .position(|&(c, _)| c == pc)
                    .expect("column pattern and row storage out of sync");
                let a_ic = row_i.swap_remove(k).1;
                let l = a_ic / pv;
                f.l_idx.push(i);
                f.l_val.push(l);
                for (k, &(c, _)) in row_i.iter().enumerate() {
                    work_pos[c] = k;
                }
                for &(c, v) in &prow {
                    if c == pc {
                        continue;
                    }
                    let p = work_pos[c];
                    if p != NONE {
                        row_i[p].1 -= l * v;
                    } else {
                        row_i.push((c, -l * v));
                        colpat[c].push(i);
                        col_lists.update(c, colpat[c].len());
                    }
                }
                for &(c, _) in row_i.iter() {
                    work_pos[c] = NONE;
                }
                row_lists.update(i, row_i.len());
            }
            f.l_start.push(f.l_idx.len());

            col_lists.remove(pc);
            row_lists.remove(pr);
            row_done[pr] = true;
            col_done[pc] = true;
            f.pivot_row.push(pr);
            f.pivot_col.push(pc);
        }

        if f.pivot_row.len() < m {
            let positions: Vec<usize> = (0..m).filter(|&c| !col_done[c]).collect();
            let rows: Vec<usize> = (0..m).filter(|&r| !row_done[r]).collect();
            return Err(Singular { positions, rows });
        }
        Ok(f)
    }

    /// Solves `B x = b` in place: on entry `b` is indexed by row, on exit
    /// `x` holds the solution indexed by basis position.
    pub fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        for k in 0..self.m {
            let v = b[self.pivot_row[k]];
            if v != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    b[self.l_idx[e]] -= self.l_val[e] * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut s = b[self.pivot_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * x[self.u_idx[e]];
            }
            x[self.pivot_col[k]] = s / self.u_diag[k];
        }
    }

    /// Solves `B^T y = c` in place: `c` is indexed by basis position and is
    /// destroyed, `y` receives the solution indexed by row.
    pub fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for k in 0..self.m {
            let z = c[self.pivot_col[k]] / self.u_diag[k];
            y[self.pivot_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut s = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[e] * y[self.l_idx[e]];
            }
            y[self.pivot_row[k]] -= s;
        }
    }
}

fn column_max(rows: &[Vec<(usize, f64)>], pattern: &[usize], c: usize) -> f64 {
    pattern
        .iter()
        .map(|&r| entry(&rows[r], c).abs())
        .fold(0.0, f64::max)
}

fn entry(row: &[(usize, f64)], c: usize) -> f64 {
    row.iter().find(|&&(cc, _)| cc == c).map_or(0.0, |&(_, v)| v)
}

/// Markowitz search over the sparsest columns and rows of the active submatrix.
fn select_pivot(
    rows: &[Vec<(usize, f64)>],
    colpat: &[Vec<usize>],
    col_lists: &CountLists,
    row_lists: &CountLists,
    m: usize,
) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    let mut best_cost = usize::MAX;
    let mut best_mag = 0.0;
    let mut searched = 0;
    let max_count = col_lists.head.len() - 1;

    for count in 1..=max_count.min(m) {
        let mut c = col_lists.head[count];
        while c != NONE {
            let cmax = column_max(rows, &colpat[c], c);
            if cmax > ZERO_PIVOT {
                for &r in &colpat[c] {
                    let a = entry(&rows[r], c);
                    if a.abs() >= THRESHOLD * cmax && a.abs() > ZERO_PIVOT {
                        let cost = (rows[r].len() - 1) * (count - 1);
                        if cost < best_cost || (cost == best_cost && a.abs() > best_mag) {
                            best = Some((r, c, a));
                            best_cost = cost;
                            best_mag = a.abs();
                        }
                    }
                }
                searched += 1;
            }
            if best.is_some() && (searched >= SEARCH_LIMIT || best_cost == 0) {
                return best;
            }
            c = col_lists.next[c];
        }
        let mut r = row_lists.head[count];
        while r != NONE {
            for &(c, a) in &rows[r] {
                if a.abs() <= ZERO_PIVOT {
                    continue;
                }
                let cmax = column_max(rows, &colpat[c], c);
                if a.abs() >= THRESHOLD * cmax {
                    let cost = (count - 1) * (colpat[c].len() - 1);
                    if cost < best_cost || (cost == best_cost && a.abs() > best_mag) {
                        best = Some((r, c, a));
                        best_cost = cost;
                        best_mag = a.abs();
                    }
                }
            }
            searched += 1;
            if best.is_some() && (searched >= SEARCH_LIMIT || best_cost == 0) {
                return best;
            }
            r = row_lists.next[r];
        }
        if best.is_some() && best_cost <= count * count {
            return best;
        }
    }
    best
}

/// Eta column from one basis change.
#[derive(Clone, Debug)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

/// LU factors plus the eta file accumulated since the last refactorization.
#[derive(Clone, Debug, Default)]
pub(crate) struct Factorization {
    lu: LuFactors,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

impl Factorization {
    pub fn new(m: usize, cols: &[SparseVec]) -> Result<Self, Singular> {
        Ok(Self {
            lu: LuFactors::factorize(m, cols)?,
            etas: Vec::new(),
            eta_nnz: 0,
        })
    }

    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    /// True once the eta file outgrows the factors it updates.
    pub fn is_bloated(&self) -> bool {
        self.eta_nnz > 2 * self.lu.nnz() + 10 * self.lu.m
    }

    /// `b` indexed by row on entry (destroyed); `x` indexed by position on exit.
    pub fn ftran(&self, b: &mut [f64], x: &mut [f64]) {
        self.lu.ftran(b, x);
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            x[eta.pos] = xp;
            if xp != 0.0 {
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    x[i] -= a * xp;
                }
            }
        }
    }

    /// `c` indexed by position on entry (destroyed); `y` indexed by row on exit.
    pub fn btran(&self, c: &mut [f64], y: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                s -= c[i] * a;
            }
            c[eta.pos] = s / eta.pivot;
        }
        self.lu.btran(c, y);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha` (indexed by position).
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > 1e-14 {
                idx.push(i);
                val.push(a);
            }
        }
        self.eta_nnz += idx.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}
