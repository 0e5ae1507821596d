//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! The basis matrices produced by assignment-style models are dominated by
//! logical columns and 0/±1 entries, so most pivots are singletons. The
//! factorization peels column and row singletons first and falls back to a
//! Markowitz search with threshold pivoting for the remaining nucleus.

/// Basis factorization. Rows are constraint indices, positions are basis slots.
#[derive(Clone, Debug, Default)]
pub(crate) struct Factor {
    // L: one eta per pivot step, `rhs[i] -= mult * rhs[pivot_row]`.
    l_pivot_row: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U: pivot row, pivot position, pivot value and the off-pivot entries
    // (positions pivoted later in the sequence).
    u_row: Vec<usize>,
    u_pos: Vec<usize>,
    u_piv: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    // Product-form updates applied after the LU part.
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

/// Positions (and an equal number of rows) left without a pivot.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

const ABS_PIVOT_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.01;

impl Factor {
    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    /// Factorize the `m x m` matrix whose column at position `p` is
    /// `column(p)` given as `(row, value)` pairs.
    pub fn new<'a, F>(m: usize, column: F) -> Result<Factor, Singular>
    where
        F: Fn(usize) -> &'a [(usize, f64)],
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut col_count = vec![0usize; m];
        for p in 0..m {
            for &(r, v) in column(p) {
                if v != 0.0 {
                    rows[r].push((p, v));
                    cols[p].push(r);
                    col_count[p] += 1;
                }
            }
        }
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        let mut col_stack: Vec<usize> = (0..m).rev().filter(|&p| col_count[p] == 1).collect();
        let mut row_stack: Vec<usize> = (0..m).rev().filter(|&r| rows[r].len() == 1).collect();

        let mut f = Factor::default();
        f.l_start.push(0);
        f.u_start.push(0);
        f.eta_start.push(0);

        let mut mark = vec![usize::MAX; m];
        let mut pivoted = 0;
        while pivoted < m {
            let choice = Self::pick_column_singleton(
                &mut col_stack,
                &col_active,
                &col_count,
                &cols,
                &rows,
                &row_active,
            )
            .or_else(|| {
                Self::pick_row_singleton(&mut row_stack, &row_active, &col_active, &rows, &cols)
            })
            .or_else(|| Self::pick_markowitz(&col_active, &col_count, &cols, &rows, &row_active));
            let Some((r, c, v)) = choice else {
                break;
            };
            // U row.
            f.u_row.push(r);
            f.u_pos.push(c);
            f.u_piv.push(v);
            for &(p, val) in &rows[r] {
                if p != c {
                    f.u_idx.push(p);
                    f.u_val.push(val);
                }
            }
            f.u_start.push(f.u_idx.len());
            // Eliminate column c from the other active rows.
            f.l_pivot_row.push(r);
            let pivot_row = std::mem::take(&mut rows[r]);
            let col_rows = std::mem::take(&mut cols[c]);
            for &i in &col_rows {
                if i == r || !row_active[i] {
                    continue;
                }
                let Some(k) = rows[i].iter().position(|&(p, _)| p == c) else {
                    continue;
                };
                let vic = rows[i].swap_remove(k).1;
                let mult = vic / v;
                f.l_idx.push(i);
                f.l_val.push(mult);
                for (k, &(p, _)) in rows[i].iter().enumerate() {
                    mark[p] = k;
                }
                for &(p, val) in &pivot_row {
                    if p == c {
                        continue;
                    }
                    let k = mark[p];
                    if k < rows[i].len() && rows[i][k].0 == p {
                        rows[i][k].1 -= mult * val;
                    } else {
                        rows[i].push((p, -mult * val));
                        cols[p].push(i);
                        col_count[p] += 1;
                    }
                }
                for &(p, _) in rows[i].iter() {
                    mark[p] = usize::MAX;
                }
                if rows[i].len() == 1 {
                    row_stack.push(i);
                }
            }
            f.l_start.push(f.l_idx.len());
            row_active[r] = false;
            col_active[c] = false;
            for &(p, _) in &pivot_row {
                if p != c {
                    col_count[p] -= 1;
                    if col_count[p] == 1 {
                        col_stack.push(p);
                    }
                }
            }
            rows[r] = pivot_row;
            pivoted += 1;
        }
        if pivoted < m {
            return Err(Singular {
                positions: (0..m).filter(|&p| col_active[p]).collect(),
                rows: (0..m).filter(|&r| row_active[r]).collect(),
            });
        }
        Ok(f)
    }

    fn pick_column_singleton(
        stack: &mut Vec<usize>,
        col_active: &[bool],
        col_count: &[usize],
        cols: &[Vec<usize>],
        rows: &[Vec<(usize, f64)>],
        row_active: &[bool],
    ) -> Option<(usize, usize, f64)> {
        while let Some(c) = stack.pop() {
            if !col_active[c] || col_count[c] != 1 {
                continue;
            }
            for &r in &cols[c] {
                if !row_active[r] {
                    continue;
                }
                if let Some(&(_, v)) = rows[r].iter().find(|&&(p, _)| p == c) {
                    if v.abs() > ABS_PIVOT_TOL {
                        return Some((r, c, v));
                    }
                }
            }
        }
        None
    }

    fn pick_row_singleton(
        stack: &mut Vec<usize>,
        row_active: &[bool],
        col_active: &[bool],
        rows: &[Vec<(usize, f64)>],
        cols: &[Vec<usize>],
    ) -> Option<(usize, usize, f64)> {
        // Rows rejected on threshold stay candidates for the Markowitz search.
        while let Some(r) = stack.pop() {
            if !row_active[r] || rows[r].len() != 1 {
                continue;
            }
            let (c, v) = rows[r][0];
            if !col_active[c] {
                continue;
            }
            let colmax = Self::column_max(c, cols, rows, row_active);
            if v.abs() > ABS_PIVOT_TOL && v.abs() >= THRESHOLD * colmax {
                return Some((r, c, v));
            }
        }
        None
    }

    fn column_max(
        c: usize,
        cols: &[Vec<usize>],
        rows: &[Vec<(usize, f64)>],
        row_active: &[bool],
    ) -> f64 {
        let mut colmax: f64 = 0.0;
        for &i in &cols[c] {
            if !row_active[i] {
                continue;
            }
            if let Some(&(_, v)) = rows[i].iter().find(|&&(p, _)| p == c) {
                colmax = colmax.max(v.abs());
            }
        }
        colmax
    }

    fn pick_markowitz(
        col_active: &[bool],
        col_count: &[usize],
        cols: &[Vec<usize>],
        rows: &[Vec<(usize, f64)>],
        row_active: &[bool],
    ) -> Option<(usize, usize, f64)> {
        // Examine the few active columns with the smallest counts.
        const SEARCH: usize = 4;
        let mut cand: Vec<(usize, usize)> = Vec::with_capacity(SEARCH + 1);
        for c in 0..col_active.len() {
            if !col_active[c] || col_count[c] == 0 {
                continue;
            }
            let key = (col_count[c], c);
            if cand.len() < SEARCH || key < *cand.last().unwrap() {
                let at = cand.partition_point(|k| *k < key);
                cand.insert(at, key);
                cand.truncate(SEARCH);
            }
        }
        let mut best: Option<(usize, usize, usize, f64)> = None; // cost, r, c, v
        for &(count, c) in &cand {
            let colmax = Self::column_max(c, cols, rows, row_active);
            if colmax <= ABS_PIVOT_TOL {
                continue;
            }
            for &r in &cols[c] {
                if !row_active[r] {
                    continue;
                }
                let Some(&(_, v)) = rows[r].iter().find(|&&(p, _)| p == c) else {
                    continue;
                };
                if v.abs() < 0.1 * colmax {
                    continue;
                }
                let cost = (rows[r].len() - 1) * (count - 1);
                let better = match best {
                    None => true,
                    Some((bc, br, bcol, bv)) => {
                        cost < bc
                            || (cost == bc && v.abs() > bv.abs())
                            || (cost == bc && v.abs() == bv.abs() && (c, r) < (bcol, br))
                    }
                };
                if better {
                    best = Some((cost, r, c, v));
                }
            }
        }
        best.map(|(_, r, c, v)| (r, c, v))
    }

    /// Solve `B x = rhs`. `rhs` is indexed by row and is consumed; the
    /// result is written to `out`, indexed by basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for k in 0..self.l_pivot_row.len() {
            let ar = rhs[self.l_pivot_row[k]];
            if ar != 0.0 {
                for e in self.l_start[k]..self.l_start[k + 1] {
                    rhs[self.l_idx[e]] -= self.l_val[e] * ar;
                }
            }
        }
        for k in (0..self.u_row.len()).rev() {
            let mut s = rhs[self.u_row[k]];
            for e in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[e] * out[self.u_idx[e]];
            }
            out[self.u_pos[k]] = s / self.u_piv[k];
        }
        for k in 0..self.eta_pos.len() {
            let p = self.eta_pos[k];
            let xp = out[p] / self.eta_piv[k];
            out[p] = xp;
            if xp != 0.0 {
                for e in self.eta_start[k]..self.eta_start[k + 1] {
                    out[self.eta_idx[e]] -= self.eta_val[e] * xp;
                }
            }
        }
    }

    /// Solve `y^T B = c^T`. `c` is indexed by basis position and is consumed;
    /// the result is written to `out`, indexed by row.
    pub fn btran(&self, c: &mut [f64], out: &mut [f64]) {
        for k in (0..self.eta_pos.len()).rev() {
            let p = self.eta_pos[k];
            let mut s = c[p];
            for e in self.eta_start[k]..self.eta_start[k + 1] {
                s -= self.eta_val[e] * c[self.eta_idx[e]];
            }
            c[p] = s / self.eta_piv[k];
        }
        for k in 0..self.u_row.len() {
            let z = c[self.u_pos[k]] / self.u_piv[k];
            out[self.u_row[k]] = z;
            if z != 0.0 {
                for e in self.u_start[k]..self.u_start[k + 1] {
                    c[self.u_idx[e]] -= self.u_val[e] * z;
                }
            }
        }
        for k in (0..self.l_pivot_row.len()).rev() {
            let mut s = 0.0;
            for e in self.l_start[k]..self.l_start[k + 1] {
                s += self.l_val[e] * out[self.l_idx[e]];
            }
            out[self.l_pivot_row[k]] -= s;
        }
    }

    /// Record that the column at position `p` was replaced by a column whose
    /// FTRAN image is `w` (indexed by position).
    pub fn update(&mut self, p: usize, w: &[f64]) {
        self.eta_pos.push(p);
        self.eta_piv.push(w[p]);
        for (i, &v) in w.iter().enumerate() {
            if i != p && v.abs() > 1e-14 {
                self.eta_idx.push(i);
                self.eta_val.push(v);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|p| {
                (0..m)
                    .filter(|&r| a[r][p] != 0.0)
                    .map(|r| (r, a[r][p]))
                    .collect()
            })
            .collect()
    }

    fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn solves_dense_system_both_ways() {
        let a = vec![
            vec![2.0, 0.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.0, 0.0],
            vec![0.0, 1.0, 4.0, 1.0],
            vec![0.0, 0.0, 1.0, -1.0],
        ];
        let cols = dense_cols(&a);
        let f = Factor::new(4, |p| &cols[p]).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let mut rhs = b.clone();
        let mut x = vec![0.0; 4];
        f.ftran(&mut rhs, &mut x);
        let back = mat_vec(&a, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
        // y^T A = c^T
        let c = vec![1.0, -1.0, 0.5, 2.0];
        let mut cc = c.clone();
        let mut y = vec![0.0; 4];
        f.btran(&mut cc, &mut y);
        for p in 0..4 {
            let s: f64 = (0..4).map(|r| y[r] * a[r][p]).sum();
            assert!((s - c[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn update_replaces_column() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let cols = dense_cols(&a);
        let mut f = Factor::new(2, |p| &cols[p]).unwrap();
        // Replace column 1 by (1, 2).
        let mut rhs = vec![1.0, 2.0];
        let mut w = vec![0.0; 2];
        f.ftran(&mut rhs, &mut w);
        f.update(1, &w);
        let new_a = vec![vec![1.0, 1.0], vec![0.0, 2.0]];
        let mut rhs = vec![3.0, 4.0];
        let mut x = vec![0.0; 2];
        f.ftran(&mut rhs, &mut x);
        let back = mat_vec(&new_a, &x);
        assert!((back[0] - 3.0).abs() < 1e-12 && (back[1] - 4.0).abs() < 1e-12);
        let mut c = vec![1.0, 5.0];
        let mut y = vec![0.0; 2];
        f.btran(&mut c, &mut y);
        for p in 0..2 {
            let s: f64 = (0..2).map(|r| y[r] * new_a[r][p]).sum();
            assert!((s - [1.0, 5.0][p]).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singular_positions() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let cols = dense_cols(&a);
        let err = Factor::new(2, |p| &cols[p]).unwrap_err();
        assert_eq!(err.positions.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }
}
