//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking in order of increasing column count
//! with threshold partial pivoting. Rows are indexed by constraint, columns
//! by basis position.

const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// Basis positions and rows left without a pivot by a failed factorization.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    pivot_row: Vec<usize>,
    step_pos: Vec<usize>,
    // Steps whose L column is non-empty, in elimination order.
    l_steps: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
    work: Vec<f64>,
}

impl BasisFactor {
    /// Factorizes the `m × m` basis whose column at position `p` is
    /// `column(p)` given as `(row indices, values)`.
    pub(crate) fn factorize<'a, F>(m: usize, column: F) -> Result<Self, Singular>
    where
        F: Fn(usize) -> (&'a [usize], &'a [f64]),
    {
        let mut row_count = vec![0usize; m];
        let mut order: Vec<(usize, usize)> = (0..m)
            .map(|p| {
                let (idx, _) = column(p);
                for &i in idx {
                    row_count[i] += 1;
                }
                (idx.len(), p)
            })
            .collect();
        order.sort_unstable();

        let mut f = BasisFactor {
            m,
            pivot_row: Vec::with_capacity(m),
            step_pos: Vec::with_capacity(m),
            l_steps: Vec::new(),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            eta_nnz: 0,
            work: vec![0.0; m],
        };

        let mut step_of_row = vec![usize::MAX; m];
        let mut x = vec![0.0; m];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; m];
        let mut bad_positions = Vec::new();

        for &(_, pos) in &order {
            let (idx, val) = column(pos);
            for (&i, &v) in idx.iter().zip(val) {
                x[i] = v;
                if !mark[i] {
                    mark[i] = true;
                    touched.push(i);
                }
            }
            for &s in &f.l_steps {
                let xr = x[f.pivot_row[s]];
                if xr == 0.0 {
                    continue;
                }
                for q in f.l_start[s]..f.l_start[s + 1] {
                    let i = f.l_idx[q];
                    x[i] -= f.l_val[q] * xr;
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                }
            }

            let mut amax = 0.0f64;
            for &i in &touched {
                if step_of_row[i] == usize::MAX {
                    amax = amax.max(x[i].abs());
                }
            }
            if amax <= SINGULAR_TOL {
                bad_positions.push(pos);
                for &i in &touched {
                    x[i] = 0.0;
                    mark[i] = false;
                }
                touched.clear();
                continue;
            }

            let mut best: Option<usize> = None;
            for &i in &touched {
                if step_of_row[i] != usize::MAX || x[i].abs() < PIVOT_THRESHOLD * amax {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let better = row_count[i] < row_count[b]
                            || (row_count[i] == row_count[b]
                                && (x[i].abs() > x[b].abs()
                                    || (x[i].abs() == x[b].abs() && i < b)));
                        Some(if better { i } else { b })
                    }
                };
            }
            let r = best.expect("a candidate above threshold exists");
            let k = f.pivot_row.len();
            let diag = x[r];

            touched.sort_unstable();
            for &i in &touched {
                let v = x[i];
                if i == r || v.abs() <= DROP_TOL {
                    continue;
                }
                if step_of_row[i] != usize::MAX {
                    f.u_idx.push(step_of_row[i]);
                    f.u_val.push(v);
                } else {
                    f.l_idx.push(i);
                    f.l_val.push(v / diag);
                }
            }
            for &i in &touched {
                x[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();

            f.u_start.push(f.u_idx.len());
            f.u_diag.push(diag);
            if f.l_idx.len() > *f.l_start.last().unwrap() {
                f.l_steps.push(k);
            }
            f.l_start.push(f.l_idx.len());
            f.pivot_row.push(r);
            f.step_pos.push(pos);
            step_of_row[r] = k;
        }

        if !bad_positions.is_empty() {
            let rows = (0..m).filter(|&i| step_of_row[i] == usize::MAX).collect();
            return Err(Singular {
                positions: bad_positions,
                rows,
            });
        }
        Ok(f)
    }

    pub(crate) fn num_etas(&self) -> usize {
        self.etas.len()
    }

    pub(crate) fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub(crate) fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Solves `B x = b`. On entry `rhs` is indexed by row, on exit by basis position.
    pub(crate) fn ftran(&mut self, rhs: &mut [f64]) {
        for &s in &self.l_steps {
            let xr = rhs[self.pivot_row[s]];
            if xr == 0.0 {
                continue;
            }
            for q in self.l_start[s]..self.l_start[s + 1] {
                rhs[self.l_idx[q]] -= self.l_val[q] * xr;
            }
        }
        let w = &mut self.work;
        for (k, &r) in self.pivot_row.iter().enumerate() {
            w[k] = rhs[r];
        }
        for k in (0..self.m).rev() {
            if w[k] == 0.0 {
                continue;
            }
            let v = w[k] / self.u_diag[k];
            w[k] = v;
            for q in self.u_start[k]..self.u_start[k + 1] {
                w[self.u_idx[q]] -= self.u_val[q] * v;
            }
        }
        for (k, &p) in self.step_pos.iter().enumerate() {
            rhs[p] = w[k];
        }
        for eta in &self.etas {
            let xr = rhs[eta.pos] / eta.pivot;
            rhs[eta.pos] = xr;
            if xr == 0.0 {
                continue;
            }
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                rhs[i] -= a * xr;
            }
        }
    }

    /// Solves `yᵀ B = cᵀ`. On entry `rhs` is indexed by basis position, on exit by row.
    pub(crate) fn btran(&mut self, rhs: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                v -= a * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        let w = &mut self.work;
        for k in 0..self.m {
            let mut v = rhs[self.step_pos[k]];
            for q in self.u_start[k]..self.u_start[k + 1] {
                v -= self.u_val[q] * w[self.u_idx[q]];
            }
            w[k] = v / self.u_diag[k];
        }
        for (k, &r) in self.pivot_row.iter().enumerate() {
            rhs[r] = w[k];
        }
        for &s in self.l_steps.iter().rev() {
            let mut v = rhs[self.pivot_row[s]];
            for q in self.l_start[s]..self.l_start[s + 1] {
                v -= self.l_val[q] * rhs[self.l_idx[q]];
            }
            rhs[self.pivot_row[s]] = v;
        }
    }

    /// Records that the column at basis position `pos` was replaced by a
    /// column whose FTRAN image is `alpha`.
    pub(crate) fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.eta_nnz += idx.len();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            idx,
            val,
        });
    }
}
