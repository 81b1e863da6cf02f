//! Sparse matrices and a simplicial LDL^T factorization.
//!
//! The saddle systems here are symmetric indefinite. They are factored as
//! P (A + E) P^T = L D L^T with an approximate-minimum-degree permutation P
//! and a tiny signed static regularization E that makes the matrix
//! quasi-definite, so the factorization exists for any symmetric permutation.
//! Iterative refinement against the unregularized matrix restores full
//! accuracy.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Triplets {
    pub n_rows: usize,
    pub n_cols: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Triplets { n_rows, n_cols, rows: Vec::new(), cols: Vec::new(), vals: Vec::new() }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        if v != 0.0 {
            self.rows.push(i);
            self.cols.push(j);
            self.vals.push(v);
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        CscMatrix::from_triplets(self)
    }
}

/// Compressed sparse column matrix with sorted, deduplicated rows per column.
#[derive(Clone, Debug)]
pub struct CscMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CscMatrix {
    pub fn from_triplets(t: &Triplets) -> Self {
        let mut count = vec![0usize; t.n_cols + 1];
        for &c in &t.cols {
            count[c + 1] += 1;
        }
        for j in 0..t.n_cols {
            count[j + 1] += count[j];
        }
        let mut next = count.clone();
        let nnz = t.vals.len();
        let mut rows = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        for k in 0..nnz {
            let j = t.cols[k];
            let slot = next[j];
            rows[slot] = t.rows[k];
            vals[slot] = t.vals[k];
            next[j] += 1;
        }
        // sort and combine duplicates per column
        let mut col_ptr = vec![0usize; t.n_cols + 1];
        let mut out_rows = Vec::with_capacity(nnz);
        let mut out_vals = Vec::with_capacity(nnz);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..t.n_cols {
            scratch.clear();
            scratch.extend(
                rows[count[j]..count[j + 1]]
                    .iter()
                    .copied()
                    .zip(vals[count[j]..count[j + 1]].iter().copied()),
            );
            scratch.sort_unstable_by_key(|&(r, _)| r);
            for &(r, v) in scratch.iter() {
                if let Some(last) = out_rows.last() {
                    if *last == r && out_rows.len() > col_ptr[j] {
                        *out_vals.last_mut().unwrap() += v;
                        continue;
                    }
                }
                out_rows.push(r);
                out_vals.push(v);
            }
            col_ptr[j + 1] = out_rows.len();
        }
        CscMatrix {
            n_rows: t.n_rows,
            n_cols: t.n_cols,
            col_ptr,
            row_idx: out_rows,
            vals: out_vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y += alpha * A x
    pub fn matvec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for j in 0..self.n_cols {
            let xj = alpha * x[j];
            if xj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.vals[p] * xj;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_add(1.0, x, &mut y);
        y
    }

    /// y += alpha * A^T x
    pub fn matvec_transpose_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        for j in 0..self.n_cols {
            let mut s = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.vals[p] * x[self.row_idx[p]];
            }
            y[j] += alpha * s;
        }
    }

    /// Quadratic form x^T A y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n_cols {
            let yj = y[j];
            if yj == 0.0 {
                continue;
            }
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += x[self.row_idx[p]] * self.vals[p] * yj;
            }
        }
        s
    }

    /// Largest absolute asymmetry max |A_ij - A_ji|; the matrix must be square.
    pub fn symmetry_error(&self) -> f64 {
        let t = self.transpose();
        let mut err: f64 = 0.0;
        for j in 0..self.n_cols {
            let (a0, a1) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let (b0, b1) = (t.col_ptr[j], t.col_ptr[j + 1]);
            let (mut p, mut q) = (a0, b0);
            while p < a1 || q < b1 {
                let ra = if p < a1 { self.row_idx[p] } else { usize::MAX };
                let rb = if q < b1 { t.row_idx[q] } else { usize::MAX };
                if ra == rb {
                    err = err.max((self.vals[p] - t.vals[q]).abs());
                    p += 1;
                    q += 1;
                } else if ra < rb {
                    err = err.max(self.vals[p].abs());
                    p += 1;
                } else {
                    err = err.max(t.vals[q].abs());
                    q += 1;
                }
            }
        }
        err
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut t = Triplets::new(self.n_cols, self.n_rows);
        for j in 0..self.n_cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                t.push(j, self.row_idx[p], self.vals[p]);
            }
        }
        t.to_csc()
    }

    /// Maximum absolute difference between two matrices with identical
    /// sparsity patterns.
    pub fn max_abs_diff(&self, other: &CscMatrix) -> f64 {
        assert_eq!(self.col_ptr, other.col_ptr, "sparsity patterns differ");
        assert_eq!(self.row_idx, other.row_idx, "sparsity patterns differ");
        self.vals
            .iter()
            .zip(&other.vals)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diag(&self) -> f64 {
        let mut m: f64 = 0.0;
        for j in 0..self.n_cols.min(self.n_rows) {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.row_idx[p] == j {
                    m = m.max(self.vals[p].abs());
                }
            }
        }
        m
    }

    /// MatrixMarket coordinate text (general symmetric stored fully).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        s.push_str(&format!("{} {} {}\n", self.n_rows, self.n_cols, self.nnz()));
        for j in 0..self.n_cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s.push_str(&format!("{} {} {:.17e}\n", self.row_idx[p] + 1, j + 1, self.vals[p]));
            }
        }
        s
    }
}

/// LDL^T factorization of a permuted, statically regularized symmetric matrix.
pub struct LdltFactor {
    n: usize,
    /// perm[k] = original index of the k-th pivot
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl LdltFactor {
    /// Factor P (A + diag(reg)) P^T where `a` holds the full symmetric matrix.
    /// `reg` may be empty (no regularization).
    pub fn factor(a: &CscMatrix, reg: &[f64]) -> Result<Self> {
        assert_eq!(a.n_rows, a.n_cols);
        let n = a.n_rows;
        if n == 0 {
            return Err(Error::SingularSystem("empty matrix".into()));
        }
        assert!(reg.is_empty() || reg.len() == n);

        // fill-reducing ordering on the full pattern
        let control = amd::Control::default();
        let (perm, perm_inv, _info) = amd::order::<usize>(n, &a.col_ptr, &a.row_idx, &control)
            .map_err(|s| Error::SingularSystem(format!("amd ordering failed: {s:?}")))?;

        // upper triangle of the permuted matrix, by columns
        let mut t = Triplets::new(n, n);
        for j in 0..n {
            let pj = perm_inv[j];
            for p in a.col_ptr[j]..a.col_ptr[j + 1] {
                let i = a.row_idx[p];
                if i > j {
                    continue; // use lower triangle once; matrix is symmetric
                }
                let pi = perm_inv[i];
                let (r, c) = if pi <= pj { (pi, pj) } else { (pj, pi) };
                t.push(r, c, a.vals[p]);
            }
        }
        if !reg.is_empty() {
            for (i, &r) in reg.iter().enumerate() {
                t.push(perm_inv[i], perm_inv[i], r);
            }
        }
        let u = t.to_csc();

        // symbolic: elimination tree and column counts
        let mut parent = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for p in u.col_ptr[k]..u.col_ptr[k + 1] {
                let mut i = u.row_idx[p];
                while i < k && flag[i] != k {
                    if parent[i] == usize::MAX {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        let mut li = vec![0usize; total];
        let mut lx = vec![0.0f64; total];
        let mut d = vec![0.0f64; n];

        // numeric: up-looking factorization
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lnz_used = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            d[k] = 0.0;
            for p in u.col_ptr[k]..u.col_ptr[k + 1] {
                let i = u.row_idx[p];
                if i > k {
                    continue;
                }
                y[i] += u.vals[p];
                let mut len = 0usize;
                let mut ii = i;
                while flag[ii] != k {
                    pattern[len] = ii;
                    len += 1;
                    flag[ii] = k;
                    ii = parent[ii];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..lp[i] + lnz_used[i] {
                    y[li[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                let slot = lp[i] + lnz_used[i];
                li[slot] = k;
                lx[slot] = l_ki;
                lnz_used[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::SingularSystem(format!(
                    "zero or non-finite pivot at elimination step {k} of {n}"
                )));
            }
        }

        Ok(LdltFactor { n, perm, lp, li, lx, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// (positive, negative) pivot counts; the inertia of A + diag(reg).
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&v| v > 0.0).count();
        (pos, self.n - pos)
    }

    /// Solve (A + diag(reg)) x = b using the factorization only.
    pub fn solve_factored(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[k] = b[self.perm[k]];
        }
        // L z = b'
        for i in 0..n {
            let xi = x[i];
            if xi != 0.0 {
                for p in self.lp[i]..self.lp[i + 1] {
                    x[self.li[p]] -= self.lx[p] * xi;
                }
            }
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        // L^T y = z
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in self.lp[i]..self.lp[i + 1] {
                s -= self.lx[p] * x[self.li[p]];
            }
            x[i] = s;
        }
        let mut out = vec![0.0; n];
        for k in 0..n {
            out[self.perm[k]] = x[k];
        }
        out
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }
}

/// Direct solver pairing a regularized factorization with iterative
/// refinement against the exact matrix.
pub struct DirectSolver {
    pub matrix: CscMatrix,
    factor: LdltFactor,
}

pub struct SolveStats {
    pub relative_residual: f64,
    pub refinement_steps: usize,
}

impl DirectSolver {
    pub fn new(matrix: CscMatrix, reg: &[f64]) -> Result<Self> {
        let factor = LdltFactor::factor(&matrix, reg)?;
        Ok(DirectSolver { matrix, factor })
    }

    pub fn inertia(&self) -> (usize, usize) {
        self.factor.inertia()
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.factor_nnz()
    }

    pub fn solve(&self, b: &[f64]) -> (Vec<f64>, SolveStats) {
        self.solve_tol(b, 1e-15)
    }

    /// Solve with iterative refinement until the relative residual drops
    /// below `tol` or stagnates.
    pub fn solve_tol(&self, b: &[f64], tol: f64) -> (Vec<f64>, SolveStats) {
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = self.factor.solve_factored(b);
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return (x, SolveStats { relative_residual: 0.0, refinement_steps: 0 });
        }
        let mut steps = 0;
        let mut rel = f64::INFINITY;
        for _ in 0..20 {
            let mut r = b.to_vec();
            self.matrix.matvec_add(-1.0, &x, &mut r);
            let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let new_rel = rnorm / bnorm;
            if new_rel < tol || new_rel >= 0.5 * rel {
                rel = rel.min(new_rel);
                break;
            }
            rel = new_rel;
            let dx = self.factor.solve_factored(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
            steps += 1;
        }
        (x, SolveStats { relative_residual: rel, refinement_steps: steps })
    }
}
