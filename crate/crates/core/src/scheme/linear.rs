//! Block-sparse Jacobian storage and the two linear solvers behind Newton:
//! a sparse LU factorization and restarted GMRES preconditioned by block
//! ILU(0).

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::{Error, Result};

/// Choice of linear solver inside Newton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolverKind {
    /// LU below [`AUTO_DIRECT_MAX_UNKNOWNS`], GMRES above.
    #[default]
    Auto,
    Direct,
    Gmres,
}

/// Largest system `Auto` hands to the direct solver.
pub const AUTO_DIRECT_MAX_UNKNOWNS: usize = 3 * 16 * 16;

impl LinearSolverKind {
    pub fn resolve(self, unknowns: usize) -> Self {
        match self {
            Self::Auto if unknowns <= AUTO_DIRECT_MAX_UNKNOWNS => Self::Direct,
            Self::Auto => Self::Gmres,
            other => other,
        }
    }
}

/// Square block-sparse-row matrix with dense `b x b` blocks and a
/// structurally symmetric pattern; block columns are sorted per row.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    b: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl BlockMatrix {
    /// Pattern from per-row neighbour lists (each row must contain itself).
    pub fn from_pattern(block: usize, rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut diag = Vec::with_capacity(rows.len());
        row_ptr.push(0);
        for (i, mut r) in rows.into_iter().enumerate() {
            r.sort_unstable();
            r.dedup();
            let d = r
                .binary_search(&i)
                .expect("pattern must include the diagonal");
            diag.push(cols.len() + d);
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let values = vec![0.0; cols.len() * block * block];
        Self {
            b: block,
            row_ptr,
            cols,
            values,
            diag,
        }
    }

    pub fn block_size(&self) -> usize {
        self.b
    }

    pub fn block_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.block_rows() * self.b
    }

    pub fn num_blocks(&self) -> usize {
        self.cols.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Position of block `(row, col)`.
    #[inline]
    pub fn find(&self, row: usize, col: usize) -> usize {
        if row == col {
            return self.diag[row];
        }
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        range.start
            + self.cols[range]
                .binary_search(&col)
                .expect("block outside the sparsity pattern")
    }

    #[inline]
    pub fn block_mut(&mut self, pos: usize) -> &mut [f64] {
        let bb = self.b * self.b;
        &mut self.values[pos * bb..(pos + 1) * bb]
    }

    #[inline]
    pub fn add(&mut self, pos: usize, r: usize, c: usize, v: f64) {
        let b = self.b;
        self.values[pos * b * b + r * b + c] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let b = self.b;
        let (br, bc) = (row / b, col / b);
        let range = self.row_ptr[br]..self.row_ptr[br + 1];
        match self.cols[range.clone()].binary_search(&bc) {
            Ok(p) => self.values[(range.start + p) * b * b + (row % b) * b + col % b],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let b = self.b;
        for i in 0..self.block_rows() {
            let yi = &mut y[i * b..(i + 1) * b];
            yi.iter_mut().for_each(|v| *v = 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p];
                let blk = &self.values[p * b * b..(p + 1) * b * b];
                let xj = &x[j * b..(j + 1) * b];
                for r in 0..b {
                    let mut acc = 0.0;
                    for c in 0..b {
                        acc += blk[r * b + c] * xj[c];
                    }
                    yi[r] += acc;
                }
            }
        }
    }

    /// Scalar CSC pattern plus, for each CSC slot, the index into `values`.
    fn csc_layout(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let b = self.b;
        let n = self.dim();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::with_capacity(self.values.len());
        let mut map = Vec::with_capacity(self.values.len());
        col_ptr.push(0);
        // structural symmetry: block column j has the same block rows as block row j
        for j in 0..self.block_rows() {
            for c in 0..b {
                for p in self.row_ptr[j]..self.row_ptr[j + 1] {
                    let i = self.cols[p];
                    let q = self.find(i, j);
                    for r in 0..b {
                        row_idx.push(i * b + r);
                        map.push(q * b * b + r * b + c);
                    }
                }
                col_ptr.push(row_idx.len());
            }
        }
        (col_ptr, row_idx, map)
    }
}

/// Reusable sparse LU for matrices sharing one [`BlockMatrix`] pattern.
pub(crate) struct DirectSolver {
    symbolic_mat: SymbolicSparseColMat<usize>,
    symbolic_lu: SymbolicLu<usize>,
    map: Vec<usize>,
    csc_values: Vec<f64>,
    lu: Option<Lu<usize, f64>>,
}

impl DirectSolver {
    pub fn new(pattern: &BlockMatrix) -> Result<Self> {
        let n = pattern.dim();
        let (col_ptr, row_idx, map) = pattern.csc_layout();
        let symbolic_mat = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let symbolic_lu = SymbolicLu::try_new(symbolic_mat.as_ref())
            .map_err(|e| linear_failure(format!("symbolic LU: {e:?}")))?;
        let csc_values = vec![0.0; map.len()];
        Ok(Self {
            symbolic_mat,
            symbolic_lu,
            map,
            csc_values,
            lu: None,
        })
    }

    pub fn factor(&mut self, jac: &BlockMatrix) -> Result<()> {
        // Parallelism is spent across samples; a sequential factorization
        // also keeps results independent of the thread count.
        faer::set_global_parallelism(faer::Par::Seq);
        for (dst, &src) in self.csc_values.iter_mut().zip(&self.map) {
            *dst = jac.values[src];
        }
        let mat = SparseColMat::new(self.symbolic_mat.clone(), self.csc_values.clone());
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat.as_ref())
            .map_err(|e| linear_failure(format!("numeric LU: {e:?}")))?;
        self.lu = Some(lu);
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        let lu = self.lu.as_ref().expect("factor before solve");
        let mut b = Mat::<f64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        lu.solve_in_place(b.as_mut());
        for (i, o) in out.iter_mut().enumerate() {
            *o = b[(i, 0)];
        }
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(linear_failure("LU produced a non-finite solution".into()))
        }
    }
}

fn linear_failure(reason: String) -> Error {
    Error::SolverFailure {
        time: f64::NAN,
        reason,
        iterations: 0,
        residual: f64::NAN,
    }
}

/// Block ILU(0): the factors share the pattern of the matrix, with inverted
/// diagonal blocks.
pub(crate) struct BlockIlu0 {
    lu: BlockMatrix,
    dinv: Vec<f64>,
}

impl BlockIlu0 {
    pub fn new(pattern: &BlockMatrix) -> Self {
        Self {
            lu: pattern.clone(),
            dinv: vec![0.0; pattern.block_rows() * pattern.b * pattern.b],
        }
    }

    pub fn factor(&mut self, a: &BlockMatrix) -> Result<()> {
        let b = a.b;
        let bb = b * b;
        self.lu.values.copy_from_slice(&a.values);
        let lu = &mut self.lu;
        let mut tmp = vec![0.0; bb];
        let mut prod = vec![0.0; bb];
        for i in 0..lu.block_rows() {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                // L_ik = A_ik * inv(U_kk)
                matmul(
                    &lu.values[p * bb..(p + 1) * bb],
                    &self.dinv[k * bb..(k + 1) * bb],
                    &mut tmp,
                    b,
                );
                lu.values[p * bb..(p + 1) * bb].copy_from_slice(&tmp);
                // A_ij -= L_ik U_kj for j > k present in both rows
                let (mut q, kend) = (lu.diag[k] + 1, lu.row_ptr[k + 1]);
                let mut r = p + 1;
                while q < kend && r < end {
                    let (cj, ck) = (lu.cols[r], lu.cols[q]);
                    if cj == ck {
                        matmul(&tmp, &lu.values[q * bb..(q + 1) * bb], &mut prod, b);
                        for (v, s) in lu.values[r * bb..(r + 1) * bb].iter_mut().zip(&prod) {
                            *v -= s;
                        }
                        q += 1;
                        r += 1;
                    } else if cj < ck {
                        r += 1;
                    } else {
                        q += 1;
                    }
                }
            }
            let dpos = lu.diag[i];
            let mut blk = lu.values[dpos * bb..(dpos + 1) * bb].to_vec();
            invert(&mut blk, &mut self.dinv[i * bb..(i + 1) * bb], b)
                .ok_or_else(|| linear_failure(format!("singular diagonal block {i} in ILU")))?;
        }
        Ok(())
    }

    pub fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        let lu = &self.lu;
        let b = lu.b;
        let bb = b * b;
        let mut acc = vec![0.0; b];
        for i in 0..lu.block_rows() {
            acc.copy_from_slice(&rhs[i * b..(i + 1) * b]);
            for p in lu.row_ptr[i]..lu.diag[i] {
                let k = lu.cols[p];
                let blk = &lu.values[p * bb..(p + 1) * bb];
                for r in 0..b {
                    for c in 0..b {
                        acc[r] -= blk[r * b + c] * out[k * b + c];
                    }
                }
            }
            out[i * b..(i + 1) * b].copy_from_slice(&acc);
        }
        for i in (0..lu.block_rows()).rev() {
            acc.copy_from_slice(&out[i * b..(i + 1) * b]);
            for p in lu.diag[i] + 1..lu.row_ptr[i + 1] {
                let j = lu.cols[p];
                let blk = &lu.values[p * bb..(p + 1) * bb];
                for r in 0..b {
                    for c in 0..b {
                        acc[r] -= blk[r * b + c] * out[j * b + c];
                    }
                }
            }
            let dinv = &self.dinv[i * bb..(i + 1) * bb];
            for r in 0..b {
                out[i * b + r] = (0..b).map(|c| dinv[r * b + c] * acc[c]).sum();
            }
        }
    }
}

fn matmul(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|k| a[r * n + k] * b[k * n + c]).sum();
        }
    }
}

/// Gauss-Jordan with partial pivoting; `a` is destroyed.
fn invert(a: &mut [f64], inv: &mut [f64], n: usize) -> Option<()> {
    inv.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv =
            (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[piv * n + col] == 0.0 || !a[piv * n + col].is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let p = 1.0 / a[col * n + col];
        for c in 0..n {
            a[col * n + c] *= p;
            inv[col * n + c] *= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for c in 0..n {
                        a[r * n + c] -= f * a[col * n + c];
                        inv[r * n + c] -= f * inv[col * n + c];
                    }
                }
            }
        }
    }
    Some(())
}

/// Restarted, right-preconditioned GMRES.
pub(crate) struct Gmres {
    pub restart: usize,
    pub max_iters: usize,
    pub rtol: f64,
}

impl Gmres {
    /// Solves `A x = rhs` starting from `x = 0`; returns the iteration count.
    pub fn solve(
        &self,
        a: &BlockMatrix,
        prec: &BlockIlu0,
        rhs: &[f64],
        x: &mut [f64],
    ) -> Result<usize> {
        let n = rhs.len();
        let m = self.restart;
        let bnorm = norm2(rhs);
        x.iter_mut().for_each(|v| *v = 0.0);
        if bnorm == 0.0 {
            return Ok(0);
        }
        let target = self.rtol * bnorm;
        let mut v = vec![vec![0.0; n]; m + 1];
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut hmat = vec![0.0; (m + 1) * m];
        let (mut cs, mut sn, mut g) = (vec![0.0; m], vec![0.0; m], vec![0.0; m + 1]);
        let mut r = rhs.to_vec();
        let mut total = 0;
        loop {
            let beta = norm2(&r);
            if beta <= target {
                return Ok(total);
            }
            if total >= self.max_iters {
                return Err(linear_failure(format!(
                    "GMRES stalled at relative residual {:e}",
                    beta / bnorm
                )));
            }
            for (vi, ri) in v[0].iter_mut().zip(&r) {
                *vi = ri / beta;
            }
            g.iter_mut().for_each(|x| *x = 0.0);
            g[0] = beta;
            let mut k = 0;
            while k < m && total < self.max_iters {
                prec.apply(&v[k], &mut z);
                a.matvec(&z, &mut w);
                for i in 0..=k {
                    let hik = dot(&w, &v[i]);
                    hmat[i * m + k] = hik;
                    for (wj, vj) in w.iter_mut().zip(&v[i]) {
                        *wj -= hik * vj;
                    }
                }
                let hnext = norm2(&w);
                hmat[(k + 1) * m + k] = hnext;
                if hnext > 0.0 {
                    for (vj, wj) in v[k + 1].iter_mut().zip(&w) {
                        *vj = wj / hnext;
                    }
                }
                for i in 0..k {
                    let (a0, a1) = (hmat[i * m + k], hmat[(i + 1) * m + k]);
                    hmat[i * m + k] = cs[i] * a0 + sn[i] * a1;
                    hmat[(i + 1) * m + k] = -sn[i] * a0 + cs[i] * a1;
                }
                let (a0, a1) = (hmat[k * m + k], hmat[(k + 1) * m + k]);
                let rho = a0.hypot(a1);
                cs[k] = a0 / rho;
                sn[k] = a1 / rho;
                hmat[k * m + k] = rho;
                hmat[(k + 1) * m + k] = 0.0;
                g[k + 1] = -sn[k] * g[k];
                g[k] *= cs[k];
                k += 1;
                total += 1;
                if g[k].abs() <= target || hnext == 0.0 {
                    break;
                }
            }
            // back substitution for the Krylov coefficients
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let s: f64 = (i + 1..k).map(|j| hmat[i * m + j] * y[j]).sum();
                y[i] = (g[i] - s) / hmat[i * m + i];
            }
            w.iter_mut().for_each(|x| *x = 0.0);
            for (i, yi) in y.iter().enumerate() {
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj += yi * vj;
                }
            }
            prec.apply(&w, &mut z);
            for (xj, zj) in x.iter_mut().zip(&z) {
                *xj += zj;
            }
            a.matvec(x, &mut w);
            for ((rj, bj), wj) in r.iter_mut().zip(rhs).zip(&w) {
                *rj = bj - wj;
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(linear_failure("GMRES produced a non-finite iterate".into()));
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
