//! Symmetric sparse matrices, Jacobi-preconditioned CG and a profile
//! Cholesky factorization for small systems.

use rayon::prelude::*;

use crate::errors::{Error, Result};
use crate::scalar::{dot, Real};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T: Real> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the given structure; `rows[i]` must be sorted.
    pub fn from_pattern(rows: &[Vec<usize>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows {
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self { n: rows.len(), row_ptr, col_idx, values: vec![T::zero(); nnz] }
    }

    pub fn from_dense(a: &[Vec<T>]) -> Self {
        let rows: Vec<Vec<usize>> = a.iter().map(|r| (0..r.len()).filter(|&j| r[j] != T::zero()).collect()).collect();
        let mut m = Self::from_pattern(&rows);
        for (i, r) in rows.iter().enumerate() {
            for &j in r {
                m.add(i, j, a[i][j]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].binary_search(&j).ok().map(|k| s + k)
    }

    /// Adds `v` to entry `(i, j)`, which must be in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.slot(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside the sparsity pattern"));
        self.values[k] = self.values[k] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`; rows are independent so the result does not depend on
    /// the thread count.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n).into_par_iter().map(|i| self.row(i).fold(T::zero(), |acc, (j, v)| acc + v * x[j])).collect()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// `max |A − Aᵀ|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients with diagonal preconditioning, started from zero.
pub fn pcg<T: Real>(a: &CsrMatrix<T>, b: &[T], rel_tol: T, max_iter: usize) -> Result<(Vec<T>, LinearStats)> {
    let n = a.dim();
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > T::zero())) {
        return Err(Error::Indefinite(format!("non-positive diagonal entry at row {i}")));
    }
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let b_norm = dot(b, b).sqrt();
    if b_norm == T::zero() {
        return Ok((x, LinearStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut z: Vec<T> = r.iter().zip(&diag).map(|(&ri, &d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(Error::Indefinite(format!("CG breakdown at iteration {it}: pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= rel_tol {
            return Ok((x, LinearStats { iterations: it, relative_residual: res.as_f64() }));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / b_norm;
    Err(Error::Indefinite(format!(
        "CG did not reach relative residual {rel_tol:e} in {max_iter} iterations (reached {res:e})"
    )))
}

/// Reverse Cuthill–McKee ordering; `perm[k]` is the original index placed
/// at position `k`.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| degree[i]).expect("unvisited vertex");
        visited[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                order.push(j);
            }
        }
    }
    order.reverse();
    order
}

/// `LLᵀ` factorization in variable-band (skyline) storage.
#[derive(Debug, Clone)]
pub struct SkylineCholesky<T: Real> {
    perm: Vec<usize>,
    first: Vec<usize>,
    rows: Vec<Vec<T>>,
}

impl<T: Real> SkylineCholesky<T> {
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        // row k of the permuted lower triangle spans columns first[k]..=k
        let mut first: Vec<usize> = (0..n).collect();
        for (k, &i) in perm.iter().enumerate() {
            for (j, _) in a.row(i) {
                first[k] = first[k].min(inv[j]);
            }
        }
        let mut rows: Vec<Vec<T>> = (0..n).map(|k| vec![T::zero(); k - first[k] + 1]).collect();
        for (k, &i) in perm.iter().enumerate() {
            for (j, v) in a.row(i) {
                let c = inv[j];
                if c <= k {
                    rows[k][c - first[k]] = v;
                }
            }
        }
        for k in 0..n {
            let fk = first[k];
            for c in fk..=k {
                let fc = first[c];
                let lo = fk.max(fc);
                let mut s = rows[k][c - fk];
                for m in lo..c {
                    s = s - rows[k][m - fk] * rows[c][m - fc];
                }
                if c == k {
                    if !(s > T::zero()) {
                        return Err(Error::Indefinite(format!("non-positive pivot {s:e} at row {k}")));
                    }
                    rows[k][k - fk] = s.sqrt();
                } else {
                    rows[k][c - fk] = s / rows[c][c - fc];
                }
            }
        }
        Ok(Self { perm, first, rows })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.perm.len();
        let mut y: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for k in 0..n {
            let fk = self.first[k];
            let mut s = y[k];
            for (&l, &ym) in self.rows[k].iter().zip(&y[fk..k]) {
                s = s - l * ym;
            }
            y[k] = s / self.rows[k][k - fk];
        }
        for k in (0..n).rev() {
            let fk = self.first[k];
            y[k] = y[k] / self.rows[k][k - fk];
            let yk = y[k];
            for (ym, &l) in y[fk..k].iter_mut().zip(&self.rows[k]) {
                *ym = *ym - l * yk;
            }
        }
        let mut x = vec![T::zero(); n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

/// Linear solver choice for the Newton correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolver {
    /// Systems smaller than this are factorized directly.
    pub direct_below: usize,
    pub cg_rel_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for LinearSolver {
    fn default() -> Self {
        Self { direct_below: 2000, cg_rel_tol: 1e-12, cg_max_iter: 20_000 }
    }
}

impl LinearSolver {
    pub fn solve<T: Real>(&self, a: &CsrMatrix<T>, b: &[T]) -> Result<(Vec<T>, LinearStats)> {
        if a.dim() < self.direct_below {
            let x = SkylineCholesky::factor(a)?.solve(b);
            let r: Vec<T> = a.matvec(&x).iter().zip(b).map(|(&ax, &bi)| ax - bi).collect();
            let bn = dot(b, b).sqrt();
            let rel = if bn > T::zero() { (dot(&r, &r).sqrt() / bn).as_f64() } else { 0.0 };
            Ok((x, LinearStats { iterations: 0, relative_residual: rel }))
        } else {
            pcg(a, b, T::lit(self.cg_rel_tol), self.cg_max_iter)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // 1D Laplacian with a random SPD perturbation on the tridiagonal
    fn spd(n: usize, seed: u64) -> CsrMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            d[i][i] = 2.0 + rng.gen::<f64>();
            if i + 1 < n {
                let off = -1.0 + 0.1 * rng.gen::<f64>();
                d[i][i + 1] = off;
                d[i + 1][i] = off;
            }
        }
        // long-range coupling to exercise the profile
        d[0][n - 1] = -0.3;
        d[n - 1][0] = -0.3;
        d[n - 1][n - 1] += 0.5;
        d[0][0] += 0.5;
        CsrMatrix::from_dense(&d)
    }

    fn residual(a: &CsrMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
        a.matvec(x).iter().zip(b).map(|(ax, bi)| (ax - bi).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = spd(60, 1);
        let b: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let x1 = SkylineCholesky::factor(&a).unwrap().solve(&b);
        let (x2, stats) = pcg(&a, &b, 1e-13, 1000).unwrap();
        assert!(residual(&a, &x1, &b) < 1e-12);
        assert!(residual(&a, &x2, &b) < 1e-11);
        assert!(stats.iterations > 0);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = spd(25, 2);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn indefinite_matrices_are_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(SkylineCholesky::factor(&a), Err(Error::Indefinite(_))));
        assert!(matches!(pcg(&a, &[1.0, -1.0], 1e-12, 10), Err(Error::Indefinite(_))));
        let neg = CsrMatrix::from_dense(&[vec![-1.0]]);
        assert!(matches!(pcg(&neg, &[1.0], 1e-12, 10), Err(Error::Indefinite(_))));
    }

    #[test]
    fn symmetry_measure() {
        let a = CsrMatrix::from_dense(&[vec![1.0f64, 2.0], vec![2.5, 1.0]]);
        assert!((a.asymmetry() - 0.5).abs() < 1e-15);
        assert_eq!(spd(10, 3).asymmetry(), 0.0);
    }
}
