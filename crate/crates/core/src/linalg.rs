//! Dense row-major matrices and a symmetric eigensolver.

use std::fmt;

use crate::error::{Error, Result};

/// Tolerance for accepting a matrix as symmetric in [`eigh_symmetric`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
/// Jacobi stops once the off-diagonal Frobenius norm falls below this
/// fraction of the input's Frobenius norm.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero; an n x 0 matrix has no row data anyway.
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// New matrix holding the listed rows, in the listed order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix holding the leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        let k = k.min(self.cols);
        let mut data = Vec::with_capacity(self.rows * k);
        for row in self.row_iter() {
            data.extend_from_slice(&row[..k]);
        }
        Matrix {
            rows: self.rows,
            cols: k,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(self.row_iter().map(|row| dot(row, v)).collect())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square matrices.
    pub fn asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        let n = self.rows.max(1) as f64;
        sums.iter().map(|s| s / n).collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.row_iter() {
            writeln!(f, "  {row:?}")?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subtracts the column means. Returns the centered matrix and the means.
pub fn mean_center(m: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    if m.rows == 0 {
        return Err(Error::domain("cannot center a matrix with no rows"));
    }
    let mean = m.column_means();
    let mut centered = m.clone();
    for r in 0..centered.rows {
        for (v, mu) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= mu;
        }
    }
    Ok((centered, mean))
}

/// Sample covariance `BᵀB / (n - 1)` of a mean-centered matrix, symmetrized
/// as `(C + Cᵀ) / 2`.
pub fn covariance(centered: &Matrix) -> Result<Matrix> {
    let n = centered.rows;
    if n < 2 {
        return Err(Error::domain(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let p = centered.cols;
    let mut c = Matrix::zeros(p, p);
    for row in centered.row_iter() {
        for i in 0..p {
            let a = row[i];
            if a == 0.0 {
                continue;
            }
            let out = &mut c.data[i * p..(i + 1) * p];
            for (o, &b) in out[i..].iter_mut().zip(&row[i..]) {
                *o += a * b;
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..p {
        for j in i..p {
            let v = c.data[i * p + j] / denom;
            c.data[i * p + j] = v;
            c.data[j * p + i] = v;
        }
    }
    Ok(c)
}

/// Eigenvalues in non-increasing order with unit eigenvectors as the
/// matching columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    /// Number of Jacobi sweeps used.
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps visit every pair `(p, q)`, `p < q`, in row order and annihilate
/// `a_pq`. Iteration ends when the off-diagonal Frobenius norm drops below
/// [`JACOBI_TOLERANCE`] times the Frobenius norm of the input (or is exactly
/// zero); more than [`JACOBI_MAX_SWEEPS`] sweeps is a numerical failure.
///
/// Each eigenvector's sign is fixed so that its largest-magnitude component
/// (first one on ties) is positive. Equal eigenvalues keep the order in
/// which Jacobi left them on the diagonal.
pub fn eigh_symmetric(c: &Matrix) -> Result<EigenDecomposition> {
    if c.rows != c.cols {
        return Err(Error::domain(format!(
            "eigh_symmetric needs a square matrix, got {}x{}",
            c.rows, c.cols
        )));
    }
    let asym = c.asymmetry();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::domain(format!(
            "matrix is not symmetric (max |a_ij - a_ji| = {asym:e})"
        )));
    }
    let n = c.rows;
    let mut a = c.data.clone();
    // Symmetrize from the upper triangle so the rotation updates below,
    // which only read rows p and q, see a consistent matrix.
    for i in 0..n {
        for j in i + 1..n {
            a[j * n + i] = a[i * n + j];
        }
    }
    // Eigenvectors are stored as rows of `vt` so rotations touch contiguous
    // memory; transposed on return.
    let mut vt = Matrix::identity(n).data;

    let target = JACOBI_TOLERANCE * c.frobenius_norm();
    // Entries below this are left alone: even if every off-diagonal entry
    // sat just under it, the off-diagonal norm would already be < target.
    let negligible = target / n as f64;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off == 0.0 || off < target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps \
                 (off-diagonal norm {off:e})"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= negligible {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                } else {
                    0.0
                };
                if t == 0.0 {
                    // |a_pq| is below rounding relative to the diagonal gap.
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                rotate_rows(&mut a, n, p, q, cs, sn);
                for k in (0..n).filter(|&k| k != p && k != q) {
                    a[k * n + p] = a[p * n + k];
                    a[k * n + q] = a[q * n + k];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                rotate_rows(&mut vt, n, p, q, cs, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = &vt[src * n..(src + 1) * n];
        let mut pivot = 0;
        for (k, x) in v.iter().enumerate() {
            if x.abs() > v[pivot].abs() {
                pivot = k;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (r, &x) in v.iter().enumerate() {
            vectors.data[r * n + col] = sign * x;
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

/// Rotates rows `p < q` of a row-major `n`-column array in place.
fn rotate_rows(vt: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vt.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (vp, vq) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let a = *vp;
        let b = *vq;
        *vp = c * a - s * b;
        *vq = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_symmetric(n: usize, rng: &mut SplitMix64) -> Matrix {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.uniform(-1.0, 1.0);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        a
    }

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(Matrix::new(2, 2, vec![1.0]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn center_already_centered() {
        let a = m(&[&[-1.0, -1.0], &[1.0, 1.0]]);
        let (b, mean) = mean_center(&a).unwrap();
        assert_eq!(b, a);
        assert_eq!(mean, vec![0.0, 0.0]);
    }

    #[test]
    fn center_constant_column() {
        let a = m(&[&[4.5, 1.0], &[4.5, 2.0], &[4.5, 6.0]]);
        let (b, mean) = mean_center(&a).unwrap();
        assert_eq!(mean[0], 4.5);
        assert!(b.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn center_small_example() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let (b, mean) = mean_center(&a).unwrap();
        assert_eq!(mean, vec![2.0, 3.0]);
        assert_eq!(b, m(&[&[-1.0, -1.0], &[1.0, 1.0]]));
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(b.get(r, c) + mean[c], a.get(r, c));
            }
        }
    }

    #[test]
    fn center_empty_is_error() {
        assert!(matches!(
            mean_center(&Matrix::zeros(0, 3)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn covariance_examples() {
        let zero = covariance(&Matrix::zeros(4, 3)).unwrap();
        assert_eq!(zero, Matrix::zeros(3, 3));

        let c = covariance(&m(&[&[-1.0, -1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(c, m(&[&[2.0, 2.0], &[2.0, 2.0]]));

        let c = covariance(&m(&[&[-1.0], &[0.0], &[1.0]])).unwrap();
        assert_eq!(c, m(&[&[1.0]]));

        assert!(covariance(&m(&[&[1.0, 2.0]])).is_err());
    }

    #[test]
    fn covariance_is_exactly_symmetric() {
        let mut rng = SplitMix64::new(17);
        let data: Vec<f64> = (0..40 * 7).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let (b, _) = mean_center(&Matrix::new(40, 7, data).unwrap()).unwrap();
        let c = covariance(&b).unwrap();
        assert_eq!(c.asymmetry(), 0.0);
        // Agrees with the explicit product.
        let explicit = b.transpose().matmul(&b).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert!((c.get(i, j) - explicit.get(i, j) / 39.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_identity() {
        let e = eigh_symmetric(&Matrix::identity(5)).unwrap();
        assert_eq!(e.values, vec![1.0; 5]);
        assert_eq!(e.vectors, Matrix::identity(5));
    }

    #[test]
    fn eigh_diagonal() {
        let e = eigh_symmetric(&Matrix::diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_eq!(e.vectors, m(&[&[0.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn eigh_rank_one() {
        let e = eigh_symmetric(&m(&[&[2.0, 2.0], &[2.0, 2.0]])).unwrap();
        assert!((e.values[0] - 4.0).abs() < 1e-12);
        assert!(e.values[1].abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors.get(0, 0) - h).abs() < 1e-12);
        assert!((e.vectors.get(1, 0) - h).abs() < 1e-12);
    }

    #[test]
    fn eigh_rejects_bad_input() {
        assert!(eigh_symmetric(&Matrix::zeros(2, 3)).is_err());
        assert!(eigh_symmetric(&m(&[&[1.0, 2.0], &[2.1, 1.0]])).is_err());
    }

    #[test]
    fn eigh_random_properties() {
        let mut rng = SplitMix64::new(2024);
        for n in [1usize, 2, 3, 8, 20, 35] {
            let c = random_symmetric(n, &mut rng);
            let e = eigh_symmetric(&c).unwrap();
            let v = &e.vectors;
            let vtv = v.transpose().matmul(v).unwrap();
            assert!(vtv.max_abs_diff(&Matrix::identity(n)) < 1e-8);
            let d = Matrix::diagonal(&e.values);
            let vtcv = v.transpose().matmul(&c).unwrap().matmul(v).unwrap();
            assert!(vtcv.max_abs_diff(&d) < 1e-8);
            let recon = v.matmul(&d).unwrap().matmul(&v.transpose()).unwrap();
            assert!(recon.max_abs_diff(&c) < 1e-8);
            assert!((c.trace() - e.values.iter().sum::<f64>()).abs() < 1e-8);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            for col in 0..n {
                let colv = v.column(col);
                let big = colv
                    .iter()
                    .copied()
                    .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
                assert!(big > 0.0);
            }
        }
    }
}
