//! Dense row-major matrices and Householder least squares.

use std::fmt;

/// Relative residual norm below which a column counts as linearly dependent
/// on the columns before it.
pub const ALIAS_TOL: f64 = 1e-10;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Builds a matrix from row vectors. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    /// Builds a matrix from column vectors. Panics on ragged input.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Self {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "ragged matrix columns");
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Returns a copy with a leading column of ones.
    pub fn with_intercept(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            m.set(i, 0, 1.0);
            for j in 0..self.cols {
                m.set(i, j + 1, self.get(i, j));
            }
        }
        m
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut m = Matrix::zeros(self.rows, columns.len());
        for i in 0..self.rows {
            for (k, &j) in columns.iter().enumerate() {
                m.set(i, k, self.get(i, j));
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// One entry per design column; aliased columns get 0.
    pub coefficients: Vec<f64>,
    /// Columns found linearly dependent on earlier columns.
    pub aliased: Vec<usize>,
}

impl LeastSquares {
    pub fn rank(&self) -> usize {
        self.coefficients.len() - self.aliased.len()
    }
}

/// Solves `min ||X b - y||` by Householder QR, processing columns left to
/// right and dropping any column whose residual after the earlier
/// reflections is below `ALIAS_TOL` of its original norm.
pub fn least_squares(x: &Matrix, y: &[f64]) -> LeastSquares {
    let n = x.rows();
    let p = x.cols();
    assert_eq!(y.len(), n);
    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    let mut rhs = y.to_vec();
    let mut kept: Vec<usize> = Vec::with_capacity(p);
    let mut aliased = Vec::new();
    let mut k = 0usize;
    for j in 0..p {
        let original: f64 = a[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if k >= n {
            aliased.push(j);
            continue;
        }
        let norm: f64 = a[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original == 0.0 || norm <= ALIAS_TOL * original {
            aliased.push(j);
            continue;
        }
        let alpha = if a[j][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[j][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            let reflect = |col: &mut [f64]| {
                let dot: f64 = col.iter().zip(&v).map(|(c, w)| c * w).sum();
                let s = 2.0 * dot / vnorm2;
                for (c, w) in col.iter_mut().zip(&v) {
                    *c -= s * w;
                }
            };
            for col in a.iter_mut().skip(j + 1) {
                reflect(&mut col[k..]);
            }
            reflect(&mut rhs[k..]);
        }
        a[j][k] = alpha;
        for t in a[j][k + 1..].iter_mut() {
            *t = 0.0;
        }
        kept.push(j);
        k += 1;
    }
    // back substitution on the kept columns: R is k x k upper triangular
    let r = kept.len();
    let mut sol = vec![0.0; r];
    for row in (0..r).rev() {
        let mut acc = rhs[row];
        for c in row + 1..r {
            acc -= a[kept[c]][row] * sol[c];
        }
        sol[row] = acc / a[kept[row]][row];
    }
    let mut coefficients = vec![0.0; p];
    for (idx, &j) in kept.iter().enumerate() {
        coefficients[j] = sol[idx];
    }
    LeastSquares { coefficients, aliased }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when singular.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= factor * m[col][c];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= m[row][c] * x[c];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}
