//! Dense scalar and block matrices over a pluggable [`Scalar`].
//!
//! [`Matrix`] is a plain dense matrix; it doubles as the block entry type
//! (an `n x n` element of the matrix ring). [`BlockMatrix`] is a grid of such
//! entries sharing one block order.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

/// One `n x n` entry of a block matrix.
pub type Block<S> = Matrix<S>;

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    /// `value * I_n`.
    pub fn scalar(n: usize, value: S) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = value.clone();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience for tests and fixtures: integer entries.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| S::from_i64(v)).collect())
                .collect(),
        )
        .expect("rectangular literal")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> impl Iterator<Item = &S> {
        self.data.iter()
    }

    pub fn row_vecs(&self) -> Vec<Vec<S>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[S]>::to_vec).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Scalar::is_zero)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.get(i, j);
                    if i == j {
                        v.is_one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect(),
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Scalar::neg).collect(),
        }
    }

    pub fn scale(&self, s: &S) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.mul(s)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "mul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx].add(&a.mul(b));
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Gauss-Jordan inverse. Exact mode pivots on the first nonzero entry;
    /// float mode uses partial pivoting and reports singularity below a
    /// relative threshold.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "inverse of non-square {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().map(Scalar::magnitude).fold(0.0_f64, f64::max);
        let threshold = scale * f64::EPSILON * (n.max(1) as f64) * 16.0;
        for col in 0..n {
            let pivot_row = if S::EXACT {
                (col..n).find(|&r| !a.get(r, col).is_zero())
            } else {
                (col..n)
                    .max_by(|&x, &y| {
                        a.get(x, col)
                            .magnitude()
                            .partial_cmp(&a.get(y, col).magnitude())
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .filter(|&r| {
                        let m = a.get(r, col).magnitude();
                        m > threshold && m.is_finite()
                    })
            };
            let pivot_row = pivot_row.ok_or(Error::Singular)?;
            if pivot_row != col {
                a.swap_rows(pivot_row, col);
                inv.swap_rows(pivot_row, col);
            }
            let p_inv = a.get(col, col).recip().ok_or(Error::Singular)?;
            a.scale_row(col, &p_inv);
            inv.scale_row(col, &p_inv);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                a.axpy_row(r, col, &factor);
                inv.axpy_row(r, col, &factor);
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        for j in 0..self.cols {
            self.data.swap(r1 * self.cols + j, r2 * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, s: &S) {
        for j in 0..self.cols {
            let idx = r * self.cols + j;
            self.data[idx] = self.data[idx].mul(s);
        }
    }

    /// row[target] -= factor * row[source]
    fn axpy_row(&mut self, target: usize, source: usize, factor: &S) {
        for j in 0..self.cols {
            let s = self.get(source, j).clone();
            if s.is_zero() {
                continue;
            }
            let idx = target * self.cols + j;
            self.data[idx] = self.data[idx].sub(&factor.mul(&s));
        }
    }

    /// Scalar Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self.get(i / other.rows, j / other.cols)
                .mul(other.get(i % other.rows, j % other.cols))
        })
    }

    /// Largest entrywise difference magnitude; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.sub(b).magnitude())
            .fold(0.0, f64::max)
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.near(b, tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows.start + i, cols.start + j).clone())
    }
}

/// Quasideterminant `|V|_22 = v22 - v21 v11^{-1} v12` of a 2x2 partition.
pub fn schur_complement<S: Scalar>(
    v11: &Matrix<S>,
    v12: &Matrix<S>,
    v21: &Matrix<S>,
    v22: &Matrix<S>,
) -> Result<Matrix<S>> {
    let v11_inv = v11.inverse()?;
    v22.sub(&v21.mul(&v11_inv)?.mul(v12)?)
}

/// A `rows x cols` grid of `n x n` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix<S> {
    n: usize,
    rows: usize,
    cols: usize,
    blocks: Vec<Matrix<S>>,
}

impl<S: Scalar> BlockMatrix<S> {
    pub fn zeros(rows: usize, cols: usize, n: usize) -> Self {
        Self {
            n,
            rows,
            cols,
            blocks: vec![Matrix::zeros(n, n); rows * cols],
        }
    }

    pub fn identity(size: usize, n: usize) -> Self {
        let mut m = Self::zeros(size, size, n);
        for i in 0..size {
            m.set(i, i, Matrix::identity(n));
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        n: usize,
        mut f: impl FnMut(usize, usize) -> Matrix<S>,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let b = f(i, j);
                if b.rows() != n || b.cols() != n {
                    return Err(Error::ShapeMismatch(format!(
                        "block ({i}, {j}) is {}x{}, expected order {n}",
                        b.rows(),
                        b.cols()
                    )));
                }
                blocks.push(b);
            }
        }
        Ok(Self { n, rows, cols, blocks })
    }

    /// Builds a block matrix whose blocks are scalar multiples of `I_n`.
    pub fn from_scalar_matrix(m: &Matrix<S>, n: usize) -> Self {
        Self::from_fn(m.rows(), m.cols(), n, |i, j| Matrix::scalar(n, m.get(i, j).clone()))
            .expect("scalar blocks have order n")
    }

    pub fn block_order(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block(&self, i: usize, j: usize) -> &Matrix<S> {
        &self.blocks[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, block: Matrix<S>) {
        debug_assert_eq!((block.rows(), block.cols()), (self.n, self.n));
        self.blocks[i * self.cols + j] = block;
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols || self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "{op}: {}x{} (order {}) vs {}x{} (order {})",
                self.rows, self.cols, self.n, other.rows, other.cols, other.n
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            blocks,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            blocks,
        })
    }

    /// Block product.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.n != other.n {
            return Err(Error::ShapeMismatch(format!(
                "multiply: {}x{} (order {}) times {}x{} (order {})",
                self.rows, self.cols, self.n, other.rows, other.cols, other.n
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols, self.n);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.block(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.block(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * out.cols + j;
                    out.blocks[idx] = out.blocks[idx].add(&a.mul(b)?)?;
                }
            }
        }
        Ok(out)
    }

    /// Full transpose: block `(i, j)` of the result is `block(j, i)^T`.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, self.n, |i, j| self.block(j, i).transpose())
            .expect("transpose preserves block order")
    }

    pub fn to_dense(&self) -> Matrix<S> {
        let n = self.n;
        Matrix::from_fn(self.rows * n, self.cols * n, |i, j| {
            self.block(i / n, j / n).get(i % n, j % n).clone()
        })
    }

    pub fn from_dense(m: &Matrix<S>, n: usize) -> Result<Self> {
        if n == 0 || m.rows() % n != 0 || m.cols() % n != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} is not a grid of order-{n} blocks",
                m.rows(),
                m.cols()
            )));
        }
        Self::from_fn(m.rows() / n, m.cols() / n, n, |bi, bj| {
            m.submatrix(bi * n..bi * n + n, bj * n..bj * n + n)
        })
    }

    pub fn invert(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "invert of non-square {}x{} block matrix",
                self.rows, self.cols
            )));
        }
        Self::from_dense(&self.to_dense().inverse()?, self.n)
    }

    /// Leading `size x size` block truncation.
    pub fn leading(&self, size: usize) -> Self {
        self.sub_blocks(0..size, 0..size)
    }

    pub fn sub_blocks(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols, "block range out of bounds");
        Self::from_fn(rows.len(), cols.len(), self.n, |i, j| {
            self.block(rows.start + i, cols.start + j).clone()
        })
        .expect("same block order")
    }

    /// Kronecker product with a scalar pattern matrix: block
    /// `(i*p + k, j*q + l)` of the result is `pattern[k][l] * self[i][j]`.
    pub fn kron(&self, pattern: &Matrix<S>) -> Self {
        let (p, q) = (pattern.rows(), pattern.cols());
        Self::from_fn(self.rows * p, self.cols * q, self.n, |i, j| {
            self.block(i / p, j / q).scale(pattern.get(i % p, j % q))
        })
        .expect("same block order")
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols || self.n != other.n {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.n == other.n
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a.near(b, tol))
    }

    pub fn is_unit_lower_triangular(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                self.block(i, i).is_identity() && (i + 1..self.cols).all(|j| self.block(i, j).is_zero())
            })
    }
}

/// The involution `J_2 = [[0, 1], [1, 0]]`.
pub fn j2<S: Scalar>() -> Matrix<S> {
    Matrix::from_i64_rows(&[&[0, 1], &[1, 0]])
}

/// Inverse of a matrix made of antidiagonal 2x2 blocks `[[0, a], [b, 0]]`,
/// which is `[[0, b^{-1}], [a^{-1}, 0]]` pair by pair.
pub fn invert_antidiagonal_pairs<S: Scalar>(d: &BlockMatrix<S>) -> Result<BlockMatrix<S>> {
    let size = d.rows();
    if d.cols() != size || size % 2 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "antidiagonal pair inverse of {}x{} block matrix",
            size,
            d.cols()
        )));
    }
    let mut inv = BlockMatrix::zeros(size, size, d.block_order());
    for j in 0..size / 2 {
        inv.set(2 * j, 2 * j + 1, d.block(2 * j + 1, 2 * j).inverse()?);
        inv.set(2 * j + 1, 2 * j, d.block(2 * j, 2 * j + 1).inverse()?);
    }
    Ok(inv)
}

/// Inverse of a unit lower-triangular block matrix by block forward
/// substitution.
pub fn invert_unit_lower<S: Scalar>(l: &BlockMatrix<S>) -> Result<BlockMatrix<S>> {
    if !l.is_unit_lower_triangular() {
        return Err(Error::StructureViolation("matrix is not unit lower triangular".into()));
    }
    let size = l.rows();
    let n = l.block_order();
    let mut inv = BlockMatrix::identity(size, n);
    for i in 1..size {
        for j in 0..i {
            // (L X)_{ij} = 0 for i > j  =>  X_ij = -sum_{k<i} L_ik X_kj
            let mut acc = Matrix::zeros(n, n);
            for k in j..i {
                let lik = l.block(i, k);
                if lik.is_zero() {
                    continue;
                }
                acc = acc.add(&lik.mul(inv.block(k, j))?)?;
            }
            inv.set(i, j, acc.neg());
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type M = Matrix<Rational>;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn identity_is_neutral() {
        let a = M::from_i64_rows(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 10]]);
        assert_eq!(M::identity(3).mul(&a).unwrap(), a);
        assert_eq!(a.mul(&M::identity(3)).unwrap(), a);
    }

    #[test]
    fn swap_is_an_involution() {
        let s = j2::<Rational>();
        assert_eq!(s.mul(&s).unwrap(), M::identity(2));
        let bs = BlockMatrix::from_scalar_matrix(&s, 1);
        assert_eq!(bs.multiply(&bs).unwrap(), BlockMatrix::identity(2, 1));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = M::zeros(2, 3);
        assert!(matches!(a.mul(&a), Err(Error::ShapeMismatch(_))));
        let b = BlockMatrix::<Rational>::zeros(2, 2, 1);
        let c = BlockMatrix::<Rational>::zeros(2, 2, 2);
        assert!(matches!(b.multiply(&c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn antidiagonal_inverse() {
        let (a, b) = (q(3, 2), q(-5, 7));
        let m = M::from_rows(vec![vec![q(0, 1), a.clone()], vec![b.clone(), q(0, 1)]]).unwrap();
        let expected =
            M::from_rows(vec![vec![q(0, 1), Scalar::recip(&b).unwrap()], vec![Scalar::recip(&a).unwrap(), q(0, 1)]]).unwrap();
        assert_eq!(m.inverse().unwrap(), expected);
        assert_eq!(M::identity(4).inverse().unwrap(), M::identity(4));
    }

    #[test]
    fn zero_block_is_singular() {
        assert_eq!(M::zeros(2, 2).inverse(), Err(Error::Singular));
        let rank_one = M::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert_eq!(rank_one.inverse(), Err(Error::Singular));
        assert_eq!(Matrix::<f64>::zeros(3, 3).inverse(), Err(Error::Singular));
    }

    #[test]
    fn schur_complement_examples() {
        let one = M::identity(1);
        let zero = M::zeros(1, 1);
        assert_eq!(schur_complement(&one, &zero, &zero, &one).unwrap(), one);
        // [[h10, m12], [hi0, m_i2]] = [[1, 0], [0, 1]]
        assert_eq!(schur_complement(&one, &zero, &zero, &one).unwrap(), one);
        assert_eq!(schur_complement(&zero, &one, &one, &one), Err(Error::Singular));
    }

    #[test]
    fn kron_examples() {
        let a = M::from_i64_rows(&[&[1, 2], &[3, 4]]);
        assert_eq!(a.kron(&M::identity(1)), a);
        let single = BlockMatrix::from_scalar_matrix(&M::from_i64_rows(&[&[7]]), 1);
        assert_eq!(single.kron(&j2()).to_dense(), M::from_i64_rows(&[&[0, 7], &[7, 0]]));
    }

    #[test]
    fn unit_lower_inverse_matches_dense() {
        let l = BlockMatrix::from_dense(
            &M::from_i64_rows(&[
                &[1, 0, 0, 0],
                &[0, 1, 0, 0],
                &[2, -1, 1, 0],
                &[3, 5, 0, 1],
            ]),
            2,
        )
        .unwrap();
        assert_eq!(invert_unit_lower(&l).unwrap(), l.invert().unwrap());
    }
}
