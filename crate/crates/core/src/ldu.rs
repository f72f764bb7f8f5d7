//! Structured LDU factorization `M = L1^{-1} D L2^{-T}` of a checkerboard
//! Gram matrix, a generic block LDU for the shifted matrix, and the
//! reconstruction oracle.
//!
//! The checkerboard factorization never forms a 2x2 block pivot. It runs
//! the level-by-level Schur-complement recursion
//!
//! ```text
//! θ^{(0)}_{i,2k}  = m_{i,2k}                                     (i odd)
//! θ^{(2j)}_{i,2k} = θ^{(2j-2)}_{i,2k} - h_{i,2j-2} h_{2j-1,2j-2}^{-1} θ^{(2j-2)}_{2j-1,2k}
//! h_{i,2l}        = θ^{(2l)}_{i,2l}
//! u_{2l,2k}       = h_{2l+1,2l}^{-1} θ^{(2l)}_{2l+1,2k}
//! ```
//!
//! on odd rows / even columns, and the mirror image on even rows / odd
//! columns. `H = LD` and `U` come out of the recursion; `L` and `D` are then
//! read off `H` using the antidiagonal shape of the 2x2 diagonal blocks of `D`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::gram::{condensed_hankel, CheckerboardGram};
use crate::linalg::{invert_unit_lower, j2, BlockMatrix, Matrix};
use crate::scalar::Scalar;

/// Memoized θ values keyed by `(level, row, col)`, where `level` is the
/// superscript `2j` and `(row, col)` index the Gram matrix. Holds both the
/// odd-row/even-column recursion and its even-row/odd-column mirror.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable<S> {
    entries: BTreeMap<(usize, usize, usize), Matrix<S>>,
}

impl<S> Default for ThetaTable<S> {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }
}

impl<S: Scalar> ThetaTable<S> {
    pub fn get(&self, level: usize, row: usize, col: usize) -> Option<&Matrix<S>> {
        self.entries.get(&(level, row, col))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Matrix<S>)> {
        self.entries.iter()
    }

    fn insert(&mut self, level: usize, row: usize, col: usize, value: Matrix<S>) {
        self.entries.insert((level, row, col), value);
    }
}

/// `M = L1^{-1} D L2^{-T}` with parity-structured `L1`, `L2` and a `D` made
/// of antidiagonal 2x2 blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization<S> {
    pub l1: BlockMatrix<S>,
    pub l2: BlockMatrix<S>,
    pub d: BlockMatrix<S>,
    /// `H = L1^{-1} D`.
    pub h: BlockMatrix<S>,
    /// `U = L2^{-T}`.
    pub u: BlockMatrix<S>,
    pub theta: ThetaTable<S>,
}

impl<S: Scalar> Factorization<S> {
    pub fn size(&self) -> usize {
        self.d.rows()
    }

    pub fn block_order(&self) -> usize {
        self.d.block_order()
    }

    /// `(d_{2j,2j+1}, d_{2j+1,2j})`.
    pub fn d_pair(&self, j: usize) -> (&Matrix<S>, &Matrix<S>) {
        (self.d.block(2 * j, 2 * j + 1), self.d.block(2 * j + 1, 2 * j))
    }

    pub fn d_pairs(&self) -> Vec<(Matrix<S>, Matrix<S>)> {
        (0..self.size() / 2)
            .map(|j| {
                let (a, b) = self.d_pair(j);
                (a.clone(), b.clone())
            })
            .collect()
    }

    /// Leading truncation; valid because every factor is block triangular.
    pub fn truncate(&self, size: usize) -> Self {
        let theta = ThetaTable {
            entries: self
                .theta
                .entries
                .iter()
                .filter(|((_, r, c), _)| *r < size && *c < size)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        };
        Self {
            l1: self.l1.leading(size),
            l2: self.l2.leading(size),
            d: self.d.leading(size),
            h: self.h.leading(size),
            u: self.u.leading(size),
            theta,
        }
    }
}

/// Result of running the recursion as far as the pivots allow.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFactorization<S> {
    /// Factorization of the leading `2 * levels` block truncation.
    pub completed: Factorization<S>,
    /// Level whose pivot was singular, if the run stopped early.
    pub failed_level: Option<usize>,
}

/// `L̂1^{-1} D̂ L̂2^{-T}` with `D̂` block diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFactorization<S> {
    pub l1: BlockMatrix<S>,
    pub l2: BlockMatrix<S>,
    pub d: BlockMatrix<S>,
}

impl<S: Scalar> DiagonalFactorization<S> {
    pub fn size(&self) -> usize {
        self.d.rows()
    }

    pub fn block_order(&self) -> usize {
        self.d.block_order()
    }

    pub fn d_diag(&self, j: usize) -> &Matrix<S> {
        self.d.block(j, j)
    }
}

/// Anything with factors `(L1, D, L2)` of `A = L1^{-1} D L2^{-T}`.
pub trait Factors<S: Scalar> {
    fn l1(&self) -> &BlockMatrix<S>;
    fn d(&self) -> &BlockMatrix<S>;
    fn l2(&self) -> &BlockMatrix<S>;
}

impl<S: Scalar> Factors<S> for Factorization<S> {
    fn l1(&self) -> &BlockMatrix<S> {
        &self.l1
    }
    fn d(&self) -> &BlockMatrix<S> {
        &self.d
    }
    fn l2(&self) -> &BlockMatrix<S> {
        &self.l2
    }
}

impl<S: Scalar> Factors<S> for DiagonalFactorization<S> {
    fn l1(&self) -> &BlockMatrix<S> {
        &self.l1
    }
    fn d(&self) -> &BlockMatrix<S> {
        &self.d
    }
    fn l2(&self) -> &BlockMatrix<S> {
        &self.l2
    }
}

/// `L1^{-1} D L2^{-T}`, computed with general dense inverses so it stays
/// independent of how the factors were produced.
pub fn reconstruct<S: Scalar, F: Factors<S>>(f: &F) -> Result<BlockMatrix<S>> {
    let l1_inv = f.l1().invert()?;
    let l2_inv_t = f.l2().invert()?.transpose();
    l1_inv.multiply(f.d())?.multiply(&l2_inv_t)
}

/// Factors a checkerboard Gram matrix, failing with
/// [`Error::SingularPivot`] at the first non-invertible pivot.
pub fn factorize_checkerboard<S: Scalar>(gram: &CheckerboardGram<S>) -> Result<Factorization<S>> {
    let partial = factorize_checkerboard_partial(gram)?;
    match partial.failed_level {
        Some(level) => Err(Error::SingularPivot { level }),
        None => Ok(partial.completed),
    }
}

/// Runs the recursion level by level. On a singular pivot at level `l` the
/// factorization of the leading `2l` truncation is returned together with
/// the failing level.
pub fn factorize_checkerboard_partial<S: Scalar>(
    gram: &CheckerboardGram<S>,
) -> Result<PartialFactorization<S>> {
    let m = gram.size();
    let n = gram.block_order();
    let levels = m / 2;

    let mut h = BlockMatrix::zeros(m, m, n);
    let mut u = BlockMatrix::identity(m, n);
    let mut theta = ThetaTable::default();

    // Current θ layer for each parity, indexed by (row, col); rows have the
    // parity `row_parity`, columns the opposite one.
    let mut layers: [BTreeMap<(usize, usize), Matrix<S>>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (row_parity, layer) in layers.iter_mut().enumerate() {
        for i in (row_parity..m).step_by(2) {
            for c in (1 - row_parity..m).step_by(2) {
                layer.insert((i, c), gram.entry(i, c).clone());
                theta.insert(0, i, c, gram.entry(i, c).clone());
            }
        }
    }

    let mut failed_level = None;
    'levels: for l in 0..levels {
        // row_parity 1: odd rows, pivot h_{2l+1,2l}, column 2l.
        // row_parity 0: even rows, pivot h_{2l,2l+1}, column 2l+1.
        let mut pivot_invs = Vec::with_capacity(2);
        for row_parity in [1, 0] {
            let pivot_row = 2 * l + row_parity;
            let pivot_col = 2 * l + 1 - row_parity;
            let pivot = layers[row_parity][&(pivot_row, pivot_col)].clone();
            match pivot.inverse() {
                Ok(inv) => pivot_invs.push(inv),
                Err(Error::Singular) => {
                    failed_level = Some(l);
                    break 'levels;
                }
                Err(e) => return Err(e),
            }
        }
        for (row_parity, pivot_inv) in [1usize, 0].into_iter().zip(pivot_invs) {
            let layer = &mut layers[row_parity];
            let pivot_row = 2 * l + row_parity;
            let pivot_col = 2 * l + 1 - row_parity;
            // h_{i, pivot_col} for every row of this parity at or below the pivot.
            for i in (pivot_row..m).step_by(2) {
                h.set(i, pivot_col, layer[&(i, pivot_col)].clone());
            }
            // u_{pivot_col, c} for columns of the same parity to the right.
            let mut u_row = Vec::new();
            for c in (pivot_col + 2..m).step_by(2) {
                let value = pivot_inv.mul(&layer[&(pivot_row, c)])?;
                u.set(pivot_col, c, value.clone());
                u_row.push((c, value));
            }
            // Next θ layer: θ_{i,c} -= h_{i,pivot_col} u_{pivot_col,c}.
            let level_tag = 2 * l + 2;
            for i in (pivot_row + 2..m).step_by(2) {
                let hi = h.block(i, pivot_col).clone();
                for (c, uc) in &u_row {
                    let updated = layer[&(i, *c)].sub(&hi.mul(uc)?)?;
                    theta.insert(level_tag, i, *c, updated.clone());
                    layer.insert((i, *c), updated);
                }
            }
        }
    }

    let done = failed_level.unwrap_or(levels);
    let size = 2 * done;
    let h = h.leading(size);
    let u = u.leading(size);
    let mut theta_done = ThetaTable::default();
    for (&(lvl, r, c), v) in theta.iter() {
        if r < size && c < size && lvl <= size {
            theta_done.insert(lvl, r, c, v.clone());
        }
    }

    let (l_inv, d) = split_h(&h)?;
    let l1 = invert_unit_lower(&l_inv)?;
    // U = L2^{-T}  =>  L2 = (U^T)^{-1}, U^T unit lower triangular.
    let l2 = invert_unit_lower(&u.transpose())?;
    Ok(PartialFactorization {
        completed: Factorization {
            l1,
            l2,
            d,
            h,
            u,
            theta: theta_done,
        },
        failed_level,
    })
}

/// Splits `H = L D` into the unit lower factor `L` and the antidiagonal-pair
/// `D`:
/// `d_{2l+1,2l} = h_{2l+1,2l}`, `d_{2l,2l+1} = h_{2l,2l+1}`,
/// `l_{2i+1,2j+1} = h_{2i+1,2j} d_{2j+1,2j}^{-1}`,
/// `l_{2i,2j} = h_{2i,2j+1} d_{2j,2j+1}^{-1}`.
fn split_h<S: Scalar>(h: &BlockMatrix<S>) -> Result<(BlockMatrix<S>, BlockMatrix<S>)> {
    let size = h.rows();
    let n = h.block_order();
    let mut l = BlockMatrix::identity(size, n);
    let mut d = BlockMatrix::zeros(size, size, n);
    for j in 0..size / 2 {
        let d_eo = h.block(2 * j, 2 * j + 1).clone();
        let d_oe = h.block(2 * j + 1, 2 * j).clone();
        let d_eo_inv = d_eo.inverse()?;
        let d_oe_inv = d_oe.inverse()?;
        for i in j + 1..size / 2 {
            l.set(2 * i + 1, 2 * j + 1, h.block(2 * i + 1, 2 * j).mul(&d_oe_inv)?);
            l.set(2 * i, 2 * j, h.block(2 * i, 2 * j + 1).mul(&d_eo_inv)?);
        }
        d.set(2 * j, 2 * j + 1, d_eo);
        d.set(2 * j + 1, 2 * j, d_oe);
    }
    Ok((l, d))
}

/// Block LDU by sequential Schur-complement elimination; `D̂` is block
/// diagonal. No pivoting: a singular leading pivot is an error.
pub fn generic_ldu<S: Scalar>(a: &BlockMatrix<S>) -> Result<DiagonalFactorization<S>> {
    let size = a.rows();
    if a.cols() != size {
        return Err(Error::ShapeMismatch(format!("generic_ldu on {}x{}", size, a.cols())));
    }
    let n = a.block_order();
    let mut work = a.clone();
    let mut lower = BlockMatrix::identity(size, n);
    let mut upper = BlockMatrix::identity(size, n);
    let mut d = BlockMatrix::zeros(size, size, n);
    for k in 0..size {
        let pivot = work.block(k, k).clone();
        let pivot_inv = pivot.inverse().map_err(|e| match e {
            Error::Singular => Error::SingularPivot { level: k },
            other => other,
        })?;
        for i in k + 1..size {
            let lik = work.block(i, k).mul(&pivot_inv)?;
            lower.set(i, k, lik);
            let ukj = pivot_inv.mul(work.block(k, i))?;
            upper.set(k, i, ukj);
        }
        for i in k + 1..size {
            let lik = lower.block(i, k).clone();
            if lik.is_zero() {
                continue;
            }
            for j in k + 1..size {
                let correction = lik.mul(work.block(k, j))?;
                let updated = work.block(i, j).sub(&correction)?;
                work.set(i, j, updated);
            }
        }
        d.set(k, k, pivot);
    }
    Ok(DiagonalFactorization {
        l1: invert_unit_lower(&lower)?,
        l2: invert_unit_lower(&upper.transpose())?,
        d,
    })
}

/// Factorization of the checkerboard matrix generated by condensed moments
/// `S`, obtained from the block LDU of the condensed Hankel matrix `M~` and
/// lifted by Kronecker products: `L_k = L~_k ⊗ I_2`, `D = D~ ⊗ J_2`.
pub fn hankel_factorize<S: Scalar>(s: &[Matrix<S>], m: usize) -> Result<Factorization<S>> {
    if m % 2 != 0 {
        return Err(Error::OddTruncation(m));
    }
    let n = s
        .first()
        .map(Matrix::rows)
        .ok_or_else(|| Error::InsufficientMoments { needed: 0, available: 0 })?;
    let condensed = condensed_hankel(s, m / 2, n)?;
    let tilde = generic_ldu(&condensed)?;
    let i2 = Matrix::identity(2);
    let l1 = tilde.l1.kron(&i2);
    let l2 = tilde.l2.kron(&i2);
    let d = tilde.d.kron(&j2());
    let l1_inv = invert_unit_lower(&l1)?;
    let h = l1_inv.multiply(&d)?;
    let u = invert_unit_lower(&l2)?.transpose();
    Ok(Factorization {
        l1,
        l2,
        d,
        h,
        u,
        theta: ThetaTable::default(),
    })
}

/// Checks the parity sparsity of `L1`/`L2` and the antidiagonal-pair shape
/// of `D`. Returns the first offending position.
pub fn check_structure<S: Scalar>(f: &Factorization<S>) -> std::result::Result<(), String> {
    for (name, l) in [("L1", &f.l1), ("L2", &f.l2)] {
        check_parity_lower(l).map_err(|(i, j)| format!("{name} has a forbidden entry at ({i}, {j})"))?;
    }
    check_antidiagonal_pairs(&f.d).map_err(|(i, j)| format!("D has a forbidden entry at ({i}, {j})"))
}

/// Unit lower triangular with nonzero off-diagonal blocks only where
/// `i ≡ j (mod 2)`.
pub fn check_parity_lower<S: Scalar>(l: &BlockMatrix<S>) -> std::result::Result<(), (usize, usize)> {
    for i in 0..l.rows() {
        for j in 0..l.cols() {
            let b = l.block(i, j);
            let ok = if i == j {
                b.is_identity()
            } else if j > i || (i + j) % 2 == 1 {
                b.is_zero()
            } else {
                true
            };
            if !ok {
                return Err((i, j));
            }
        }
    }
    Ok(())
}

/// Nonzero blocks only at `(2i, 2i+1)` and `(2i+1, 2i)`.
pub fn check_antidiagonal_pairs<S: Scalar>(d: &BlockMatrix<S>) -> std::result::Result<(), (usize, usize)> {
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            let allowed = i / 2 == j / 2 && i != j;
            if !allowed && !d.block(i, j).is_zero() {
                return Err((i, j));
            }
        }
    }
    Ok(())
}

/// Off-diagonal blocks all zero.
pub fn check_block_diagonal<S: Scalar>(d: &BlockMatrix<S>) -> std::result::Result<(), (usize, usize)> {
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            if i != j && !d.block(i, j).is_zero() {
                return Err((i, j));
            }
        }
    }
    Ok(())
}
