//! Checkerboard Gram matrices: construction from raw entries, from unwrapped
//! moment sequences, and by Kronecker lifting of a condensed Hankel matrix.

use crate::error::{Error, Result};
use crate::linalg::{j2, BlockMatrix, Matrix};
use crate::scalar::Scalar;

/// Interleaved moments `h_0, h_1, ...` with every even-index moment zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence<S> {
    n: usize,
    h: Vec<Matrix<S>>,
}

impl<S: Scalar> MomentSequence<S> {
    /// Validates an already interleaved sequence.
    pub fn from_unwrapped(h: Vec<Matrix<S>>, n: usize) -> Result<Self> {
        for (k, hk) in h.iter().enumerate() {
            check_block_order(hk, n)?;
            if k % 2 == 0 && !hk.is_zero() {
                return Err(Error::PatternViolation { i: k, j: 0 });
            }
        }
        Ok(Self { n, h })
    }

    pub fn block_order(&self) -> usize {
        self.n
    }

    pub fn moments(&self) -> &[Matrix<S>] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// The condensed moments `S_k = h_{2k+1}`.
    pub fn condensed(&self) -> Vec<Matrix<S>> {
        self.h.iter().skip(1).step_by(2).cloned().collect()
    }
}

fn check_block_order<S: Scalar>(b: &Matrix<S>, n: usize) -> Result<()> {
    if n == 0 || b.rows() != n || b.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "block is {}x{}, expected order {n}",
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Interleaves `S` into `h` with `h_{2k} = 0`, `h_{2k+1} = S_k`.
pub fn unwrap_moments<S: Scalar>(s: &[Matrix<S>], n: usize) -> Result<MomentSequence<S>> {
    let mut h = Vec::with_capacity(2 * s.len());
    for sk in s {
        check_block_order(sk, n)?;
        h.push(Matrix::zeros(n, n));
        h.push(sk.clone());
    }
    Ok(MomentSequence { n, h })
}

/// A truncated Gram matrix with `m_{ij} = 0` whenever `i + j` is even.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckerboardGram<S> {
    matrix: BlockMatrix<S>,
    hankel: bool,
}

impl<S: Scalar> CheckerboardGram<S> {
    /// Wraps a block matrix after checking the checkerboard pattern.
    pub fn from_block_matrix(matrix: BlockMatrix<S>) -> Result<Self> {
        let m = matrix.rows();
        if matrix.cols() != m {
            return Err(Error::ShapeMismatch(format!("Gram matrix is {}x{}", m, matrix.cols())));
        }
        if m % 2 != 0 {
            return Err(Error::OddTruncation(m));
        }
        for i in 0..m {
            for j in 0..m {
                if (i + j) % 2 == 0 && !matrix.block(i, j).is_zero() {
                    return Err(Error::PatternViolation { i, j });
                }
            }
        }
        let hankel = is_hankel(&matrix);
        Ok(Self { matrix, hankel })
    }

    /// Truncation size `m` (block rows = block columns).
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn block_order(&self) -> usize {
        self.matrix.block_order()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Matrix<S> {
        self.matrix.block(i, j)
    }

    pub fn matrix(&self) -> &BlockMatrix<S> {
        &self.matrix
    }

    /// Whether `m_{ij}` depends only on `i + j`.
    pub fn is_hankel(&self) -> bool {
        self.hankel
    }

    /// Leading even truncation.
    pub fn truncate(&self, size: usize) -> Result<Self> {
        if size % 2 != 0 {
            return Err(Error::OddTruncation(size));
        }
        if size > self.size() {
            return Err(Error::OutOfRange(format!("truncation {size} exceeds {}", self.size())));
        }
        Self::from_block_matrix(self.matrix.leading(size))
    }
}

fn is_hankel<S: Scalar>(m: &BlockMatrix<S>) -> bool {
    (0..m.rows()).all(|i| {
        (0..m.cols()).all(|j| {
            // compare against the first occurrence of the anti-diagonal i + j
            let k = i + j;
            let (i0, j0) = if k < m.cols() { (0, k) } else { (k + 1 - m.cols(), m.cols() - 1) };
            m.block(i, j) == m.block(i0, j0)
        })
    })
}

/// Builds a checkerboard Gram matrix from `(i, j, block)` triples. Every
/// odd-order position `i + j` odd must be supplied; even-order positions are
/// zero and may only be given as zero.
pub fn build_checkerboard<S: Scalar>(
    entries: impl IntoIterator<Item = (usize, usize, Matrix<S>)>,
    n: usize,
    m: usize,
) -> Result<CheckerboardGram<S>> {
    if m % 2 != 0 {
        return Err(Error::OddTruncation(m));
    }
    let mut slots: Vec<Option<Matrix<S>>> = vec![None; m * m];
    for (i, j, block) in entries {
        if i >= m || j >= m {
            return Err(Error::OutOfRange(format!("entry ({i}, {j}) outside truncation {m}")));
        }
        check_block_order(&block, n)?;
        if (i + j) % 2 == 0 {
            if !block.is_zero() {
                return Err(Error::PatternViolation { i, j });
            }
            continue;
        }
        slots[i * m + j] = Some(block);
    }
    let mut matrix = BlockMatrix::zeros(m, m, n);
    for i in 0..m {
        for j in 0..m {
            if (i + j) % 2 == 1 {
                let block = slots[i * m + j].take().ok_or(Error::MissingEntry { i, j })?;
                matrix.set(i, j, block);
            }
        }
    }
    CheckerboardGram::from_block_matrix(matrix)
}

/// `m_{ij} = h_{i+j}`. Only odd indices up to `2m - 3` are read; the even
/// ones are structurally zero, so a sequence of length `2m - 2` suffices.
pub fn hankel_gram<S: Scalar>(h: &MomentSequence<S>, m: usize) -> Result<CheckerboardGram<S>> {
    if m % 2 != 0 {
        return Err(Error::OddTruncation(m));
    }
    let needed = (2 * m).saturating_sub(3);
    if m > 0 && h.len() < needed + 1 {
        return Err(Error::InsufficientMoments {
            needed,
            available: h.len(),
        });
    }
    let n = h.block_order();
    let matrix = BlockMatrix::from_fn(m, m, n, |i, j| {
        let k = i + j;
        if k % 2 == 0 {
            Matrix::zeros(n, n)
        } else {
            h.moments()[k].clone()
        }
    })?;
    CheckerboardGram::from_block_matrix(matrix)
}

/// The condensed Hankel matrix `M~_{jk} = S_{j+k}` of the given size.
pub fn condensed_hankel<S: Scalar>(s: &[Matrix<S>], size: usize, n: usize) -> Result<BlockMatrix<S>> {
    if size > 0 && s.len() < 2 * size - 1 {
        return Err(Error::InsufficientMoments {
            needed: 2 * size - 2,
            available: s.len(),
        });
    }
    BlockMatrix::from_fn(size, size, n, |j, k| s[j + k].clone())
}

/// `M~ ⊗ J_2`, the checkerboard matrix generated by a condensed Hankel matrix.
pub fn kron_lift<S: Scalar>(condensed: &BlockMatrix<S>) -> Result<CheckerboardGram<S>> {
    let size = condensed.rows();
    if condensed.cols() != size {
        return Err(Error::ShapeMismatch(format!(
            "condensed matrix is {}x{}",
            size,
            condensed.cols()
        )));
    }
    for i in 0..size {
        for j in 0..size {
            let k = i + j;
            let (i0, j0) = if k < size { (0, k) } else { (k + 1 - size, size - 1) };
            if condensed.block(i, j) != condensed.block(i0, j0) {
                return Err(Error::NotHankel { i, j });
            }
        }
    }
    CheckerboardGram::from_block_matrix(condensed.kron(&j2()))
}

/// `ΛM`: block rows `1..m` of `M`, giving an `(m-1) x m` matrix with
/// entry `(i, j) = m_{i+1, j}`.
pub fn lambda_shift<S: Scalar>(gram: &CheckerboardGram<S>) -> BlockMatrix<S> {
    shift_up(gram.matrix())
}

/// Drops the first block row.
pub fn shift_up<S: Scalar>(a: &BlockMatrix<S>) -> BlockMatrix<S> {
    a.sub_blocks(1..a.rows(), 0..a.cols())
}

/// The shifted matrix cut to the largest even square size it fully
/// determines, `(m - 2) x (m - 2)`.
pub fn shifted_square<S: Scalar>(gram: &CheckerboardGram<S>) -> BlockMatrix<S> {
    let size = gram.size().saturating_sub(2);
    lambda_shift(gram).leading(size)
}

/// `M_eo^{[2j]}` with entry `(r, c) = m_{2r, 2c+1}`.
pub fn condensed_eo<S: Scalar>(gram: &CheckerboardGram<S>, j: usize) -> Result<BlockMatrix<S>> {
    condensed_with(gram, j, 0)
}

/// `M_oe^{[2j]}` with entry `(r, c) = m_{2r+1, 2c}`.
pub fn condensed_oe<S: Scalar>(gram: &CheckerboardGram<S>, j: usize) -> Result<BlockMatrix<S>> {
    condensed_with(gram, j, 1)
}

fn condensed_with<S: Scalar>(gram: &CheckerboardGram<S>, j: usize, row_offset: usize) -> Result<BlockMatrix<S>> {
    if 2 * j > gram.size() {
        return Err(Error::OutOfRange(format!(
            "condensed size {j} needs truncation {}, have {}",
            2 * j,
            gram.size()
        )));
    }
    BlockMatrix::from_fn(j, j, gram.block_order(), |r, c| {
        gram.entry(2 * r + row_offset, 2 * c + 1 - row_offset).clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type M = Matrix<Rational>;

    fn scalars(v: &[i64]) -> Vec<M> {
        v.iter().map(|&x| M::from_i64_rows(&[&[x]])).collect()
    }

    fn dense(g: &CheckerboardGram<Rational>) -> M {
        g.matrix().to_dense()
    }

    fn hankel_4x4() -> M {
        M::from_i64_rows(&[&[0, 1, 0, 0], &[1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]])
    }

    #[test]
    fn unwrap_interleaves() {
        let h = unwrap_moments(&scalars(&[1]), 1).unwrap();
        assert_eq!(h.moments(), scalars(&[0, 1]).as_slice());
        let h = unwrap_moments(&scalars(&[1, 0, 1, 0]), 1).unwrap();
        assert_eq!(h.moments(), scalars(&[0, 1, 0, 0, 0, 1, 0, 0]).as_slice());
        let h = unwrap_moments(&scalars(&[1, 0, 1, 0, 3, 0, 15]), 1).unwrap();
        assert_eq!(h.len(), 14);
        assert_eq!(h.condensed(), scalars(&[1, 0, 1, 0, 3, 0, 15]));
    }

    #[test]
    fn unwrapped_with_nonzero_even_moment_is_rejected() {
        let err = MomentSequence::from_unwrapped(scalars(&[0, 1, 1, 0]), 1).unwrap_err();
        assert_eq!(err, Error::PatternViolation { i: 2, j: 0 });
    }

    #[test]
    fn build_from_entries() {
        let one = M::identity(1);
        let g = build_checkerboard(vec![(0, 1, one.clone()), (1, 0, one.clone())], 1, 2).unwrap();
        assert_eq!(dense(&g), M::from_i64_rows(&[&[0, 1], &[1, 0]]));
        let err = build_checkerboard(vec![(0, 0, one.clone()), (0, 1, one.clone()), (1, 0, one.clone())], 1, 2);
        assert_eq!(err.unwrap_err(), Error::PatternViolation { i: 0, j: 0 });
        let err = build_checkerboard(vec![(0, 1, one.clone())], 1, 2);
        assert_eq!(err.unwrap_err(), Error::MissingEntry { i: 1, j: 0 });
        let err = build_checkerboard(Vec::<(usize, usize, M)>::new(), 1, 3);
        assert_eq!(err.unwrap_err(), Error::OddTruncation(3));
    }

    #[test]
    fn hankel_from_moments() {
        let h = MomentSequence::from_unwrapped(scalars(&[0, 1, 0, 0, 0, 1, 0, 0]), 1).unwrap();
        let g = hankel_gram(&h, 4).unwrap();
        assert_eq!(dense(&g), hankel_4x4());
        assert!(g.is_hankel());

        let g = hankel_gram(&MomentSequence::from_unwrapped(scalars(&[0, 1]), 1).unwrap(), 2).unwrap();
        assert_eq!(dense(&g), M::from_i64_rows(&[&[0, 1], &[1, 0]]));

        let short = MomentSequence::from_unwrapped(scalars(&[0, 1, 0, 0]), 1).unwrap();
        assert!(matches!(hankel_gram(&short, 4), Err(Error::InsufficientMoments { .. })));
    }

    #[test]
    fn gaussian_hankel_gram() {
        let h = unwrap_moments(&scalars(&[1, 0, 1, 0, 3]), 1).unwrap();
        let g = hankel_gram(&h, 6).unwrap();
        // m_{ij} = h_{i+j}, written out by hand
        let expected = M::from_i64_rows(&[
            &[0, 1, 0, 0, 0, 1],
            &[1, 0, 0, 0, 1, 0],
            &[0, 0, 0, 1, 0, 0],
            &[0, 0, 1, 0, 0, 0],
            &[0, 1, 0, 0, 0, 3],
            &[1, 0, 0, 0, 3, 0],
        ]);
        assert_eq!(dense(&g), expected);
    }

    #[test]
    fn kron_lift_matches_hankel_route() {
        let one = BlockMatrix::from_scalar_matrix(&M::identity(1), 1);
        assert_eq!(dense(&kron_lift(&one).unwrap()), M::from_i64_rows(&[&[0, 1], &[1, 0]]));

        let s = scalars(&[1, 0, 1]);
        let mt = condensed_hankel(&s, 2, 1).unwrap();
        assert_eq!(mt.to_dense(), M::identity(2));
        assert_eq!(dense(&kron_lift(&mt).unwrap()), hankel_4x4());

        let s = scalars(&[1, 0, 1, 0, 3]);
        let mt = condensed_hankel(&s, 3, 1).unwrap();
        assert_eq!(mt.to_dense(), M::from_i64_rows(&[&[1, 0, 1], &[0, 1, 0], &[1, 0, 3]]));
        let lifted = kron_lift(&mt).unwrap();
        let direct = hankel_gram(&unwrap_moments(&s, 1).unwrap(), 6).unwrap();
        assert_eq!(lifted, direct);
    }

    #[test]
    fn kron_lift_rejects_non_hankel() {
        let mt = BlockMatrix::from_scalar_matrix(&M::from_i64_rows(&[&[1, 2], &[3, 4]]), 1);
        assert_eq!(kron_lift(&mt).unwrap_err(), Error::NotHankel { i: 1, j: 0 });
    }

    #[test]
    fn lambda_shift_examples() {
        let g = CheckerboardGram::from_block_matrix(BlockMatrix::from_scalar_matrix(&hankel_4x4(), 1)).unwrap();
        let shifted = lambda_shift(&g);
        assert_eq!(
            shifted.to_dense(),
            M::from_i64_rows(&[&[1, 0, 0, 0], &[0, 0, 0, 1], &[0, 0, 1, 0]])
        );
        let small = CheckerboardGram::from_block_matrix(BlockMatrix::from_scalar_matrix(
            &M::from_i64_rows(&[&[0, 5], &[7, 0]]),
            1,
        ))
        .unwrap();
        assert_eq!(lambda_shift(&small).to_dense(), M::from_i64_rows(&[&[7, 0]]));

        // two shifts equal Λ² M with Λ written as an explicit matrix
        let lambda2 = M::from_fn(2, 4, |i, j| if j == i + 2 { Rational::one() } else { Rational::zero() });
        let twice = shift_up(&shifted);
        assert_eq!(twice.to_dense(), lambda2.mul(&hankel_4x4()).unwrap());
    }

    #[test]
    fn condensed_submatrices() {
        let g = CheckerboardGram::from_block_matrix(BlockMatrix::from_scalar_matrix(&hankel_4x4(), 1)).unwrap();
        assert_eq!(condensed_eo(&g, 1).unwrap().to_dense(), M::identity(1));
        assert_eq!(condensed_eo(&g, 0).unwrap().rows(), 0);
        assert!(matches!(condensed_oe(&g, 3), Err(Error::OutOfRange(_))));

        let s = scalars(&[2, -1, 5, 3, 7]);
        let g = hankel_gram(&unwrap_moments(&s, 1).unwrap(), 6).unwrap();
        let mt = condensed_hankel(&s, 3, 1).unwrap();
        for j in 0..=3 {
            assert_eq!(condensed_eo(&g, j).unwrap(), mt.leading(j));
            assert_eq!(condensed_oe(&g, j).unwrap(), mt.leading(j));
        }
    }
}
