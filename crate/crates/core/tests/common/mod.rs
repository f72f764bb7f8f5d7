#![allow(dead_code)]

use checkerboard::gram::CheckerboardGram;
use checkerboard::{BlockMatrix, Matrix, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Q = Rational;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `p/q` with `|p| <= 4`, `q in {1, 2}`.
pub fn small_rational(rng: &mut impl Rng) -> Q {
    Q::new(BigInt::from(rng.gen_range(-4..=4)), BigInt::from(rng.gen_range(1..=2)))
}

pub fn random_block(rng: &mut impl Rng, n: usize) -> Matrix<Q> {
    Matrix::from_fn(n, n, |_, _| small_rational(rng))
}

/// Unit lower triangular block, so always invertible.
pub fn random_unimodular(rng: &mut impl Rng, n: usize) -> Matrix<Q> {
    Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => Q::one(),
        std::cmp::Ordering::Greater => small_rational(rng),
        std::cmp::Ordering::Less => Q::zero(),
    })
}

pub fn random_checkerboard(rng: &mut impl Rng, n: usize, m: usize) -> CheckerboardGram<Q> {
    let blocks = BlockMatrix::from_fn(m, m, n, |i, j| {
        if (i + j) % 2 == 1 {
            random_block(rng, n)
        } else {
            Matrix::zeros(n, n)
        }
    })
    .unwrap();
    CheckerboardGram::from_block_matrix(blocks).unwrap()
}

/// Unit lower triangular with off-diagonal blocks only where `i ≡ j (mod 2)`.
pub fn random_parity_lower(rng: &mut impl Rng, size: usize, n: usize) -> BlockMatrix<Q> {
    BlockMatrix::from_fn(size, size, n, |i, j| {
        if i == j {
            Matrix::identity(n)
        } else if j < i && (i + j) % 2 == 0 {
            random_block(rng, n)
        } else {
            Matrix::zeros(n, n)
        }
    })
    .unwrap()
}

/// `A D B^T` with `A`, `B` parity lower and `D` built from antidiagonal
/// pairs; the pair at `singular_level` gets a rank-deficient block.
pub fn from_factors(rng: &mut impl Rng, n: usize, m: usize, singular_level: Option<usize>) -> CheckerboardGram<Q> {
    let a = random_parity_lower(rng, m, n);
    let b = random_parity_lower(rng, m, n);
    let mut d = BlockMatrix::zeros(m, m, n);
    for j in 0..m / 2 {
        let mut upper = random_unimodular(rng, n);
        if Some(j) == singular_level {
            for c in 0..n {
                upper.set(0, c, Q::zero());
            }
        }
        d.set(2 * j, 2 * j + 1, upper);
        d.set(2 * j + 1, 2 * j, random_unimodular(rng, n).transpose());
    }
    let matrix = a.multiply(&d).unwrap().multiply(&b.transpose()).unwrap();
    CheckerboardGram::from_block_matrix(matrix).unwrap()
}

/// Determinant by fraction elimination with row swaps, written against
/// `num` directly.
pub fn det(m: &Matrix<Q>) -> Q {
    let size = m.rows();
    let mut a: Vec<Vec<Q>> = m.row_vecs();
    let mut det = Q::one();
    for col in 0..size {
        let Some(p) = (col..size).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..size {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            for c in col..size {
                let v = &a[col][c] * &f;
                a[r][c] -= v;
            }
        }
    }
    det
}

/// First level `l` whose leading `(2l+2)`-block minor vanishes.
pub fn first_singular_level(gram: &CheckerboardGram<Q>) -> Option<usize> {
    let dense = gram.matrix().to_dense();
    let n = gram.block_order();
    (0..gram.size() / 2).find(|&l| {
        let k = (2 * l + 2) * n;
        det(&dense.submatrix(0..k, 0..k)).is_zero()
    })
}

/// Leading minors of the shifted matrix `m_{i+1,j}` up to size `m - 2`.
pub fn shift_is_quasi_definite(gram: &CheckerboardGram<Q>) -> bool {
    let n = gram.block_order();
    let size = gram.size() - 2;
    let dense = gram.matrix().to_dense();
    (1..=size).all(|k| det(&dense.submatrix(n..n + k * n, 0..k * n)).abs() > Q::zero())
}

/// Seeded random inputs with every pair pivot invertible: `count`
/// checkerboards with `n in {1,2,3}` and even `m in [4, 16]`, larger `m`
/// paired with smaller `n` to keep exact runs fast.
pub fn random_inputs(seed: u64, count: usize) -> Vec<CheckerboardGram<Q>> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let n = 1 + i % 3;
            let max_m = match n {
                1 => 16,
                2 => 12,
                _ => 8,
            };
            let m = 2 * r.gen_range(2..=max_m / 2);
            loop {
                let g = random_checkerboard(&mut r, n, m);
                if first_singular_level(&g).is_none() {
                    return g;
                }
            }
        })
        .collect()
}

pub fn scalars(v: &[i64]) -> Vec<Matrix<Q>> {
    v.iter().map(|&x| Matrix::from_i64_rows(&[&[x]])).collect()
}
