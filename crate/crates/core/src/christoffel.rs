//! The Christoffel transformation `M -> M̂ = ΛM`, the connector
//! `σ = L̂1 Λ L1^{-1}` between the two polynomial families, and the
//! relations `σP(z) = zP̂(z)` and `Q^T D^{-1} = Q̂^T D̂^{-1} σ`.

use crate::error::{Error, Result};
use crate::gram::{shifted_square, CheckerboardGram};
use crate::ldu::{check_block_diagonal, check_parity_lower, generic_ldu, DiagonalFactorization, Factors};
use crate::linalg::{invert_antidiagonal_pairs, invert_unit_lower, BlockMatrix, Matrix};
use crate::polys::{arith, polys_from_diagonal, MatrixPolynomial, Parity, PolynomialFamily};
use crate::report::Report;
use crate::scalar::Scalar;

/// `M̂ = ΛM` cut to the largest even size the `m` levels of `M` determine
/// (`m - 2`), together with its block LDU.
pub fn christoffel_transform<S: Scalar>(
    gram: &CheckerboardGram<S>,
) -> Result<(BlockMatrix<S>, DiagonalFactorization<S>)> {
    let shifted = shifted_square(gram);
    if shifted.rows() == 0 {
        return Err(Error::OutOfRange(format!(
            "truncation {} leaves nothing after the shift",
            gram.size()
        )));
    }
    let f = generic_ldu(&shifted)?;
    for (name, l) in [("L̂1", &f.l1), ("L̂2", &f.l2)] {
        check_parity_lower(l)
            .map_err(|(i, j)| Error::StructureViolation(format!("{name} has a forbidden entry at ({i}, {j})")))?;
    }
    check_block_diagonal(&f.d)
        .map_err(|(i, j)| Error::StructureViolation(format!("D̂ has an off-diagonal entry at ({i}, {j})")))?;
    Ok((shifted, f))
}

/// The banded matrix linking `P` and `P̂`: `I` on the superdiagonal,
/// `σ_{2j+1,2j}` on every other subdiagonal slot, zero elsewhere. Stored as
/// its leading `N x N` truncation; the `(N-1, N)` identity is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct Connector<S> {
    pub sigma: BlockMatrix<S>,
    pub subdiag: Vec<Matrix<S>>,
}

impl<S: Scalar> Connector<S> {
    /// Validates the sparsity pattern (up to `tol` in float mode) and
    /// extracts the subdiagonal.
    pub fn new(sigma: BlockMatrix<S>, tol: f64) -> Result<Self> {
        let n = sigma.block_order();
        let (zero, one) = (Matrix::zeros(n, n), Matrix::identity(n));
        let size = sigma.rows();
        if sigma.cols() != size || size % 2 != 0 {
            return Err(Error::ShapeMismatch(format!("connector of shape {}x{}", size, sigma.cols())));
        }
        for i in 0..size {
            for j in 0..size {
                let b = sigma.block(i, j);
                let ok = if j == i + 1 {
                    b.near(&one, tol)
                } else if i % 2 == 1 && j + 1 == i {
                    true
                } else {
                    b.near(&zero, tol)
                };
                if !ok {
                    return Err(Error::StructureViolation(format!("connector entry ({i}, {j}) breaks the band")));
                }
            }
        }
        let subdiag = (0..size / 2).map(|j| sigma.block(2 * j + 1, 2 * j).clone()).collect();
        Ok(Self { sigma, subdiag })
    }

    pub fn size(&self) -> usize {
        self.sigma.rows()
    }

    /// `σ_{2j+1,2j}`.
    pub fn sub(&self, j: usize) -> &Matrix<S> {
        &self.subdiag[j]
    }
}

/// Largest even `N` with `N <= size(F̂)` and `N + extra <= size(F)`.
fn common_size<S: Scalar>(f: &impl Factors<S>, f_hat: &DiagonalFactorization<S>, extra: usize) -> Result<usize> {
    if f.d().block_order() != f_hat.block_order() {
        return Err(Error::TruncationMismatch(format!(
            "block orders {} and {}",
            f.d().block_order(),
            f_hat.block_order()
        )));
    }
    let n = f_hat.size().min(f.d().rows().saturating_sub(extra)) & !1;
    if n == 0 {
        return Err(Error::TruncationMismatch(format!(
            "no common truncation between sizes {} and {}",
            f.d().rows(),
            f_hat.size()
        )));
    }
    Ok(n)
}

/// `σ = L̂1 Λ L1^{-1}`.
pub fn connector_from_l<S: Scalar>(
    f: &impl Factors<S>,
    f_hat: &DiagonalFactorization<S>,
    tol: f64,
) -> Result<Connector<S>> {
    let size = common_size(f, f_hat, 1)?;
    let n = f_hat.block_order();
    let l1_inv = invert_unit_lower(&f.l1().leading(size + 1))?;
    let lambda = BlockMatrix::from_fn(size, size + 1, n, |i, j| {
        if j == i + 1 {
            Matrix::identity(n)
        } else {
            Matrix::zeros(n, n)
        }
    })?;
    let full = f_hat.l1.leading(size).multiply(&lambda)?.multiply(&l1_inv)?;
    Connector::new(full.sub_blocks(0..size, 0..size), tol)
}

/// `σ = D̂ L̂2^{-T} L2^T D^{-1}`; the leading `N x N` block only involves the
/// leading blocks of each factor.
pub fn connector_from_d<S: Scalar>(
    f: &impl Factors<S>,
    f_hat: &DiagonalFactorization<S>,
    tol: f64,
) -> Result<Connector<S>> {
    let size = common_size(f, f_hat, 0)?;
    let l2_hat_inv_t = invert_unit_lower(&f_hat.l2.leading(size))?.transpose();
    let d_inv = invert_antidiagonal_pairs(&f.d().leading(size))?;
    let sigma = f_hat
        .d
        .leading(size)
        .multiply(&l2_hat_inv_t)?
        .multiply(&f.l2().leading(size).transpose())?
        .multiply(&d_inv)?;
    Connector::new(sigma, tol)
}

/// `p̂_{2j} = p_{2j+1}/z`, `p̂_{2j+1} = (p_{2j+2} - p_{2j+2}(0) p_{2j}(0)^{-1} p_{2j})/z`,
/// for every index the family supports.
pub fn hat_polys_via_relation<S: Scalar>(fam: &PolynomialFamily<S>, tol: f64) -> Result<Vec<MatrixPolynomial<S>>> {
    let count = fam.size().saturating_sub(1);
    (0..count)
        .map(|k| {
            let numerator = if k % 2 == 0 {
                fam.p[k + 1].coeffs().to_vec()
            } else {
                let upper = &fam.p[k + 1];
                let lower = &fam.p[k - 1];
                let c0_inv = lower.coeffs()[0]
                    .inverse()
                    .map_err(|_| Error::SingularConstantTerm { index: k - 1 })?;
                let factor = upper.coeffs()[0].mul(&c0_inv)?;
                arith::sub(upper.coeffs(), &arith::left_mul(&factor, lower.coeffs()))
            };
            let quotient = arith::div_z(&numerator, tol).ok_or(Error::NonzeroRemainder { index: k })?;
            MatrixPolynomial::new(quotient, Parity::None)
        })
        .collect()
}

/// Row `i` of `σP(z)` as a coefficient list.
fn sigma_row<S: Scalar>(conn: &Connector<S>, fam: &PolynomialFamily<S>, i: usize) -> Result<Vec<Matrix<S>>> {
    let size = conn.size();
    let mut acc: Vec<Matrix<S>> = Vec::new();
    for k in 0..size {
        let s = conn.sigma.block(i, k);
        if !s.is_zero() {
            acc = arith::add(&acc, &arith::left_mul(s, fam.p[k].coeffs()));
        }
    }
    if i + 1 == size {
        acc = arith::add(&acc, fam.p[size].coeffs());
    }
    Ok(acc)
}

/// `(σP)_i == z p̂_i` coefficientwise for every row of the connector.
pub fn verify_connector_action<S: Scalar>(
    conn: &Connector<S>,
    fam: &PolynomialFamily<S>,
    hat_p: &[MatrixPolynomial<S>],
    tol: f64,
) -> Report {
    let mut report = Report::new();
    let size = conn.size();
    if fam.size() <= size || hat_p.len() < size {
        report.error(
            "connector_action",
            &[],
            Error::TruncationMismatch(format!(
                "connector of size {size} needs {} polynomials and {size} transformed ones",
                size + 1
            )),
        );
        return report;
    }
    for (i, hat) in hat_p.iter().enumerate().take(size) {
        match sigma_row(conn, fam, i) {
            Ok(lhs) => {
                report.compare_coeffs("connector_action", &[i], &lhs, &arith::mul_z(hat.coeffs()), tol);
            }
            Err(e) => report.error("connector_action", &[i], e),
        }
    }
    report
}

/// `σ_{2j+1,2j} == d̂_{2j+1,2j+1} d_{2j,2j+1}^{-1}`.
pub fn verify_connector_subdiagonal<S: Scalar>(
    conn: &Connector<S>,
    d: &BlockMatrix<S>,
    d_hat: &BlockMatrix<S>,
    tol: f64,
) -> Report {
    let mut report = Report::new();
    for (j, actual) in conn.subdiag.iter().enumerate() {
        let expected = d
            .block(2 * j, 2 * j + 1)
            .inverse()
            .and_then(|inv| d_hat.block(2 * j + 1, 2 * j + 1).mul(&inv));
        match expected {
            Ok(expected) => {
                report.compare("connector_subdiagonal", &[j], actual, &expected, tol);
            }
            Err(e) => report.error("connector_subdiagonal", &[j], e),
        }
    }
    report
}

/// Entry `l` of the row `Q^T(ω) D^{-1}` against entry `l` of
/// `Q̂^T(ω) D̂^{-1} σ`, both as polynomials in `ω`, for `l < N`.
pub fn verify_q_relation<S: Scalar>(
    conn: &Connector<S>,
    fam: &PolynomialFamily<S>,
    hat_fam: &PolynomialFamily<S>,
    tol: f64,
) -> Report {
    let mut report = Report::new();
    let size = conn.size();
    let transposed = |p: &MatrixPolynomial<S>| p.coeffs().iter().map(Matrix::transpose).collect::<Vec<_>>();
    let right_mul = |a: Vec<Matrix<S>>, c: &Matrix<S>| -> Result<Vec<Matrix<S>>> {
        a.iter().map(|x| x.mul(c)).collect()
    };
    let d_inv = match invert_antidiagonal_pairs(&fam.d.leading(size)) {
        Ok(inv) => inv,
        Err(e) => {
            report.error("q_relation", &[], e);
            return report;
        }
    };
    for l in 0..size {
        let result = (|| -> Result<(Vec<Matrix<S>>, Vec<Matrix<S>>)> {
            let mut lhs = Vec::new();
            let mut rhs = Vec::new();
            for k in 0..size {
                let di = d_inv.block(k, l);
                if !di.is_zero() {
                    lhs = arith::add(&lhs, &right_mul(transposed(&fam.q[k]), di)?);
                }
                let s = conn.sigma.block(k, l);
                if !s.is_zero() {
                    let mid = hat_fam.d.block(k, k).inverse()?.mul(s)?;
                    rhs = arith::add(&rhs, &right_mul(transposed(&hat_fam.q[k]), &mid)?);
                }
            }
            Ok((lhs, rhs))
        })();
        match result {
            Ok((lhs, rhs)) => {
                report.compare_coeffs("q_relation", &[l], &lhs, &rhs, tol);
            }
            Err(e) => report.error("q_relation", &[l], e),
        }
    }
    report
}

/// Everything attached to one Christoffel step.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelData<S> {
    pub shifted: BlockMatrix<S>,
    pub factorization: DiagonalFactorization<S>,
    pub hat_family: PolynomialFamily<S>,
    pub from_l: Connector<S>,
    pub from_d: Connector<S>,
    pub hat_via_relation: Vec<MatrixPolynomial<S>>,
}

pub fn christoffel_data<S: Scalar>(
    gram: &CheckerboardGram<S>,
    f: &impl Factors<S>,
    fam: &PolynomialFamily<S>,
    tol: f64,
) -> Result<ChristoffelData<S>> {
    let (shifted, factorization) = christoffel_transform(gram)?;
    let hat_family = polys_from_diagonal(&factorization)?;
    Ok(ChristoffelData {
        from_l: connector_from_l(f, &factorization, tol)?,
        from_d: connector_from_d(f, &factorization, tol)?,
        hat_via_relation: hat_polys_via_relation(fam, tol)?,
        shifted,
        factorization,
        hat_family,
    })
}

/// Runs every Christoffel-side identity: both connector routes, the
/// subdiagonal formula, the connector action, the relation route for `P̂`
/// and the `Q`-side identity.
pub fn verify_christoffel<S: Scalar>(data: &ChristoffelData<S>, fam: &PolynomialFamily<S>, tol: f64) -> Report {
    let mut report = Report::new();
    let size = data.from_l.size();
    for i in 0..size {
        for j in 0..size {
            report.compare(
                "connector_routes",
                &[i, j],
                data.from_l.sigma.block(i, j),
                data.from_d.sigma.block(i, j),
                tol,
            );
        }
    }
    report.extend(verify_connector_subdiagonal(&data.from_l, &fam.d, &data.factorization.d, tol));
    report.extend(verify_connector_action(&data.from_l, fam, &data.hat_family.p, tol));
    for (k, (via, read)) in data.hat_via_relation.iter().zip(&data.hat_family.p).enumerate() {
        report.compare_coeffs("hat_polys_relation", &[k], via.coeffs(), read.coeffs(), tol);
    }
    report.extend(verify_q_relation(&data.from_l, fam, &data.hat_family, tol));
    report
}
