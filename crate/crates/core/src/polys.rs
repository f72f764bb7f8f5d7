//! Matrix polynomial families `P(z) = L1 X(z)`, `Q(ω) = L2 X(ω)`, the
//! bilinear pairing induced by a Gram matrix, the quasideterminant (linear
//! solve) route to the same polynomials, and the biorthogonality checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{condensed_eo, condensed_oe, hankel_gram, unwrap_moments, CheckerboardGram};
use crate::ldu::{DiagonalFactorization, Factorization};
use crate::linalg::{BlockMatrix, Matrix};
use crate::report::Report;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl Parity {
    pub fn of_index(k: usize) -> Self {
        if k % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    fn forbids(self, power: usize) -> bool {
        match self {
            Parity::Even => power % 2 == 1,
            Parity::Odd => power % 2 == 0,
            Parity::None => false,
        }
    }
}

/// Monic matrix polynomial `c_0 + c_1 z + ... + I z^deg`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial<S> {
    coeffs: Vec<Matrix<S>>,
    parity: Parity,
}

impl<S: Scalar> MatrixPolynomial<S> {
    pub fn new(coeffs: Vec<Matrix<S>>, parity: Parity) -> Result<Self> {
        let p = Self { coeffs, parity };
        p.validate()?;
        Ok(p)
    }

    /// `z^k I_n`.
    pub fn monomial(k: usize, n: usize) -> Self {
        let mut coeffs = vec![Matrix::zeros(n, n); k + 1];
        coeffs[k] = Matrix::identity(n);
        Self {
            coeffs,
            parity: Parity::of_index(k),
        }
    }

    /// Checks monicity and the parity pattern.
    pub fn validate(&self) -> Result<()> {
        let lead = self
            .coeffs
            .last()
            .ok_or_else(|| Error::StructureViolation("polynomial has no coefficients".into()))?;
        if !lead.is_identity() {
            return Err(Error::StructureViolation(format!(
                "leading coefficient of degree-{} polynomial is not the identity",
                self.degree()
            )));
        }
        let n = lead.rows();
        if let Some(k) = self.coeffs.iter().position(|c| c.rows() != n || c.cols() != n) {
            return Err(Error::ShapeMismatch(format!("coefficient {k} has the wrong block order")));
        }
        if let Some(k) = (0..self.coeffs.len()).find(|&k| self.parity.forbids(k) && !self.coeffs[k].is_zero()) {
            return Err(Error::StructureViolation(format!(
                "{:?} polynomial has a nonzero coefficient at power {k}",
                self.parity
            )));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn block_order(&self) -> usize {
        self.coeffs[0].rows()
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[Matrix<S>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Option<&Matrix<S>> {
        self.coeffs.get(k)
    }

    /// Copy with coefficient `k` replaced, skipping validation. Used to
    /// build deliberately broken inputs for the verification suites.
    pub fn with_coefficient(&self, k: usize, value: Matrix<S>) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[k] = value;
        Self {
            coeffs,
            parity: self.parity,
        }
    }

    /// Horner evaluation at a scalar point.
    pub fn evaluate(&self, z: &S) -> Matrix<S> {
        let mut acc = Matrix::zeros(self.block_order(), self.block_order());
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(z).add(c).expect("uniform block order");
        }
        acc
    }
}

/// Coefficient-list arithmetic on (not necessarily monic) polynomials with
/// block coefficients. Lists may differ in length; missing entries are zero.
pub mod arith {
    use super::*;

    pub fn add<S: Scalar>(a: &[Matrix<S>], b: &[Matrix<S>]) -> Vec<Matrix<S>> {
        let n = a.first().or(b.first()).map_or(0, Matrix::rows);
        (0..a.len().max(b.len()))
            .map(|k| {
                let x = a.get(k).cloned().unwrap_or_else(|| Matrix::zeros(n, n));
                match b.get(k) {
                    Some(y) => x.add(y).expect("uniform block order"),
                    None => x,
                }
            })
            .collect()
    }

    pub fn sub<S: Scalar>(a: &[Matrix<S>], b: &[Matrix<S>]) -> Vec<Matrix<S>> {
        add(a, &b.iter().map(Matrix::neg).collect::<Vec<_>>())
    }

    /// `c · a(z)`.
    pub fn left_mul<S: Scalar>(c: &Matrix<S>, a: &[Matrix<S>]) -> Vec<Matrix<S>> {
        a.iter().map(|x| c.mul(x).expect("uniform block order")).collect()
    }

    /// `z · a(z)`.
    pub fn mul_z<S: Scalar>(a: &[Matrix<S>]) -> Vec<Matrix<S>> {
        let n = a.first().map_or(0, Matrix::rows);
        std::iter::once(Matrix::zeros(n, n)).chain(a.iter().cloned()).collect()
    }

    /// `a(z) / z`, or `None` when the constant term is nonzero (beyond
    /// `tol` in float mode).
    pub fn div_z<S: Scalar>(a: &[Matrix<S>], tol: f64) -> Option<Vec<Matrix<S>>> {
        match a.split_first() {
            Some((c0, rest)) if c0.near(&Matrix::zeros(c0.rows(), c0.cols()), tol) => Some(rest.to_vec()),
            Some(_) => None,
            None => Some(Vec::new()),
        }
    }

    /// Drops trailing zero coefficients.
    pub fn trim<S: Scalar>(mut a: Vec<Matrix<S>>) -> Vec<Matrix<S>> {
        while a.last().is_some_and(Matrix::is_zero) {
            a.pop();
        }
        a
    }
}

/// The two polynomial sequences attached to one factorization, with the
/// middle factor `D` they are biorthogonal against.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFamily<S> {
    pub p: Vec<MatrixPolynomial<S>>,
    pub q: Vec<MatrixPolynomial<S>>,
    pub d: BlockMatrix<S>,
}

impl<S: Scalar> PolynomialFamily<S> {
    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn block_order(&self) -> usize {
        self.d.block_order()
    }

    /// `(d_{2j,2j+1}, d_{2j+1,2j})` of a checkerboard `D`.
    pub fn d_pair(&self, j: usize) -> (&Matrix<S>, &Matrix<S>) {
        (self.d.block(2 * j, 2 * j + 1), self.d.block(2 * j + 1, 2 * j))
    }

    /// `d̂_{jj}` of a block-diagonal `D̂`.
    pub fn d_diag(&self, j: usize) -> &Matrix<S> {
        self.d.block(j, j)
    }
}

fn rows_to_polys<S: Scalar>(l: &BlockMatrix<S>, parity: impl Fn(usize) -> Parity) -> Result<Vec<MatrixPolynomial<S>>> {
    (0..l.rows())
        .map(|k| MatrixPolynomial::new((0..=k).map(|j| l.block(k, j).clone()).collect(), parity(k)))
        .collect()
}

/// `p_k` is row `k` of `L1`, `q_k` row `k` of `L2`; `p_{2j}` and `q_{2j}`
/// are even, `p_{2j+1}` and `q_{2j+1}` odd.
pub fn polys_from_factorization<S: Scalar>(f: &Factorization<S>) -> Result<PolynomialFamily<S>> {
    Ok(PolynomialFamily {
        p: rows_to_polys(&f.l1, Parity::of_index)?,
        q: rows_to_polys(&f.l2, Parity::of_index)?,
        d: f.d.clone(),
    })
}

/// Family of a diagonal (Christoffel-shifted) factorization; no parity tag.
pub fn polys_from_diagonal<S: Scalar>(f: &DiagonalFactorization<S>) -> Result<PolynomialFamily<S>> {
    Ok(PolynomialFamily {
        p: rows_to_polys(&f.l1, |_| Parity::None)?,
        q: rows_to_polys(&f.l2, |_| Parity::None)?,
        d: f.d.clone(),
    })
}

/// `⟨A, B⟩ = Σ_k Σ_l a_k m_{kl} b_l^T` on raw coefficient lists.
pub fn pairing_coeffs<S: Scalar>(a: &[Matrix<S>], b: &[Matrix<S>], gram: &CheckerboardGram<S>) -> Result<Matrix<S>> {
    let m = gram.size();
    if a.len() > m || b.len() > m {
        return Err(Error::OutOfRange(format!(
            "pairing of degrees {} and {} needs truncation above {m}",
            a.len().saturating_sub(1),
            b.len().saturating_sub(1)
        )));
    }
    let n = gram.block_order();
    let mut acc = Matrix::zeros(n, n);
    for (k, ak) in a.iter().enumerate() {
        if ak.is_zero() {
            continue;
        }
        for (l, bl) in b.iter().enumerate() {
            let mkl = gram.entry(k, l);
            if bl.is_zero() || mkl.is_zero() {
                continue;
            }
            acc = acc.add(&ak.mul(mkl)?.mul(&bl.transpose())?)?;
        }
    }
    Ok(acc)
}

pub fn pairing<S: Scalar>(
    a: &MatrixPolynomial<S>,
    b: &MatrixPolynomial<S>,
    gram: &CheckerboardGram<S>,
) -> Result<Matrix<S>> {
    pairing_coeffs(a.coeffs(), b.coeffs(), gram)
}

/// Expected `⟨p_j, q_k⟩` from the d-pairs: `d_{2i,2i+1}` at `(2i, 2i+1)`,
/// `d_{2i+1,2i}` at `(2i+1, 2i)`, zero elsewhere.
fn expected_pairing<S: Scalar>(fam: &PolynomialFamily<S>, j: usize, k: usize) -> Matrix<S> {
    let n = fam.block_order();
    let i = j / 2;
    if j % 2 == 0 && k == j + 1 {
        fam.d_pair(i).0.clone()
    } else if j % 2 == 1 && k + 1 == j {
        fam.d_pair(i).1.clone()
    } else {
        Matrix::zeros(n, n)
    }
}

/// Same grid read column-wise: `⟨p_k, q_{2i}⟩ = d_{2i+1,2i} δ_{2i+1,k}`,
/// `⟨p_k, q_{2i+1}⟩ = d_{2i,2i+1} δ_{2i,k}`.
fn expected_pairing_by_q<S: Scalar>(fam: &PolynomialFamily<S>, j: usize, k: usize) -> Matrix<S> {
    let n = fam.block_order();
    let i = k / 2;
    if k % 2 == 0 && j == k + 1 {
        fam.d_pair(i).1.clone()
    } else if k % 2 == 1 && j + 1 == k {
        fam.d_pair(i).0.clone()
    } else {
        Matrix::zeros(n, n)
    }
}

/// Checks `⟨p_j, q_k⟩` against the shifted δ-pattern for every pair in the
/// truncation, including the vanishing "usual sense" pairs `j == k`.
pub fn verify_biorthogonality<S: Scalar>(fam: &PolynomialFamily<S>, gram: &CheckerboardGram<S>, tol: f64) -> Report {
    let mut report = Report::new();
    let size = fam.size().min(gram.size());
    for j in 0..size {
        for k in 0..size {
            let expected = expected_pairing(fam, j, k);
            if expected != expected_pairing_by_q(fam, j, k) {
                report.flag(
                    "biorthogonality",
                    &[j, k],
                    false,
                    Some("p-side and q-side expectations disagree".into()),
                );
                continue;
            }
            match pairing(&fam.p[j], &fam.q[k], gram) {
                Ok(actual) => {
                    report.compare("biorthogonality", &[j, k], &actual, &expected, tol);
                }
                Err(e) => report.error("biorthogonality", &[j, k], e),
            }
        }
    }
    report
}

/// `⟨p_{2j}, z^k⟩ = 0` for `k <= 2j` and `d_{2j,2j+1}` at `k = 2j+1`;
/// `⟨p_{2j+1}, z^k⟩ = 0` for `k < 2j` and `k = 2j+1`, `d_{2j+1,2j}` at `k = 2j`.
pub fn verify_orthogonality_relations<S: Scalar>(
    fam: &PolynomialFamily<S>,
    gram: &CheckerboardGram<S>,
    tol: f64,
) -> Report {
    let mut report = Report::new();
    let size = fam.size().min(gram.size());
    let n = fam.block_order();
    for i in 0..size {
        let top = if i % 2 == 0 { i + 1 } else { i };
        for k in 0..=top.min(size - 1) {
            let expected = if i % 2 == 0 && k == i + 1 {
                fam.d_pair(i / 2).0.clone()
            } else if i % 2 == 1 && k + 1 == i {
                fam.d_pair(i / 2).1.clone()
            } else {
                Matrix::zeros(n, n)
            };
            match pairing(&fam.p[i], &MatrixPolynomial::monomial(k, n), gram) {
                Ok(actual) => {
                    report.compare("orthogonality", &[i, k], &actual, &expected, tol);
                }
                Err(e) => report.error("orthogonality", &[i, k], e),
            }
        }
    }
    report
}

/// Monicity and parity of every member of both sequences.
pub fn verify_family_structure<S: Scalar>(fam: &PolynomialFamily<S>) -> Report {
    let mut report = Report::new();
    for (name, seq) in [("p_structure", &fam.p), ("q_structure", &fam.q)] {
        for (k, poly) in seq.iter().enumerate() {
            let mut problems = Vec::new();
            if poly.degree() != k {
                problems.push(format!("degree {} at index {k}", poly.degree()));
            }
            if let Err(e) = poly.validate() {
                problems.push(e.to_string());
            }
            if poly.parity() != Parity::None && poly.parity() != Parity::of_index(k) {
                problems.push(format!("parity {:?} at index {k}", poly.parity()));
            }
            let pass = problems.is_empty();
            report.flag(name, &[k], pass, (!pass).then(|| problems.join("; ")));
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    P,
    Q,
}

/// Recomputes `p_k` or `q_k` from the orthogonality conditions by solving
/// against `M_eo^{[2j]}` or `M_oe^{[2j]}`. For `p` the unknown coefficient
/// row multiplies the condensed matrix from the left; for `q` the unknown
/// (transposed) coefficient column multiplies it from the right.
pub fn quasidet_poly<S: Scalar>(gram: &CheckerboardGram<S>, k: usize, side: Side) -> Result<MatrixPolynomial<S>> {
    let m = gram.size();
    if k >= m {
        return Err(Error::OutOfRange(format!("index {k} outside truncation {m}")));
    }
    let n = gram.block_order();
    let j = k / 2;
    let odd = k % 2;
    let mut coeffs = vec![Matrix::zeros(n, n); k + 1];
    coeffs[k] = Matrix::identity(n);
    if j > 0 {
        // (side, parity) -> (condensed matrix, known right-hand side)
        let (system, rhs) = match (side, odd) {
            (Side::P, 0) => (condensed_eo(gram, j)?, row(gram, j, |c| (2 * j, 2 * c + 1))?),
            (Side::P, _) => (condensed_oe(gram, j)?, row(gram, j, |c| (2 * j + 1, 2 * c))?),
            (Side::Q, 0) => (condensed_oe(gram, j)?, column(gram, j, |r| (2 * r + 1, 2 * j))?),
            (Side::Q, _) => (condensed_eo(gram, j)?, column(gram, j, |r| (2 * r, 2 * j + 1))?),
        };
        let inv = system.invert()?;
        let solution: Vec<Matrix<S>> = match side {
            Side::P => {
                let x = rhs.multiply(&inv)?;
                (0..j).map(|r| x.block(0, r).neg()).collect()
            }
            Side::Q => {
                let y = inv.multiply(&rhs)?;
                (0..j).map(|r| y.block(r, 0).neg().transpose()).collect()
            }
        };
        for (r, c) in solution.into_iter().enumerate() {
            coeffs[2 * r + odd] = c;
        }
    }
    MatrixPolynomial::new(coeffs, Parity::of_index(k))
}

fn row<S: Scalar>(gram: &CheckerboardGram<S>, len: usize, at: impl Fn(usize) -> (usize, usize)) -> Result<BlockMatrix<S>> {
    BlockMatrix::from_fn(1, len, gram.block_order(), |_, c| {
        let (i, j) = at(c);
        gram.entry(i, j).clone()
    })
}

fn column<S: Scalar>(gram: &CheckerboardGram<S>, len: usize, at: impl Fn(usize) -> (usize, usize)) -> Result<BlockMatrix<S>> {
    BlockMatrix::from_fn(len, 1, gram.block_order(), |r, _| {
        let (i, j) = at(r);
        gram.entry(i, j).clone()
    })
}

/// Monic orthogonal polynomial of the condensed moment functional
/// `⟨t^a, t^b⟩ = S_{a+b}`, with its norm `⟨P_j, P_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPolynomial<S> {
    /// Coefficients in `t`, lowest first; the last one is `I`.
    pub coeffs: Vec<Matrix<S>>,
    pub norm: Matrix<S>,
}

/// Solves the `j x j` Hankel system `c · [S_{r+c}] = -(S_j, ..., S_{2j-1})`
/// directly for each `j < count`.
pub fn classical_orthogonal<S: Scalar>(s: &[Matrix<S>], count: usize) -> Result<Vec<ClassicalPolynomial<S>>> {
    let n = s
        .first()
        .map(Matrix::rows)
        .ok_or(Error::InsufficientMoments { needed: 0, available: 0 })?;
    if count > 0 && s.len() < 2 * count - 1 {
        return Err(Error::InsufficientMoments {
            needed: 2 * count - 2,
            available: s.len(),
        });
    }
    (0..count)
        .map(|j| {
            let mut coeffs = vec![Matrix::zeros(n, n); j + 1];
            coeffs[j] = Matrix::identity(n);
            if j > 0 {
                let hankel = BlockMatrix::from_fn(j, j, n, |r, c| s[r + c].clone())?;
                let rhs = BlockMatrix::from_fn(1, j, n, |_, c| s[j + c].clone())?;
                let x = rhs.multiply(&hankel.invert()?)?;
                for (r, c) in coeffs.iter_mut().take(j).enumerate() {
                    *c = x.block(0, r).neg();
                }
            }
            let mut norm = Matrix::zeros(n, n);
            for (a, c) in coeffs.iter().enumerate() {
                norm = norm.add(&c.mul(&s[a + j])?)?;
            }
            Ok(ClassicalPolynomial { coeffs, norm })
        })
        .collect()
}

/// Identities forced by Hankel symmetry: `p_{2j+1} = z p_{2j}`, `q = p`,
/// `d_{2j,2j+1} = d_{2j+1,2j} = d~_j`, self-biorthogonality of `p`, and
/// `p_{2j}(z) = P~_j(z^2)` for the classical polynomials of `S`.
pub fn verify_hankel_specialization<S: Scalar>(fam: &PolynomialFamily<S>, s: &[Matrix<S>], tol: f64) -> Report {
    let mut report = Report::new();
    let size = fam.size();
    let n = fam.block_order();
    for (side, seq) in [(0, &fam.p), (1, &fam.q)] {
        for j in 0..size / 2 {
            report.compare_coeffs(
                "odd_is_z_times_even",
                &[j, side],
                seq[2 * j + 1].coeffs(),
                &arith::mul_z(seq[2 * j].coeffs()),
                tol,
            );
        }
    }
    let symmetric = s.iter().all(|m| *m == m.transpose());
    if !symmetric {
        report
            .notes
            .push("moments are not symmetric; q = p and self-biorthogonality not checked".into());
        return with_classical(report, fam, s, tol);
    }
    for k in 0..size {
        report.compare_coeffs("q_equals_p", &[k], fam.q[k].coeffs(), fam.p[k].coeffs(), tol);
    }
    let mut report = with_classical(report, fam, s, tol);
    let Some(classical) = classical_orthogonal(s, size / 2).ok() else {
        return report;
    };
    let gram = match unwrap_moments(s, n).and_then(|h| hankel_gram(&h, size)) {
        Ok(g) => g,
        Err(e) => {
            report.error("self_biorthogonality", &[], e);
            return report;
        }
    };
    for j in 0..size {
        for k in 0..size {
            let expected = if (j % 2 == 0 && k == j + 1) || (j % 2 == 1 && k + 1 == j) {
                classical[j / 2].norm.clone()
            } else {
                Matrix::zeros(n, n)
            };
            match pairing(&fam.p[j], &fam.p[k], &gram) {
                Ok(actual) => {
                    report.compare("self_biorthogonality", &[j, k], &actual, &expected, tol);
                }
                Err(e) => report.error("self_biorthogonality", &[j, k], e),
            }
        }
    }
    report
}

/// Pair blocks against the classical norms and `p_{2j}` against `P~_j(z^2)`.
fn with_classical<S: Scalar>(mut report: Report, fam: &PolynomialFamily<S>, s: &[Matrix<S>], tol: f64) -> Report {
    let n = fam.block_order();
    let classical = match classical_orthogonal(s, fam.size() / 2) {
        Ok(c) => c,
        Err(e) => {
            report.error("classical_oracle", &[], e);
            return report;
        }
    };
    for (j, cp) in classical.iter().enumerate() {
        let (d_eo, d_oe) = fam.d_pair(j);
        report.compare("d_pair_equals_condensed_norm", &[j, 0], d_eo, &cp.norm, tol);
        report.compare("d_pair_equals_condensed_norm", &[j, 1], d_oe, &cp.norm, tol);
        let mut in_z = vec![Matrix::zeros(n, n); 2 * j + 1];
        for (a, c) in cp.coeffs.iter().enumerate() {
            in_z[2 * a] = c.clone();
        }
        report.compare_coeffs("even_is_classical_at_z2", &[j], fam.p[2 * j].coeffs(), &in_z, tol);
    }
    report
}
