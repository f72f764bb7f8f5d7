//! Christoffel-Darboux kernels of `M` and `M̂`, the relation between them,
//! and the matrix ("ABC") representation through `Θ`, `Π_e`, `Π_o`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldu::Factorization;
use crate::linalg::{BlockMatrix, Matrix};
use crate::polys::{classical_orthogonal, PolynomialFamily};
use crate::report::Report;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelParity {
    Even,
    Odd,
}

impl KernelParity {
    /// Kernel label `2n` or `2n+1`.
    pub fn label(self, n: usize) -> usize {
        match self {
            KernelParity::Even => 2 * n,
            KernelParity::Odd => 2 * n + 1,
        }
    }
}

/// Bivariate matrix polynomial `Σ_{a,b} ω^a K[a][b] z^b`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPolynomial<S> {
    n: usize,
    coeffs: Vec<Vec<Matrix<S>>>,
}

impl<S: Scalar> KernelPolynomial<S> {
    pub fn zero(n: usize) -> Self {
        Self { n, coeffs: Vec::new() }
    }

    pub fn block_order(&self) -> usize {
        self.n
    }

    /// Block multiplying `ω^a z^b`.
    pub fn get(&self, a: usize, b: usize) -> Matrix<S> {
        self.coeffs
            .get(a)
            .and_then(|row| row.get(b))
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(self.n, self.n))
    }

    fn add_at(&mut self, a: usize, b: usize, value: &Matrix<S>) {
        if value.is_zero() {
            return;
        }
        let width = self.coeffs.first().map_or(0, Vec::len).max(b + 1);
        let zero = Matrix::zeros(self.n, self.n);
        if self.coeffs.len() <= a {
            self.coeffs.resize(a + 1, Vec::new());
        }
        for row in &mut self.coeffs {
            row.resize(width, zero.clone());
        }
        self.coeffs[a][b] = self.coeffs[a][b].add(value).expect("uniform block order");
    }

    /// Adds `q^T(ω) · mid · p(z)` given coefficient lists of `q` and `p`.
    pub fn add_term(&mut self, q: &[Matrix<S>], mid: &Matrix<S>, p: &[Matrix<S>]) -> Result<()> {
        for (a, qa) in q.iter().enumerate() {
            if qa.is_zero() {
                continue;
            }
            let left = qa.transpose().mul(mid)?;
            for (b, pb) in p.iter().enumerate() {
                if !pb.is_zero() {
                    self.add_at(a, b, &left.mul(pb)?);
                }
            }
        }
        Ok(())
    }

    /// Reads `K[a][b]` off the blocks of a square matrix `A` in
    /// `X(ω)^T A X(z)`.
    pub fn from_sandwich(a: &BlockMatrix<S>) -> Self {
        let mut k = Self::zero(a.block_order());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                k.add_at(i, j, a.block(i, j));
            }
        }
        k
    }

    /// Nonzero blocks as `(a, b, K[a][b])`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Matrix<S>)> {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().enumerate().map(move |(b, m)| (a, b, m)))
            .filter(|(_, _, m)| !m.is_zero())
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.coeffs.len(), self.coeffs.first().map_or(0, Vec::len))
    }

    pub fn evaluate(&self, z: &S, w: &S) -> Matrix<S> {
        let mut acc = Matrix::zeros(self.n, self.n);
        let mut wa = S::one();
        for row in &self.coeffs {
            let mut zb = S::one();
            for c in row {
                acc = acc.add(&c.scale(&wa.mul(&zb))).expect("uniform block order");
                zb = zb.mul(z);
            }
            wa = wa.mul(w);
        }
        acc
    }

    /// `z · K(z, ω)`.
    pub fn mul_z(&self) -> Self {
        let mut k = Self::zero(self.n);
        for (a, b, m) in self.entries() {
            k.add_at(a, b + 1, m);
        }
        k
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut k = self.clone();
        for (a, b, m) in other.entries() {
            k.add_at(a, b, m);
        }
        k
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut k = self.clone();
        for (a, b, m) in other.entries() {
            k.add_at(a, b, &m.neg());
        }
        k
    }

    /// `(max residual, equal under the scalar mode)` over the union of both
    /// supports.
    pub fn distance(&self, other: &Self, tol: f64) -> (f64, bool) {
        let (ra, rb) = self.degrees();
        let (oa, ob) = other.degrees();
        let mut residual: f64 = 0.0;
        let mut pass = true;
        for a in 0..ra.max(oa) {
            for b in 0..rb.max(ob) {
                let (x, y) = (self.get(a, b), other.get(a, b));
                residual = residual.max(x.max_abs_diff(&y));
                pass &= x.near(&y, tol);
            }
        }
        (residual, pass)
    }
}

fn compare_kernels<S: Scalar>(
    report: &mut Report,
    name: &str,
    indices: &[usize],
    actual: &KernelPolynomial<S>,
    expected: &KernelPolynomial<S>,
    tol: f64,
) -> bool {
    let (residual, pass) = actual.distance(expected, tol);
    report.push(crate::report::CheckRecord {
        name: name.to_string(),
        indices: indices.to_vec(),
        pass,
        max_residual: residual,
        detail: None,
    });
    pass
}

fn require_size<S: Scalar>(fam: &PolynomialFamily<S>, needed: usize) -> Result<()> {
    if fam.size() < needed {
        return Err(Error::OutOfRange(format!(
            "kernel needs {needed} polynomials, family has {}",
            fam.size()
        )));
    }
    Ok(())
}

/// `K^{[2n]} = Σ_{j<=n} q_{2j+1}^T d_{2j,2j+1}^{-1} p_{2j}`,
/// `K^{[2n+1]} = Σ_{j<=n} q_{2j}^T d_{2j+1,2j}^{-1} p_{2j+1}`.
pub fn kernel<S: Scalar>(fam: &PolynomialFamily<S>, parity: KernelParity, n: usize) -> Result<KernelPolynomial<S>> {
    require_size(fam, 2 * n + 2)?;
    let mut k = KernelPolynomial::zero(fam.block_order());
    for j in 0..=n {
        let (d_eo, d_oe) = fam.d_pair(j);
        let (q, mid, p) = match parity {
            KernelParity::Even => (&fam.q[2 * j + 1], d_eo.inverse()?, &fam.p[2 * j]),
            KernelParity::Odd => (&fam.q[2 * j], d_oe.inverse()?, &fam.p[2 * j + 1]),
        };
        k.add_term(q.coeffs(), &mid, p.coeffs())?;
    }
    Ok(k)
}

/// `K̂^{[2n]} = Σ_{j<=n} q̂_{2j}^T d̂_{2j,2j}^{-1} p̂_{2j}`, and the odd
/// companion over odd indices.
pub fn hat_kernel<S: Scalar>(
    hat_fam: &PolynomialFamily<S>,
    parity: KernelParity,
    n: usize,
) -> Result<KernelPolynomial<S>> {
    require_size(hat_fam, 2 * n + 2)?;
    let mut k = KernelPolynomial::zero(hat_fam.block_order());
    for j in 0..=n {
        let i = parity.label(j);
        k.add_term(hat_fam.q[i].coeffs(), &hat_fam.d_diag(i).inverse()?, hat_fam.p[i].coeffs())?;
    }
    Ok(k)
}

/// Largest `n` for which `K^{[2n]}` and `K^{[2n+1]}` fit in the family.
pub fn max_kernel_index<S: Scalar>(fam: &PolynomialFamily<S>) -> Option<usize> {
    (fam.size() / 2).checked_sub(1)
}

/// Largest `n` for which the kernel relation can be checked: it needs
/// `p_{2n+2}` and `K̂^{[2n+1]}`.
pub fn max_relation_index<S: Scalar>(fam: &PolynomialFamily<S>, hat_fam: &PolynomialFamily<S>) -> Option<usize> {
    let by_fam = fam.size().checked_sub(3)? / 2;
    let by_hat = (hat_fam.size() / 2).checked_sub(1)?;
    Some(by_fam.min(by_hat))
}

/// `K^{[2n]} = z K̂^{[2n+1]} - q̂_{2n+1}^T d̂_{2n+1,2n+1}^{-1} p_{2n+2}` and
/// `K^{[2n+1]} = z K̂^{[2n]}`, as coefficient tensors.
pub fn verify_kernel_relation<S: Scalar>(
    fam: &PolynomialFamily<S>,
    hat_fam: &PolynomialFamily<S>,
    n: usize,
    tol: f64,
) -> Report {
    let mut report = Report::new();
    let even = (|| -> Result<(KernelPolynomial<S>, KernelPolynomial<S>)> {
        require_size(fam, 2 * n + 3)?;
        let lhs = kernel(fam, KernelParity::Even, n)?;
        let mut correction = KernelPolynomial::zero(fam.block_order());
        let i = 2 * n + 1;
        correction.add_term(
            hat_fam.q[i].coeffs(),
            &hat_fam.d_diag(i).inverse()?,
            fam.p[2 * n + 2].coeffs(),
        )?;
        let rhs = hat_kernel(hat_fam, KernelParity::Odd, n)?.mul_z().sub(&correction);
        Ok((lhs, rhs))
    })();
    match even {
        Ok((lhs, rhs)) => {
            compare_kernels(&mut report, "kernel_relation_even", &[n], &lhs, &rhs, tol);
        }
        Err(e) => report.error("kernel_relation_even", &[n], e),
    }
    let odd = (|| -> Result<(KernelPolynomial<S>, KernelPolynomial<S>)> {
        Ok((
            kernel(fam, KernelParity::Odd, n)?,
            hat_kernel(hat_fam, KernelParity::Even, n)?.mul_z(),
        ))
    })();
    match odd {
        Ok((lhs, rhs)) => {
            compare_kernels(&mut report, "kernel_relation_odd", &[n], &lhs, &rhs, tol);
        }
        Err(e) => report.error("kernel_relation_odd", &[n], e),
    }
    report
}

/// `Θ`, `Π_e = diag(I, 0, I, 0, ...)`, `Π_o = diag(0, I, 0, I, ...)` at
/// `2n + 2` block rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMatrices<S> {
    pub theta: BlockMatrix<S>,
    pub pi_e: BlockMatrix<S>,
    pub pi_o: BlockMatrix<S>,
}

fn block_pattern<S: Scalar>(size: usize, n: usize, f: impl Fn(usize, usize) -> bool) -> BlockMatrix<S> {
    BlockMatrix::from_fn(size, size, n, |i, j| {
        if f(i, j) {
            Matrix::identity(n)
        } else {
            Matrix::zeros(n, n)
        }
    })
    .expect("square pattern")
}

/// Selection matrices with `Θ` swapping the two members of every index pair
/// `(2j, 2j+1)`, which turns `diag(d_{0,1}, d_{1,0}, ...)` into `D`.
pub fn abc_matrices<S: Scalar>(nmax: usize, n: usize) -> SelectionMatrices<S> {
    let size = 2 * nmax + 2;
    SelectionMatrices {
        theta: block_pattern(size, n, |i, j| j == (i ^ 1)),
        pi_e: block_pattern(size, n, |i, j| i == j && i % 2 == 0),
        pi_o: block_pattern(size, n, |i, j| i == j && i % 2 == 1),
    }
}

/// Cyclic down-shift permutation (`I` at `(0, last)` and `(i, i-1)`). Agrees
/// with the pair swap only at `nmax = 0`.
pub fn cyclic_theta<S: Scalar>(nmax: usize, n: usize) -> BlockMatrix<S> {
    let size = 2 * nmax + 2;
    block_pattern(size, n, |i, j| j == (i + size - 1) % size)
}

/// `K^{[2n]} = X(ω)^T Π_o M_e^{-1} Π_e X(z)` and
/// `K^{[2n+1]} = X(ω)^T Π_e M_o^{-1} Π_o X(z)`.
pub fn abc_representation<S: Scalar>(
    f: &Factorization<S>,
    parity: KernelParity,
    n: usize,
) -> Result<KernelPolynomial<S>> {
    abc_representation_with(f, parity, n, &abc_matrices(n, f.block_order()))
}

/// As [`abc_representation`], with caller-supplied selection matrices.
pub fn abc_representation_with<S: Scalar>(
    f: &Factorization<S>,
    parity: KernelParity,
    n: usize,
    sel: &SelectionMatrices<S>,
) -> Result<KernelPolynomial<S>> {
    let size = 2 * n + 2;
    if f.size() < size {
        return Err(Error::OutOfRange(format!(
            "ABC representation at n = {n} needs truncation {size}, have {}",
            f.size()
        )));
    }
    if sel.theta.rows() != size {
        return Err(Error::ShapeMismatch(format!(
            "selection matrices of size {} for truncation {size}",
            sel.theta.rows()
        )));
    }
    let block_order = f.block_order();
    let mut diag = BlockMatrix::zeros(size, size, block_order);
    for j in 0..size / 2 {
        let (d_eo, d_oe) = f.d_pair(j);
        let (first, second) = match parity {
            KernelParity::Even => (d_eo, d_oe),
            KernelParity::Odd => (d_oe, d_eo),
        };
        diag.set(2 * j, 2 * j, first.clone());
        diag.set(2 * j + 1, 2 * j + 1, second.clone());
    }
    let (middle, left, right) = match parity {
        KernelParity::Even => (diag.multiply(&sel.theta)?, &sel.pi_o, &sel.pi_e),
        KernelParity::Odd => (sel.theta.multiply(&diag)?, &sel.pi_e, &sel.pi_o),
    };
    let l1_inv = f.l1.leading(size).invert()?;
    let l2_inv_t = f.l2.leading(size).invert()?.transpose();
    let m = l1_inv.multiply(&middle)?.multiply(&l2_inv_t)?;
    let sandwich = left.multiply(&m.invert()?)?.multiply(right)?;
    Ok(KernelPolynomial::from_sandwich(&sandwich))
}

/// ABC tensor against the sum definition for both parities and all
/// `n <= nmax`.
pub fn verify_abc<S: Scalar>(f: &Factorization<S>, fam: &PolynomialFamily<S>, nmax: usize, tol: f64) -> Report {
    let mut report = Report::new();
    for n in 0..=nmax {
        let sel = abc_matrices::<S>(n, f.block_order());
        let theta_ok = sel
            .theta
            .multiply(&sel.theta.transpose())
            .map(|p| p == BlockMatrix::identity(2 * n + 2, f.block_order()))
            .unwrap_or(false);
        report.flag("theta_orthogonal", &[n], theta_ok, None);
        for parity in [KernelParity::Even, KernelParity::Odd] {
            let name = match parity {
                KernelParity::Even => "abc_even",
                KernelParity::Odd => "abc_odd",
            };
            match (abc_representation_with(f, parity, n, &sel), kernel(fam, parity, n)) {
                (Ok(abc), Ok(sum)) => {
                    compare_kernels(&mut report, name, &[n], &abc, &sum, tol);
                }
                (Err(e), _) | (_, Err(e)) => report.error(name, &[n], e),
            }
        }
    }
    report
}

/// Hankel forms `K^{[2n]} = ω Σ q_{2j}^T(ω) d~_j^{-1} p_{2j}(z)` and
/// `K^{[2n+1]} = z Σ q_{2j}^T(ω) d~_j^{-1} p_{2j}(z)`, with `d~_j` from the
/// classical polynomials of `S`, plus the mirror symmetry between the two
/// when every `S_k` is symmetric (then also `q = p`).
pub fn hankel_kernels<S: Scalar>(fam: &PolynomialFamily<S>, s: &[Matrix<S>], nmax: usize, tol: f64) -> Report {
    let mut report = Report::new();
    let classical = match classical_orthogonal(s, nmax + 1) {
        Ok(c) => c,
        Err(e) => {
            report.error("hankel_kernel", &[], e);
            return report;
        }
    };
    let symmetric = s.iter().all(|m| *m == m.transpose());
    if !symmetric {
        report
            .notes
            .push("moments are not symmetric; kernel mirror symmetry not checked".into());
    }
    let n_order = fam.block_order();
    for n in 0..=nmax {
        let forms = (|| -> Result<(KernelPolynomial<S>, KernelPolynomial<S>)> {
            require_size(fam, 2 * n + 2)?;
            let mut base = KernelPolynomial::zero(n_order);
            for (j, cp) in classical.iter().enumerate().take(n + 1) {
                base.add_term(fam.q[2 * j].coeffs(), &cp.norm.inverse()?, fam.p[2 * j].coeffs())?;
            }
            let mut even = KernelPolynomial::zero(n_order);
            for (a, b, m) in base.entries() {
                even.add_at(a + 1, b, m);
            }
            Ok((even, base.mul_z()))
        })();
        let (even_form, odd_form) = match forms {
            Ok(f) => f,
            Err(e) => {
                report.error("hankel_kernel", &[n], e);
                continue;
            }
        };
        let even = kernel(fam, KernelParity::Even, n);
        let odd = kernel(fam, KernelParity::Odd, n);
        match &even {
            Ok(k) => {
                compare_kernels(&mut report, "hankel_kernel_even", &[n], k, &even_form, tol);
            }
            Err(e) => report.error("hankel_kernel_even", &[n], e),
        }
        match &odd {
            Ok(k) => {
                compare_kernels(&mut report, "hankel_kernel_odd", &[n], k, &odd_form, tol);
            }
            Err(e) => report.error("hankel_kernel_odd", &[n], e),
        }
        if let (true, Ok(even), Ok(odd)) = (symmetric, &even, &odd) {
            let mut mirrored = KernelPolynomial::zero(n_order);
            for (a, b, m) in even.entries() {
                mirrored.add_at(b, a, &m.transpose());
            }
            compare_kernels(&mut report, "hankel_kernel_mirror", &[n], &mirrored, odd, tol);
        }
    }
    report
}

/// `(ω^a z^b, block)` pairs for display, skipping zeros.
pub fn kernel_terms<S: Scalar>(k: &KernelPolynomial<S>) -> Vec<(String, Matrix<S>)> {
    k.entries()
        .map(|(a, b, m)| (format!("w^{a} z^{b}"), m.clone()))
        .collect()
}
