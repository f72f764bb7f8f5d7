//! Command dispatch. Domain errors become failed records; only ingest
//! problems are reported as errors.

use std::time::Instant;

use checkerboard::christoffel::{
    christoffel_transform, connector_from_d, connector_from_l, hat_polys_via_relation, verify_connector_action,
    verify_connector_subdiagonal, verify_q_relation, Connector,
};
use checkerboard::gram::CheckerboardGram;
use checkerboard::kernels::{
    hankel_kernels, kernel, kernel_terms, max_kernel_index, max_relation_index, verify_abc, verify_kernel_relation,
    KernelParity,
};
use checkerboard::ldu::{check_structure, factorize_checkerboard, hankel_factorize, reconstruct, Factorization};
use checkerboard::polys::{
    polys_from_diagonal, polys_from_factorization, quasidet_poly, verify_biorthogonality, verify_family_structure,
    verify_hankel_specialization, verify_orthogonality_relations, Side,
};
use checkerboard::{BlockMatrix, CheckRecord, Matrix, MatrixPolynomial, PolynomialFamily, Rational, Report, Scalar};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::{ConfigError, JobConfig, ScalarMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Factorize,
    Polys,
    Verify,
    Christoffel,
    Kernels,
    Hankel,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub nmax: Option<usize>,
    /// Overrides the job file's tolerance.
    pub tolerance: Option<f64>,
    pub emit_matrices: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub command: Command,
    pub pass: bool,
    pub scalar: ScalarMode,
    pub n: usize,
    pub m: usize,
    pub tolerance: f64,
    pub records: Vec<CheckRecord>,
    /// One line per failed record.
    pub failures: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub timing_ms: f64,
    #[serde(default)]
    pub outputs: Map<String, Value>,
}

impl JobReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

pub fn run(job: &JobConfig, command: Command, opts: &RunOptions) -> Result<JobReport, ConfigError> {
    let tol = opts.tolerance.unwrap_or(job.tolerance);
    let start = Instant::now();
    let (report, outputs) = match job.scalar {
        ScalarMode::Rational => dispatch::<Rational>(job, command, opts, tol)?,
        ScalarMode::Float => dispatch::<f64>(job, command, opts, tol)?,
    };
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let failures = report
        .failures()
        .map(|r| {
            let mut line = format!("{}{:?}: residual {}", r.name, r.indices, r.max_residual);
            if let Some(d) = &r.detail {
                line.push_str(": ");
                line.push_str(d);
            }
            line
        })
        .collect();
    log::info!("{command:?}: {} records in {timing_ms:.1} ms", report.records.len());
    Ok(JobReport {
        command,
        pass: report.passed(),
        scalar: job.scalar,
        n: job.n,
        m: job.m,
        tolerance: tol,
        failures,
        notes: report.notes.clone(),
        records: report.records,
        timing_ms,
        outputs,
    })
}

type Outcome = (Report, Map<String, Value>);

fn dispatch<S: Scalar>(job: &JobConfig, command: Command, opts: &RunOptions, tol: f64) -> Result<Outcome, ConfigError> {
    let gram = job.gram::<S>()?;
    let mut report = Report::new();
    let mut out = Map::new();
    match command {
        Command::Factorize => factorize_cmd(&gram, opts, tol, &mut report, &mut out),
        Command::Polys => polys_cmd(&gram, tol, &mut report, &mut out),
        Command::Verify => verify_cmd(&gram, tol, &mut report),
        Command::Christoffel => christoffel_cmd(&gram, tol, &mut report, &mut out),
        Command::Kernels => kernels_cmd(&gram, opts, tol, &mut report, &mut out),
        Command::Hankel => {
            let s = job.condensed::<S>()?;
            hankel_cmd(&gram, s, opts, tol, &mut report, &mut out)
        }
    }
    Ok((report, out))
}

pub fn matrix_json<S: Scalar>(m: &Matrix<S>) -> Value {
    Value::Array(
        m.row_vecs()
            .iter()
            .map(|row| Value::Array(row.iter().map(|x| Value::String(x.to_text())).collect()))
            .collect(),
    )
}

fn block_matrix_json<S: Scalar>(b: &BlockMatrix<S>) -> Value {
    matrix_json(&b.to_dense())
}

fn poly_json<S: Scalar>(p: &MatrixPolynomial<S>) -> Value {
    Value::Array(p.coeffs().iter().map(matrix_json).collect())
}

fn residual_record<S: Scalar>(report: &mut Report, name: &str, actual: &BlockMatrix<S>, expected: &BlockMatrix<S>, tol: f64) {
    let residual = actual.max_abs_diff(expected);
    report.push(CheckRecord {
        name: name.to_string(),
        indices: vec![],
        pass: actual.near(expected, tol),
        max_residual: residual,
        detail: None,
    });
}

/// Factorization plus the checks every command shares; `None` after a
/// failed record.
fn factor<S: Scalar>(gram: &CheckerboardGram<S>, tol: f64, report: &mut Report) -> Option<Factorization<S>> {
    match factorize_checkerboard(gram) {
        Ok(f) => {
            match reconstruct(&f) {
                Ok(r) => residual_record(report, "reconstruction", &r, gram.matrix(), tol),
                Err(e) => report.error("reconstruction", &[], e),
            }
            let structure = check_structure(&f);
            report.flag("factor_structure", &[], structure.is_ok(), structure.err());
            Some(f)
        }
        Err(checkerboard::Error::SingularPivot { level }) => {
            report.error("factorization", &[level], checkerboard::Error::SingularPivot { level });
            None
        }
        Err(e) => {
            report.error("factorization", &[], e);
            None
        }
    }
}

fn family<S: Scalar>(f: &Factorization<S>, report: &mut Report) -> Option<PolynomialFamily<S>> {
    match polys_from_factorization(f) {
        Ok(fam) => Some(fam),
        Err(e) => {
            report.error("polynomials", &[], e);
            None
        }
    }
}

fn factorize_cmd<S: Scalar>(
    gram: &CheckerboardGram<S>,
    opts: &RunOptions,
    tol: f64,
    report: &mut Report,
    out: &mut Map<String, Value>,
) {
    let Some(f) = factor(gram, tol, report) else { return };
    let pairs: Vec<Value> = f
        .d_pairs()
        .iter()
        .enumerate()
        .map(|(j, (upper, lower))| json!({"j": j, "d_even_odd": matrix_json(upper), "d_odd_even": matrix_json(lower)}))
        .collect();
    out.insert("d_pairs".into(), Value::Array(pairs));
    if opts.emit_matrices {
        out.insert("l1".into(), block_matrix_json(&f.l1));
        out.insert("d".into(), block_matrix_json(&f.d));
        out.insert("l2".into(), block_matrix_json(&f.l2));
    }
}

fn polys_cmd<S: Scalar>(gram: &CheckerboardGram<S>, tol: f64, report: &mut Report, out: &mut Map<String, Value>) {
    let Some(f) = factor(gram, tol, report) else { return };
    let Some(fam) = family(&f, report) else { return };
    report.extend(verify_family_structure(&fam));
    for k in 0..fam.size() {
        for (side, name, expected) in [(Side::P, "quasidet_p", &fam.p[k]), (Side::Q, "quasidet_q", &fam.q[k])] {
            match quasidet_poly(gram, k, side) {
                Ok(via) => {
                    report.compare_coeffs(name, &[k], via.coeffs(), expected.coeffs(), tol);
                }
                Err(e) => report.error(name, &[k], e),
            }
        }
    }
    out.insert("p".into(), Value::Array(fam.p.iter().map(poly_json).collect()));
    out.insert("q".into(), Value::Array(fam.q.iter().map(poly_json).collect()));
}

fn verify_cmd<S: Scalar>(gram: &CheckerboardGram<S>, tol: f64, report: &mut Report) {
    let Some(f) = factor(gram, tol, report) else { return };
    let Some(fam) = family(&f, report) else { return };
    report.extend(verify_family_structure(&fam));
    report.extend(verify_biorthogonality(&fam, gram, tol));
    report.extend(verify_orthogonality_relations(&fam, gram, tol));
}

fn connector_json<S: Scalar>(c: &Connector<S>) -> Value {
    json!({
        "sigma": block_matrix_json(&c.sigma),
        "subdiagonal": (0..c.subdiag.len()).map(|j| matrix_json(c.sub(j))).collect::<Vec<_>>(),
    })
}

fn christoffel_cmd<S: Scalar>(gram: &CheckerboardGram<S>, tol: f64, report: &mut Report, out: &mut Map<String, Value>) {
    let Some(f) = factor(gram, tol, report) else { return };
    let Some(fam) = family(&f, report) else { return };
    let (shifted, hat_f) = match christoffel_transform(gram) {
        Ok(t) => t,
        Err(e) => {
            report.error("christoffel_transform", &[], e);
            return;
        }
    };
    match reconstruct(&hat_f) {
        Ok(r) => residual_record(report, "shifted_reconstruction", &r, &shifted, tol),
        Err(e) => report.error("shifted_reconstruction", &[], e),
    }
    let hat_fam = match polys_from_diagonal(&hat_f) {
        Ok(h) => h,
        Err(e) => {
            report.error("hat_polynomials", &[], e);
            return;
        }
    };
    out.insert(
        "d_hat".into(),
        Value::Array((0..hat_fam.size()).map(|j| matrix_json(hat_fam.d_diag(j))).collect()),
    );
    out.insert("p_hat".into(), Value::Array(hat_fam.p.iter().map(poly_json).collect()));

    let from_l = connector_from_l(&f, &hat_f, tol);
    let from_d = connector_from_d(&f, &hat_f, tol);
    if let Err(e) = &from_l {
        report.error("connector_from_l", &[], e);
    }
    if let Err(e) = &from_d {
        report.error("connector_from_d", &[], e);
    }
    if let (Ok(a), Ok(b)) = (&from_l, &from_d) {
        residual_record(report, "connector_routes", &a.sigma, &b.sigma, tol);
    }
    if let Ok(conn) = &from_l {
        out.insert("connector".into(), connector_json(conn));
        report.extend(verify_connector_subdiagonal(conn, &fam.d, &hat_f.d, tol));
        report.extend(verify_connector_action(conn, &fam, &hat_fam.p, tol));
        report.extend(verify_q_relation(conn, &fam, &hat_fam, tol));
    }
    match hat_polys_via_relation(&fam, tol) {
        Ok(via) => {
            for (k, (a, b)) in via.iter().zip(&hat_fam.p).enumerate() {
                report.compare_coeffs("hat_polys_relation", &[k], a.coeffs(), b.coeffs(), tol);
            }
        }
        Err(e) => report.error("hat_polys_relation", &[], e),
    }
}

fn kernel_map<S: Scalar>(k: &checkerboard::kernels::KernelPolynomial<S>) -> Value {
    Value::Object(kernel_terms(k).into_iter().map(|(key, m)| (key, matrix_json(&m))).collect())
}

/// `nmax` from the options, defaulting to the largest index that fits.
fn kernel_range<S: Scalar>(fam: &PolynomialFamily<S>, opts: &RunOptions, report: &mut Report) -> Option<usize> {
    let fits = max_kernel_index(fam);
    match (opts.nmax, fits) {
        (Some(k), Some(max)) if k <= max => Some(k),
        (Some(k), _) => {
            report.flag(
                "kernel_range",
                &[k],
                false,
                Some(format!("nmax {k} exceeds the largest kernel index {fits:?}")),
            );
            None
        }
        (None, max) => max,
    }
}

fn kernels_cmd<S: Scalar>(
    gram: &CheckerboardGram<S>,
    opts: &RunOptions,
    tol: f64,
    report: &mut Report,
    out: &mut Map<String, Value>,
) {
    let Some(f) = factor(gram, tol, report) else { return };
    let Some(fam) = family(&f, report) else { return };
    let Some(nmax) = kernel_range(&fam, opts, report) else { return };
    let mut kernels = Map::new();
    for n in 0..=nmax {
        for parity in [KernelParity::Even, KernelParity::Odd] {
            match kernel(&fam, parity, n) {
                Ok(k) => {
                    kernels.insert(format!("K[{}]", parity.label(n)), kernel_map(&k));
                }
                Err(e) => report.error("kernel", &[parity.label(n)], e),
            }
        }
    }
    out.insert("kernels".into(), Value::Object(kernels));
    report.extend(verify_abc(&f, &fam, nmax, tol));

    let hat_fam = christoffel_transform(gram).and_then(|(_, hat_f)| polys_from_diagonal(&hat_f));
    match hat_fam {
        Ok(hat_fam) => match max_relation_index(&fam, &hat_fam) {
            Some(max) => {
                for n in 0..=max.min(nmax) {
                    report.extend(verify_kernel_relation(&fam, &hat_fam, n, tol));
                }
            }
            None => report.notes.push("truncation too small for the kernel relation".into()),
        },
        Err(e) => report
            .notes
            .push(format!("shifted matrix not factorizable ({e}); kernel relation skipped")),
    }
}

fn hankel_cmd<S: Scalar>(
    gram: &CheckerboardGram<S>,
    s: Option<Vec<Matrix<S>>>,
    opts: &RunOptions,
    tol: f64,
    report: &mut Report,
    out: &mut Map<String, Value>,
) {
    let Some(s) = s else {
        report.flag("hankel_input", &[], false, Some("Gram matrix is not Hankel".into()));
        return;
    };
    out.insert("condensed_moments".into(), Value::Array(s.iter().map(matrix_json).collect()));
    let Some(f) = factor(gram, tol, report) else { return };
    let Some(fam) = family(&f, report) else { return };
    report.extend(verify_hankel_specialization(&fam, &s, tol));
    if let Some(nmax) = kernel_range(&fam, opts, report) {
        report.extend(hankel_kernels(&fam, &s, nmax, tol));
    }
    match hankel_factorize(&s, gram.size()) {
        Ok(kron) => {
            for (name, a, b) in [
                ("kronecker_route_l1", &kron.l1, &f.l1),
                ("kronecker_route_d", &kron.d, &f.d),
                ("kronecker_route_l2", &kron.l2, &f.l2),
            ] {
                residual_record(report, name, a, b, tol);
            }
        }
        Err(e) => report.error("kronecker_route", &[], e),
    }
}
