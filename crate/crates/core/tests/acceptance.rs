mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use checkerboard::christoffel::{christoffel_data, verify_christoffel, verify_connector_action, verify_connector_subdiagonal, Connector};
use checkerboard::gram::{hankel_gram, unwrap_moments, CheckerboardGram};
use checkerboard::kernels::{
    abc_matrices, abc_representation_with, cyclic_theta, kernel, max_kernel_index, max_relation_index, verify_abc,
    verify_kernel_relation, KernelParity,
};
use checkerboard::ldu::{check_structure, factorize_checkerboard, hankel_factorize, reconstruct, Factorization};
use checkerboard::polys::{
    classical_orthogonal, pairing, polys_from_diagonal, polys_from_factorization, quasidet_poly, verify_biorthogonality,
    verify_family_structure, verify_hankel_specialization, Side,
};
use checkerboard::{BlockMatrix, Error, Matrix, PolynomialFamily, Report, Scalar};
use common::{first_singular_level, from_factors, random_inputs, shift_is_quasi_definite, Q};
use num_traits::ToPrimitive;
use rand::Rng;

const SEED: u64 = 0x5eed_c4ec;
const COUNT: usize = 120;

struct Case {
    gram: CheckerboardGram<Q>,
    f: Factorization<Q>,
    fam: PolynomialFamily<Q>,
    shift_ok: bool,
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(&f).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    })
}

fn failures(report: &Report) -> String {
    report
        .failures()
        .take(3)
        .map(|r| format!("{}{:?} {}", r.name, r.indices, r.detail.clone().unwrap_or_default()))
        .collect::<Vec<_>>()
        .join("; ")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn all_ok(results: Vec<Result<(), String>>) -> Result<(), String> {
    let errs: Vec<_> = results.into_iter().filter_map(Result::err).collect();
    ensure(errs.is_empty(), || format!("{} inputs failed, first: {}", errs.len(), errs[0]))
}

fn criterion_1(cases: &[Case], singular: &[(CheckerboardGram<Q>, usize)]) -> Result<String, String> {
    all_ok(par_map(cases, |c| {
        let rebuilt = reconstruct(&c.f).map_err(|e| e.to_string())?;
        ensure(&rebuilt == c.gram.matrix(), || "reconstruction differs".into())
    }))?;
    all_ok(par_map(singular, |(g, level)| {
        let oracle = first_singular_level(g);
        ensure(oracle == Some(*level), || format!("oracle level {oracle:?}, built {level}"))?;
        match factorize_checkerboard(g) {
            Err(Error::SingularPivot { level: got }) if got == *level => Ok(()),
            other => Err(format!("expected SingularPivot({level}), got {:?}", other.err())),
        }
    }))?;
    Ok(format!(
        "{} exact reconstructions, {} singular-pivot levels",
        cases.len(),
        singular.len()
    ))
}

fn criterion_2(cases: &[Case]) -> Result<String, String> {
    all_ok(par_map(cases, |c| {
        check_structure(&c.f)?;
        let report = verify_family_structure(&c.fam);
        ensure(report.passed(), || failures(&report))
    }))?;
    Ok(format!("{} factorizations and families", cases.len()))
}

fn criterion_3(cases: &[Case]) -> Result<String, String> {
    let checked: usize = par_map(cases, |c| -> Result<usize, String> {
        for k in 0..c.gram.size() {
            for (side, expected) in [(Side::P, &c.fam.p[k]), (Side::Q, &c.fam.q[k])] {
                let poly = quasidet_poly(&c.gram, k, side).map_err(|e| e.to_string())?;
                ensure(&poly == expected, || format!("{side:?}_{k} differs"))?;
            }
        }
        Ok(2 * c.gram.size())
    })
    .into_iter()
    .sum::<Result<usize, String>>()?;
    Ok(format!("{checked} polynomials by both routes"))
}

fn criterion_4(cases: &[Case]) -> Result<String, String> {
    let checked: usize = par_map(cases, |c| -> Result<usize, String> {
        let report = verify_biorthogonality(&c.fam, &c.gram, 0.0);
        ensure(report.passed(), || failures(&report))?;
        for k in 0..c.gram.size() {
            let same = pairing(&c.fam.p[k], &c.fam.q[k], &c.gram).map_err(|e| e.to_string())?;
            ensure(same.is_zero(), || format!("<p_{k}, q_{k}> != 0"))?;
        }
        Ok(report.records.len())
    })
    .into_iter()
    .sum::<Result<usize, String>>()?;
    Ok(format!("{checked} pairings"))
}

fn criterion_5(cases: &[Case]) -> Result<String, String> {
    let results = par_map(cases, |c| -> Result<bool, String> {
        let data = christoffel_data(&c.gram, &c.f, &c.fam, 0.0);
        if !c.shift_ok {
            return match data {
                Err(Error::SingularPivot { .. }) => Ok(false),
                other => Err(format!("non-quasi-definite shift accepted: {:?}", other.err())),
            };
        }
        let data = data.map_err(|e| e.to_string())?;
        ensure(data.from_l == data.from_d, || "connector routes differ".into())?;
        let report = verify_christoffel(&data, &c.fam, 0.0);
        ensure(report.passed(), || failures(&report))?;
        Ok(true)
    });
    let used = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().filter(|&b| b).count();
    ensure(used >= cases.len() / 2, || format!("only {used} quasi-definite shifts"))?;
    Ok(format!("{used} of {} inputs have a quasi-definite shift", cases.len()))
}

fn criterion_6(cases: &[Case]) -> Result<String, String> {
    let counts = par_map(cases, |c| -> Result<(usize, usize), String> {
        let nmax = max_kernel_index(&c.fam).ok_or("family too small")?;
        let report = verify_abc(&c.f, &c.fam, nmax, 0.0);
        ensure(report.passed(), || failures(&report))?;
        let mut relations = 0;
        if c.shift_ok {
            let data = christoffel_data(&c.gram, &c.f, &c.fam, 0.0).map_err(|e| e.to_string())?;
            let hat = polys_from_diagonal(&data.factorization).map_err(|e| e.to_string())?;
            if let Some(rmax) = max_relation_index(&c.fam, &hat) {
                for n in 0..=rmax {
                    let report = verify_kernel_relation(&c.fam, &hat, n, 0.0);
                    ensure(report.passed(), || failures(&report))?;
                    relations += report.records.len();
                }
            }
        }
        Ok((report.records.len(), relations))
    });
    let (abc, rel) = counts
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold((0, 0), |(a, r), (x, y)| (a + x, r + y));
    Ok(format!("{abc} ABC records, {rel} kernel-relation records"))
}

/// Monic orthogonal polynomials of `L[t^k] = S_k` by Gram-Schmidt on plain
/// rational coefficient vectors, with their norms `L[P^2]`.
fn gram_schmidt(s: &[Q], count: usize) -> Vec<(Vec<Q>, Q)> {
    let functional = |p: &[Q], r: &[Q]| -> Q {
        let mut acc = Q::zero();
        for (a, pa) in p.iter().enumerate() {
            for (b, rb) in r.iter().enumerate() {
                acc += pa * rb * &s[a + b];
            }
        }
        acc
    };
    let mut out: Vec<(Vec<Q>, Q)> = Vec::new();
    for j in 0..count {
        let mut p = vec![Q::zero(); j + 1];
        p[j] = Q::from_i64(1);
        let monomial = p.clone();
        for (prev, norm) in &out {
            let c = functional(&monomial, prev) / norm;
            for (a, v) in prev.iter().enumerate() {
                p[a] -= &c * v;
            }
        }
        let norm = functional(&p, &p);
        out.push((p, norm));
    }
    out
}

fn criterion_7() -> Result<String, String> {
    let s_vals = [1, 0, 1, 0, 3, 0, 15];
    let s = common::scalars(&s_vals);
    let m = 8;
    let gram = hankel_gram(&unwrap_moments(&s, 1).map_err(|e| e.to_string())?, m).map_err(|e| e.to_string())?;
    let f = factorize_checkerboard(&gram).map_err(|e| e.to_string())?;
    let fam = polys_from_factorization(&f).map_err(|e| e.to_string())?;
    let oracle = gram_schmidt(&s_vals.map(Q::from_i64), m / 2);
    for (j, (coeffs, norm)) in oracle.iter().enumerate() {
        let mut expected = vec![Matrix::zeros(1, 1); 2 * j + 1];
        for (a, c) in coeffs.iter().enumerate() {
            expected[2 * a] = Matrix::scalar(1, c.clone());
        }
        ensure(fam.p[2 * j].coeffs() == expected.as_slice(), || format!("p_{} differs from oracle", 2 * j))?;
        let (d_eo, d_oe) = f.d_pair(j);
        let norm = Matrix::scalar(1, norm.clone());
        ensure(*d_eo == norm && *d_oe == norm, || format!("d-pair {j} differs from oracle norm"))?;
    }
    let library = classical_orthogonal(&s, m / 2).map_err(|e| e.to_string())?;
    for (j, (lib, (coeffs, _))) in library.iter().zip(&oracle).enumerate() {
        let lib_coeffs: Vec<Q> = lib.coeffs.iter().map(|c| c.get(0, 0).clone()).collect();
        ensure(&lib_coeffs == coeffs, || format!("classical polynomial {j} differs"))?;
    }
    let report = verify_hankel_specialization(&fam, &s, 0.0);
    ensure(report.passed(), || failures(&report))?;
    let kron = hankel_factorize(&s, m).map_err(|e| e.to_string())?;
    ensure(kron.l1 == f.l1 && kron.l2 == f.l2 && kron.d == f.d, || {
        "Kronecker route differs from direct route".into()
    })?;
    let p6: Vec<String> = fam.p[6].coeffs().iter().map(|c| c.get(0, 0).to_string()).collect();
    let norms: Vec<String> = oracle.iter().map(|(_, n)| n.to_string()).collect();
    Ok(format!("p_6 coefficients [{}], norms [{}]", p6.join(", "), norms.join(", ")))
}

fn to_float(g: &CheckerboardGram<Q>) -> CheckerboardGram<f64> {
    let n = g.block_order();
    let matrix = BlockMatrix::from_fn(g.size(), g.size(), n, |i, j| {
        let b = g.entry(i, j);
        Matrix::from_fn(n, n, |r, c| b.get(r, c).to_f64().unwrap())
    })
    .unwrap();
    CheckerboardGram::from_block_matrix(matrix).unwrap()
}

fn criterion_8() -> Result<String, String> {
    let tol = checkerboard::DEFAULT_TOLERANCE;
    let mut r = common::rng(SEED ^ 8);
    let mut worst: f64 = 0.0;
    let mut used = 0;
    while used < 20 {
        let exact = common::random_checkerboard(&mut r, 1, 8);
        if first_singular_level(&exact).is_some() || !shift_is_quasi_definite(&exact) {
            continue;
        }
        used += 1;
        let g = to_float(&exact);
        let f = factorize_checkerboard(&g).map_err(|e| e.to_string())?;
        let residual = reconstruct(&f).map_err(|e| e.to_string())?.max_abs_diff(g.matrix());
        worst = worst.max(residual);
        let fam = polys_from_factorization(&f).map_err(|e| e.to_string())?;
        let mut report = verify_abc(&f, &fam, 3, tol);
        let data = christoffel_data(&g, &f, &fam, tol).map_err(|e| e.to_string())?;
        let hat = polys_from_diagonal(&data.factorization).map_err(|e| e.to_string())?;
        for n in 0..=max_relation_index(&fam, &hat).unwrap_or(0) {
            report.extend(verify_kernel_relation(&fam, &hat, n, tol));
        }
        worst = report.records.iter().map(|r| r.max_residual).fold(worst, f64::max);
    }
    ensure(worst < tol, || format!("max residual {worst:e}"))?;
    Ok(format!("{used} float inputs, max residual {worst:.2e}"))
}

fn mutated_fails(label: &str, report: Report) -> Result<(), String> {
    ensure(!report.passed(), || format!("{label}: corruption went unnoticed"))
}

fn criterion_9(cases: &[Case]) -> Result<String, String> {
    let bump = |b: &Matrix<Q>| b.add(&Matrix::identity(b.rows())).unwrap();
    let picked: Vec<&Case> = cases.iter().filter(|c| c.shift_ok).take(12).collect();
    let mut r = common::rng(SEED ^ 9);
    let mut mutations = 0;
    for c in &picked {
        let size = c.gram.size();
        let k = r.gen_range(1..size);
        let a = r.gen_range(0..k);

        // factorization: one d-block
        let mut f = c.f.clone();
        let j = r.gen_range(0..size / 2);
        f.d.set(2 * j + 1, 2 * j, bump(f.d.block(2 * j + 1, 2 * j)));
        ensure(reconstruct(&f).unwrap() != *c.gram.matrix(), || "ldu: corrupted d-block reconstructs M".into())?;
        // factorization: one L1 entry in a forbidden slot
        let mut f = c.f.clone();
        f.l1.set(k, k - 1, Matrix::identity(c.gram.block_order()));
        ensure(check_structure(&f).is_err(), || "ldu: parity break unnoticed".into())?;

        // polynomials: one coefficient
        let mut fam = c.fam.clone();
        fam.p[k] = fam.p[k].with_coefficient(a, bump(&fam.p[k].coeffs()[a]));
        mutated_fails("biorthogonality", verify_biorthogonality(&fam, &c.gram, 0.0))?;

        // Christoffel: one σ entry, one D̂ block, one coefficient of p̂
        let data = christoffel_data(&c.gram, &c.f, &c.fam, 0.0).unwrap();
        let mut sigma = data.from_l.sigma.clone();
        let i = 2 * r.gen_range(0..data.from_l.size() / 2) + 1;
        sigma.set(i, i - 1, bump(sigma.block(i, i - 1)));
        let broken = Connector::new(sigma, 0.0).unwrap();
        mutated_fails("connector action", verify_connector_action(&broken, &c.fam, &data.hat_family.p, 0.0))?;
        let mut d_hat = data.factorization.d.clone();
        d_hat.set(i, i, bump(d_hat.block(i, i)));
        mutated_fails(
            "connector subdiagonal",
            verify_connector_subdiagonal(&data.from_l, &c.fam.d, &d_hat, 0.0),
        )?;
        let mut data2 = data.clone();
        let h = r.gen_range(1..data2.hat_family.size());
        data2.hat_family.p[h] = data2.hat_family.p[h].with_coefficient(0, bump(&data2.hat_family.p[h].coeffs()[0]));
        mutated_fails("christoffel suite", verify_christoffel(&data2, &c.fam, 0.0))?;

        // kernels: d̂ feeding the relation, Θ orientation, one d-block
        let mut hat = data.hat_family.clone();
        hat.d.set(0, 0, bump(hat.d.block(0, 0)));
        mutated_fails("kernel relation", verify_kernel_relation(&c.fam, &hat, 0, 0.0))?;
        if size >= 4 {
            let mut sel = abc_matrices(1, c.gram.block_order());
            sel.theta = cyclic_theta(1, c.gram.block_order());
            let wrong = abc_representation_with(&c.f, KernelParity::Even, 1, &sel).unwrap();
            let right = kernel(&c.fam, KernelParity::Even, 1).unwrap();
            ensure(wrong.distance(&right, 0.0).1 == false, || "ABC: cyclic Θ unnoticed".into())?;
        }
        let mut fam = c.fam.clone();
        fam.d.set(0, 1, bump(fam.d.block(0, 1)));
        mutated_fails("ABC", verify_abc(&c.f, &fam, 0, 0.0))?;
        mutations += 10;
    }

    // Hankel suite: one coefficient of a Gaussian-family polynomial
    let s = common::scalars(&[1, 0, 1, 0, 3, 0, 15]);
    let f = hankel_factorize(&s, 8).unwrap();
    let fam = polys_from_factorization(&f).unwrap();
    for k in 1..8 {
        let mut broken = fam.clone();
        broken.p[k] = fam.p[k].with_coefficient(k - 1, Matrix::identity(1));
        mutated_fails("hankel", verify_hankel_specialization(&broken, &s, 0.0))?;
        mutations += 1;
    }
    Ok(format!("{mutations} single-entry corruptions all detected"))
}

fn main() {
    let start = Instant::now();
    let grams = random_inputs(SEED, COUNT);
    let cases: Vec<Case> = par_map(&grams, |g| {
        let f = factorize_checkerboard(g).expect("random inputs are quasi-definite");
        let fam = polys_from_factorization(&f).unwrap();
        Case {
            gram: g.clone(),
            f,
            fam,
            shift_ok: shift_is_quasi_definite(g),
        }
    });
    let mut r = common::rng(SEED ^ 1);
    let singular: Vec<(CheckerboardGram<Q>, usize)> = (0..30)
        .map(|i| {
            let n = 1 + i % 3;
            let m = 2 * r.gen_range(2..=5);
            let level = r.gen_range(0..m / 2);
            (from_factors(&mut r, n, m, Some(level)), level)
        })
        .collect();
    println!(
        "acceptance: {} random inputs (seed {SEED:#x}), setup {} ms",
        cases.len(),
        start.elapsed().as_millis()
    );

    type Check<'a> = (&'a str, Box<dyn Fn() -> Result<String, String> + 'a>);
    let checks: Vec<Check> = vec![
        ("reconstruction and singular pivots", Box::new(|| criterion_1(&cases, &singular))),
        ("structural patterns", Box::new(|| criterion_2(&cases))),
        ("route equivalence", Box::new(|| criterion_3(&cases))),
        ("biorthogonality grid", Box::new(|| criterion_4(&cases))),
        ("christoffel transformation", Box::new(|| criterion_5(&cases))),
        ("kernels and ABC", Box::new(|| criterion_6(&cases))),
        ("gaussian golden values", Box::new(criterion_7)),
        ("float mode", Box::new(criterion_8)),
        ("falsifiability", Box::new(|| criterion_9(&cases))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} ({ms} ms)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail} ({ms} ms)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {} ms",
        checks.len() - failed,
        checks.len(),
        start.elapsed().as_millis()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
