use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use symfact::displacement::{displacement_factor, hankel_inverse_factor, DisplacementInput, DisplacementOptions};
use symfact::hankel::{hankel_factor, hankel_levels};
use symfact::io::{dense_to_json, hankel_to_json, parse_matrix, parse_vector, toeplitz_to_json, vector_to_json, MatrixDoc};
use symfact::krylov::{krylov_demo, random_sparse, KrylovSpec, SparseMatrix};
use symfact::sos::{certificate, Polynomial};
use symfact::structured::pad_to_power_of_two;
use symfact::toeplitz::hermitian_toeplitz_factor;
use symfact::{DenseMatrix, Error, FactorPair, HankelGen, Result, ToeplitzGen, C64};

use crate::{BenchKind, Command, FactorKind, GenKind};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_SIZE: u8 = 4;
pub const EXIT_PRECONDITION: u8 = 5;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::DimensionMismatch { .. } | Error::Rejected(_) | Error::Io(_) => EXIT_PARSE,
        Error::SizeCap { .. } => EXIT_SIZE,
        Error::Precondition(_) | Error::Numeric(_) => EXIT_PRECONDITION,
    }
}

pub fn run(cmd: Command) -> u8 {
    let result = match cmd {
        Command::Factor {
            kind,
            input,
            out,
            verify,
            tol,
            cap,
            r,
            seed,
            dump_levels,
        } => factor(kind, &input, out.as_deref(), verify, tol, cap, r, seed, dump_levels.as_deref()),
        Command::Apply { factor, vector } => apply(&factor, &vector),
        Command::Verify { factor, matrix, tol, cap } => verify_cmd(&factor, &matrix, tol, cap),
        Command::Sos { coeffs, out, tol } => sos(&coeffs, out.as_deref(), tol),
        Command::Krylov { a, s, g, density, r, seed, tol } => krylov(&a, s, g.as_deref(), density, r, seed, tol),
        Command::Bench { kind, sizes, repeats, seed } => bench(kind, sizes, repeats, seed),
        Command::Generate { kind, n, seed, out } => generate(kind, n, seed, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))
}

fn emit(text: &str, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{path}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::SizeCap { size: n, cap })
    } else {
        Ok(())
    }
}

fn relative_error(got: &DenseMatrix, want: &DenseMatrix) -> Result<f64> {
    if got.rows() != want.rows() || got.cols() != want.cols() {
        return Err(Error::DimensionMismatch {
            expected: want.rows(),
            got: got.rows(),
        });
    }
    let num = got.sub(want)?.frobenius_norm();
    let den = want.frobenius_norm();
    Ok(if den == 0.0 { num } else { num / den })
}

fn symmetric_inverse(h: &DenseMatrix) -> Result<DenseMatrix> {
    let inv = h.inverse()?;
    Ok(inv.add(&inv.transpose())?.scale(C64::new(0.5, 0.0)).real_part())
}

fn expect_hankel(doc: MatrixDoc) -> Result<HankelGen> {
    match doc {
        MatrixDoc::Hankel(h) => Ok(h),
        other => Err(Error::Rejected(format!("expected a hankel document, got {}", other.kind()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn factor(
    kind: FactorKind,
    input: &str,
    out: Option<&str>,
    verify: bool,
    tol: f64,
    cap: usize,
    r: usize,
    seed: Option<u64>,
    dump_levels: Option<&str>,
) -> Result<u8> {
    let doc = parse_matrix(&read(input)?)?;
    let opts = DisplacementOptions {
        perturb_seed: seed,
        ..Default::default()
    };
    let mut tol = tol;
    let (pair, target): (FactorPair, Box<dyn Fn() -> Result<DenseMatrix>>) = match kind {
        FactorKind::Hankel => {
            let h = expect_hankel(doc.clone())?;
            if let Some(path) = dump_levels {
                let levels = hankel_levels(&pad_to_power_of_two(&h))?;
                emit(&levels.to_json()?, Some(path))?;
            }
            let pair = hankel_factor(&h)?;
            (pair, Box::new(move || doc.materialize_with_cap(cap)))
        }
        FactorKind::Toeplitz => {
            let t = match doc.clone() {
                MatrixDoc::Toeplitz(t) => t,
                other => return Err(Error::Rejected(format!("expected a toeplitz document, got {}", other.kind()))),
            };
            let pair = hermitian_toeplitz_factor(&t)?;
            (pair, Box::new(move || doc.materialize_with_cap(cap)))
        }
        FactorKind::Displacement => {
            check_cap(doc.order(), cap)?;
            let m = doc.materialize_with_cap(cap)?;
            let kappa = m.condition_number()?;
            let out = displacement_factor(
                &DisplacementInput {
                    matrix: m.clone(),
                    rank: r,
                    kappa_bound: kappa.is_finite().then_some(kappa),
                },
                &opts,
            )?;
            eprintln!("report: {}", serde_json::to_string(&out.report).map_err(Error::from)?);
            (out.pair, Box::new(move || Ok(m.clone())))
        }
        FactorKind::InverseHankel => {
            let h = expect_hankel(doc)?;
            check_cap(h.order(), cap)?;
            let out = hankel_inverse_factor(&h, &opts)?;
            let hm = h.materialize_with_cap(cap)?;
            tol *= hm.condition_number()?;
            eprintln!("report: {}", serde_json::to_string(&out.report).map_err(Error::from)?);
            (out.pair, Box::new(move || symmetric_inverse(&hm)))
        }
    };
    eprintln!(
        "{}: order {}, B {} columns, C {} columns, {} stored scalars",
        pair.provenance,
        pair.order(),
        pair.b.ncols(),
        pair.c.ncols(),
        pair.b.storage() + pair.c.storage()
    );
    if verify {
        check_cap(pair.nrows(), cap)?;
    }
    emit(&pair.to_json()?, out)?;
    if verify {
        let err = relative_error(&pair.materialize_target_with_cap(cap)?, &target()?)?;
        eprintln!("relative error: {err:e} (tolerance {tol:e})");
        if err > tol {
            return Ok(EXIT_VERIFY);
        }
    }
    Ok(EXIT_OK)
}

fn apply(factor: &str, vector: &str) -> Result<u8> {
    let pair = FactorPair::from_json(&read(factor)?)?;
    let x = parse_vector(&read(vector)?)?;
    let y = pair.apply_gram(&x)?;
    println!("{}", vector_to_json(&y)?);
    Ok(EXIT_OK)
}

fn verify_cmd(factor: &str, matrix: &str, tol: f64, cap: usize) -> Result<u8> {
    let pair = FactorPair::from_json(&read(factor)?)?;
    let doc = parse_matrix(&read(matrix)?)?;
    if doc.order() != pair.order() {
        return Err(Error::DimensionMismatch {
            expected: pair.order(),
            got: doc.order(),
        });
    }
    check_cap(pair.nrows(), cap)?;
    let err = relative_error(&pair.materialize_target_with_cap(cap)?, &doc.materialize_with_cap(cap)?)?;
    let pass = err <= tol;
    println!(
        "{}",
        serde_json::json!({ "relativeError": err, "tolerance": tol, "pass": pass })
    );
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn sos(coeffs: &str, out: Option<&str>, tol: f64) -> Result<u8> {
    let text = if std::path::Path::new(coeffs).is_file() {
        read(coeffs)?
    } else {
        coeffs.to_string()
    };
    let p = Polynomial::parse(&text)?;
    let cert = certificate(&p)?;
    emit(&cert.to_json()?, out)?;
    let positive = cert.terms.iter().filter(|t| t.sign > 0).count();
    eprintln!(
        "{} positive and {} negative terms, residual {:e}",
        positive,
        cert.terms.len() - positive,
        cert.residual
    );
    Ok(if cert.residual <= tol * p.max_abs_coeff().max(f64::MIN_POSITIVE) {
        EXIT_OK
    } else {
        EXIT_VERIFY
    })
}

fn krylov(a: &str, s: usize, g: Option<&str>, density: usize, r: usize, seed: u64, tol: f64) -> Result<u8> {
    let a = SparseMatrix::parse(&read(a)?)?;
    let n = a.rows();
    if s == 0 || n % s != 0 {
        return Err(Error::Rejected(format!("block width {s} does not divide {n}")));
    }
    let g = match g {
        Some(path) => SparseMatrix::parse(&read(path)?)?,
        None => random_sparse(n, s, density, seed),
    };
    let spec = KrylovSpec::new(a, g, n / s)?;
    let report = krylov_demo(&spec, r, seed)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    let pass = report.apply_error <= tol && report.transpose_error <= tol;
    eprintln!(
        "K·B error {:e}, Kᵀ·B error {:e}: equivalence {}",
        report.apply_error,
        report.transpose_error,
        if pass { "pass" } else { "FAIL" }
    );
    match report.block_hankel_displacement_rank {
        Some(rank) => eprintln!("block-Hankel displacement rank {rank} (bound {})", 2 * s),
        None => eprintln!("A is not symmetric; block-Hankel check skipped"),
    }
    Ok(if pass { EXIT_OK } else { EXIT_VERIFY })
}

fn random_hankel(rng: &mut ChaCha8Rng, n: usize) -> HankelGen {
    let g: Vec<f64> = (0..2 * n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
    HankelGen::from_real(&g).expect("finite generator")
}

fn random_toeplitz(rng: &mut ChaCha8Rng, n: usize) -> ToeplitzGen {
    let mut t: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    t[0].im = 0.0;
    ToeplitzGen::new(t).expect("real leading entry")
}

/// J plus a small Hankel perturbation: a Hankel matrix with condition near one.
fn well_conditioned_hankel(rng: &mut ChaCha8Rng, n: usize) -> HankelGen {
    let g: Vec<f64> = (0..2 * n - 1)
        .map(|m| rng.gen_range(-1.0..1.0) * 0.3 / (n as f64).sqrt() + if m == n - 1 { 1.0 } else { 0.0 })
        .collect();
    HankelGen::from_real(&g).expect("finite generator")
}

fn bench(kind: BenchKind, sizes: Option<Vec<usize>>, repeats: usize, seed: u64) -> Result<u8> {
    let sizes = sizes.unwrap_or_else(|| match kind {
        BenchKind::Displacement => vec![64, 128, 256],
        _ => vec![4096, 8192, 16384, 32768],
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    println!("{:>8} {:>12} {:>8} {:>10} {:>10}", "n", "ms", "ratio", "cols B", "cols C");
    let mut prev: Option<f64> = None;
    for n in sizes {
        if n == 0 {
            return Err(Error::Rejected("sizes must be positive".into()));
        }
        let mut run: Box<dyn FnMut() -> Result<FactorPair>> = match kind {
            BenchKind::Hankel => {
                let h = random_hankel(&mut rng, n);
                Box::new(move || hankel_factor(&h))
            }
            BenchKind::Toeplitz => {
                let t = random_toeplitz(&mut rng, n);
                Box::new(move || hermitian_toeplitz_factor(&t))
            }
            BenchKind::Displacement => {
                let m = symmetric_inverse(&well_conditioned_hankel(&mut rng, n).materialize()?)?;
                Box::new(move || {
                    displacement_factor(
                        &DisplacementInput {
                            matrix: m.clone(),
                            rank: 2,
                            kappa_bound: None,
                        },
                        &DisplacementOptions::default(),
                    )
                    .map(|o| o.pair)
                })
            }
        };
        let mut best = f64::INFINITY;
        let mut cols = (0, 0);
        for _ in 0..repeats.max(1) {
            let t = Instant::now();
            let p = run()?;
            best = best.min(t.elapsed().as_secs_f64());
            cols = (p.b.ncols(), p.c.ncols());
        }
        let ratio = prev.map(|p| format!("{:.2}", best / p)).unwrap_or_else(|| "-".into());
        println!("{:>8} {:>12.3} {:>8} {:>10} {:>10}", n, best * 1e3, ratio, cols.0, cols.1);
        prev = Some(best);
    }
    Ok(EXIT_OK)
}

fn generate(kind: GenKind, n: usize, seed: u64, out: Option<&str>) -> Result<u8> {
    if n == 0 {
        return Err(Error::Rejected("order must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text = match kind {
        GenKind::Hankel => hankel_to_json(&random_hankel(&mut rng, n))?,
        GenKind::Toeplitz => toeplitz_to_json(&random_toeplitz(&mut rng, n))?,
        GenKind::HankelInverse => {
            dense_to_json(&symmetric_inverse(&well_conditioned_hankel(&mut rng, n).materialize()?)?)?
        }
    };
    emit(&text, out)?;
    Ok(EXIT_OK)
}
