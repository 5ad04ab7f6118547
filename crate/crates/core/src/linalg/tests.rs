use super::*;
use approx::assert_abs_diff_eq;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Greedy multiset match: every expected value has a distinct partner within
/// `tol`.
fn assert_multiset_close(actual: &[Complex64], expected: &[Complex64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    let mut remaining: Vec<Complex64> = actual.to_vec();
    for &e in expected {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, &a)| (i, (a - e).norm()))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .expect("nonempty");
        assert!(
            dist <= tol,
            "no partner for {e} within {tol} (closest {dist:.3e})"
        );
        remaining.swap_remove(idx);
    }
}

#[test]
fn gaussian_moments() {
    let mut rng = RngStream::new(11, 0);
    let trials = 100_000;
    let mut sum = c(0.0, 0.0);
    let mut sum_sq = c(0.0, 0.0);
    let mut sum_abs2 = 0.0;
    for _ in 0..trials {
        let g = sample_complex_gaussian(&mut rng);
        sum += g;
        sum_sq += g * g;
        sum_abs2 += g.norm_sqr();
    }
    let t = trials as f64;
    // Per-coordinate variance is 1/2, so a 4-sigma band for the mean is
    // 4 sqrt(0.5/T) per coordinate.
    let band = 4.0 * (0.5 / t).sqrt();
    assert!((sum.re / t).abs() < band);
    assert!((sum.im / t).abs() < band);
    // Var |g|^2 = E|g|^4 - 1 = 1.
    assert!((sum_abs2 / t - 1.0).abs() < 4.0 / t.sqrt());
    // E[g^2] = 0 with E|g^2|^2 = 2.
    assert!((sum_sq / t).norm() < 4.0 * (2.0f64 / t).sqrt());
}

#[test]
fn ginibre_entries() {
    let mut rng = RngStream::new(12, 0);
    let trials = 10_000;
    let mut tr_sum = 0.0;
    let mut cross = c(0.0, 0.0);
    for _ in 0..trials {
        let g = sample_ginibre_matrix(4, &mut rng);
        let gh = conj_transpose(&g);
        tr_sum += trace(&matmul(&g, &gh)).re / 16.0;
        cross += g[[0, 0]] * g[[0, 1]].conj();
    }
    let t = trials as f64;
    // Tr(GG*)/n^2 is a mean of 16 unit-mean |g|^2 values.
    assert!((tr_sum / t - 1.0).abs() < 4.0 * (1.0 / 16.0f64 / t).sqrt());
    assert!((cross / t).norm() < 4.0 * (1.0f64 / t).sqrt());
}

#[test]
fn ginibre_1x1_is_one_gaussian() {
    let g = sample_ginibre_matrix(1, &mut RngStream::new(5, 3));
    let direct = sample_complex_gaussian(&mut RngStream::new(5, 3));
    assert_eq!(g[[0, 0]], direct);
}

#[test]
fn samplers_are_deterministic() {
    let a = sample_ginibre_matrix(6, &mut RngStream::new(42, 7));
    let b = sample_ginibre_matrix(6, &mut RngStream::new(42, 7));
    assert_eq!(a, b);
    let u = sample_haar_unitary(5, &mut RngStream::new(42, 8));
    let v = sample_haar_unitary(5, &mut RngStream::new(42, 8));
    assert_eq!(u, v);
}

#[test]
fn haar_is_unitary() {
    let mut rng = RngStream::new(13, 0);
    for &n in &[1usize, 2, 8, 33] {
        let u = sample_haar_unitary(n, &mut rng);
        assert!(unitarity_defect(&u) <= UNITARITY_TOL, "defect at n={n}");
    }
}

#[test]
fn haar_phase_and_entry_moments() {
    // N=1: a uniform phase with mean zero.
    let mut rng = RngStream::new(14, 0);
    let trials = 10_000;
    let mut sum = c(0.0, 0.0);
    for _ in 0..trials {
        let u = sample_haar_unitary(1, &mut rng);
        assert_abs_diff_eq!(u[[0, 0]].norm(), 1.0, epsilon = 1e-12);
        sum += u[[0, 0]];
    }
    let t = trials as f64;
    assert!((sum / t).norm() < 4.0 * (0.5f64 / t).sqrt() * 2.0);

    // N=8: E|u_11|^2 = 1/8 since columns are uniform unit vectors.
    let trials = 100_000;
    let mut vals = Vec::with_capacity(trials);
    for _ in 0..trials {
        let u = sample_haar_unitary(8, &mut rng);
        vals.push(u[[0, 0]].norm_sqr());
    }
    let t = trials as f64;
    let mean = vals.iter().sum::<f64>() / t;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (t - 1.0);
    let se = (var / t).sqrt();
    assert!((mean - 0.125).abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn haar_left_invariance_ks() {
    // Distribution of an entry of QU matches that of U for a fixed unitary Q.
    let q = sample_haar_unitary(4, &mut RngStream::new(999, 0));
    let trials = 10_000;
    let mut a = Vec::with_capacity(trials);
    let mut b = Vec::with_capacity(trials);
    for t in 0..trials {
        let u = sample_haar_unitary(4, &mut RngStream::new(15, t as u64));
        let v = sample_haar_unitary(4, &mut RngStream::new(16, t as u64));
        a.push(matmul(&q, &u)[[1, 2]].re);
        b.push(v[[1, 2]].re);
    }
    let d = crate::verify::two_sample_ks(&a, &b).unwrap();
    let crit = crate::verify::two_sample_ks_critical(trials, trials);
    assert!(d < crit, "left KS {d} vs critical {crit}");

    // Same for right multiplication.
    let mut a = Vec::with_capacity(trials);
    let mut b = Vec::with_capacity(trials);
    for t in 0..trials {
        let u = sample_haar_unitary(4, &mut RngStream::new(25, t as u64));
        let v = sample_haar_unitary(4, &mut RngStream::new(26, t as u64));
        a.push(matmul(&u, &q)[[2, 0]].re);
        b.push(v[[2, 0]].re);
    }
    let d = crate::verify::two_sample_ks(&a, &b).unwrap();
    assert!(d < crit, "right KS {d} vs critical {crit}");
}

#[test]
fn eigenvalues_examples() {
    let m = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]));
    let vals = eigenvalues(&m).unwrap();
    assert_multiset_close(&vals, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], 1e-12);

    let swap = ndarray::arr2(&[[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
    let vals = eigenvalues(&swap).unwrap();
    assert_multiset_close(&vals, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12);

    let m = sample_ginibre_matrix(5, &mut RngStream::new(17, 0));
    let vals = eigenvalues(&m).unwrap();
    let sum: Complex64 = vals.iter().sum();
    assert!((sum - trace(&m)).norm() <= EIGEN_RESIDUAL_TOL * (1.0 + max_abs(&m)));
}

#[test]
fn eigenvalues_rejects_non_square() {
    let m: ComplexMatrix = Array2::zeros((2, 3));
    assert!(matches!(eigenvalues(&m), Err(Error::NonSquare { .. })));
}

#[test]
fn generalized_eigenvalues_examples() {
    let a = Array2::from_diag(&ndarray::arr1(&[c(2.0, 0.0), c(6.0, 0.0)]));
    let b = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(3.0, 0.0)]));
    let vals = generalized_eigenvalues(&a, &b).unwrap();
    let finite: Vec<Complex64> = vals.iter().map(|v| v.finite().unwrap()).collect();
    assert_multiset_close(&finite, &[c(2.0, 0.0), c(2.0, 0.0)], 1e-12);

    // B = I reduces to plain eigenvalues.
    let m = sample_ginibre_matrix(4, &mut RngStream::new(18, 0));
    let gen = generalized_eigenvalues(&m, &identity(4)).unwrap();
    let finite: Vec<Complex64> = gen.iter().map(|v| v.finite().unwrap()).collect();
    let plain = eigenvalues(&m).unwrap();
    assert_multiset_close(&finite, &plain, 1e-8 * (1.0 + max_abs(&m)));
}

#[test]
fn generalized_eigenvalue_residuals() {
    let mut rng = RngStream::new(19, 0);
    let a = sample_ginibre_matrix(4, &mut rng);
    let b = sample_ginibre_matrix(4, &mut rng);
    let scale = max_abs(&a) + max_abs(&b);
    for v in generalized_eigenvalues(&a, &b).unwrap() {
        let z = v
            .finite()
            .expect("Gaussian pencil has finite spectrum a.s.");
        // Residual oracle: zB - A must be numerically singular.
        let pencil = b.mapv(|x| x * z) - &a;
        let smin = *singular_values(&pencil).unwrap().last().unwrap();
        assert!(smin <= 1e-8 * (1.0 + z.norm()) * scale, "smin {smin:.3e}");
    }
}

#[test]
fn generalized_eigenvalues_infinite_value() {
    // B has a null direction while A does not: one eigenvalue at infinity.
    let a = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(2.0, 0.0)]));
    let b = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(0.0, 0.0)]));
    let vals = generalized_eigenvalues(&a, &b).unwrap();
    assert_eq!(vals.iter().filter(|v| v.is_infinity()).count(), 1);
}

#[test]
fn schur_examples() {
    // Already triangular input: diagonal multiset is preserved.
    let m = ndarray::arr2(&[[c(1.0, 1.0), c(2.0, 0.0)], [c(0.0, 0.0), c(-3.0, 0.5)]]);
    let (u, t) = schur_decompose(&m).unwrap();
    assert!(unitarity_defect(&u) <= UNITARITY_TOL);
    let diag: Vec<Complex64> = t.diag().to_vec();
    assert_multiset_close(&diag, &[c(1.0, 1.0), c(-3.0, 0.5)], 1e-10);

    // Random 6x6: reconstruction, triangularity, diagonal = eigenvalues.
    let m = sample_ginibre_matrix(6, &mut RngStream::new(20, 0));
    let (u, t) = schur_decompose(&m).unwrap();
    assert!(unitarity_defect(&u) <= UNITARITY_TOL);
    for i in 0..6 {
        for j in 0..i {
            assert_eq!(t[[i, j]], c(0.0, 0.0), "strictly lower entries are zero");
        }
    }
    let rec = matmul(&matmul(&u, &t), &conj_transpose(&u));
    let resid = max_abs(&(&rec - &m));
    assert!(resid <= EIGEN_RESIDUAL_TOL * (1.0 + max_abs(&m)));
    let diag: Vec<Complex64> = t.diag().to_vec();
    assert_multiset_close(&diag, &eigenvalues(&m).unwrap(), 1e-7);
}

#[test]
fn char_poly_examples() {
    let m = Array2::from_diag(&ndarray::arr1(&[c(1.0, 0.0), c(2.0, 0.0)]));
    let coeffs = char_poly_coefficients(&m).unwrap();
    assert_eq!(coeffs.len(), 3);
    assert_abs_diff_eq!(coeffs[0].re, 2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(coeffs[1].re, 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(coeffs[2].re, 1.0, epsilon = 1e-12);

    let m = sample_ginibre_matrix(5, &mut RngStream::new(21, 0));
    let coeffs = char_poly_coefficients(&m).unwrap();
    let lambda = eigenvalues(&m).unwrap();

    // a_0 equals the eigenvalue product.
    let prod: Complex64 = lambda.iter().product();
    assert!((coeffs[0] - prod).norm() <= 1e-8 * prod.norm());

    // Root-expansion oracle, written out independently of the library path.
    let mut oracle = vec![c(1.0, 0.0)];
    for &l in &lambda {
        let mut next = vec![c(0.0, 0.0); oracle.len() + 1];
        for (j, &q) in oracle.iter().enumerate() {
            next[j] += q * l;
            next[j + 1] += q;
        }
        oracle = next;
    }
    for (a, b) in coeffs.iter().zip(&oracle) {
        assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
    }
}

#[test]
fn char_poly_large_branch_matches_small_branch() {
    // A 70x70 matrix takes the eigenvalue branch; embed a small block to
    // compare against the trace recurrence on the same spectrum.
    let mut rng = RngStream::new(22, 0);
    let u = sample_haar_unitary(70, &mut rng);
    let coeffs = char_poly_coefficients(&u).unwrap();
    assert_eq!(coeffs.len(), 71);
    assert!((coeffs[70] - c(1.0, 0.0)).norm() < 1e-12);
    let det = determinant(&u).unwrap();
    assert!((coeffs[0] - det).norm() <= 1e-7);
}

#[test]
fn polynomial_roots_quadratic() {
    // (z-1)(z-2) = 2 - 3z + z^2
    let roots = polynomial_roots(&[c(2.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert_multiset_close(&roots, &[c(1.0, 0.0), c(2.0, 0.0)], 1e-10);
}

#[test]
fn matrix_json_round_trip() {
    let m = sample_ginibre_matrix(3, &mut RngStream::new(23, 0));
    let j = MatrixJson::from(&m);
    let text = serde_json::to_string(&j).unwrap();
    let back: MatrixJson = serde_json::from_str(&text).unwrap();
    let m2 = ComplexMatrix::try_from(back).unwrap();
    assert_eq!(m, m2);

    let bad = MatrixJson {
        rows: 2,
        cols: 2,
        re: vec![0.0; 3],
        im: vec![0.0; 4],
    };
    assert!(ComplexMatrix::try_from(bad).is_err());
    let nan = MatrixJson {
        rows: 1,
        cols: 1,
        re: vec![f64::NAN],
        im: vec![0.0],
    };
    assert!(ComplexMatrix::try_from(nan).is_err());
}

#[test]
fn retry_stream_is_disjoint_and_deterministic() {
    let base = RngStream::new(7, 123);
    let r1 = base.retry_stream(0);
    let r2 = base.retry_stream(0);
    assert_eq!(r1.stream(), r2.stream());
    assert_ne!(r1.stream(), base.stream());
    assert_ne!(base.retry_stream(1).stream(), r1.stream());
}
