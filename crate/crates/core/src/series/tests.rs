use super::*;
use crate::linalg::{
    conj_transpose, matmul, sample_ginibre_matrix, sample_haar_unitary, RngStream,
};
use approx::assert_abs_diff_eq;
use ndarray_linalg::Inverse;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn cycle_types_small_cases() {
    let t1 = cycle_types(1);
    assert_eq!(t1.len(), 1);
    assert_eq!(t1[0].multiplicities, vec![(1, 1)]);
    assert_abs_diff_eq!(t1[0].permutation_count(), 1.0, epsilon = 0.0);

    // S_3: the 3-cycles (2 of them), a transposition plus a fixed point
    // (3 of them) and the identity.
    let mut counts: Vec<(Vec<(usize, usize)>, f64)> = cycle_types(3)
        .into_iter()
        .map(|t| (t.multiplicities.clone(), t.permutation_count()))
        .collect();
    counts.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(
        counts,
        vec![
            (vec![(1, 1), (2, 1)], 3.0),
            (vec![(1, 3)], 1.0),
            (vec![(3, 1)], 2.0),
        ]
    );
}

#[test]
fn cycle_type_counts_sum_to_factorial() {
    for k in 1..=12usize {
        let total: f64 = cycle_types(k).iter().map(|t| t.permutation_count()).sum();
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        assert_abs_diff_eq!(total, fact, epsilon = fact * 1e-12);
    }
}

#[test]
fn cycle_type_counts_match_brute_force_enumeration_of_s8() {
    // Walk all 40320 permutations of 8 symbols, classify each by cycle
    // type, and compare the tallies with the closed-form counts.
    use std::collections::BTreeMap;
    let mut tally: BTreeMap<Vec<(usize, usize)>, u64> = BTreeMap::new();
    let mut perm: Vec<usize> = (0..8).collect();
    loop {
        let mut seen = [false; 8];
        let mut lens = Vec::new();
        for start in 0..8 {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = perm[i];
                len += 1;
            }
            lens.push(len);
        }
        lens.sort_unstable();
        let mut mult: Vec<(usize, usize)> = Vec::new();
        for l in lens {
            match mult.last_mut() {
                Some((p, m)) if *p == l => *m += 1,
                _ => mult.push((l, 1)),
            }
        }
        *tally.entry(mult).or_insert(0) += 1;

        // Plain lexicographic step without parity bookkeeping.
        let n = perm.len();
        let mut i = n - 1;
        while i > 0 && perm[i - 1] >= perm[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while perm[j] <= perm[i - 1] {
            j -= 1;
        }
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }

    let types = cycle_types(8);
    assert_eq!(types.len(), tally.len());
    let mut total = 0u64;
    for ty in types {
        let brute = tally[&ty.multiplicities];
        total += brute;
        assert_abs_diff_eq!(ty.permutation_count(), brute as f64, epsilon = 1e-6);
    }
    assert_eq!(total, 40320);
}

#[test]
fn trace_power_differences_examples() {
    // Unitary: eigenvalues on the circle, so lambda^{-j} = conj(lambda)^j
    // and every difference vanishes.
    let u = sample_haar_unitary(5, &mut RngStream::new(41, 0));
    for d in trace_power_differences(&u, 6).unwrap() {
        assert!(d.norm() < 1e-10, "unitary difference {d}");
    }

    // Scalar 2: d_1 = 1/2 - 2.
    let v = ndarray::arr2(&[[c(2.0, 0.0)]]);
    let d = trace_power_differences(&v, 1).unwrap();
    assert_abs_diff_eq!(d[0].re, -1.5, epsilon = 1e-14);
    assert_abs_diff_eq!(d[0].im, 0.0, epsilon = 1e-14);
}

#[test]
fn trace_power_differences_match_matrix_power_oracle() {
    let v = sample_ginibre_matrix(4, &mut RngStream::new(42, 0));
    let kmax = 6;
    let got = trace_power_differences(&v, kmax).unwrap();

    // Oracle: explicit inverse powers and adjoint powers.
    let vinv = v.inv().unwrap();
    let vstar = conj_transpose(&v);
    let mut ip = vinv.clone();
    let mut sp = vstar.clone();
    for j in 0..kmax {
        if j > 0 {
            ip = matmul(&ip, &vinv);
            sp = matmul(&sp, &vstar);
        }
        let direct = ip.diag().sum() - sp.diag().sum();
        assert!(
            (got[j] - direct).norm() <= 1e-8 * (1.0 + direct.norm()),
            "j={j}: {} vs {direct}",
            got[j]
        );
    }
}

#[test]
fn trace_power_differences_reject_singular_input() {
    let v = ndarray::arr2(&[[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1e-15, 0.0)]]);
    assert!(matches!(
        trace_power_differences(&v, 2),
        Err(Error::Singular { .. })
    ));
}

#[test]
fn blaschke_derivative_order_zero_and_scalar() {
    let v = sample_ginibre_matrix(3, &mut RngStream::new(43, 0));
    let d0 = blaschke_derivative(&v, 0).unwrap();
    let det = crate::linalg::determinant(&v).unwrap();
    assert!((d0 - det).norm() < 1e-12 * (1.0 + det.norm()));

    // 1x1 case (z+v)/(1+z conj(v)): f'(0) = 1 - |v|^2.
    let v = ndarray::arr2(&[[c(0.5, 0.0)]]);
    let d1 = blaschke_derivative(&v, 1).unwrap();
    assert_abs_diff_eq!(d1.re, 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(d1.im, 0.0, epsilon = 1e-12);
}

#[test]
fn blaschke_derivative_guard() {
    let v = ndarray::arr2(&[[c(0.5, 0.0)]]);
    assert!(matches!(blaschke_derivative(&v, 65), Err(Error::Guard(_))));
}

#[test]
fn cycle_sum_agrees_with_series_division() {
    // The central cross-check: cycle-sum derivatives against k! times the
    // series-division coefficients, two routes that share only V.
    let mut rng = RngStream::new(44, 0);
    for size in 2..=6usize {
        let v = sample_ginibre_matrix(size, &mut rng);
        let kmax = 8;
        let derivs = blaschke_derivatives(&v, kmax).unwrap();
        let ratio = series_ratio(&v, kmax).unwrap();
        let mut factorial = 1.0;
        for k in 0..=kmax {
            if k > 0 {
                factorial *= k as f64;
            }
            let via_series = ratio.coeff(k) * factorial;
            let rel = (derivs[k] - via_series).norm() / (1.0 + via_series.norm());
            assert!(rel <= 1e-9, "size {size}, k {k}: relative error {rel:.3e}");
        }
    }
}

#[test]
fn series_ratio_of_zero_matrix() {
    let v = ndarray::arr2(&[[c(0.0, 0.0)]]);
    let s = series_ratio(&v, 4).unwrap();
    assert_eq!(s.order(), 4);
    assert_abs_diff_eq!(s.coeff(0).norm(), 0.0, epsilon = 0.0);
    assert_abs_diff_eq!((s.coeff(1) - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    for k in 2..=4 {
        assert_abs_diff_eq!(s.coeff(k).norm(), 0.0, epsilon = 1e-15);
    }
}

#[test]
fn series_ratio_evaluates_to_the_determinant_ratio() {
    // Partial sums converge geometrically inside the analyticity disk; the
    // tail bound comes from Cauchy estimates on a circle of radius rho.
    let u = sample_haar_unitary(5, &mut RngStream::new(45, 0));
    let kmax = 12;
    let s = series_ratio(&u, kmax).unwrap();
    let rho = 0.7;
    let mut sup = 0.0f64;
    for i in 0..64 {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
        let z = Complex64::from_polar(rho, theta);
        sup = sup.max(direct_ratio(&u, z).norm());
    }
    let z = Complex64::from_polar(0.3, 0.9);
    let q: f64 = 0.3 / rho;
    let tail = sup * q.powi(kmax as i32 + 1) / (1.0 - q);
    let direct = direct_ratio(&u, z);
    assert!((s.eval(z) - direct).norm() <= tail + 1e-10);
}

fn direct_ratio(v: &ComplexMatrix, z: Complex64) -> Complex64 {
    let n = v.nrows();
    let mut num = v.clone();
    let mut den = conj_transpose(v).mapv(|x| x * z);
    for i in 0..n {
        num[[i, i]] += z;
        den[[i, i]] += 1.0;
    }
    crate::linalg::determinant(&num).unwrap() / crate::linalg::determinant(&den).unwrap()
}

#[test]
fn det_series_base_cases() {
    let one = TruncatedSeries::new(vec![c(1.5, 0.5), c(0.0, 1.0)]).unwrap();
    let entries = Array2::from_shape_vec((1, 1), vec![one.clone()]).unwrap();
    assert_eq!(det_series(&entries, 1).unwrap(), one);

    // Order-zero entries reduce to the scalar determinant.
    let mut rng = RngStream::new(46, 0);
    let m = sample_ginibre_matrix(3, &mut rng);
    let entries = m.map(|&v| TruncatedSeries::constant(v, 0));
    let det = det_series(&entries, 0).unwrap();
    let direct = crate::linalg::determinant(&m).unwrap();
    assert!((det.coeff(0) - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
}

#[test]
fn det_series_guard() {
    let entries: Array2<TruncatedSeries> =
        Array2::from_elem((9, 9), TruncatedSeries::constant(c(1.0, 0.0), 0));
    assert!(matches!(det_series(&entries, 0), Err(Error::Guard(_))));
}

#[test]
fn det_series_linear_coefficient_matches_direct_expansion() {
    // For entries X0 + z G1 the z-coefficient must match the expansion
    // det(X0) sum_tau sgn(tau) sum_{w1+w2=1} prod_i (H_{w_i})_{i,tau(i)}
    // with H_0 = I and H_1 = X0^{-1} G1.
    let mut rng = RngStream::new(47, 0);
    let x0 = sample_ginibre_matrix(2, &mut rng);
    let g1 = sample_ginibre_matrix(2, &mut rng);
    let entries = Array2::from_shape_fn((2, 2), |(i, j)| {
        TruncatedSeries::new(vec![x0[[i, j]], g1[[i, j]]]).unwrap()
    });
    let via_leibniz = det_series(&entries, 1).unwrap().coeff(1);

    let h1 = matmul(&x0.inv().unwrap(), &g1);
    let h = |w: usize, i: usize, j: usize| -> Complex64 {
        if w == 0 {
            if i == j {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        } else {
            h1[[i, j]]
        }
    };
    let det_x0 = crate::linalg::determinant(&x0).unwrap();
    let mut sum = c(0.0, 0.0);
    for (tau, sign) in [([0usize, 1], 1.0), ([1, 0], -1.0)] {
        for w in [[0usize, 1], [1, 0]] {
            sum += h(w[0], 0, tau[0]) * h(w[1], 1, tau[1]) * sign;
        }
    }
    let direct = det_x0 * sum;
    assert!((via_leibniz - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
}

#[test]
fn det_series_is_multilinear_in_rows() {
    let mut rng = RngStream::new(48, 0);
    let order = 3;
    let entries = Array2::from_shape_fn((3, 3), |_| {
        TruncatedSeries::new(
            (0..=order)
                .map(|_| crate::linalg::sample_complex_gaussian(&mut rng))
                .collect(),
        )
        .unwrap()
    });
    let s = c(0.7, -1.3);
    let mut scaled = entries.clone();
    for j in 0..3 {
        scaled[[1, j]] = scaled[[1, j]].scale(s);
    }
    let base = det_series(&entries, order).unwrap().scale(s);
    let row_scaled = det_series(&scaled, order).unwrap();
    for k in 0..=order {
        assert!(
            (base.coeff(k) - row_scaled.coeff(k)).norm() <= 1e-12 * (1.0 + base.coeff(k).norm())
        );
    }
}

#[test]
fn scaled_coefficients_constant_term_and_consistency() {
    let mut rng = RngStream::new(49, 0);
    let v = crate::ensembles::truncated_unitary_matrix(16, 2, &mut rng);
    let n = 2u32;
    let kmax = 10;
    let s = scaled_blaschke_coefficients(&v, n, kmax, true).unwrap();

    let det_v = crate::linalg::determinant(&v).unwrap();
    let scale = 16.0f64.powf(n as f64 / 2.0);
    assert!((s.coeff(0).norm() - scale * det_v.norm()).abs() <= 1e-10 * scale);

    // Evaluating the signed series at z matches (-1)^n N^{n/2} f(-z).
    let z = c(0.2, 0.0);
    let direct = direct_ratio(&v, -z) * scale * if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rho: f64 = 0.6;
    let mut sup = 0.0f64;
    for i in 0..64 {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
        let w = Complex64::from_polar(rho, theta);
        sup = sup.max(direct_ratio(&v, w).norm() * scale);
    }
    let q = 0.2 / rho;
    let tail = sup * q.powi(kmax as i32 + 1) / (1.0 - q);
    assert!(
        (s.eval(z) - direct).norm() <= tail + 1e-9,
        "eval {} vs direct {direct}, tail {tail:.3e}",
        s.eval(z)
    );
}

#[test]
fn scaled_coefficient_routes_agree_across_the_size_switch() {
    // Just above the switch the trace route takes over; it must produce the
    // same numbers as explicit series division.
    let mut rng = RngStream::new(50, 0);
    let v = crate::ensembles::truncated_unitary_matrix(80, 1, &mut rng);
    let kmax = 4;
    let fast = scaled_blaschke_coefficients(&v, 1, kmax, true).unwrap();
    let ratio = series_ratio(&v, kmax).unwrap();
    let scale = 80f64.powf(0.5);
    for k in 0..=kmax {
        let sign = if (1 + k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let direct = ratio.coeff(k) * scale * sign;
        assert!(
            (fast.coeff(k) - direct).norm() <= 1e-8 * (1.0 + direct.norm()),
            "k={k}: {} vs {direct}",
            fast.coeff(k)
        );
    }
}

#[test]
fn trace_power_routes_agree_across_the_size_switch() {
    let mut rng = RngStream::new(51, 0);
    let v = crate::ensembles::truncated_unitary_matrix(70, 1, &mut rng);
    let by_powers = trace_power_differences(&v, 4).unwrap();
    let by_eigen = super::trace_power_differences_by_eigenvalues(&v, 4).unwrap();
    for (a, b) in by_powers.iter().zip(&by_eigen) {
        assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
    }
}

#[test]
fn series_serialization_schema() {
    let s = TruncatedSeries::new(vec![c(1.0, -2.0), c(0.5, 0.0)]).unwrap();
    let v = serde_json::to_value(&s).unwrap();
    assert_eq!(v["order"], 1);
    assert_eq!(v["re"][0], 1.0);
    assert_eq!(v["im"][0], -2.0);
    let back: TruncatedSeries = serde_json::from_value(v).unwrap();
    assert_eq!(back, s);

    // Mismatched lengths are rejected.
    let bad: std::result::Result<TruncatedSeries, _> =
        serde_json::from_str(r#"{"order":2,"re":[1.0],"im":[0.0]}"#);
    assert!(bad.is_err());
}

proptest! {
    #[test]
    fn series_inverse_is_a_right_inverse(
        coeffs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8)
    ) {
        let mut coeffs: Vec<Complex64> =
            coeffs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        // Keep the constant term away from zero.
        if coeffs[0].norm() < 0.1 {
            coeffs[0] += Complex64::new(1.0, 0.0);
        }
        let s = TruncatedSeries::new(coeffs).unwrap();
        let prod = s.mul(&s.invert().unwrap());
        prop_assert!((prod.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        for k in 1..=prod.order() {
            prop_assert!(prod.coeff(k).norm() < 1e-7);
        }
    }

    #[test]
    fn series_multiplication_commutes(
        a in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8),
        b in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..8)
    ) {
        let a = TruncatedSeries::new(
            a.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()
        ).unwrap();
        let b = TruncatedSeries::new(
            b.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()
        ).unwrap();
        let ab = a.mul(&b);
        let ba = b.mul(&a);
        for k in 0..=ab.order() {
            prop_assert!((ab.coeff(k) - ba.coeff(k)).norm() <= 1e-12 * (1.0 + ab.coeff(k).norm()));
        }
    }
}
