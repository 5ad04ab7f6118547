//! Experiment drivers: each one draws a seed-pinned Monte Carlo sample,
//! compares it against a closed-form prediction and returns a report.
//!
//! Stream layout: single-batch drivers use the trial index as the stream;
//! drivers that need two independent batches offset the second batch by
//! [`BATCH_OFFSET`].

use num_complex::Complex64;

use crate::ensembles::{
    det_gaf_truncation_bias, det_gaf_zeros, ginibre_points, spherical_points,
    truncated_unitary_matrix, truncated_unitary_points,
};
use crate::error::{Error, Result};
use crate::kernels::{
    binomial, expected_count, expected_count_quadrature, gram_determinant, kernel_eval,
    predicted_count_fourth_central, predicted_count_moments, truncated_coefficient,
    truncated_moment_quadrature, Geometry, KernelFamily, MobiusMap,
};
use crate::linalg::{
    determinant, matmul, sample_complex_gaussian, sample_ginibre_matrix, sample_haar_unitary,
    ComplexMatrix, ExtendedComplex, RngStream,
};
use crate::series::{
    blaschke_derivatives, det_series, scaled_blaschke_coefficients, series_ratio, TruncatedSeries,
};
use crate::verify::{
    complex_mean_se, ks_critical, ks_statistic, real_mean_se, run_trials, two_sample_ks,
    two_sample_ks_critical, Config, MomentTable, TestReport, BATCH_OFFSET,
};

fn ensure_trials(trials: u64) -> Result<()> {
    if trials < 2 {
        return Err(Error::Domain(format!(
            "at least 2 trials are needed for a standard error, got {trials}"
        )));
    }
    Ok(())
}

/// Radial law of the one-point spherical ensemble: `|lambda|^2` has CDF
/// `t/(1+t)`, checked by a one-sample KS test at the 1% level.
pub fn radial_law_spherical(trials: u64, threads: usize, seed: u64) -> Result<TestReport> {
    let values = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = spherical_points(1, &mut rng)?;
        Ok(match config.points.first() {
            Some(z) => z.norm_sqr(),
            None => f64::INFINITY,
        })
    })?;
    let stat = ks_statistic(&values, |t| if t <= 0.0 { 0.0 } else { t / (1.0 + t) })?;
    Ok(TestReport::upper_bound(
        "radial-spherical-n1",
        stat,
        (trials as f64).sqrt().recip(),
        ks_critical(values.len()),
        trials,
        seed,
    ))
}

/// Counts of truncated-unitary moduli below thresholds: the squared moduli
/// are independent Beta variables, so mean and variance of each count are
/// explicit. Two reports per threshold.
#[allow(clippy::too_many_arguments)]
pub fn radial_law_truncated(
    n_points: u32,
    n: u32,
    thresholds: &[f64],
    trials: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<Vec<TestReport>> {
    ensure_trials(trials)?;
    let safe_thresholds = thresholds.to_vec();
    let counts = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = truncated_unitary_points(n_points, n, &mut rng)?;
        Ok(safe_thresholds
            .iter()
            .map(|&t| config.points.iter().filter(|z| z.norm_sqr() <= t).count() as f64)
            .collect::<Vec<f64>>())
    })?;
    let t_f = trials as f64;
    let mut reports = Vec::new();
    for (i, &t) in thresholds.iter().enumerate() {
        let per_trial: Vec<f64> = counts.iter().map(|row| row[i]).collect();
        let (pred_mean, pred_var) = predicted_count_moments(n_points, n, t)?;
        let mu4 = predicted_count_fourth_central(n_points, n, t)?;

        let mean = per_trial.iter().sum::<f64>() / t_f;
        let se_mean = (pred_var / t_f).sqrt();
        reports.push(TestReport::two_sided(
            format!("beta-count-mean-N{n_points}-n{n}-t{t}"),
            mean,
            pred_mean,
            se_mean,
            sigma * se_mean,
            trials,
            seed,
        ));

        let emp_var = per_trial
            .iter()
            .map(|c| (c - mean) * (c - mean))
            .sum::<f64>()
            / (t_f - 1.0);
        let se_var = ((mu4 - pred_var * pred_var).max(0.0) / t_f).sqrt();
        reports.push(TestReport::two_sided(
            format!("beta-count-variance-N{n_points}-n{n}-t{t}"),
            emp_var,
            pred_var,
            se_var,
            sigma * se_var,
            trials,
            seed,
        ));
    }
    Ok(reports)
}

/// The truncated radial law folded into a single worst-z report.
#[allow(clippy::too_many_arguments)]
pub fn radial_law_truncated_worst(
    n_points: u32,
    n: u32,
    thresholds: &[f64],
    trials: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<TestReport> {
    let reports = radial_law_truncated(n_points, n, thresholds, trials, threads, seed, sigma)?;
    let worst = reports
        .iter()
        .map(|r| (r.statistic - r.predicted).abs() / r.stderr)
        .fold(0.0f64, f64::max);
    Ok(TestReport::upper_bound(
        format!("beta-count-worst-z-N{n_points}-n{n}"),
        worst,
        1.0,
        sigma,
        trials,
        seed,
    ))
}

/// Push one batch of spherical samples through a sphere rotation and compare
/// the radial law against fresh samples by a two-sample KS test.
pub fn invariance_spherical(
    n: u32,
    map: &MobiusMap,
    trials_each: u64,
    threads: usize,
    seed: u64,
) -> Result<TestReport> {
    if map.geometry() != Geometry::Sphere {
        return Err(Error::Domain(
            "spherical invariance needs a sphere map".into(),
        ));
    }
    let map = *map;
    let transformed = run_trials(trials_each, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = spherical_points(n, &mut rng)?;
        Ok(config
            .points
            .iter()
            .filter_map(|&z| map.apply(z).finite().map(|w| w.norm()))
            .collect::<Vec<f64>>())
    })?;
    let fresh = run_trials(trials_each, threads, |trial| {
        let mut rng = RngStream::new(seed, BATCH_OFFSET + trial);
        let config = spherical_points(n, &mut rng)?;
        Ok(config.points.iter().map(|z| z.norm()).collect::<Vec<f64>>())
    })?;
    let a: Vec<f64> = transformed.into_iter().flatten().collect();
    let b: Vec<f64> = fresh.into_iter().flatten().collect();
    let stat = two_sample_ks(&a, &b)?;
    Ok(TestReport::upper_bound(
        format!("invariance-spherical-n{n}"),
        stat,
        (a.len() as f64).sqrt().recip(),
        two_sample_ks_critical(a.len(), b.len()),
        2 * trials_each,
        seed,
    ))
}

/// Disk-automorphism invariance of the det-GAF zeros, tested on the mean
/// count in a smaller disk: transformed samples against fresh ones.
#[allow(clippy::too_many_arguments)]
pub fn invariance_hyperbolic(
    n: u32,
    map: &MobiusMap,
    sample_radius: f64,
    count_radius: f64,
    tail_eps: f64,
    trials_each: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<TestReport> {
    ensure_trials(trials_each)?;
    if map.geometry() != Geometry::Disk {
        return Err(Error::Domain(
            "hyperbolic invariance needs a disk map".into(),
        ));
    }
    // The preimage of the counting disk must sit inside the sampling disk.
    let c = map.beta().norm() / map.alpha().norm();
    let preimage_reach = (count_radius + c) / (1.0 + count_radius * c);
    if preimage_reach > sample_radius {
        return Err(Error::Domain(format!(
            "counting disk preimage reaches {preimage_reach:.3} > sampling radius {sample_radius}"
        )));
    }
    let map = *map;
    let transformed = run_trials(trials_each, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = det_gaf_zeros(n, sample_radius, tail_eps, &mut rng)?;
        Ok(config
            .points
            .iter()
            .filter_map(|&z| map.apply(z).finite())
            .filter(|w| w.norm() < count_radius)
            .count() as f64)
    })?;
    let fresh = run_trials(trials_each, threads, |trial| {
        let mut rng = RngStream::new(seed, BATCH_OFFSET + trial);
        let config = det_gaf_zeros(n, sample_radius, tail_eps, &mut rng)?;
        Ok(config
            .points
            .iter()
            .filter(|z| z.norm() < count_radius)
            .count() as f64)
    })?;
    let (mean_a, se_a) = real_mean_se(&transformed);
    let (mean_b, se_b) = real_mean_se(&fresh);
    let se = (se_a * se_a + se_b * se_b).sqrt();
    Ok(TestReport::two_sided(
        format!("invariance-hyperbolic-n{n}"),
        mean_a,
        mean_b,
        se,
        sigma * se,
        2 * trials_each,
        seed,
    ))
}

/// Second and fourth moments of scaled entries of Haar-unitary powers,
/// against the independent-Gaussian limit: `E|x|^2 = 1`, `E[x^2] = 0`,
/// cross-moments 0 and `E|x|^4 = 2`.
pub fn haar_power_moments(
    dim: u32,
    n: u32,
    pmax: u32,
    trials: u64,
    threads: usize,
    seed: u64,
) -> Result<MomentTable> {
    ensure_trials(trials)?;
    if dim < 8 * pmax * n {
        return Err(Error::Domain(format!(
            "dimension {dim} is below the separation heuristic {}",
            8 * pmax * n
        )));
    }
    let vars: Vec<(u32, usize, usize)> = (1..=pmax)
        .flat_map(|p| (0..n as usize).flat_map(move |i| (0..n as usize).map(move |j| (p, i, j))))
        .collect();
    let nvars = vars.len();
    let scale = (dim as f64).sqrt();

    let per_trial = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let u = sample_haar_unitary(dim as usize, &mut rng);
        let mut power = u.clone();
        let mut xs = vec![Complex64::new(0.0, 0.0); nvars];
        for p in 1..=pmax {
            if p > 1 {
                power = matmul(&power, &u);
            }
            for (idx, &(vp, i, j)) in vars.iter().enumerate() {
                if vp == p {
                    xs[idx] = power[[i, j]] * scale;
                }
            }
        }
        Ok(xs)
    })?;

    let label = |&(p, i, j): &(u32, usize, usize)| format!("p{p}({i},{j})");
    let mut table = MomentTable::new(trials, seed);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let column = |f: &dyn Fn(&[Complex64]) -> Complex64| -> Vec<Complex64> {
        per_trial.iter().map(|xs| f(xs)).collect()
    };
    for (idx, v) in vars.iter().enumerate() {
        let samples = column(&|xs| Complex64::new(xs[idx].norm_sqr(), 0.0));
        let (mean, se) = complex_mean_se(&samples);
        table.push(format!("E|{}|^2", label(v)), mean, one, se);
    }
    for (idx, v) in vars.iter().enumerate() {
        let samples = column(&|xs| xs[idx] * xs[idx]);
        let (mean, se) = complex_mean_se(&samples);
        table.push(format!("E[{}^2]", label(v)), mean, zero, se);
    }
    for (i, vi) in vars.iter().enumerate() {
        for (j, vj) in vars.iter().enumerate().skip(i + 1) {
            let samples = column(&|xs| xs[i] * xs[j].conj());
            let (mean, se) = complex_mean_se(&samples);
            table.push(
                format!("E[{} conj {}]", label(vi), label(vj)),
                mean,
                zero,
                se,
            );
        }
    }
    for (idx, v) in vars.iter().enumerate() {
        let samples = column(&|xs| Complex64::new(xs[idx].norm_sqr().powi(2), 0.0));
        let (mean, se) = complex_mean_se(&samples);
        table.push(format!("E|{}|^4", label(v)), mean, two, se);
    }
    Ok(table)
}

/// `E|f_N(0)|^2` over truncated-unitary draws against the exact product
/// `prod_{k<N} (k+1)/(n+k+1)`; `|f_N(0)| = |det V|`.
pub fn f0_moment_test(
    n_points: u32,
    n: u32,
    trials: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<TestReport> {
    ensure_trials(trials)?;
    let values = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let v = truncated_unitary_matrix(n_points, n, &mut rng);
        Ok(determinant(&v)?.norm_sqr())
    })?;
    let predicted = crate::kernels::blaschke_zero_moment(n_points, n);
    let (mean, se) = real_mean_se(&values);
    Ok(TestReport::two_sided(
        format!("f0-second-moment-N{n_points}-n{n}"),
        mean,
        predicted,
        se,
        sigma * se,
        trials,
        seed,
    ))
}

/// Exact second moments of the limit coefficients of
/// `det(G_0 + z G_1 + ...)`: expanding the determinant gives
/// `n! binom(k+n-1, n-1)` orthonormal Gaussian monomials at degree `k`, so
/// `E|c_k|^2 = n! binom(k+n-1, n-1)` and distinct degrees are uncorrelated.
pub fn limit_coefficient_second_moment(n: u32, k: usize) -> f64 {
    let mut fact = 1.0f64;
    for i in 2..=n as usize {
        fact *= i as f64;
    }
    fact * binomial(k as u32 + n - 1, n - 1)
}

/// Scaled-coefficient pipeline next to the direct det-GAF reference
/// pipeline, both as moment tables over the same trial budget.
pub struct ConvergenceReport {
    pub scaled: MomentTable,
    pub reference: MomentTable,
}

impl ConvergenceReport {
    /// Worst z-score of the pipeline disagreement, row by row.
    pub fn agreement_z(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.scaled.len() {
            let se = (self.scaled.stderr[i].powi(2) + self.reference.stderr[i].powi(2)).sqrt();
            let z = (self.scaled.empirical[i] - self.reference.empirical[i]).norm() / se;
            worst = worst.max(z);
        }
        worst
    }
}

/// Coefficient convergence of `N^{n/2} det(zI+V)/det(I+zV*)` for truncated
/// unitary `V` toward the det-GAF limit: per-coefficient `E|c_k|^2` and all
/// cross-moments, for both pipelines.
pub fn coefficient_convergence_test(
    n_points: u32,
    n: u32,
    kmax: usize,
    trials: u64,
    threads: usize,
    seed: u64,
) -> Result<ConvergenceReport> {
    ensure_trials(trials)?;
    if n_points < 64 {
        return Err(Error::Guard(format!(
            "matrix size {n_points} below the convergence floor 64"
        )));
    }
    if kmax > 6 {
        return Err(Error::Guard(format!(
            "kmax {kmax} above the convergence guard 6"
        )));
    }
    if n > 3 {
        return Err(Error::Guard(format!("n {n} above the convergence guard 3")));
    }

    let scaled_rows = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let v = truncated_unitary_matrix(n_points, n, &mut rng);
        let series = scaled_blaschke_coefficients(&v, n, kmax, true)?;
        Ok(series.coeffs().to_vec())
    })?;
    let reference_rows = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, BATCH_OFFSET + trial);
        let coeff_matrices: Vec<ComplexMatrix> = (0..=kmax)
            .map(|_| sample_ginibre_matrix(n as usize, &mut rng))
            .collect();
        let entries = ndarray::Array2::from_shape_fn((n as usize, n as usize), |(i, j)| {
            let coeffs: Vec<Complex64> = coeff_matrices.iter().map(|g| g[[i, j]]).collect();
            TruncatedSeries::new(coeffs).expect("finite Gaussians")
        });
        Ok(det_series(&entries, kmax)?.coeffs().to_vec())
    })?;

    let build = |rows: &[Vec<Complex64>]| -> MomentTable {
        let mut table = MomentTable::new(trials, seed);
        for k in 0..=kmax {
            let samples: Vec<Complex64> = rows
                .iter()
                .map(|r| Complex64::new(r[k].norm_sqr(), 0.0))
                .collect();
            let (mean, se) = complex_mean_se(&samples);
            let predicted = Complex64::new(limit_coefficient_second_moment(n, k), 0.0);
            table.push(format!("E|c{k}|^2"), mean, predicted, se);
        }
        for k in 0..=kmax {
            for m in k + 1..=kmax {
                let samples: Vec<Complex64> = rows.iter().map(|r| r[k] * r[m].conj()).collect();
                let (mean, se) = complex_mean_se(&samples);
                table.push(
                    format!("E[c{k} conj c{m}]"),
                    mean,
                    Complex64::new(0.0, 0.0),
                    se,
                );
            }
        }
        table
    };
    Ok(ConvergenceReport {
        scaled: build(&scaled_rows),
        reference: build(&reference_rows),
    })
}

/// Mean count of Ginibre eigenvalues in a disk against the kernel integral.
pub fn ginibre_intensity_test(
    n: u32,
    r: f64,
    trials: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<TestReport> {
    ensure_trials(trials)?;
    let counts = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = ginibre_points(n, &mut rng)?;
        Ok(config.points.iter().filter(|z| z.norm() < r).count() as f64)
    })?;
    let predicted = expected_count(&KernelFamily::planar(n), r)?;
    let (mean, se) = real_mean_se(&counts);
    Ok(TestReport::two_sided(
        format!("ginibre-intensity-n{n}-r{r}"),
        mean,
        predicted,
        se,
        sigma * se,
        trials,
        seed,
    ))
}

/// Mean count of det-GAF zeros in a disk against `n r^2/(1-r^2)`, plus the
/// analytic truncation-bias bound documented next to it.
#[allow(clippy::too_many_arguments)]
pub fn det_gaf_intensity_test(
    n: u32,
    radius: f64,
    tail_eps: f64,
    trials: u64,
    threads: usize,
    seed: u64,
    sigma: f64,
) -> Result<Vec<TestReport>> {
    ensure_trials(trials)?;
    let counts = run_trials(trials, threads, |trial| {
        let mut rng = RngStream::new(seed, trial);
        let config = det_gaf_zeros(n, radius, tail_eps, &mut rng)?;
        Ok(config.points.len() as f64)
    })?;
    let predicted = expected_count(&KernelFamily::hyperbolic(n), radius)?;
    let (mean, se) = real_mean_se(&counts);
    let count_report = TestReport::two_sided(
        format!("det-gaf-intensity-n{n}-r{radius}"),
        mean,
        predicted,
        se,
        sigma * se,
        trials,
        seed,
    );
    let bias = det_gaf_truncation_bias(n, radius, tail_eps);
    let bias_report = TestReport::upper_bound(
        format!("det-gaf-truncation-bias-n{n}-r{radius}"),
        bias,
        0.0,
        0.01 * predicted,
        trials,
        seed,
    );
    Ok(vec![count_report, bias_report])
}

/// Exact Möbius identities at random parameters and points, reported as the
/// maximum absolute deviation per identity.
pub fn mobius_identity_suite(samples: u64, seed: u64) -> Result<Vec<TestReport>> {
    let mut rng = RngStream::new(seed, 0);
    let mut dev_derivative = 0.0f64;
    let mut dev_metric = 0.0f64;
    let mut dev_difference = 0.0f64;
    let mut dev_disk = 0.0f64;
    for _ in 0..samples {
        // Sphere identities.
        let (alpha, beta) = random_sphere_parameters(&mut rng);
        let map = MobiusMap::sphere(alpha, beta)?;
        let z = sample_complex_gaussian(&mut rng);
        let w = sample_complex_gaussian(&mut rng);
        let den_z = map.denominator(z);
        let den_w = map.denominator(w);

        let closed_form = Complex64::new(1.0, 0.0) / (den_z * den_z);
        dev_derivative = dev_derivative.max((map.derivative(z) - closed_form).norm());

        if let (ExtendedComplex::Finite(phi_z), ExtendedComplex::Finite(phi_w)) =
            (map.apply(z), map.apply(w))
        {
            let lhs = (1.0 + phi_z.norm_sqr()) * den_z.norm_sqr();
            dev_metric = dev_metric.max((lhs - (1.0 + z.norm_sqr())).abs());

            let rhs = (z - w) / (den_z * den_w);
            dev_difference = dev_difference.max((phi_z - phi_w - rhs).norm());
        }

        // Disk analogue with its own parameters and in-disk points.
        let (alpha_d, beta_d) = random_disk_parameters(&mut rng);
        let disk = MobiusMap::disk(alpha_d, beta_d)?;
        let zd = disk_point(&mut rng);
        let wd = disk_point(&mut rng);
        if let (ExtendedComplex::Finite(pz), ExtendedComplex::Finite(pw)) =
            (disk.apply(zd), disk.apply(wd))
        {
            let one = Complex64::new(1.0, 0.0);
            let lhs = disk.derivative(zd) * disk.derivative(wd).conj()
                / ((one - pz * pw.conj()) * (one - pz * pw.conj()));
            let rhs = one / ((one - zd * wd.conj()) * (one - zd * wd.conj()));
            dev_disk = dev_disk.max((lhs - rhs).norm());
        }
    }
    let report = |name: &str, dev: f64| {
        TestReport::upper_bound(name.to_string(), dev, 0.0, 1e-12, samples, seed)
    };
    Ok(vec![
        report("mobius-derivative-identity", dev_derivative),
        report("mobius-metric-identity", dev_metric),
        report("mobius-difference-identity", dev_difference),
        report("mobius-disk-identity", dev_disk),
    ])
}

fn random_sphere_parameters(rng: &mut RngStream) -> (Complex64, Complex64) {
    loop {
        let a = sample_complex_gaussian(rng);
        let b = sample_complex_gaussian(rng);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm > 1e-6 {
            return (a / norm, b / norm);
        }
    }
}

fn random_disk_parameters(rng: &mut RngStream) -> (Complex64, Complex64) {
    let beta = sample_complex_gaussian(rng);
    let phase = {
        let g = sample_complex_gaussian(rng);
        if g.norm() > 0.0 {
            g / g.norm()
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    let alpha = phase * (1.0 + beta.norm_sqr()).sqrt();
    (alpha, beta)
}

fn disk_point(rng: &mut RngStream) -> Complex64 {
    let g = sample_complex_gaussian(rng);
    g * (0.9 / (1.0 + g.norm_sqr()).sqrt())
}

/// Kernel self-consistency: Hermitian symmetry, Gram positivity, the
/// truncated-kernel normalization and the two independent first-moment
/// routes.
pub fn kernel_consistency_suite(seed: u64) -> Result<Vec<TestReport>> {
    let mut rng = RngStream::new(seed, 0);
    let families = [
        KernelFamily::planar(3),
        KernelFamily::spherical(2),
        KernelFamily::hyperbolic(2),
        KernelFamily::truncated(12, 2),
    ];

    let pairs = 1000u64;
    let mut hermitian_dev = 0.0f64;
    for _ in 0..pairs {
        for family in &families {
            let scale = match family {
                KernelFamily::Planar { .. } | KernelFamily::Spherical { .. } => 1.0,
                _ => 0.4,
            };
            let z = sample_complex_gaussian(&mut rng) * scale;
            let w = sample_complex_gaussian(&mut rng) * scale;
            if z.norm() >= 1.0 || w.norm() >= 1.0 {
                continue;
            }
            let kzw = kernel_eval(family, z, w)?;
            let kwz = kernel_eval(family, w, z)?;
            hermitian_dev = hermitian_dev.max((kzw - kwz.conj()).norm() / (1.0 + kzw.norm()));
        }
    }

    let mut min_gram = f64::INFINITY;
    for family in &families {
        for k in 1..=6usize {
            for _ in 0..25 {
                let points: Vec<Complex64> = (0..k)
                    .map(|_| {
                        let g = sample_complex_gaussian(&mut rng);
                        match family {
                            KernelFamily::Planar { .. } | KernelFamily::Spherical { .. } => g,
                            _ => g * (0.9 / (1.0 + g.norm_sqr()).sqrt()),
                        }
                    })
                    .collect();
                min_gram = min_gram.min(gram_determinant(family, &points)?);
            }
        }
    }

    let mut norm_dev = 0.0f64;
    for n in [1u32, 2, 3] {
        for j in 0..=20u32 {
            let v = truncated_coefficient(n, j) * truncated_moment_quadrature(n, j);
            norm_dev = norm_dev.max((v - 1.0).abs());
        }
    }

    // Two genuinely independent routes to the truncated first moment: the
    // adaptive quadrature of K(z,z) against the reference measure on one
    // side, the independent-Beta CDF sum on the other.
    let mut route_dev = 0.0f64;
    for &(n_points, n) in &[(8u32, 1u32), (32, 1), (16, 2), (24, 3)] {
        for &t in &[0.1f64, 0.25, 0.5, 0.75, 0.9] {
            let fam = KernelFamily::truncated(n_points, n);
            let via_kernel = expected_count_quadrature(&fam, t.sqrt())?;
            let (mean, _) = predicted_count_moments(n_points, n, t)?;
            route_dev = route_dev.max((via_kernel - mean).abs());
        }
    }

    Ok(vec![
        TestReport::upper_bound(
            "kernel-hermitian-symmetry",
            hermitian_dev,
            0.0,
            1e-12,
            pairs,
            seed,
        ),
        // Gram determinants may dip below zero only by round-off.
        TestReport::upper_bound(
            "kernel-gram-psd",
            (-min_gram).max(0.0),
            0.0,
            1e-10,
            600,
            seed,
        ),
        TestReport::upper_bound(
            "kernel-truncated-normalization",
            norm_dev,
            0.0,
            1e-8,
            63,
            seed,
        ),
        TestReport::upper_bound("kernel-first-moment-routes", route_dev, 0.0, 1e-6, 20, seed),
    ])
}

/// Conditioning floor for the oracle ensemble: the cycle sum cancels terms
/// of size `|lambda_min|^{-k}`, so draws with a smaller singular value
/// measure floating-point cancellation instead of the identity. Empirically
/// the worst relative discrepancy at `k = 10` stays below 1e-10 above this
/// floor and reaches 1e-2 near zero.
pub const ORACLE_SMIN_FLOOR: f64 = 0.25;

/// Cycle-sum derivatives against factorial-scaled series-division
/// coefficients on random invertible matrices: the module's central
/// equivalence, reported as the worst relative discrepancy.
pub fn cycle_sum_oracle_suite(matrices: u64, kmax: usize, seed: u64) -> Result<TestReport> {
    let mut worst = 0.0f64;
    for trial in 0..matrices {
        let size = 2 + (trial % 5) as usize;
        let mut attempt = 0u64;
        let v = loop {
            let base = RngStream::new(seed, trial);
            let mut rng = if attempt == 0 {
                base
            } else {
                base.retry_stream(attempt)
            };
            let candidate = sample_ginibre_matrix(size, &mut rng);
            let smin = *crate::linalg::singular_values(&candidate)?
                .last()
                .expect("nonempty");
            if smin >= ORACLE_SMIN_FLOOR {
                break candidate;
            }
            attempt += 1;
            if attempt > 64 {
                return Err(Error::Guard(
                    "could not draw a well-conditioned matrix".into(),
                ));
            }
        };
        let derivs = blaschke_derivatives(&v, kmax)?;
        let ratio = series_ratio(&v, kmax)?;
        let mut factorial = 1.0f64;
        for k in 0..=kmax {
            if k > 0 {
                factorial *= k as f64;
            }
            let via_series = ratio.coeff(k) * factorial;
            let rel = (derivs[k] - via_series).norm() / (1.0 + via_series.norm());
            worst = worst.max(rel);
        }
    }
    Ok(TestReport::upper_bound(
        "cycle-sum-vs-series-division",
        worst,
        0.0,
        1e-9,
        matrices,
        seed,
    ))
}

/// Runs a named suite with parameters from `cfg`. Defaults reproduce the
/// acceptance settings.
pub fn run_suite(name: &str, cfg: &Config) -> Result<Vec<TestReport>> {
    let seed = cfg.get_u64("seed", 1)?;
    let threads = cfg.get_usize("threads", 1)?;
    // Significance levels: z-score thresholds for count/moment means, the
    // fourth-moment z threshold, and the squared-moment allowance of the
    // convergence suite.
    let sigma = cfg.get_f64("sigma", 3.0)?;
    let moment_sigma = cfg.get_f64("moment_sigma", 4.0)?;
    let allowance = cfg.get_f64("allowance", 0.05)?;
    match name {
        "radial" => {
            let trials = cfg.get_u64("trials", 10_000)?;
            let mut reports = vec![radial_law_spherical(trials, threads, seed)?];
            reports.push(radial_law_truncated_worst(
                cfg.get_u32("N", 32)?,
                cfg.get_u32("n", 1)?,
                &[0.25, 0.5, 0.75],
                trials,
                threads,
                seed,
                sigma,
            )?);
            Ok(reports)
        }
        "beta-counts" => radial_law_truncated(
            cfg.get_u32("N", 32)?,
            cfg.get_u32("n", 1)?,
            &[0.25, 0.5, 0.75],
            cfg.get_u64("trials", 10_000)?,
            threads,
            seed,
            sigma,
        ),
        "invariance" => {
            let map = MobiusMap::sphere(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8))?;
            let sphere = invariance_spherical(
                cfg.get_u32("n", 3)?,
                &map,
                cfg.get_u64("trials", 5_000)?,
                threads,
                seed,
            )?;
            let s = 0.5f64;
            let disk =
                MobiusMap::disk(Complex64::new(s.cosh(), 0.0), Complex64::new(s.sinh(), 0.0))?;
            let hyper = invariance_hyperbolic(
                1,
                &disk,
                0.9,
                cfg.get_f64("radius", 0.6)?,
                cfg.get_f64("tail_eps", 1e-6)?,
                cfg.get_u64("hyperbolic_trials", 500)?,
                threads,
                seed,
                sigma,
            )?;
            Ok(vec![sphere, hyper])
        }
        "haar-moments" => {
            let table = haar_power_moments(
                cfg.get_u32("N", 128)?,
                cfg.get_u32("n", 2)?,
                cfg.get_u32("pmax", 3)?,
                cfg.get_u64("trials", 10_000)?,
                threads,
                seed,
            )?;
            Ok(vec![
                table.as_report("haar-power-moments-worst-z", moment_sigma)
            ])
        }
        "f0-moment" => Ok(vec![f0_moment_test(
            cfg.get_u32("N", 16)?,
            cfg.get_u32("n", 2)?,
            cfg.get_u64("trials", 10_000)?,
            threads,
            seed,
            sigma,
        )?]),
        "ginibre-intensity" => Ok(vec![ginibre_intensity_test(
            cfg.get_u32("n", 20)?,
            cfg.get_f64("radius", 3.0)?,
            cfg.get_u64("trials", 1_000)?,
            threads,
            seed,
            sigma,
        )?]),
        "det-gaf-intensity" => det_gaf_intensity_test(
            cfg.get_u32("n", 1)?,
            cfg.get_f64("radius", 0.6)?,
            cfg.get_f64("tail_eps", 1e-6)?,
            cfg.get_u64("trials", 2_000)?,
            threads,
            seed,
            sigma,
        ),
        "oracle-lemma41" => Ok(vec![cycle_sum_oracle_suite(
            cfg.get_u64("trials", 100)?,
            cfg.get_usize("kmax", 10)?,
            seed,
        )?]),
        "convergence" => {
            let report = coefficient_convergence_test(
                cfg.get_u32("N", 256)?,
                cfg.get_u32("n", 1)?,
                cfg.get_usize("kmax", 3)?,
                cfg.get_u64("trials", 2_000)?,
                threads,
                seed,
            )?;
            Ok(convergence_reports(&report, allowance, sigma))
        }
        "mobius" => mobius_identity_suite(cfg.get_u64("trials", 1_000)?, seed),
        "kernel-consistency" => kernel_consistency_suite(seed),
        other => Err(Error::Config(format!("unknown suite: {other}"))),
    }
}

/// Folds a convergence report into pass/fail lines: exact-moment checks with
/// a relative allowance on the squared moments, cross-moment checks at three
/// sigma, and the pipeline-agreement check.
pub fn convergence_reports(
    report: &ConvergenceReport,
    allowance: f64,
    sigma: f64,
) -> Vec<TestReport> {
    let scaled = &report.scaled;
    let mut out = Vec::new();
    for i in 0..scaled.len() {
        let label = &scaled.labels[i];
        let predicted = scaled.predicted[i];
        let is_square_moment = label.starts_with("E|");
        let slack = if is_square_moment {
            allowance * predicted.norm()
        } else {
            0.0
        };
        out.push(TestReport::two_sided(
            format!("convergence-{label}"),
            scaled.empirical[i].norm(),
            predicted.norm(),
            scaled.stderr[i],
            sigma * scaled.stderr[i] + slack,
            scaled.trials,
            scaled.seed,
        ));
    }
    out.push(TestReport::upper_bound(
        "convergence-pipeline-agreement",
        report.agreement_z(),
        1.0,
        sigma,
        scaled.trials,
        scaled.seed,
    ));
    out
}

/// All suites [`run_suite`] recognizes.
pub const SUITE_NAMES: &[&str] = &[
    "radial",
    "beta-counts",
    "invariance",
    "haar-moments",
    "f0-moment",
    "ginibre-intensity",
    "det-gaf-intensity",
    "oracle-lemma41",
    "convergence",
    "mobius",
    "kernel-consistency",
];
