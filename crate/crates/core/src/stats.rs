//! Statistical verification engine: moment reports with z-score bands,
//! Poisson central moments and the Gaussian-moment table, trace limit tests
//! in the fixed-degree and growing-degree regimes, the Ewens variant, and
//! Poisson goodness of fit.
//!
//! Every statistical pass threshold is |z| <= 4 (two-sided false alarm about
//! 6e-5 per test), so suites of dozens of bands stay CI-stable. Standard
//! errors of nonlinear statistics (variances, factorial moments, sup norms)
//! come from batch means over [`BATCHES`] batches.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::digraph::{divisors, PermSum, WorkBudget};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Batch count for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Statistical acceptance band: |z| <= 4.
pub const Z_PASS: f64 = 4.0;

/// One estimated quantity compared against its analytic target.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub label: String,
    pub target: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub z_score: f64,
    pub pass: bool,
}

impl MomentReport {
    pub fn new(label: impl Into<String>, target: f64, estimate: f64, se: f64, n: u64) -> Self {
        let z = if se > 0.0 {
            (estimate - target) / se
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        MomentReport {
            label: label.into(),
            target,
            estimate,
            std_error: se,
            n_samples: n,
            z_score: z,
            pass: z.abs() <= Z_PASS,
        }
    }
}

/// Falling factorial x (x-1) ... (x-r+1); empty product is 1.
pub fn falling_factorial(x: f64, r: u32) -> f64 {
    (0..r).map(|i| x - i as f64).product()
}

/// Mean and batch-means standard error of a sample sequence.
pub fn batch_means(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 * BATCHES {
        // Fall back to the plain iid standard error.
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        return (mean, (var / n as f64).sqrt());
    }
    let per = n / BATCHES;
    let used = per * BATCHES;
    let per_batch: Vec<f64> = (0..BATCHES)
        .map(|b| values[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let grand = values[..used].iter().sum::<f64>() / used as f64;
    let var_b = per_batch.iter().map(|m| (m - grand).powi(2)).sum::<f64>()
        / (BATCHES as f64 - 1.0);
    (mean, (var_b / BATCHES as f64).sqrt())
}

/// Wilson score interval for a binomial proportion at `z` standard normal
/// quantiles (z = 1.96 for 95%).
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Gaussian even-moment constants m_k = (2k)!/(2^k k!) = (2k-1)!!, so that
/// the standard normal has E N^{2k} = m_k.
pub fn gaussian_even_moment(k: u32) -> f64 {
    let mut m = 1.0f64;
    for j in 1..=k {
        m *= (2 * j - 1) as f64;
    }
    m
}

/// Coefficients (in lambda) of the k-th central moment of Poisson(lambda),
/// exact integers: `mu_k(lambda) = sum_j coeffs[j] lambda^j`.
///
/// Derived from the generating identity mu_k(lambda)/k! = [z^k] exp(g(z))
/// with g(z) = lambda (e^z - 1 - z), via the series recurrence F' = g' F
/// for F = exp(g).
pub fn poisson_central_moment_poly(k: usize) -> Result<Vec<i128>> {
    if k > 20 {
        return Err(Error::invalid(
            "poisson_central_moment supports k <= 20 (factorial overflow guard)",
        ));
    }
    let deg = k / 2 + 2;
    let mut fac = vec![BigRational::one(); k + 1];
    for m in 1..=k {
        fac[m] = &fac[m - 1] * BigRational::from(BigInt::from(m as i64));
    }
    // f[m] is the coefficient polynomial (in lambda) of [z^m] exp(g).
    let mut f: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); deg]; k + 1];
    f[0][0] = BigRational::one();
    for m in 1..=k {
        // m f[m] = sum_{j=2..m} j g_j f[m-j], with g_j = lambda / j!.
        let mut acc = vec![BigRational::zero(); deg];
        for j in 2..=m {
            let gj = BigRational::from(BigInt::from(j as i64)) / &fac[j];
            for (d, c) in f[m - j].iter().enumerate() {
                if !c.is_zero() && d + 1 < deg {
                    acc[d + 1] += c * &gj;
                }
            }
        }
        let inv_m = BigRational::new(BigInt::one(), BigInt::from(m as i64));
        for c in acc.iter_mut() {
            *c *= &inv_m;
        }
        f[m] = acc;
    }
    // mu_k = k! * f[k]; the result must be integral.
    let mut out = Vec::new();
    for c in &f[k] {
        let v = c * &fac[k];
        if !v.denom().is_one() {
            return Err(Error::Numerical(format!(
                "central moment coefficient not integral: {v}"
            )));
        }
        out.push(
            v.numer()
                .to_i128()
                .ok_or_else(|| Error::Numerical("central moment coefficient exceeds i128".into()))?,
        );
    }
    while out.len() > 1 && *out.last().unwrap() == 0 {
        out.pop();
    }
    Ok(out)
}

/// k-th central moment of Poisson(lambda), exact polynomial evaluation.
pub fn poisson_central_moment(lambda: f64, k: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let coeffs = poisson_central_moment_poly(k)?;
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * lambda + c as f64;
    }
    Ok(acc)
}

/// Report row of [`poisson_clt_moment_check`].
#[derive(Debug, Clone, Serialize)]
pub struct CltRow {
    pub lambda: f64,
    pub k: usize,
    /// mu_k(lambda) / lambda^{k/2}, the exact standardized moment.
    pub analytic: f64,
    /// Gaussian target: 0 for odd k, (k-1)!! for even k.
    pub gaussian: f64,
    /// Empirical standardized moment from exact Poisson draws.
    pub sampled: MomentReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonCltReport {
    pub rows: Vec<CltRow>,
    pub all_pass: bool,
}

/// Standardized Poisson moments against Gaussian targets: the analytic
/// column is exact (no sampling); the sampled column cross-checks the
/// Poisson sampler against the analytic value.
pub fn poisson_clt_moment_check(
    lambda_list: &[f64],
    k_max: usize,
    samples: u64,
    seed: u64,
) -> Result<PoissonCltReport> {
    if lambda_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("lambda_list must be strictly increasing"));
    }
    let mut rows = Vec::new();
    for (li, &lambda) in lambda_list.iter().enumerate() {
        let draws: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|t| {
                let mut rng = RngStream::new(seed, ((li as u64) << 32) | t);
                rng.poisson(lambda).value
            })
            .collect();
        let slam = lambda.sqrt();
        for k in 1..=k_max {
            let analytic = poisson_central_moment(lambda, k)? / lambda.powf(k as f64 / 2.0);
            let gaussian = if k % 2 == 0 {
                gaussian_even_moment(k as u32 / 2)
            } else {
                0.0
            };
            let std_moments: Vec<f64> = draws
                .iter()
                .map(|&v| ((v - lambda) / slam).powi(k as i32))
                .collect();
            let (mean, se) = batch_means(&std_moments);
            rows.push(CltRow {
                lambda,
                k,
                analytic,
                gaussian,
                sampled: MomentReport::new(
                    format!("lambda={lambda} standardized moment k={k}"),
                    analytic,
                    mean,
                    se,
                    samples,
                ),
            });
        }
    }
    let all_pass = rows.iter().all(|r| r.sampled.pass);
    Ok(PoissonCltReport { rows, all_pass })
}

/// Per-trial observables shared by the trace limit tests.
struct TrialRow {
    traces: Vec<f64>,
    cycles: Vec<f64>,
}

fn collect_trials(
    n: usize,
    d: usize,
    theta: Option<f64>,
    k_max: usize,
    ell_max: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<TrialRow>> {
    let budget = WorkBudget::default();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t);
            let a = match theta {
                Some(th) => PermSum::sample_ewens(n, d, th, &mut rng)?,
                None => PermSum::sample_uniform(n, d, &mut rng)?,
            };
            let traces = (1..=k_max)
                .map(|k| a.trace_power(k, &budget).map(|v| v as f64))
                .collect::<Result<Vec<_>>>()?;
            let cycles = if ell_max > 0 {
                a.cycle_counts(ell_max, &budget)?
                    .counts
                    .iter()
                    .map(|&q| q as f64)
                    .collect()
            } else {
                Vec::new()
            };
            Ok(TrialRow { traces, cycles })
        })
        .collect()
}

fn correlation_report(label: String, xs: &[f64], ys: &[f64], trials: u64) -> MomentReport {
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    let sy = (ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / ys.len() as f64).sqrt();
    let prods: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my) / (sx * sy))
        .collect();
    let (corr, se) = batch_means(&prods);
    MomentReport::new(label, 0.0, corr, se, trials)
}

/// Report of [`trace_limit_test_fixed_d`].
#[derive(Debug, Clone, Serialize)]
pub struct TraceLimitReport {
    pub n: usize,
    pub d: usize,
    pub trials: u64,
    pub checks: Vec<MomentReport>,
    /// TV distance of tr(A) to Poisson(d).
    pub tv_trace: f64,
    /// TV distance of Q_1 to Poisson(d).
    pub tv_q1: f64,
    pub all_pass: bool,
}

/// Fixed-degree trace limits: marginal means/variances and pairwise
/// covariances of (tr A, .., tr A^k) against the divisor-weighted Poisson
/// limit law, first and second factorial moments of the cycle counts, the
/// Q_1/Q_2 correlation, and the total-variation distance of tr(A) and Q_1
/// to Poisson(d).
pub fn trace_limit_test_fixed_d(
    n: usize,
    d: usize,
    k_max: usize,
    ell_max: usize,
    trials: u64,
    seed: u64,
) -> Result<TraceLimitReport> {
    if !(1..=5).contains(&k_max) {
        return Err(Error::invalid("k_max must be in 1..=5 for the fixed-d test"));
    }
    let ell_max = ell_max.max(2);
    let rows = collect_trials(n, d, None, k_max, ell_max, trials, seed)?;
    let mut checks = Vec::new();
    let df = d as f64;

    for k in 1..=k_max {
        // Limit law of tr(A^k): sum over divisors l of k of l * Lambda_l.
        let mean_target: f64 = divisors(k).iter().map(|&l| df.powi(l as i32)).sum();
        let var_target: f64 = divisors(k).iter().map(|&l| l as f64 * df.powi(l as i32)).sum();
        let vals: Vec<f64> = rows.iter().map(|r| r.traces[k - 1]).collect();
        let (mean, se) = batch_means(&vals);
        checks.push(MomentReport::new(format!("E tr(A^{k})"), mean_target, mean, se, trials));
        let centered_sq: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
        let (var, var_se) = batch_means(&centered_sq);
        checks.push(MomentReport::new(
            format!("Var tr(A^{k})"),
            var_target,
            var,
            var_se,
            trials,
        ));
    }
    for j in 1..=k_max {
        for k in j + 1..=k_max {
            let cov_target: f64 = divisors(gcd(j, k))
                .iter()
                .map(|&l| l as f64 * df.powi(l as i32))
                .sum();
            let xs: Vec<f64> = rows.iter().map(|r| r.traces[j - 1]).collect();
            let ys: Vec<f64> = rows.iter().map(|r| r.traces[k - 1]).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let prods: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - mx) * (y - my))
                .collect();
            let (cov, se) = batch_means(&prods);
            checks.push(MomentReport::new(
                format!("Cov(tr A^{j}, tr A^{k})"),
                cov_target,
                cov,
                se,
                trials,
            ));
        }
    }
    // Cycle counts: E Q_l = d^l / l and E (Q_l)_2 = (d^l / l)^2.
    for l in 1..=ell_max {
        let lambda = df.powi(l as i32) / l as f64;
        let vals: Vec<f64> = rows.iter().map(|r| r.cycles[l - 1]).collect();
        let (mean, se) = batch_means(&vals);
        checks.push(MomentReport::new(format!("E Q_{l}"), lambda, mean, se, trials));
        let ff: Vec<f64> = vals.iter().map(|&q| falling_factorial(q, 2)).collect();
        let (m2, se2) = batch_means(&ff);
        checks.push(MomentReport::new(
            format!("E (Q_{l})_2"),
            lambda * lambda,
            m2,
            se2,
            trials,
        ));
    }
    let q1: Vec<f64> = rows.iter().map(|r| r.cycles[0]).collect();
    let q2: Vec<f64> = rows.iter().map(|r| r.cycles[1]).collect();
    checks.push(correlation_report("corr(Q_1, Q_2)".into(), &q1, &q2, trials));

    let trace_samples: Vec<u64> = rows.iter().map(|r| r.traces[0] as u64).collect();
    let q1_samples: Vec<u64> = rows.iter().map(|r| r.cycles[0] as u64).collect();
    let tv_trace = poisson_gof(&trace_samples, df)?.tv_distance;
    let tv_q1 = poisson_gof(&q1_samples, df)?.tv_distance;

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(TraceLimitReport {
        n,
        d,
        trials,
        checks,
        tv_trace,
        tv_q1,
        all_pass,
    })
}

/// Report of [`trace_limit_test_growing_d`].
#[derive(Debug, Clone, Serialize)]
pub struct GrowingTraceReport {
    pub n: usize,
    pub d: usize,
    pub trials: u64,
    pub checks: Vec<MomentReport>,
    pub all_pass: bool,
}

/// Growing-degree regime: standardized traces s_k = (tr A^k - d^k)/d^{k/2}
/// against the Gaussian limit — mean 1 for even k and 0 for odd k,
/// variance k, skewness 0, vanishing pairwise correlations.
pub fn trace_limit_test_growing_d(
    n: usize,
    d: usize,
    k_max: usize,
    trials: u64,
    seed: u64,
) -> Result<GrowingTraceReport> {
    let dk = (d as f64).powi(k_max as i32);
    if dk > n as f64 / 10.0 {
        return Err(Error::invalid(format!(
            "growing-d test requires d^k_max <= n/10 (d^{k_max} = {dk}, n/10 = {})",
            n as f64 / 10.0
        )));
    }
    let rows = collect_trials(n, d, None, k_max, 0, trials, seed)?;
    let std_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            (1..=k_max)
                .map(|k| {
                    let dk = (d as f64).powi(k as i32);
                    (r.traces[k - 1] - dk) / (d as f64).powf(k as f64 / 2.0)
                })
                .collect()
        })
        .collect();

    let mut checks = Vec::new();
    for k in 1..=k_max {
        let vals: Vec<f64> = std_rows.iter().map(|r| r[k - 1]).collect();
        let (mean, se) = batch_means(&vals);
        let mean_target = if k % 2 == 0 { 1.0 } else { 0.0 };
        checks.push(MomentReport::new(format!("mean s_{k}"), mean_target, mean, se, trials));
        let centered_sq: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
        let (var, var_se) = batch_means(&centered_sq);
        checks.push(MomentReport::new(format!("var s_{k}"), k as f64, var, var_se, trials));
        let sd = var.sqrt();
        let cubes: Vec<f64> = vals.iter().map(|v| ((v - mean) / sd).powi(3)).collect();
        let (skew, skew_se) = batch_means(&cubes);
        checks.push(MomentReport::new(format!("skewness s_{k}"), 0.0, skew, skew_se, trials));
    }
    for j in 1..=k_max {
        for k in j + 1..=k_max {
            let xs: Vec<f64> = std_rows.iter().map(|r| r[j - 1]).collect();
            let ys: Vec<f64> = std_rows.iter().map(|r| r[k - 1]).collect();
            checks.push(correlation_report(format!("corr(s_{j}, s_{k})"), &xs, &ys, trials));
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(GrowingTraceReport {
        n,
        d,
        trials,
        checks,
        all_pass,
    })
}

/// Report of [`ewens_trace_limit_test`].
#[derive(Debug, Clone, Serialize)]
pub struct EwensTraceReport {
    pub n: usize,
    pub d: usize,
    pub theta: f64,
    pub trials: u64,
    pub checks: Vec<MomentReport>,
    pub all_pass: bool,
}

/// Ewens(theta) variant of the fixed-degree limits: the Poisson cycle
/// parameters shift to (d^l + d (theta - 1)) / l; theta = 1 recovers the
/// uniform targets d^l / l.
pub fn ewens_trace_limit_test(
    n: usize,
    d: usize,
    theta: f64,
    k_max: usize,
    trials: u64,
    seed: u64,
) -> Result<EwensTraceReport> {
    if !(theta > 0.0) {
        return Err(Error::invalid("theta must be positive"));
    }
    let ell_max = k_max;
    let rows = collect_trials(n, d, Some(theta), k_max, ell_max, trials, seed)?;
    let lambda = |l: usize| ((d as f64).powi(l as i32) + d as f64 * (theta - 1.0)) / l as f64;

    let mut checks = Vec::new();
    for l in 1..=ell_max {
        let vals: Vec<f64> = rows.iter().map(|r| r.cycles[l - 1]).collect();
        let (mean, se) = batch_means(&vals);
        checks.push(MomentReport::new(
            format!("E Q_{l} (theta={theta})"),
            lambda(l),
            mean,
            se,
            trials,
        ));
    }
    for k in 1..=k_max {
        let target: f64 = divisors(k).iter().map(|&l| l as f64 * lambda(l)).sum();
        let vals: Vec<f64> = rows.iter().map(|r| r.traces[k - 1]).collect();
        let (mean, se) = batch_means(&vals);
        checks.push(MomentReport::new(
            format!("E tr(A^{k}) (theta={theta})"),
            target,
            mean,
            se,
            trials,
        ));
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(EwensTraceReport {
        n,
        d,
        theta,
        trials,
        checks,
        all_pass,
    })
}

/// Report of [`poisson_gof`].
#[derive(Debug, Clone, Serialize)]
pub struct GofReport {
    pub lambda: f64,
    pub n_samples: u64,
    /// Total-variation distance between the empirical law and Poisson(lambda).
    pub tv_distance: f64,
    /// Chi-square statistic with tails pooled to expected count >= 5.
    pub chi_square: f64,
    pub dof: usize,
}

/// Total-variation and chi-square goodness of fit against Poisson(lambda).
pub fn poisson_gof(samples: &[u64], lambda: f64) -> Result<GofReport> {
    if samples.len() < 100 {
        return Err(Error::invalid("poisson_gof needs at least 100 samples"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda must be positive"));
    }
    let n = samples.len() as f64;
    let max_obs = *samples.iter().max().unwrap() as usize;
    // Support out to where the Poisson tail is negligible.
    let k_hi = max_obs.max((lambda + 12.0 * lambda.sqrt()).ceil() as usize) + 1;
    let mut pmf = Vec::with_capacity(k_hi + 1);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for k in 1..=k_hi {
        p *= lambda / k as f64;
        pmf.push(p);
    }
    let mut counts = vec![0u64; k_hi + 1];
    for &s in samples {
        counts[(s as usize).min(k_hi)] += 1;
    }
    let mut tv = 0.0;
    for k in 0..=k_hi {
        tv += (counts[k] as f64 / n - pmf[k]).abs();
    }
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    tv = 0.5 * (tv + tail);

    // Chi-square with pooled bins (expected >= 5).
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for k in 0..=k_hi {
        acc_obs += counts[k] as f64;
        acc_exp += pmf[k] * n;
        if acc_exp >= 5.0 {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    acc_exp += tail * n;
    if acc_exp > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        }
    }
    let chi_square = bins.iter().map(|&(o, e)| (o - e).powi(2) / e).sum::<f64>();
    Ok(GofReport {
        lambda,
        n_samples: samples.len() as u64,
        tv_distance: tv,
        chi_square,
        dof: bins.len().saturating_sub(1),
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::permutations;

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5.0, 2), 20.0);
        assert_eq!(falling_factorial(3.0, 0), 1.0);
        assert_eq!(falling_factorial(3.0, 4), 0.0);
    }

    #[test]
    fn gaussian_moment_table() {
        assert_eq!(gaussian_even_moment(1), 1.0);
        assert_eq!(gaussian_even_moment(2), 3.0);
        assert_eq!(gaussian_even_moment(3), 15.0);
    }

    #[test]
    fn poisson_moment_polynomials() {
        // mu_1 = 0, mu_2 = lambda, mu_3 = lambda, mu_4 = 3 lambda^2 + lambda.
        assert_eq!(poisson_central_moment_poly(1).unwrap(), vec![0]);
        assert_eq!(poisson_central_moment_poly(2).unwrap(), vec![0, 1]);
        assert_eq!(poisson_central_moment_poly(3).unwrap(), vec![0, 1]);
        assert_eq!(poisson_central_moment_poly(4).unwrap(), vec![0, 1, 3]);
        assert!(poisson_central_moment_poly(21).is_err());
    }

    #[test]
    fn poisson_moment_leading_coefficient_is_gaussian() {
        for k in 1..=8u32 {
            let coeffs = poisson_central_moment_poly(2 * k as usize).unwrap();
            assert_eq!(*coeffs.last().unwrap() as f64, gaussian_even_moment(k), "k = {k}");
            assert_eq!(coeffs.len(), k as usize + 1);
            // Odd moments are polynomials of degree <= k.
            let odd = poisson_central_moment_poly(2 * k as usize + 1).unwrap();
            assert!(odd.len() <= k as usize + 1);
        }
    }

    #[test]
    fn poisson_moment_ratio_approaches_gaussian() {
        // mu_{2k}/lambda^k -> m_k; at lambda = 1e4, k = 3 within 1%.
        let ratio = poisson_central_moment(1e4, 6).unwrap() / 1e4f64.powi(3);
        assert!((ratio - 15.0).abs() / 15.0 < 0.01, "ratio {ratio}");
        let mu4 = poisson_central_moment(1e6, 4).unwrap();
        assert!((mu4 / 1e12 - 3.000001).abs() < 1e-9);
    }

    #[test]
    fn poisson_moment_matches_mgf_quadrature() {
        // Independent oracle: extract [z^k] exp(lambda (e^z - 1 - z)) by a
        // trapezoid Cauchy integral on a circle of radius 1/2.
        use num_complex::Complex64;
        for &lambda in &[0.5, 2.0, 10.0] {
            for k in 1..=8usize {
                let m = 512;
                let rho = 0.5f64;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..m {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                    let z = Complex64::from_polar(rho, th);
                    let f = (lambda * (z.exp() - 1.0 - z)).exp();
                    acc += f / Complex64::from_polar(rho.powi(k as i32), th * k as f64);
                }
                let coeff = acc.re / m as f64;
                let mut kfac = 1.0;
                for j in 2..=k {
                    kfac *= j as f64;
                }
                let oracle = coeff * kfac;
                let exact = poisson_central_moment(lambda, k).unwrap();
                assert!(
                    (oracle - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                    "lambda {lambda} k {k}: {oracle} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn poisson_factorial_moments_match_powers() {
        // E (Lambda)_r = lambda^r, checked on exact-Poisson synthetic draws.
        for &lambda in &[1.0f64, 5.0] {
            let mut rng = RngStream::new(31, 0);
            let n = 200_000;
            for r in 1..=4u32 {
                let vals: Vec<f64> = (0..n)
                    .map(|_| falling_factorial(rng.poisson(lambda).value, r))
                    .collect();
                let (mean, se) = batch_means(&vals);
                let target = lambda.powi(r as i32);
                assert!(
                    (mean - target).abs() <= 4.0 * se,
                    "lambda {lambda} r {r}: {mean} vs {target} (se {se})"
                );
            }
        }
    }

    #[test]
    fn clt_check_analytic_and_sampled() {
        let report = poisson_clt_moment_check(&[100.0, 10_000.0], 4, 20_000, 9001).unwrap();
        assert!(report.all_pass);
        // Odd standardized moments shrink like lambda^{-1/2}.
        let skew_small = report
            .rows
            .iter()
            .find(|r| r.lambda == 100.0 && r.k == 3)
            .unwrap()
            .analytic;
        let skew_large = report
            .rows
            .iter()
            .find(|r| r.lambda == 10_000.0 && r.k == 3)
            .unwrap()
            .analytic;
        assert!((skew_small - 0.1).abs() < 1e-12);
        assert!((skew_large - 0.01).abs() < 1e-12);
        assert!(poisson_clt_moment_check(&[5.0, 2.0], 2, 100, 0).is_err());
    }

    #[test]
    fn gof_accepts_true_poisson_and_rejects_constant() {
        let mut rng = RngStream::new(77, 0);
        let samples: Vec<u64> = (0..100_000).map(|_| rng.poisson(3.0).value as u64).collect();
        let report = poisson_gof(&samples, 3.0).unwrap();
        assert!(report.tv_distance <= 0.01, "tv {}", report.tv_distance);

        let constant = vec![3u64; 1000];
        let degenerate = poisson_gof(&constant, 3.0).unwrap();
        // TV to the point mass at the mode: 1 - p(3).
        let p3 = (-3.0f64).exp() * 27.0 / 6.0;
        assert!((degenerate.tv_distance - (1.0 - p3)).abs() < 0.01);

        assert!(poisson_gof(&constant[..50], 3.0).is_err());
    }

    #[test]
    fn wilson_interval_contains_proportion() {
        let (lo, hi) = wilson_interval(5, 50, 1.96);
        assert!(lo < 0.1 && 0.1 < hi);
        assert!(lo > 0.0 && hi < 1.0);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn batch_means_recovers_iid_se() {
        let mut rng = RngStream::new(123, 0);
        let vals: Vec<f64> = (0..20_000).map(|_| rng.normal()).collect();
        let (mean, se) = batch_means(&vals);
        assert!(mean.abs() < 4.0 * se);
        let iid = 1.0 / (vals.len() as f64).sqrt();
        assert!(se > 0.5 * iid && se < 2.0 * iid, "se {se} vs iid {iid}");
    }

    #[test]
    fn fixed_point_law_matches_derangement_formula() {
        // Exact enumeration at small n: P(#fix = j) = C(n, j) D_{n-j} / n!.
        for n in 2..=7usize {
            let mut histogram = vec![0u64; n + 1];
            for p in permutations(n) {
                histogram[p.count_fixed_points()] += 1;
            }
            let mut derangements = vec![1i64; n + 1];
            derangements[1] = 0;
            for m in 2..=n {
                derangements[m] = (m as i64 - 1) * (derangements[m - 1] + derangements[m - 2]);
            }
            let mut binom = 1u64;
            for j in 0..=n {
                assert_eq!(
                    histogram[j] as i64,
                    binom as i64 * derangements[n - j],
                    "n={n} j={j}"
                );
                binom = binom * (n - j) as u64 / (j + 1) as u64;
            }
        }
    }

    #[test]
    fn sampled_fixed_point_law_matches_enumeration() {
        // d = 1: tr(A) is the fixed-point count. The Monte Carlo histogram at
        // n = 7 must match the exactly enumerated law within a chi-square
        // band (0.1% quantile, 7 dof pooled: j >= 5 has tiny mass, pool it).
        use crate::digraph::PermSum;
        let n = 7usize;
        let nfact: f64 = (1..=n as u64).product::<u64>() as f64;
        let mut exact = vec![0.0; n + 1];
        for p in permutations(n) {
            exact[p.count_fixed_points()] += 1.0 / nfact;
        }
        let trials = 100_000u64;
        let mut counts = vec![0u64; n + 1];
        for t in 0..trials {
            let mut rng = RngStream::new(606, t);
            let a = PermSum::sample_uniform(n, 1, &mut rng).unwrap();
            counts[a.trace_power(1, &crate::digraph::WorkBudget::default()).unwrap() as usize] += 1;
        }
        // Pool bins with expected count < 5 into the previous bin.
        let mut chi2 = 0.0;
        let mut obs_acc = 0.0;
        let mut exp_acc = 0.0;
        let mut dof: i64 = -1;
        for j in 0..=n {
            obs_acc += counts[j] as f64;
            exp_acc += exact[j] * trials as f64;
            if exp_acc >= 5.0 {
                chi2 += (obs_acc - exp_acc).powi(2) / exp_acc;
                obs_acc = 0.0;
                exp_acc = 0.0;
                dof += 1;
            }
        }
        // 99.9% chi-square quantile at 6 dof is 22.46; be generous on dof.
        assert!(chi2 < 22.46, "chi2 {chi2} (dof {dof})");
    }

    #[test]
    fn fixed_d_small_run_passes() {
        let report = trace_limit_test_fixed_d(400, 2, 3, 3, 600, 4242).unwrap();
        assert!(report.all_pass, "{:#?}", report.checks);
        assert!(report.tv_q1 < 0.1);
        assert!(report.tv_trace < 0.1);
    }

    #[test]
    fn growing_d_small_run() {
        // Modest scale: n = 4000, d = 7, k <= 2. Means and variances sit at
        // their Gaussian limits; the corr(s_1, s_2) row keeps a genuine
        // finite-d offset 1/sqrt(2d) from the shared Q_1 term, so it is
        // checked against that value rather than against the limit 0.
        let d = 7usize;
        let report = trace_limit_test_growing_d(4000, d, 2, 400, 77).unwrap();
        for check in &report.checks {
            if check.label.starts_with("mean") || check.label.starts_with("var") {
                assert!(check.pass, "{check:?}");
            }
        }
        let corr = report
            .checks
            .iter()
            .find(|c| c.label == "corr(s_1, s_2)")
            .unwrap();
        let finite_d = 1.0 / (2.0 * d as f64).sqrt();
        assert!(
            (corr.estimate - finite_d).abs() <= 4.0 * corr.std_error,
            "corr {} vs finite-d value {finite_d}",
            corr.estimate
        );
        assert!(trace_limit_test_growing_d(100, 5, 3, 10, 0).is_err());
    }

    #[test]
    fn ewens_theta_one_matches_uniform_targets() {
        let report = ewens_trace_limit_test(500, 2, 1.0, 2, 800, 2025).unwrap();
        assert!(report.all_pass, "{:#?}", report.checks);
        // theta = 1 target is exactly the uniform one.
        let q1 = report.checks.iter().find(|c| c.label.starts_with("E Q_1")).unwrap();
        assert_eq!(q1.target, 2.0);
    }
}
