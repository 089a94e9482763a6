//! Acceptance suite: one test per verification criterion, each printing a
//! single pass/fail line. Every tolerance is pinned here, in code.
//!
//! Statistical bands are 4 standard errors unless stated otherwise; exact
//! identities are asserted in exact integer/rational arithmetic.
//!
//! Run with `cargo test --release --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use num_bigint::BigInt;
use num_complex::Complex64;

use permsum::digraph::{divisors, PermSum, WorkBudget, DEFAULT_DENSE_LIMIT};
use permsum::fields::{
    exp_moment_yd, exp_moment_yd_series, eval_field, sample_coupled_fields, sample_field,
    FieldKind,
};
use permsum::perm::permutations;
use permsum::rng::RngStream;
use permsum::secular::{
    bareiss_det, mean_secular_checks, newton_secular, rescaled_charpoly_eval, secular_coeff_direct,
};
use permsum::spectra::{
    full_spectrum_small, ipr, okm_logpotential, okm_total_mass, second_eigenvalue_modulus,
    spectral_gap_experiment, DegreeSchedule,
};
use permsum::stats::{
    batch_means, ewens_trace_limit_test, gaussian_even_moment, poisson_central_moment,
    poisson_central_moment_poly, trace_limit_test_fixed_d, trace_limit_test_growing_d,
};

fn report(criterion: &str, pass: bool, detail: &str) -> bool {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {criterion}: {detail}");
    pass
}

/// Criterion 1 — exact small-n identities of the secular coefficients at
/// d = 1, by full enumeration over the symmetric group, in exact arithmetic:
/// E D_1 = 1; E D_k = 0 for k >= 2; E D_k^2 = 2 for 1 <= k <= n-1;
/// E D_n^2 = 1; for n in {3, 4, 5, 6}.
#[test]
fn acceptance_01_exact_second_moment_identities() {
    let mut all = true;
    for n in 3..=6usize {
        let r = mean_secular_checks(n, 1, 0, 0).unwrap();
        assert!(r.exact_mode);
        all &= r.all_pass;
    }
    assert!(report(
        "criterion 1",
        all,
        "exact d=1 identities (E D_1 = 1, E D_k = 0, E D_k^2 = 2, E D_n^2 = 1) for n in 3..=6"
    ));
}

/// Criterion 2 — vanishing mean products of principal minors with small
/// overlap: exhaustively at d = 1, n = 5, k = 3, every pair of 3-subsets
/// with |I ∩ J| <= 1 has sum over S_5 of det A(I) det A(J) equal to 0.
#[test]
fn acceptance_02_minor_orthogonality() {
    let n = 5usize;
    let k = 3usize;
    let subsets: Vec<Vec<usize>> = (0u16..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect();
    let mut pairs_checked = 0u64;
    let mut max_abs: i128 = 0;
    for i_set in &subsets {
        for j_set in &subsets {
            let overlap = i_set.iter().filter(|v| j_set.contains(v)).count();
            if overlap + 2 > k {
                continue;
            }
            pairs_checked += 1;
            let mut acc: i128 = 0;
            for sigma in permutations(n) {
                let a = PermSum::new(vec![sigma]).unwrap();
                let m = a.materialize_dense(DEFAULT_DENSE_LIMIT).unwrap();
                let sub = |set: &[usize]| -> i128 {
                    let mut vals = Vec::with_capacity(k * k);
                    for &r in set {
                        for &c in set {
                            vals.push(m.get(r, c) as i128);
                        }
                    }
                    bareiss_det(vals, k)
                };
                acc += sub(i_set) * sub(j_set);
            }
            max_abs = max_abs.max(acc.abs());
        }
    }
    let pass = max_abs == 0 && pairs_checked > 0;
    assert!(report(
        "criterion 2",
        pass,
        &format!("E[det A(I) det A(J)] = 0 exactly over {pairs_checked} pairs (n=5, k=3, overlap <= 1)")
    ));
}

/// Criterion 3 — cross-oracle equivalence: the Newton-recurrence secular
/// coefficients equal the signed principal-minor sums exactly at n <= 8;
/// LU evaluation of the rescaled polynomial matches the coefficient-series
/// evaluation to 1e-8 relative at n = 200, d = 3 on 50 points in the 0.9
/// disk.
#[test]
fn acceptance_03_cross_oracles() {
    // Exact route equality at small n.
    let mut exact_ok = true;
    for (idx, &(n, d)) in [(6usize, 1usize), (7, 2), (8, 3), (8, 1)].iter().enumerate() {
        let mut rng = RngStream::new(300 + idx as u64, 0);
        let a = PermSum::sample_uniform(n, d, &mut rng).unwrap();
        let m = a.materialize_dense(DEFAULT_DENSE_LIMIT).unwrap();
        let traces = a.trace_powers_dense(n, DEFAULT_DENSE_LIMIT).unwrap();
        let series = newton_secular(&traces, n, n, d).unwrap();
        for k in 0..=n {
            let minors = secular_coeff_direct(&m, k).unwrap();
            let signed = if k % 2 == 0 { minors } else { -minors };
            exact_ok &= series.exact[k] == BigInt::from(signed);
        }
    }

    // Evaluation consistency at n = 200.
    let n = 200usize;
    let d = 3usize;
    let mut rng = RngStream::new(333, 0);
    let a = PermSum::sample_uniform(n, d, &mut rng).unwrap();
    let traces = a.trace_powers_dense(n, DEFAULT_DENSE_LIMIT).unwrap();
    let series = newton_secular(&traces, n, n, d).unwrap();
    let mut worst: f64 = 0.0;
    let mut pts = RngStream::new(334, 0);
    let mut count = 0;
    while count < 50 {
        let z = Complex64::new(pts.uniform_f64() * 1.8 - 0.9, pts.uniform_f64() * 1.8 - 0.9);
        if z.norm() > 0.9 {
            continue;
        }
        count += 1;
        let lu = rescaled_charpoly_eval(&a, z, DEFAULT_DENSE_LIMIT).unwrap().value();
        let poly = series.eval_rescaled(z);
        worst = worst.max((lu - poly).norm() / poly.norm().max(1.0));
    }
    let eval_ok = worst <= 1e-8;
    assert!(report(
        "criterion 3",
        exact_ok && eval_ok,
        &format!("Newton = signed minor sums exactly (n <= 8); LU vs series eval worst rel {worst:.2e} <= 1e-8 (n=200, d=3, 50 points)")
    ));
}

/// Brute-force oriented-cycle count: enumerate distinct-vertex tuples with
/// minimal label first and require each traversed entry to equal 1.
fn brute_cycles(a: &PermSum, ell: usize) -> u64 {
    fn rec(a: &PermSum, tuple: &mut Vec<usize>, ell: usize, count: &mut u64) {
        let n = a.n();
        if tuple.len() == ell {
            let ok = (0..ell).all(|t| {
                a.entry(tuple[t], tuple[(t + 1) % ell]).unwrap() == 1
            });
            if ok {
                *count += 1;
            }
            return;
        }
        for v in 0..n {
            if tuple.contains(&v) || (!tuple.is_empty() && v < tuple[0]) {
                continue;
            }
            tuple.push(v);
            rec(a, tuple, ell, count);
            tuple.pop();
        }
    }
    let mut count = 0;
    rec(a, &mut Vec::new(), ell, &mut count);
    count
}

/// Criterion 4 — trace and cycle machinery: exact agreement of the
/// enumerative trace with the dense-power oracle over 100 seeded cases
/// (n <= 8, d <= 3, k <= 5); the divisor-weighted identity T_k equal to
/// the independent brute-force count on every instance; and the mean trace
/// remainder decreasing over n in {500, 1000, 2000} at d = 3, k <= 5.
#[test]
fn acceptance_04_trace_cycle_machinery() {
    let budget = WorkBudget::default();
    let mut exact_ok = true;
    for case in 0..100u64 {
        let n = 4 + (case as usize % 5);
        let d = 1 + (case as usize % 3);
        let mut rng = RngStream::new(400, case);
        let a = PermSum::sample_uniform(n, d, &mut rng).unwrap();
        let m = a.materialize_dense(DEFAULT_DENSE_LIMIT).unwrap();
        for k in 1..=5 {
            exact_ok &= a.trace_power(k, &budget).unwrap() == m.power_trace(k);
            let td = a.trace_decomposition(k, &budget).unwrap();
            let t_k: i128 = divisors(k)
                .into_iter()
                .map(|ell| ell as i128 * brute_cycles(&a, ell) as i128)
                .sum();
            exact_ok &= td.t_k == t_k && td.trace == td.t_k + td.residual && td.residual >= 0;
        }
    }

    // Remainder trend: mean of (tr A^k - T_k) summed over k <= 5.
    let trials = 500u64;
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for (ni, &n) in [500usize, 1000, 2000].iter().enumerate() {
        let vals: Vec<f64> = (0..trials)
            .map(|t| {
                let mut rng = RngStream::new(410 + ni as u64, t);
                let a = PermSum::sample_uniform(n, 3, &mut rng).unwrap();
                (1..=5)
                    .map(|k| a.trace_decomposition(k, &budget).unwrap().residual as f64)
                    .sum()
            })
            .collect();
        let (mean, se) = batch_means(&vals);
        means.push(mean);
        ses.push(se);
    }
    let trend_ok = means[0] > means[2]
        && means[1] <= means[0] + 2.0 * (ses[0] + ses[1])
        && means[2] <= means[1] + 2.0 * (ses[1] + ses[2]);
    assert!(report(
        "criterion 4",
        exact_ok && trend_ok,
        &format!(
            "trace oracle + T_k identity exact on 100 cases; remainder means {:.3} > {:.3} > {:.3} over n = 500/1000/2000",
            means[0], means[1], means[2]
        )
    ));
}

/// Criterion 5 — fixed-degree cycle limits at desk scale: n = 2000,
/// d in {2, 3}, 5000 trials. E Q_l within 4 SE of d^l/l for l <= 4;
/// E (Q_l)_2 within 4 SE of (d^l/l)^2; TV(Q_1, Poisson(d)) <= 0.05;
/// corr(Q_1, Q_2) within 4 SE of 0.
#[test]
fn acceptance_05_fixed_d_cycle_limits() {
    let mut all = true;
    let mut detail = String::new();
    for &d in &[2usize, 3] {
        let r = trace_limit_test_fixed_d(2000, d, 1, 4, 5000, 500 + d as u64).unwrap();
        let cycle_rows: Vec<_> = r
            .checks
            .iter()
            .filter(|c| c.label.starts_with("E Q") || c.label.starts_with("E (Q") || c.label.starts_with("corr"))
            .collect();
        let rows_ok = cycle_rows.iter().all(|c| c.pass);
        let tv_ok = r.tv_q1 <= 0.05;
        all &= rows_ok && tv_ok;
        detail.push_str(&format!("d={d}: TV(Q_1)={:.4}, bands {}; ", r.tv_q1, rows_ok));
    }
    assert!(report("criterion 5", all, detail.trim_end()));
}

/// Criterion 6 — growing-degree trace limits at desk scale: n = 50000
/// (implicit matrix only), d = 12, 2000 trials, k <= 3. Standardized trace
/// means within 4 SE of (0, 1, 0) and variances within 4 SE of (1, 2, 3).
#[test]
fn acceptance_06_growing_d_trace_limits() {
    let r = trace_limit_test_growing_d(50_000, 12, 3, 2000, 600).unwrap();
    let mut all = true;
    let mut detail = String::new();
    for k in 1..=3 {
        let mean = r
            .checks
            .iter()
            .find(|c| c.label == format!("mean s_{k}"))
            .unwrap();
        let var = r
            .checks
            .iter()
            .find(|c| c.label == format!("var s_{k}"))
            .unwrap();
        all &= mean.pass && var.pass;
        detail.push_str(&format!(
            "k={k}: mean {:.4} (z {:.1}), var {:.4} (z {:.1}); ",
            mean.estimate, mean.z_score, var.estimate, var.z_score
        ));
    }
    assert!(report("criterion 6", all, detail.trim_end()));
}

/// Criterion 7 — limit fields: the two closed forms of E e^{-Y_d} agree to
/// 1e-10 on 20 grid points for d in {2, 3, 5}; Monte Carlo E e^{-Y_d(0.5)}
/// at d = 2 within 4 SE of the product formula over 1e5 samples;
/// Var(coeff_k(X_d)) within 4 SE of 1/k; the Upsilon_16 sup-norm estimate at
/// r = 0.9 below the closed-form bound 0.335 plus 4 SE.
#[test]
fn acceptance_07_limit_fields() {
    // Two-form agreement on a 20-point circle of radius 0.8.
    let mut worst: f64 = 0.0;
    for &d in &[2usize, 3, 5] {
        for j in 0..20 {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / 20.0;
            let z = Complex64::from_polar(0.8, theta);
            let p = exp_moment_yd(z, d).unwrap();
            let s = exp_moment_yd_series(z, d).unwrap();
            worst = worst.max((p - s).norm());
        }
    }
    let forms_ok = worst <= 1e-10;

    // Monte Carlo vs closed form at z = 0.5, d = 2.
    let z = Complex64::new(0.5, 0.0);
    let vals: Vec<f64> = (0..100_000u64)
        .map(|t| {
            let mut rng = RngStream::new(700, t);
            let y = sample_field(FieldKind::YD, 2, 96, &mut rng).unwrap();
            (-eval_field(&y, z).unwrap().value).exp().re
        })
        .collect();
    let (mc_mean, mc_se) = batch_means(&vals);
    let closed = exp_moment_yd(z, 2).unwrap().re;
    let mc_ok = (mc_mean - closed).abs() <= 4.0 * mc_se;

    // Coefficient variances of X_d at d = 3.
    let l = 6usize;
    let coeffs: Vec<Vec<f64>> = (0..100_000u64)
        .map(|t| {
            let mut rng = RngStream::new(701, t);
            sample_field(FieldKind::XD, 3, l, &mut rng).unwrap().coeffs
        })
        .collect();
    let mut var_ok = true;
    for k in 1..=l {
        let sq: Vec<f64> = coeffs.iter().map(|c| c[k - 1] * c[k - 1]).collect();
        let (var, se) = batch_means(&sq);
        var_ok &= (var - 1.0 / k as f64).abs() <= 4.0 * se;
    }

    // Upsilon sup-norm at d = 16, r = 0.9 against (r^2/2)/(d^{1/4} - r)^2.
    let circle: Vec<Complex64> = (0..64)
        .map(|j| Complex64::from_polar(0.9, 2.0 * std::f64::consts::PI * j as f64 / 64.0))
        .collect();
    let sups: Vec<f64> = (0..4000u64)
        .map(|t| {
            let mut rng = RngStream::new(702, t);
            let (_, _, upsilon) = sample_coupled_fields(16, 64, &mut rng).unwrap();
            let sup = circle
                .iter()
                .map(|&z| eval_field(&upsilon, z).unwrap().value.norm())
                .fold(0.0f64, f64::max);
            sup * sup
        })
        .collect();
    let (sup_mean, sup_se) = batch_means(&sups);
    let bound = (0.9 * 0.9 / 2.0) / (16.0f64.powf(0.25) - 0.9).powi(2);
    let sup_ok = sup_mean <= bound + 4.0 * sup_se;

    assert!(report(
        "criterion 7",
        forms_ok && mc_ok && var_ok && sup_ok,
        &format!(
            "two-form diff {worst:.2e}; MC {mc_mean:.5} vs closed {closed:.5}; Var(X_d) bands {var_ok}; E sup|Upsilon_16|^2 = {sup_mean:.4} <= {bound:.4}"
        )
    ));
}

/// Criterion 8 — spectral gap: exceedance frequency of |lambda_2| over
/// sqrt(3) + 0.3 at n = 1000 (50 trials) at most 0.1; frequency
/// non-increasing over n in {500, 1000, 2000} within Wilson intervals; the
/// iterative estimate matches the dense oracle to 1e-3 relative on 50
/// instances at n <= 300.
#[test]
fn acceptance_08_spectral_gap() {
    let mut freqs = Vec::new();
    let mut wilsons = Vec::new();
    for (i, &n) in [500usize, 1000, 2000].iter().enumerate() {
        let r = spectral_gap_experiment(
            n,
            DegreeSchedule::Fixed(3),
            0.3,
            50,
            1e-5,
            200_000,
            800 + i as u64,
        )
        .unwrap();
        freqs.push(r.frequency);
        wilsons.push(r.wilson_95);
    }
    let freq_ok = freqs[1] <= 0.1;
    // Non-increasing within interval overlap: the later lower bound must not
    // exceed the earlier upper bound.
    let trend_ok = wilsons[1].0 <= wilsons[0].1 && wilsons[2].0 <= wilsons[1].1;

    let mut worst: f64 = 0.0;
    for inst in 0..50u64 {
        let n = 120 + (inst as usize % 7) * 30; // 120..=300
        let d = 2 + (inst as usize % 2);
        let mut rng = RngStream::new(810, inst);
        let a = PermSum::sample_uniform(n, d, &mut rng).unwrap();
        let dense = full_spectrum_small(&a, false).unwrap().eigenvalues[1].norm();
        let est = second_eigenvalue_modulus(&a, 1e-9, 1_000_000, &mut rng).unwrap();
        worst = worst.max((est.lambda2_modulus - dense).abs() / dense);
    }
    let oracle_ok = worst <= 1e-3;
    assert!(report(
        "criterion 8",
        freq_ok && trend_ok && oracle_ok,
        &format!(
            "frequencies {:?} (n=1000: {} <= 0.1); trend within Wilson CIs {trend_ok}; iterative vs dense worst rel {worst:.2e}",
            freqs, freqs[1]
        )
    ));
}

/// Criterion 9 — closed forms of the oriented Kesten-McKay law: unit total
/// mass to 1e-6 by quadrature; branch continuity of the log-potential at
/// |z| = sqrt(d) to 1e-12 for d in {2, 3, 5}; log |z| outside the disk.
#[test]
fn acceptance_09_okm_closed_forms() {
    let mut all = true;
    for &d in &[2usize, 3, 5] {
        let mass = okm_total_mass(d, 400_000).unwrap();
        all &= (mass - 1.0).abs() <= 1e-6;
        let sq = (d as f64).sqrt();
        let inner = okm_logpotential(Complex64::new(sq, 0.0), d).unwrap();
        all &= (inner - sq.ln()).abs() <= 1e-12;
        let outside = okm_logpotential(Complex64::new(2.0 * sq, 1.0), d).unwrap();
        let z = Complex64::new(2.0 * sq, 1.0);
        all &= (outside - z.norm().ln()).abs() <= 1e-14;
    }
    assert!(report(
        "criterion 9",
        all,
        "total mass = 1 (1e-6), branch continuity at sqrt(d) (1e-12), log|z| outside"
    ));
}

/// Criterion 10 — Poisson central moments: the Gaussian-moment table
/// (1, 3, 15) exact from the formula; mu_4 = 3 lambda^2 + lambda from the
/// generating-function extractor; standardized moment ratios at lambda =
/// 1e4 within 1% of Gaussian targets.
#[test]
fn acceptance_10_poisson_clt_moments() {
    let table_ok = gaussian_even_moment(1) == 1.0
        && gaussian_even_moment(2) == 3.0
        && gaussian_even_moment(3) == 15.0;
    let mu4_ok = poisson_central_moment_poly(4).unwrap() == vec![0, 1, 3];
    let mut ratio_ok = true;
    let lambda = 1e4f64;
    for k in 1..=6usize {
        let ratio = poisson_central_moment(lambda, k).unwrap() / lambda.powf(k as f64 / 2.0);
        let target = if k % 2 == 0 {
            gaussian_even_moment(k as u32 / 2)
        } else {
            0.0
        };
        if k % 2 == 0 {
            ratio_ok &= (ratio - target).abs() / target <= 0.01;
        } else {
            // Odd moments shrink like lambda^{-1/2}; 1% of the neighboring
            // even target is a generous absolute reading.
            ratio_ok &= ratio.abs() <= 0.01 * gaussian_even_moment((k as u32 + 1) / 2);
        }
    }
    assert!(report(
        "criterion 10",
        table_ok && mu4_ok && ratio_ok,
        "m table (1,3,15) exact; mu_4 = 3l^2 + l; standardized ratios at l=1e4 within 1%"
    ));
}

/// Criterion 11 — Ewens-distributed permutations: theta = 1 reduces to the
/// uniform targets; trace/cycle means at theta in {0.5, 2}, d in {1, 2},
/// n = 2000 within 4 SE of (d^l + d(theta-1))/l; inverse participation
/// ratio endpoints exact.
#[test]
fn acceptance_11_ewens_variant() {
    // theta = 1: targets coincide with the uniform d^l/l.
    let r1 = ewens_trace_limit_test(500, 2, 1.0, 2, 500, 1100).unwrap();
    let theta1_ok = r1.all_pass
        && r1
            .checks
            .iter()
            .find(|c| c.label.starts_with("E Q_2"))
            .unwrap()
            .target
            == 2.0;

    let mut bands_ok = true;
    let mut detail = String::new();
    for &theta in &[0.5f64, 2.0] {
        for &d in &[1usize, 2] {
            let r = ewens_trace_limit_test(2000, d, theta, 3, 2000, 1110 + d as u64).unwrap();
            bands_ok &= r.all_pass;
            let worst = r
                .checks
                .iter()
                .map(|c| c.z_score.abs())
                .fold(0.0f64, f64::max);
            detail.push_str(&format!("theta={theta},d={d}: worst |z| {worst:.2}; "));
        }
    }

    let constant: Vec<Complex64> = (0..16).map(|j| Complex64::from_polar(1.0, j as f64)).collect();
    let mut basis = vec![Complex64::new(0.0, 0.0); 16];
    basis[7] = Complex64::new(2.0, 1.0);
    let ipr_ok =
        (ipr(&constant).unwrap() - 1.0).abs() < 1e-14 && (ipr(&basis).unwrap() - 1.0 / 16.0).abs() < 1e-14;

    assert!(report(
        "criterion 11",
        theta1_ok && bands_ok && ipr_ok,
        &format!("theta=1 reduces to uniform; {detail}IPR endpoints exact")
    ));
}
