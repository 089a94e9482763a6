//! The limiting random analytic functions on the unit disk.
//!
//! For a degree parameter d, the coefficients are built from one family of
//! independent Poisson counts L_l with mean d^l / l:
//!
//! - `Y_d(z) = sum_k z^k/(k d^{k/2}) sum_{l | k} l (L_l - E L_l)` — the
//!   divisor-coupled field whose negative exponential normalizes the
//!   fixed-degree limit of the rescaled characteristic polynomial;
//! - `X_d(z) = sum_k z^k d^{-k/2} (L_k - E L_k)` — the uncoupled part, with
//!   covariance kernel `log(1 - zw)^{-1}` for every d;
//! - `Upsilon_d = Y_d - X_d` — the proper-divisor remainder, vanishing as
//!   d grows;
//! - `X_inf(z) = sum_k N_k z^k / sqrt(k)` — the Gaussian analytic function
//!   arising in the growing-degree limit.
//!
//! One field sample is one truncated coefficient array; `Y_d`, `X_d` and
//! `Upsilon_d` drawn together share a single Poisson family, so the coupling
//! `Y_d = X_d + Upsilon_d` holds coefficientwise exactly.
//!
//! All evaluations use principal branches (log, sqrt) and are guarded to
//! `|z| <= 0.99`, safely inside the unit disk where every series converges.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::digraph::divisors;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats::{batch_means, MomentReport};

/// Evaluation guard radius inside the unit disk.
pub const EVAL_RADIUS: f64 = 0.99;

/// Which limiting field a sample belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldKind {
    YD,
    XD,
    UpsilonD,
    XInf,
}

/// One draw of the Poisson coefficient family: `values[l-1] ~ Poisson(d^l/l)`
/// for l = 1..L. Means above the exact-sampling cap use a rounded-normal
/// approximation and set `approximate`.
///
/// The centered fluctuations `Lambda_l - E Lambda_l` are stored directly:
/// for huge means the fluctuation (size sqrt(lambda)) sits far below one ulp
/// of lambda, so `values[l] - lambda[l]` would silently round to zero — the
/// field coefficients are built from `centered`, never from that difference.
#[derive(Debug, Clone)]
pub struct PoissonDraws {
    pub d: usize,
    /// Means d^l / l (f64; may be inf for huge l — sampling then fails).
    pub lambda: Vec<f64>,
    /// log(d^l / l), always finite, kept for large-mean diagnostics.
    pub log_lambda: Vec<f64>,
    /// The sampled counts, integer-valued f64 (lossy when the mean dwarfs
    /// the f64 resolution; see `centered`).
    pub values: Vec<f64>,
    /// The fluctuations Lambda_l - d^l/l at full f64 precision.
    pub centered: Vec<f64>,
    /// True if any draw used the rounded-normal large-mean approximation.
    pub approximate: bool,
}

/// Samples the Poisson family `Lambda_l ~ Poisson(d^l / l)`, l = 1..L.
pub fn sample_poisson_coeffs(d: usize, l: usize, rng: &mut RngStream) -> Result<PoissonDraws> {
    if d < 1 || l < 1 {
        return Err(Error::invalid("need d >= 1 and L >= 1"));
    }
    let mut lambda = Vec::with_capacity(l);
    let mut log_lambda = Vec::with_capacity(l);
    let mut values = Vec::with_capacity(l);
    let mut centered = Vec::with_capacity(l);
    let mut approximate = false;
    let ln_d = (d as f64).ln();
    for ell in 1..=l {
        let log_lam = ell as f64 * ln_d - (ell as f64).ln();
        let lam = log_lam.exp();
        if !lam.is_finite() {
            return Err(Error::invalid(format!(
                "Poisson mean d^{ell}/{ell} overflows f64 (log mean {log_lam:.3e})"
            )));
        }
        if lam <= crate::rng::POISSON_EXACT_MAX {
            let draw = rng.poisson(lam);
            values.push(draw.value);
            // Both operands are far below 2^53, so this difference is exact.
            centered.push(draw.value - lam);
        } else {
            approximate = true;
            let mut fluct = lam.sqrt() * rng.normal();
            if fluct.abs() < 9e15 {
                fluct = fluct.round();
            }
            fluct = fluct.max(-lam);
            centered.push(fluct);
            values.push(lam + fluct);
        }
        lambda.push(lam);
        log_lambda.push(log_lam);
    }
    Ok(PoissonDraws {
        d,
        lambda,
        log_lambda,
        values,
        centered,
        approximate,
    })
}

/// A truncated coefficient array of one of the limiting fields. The constant
/// term is zero and `coeffs[k-1]` multiplies z^k.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub kind: FieldKind,
    /// None for the degree-free Gaussian field.
    pub d: Option<usize>,
    pub coeffs: Vec<f64>,
    /// True when any underlying Poisson draw was approximate.
    pub approximate: bool,
}

impl FieldSample {
    pub fn truncation(&self) -> usize {
        self.coeffs.len()
    }
}

fn yd_coeffs(draws: &PoissonDraws) -> Vec<f64> {
    let l = draws.centered.len();
    let d = draws.d as f64;
    (1..=l)
        .map(|k| {
            let mut acc = 0.0;
            for ell in divisors(k) {
                acc += ell as f64 * draws.centered[ell - 1];
            }
            acc / (k as f64 * d.powf(k as f64 / 2.0))
        })
        .collect()
}

fn xd_coeffs(draws: &PoissonDraws) -> Vec<f64> {
    let l = draws.centered.len();
    let d = draws.d as f64;
    (1..=l)
        .map(|k| draws.centered[k - 1] / d.powf(k as f64 / 2.0))
        .collect()
}

/// Draws the coupled triple (Y_d, X_d, Upsilon_d) from one Poisson family.
/// Upsilon is defined as the coefficientwise difference Y - X, so the
/// coupling identity is exact in floating point.
pub fn sample_coupled_fields(
    d: usize,
    l: usize,
    rng: &mut RngStream,
) -> Result<(FieldSample, FieldSample, FieldSample)> {
    let draws = sample_poisson_coeffs(d, l, rng)?;
    let y = yd_coeffs(&draws);
    let x = xd_coeffs(&draws);
    let upsilon: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
    let mk = |kind, coeffs| FieldSample {
        kind,
        d: Some(d),
        coeffs,
        approximate: draws.approximate,
    };
    Ok((
        mk(FieldKind::YD, y),
        mk(FieldKind::XD, x),
        mk(FieldKind::UpsilonD, upsilon),
    ))
}

/// Samples one field of the requested kind to truncation degree L.
pub fn sample_field(
    kind: FieldKind,
    d: usize,
    l: usize,
    rng: &mut RngStream,
) -> Result<FieldSample> {
    match kind {
        FieldKind::XInf => {
            if l < 1 {
                return Err(Error::invalid("L must be at least 1"));
            }
            let coeffs = (1..=l)
                .map(|k| rng.normal() / (k as f64).sqrt())
                .collect();
            Ok(FieldSample {
                kind,
                d: None,
                coeffs,
                approximate: false,
            })
        }
        FieldKind::YD => {
            let draws = sample_poisson_coeffs(d, l, rng)?;
            Ok(FieldSample {
                kind,
                d: Some(d),
                coeffs: yd_coeffs(&draws),
                approximate: draws.approximate,
            })
        }
        FieldKind::XD => {
            let draws = sample_poisson_coeffs(d, l, rng)?;
            Ok(FieldSample {
                kind,
                d: Some(d),
                coeffs: xd_coeffs(&draws),
                approximate: draws.approximate,
            })
        }
        FieldKind::UpsilonD => {
            let (_, _, upsilon) = sample_coupled_fields(d, l, rng)?;
            Ok(upsilon)
        }
    }
}

/// A field evaluation together with a truncation-tail estimate: geometric
/// majorant `max_k |coeff_k| |z|^{L+1} / (1 - |z|)` on the dropped tail.
#[derive(Debug, Clone, Copy)]
pub struct FieldValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Evaluates the truncated series at z, |z| <= 0.99.
pub fn eval_field(f: &FieldSample, z: Complex64) -> Result<FieldValue> {
    let r = z.norm();
    if r > EVAL_RADIUS {
        return Err(Error::Domain(format!(
            "evaluation limited to |z| <= {EVAL_RADIUS}, got |z| = {r}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0);
    for &c in &f.coeffs {
        zk *= z;
        acc += c * zk;
    }
    let max_coeff = f.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let l = f.coeffs.len();
    let tail_bound = max_coeff * r.powi(l as i32 + 1) / (1.0 - r);
    Ok(FieldValue {
        value: acc,
        tail_bound,
    })
}

/// The divisor-resummed form of Y_d from the same Poisson draws:
/// `-sum_l (L_l - E L_l) log(1 - (z/sqrt d)^l)`, principal logs. Cross-check
/// route for the coefficientwise evaluation.
pub fn eval_yd_resummed(draws: &PoissonDraws, z: Complex64) -> Result<Complex64> {
    let r = z.norm();
    if r > EVAL_RADIUS {
        return Err(Error::Domain("evaluation limited to |z| <= 0.99".into()));
    }
    let w = z / (draws.d as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut wl = Complex64::new(1.0, 0.0);
    for &centered in &draws.centered {
        wl *= w;
        acc -= centered * (Complex64::new(1.0, 0.0) - wl).ln();
    }
    Ok(acc)
}

/// `log((1 - x) e^x) = log(1 - x) + x` without the cancellation that hits
/// the direct formula for small x: the remainder series `-sum_{j>=2} x^j/j`.
fn log_f_stable(x: Complex64) -> Complex64 {
    if x.norm() > 0.5 {
        return (Complex64::new(1.0, 0.0) - x).ln() + x;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    let mut xj = x * x;
    for j in 2..200 {
        let term = xj / j as f64;
        acc -= term;
        if term.norm() < 1e-20 * acc.norm().max(1e-300) {
            break;
        }
        xj *= x;
    }
    acc
}

fn check_disk(z: Complex64) -> Result<()> {
    if z.norm() > EVAL_RADIUS {
        return Err(Error::Domain(format!(
            "evaluation limited to |z| <= {EVAL_RADIUS}, got |z| = {}",
            z.norm()
        )));
    }
    Ok(())
}

/// `E exp(-Y_d(z))` in closed form: the inverse infinite product
/// `(prod_l f_l(z/sqrt d)^{d^l/l})^{-1}` with `f_l(w) = (1 - w^l) e^{w^l}`,
/// accumulated in log-domain with principal logs. Term l of the log-sum is
/// of size `(d |w|^2)^l / l = |z|^{2l} / l`, so the truncation L is chosen
/// with `|z|^{2L} / ((1 - |z|^2)(1 - |w|)) < 1e-14`.
pub fn exp_moment_yd(z: Complex64, d: usize) -> Result<Complex64> {
    check_disk(z)?;
    if d < 1 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let w = z / (d as f64).sqrt();
    let r = w.norm();
    if r == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let rz = z.norm();
    let l_max = (((1e-14 * (1.0 - rz * rz) * (1.0 - r)).ln() / rz.ln() / 2.0).ceil() as usize)
        .max(4);
    let mut log_acc = Complex64::new(0.0, 0.0);
    let mut wl = Complex64::new(1.0, 0.0);
    let ln_d = (d as f64).ln();
    for ell in 1..=l_max {
        wl *= w;
        let lam = (ell as f64 * ln_d - (ell as f64).ln()).exp();
        log_acc -= lam * log_f_stable(wl);
    }
    Ok(log_acc.exp())
}

/// `E exp(-Y_d(z))` as the absolutely convergent proper-divisor series
/// `exp( sum_k z^k/(k d^{k/2}) sum_{l | k, l < k} d^l )` — the second closed
/// form, used as an independent cross-check of the product form.
pub fn exp_moment_yd_series(z: Complex64, d: usize) -> Result<Complex64> {
    check_disk(z)?;
    if d < 1 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let r = z.norm();
    if r == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // Terms are bounded by ~2 |z|^k / k for d >= 2 (and faster for d = 1).
    let k_max = (((1e-15 * (1.0 - r)).ln() / r.ln()).ceil() as usize).clamp(8, 20_000);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0);
    let df = d as f64;
    for k in 1..=k_max {
        zk *= z;
        let mut s = 0.0;
        for ell in divisors(k) {
            if ell < k {
                s += df.powi(ell as i32);
            }
        }
        if s != 0.0 {
            acc += zk * s / (k as f64 * df.powf(k as f64 / 2.0));
        }
    }
    Ok(acc.exp())
}

/// Which limit law a sampled function follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// Fixed degree: `(z - 1/sqrt d) e^{-Y_d(z)} / E e^{-Y_d(z)}`.
    FixedD,
    /// Growing degree: `z sqrt(1 - z^2) e^{X_inf(z)}`, principal root.
    GrowingD,
}

/// One sampled limiting function, evaluable anywhere in `|z| <= 0.99`.
#[derive(Debug, Clone)]
pub struct LimitLawSample {
    pub regime: Regime,
    pub d: usize,
    field: FieldSample,
}

impl LimitLawSample {
    pub fn field(&self) -> &FieldSample {
        &self.field
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        check_disk(z)?;
        match self.regime {
            Regime::FixedD => {
                let y = eval_field(&self.field, z)?.value;
                let mean = exp_moment_yd(z, self.d)?;
                let sd = (self.d as f64).sqrt();
                Ok((z - 1.0 / sd) * (-y).exp() / mean)
            }
            Regime::GrowingD => {
                let x = eval_field(&self.field, z)?.value;
                let root = (Complex64::new(1.0, 0.0) - z * z).sqrt();
                Ok(z * root * x.exp())
            }
        }
    }
}

/// Draws one sample of the limiting law for the requested regime.
pub fn limit_law_sample(
    regime: Regime,
    d: usize,
    l: usize,
    rng: &mut RngStream,
) -> Result<LimitLawSample> {
    let field = match regime {
        Regime::FixedD => sample_field(FieldKind::YD, d, l, rng)?,
        Regime::GrowingD => sample_field(FieldKind::XInf, d, l, rng)?,
    };
    Ok(LimitLawSample { regime, d, field })
}

/// One covariance-kernel comparison row.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceRow {
    pub z: (f64, f64),
    pub w: (f64, f64),
    /// log(1 - zw)^{-1} (real part; the kernel is real for conjugate-free
    /// real inputs and complex in general — compared componentwise).
    pub kernel: (f64, f64),
    pub estimate: (f64, f64),
    pub std_error: (f64, f64),
    /// |estimate - kernel| — for Y_d this is the O_d(1) correction size.
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub kind: FieldKind,
    pub d: usize,
    pub samples: u64,
    pub rows: Vec<CovarianceRow>,
    pub all_pass: bool,
}

/// Empirical `E[f(z) f(w)]` against the kernel `log(1 - zw)^{-1}` for
/// X_d / X_inf (a pass/fail band), and deviation reporting for Y_d whose
/// kernel carries a vanishing-in-d correction.
pub fn covariance_check(
    kind: FieldKind,
    d: usize,
    pairs: &[(Complex64, Complex64)],
    samples: u64,
    seed: u64,
) -> Result<CovarianceReport> {
    if kind == FieldKind::UpsilonD {
        return Err(Error::invalid(
            "covariance_check supports X_d, X_inf and Y_d",
        ));
    }
    for &(z, w) in pairs {
        if z.norm() > 0.9 || w.norm() > 0.9 {
            return Err(Error::invalid("covariance points must satisfy |z|, |w| <= 0.9"));
        }
    }
    let l = 64;
    let products: Vec<Vec<Complex64>> = (0..samples)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t);
            let f = sample_field(kind, d, l, &mut rng)?;
            pairs
                .iter()
                .map(|&(z, w)| {
                    Ok(eval_field(&f, z)?.value * eval_field(&f, w)?.value)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (pi, &(z, w)) in pairs.iter().enumerate() {
        let kernel = -(Complex64::new(1.0, 0.0) - z * w).ln();
        let re: Vec<f64> = products.iter().map(|p| p[pi].re).collect();
        let im: Vec<f64> = products.iter().map(|p| p[pi].im).collect();
        let (mre, sre) = batch_means(&re);
        let (mim, sim) = batch_means(&im);
        let deviation = Complex64::new(mre - kernel.re, mim - kernel.im).norm();
        let pass = match kind {
            FieldKind::YD => true, // informational: kernel holds up to O_d(1)
            _ => {
                (mre - kernel.re).abs() <= 4.0 * sre && (mim - kernel.im).abs() <= 4.0 * sim
            }
        };
        rows.push(CovarianceRow {
            z: (z.re, z.im),
            w: (w.re, w.im),
            kernel: (kernel.re, kernel.im),
            estimate: (mre, mim),
            std_error: (sre, sim),
            deviation,
            pass,
        });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(CovarianceReport {
        kind,
        d,
        samples,
        rows,
        all_pass,
    })
}

/// Per-degree row of [`field_convergence_d`].
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub d: usize,
    /// E sup_{|z| = 0.9} |Upsilon_d(z)|^2, 64-point circle estimate.
    pub upsilon_sup_sq: MomentReport,
    /// Closed-form bound (r^2/2) / (d^{1/4} - r)^2 at r = 0.9.
    pub upsilon_bound: f64,
    /// Skewness of the k = 1 coefficient of X_d (analytic value 1/sqrt d).
    pub x1_skewness: f64,
    /// Sum of |empirical - Gaussian| over the first four moments of the
    /// k = 1 standardized coefficient of X_d.
    pub gaussian_moment_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Upsilon sup-norm estimates decrease along d_list.
    pub upsilon_decreasing: bool,
    /// Gaussian moment distance decreases along d_list.
    pub gaussian_distance_decreasing: bool,
    /// d = 1 special case: the uncentered divisor series has finite sup on
    /// the 0.9-circle for every sampled draw (None when 1 not in d_list).
    pub d1_uncentered_finite: Option<bool>,
    pub all_pass: bool,
}

/// Degeneration of (X_d, Upsilon_d) to (X_inf, 0) as d grows: the sup-norm
/// of Upsilon_d shrinks under its closed-form bound and the coefficient law
/// of X_d approaches the Gaussian.
pub fn field_convergence_d(
    d_list: &[usize],
    l: usize,
    samples: u64,
    seed: u64,
) -> Result<FieldConvergenceReport> {
    if d_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("d_list must be strictly increasing"));
    }
    let r = 0.9f64;
    let circle: Vec<Complex64> = (0..64)
        .map(|j| Complex64::from_polar(r, 2.0 * std::f64::consts::PI * j as f64 / 64.0))
        .collect();
    let mut rows = Vec::new();
    let mut d1_finite = None;
    for (di, &d) in d_list.iter().enumerate() {
        let per_sample: Vec<(f64, f64)> = (0..samples)
            .into_par_iter()
            .map(|t| {
                let mut rng = RngStream::new(seed, ((di as u64) << 40) | t);
                let (_, x, upsilon) = sample_coupled_fields(d, l, &mut rng)?;
                let sup = circle
                    .iter()
                    .map(|&z| eval_field(&upsilon, z).map(|v| v.value.norm()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0f64, f64::max);
                Ok((sup * sup, x.coeffs[0]))
            })
            .collect::<Result<_>>()?;
        let sups: Vec<f64> = per_sample.iter().map(|p| p.0).collect();
        let (sup_mean, sup_se) = batch_means(&sups);
        let bound = (r * r / 2.0) / ((d as f64).powf(0.25) - r).powi(2);
        let sup_report = MomentReport {
            label: format!("E sup |Upsilon_{d}|^2 on r=0.9"),
            target: bound,
            estimate: sup_mean,
            std_error: sup_se,
            n_samples: samples,
            z_score: if sup_se > 0.0 { (sup_mean - bound) / sup_se } else { 0.0 },
            pass: sup_mean <= bound + 4.0 * sup_se,
        };
        // First four moments of the standardized k = 1 coefficient of X_d
        // ((Lambda_1 - d)/sqrt d, exactly unit variance in the limit draws).
        let x1: Vec<f64> = per_sample.iter().map(|p| p.1).collect();
        let m1 = x1.iter().sum::<f64>() / x1.len() as f64;
        let var = x1.iter().map(|v| (v - m1).powi(2)).sum::<f64>() / x1.len() as f64;
        let sd = var.sqrt();
        let skew = x1.iter().map(|v| ((v - m1) / sd).powi(3)).sum::<f64>() / x1.len() as f64;
        let kurt = x1.iter().map(|v| ((v - m1) / sd).powi(4)).sum::<f64>() / x1.len() as f64;
        let distance = m1.abs() + (var - 1.0).abs() + skew.abs() + (kurt - 3.0).abs();
        rows.push(ConvergenceRow {
            d,
            upsilon_sup_sq: sup_report,
            upsilon_bound: bound,
            x1_skewness: skew,
            gaussian_moment_distance: distance,
        });
        if d == 1 {
            // Uncentered divisor series at d = 1 converges a.s.: check a few
            // sampled sups are finite.
            let finite = (0..16u64).all(|t| {
                let mut rng = RngStream::new(seed ^ 0xd1d1, t);
                let draws = match sample_poisson_coeffs(1, l, &mut rng) {
                    Ok(dr) => dr,
                    Err(_) => return false,
                };
                circle.iter().all(|&z| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    let mut zk = Complex64::new(1.0, 0.0);
                    for k in 1..=l {
                        zk *= z;
                        let s: f64 = divisors(k)
                            .iter()
                            .map(|&ell| ell as f64 * draws.values[ell - 1])
                            .sum();
                        acc += zk * s / k as f64;
                    }
                    acc.norm().is_finite()
                })
            });
            d1_finite = Some(finite);
        }
    }
    let upsilon_decreasing = rows
        .windows(2)
        .all(|w| w[1].upsilon_sup_sq.estimate <= w[0].upsilon_sup_sq.estimate);
    let gaussian_distance_decreasing = rows
        .windows(2)
        .all(|w| w[1].gaussian_moment_distance <= w[0].gaussian_moment_distance);
    let all_pass = rows.iter().all(|r| r.upsilon_sup_sq.pass)
        && upsilon_decreasing
        && d1_finite.unwrap_or(true);
    Ok(FieldConvergenceReport {
        rows,
        upsilon_decreasing,
        gaussian_distance_decreasing,
        d1_uncentered_finite: d1_finite,
        all_pass,
    })
}
