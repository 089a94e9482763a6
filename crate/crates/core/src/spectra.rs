//! Eigenvalue-side verification: iterative second-eigenvalue estimation,
//! small-n full spectra, the oriented Kesten-McKay density and log-potential,
//! the log-determinant fluctuation field, and eigenvector localization.
//!
//! The trivial eigenpair is `A 1 = d 1`; since column sums also equal d, the
//! mean-zero subspace is invariant and the spectral radius there is the
//! second eigenvalue modulus. The iterative estimator tracks norm growth in
//! that subspace, which stays well-defined when the dominant deflated
//! eigenvalues form a complex-conjugate pair (a Rayleigh quotient would not).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::digraph::PermSum;
use crate::error::{Error, Result};
use crate::linalg::{self, lu_logdet, CMatrix, RMatrix};
use crate::rng::RngStream;
use crate::stats::wilson_interval;

/// Size cap for the dense eigensolver path.
pub const SPECTRUM_DENSE_LIMIT: usize = 2000;

/// Result of the iterative second-eigenvalue estimation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapEstimate {
    pub lambda2_modulus: f64,
    pub iterations: u64,
    /// Relative change of the modulus estimate over the last window.
    pub residual: f64,
    pub converged: bool,
}

/// Estimates `|lambda_2|`: the spectral radius of A restricted to the
/// mean-zero subspace.
///
/// Power iteration from a random mean-zero vector, re-centering and
/// renormalizing every step; the estimate is the geometric mean of the
/// per-step norm growth factors over a trailing window (20 steps at first).
/// A complex-conjugate dominant pair makes the growth factors oscillate
/// forever, so when the estimate keeps fluctuating the window is doubled
/// (40, 80, ...) until the windowed mean settles; convergence is declared
/// when the estimate's relative change over one window drops below `tol`.
pub fn second_eigenvalue_modulus(
    a: &PermSum,
    tol: f64,
    max_iter: u64,
    rng: &mut RngStream,
) -> Result<GapEstimate> {
    let n = a.n();
    if n < 2 {
        return Err(Error::invalid("second eigenvalue needs n >= 2"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    center(&mut v);
    let norm = l2(&v);
    if norm == 0.0 {
        v[0] = 1.0;
        v[n - 1] = -1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut next = vec![0.0; n];
    // Prefix sums of log growth factors; log_prefix[k] covers steps 1..=k.
    let mut log_prefix: Vec<f64> = Vec::with_capacity(1024);
    log_prefix.push(0.0);
    let mut window = 20usize;
    let mut estimate = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut iterations = 0u64;

    while iterations < max_iter {
        a.apply_into(&v, &mut next);
        center(&mut next);
        let g = l2(&next);
        if g == 0.0 {
            // A annihilated the iterate: deflated operator is nilpotent here.
            return Ok(GapEstimate {
                lambda2_modulus: 0.0,
                iterations,
                residual: 0.0,
                converged: true,
            });
        }
        next.iter_mut().for_each(|x| *x /= g);
        std::mem::swap(&mut v, &mut next);
        log_prefix.push(log_prefix.last().unwrap() + g.ln());
        iterations += 1;

        let k = log_prefix.len() - 1;
        if k >= 2 * window {
            let cur = ((log_prefix[k] - log_prefix[k - window]) / window as f64).exp();
            let prev =
                ((log_prefix[k - window] - log_prefix[k - 2 * window]) / window as f64).exp();
            residual = (cur - prev).abs() / cur.max(f64::MIN_POSITIVE);
            estimate = cur;
            if residual < tol {
                return Ok(GapEstimate {
                    lambda2_modulus: estimate,
                    iterations,
                    residual,
                    converged: true,
                });
            }
            // Oscillation that a longer window would smooth: widen once the
            // current window has had a fair chance.
            if k >= 20 * window {
                window *= 2;
            }
        }
    }
    if estimate.is_nan() {
        // Too few steps for a windowed pair; use whatever growth we saw.
        let k = log_prefix.len() - 1;
        let w = k.min(window).max(1).min(k.max(1));
        estimate = ((log_prefix[k] - log_prefix[k.saturating_sub(w)]) / w as f64).exp();
    }
    Ok(GapEstimate {
        lambda2_modulus: estimate,
        iterations,
        residual,
        converged: false,
    })
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Full spectrum of A, sorted by decreasing modulus.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    /// Unit right eigenvectors matching `eigenvalues`, when requested.
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
}

/// Dense eigensolve of the materialized matrix: balancing, Householder
/// Hessenberg reduction, Francis double-shift QR, inverse iteration for the
/// eigenvectors. n <= 2000.
pub fn full_spectrum_small(a: &PermSum, want_vectors: bool) -> Result<SpectrumResult> {
    let n = a.n();
    if n > SPECTRUM_DENSE_LIMIT {
        return Err(Error::resource(format!(
            "full_spectrum_small requires n <= {SPECTRUM_DENSE_LIMIT}, got n = {n}"
        )));
    }
    let dense = a.materialize_dense(SPECTRUM_DENSE_LIMIT)?;
    let mut m = RMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, dense.get(i, j) as f64);
        }
    }
    let eig = linalg::eigen(&m, want_vectors)?;
    Ok(SpectrumResult {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
    })
}

/// Oriented Kesten-McKay density `d^2(d-1)/pi * 1_{|z| < sqrt d} / (d^2 - |z|^2)^2`.
pub fn okm_density(z: Complex64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(
            "the oriented Kesten-McKay density needs d >= 2",
        ));
    }
    let df = d as f64;
    let r2 = z.norm_sqr();
    if r2 >= df {
        return Ok(0.0);
    }
    Ok(df * df * (df - 1.0) / std::f64::consts::PI / (df * df - r2).powi(2))
}

/// Total mass of the density by radial Simpson quadrature (diagnostic; the
/// closed form integrates to exactly 1).
pub fn okm_total_mass(d: usize, steps: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid("needs d >= 2"));
    }
    let steps = if steps % 2 == 0 { steps } else { steps + 1 };
    let df = d as f64;
    let hi = df.sqrt();
    let h = hi / steps as f64;
    // Closed-form radial integrand over the open support; evaluating the
    // density itself would hit the indicator's boundary zero at r = sqrt(d).
    let f = |r: f64| -> f64 { 2.0 * df * df * (df - 1.0) * r / (df * df - r * r).powi(2) };
    let mut acc = f(0.0) + f(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    Ok(acc * h / 3.0)
}

/// Log-potential of the oriented Kesten-McKay law:
/// `log |z|` outside the disk of radius sqrt(d), and
/// `-(d-1) log sqrt(d^2 - |z|^2) + alpha_d` inside, with
/// `alpha_d = (d-1) log sqrt(1 - 1/d) + (d - 1/2) log d`.
pub fn okm_logpotential(z: Complex64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid("the log-potential formula needs d >= 2"));
    }
    let df = d as f64;
    let r2 = z.norm_sqr();
    if r2 > df {
        return Ok(0.5 * r2.ln());
    }
    let alpha = (df - 1.0) * (1.0 - 1.0 / df).sqrt().ln() + (df - 0.5) * df.ln();
    Ok(-(df - 1.0) * (df * df - r2).sqrt().ln() + alpha)
}

/// The log-determinant fluctuation field on a square grid.
#[derive(Debug, Clone, Serialize)]
pub struct OkmField {
    pub d: usize,
    pub half_width: f64,
    pub resolution: usize,
    /// Grid points, row-major over the square [-w, w]^2.
    pub points: Vec<(f64, f64)>,
    /// `log |det(zI - A)| - n U_d(z)` per point.
    pub psi: Vec<f64>,
    /// True where z sits numerically on an eigenvalue (log singularity);
    /// such values are clamped and must not enter statistics.
    pub flagged: Vec<bool>,
}

/// Evaluates `Psi_n(z) = log |det(zI - A)| - n U_d(z)` on an m-by-m grid
/// over `[-w, w]^2` via log-domain LU at each grid point. Points whose LU
/// runs into a near-zero pivot (within 1e-6 of singular at matrix scale)
/// are flagged and clamped.
pub fn fluctuation_field(
    a: &PermSum,
    half_width: f64,
    resolution: usize,
    dense_limit: usize,
) -> Result<OkmField> {
    let n = a.n();
    if n > dense_limit {
        return Err(Error::resource(format!(
            "fluctuation_field requires n <= {dense_limit}, got n = {n}"
        )));
    }
    if a.d() < 2 {
        return Err(Error::invalid("fluctuation_field needs d >= 2"));
    }
    if !(half_width > 0.0) {
        return Err(Error::invalid("need a positive window"));
    }
    // A zero-resolution grid is legal and yields an empty field.
    let coord = |i: usize| -> f64 {
        if resolution <= 1 {
            0.0
        } else {
            -half_width + 2.0 * half_width * i as f64 / (resolution - 1) as f64
        }
    };
    let points: Vec<(f64, f64)> = (0..resolution * resolution)
        .map(|idx| (coord(idx % resolution), coord(idx / resolution)))
        .collect();
    let rows: Vec<(f64, bool)> = points
        .par_iter()
        .map(|&(re, im)| {
            let z = Complex64::new(re, im);
            psi_at(a, z)
        })
        .collect::<Result<_>>()?;
    let psi = rows.iter().map(|r| r.0).collect();
    let flagged = rows.iter().map(|r| r.1).collect();
    Ok(OkmField {
        d: a.d(),
        half_width,
        resolution,
        points,
        psi,
        flagged,
    })
}

/// The fluctuation field at a single point; returns (psi, flagged).
pub fn psi_at(a: &PermSum, z: Complex64) -> Result<(f64, bool)> {
    let n = a.n();
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, z);
    }
    for p in a.perms() {
        for i in 0..n {
            let j = p.apply(i);
            let v = m.get(i, j) - 1.0;
            m.set(i, j, v);
        }
    }
    let ld = lu_logdet(&mut m);
    let u = okm_logpotential(z, a.d())?;
    let scale = z.norm() + a.d() as f64;
    let flagged = ld.min_pivot < 1e-6 * scale;
    let psi = if ld.log_modulus.is_finite() {
        ld.log_modulus - n as f64 * u
    } else {
        f64::MIN // clamped sentinel for an exactly singular point
    };
    Ok((psi, flagged))
}

/// Inverse participation ratio `|v|_2^4 / (n |v|_4^4)` in (0, 1]: 1 for a
/// constant-modulus vector, 1/n for a standard basis vector.
pub fn ipr(v: &[Complex64]) -> Result<f64> {
    let n = v.len();
    if n == 0 {
        return Err(Error::invalid("ipr of an empty vector"));
    }
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if norm2 == 0.0 {
        return Err(Error::invalid("ipr of the zero vector"));
    }
    let norm4: f64 = v.iter().map(|z| z.norm_sqr() * z.norm_sqr()).sum();
    Ok(norm2 * norm2 / (n as f64 * norm4))
}

/// Degree schedule for the gap experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum DegreeSchedule {
    /// Fixed degree; exceedance threshold sqrt(d) + eps.
    Fixed(usize),
    /// Desk-scale growing degree d = max(2, floor(n^{1/4})); threshold
    /// sqrt(d) (1 + eps).
    FourthRoot,
}

impl DegreeSchedule {
    pub fn degree(&self, n: usize) -> usize {
        match self {
            DegreeSchedule::Fixed(d) => *d,
            DegreeSchedule::FourthRoot => ((n as f64).powf(0.25).floor() as usize).max(2),
        }
    }

    pub fn threshold(&self, n: usize, eps: f64) -> f64 {
        let d = self.degree(n) as f64;
        match self {
            DegreeSchedule::Fixed(_) => d.sqrt() + eps,
            DegreeSchedule::FourthRoot => d.sqrt() * (1.0 + eps),
        }
    }
}

/// One trial of the spectral gap experiment.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapTrial {
    pub trial: u64,
    pub lambda2: f64,
    pub threshold: f64,
    pub exceeded: bool,
    pub converged: bool,
    pub iterations: u64,
}

/// Report of [`spectral_gap_experiment`].
#[derive(Debug, Clone, Serialize)]
pub struct GapExperimentReport {
    pub n: usize,
    pub d: usize,
    pub eps: f64,
    pub trials: u64,
    pub threshold: f64,
    pub rows: Vec<GapTrial>,
    pub exceed_count: u64,
    pub frequency: f64,
    /// 95% Wilson confidence interval for the exceedance probability.
    pub wilson_95: (f64, f64),
}

/// Empirical exceedance frequency of `|lambda_2|` over the spectral-gap
/// threshold, with per-trial values persisted and a Wilson interval on the
/// frequency.
pub fn spectral_gap_experiment(
    n: usize,
    schedule: DegreeSchedule,
    eps: f64,
    trials: u64,
    tol: f64,
    max_iter: u64,
    seed: u64,
) -> Result<GapExperimentReport> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let d = schedule.degree(n);
    let threshold = schedule.threshold(n, eps);
    let rows: Vec<GapTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t);
            let a = PermSum::sample_uniform(n, d, &mut rng)?;
            let est = second_eigenvalue_modulus(&a, tol, max_iter, &mut rng)?;
            Ok(GapTrial {
                trial: t,
                lambda2: est.lambda2_modulus,
                threshold,
                exceeded: est.lambda2_modulus > threshold,
                converged: est.converged,
                iterations: est.iterations,
            })
        })
        .collect::<Result<_>>()?;
    let exceed_count = rows.iter().filter(|r| r.exceeded).count() as u64;
    let frequency = exceed_count as f64 / trials as f64;
    Ok(GapExperimentReport {
        n,
        d,
        eps,
        trials,
        threshold,
        rows,
        exceed_count,
        frequency,
        wilson_95: wilson_interval(exceed_count, trials, 1.96),
    })
}
