//! Dense real nonsymmetric eigensolver.
//!
//! Pipeline: balancing (Parlett-Reinsch scaling, powers of two), Householder
//! reduction to upper Hessenberg form with accumulated transform, Francis
//! double-shift QR with small-subdiagonal deflation for the eigenvalues
//! (following the classic Algol/EISPACK `hqr` scheme), and inverse iteration
//! on the Hessenberg form for right eigenvectors. Balancing is applied
//! unconditionally: the inputs here are nonnormal and it measurably sharpens
//! the computed spectrum at no asymptotic cost.

use num_complex::Complex64;

use super::{CMatrix, RMatrix};
use crate::error::{Error, Result};

const EPS: f64 = 2.220446049250313e-16;

/// Eigendecomposition result: eigenvalues sorted by decreasing modulus,
/// optional unit right eigenvectors in matching order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

/// Computes the spectrum of a square real matrix.
pub fn eigen(a: &RMatrix, want_vectors: bool) -> Result<Eigen> {
    let n = a.n;
    if n == 0 {
        return Err(Error::invalid("matrix must be nonempty"));
    }
    let mut h = a.clone();
    let scale = balance(&mut h);
    let v = hessenberg(&mut h, want_vectors);
    // Clean Hessenberg copy for inverse iteration (the reduction leaves
    // Householder vectors below the subdiagonal).
    let h0 = want_vectors.then(|| {
        let mut clean = h.clone();
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                clean.set(i, j, 0.0);
            }
        }
        clean
    });
    let (re, im) = francis_qr(&mut h)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let mi = re[i].hypot(im[i]);
        let mj = re[j].hypot(im[j]);
        mj.partial_cmp(&mi)
            .unwrap()
            .then(re[j].partial_cmp(&re[i]).unwrap())
            .then(im[j].partial_cmp(&im[i]).unwrap())
    });
    let values: Vec<Complex64> = order.iter().map(|&i| Complex64::new(re[i], im[i])).collect();

    let vectors = if want_vectors {
        let h0 = h0.unwrap();
        let v = v.unwrap();
        let mut vecs: Vec<Vec<Complex64>> = vec![Vec::new(); n];
        for idx in 0..n {
            if values[idx].im < 0.0 && idx > 0 && values[idx - 1] == values[idx].conj() {
                vecs[idx] = vecs[idx - 1].iter().map(|z| z.conj()).collect();
                continue;
            }
            vecs[idx] = eigenvector(&h0, &v, &scale, values[idx]);
        }
        Some(vecs)
    } else {
        None
    };

    Ok(Eigen { values, vectors })
}

/// Parlett-Reinsch balancing by diagonal powers of two: returns the scale
/// vector d with the matrix overwritten by D^-1 A D.
fn balance(a: &mut RMatrix) -> Vec<f64> {
    let n = a.n;
    let mut scale = vec![1.0f64; n];
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a.get(j, i).abs();
                    r += a.get(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let mut cc = c;
            let mut g = r / radix;
            while cc < g {
                f *= radix;
                cc *= sqrdx;
            }
            g = r * radix;
            while cc > g {
                f /= radix;
                cc /= sqrdx;
            }
            if (cc + r) / f < 0.95 * (c + r) {
                done = false;
                scale[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    let v = a.get(i, j) * inv;
                    a.set(i, j, v);
                }
                for j in 0..n {
                    let v = a.get(j, i) * f;
                    a.set(j, i, v);
                }
            }
        }
    }
    scale
}

/// Householder reduction to upper Hessenberg form; optionally accumulates
/// the orthogonal transform. The Householder vectors are left below the
/// subdiagonal of `h` (callers wanting a clean Hessenberg must zero them).
fn hessenberg(h: &mut RMatrix, want_transform: bool) -> Option<RMatrix> {
    let n = h.n;
    if n < 3 {
        return want_transform.then(|| identity(n));
    }
    let low = 0;
    let high = n - 1;
    let mut ort = vec![0.0f64; n];

    for m in low + 1..high {
        let mut sc = 0.0;
        for i in m..=high {
            sc += h.get(i, m - 1).abs();
        }
        if sc == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h.get(i, m - 1) / sc;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h.get(i, j);
            }
            f /= hsum;
            for i in m..=high {
                let v = h.get(i, j) - f * ort[i];
                h.set(i, j, v);
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h.get(i, j);
            }
            f /= hsum;
            for j in m..=high {
                let v = h.get(i, j) - f * ort[j];
                h.set(i, j, v);
            }
        }
        ort[m] *= sc;
        h.set(m, m - 1, sc * g);
    }

    if !want_transform {
        return None;
    }
    let mut v = identity(n);
    for m in (low + 1..high).rev() {
        if h.get(m, m - 1) == 0.0 {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h.get(i, m - 1);
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * v.get(i, j);
            }
            // Double division avoids possible underflow.
            g = (g / ort[m]) / h.get(m, m - 1);
            for i in m..=high {
                let val = v.get(i, j) + g * ort[i];
                v.set(i, j, val);
            }
        }
    }
    Some(v)
}

fn identity(n: usize) -> RMatrix {
    let mut m = RMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, 1.0);
    }
    m
}

/// Francis double-shift QR on an upper Hessenberg matrix; returns the
/// eigenvalues as (real, imaginary) arrays. The matrix is destroyed.
fn francis_qr(h: &mut RMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.n;
    let mut d = vec![0.0f64; nn];
    let mut e = vec![0.0f64; nn];
    if nn == 1 {
        d[0] = h.get(0, 0);
        return Ok((d, e));
    }
    let low: isize = 0;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h.get(i, j).abs();
        }
    }

    let mut n: isize = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_sweeps = 0usize;
    let max_sweeps = 30 * nn;
    let (mut p, mut q, mut r, mut s, mut z, mut w, mut x, mut y);
    p = 0.0;
    q = 0.0;
    r = 0.0;

    while n >= low {
        // Find a small subdiagonal element bounding the active block.
        let mut l = n;
        while l > low {
            s = h.get(l as usize - 1, l as usize - 1).abs() + h.get(l as usize, l as usize).abs();
            if s == 0.0 {
                s = norm;
            }
            if h.get(l as usize, l as usize - 1).abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            let nu = n as usize;
            d[nu] = h.get(nu, nu) + exshift;
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            let nu = n as usize;
            w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            p = (h.get(nu - 1, nu - 1) - h.get(nu, nu)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            let xx = h.get(nu, nu) + exshift;
            if q >= 0.0 {
                // Real pair.
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = xx + z;
                d[nu] = if z != 0.0 { xx - w / z } else { d[nu - 1] };
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                // Complex conjugate pair.
                d[nu - 1] = xx + p;
                d[nu] = xx + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet: one double-shift sweep on the block l..=n.
            total_sweeps += 1;
            if total_sweeps > max_sweeps {
                return Err(Error::Numerical(format!(
                    "QR failed to converge after {max_sweeps} sweeps; stuck block rows {l}..={n}"
                )));
            }
            let nu = n as usize;
            x = h.get(nu, nu);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h.get(nu - 1, nu - 1);
                w = h.get(nu, nu - 1) * h.get(nu - 1, nu);
            }

            // Exceptional shifts against stagnation.
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    let iu = i as usize;
                    let v = h.get(iu, iu) - x;
                    h.set(iu, iu, v);
                }
                s = h.get(nu, nu - 1).abs() + h.get(nu - 1, nu - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        let iu = i as usize;
                        let v = h.get(iu, iu) - s;
                        h.set(iu, iu, v);
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // Look for two consecutive small subdiagonals.
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h.get(mu, mu);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h.get(mu + 1, mu) + h.get(mu, mu + 1);
                q = h.get(mu + 1, mu + 1) - z - r - s;
                r = h.get(mu + 2, mu + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h.get(mu, mu - 1).abs() * (q.abs() + r.abs())
                    < EPS
                        * (p.abs()
                            * (h.get(mu - 1, mu - 1).abs() + z.abs() + h.get(mu + 1, mu + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=n {
                let iu = i as usize;
                h.set(iu, iu - 2, 0.0);
                if i > m + 2 {
                    h.set(iu, iu - 3, 0.0);
                }
            }

            // The double QR sweep itself, rows l..=n, columns m..=n.
            for k in m..=(n - 1) {
                let ku = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = h.get(ku, ku - 1);
                    q = h.get(ku + 1, ku - 1);
                    r = if notlast { h.get(ku + 2, ku - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h.set(ku, ku - 1, -s * x);
                } else if l != m {
                    let v = -h.get(ku, ku - 1);
                    h.set(ku, ku - 1, v);
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                // Row modification.
                for j in ku..nn {
                    let mut pp = h.get(ku, j) + q * h.get(ku + 1, j);
                    if notlast {
                        pp += r * h.get(ku + 2, j);
                        let v = h.get(ku + 2, j) - pp * z;
                        h.set(ku + 2, j, v);
                    }
                    let v = h.get(ku, j) - pp * x;
                    h.set(ku, j, v);
                    let v = h.get(ku + 1, j) - pp * y;
                    h.set(ku + 1, j, v);
                }
                // Column modification.
                let top = (n as usize).min(ku + 3);
                for i in 0..=top {
                    let mut pp = x * h.get(i, ku) + y * h.get(i, ku + 1);
                    if notlast {
                        pp += z * h.get(i, ku + 2);
                        let v = h.get(i, ku + 2) - pp * r;
                        h.set(i, ku + 2, v);
                    }
                    let v = h.get(i, ku) - pp;
                    h.set(i, ku, v);
                    let v = h.get(i, ku + 1) - pp * q;
                    h.set(i, ku + 1, v);
                }
            }
        }
    }
    Ok((d, e))
}

/// Right eigenvector for a computed eigenvalue: inverse iteration on the
/// clean Hessenberg form, back-transformed through the Householder
/// accumulation and the balancing diagonal, normalized to unit 2-norm.
fn eigenvector(h0: &RMatrix, v: &RMatrix, scale: &[f64], lambda: Complex64) -> Vec<Complex64> {
    let n = h0.n;
    let mut hnorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            hnorm += h0.get(i, j).abs();
        }
    }
    let floor = EPS * hnorm.max(1.0);
    let mut y: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n];
    normalize(&mut y);
    for _ in 0..3 {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            let lo = i.saturating_sub(1);
            for j in lo..n {
                m.set(i, j, Complex64::new(h0.get(i, j), 0.0));
            }
            let without = m.get(i, i) - lambda;
            m.set(i, i, without);
        }
        let mut b = y.clone();
        hessenberg_solve(&mut m, &mut b, floor);
        y = b;
        normalize(&mut y);
    }
    // Back-transform: x = V y, then undo balancing, then normalize.
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += v.get(i, j) * y[j];
        }
        x[i] = acc * scale[i];
    }
    normalize(&mut x);
    x
}

fn normalize(v: &mut [Complex64]) {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for z in v.iter_mut() {
            *z /= norm;
        }
    }
}

/// Gaussian elimination with partial pivoting specialized to Hessenberg
/// structure (one subdiagonal), with a pivot floor replacing exact zeros so
/// that inverse iteration at a computed eigenvalue stays solvable.
fn hessenberg_solve(m: &mut CMatrix, b: &mut [Complex64], floor: f64) {
    let n = m.n;
    for col in 0..n {
        if col + 1 < n && m.get(col + 1, col).norm() > m.get(col, col).norm() {
            for j in 0..n {
                let a = m.get(col, j);
                m.set(col, j, m.get(col + 1, j));
                m.set(col + 1, j, a);
            }
            b.swap(col, col + 1);
        }
        let mut pivot = m.get(col, col);
        if pivot.norm() < floor {
            pivot = Complex64::new(floor, 0.0);
            m.set(col, col, pivot);
        }
        if col + 1 < n {
            let factor = m.get(col + 1, col) / pivot;
            if factor != Complex64::new(0.0, 0.0) {
                for j in col + 1..n {
                    let v = m.get(col + 1, j) - factor * m.get(col, j);
                    m.set(col + 1, j, v);
                }
                b[col + 1] -= factor * b[col];
            }
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= m.get(i, j) * b[j];
        }
        b[i] = acc / m.get(i, i);
    }
}
