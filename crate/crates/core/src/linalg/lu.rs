//! Complex LU with partial pivoting, exposing the determinant in log-domain
//! (log-modulus and phase accumulated separately) so that determinants of
//! large matrices never overflow.

use num_complex::Complex64;

use super::CMatrix;

/// Log-domain determinant of a complex matrix.
#[derive(Debug, Clone, Copy)]
pub struct LogDet {
    /// ln |det|; `-inf` for an exactly singular matrix.
    pub log_modulus: f64,
    /// Argument of det in (-pi, pi].
    pub phase: f64,
    /// Smallest pivot modulus met during elimination; a near-zero value
    /// signals that the matrix is close to singular at working precision.
    pub min_pivot: f64,
}

impl LogDet {
    /// The determinant as a complex number; may overflow/underflow to
    /// `inf`/`0` when the log-modulus leaves the f64 range.
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_modulus.exp(), self.phase)
    }
}

/// Factors `m` in place and returns the log-domain determinant.
pub fn lu_logdet(m: &mut CMatrix) -> LogDet {
    let n = m.n;
    let mut log_modulus = 0.0f64;
    let mut phase = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        // Partial pivoting on modulus.
        let mut pivot_row = col;
        let mut pivot_mag = m.get(col, col).norm();
        for r in col + 1..n {
            let mag = m.get(r, col).norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return LogDet {
                log_modulus: f64::NEG_INFINITY,
                phase: 0.0,
                min_pivot: 0.0,
            };
        }
        if pivot_row != col {
            for j in 0..n {
                let a = m.get(col, j);
                let b = m.get(pivot_row, j);
                m.set(col, j, b);
                m.set(pivot_row, j, a);
            }
            phase += std::f64::consts::PI; // row swap flips the sign
        }
        let pivot = m.get(col, col);
        min_pivot = min_pivot.min(pivot_mag);
        log_modulus += pivot_mag.ln();
        phase += pivot.arg();
        let inv = pivot.inv();
        for r in col + 1..n {
            let factor = m.get(r, col) * inv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            m.set(r, col, factor);
            for j in col + 1..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
        }
    }
    // Reduce phase to (-pi, pi].
    let phase = phase.rem_euclid(2.0 * std::f64::consts::PI);
    let phase = if phase > std::f64::consts::PI {
        phase - 2.0 * std::f64::consts::PI
    } else {
        phase
    };
    LogDet {
        log_modulus,
        phase,
        min_pivot,
    }
}

/// Solves `m x = b` in place (b is overwritten by x) by Gaussian elimination
/// with partial pivoting. Returns false if a pivot vanishes.
pub fn lu_solve_in_place(m: &mut CMatrix, b: &mut [Complex64]) -> bool {
    let n = m.n;
    assert_eq!(b.len(), n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = m.get(col, col).norm();
        for r in col + 1..n {
            let mag = m.get(r, col).norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return false;
        }
        if pivot_row != col {
            for j in 0..n {
                let a = m.get(col, j);
                m.set(col, j, m.get(pivot_row, j));
                m.set(pivot_row, j, a);
            }
            b.swap(col, pivot_row);
        }
        let inv = m.get(col, col).inv();
        for r in col + 1..n {
            let factor = m.get(r, col) * inv;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let v = m.get(r, j) - factor * m.get(col, j);
                m.set(r, j, v);
            }
            b[r] -= factor * b[col];
        }
    }
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc -= m.get(i, j) * b[j];
        }
        b[i] = acc / m.get(i, i);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_cmatrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = RngStream::new(seed, 0);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, Complex64::new(rng.normal(), rng.normal()));
            }
        }
        m
    }

    /// Cofactor-expansion determinant, oracle for small n.
    fn det_brute(m: &CMatrix) -> Complex64 {
        let n = m.n;
        if n == 1 {
            return m.get(0, 0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let mut sub = CMatrix::zeros(n - 1);
            for r in 1..n {
                let mut cc = 0;
                for c in 0..n {
                    if c == j {
                        continue;
                    }
                    sub.set(r - 1, cc, m.get(r, c));
                    cc += 1;
                }
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += m.get(0, j) * det_brute(&sub) * sign;
        }
        acc
    }

    #[test]
    fn logdet_matches_cofactor_expansion() {
        for n in 1..=6 {
            let m = random_cmatrix(n, 40 + n as u64);
            let expected = det_brute(&m);
            let ld = lu_logdet(&mut m.clone());
            let got = ld.value();
            assert!(
                (got - expected).norm() <= 1e-10 * expected.norm().max(1.0),
                "n {n}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn singular_matrix_reports_neg_infinity() {
        let mut m = CMatrix::zeros(3);
        m.set(0, 0, Complex64::new(1.0, 0.0));
        m.set(1, 1, Complex64::new(2.0, 0.0));
        // third row zero
        let ld = lu_logdet(&mut m);
        assert!(ld.log_modulus.is_infinite() && ld.log_modulus < 0.0);
    }

    #[test]
    fn solve_recovers_known_vector() {
        let n = 40;
        let m = random_cmatrix(n, 77);
        let mut rng = RngStream::new(78, 0);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.normal(), rng.normal()))
            .collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                b[i] += m.get(i, j) * x[j];
            }
        }
        assert!(lu_solve_in_place(&mut m.clone(), &mut b));
        for i in 0..n {
            assert!((b[i] - x[i]).norm() < 1e-8, "i = {i}");
        }
    }
}
