//! Dense linear algebra kernels used by the secular-coefficient and spectral
//! modules: complex LU with log-domain determinants, and a real nonsymmetric
//! eigensolver (balancing, Householder Hessenberg reduction, Francis
//! double-shift QR, inverse iteration for eigenvectors).

mod eig;
mod lu;

pub use eig::{eigen, Eigen};
pub use lu::{lu_logdet, lu_solve_in_place, LogDet};

use num_complex::Complex64;

/// Square complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> CMatrix {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Square real matrix, row-major.
#[derive(Debug, Clone)]
pub struct RMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(n: usize) -> RMatrix {
        RMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> RMatrix {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            data.extend_from_slice(r);
        }
        RMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }
}
