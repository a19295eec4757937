use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

/// Dense 3×3 complex matrix; used for covariance and coherency entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat3(pub [[C64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[C64::new(0.0, 0.0); 3]; 3]);

    pub fn from_real_diag(d: [f64; 3]) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            m.0[i][i] = C64::new(d[i], 0.0);
        }
        m
    }

    pub fn identity() -> Mat3 {
        Mat3::from_real_diag([1.0; 3])
    }

    /// `k·k^H`.
    pub fn outer(k: &[C64; 3]) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = k[i] * k[j].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0].re + self.0[1][1].re + self.0[2][2].re
    }

    pub fn adjoint(&self) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn matmul(&self, o: &Mat3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }

    /// `u^H·M·u`, real part.
    pub fn quad_form(&self, u: &[C64; 3]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += u[i].conj() * self.0[i][j] * u[j];
            }
        }
        acc.re
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (*self - self.adjoint()).norm()
    }

    /// Eigenvalues of the Hermitian part in descending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        // the trigonometric closed form loses ~1e-8 near repeated roots, too
        // coarse for the PSD test on rank-deficient model matrices
        let herm = (*self + self.adjoint()) * 0.5;
        let e = SymmetricEigen::new(Matrix3::from_fn(|i, j| herm.0[i][j])).eigenvalues;
        let mut v = [e[0], e[1], e[2]];
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[2]
    }

    /// Projection onto the positive semi-definite cone (negative eigenvalues set to 0).
    pub fn psd_projection(&self) -> Mat3 {
        let herm = (*self + self.adjoint()) * 0.5;
        let m = Matrix3::from_fn(|i, j| herm.0[i][j]);
        let eig = SymmetricEigen::new(m);
        let mut out = Mat3::ZERO;
        for k in 0..3 {
            let lam = eig.eigenvalues[k];
            if lam <= 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            for i in 0..3 {
                for j in 0..3 {
                    out.0[i][j] += v[i] * v[j].conj() * lam;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(mut self, o: Mat3) -> Mat3 {
        self += o;
        self
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(mut self, o: Mat3) -> Mat3 {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= o.0[i][j];
            }
        }
        self
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(mut self, s: f64) -> Mat3 {
        for row in self.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        self
    }
}
