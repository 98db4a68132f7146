//! Fixed-capacity vectors and matrices for per-node ambient computations.
//!
//! Ambient chart vectors are stored zero-padded in `[f64; MAX_DIM]`; only the
//! first `n` entries are meaningful. Padding entries stay zero under every
//! operation in this module, so componentwise arithmetic can ignore `n`.

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

pub type Vector = [f64; MAX_DIM];
pub type Mat = [[f64; MAX_DIM]; MAX_DIM];

pub const ZERO: Vector = [0.0; MAX_DIM];

#[inline]
pub fn from_slice(xs: &[f64]) -> Vector {
    let mut v = ZERO;
    v[..xs.len()].copy_from_slice(xs);
    v
}

#[inline]
pub fn add(a: &Vector, b: &Vector) -> Vector {
    let mut r = ZERO;
    for k in 0..MAX_DIM {
        r[k] = a[k] + b[k];
    }
    r
}

#[inline]
pub fn sub(a: &Vector, b: &Vector) -> Vector {
    let mut r = ZERO;
    for k in 0..MAX_DIM {
        r[k] = a[k] - b[k];
    }
    r
}

#[inline]
pub fn scale(a: &Vector, s: f64) -> Vector {
    let mut r = ZERO;
    for k in 0..MAX_DIM {
        r[k] = a[k] * s;
    }
    r
}

/// `acc += s * a`
#[inline]
pub fn axpy(acc: &mut Vector, s: f64, a: &Vector) {
    for k in 0..MAX_DIM {
        acc[k] += s * a[k];
    }
}

#[inline]
pub fn dot(a: &Vector, b: &Vector) -> f64 {
    let mut s = 0.0;
    for k in 0..MAX_DIM {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm(a: &Vector) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn max_abs(a: &Vector) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[inline]
pub fn is_finite(a: &Vector) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn identity(n: usize) -> Mat {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    for (k, row) in m.iter_mut().enumerate().take(n) {
        row[k] = 1.0;
    }
    m
}

#[inline]
pub fn mat_vec(m: &Mat, v: &Vector, n: usize) -> Vector {
    let mut r = ZERO;
    for a in 0..n {
        let mut s = 0.0;
        for b in 0..n {
            s += m[a][b] * v[b];
        }
        r[a] = s;
    }
    r
}

/// Bilinear form `m(a, b)`.
#[inline]
pub fn form(m: &Mat, a: &Vector, b: &Vector, n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i][j] * b[j];
        }
        s += a[i] * row;
    }
    s
}

/// Inverse of a symmetric positive-definite matrix by Cholesky.
/// Returns `None` when a pivot is not positive.
pub fn spd_inverse(m: &Mat, n: usize) -> Option<Mat> {
    let mut l = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // invert the lower factor, then form L^-T L^-1
    let mut linv = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        linv[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut s = 0.0;
            for k in j..i {
                s += l[i][k] * linv[k][j];
            }
            linv[i][j] = -s / l[i][i];
        }
    }
    let mut inv = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in i.max(j)..n {
                s += linv[k][i] * linv[k][j];
            }
            inv[i][j] = s;
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
pub fn sym_eigenvalues(m: &Mat, n: usize) -> Vec<f64> {
    let mut a = *m;
    for _ in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i][j] * a[i][j];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
