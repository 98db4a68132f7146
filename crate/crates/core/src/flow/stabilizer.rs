//! Spectral preconditioner for the stabilized scheme on periodic grids.
//!
//! Applies `(I + dt s L)^{-1}` componentwise, where `L` is the frozen
//! coefficient biharmonic operator with symbol
//! `(alpha 4 sin^2(pi k_u / n_u) / h_u^2 + beta 4 sin^2(pi k_v / n_v) / h_v^2)^2`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::{Vector, ZERO};

pub struct Stabilizer {
    nu: usize,
    nv: usize,
    hu: f64,
    hv: f64,
    fwd_u: Arc<dyn Fft<f64>>,
    inv_u: Arc<dyn Fft<f64>>,
    fwd_v: Arc<dyn Fft<f64>>,
    inv_v: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Stabilizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Stabilizer({}x{})", self.nu, self.nv)
    }
}

impl Stabilizer {
    pub fn new(nu: usize, nv: usize, hu: f64, hv: f64) -> Self {
        let mut planner = FftPlanner::new();
        Stabilizer {
            nu,
            nv,
            hu,
            hv,
            fwd_u: planner.plan_fft_forward(nu),
            inv_u: planner.plan_fft_inverse(nu),
            fwd_v: planner.plan_fft_forward(nv),
            inv_v: planner.plan_fft_inverse(nv),
        }
    }

    fn symbol(&self, ku: usize, kv: usize, alpha: f64, beta: f64) -> f64 {
        let su = (std::f64::consts::PI * ku as f64 / self.nu as f64).sin();
        let sv = (std::f64::consts::PI * kv as f64 / self.nv as f64).sin();
        let l = alpha * 4.0 * su * su / (self.hu * self.hu)
            + beta * 4.0 * sv * sv / (self.hv * self.hv);
        l * l
    }

    /// `(I + c L)^{-1}` applied to each of the first `n` components of a nodal
    /// field in row-major `(u, v)` order.
    pub fn apply(&self, field: &[Vector], n: usize, c: f64, alpha: f64, beta: f64) -> Vec<Vector> {
        let (nu, nv) = (self.nu, self.nv);
        assert_eq!(field.len(), nu * nv);
        let mut out = vec![ZERO; nu * nv];
        let mut buf = vec![Complex64::new(0.0, 0.0); nu * nv];
        let mut col = vec![Complex64::new(0.0, 0.0); nu];
        let damp: Vec<f64> = (0..nu * nv)
            .map(|idx| 1.0 / (1.0 + c * self.symbol(idx / nv, idx % nv, alpha, beta)))
            .collect();
        let norm = 1.0 / (nu * nv) as f64;
        for a in 0..n {
            for (b, x) in buf.iter_mut().zip(field) {
                *b = Complex64::new(x[a], 0.0);
            }
            // rows are contiguous in v
            for row in buf.chunks_mut(nv) {
                self.fwd_v.process(row);
            }
            self.columns(&mut buf, &mut col, &*self.fwd_u);
            for (b, d) in buf.iter_mut().zip(&damp) {
                *b *= *d;
            }
            self.columns(&mut buf, &mut col, &*self.inv_u);
            for row in buf.chunks_mut(nv) {
                self.inv_v.process(row);
            }
            for (o, b) in out.iter_mut().zip(&buf) {
                o[a] = b.re * norm;
            }
        }
        out
    }

    fn columns(&self, buf: &mut [Complex64], col: &mut [Complex64], fft: &dyn Fft<f64>) {
        let (nu, nv) = (self.nu, self.nv);
        for j in 0..nv {
            for i in 0..nu {
                col[i] = buf[i * nv + j];
            }
            fft.process(col);
            for i in 0..nu {
                buf[i * nv + j] = col[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    #[test]
    fn zero_strength_is_identity() {
        let (nu, nv) = (16, 12);
        let st = Stabilizer::new(nu, nv, 0.3, 0.5);
        let field: Vec<Vector> = (0..nu * nv)
            .map(|k| from_slice(&[(k as f64).sin(), (k as f64 * 0.3).cos(), 1.0]))
            .collect();
        let out = st.apply(&field, 3, 0.0, 1.0, 1.0);
        for (a, b) in out.iter().zip(&field) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_mode_is_damped_by_its_symbol() {
        let (nu, nv) = (16, 16);
        let h = std::f64::consts::TAU / 16.0;
        let st = Stabilizer::new(nu, nv, h, h);
        let field: Vec<Vector> = (0..nu * nv)
            .map(|k| {
                let (i, j) = (k / nv, k % nv);
                from_slice(&[(3.0 * i as f64 * h).cos() * (j as f64 * h).sin()])
            })
            .collect();
        let c = 0.01;
        let out = st.apply(&field, 1, c, 1.0, 2.0);
        let lam = {
            let su = (std::f64::consts::PI * 3.0 / 16.0).sin();
            let sv = (std::f64::consts::PI / 16.0).sin();
            let l = 4.0 * su * su / (h * h) + 2.0 * 4.0 * sv * sv / (h * h);
            l * l
        };
        let expect = 1.0 / (1.0 + c * lam);
        for (a, b) in out.iter().zip(&field) {
            assert!((a[0] - expect * b[0]).abs() < 1e-12);
        }
    }
}
