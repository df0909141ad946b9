//! Oracles independent of the library's integrator and closed forms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// `exp(-i H t)` by scaling and squaring of a Taylor series.
pub fn expm_minus_i(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let a = h * C64::new(0.0, -t);
    let norm: f64 = a.iter().map(|z| z.norm()).sum();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = &a / C64::from(2f64.powi(squarings as i32));
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Piecewise-constant propagation with midpoint sampling and exact
/// sub-step exponentials.
pub fn propagate_piecewise<F>(h: F, psi: &DVector<C64>, t0: f64, t1: f64, n: usize) -> DVector<C64>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    let dt = (t1 - t0) / n as f64;
    let mut s = psi.clone();
    for k in 0..n {
        let tm = t0 + (k as f64 + 0.5) * dt;
        s = expm_minus_i(&h(tm), dt) * s;
    }
    s
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
