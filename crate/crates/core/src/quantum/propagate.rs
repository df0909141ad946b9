//! Fixed-step fourth-order Runge-Kutta integration of `i d|psi>/dt = H(t)|psi>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::hamiltonian::HamiltonianModel;
use super::state::{Basis, StateVector};
use crate::error::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;

/// Time grid plus the state at every grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    basis: Basis,
    times: Vec<f64>,
    amplitudes: Vec<DVector<C64>>,
    norm_drift: f64,
}

impl Trajectory {
    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// max over steps of `| ||psi|| - 1 |`, measured against the initial norm.
    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }

    pub fn amplitudes(&self, step: usize) -> &DVector<C64> {
        &self.amplitudes[step]
    }

    pub fn state(&self, step: usize) -> StateVector {
        StateVector::from_raw(self.basis.clone(), self.amplitudes[step].clone())
            .expect("trajectory states match their basis")
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.len() - 1)
    }

    pub fn populations(&self, step: usize) -> Vec<f64> {
        self.amplitudes[step].iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn population_series(&self, label: &str) -> Result<Vec<f64>> {
        let i = self.basis.require(label)?;
        Ok(self.amplitudes.iter().map(|a| a[i].norm_sqr()).collect())
    }

    pub fn amplitude_series(&self, label: &str) -> Result<Vec<C64>> {
        let i = self.basis.require(label)?;
        Ok(self.amplitudes.iter().map(|a| a[i]).collect())
    }
}

/// Number of RK4 steps covering `[t_start, t_end]` with step at most `dt`.
/// The step actually used is `(t_end - t_start) / n`, so the last grid point
/// lands on `t_end` exactly.
pub fn step_count(t_start: f64, t_end: f64, dt: f64) -> usize {
    let span = t_end - t_start;
    let n = (span / dt).ceil();
    // span/dt that is an integer up to rounding should not gain an extra step
    let n = if n > 1.0 && ((n - 1.0) * dt - span).abs() <= 1e-9 * span {
        n - 1.0
    } else {
        n
    };
    (n as usize).max(1)
}

fn check_window(t_start: f64, t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(
            "dt",
            format!("must be positive and finite, got {dt}"),
        ));
    }
    if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
        return Err(Error::invalid(
            "t_end",
            format!("must exceed t_start ({t_start} >= {t_end})"),
        ));
    }
    Ok(())
}

/// Propagates raw amplitudes without any norm requirement. Linear in `psi0`.
pub fn propagate_amplitudes(
    h: &dyn HamiltonianModel,
    psi0: &DVector<C64>,
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
    check_window(t_start, t_end, dt)?;
    let n = h.dim();
    if psi0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: psi0.len(),
        });
    }
    let steps = step_count(t_start, t_end, dt);
    let step = (t_end - t_start) / steps as f64;

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t_start);
    states.push(psi0.clone());

    let mut cuts: Vec<f64> = h
        .breakpoints()
        .into_iter()
        .filter(|b| b.is_finite() && *b >= t_start - nudge(*b) && *b <= t_end + nudge(*b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let is_cut = |x: f64| cuts.iter().any(|c| (c - x).abs() <= nudge(x));

    let mut work = Rk4Work::new(n);
    let mut cached_at: Option<f64> = None;
    let mut psi = psi0.clone();
    let mut segment = Vec::new();
    for k in 0..steps {
        let t = t_start + k as f64 * step;
        let t_next = if k + 1 == steps {
            t_end
        } else {
            t_start + (k + 1) as f64 * step
        };
        segment.clear();
        segment.push(t);
        segment.extend(
            cuts.iter()
                .copied()
                .filter(|&c| c > t + nudge(c) && c < t_next - nudge(c)),
        );
        segment.push(t_next);
        for w in segment.windows(2) {
            let (a, b) = (w[0], w[1]);
            // one-sided limits at discontinuities of H
            let ta = if is_cut(a) { a + nudge(a) } else { a };
            let tb = if is_cut(b) { b - nudge(b) } else { b };
            if cached_at != Some(ta) {
                fill_checked(h, ta, &mut work.h0)?;
            }
            fill_checked(h, 0.5 * (a + b), &mut work.hm)?;
            fill_checked(h, tb, &mut work.h1)?;
            work.step(&mut psi, b - a);
            std::mem::swap(&mut work.h0, &mut work.h1);
            cached_at = Some(tb);
        }
        times.push(t_next);
        states.push(psi.clone());
    }
    Ok((times, states))
}

fn nudge(x: f64) -> f64 {
    1e-13 * x.abs().max(1.0)
}

struct Rk4Work {
    h0: DMatrix<C64>,
    hm: DMatrix<C64>,
    h1: DMatrix<C64>,
    k1: DVector<C64>,
    k2: DVector<C64>,
    k3: DVector<C64>,
    k4: DVector<C64>,
    tmp: DVector<C64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Rk4Work {
            h0: DMatrix::zeros(n, n),
            hm: DMatrix::zeros(n, n),
            h1: DMatrix::zeros(n, n),
            k1: DVector::zeros(n),
            k2: DVector::zeros(n),
            k3: DVector::zeros(n),
            k4: DVector::zeros(n),
            tmp: DVector::zeros(n),
        }
    }

    /// One classical RK4 step of `dpsi/dt = -i H psi` using `H` at start, middle and end.
    fn step(&mut self, psi: &mut DVector<C64>, dt: f64) {
        let minus_i = C64::new(0.0, -1.0);
        self.h0.mul_to(psi, &mut self.k1);
        self.k1 *= minus_i;

        self.tmp.copy_from(psi);
        self.tmp.axpy(C64::from(0.5 * dt), &self.k1, C64::from(1.0));
        self.hm.mul_to(&self.tmp, &mut self.k2);
        self.k2 *= minus_i;

        self.tmp.copy_from(psi);
        self.tmp.axpy(C64::from(0.5 * dt), &self.k2, C64::from(1.0));
        self.hm.mul_to(&self.tmp, &mut self.k3);
        self.k3 *= minus_i;

        self.tmp.copy_from(psi);
        self.tmp.axpy(C64::from(dt), &self.k3, C64::from(1.0));
        self.h1.mul_to(&self.tmp, &mut self.k4);
        self.k4 *= minus_i;

        let w = C64::from(dt / 6.0);
        psi.axpy(w, &self.k1, C64::from(1.0));
        psi.axpy(w * 2.0, &self.k2, C64::from(1.0));
        psi.axpy(w * 2.0, &self.k3, C64::from(1.0));
        psi.axpy(w, &self.k4, C64::from(1.0));
    }
}

fn fill_checked(h: &dyn HamiltonianModel, t: f64, out: &mut DMatrix<C64>) -> Result<()> {
    h.fill(t, out);
    if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

pub fn propagate(
    h: &dyn HamiltonianModel,
    psi0: &StateVector,
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if psi0.basis() != h.basis() {
        if psi0.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: psi0.dim(),
            });
        }
        return Err(Error::LabelMismatch);
    }
    let (times, amplitudes) = propagate_amplitudes(h, psi0.amplitudes(), t_start, t_end, dt)?;
    let n0 = psi0.norm();
    let norm_drift = amplitudes
        .iter()
        .map(|a| (a.norm() - n0).abs())
        .fold(0.0, f64::max);
    Ok(Trajectory {
        basis: h.basis().clone(),
        times,
        amplitudes,
        norm_drift,
    })
}
