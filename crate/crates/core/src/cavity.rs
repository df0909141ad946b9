//! Two Λ-type SQUIDs `A`, `B` coupled through one cavity mode.
//!
//! Kets are labelled `{a}{b}{n}`: the level of SQUID A, the level of SQUID B
//! (each `0`, `1` or `e` for the cavity-coupled excited level), and the
//! photon number. Each SQUID is driven on `|0> <-> |e>` by its own pulse and
//! coupled on `|1> <-> |e>` to the cavity with strength `g`; both legs share
//! the detuning `Delta'`.
//!
//! From `|0,1,0>` the dynamics never leaves the five-state space
//! `{010, e10, 111, 1e0, 100}`, which holds one zero-energy dark state. The
//! state `|1,1,0>` is decoupled altogether.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::quantum::{
    eigendecompose_raw, max_abs, propagate, Basis, HamiltonianModel, StateVector, Trajectory,
};

/// Basis of the closed five-state space, in matrix order.
pub const CLOSED5_LABELS: [&str; 5] = ["010", "e10", "111", "1e0", "100"];
/// The decoupled stationary state.
pub const PSI_II_LABEL: &str = "110";
/// Post-selection on cavity vacuum keeps these kets, as qubit pairs `00, 01, 10, 11`.
pub const VACUUM_LABELS: [&str; 4] = ["000", "010", "100", "110"];

/// Minimum amplitude ratio expected between the leading and trailing pulse at
/// the window edges.
pub const ORDERING_RATIO: f64 = 10.0;
/// Relative tolerance on the late-time amplitude ratio of fractional STIRAP.
pub const LATE_RATIO_TOLERANCE: f64 = 0.01;

const LEVELS: [char; 3] = ['0', '1', 'e'];

pub fn closed5_basis() -> Basis {
    Basis::new(CLOSED5_LABELS).expect("static labels")
}

/// `closed5_basis` followed by `|1,1,0>`.
pub fn transfer_basis() -> Basis {
    Basis::new(CLOSED5_LABELS.iter().copied().chain([PSI_II_LABEL])).expect("static labels")
}

pub fn vacuum_basis() -> Basis {
    Basis::new(VACUUM_LABELS).expect("static labels")
}

/// Two-qubit kets `00, 01, 10, 11`, SQUID A first.
pub fn two_qubit_basis() -> Basis {
    Basis::new(["00", "01", "10", "11"]).expect("static labels")
}

/// All `{0,1,e}^2 x {0..=n_max}` kets; index `(3a + b)(n_max + 1) + n`.
pub fn full_basis(n_max: usize) -> Basis {
    let mut labels = Vec::with_capacity(9 * (n_max + 1));
    for a in LEVELS {
        for b in LEVELS {
            for n in 0..=n_max {
                labels.push(format!("{a}{b}{n}"));
            }
        }
    }
    Basis::new(labels).expect("generated labels are unique")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Space {
    /// Five-state space plus `|1,1,0>`.
    #[default]
    Closed5,
    /// Full product space with photon cutoff `n_max`.
    Full { n_max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySystemParams {
    pub g: f64,
    #[serde(default)]
    pub delta_prime: f64,
    pub pulse_a: Pulse,
    pub pulse_b: Pulse,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub space: Space,
}

impl CavitySystemParams {
    pub fn validate(&self) -> Result<()> {
        if !self.g.is_finite() {
            return Err(Error::invalid("g", "must be finite"));
        }
        if !self.delta_prime.is_finite() {
            return Err(Error::invalid("delta_prime", "must be finite"));
        }
        self.pulse_a.validate()?;
        self.pulse_b.validate()?;
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::invalid("t_end", "must exceed t_start"));
        }
        if let Space::Full { n_max } = self.space {
            if n_max < 1 {
                return Err(Error::invalid("n_max", "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn couplings(&self, t: f64) -> (C64, C64) {
        (self.pulse_a.evaluate(t), self.pulse_b.evaluate(t))
    }
}

/// The five-state Hamiltonian for fixed couplings.
pub fn closed5_matrix(omega_a: C64, omega_b: C64, g: f64, delta_prime: f64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(5, 5);
    fill_closed5(&mut m, omega_a, omega_b, g, delta_prime);
    m
}

fn fill_closed5(m: &mut DMatrix<C64>, omega_a: C64, omega_b: C64, g: f64, delta_prime: f64) {
    let hg = C64::from(0.5 * g);
    m[(0, 1)] = 0.5 * omega_a;
    m[(1, 0)] = 0.5 * omega_a.conj();
    m[(1, 1)] = C64::from(delta_prime);
    m[(1, 2)] = hg;
    m[(2, 1)] = hg;
    m[(2, 3)] = hg;
    m[(3, 2)] = hg;
    m[(3, 3)] = C64::from(delta_prime);
    m[(3, 4)] = 0.5 * omega_b.conj();
    m[(4, 3)] = 0.5 * omega_b;
}

pub fn build_hamiltonian_closed5(params: &CavitySystemParams, t: f64) -> DMatrix<C64> {
    let (a, b) = params.couplings(t);
    closed5_matrix(a, b, params.g, params.delta_prime)
}

#[derive(Clone, Copy, Debug)]
enum Coupling {
    OmegaA,
    OmegaB,
    Cavity(f64),
}

/// Sparsity pattern of the full-space Hamiltonian: `(row, col, kind)` for
/// the upper element of each Hermitian pair, plus the diagonal excitation counts.
#[derive(Clone, Debug)]
struct FullLayout {
    excited: Vec<f64>,
    links: Vec<(usize, usize, Coupling)>,
}

impl FullLayout {
    fn new(n_max: usize) -> Self {
        let idx = |a: usize, b: usize, n: usize| (3 * a + b) * (n_max + 1) + n;
        let mut excited = vec![0.0; 9 * (n_max + 1)];
        let mut links = Vec::new();
        for a in 0..3 {
            for b in 0..3 {
                for n in 0..=n_max {
                    let here = idx(a, b, n);
                    excited[here] = (a == 2) as u8 as f64 + (b == 2) as u8 as f64;
                    // each link is emitted once, from its |e>-side ket
                    if a == 2 {
                        links.push((idx(0, b, n), here, Coupling::OmegaA));
                        if n < n_max {
                            let s = ((n + 1) as f64).sqrt();
                            links.push((idx(1, b, n + 1), here, Coupling::Cavity(s)));
                        }
                    }
                    if b == 2 {
                        links.push((idx(a, 0, n), here, Coupling::OmegaB));
                        if n < n_max {
                            let s = ((n + 1) as f64).sqrt();
                            links.push((idx(a, 1, n + 1), here, Coupling::Cavity(s)));
                        }
                    }
                }
            }
        }
        FullLayout { excited, links }
    }

    fn fill(&self, m: &mut DMatrix<C64>, omega_a: C64, omega_b: C64, g: f64, delta_prime: f64) {
        m.fill(C64::from(0.0));
        for (i, &k) in self.excited.iter().enumerate() {
            m[(i, i)] = C64::from(k * delta_prime);
        }
        for &(lower, upper, kind) in &self.links {
            // <lower|H|upper> with |upper> holding the |e> of the link
            let v = match kind {
                Coupling::OmegaA => 0.5 * omega_a,
                Coupling::OmegaB => 0.5 * omega_b,
                Coupling::Cavity(s) => C64::from(0.5 * g * s),
            };
            m[(lower, upper)] = v;
            m[(upper, lower)] = v.conj();
        }
    }
}

pub fn build_hamiltonian_full(
    params: &CavitySystemParams,
    t: f64,
    n_max: usize,
) -> Result<DMatrix<C64>> {
    if n_max < 1 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let (a, b) = params.couplings(t);
    let layout = FullLayout::new(n_max);
    let d = 9 * (n_max + 1);
    let mut m = DMatrix::zeros(d, d);
    layout.fill(&mut m, a, b, params.g, params.delta_prime);
    Ok(m)
}

/// Time-dependent generator in the space selected by `params.space`.
#[derive(Clone, Debug)]
pub struct CavityHamiltonian {
    params: CavitySystemParams,
    basis: Basis,
    layout: Option<FullLayout>,
}

impl CavityHamiltonian {
    pub fn new(params: CavitySystemParams) -> Result<Self> {
        params.validate()?;
        let (basis, layout) = match params.space {
            Space::Closed5 => (transfer_basis(), None),
            Space::Full { n_max } => (full_basis(n_max), Some(FullLayout::new(n_max))),
        };
        Ok(CavityHamiltonian {
            params,
            basis,
            layout,
        })
    }

    pub fn params(&self) -> &CavitySystemParams {
        &self.params
    }
}

impl HamiltonianModel for CavityHamiltonian {
    fn basis(&self) -> &Basis {
        &self.basis
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.params.pulse_a.breakpoints();
        b.extend(self.params.pulse_b.breakpoints());
        b
    }

    fn fill(&self, t: f64, out: &mut DMatrix<C64>) {
        let (a, b) = self.params.couplings(t);
        let (g, dp) = (self.params.g, self.params.delta_prime);
        match &self.layout {
            Some(layout) => layout.fill(out, a, b, g, dp),
            None => {
                out.fill(C64::from(0.0));
                let mut block = DMatrix::zeros(5, 5);
                fill_closed5(&mut block, a, b, g, dp);
                out.view_mut((0, 0), (5, 5)).copy_from(&block);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DarkStatePair {
    /// Over `closed5_basis`.
    pub psi_i: StateVector,
    /// `|1,1,0>` over `transfer_basis`.
    pub psi_ii: StateVector,
}

fn dark_unnormalized(omega_a: C64, omega_b: C64, g: f64) -> DVector<C64> {
    let (a, b) = (omega_a.conj(), omega_b.conj());
    DVector::from_vec(vec![b * g, C64::from(0.0), -a * b, C64::from(0.0), a * g])
}

/// The zero-energy states `psi^I` (inside the five-state space) and `psi^II = |1,1,0>`.
pub fn dark_states(omega_a: C64, omega_b: C64, g: f64) -> Result<DarkStatePair> {
    let u = dark_unnormalized(omega_a, omega_b, g);
    let norm = u.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateDarkState);
    }
    let psi_i = StateVector::from_raw(closed5_basis(), u / C64::from(norm))?;
    let psi_ii = StateVector::basis_state(transfer_basis(), PSI_II_LABEL)?;
    Ok(DarkStatePair { psi_i, psi_ii })
}

/// Printed closed forms for the four non-zero modes, checked against
/// numerical diagonalization of the five-state Hamiltonian.
#[derive(Clone, Debug, Serialize)]
pub struct AnalyticEigenReport {
    /// Closed-form eigenvalues, ascending.
    pub analytic_values: Vec<f64>,
    /// All five numerical eigenvalues, ascending.
    pub numerical_values: Vec<f64>,
    /// Numerical eigenvalues with the dark mode removed, ascending.
    pub numerical_nonzero: Vec<f64>,
    /// Index (into `numerical_values`) of the mode identified with `psi^I`.
    pub dark_mode: usize,
    /// max_k ||H v_k - e_k v_k|| over the numerical pairs.
    pub numerical_residual: f64,
    /// `sum_k e_k - 2 Delta'` over all five numerical modes.
    pub trace_defect: f64,
    /// max |analytic - numerical| after sorting both.
    pub value_discrepancy: f64,
    /// ||H v - e v|| with `v` the normalized closed-form vector at the
    /// closed-form value, in `analytic_values` order.
    pub analytic_residuals: Vec<f64>,
    /// Same vector formula evaluated at the numerical non-zero eigenvalues.
    pub vector_residuals_at_numerical: Vec<f64>,
    /// Whether every closed-form pair has residual at most 1e-8.
    pub consistent: bool,
}

fn analytic_values(omega_a: C64, omega_b: C64, g: f64, delta: f64) -> Vec<f64> {
    let (a2, b2) = (omega_a.norm_sqr(), omega_b.norm_sqr());
    let tilde2 = 2.0 * g * g + a2 + b2;
    let inner = ((a2 - b2).powi(2) + 4.0 * g.powi(4)).sqrt();
    let mut out = Vec::with_capacity(4);
    for s_inner in [-1.0, 1.0] {
        let radicand = 4.0 * delta * delta + 2.0 * tilde2 + s_inner * 2.0 * inner;
        let root = radicand.max(0.0).sqrt();
        for s_outer in [-1.0, 1.0] {
            out.push(0.5 * delta + s_outer * 0.5 * root);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn analytic_vector(omega_a: C64, omega_b: C64, g: f64, delta: f64, e: f64) -> DVector<C64> {
    let a2 = omega_a.norm_sqr();
    let q = a2 + 4.0 * e * (delta - e);
    let r = g * g + q;
    DVector::from_vec(vec![
        omega_a * g * g,
        C64::from(2.0 * g * g * e),
        C64::from(-g * q),
        C64::from(-2.0 * e * r),
        -omega_b * r,
    ])
}

fn residual(h: &DMatrix<C64>, v: &DVector<C64>, e: f64) -> f64 {
    (h * v - v * C64::from(e)).norm()
}

fn normalized_residual(h: &DMatrix<C64>, v: DVector<C64>, e: f64) -> f64 {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        residual(h, &(v / C64::from(n)), e)
    } else {
        f64::NAN
    }
}

/// Index of the eigenvector with the largest overlap with `psi^I`, or of the
/// eigenvalue closest to zero when `psi^I` is undefined.
fn dark_mode_index(values: &[f64], vectors: &[DVector<C64>], dark: Option<&DVector<C64>>) -> usize {
    let score = |k: usize| match dark {
        Some(d) => vectors[k].dotc(d).norm(),
        None => -values[k].abs(),
    };
    (0..values.len())
        .max_by(|&i, &j| score(i).total_cmp(&score(j)).then(j.cmp(&i)))
        .expect("five modes")
}

pub fn analytic_eigensystem(
    omega_a: C64,
    omega_b: C64,
    g: f64,
    delta_prime: f64,
) -> Result<AnalyticEigenReport> {
    let h = closed5_matrix(omega_a, omega_b, g, delta_prime);
    let (values, vectors) = eigendecompose_raw(&h)?;
    let numerical_residual = values
        .iter()
        .zip(&vectors)
        .map(|(&e, v)| residual(&h, v, e))
        .fold(0.0, f64::max);
    let trace_defect = values.iter().sum::<f64>() - 2.0 * delta_prime;

    let dark = dark_states(omega_a, omega_b, g).ok();
    let dark_mode = dark_mode_index(
        &values,
        &vectors,
        dark.as_ref().map(|d| d.psi_i.amplitudes()),
    );
    let numerical_nonzero: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != dark_mode)
        .map(|(_, &e)| e)
        .collect();

    let analytic = analytic_values(omega_a, omega_b, g, delta_prime);
    let value_discrepancy = analytic
        .iter()
        .zip(&numerical_nonzero)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let analytic_residuals: Vec<f64> = analytic
        .iter()
        .map(|&e| normalized_residual(&h, analytic_vector(omega_a, omega_b, g, delta_prime, e), e))
        .collect();
    let vector_residuals_at_numerical = numerical_nonzero
        .iter()
        .map(|&e| normalized_residual(&h, analytic_vector(omega_a, omega_b, g, delta_prime, e), e))
        .collect();
    let consistent = analytic_residuals.iter().all(|r| *r <= 1e-8);
    if !consistent {
        log::debug!(
            "closed-form eigensystem inconsistent at Omega_A={omega_a}, Omega_B={omega_b}, g={g}, Delta'={delta_prime}: max value discrepancy {value_discrepancy:e}"
        );
    }
    Ok(AnalyticEigenReport {
        analytic_values: analytic,
        numerical_values: values,
        numerical_nonzero,
        dark_mode,
        numerical_residual,
        trace_defect,
        value_discrepancy,
        analytic_residuals,
        vector_residuals_at_numerical,
        consistent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adiabaticity {
    /// `max_k |<psi_k|d psi^I/dt>| / |e_k|`; infinite when some `e_k` vanishes.
    pub value: f64,
    /// Eigen-index (ascending order) attaining the maximum.
    pub mode: usize,
}

/// Local adiabaticity of the dark-state path at time `t`.
pub fn adiabaticity_metric(params: &CavitySystemParams, t: f64) -> Result<Adiabaticity> {
    let (a, b) = params.couplings(t);
    let (da, db) = (params.pulse_a.derivative(t)?, params.pulse_b.derivative(t)?);
    let g = params.g;
    let u = dark_unnormalized(a, b, g);
    let norm = u.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::DegenerateDarkState);
    }
    let du = DVector::from_vec(vec![
        db.conj() * g,
        C64::from(0.0),
        -(da.conj() * b.conj() + a.conj() * db.conj()),
        C64::from(0.0),
        da.conj() * g,
    ]);
    let n = 1.0 / norm;
    let dn = -n.powi(3) * u.dotc(&du).re;
    let psi = &u * C64::from(n);
    let dpsi = &u * C64::from(dn) + &du * C64::from(n);

    let h = closed5_matrix(a, b, g, params.delta_prime);
    let (values, vectors) = eigendecompose_raw(&h)?;
    let dark = dark_mode_index(&values, &vectors, Some(&psi));
    let floor = 1e-13 * max_abs(&h).max(1.0);
    let mut best: Option<Adiabaticity> = None;
    for k in (0..values.len()).filter(|&k| k != dark) {
        let value = if values[k].abs() <= floor {
            f64::INFINITY
        } else {
            vectors[k].dotc(&dpsi).norm() / values[k].abs()
        };
        if best.is_none_or(|b| value > b.value) {
            best = Some(Adiabaticity { value, mode: k });
        }
    }
    Ok(best.expect("four non-dark modes"))
}

#[derive(Clone, Debug)]
pub struct TransferResult {
    pub trajectory: Trajectory,
    /// Final populations of the five-state kets and `|1,1,0>`.
    pub final_populations: Vec<(String, f64)>,
    /// `|<psi^I(t)|psi(t)>|^2` on the trajectory grid; NaN where `psi^I` is undefined.
    pub dark_overlap: Vec<f64>,
    /// Adiabaticity metric on the trajectory grid; `None` for non-differentiable envelopes.
    pub adiabaticity: Option<Vec<f64>>,
    pub adiabaticity_max: Option<f64>,
    pub target: StateVector,
    /// `<target|psi(t_end)>`.
    pub overlap: C64,
    pub fidelity_target: f64,
    /// Concurrence of the vacuum post-selected final state, for fractional STIRAP.
    pub concurrence: Option<f64>,
    /// max over time of the population outside the five-state space and `|1,1,0>`.
    pub leakage_max: f64,
    pub warnings: Vec<String>,
}

impl TransferResult {
    pub fn final_population(&self, label: &str) -> Option<f64> {
        self.final_populations
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| *p)
    }
}

fn warn(warnings: &mut Vec<String>, msg: String) {
    log::warn!("{msg}");
    warnings.push(msg);
}

fn check_ordering(params: &CavitySystemParams, warnings: &mut Vec<String>) {
    let (a0, b0) = params.couplings(params.t_start);
    if b0.norm() < ORDERING_RATIO * a0.norm() {
        warn(
            warnings,
            format!(
                "pulse ordering: |Omega_B/Omega_A| = {:.3e} at t_start, expected >= {ORDERING_RATIO}",
                b0.norm() / a0.norm()
            ),
        );
    }
    let (a1, b1) = params.couplings(params.t_end);
    if a1.norm() < ORDERING_RATIO * b1.norm() {
        warn(
            warnings,
            format!(
                "pulse ordering: |Omega_A/Omega_B| = {:.3e} at t_end, expected >= {ORDERING_RATIO}",
                a1.norm() / b1.norm()
            ),
        );
    }
}

fn propagate_from(
    params: &CavitySystemParams,
    initial: &StateVector,
    target: StateVector,
    dt: f64,
    mut warnings: Vec<String>,
) -> Result<TransferResult> {
    let h = CavityHamiltonian::new(params.clone())?;
    let basis = h.basis().clone();
    let psi0 = initial.embed(&basis)?;
    let trajectory = propagate(&h, &psi0, params.t_start, params.t_end, dt)?;

    let closed: Vec<usize> = CLOSED5_LABELS
        .iter()
        .map(|l| basis.require(l))
        .collect::<Result<_>>()?;
    let psi_ii = basis.require(PSI_II_LABEL)?;
    let mut dark_overlap = Vec::with_capacity(trajectory.len());
    let mut leakage_max: f64 = 0.0;
    for (k, &t) in trajectory.times().iter().enumerate() {
        let amps = trajectory.amplitudes(k);
        let (oa, ob) = params.couplings(t);
        let u = dark_unnormalized(oa, ob, params.g);
        let n = u.norm();
        dark_overlap.push(if n > 0.0 {
            let d: C64 = closed
                .iter()
                .zip(u.iter())
                .map(|(&i, c)| c.conj() * amps[i])
                .sum();
            (d.norm_sqr() / (n * n)).min(1.0)
        } else {
            f64::NAN
        });
        let inside: f64 = closed
            .iter()
            .chain([&psi_ii])
            .map(|&i| amps[i].norm_sqr())
            .sum();
        leakage_max = leakage_max.max((amps.norm_squared() - inside).max(0.0));
    }

    let differentiable = params.pulse_a.derivative(params.t_start).is_ok()
        && params.pulse_b.derivative(params.t_start).is_ok();
    let adiabaticity = if differentiable {
        let series = trajectory
            .times()
            .iter()
            .map(|&t| match adiabaticity_metric(params, t) {
                Ok(a) => Ok(a.value),
                Err(Error::DegenerateDarkState) => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<f64>>>()?;
        Some(series)
    } else {
        None
    };
    let adiabaticity_max = adiabaticity.as_ref().map(|s| {
        s.iter()
            .copied()
            .filter(|v| !v.is_nan())
            .fold(0.0, f64::max)
    });

    let psi_f = trajectory.final_state();
    let final_populations = CLOSED5_LABELS
        .iter()
        .chain([&PSI_II_LABEL])
        .map(|l| (l.to_string(), psi_f.population(l).unwrap_or(0.0)))
        .collect();
    let target = target.embed(&basis)?;
    let overlap = target.inner(&psi_f)?;
    if trajectory.norm_drift() > 1e-9 {
        warn(
            &mut warnings,
            format!(
                "norm drift {:.3e} exceeds 1e-9; reduce dt",
                trajectory.norm_drift()
            ),
        );
    }
    Ok(TransferResult {
        fidelity_target: overlap.norm_sqr().min(1.0),
        overlap,
        final_populations,
        dark_overlap,
        adiabaticity,
        adiabaticity_max,
        target,
        concurrence: None,
        leakage_max,
        warnings,
        trajectory,
    })
}

/// STIRAP transfer of the B-qubit state `c0|0> + c1|1>` (with A in `|0>`)
/// onto SQUID A, which ends up holding it while B ends in `|1>`.
pub fn run_transfer(
    params: &CavitySystemParams,
    c0: C64,
    c1: C64,
    dt: f64,
) -> Result<TransferResult> {
    params.validate()?;
    let norm = c0.norm_sqr() + c1.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized {
            norm: norm.sqrt(),
            tolerance: 1e-12,
        });
    }
    let mut warnings = Vec::new();
    check_ordering(params, &mut warnings);
    let b = transfer_basis();
    let mut init = DVector::zeros(6);
    init[0] = c0;
    init[5] = c1;
    let initial = StateVector::from_raw(b.clone(), init)?;
    let mut tgt = DVector::zeros(6);
    tgt[4] = c0;
    tgt[5] = c1;
    let target = StateVector::from_raw(b, tgt)?;
    propagate_from(params, &initial, target, dt, warnings)
}

/// Field onset: the larger envelope first reaches this fraction of its peak.
pub const ONSET_FRACTION: f64 = 0.01;
/// Transfer counts as complete once the target ket holds this population.
pub const COMPLETION_POPULATION: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferTiming {
    pub t_onset: Option<f64>,
    pub t_complete: Option<f64>,
    /// `t_complete - t_onset`.
    pub duration: Option<f64>,
}

/// Time from field onset until `label` first reaches `COMPLETION_POPULATION`.
pub fn transfer_timing(
    params: &CavitySystemParams,
    trajectory: &Trajectory,
    label: &str,
) -> Result<TransferTiming> {
    let (t0, t1) = (params.t_start, params.t_end);
    let peak = params
        .pulse_a
        .peak_magnitude(t0, t1)
        .max(params.pulse_b.peak_magnitude(t0, t1));
    let t_onset = trajectory.times().iter().copied().find(|&t| {
        let (a, b) = params.couplings(t);
        peak > 0.0 && a.norm().max(b.norm()) >= ONSET_FRACTION * peak
    });
    let series = trajectory.population_series(label)?;
    let t_complete = trajectory
        .times()
        .iter()
        .zip(&series)
        .find(|(_, p)| **p >= COMPLETION_POPULATION)
        .map(|(t, _)| *t);
    let duration = t_onset.zip(t_complete).map(|(a, b)| b - a);
    Ok(TransferTiming {
        t_onset,
        t_complete,
        duration,
    })
}

/// `(cos(theta)|1,0> + e^{-i xi} sin(theta)|0,1>)|0>_c` over `vacuum_basis`.
pub fn entangled_target(theta: f64, xi: f64) -> StateVector {
    let mut v = DVector::zeros(4);
    v[1] = C64::from_polar(theta.sin(), -xi);
    v[2] = C64::from(theta.cos());
    StateVector::from_raw(vacuum_basis(), v).expect("four amplitudes")
}

/// `(cos(theta)|0,0> + e^{-i xi} sin(theta)|1,1>)|0>_c` over `vacuum_basis`:
/// the entangled target after inverting SQUID A.
pub fn flipped_entangled_target(theta: f64, xi: f64) -> StateVector {
    let mut v = DVector::zeros(4);
    v[0] = C64::from(theta.cos());
    v[3] = C64::from_polar(theta.sin(), -xi);
    StateVector::from_raw(vacuum_basis(), v).expect("four amplitudes")
}

/// Applies a qubit operator on `{|0>, |1>}` of SQUID A. Kets with A in `|e>`
/// are left alone.
pub fn apply_qubit_a(u: &Matrix2<C64>, state: &StateVector) -> Result<StateVector> {
    let basis = state.basis();
    let amps = state.amplitudes();
    let mut out = amps.clone();
    for (i, label) in basis.labels().iter().enumerate() {
        let (first, rest) = label.split_at(1);
        if first != "0" {
            continue;
        }
        let partner = format!("1{rest}");
        match basis.index_of(&partner) {
            Some(j) => {
                out[i] = u[(0, 0)] * amps[i] + u[(0, 1)] * amps[j];
                out[j] = u[(1, 0)] * amps[i] + u[(1, 1)] * amps[j];
            }
            None if amps[i].norm() == 0.0 => {}
            None => return Err(Error::UnknownLabel(partner)),
        }
    }
    for (j, label) in basis.labels().iter().enumerate() {
        let (first, rest) = label.split_at(1);
        if first == "1" && basis.index_of(&format!("0{rest}")).is_none() && amps[j].norm() != 0.0 {
            return Err(Error::UnknownLabel(format!("0{rest}")));
        }
    }
    StateVector::from_raw(basis.clone(), out)
}

/// Cavity-vacuum component as a normalized two-qubit state, with its probability.
pub fn post_select_vacuum(state: &StateVector) -> Result<(StateVector, f64)> {
    let amps: Vec<C64> = VACUUM_LABELS
        .iter()
        .map(|l| state.amplitude(l).unwrap_or(C64::from(0.0)))
        .collect();
    let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if !(p > 0.0) {
        return Err(Error::ZeroPostSelection);
    }
    let s = C64::from(1.0 / p.sqrt());
    let v = DVector::from_iterator(4, amps.into_iter().map(|a| a * s));
    Ok((StateVector::from_raw(two_qubit_basis(), v)?, p))
}

/// Pure-state concurrence `2|c00 c11 - c01 c10| / ||psi||^2` over `two_qubit_basis`.
pub fn concurrence(state: &StateVector) -> Result<f64> {
    if state.basis() != &two_qubit_basis() {
        return Err(Error::LabelMismatch);
    }
    let c = state.amplitudes();
    let n2 = c.norm_squared();
    if !(n2 > 0.0) {
        return Err(Error::ZeroPostSelection);
    }
    Ok((2.0 * (c[0] * c[3] - c[1] * c[2]).norm() / n2).min(1.0))
}

/// Envelopes for fractional STIRAP towards `entangled_target(theta, xi)`:
/// `Omega_A = Omega cos(theta) G_A` and
/// `Omega_B = Omega (G_B + sin(theta) e^{i xi} G_A)`, with Gaussians
/// `G_j = exp(-(t - tau_j)^2 / tau_p^2)`.
pub fn fractional_stirap_pulses(
    omega: f64,
    tau_a: f64,
    tau_b: f64,
    tau_p: f64,
    theta: f64,
    xi: f64,
) -> Result<(Pulse, Pulse)> {
    let ga = Pulse::gaussian(C64::from(1.0), tau_a, tau_p)?;
    let gb = Pulse::gaussian(C64::from(1.0), tau_b, tau_p)?;
    let a = Pulse::scaled_sum(vec![(C64::from(omega * theta.cos()), ga.clone())])?;
    let b = Pulse::scaled_sum(vec![
        (C64::from(omega), gb),
        (C64::from_polar(omega * theta.sin(), xi), ga),
    ])?;
    Ok((a, b))
}

/// Fractional STIRAP from `|0,1,0>` towards `entangled_target(theta, xi)`.
pub fn run_fractional_stirap(
    params: &CavitySystemParams,
    theta: f64,
    xi: f64,
    dt: f64,
) -> Result<TransferResult> {
    params.validate()?;
    let mut warnings = Vec::new();
    let (a0, b0) = params.couplings(params.t_start);
    if b0.norm() < ORDERING_RATIO * a0.norm() {
        warn(
            &mut warnings,
            format!(
                "pulse ordering: |Omega_B/Omega_A| = {:.3e} at t_start, expected >= {ORDERING_RATIO}",
                b0.norm() / a0.norm()
            ),
        );
    }
    let (a1, b1) = params.couplings(params.t_end);
    let mismatch = (a1 * C64::from_polar(theta.sin(), xi) - b1 * theta.cos()).norm();
    let scale = a1.norm().max(b1.norm());
    if mismatch > LATE_RATIO_TOLERANCE * scale {
        warn(
            &mut warnings,
            format!(
                "late-time amplitudes do not follow cos(theta) : sin(theta) e^(i xi) (relative mismatch {:.3e})",
                mismatch / scale
            ),
        );
    }
    let initial = StateVector::basis_state(transfer_basis(), "010")?;
    let target = entangled_target(theta, xi);
    let target6 = {
        let b = transfer_basis();
        let mut v = DVector::zeros(6);
        v[0] = target.amplitude("010").unwrap();
        v[4] = target.amplitude("100").unwrap();
        StateVector::from_raw(b, v)?
    };
    let mut result = propagate_from(params, &initial, target6, dt, warnings)?;
    let (two, _) = post_select_vacuum(&result.trajectory.final_state())?;
    result.concurrence = Some(concurrence(&two)?);
    Ok(result)
}
