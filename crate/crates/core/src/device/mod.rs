//! Stationary states of the rf-SQUID flux Hamiltonian
//! `H = Q^2 / 2C + (Phi - Phi_x)^2 / 2L - E_J cos(2 pi Phi / Phi_0)`.
//!
//! Flux is handled in units of the flux quantum (`phi = Phi / Phi_0`) and all
//! energies are returned as angular frequencies in rad/ns.

mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use tridiag::SymTridiagonal;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

const PER_NS: f64 = 1e-9;
/// Largest relative wavefunction amplitude tolerated next to the grid edge.
const LEAKAGE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxGrid {
    pub phi_min: f64,
    pub phi_max: f64,
    pub n_points: usize,
}

impl FluxGrid {
    /// `[phi_x - 0.75, phi_x + 0.75]` with 2001 points.
    pub fn around(phi_x: f64) -> Self {
        FluxGrid {
            phi_min: phi_x - 0.75,
            phi_max: phi_x + 0.75,
            n_points: 2001,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.phi_max - self.phi_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.phi_min + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquidParams {
    /// Ring inductance in pH.
    pub inductance_ph: f64,
    /// Junction capacitance in fF.
    pub capacitance_ff: f64,
    /// Junction critical current in µA.
    pub critical_current_ua: f64,
    /// External flux in units of the flux quantum.
    pub phi_x: f64,
    pub grid: FluxGrid,
}

impl SquidParams {
    /// L = 100 pH, C = 40 fF, I_c = 3.95 µA, phi_x = -0.501.
    pub fn reference() -> Self {
        Self::with_default_grid(100.0, 40.0, 3.95, -0.501)
    }

    pub fn with_default_grid(l_ph: f64, c_ff: f64, ic_ua: f64, phi_x: f64) -> Self {
        SquidParams {
            inductance_ph: l_ph,
            capacitance_ff: c_ff,
            critical_current_ua: ic_ua,
            phi_x,
            grid: FluxGrid::around(phi_x),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inductance_ph > 0.0) {
            return Err(Error::invalid("inductance_ph", "must be positive"));
        }
        if !(self.capacitance_ff > 0.0) {
            return Err(Error::invalid("capacitance_ff", "must be positive"));
        }
        // zero critical current is the pure LC limit and is allowed
        if !(self.critical_current_ua >= 0.0) {
            return Err(Error::invalid(
                "critical_current_ua",
                "must be non-negative",
            ));
        }
        if !self.phi_x.is_finite() {
            return Err(Error::invalid("phi_x", "must be finite"));
        }
        if self.grid.n_points < 3 {
            return Err(Error::invalid("grid.n_points", "need at least 3 points"));
        }
        if !(self.grid.phi_max > self.grid.phi_min) {
            return Err(Error::invalid("grid.phi_max", "must exceed grid.phi_min"));
        }
        Ok(())
    }

    fn inductance(&self) -> f64 {
        self.inductance_ph * 1e-12
    }

    fn capacitance(&self) -> f64 {
        self.capacitance_ff * 1e-15
    }

    fn critical_current(&self) -> f64 {
        self.critical_current_ua * 1e-6
    }

    /// `Phi_0^2 / 2L` in rad/ns.
    pub fn inductive_scale(&self) -> f64 {
        FLUX_QUANTUM * FLUX_QUANTUM / (2.0 * self.inductance()) / HBAR * PER_NS
    }

    /// `E_J = I_c Phi_0 / 2 pi` in rad/ns.
    pub fn josephson_energy(&self) -> f64 {
        self.critical_current() * FLUX_QUANTUM / (2.0 * std::f64::consts::PI) / HBAR * PER_NS
    }

    /// Coefficient of `-d^2/dphi^2`: `hbar / (2 C Phi_0^2)` in rad/ns.
    pub fn kinetic_scale(&self) -> f64 {
        HBAR / (2.0 * self.capacitance() * FLUX_QUANTUM * FLUX_QUANTUM) * PER_NS
    }

    /// `1 / sqrt(LC)` in rad/ns.
    pub fn plasma_frequency(&self) -> f64 {
        1.0 / (self.inductance() * self.capacitance()).sqrt() * PER_NS
    }

    /// `beta_L = 2 pi L I_c / Phi_0`; a double well needs `beta_L > 1`.
    pub fn screening_parameter(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.inductance() * self.critical_current() / FLUX_QUANTUM
    }
}

/// `U(phi)` in rad/ns.
pub fn potential(params: &SquidParams, phi: f64) -> f64 {
    let x = phi - params.phi_x;
    params.inductive_scale() * x * x
        - params.josephson_energy() * (2.0 * std::f64::consts::PI * phi).cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Minimum,
    Maximum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub flux: f64,
    pub energy: f64,
}

/// Interior local extrema of `U` sampled on `n` equally spaced points of
/// `[lo, hi]`, ordered by flux.
pub fn potential_extrema(params: &SquidParams, lo: f64, hi: f64, n: usize) -> Vec<Extremum> {
    let phis: Vec<f64> = (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect();
    let u: Vec<f64> = phis.iter().map(|&p| potential(params, p)).collect();
    extrema_of(&phis, &u)
}

fn extrema_of(phis: &[f64], u: &[f64]) -> Vec<Extremum> {
    let mut out = Vec::new();
    for k in 1..u.len().saturating_sub(1) {
        let kind = if u[k] < u[k - 1] && u[k] <= u[k + 1] {
            ExtremumKind::Minimum
        } else if u[k] > u[k - 1] && u[k] >= u[k + 1] {
            ExtremumKind::Maximum
        } else {
            continue;
        };
        out.push(Extremum {
            kind,
            flux: phis[k],
            energy: u[k],
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Well {
    Left,
    Right,
    AboveBarrier,
    /// The potential has no barrier in the computed window.
    Single,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub flux: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviceSpectrum {
    pub grid: FluxGrid,
    pub potential: Vec<f64>,
    /// Ascending, rad/ns.
    pub energies: Vec<f64>,
    /// Grid functions (including the zero boundary values), orthonormal under
    /// the trapezoidal rule.
    pub wavefunctions: Vec<Vec<f64>>,
    pub mean_flux: Vec<f64>,
    pub well_assignments: Vec<Well>,
    pub minima: Vec<Extremum>,
    pub barrier: Option<Barrier>,
}

impl DeviceSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Trapezoidal `int f psi_i psi_j dphi`.
    fn integrate_pair(&self, i: usize, j: usize, weight: impl Fn(f64) -> f64) -> f64 {
        let h = self.grid.spacing();
        let a = &self.wavefunctions[i];
        let b = &self.wavefunctions[j];
        let n = a.len();
        let mut s = 0.0;
        for k in 0..n {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            s += w * a[k] * b[k] * weight(self.grid.point(k));
        }
        s * h
    }

    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.integrate_pair(i, j, |_| 1.0)
    }
}

/// Lowest `n_levels` eigenpairs of the three-point finite-difference flux
/// Hamiltonian with Dirichlet boundaries.
pub fn stationary_states(params: &SquidParams, n_levels: usize) -> Result<DeviceSpectrum> {
    params.validate()?;
    let grid = params.grid;
    let interior = grid.n_points - 2;
    if n_levels == 0 || n_levels > interior {
        return Err(Error::invalid(
            "n_levels",
            format!("must be between 1 and {interior}"),
        ));
    }
    let h = grid.spacing();
    let phis = grid.points();
    let u: Vec<f64> = phis.iter().map(|&p| potential(params, p)).collect();
    let kin = params.kinetic_scale() / (h * h);
    let op = SymTridiagonal {
        diag: u[1..grid.n_points - 1]
            .iter()
            .map(|v| v + 2.0 * kin)
            .collect(),
        off: vec![-kin; interior - 1],
    };

    let mut energies = Vec::with_capacity(n_levels);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    for k in 0..n_levels {
        let e = op.eigenvalue(k);
        let v = op.eigenvector(e, &vectors)?;
        energies.push(e);
        vectors.push(v);
    }
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NotConverged(
            "eigenvalues not strictly increasing".into(),
        ));
    }

    let scale = 1.0 / h.sqrt();
    let mut wavefunctions = Vec::with_capacity(n_levels);
    for (level, v) in vectors.iter().enumerate() {
        let peak = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        let edge = v[0].abs().max(v[interior - 1].abs());
        if edge > LEAKAGE_TOLERANCE * peak {
            return Err(Error::BoundaryLeakage {
                level,
                amplitude: edge / peak,
            });
        }
        let pivot = v.iter().position(|x| x.abs() == peak).unwrap_or(0);
        let sign = if v[pivot] < 0.0 { -scale } else { scale };
        let mut psi = Vec::with_capacity(grid.n_points);
        psi.push(0.0);
        psi.extend(v.iter().map(|x| x * sign));
        psi.push(0.0);
        wavefunctions.push(psi);
    }

    let extrema = extrema_of(&phis, &u);
    let minima: Vec<Extremum> = extrema
        .iter()
        .copied()
        .filter(|e| e.kind == ExtremumKind::Minimum)
        .collect();
    let barrier = find_barrier(&minima, &extrema);

    let mean_flux: Vec<f64> = wavefunctions
        .iter()
        .map(|psi| {
            let n = psi.len();
            (0..n)
                .map(|k| {
                    let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                    w * psi[k] * psi[k] * phis[k]
                })
                .sum::<f64>()
                * h
        })
        .collect();
    let well_assignments = energies
        .iter()
        .zip(&mean_flux)
        .map(|(&e, &m)| match barrier {
            None => Well::Single,
            Some(b) if e > b.energy => Well::AboveBarrier,
            Some(b) if m < b.flux => Well::Left,
            Some(_) => Well::Right,
        })
        .collect();

    Ok(DeviceSpectrum {
        grid,
        potential: u,
        energies,
        wavefunctions,
        mean_flux,
        well_assignments,
        minima,
        barrier,
    })
}

/// Highest potential point between the two deepest minima.
fn find_barrier(minima: &[Extremum], extrema: &[Extremum]) -> Option<Barrier> {
    if minima.len() < 2 {
        return None;
    }
    let mut deepest = minima.to_vec();
    deepest.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let (lo, hi) = {
        let (a, b) = (deepest[0].flux, deepest[1].flux);
        (a.min(b), a.max(b))
    };
    extrema
        .iter()
        .filter(|e| e.kind == ExtremumKind::Maximum && e.flux > lo && e.flux < hi)
        .max_by(|a, b| a.energy.total_cmp(&b.energy))
        .map(|e| Barrier {
            flux: e.flux,
            energy: e.energy,
        })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelClassification {
    pub idx0: usize,
    pub idx1: usize,
    pub idx_e: usize,
    pub warnings: Vec<String>,
}

/// Picks `|0>`, `|1>` (lowest states of the two wells) and `|e>` (lowest
/// state above the barrier).
pub fn classify_levels(spec: &DeviceSpectrum) -> Result<LevelClassification> {
    if spec.len() < 3 {
        return Err(Error::invalid("spectrum", "need at least three levels"));
    }
    let barrier = spec.barrier.ok_or(Error::NoDoubleWell)?;
    let idx_e = spec
        .energies
        .iter()
        .position(|&e| e > barrier.energy)
        .ok_or(Error::NoLevelAboveBarrier)?;
    let mut warnings = Vec::new();

    // A state whose mean flux sits near the barrier is delocalized over both
    // wells, as happens for symmetric bias.
    let well_span = spec
        .minima
        .iter()
        .map(|m| (m.flux - barrier.flux).abs())
        .fold(f64::INFINITY, f64::min);
    let delocalized = |i: usize| (spec.mean_flux[i] - barrier.flux).abs() < 0.25 * well_span;

    if idx_e < 2 || delocalized(0) || delocalized(1) {
        warnings.push(format!(
            "degenerate wells: lowest states have mean flux {:.6} and {:.6} near the barrier at {:.6}",
            spec.mean_flux[0], spec.mean_flux[1], barrier.flux
        ));
        return Ok(LevelClassification {
            idx0: 0,
            idx1: 1,
            idx_e: idx_e.max(2),
            warnings,
        });
    }
    let first = spec.well_assignments[0];
    let idx1 = (1..idx_e)
        .find(|&i| spec.well_assignments[i] != first)
        .ok_or_else(|| {
            Error::invalid(
                "spectrum",
                "no bound state in the second well below the barrier",
            )
        })?;
    Ok(LevelClassification {
        idx0: 0,
        idx1,
        idx_e,
        warnings,
    })
}

/// `<i| phi |j>` in units of the flux quantum.
pub fn flux_matrix_element(spec: &DeviceSpectrum, i: usize, j: usize) -> Result<f64> {
    if i >= spec.len() || j >= spec.len() {
        return Err(Error::invalid(
            "level",
            format!("levels {i}, {j} out of range (have {})", spec.len()),
        ));
    }
    Ok(spec.integrate_pair(i, j, |phi| phi))
}
