//! Arbitrary rotation of a Λ-type qubit through its coupled/uncoupled states.
//!
//! Two pulses with a common envelope `Omega(t)` drive `|0> <-> |e>` and
//! `|1> <-> |e>` with amplitudes `Omega cos(phi)` and `Omega e^{i eta} sin(phi)`.
//! Only the coupled state `|C>` sees the field; if the pulse returns it to
//! the lower manifold with phase `-delta`, the qubit undergoes
//! `e^{-i delta/2} R_n(delta)` with `n = (sin 2phi cos eta, sin 2phi sin eta, cos 2phi)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::quantum::{propagate, Basis, HamiltonianModel, StateVector, Trajectory};

/// Largest `max|Omega| / (2|Delta|)` for which adiabatic elimination of `|e>`
/// is considered reliable.
pub const RAMAN_VALIDITY_THRESHOLD: f64 = 0.2;

pub fn qubit_basis() -> Basis {
    Basis::new(["0", "1"]).expect("static labels")
}

pub fn lambda_basis() -> Basis {
    Basis::new(["0", "1", "e"]).expect("static labels")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingAngles {
    pub phi: f64,
    pub eta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationSpec {
    axis: [f64; 3],
    delta: f64,
}

impl RotationSpec {
    pub fn new(axis: [f64; 3], delta: f64) -> Result<Self> {
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "axis",
                format!("must be a unit vector, norm is {norm}"),
            ));
        }
        Ok(RotationSpec { axis, delta })
    }

    /// Axis fixed by the mixing angles.
    pub fn from_mixing(a: MixingAngles, delta: f64) -> Self {
        let (s2, c2) = (2.0 * a.phi).sin_cos();
        RotationSpec {
            axis: [s2 * a.eta.cos(), s2 * a.eta.sin(), c2],
            delta,
        }
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// `(alpha, beta)` of the two-level transfer matrix in the `{|C>, |e>}` block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub alpha: C64,
    pub beta: C64,
}

impl TransferMatrix {
    pub fn unitarity_defect(&self) -> f64 {
        (self.alpha.norm_sqr() + self.beta.norm_sqr() - 1.0).abs()
    }
}

/// Rectangular-pulse parameters with `sqrt(Omega^2 + Delta^2) T = 2 pi m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiDesign {
    pub omega: f64,
    pub detuning: f64,
    pub duration: f64,
    pub m: u32,
}

impl RabiDesign {
    pub fn generalized_rabi(&self) -> f64 {
        self.omega.hypot(self.detuning)
    }

    /// `delta = (Delta / Omega_tilde + 1) m pi`, unwrapped.
    pub fn rotation_angle(&self) -> f64 {
        (self.detuning / self.generalized_rabi() + 1.0) * self.m as f64 * PI
    }

    /// Constant amplitude on `[0, T]`.
    pub fn pulse(&self) -> Pulse {
        Pulse::Rectangular {
            amplitude: C64::new(self.omega, 0.0),
            center: 0.5 * self.duration,
            duration: self.duration,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Couplings carry explicit `e^{-i Delta t}` phases.
    Interaction,
    /// Static couplings with `Delta` on `|e><e|`.
    #[default]
    Rotating,
}

/// `|C> = cos(phi)|0> + e^{i eta} sin(phi)|1>` and
/// `|NC> = -sin(phi)|0> + e^{i eta} cos(phi)|1>`.
pub fn coupled_uncoupled_basis(a: MixingAngles) -> (StateVector, StateVector) {
    let e = C64::from_polar(1.0, a.eta);
    let (s, c) = a.phi.sin_cos();
    let b = qubit_basis();
    let coupled = StateVector::from_raw(b.clone(), DVector::from_vec(vec![C64::from(c), e * s]))
        .expect("two amplitudes");
    let uncoupled = StateVector::from_raw(b, DVector::from_vec(vec![C64::from(-s), e * c]))
        .expect("two amplitudes");
    (coupled, uncoupled)
}

/// The driven three-level system over `{|0>, |1>, |e>}` at two-photon resonance.
#[derive(Clone, Debug)]
pub struct LambdaHamiltonian {
    basis: Basis,
    angles: MixingAngles,
    pulse: Pulse,
    detuning: f64,
    frame: Frame,
}

pub fn build_lambda_hamiltonian(
    a: MixingAngles,
    pulse: Pulse,
    detuning: f64,
    frame: Frame,
) -> LambdaHamiltonian {
    LambdaHamiltonian {
        basis: lambda_basis(),
        angles: a,
        pulse,
        detuning,
        frame,
    }
}

impl LambdaHamiltonian {
    pub fn pulse(&self) -> &Pulse {
        &self.pulse
    }
}

impl HamiltonianModel for LambdaHamiltonian {
    fn basis(&self) -> &Basis {
        &self.basis
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.pulse.breakpoints()
    }

    fn fill(&self, t: f64, out: &mut DMatrix<C64>) {
        out.fill(C64::from(0.0));
        let omega = self.pulse.evaluate(t);
        let (s, c) = self.angles.phi.sin_cos();
        let mut w0 = 0.5 * omega * c;
        let mut w1 = 0.5 * omega * C64::from_polar(s, self.angles.eta);
        match self.frame {
            Frame::Rotating => out[(2, 2)] = C64::from(self.detuning),
            Frame::Interaction => {
                let phase = C64::from_polar(1.0, -self.detuning * t);
                w0 *= phase;
                w1 *= phase;
            }
        }
        out[(0, 2)] = w0;
        out[(2, 0)] = w0.conj();
        out[(1, 2)] = w1;
        out[(2, 1)] = w1.conj();
    }
}

/// Closed-form Rabi-model transfer matrix for constant `Omega`, `Delta` over `T`.
pub fn rabi_transfer_matrix(omega: f64, detuning: f64, duration: f64) -> TransferMatrix {
    let rabi = omega.hypot(detuning);
    if rabi == 0.0 {
        return TransferMatrix {
            alpha: C64::from(1.0),
            beta: C64::from(0.0),
        };
    }
    let (s, c) = (0.5 * rabi * duration).sin_cos();
    let phase = C64::from_polar(1.0, -0.5 * detuning * duration);
    TransferMatrix {
        alpha: C64::new(c, detuning / rabi * s) * phase,
        beta: C64::new(0.0, -omega / rabi * s) * phase,
    }
}

/// Detuning and duration that give a rotation by `delta` using `m` full
/// generalized Rabi cycles at peak coupling `omega`.
pub fn rabi_design(m: u32, delta: f64, omega: f64) -> Result<RabiDesign> {
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if !(omega != 0.0 && omega.is_finite()) {
        return Err(Error::invalid("omega", "must be non-zero and finite"));
    }
    let r = delta / (m as f64 * PI) - 1.0;
    if !(r.abs() < 1.0) {
        return Err(Error::InfeasibleRotation {
            delta,
            m,
            upper: 2.0 * m as f64 * PI,
        });
    }
    let rabi = omega.abs() / (1.0 - r * r).sqrt();
    Ok(RabiDesign {
        omega,
        detuning: r * rabi,
        duration: TAU * m as f64 / rabi,
        m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RamanPhase {
    pub delta: f64,
    /// `max|Omega| / (2|Delta|)` over the window.
    pub validity_ratio: f64,
    pub warning: Option<String>,
}

/// Rotation angle after adiabatic elimination of `|e>`:
/// `delta = -(1 / 4 Delta) int |Omega|^2 dt`.
pub fn raman_phase(pulse: &Pulse, detuning: f64, t_i: f64, t_f: f64) -> Result<RamanPhase> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(Error::invalid(
            "detuning",
            "must be non-zero for adiabatic elimination",
        ));
    }
    let delta = -pulse.abs_square_integral(t_i, t_f) / (4.0 * detuning);
    let validity_ratio = pulse.peak_magnitude(t_i, t_f) / (2.0 * detuning.abs());
    let warning = (validity_ratio > RAMAN_VALIDITY_THRESHOLD).then(|| {
        format!(
            "adiabatic elimination questionable: max|Omega|/(2|Delta|) = {validity_ratio:.3} > {RAMAN_VALIDITY_THRESHOLD}"
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(RamanPhase {
        delta,
        validity_ratio,
        warning,
    })
}

/// `e^{-i delta/2} R_n(delta)` over `{|0>, |1>}`, with
/// `R_n(delta) = cos(delta/2) I - i sin(delta/2) n.sigma`.
pub fn rotation_operator(spec: &RotationSpec) -> Matrix2<C64> {
    let [nx, ny, nz] = spec.axis;
    let (s, c) = (0.5 * spec.delta).sin_cos();
    let i = C64::new(0.0, 1.0);
    let n_sigma = Matrix2::new(
        C64::from(nz),
        C64::new(nx, -ny),
        C64::new(nx, ny),
        C64::from(-nz),
    );
    let r = Matrix2::identity() * C64::from(c) - n_sigma * (i * s);
    r * C64::from_polar(1.0, -0.5 * spec.delta)
}

/// Maps an angle to `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamanConfig {
    pub pulse: Pulse,
    pub detuning: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RotationDesign {
    Rabi(RabiDesign),
    Raman(RamanConfig),
}

impl RotationDesign {
    fn window(&self) -> (f64, f64) {
        match self {
            RotationDesign::Rabi(d) => (0.0, d.duration),
            RotationDesign::Raman(r) => (r.t_start, r.t_end),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RotationOutcome {
    pub psi_f: StateVector,
    pub trajectory: Trajectory,
    /// `e^{-i delta/2} R_n(delta) psi_i`.
    pub target: StateVector,
    /// `<target | P psi_f>` with `P` the projector on `{|0>, |1>}`.
    pub overlap: C64,
    pub fidelity: f64,
    pub excited_population: f64,
    /// Rotation angle the design is meant to realize, unwrapped.
    pub delta: f64,
    pub warnings: Vec<String>,
}

/// Propagates the full three-level system for the given design and compares
/// the outcome with the analytic rotation.
pub fn simulate_rotation(
    a: MixingAngles,
    design: &RotationDesign,
    psi_i: &StateVector,
    frame: Frame,
    dt: f64,
) -> Result<RotationOutcome> {
    let qubit = qubit_basis();
    if psi_i.basis() != &qubit {
        return Err(Error::LabelMismatch);
    }
    let mut warnings = Vec::new();
    let (pulse, detuning, delta) = match design {
        RotationDesign::Rabi(d) => (d.pulse(), d.detuning, d.rotation_angle()),
        RotationDesign::Raman(r) => {
            r.pulse.validate()?;
            let phase = raman_phase(&r.pulse, r.detuning, r.t_start, r.t_end)?;
            warnings.extend(phase.warning);
            (r.pulse.clone(), r.detuning, phase.delta)
        }
    };
    let (t0, t1) = design.window();
    let h = build_lambda_hamiltonian(a, pulse, detuning, frame);
    let psi0 = psi_i.embed(h.basis())?;
    let trajectory = propagate(&h, &psi0, t0, t1, dt)?;
    let psi_f = trajectory.final_state();

    let u = rotation_operator(&RotationSpec::from_mixing(a, delta));
    let amps = psi_i.amplitudes();
    let rotated = u * nalgebra::Vector2::new(amps[0], amps[1]);
    let target = StateVector::from_raw(
        qubit.clone(),
        DVector::from_vec(vec![rotated[0], rotated[1]]),
    )?;
    let lower = psi_f.project(&qubit)?;
    let overlap = target.inner(&lower)?;
    Ok(RotationOutcome {
        excited_population: psi_f.population("e").unwrap_or(0.0),
        fidelity: overlap.norm_sqr().min(1.0),
        overlap,
        psi_f,
        trajectory,
        target,
        delta,
        warnings,
    })
}

/// Phase lost by the coupled state along a trajectory that starts in `|C>`:
/// `-arg<C|psi(t_f)>`, unwrapped continuously over the steps.
pub fn accumulated_coupled_phase(trajectory: &Trajectory, a: MixingAngles) -> Result<f64> {
    let (coupled, _) = coupled_uncoupled_basis(a);
    let c = coupled.embed(trajectory.basis())?;
    let mut total = 0.0;
    let mut prev = c.amplitudes().dotc(trajectory.amplitudes(0)).arg();
    for k in 1..trajectory.len() {
        let cur = c.amplitudes().dotc(trajectory.amplitudes(k)).arg();
        total += wrap_angle(cur - prev);
        prev = cur;
    }
    Ok(-total)
}
