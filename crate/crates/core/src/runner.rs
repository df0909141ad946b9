//! JSON-configured scenarios, the built-in registry, and deterministic
//! CSV/JSON output.
//!
//! A config is an object with `scenario_type`, optional `name`, `unit_scale`,
//! `integrator`, `output`, and a `parameters` object whose schema depends on
//! the type. `unit_scale` multiplies every frequency-like parameter (Rabi
//! frequencies, detunings, `g`); times and angles are unaffected.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cavity::{
    fractional_stirap_pulses, run_fractional_stirap, run_transfer, transfer_timing,
    CavitySystemParams, Space, TransferResult, CLOSED5_LABELS,
};
use crate::device::{self, FluxGrid, SquidParams};
use crate::error::{Error, Result};
use crate::pulse::Pulse;
use crate::quantum::{Basis, StateVector, Trajectory, DEFAULT_DT};
use crate::rotation::{
    self, accumulated_coupled_phase, coupled_uncoupled_basis, qubit_basis, rabi_design,
    simulate_rotation, wrap_angle, Frame, MixingAngles, RamanConfig, RotationDesign,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioType {
    SingleQubit,
    TwoQubitTransfer,
    TwoQubitFstirap,
    DeviceSpectrum,
}

impl ScenarioType {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioType::SingleQubit => "single_qubit",
            ScenarioType::TwoQubitTransfer => "two_qubit_transfer",
            ScenarioType::TwoQubitFstirap => "two_qubit_fstirap",
            ScenarioType::DeviceSpectrum => "device_spectrum",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Upper bound on the RK4 step, ns.
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: DEFAULT_DT }
    }
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    10
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to `out/<name>`.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub emit_trajectory: bool,
    #[serde(default = "default_true")]
    pub emit_summary: bool,
    #[serde(default = "default_true")]
    pub emit_plotdata: bool,
    /// Every `trajectory_stride`-th integration step is written; the last
    /// step always is.
    #[serde(default = "default_stride")]
    pub trajectory_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: None,
            emit_trajectory: true,
            emit_summary: true,
            emit_plotdata: true,
            trajectory_stride: default_stride(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amplitude(#[serde(with = "crate::serde_complex")] pub C64);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QubitDesign {
    /// Rectangular pulse on `[0, T]` with detuning and `T` chosen for rotation `delta`.
    Rabi { m: u32, delta: f64, omega: f64 },
    Raman {
        pulse: Pulse,
        detuning: f64,
        t_start: f64,
        t_end: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleQubitParams {
    pub phi: f64,
    pub eta: f64,
    /// Amplitudes on `|0>`, `|1>`; normalized on load.
    pub initial_state: [Amplitude; 2],
    #[serde(default)]
    pub frame: Frame,
    pub design: QubitDesign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferParams {
    pub g: f64,
    #[serde(default)]
    pub delta_prime: f64,
    pub pulse_a: Pulse,
    pub pulse_b: Pulse,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub space: Space,
    #[serde(default = "one")]
    pub c0: Amplitude,
    #[serde(default = "zero")]
    pub c1: Amplitude,
}

fn one() -> Amplitude {
    Amplitude(C64::from(1.0))
}

fn zero() -> Amplitude {
    Amplitude(C64::from(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FstirapParams {
    pub g: f64,
    #[serde(default)]
    pub delta_prime: f64,
    /// Common peak amplitude of both Gaussians.
    pub omega: f64,
    pub tau_a: f64,
    pub tau_b: f64,
    pub tau_p: f64,
    pub theta: f64,
    #[serde(default)]
    pub xi: f64,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default)]
    pub space: Space,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    pub inductance_ph: f64,
    pub capacitance_ff: f64,
    pub critical_current_ua: f64,
    pub phi_x: f64,
    /// Defaults to `phi_x +- 0.75` with 2001 points.
    #[serde(default)]
    pub grid: Option<FluxGrid>,
    #[serde(default = "default_levels")]
    pub n_levels: usize,
}

fn default_levels() -> usize {
    6
}

impl DeviceParams {
    pub fn squid(&self) -> SquidParams {
        SquidParams {
            inductance_ph: self.inductance_ph,
            capacitance_ff: self.capacitance_ff,
            critical_current_ua: self.critical_current_ua,
            phi_x: self.phi_x,
            grid: self.grid.unwrap_or_else(|| FluxGrid::around(self.phi_x)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    SingleQubit(SingleQubitParams),
    TwoQubitTransfer(TransferParams),
    TwoQubitFstirap(FstirapParams),
    DeviceSpectrum(DeviceParams),
}

impl Scenario {
    pub fn scenario_type(&self) -> ScenarioType {
        match self {
            Scenario::SingleQubit(_) => ScenarioType::SingleQubit,
            Scenario::TwoQubitTransfer(_) => ScenarioType::TwoQubitTransfer,
            Scenario::TwoQubitFstirap(_) => ScenarioType::TwoQubitFstirap,
            Scenario::DeviceSpectrum(_) => ScenarioType::DeviceSpectrum,
        }
    }

    fn parameters_json(&self) -> Value {
        let v = match self {
            Scenario::SingleQubit(p) => serde_json::to_value(p),
            Scenario::TwoQubitTransfer(p) => serde_json::to_value(p),
            Scenario::TwoQubitFstirap(p) => serde_json::to_value(p),
            Scenario::DeviceSpectrum(p) => serde_json::to_value(p),
        };
        v.expect("parameters serialize")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario_type: ScenarioType,
    #[serde(default)]
    name: Option<String>,
    #[serde(default = "default_scale")]
    unit_scale: f64,
    #[serde(default)]
    integrator: IntegratorConfig,
    #[serde(default)]
    output: OutputConfig,
    parameters: Value,
}

/// A fully resolved scenario (defaults applied).
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    pub unit_scale: f64,
    pub integrator: IntegratorConfig,
    pub output: OutputConfig,
    pub scenario: Scenario,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        ScenarioConfig {
            name: None,
            unit_scale: 1.0,
            integrator: IntegratorConfig::default(),
            output: OutputConfig::default(),
            scenario,
        }
    }

    pub fn display_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.scenario.scenario_type().as_str().to_string())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let params = raw.parameters;
        let scenario = match raw.scenario_type {
            ScenarioType::SingleQubit => Scenario::SingleQubit(parse_params(params)?),
            ScenarioType::TwoQubitTransfer => Scenario::TwoQubitTransfer(parse_params(params)?),
            ScenarioType::TwoQubitFstirap => Scenario::TwoQubitFstirap(parse_params(params)?),
            ScenarioType::DeviceSpectrum => Scenario::DeviceSpectrum(parse_params(params)?),
        };
        let config = ScenarioConfig {
            name: raw.name,
            unit_scale: raw.unit_scale,
            integrator: raw.integrator,
            output: raw.output,
            scenario,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Value {
        let raw = RawConfig {
            scenario_type: self.scenario.scenario_type(),
            name: self.name.clone(),
            unit_scale: self.unit_scale,
            integrator: self.integrator,
            output: self.output.clone(),
            parameters: self.scenario.parameters_json(),
        };
        serde_json::to_value(raw).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let dt = self.integrator.dt;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(
                "integrator.dt",
                format!("must be positive and finite, got {dt}"),
            ));
        }
        if !(self.unit_scale > 0.0 && self.unit_scale.is_finite()) {
            return Err(Error::invalid("unit_scale", "must be positive and finite"));
        }
        if self.output.trajectory_stride == 0 {
            return Err(Error::invalid(
                "output.trajectory_stride",
                "must be at least 1",
            ));
        }
        match &self.scenario {
            Scenario::SingleQubit(p) => {
                finite("parameters.phi", p.phi)?;
                finite("parameters.eta", p.eta)?;
                let amps = [p.initial_state[0].0, p.initial_state[1].0];
                if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite())
                    || amps.iter().all(|a| a.norm() == 0.0)
                {
                    return Err(Error::invalid(
                        "parameters.initial_state",
                        "must be finite and non-zero",
                    ));
                }
                if let QubitDesign::Raman {
                    pulse,
                    t_start,
                    t_end,
                    ..
                } = &p.design
                {
                    pulse.validate()?;
                    if !(t_end > t_start) {
                        return Err(Error::invalid(
                            "parameters.design.t_end",
                            "must exceed t_start",
                        ));
                    }
                }
            }
            Scenario::TwoQubitTransfer(p) => {
                self.transfer_system(p).validate()?;
                let n = p.c0.0.norm_sqr() + p.c1.0.norm_sqr();
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::invalid(
                        "parameters.c0",
                        "c0 and c1 must not both vanish",
                    ));
                }
            }
            Scenario::TwoQubitFstirap(p) => {
                self.fstirap_system(p)?.validate()?;
                finite("parameters.theta", p.theta)?;
                finite("parameters.xi", p.xi)?;
            }
            Scenario::DeviceSpectrum(p) => {
                p.squid().validate()?;
                if p.n_levels < 3 {
                    return Err(Error::invalid("parameters.n_levels", "must be at least 3"));
                }
            }
        }
        Ok(())
    }

    fn transfer_system(&self, p: &TransferParams) -> CavitySystemParams {
        let s = self.unit_scale;
        CavitySystemParams {
            g: p.g * s,
            delta_prime: p.delta_prime * s,
            pulse_a: p.pulse_a.scaled(C64::from(s)),
            pulse_b: p.pulse_b.scaled(C64::from(s)),
            t_start: p.t_start,
            t_end: p.t_end,
            space: p.space,
        }
    }

    fn fstirap_system(&self, p: &FstirapParams) -> Result<CavitySystemParams> {
        let s = self.unit_scale;
        let (a, b) =
            fractional_stirap_pulses(p.omega * s, p.tau_a, p.tau_b, p.tau_p, p.theta, p.xi)?;
        Ok(CavitySystemParams {
            g: p.g * s,
            delta_prime: p.delta_prime * s,
            pulse_a: a,
            pulse_b: b,
            t_start: p.t_start,
            t_end: p.t_end,
            space: p.space,
        })
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be finite"))
    }
}

fn parse_params<T: serde::de::DeserializeOwned>(v: Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Config(format!("parameters: {e}")))
}

pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
}

const SCENARIOS: [ScenarioInfo; 5] = [
    ScenarioInfo {
        name: "fig2",
        description: "Rabi-model rotation |0> -> |1> (m = 2, delta = pi, Omega = 2)",
    },
    ScenarioInfo {
        name: "fig4",
        description: "STIRAP transfer |0,1,0> -> |1,0,0> through the cavity",
    },
    ScenarioInfo {
        name: "fig5",
        description: "fractional STIRAP towards (|0,1,0> + |1,0,0>)/sqrt(2)",
    },
    ScenarioInfo {
        name: "device",
        description: "rf-SQUID flux-potential spectrum at the reference parameters",
    },
    ScenarioInfo {
        name: "raman-demo",
        description: "far-detuned Gaussian pulse: Raman phase vs full propagation",
    },
];

pub fn list_scenarios() -> &'static [ScenarioInfo] {
    &SCENARIOS
}

fn gaussian(amplitude: f64, center: f64, width: f64) -> Pulse {
    Pulse::Gaussian {
        amplitude: C64::from(amplitude),
        center,
        width,
    }
}

/// The resolved config of a built-in scenario.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let scenario = match name {
        "fig2" => Scenario::SingleQubit(SingleQubitParams {
            phi: 5.0 * FRAC_PI_4,
            eta: PI,
            initial_state: [one(), zero()],
            frame: Frame::Rotating,
            design: QubitDesign::Rabi {
                m: 2,
                delta: PI,
                omega: 2.0,
            },
        }),
        "fig4" => Scenario::TwoQubitTransfer(TransferParams {
            g: 3.0,
            delta_prime: 0.0,
            pulse_a: gaussian(-2.0, 23.0, 6.5),
            pulse_b: gaussian(-2.0, 17.0, 6.5),
            t_start: 0.0,
            t_end: 40.0,
            space: Space::Closed5,
            c0: one(),
            c1: zero(),
        }),
        "fig5" => Scenario::TwoQubitFstirap(FstirapParams {
            g: 3.0,
            delta_prime: 0.0,
            omega: -2.0,
            tau_a: 38.5,
            tau_b: 25.0,
            tau_p: 10.0,
            theta: FRAC_PI_4,
            xi: 0.0,
            t_start: 0.0,
            t_end: 60.0,
            space: Space::Closed5,
        }),
        "device" => {
            let r = SquidParams::reference();
            Scenario::DeviceSpectrum(DeviceParams {
                inductance_ph: r.inductance_ph,
                capacitance_ff: r.capacitance_ff,
                critical_current_ua: r.critical_current_ua,
                phi_x: r.phi_x,
                grid: None,
                n_levels: 6,
            })
        }
        "raman-demo" => Scenario::SingleQubit(SingleQubitParams {
            phi: PI / 8.0,
            eta: 0.3,
            initial_state: [one(), zero()],
            frame: Frame::Rotating,
            design: QubitDesign::Raman {
                pulse: gaussian(0.6, 0.0, 15.0),
                detuning: 6.0,
                t_start: -120.0,
                t_end: 120.0,
            },
        }),
        other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
    };
    let mut config = ScenarioConfig::new(scenario);
    config.name = Some(name.to_string());
    Ok(config)
}

/// In-memory result of a scenario: the summary record and the CSV files.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutput {
    pub summary: Value,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
}

impl ScenarioOutput {
    pub fn summary_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn norm_drift(&self) -> Option<f64> {
        self.summary.get("norm_drift").and_then(Value::as_f64)
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Stride-sampled step indices, always ending with the last step.
fn sampled(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// `x_<name>,<name>` column pairs from column 0 against each other column.
    fn plot_pairs(&self) -> String {
        let mut header = Vec::new();
        for name in &self.header[1..] {
            header.push(format!("{}_{}", self.header[0], name));
            header.push(name.clone());
        }
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut cells = Vec::with_capacity(2 * row.len());
            for &y in &row[1..] {
                cells.push(num(row[0]));
                cells.push(num(y));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn emit_tables(
    config: &ScenarioConfig,
    table: &Table,
    plot: &Table,
    files: &mut Vec<(String, String)>,
) {
    if config.output.emit_trajectory {
        files.push(("trajectory.csv".into(), table.csv()));
    }
    if config.output.emit_plotdata {
        files.push(("plotdata.csv".into(), plot.plot_pairs()));
    }
}

/// Runs the scenario without touching the file system.
pub fn execute(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    config.validate()?;
    let mut out = match &config.scenario {
        Scenario::SingleQubit(p) => execute_single(config, p)?,
        Scenario::TwoQubitTransfer(p) => {
            let sys = config.transfer_system(p);
            let n = (p.c0.0.norm_sqr() + p.c1.0.norm_sqr()).sqrt();
            let (c0, c1) = (p.c0.0 / n, p.c1.0 / n);
            let r = run_transfer(&sys, c0, c1, config.integrator.dt)?;
            execute_cavity(config, &sys, r)?
        }
        Scenario::TwoQubitFstirap(p) => {
            let sys = config.fstirap_system(p)?;
            let r = run_fractional_stirap(&sys, p.theta, p.xi, config.integrator.dt)?;
            execute_cavity(config, &sys, r)?
        }
        Scenario::DeviceSpectrum(p) => execute_device(config, p)?,
    };
    if let Value::Object(map) = &mut out.summary {
        map.insert("scenario".into(), json!(config.display_name()));
        map.insert("config".into(), config.to_json());
    }
    Ok(out)
}

fn execute_single(config: &ScenarioConfig, p: &SingleQubitParams) -> Result<ScenarioOutput> {
    let s = config.unit_scale;
    let angles = MixingAngles {
        phi: p.phi,
        eta: p.eta,
    };
    let psi_i = StateVector::normalized(
        qubit_basis(),
        vec![p.initial_state[0].0, p.initial_state[1].0],
    )?;
    let mut summary = serde_json::Map::new();
    let design = match &p.design {
        QubitDesign::Rabi { m, delta, omega } => {
            let d = rabi_design(*m, *delta, omega * s)?;
            summary.insert(
                "design".into(),
                json!({
                    "kind": "rabi",
                    "omega": d.omega,
                    "detuning": d.detuning,
                    "duration": d.duration,
                    "m": d.m,
                }),
            );
            RotationDesign::Rabi(d)
        }
        QubitDesign::Raman {
            pulse,
            detuning,
            t_start,
            t_end,
        } => {
            let cfg = RamanConfig {
                pulse: pulse.scaled(C64::from(s)),
                detuning: detuning * s,
                t_start: *t_start,
                t_end: *t_end,
            };
            let phase = rotation::raman_phase(&cfg.pulse, cfg.detuning, cfg.t_start, cfg.t_end)?;
            summary.insert(
                "design".into(),
                json!({
                    "kind": "raman",
                    "detuning": cfg.detuning,
                    "validity_ratio": phase.validity_ratio,
                }),
            );
            RotationDesign::Raman(cfg)
        }
    };
    let outcome = simulate_rotation(angles, &design, &psi_i, p.frame, config.integrator.dt)?;
    let tr = &outcome.trajectory;
    let pe = tr.population_series("e")?;

    let (coupled, _) = coupled_uncoupled_basis(angles);
    if coupled.inner(&psi_i)?.norm() > 1e-6 {
        let phase = accumulated_coupled_phase(tr, angles)?;
        summary.insert("coupled_phase".into(), json!(phase));
    }
    let fin = &outcome.psi_f;
    summary.insert("final_P0".into(), json!(fin.population("0").unwrap_or(0.0)));
    summary.insert("final_P1".into(), json!(fin.population("1").unwrap_or(0.0)));
    summary.insert("final_Pe".into(), json!(outcome.excited_population));
    summary.insert(
        "max_Pe".into(),
        json!(pe.iter().copied().fold(0.0, f64::max)),
    );
    summary.insert("fidelity".into(), json!(outcome.fidelity));
    summary.insert("overlap".into(), complex_json(outcome.overlap));
    summary.insert("delta".into(), json!(wrap_angle(outcome.delta)));
    summary.insert("delta_unwrapped".into(), json!(outcome.delta));
    summary.insert("t_final".into(), json!(tr.times()[tr.len() - 1]));
    summary.insert("steps".into(), json!(tr.len() - 1));
    summary.insert("norm_drift".into(), json!(tr.norm_drift()));
    summary.insert("warnings".into(), json!(outcome.warnings));

    let idx = sampled(tr.len(), config.output.trajectory_stride);
    let mut header: Vec<String> = ["t", "P0", "P1", "Pe"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for l in ["0", "1", "e"] {
        header.push(format!("re_{l}"));
        header.push(format!("im_{l}"));
    }
    let rows = idx
        .iter()
        .map(|&k| {
            let a = tr.amplitudes(k);
            let mut row = vec![tr.times()[k]];
            row.extend(a.iter().map(|z| z.norm_sqr()));
            for z in a.iter() {
                row.push(z.re);
                row.push(z.im);
            }
            row
        })
        .collect::<Vec<_>>();
    let plot = Table {
        header: header[..4].to_vec(),
        rows: rows.iter().map(|r| r[..4].to_vec()).collect(),
    };
    let table = Table { header, rows };
    let mut files = Vec::new();
    emit_tables(config, &table, &plot, &mut files);
    Ok(ScenarioOutput {
        summary: Value::Object(summary),
        files,
    })
}

fn series_max(tr: &Trajectory, labels: &[&str]) -> Result<f64> {
    let idx: Vec<usize> = labels
        .iter()
        .filter_map(|l| tr.basis().index_of(l))
        .collect();
    Ok((0..tr.len())
        .map(|k| {
            idx.iter()
                .map(|&i| tr.amplitudes(k)[i].norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// Labels of kets with at least one SQUID in its excited level.
fn excited_labels(basis: &Basis) -> Vec<&str> {
    basis
        .labels()
        .iter()
        .filter(|l| l[..2].contains('e'))
        .map(String::as_str)
        .collect()
}

fn execute_cavity(
    config: &ScenarioConfig,
    sys: &CavitySystemParams,
    r: TransferResult,
) -> Result<ScenarioOutput> {
    let tr = &r.trajectory;
    let timing = transfer_timing(sys, tr, "100")?;
    let mut summary = serde_json::Map::new();
    let pops: serde_json::Map<String, Value> = r
        .final_populations
        .iter()
        .map(|(l, p)| (l.clone(), json!(p)))
        .collect();
    summary.insert("final_populations".into(), Value::Object(pops));
    summary.insert("fidelity_target".into(), json!(r.fidelity_target));
    summary.insert("overlap".into(), complex_json(r.overlap));
    summary.insert("concurrence".into(), json!(r.concurrence));
    summary.insert("adiabaticity_max".into(), json!(r.adiabaticity_max));
    summary.insert("leakage_max".into(), json!(r.leakage_max));
    summary.insert("max_P111".into(), json!(series_max(tr, &["111"])?));
    summary.insert(
        "max_P_excited".into(),
        json!(series_max(tr, &excited_labels(tr.basis()))?),
    );
    if r.concurrence.is_none() {
        summary.insert("transfer_timing".into(), serde_json::to_value(timing)?);
    }
    summary.insert("t_final".into(), json!(tr.times()[tr.len() - 1]));
    summary.insert("steps".into(), json!(tr.len() - 1));
    summary.insert("norm_drift".into(), json!(tr.norm_drift()));
    summary.insert("warnings".into(), json!(r.warnings));

    let basis = tr.basis();
    let closed: Vec<usize> = CLOSED5_LABELS
        .iter()
        .map(|l| basis.index_of(l).expect("five-state kets in every space"))
        .collect();
    let mut header = vec!["t".to_string()];
    header.extend(CLOSED5_LABELS.iter().map(|l| format!("P_{l}")));
    header.extend(["abs_omega_a", "abs_omega_b", "dark_overlap", "adiabaticity"].map(String::from));
    let idx = sampled(tr.len(), config.output.trajectory_stride);
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&k| {
            let t = tr.times()[k];
            let a = tr.amplitudes(k);
            let (oa, ob) = sys.couplings(t);
            let mut row = vec![t];
            row.extend(closed.iter().map(|&i| a[i].norm_sqr()));
            row.push(oa.norm());
            row.push(ob.norm());
            row.push(r.dark_overlap[k]);
            row.push(r.adiabaticity.as_ref().map_or(f64::NAN, |s| s[k]));
            row
        })
        .collect();
    let plot = Table {
        header: header[..8].to_vec(),
        rows: rows.iter().map(|r| r[..8].to_vec()).collect(),
    };
    let table = Table { header, rows };
    let mut files = Vec::new();
    emit_tables(config, &table, &plot, &mut files);
    Ok(ScenarioOutput {
        summary: Value::Object(summary),
        files,
    })
}

fn execute_device(config: &ScenarioConfig, p: &DeviceParams) -> Result<ScenarioOutput> {
    let squid = p.squid();
    let spec = device::stationary_states(&squid, p.n_levels)?;
    let mut summary = serde_json::Map::new();
    summary.insert("energies".into(), json!(spec.energies));
    summary.insert("mean_flux".into(), json!(spec.mean_flux));
    summary.insert(
        "well_assignments".into(),
        serde_json::to_value(&spec.well_assignments)?,
    );
    summary.insert("minima".into(), serde_json::to_value(&spec.minima)?);
    summary.insert("barrier".into(), serde_json::to_value(spec.barrier)?);
    summary.insert("plasma_frequency".into(), json!(squid.plasma_frequency()));
    summary.insert(
        "screening_parameter".into(),
        json!(squid.screening_parameter()),
    );
    let mut warnings: Vec<String> = Vec::new();
    match device::classify_levels(&spec) {
        Ok(c) => {
            let el = |i, j| device::flux_matrix_element(&spec, i, j);
            summary.insert(
                "levels".into(),
                json!({ "idx0": c.idx0, "idx1": c.idx1, "idx_e": c.idx_e }),
            );
            summary.insert(
                "flux_elements".into(),
                json!({
                    "01": el(c.idx0, c.idx1)?,
                    "0e": el(c.idx0, c.idx_e)?,
                    "1e": el(c.idx1, c.idx_e)?,
                }),
            );
            warnings.extend(c.warnings);
        }
        Err(e @ (Error::NoDoubleWell | Error::NoLevelAboveBarrier)) => {
            summary.insert("levels".into(), Value::Null);
            warnings.push(e.to_string());
        }
        Err(e) => return Err(e),
    }
    summary.insert("warnings".into(), json!(warnings));

    let grid = spec.grid.points();
    let mut potential = String::from("phi,V\n");
    for (x, v) in grid.iter().zip(&spec.potential) {
        let _ = writeln!(potential, "{},{}", num(*x), num(*v));
    }
    let mut waves = String::from("phi");
    for k in 0..spec.len() {
        let _ = write!(waves, ",psi_{k}");
    }
    waves.push('\n');
    for (i, x) in grid.iter().enumerate() {
        waves.push_str(&num(*x));
        for w in &spec.wavefunctions {
            waves.push(',');
            waves.push_str(&num(w[i]));
        }
        waves.push('\n');
    }
    let mut files = Vec::new();
    if config.output.emit_trajectory {
        files.push(("potential.csv".into(), potential));
        files.push(("wavefunctions.csv".into(), waves));
    }
    if config.output.emit_plotdata {
        // levels drawn as wavefunctions offset by their energy
        let scale = 0.1
            * spec
                .energies
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
        let peak = spec
            .wavefunctions
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let mut header = vec!["phi".to_string(), "V".to_string()];
        header.extend((0..spec.len()).map(|k| format!("level_{k}")));
        let rows = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let mut row = vec![x, spec.potential[i]];
                for (k, w) in spec.wavefunctions.iter().enumerate() {
                    row.push(spec.energies[k] + scale * w[i] / peak);
                }
                row
            })
            .collect();
        files.push(("plotdata.csv".into(), Table { header, rows }.plot_pairs()));
    }
    Ok(ScenarioOutput {
        summary: Value::Object(summary),
        files,
    })
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub directory: PathBuf,
    pub written: Vec<PathBuf>,
    pub output: ScenarioOutput,
}

/// Executes and writes every output into `out` (or the configured directory).
pub fn run_scenario(config: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    let output = execute(config)?;
    let directory = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.directory.clone())
        .unwrap_or_else(|| Path::new("out").join(config.display_name()));
    fs::create_dir_all(&directory)?;
    let mut written = Vec::new();
    if config.output.emit_summary {
        let path = directory.join("summary.json");
        fs::write(&path, output.summary_text())?;
        written.push(path);
    }
    for (name, body) in &output.files {
        let path = directory.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    log::info!(
        "{}: wrote {} files to {}",
        config.display_name(),
        written.len(),
        directory.display()
    );
    Ok(RunReport {
        directory,
        written,
        output,
    })
}

/// Runs independent configs concurrently, each into `root/<index>-<name>`.
pub fn run_sweep(configs: &[ScenarioConfig], root: &Path) -> Vec<Result<RunReport>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let dir = root.join(format!("{i:03}-{}", c.display_name()));
                scope.spawn(move || run_scenario(c, Some(&dir)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::NotConverged("sweep worker panicked".into())))
            })
            .collect()
    })
}
