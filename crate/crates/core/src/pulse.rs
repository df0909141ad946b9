//! Complex pulse envelopes (Rabi frequencies in rad/ns as functions of time in
//! ns) with analytic derivatives and `|Omega(t)|^2` integrals.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian support is truncated at this many widths on each side when
/// integrating.
pub const GAUSSIAN_SUPPORT_WIDTHS: f64 = 8.0;
/// sech^2 tails drop below 1e-16 of the peak at 20 widths.
pub const SECH_SUPPORT_WIDTHS: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pulse {
    /// `amplitude` on `[center - duration/2, center + duration/2]`, zero elsewhere.
    Rectangular {
        #[serde(with = "crate::serde_complex")]
        amplitude: C64,
        center: f64,
        duration: f64,
    },
    /// `amplitude * exp(-(t - center)^2 / width^2)`.
    Gaussian {
        #[serde(with = "crate::serde_complex")]
        amplitude: C64,
        center: f64,
        width: f64,
    },
    /// `amplitude * sech((t - center) / width)`.
    Sech {
        #[serde(with = "crate::serde_complex")]
        amplitude: C64,
        center: f64,
        width: f64,
    },
    /// `sum_k coefficient_k * pulse_k(t)`.
    ScaledSum { terms: Vec<PulseTerm> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTerm {
    #[serde(with = "crate::serde_complex")]
    pub coefficient: C64,
    pub pulse: Pulse,
}

impl Pulse {
    pub fn rectangular(amplitude: C64, center: f64, duration: f64) -> Result<Self> {
        let p = Pulse::Rectangular {
            amplitude,
            center,
            duration,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn gaussian(amplitude: C64, center: f64, width: f64) -> Result<Self> {
        let p = Pulse::Gaussian {
            amplitude,
            center,
            width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sech(amplitude: C64, center: f64, width: f64) -> Result<Self> {
        let p = Pulse::Sech {
            amplitude,
            center,
            width,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn scaled_sum(terms: Vec<(C64, Pulse)>) -> Result<Self> {
        let p = Pulse::ScaledSum {
            terms: terms
                .into_iter()
                .map(|(coefficient, pulse)| PulseTerm { coefficient, pulse })
                .collect(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Identically zero envelope.
    pub fn zero() -> Self {
        Pulse::ScaledSum { terms: Vec::new() }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            Pulse::Rectangular { .. } => "rectangular",
            Pulse::Gaussian { .. } => "gaussian",
            Pulse::Sech { .. } => "sech",
            Pulse::ScaledSum { .. } => "scaled_sum",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        let finite_c = |name: &str, z: C64| {
            if z.re.is_finite() && z.im.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        match self {
            Pulse::Rectangular {
                amplitude,
                center,
                duration: w,
            }
            | Pulse::Gaussian {
                amplitude,
                center,
                width: w,
            }
            | Pulse::Sech {
                amplitude,
                center,
                width: w,
            } => {
                finite_c("amplitude", *amplitude)?;
                finite("center", *center)?;
                if !(*w > 0.0 && w.is_finite()) {
                    let name = if matches!(self, Pulse::Rectangular { .. }) {
                        "duration"
                    } else {
                        "width"
                    };
                    return Err(Error::invalid(name, format!("must be positive, got {w}")));
                }
                Ok(())
            }
            Pulse::ScaledSum { terms } => terms.iter().try_for_each(|t| {
                finite_c("coefficient", t.coefficient)?;
                t.pulse.validate()
            }),
        }
    }

    pub fn evaluate(&self, t: f64) -> C64 {
        match self {
            Pulse::Rectangular {
                amplitude,
                center,
                duration,
            } => {
                if (t - center).abs() <= 0.5 * duration {
                    *amplitude
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Pulse::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                amplitude * (-x * x).exp()
            }
            Pulse::Sech {
                amplitude,
                center,
                width,
            } => amplitude * sech((t - center) / width),
            Pulse::ScaledSum { terms } => terms
                .iter()
                .map(|term| term.coefficient * term.pulse.evaluate(t))
                .sum(),
        }
    }

    /// Analytic `d Omega / dt` in rad/ns^2.
    pub fn derivative(&self, t: f64) -> Result<C64> {
        match self {
            Pulse::Rectangular { .. } => Err(Error::UnsupportedShape("rectangular")),
            Pulse::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                Ok(amplitude * (-2.0 * x / width) * (-x * x).exp())
            }
            Pulse::Sech {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                Ok(amplitude * (-sech(x) * x.tanh() / width))
            }
            Pulse::ScaledSum { terms } => terms
                .iter()
                .map(|term| Ok(term.coefficient * term.pulse.derivative(t)?))
                .sum(),
        }
    }

    /// Same envelope delayed by `s`: `shifted(s).evaluate(t) == evaluate(t - s)`.
    pub fn shifted(&self, s: f64) -> Pulse {
        self.map_geometry(&|c| c + s, &|w| w)
    }

    /// Envelope with time axis stretched by `s` (centers and widths scale).
    pub fn time_scaled(&self, s: f64) -> Pulse {
        self.map_geometry(&|c| c * s, &|w| w * s)
    }

    /// Envelope multiplied by a complex constant.
    pub fn scaled(&self, c: C64) -> Pulse {
        match self {
            Pulse::Rectangular {
                amplitude,
                center,
                duration,
            } => Pulse::Rectangular {
                amplitude: amplitude * c,
                center: *center,
                duration: *duration,
            },
            Pulse::Gaussian {
                amplitude,
                center,
                width,
            } => Pulse::Gaussian {
                amplitude: amplitude * c,
                center: *center,
                width: *width,
            },
            Pulse::Sech {
                amplitude,
                center,
                width,
            } => Pulse::Sech {
                amplitude: amplitude * c,
                center: *center,
                width: *width,
            },
            Pulse::ScaledSum { terms } => Pulse::ScaledSum {
                terms: terms
                    .iter()
                    .map(|t| PulseTerm {
                        coefficient: t.coefficient * c,
                        pulse: t.pulse.clone(),
                    })
                    .collect(),
            },
        }
    }

    fn map_geometry(&self, center: &dyn Fn(f64) -> f64, width: &dyn Fn(f64) -> f64) -> Pulse {
        match self {
            Pulse::Rectangular {
                amplitude,
                center: c,
                duration,
            } => Pulse::Rectangular {
                amplitude: *amplitude,
                center: center(*c),
                duration: width(*duration),
            },
            Pulse::Gaussian {
                amplitude,
                center: c,
                width: w,
            } => Pulse::Gaussian {
                amplitude: *amplitude,
                center: center(*c),
                width: width(*w),
            },
            Pulse::Sech {
                amplitude,
                center: c,
                width: w,
            } => Pulse::Sech {
                amplitude: *amplitude,
                center: center(*c),
                width: width(*w),
            },
            Pulse::ScaledSum { terms } => Pulse::ScaledSum {
                terms: terms
                    .iter()
                    .map(|t| PulseTerm {
                        coefficient: t.coefficient,
                        pulse: t.pulse.map_geometry(center, width),
                    })
                    .collect(),
            },
        }
    }

    /// Interval outside which the envelope is treated as zero for
    /// integration. `None` for an empty sum.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Pulse::Rectangular {
                center, duration, ..
            } => Some((center - 0.5 * duration, center + 0.5 * duration)),
            Pulse::Gaussian { center, width, .. } => Some((
                center - GAUSSIAN_SUPPORT_WIDTHS * width,
                center + GAUSSIAN_SUPPORT_WIDTHS * width,
            )),
            Pulse::Sech { center, width, .. } => Some((
                center - SECH_SUPPORT_WIDTHS * width,
                center + SECH_SUPPORT_WIDTHS * width,
            )),
            Pulse::ScaledSum { terms } => terms
                .iter()
                .filter_map(|t| t.pulse.support())
                .reduce(|(a, b), (c, d)| (a.min(c), b.max(d))),
        }
    }

    /// Points where the envelope is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Pulse::Rectangular {
                center, duration, ..
            } => vec![center - 0.5 * duration, center + 0.5 * duration],
            Pulse::ScaledSum { terms } => {
                terms.iter().flat_map(|t| t.pulse.breakpoints()).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Characteristic times (centers) of the envelope and its members.
    pub fn centers(&self) -> Vec<f64> {
        match self {
            Pulse::Rectangular { center, .. }
            | Pulse::Gaussian { center, .. }
            | Pulse::Sech { center, .. } => vec![*center],
            Pulse::ScaledSum { terms } => terms.iter().flat_map(|t| t.pulse.centers()).collect(),
        }
    }

    /// `int_{t_i}^{t_f} |Omega(t)|^2 dt` in rad^2/ns. Zero for an empty interval.
    pub fn abs_square_integral(&self, t_i: f64, t_f: f64) -> f64 {
        if !(t_f > t_i) {
            return 0.0;
        }
        if let Pulse::Rectangular {
            amplitude,
            center,
            duration,
        } = self
        {
            let lo = t_i.max(center - 0.5 * duration);
            let hi = t_f.min(center + 0.5 * duration);
            return amplitude.norm_sqr() * (hi - lo).max(0.0);
        }
        let Some((s0, s1)) = self.support() else {
            return 0.0;
        };
        let (lo, hi) = (t_i.max(s0), t_f.min(s1));
        if !(hi > lo) {
            return 0.0;
        }
        let mut cuts = vec![lo, hi];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let f = |t: f64| self.evaluate(t).norm_sqr();
        cuts.windows(2).map(|w| integrate(&f, w[0], w[1])).sum()
    }

    /// Largest `|Omega(t)|` on `[t_i, t_f]`, by dense sampling plus the pulse
    /// centers.
    pub fn peak_magnitude(&self, t_i: f64, t_f: f64) -> f64 {
        const SAMPLES: usize = 4000;
        let mut best = 0.0_f64;
        for k in 0..=SAMPLES {
            let t = t_i + (t_f - t_i) * k as f64 / SAMPLES as f64;
            best = best.max(self.evaluate(t).norm());
        }
        for c in self.centers() {
            if c >= t_i && c <= t_f {
                best = best.max(self.evaluate(c).norm());
            }
        }
        best
    }
}

fn sech(x: f64) -> f64 {
    // 2 / (e^x + e^-x) without overflow for large |x|
    let a = x.abs();
    let e = (-a).exp();
    2.0 * e / (1.0 + e * e)
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature of a smooth integrand.
pub(crate) fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    let rough: f64 = (0..PANELS)
        .map(|k| gk15(f, a + k as f64 * h, a + (k + 1) as f64 * h).0.abs())
        .sum();
    let tol = (rough * 1e-14).max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64, usize)> = (0..PANELS)
        .map(|k| (a + k as f64 * h, a + (k + 1) as f64 * h, 0))
        .collect();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(f, lo, hi);
        let local_tol = tol * (hi - lo) / (b - a);
        if err <= local_tol || depth >= 40 {
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}
