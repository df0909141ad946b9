use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance on the norm of a freshly constructed state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Ordered list of unique basis-state names. Cheap to clone.
#[derive(Clone, PartialEq, Eq)]
pub struct Basis(Arc<[String]>);

impl Basis {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        Ok(Basis(labels.into()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn label(&self, index: usize) -> &str {
        &self.0[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub(crate) fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Complex amplitudes over a labelled basis.
///
/// User-constructed states are normalized to within [`NORM_TOLERANCE`].
/// States handed back by the propagator carry whatever norm drift the
/// integrator accumulated; it is reported separately in the trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: Basis,
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Builds a state and checks its norm.
    pub fn new(basis: Basis, amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self::from_raw(basis, DVector::from_vec(amplitudes))?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                norm,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(state)
    }

    /// Builds a state and rescales it to unit norm.
    pub fn normalized(basis: Basis, amplitudes: Vec<C64>) -> Result<Self> {
        let mut state = Self::from_raw(basis, DVector::from_vec(amplitudes))?;
        let norm = state.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(
                "amplitudes",
                "cannot normalize a zero or non-finite vector",
            ));
        }
        state.amplitudes.unscale_mut(norm);
        Ok(state)
    }

    pub fn basis_state(basis: Basis, label: &str) -> Result<Self> {
        let idx = basis.require(label)?;
        let mut amps = DVector::zeros(basis.len());
        amps[idx] = C64::new(1.0, 0.0);
        Ok(StateVector {
            basis,
            amplitudes: amps,
        })
    }

    /// Wraps amplitudes without a norm check. Only the length is validated.
    pub fn from_raw(basis: Basis, amplitudes: DVector<C64>) -> Result<Self> {
        if basis.len() != amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: amplitudes.len(),
            });
        }
        Ok(StateVector { basis, amplitudes })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn amplitude(&self, label: &str) -> Option<C64> {
        self.basis.index_of(label).map(|i| self.amplitudes[i])
    }

    pub fn population(&self, label: &str) -> Option<f64> {
        self.amplitude(label).map(|a| a.norm_sqr())
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`; both states must share the same basis.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.basis != other.basis {
            return Err(Error::LabelMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Re-expresses the state in a larger basis containing all of its labels.
    pub fn embed(&self, target: &Basis) -> Result<StateVector> {
        let mut amps = DVector::zeros(target.len());
        for (label, a) in self.basis.labels().iter().zip(self.amplitudes.iter()) {
            amps[target.require(label)?] = *a;
        }
        Ok(StateVector {
            basis: target.clone(),
            amplitudes: amps,
        })
    }

    /// Keeps only the components whose labels appear in `target`. The result
    /// is not renormalized.
    pub fn project(&self, target: &Basis) -> Result<StateVector> {
        let mut amps = DVector::zeros(target.len());
        for (i, label) in target.labels().iter().enumerate() {
            amps[i] = self
                .amplitude(label)
                .ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        }
        Ok(StateVector {
            basis: target.clone(),
            amplitudes: amps,
        })
    }

    pub fn scaled(&self, factor: C64) -> StateVector {
        StateVector {
            basis: self.basis.clone(),
            amplitudes: self.amplitudes.map(|a| a * factor),
        }
    }
}

/// `|<a|b>|^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}
