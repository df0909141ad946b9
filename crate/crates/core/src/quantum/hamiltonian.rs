use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::state::Basis;

/// A time-dependent Hermitian generator in angular-frequency units
/// (rad/ns, with hbar = 1).
pub trait HamiltonianModel: Sync {
    fn basis(&self) -> &Basis;

    /// Writes `H(t)` into `out`, which is already sized `dim x dim`.
    fn fill(&self, t: f64, out: &mut DMatrix<C64>);

    fn dim(&self) -> usize {
        self.basis().len()
    }

    /// Times where `H(t)` jumps. The propagator splits steps there and uses
    /// one-sided limits at each cut.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn evaluate(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        self.fill(t, &mut m);
        m
    }
}

/// Time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct StaticHamiltonian {
    basis: Basis,
    matrix: DMatrix<C64>,
}

impl StaticHamiltonian {
    pub fn new(basis: Basis, matrix: DMatrix<C64>) -> crate::Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(crate::Error::DimensionMismatch {
                expected: basis.len(),
                found: matrix.nrows(),
            });
        }
        Ok(StaticHamiltonian { basis, matrix })
    }

    pub fn zero(basis: Basis) -> Self {
        let n = basis.len();
        StaticHamiltonian {
            basis,
            matrix: DMatrix::zeros(n, n),
        }
    }
}

impl HamiltonianModel for StaticHamiltonian {
    fn basis(&self) -> &Basis {
        &self.basis
    }

    fn fill(&self, _t: f64, out: &mut DMatrix<C64>) {
        out.copy_from(&self.matrix);
    }
}

/// Largest entry of `|M - M^H|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry magnitude, used as a scale for relative tolerances.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
