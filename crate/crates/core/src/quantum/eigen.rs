use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::hamiltonian::{hermiticity_defect, max_abs};
use super::state::{Basis, StateVector};
use crate::error::{Error, Result};

/// Components whose magnitudes agree to this relative tolerance count as a
/// tie for the phase convention; the lowest index wins.
const PHASE_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: f64,
    pub vector: StateVector,
}

/// Ascending eigenpairs of a Hermitian matrix.
///
/// Each eigenvector is rotated so that its largest-magnitude component is
/// real and positive.
pub fn eigendecompose(m: &DMatrix<C64>, basis: &Basis) -> Result<Vec<EigenPair>> {
    let n = basis.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    let (values, vectors) = eigendecompose_raw(m)?;
    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(value, v)| EigenPair {
            value,
            vector: StateVector::from_raw(basis.clone(), v).expect("sizes checked"),
        })
        .collect())
}

/// Same as [`eigendecompose`] but returns bare vectors.
pub fn eigendecompose_raw(m: &DMatrix<C64>) -> Result<(Vec<f64>, Vec<DVector<C64>>)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-12 * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NotConverged("Hermitian QR iteration".into()))?;

    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvectors.column(i).into_owned();
            let v = v.unscale(v.norm());
            fix_phase(v)
        })
        .collect();
    Ok((values, vectors))
}

fn fix_phase(mut v: DVector<C64>) -> DVector<C64> {
    let max = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - PHASE_TIE_TOLERANCE))
        .expect("max is attained");
    let phase = v[pivot] / v[pivot].norm();
    v.apply(|z| *z /= phase);
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: usize) -> Basis {
        Basis::new((0..n).map(|i| i.to_string())).unwrap()
    }

    #[test]
    fn identity_gives_canonical_basis() {
        let m = DMatrix::<C64>::identity(4, 4);
        let pairs = eigendecompose(&m, &basis(4)).unwrap();
        for (k, p) in pairs.iter().enumerate() {
            assert!((p.value - 1.0).abs() < 1e-14);
            for (j, a) in p.vector.amplitudes().iter().enumerate() {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((a - C64::from(expect)).norm() < 1e-14, "pair {k}: {a}");
            }
        }
    }

    #[test]
    fn pauli_x_spectrum() {
        let o = C64::from(0.0);
        let l = C64::from(1.0);
        let m = DMatrix::from_row_slice(2, 2, &[o, l, l, o]);
        let pairs = eigendecompose(&m, &basis(2)).unwrap();
        assert!((pairs[0].value + 1.0).abs() < 1e-14);
        assert!((pairs[1].value - 1.0).abs() < 1e-14);
        // tie between equal-magnitude components: first index is made real positive
        for p in &pairs {
            let a0 = p.vector.amplitudes()[0];
            assert!(a0.im.abs() < 1e-15 && a0.re > 0.0);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::from(0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 1.0),
                C64::from(0.0),
            ],
        );
        assert!(matches!(
            eigendecompose(&m, &basis(2)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn complex_hermitian_residuals_and_trace() {
        let n = 6;
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::from((i as f64 * 0.7).sin() * 3.0);
            for j in (i + 1)..n {
                let z = C64::new(((i * 7 + j * 3) as f64).cos(), ((i + 2 * j) as f64).sin());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let pairs = eigendecompose(&m, &basis(n)).unwrap();
        let scale = m.norm();
        let mut trace = 0.0;
        for p in &pairs {
            let v = p.vector.amplitudes();
            let r = (&m * v - v * C64::from(p.value)).norm();
            assert!(r <= 1e-10 * scale, "residual {r}");
            trace += p.value;
        }
        assert!((trace - m.trace().re).abs() < 1e-10);
        assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
        for a in &pairs {
            for b in &pairs {
                let ip = a.vector.inner(&b.vector).unwrap();
                let expect = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                assert!((ip - C64::from(expect)).norm() < 1e-10);
            }
        }
    }
}
