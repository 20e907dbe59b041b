//! Cyclic Jacobi eigenvalue solver for dense Hermitian matrices.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::matrix::ComplexMatrix;

/// Inputs whose Hermitian defect exceeds this are rejected.
pub const HERMITIAN_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a Hermitian matrix, sorted descending.
///
/// The input is symmetrised as `(M + Mᴴ)/2` before the sweeps start. Ties
/// keep the order in which they appear on the converged diagonal.
pub fn hermitian_eigenvalues_raw(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return invalid(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        ));
    }
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return invalid(format!("matrix is not Hermitian (defect {defect:.3e})"));
    }
    let n = m.rows();
    let mut a: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (m[(i, j)] + m[(j, i)].conj()) * 0.5
        })
        .collect();

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = (f64::EPSILON * scale).powi(2);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].norm_sqr())
            .sum();
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, n, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// One Jacobi rotation annihilating `a[p][q]`.
///
/// The unitary is `U = D·R` with `D = diag(1, e^{-iφ})` on (p, q), which makes
/// the pivot real, followed by the classical real rotation `R`.
fn rotate(a: &mut [Complex64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    if r <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[p * n + q] = Complex64::new(0.0, 0.0);
        a[q * n + p] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    // A <- A U
    for i in 0..n {
        let aip = a[i * n + p];
        let aiq = a[i * n + q];
        a[i * n + p] = aip * u_pp + aiq * u_qp;
        a[i * n + q] = aip * u_pq + aiq * u_qq;
    }
    // A <- U^H A
    for j in 0..n {
        let apj = a[p * n + j];
        let aqj = a[q * n + j];
        a[p * n + j] = u_pp.conj() * apj + u_qp.conj() * aqj;
        a[q * n + j] = u_pq.conj() * apj + u_qq.conj() * aqj;
    }
    a[p * n + q] = Complex64::new(0.0, 0.0);
    a[q * n + p] = Complex64::new(0.0, 0.0);
    a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
    a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_identity() {
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(hermitian_eigenvalues_raw(&i3).unwrap(), vec![1.0, 1.0, 1.0]);
        let d = ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(hermitian_eigenvalues_raw(&d).unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn complex_two_by_two() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let m = ComplexMatrix::from_row_major(
            2,
            2,
            vec![
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let e = hermitian_eigenvalues_raw(&m).unwrap();
        assert!((e[0] - 3.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(hermitian_eigenvalues_raw(&m).is_err());
        let r = ComplexMatrix::zeros(2, 3);
        assert!(hermitian_eigenvalues_raw(&r).is_err());
    }
}
