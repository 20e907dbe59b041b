//! Dense row-major complex matrices.
//!
//! Everything in this crate works at desk scale (a few dozen rows), so the
//! matrix type is a plain `Vec<Complex64>` with the handful of operations the
//! frame computations need: products, adjoints, row selection and an LU
//! inverse with partial pivoting.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Threshold above which an LU inverse is reported as ill-conditioned.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::from_row_major(
            rows,
            cols,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    /// Matrix product `self * rhs`.
    ///
    /// Panics if the inner dimensions differ.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "dimension mismatch in product: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rrow = rhs.row(l);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^H * self` without materialising the adjoint.
    pub fn gram_cols(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..self.cols {
                let ai = row[i].conj();
                let dst = &mut out.data[i * self.cols..(i + 1) * self.cols];
                for (d, &v) in dst.iter_mut().zip(row) {
                    *d += ai * v;
                }
            }
        }
        out
    }

    /// `self * self^H`.
    pub fn gram_rows(&self) -> Self {
        Self::from_fn(self.rows, self.rows, |i, j| {
            self.row(i)
                .iter()
                .zip(self.row(j))
                .map(|(a, b)| a * b.conj())
                .sum()
        })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Copy with the imaginary part of every entry dropped.
    pub fn real_part(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| Complex64::new(z.re, 0.0))
                .collect(),
        }
    }

    /// Row-major real parts.
    pub fn real_values(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    /// Rows picked by 0-based index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.rows) {
            return invalid(format!("row {bad} out of range for {} rows", self.rows));
        }
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Ok(Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        })
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self[(r, c)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Inverse by LU decomposition with partial pivoting.
    ///
    /// Returns the inverse together with the 1-norm condition number
    /// `‖A‖₁·‖A⁻¹‖₁`; fails when that exceeds [`MAX_CONDITION`].
    pub fn inverse(&self) -> Result<(Self, f64)> {
        if !self.is_square() {
            return invalid(format!(
                "cannot invert a non-square {}x{} matrix",
                self.rows, self.cols
            ));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[(a, col)].norm().total_cmp(&lu[(b, col)].norm()))
                .unwrap();
            if lu[(pivot, col)].norm() == 0.0 {
                return Err(Error::IllConditioned {
                    condition: f64::INFINITY,
                });
            }
            if pivot != col {
                for c in 0..n {
                    lu.data.swap(pivot * n + c, col * n + c);
                }
                perm.swap(pivot, col);
            }
            let d = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / d;
                lu[(r, col)] = factor;
                for c in col + 1..n {
                    let u = lu[(col, c)];
                    lu[(r, c)] -= factor * u;
                }
            }
        }
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            // Solve L U x = P e_j.
            let mut x: Vec<Complex64> = (0..n)
                .map(|i| {
                    if perm[i] == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            for i in 0..n {
                for l in 0..i {
                    let t = lu[(i, l)] * x[l];
                    x[i] -= t;
                }
            }
            for i in (0..n).rev() {
                for l in i + 1..n {
                    let t = lu[(i, l)] * x[l];
                    x[i] -= t;
                }
                x[i] /= lu[(i, i)];
            }
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        let condition = self.norm1() * inv.norm1();
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        Ok((inv, condition))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// JSON layout: `{rows, cols, re: [...], im: [...]}` with row-major parts.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re).collect(),
            im: self.data.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.re.len() != repr.im.len() {
            return Err(serde::de::Error::custom("re and im lengths differ"));
        }
        let data = repr
            .re
            .into_iter()
            .zip(repr.im)
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::from_row_major(repr.rows, repr.cols, data).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_and_adjoint() {
        let a = ComplexMatrix::from_row_major(
            2,
            2,
            vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 0.5)],
        )
        .unwrap();
        let g = a.adjoint().mul(&a);
        assert!(g.max_abs_diff(&a.gram_cols()) < 1e-14);
        assert!(g.hermitian_defect() < 1e-14);
        assert!(a.mul(&a.adjoint()).max_abs_diff(&a.gram_rows()) < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let a = ComplexMatrix::from_row_major(
            3,
            3,
            vec![
                c(0.0, 0.0),
                c(2.0, 1.0),
                c(1.0, 0.0),
                c(1.0, -1.0),
                c(0.5, 0.0),
                c(0.0, 2.0),
                c(3.0, 0.0),
                c(0.0, 0.0),
                c(1.0, 1.0),
            ],
        )
        .unwrap();
        let (inv, cond) = a.inverse().unwrap();
        assert!(cond >= 1.0);
        assert!(a.mul(&inv).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-13);
        assert!(inv.mul(&a).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-13);
    }

    #[test]
    fn singular_is_rejected() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]).unwrap();
        assert!(matches!(a.inverse(), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(ComplexMatrix::from_real(2, 2, &[1.0]).is_err());
        assert!(ComplexMatrix::from_real(1, 1, &[f64::NAN]).is_err());
        let a = ComplexMatrix::identity(2);
        assert!(a.select_rows(&[2]).is_err());
    }

    #[test]
    fn json_layout() {
        let a = ComplexMatrix::from_row_major(1, 2, vec![c(1.0, 2.0), c(3.0, -4.0)]).unwrap();
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["rows"], 1);
        assert_eq!(v["cols"], 2);
        assert_eq!(v["re"], serde_json::json!([1.0, 3.0]));
        assert_eq!(v["im"], serde_json::json!([2.0, -4.0]));
        let back: ComplexMatrix = serde_json::from_value(v).unwrap();
        assert_eq!(back, a);
    }
}
