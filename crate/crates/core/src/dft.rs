//! DFT matrices, the Σ selector, and generator/parity-check construction for
//! real and complex BCH-DFT codes and general DFT frames.
//!
//! Conventions:
//! - `W_n[r][s] = e^{-j2πrs/n}/√n` (forward unitary transform), so `W_nᴴ`
//!   is the synthesis direction and `G = √(n/k)·W_nᴴ·Σ·W_k`.
//! - Row indices are 0-based internally; [`gramian_entry`] takes the 1-based
//!   indices used by the tables.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::matrix::ComplexMatrix;

/// Imaginary residue allowed on a real BCH generator before it is truncated.
pub const REAL_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `G = √(n/k)·W_nᴴ·Σ·W_k` with the real-code block sizes α, β.
    RealBch,
    /// `G = √(n/k)·W_nᴴ·Σ` with cyclically adjacent zero rows anywhere.
    ComplexBch,
    /// `G = √(n/k)·W_nᴴ·Σ` with arbitrary zero rows.
    GeneralDft,
}

impl Variant {
    pub fn is_bch(self) -> bool {
        matches!(self, Variant::RealBch | Variant::ComplexBch)
    }
}

/// Parameters of an (n, k) DFT frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    n: usize,
    k: usize,
    variant: Variant,
    /// 0-based zero rows of Σ, ascending.
    zero_rows: Vec<usize>,
}

/// `α = ⌈n/2⌉ − ⌊(n−k)/2⌋`, the size of the leading identity block of Σ for
/// real BCH-DFT codes.
pub fn real_alpha(n: usize, k: usize) -> usize {
    n.div_ceil(2) - (n - k) / 2
}

fn is_circularly_consecutive(rows: &[usize], n: usize) -> bool {
    if rows.is_empty() || rows.len() == n {
        return true;
    }
    let mut member = vec![false; n];
    for &r in rows {
        member[r] = true;
    }
    // Exactly one run end: a member whose successor is not a member.
    rows.iter().filter(|&&r| !member[(r + 1) % n]).count() == 1
}

impl FrameSpec {
    pub fn new(n: usize, k: usize, variant: Variant, zero_rows: Vec<usize>) -> Result<Self> {
        if k == 0 || n == 0 || k > n {
            return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
        }
        let mut zero_rows = zero_rows;
        zero_rows.sort_unstable();
        if zero_rows.len() != n - k {
            return invalid(format!(
                "expected {} zero rows for ({n},{k}), got {}",
                n - k,
                zero_rows.len()
            ));
        }
        if zero_rows.windows(2).any(|w| w[0] == w[1]) {
            return invalid("zero rows must be distinct");
        }
        if let Some(&bad) = zero_rows.iter().find(|&&r| r >= n) {
            return invalid(format!("zero row {bad} out of range [0, {n})"));
        }
        if variant.is_bch() && !is_circularly_consecutive(&zero_rows, n) {
            return invalid("BCH-DFT codes need circularly consecutive zero rows");
        }
        if variant == Variant::RealBch {
            if n.is_multiple_of(2) && k.is_multiple_of(2) {
                return Err(Error::UnsupportedCode(format!(
                    "real BCH-DFT codes do not exist when n and k are both even ({n},{k})"
                )));
            }
            if k.is_multiple_of(2) {
                return Err(Error::UnsupportedCode(format!(
                    "({n},{k}): an even-size cyclically adjacent spectral support is never \
                     conjugate-symmetric for odd n, so no real generator exists"
                )));
            }
            let alpha = real_alpha(n, k);
            let expected: Vec<usize> = (alpha..alpha + n - k).collect();
            if zero_rows != expected {
                return invalid(format!(
                    "real BCH ({n},{k}) requires zero rows {expected:?} (alpha = {alpha})"
                ));
            }
        }
        Ok(Self {
            n,
            k,
            variant,
            zero_rows,
        })
    }

    pub fn real_bch(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
        }
        let alpha = real_alpha(n, k);
        Self::new(n, k, Variant::RealBch, (alpha..alpha + n - k).collect())
    }

    /// Complex BCH-DFT code whose Σ carries `I_alpha` on top and `I_{k−alpha}`
    /// at the bottom.
    pub fn complex_bch(n: usize, k: usize, alpha: usize) -> Result<Self> {
        if k == 0 || k > n || alpha > k {
            return invalid(format!(
                "need 1 <= k <= n and alpha <= k, got n={n}, k={k}, alpha={alpha}"
            ));
        }
        Self::new(n, k, Variant::ComplexBch, (alpha..alpha + n - k).collect())
    }

    pub fn general(n: usize, k: usize, zero_rows: Vec<usize>) -> Result<Self> {
        Self::new(n, k, Variant::GeneralDft, zero_rows)
    }

    /// Real BCH code when one exists (odd k), otherwise the complex BCH code
    /// with the same Σ placement. Both have the same subframe spectra.
    pub fn bch(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
        }
        if k % 2 == 1 {
            Self::real_bch(n, k)
        } else {
            Self::complex_bch(n, k, real_alpha(n, k))
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    /// Non-zero rows of Σ (the spectral support), ascending. Column `c` of Σ
    /// carries its 1 in row `support()[c]`.
    pub fn support(&self) -> Vec<usize> {
        let mut member = vec![true; self.n];
        for &z in &self.zero_rows {
            member[z] = false;
        }
        (0..self.n).filter(|&r| member[r]).collect()
    }

    /// Size of the leading identity block: support rows before the first zero row.
    pub fn alpha(&self) -> usize {
        match self.zero_rows.first() {
            Some(&z) => z,
            None => self.k,
        }
    }

    pub fn beta(&self) -> usize {
        self.k - self.alpha()
    }

    /// Whether the spectral support is one cyclic run, which is what the
    /// Vandermonde determinant formula requires.
    pub fn has_consecutive_support(&self) -> bool {
        is_circularly_consecutive(&self.support(), self.n)
    }
}

/// Generator and parity-check matrices of a DFT frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSet {
    /// n×k generator.
    pub g: ComplexMatrix,
    /// (n−k)×n parity check, `H·G = 0`.
    pub h: ComplexMatrix,
    pub spec: FrameSpec,
    pub alpha: usize,
    pub beta: usize,
}

impl GeneratorSet {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }
}

/// Unitary DFT matrix with `U[r][s] = e^{-j2πrs/n}/√n`.
pub fn dft_matrix(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return invalid("DFT size must be positive");
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, n, |r, s| {
        Complex64::from_polar(norm, -2.0 * PI * ((r * s) % n) as f64 / n as f64)
    }))
}

/// The n×k 0/1 selector Σ.
pub fn sigma_matrix(spec: &FrameSpec) -> ComplexMatrix {
    let mut sigma = ComplexMatrix::zeros(spec.n, spec.k);
    for (c, r) in spec.support().into_iter().enumerate() {
        sigma[(r, c)] = Complex64::new(1.0, 0.0);
    }
    sigma
}

pub fn generator(spec: &FrameSpec) -> Result<GeneratorSet> {
    let (n, k) = (spec.n, spec.k);
    let wn = dft_matrix(n)?;
    let sigma = sigma_matrix(spec);
    let mut g = wn.adjoint().mul(&sigma).scale((n as f64 / k as f64).sqrt());
    if spec.variant == Variant::RealBch {
        g = g.mul(&dft_matrix(k)?);
        let residue = g.max_imag();
        if residue >= REAL_RESIDUE_TOL {
            return Err(Error::Construction(format!(
                "real BCH ({n},{k}) generator has imaginary residue {residue:.3e}"
            )));
        }
        g = g.real_part();
    }
    let h = wn.select_rows(spec.zero_rows())?;
    Ok(GeneratorSet {
        g,
        h,
        alpha: spec.alpha(),
        beta: spec.beta(),
        spec: spec.clone(),
    })
}

/// Closed form of `(G·Gᴴ)[r][s]` for 1-based rows:
/// `(1/k)·Σ_m e^{jm(θ_r−θ_s)}` over the spectral support, `θ_x = 2π(x−1)/n`.
pub fn gramian_entry(spec: &FrameSpec, r: usize, s: usize) -> Result<Complex64> {
    let n = spec.n;
    if r == 0 || s == 0 || r > n || s > n {
        return invalid(format!("rows ({r},{s}) out of range [1, {n}]"));
    }
    let dtheta = 2.0 * PI * (r as f64 - s as f64) / n as f64;
    let sum: Complex64 = spec
        .support()
        .into_iter()
        .map(|m| Complex64::from_polar(1.0, m as f64 * dtheta))
        .sum();
    Ok(sum / spec.k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_small_cases() {
        assert!(dft_matrix(0).is_err());
        let w1 = dft_matrix(1).unwrap();
        assert!((w1[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let w2 = dft_matrix(2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expected = ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap();
        assert!(w2.max_abs_diff(&expected) < 1e-15);

        // Column 1 of the order-4 transform: e^{-j2πr/4}/2.
        let w4 = dft_matrix(4).unwrap();
        let col1 = [
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, 0.5),
        ];
        for (r, z) in col1.iter().enumerate() {
            assert!((w4[(r, 1)] - z).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_is_unitary() {
        for n in 1..=64 {
            let w = dft_matrix(n).unwrap();
            let err = w
                .adjoint()
                .mul(&w)
                .max_abs_diff(&ComplexMatrix::identity(n));
            assert!(err < 1e-12, "n={n}: {err}");
            let mag = 1.0 / (n as f64).sqrt();
            assert!(w.as_slice().iter().all(|z| (z.norm() - mag).abs() < 1e-14));
        }
    }

    #[test]
    fn sigma_real_5_3() {
        let spec = FrameSpec::real_bch(5, 3).unwrap();
        assert_eq!((spec.alpha(), spec.beta()), (2, 1));
        let s = sigma_matrix(&spec);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(s[(0, 0)], one);
        assert_eq!(s[(1, 1)], one);
        assert_eq!(s[(4, 2)], one);
        for c in 0..3 {
            assert_eq!(s[(2, c)].norm(), 0.0);
            assert_eq!(s[(3, c)].norm(), 0.0);
        }
    }

    #[test]
    fn sigma_identity_when_square() {
        let spec = FrameSpec::bch(4, 4).unwrap();
        assert_eq!(sigma_matrix(&spec), ComplexMatrix::identity(4));
    }

    #[test]
    fn sigma_general_placement() {
        let spec = FrameSpec::general(4, 2, vec![1, 3]).unwrap();
        let s = sigma_matrix(&spec);
        assert_eq!(s[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(s[(2, 1)], Complex64::new(1.0, 0.0));
        assert!(
            s.adjoint()
                .mul(&s)
                .max_abs_diff(&ComplexMatrix::identity(2))
                < 1e-15
        );
    }

    #[test]
    fn spec_validation() {
        assert!(FrameSpec::real_bch(4, 2).is_err());
        assert!(matches!(
            FrameSpec::real_bch(4, 2),
            Err(Error::UnsupportedCode(_))
        ));
        assert!(matches!(
            FrameSpec::real_bch(7, 4),
            Err(Error::UnsupportedCode(_))
        ));
        assert!(FrameSpec::real_bch(3, 4).is_err());
        assert!(FrameSpec::new(6, 3, Variant::ComplexBch, vec![0, 2, 4]).is_err());
        // Wrapping block is fine for complex codes.
        assert!(FrameSpec::new(6, 3, Variant::ComplexBch, vec![5, 0, 1]).is_ok());
        assert!(FrameSpec::new(6, 3, Variant::GeneralDft, vec![0, 2, 4]).is_ok());
        assert!(FrameSpec::new(6, 3, Variant::GeneralDft, vec![0, 0, 4]).is_err());
        assert!(FrameSpec::new(6, 3, Variant::GeneralDft, vec![0, 2, 6]).is_err());
        assert!(FrameSpec::new(6, 3, Variant::GeneralDft, vec![0, 2]).is_err());
        assert!(FrameSpec::new(6, 0, Variant::GeneralDft, vec![]).is_err());
        // Real code with a misplaced zero block.
        assert!(FrameSpec::new(7, 5, Variant::RealBch, vec![0, 1]).is_err());
    }

    #[test]
    fn generator_6_3_is_tight() {
        let gs = generator(&FrameSpec::real_bch(6, 3).unwrap()).unwrap();
        let frame_op = gs.g.gram_cols();
        assert!(frame_op.max_abs_diff(&ComplexMatrix::identity(3).scale(2.0)) < 1e-10);
        assert_eq!(gs.g.max_imag(), 0.0);
    }

    #[test]
    fn generator_7_3_complex_unit_diagonal() {
        let gs = generator(&FrameSpec::complex_bch(7, 3, 2).unwrap()).unwrap();
        let gram = gs.g.gram_rows();
        for i in 0..7 {
            assert!((gram[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn generator_rejects_even_even_real() {
        let err = FrameSpec::new(4, 2, Variant::RealBch, vec![1, 2]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedCode(_)));
    }

    #[test]
    fn gramian_entry_cases() {
        let spec = FrameSpec::real_bch(6, 3).unwrap();
        let gs = generator(&spec).unwrap();
        let gram = gs.g.gram_rows();
        let a14 = gramian_entry(&spec, 1, 4).unwrap();
        assert!((a14 - gram[(0, 3)]).norm() < 1e-10);
        for r in 1..=6 {
            assert!((gramian_entry(&spec, r, r).unwrap() - 1.0).norm() < 1e-14);
        }
        for r in 1..6 {
            for s in 1..6 {
                let a = gramian_entry(&spec, r, s).unwrap();
                let b = gramian_entry(&spec, r + 1, s + 1).unwrap();
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(gramian_entry(&spec, 0, 1).is_err());
        assert!(gramian_entry(&spec, 1, 7).is_err());
    }
}
