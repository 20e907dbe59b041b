//! Systematic frames `G_sys = G·G_k⁻¹`, their variance objective, and the
//! optimal / worst placements of the systematic rows.

use serde::{Deserialize, Serialize};

use crate::coset::{reversal, shift};
use crate::dft::{FrameSpec, GeneratorSet};
use crate::error::{invalid, Error, Result};
use crate::index_set::IndexSet;
use crate::matrix::{ComplexMatrix, MAX_CONDITION};
use crate::spectra::{hermitian_eigenvalues, subframe, Spectrum};

/// `‖G_k·G_k⁻¹ − I‖_max` must stay below this.
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-8;
/// Relative eigenvalue spread below which a frame counts as tight.
pub const TIGHT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystematicFrame {
    pub spec: FrameSpec,
    /// 1-based rows where `G_sys` equals `I_k`.
    pub rows: IndexSet,
    /// n×k systematic generator.
    pub g_sys: ComplexMatrix,
    /// The k×k square subframe `G_k` of the underlying generator.
    pub g_k: ComplexMatrix,
    /// Spectrum of `G_k·G_kᴴ`.
    pub spectrum: Spectrum,
    /// Spectrum of `G_sysᴴ·G_sys`.
    pub frame_spectrum: Spectrum,
    /// `tr(G_sysᴴ·G_sys) = (n/k)·Σ 1/λᵢ`.
    pub variance_factor: f64,
    /// 1-norm condition number of `G_k`.
    pub condition: f64,
    pub tight: bool,
}

impl SystematicFrame {
    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn k(&self) -> usize {
        self.spec.k()
    }

    /// True when every entry of `G_sys` is real within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.g_sys.max_imag() <= tol
    }
}

pub fn systematic_frame(gs: &GeneratorSet, rows: &IndexSet) -> Result<SystematicFrame> {
    let k = gs.k();
    if rows.len() != k {
        return invalid(format!(
            "a systematic frame needs exactly k={k} rows, got {}",
            rows.len()
        ));
    }
    let gk = subframe(gs, rows)?;
    let (gk_inv, condition) = gk.inverse()?;
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let residual = gk.mul(&gk_inv).max_abs_diff(&ComplexMatrix::identity(k));
    if residual >= INVERSE_RESIDUAL_TOL {
        return Err(Error::IllConditioned { condition });
    }
    let g_sys = gs.g.mul(&gk_inv);
    let spectrum = hermitian_eigenvalues(&gk.gram_rows())?;
    let sys_gram = g_sys.gram_cols();
    let variance_factor = sys_gram.trace().re;
    let frame_spectrum = hermitian_eigenvalues(&sys_gram)?;
    let tight = spread(&frame_spectrum) < TIGHT_TOL;
    Ok(SystematicFrame {
        spec: gs.spec.clone(),
        rows: rows.clone(),
        g_sys,
        g_k: gk,
        spectrum,
        frame_spectrum,
        variance_factor,
        condition,
        tight,
    })
}

fn spread(s: &Spectrum) -> f64 {
    (s.lambda_max - s.lambda_min) / s.lambda_max
}

/// `(λ_max − λ_min)/λ_max < tol` on the spectrum of `G_sysᴴ·G_sys`.
pub fn is_tight(f: &SystematicFrame, tol: f64) -> bool {
    spread(&f.frame_spectrum) < tol
}

/// `σ_y² = (σ_x²/n)·tr(G_sysᴴ·G_sys)`.
pub fn codeword_variance(f: &SystematicFrame, sigma_x: f64) -> Result<f64> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return invalid(format!("sigma_x must be positive, got {sigma_x}"));
    }
    Ok(sigma_x * sigma_x * f.variance_factor / f.n() as f64)
}

/// Per-row codeword variance `σ_x²·‖row_r(G_sys)‖²`.
pub fn row_variances(f: &SystematicFrame, sigma_x: f64) -> Vec<f64> {
    (0..f.n())
        .map(|r| sigma_x * sigma_x * f.g_sys.row(r).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceProfile {
    /// Circular gaps between successive rows, starting at the first row and
    /// wrapping from the last row back to the first.
    pub gaps: Vec<usize>,
    pub d_min: usize,
}

pub fn distance_profile(rows: &IndexSet) -> DistanceProfile {
    let n = rows.n();
    let idx = rows.indices();
    let gaps: Vec<usize> = (0..idx.len())
        .map(|i| {
            let next = idx[(i + 1) % idx.len()];
            (next + n - idx[i] - 1) % n + 1
        })
        .collect();
    let d_min = *gaps.iter().min().unwrap_or(&n);
    DistanceProfile { gaps, d_min }
}

/// `min(|q − p|, n − |q − p|)`.
pub fn circular_distance(n: usize, p: usize, q: usize) -> usize {
    let d = p.abs_diff(q) % n;
    d.min(n - d)
}

/// Circular distances over all pairs, ascending.
pub fn pair_distances(rows: &IndexSet) -> Vec<usize> {
    let idx = rows.indices();
    let mut out: Vec<usize> = idx
        .iter()
        .enumerate()
        .flat_map(|(a, &p)| {
            idx[a + 1..]
                .iter()
                .map(move |&q| circular_distance(rows.n(), p, q))
        })
        .collect();
    out.sort_unstable();
    out
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return invalid(format!("need 1 <= k <= n, got n={n}, k={k}"));
    }
    Ok(())
}

/// Rows spread as evenly as possible: `⌊j·n/k⌋ + 1` for `j = 0..k`, then the
/// lexicographically smallest set in its shift/reversal orbit.
///
/// Its gaps are `n mod k` copies of `⌈n/k⌉` and the rest `⌊n/k⌋`.
pub fn optimal_index_set(n: usize, k: usize) -> Result<IndexSet> {
    check_nk(n, k)?;
    let spread = IndexSet::new(n, (0..k).map(|j| j * n / k + 1).collect())?;
    let rev = reversal(&spread);
    let best = (0..n as i64)
        .flat_map(|c| [shift(&spread, c), shift(&rev, c)])
        .min()
        .unwrap();
    Ok(best)
}

/// Circularly successive rows `{1, …, k}`.
pub fn worst_index_set(n: usize, k: usize) -> Result<IndexSet> {
    check_nk(n, k)?;
    IndexSet::contiguous(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::generator;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn frame(n: usize, k: usize, rows: &[usize]) -> SystematicFrame {
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        systematic_frame(&gs, &IndexSet::new(n, rows.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn systematic_rows_are_identity() {
        for (n, k, rows) in [
            (6, 3, vec![1, 2, 3]),
            (7, 5, vec![1, 2, 4, 5, 7]),
            (9, 4, vec![2, 5, 7, 8]),
        ] {
            let f = frame(n, k, &rows);
            let gk = f.g_sys.select_rows(&f.rows.zero_based()).unwrap();
            assert!(gk.max_abs_diff(&ComplexMatrix::identity(k)) < 1e-9);
        }
    }

    #[test]
    fn square_frame_is_identity() {
        let f = frame(5, 5, &[1, 2, 3, 4, 5]);
        assert!(f.g_sys.max_abs_diff(&ComplexMatrix::identity(5)) < 1e-9);
    }

    #[test]
    fn tight_and_contiguous_6_3() {
        let f = frame(6, 3, &[1, 3, 5]);
        let two_i = ComplexMatrix::identity(3).scale(2.0);
        assert!(f.g_sys.gram_cols().max_abs_diff(&two_i) < 1e-8);
        assert!(is_tight(&f, 1e-9) && f.tight);
        assert!((codeword_variance(&f, 1.0).unwrap() - 1.0).abs() < 1e-9);

        let f = frame(6, 3, &[1, 2, 3]);
        assert!((f.variance_factor - 38.0).abs() < 1e-3);
        assert!((codeword_variance(&f, 1.0).unwrap() - 38.0 / 6.0).abs() < 1e-3);
        assert!(!is_tight(&f, 1e-6));
        assert!(codeword_variance(&f, 0.0).is_err());
    }

    #[test]
    fn tightness_examples() {
        assert!(is_tight(&frame(10, 5, &[1, 3, 5, 7, 9]), 1e-9));
        assert!(!is_tight(&frame(7, 5, &[1, 2, 4, 5, 7]), 1e-6));
    }

    #[test]
    fn frame_spectrum_inverts_gram_spectrum() {
        let f = frame(7, 3, &[1, 2, 5]);
        let ratio = 7.0 / 3.0;
        for i in 0..3 {
            let expect = ratio / f.spectrum.eigenvalues[2 - i];
            assert!((f.frame_spectrum.eigenvalues[i] - expect).abs() < 1e-8);
        }
        assert!((f.variance_factor - ratio * f.spectrum.sum_reciprocal).abs() < 1e-8);
        assert!(f.variance_factor >= 7.0);
    }

    #[test]
    fn wrong_row_count_is_rejected() {
        let gs = generator(&FrameSpec::bch(6, 3).unwrap()).unwrap();
        assert!(systematic_frame(&gs, &IndexSet::new(6, vec![1, 2]).unwrap()).is_err());
    }

    #[test]
    fn distance_profiles() {
        let p = distance_profile(&IndexSet::new(6, vec![1, 2, 3]).unwrap());
        assert_eq!((p.gaps, p.d_min), (vec![1, 1, 4], 1));
        let p = distance_profile(&IndexSet::new(6, vec![1, 3, 5]).unwrap());
        assert_eq!((p.gaps, p.d_min), (vec![2, 2, 2], 2));
        let p = distance_profile(&IndexSet::new(7, vec![1, 2, 4, 5, 7]).unwrap());
        assert_eq!((p.gaps, p.d_min), (vec![1, 2, 1, 2, 1], 1));
        let p = distance_profile(&IndexSet::new(5, vec![3]).unwrap());
        assert_eq!((p.gaps, p.d_min), (vec![5], 5));
    }

    #[test]
    fn pairwise_distances_of_7_3_leaders() {
        let d = |v: &[usize]| pair_distances(&IndexSet::new(7, v.to_vec()).unwrap());
        assert_eq!(d(&[1, 2, 3]), vec![1, 1, 2]);
        assert_eq!(d(&[1, 2, 4]), vec![1, 2, 3]);
        assert_eq!(d(&[1, 3, 5]), vec![2, 2, 3]);
    }

    #[test]
    fn optimal_and_worst_examples() {
        assert_eq!(
            optimal_index_set(10, 5).unwrap().indices(),
            &[1, 3, 5, 7, 9]
        );
        assert_eq!(optimal_index_set(6, 3).unwrap().indices(), &[1, 3, 5]);
        let o = optimal_index_set(7, 5).unwrap();
        let mut gaps = distance_profile(&o).gaps;
        gaps.sort_unstable();
        assert_eq!(gaps, vec![1, 1, 1, 2, 2]);
        assert_eq!(o.indices()[0], 1);
        assert_eq!(worst_index_set(10, 5).unwrap().indices(), &[1, 2, 3, 4, 5]);
        assert!(optimal_index_set(3, 4).is_err());
        assert!(worst_index_set(3, 0).is_err());
    }

    #[test]
    fn optimal_gap_multiset() {
        for n in 1..=20 {
            for k in 1..=n {
                let o = optimal_index_set(n, k).unwrap();
                let gaps = distance_profile(&o).gaps;
                let l = n - (n / k) * k;
                let hi = gaps.iter().filter(|&&g| g == n.div_ceil(k)).count();
                let lo = gaps.iter().filter(|&&g| g == n / k).count();
                if l == 0 {
                    assert_eq!(lo, k);
                } else {
                    assert_eq!((hi, lo), (l, k - l), "n={n} k={k}");
                }
                assert_eq!(distance_profile(&o).d_min, n / k);
            }
        }
    }

    #[test]
    fn worst_case_spectra() {
        let f = frame(10, 5, &[1, 2, 3, 4, 5]);
        assert!((f.spectrum.sum_reciprocal - 908.21).abs() < 0.01);
        let f = frame(6, 3, &[1, 2, 3]);
        assert!((f.spectrum.product - 0.1111).abs() < 1e-4);
        let f = frame(7, 3, &[1, 2, 3]);
        for (got, want) in f.spectrum.eigenvalues.iter().zip([2.1558, 0.8150, 0.0292]) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn monte_carlo_codeword_variance() {
        // Independent route: sample variance of G_sys·x for unit-variance x.
        let f = frame(10, 5, &[1, 2, 4, 6, 8]);
        assert!(f.is_real(1e-9));
        let g = f.g_sys.real_values();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let x: Vec<f64> = (0..5).map(|_| StandardNormal.sample(&mut rng)).collect();
            for r in 0..10 {
                let y: f64 = (0..5).map(|c| g[r * 5 + c] * x[c]).sum();
                acc += y * y;
            }
        }
        let empirical = acc / (draws * 10) as f64;
        let predicted = codeword_variance(&f, 1.0).unwrap();
        assert!(
            (empirical / predicted - 1.0).abs() < 0.02,
            "{empirical} vs {predicted}"
        );
    }
}
