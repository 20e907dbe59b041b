//! Subframe selection, Gram spectra, the Vandermonde determinant formula and
//! numerical certificates for the extreme-eigenvalue bounds of DFT subframes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dft::{generator, FrameSpec, GeneratorSet};
use crate::eigen::hermitian_eigenvalues_raw;
use crate::error::{invalid, Error, Result};
use crate::index_set::IndexSet;
use crate::matrix::ComplexMatrix;

/// Eigenvalues below `RANK_RTOL·λ_max` count as zero.
pub const RANK_RTOL: f64 = 1e-8;
/// Most negative eigenvalue (scaled by `max(1, λ_max)`) accepted as round-off.
pub const PSD_TOL: f64 = 1e-10;
/// Slack allowed on non-strict inequalities.
pub const BOUND_SLACK: f64 = 1e-9;
/// Tolerance on equalities (trace, eigenvalue multiplicities, pairing).
pub const EQUALITY_TOL: f64 = 1e-8;
/// Margin a strict inequality must clear.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Descending eigenvalues of a positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub sum: f64,
    /// Σ 1/λᵢ over eigenvalues above the rank tolerance.
    pub sum_reciprocal: f64,
    /// Π λᵢ over all eigenvalues.
    pub product: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub rank_tolerance: f64,
}

impl Spectrum {
    /// Sorts descending and clamps round-off negatives to zero.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return invalid("empty spectrum");
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return invalid("spectrum contains non-finite values");
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let lambda_max = eigenvalues[0].max(0.0);
        let floor = -PSD_TOL * lambda_max.max(1.0);
        if let Some(&neg) = eigenvalues.iter().find(|&&v| v < floor) {
            return invalid(format!(
                "matrix is not positive semidefinite (eigenvalue {neg:.3e})"
            ));
        }
        for v in &mut eigenvalues {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let rank_tolerance = RANK_RTOL * lambda_max;
        let sum = eigenvalues.iter().sum();
        let sum_reciprocal = eigenvalues
            .iter()
            .filter(|&&v| v > rank_tolerance)
            .map(|v| 1.0 / v)
            .sum();
        let product = eigenvalues.iter().product();
        Ok(Self {
            lambda_min: *eigenvalues.last().unwrap(),
            lambda_max,
            sum,
            sum_reciprocal,
            product,
            rank_tolerance,
            eigenvalues,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of eigenvalues at or below the rank tolerance.
    pub fn null_count(&self) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&v| v <= self.rank_tolerance)
            .count()
    }

    /// Largest absolute eigenvalue difference; spectra of different sizes
    /// compare as infinitely far apart.
    pub fn max_diff(&self, other: &Spectrum) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        self.eigenvalues
            .iter()
            .zip(&other.eigenvalues)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of a positive semidefinite Hermitian matrix as a [`Spectrum`].
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Spectrum> {
    Spectrum::from_eigenvalues(hermitian_eigenvalues_raw(m)?)
}

/// Rows of `G` picked by a 1-based index set.
pub fn subframe(gs: &GeneratorSet, rows: &IndexSet) -> Result<ComplexMatrix> {
    if rows.n() != gs.n() {
        return invalid(format!(
            "index set is for n={} but the frame has n={}",
            rows.n(),
            gs.n()
        ));
    }
    gs.g.select_rows(&rows.zero_based())
}

/// Spectrum of `G_p·G_pᴴ` (p×p).
pub fn gram_spectrum(gs: &GeneratorSet, rows: &IndexSet) -> Result<Spectrum> {
    hermitian_eigenvalues(&subframe(gs, rows)?.gram_rows())
}

/// Spectrum of `G_pᴴ·G_p` (k×k), the frame operator of the subframe.
pub fn frame_operator_spectrum(gs: &GeneratorSet, rows: &IndexSet) -> Result<Spectrum> {
    hermitian_eigenvalues(&subframe(gs, rows)?.gram_cols())
}

/// `det(V_k·V_kᴴ) = k^{-k}·Π_{p<q} 4·sin²(π(q−p)/n)` over the selected rows,
/// evaluated in log space.
///
/// Valid when the spectral support of the frame is a single cyclic run
/// (BCH codes); other supports are rejected.
pub fn det_gram_product_formula(spec: &FrameSpec, rows: &IndexSet) -> Result<f64> {
    let (n, k) = (spec.n(), spec.k());
    if rows.n() != n {
        return invalid(format!(
            "index set is for n={} but the frame has n={n}",
            rows.n()
        ));
    }
    if rows.len() != k {
        return invalid(format!(
            "determinant formula needs exactly k={k} rows, got {}",
            rows.len()
        ));
    }
    if !spec.has_consecutive_support() {
        return Err(Error::UnsupportedCode(
            "determinant formula needs a cyclically consecutive spectral support".into(),
        ));
    }
    let idx = rows.indices();
    let mut log_det = -(k as f64) * (k as f64).ln();
    for (a, &p) in idx.iter().enumerate() {
        for &q in &idx[a + 1..] {
            let s = (PI * (q - p) as f64 / n as f64).sin();
            log_det += (4.0 * s * s).ln();
        }
    }
    Ok(log_det.exp())
}

/// `|Π_{r=1}^{n−1} sin²(πr/n)^{n−r} · 2^{n(n−1)}/nⁿ − 1|`, computed in log space.
pub fn sine_product_identity_residual(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let nf = n as f64;
    let lhs: f64 = (1..n)
        .map(|r| (n - r) as f64 * (PI * r as f64 / nf).sin().powi(2).ln())
        .sum();
    let rhs = nf * nf.ln() - nf * (nf - 1.0) * std::f64::consts::LN_2;
    ((lhs - rhs).exp() - 1.0).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    /// λ_min ≤ 1 ≤ λ_max for `G_p·G_pᴴ`, any p.
    UnitStraddle,
    /// Σλᵢ = p (unit diagonal).
    TraceEqualsRows,
    /// p > k: λ₁(G_pᴴG_p) ≥ p/k.
    TallLargest,
    /// p > k: `G_p·G_pᴴ` has exactly p − k zero eigenvalues.
    TallRank,
    /// p < k: λ_min(G_pᴴG_p) ≤ p/k.
    ShortSmallest,
    /// p = k, k ∤ n: λ_min < 1 < λ_max strictly.
    StrictStraddle,
    /// p = k, k < n < 2k: the 2k − n largest eigenvalues equal n/k.
    TopMultiplicity,
    /// p = k, n = 2k, successive or every-other rows: λⱼ + λ_{k−j+1} = 2.
    Pairing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub value: f64,
}

fn w(label: &str, value: f64) -> Witness {
    Witness {
        label: label.to_string(),
        value,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: Bound,
    pub predicate: String,
    pub holds: bool,
    pub witness: Vec<Witness>,
}

fn report(bound: Bound, predicate: &str, holds: bool, witness: Vec<Witness>) -> BoundReport {
    BoundReport {
        bound,
        predicate: predicate.to_string(),
        holds,
        witness,
    }
}

/// Builds the generator for `spec` and checks every applicable bound.
pub fn verify_bounds(spec: &FrameSpec, rows: &IndexSet) -> Result<Vec<BoundReport>> {
    verify_bounds_with(&generator(spec)?, rows)
}

/// Checks every bound that applies to the subframe `rows` of `gs`.
pub fn verify_bounds_with(gs: &GeneratorSet, rows: &IndexSet) -> Result<Vec<BoundReport>> {
    verify_bounds_perturbed(gs, rows, 0.0)
}

/// Like [`verify_bounds_with`] but adds `perturbation` to every computed
/// eigenvalue first. Used to exercise the failure path of the sweeps.
#[doc(hidden)]
pub fn verify_bounds_perturbed(
    gs: &GeneratorSet,
    rows: &IndexSet,
    perturbation: f64,
) -> Result<Vec<BoundReport>> {
    let (n, k, p) = (gs.n(), gs.k(), rows.len());
    let sub = subframe(gs, rows)?;
    let shift = |mut s: Spectrum| {
        for v in &mut s.eigenvalues {
            *v += perturbation;
        }
        s.lambda_max += perturbation;
        s.lambda_min += perturbation;
        s.sum += perturbation * s.eigenvalues.len() as f64;
        s
    };
    let gram = shift(hermitian_eigenvalues(&sub.gram_rows())?);
    let frame_op = shift(hermitian_eigenvalues(&sub.gram_cols())?);
    let mut out = Vec::new();

    out.push(report(
        Bound::UnitStraddle,
        "λ_min(G_pG_pᴴ) ≤ 1 ≤ λ_max(G_pG_pᴴ)",
        gram.lambda_min <= 1.0 + BOUND_SLACK && gram.lambda_max >= 1.0 - BOUND_SLACK,
        vec![
            w("lambda_min", gram.lambda_min),
            w("lambda_max", gram.lambda_max),
        ],
    ));
    out.push(report(
        Bound::TraceEqualsRows,
        "Σλᵢ(G_pG_pᴴ) = p",
        (gram.sum - p as f64).abs() <= EQUALITY_TOL,
        vec![w("sum", gram.sum), w("p", p as f64)],
    ));

    let ratio = p as f64 / k as f64;
    if p > k {
        out.push(report(
            Bound::TallLargest,
            "λ₁(G_pᴴG_p) ≥ p/k",
            frame_op.lambda_max >= ratio - BOUND_SLACK,
            vec![w("lambda_max", frame_op.lambda_max), w("p/k", ratio)],
        ));
        let zeros = gram
            .eigenvalues
            .iter()
            .filter(|&&v| v.abs() <= RANK_RTOL * gram.lambda_max.max(1.0))
            .count();
        out.push(report(
            Bound::TallRank,
            "G_pG_pᴴ has exactly p − k zero eigenvalues",
            zeros == p - k,
            vec![
                w("zero_eigenvalues", zeros as f64),
                w("p-k", (p - k) as f64),
            ],
        ));
    } else if p < k {
        out.push(report(
            Bound::ShortSmallest,
            "λ_min(G_pᴴG_p) ≤ p/k",
            frame_op.lambda_min <= ratio + BOUND_SLACK,
            vec![w("lambda_min", frame_op.lambda_min), w("p/k", ratio)],
        ));
    } else {
        if n % k != 0 {
            out.push(report(
                Bound::StrictStraddle,
                "λ_min(G_kG_kᴴ) < 1 < λ_max(G_kG_kᴴ) when k ∤ n",
                gram.lambda_min < 1.0 - STRICT_MARGIN && gram.lambda_max > 1.0 + STRICT_MARGIN,
                vec![
                    w("lambda_min", gram.lambda_min),
                    w("lambda_max", gram.lambda_max),
                ],
            ));
        }
        if k < n && n < 2 * k {
            let top = 2 * k - n;
            let target = n as f64 / k as f64;
            let dev = gram.eigenvalues[..top]
                .iter()
                .map(|v| (v - target).abs())
                .fold(0.0, f64::max);
            out.push(report(
                Bound::TopMultiplicity,
                "the 2k − n largest eigenvalues of G_kG_kᴴ equal n/k",
                dev <= EQUALITY_TOL,
                vec![
                    w("count", top as f64),
                    w("n/k", target),
                    w("max_deviation", dev),
                ],
            ));
        }
        if n == 2 * k && (is_successive(rows) || is_every_other(rows)) {
            let ev = &frame_op.eigenvalues;
            let dev = (0..k)
                .map(|j| (ev[j] + ev[k - 1 - j] - 2.0).abs())
                .fold(0.0, f64::max);
            out.push(report(
                Bound::Pairing,
                "λⱼ(G_kᴴG_k) + λ_{k−j+1}(G_kᴴG_k) = n/k = 2",
                dev <= EQUALITY_TOL,
                vec![w("max_deviation", dev)],
            ));
        }
    }
    Ok(out)
}

fn is_successive(rows: &IndexSet) -> bool {
    let n = rows.n();
    let idx = rows.indices();
    // Exactly one cyclic gap larger than one (or the full set).
    idx.len() == n
        || idx
            .iter()
            .enumerate()
            .filter(|(i, &r)| {
                let next = idx[(i + 1) % idx.len()];
                (next + n - r) % n != 1
            })
            .count()
            == 1
}

fn is_every_other(rows: &IndexSet) -> bool {
    let idx = rows.indices();
    let n = rows.n();
    2 * idx.len() == n && idx.iter().all(|&r| r % 2 == idx[0] % 2)
}
