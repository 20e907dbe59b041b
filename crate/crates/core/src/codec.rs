//! Quantized encoding and reconstruction with systematic DFT frames, and a
//! seeded Monte-Carlo estimate of the reconstruction MSE.
//!
//! Only real systematic frames are simulated: the source, the codeword and the
//! quantizer all live on the real line.

use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::index_set::IndexSet;
use crate::matrix::ComplexMatrix;
use crate::spectra::hermitian_eigenvalues;
use crate::systematic::{codeword_variance, row_variances, SystematicFrame};

/// Largest imaginary part tolerated on a frame treated as real.
pub const REAL_FRAME_TOL: f64 = 1e-9;
/// Trials per RNG stream; blocks are reduced in order.
pub const BLOCK_TRIALS: usize = 4096;
/// Saturation rate above which a report carries a warning.
pub const OVERFLOW_WARN_RATE: f64 = 0.01;

/// Uniform mid-rise quantizer with `levels` cells of width `step`, centred on
/// zero and saturating outside `[−levels·step/2, levels·step/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub step: f64,
    pub levels: usize,
}

impl Quantizer {
    pub fn new(step: f64, levels: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return invalid(format!("quantizer step must be positive, got {step}"));
        }
        if levels == 0 {
            return invalid("quantizer needs at least one level");
        }
        Ok(Self { step, levels })
    }

    /// Half-width of the unsaturated range.
    pub fn range(&self) -> f64 {
        self.levels as f64 * self.step / 2.0
    }

    /// `Δ²/12`.
    pub fn noise_variance(&self) -> f64 {
        self.step * self.step / 12.0
    }

    /// Cell index in `0..levels`, clamped at the ends.
    pub fn cell(&self, v: f64) -> usize {
        let raw = (v / self.step + self.levels as f64 / 2.0).floor();
        raw.clamp(0.0, (self.levels - 1) as f64) as usize
    }

    pub fn reconstruction(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.step - self.range()
    }

    pub fn quantize(&self, v: f64) -> f64 {
        self.reconstruction(self.cell(v))
    }

    pub fn saturates(&self, v: f64) -> bool {
        v < -self.range() || v >= self.range()
    }
}

/// How the quantizer range is tied to the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "sigmas", rename_all = "snake_case")]
pub enum RangeRule {
    /// `±s·σ_y`, with σ_y² the average codeword variance.
    CodewordSigma(f64),
    /// `±s·max_r σ_{y_r}`, covering the loudest codeword row.
    PeakRowSigma(f64),
}

/// Quantizer resolution: a fixed number of levels over the range, or a fixed
/// step with as many levels as the range needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Levels(usize),
    Step(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub range: RangeRule,
    pub resolution: Resolution,
}

impl Default for QuantizerSpec {
    fn default() -> Self {
        Self {
            range: RangeRule::CodewordSigma(4.0),
            resolution: Resolution::Levels(64),
        }
    }
}

impl QuantizerSpec {
    pub fn build(&self, f: &SystematicFrame, sigma_x: f64) -> Result<Quantizer> {
        let half = match self.range {
            RangeRule::CodewordSigma(s) => s * codeword_variance(f, sigma_x)?.sqrt(),
            RangeRule::PeakRowSigma(s) => {
                s * row_variances(f, sigma_x)
                    .into_iter()
                    .fold(0.0, f64::max)
                    .sqrt()
            }
        };
        if !(half > 0.0 && half.is_finite()) {
            return invalid(format!("quantizer range must be positive, got {half}"));
        }
        match self.resolution {
            Resolution::Levels(levels) => {
                if levels == 0 {
                    return invalid("quantizer needs at least one level");
                }
                Quantizer::new(2.0 * half / levels as f64, levels)
            }
            Resolution::Step(step) => {
                if !(step > 0.0 && step.is_finite()) {
                    return invalid(format!("quantizer step must be positive, got {step}"));
                }
                // Even level count keeps zero on a cell boundary.
                let levels = (2.0 * half / step).ceil() as usize;
                Quantizer::new(step, levels + levels % 2)
            }
        }
    }
}

/// How many channel errors hit each codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCountModel {
    /// Exactly ν errors (ν must be an integer).
    #[default]
    Fixed,
    /// Poisson(ν) errors, capped at n.
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    QuantizeOnly,
    QuantizePlusError {
        /// Mean number of corrupted codeword samples.
        nu: f64,
        /// `σ_e²/σ_q²`.
        error_to_noise: f64,
        #[serde(default)]
        count: ErrorCountModel,
    },
    QuantizePlusErasure {
        /// 1-based codeword positions that are lost.
        erased: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub quantizer: Quantizer,
    pub sigma_x: f64,
    /// Model noise variance `Δ²/12`.
    pub sigma_q2: f64,
    pub empirical_mse: f64,
    pub mse_std_error: f64,
    pub predicted_mse: f64,
    pub ratio: f64,
    pub empirical_codeword_variance: f64,
    pub predicted_codeword_variance: f64,
    pub overflow_rate: f64,
    /// MSE after consistent refinement of the surviving systematic samples.
    pub refined_mse: f64,
    /// Mean of (refined − unrefined) per-trial squared error.
    pub refine_delta: f64,
    pub refine_delta_std_error: f64,
    pub warnings: Vec<String>,
}

fn real_frame(f: &SystematicFrame) -> Result<Vec<f64>> {
    if !f.is_real(REAL_FRAME_TOL) {
        return invalid("the codec simulates real systematic frames only (odd k)");
    }
    Ok(f.g_sys.real_values())
}

fn mat_vec(m: &[f64], rows: usize, cols: usize, v: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| {
            m[r * cols..(r + 1) * cols]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// `y = G_sys·x`.
pub fn encode(f: &SystematicFrame, x: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (f.n(), f.k());
    if x.len() != k {
        return invalid(format!("message has length {}, expected k={k}", x.len()));
    }
    let g = real_frame(f)?;
    let mut y = mat_vec(&g, n, k, x);
    // The systematic rows are the identity up to round-off; copy x exactly.
    for (i, r) in f.rows.zero_based().into_iter().enumerate() {
        y[r] = x[i];
    }
    Ok(y)
}

/// Closed-form pseudoinverse `(k/n)·G_k·Gᴴ` with `G = G_sys·G_k`.
pub fn pseudoinverse_closed_form(f: &SystematicFrame) -> ComplexMatrix {
    let g = f.g_sys.mul(&f.g_k);
    f.g_k.mul(&g.adjoint()).scale(f.k() as f64 / f.n() as f64)
}

/// Generic left inverse `(Fᴴ·F)⁻¹·Fᴴ`.
pub fn pseudoinverse_generic(frame: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (inv, _) = frame.gram_cols().inverse()?;
    Ok(inv.mul(&frame.adjoint()))
}

/// `x̂ = G_sys†·ŷ` using the closed-form pseudoinverse.
pub fn linear_reconstruct(f: &SystematicFrame, y_hat: &[f64]) -> Result<Vec<f64>> {
    let (n, k) = (f.n(), f.k());
    if y_hat.len() != n {
        return invalid(format!(
            "codeword has length {}, expected n={n}",
            y_hat.len()
        ));
    }
    real_frame(f)?;
    let p = pseudoinverse_closed_form(f).real_values();
    Ok(mat_vec(&p, k, n, y_hat))
}

/// Rows of `G_sys` kept by `surviving`, with their pseudoinverse and the
/// eigenvalues μᵢ of `Fᴴ·F`.
#[derive(Debug, Clone)]
pub struct ErasureDecoder {
    pub surviving: IndexSet,
    pinv: Vec<f64>,
    pub mu: Vec<f64>,
}

impl ErasureDecoder {
    pub fn new(f: &SystematicFrame, surviving: &IndexSet) -> Result<Self> {
        let k = f.k();
        if surviving.n() != f.n() {
            return invalid(format!(
                "surviving set is for n={} but the frame has n={}",
                surviving.n(),
                f.n()
            ));
        }
        if surviving.len() < k {
            return Err(Error::InsufficientData {
                surviving: surviving.len(),
                required: k,
            });
        }
        real_frame(f)?;
        let frame = f.g_sys.select_rows(&surviving.zero_based())?;
        let mu = hermitian_eigenvalues(&frame.gram_cols())?.eigenvalues;
        let pinv = pseudoinverse_generic(&frame)?.real_values();
        Ok(Self {
            surviving: surviving.clone(),
            pinv,
            mu,
        })
    }

    /// `(σ_q²/k)·Σ 1/μᵢ`.
    pub fn predicted_mse(&self, sigma_q2: f64) -> f64 {
        sigma_q2 * self.mu.iter().map(|m| 1.0 / m).sum::<f64>() / self.mu.len() as f64
    }

    pub fn reconstruct(&self, y_surviving: &[f64]) -> Result<Vec<f64>> {
        let s = self.surviving.len();
        if y_surviving.len() != s {
            return invalid(format!(
                "got {} surviving samples, expected {s}",
                y_surviving.len()
            ));
        }
        Ok(mat_vec(&self.pinv, self.mu.len(), s, y_surviving))
    }
}

/// `x̂ = F†·ŷ_R` where F holds the surviving rows of `G_sys`.
pub fn erasure_reconstruct(
    f: &SystematicFrame,
    y_hat_surviving: &[f64],
    surviving: &IndexSet,
) -> Result<Vec<f64>> {
    ErasureDecoder::new(f, surviving)?.reconstruct(y_hat_surviving)
}

/// Moves every `x̂ᵢ` whose cell differs from that of the received systematic
/// sample `ŷᵢ` to the near edge of `ŷᵢ`'s cell:
/// `Q(ŷᵢ) − sign(Q(ŷᵢ) − x̂ᵢ)·Δ/2`, kept just inside the cell.
pub fn consistent_refine(
    x_hat: &[f64],
    y_hat_systematic: &[f64],
    q: &Quantizer,
) -> Result<Vec<f64>> {
    if x_hat.len() != y_hat_systematic.len() {
        return invalid(format!(
            "estimate has length {} but {} systematic samples were given",
            x_hat.len(),
            y_hat_systematic.len()
        ));
    }
    Ok(x_hat
        .iter()
        .zip(y_hat_systematic)
        .map(|(&x, &y)| refine_one(x, y, q))
        .collect())
}

fn refine_one(x: f64, y: f64, q: &Quantizer) -> f64 {
    let cell = q.cell(y);
    if q.cell(x) == cell {
        return x;
    }
    let centre = q.reconstruction(cell);
    let inset = q.step * 1e-9;
    let edge = if x > centre {
        centre + q.step / 2.0 - inset
    } else {
        centre - q.step / 2.0 + inset
    };
    if q.cell(edge) == cell {
        edge
    } else {
        centre
    }
}

/// Everything a trial needs that does not depend on the random draws.
struct Plan {
    n: usize,
    k: usize,
    g: Vec<f64>,
    systematic: Vec<usize>,
    quantizer: Quantizer,
    sigma_x: f64,
    noise: Noise,
}

enum Noise {
    None {
        pinv: Vec<f64>,
    },
    Errors {
        pinv: Vec<f64>,
        nu: f64,
        sigma_e: f64,
        count: ErrorCountModel,
    },
    Erasure {
        decoder: ErasureDecoder,
        kept: Vec<usize>,
    },
}

/// Per-trial outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    /// `‖x̂ − x‖²/k`.
    pub sq_error: f64,
    /// Same after consistent refinement.
    pub refined_sq_error: f64,
    /// `‖y‖²/n`.
    pub codeword_power: f64,
    pub overflows: usize,
}

impl Plan {
    fn trial(&self, rng: &mut ChaCha8Rng) -> TrialResult {
        let (n, k) = (self.n, self.k);
        let x: Vec<f64> = (0..k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma_x * z
            })
            .collect();
        let mut y = mat_vec(&self.g, n, k, &x);
        for (i, &r) in self.systematic.iter().enumerate() {
            y[r] = x[i];
        }
        let codeword_power = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let overflows = y.iter().filter(|&&v| self.quantizer.saturates(v)).count();
        let mut y_hat: Vec<f64> = y.iter().map(|&v| self.quantizer.quantize(v)).collect();

        let (x_hat, received_sys): (Vec<f64>, Vec<(usize, f64)>) = match &self.noise {
            Noise::None { pinv } => (
                mat_vec(pinv, k, n, &y_hat),
                self.systematic
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| (i, y_hat[r]))
                    .collect(),
            ),
            Noise::Errors {
                pinv,
                nu,
                sigma_e,
                count,
            } => {
                let m = match count {
                    ErrorCountModel::Fixed => *nu as usize,
                    ErrorCountModel::Poisson => {
                        let draw: f64 = Poisson::new(*nu).map(|p| p.sample(rng)).unwrap_or(0.0);
                        (draw as usize).min(n)
                    }
                };
                let normal = Normal::new(0.0, *sigma_e).expect("finite error deviation");
                for pos in sample(rng, n, m).into_iter() {
                    y_hat[pos] += normal.sample(rng);
                }
                (
                    mat_vec(pinv, k, n, &y_hat),
                    self.systematic
                        .iter()
                        .enumerate()
                        .map(|(i, &r)| (i, y_hat[r]))
                        .collect(),
                )
            }
            Noise::Erasure { decoder, kept } => {
                let y_s: Vec<f64> = kept.iter().map(|&r| y_hat[r]).collect();
                let x_hat = decoder.reconstruct(&y_s).expect("surviving length checked");
                let received = self
                    .systematic
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| kept.binary_search(r).is_ok())
                    .map(|(i, &r)| (i, y_hat[r]))
                    .collect();
                (x_hat, received)
            }
        };

        let mut refined = x_hat.clone();
        for (i, y_sys) in received_sys {
            refined[i] = refine_one(x_hat[i], y_sys, &self.quantizer);
        }
        let err =
            |v: &[f64]| v.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / k as f64;
        TrialResult {
            sq_error: err(&x_hat),
            refined_sq_error: err(&refined),
            codeword_power,
            overflows,
        }
    }
}

fn build_plan(
    f: &SystematicFrame,
    scenario: &Scenario,
    quantizer: Quantizer,
    sigma_x: f64,
) -> Result<(Plan, f64)> {
    if !(sigma_x > 0.0 && sigma_x.is_finite()) {
        return invalid(format!("sigma_x must be positive, got {sigma_x}"));
    }
    let (n, k) = (f.n(), f.k());
    let g = real_frame(f)?;
    let sigma_q2 = quantizer.noise_variance();
    let closed = || pseudoinverse_closed_form(f).real_values();
    let (noise, predicted) = match scenario {
        Scenario::QuantizeOnly => (
            Noise::None { pinv: closed() },
            k as f64 / n as f64 * sigma_q2,
        ),
        Scenario::QuantizePlusError {
            nu,
            error_to_noise,
            count,
        } => {
            if !(*nu >= 0.0 && nu.is_finite()) || *nu > n as f64 {
                return invalid(format!("nu must lie in [0, n], got {nu}"));
            }
            if *count == ErrorCountModel::Fixed && nu.fract() != 0.0 {
                return invalid(format!("a fixed error count needs an integer nu, got {nu}"));
            }
            if !(*error_to_noise >= 0.0 && error_to_noise.is_finite()) {
                return invalid(format!(
                    "error_to_noise must be non-negative, got {error_to_noise}"
                ));
            }
            let sigma_e2 = error_to_noise * sigma_q2;
            let predicted = k as f64 / n as f64 * (sigma_q2 + nu * sigma_e2 / n as f64);
            (
                Noise::Errors {
                    pinv: closed(),
                    nu: *nu,
                    sigma_e: sigma_e2.sqrt(),
                    count: *count,
                },
                predicted,
            )
        }
        Scenario::QuantizePlusErasure { erased } => {
            let kept: Vec<usize> = (1..=n).filter(|r| !erased.contains(r)).collect();
            if erased.iter().any(|&r| r == 0 || r > n) {
                return invalid(format!("erased positions must lie in [1, {n}]"));
            }
            if kept.len() < k {
                return Err(Error::InsufficientData {
                    surviving: kept.len(),
                    required: k,
                });
            }
            let surviving = IndexSet::new(n, kept)?;
            let decoder = ErasureDecoder::new(f, &surviving)?;
            let predicted = decoder.predicted_mse(sigma_q2);
            (
                Noise::Erasure {
                    kept: surviving.zero_based(),
                    decoder,
                },
                predicted,
            )
        }
    };
    Ok((
        Plan {
            n,
            k,
            g,
            systematic: f.rows.zero_based(),
            quantizer,
            sigma_x,
            noise,
        },
        predicted,
    ))
}

/// Per-trial results in trial order. Trials are grouped in blocks of
/// [`BLOCK_TRIALS`]; block `b` draws from ChaCha8 seeded with `seed` on
/// stream `b`, so the output does not depend on the thread count.
pub fn run_trials(
    f: &SystematicFrame,
    scenario: &Scenario,
    quantizer: Quantizer,
    sigma_x: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let (plan, _) = build_plan(f, scenario, quantizer, sigma_x)?;
    Ok(run_plan(&plan, trials, seed))
}

fn run_plan(plan: &Plan, trials: usize, seed: u64) -> Vec<TrialResult> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let per_block: Vec<Vec<TrialResult>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            (0..len).map(|_| plan.trial(&mut rng)).collect()
        })
        .collect();
    per_block.into_iter().flatten().collect()
}

/// Sample mean and its standard error.
pub fn mean_and_std_error(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
    (mean, (var / count as f64).sqrt())
}

pub fn run_simulation(
    f: &SystematicFrame,
    scenario: &Scenario,
    quantizer: Quantizer,
    sigma_x: f64,
    trials: usize,
    seed: u64,
) -> Result<SimReport> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let (plan, predicted_mse) = build_plan(f, scenario, quantizer, sigma_x)?;
    let results = run_plan(&plan, trials, seed);
    let (empirical_mse, mse_std_error) = mean_and_std_error(results.iter().map(|r| r.sq_error));
    let (refined_mse, _) = mean_and_std_error(results.iter().map(|r| r.refined_sq_error));
    let (refine_delta, refine_delta_std_error) =
        mean_and_std_error(results.iter().map(|r| r.refined_sq_error - r.sq_error));
    let empirical_codeword_variance =
        results.iter().map(|r| r.codeword_power).sum::<f64>() / trials as f64;
    let overflows: usize = results.iter().map(|r| r.overflows).sum();
    let overflow_rate = overflows as f64 / (trials * f.n()) as f64;
    let mut warnings = Vec::new();
    if overflow_rate > OVERFLOW_WARN_RATE {
        warnings.push(format!(
            "quantizer saturated on {:.2}% of codeword samples; the noise model assumes full range coverage",
            100.0 * overflow_rate
        ));
    }
    Ok(SimReport {
        trials,
        seed,
        scenario: scenario.clone(),
        quantizer,
        sigma_x,
        sigma_q2: quantizer.noise_variance(),
        empirical_mse,
        mse_std_error,
        predicted_mse,
        ratio: empirical_mse / predicted_mse,
        empirical_codeword_variance,
        predicted_codeword_variance: codeword_variance(f, sigma_x)?,
        overflow_rate,
        refined_mse,
        refine_delta,
        refine_delta_std_error,
        warnings,
    })
}

fn default_sigma_x() -> f64 {
    1.0
}

fn default_trials() -> usize {
    200_000
}

fn default_scenario() -> Scenario {
    Scenario::QuantizeOnly
}

/// Simulation settings, loadable from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub k: usize,
    /// 1-based systematic rows; the optimal placement when absent.
    #[serde(default)]
    pub rows: Option<Vec<usize>>,
    #[serde(default = "default_sigma_x")]
    pub sigma_x: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub quantizer: QuantizerSpec,
    #[serde(default = "default_scenario")]
    pub scenario: Scenario,
}

impl SimConfig {
    /// Reads a `.json` file as JSON and anything else as TOML.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
        }
    }
}
