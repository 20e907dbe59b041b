//! Report documents behind the `dftframe` command line: frame analysis, the
//! two reference tables, coset catalogs and theorem sweeps, rendered as JSON,
//! CSV or plain text.

use std::fmt::Write as _;
use std::io::Write;

use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::SimReport;
use crate::coset::{binomial, count_bounds, enumerate_cosets_for, CosetCatalog, MAX_ENUMERATION_N};
use crate::dft::{generator, FrameSpec, GeneratorSet};
use crate::error::{Error, Result};
use crate::index_set::IndexSet;
use crate::spectra::{
    det_gram_product_formula, gram_spectrum, sine_product_identity_residual,
    verify_bounds_perturbed, verify_bounds_with, BoundReport, Spectrum,
};
use crate::systematic::{codeword_variance, distance_profile, is_tight, systematic_frame};

/// Formats a value for CSV: four decimals, or `{:.3e}` below 1e-3.
pub fn fmt_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn join_values(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_value(v)).join(" ")
}

fn join_usize(values: &[usize]) -> String {
    values.iter().join(" ")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub spec: FrameSpec,
    pub rows: IndexSet,
    pub pattern: String,
    /// Spectrum of `G_p·G_pᴴ` for the selected rows.
    pub spectrum: Spectrum,
    pub gaps: Vec<usize>,
    pub d_min: usize,
    /// Present when exactly k rows are selected.
    pub systematic: Option<SystematicSummary>,
    pub bounds: Vec<BoundReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystematicSummary {
    pub tight: bool,
    /// `tr(G_sysᴴ·G_sys)`.
    pub variance_factor: f64,
    /// Codeword variance for unit-variance messages.
    pub codeword_variance: f64,
    pub condition: f64,
}

pub fn analyze(spec: &FrameSpec, rows: &IndexSet, tight_tol: f64) -> Result<AnalyzeReport> {
    let gs = generator(spec)?;
    analyze_with(&gs, rows, tight_tol)
}

pub fn analyze_with(gs: &GeneratorSet, rows: &IndexSet, tight_tol: f64) -> Result<AnalyzeReport> {
    let spectrum = gram_spectrum(gs, rows)?;
    let systematic = if rows.len() == gs.k() {
        let f = systematic_frame(gs, rows)?;
        Some(SystematicSummary {
            tight: is_tight(&f, tight_tol),
            variance_factor: f.variance_factor,
            codeword_variance: codeword_variance(&f, 1.0)?,
            condition: f.condition,
        })
    } else {
        None
    };
    let profile = distance_profile(rows);
    Ok(AnalyzeReport {
        spec: gs.spec.clone(),
        rows: rows.clone(),
        pattern: rows.to_pattern(),
        spectrum,
        gaps: profile.gaps,
        d_min: profile.d_min,
        systematic,
        bounds: verify_bounds_with(gs, rows)?,
    })
}

impl AnalyzeReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let s = &self.spectrum;
        let mut out = vec![
            ("n", self.spec.n().to_string()),
            ("k", self.spec.k().to_string()),
            ("rows", self.rows.to_string()),
            ("pattern", self.pattern.clone()),
            ("eigenvalues", join_values(&s.eigenvalues)),
            ("lambda_min", fmt_value(s.lambda_min)),
            ("lambda_max", fmt_value(s.lambda_max)),
            ("sum_reciprocal", fmt_value(s.sum_reciprocal)),
            ("product", fmt_value(s.product)),
            ("gaps", join_usize(&self.gaps)),
            ("d_min", self.d_min.to_string()),
        ];
        if let Some(sys) = &self.systematic {
            out.push(("tight", sys.tight.to_string()));
            out.push(("variance_factor", fmt_value(sys.variance_factor)));
            out.push(("codeword_variance", fmt_value(sys.codeword_variance)));
        }
        for b in &self.bounds {
            out.push((
                "bound",
                format!(
                    "{:?} {}",
                    b.bound,
                    if b.holds { "holds" } else { "VIOLATED" }
                ),
            ));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["field", "value"])?;
        for (k, v) in self.fields() {
            csv.write_record([k, v.as_str()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k:<18} {v}");
        }
        out
    }
}

const TABLE1_PATTERNS: [&str; 21] = [
    "×××---",
    "××-×--",
    "××--×-",
    "×-×-×-",
    "×××××--",
    "××××-×-",
    "××-××-×",
    "×-×××-×",
    "×××××-----",
    "××××-×----",
    "××××--×---",
    "×××-×---×-",
    "×××--××---",
    "×××-×-×---",
    "×××--×--×-",
    "×××--×-×--",
    "××-××--×--",
    "××--××--×-",
    "××-×-×--×-",
    "×-×-×-×--×",
    "×-×-×-×-×-",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Row {
    pub n: usize,
    pub k: usize,
    pub pattern: String,
    pub rows: IndexSet,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sum_reciprocal: f64,
    pub product: f64,
}

/// Spectral summary of the 21 codeword patterns of the (6,3), (7,5) and
/// (10,5) frames.
pub fn table1() -> Result<Vec<Table1Row>> {
    let mut frames: Vec<GeneratorSet> = Vec::new();
    TABLE1_PATTERNS
        .iter()
        .map(|p| {
            let rows = IndexSet::from_pattern(p)?;
            let (n, k) = (rows.n(), rows.len());
            if !frames.iter().any(|g| g.n() == n && g.k() == k) {
                frames.push(generator(&FrameSpec::bch(n, k)?)?);
            }
            let gs = frames.iter().find(|g| g.n() == n && g.k() == k).unwrap();
            let s = gram_spectrum(gs, &rows)?;
            Ok(Table1Row {
                n,
                k,
                pattern: p.to_string(),
                rows,
                lambda_min: s.lambda_min,
                lambda_max: s.lambda_max,
                sum_reciprocal: s.sum_reciprocal,
                product: s.product,
            })
        })
        .collect()
}

pub fn write_table1_csv<W: Write>(rows: &[Table1Row], w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "n",
        "k",
        "pattern",
        "lambda_min",
        "lambda_max",
        "sum_reciprocal",
        "product",
    ])?;
    for r in rows {
        csv.write_record([
            r.n.to_string(),
            r.k.to_string(),
            r.pattern.clone(),
            fmt_value(r.lambda_min),
            fmt_value(r.lambda_max),
            fmt_value(r.sum_reciprocal),
            fmt_value(r.product),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn table1_text(rows: &[Table1Row]) -> String {
    let mut out = format!(
        "{:<8} {:<12} {:>10} {:>10} {:>12} {:>10}\n",
        "code", "pattern", "lambda_min", "lambda_max", "sum 1/l", "prod l"
    );
    for r in rows {
        let code = format!("({},{})", r.n, r.k);
        let _ = writeln!(
            out,
            "{:<8} {:<12} {:>10} {:>10} {:>12} {:>10}",
            code,
            r.pattern,
            fmt_value(r.lambda_min),
            fmt_value(r.lambda_max),
            fmt_value(r.sum_reciprocal),
            fmt_value(r.product)
        );
    }
    out
}

/// Coset catalog of the (7,3) frame, with and without reversal merging.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table2 {
    pub shift_cosets: CosetCatalog,
    pub merged: CosetCatalog,
}

pub fn table2() -> Result<Table2> {
    let gs = generator(&FrameSpec::bch(7, 3)?)?;
    Ok(Table2 {
        shift_cosets: enumerate_cosets_for(&gs, false, MAX_ENUMERATION_N)?,
        merged: enumerate_cosets_for(&gs, true, MAX_ENUMERATION_N)?,
    })
}

/// One row per coset: leader, members, distances, weight and spectrum.
pub fn write_catalog_csv<W: Write>(cat: &CosetCatalog, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "coset",
        "leader",
        "size",
        "members",
        "distance",
        "gaps",
        "weight",
        "self_reversal",
        "spectral_class",
        "eigenvalues",
    ])?;
    for (i, c) in cat.cosets.iter().enumerate() {
        csv.write_record([
            format!("C{}", i + 1),
            join_usize(c.leader.indices()),
            c.members.len().to_string(),
            c.members.iter().map(|m| join_usize(m.indices())).join("; "),
            join_usize(&c.pair_distances),
            join_usize(&c.gap_signature),
            c.weight.to_string(),
            c.self_reversal.to_string(),
            c.spectral_class.to_string(),
            join_values(&c.spectrum.eigenvalues),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn catalog_text(cat: &CosetCatalog) -> String {
    let (lo, hi) = count_bounds(cat.n, cat.k).unwrap_or((f64::NAN, f64::NAN));
    let mut out = format!(
        "({},{}) frame: {} cosets{}, {} distinct spectra; bounds {:.4} < n_c <= {:.4}\n",
        cat.n,
        cat.k,
        cat.count,
        if cat.merged_reversals {
            " (reversals merged)"
        } else {
            ""
        },
        cat.spectral_class_count,
        lo,
        hi
    );
    for (i, c) in cat.cosets.iter().enumerate() {
        let _ = writeln!(
            out,
            "C{:<3} leader {:<16} size {:>4}  distance {:<12} weight {:>3}  eigenvalues {}",
            i + 1,
            c.leader.to_string(),
            c.members.len(),
            join_usize(&c.pair_distances),
            c.weight,
            join_values(&c.spectrum.eigenvalues)
        );
    }
    out
}

pub fn write_sim_csv<W: Write>(r: &SimReport, w: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "trials",
        "seed",
        "step",
        "levels",
        "sigma_q2",
        "empirical_mse",
        "mse_std_error",
        "predicted_mse",
        "ratio",
        "empirical_codeword_variance",
        "predicted_codeword_variance",
        "overflow_rate",
        "refined_mse",
    ])?;
    csv.write_record([
        r.trials.to_string(),
        r.seed.to_string(),
        fmt_value(r.quantizer.step),
        r.quantizer.levels.to_string(),
        fmt_value(r.sigma_q2),
        fmt_value(r.empirical_mse),
        fmt_value(r.mse_std_error),
        fmt_value(r.predicted_mse),
        fmt_value(r.ratio),
        fmt_value(r.empirical_codeword_variance),
        fmt_value(r.predicted_codeword_variance),
        fmt_value(r.overflow_rate),
        fmt_value(r.refined_mse),
    ])?;
    csv.flush()?;
    Ok(())
}

pub fn sim_text(r: &SimReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trials            {}", r.trials);
    let _ = writeln!(out, "seed              {}", r.seed);
    let _ = writeln!(
        out,
        "quantizer         step {} levels {}",
        fmt_value(r.quantizer.step),
        r.quantizer.levels
    );
    let _ = writeln!(out, "sigma_q^2         {}", fmt_value(r.sigma_q2));
    let _ = writeln!(
        out,
        "empirical MSE     {} (± {})",
        fmt_value(r.empirical_mse),
        fmt_value(r.mse_std_error)
    );
    let _ = writeln!(out, "predicted MSE     {}", fmt_value(r.predicted_mse));
    let _ = writeln!(out, "ratio             {}", fmt_value(r.ratio));
    let _ = writeln!(
        out,
        "codeword variance {} (predicted {})",
        fmt_value(r.empirical_codeword_variance),
        fmt_value(r.predicted_codeword_variance)
    );
    let _ = writeln!(out, "overflow rate     {}", fmt_value(r.overflow_rate));
    let _ = writeln!(out, "refined MSE       {}", fmt_value(r.refined_mse));
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

/// Largest n the sweep accepts.
pub const VERIFY_MAX_N: usize = 64;
/// Up to this n every subset is checked; above it subsets are sampled.
pub const EXHAUSTIVE_MAX_N: usize = 16;
/// Largest n for the determinant formula and coset checks.
pub const DET_MAX_N: usize = 10;
pub const COSET_CHECK_MAX_N: usize = 16;
/// Relative tolerance of the determinant formula against the eigenvalue product.
pub const DET_REL_TOL: f64 = 1e-8;
pub const SINE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    Sine,
    Det,
    Bounds,
    Cosets,
    All,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub n_max: usize,
    pub identity: Identity,
    /// Subsets drawn per (n, k, p) above [`EXHAUSTIVE_MAX_N`].
    pub samples: usize,
    pub seed: u64,
    /// Added to every eigenvalue before the bounds are evaluated.
    #[serde(default)]
    pub perturbation: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n_max: 12,
            identity: Identity::All,
            samples: 64,
            seed: 0,
            perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub n: usize,
    pub k: usize,
    pub rows: Option<IndexSet>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<Failure>,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifySummary {
    pub options: VerifyOptions,
    pub checks: Vec<CheckSummary>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckSummary::passed)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<8} {:>9} cases  {}",
                c.name,
                c.cases,
                if c.passed() {
                    "PASS".to_string()
                } else {
                    format!("FAIL ({} violations)", c.failures.len())
                }
            );
            for f in c.failures.iter().take(20) {
                let rows = f.rows.as_ref().map(|r| r.to_string()).unwrap_or_default();
                let _ = writeln!(out, "    ({},{}) {rows} {}", f.n, f.k, f.detail);
            }
        }
        let _ = writeln!(
            out,
            "{}",
            if self.passed() {
                "all checks passed"
            } else {
                "verification FAILED"
            }
        );
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["check", "n", "k", "rows", "detail"])?;
        for c in &self.checks {
            if c.passed() {
                csv.write_record([
                    c.name.as_str(),
                    "",
                    "",
                    "",
                    &format!("pass ({} cases)", c.cases),
                ])?;
            }
            for f in &c.failures {
                let rows = f.rows.as_ref().map(|r| r.to_string()).unwrap_or_default();
                csv.write_record([
                    c.name.clone(),
                    f.n.to_string(),
                    f.k.to_string(),
                    rows,
                    f.detail.clone(),
                ])?;
            }
        }
        csv.flush()?;
        Ok(())
    }
}

/// Row subsets to test for an n-row frame: all of them up to
/// [`EXHAUSTIVE_MAX_N`], otherwise `samples` random subsets of every size.
fn subsets(n: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<IndexSet> {
    if n <= EXHAUSTIVE_MAX_N {
        (1u64..(1u64 << n))
            .map(|m| IndexSet::from_mask(n, m).expect("non-empty mask"))
            .collect()
    } else {
        (1..=n)
            .flat_map(|p| {
                (0..samples)
                    .map(|_| {
                        let mut idx: Vec<usize> =
                            sample(rng, n, p).into_iter().map(|i| i + 1).collect();
                        idx.sort_unstable();
                        IndexSet::from_sorted_unchecked(n, idx)
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

fn check_bounds(opts: &VerifyOptions) -> Result<CheckSummary> {
    let pairs: Vec<(usize, usize)> = (1..=opts.n_max)
        .flat_map(|n| (1..=n).map(move |k| (n, k)))
        .collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(n, k)| {
            let gs = generator(&FrameSpec::bch(n, k)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream((n * 1000 + k) as u64);
            let sets = subsets(n, opts.samples, &mut rng);
            let results = sets
                .par_iter()
                .map(|rows| {
                    let reports = verify_bounds_perturbed(&gs, rows, opts.perturbation)?;
                    Ok(reports
                        .into_iter()
                        .filter(|r| !r.holds)
                        .map(|r| Failure {
                            n,
                            k,
                            rows: Some(rows.clone()),
                            detail: format!(
                                "{:?}: {} [{}]",
                                r.bound,
                                r.predicate,
                                r.witness
                                    .iter()
                                    .map(|w| format!("{}={:.6e}", w.label, w.value))
                                    .join(", ")
                            ),
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((
                sets.len(),
                results.into_iter().flatten().collect::<Vec<_>>(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckSummary {
        name: "bounds".into(),
        cases: per_pair.iter().map(|(c, _)| c).sum(),
        failures: per_pair.into_iter().flat_map(|(_, f)| f).collect(),
    })
}

fn check_sine(opts: &VerifyOptions) -> CheckSummary {
    let failures = (1..=opts.n_max)
        .filter_map(|n| {
            let r = sine_product_identity_residual(n);
            (r.is_nan() || r >= SINE_TOL).then(|| Failure {
                n,
                k: 0,
                rows: None,
                detail: format!("sine product residual {r:.3e}"),
            })
        })
        .collect();
    CheckSummary {
        name: "sine".into(),
        cases: opts.n_max,
        failures,
    }
}

fn check_det(opts: &VerifyOptions) -> Result<CheckSummary> {
    let n_top = opts.n_max.min(DET_MAX_N);
    let pairs: Vec<(usize, usize)> = (1..=n_top)
        .flat_map(|n| (1..=n).map(move |k| (n, k)))
        .collect();
    let per_pair = pairs
        .par_iter()
        .map(|&(n, k)| {
            let spec = FrameSpec::bch(n, k)?;
            let gs = generator(&spec)?;
            let mut cases = 0;
            let mut failures = Vec::new();
            for combo in (1..=n).combinations(k) {
                let rows = IndexSet::from_sorted_unchecked(n, combo);
                let formula = det_gram_product_formula(&spec, &rows)?;
                let product = gram_spectrum(&gs, &rows)?.product;
                let rel = (formula - product).abs() / formula.abs().max(f64::MIN_POSITIVE);
                cases += 1;
                if rel.is_nan() || rel >= DET_REL_TOL {
                    failures.push(Failure {
                        n,
                        k,
                        rows: Some(rows),
                        detail: format!("formula {formula:.10e} vs eigenvalue product {product:.10e} (rel {rel:.3e})"),
                    });
                }
            }
            Ok((cases, failures))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckSummary {
        name: "det".into(),
        cases: per_pair.iter().map(|(c, _)| c).sum(),
        failures: per_pair.into_iter().flat_map(|(_, f)| f).collect(),
    })
}

fn check_cosets(opts: &VerifyOptions) -> Result<CheckSummary> {
    let n_top = opts.n_max.min(COSET_CHECK_MAX_N);
    let pairs: Vec<(usize, usize)> = (1..=n_top)
        .flat_map(|n| (1..=n).map(move |k| (n, k)))
        .collect();
    let failures = pairs
        .par_iter()
        .map(|&(n, k)| {
            let gs = generator(&FrameSpec::bch(n, k)?)?;
            let cat = enumerate_cosets_for(&gs, true, COSET_CHECK_MAX_N)?;
            let (lo, hi) = count_bounds(n, k)?;
            let mut out = Vec::new();
            let total = cat.total_members();
            if total as f64 != binomial(n, k) {
                out.push(Failure {
                    n,
                    k,
                    rows: None,
                    detail: format!(
                        "members sum to {total}, expected C(n,k) = {}",
                        binomial(n, k)
                    ),
                });
            }
            let nc = cat.count as f64;
            if !(lo < nc && nc <= hi.ceil()) {
                out.push(Failure {
                    n,
                    k,
                    rows: None,
                    detail: format!("coset count {} outside ({lo:.4}, ceil({hi:.4})]", cat.count),
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckSummary {
        name: "cosets".into(),
        cases: pairs.len(),
        failures: failures.into_iter().flatten().collect(),
    })
}

pub fn verify(opts: &VerifyOptions) -> Result<VerifySummary> {
    if opts.n_max == 0 {
        return Err(Error::InvalidArgument("n-max must be at least 1".into()));
    }
    if opts.n_max > VERIFY_MAX_N {
        return Err(Error::ResourceLimit {
            what: "n-max for verify",
            value: opts.n_max,
            limit: VERIFY_MAX_N,
        });
    }
    let want = |id: Identity| opts.identity == id || opts.identity == Identity::All;
    let mut checks = Vec::new();
    if want(Identity::Sine) {
        checks.push(check_sine(opts));
    }
    if want(Identity::Det) {
        checks.push(check_det(opts)?);
    }
    if want(Identity::Bounds) {
        checks.push(check_bounds(opts)?);
    }
    if want(Identity::Cosets) {
        checks.push(check_cosets(opts)?);
    }
    Ok(VerifySummary {
        options: opts.clone(),
        checks,
    })
}
