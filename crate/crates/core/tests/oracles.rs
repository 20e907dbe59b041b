//! Checks against oracles written independently of the library internals:
//! Gramians built from their Dirichlet sums, power-trace moments, a separate
//! Gaussian-elimination determinant and closed-form 2×2 eigenvalues.

use std::f64::consts::PI;

use itertools::Itertools;
use num_complex::Complex64;

use dftframe::codec::{run_simulation, QuantizerSpec, RangeRule, Resolution, Scenario};
use dftframe::dft::{generator, FrameSpec};
use dftframe::spectra::gram_spectrum;
use dftframe::systematic::systematic_frame;
use dftframe::IndexSet;

type M = Vec<Vec<Complex64>>;

/// `G_p·G_pᴴ` from `(1/k)·Σ_{m∈support} e^{j2πm(r−s)/n}`.
fn gramian(n: usize, k: usize, support: &[usize], rows: &[usize]) -> M {
    rows.iter()
        .map(|&r| {
            rows.iter()
                .map(|&s| {
                    let d = r as f64 - s as f64;
                    support
                        .iter()
                        .map(|&m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 * d / n as f64))
                        .sum::<Complex64>()
                        / k as f64
                })
                .collect()
        })
        .collect()
}

fn matmul(a: &M, b: &M) -> M {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

fn trace(a: &M) -> f64 {
    (0..a.len()).map(|i| a[i][i].re).sum()
}

fn det(mut a: M) -> Complex64 {
    let n = a.len();
    let mut d = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm()))
            .unwrap();
        if a[p][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            for (x, v) in a[r][c..].iter_mut().zip(&pivot_row[c..]) {
                *x -= f * v;
            }
        }
    }
    d
}

#[test]
fn spectra_match_power_trace_moments() {
    for n in 2..=9 {
        for k in 1..=n {
            let spec = FrameSpec::bch(n, k).unwrap();
            let gs = generator(&spec).unwrap();
            let support = spec.support();
            for p in 1..=n {
                for combo in (1..=n).combinations(p) {
                    let rows = IndexSet::new(n, combo.clone()).unwrap();
                    let lambda = gram_spectrum(&gs, &rows).unwrap().eigenvalues;
                    let g = gramian(n, k, &support, &combo);
                    let mut power = g.clone();
                    for j in 1..=p {
                        let want = trace(&power);
                        let got: f64 = lambda.iter().map(|l| l.powi(j as i32)).sum();
                        assert!(
                            (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                            "({n},{k}) {rows} moment {j}: {got} vs {want}"
                        );
                        power = matmul(&power, &g);
                    }
                }
            }
        }
    }
}

#[test]
fn square_products_match_elimination_determinant() {
    for n in 2..=10 {
        for k in 1..=n {
            let spec = FrameSpec::bch(n, k).unwrap();
            let gs = generator(&spec).unwrap();
            let support = spec.support();
            for combo in (1..=n).combinations(k) {
                let rows = IndexSet::new(n, combo.clone()).unwrap();
                let product = gram_spectrum(&gs, &rows).unwrap().product;
                let d = det(gramian(n, k, &support, &combo));
                assert!(d.im.abs() < 1e-10);
                assert!(
                    (product - d.re).abs() <= 1e-9 * d.re.max(1e-12),
                    "({n},{k}) {rows}: {product} vs {}",
                    d.re
                );
            }
        }
    }
}

#[test]
fn two_row_spectra_match_closed_form() {
    for n in 3..=16 {
        for k in 2..n {
            let spec = FrameSpec::bch(n, k).unwrap();
            let gs = generator(&spec).unwrap();
            for s in 2..=n {
                let g = gramian(n, k, &spec.support(), &[1, s]);
                let (a, d, b) = (g[0][0].re, g[1][1].re, g[0][1].norm());
                let mid = 0.5 * (a + d);
                let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
                let got = gram_spectrum(&gs, &IndexSet::new(n, vec![1, s]).unwrap()).unwrap();
                assert!((got.lambda_max - (mid + rad)).abs() < 1e-12);
                assert!((got.lambda_min - (mid - rad)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn generator_matches_definition() {
    // G[r][c] = √(n/k)·Σ_i e^{j2πr·m_i/n}/√n · e^{−j2πic/k}/√k for real BCH.
    for (n, k) in [(6, 3), (7, 5), (10, 5), (9, 7), (12, 1)] {
        let spec = FrameSpec::bch(n, k).unwrap();
        let gs = generator(&spec).unwrap();
        let support = spec.support();
        for r in 0..n {
            for c in 0..k {
                let want: Complex64 = support
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| {
                        Complex64::from_polar(1.0, 2.0 * PI * (r * m) as f64 / n as f64)
                            * Complex64::from_polar(1.0, -2.0 * PI * (i * c) as f64 / k as f64)
                    })
                    .sum::<Complex64>()
                    / (k as f64);
                assert!((gs.g[(r, c)] - want).norm() < 1e-12, "({n},{k}) [{r}][{c}]");
            }
        }
    }
}

/// `σ_q²/k · tr((G_sysᴴG_sys)⁻¹)` through a real Gauss-Jordan inverse.
fn linear_mse_oracle(g_sys: &[Vec<f64>], sigma_q2: f64) -> f64 {
    let k = g_sys[0].len();
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k)
                .map(|j| g_sys.iter().map(|r| r[i] * r[j]).sum())
                .collect();
            row.extend((0..k).map(|j| (i == j) as u8 as f64));
            row
        })
        .collect();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(p, c);
        let piv = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c];
                let src = a[c].clone();
                a[r].iter_mut().zip(&src).for_each(|(v, s)| *v -= f * s);
            }
        }
    }
    sigma_q2 * (0..k).map(|i| a[i][k + i]).sum::<f64>() / k as f64
}

#[test]
fn predicted_quantization_mse_matches_trace_formula() {
    let q = QuantizerSpec {
        range: RangeRule::PeakRowSigma(8.0),
        resolution: Resolution::Step(0.1),
    };
    for (n, k) in [(6, 3), (7, 5), (10, 5), (9, 3)] {
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        for combo in (1..=n).combinations(k).step_by(3) {
            let f = systematic_frame(&gs, &IndexSet::new(n, combo).unwrap()).unwrap();
            let g: Vec<Vec<f64>> = (0..n)
                .map(|r| (0..k).map(|c| f.g_sys[(r, c)].re).collect())
                .collect();
            let quantizer = q.build(&f, 1.0).unwrap();
            let report = run_simulation(&f, &Scenario::QuantizeOnly, quantizer, 1.0, 1, 0).unwrap();
            let want = linear_mse_oracle(&g, report.sigma_q2);
            assert!(
                (report.predicted_mse - want).abs() < 1e-12 * want.max(1e-30) + 1e-15,
                "({n},{k})"
            );
        }
    }
}
