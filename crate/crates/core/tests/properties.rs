use proptest::prelude::*;
use proptest::sample::subsequence;

use dftframe::codec::{
    pseudoinverse_closed_form, pseudoinverse_generic, ErasureDecoder, Quantizer,
};
use dftframe::coset::{canonical_leader, reversal, shift};
use dftframe::dft::{generator, FrameSpec};
use dftframe::spectra::gram_spectrum;
use dftframe::systematic::systematic_frame;
use dftframe::IndexSet;

/// (n, k, sorted 1-based k-subset).
fn code_and_rows(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (2..=max_n)
        .prop_flat_map(|n| (Just(n), 1..=n))
        .prop_flat_map(|(n, k)| {
            (
                Just(n),
                Just(k),
                subsequence((1..=n).collect::<Vec<_>>(), k),
            )
        })
}

/// Odd k so that the frame is real and can be simulated.
fn real_code_and_rows(max_n: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    code_and_rows(max_n).prop_filter("odd k", |(_, k, _)| k % 2 == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shifts_compose((n, _k, rows) in code_and_rows(24), a in -50i64..50, b in -50i64..50) {
        let s = IndexSet::new(n, rows).unwrap();
        prop_assert_eq!(shift(&shift(&s, a), b), shift(&s, a + b));
        prop_assert_eq!(shift(&s, n as i64), s.clone());
        prop_assert_eq!(reversal(&reversal(&s)), s.clone());
        // Reversal conjugates a shift into the opposite shift.
        prop_assert_eq!(reversal(&shift(&s, a)), shift(&reversal(&s), -a));
    }

    #[test]
    fn leader_is_an_orbit_invariant((n, _k, rows) in code_and_rows(24), c in 0i64..24) {
        let s = IndexSet::new(n, rows).unwrap();
        let moved = shift(&s, c);
        prop_assert_eq!(canonical_leader(&moved, false), canonical_leader(&s, false));
        prop_assert_eq!(canonical_leader(&reversal(&moved), true), canonical_leader(&s, true));
        let l = canonical_leader(&s, false);
        prop_assert!((0..n as i64).any(|c| shift(&s, c) == l));
    }

    #[test]
    fn spectrum_is_constant_on_cosets((n, k, rows) in code_and_rows(10), c in 1i64..10) {
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        let s = IndexSet::new(n, rows).unwrap();
        let base = gram_spectrum(&gs, &s).unwrap();
        prop_assert!(base.max_diff(&gram_spectrum(&gs, &shift(&s, c)).unwrap()) < 1e-9);
        prop_assert!(base.max_diff(&gram_spectrum(&gs, &reversal(&s)).unwrap()) < 1e-9);
    }

    #[test]
    fn square_spectra_have_unit_trace_average((n, k, rows) in code_and_rows(16)) {
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        let sp = gram_spectrum(&gs, &IndexSet::new(n, rows).unwrap()).unwrap();
        prop_assert!((sp.sum - k as f64).abs() < 1e-9);
        prop_assert!(sp.product > 0.0 && sp.product <= 1.0 + 1e-12);
        prop_assert!(sp.lambda_min <= 1.0 + 1e-9 && sp.lambda_max >= 1.0 - 1e-9);
    }

    #[test]
    fn pseudoinverse_forms_agree((n, k, rows) in real_code_and_rows(12)) {
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        let f = systematic_frame(&gs, &IndexSet::new(n, rows).unwrap()).unwrap();
        let closed = pseudoinverse_closed_form(&f);
        let generic = pseudoinverse_generic(&f.g_sys).unwrap();
        prop_assert!(closed.max_abs_diff(&generic) < 1e-8 * generic.max_abs().max(1.0));
    }

    #[test]
    fn erasing_more_never_helps(
        (n, k, rows) in real_code_and_rows(12),
        order in Just(()).prop_perturb(|_, mut rng| rng.random::<u64>()),
    ) {
        prop_assume!(n - k >= 1);
        let gs = generator(&FrameSpec::bch(n, k).unwrap()).unwrap();
        let f = systematic_frame(&gs, &IndexSet::new(n, rows).unwrap()).unwrap();
        // Erase positions one at a time in a pseudo-random order.
        let mut positions: Vec<usize> = (1..=n).collect();
        positions.sort_by_key(|&p| (p as u64).wrapping_mul(order | 1).rotate_left(17));
        let mut previous = ErasureDecoder::new(&f, &IndexSet::full(n).unwrap()).unwrap().predicted_mse(1.0);
        for e in 1..=(n - k) {
            let surviving = IndexSet::new(n, positions[e..].to_vec()).unwrap();
            let Ok(dec) = ErasureDecoder::new(&f, &surviving) else { break };
            let mse = dec.predicted_mse(1.0);
            prop_assert!(mse >= previous * (1.0 - 1e-9), "{} -> {}", previous, mse);
            previous = mse;
        }
    }

    #[test]
    fn quantizer_error_is_bounded(step in 1e-3f64..1.0, levels in 2usize..512, v in -1.0f64..1.0) {
        let q = Quantizer::new(step, levels).unwrap();
        let x = v * q.range();
        let y = q.quantize(x);
        prop_assert!((y - x).abs() <= 0.5 * step * (1.0 + 1e-12));
        prop_assert_eq!(q.quantize(y), y);
        prop_assert!(!q.saturates(x));
    }
}
