use orlicz_finsler::measure::DiscreteMeasure;
use orlicz_finsler::orlicz::*;
use orlicz_finsler::weights::*;
use proptest::prelude::*;

fn lp_norm(f: &[f64], mu: &DiscreteMeasure<f64>, p: f64) -> f64 {
    f.iter()
        .zip(mu.weights())
        .map(|(x, w)| x.abs().powf(p) * w)
        .sum::<f64>()
        .powf(1.0 / p)
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..64)
}

#[test]
fn mm_helper_table() {
    assert_eq!(mm_helpers(0.5, 4.0).unwrap(), (2.0, 4.0));
    assert_eq!(mm_helpers(0.5, 0.25).unwrap(), (0.25, 0.5));
    assert_eq!(mm_helpers(1.0, 0.0).unwrap(), (0.0, 0.0));
}

#[test]
fn sup_norm_limit_for_large_p() {
    let mu = DiscreteMeasure::<f64>::midpoint(0.0, 1.0, 100);
    let f: Vec<f64> = mu.nodes().iter().map(|x| (6.0 * x).sin()).collect();
    let sup = f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let n = gauge_norm(&f, &make_power_weight(400.0).unwrap(), &mu).unwrap();
    assert!(n <= sup && n > 0.98 * sup);
}

#[test]
fn mollified_norm_between_neighbouring_powers() {
    // a mollified χ_1.5 norm of a constant is the constant, and of |f| ≤ 1 sits near the χ_1.5 norm
    let mu = DiscreteMeasure::<f64>::midpoint(0.0, 1.0, 256);
    let f: Vec<f64> = mu.nodes().iter().map(|x| x - 0.3).collect();
    let base = make_power_weight(1.5).unwrap();
    let b = gauge_norm(&f, &base, &mu).unwrap();
    let m = gauge_norm(&f, &mollify(&base, 32).unwrap(), &mu).unwrap();
    assert!((m - b).abs() < 0.05 * b);
}

#[test]
fn sandwich_tally_counts_checks() {
    let before = sandwich_tally();
    let mu = DiscreteMeasure::<f64>::midpoint(0.0, 1.0, 8);
    gauge_norm(&[1.0, 2.0, 0.0, -1.0, 3.0, 0.5, 0.1, 0.0], &make_power_weight(2.0).unwrap(), &mu).unwrap();
    let after = sandwich_tally();
    assert!(after.checks > before.checks);
    assert_eq!(after.violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gauge_norm_is_lp_norm(f in samples(), pi in 0usize..4) {
        let p = [1.0, 1.5, 2.0, 3.0][pi];
        let mu = DiscreteMeasure::midpoint(0.0, 1.0, f.len());
        let n = gauge_norm(&f, &make_power_weight(p).unwrap(), &mu).unwrap();
        let e = lp_norm(&f, &mu, p);
        prop_assert!((n - e).abs() <= 1e-10 * e.max(1e-300), "p={} {} vs {}", p, n, e);
    }

    #[test]
    fn gauge_norm_is_a_norm(f in samples(), c in -5.0f64..5.0, seed in 0u64..1000) {
        let mu = DiscreteMeasure::midpoint(0.0, 1.0, f.len());
        let w = mollify(&make_power_weight(1.5).unwrap(), 8).unwrap();
        let g: Vec<f64> = f.iter().enumerate().map(|(i, x)| ((i as u64 * 31 + seed) % 17) as f64 / 4.0 - x).collect();
        let nf = gauge_norm(&f, &w, &mu).unwrap();
        let ng = gauge_norm(&g, &w, &mu).unwrap();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        prop_assert!(gauge_norm(&sum, &w, &mu).unwrap() <= nf + ng + 1e-10 * (nf + ng));
        let scaled: Vec<f64> = f.iter().map(|x| c * x).collect();
        let ns = gauge_norm(&scaled, &w, &mu).unwrap();
        prop_assert!((ns - c.abs() * nf).abs() <= 1e-10 * nf.max(1e-300) * c.abs().max(1.0));
    }

    #[test]
    fn norm_integral_sandwich(f in samples(), p in 1.0f64..4.0) {
        let mu = DiscreteMeasure::midpoint(0.0, 1.0, f.len());
        let (_, rep) = gauge_norm_report(&f, &make_power_weight(p).unwrap(), &mu).unwrap();
        prop_assert_eq!(rep.sandwich_ok, Some(true));
    }

    #[test]
    fn holder_inequality(f in samples(), p in 1.0f64..4.0) {
        let mu = DiscreteMeasure::midpoint(0.0, 1.0, f.len());
        let g: Vec<f64> = f.iter().rev().map(|x| x.sin() * 3.0).collect();
        let (l, r) = holder_pair(&f, &g, &make_power_weight(p).unwrap(), &mu).unwrap();
        prop_assert!(l <= r + 1e-10 * r.max(1.0));
    }
}
