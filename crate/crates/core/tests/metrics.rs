use orlicz_finsler::battery::*;
use orlicz_finsler::metrics::*;
use orlicz_finsler::random::{random_potential, trial_rng, Roughness};
use orlicz_finsler::toric::*;
use orlicz_finsler::weights::*;
use proptest::prelude::*;

fn model(n: usize) -> Model<f64> {
    ReferenceModel::unit(n).unwrap()
}

fn weights() -> Vec<YoungWeight<f64>> {
    vec![
        make_power_weight(1.0).unwrap(),
        make_power_weight(2.0).unwrap(),
        mollify(&make_power_weight(1.5).unwrap(), 8).unwrap(),
    ]
}

/// Brute-force ∫ u dω_u: u as a convex function of s on a fine grid, its MA
/// measure read off from the moment map.
fn brute_own_integral(u: &Potential, f: impl Fn(f64) -> f64) -> f64 {
    let k = 200_000;
    let (a, b) = (-40.0, 40.0);
    let mut total = 0.0;
    let mut prev = u.moment(a);
    for j in 0..k {
        let s1 = a + (b - a) * (j + 1) as f64 / k as f64;
        let mid = a + (b - a) * (j as f64 + 0.5) / k as f64;
        let y = u.moment(s1);
        total += f(u.primal(mid)) * (y - prev);
        prev = y;
    }
    total + f(u.primal(a)) * u.moment(a) + f(u.primal(b)) * (1.0 - prev)
}

use orlicz_finsler::Potential;

#[test]
fn am_of_constants_and_chord() {
    let m = model(512);
    assert!(am_energy(&SymplecticPotential::zero(&m)).abs() < 1e-14);
    for c in [-1.5, 0.3, 2.0] {
        assert!((am_energy(&SymplecticPotential::constant(&m, c)) - c).abs() < 1e-12);
    }
    let (u0, u1) = {
        let r = Roughness::default();
        (
            random_potential(&m, &mut trial_rng(4, 0), &r),
            random_potential(&m, &mut trial_rng(4, 1), &r),
        )
    };
    assert!((am_energy(&u0) - am_dual(&u0)).abs() < 1e-3);
    let g = weak_geodesic(&u0, &u1).unwrap();
    let (a0, a1) = (am_dual(&u0), am_dual(&u1));
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        assert!((am_dual(&g.at(t)) - ((1.0 - t) * a0 + t * a1)).abs() < 1e-14);
    }
}

#[test]
fn am_primary_and_dual_agree_on_smooth_potentials() {
    let m = model(2048);
    let u = SymplecticPotential::from_fn(&m, |y| 0.2 * (4.0 * y).sin() - 0.1 * y * y).unwrap();
    assert!((am_energy(&u) - am_dual(&u)).abs() < 1e-6);
}

#[test]
fn distance_examples() {
    let m = model(256);
    let u = random_potential(&m, &mut trial_rng(9, 0), &Roughness::default());
    for w in weights() {
        for c in [-0.7, 0.25] {
            assert!((d_chi(&u, &u.shifted(c), &w).unwrap() - c.abs()).abs() < 1e-12);
        }
        assert_eq!(d_chi(&u, &u, &w).unwrap(), 0.0);
    }
    // d_2 is the L² distance of the duals
    let v = random_potential(&m, &mut trial_rng(9, 1), &Roughness::default());
    let l2 = (tangent(&u, &v).iter().map(|x| x * x).sum::<f64>() / 256.0).sqrt();
    assert!((d_p(&u, &v, 2.0).unwrap() - l2).abs() < 1e-10 * l2);
}

#[test]
fn ordered_pythagoras_collapses() {
    let m = model(256);
    let u = random_potential(&m, &mut trial_rng(2, 0), &Roughness::default());
    let v = max_potential(&u, &random_potential(&m, &mut trial_rng(2, 1), &Roughness::default())).unwrap();
    for p in [1.0, 2.0] {
        let r = d_p_pythagoras_check(&u, &v, p).unwrap();
        assert!(r.relative_defect < 1e-10, "{r:?}");
    }
    let r = d_p_pythagoras_check(&u, &u.shifted(0.4), 1.0).unwrap();
    assert!((r.lhs - 0.4).abs() < 1e-12);
    assert!(r.am_relative_defect.unwrap() < 1e-10);
}

#[test]
fn energy_examples() {
    let m = model(256);
    let one = make_power_weight(1.0).unwrap();
    let u = random_potential(&m, &mut trial_rng(5, 0), &Roughness::default());
    assert_eq!(i_chi_energy(&u, &u, &one).unwrap(), 0.0);
    assert_eq!(i_energy(&u, &u).unwrap(), 0.0);
    assert!(i_energy(&u, &u.shifted(0.3)).unwrap().abs() < 1e-12);
    let z = SymplecticPotential::zero(&m);
    let c = SymplecticPotential::constant(&m, -0.6);
    assert!((i_chi_energy(&z, &c, &one).unwrap() - 1.2).abs() < 1e-12);
    assert!((e_chi_energy(&c, &one) + 0.6).abs() < 1e-12);
    assert_eq!(e_chi_energy(&SymplecticPotential::constant(&m, 0.1), &one), 0.0);
}

#[test]
fn e_chi_against_fiber_quadrature() {
    let m = model(2048);
    let u = SymplecticPotential::from_fn(&m, |y| 0.3 * (5.0 * y).cos() + 0.2 * y).unwrap();
    let w = make_power_weight(2.0).unwrap();
    let a = e_chi_energy(&u, &w);
    let b = brute_own_integral(&u, |x| if x <= 0.0 { -w.evaluate(x) } else { 0.0 });
    assert!((a - b).abs() < 1e-6, "{a} {b}");
    assert!((e_chi_energy_fiber(&u, &w) - b).abs() < 1e-4);
}

#[test]
fn battery_on_random_trials() {
    let m = model(256);
    let r = Roughness::default();
    for w in weights() {
        let one = conjugate_norm_of_one(&w).unwrap();
        for i in 0..25 {
            let t = draw_trial(&m, 31, i, &r);
            let top = max_potential(&t.u0, &t.u1).unwrap();
            let mut all = vec![
                triangle(&t, &w).unwrap(),
                contraction(&t, &w).unwrap(),
                comparison(&t, &w).unwrap(),
                i_max_monotone(&t.u0, &t.u1).unwrap(),
            ];
            all.extend(ordered_sandwich(&t.u0, &top, &w).unwrap());
            all.extend(rooftop_decomposition(&t.u0, &t.u1, &w).unwrap());
            all.extend(max_additivity(&t.u0, &t.u1, &w).unwrap());
            for b in &all {
                assert!(b.holds(1e-9), "trial {i}: {b:?}");
            }
            // fiber-quadrature AM carries an O(h²) error
            assert!(am_lipschitz(&t.u0, &t.u1, &w, one).unwrap().holds(5e-5));
            let half = halfway_ratio(&t.u0, &t.u1, &w).unwrap().unwrap();
            assert!(half < 1.0, "trial {i}: {half}");
        }
    }
}

#[test]
fn energy_and_distance_are_equivalent() {
    let m = model(256);
    let w = make_power_weight(1.5).unwrap();
    let pairs: Vec<(f64, f64)> = (0..40)
        .map(|i| {
            let t = draw_trial(&m, 3, i, &Roughness::default());
            distance_energy_pair(&t.u0, &t.u1, &w).unwrap()
        })
        .collect();
    let c = fit_equivalence_constant(&pairs);
    assert!(c.is_finite() && c < 10.0, "{c}");
    for (d, i) in pairs {
        assert!(i / c <= d * (1.0 + 1e-12) && d <= c * i * (1.0 + 1e-12));
    }
}

#[test]
fn constructed_sequences_converge() {
    let m = model(256);
    for w in weights() {
        let t = draw_trial(&m, 8, 0, &Roughness::default());
        let rep = convergence_family(&t.u0, &t.u1, &t.u2, &w, 8).unwrap();
        assert!(rep.all_decay(1e-12), "{rep:?}");
        let k = rep.d.len() - 1;
        assert!(rep.i1[k] < 0.02 * rep.i1[0] && rep.l1[k] < 0.02 * rep.l1[0], "{rep:?}");
    }
}

#[test]
fn sup_is_controlled_by_distance() {
    let m = model(256);
    let w = make_power_weight(1.0).unwrap();
    let z = SymplecticPotential::zero(&m);
    let pts: Vec<(f64, f64)> = (0..30)
        .map(|i| {
            let u = random_potential(&m, &mut trial_rng(12, i), &Roughness::default());
            (u.sup(), d_chi(&z, &u, &w).unwrap())
        })
        .collect();
    let c = pts.iter().fold(1.0f64, |c, (s, d)| c.max(s / (d + 1.0)));
    let fresh = (0..30).all(|i| {
        let u = random_potential(&m, &mut trial_rng(13, i), &Roughness::default());
        u.sup() <= 2.0 * c * (d_chi(&z, &u, &w).unwrap() + 1.0)
    });
    assert!(fresh);
}

#[test]
fn ricci_potential_and_ding() {
    let m = ReferenceModel::<f64>::fano(512).unwrap();
    let h = RicciPotential::reference(&m);
    assert!(h.cohomology_defect.abs() < 1e-6);
    assert!(h.oscillation() < 1e-6);
    let z = SymplecticPotential::zero(&m);
    let (f, j) = ding_and_j(&z, &h.values).unwrap();
    let direct = -(h.values.iter().map(|x| x.exp()).sum::<f64>() / 512.0).ln();
    assert!((f - direct).abs() < 1e-12 && j.abs() < 1e-14);
    // log-sum-exp survives huge shifts
    let (f, j) = ding_and_j(&z.shifted(-800.0), &h.values).unwrap();
    assert!((f + 800.0).abs() < 1e-9 && (j + 800.0).abs() < 1e-9);
    assert!(ding_and_j(&z, &h.values[1..]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metric_axioms(seed in 0u64..100_000, wi in 0usize..3) {
        let m = model(128);
        let w = &weights()[wi];
        let t = draw_trial(&m, seed, 0, &Roughness::default());
        let d01 = d_chi(&t.u0, &t.u1, w).unwrap();
        prop_assert!(d01 >= 0.0);
        prop_assert_eq!(d01, d_chi(&t.u1, &t.u0, w).unwrap());
        prop_assert!(triangle(&t, w).unwrap().holds(1e-9));
        if d01 < 1e-12 {
            prop_assert!(tangent(&t.u0, &t.u1).iter().all(|x| x.abs() <= 1e-8));
        }
    }

    #[test]
    fn i_energy_is_nonnegative(seed in 0u64..100_000) {
        let m = model(128);
        let t = draw_trial(&m, seed, 0, &Roughness::default());
        prop_assert!(i_energy(&t.u0, &t.u1).unwrap() >= 0.0);
        prop_assert!(i_max_monotone(&t.u0, &t.u1).unwrap().holds(1e-12));
    }

    #[test]
    fn renormalized_potentials_have_zero_am(seed in 0u64..100_000) {
        let m = model(128);
        let u = random_potential(&m, &mut trial_rng(seed, 0), &Roughness::default());
        prop_assert!(am_dual(&renormalize(&u)).abs() < 1e-14);
    }
}
