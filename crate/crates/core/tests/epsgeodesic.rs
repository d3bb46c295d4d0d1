use orlicz_finsler::epsgeodesic::*;
use orlicz_finsler::metrics::d_chi;
use orlicz_finsler::toric::*;
use orlicz_finsler::weights::*;

type Pair = (fn(f64) -> f64, fn(f64) -> f64);

const PAIRS: [Pair; 5] = [
    (|y| 0.1 * (3.0 * y).sin(), |y| -0.2 * y * y),
    (|_| 0.0, |y| 0.3 * (y - 0.5).powi(2)),
    (|y| 0.05 * (6.0 * y).cos(), |y| 0.1 * y),
    (|y| 0.2 * y * y * y, |y| -0.1 * (2.0 * y + 1.0).ln()),
    (|y| 0.15 * (y - 0.3).powi(2), |y| 0.15 * (y - 0.7).powi(2) + 0.05),
];

fn pair(m: &Model<f64>, p: &Pair) -> (SymplecticPotential<f64>, SymplecticPotential<f64>) {
    (
        SymplecticPotential::from_fn(m, p.0).unwrap(),
        SymplecticPotential::from_fn(m, p.1).unwrap(),
    )
}

fn spread(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
}

#[test]
fn flat_pair_is_the_parabola() {
    let m = ReferenceModel::<f64>::unit(256).unwrap();
    let z = SymplecticPotential::zero(&m);
    for eps in [1e-1, 1e-2, 1e-3] {
        let f = solve_eps_geodesic(&z, &z, eps, &EpsOptions::default()).unwrap();
        for (t, row) in f.times().iter().zip(f.rows()) {
            let exact = eps * t * (t - 1.0) / 2.0;
            assert!(row.iter().all(|w| (-w - exact).abs() < 1e-10));
        }
        assert!(laplacian_bound_probe(&f) < 1e-9);
        assert!(chi_length(&f, &make_power_weight(2.0).unwrap()).unwrap() < eps);
    }
}

#[test]
fn sweep_over_five_pairs() {
    let m = ReferenceModel::<f64>::unit(256).unwrap();
    let w = mollify(&make_power_weight(1.5).unwrap(), 8).unwrap();
    for (k, p) in PAIRS.iter().enumerate() {
        let (u0, u1) = pair(&m, p);
        let seg = weak_geodesic(&u0, &u1).unwrap();
        let d = d_chi(&u0, &u1, &w).unwrap();
        let mut dist = Vec::new();
        let mut lap = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let f = solve_eps_geodesic(&u0, &u1, eps, &EpsOptions::default()).unwrap();
            assert!(f.residual() <= 1e-10, "pair {k}");
            assert!(f.t_convexity_defect() <= 1e-8, "pair {k}");
            dist.push(f.sup_distance(&seg));
            lap.push(laplacian_bound_probe(&f));
            if eps == 1e-3 {
                let l = chi_length(&f, &w).unwrap();
                assert!((l - d).abs() / d <= 1e-2, "pair {k}: {l} vs {d}");
            }
        }
        assert!(dist.windows(2).all(|x| x[1] < x[0]), "pair {k}: {dist:?}");
        let (lo, hi) = (lap.iter().copied().fold(f64::MAX, f64::min), lap.iter().copied().fold(0.0, f64::max));
        assert!(hi <= 2.0 * lo, "pair {k}: {lap:?}");
    }
}

#[test]
fn speed_variation_is_first_order_in_eps() {
    let m = ReferenceModel::<f64>::unit(128).unwrap();
    let w = make_power_weight(2.0).unwrap();
    let (u0, u1) = pair(&m, &PAIRS[0]);
    let var: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let f = solve_eps_geodesic(&u0, &u1, eps, &EpsOptions::default()).unwrap();
            spread(&f.speed_profile(&w).unwrap())
        })
        .collect();
    for r in var.windows(2).map(|x| x[1] / x[0]) {
        assert!((0.35..=0.65).contains(&r), "{var:?}");
    }
    let seg = SpaceTimeField::from_segment(&weak_geodesic(&u0, &u1).unwrap(), 33).unwrap();
    assert!(spread(&seg.speed_profile(&w).unwrap()) <= 1e-12);
}

#[test]
fn tangent_lower_bound_with_fitted_constant() {
    let m = ReferenceModel::<f64>::unit(128).unwrap();
    let w = mollify(&make_power_weight(2.0).unwrap(), 8).unwrap();
    for p in &PAIRS {
        let (u0, u1) = pair(&m, p);
        let bound = endpoint_difference_bound(&u0, &u1, &w);
        let deficit = |eps: f64| {
            let f = solve_eps_geodesic(&u0, &u1, eps, &EpsOptions::default()).unwrap();
            tangent_integral_profile(&f, &w)
                .iter()
                .fold(0.0f64, |a, i| a.max(bound - i))
        };
        // fit R on coarse ε, then hold it fixed on finer ε
        let r = [1e-1, 3e-2, 1e-2].iter().fold(0.0f64, |a, &e| a.max(deficit(e) / e));
        assert!(r.is_finite());
        for eps in [3e-3, 1e-3] {
            let d = deficit(eps);
            assert!(d <= eps * r + 1e-9, "eps={eps} deficit={d} r={r} bound={bound}");
        }
    }
}

#[test]
fn laplacian_probe_settles_under_refinement() {
    let p = &PAIRS[1];
    let probe = |n: usize| {
        let m = ReferenceModel::<f64>::unit(n).unwrap();
        let (u0, u1) = pair(&m, p);
        laplacian_bound_probe(&solve_eps_geodesic(&u0, &u1, 1e-2, &EpsOptions::default()).unwrap())
    };
    let v: Vec<f64> = [64, 128, 256].iter().map(|&n| probe(n)).collect();
    assert!((v[2] - v[1]).abs() <= (v[1] - v[0]).abs() + 1e-12, "{v:?}");
}

#[test]
fn lengths_of_simple_paths() {
    let m = ReferenceModel::<f64>::unit(64).unwrap();
    let u = SymplecticPotential::from_fn(&m, |y| 0.1 * (2.0 * y).sin()).unwrap();
    let w = make_power_weight(1.0).unwrap();
    let still = SpaceTimeField::from_segment(&weak_geodesic(&u, &u).unwrap(), 9).unwrap();
    assert!(chi_length(&still, &w).unwrap() < 1e-15);
    let shift = SpaceTimeField::from_segment(&weak_geodesic(&u, &u.shifted(-0.4)).unwrap(), 9).unwrap();
    let l = chi_length(&shift, &w).unwrap();
    assert!((l - 0.4).abs() < 1e-12, "{l}");
}

#[test]
fn bad_inputs() {
    let m = ReferenceModel::<f64>::unit(64).unwrap();
    let z = SymplecticPotential::zero(&m);
    assert!(solve_eps_geodesic(&z, &z, 0.0, &EpsOptions::default()).is_err());
    assert!(solve_eps_geodesic(&z, &z, f64::NAN, &EpsOptions::default()).is_err());
    let f = solve_eps_geodesic(&z, &z, 1e-6, &EpsOptions { time_nodes: 9, ..Default::default() }).unwrap();
    assert_eq!(f.warnings().len(), 1);
    let csv = f.to_csv();
    assert!(csv.starts_with("t,y,dual_value\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 64);
}
