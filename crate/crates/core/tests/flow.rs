use orlicz_finsler::flow::*;
use orlicz_finsler::metrics::*;
use orlicz_finsler::random::{random_potential, trial_rng, Roughness};
use orlicz_finsler::toric::*;
use orlicz_finsler::weights::make_power_weight;

fn fano(n: usize) -> Model<f64> {
    ReferenceModel::fano(n).unwrap()
}

fn config(m: &Model<f64>, u: SymplecticPotential<f64>, dt: f64, t_end: f64, norm: Normalization) -> FlowConfig<f64> {
    FlowConfig {
        initial: renormalize(&u),
        dt,
        t_end,
        normalization: norm,
        ricci_potential: RicciPotential::reference(m),
        reference_ke: Some(SymplecticPotential::zero(m)),
    }
}

fn even_starts(m: &Model<f64>) -> Vec<SymplecticPotential<f64>> {
    let pi = std::f64::consts::PI;
    vec![
        SymplecticPotential::from_fn(m, |y| 0.2 * (y - 1.0).powi(2)).unwrap(),
        SymplecticPotential::from_fn(m, move |y| 0.1 * (pi * y).cos() + 0.05 * (2.0 * pi * y).cos()).unwrap(),
        random_potential(
            m,
            &mut trial_rng(21, 0),
            &Roughness {
                amplitude: 0.2,
                symmetric: true,
                ..Default::default()
            },
        ),
    ]
}

fn state(u: SymplecticPotential<f64>) -> FlowState<f64> {
    FlowState {
        potential: u,
        time: 0.0,
        diagnostics: Diagnostics {
            sup_rdot: f64::NAN,
            am: 0.0,
            ding_f: 0.0,
            j: 0.0,
            d1_to_ref: None,
        },
    }
}

#[test]
fn einstein_potential_is_stationary() {
    let m = fano(256);
    let cfg = config(&m, SymplecticPotential::zero(&m), 0.05, 1.0, Normalization::AmZero);
    let tr = run_flow(&cfg).unwrap();
    for s in &tr.states {
        assert!(s.potential.values().iter().all(|w| w.abs() <= 1e-8));
        assert!(s.diagnostics.sup_rdot <= 1e-8);
    }
    let rep = stability_probe(&tr.path(), &make_power_weight(2.0).unwrap(), 1e-8).unwrap();
    assert_eq!(rep.verdict, StabilityVerdict::NoDivergenceObserved);
    assert!(rep.tail_max_pairwise <= 1e-8);
}

#[test]
fn constant_shifts_are_invisible() {
    let m = fano(128);
    let u = renormalize(&even_starts(&m)[1]);
    let cfg = config(&m, u.clone(), 0.05, 1.0, Normalization::AmZero);
    let a = ricci_step(&state(u.clone()), &cfg).unwrap();
    let b = ricci_step(&state(u.shifted(0.7)), &cfg).unwrap();
    for (x, y) in a.potential.values().iter().zip(b.potential.values()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn even_starts_converge_exponentially() {
    let m = fano(256);
    let mut limits = Vec::new();
    for (k, u) in even_starts(&m).into_iter().enumerate() {
        let fine = run_flow(&config(&m, u.clone(), 0.025, 20.0, Normalization::AmZero)).unwrap();
        let coarse = run_flow(&config(&m, u, 0.05, 20.0, Normalization::AmZero)).unwrap();
        let (a, b) = (coarse.summary.decay.clone().unwrap(), fine.summary.decay.clone().unwrap());
        assert!(a.rate > 0.0 && b.r_squared >= 0.99 && a.r_squared >= 0.99, "start {k}: {a:?} {b:?}");
        assert!((a.rate - b.rate).abs() <= 0.2 * b.rate, "start {k}");
        assert!(fine.summary.final_d1_to_ref.unwrap() <= 1e-4);
        assert!(fine.summary.max_am_drift.unwrap() <= 1e-8);
        assert!(fine.summary.ding_nonincreasing);
        assert!(fine.states.iter().all(|s| s.potential.is_valid()));
        limits.push(fine.states.last().unwrap().potential.clone());
    }
    for u in &limits[1..] {
        assert!(d_p(&limits[0], u, 1.0).unwrap() <= 1e-4);
    }
}

#[test]
fn normalizations_agree_modulo_constants() {
    let m = fano(128);
    let u = even_starts(&m)[2].clone();
    let a = run_flow(&config(&m, u.clone(), 0.05, 3.0, Normalization::AmZero)).unwrap();
    let b = run_flow(&config(&m, u, 0.05, 3.0, Normalization::MassOne)).unwrap();
    assert_eq!(a.states.len(), b.states.len());
    for (x, y) in a.states.iter().zip(&b.states) {
        let d: Vec<f64> = x.potential.values().iter().zip(y.potential.values()).map(|(p, q)| p - q).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        assert!(d.iter().all(|v| (v - mean).abs() <= 1e-6));
    }
    let h = RicciPotential::reference(&m);
    for s in b.states.windows(2) {
        assert!(mass_defect(&s[0].potential, &s[1].potential, 0.05, &h) <= 1e-8);
    }
}

#[test]
fn convergent_trajectory_is_cauchy() {
    let m = fano(128);
    let tr = run_flow(&config(&m, even_starts(&m)[0].clone(), 0.05, 20.0, Normalization::AmZero)).unwrap();
    let path: Vec<_> = tr.path().into_iter().step_by(20).collect();
    let rep = stability_probe(&path, &make_power_weight(1.5).unwrap(), 1e-4).unwrap();
    assert_eq!(rep.verdict, StabilityVerdict::NoDivergenceObserved);
    assert!(rep.tail_max_pairwise <= 1e-4);
}

#[test]
fn ding_bounds_hold_on_fresh_samples() {
    let m = fano(128);
    let h = RicciPotential::reference(&m);
    let draw = |seed: u64, k: usize| -> Vec<SymplecticPotential<f64>> {
        (0..k as u64)
            .map(|i| renormalize(&random_potential(&m, &mut trial_rng(seed, i), &Roughness::default())))
            .collect()
    };
    let (f0, _) = ding_and_j(&SymplecticPotential::zero(&m), &h.values).unwrap();
    let cal = calibrate_ding(&ding_points(&draw(100, 60), &h).unwrap(), f0, 0.1);
    let rep = ding_properness_probe(&draw(200, 60), &h, &cal).unwrap();
    assert_eq!((rep.upper_violations, rep.j_violations, rep.sup_violations), (0, 0, 0), "{cal:?}");
    let zero = ding_points(&[SymplecticPotential::zero(&m)], &h).unwrap()[0];
    assert!(zero.d1 == 0.0 && zero.j.abs() < 1e-14 && zero.ding_f <= cal.b);
}

#[test]
fn stretching_family_grows_in_both() {
    let m = fano(128);
    let h = RicciPotential::reference(&m);
    let v = SymplecticPotential::from_fn(&m, |y| (y - 0.5).powi(2)).unwrap();
    let family: Vec<_> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&s| renormalize(&SymplecticPotential::new(&m, v.values().iter().map(|x| s * x).collect()).unwrap()))
        .collect();
    let pts = ding_points(&family, &h).unwrap();
    assert!(pts.windows(2).all(|p| p[1].j > p[0].j && p[1].d1 > p[0].d1));
    assert!(pts[3].j > 3.0 * pts[0].j);
}

#[test]
fn rejects_bad_configs() {
    let m = fano(64);
    let u = SymplecticPotential::from_fn(&m, |y| 0.1 * y).unwrap();
    let mut cfg = config(&m, u.clone(), 0.05, 1.0, Normalization::AmZero);
    cfg.dt = 0.0;
    assert!(run_flow(&cfg).is_err());
    let mut cfg = config(&m, u.clone(), 0.05, 1.0, Normalization::AmZero);
    cfg.initial = u.shifted(0.5);
    assert!(run_flow(&cfg).is_err());
    cfg.normalization = Normalization::MassOne;
    assert!(run_flow(&cfg).is_ok());
    let other = ReferenceModel::fano(32).unwrap();
    let mut cfg = config(&m, u, 0.05, 1.0, Normalization::AmZero);
    cfg.ricci_potential = RicciPotential::reference(&other);
    assert!(run_flow(&cfg).is_err());
}
