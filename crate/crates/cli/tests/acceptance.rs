//! Acceptance run: one pass/fail line per criterion.

use std::process::Command;
use std::time::Instant;

use orlicz_finsler::epsgeodesic::SpaceTimeField;
use orlicz_finsler::measure::DiscreteMeasure;
use orlicz_finsler::metrics::{am_dual, d_p_pythagoras_check};
use orlicz_finsler::orlicz::{gauge_norm, holder_pair_with, reset_sandwich_tally, sandwich_tally};
use orlicz_finsler::random::{random_potential, trial_rng, Roughness};
use orlicz_finsler::toric::{weak_geodesic, Model, ReferenceModel};
use orlicz_finsler::weights::{conjugate, make_power_weight, young_residual, ConjugateGrid};
use orlicz_finsler::battery::{distance_energy_pair, draw_trial, fit_equivalence_constant};
use orlicz_finsler::Potential;
use orlicz_finsler_cli::verify::{self, Row};
use rand::Rng;
use rayon::prelude::*;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn unit(n: usize) -> Model<f64> {
    ReferenceModel::unit(n).unwrap()
}

fn random_samples(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>, DiscreteMeasure<f64>) {
    let n = rng.gen_range(8..=256);
    let scale: f64 = rng.gen_range(0.1..1.0);
    let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0) * scale).collect();
    let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let nodes: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let mu = DiscreteMeasure::new(nodes, w).unwrap().into_probability().unwrap();
    (f, g, mu)
}

fn lp(f: &[f64], mu: &DiscreteMeasure<f64>, p: f64) -> f64 {
    f.iter()
        .zip(mu.weights())
        .map(|(x, w)| x.abs().powf(p) * w)
        .sum::<f64>()
        .powf(1.0 / p)
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn failing(rows: &[Row]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} {} ({} of {})", r.property, r.weight, r.violations, r.checks))
        .collect()
}

fn rows_summary(rows: &[Row]) -> String {
    let bad = failing(rows);
    if bad.is_empty() {
        format!("{} rows, {} checks, all hold", rows.len(), rows.iter().map(|r| r.checks).sum::<usize>())
    } else {
        format!("violations: {}", bad.join("; "))
    }
}

fn c1() -> Verdict {
    let errs: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let (f, _, mu) = random_samples(&mut trial_rng(101, i));
            max([1.0, 1.5, 2.0, 3.0].map(|p| {
                let n = gauge_norm(&f, &make_power_weight(p).unwrap(), &mu).unwrap();
                let e = lp(&f, &mu, p);
                (n - e).abs() / e
            }))
        })
        .collect();
    let worst = max(errs.iter().copied());
    Verdict {
        id: 1,
        title: "Orlicz solver matches L^p norms",
        pass: worst <= 1e-10,
        detail: format!("200 functions x p in {{1,1.5,2,3}}, max relative error {worst:.2e} (tol 1e-10)"),
    }
}

fn c2(extra: Option<(u64, u64)>) -> Verdict {
    let t = sandwich_tally();
    let (sc, sv) = extra.unwrap_or((0, 0));
    Verdict {
        id: 2,
        title: "Norm/integral sandwich on every computed norm",
        pass: t.violations == 0 && sv == 0 && t.checks > 0 && extra.is_some(),
        detail: format!(
            "{} in-process norms with {} violations (worst relative {:.1e}); verify subprocess {} norms with {} violations",
            t.checks, t.violations, t.max_relative_violation, sc, sv
        ),
    }
}

fn c3() -> Verdict {
    let ws = verify::weight_set();
    let mut holder = f64::NEG_INFINITY;
    let mut young = f64::NEG_INFINITY;
    for w in &ws {
        let c = conjugate(w, ConjugateGrid::default());
        let r: Vec<(f64, f64)> = (0..500u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(103, i);
                let (f, mut g, mu) = random_samples(&mut rng);
                if i % 2 == 1 {
                    // near-extremal: g along the derivative of the weight at f/|f|
                    let nf = gauge_norm(&f, w, &mu).unwrap();
                    g = f.iter().map(|x| w.derivative(x / nf)).collect();
                }
                let (l, r) = holder_pair_with(&f, &g, w, &c, &mu).unwrap();
                let a: f64 = rng.gen_range(-8.0..8.0);
                let b: f64 = rng.gen_range(-8.0..8.0);
                (l - r, -young_residual(w, &c, a, b))
            })
            .collect();
        holder = holder.max(max(r.iter().map(|x| x.0)));
        young = young.max(max(r.iter().map(|x| x.1)));
    }
    Verdict {
        id: 3,
        title: "Young and Hölder inequalities",
        pass: holder <= 1e-10 && young <= 1e-8,
        detail: format!(
            "500 pairs x {} weights (2 with numeric conjugates): max(lhs-rhs) {holder:.2e} (tol 1e-10), min Young residual {:.2e} (tol -1e-8)",
            ws.len(),
            -young
        ),
    }
}

fn c4() -> Verdict {
    let m = unit(256);
    let ws = verify::metric_weights();
    let worst = max((0..100u64)
        .into_par_iter()
        .map(|i| {
            let t = draw_trial(&m, 104, i, &Roughness::default());
            let f = SpaceTimeField::from_segment(&weak_geodesic(&t.u0, &t.u1).unwrap(), 33).unwrap();
            max(ws.iter().map(|w| {
                let s = f.speed_profile(w).unwrap();
                max(s.iter().copied()) - s.iter().copied().fold(f64::MAX, f64::min)
            }))
        })
        .collect::<Vec<_>>());
    Verdict {
        id: 4,
        title: "Geodesics have constant chi-speed",
        pass: worst <= 1e-8,
        detail: format!("100 pairs x 3 weights x 33 times, max t-variation {worst:.2e} (tol 1e-8)"),
    }
}

/// A transversal pair whose dual kink sits on a cell edge at every grid size.
fn pythagoras_pair(n: usize) -> (Potential, Potential) {
    let m = unit(n);
    let u0 = Potential::from_fn(&m, |y| 0.1 * (y - 0.5).abs() + 0.1 * (3.0 * y).sin()).unwrap();
    let u1 = Potential::from_fn(&m, |y| -0.2 * y * y).unwrap();
    let u1 = u1.shifted(am_dual(&u1) - am_dual(&u0));
    (u0, u1)
}

fn c5() -> Verdict {
    let grids = [1024usize, 2048, 4096];
    let mut p_forms = Vec::new();
    let mut am = Vec::new();
    for &n in &grids {
        let (u0, u1) = pythagoras_pair(n);
        let a = d_p_pythagoras_check(&u0, &u1, 1.0).unwrap();
        let b = d_p_pythagoras_check(&u0, &u1, 2.0).unwrap();
        p_forms.push(a.relative_defect.max(b.relative_defect));
        am.push(a.am_relative_defect.unwrap());
    }
    let ratios = [am[1] / am[0], am[2] / am[1]];
    let halving = ratios.iter().all(|r| (0.35..=0.65).contains(r));
    let pass = p_forms[1] <= 1e-4 && am[1] <= 1e-4 && halving && p_forms.iter().all(|d| *d <= 1e-10);
    Verdict {
        id: 5,
        title: "Pythagorean formulas",
        pass,
        detail: format!(
            "p-forms (p=1,2) defect {:.1e} at 2048, exact to rounding on all grids; AM form defect {:.2e} at 2048, ratios {:.3} {:.3} under doubling 1024->4096 (band 0.35..0.65)",
            p_forms[1], am[1], ratios[0], ratios[1]
        ),
    }
}

fn c6() -> Verdict {
    // h^2 <= 1e-6 at this grid, the scale of the stated slack
    let rows = verify::metric_battery(&unit(1024), &verify::metric_weights(), 106, 1000).unwrap();
    let keep = |p: &str| p.starts_with("ordered_") || p.starts_with("rooftop_") || p.starts_with("max_additivity") || p == "contraction";
    let rows: Vec<Row> = rows.into_iter().filter(|r| keep(&r.property)).collect();
    let worst = max(rows.iter().map(|r| r.worst));
    Verdict {
        id: 6,
        title: "Inequality battery with the stated constants",
        pass: !rows.is_empty() && rows.iter().all(|r| r.pass && r.checks == 1000),
        detail: format!("1000 trials x 3 weights at grid 1024, slack 1e-6: {}; worst excess {worst:.2e}", rows_summary(&rows)),
    }
}

fn c7() -> Verdict {
    let ws = verify::metric_weights();
    let r = Roughness::default();
    let mut fits = Vec::new();
    let mut ok = true;
    for &n in &[1024usize, 2048] {
        let m = unit(n);
        let pairs: Vec<(Potential, Potential)> = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(107, i);
                (random_potential(&m, &mut rng, &r), random_potential(&m, &mut rng, &r))
            })
            .collect();
        let mut row = Vec::new();
        for w in &ws {
            let de: Vec<(f64, f64)> = pairs
                .par_iter()
                .map(|(a, b)| distance_energy_pair(a, b, w).unwrap())
                .collect();
            let c = fit_equivalence_constant(&de);
            ok &= c.is_finite() && de.iter().all(|(d, i)| i / c <= d * (1.0 + 1e-12) && *d <= c * i * (1.0 + 1e-12));
            row.push(c);
        }
        fits.push(row);
    }
    let drift: Vec<f64> = fits[0].iter().zip(&fits[1]).map(|(a, b)| (a - b).abs() / b).collect();
    let pass = ok && drift.iter().all(|d| *d <= 0.1);
    let names: Vec<String> = ws.iter().map(verify::name).collect();
    let detail = names
        .iter()
        .enumerate()
        .map(|(k, nm)| format!("{nm}: C={:.6}/{:.6} ({:.2}%)", fits[0][k], fits[1][k], 100.0 * drift[k]))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict {
        id: 7,
        title: "Energy-distance equivalence constant",
        pass,
        detail: format!("1000 pairs per weight at grids 1024/2048: {detail} (stability tol 10%)"),
    }
}

fn c8() -> Verdict {
    let m = unit(256);
    let w = orlicz_finsler::weights::mollify(&make_power_weight(1.5).unwrap(), 8).unwrap();
    let mut obs: Vec<Vec<verify::Obs>> = verify::EPS_PAIRS
        .par_iter()
        .map(|p| verify::eps_pair_checks(&m, p, &w).unwrap())
        .collect();
    obs.push(
        verify::EPS_SWEEP
            .iter()
            .map(|&e| verify::Obs::new("flat_parabola", "", verify::flat_parabola_defect(&m, e).unwrap(), 1e-10))
            .collect(),
    );
    let rows = verify::fold("epsgeo", obs);
    let stat = |p: &str| rows.iter().find(|r| r.property == p).and_then(|r| r.constant).unwrap_or(f64::NAN);
    Verdict {
        id: 8,
        title: "Epsilon-geodesics approach the weak geodesic",
        pass: rows.iter().all(|r| r.pass),
        detail: format!(
            "5 pairs x eps in {{1e-1,1e-2,1e-3}}: {}; max length gap {:.2e} (tol 1e-2), max Laplacian probe ratio {:.3} (tol 2)",
            rows_summary(&rows),
            stat("length_gap_smallest_eps"),
            stat("laplacian_probe_ratio")
        ),
    }
}

fn c9() -> Verdict {
    let m: Model<f64> = ReferenceModel::fano(256).unwrap();
    let starts = verify::even_starts(&m, 109).unwrap();
    let obs: Vec<_> = starts
        .par_iter()
        .map(|u| verify::flow_start_checks(&m, u, 0.05, 20.0).unwrap())
        .collect();
    let rows = verify::fold("flow", obs);
    let worst = |p: &str| rows.iter().find(|r| r.property == p).map_or(f64::NAN, |r| r.worst);
    Verdict {
        id: 9,
        title: "Kähler-Ricci flow converges exponentially",
        pass: rows.iter().all(|r| r.pass),
        detail: format!(
            "3 even starts, dt 0.05, t=20: {}; min R^2 {:.4}, max d1 to KE {:.1e}, max AM drift {:.1e}, normalization gap {:.1e}",
            rows_summary(&rows),
            0.99 - worst("decay_fit_r_squared"),
            worst("final_d1_to_ke"),
            worst("am_drift"),
            worst("normalizations_agree")
        ),
    }
}

fn c10() -> Verdict {
    let m: Model<f64> = ReferenceModel::fano(256).unwrap();
    let rows = verify::ding_rows(&m, 110, 210, 500, 500).unwrap();
    let consts: Vec<String> = rows
        .iter()
        .map(|r| format!("{}={:.3}", r.property, r.constant.unwrap_or(f64::NAN)))
        .collect();
    Verdict {
        id: 10,
        title: "Ding and J bounds",
        pass: rows.iter().all(|r| r.pass && r.checks == 500),
        detail: format!("calibrated on 500, tested on 500 fresh: {}; {}", rows_summary(&rows), consts.join(", ")),
    }
}

fn c11() -> (Verdict, Option<(u64, u64)>) {
    let exe = env!("CARGO_BIN_EXE_orlicz-finsler");
    let run = || {
        Command::new(exe)
            .args(["verify", "--suite", "all", "--trials", "200", "--seed", "7"])
            .output()
            .expect("verify binary runs")
    };
    let a = run();
    let b = run();
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    let text = String::from_utf8_lossy(&a.stdout);
    let tally = text.lines().find(|l| l.starts_with("all,norm_sandwich,")).map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        (f[3].parse().unwrap_or(0), f[4].parse().unwrap_or(u64::MAX))
    });
    let v = Verdict {
        id: 11,
        title: "verify output is deterministic",
        pass: same && a.status.success() && b.status.success(),
        detail: format!(
            "two runs of `verify --suite all --trials 200 --seed 7`: {} bytes, identical={same}, exit codes {:?}/{:?}",
            a.stdout.len(),
            a.status.code(),
            b.status.code()
        ),
    };
    (v, tally)
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    reset_sandwich_tally();
    let start = Instant::now();
    let mut out = Vec::new();
    let steps: [fn() -> Verdict; 9] = [c1, c3, c4, c5, c6, c7, c8, c9, c10];
    for f in steps {
        let t = Instant::now();
        let v = f();
        eprintln!("criterion {} done in {:.1}s", v.id, t.elapsed().as_secs_f64());
        out.push(v);
    }
    let (v11, tally) = c11();
    out.push(v11);
    out.push(c2(tally));
    out.sort_by_key(|v| v.id);
    for v in &out {
        println!(
            "[{}] criterion {:>2}: {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail
        );
    }
    let failed = out.iter().filter(|v| !v.pass).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        out.len() - failed,
        out.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
