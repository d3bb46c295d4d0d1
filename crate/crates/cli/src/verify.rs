//! Property suites behind `verify`.
//!
//! A suite evaluates a fixed list of observations per trial, in parallel
//! over trials, and folds them in trial order into one row per property.

use orlicz_finsler::battery::*;
use orlicz_finsler::epsgeodesic::{chi_length, laplacian_bound_probe, solve_eps_geodesic, EpsOptions, SpaceTimeField};
use orlicz_finsler::flow::{
    calibrate_ding, ding_points, ding_properness_probe, run_flow, FlowConfig, Normalization, Trajectory,
};
use orlicz_finsler::measure::DiscreteMeasure;
use orlicz_finsler::metrics::{am_dual, d_chi, d_p_pythagoras_check, ding_and_j, i_energy, renormalize, RicciPotential};
use orlicz_finsler::orlicz::{gauge_norm, gauge_norm_report, holder_pair_with, sandwich_tally};
use orlicz_finsler::random::{random_potential, trial_rng, Roughness};
use orlicz_finsler::toric::{ma_pushforward, rooftop, weak_geodesic, Model, ReferenceModel};
use orlicz_finsler::weights::{
    check_growth_sandwich, conjugate, make_power_weight, mollify, symmetric_samples, young_residual, ConjugateGrid,
};
use orlicz_finsler::{Potential, Weight};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Suite;
use crate::io::fmt;
use crate::CliError;

/// Grid slack of the metric inequality battery.
pub const BATTERY_SLACK: f64 = 1e-6;
/// The fiber-quadrature AM carries an O(h²) error that the Lipschitz bound must absorb.
pub const AM_QUADRATURE_SLACK: f64 = 5e-5;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub grid: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub suite: &'static str,
    pub property: String,
    pub weight: String,
    pub checks: usize,
    pub violations: usize,
    /// Largest observed excess over the bound (negative when every check held with room).
    pub worst: f64,
    /// Empirical constant, where the property has one.
    pub constant: Option<f64>,
    pub pass: bool,
}

/// One evaluated check: it holds when `excess <= slack`.
#[derive(Debug, Clone)]
pub struct Obs {
    pub property: String,
    pub weight: String,
    pub excess: f64,
    pub slack: f64,
    pub stat: Option<f64>,
}

impl Obs {
    pub fn new(property: impl Into<String>, weight: impl Into<String>, excess: f64, slack: f64) -> Self {
        Obs {
            property: property.into(),
            weight: weight.into(),
            excess,
            slack,
            stat: None,
        }
    }

    pub fn with_stat(mut self, s: f64) -> Self {
        self.stat = Some(s);
        self
    }

    fn bound(b: &Bound, w: &str, slack: f64) -> Self {
        Obs::new(b.name, w, b.excess(), slack)
    }
}

/// Folds observations into rows, keeping first-seen property order.
pub fn fold(suite: &'static str, trials: Vec<Vec<Obs>>) -> Vec<Row> {
    let mut rows: Vec<(Row, Option<f64>)> = Vec::new();
    for obs in trials.into_iter().flatten() {
        let at = rows
            .iter()
            .position(|(r, _)| r.property == obs.property && r.weight == obs.weight);
        let i = at.unwrap_or_else(|| {
            rows.push((
                Row {
                    suite,
                    property: obs.property.clone(),
                    weight: obs.weight.clone(),
                    checks: 0,
                    violations: 0,
                    worst: f64::NEG_INFINITY,
                    constant: None,
                    pass: true,
                },
                None,
            ));
            rows.len() - 1
        });
        let (r, stat) = &mut rows[i];
        r.checks += 1;
        if !(obs.excess <= obs.slack) {
            r.violations += 1;
        }
        if obs.excess.is_nan() || obs.excess > r.worst {
            r.worst = obs.excess;
        }
        if let Some(s) = obs.stat {
            *stat = Some(stat.map_or(s, |t: f64| if s.is_nan() || s > t { s } else { t }));
        }
    }
    rows.into_iter()
        .map(|(mut r, s)| {
            r.constant = s;
            r.pass = r.violations == 0;
            r
        })
        .collect()
}

fn par_trials<F>(n: usize, f: F) -> Result<Vec<Vec<Obs>>, CliError>
where
    F: Fn(u64) -> Result<Vec<Obs>, CliError> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

fn salted(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

pub fn name(w: &Weight) -> String {
    w.spec().to_string()
}

/// χ_1, χ_2 and the mollified χ_1.5 used by the metric checks.
pub fn metric_weights() -> Vec<Weight> {
    vec![
        make_power_weight(1.0).unwrap(),
        make_power_weight(2.0).unwrap(),
        mollify(&make_power_weight(1.5).unwrap(), 8).unwrap(),
    ]
}

/// Power weights and two mollified ones, the last two with numeric conjugates.
pub fn weight_set() -> Vec<Weight> {
    let mut v: Vec<Weight> = [1.0, 1.5, 2.0, 3.0]
        .iter()
        .map(|&p| make_power_weight(p).unwrap())
        .collect();
    v.push(mollify(&make_power_weight(1.5).unwrap(), 8).unwrap());
    v.push(mollify(&make_power_weight(3.0).unwrap(), 8).unwrap());
    v
}

pub fn run(suite: Suite, o: &Options) -> Result<Vec<Row>, CliError> {
    let before = sandwich_tally();
    let mut rows = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Weights {
        rows.extend(weights(o)?);
    }
    if all || suite == Suite::Orlicz {
        rows.extend(orlicz(o)?);
    }
    if all || suite == Suite::Toric {
        rows.extend(toric(o)?);
    }
    if all || suite == Suite::Metrics {
        rows.extend(metrics(o)?);
    }
    if all || suite == Suite::Epsgeo {
        rows.extend(epsgeo(o)?);
    }
    if all || suite == Suite::Flow {
        rows.extend(flow(o)?);
    }
    let after = sandwich_tally();
    let violations = (after.violations - before.violations) as usize;
    rows.push(Row {
        suite: suite.name(),
        property: "norm_sandwich".into(),
        weight: "all".into(),
        checks: (after.checks - before.checks) as usize,
        violations,
        worst: after.max_relative_violation,
        constant: None,
        pass: violations == 0,
    });
    Ok(rows)
}

pub fn to_csv(rows: &[Row]) -> String {
    crate::io::csv_text(
        &["suite", "property", "weight", "checks", "violations", "worst", "constant", "pass"],
        rows.iter().map(|r| {
            vec![
                r.suite.to_string(),
                r.property.clone(),
                r.weight.clone(),
                r.checks.to_string(),
                r.violations.to_string(),
                fmt(r.worst),
                r.constant.map(fmt).unwrap_or_default(),
                r.pass.to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------

pub fn weights(o: &Options) -> Result<Vec<Row>, CliError> {
    let ws = weight_set();
    let conj: Vec<_> = ws.iter().map(|w| conjugate(w, ConjugateGrid::default())).collect();
    let samples = symmetric_samples::<f64>(10.0, 200);
    let mut obs = Vec::new();
    for w in &ws {
        let c = w.validate(&samples);
        let worst = c
            .zero_defect
            .max(c.even_defect)
            .max(c.convexity_defect)
            .max(c.normalization_defect)
            .max(c.growth_defect);
        let excess = if c.passed { worst.min(0.0) } else { worst.max(f64::MIN_POSITIVE) };
        obs.push(Obs::new("invariants", name(w), excess, 0.0).with_stat(w.growth_exponent()));
    }
    let growth_samples = symmetric_samples::<f64>(50.0, 100);
    let mut rows = fold("weights", vec![obs]);
    let trials = par_trials(o.trials, |i| {
        let mut rng = trial_rng(salted(o.seed, 1), i);
        let mut v = Vec::new();
        for (w, c) in ws.iter().zip(&conj) {
            let eps: f64 = rng.gen_range(0.01..0.99);
            let g = check_growth_sandwich(w, eps, &growth_samples)?;
            let excess = if g.passed { 0.0 } else { g.max_violation().max(f64::MIN_POSITIVE) };
            v.push(Obs::new("growth_sandwich", name(w), excess, 0.0).with_stat(g.max_violation()));
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..8 {
                let a: f64 = rng.gen_range(-8.0..8.0);
                let b: f64 = rng.gen_range(-8.0..8.0);
                worst = worst.max(-young_residual(w, c, a, b));
            }
            v.push(Obs::new("young_inequality", name(w), worst, 1e-8));
        }
        Ok(v)
    })?;
    rows.extend(fold("weights", trials));
    Ok(rows)
}

/// Random samples on a midpoint measure with a random number of nodes.
fn random_function(rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>, DiscreteMeasure<f64>) {
    let n = rng.gen_range(8..=256);
    let scale: f64 = rng.gen_range(0.1..1.0);
    let mut draw = |_| rng.gen_range(-10.0..10.0) * scale;
    let f: Vec<f64> = (0..n).map(&mut draw).collect();
    let g: Vec<f64> = (0..n).map(&mut draw).collect();
    (f, g, DiscreteMeasure::midpoint(0.0, 1.0, n))
}

fn lp_norm(f: &[f64], mu: &DiscreteMeasure<f64>, p: f64) -> f64 {
    f.iter()
        .zip(mu.weights())
        .map(|(x, w)| x.abs().powf(p) * w)
        .sum::<f64>()
        .powf(1.0 / p)
}

pub fn orlicz(o: &Options) -> Result<Vec<Row>, CliError> {
    let ws = weight_set();
    let conj: Vec<_> = ws.iter().map(|w| conjugate(w, ConjugateGrid::default())).collect();
    let trials = par_trials(o.trials, |i| {
        let mut rng = trial_rng(salted(o.seed, 2), i);
        let (f, g, mu) = random_function(&mut rng);
        let c: f64 = rng.gen_range(-5.0..5.0);
        let mut v = Vec::new();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let w = make_power_weight(p)?;
            let n = gauge_norm(&f, &w, &mu)?;
            let e = lp_norm(&f, &mu, p);
            v.push(Obs::new("lp_identity", name(&w), (n - e).abs() / e, 1e-10));
        }
        for (w, cw) in ws.iter().zip(&conj) {
            let (nf, rep) = gauge_norm_report(&f, w, &mu)?;
            v.push(Obs::new("sandwich", name(w), if rep.sandwich_ok == Some(true) { 0.0 } else { 1.0 }, 0.0));
            let ng = gauge_norm(&g, w, &mu)?;
            let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            let ns = gauge_norm(&sum, w, &mu)?;
            v.push(Obs::new("triangle", name(w), (ns - nf - ng) / (nf + ng), 1e-10));
            let scaled: Vec<f64> = f.iter().map(|x| c * x).collect();
            let nc = gauge_norm(&scaled, w, &mu)?;
            v.push(Obs::new("homogeneity", name(w), (nc - c.abs() * nf).abs() / (c.abs() * nf), 1e-10));
            let (lhs, rhs) = holder_pair_with(&f, &g, w, cw, &mu)?;
            v.push(Obs::new("holder", name(w), lhs - rhs, 1e-10).with_stat(lhs / rhs));
            let l1 = lp_norm(&f, &mu, 1.0);
            v.push(Obs::new("l1_domination", name(w), l1 / nf - 1.0, 1e-10).with_stat(l1 / nf));
        }
        Ok(v)
    })?;
    Ok(fold("orlicz", trials))
}

fn unit(o: &Options) -> Result<Model<f64>, CliError> {
    Ok(ReferenceModel::unit(o.grid)?)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(f64::NEG_INFINITY, |m, (x, y)| m.max(x - y))
}

fn spread(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::MIN, f64::max) - v.iter().copied().fold(f64::MAX, f64::min)
}

pub fn toric(o: &Options) -> Result<Vec<Row>, CliError> {
    let m = unit(o)?;
    let ws = metric_weights();
    let r = Roughness::default();
    let trials = par_trials(o.trials, |i| {
        let t = draw_trial(&m, salted(o.seed, 3), i, &r);
        let mut rng = trial_rng(salted(o.seed, 4), i);
        let mut v = Vec::new();
        let cd = [&t.u0, &t.u1, &t.u2]
            .iter()
            .map(|u| if u.is_valid() { u.convexity_defect() } else { f64::INFINITY })
            .fold(0.0, f64::max);
        v.push(Obs::new("valid_draws", "", cd, 1e-9));
        let p = rooftop(&t.u0, &t.u1)?;
        let (a, b) = (t.u0.primal_at_reference(), t.u1.primal_at_reference());
        let lower: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let pp = p.primal_at_reference();
        v.push(Obs::new("rooftop_below_min", "", max_gap(&pp, &lower), 1e-9));
        let (sa, sb): (f64, f64) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
        let q = rooftop(&t.u0.shifted(sa), &t.u1.shifted(sb))?;
        v.push(Obs::new("rooftop_monotone", "", max_gap(&pp, &q.primal_at_reference()), 1e-9));
        let seg = weak_geodesic(&t.u0, &t.u1)?;
        let ends = max_gap(seg.at(0.0).values(), t.u0.values())
            .max(max_gap(t.u0.values(), seg.at(0.0).values()))
            .max(max_gap(seg.at(1.0).values(), t.u1.values()))
            .max(max_gap(t.u1.values(), seg.at(1.0).values()));
        v.push(Obs::new("geodesic_endpoints", "", ends, 0.0));
        let (a0, a1) = (am_dual(&t.u0), am_dual(&t.u1));
        let am = (0..=10)
            .map(|k| {
                let s = k as f64 / 10.0;
                (am_dual(&seg.at(s)) - ((1.0 - s) * a0 + s * a1)).abs()
            })
            .fold(0.0, f64::max);
        v.push(Obs::new("am_affine_on_geodesic", "", am, 1e-12));
        let mass = (ma_pushforward(&t.u0).measure.total_mass() - 1.0).abs();
        v.push(Obs::new("pushforward_mass", "", mass, 1e-12));
        let field = SpaceTimeField::from_segment(&seg, 33)?;
        for w in &ws {
            let sp = field.speed_profile(w)?;
            v.push(Obs::new("geodesic_constant_speed", name(w), spread(&sp), 1e-8).with_stat(sp[0]));
        }
        Ok(v)
    })?;
    Ok(fold("toric", trials))
}

/// The metric inequality battery on `trials` random triples.
pub fn metric_battery(m: &Model<f64>, ws: &[Weight], seed: u64, trials: usize) -> Result<Vec<Row>, CliError> {
    let ones: Vec<f64> = ws.iter().map(conjugate_norm_of_one).collect::<Result<_, _>>()?;
    let r = Roughness::default();
    let out = par_trials(trials, |i| {
        let t = draw_trial(m, seed, i, &r);
        let top = orlicz_finsler::toric::max_potential(&t.u0, &t.u1)?;
        let mut v = vec![
            Obs::bound(&i_max_monotone(&t.u0, &t.u1)?, "", BATTERY_SLACK),
            Obs::new("i_energy_nonnegative", "", -i_energy(&t.u0, &t.u1)?, BATTERY_SLACK),
        ];
        for p in [1.0, 2.0] {
            let rep = d_p_pythagoras_check(&t.u0, &t.u1, p)?;
            v.push(Obs::new("pythagoras", format!("chi_{p}"), rep.relative_defect, 1e-10));
        }
        for (w, one) in ws.iter().zip(&ones) {
            let n = name(w);
            for b in [triangle(&t, w)?, contraction(&t, w)?, comparison(&t, w)?] {
                v.push(Obs::bound(&b, &n, BATTERY_SLACK));
            }
            for b in ordered_sandwich(&t.u0, &top, w)? {
                v.push(Obs::bound(&b, &n, BATTERY_SLACK));
            }
            for b in rooftop_decomposition(&t.u0, &t.u1, w)? {
                v.push(Obs::bound(&b, &n, BATTERY_SLACK));
            }
            for b in max_additivity(&t.u0, &t.u1, w)? {
                v.push(Obs::bound(&b, &n, BATTERY_SLACK));
            }
            let b = am_lipschitz(&t.u0, &t.u1, w, *one)?;
            v.push(Obs::bound(&b, &n, AM_QUADRATURE_SLACK));
            let c = 0.3 + 0.1 * (i % 5) as f64;
            let shift = (d_chi(&t.u0, &t.u0.shifted(c), w)? - c).abs();
            v.push(Obs::new("distance_of_shift", &n, shift, 1e-12));
            let h = halfway_ratio(&t.u0, &t.u1, w)?.unwrap_or(0.0);
            v.push(Obs::new("halfway_ratio", &n, h - 1.0, 0.0).with_stat(h));
            let (d, e) = distance_energy_pair(&t.u0, &t.u1, w)?;
            let ratio = if d > 0.0 && e > 0.0 { (d / e).max(e / d) } else { 1.0 };
            let bad = if ratio.is_finite() { 0.0 } else { f64::INFINITY };
            v.push(Obs::new("energy_distance_equivalence", &n, bad, 0.0).with_stat(ratio));
        }
        Ok(v)
    })?;
    Ok(fold("metrics", out))
}

pub fn metrics(o: &Options) -> Result<Vec<Row>, CliError> {
    let m = unit(o)?;
    let mut rows = metric_battery(&m, &metric_weights(), salted(o.seed, 5), o.trials)?;
    // sup u against d_1(0,u): calibrate on one half of the stream, test on the other
    let z = Potential::zero(&m);
    let w1 = make_power_weight(1.0)?;
    let r = Roughness::default();
    let pts = |salt: u64| -> Result<Vec<(f64, f64)>, CliError> {
        (0..o.trials as u64)
            .into_par_iter()
            .map(|i| {
                let u = random_potential(&m, &mut trial_rng(salted(o.seed, salt), i), &r);
                Ok((u.sup(), d_chi(&z, &u, &w1)?))
            })
            .collect()
    };
    let cal = pts(6)?;
    let c = cal.iter().fold(1.0f64, |c, (s, d)| c.max(s / (d + 1.0)));
    let fresh = pts(7)?;
    let obs = fresh
        .iter()
        .map(|(s, d)| vec![Obs::new("sup_control", "chi_1", s - 2.0 * c * (d + 1.0), 0.0).with_stat(c)])
        .collect();
    rows.extend(fold("metrics", obs));
    Ok(rows)
}

type Pair = (fn(f64) -> f64, fn(f64) -> f64);

/// Fixed analytic endpoint pairs for the ε-geodesic checks.
pub const EPS_PAIRS: [Pair; 5] = [
    (|y| 0.1 * (3.0 * y).sin(), |y| -0.2 * y * y),
    (|_| 0.0, |y| 0.3 * (y - 0.5).powi(2)),
    (|y| 0.05 * (6.0 * y).cos(), |y| 0.1 * y),
    (|y| 0.2 * y * y * y, |y| -0.1 * (2.0 * y + 1.0).ln()),
    (|y| 0.15 * (y - 0.3).powi(2), |y| 0.15 * (y - 0.7).powi(2) + 0.05),
];

pub const EPS_SWEEP: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Observations of the ε-geodesic sweep for one endpoint pair.
pub fn eps_pair_checks(m: &Model<f64>, pair: &Pair, w: &Weight) -> Result<Vec<Obs>, CliError> {
    let u0 = Potential::from_fn(m, pair.0)?;
    let u1 = Potential::from_fn(m, pair.1)?;
    let seg = weak_geodesic(&u0, &u1)?;
    let d = d_chi(&u0, &u1, w)?;
    let mut v = Vec::new();
    let (mut dist, mut lap) = (Vec::new(), Vec::new());
    let mut gap = f64::NAN;
    for eps in EPS_SWEEP {
        let f = solve_eps_geodesic(&u0, &u1, eps, &EpsOptions::default())?;
        v.push(Obs::new("residual", "", f.residual(), 1e-10));
        v.push(Obs::new("t_convexity", "", f.t_convexity_defect(), 1e-8));
        dist.push(f.sup_distance(&seg));
        lap.push(laplacian_bound_probe(&f));
        gap = (chi_length(&f, w)? - d).abs() / d;
    }
    let mono = dist.windows(2).map(|x| x[1] - x[0]).fold(f64::NEG_INFINITY, f64::max);
    v.push(Obs::new("sup_distance_decreasing", "", mono, 0.0).with_stat(dist[2]));
    v.push(Obs::new("length_gap_smallest_eps", name(w), gap, 1e-2).with_stat(gap));
    let lo = lap.iter().copied().fold(f64::MAX, f64::min);
    let hi = lap.iter().copied().fold(0.0, f64::max);
    v.push(Obs::new("laplacian_probe_ratio", "", hi / lo - 2.0, 0.0).with_stat(hi / lo));
    Ok(v)
}

/// Worst deviation of the flat ε-geodesic from `ε t(t-1)/2`.
pub fn flat_parabola_defect(m: &Model<f64>, eps: f64) -> Result<f64, CliError> {
    let z = Potential::zero(m);
    let f = solve_eps_geodesic(&z, &z, eps, &EpsOptions::default())?;
    let mut worst = 0.0f64;
    for (t, row) in f.times().iter().zip(f.rows()) {
        let exact = eps * t * (t - 1.0) / 2.0;
        for w in row {
            worst = worst.max((-w - exact).abs());
        }
    }
    Ok(worst)
}

pub fn epsgeo(o: &Options) -> Result<Vec<Row>, CliError> {
    let m = unit(o)?;
    let w = mollify(&make_power_weight(1.5)?, 8)?;
    let mut trials: Vec<Vec<Obs>> = EPS_PAIRS
        .par_iter()
        .map(|p| eps_pair_checks(&m, p, &w))
        .collect::<Result<_, _>>()?;
    let flat: Vec<Obs> = EPS_SWEEP
        .par_iter()
        .map(|&e| Ok(Obs::new("flat_parabola", "", flat_parabola_defect(&m, e)?, 1e-10)))
        .collect::<Result<_, CliError>>()?;
    trials.push(flat);
    Ok(fold("epsgeo", trials))
}

/// Two analytic even starts and one random even start, on the `L = 2` polytope.
pub fn even_starts(m: &Model<f64>, seed: u64) -> Result<Vec<Potential>, CliError> {
    let pi = std::f64::consts::PI;
    let r = Roughness {
        amplitude: 0.2,
        symmetric: true,
        ..Default::default()
    };
    Ok(vec![
        Potential::from_fn(m, |y| 0.2 * (y - 1.0).powi(2))?,
        Potential::from_fn(m, move |y| 0.1 * (pi * y).cos() + 0.05 * (2.0 * pi * y).cos())?,
        random_potential(m, &mut trial_rng(seed, 0), &r),
    ])
}

pub fn flow_config(m: &Model<f64>, u: &Potential, dt: f64, t_end: f64, n: Normalization) -> FlowConfig<f64> {
    FlowConfig {
        initial: renormalize(u),
        dt,
        t_end,
        normalization: n,
        ricci_potential: RicciPotential::reference(m),
        reference_ke: Some(Potential::zero(m)),
    }
}

/// Largest deviation of two trajectories from differing by a constant at each step.
pub fn constant_offset_defect(a: &Trajectory<f64>, b: &Trajectory<f64>) -> f64 {
    if a.states.len() != b.states.len() {
        return f64::INFINITY;
    }
    a.states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| {
            let d: Vec<f64> = x
                .potential
                .values()
                .iter()
                .zip(y.potential.values())
                .map(|(p, q)| p - q)
                .collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()))
        })
        .fold(0.0, f64::max)
}

/// Observations of one converging flow run under both normalizations.
pub fn flow_start_checks(m: &Model<f64>, u: &Potential, dt: f64, t_end: f64) -> Result<Vec<Obs>, CliError> {
    let a = run_flow(&flow_config(m, u, dt, t_end, Normalization::AmZero))?;
    let b = run_flow(&flow_config(m, u, dt, t_end, Normalization::MassOne))?;
    let s = &a.summary;
    let (r2, rate) = s.decay.as_ref().map_or((f64::NAN, f64::NAN), |d| (d.r_squared, d.rate));
    Ok(vec![
        Obs::new("decay_fit_r_squared", "", 0.99 - r2, 0.0).with_stat(rate),
        Obs::new("final_d1_to_ke", "", s.final_d1_to_ref.unwrap_or(f64::NAN), 1e-4),
        Obs::new("am_drift", "", s.max_am_drift.unwrap_or(f64::NAN), 1e-8),
        Obs::new("ding_nonincreasing", "", if s.ding_nonincreasing { 0.0 } else { 1.0 }, 0.0),
        Obs::new("states_valid", "", if a.states.iter().all(|x| x.potential.is_valid()) { 0.0 } else { 1.0 }, 0.0),
        Obs::new("normalizations_agree", "", constant_offset_defect(&a, &b), 1e-6),
    ])
}

pub fn flow(o: &Options) -> Result<Vec<Row>, CliError> {
    let m: Model<f64> = ReferenceModel::fano(o.grid)?;
    let starts = even_starts(&m, salted(o.seed, 8))?;
    let trials = starts
        .par_iter()
        .map(|u| flow_start_checks(&m, u, 0.05, 20.0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = fold("flow", trials);
    rows.extend(ding_rows(&m, salted(o.seed, 9), salted(o.seed, 10), o.trials, o.trials)?);
    Ok(rows)
}

fn ding_samples(m: &Model<f64>, seed: u64, k: usize) -> Vec<Potential> {
    (0..k as u64)
        .into_par_iter()
        .map(|i| renormalize(&random_potential(m, &mut trial_rng(seed, i), &Roughness::default())))
        .collect()
}

/// Calibrates the Ding/𝓙 constants on one sample set and counts violations on a fresh one.
pub fn ding_rows(m: &Model<f64>, cal_seed: u64, test_seed: u64, cal: usize, test: usize) -> Result<Vec<Row>, CliError> {
    let h = RicciPotential::reference(m);
    let (f0, _) = ding_and_j(&Potential::zero(m), &h.values)?;
    let c = calibrate_ding(&ding_points(&ding_samples(m, cal_seed, cal), &h)?, f0, 0.1);
    let rep = ding_properness_probe(&ding_samples(m, test_seed, test), &h, &c)?;
    let row = |property: &str, violations: usize, constant: f64, worst: f64| Row {
        suite: "flow",
        property: property.into(),
        weight: "chi_1".into(),
        checks: rep.points.len(),
        violations,
        worst,
        constant: Some(constant),
        pass: violations == 0,
    };
    let p = &rep.points;
    let up = p.iter().map(|x| x.ding_f - c.a * x.d1 - c.b).fold(f64::NEG_INFINITY, f64::max);
    let jw = p
        .iter()
        .map(|x| (x.j / c.c - x.d1).max(x.d1 - 2.0 * x.j - 2.0 * c.c))
        .fold(f64::NEG_INFINITY, f64::max);
    let sw = p
        .iter()
        .map(|x| (x.sup - c.c_prime - x.j).max(x.j - x.sup))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        row("ding_upper_bound_slope", rep.upper_violations, c.a, up),
        row("ding_upper_bound_offset", rep.upper_violations, c.b, up),
        row("j_d1_equivalence", rep.j_violations, c.c, jw),
        row("j_sup_control", rep.sup_violations, c.c_prime, sw),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_counts_and_orders() {
        let t = vec![
            vec![Obs::new("a", "", 0.1, 0.0), Obs::new("b", "x", -1.0, 0.0).with_stat(2.0)],
            vec![Obs::new("a", "", -0.1, 0.0), Obs::new("b", "x", f64::NAN, 0.0).with_stat(3.0)],
        ];
        let r = fold("s", t);
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].checks, r[0].violations, r[0].worst), (2, 1, 0.1));
        assert!(!r[0].pass);
        assert_eq!(r[1].violations, 1);
        assert!(r[1].worst.is_nan());
        assert_eq!(r[1].constant, Some(3.0));
    }

    #[test]
    fn small_suites_pass() {
        let o = Options { grid: 64, trials: 3, seed: 1 };
        for rows in [weights(&o).unwrap(), orlicz(&o).unwrap(), toric(&o).unwrap()] {
            for r in rows {
                assert!(r.pass, "{r:?}");
            }
        }
    }
}
