//! Scalar Kähler–Ricci flow on the toric model, with convergence, stability and
//! Ding-properness diagnostics.
//!
//! In symplectic coordinates the flow `ṙ = log(ω_r/ω) + r + h + c(t)` reads
//!
//! ```text
//! ψ̇ = log(ψ″ ρ(ψ′)) - r - h(ψ′) - c,    r = y ψ′ - ψ - φ_ref(ψ′),
//! ```
//!
//! and is advanced by implicit Euler with a Newton solve on the polytope grid.
//! Adding a constant `a` to the dual deviation adds `a` to the right-hand side,
//! so both normalizations are applied as exact constant shifts after each step.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::error::{domain, numerical, Result};
use crate::metrics::{am_dual, d_chi, d_p, ding_and_j, renormalize, RicciPotential};
use crate::scalar::Real;
use crate::toric::{Model, SymplecticPotential};
use crate::weights::WeightFn;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX: usize = 50;
const MAX_HALVINGS: usize = 10;

/// How the additive constant `c(t)` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `AM(r_t) = 0`.
    AmZero,
    /// `∫ e^{-ṙ_t} dω = 1`.
    MassOne,
}

#[derive(Debug, Clone)]
pub struct FlowConfig<T> {
    pub initial: SymplecticPotential<T>,
    pub dt: T,
    pub t_end: T,
    pub normalization: Normalization,
    pub ricci_potential: RicciPotential<T>,
    pub reference_ke: Option<SymplecticPotential<T>>,
}

impl<T: Real> FlowConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return domain(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !self.initial.is_valid() {
            return domain("initial potential is not convex");
        }
        if self.ricci_potential.values.len() != self.initial.model().n() {
            return domain("Ricci potential lives on a different grid");
        }
        if self.normalization == Normalization::AmZero && am_dual(&self.initial).abs() > T::lit(1e-8) {
            return domain("am_zero flow needs an initial potential with AM = 0");
        }
        if let Some(r) = &self.reference_ke {
            if !r.same_grid(&self.initial) {
                return domain("reference potential lives on a different grid");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Diagnostics {
    pub sup_rdot: f64,
    pub am: f64,
    pub ding_f: f64,
    pub j: f64,
    pub d1_to_ref: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FlowState<T> {
    pub potential: SymplecticPotential<T>,
    pub time: T,
    pub diagnostics: Diagnostics,
}

struct Rhs<'a, T> {
    model: &'a Model<T>,
    h: &'a RicciPotential<T>,
}

impl<'a, T: Real> Rhs<'a, T> {
    /// `(ψ′, ψ″)` with linear ghost nodes, and the stencil weights of each.
    fn derivs(&self, w: &[T], i: usize) -> (T, T, [(usize, T, T); 3], usize) {
        let m = self.model;
        let (h, n) = (m.dy(), m.n());
        let z = T::zero();
        if i == 0 || i == n - 1 {
            let (a, b) = if i == 0 { (0, 1) } else { (n - 2, n - 1) };
            let d1 = (w[b] - w[a]) / h;
            let taps = [(a, -T::one() / h, z), (b, T::one() / h, z), (0, z, z)];
            (m.g1()[i] + d1, m.g2()[i], taps, 2)
        } else {
            let h2 = h * h;
            let half = T::lit(0.5) / h;
            let d1 = (w[i + 1] - w[i - 1]) * half;
            let d2 = (w[i + 1] - T::lit(2.0) * w[i] + w[i - 1]) / h2;
            let taps = [
                (i - 1, -half, T::one() / h2),
                (i, z, -T::lit(2.0) / h2),
                (i + 1, half, T::one() / h2),
            ];
            (m.g1()[i] + d1, m.g2()[i] + d2, taps, 3)
        }
    }

    /// Right-hand side without the normalization constant; `None` if `ψ″ ≤ 0` somewhere.
    fn eval(&self, w: &[T]) -> Option<Vec<T>> {
        let m = self.model;
        (0..m.n())
            .map(|i| {
                let (s, p2, _, _) = self.derivs(w, i);
                if !(p2 > T::zero()) {
                    return None;
                }
                let y = m.nodes()[i];
                let r = y * s - (m.g()[i] + w[i]) - m.phi_ref(s);
                Some(p2.ln() + m.log_rho(s) - r - self.h.eval(m, s))
            })
            .collect()
    }

    /// `log(ψ″ ρ(ψ′))` at every node, the log-density of `dω` against `dω_r` in polytope coordinates.
    fn log_density(&self, w: &[T]) -> Vec<T> {
        (0..self.model.n())
            .map(|i| {
                let (s, p2, _, _) = self.derivs(w, i);
                p2.ln() + self.model.log_rho(s)
            })
            .collect()
    }

    /// Jacobian of `v ↦ v - dt F(v)`.
    fn step_jacobian(&self, w: &[T], dt: T) -> BandMatrix<T> {
        let m = self.model;
        let mut jac = BandMatrix::zeros(m.n(), 1);
        for i in 0..m.n() {
            let (s, p2, taps, len) = self.derivs(w, i);
            let y = m.nodes()[i];
            let ds = m.dlog_rho(s) - (y - m.moment_ref(s)) - self.h.derivative(m, s);
            jac.add(i, i, T::one() - dt);
            for &(j, c1, c2) in &taps[..len] {
                jac.add(i, j, -dt * (c2 / p2 + ds * c1));
            }
        }
        jac
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

fn log_mean_exp<T: Real>(v: &[T]) -> T {
    let top = v.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    let s: T = v.iter().map(|x| (*x - top).exp()).sum();
    top + (s / T::from_usize_lossy(v.len())).ln()
}

/// Solves `v = w + dt F(v)` by damped Newton iteration.
fn implicit_solve<T: Real>(rhs: &Rhs<T>, w: &[T], dt: T) -> Result<Vec<T>> {
    let g = |v: &[T]| -> Option<Vec<T>> {
        let f = rhs.eval(v)?;
        Some(v.iter().zip(w).zip(&f).map(|((a, b), c)| *a - *b - dt * *c).collect())
    };
    let mut v = w.to_vec();
    let mut r = match g(&v) {
        Some(r) => r,
        None => return numerical("flow: starting potential is not strictly convex"),
    };
    let tol = T::lit(NEWTON_TOL);
    let mut history = Vec::new();
    for _ in 0..NEWTON_MAX {
        let res = max_abs(&r);
        history.push(res.as_f64());
        if res <= tol {
            return Ok(v);
        }
        let minus: Vec<T> = r.iter().map(|x| -*x).collect();
        let step = rhs.step_jacobian(&v, dt).factor()?.solve(&minus);
        let mut lambda = T::one();
        loop {
            let trial: Vec<T> = v.iter().zip(&step).map(|(a, b)| *a + lambda * *b).collect();
            if let Some(rt) = g(&trial) {
                if max_abs(&rt) < res || max_abs(&rt) <= tol {
                    v = trial;
                    r = rt;
                    break;
                }
            }
            lambda = lambda * T::lit(0.5);
            if lambda < T::lit(1e-8) {
                return numerical(format!("flow Newton line search stalled; residuals {history:?}"));
            }
        }
    }
    if max_abs(&r) <= tol {
        return Ok(v);
    }
    numerical(format!("flow Newton did not converge; residuals {history:?}"))
}

/// Trajectory of a flow run with its summary.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub states: Vec<FlowState<T>>,
    pub summary: FlowSummary,
}

impl<T: Real> Trajectory<T> {
    /// `(t, r_t)` pairs, as consumed by [`stability_probe`].
    pub fn path(&self) -> Vec<(T, SymplecticPotential<T>)> {
        self.states.iter().map(|s| (s.time, s.potential.clone())).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Fitted `λ` in `‖ṙ_t‖∞ ≈ A e^{-λt}`.
    pub rate: f64,
    pub r_squared: f64,
    /// Number of trajectory points in the fit window.
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowSummary {
    pub steps: usize,
    pub dt_halvings: usize,
    pub decay: Option<DecayFit>,
    /// `(t, 𝓕(r_t))`.
    pub ding_table: Vec<(f64, f64)>,
    pub ding_nonincreasing: bool,
    pub final_d1_to_ref: Option<f64>,
    /// Largest `|AM(r_t)|`, under `am_zero`.
    pub max_am_drift: Option<f64>,
}

/// Least-squares line `y = a + b x`; returns `(b, a, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Fits `log ‖ṙ_t‖∞` against `t` after `t_min`, stopping before the values
/// reach `floor`.
pub fn decay_fit<T: Real>(states: &[FlowState<T>], t_min: f64, floor: f64) -> Option<DecayFit> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for s in states {
        let t = s.time.as_f64();
        let v = s.diagnostics.sup_rdot;
        if v <= floor {
            break;
        }
        if t >= t_min {
            x.push(t);
            y.push(v.ln());
        }
    }
    if x.len() < 3 {
        return None;
    }
    let (slope, _, r2) = linear_fit(&x, &y);
    Some(DecayFit {
        rate: -slope,
        r_squared: r2,
        points: x.len(),
    })
}

fn diagnostics<T: Real>(cfg: &FlowConfig<T>, w: &SymplecticPotential<T>, rdot: T) -> Result<Diagnostics> {
    let n = renormalize(w);
    let (f, j) = ding_and_j(&n, &cfg.ricci_potential.values)?;
    let d1 = match &cfg.reference_ke {
        Some(r) => Some(d_p(&n, r, T::one())?.as_f64()),
        None => None,
    };
    Ok(Diagnostics {
        sup_rdot: rdot.as_f64(),
        am: am_dual(w).as_f64(),
        ding_f: f.as_f64(),
        j: j.as_f64(),
        d1_to_ref: d1,
    })
}

/// Applies the normalization shift to an unnormalized implicit step `v`
/// taken from `w` with step `dt`.
fn normalize<T: Real>(rhs: &Rhs<T>, norm: Normalization, w: &[T], v: Vec<T>, dt: T) -> Vec<T> {
    let a = match norm {
        Normalization::AmZero => -v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len()),
        Normalization::MassOne => {
            // ∫ e^{-ṙ} dω = mean_i e^{ẇ_i} ψ″_i ρ(ψ′_i)
            let ld = rhs.log_density(&v);
            let e: Vec<T> = v
                .iter()
                .zip(w)
                .zip(&ld)
                .map(|((a, b), l)| (*a - *b) / dt + *l)
                .collect();
            -dt * log_mean_exp(&e)
        }
    };
    v.into_iter().map(|x| x + a).collect()
}

/// One accepted implicit-Euler step of size `cfg.dt`, split into halves on
/// Newton failure (at most 10 times).
pub fn ricci_step<T: Real>(state: &FlowState<T>, cfg: &FlowConfig<T>) -> Result<FlowState<T>> {
    let (next, _) = step_with_retry(state, cfg, cfg.dt)?;
    Ok(next)
}

fn step_with_retry<T: Real>(state: &FlowState<T>, cfg: &FlowConfig<T>, dt: T) -> Result<(FlowState<T>, usize)> {
    let model = state.potential.model().clone();
    let rhs = Rhs {
        model: &model,
        h: &cfg.ricci_potential,
    };
    let mut errors = Vec::new();
    for halvings in 0..=MAX_HALVINGS {
        let pieces = 1usize << halvings;
        let sub = dt / T::from_usize_lossy(pieces);
        let mut w = state.potential.values().to_vec();
        let mut ok = true;
        let mut last_rdot = T::zero();
        for _ in 0..pieces {
            match implicit_solve(&rhs, &w, sub) {
                Ok(v) => {
                    let v = normalize(&rhs, cfg.normalization, &w, v, sub);
                    last_rdot = v.iter().zip(&w).fold(T::zero(), |a, (x, y)| a.max(((*x - *y) / sub).abs()));
                    w = v;
                }
                Err(e) => {
                    errors.push(e.to_string());
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let potential = SymplecticPotential::new(&model, w)?;
            let diagnostics = diagnostics(cfg, &potential, last_rdot)?;
            let next = FlowState {
                potential,
                time: state.time + dt,
                diagnostics,
            };
            return Ok((next, halvings));
        }
    }
    numerical(format!("flow step failed after {MAX_HALVINGS} halvings: {errors:?}"))
}

/// `‖ṙ‖∞` from the continuous right-hand side at `w`, normalized.
fn initial_rdot<T: Real>(cfg: &FlowConfig<T>) -> Result<T> {
    let model = cfg.initial.model().clone();
    let rhs = Rhs {
        model: &model,
        h: &cfg.ricci_potential,
    };
    let f = match rhs.eval(cfg.initial.values()) {
        Some(f) => f,
        None => return numerical("initial potential is not strictly convex"),
    };
    let c = match cfg.normalization {
        Normalization::AmZero => f.iter().copied().sum::<T>() / T::from_usize_lossy(f.len()),
        Normalization::MassOne => {
            let ld = rhs.log_density(cfg.initial.values());
            let e: Vec<T> = f.iter().zip(&ld).map(|(a, b)| *a + *b).collect();
            log_mean_exp(&e)
        }
    };
    Ok(f.iter().fold(T::zero(), |a, x| a.max((*x - c).abs())))
}

/// Integrates from `cfg.initial` to `cfg.t_end`.
pub fn run_flow<T: Real>(cfg: &FlowConfig<T>) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let first = FlowState {
        potential: cfg.initial.clone(),
        time: T::zero(),
        diagnostics: diagnostics(cfg, &cfg.initial, initial_rdot(cfg)?)?,
    };
    let steps = (cfg.t_end / cfg.dt - T::lit(1e-9)).ceil().max(T::zero());
    let steps = steps.to_usize().unwrap_or(0);
    let mut states = vec![first];
    let mut halvings = 0;
    for k in 0..steps {
        let last = states.last().expect("nonempty");
        let dt = (cfg.t_end - cfg.dt * T::from_usize_lossy(k)).min(cfg.dt);
        let (mut next, h) = step_with_retry(last, cfg, dt)?;
        next.time = (cfg.dt * T::from_usize_lossy(k) + dt).min(cfg.t_end);
        halvings += h;
        states.push(next);
    }
    let ding_table: Vec<(f64, f64)> = states
        .iter()
        .map(|s| (s.time.as_f64(), s.diagnostics.ding_f))
        .collect();
    let ding_nonincreasing = ding_table.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-10);
    let max_am_drift = match cfg.normalization {
        Normalization::AmZero => Some(states.iter().fold(0.0f64, |a, s| a.max(s.diagnostics.am.abs()))),
        Normalization::MassOne => None,
    };
    let summary = FlowSummary {
        steps,
        dt_halvings: halvings,
        decay: decay_fit(&states, 1.0, 1e-9),
        final_d1_to_ref: states.last().and_then(|s| s.diagnostics.d1_to_ref),
        ding_table,
        ding_nonincreasing,
        max_am_drift,
    };
    Ok(Trajectory { states, summary })
}

/// `|∫ e^{-ṙ} dω - 1|` for a step from `w0` to `w1` of size `dt`.
pub fn mass_defect<T: Real>(
    w0: &SymplecticPotential<T>,
    w1: &SymplecticPotential<T>,
    dt: T,
    h: &RicciPotential<T>,
) -> T {
    let model = w1.model().clone();
    let rhs = Rhs { model: &model, h };
    let ld = rhs.log_density(w1.values());
    let e: Vec<T> = w1
        .values()
        .iter()
        .zip(w0.values())
        .zip(&ld)
        .map(|((a, b), l)| (*a - *b) / dt + *l)
        .collect();
    (log_mean_exp(&e).exp() - T::one()).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    /// The tail is d_χ-Cauchy below the threshold.
    NoDivergenceObserved,
    /// `d_χ(r_0, r_t)` grows monotonically and does not settle.
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub verdict: StabilityVerdict,
    /// Largest `d_χ(r_s, r_t)` with `s, t` in the second half of the time mesh.
    pub tail_max_pairwise: f64,
    /// `(t, d_χ(r_0, r_t))`.
    pub growth: Vec<(f64, f64)>,
    pub monotone_growth: bool,
}

/// Classifies a path by its d_χ behaviour. `threshold` bounds the tail
/// pairwise distance of a Cauchy verdict.
pub fn stability_probe<T: Real, W: WeightFn<T> + ?Sized>(
    path: &[(T, SymplecticPotential<T>)],
    w: &W,
    threshold: f64,
) -> Result<StabilityReport> {
    if path.is_empty() {
        return domain("stability probe needs a nonempty path");
    }
    let first = &path[0].1;
    let growth: Vec<(f64, f64)> = path
        .iter()
        .map(|(t, u)| Ok((t.as_f64(), d_chi(first, u, w)?.as_f64())))
        .collect::<Result<_>>()?;
    let t_end = path[path.len() - 1].0;
    let tail: Vec<&SymplecticPotential<T>> = path
        .iter()
        .filter(|(t, _)| *t >= t_end * T::lit(0.5))
        .map(|(_, u)| u)
        .collect();
    let mut tail_max = 0.0f64;
    for a in 0..tail.len() {
        for b in a + 1..tail.len() {
            tail_max = tail_max.max(d_chi(tail[a], tail[b], w)?.as_f64());
        }
    }
    let monotone = growth.windows(2).all(|g| g[1].1 > g[0].1);
    let verdict = if tail_max <= threshold {
        StabilityVerdict::NoDivergenceObserved
    } else if monotone && growth.len() > 2 {
        let (d_half, d_end) = (
            growth[growth.len() / 2].1,
            growth[growth.len() - 1].1,
        );
        if d_end > 1.5 * d_half {
            StabilityVerdict::Diverging
        } else {
            StabilityVerdict::Inconclusive
        }
    } else {
        StabilityVerdict::Inconclusive
    };
    Ok(StabilityReport {
        verdict,
        tail_max_pairwise: tail_max,
        growth,
        monotone_growth: monotone,
    })
}

/// One sample of the Ding scatter: `(d_1(0,u), 𝓕(u), 𝓙(u), sup u)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DingPoint {
    pub d1: f64,
    pub ding_f: f64,
    pub j: f64,
    pub sup: f64,
}

/// Constants of the Ding/𝓙 bounds, fitted on a calibration set.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DingCalibration {
    /// `𝓕 ≤ A d_1 + B`.
    pub a: f64,
    pub b: f64,
    /// `𝓙/C ≤ d_1 ≤ 2𝓙 + 2C`.
    pub c: f64,
    /// `sup u - C′ ≤ 𝓙(u) ≤ sup u`.
    pub c_prime: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DingReport {
    pub points: Vec<DingPoint>,
    pub calibration: DingCalibration,
    pub upper_violations: usize,
    pub j_violations: usize,
    pub sup_violations: usize,
}

pub fn ding_points<T: Real>(samples: &[SymplecticPotential<T>], h: &RicciPotential<T>) -> Result<Vec<DingPoint>> {
    samples
        .iter()
        .map(|u| {
            if am_dual(u).abs() > T::lit(1e-8) {
                return domain("Ding probe samples must be AM-normalized");
            }
            let (f, j) = ding_and_j(u, &h.values)?;
            let zero = SymplecticPotential::zero(u.model());
            Ok(DingPoint {
                d1: d_p(&zero, u, T::one())?.as_f64(),
                ding_f: f.as_f64(),
                j: j.as_f64(),
                sup: u.sup().as_f64(),
            })
        })
        .collect()
}

/// Smallest constants satisfying every bound on `points`, inflated by `margin`.
/// `B` is anchored at `𝓕(0) = -log ∫ e^h dω`.
pub fn calibrate_ding(points: &[DingPoint], f_zero: f64, margin: f64) -> DingCalibration {
    let b = f_zero.max(0.0) + margin;
    let mut a = 0.0f64;
    let mut c = 1.0f64;
    let mut cp = 0.0f64;
    for p in points {
        if p.d1 > 0.0 {
            a = a.max((p.ding_f - b) / p.d1);
            c = c.max(p.j / p.d1);
        }
        c = c.max((p.d1 - 2.0 * p.j) / 2.0);
        cp = cp.max(p.sup - p.j);
    }
    DingCalibration {
        a: a.max(0.0) * (1.0 + margin) + margin,
        b,
        c: c * (1.0 + margin),
        c_prime: cp * (1.0 + margin) + margin,
    }
}

/// Checks the Ding upper bound, the 𝓙/d_1 equivalence and sup control.
pub fn ding_properness_probe<T: Real>(
    samples: &[SymplecticPotential<T>],
    h: &RicciPotential<T>,
    cal: &DingCalibration,
) -> Result<DingReport> {
    let points = ding_points(samples, h)?;
    let slack = 1e-12;
    let upper = points
        .iter()
        .filter(|p| p.ding_f > cal.a * p.d1 + cal.b + slack)
        .count();
    let jv = points
        .iter()
        .filter(|p| p.j / cal.c > p.d1 + slack || p.d1 > 2.0 * p.j + 2.0 * cal.c + slack)
        .count();
    let sv = points
        .iter()
        .filter(|p| p.sup - cal.c_prime > p.j + slack || p.j > p.sup + slack)
        .count();
    Ok(DingReport {
        points,
        calibration: *cal,
        upper_violations: upper,
        j_violations: jv,
        sup_violations: sv,
    })
}
