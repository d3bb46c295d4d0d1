//! Orlicz gauge norms and the Hölder pairing.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{domain, numerical, Result};
use crate::measure::DiscreteMeasure;
use crate::scalar::Real;
use crate::weights::{conjugate, ConjugateGrid, ConjugateWeight, WeightFn, YoungWeight};

const MAX_ITER: usize = 200;
const ZERO_SUP: f64 = 1e-300;
const SANDWICH_TOL: f64 = 1e-9;

static CHECKS: AtomicU64 = AtomicU64::new(0);
static VIOLATIONS: AtomicU64 = AtomicU64::new(0);
static WORST_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide count of norm/integral sandwich checks performed by [`gauge_norm`].
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SandwichTally {
    pub checks: u64,
    pub violations: u64,
    pub max_relative_violation: f64,
}

pub fn sandwich_tally() -> SandwichTally {
    SandwichTally {
        checks: CHECKS.load(Ordering::Relaxed),
        violations: VIOLATIONS.load(Ordering::Relaxed),
        max_relative_violation: f64::from_bits(WORST_BITS.load(Ordering::Relaxed)),
    }
}

pub fn reset_sandwich_tally() {
    CHECKS.store(0, Ordering::Relaxed);
    VIOLATIONS.store(0, Ordering::Relaxed);
    WORST_BITS.store(0, Ordering::Relaxed);
}

fn record(violation: f64) {
    CHECKS.fetch_add(1, Ordering::Relaxed);
    if violation > SANDWICH_TOL {
        VIOLATIONS.fetch_add(1, Ordering::Relaxed);
    }
    if violation > 0.0 {
        WORST_BITS.fetch_max(violation.to_bits(), Ordering::Relaxed);
    }
}

/// (m_p(l), M_p(l)) = (min(l, l^p), max(l, l^p)).
pub fn mm_helpers<T: Real>(p: T, l: T) -> Result<(T, T)> {
    if !(p > T::zero()) || !(l >= T::zero()) {
        return domain(format!("mM helpers need p > 0 and l >= 0, got p={p}, l={l}"));
    }
    let lp = l.powf(p);
    Ok((l.min(lp), l.max(lp)))
}

/// A gauge norm together with its integral sandwich.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub norm: f64,
    /// ∫ χ(f) dμ.
    pub integral: f64,
    /// m_{1/p}(∫χ(f)/χ(1)), when a growth exponent is known.
    pub lower: Option<f64>,
    /// M_{1/p}(∫χ(f)/χ(1)), when a growth exponent is known.
    pub upper: Option<f64>,
    pub sandwich_ok: Option<bool>,
    pub iterations: usize,
}

fn level<T: Real, W: WeightFn<T> + ?Sized>(g: &[T], w: &W, mu: &DiscreteMeasure<T>, r: T) -> T {
    let mut s = T::zero();
    for (x, m) in g.iter().zip(mu.weights()) {
        if *m > T::zero() {
            s = s + *m * w.eval(*x / r);
        }
    }
    s
}

fn check_inputs<T: Real>(f: &[T], mu: &DiscreteMeasure<T>) -> Result<()> {
    if !mu.is_probability() {
        return domain("gauge norm needs a probability measure");
    }
    if f.len() != mu.len() {
        return domain(format!("function has {} samples, measure {} nodes", f.len(), mu.len()));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return domain("function sample is not finite");
    }
    Ok(())
}

/// ‖f‖_{χ,μ}: the unique r with ∫χ(f/r)dμ = χ(1), by bracketed bisection.
pub fn gauge_norm<T: Real, W: WeightFn<T> + ?Sized>(f: &[T], w: &W, mu: &DiscreteMeasure<T>) -> Result<T> {
    gauge_norm_report(f, w, mu).map(|(n, _)| n)
}

/// As [`gauge_norm`], also returning the sandwich diagnostics.
pub fn gauge_norm_report<T: Real, W: WeightFn<T> + ?Sized>(
    f: &[T],
    w: &W,
    mu: &DiscreteMeasure<T>,
) -> Result<(T, NormReport)> {
    check_inputs(f, mu)?;
    let scale = f
        .iter()
        .zip(mu.weights())
        .filter(|(_, m)| **m > T::zero())
        .fold(T::zero(), |a, (x, _)| a.max(x.abs()));
    if scale.as_f64() < ZERO_SUP {
        let rep = NormReport {
            norm: 0.0,
            integral: 0.0,
            lower: Some(0.0),
            upper: Some(0.0),
            sandwich_ok: Some(true),
            iterations: 0,
        };
        return Ok((T::zero(), rep));
    }
    let g: Vec<T> = f.iter().map(|x| *x / scale).collect();
    let c1 = w.chi_one();
    let p = w.growth();
    let i0 = level(&g, w, mu, T::one());
    let (mut lo, mut hi) = match p {
        Some(p) if c1 > T::zero() && i0 > T::zero() && i0.is_finite() => {
            let (m, big) = mm_helpers(T::one() / p, i0 / c1)?;
            (m * T::lit(1.0 - 1e-6), big * T::lit(1.0 + 1e-6))
        }
        _ => (T::lit(0.5), T::lit(2.0)),
    };
    let feasible = |r: T| level(&g, w, mu, r) <= c1;
    let mut guard = 0;
    while feasible(lo) {
        lo = lo * T::lit(0.5);
        guard += 1;
        if guard > MAX_ITER || lo == T::zero() {
            return numerical("gauge norm: lower bracket collapsed");
        }
    }
    guard = 0;
    while !feasible(hi) {
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > MAX_ITER || !hi.is_finite() {
            return numerical("gauge norm: upper bracket diverged");
        }
    }
    let tol = T::rel_tol(1e-12);
    let mut it = 0;
    while hi - lo > tol * hi && it < MAX_ITER {
        let mid = (lo + hi) * T::lit(0.5);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        it += 1;
    }
    let norm = (lo + hi) * T::lit(0.5) * scale;

    let integral = level(f, w, mu, T::one());
    let (lower, upper, ok) = match p {
        Some(p) if integral.is_finite() && c1 > T::zero() => {
            let (m, big) = mm_helpers(T::one() / p, integral / c1)?;
            let n = norm.as_f64();
            let under = (m.as_f64() - n) / n.max(f64::MIN_POSITIVE);
            let over = (n - big.as_f64()) / big.as_f64().max(f64::MIN_POSITIVE);
            let v = under.max(over).max(0.0);
            record(v);
            (Some(m.as_f64()), Some(big.as_f64()), Some(v <= SANDWICH_TOL))
        }
        _ => (None, None, None),
    };
    let rep = NormReport {
        norm: norm.as_f64(),
        integral: integral.as_f64(),
        lower,
        upper,
        sandwich_ok: ok,
        iterations: it,
    };
    Ok((norm, rep))
}

/// (∫fg dμ, ‖f‖_χ ‖g‖_{χ*}) with χ* computed on the default grid.
pub fn holder_pair<T: Real>(
    f: &[T],
    g: &[T],
    w: &YoungWeight<T>,
    mu: &DiscreteMeasure<T>,
) -> Result<(T, T)> {
    let c = conjugate(w, ConjugateGrid::default());
    holder_pair_with(f, g, w, &c, mu)
}

/// Hölder pairing against a precomputed conjugate.
pub fn holder_pair_with<T: Real>(
    f: &[T],
    g: &[T],
    w: &YoungWeight<T>,
    c: &ConjugateWeight<T>,
    mu: &DiscreteMeasure<T>,
) -> Result<(T, T)> {
    check_inputs(f, mu)?;
    check_inputs(g, mu)?;
    let lhs = f
        .iter()
        .zip(g)
        .zip(mu.weights())
        .map(|((a, b), m)| *a * *b * *m)
        .sum();
    let nf = gauge_norm(f, w, mu)?;
    let ng = gauge_norm(g, c, mu)?;
    let rhs = if nf.is_finite() && ng.is_finite() {
        nf * ng
    } else {
        T::infinity()
    };
    Ok((lhs, rhs))
}
