//! Normalized Young weights in the classes `W⁺_p`, their conjugates and
//! bump-function mollifications.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, numerical, Result};
use crate::quad::TanhSinh;
use crate::scalar::Real;

/// Anything that can play the role of χ in a gauge norm.
pub trait WeightFn<T: Real>: Send + Sync {
    /// χ(l), possibly `+∞`.
    fn eval(&self, l: T) -> T;
    /// χ(1), the level set value in the gauge norm.
    fn chi_one(&self) -> T;
    /// A certified `W⁺_p` exponent if one is known.
    fn growth(&self) -> Option<T>;
}

/// Serializable description of a weight, e.g. `{"kind":"power","p":2.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Power { p: f64 },
    Mollified { base: Box<WeightSpec>, k: u32 },
}

impl WeightSpec {
    pub fn build<T: Real>(&self) -> Result<YoungWeight<T>> {
        match self {
            WeightSpec::Power { p } => make_power_weight(T::lit(*p)),
            WeightSpec::Mollified { base, k } => mollify(&base.build()?, *k),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Power { p } => write!(f, "chi_{p}"),
            WeightSpec::Mollified { base, k } => write!(f, "mollify({base},{k})"),
        }
    }
}

/// A normalized, even, convex, finite Young weight with a growth exponent.
#[derive(Clone)]
pub enum YoungWeight<T: Real> {
    Power { p: T },
    Mollified(Arc<Mollified<T>>),
}

impl<T: Real> fmt::Debug for YoungWeight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YoungWeight({})", self.spec())
    }
}

/// χ_p(l) = |l|^p / p.
pub fn make_power_weight<T: Real>(p: T) -> Result<YoungWeight<T>> {
    if !(p >= T::one()) || !p.is_finite() {
        return domain(format!("power weight needs finite p >= 1, got {p}"));
    }
    Ok(YoungWeight::Power { p })
}

impl<T: Real> YoungWeight<T> {
    pub fn spec(&self) -> WeightSpec {
        match self {
            YoungWeight::Power { p } => WeightSpec::Power { p: p.as_f64() },
            YoungWeight::Mollified(m) => WeightSpec::Mollified {
                base: Box::new(m.base.spec()),
                k: m.k,
            },
        }
    }

    pub fn evaluate(&self, l: T) -> T {
        let a = l.abs();
        match self {
            YoungWeight::Power { p } => {
                if *p == T::one() {
                    a
                } else if *p == T::lit(2.0) {
                    a * a * T::lit(0.5)
                } else {
                    a.powf(*p) / *p
                }
            }
            YoungWeight::Mollified(m) => m.value(a),
        }
    }

    /// χ′(l); at the kink of χ_1 this returns 0 (the midpoint of ∂χ(0)).
    pub fn derivative(&self, l: T) -> T {
        let a = l.abs();
        let d = match self {
            YoungWeight::Power { p } => {
                if a == T::zero() {
                    T::zero()
                } else if *p == T::one() {
                    T::one()
                } else {
                    a.powf(*p - T::one())
                }
            }
            YoungWeight::Mollified(m) => m.slope(a),
        };
        if l < T::zero() {
            -d
        } else {
            d
        }
    }

    /// One-sided derivative from the left.
    pub fn derivative_left(&self, l: T) -> T {
        match self {
            YoungWeight::Power { p } if *p == T::one() && l == T::zero() => -T::one(),
            _ => self.derivative(l),
        }
    }

    /// One-sided derivative from the right.
    pub fn derivative_right(&self, l: T) -> T {
        match self {
            YoungWeight::Power { p } if *p == T::one() && l == T::zero() => T::one(),
            _ => self.derivative(l),
        }
    }

    pub fn growth_exponent(&self) -> T {
        match self {
            YoungWeight::Power { p } => *p,
            YoungWeight::Mollified(m) => m.growth,
        }
    }

    pub fn smooth(&self) -> bool {
        match self {
            YoungWeight::Power { p } => *p >= T::lit(2.0),
            YoungWeight::Mollified(_) => true,
        }
    }

    pub fn chi_one(&self) -> T {
        self.evaluate(T::one())
    }

    /// The power exponent if this is a plain χ_p.
    pub fn power(&self) -> Option<T> {
        match self {
            YoungWeight::Power { p } => Some(*p),
            _ => None,
        }
    }

    /// Mollification scale `h_k`, if any.
    pub fn scale(&self) -> Option<T> {
        match self {
            YoungWeight::Mollified(m) => Some(m.h),
            _ => None,
        }
    }

    /// Samples the defining invariants of a normalized `W⁺_p` weight.
    pub fn validate(&self, samples: &[T]) -> WeightCheck {
        let tol = T::rel_tol(1e-10);
        let mut c = WeightCheck::default();
        let z = self.evaluate(T::zero()).abs();
        c.zero_defect = z.as_f64();
        for &l in samples {
            let e = (self.evaluate(l) - self.evaluate(-l)).abs();
            c.even_defect = c.even_defect.max(e.as_f64());
            if l > T::zero() {
                let g = l * self.derivative(l) - self.growth_exponent() * self.evaluate(l);
                let scale = T::one().max(self.evaluate(l));
                c.growth_defect = c.growth_defect.max((g / scale).as_f64());
            }
        }
        for (i, &a) in samples.iter().enumerate() {
            for &b in samples.iter().skip(i + 1).step_by(7) {
                let mid = self.evaluate((a + b) * T::lit(0.5));
                let chord = (self.evaluate(a) + self.evaluate(b)) * T::lit(0.5);
                let scale = T::one().max(chord);
                c.convexity_defect = c.convexity_defect.max(((mid - chord) / scale).as_f64());
            }
        }
        let lo = self.derivative_left(T::one()) - T::one();
        let hi = T::one() - self.derivative_right(T::one());
        c.normalization_defect = lo.max(hi).max(T::zero()).as_f64();
        let t = tol.as_f64();
        c.passed = c.zero_defect <= t
            && c.even_defect <= t
            && c.growth_defect <= t
            && c.convexity_defect <= t
            && c.normalization_defect <= t;
        c
    }
}

impl<T: Real> WeightFn<T> for YoungWeight<T> {
    fn eval(&self, l: T) -> T {
        self.evaluate(l)
    }
    fn chi_one(&self) -> T {
        YoungWeight::chi_one(self)
    }
    fn growth(&self) -> Option<T> {
        Some(self.growth_exponent())
    }
}

/// Sampled invariant defects of a weight (positive parts only).
#[derive(Debug, Clone, Default, Serialize)]
pub struct WeightCheck {
    pub zero_defect: f64,
    pub even_defect: f64,
    pub convexity_defect: f64,
    pub normalization_defect: f64,
    pub growth_defect: f64,
    pub passed: bool,
}

/// Symmetric sample grid on `[-r, r]` with `n` points per side plus 0.
pub fn symmetric_samples<T: Real>(r: f64, n: usize) -> Vec<T> {
    let mut v = Vec::with_capacity(2 * n + 1);
    for i in (1..=n).rev() {
        v.push(T::lit(-r * i as f64 / n as f64));
    }
    v.push(T::zero());
    for i in 1..=n {
        v.push(T::lit(r * i as f64 / n as f64));
    }
    v
}

// ---------------------------------------------------------------------------
// mollification

/// δ(x) = C exp(-1/(1-x²)) on (-1, 1), unit mass.
#[derive(Debug, Clone)]
struct Bump<T> {
    c: T,
}

impl<T: Real> Bump<T> {
    fn new(q: &TanhSinh<T>) -> Self {
        let raw = q.integrate(-T::one(), T::one(), Self::shape);
        Self { c: T::one() / raw }
    }

    fn shape(x: T) -> T {
        let d = T::one() - x * x;
        if d <= T::zero() {
            T::zero()
        } else {
            (-T::one() / d).exp()
        }
    }

    fn value(&self, x: T) -> T {
        self.c * Self::shape(x)
    }

    fn deriv(&self, x: T) -> T {
        let d = T::one() - x * x;
        if d <= T::zero() {
            T::zero()
        } else {
            self.value(x) * (-T::lit(2.0) * x / (d * d))
        }
    }
}

/// Quintic Hermite table of `D = M - M(0)` on `[0, a_max]`.
#[derive(Debug, Clone)]
struct HermiteTable<T> {
    step: T,
    d: Vec<T>,
    d1: Vec<T>,
    d2: Vec<T>,
}

impl<T: Real> HermiteTable<T> {
    fn a_max(&self) -> T {
        self.step * T::from_usize_lossy(self.d.len() - 1)
    }

    /// (value, derivative) at `a` in `[0, a_max]`.
    fn eval(&self, a: T) -> (T, T) {
        let n = self.d.len() - 1;
        let x = a / self.step;
        let mut i = x.floor().to_usize().unwrap_or(0);
        if i >= n {
            i = n - 1;
        }
        let t = x - T::from_usize_lossy(i);
        let h = self.step;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let c = |v: f64| T::lit(v);
        let h0 = T::one() - c(10.0) * t3 + c(15.0) * t4 - c(6.0) * t5;
        let h1 = t - c(6.0) * t3 + c(8.0) * t4 - c(3.0) * t5;
        let h2 = c(0.5) * (t2 - c(3.0) * t3 + c(3.0) * t4 - t5);
        let h3 = c(0.5) * (t3 - c(2.0) * t4 + t5);
        let h4 = -c(4.0) * t3 + c(7.0) * t4 - c(3.0) * t5;
        let h5 = c(10.0) * t3 - c(15.0) * t4 + c(6.0) * t5;
        let g0 = -c(30.0) * t2 + c(60.0) * t3 - c(30.0) * t4;
        let g1 = T::one() - c(18.0) * t2 + c(32.0) * t3 - c(15.0) * t4;
        let g2 = c(0.5) * (c(2.0) * t - c(9.0) * t2 + c(12.0) * t3 - c(5.0) * t4);
        let g3 = c(0.5) * (c(3.0) * t2 - c(8.0) * t3 + c(5.0) * t4);
        let g4 = -c(12.0) * t2 + c(28.0) * t3 - c(15.0) * t4;
        let g5 = -g0;
        let (f0, f1) = (self.d[i], self.d[i + 1]);
        let (p0, p1) = (self.d1[i] * h, self.d1[i + 1] * h);
        let (q0, q1) = (self.d2[i] * h * h, self.d2[i + 1] * h * h);
        let v = f0 * h0 + p0 * h1 + q0 * h2 + q1 * h3 + p1 * h4 + f1 * h5;
        let dv = (f0 * g0 + p0 * g1 + q0 * g2 + q1 * g3 + p1 * g4 + f1 * g5) / h;
        (v, dv)
    }
}

/// Evaluation strategy for `M = δ_k ⋆ χ` away from the origin.
#[derive(Debug, Clone)]
enum Far<T> {
    /// Even-moment binomial series for power bases, valid for `|a| >= 2/k`.
    Series { p: T, coef: Vec<T> },
    /// Direct quadrature for general bases.
    Quadrature,
}

/// Data of a mollified weight `χ_k(l) = M(h_k l) - M(0)`.
#[derive(Debug, Clone)]
pub struct Mollified<T: Real> {
    base: YoungWeight<T>,
    k: u32,
    h: T,
    m0: T,
    growth: T,
    table: HermiteTable<T>,
    far: Far<T>,
    bump: Bump<T>,
    rule: TanhSinh<T>,
}

const TABLE_CELLS: usize = 256;
const SERIES_TERMS: usize = 40;
const GROWTH_MARGIN: f64 = 1e-4;

impl<T: Real> Mollified<T> {
    pub fn base(&self) -> &YoungWeight<T> {
        &self.base
    }
    pub fn k(&self) -> u32 {
        self.k
    }

    fn kf(&self) -> T {
        T::from_u32(self.k).unwrap()
    }

    /// D(a) = M(a) - M(0) for a >= 0.
    fn d_of(&self, a: T) -> T {
        if a <= self.table.a_max() {
            return self.table.eval(a).0;
        }
        match &self.far {
            Far::Series { p, coef } => series(*p, coef, a).0 - self.m0,
            Far::Quadrature => quad_d(&self.base, &self.bump, &self.rule, self.kf(), a),
        }
    }

    /// M′(a) for a >= 0.
    fn m1_of(&self, a: T) -> T {
        if a <= self.table.a_max() {
            return self.table.eval(a).1;
        }
        match &self.far {
            Far::Series { p, coef } => series(*p, coef, a).1,
            Far::Quadrature => quad_m1(&self.base, &self.bump, &self.rule, self.kf(), a),
        }
    }

    fn value(&self, l: T) -> T {
        self.d_of(self.h * l)
    }

    fn slope(&self, l: T) -> T {
        self.h * self.m1_of(self.h * l)
    }
}

fn series<T: Real>(p: T, coef: &[T], a: T) -> (T, T) {
    let inv2 = T::one() / (a * a);
    let mut t = a.powf(p);
    let mut s = T::zero();
    let mut ds = T::zero();
    let small = T::epsilon() * T::lit(0.01);
    for (m, c) in coef.iter().enumerate() {
        let term = *c * t;
        s = s + term;
        ds = ds + term * (p - T::from_usize_lossy(2 * m));
        if term.abs() <= small * s.abs() {
            break;
        }
        t = t * inv2;
    }
    (s, ds / a)
}

fn quad_d<T: Real>(base: &YoungWeight<T>, b: &Bump<T>, q: &TanhSinh<T>, k: T, a: T) -> T {
    q.integrate_split(-T::one(), T::one(), k * a, |z| {
        b.value(z) * (base.evaluate(a - z / k) - base.evaluate(z / k))
    })
}

fn quad_m1<T: Real>(base: &YoungWeight<T>, b: &Bump<T>, q: &TanhSinh<T>, k: T, a: T) -> T {
    q.integrate_split(-T::one(), T::one(), k * a, |z| {
        b.value(z) * base.derivative(a - z / k)
    })
}

fn quad_m2<T: Real>(base: &YoungWeight<T>, b: &Bump<T>, q: &TanhSinh<T>, k: T, a: T) -> T {
    k * q.integrate_split(-T::one(), T::one(), k * a, |z| {
        b.deriv(z) * base.derivative(a - z / k)
    })
}

/// Bump mollification `χ_k(l) = (δ_k ⋆ χ)(h_k l) - (δ_k ⋆ χ)(0)` with `χ_k′(1) = 1`.
pub fn mollify<T: Real>(w: &YoungWeight<T>, k: u32) -> Result<YoungWeight<T>> {
    if k == 0 {
        return domain("mollification index k must be positive");
    }
    let rule = TanhSinh::<T>::default();
    let bump = Bump::new(&rule);
    let kf = T::from_u32(k).unwrap();
    let a_max = T::lit(2.0) / kf;
    let step = a_max / T::from_usize_lossy(TABLE_CELLS);
    let m0 = rule.integrate(-T::one(), T::one(), |z| bump.value(z) * w.evaluate(z / kf));
    let mut d = Vec::with_capacity(TABLE_CELLS + 1);
    let mut d1 = Vec::with_capacity(TABLE_CELLS + 1);
    let mut d2 = Vec::with_capacity(TABLE_CELLS + 1);
    for i in 0..=TABLE_CELLS {
        let a = step * T::from_usize_lossy(i);
        if i == 0 {
            d.push(T::zero());
            d1.push(T::zero());
        } else {
            d.push(quad_d(w, &bump, &rule, kf, a));
            d1.push(quad_m1(w, &bump, &rule, kf, a));
        }
        d2.push(quad_m2(w, &bump, &rule, kf, a));
    }
    let table = HermiteTable { step, d, d1, d2 };
    let far = match w.power() {
        Some(p) => {
            let mut coef = Vec::with_capacity(SERIES_TERMS);
            let mut binom = T::one();
            for m in 0..SERIES_TERMS {
                let j = 2 * m;
                let mu = rule.integrate(-T::one(), T::one(), |z| {
                    bump.value(z) * z.powi(j as i32)
                });
                let c = binom * mu / (kf.powi(j as i32) * p);
                coef.push(c);
                // binom(p, j) -> binom(p, j + 2)
                let jf = T::from_usize_lossy(j);
                binom = binom * (p - jf) / (jf + T::one()) * (p - jf - T::one())
                    / (jf + T::lit(2.0));
                if binom == T::zero() {
                    break;
                }
            }
            Far::Series { p, coef }
        }
        None => Far::Quadrature,
    };
    let mut m = Mollified {
        base: w.clone(),
        k,
        h: T::one(),
        m0,
        growth: T::lit(2.0),
        table,
        far,
        bump,
        rule,
    };
    m.h = solve_scale(&m)?;
    m.growth = estimate_growth(&m);
    Ok(YoungWeight::Mollified(Arc::new(m)))
}

/// Root of `h M′(h) = 1` inside `[1 - 1/k, 1 + 1/k]`.
fn solve_scale<T: Real>(m: &Mollified<T>) -> Result<T> {
    let kf = m.kf();
    let g = |h: T| h * m.m1_of(h) - T::one();
    let slack = T::rel_tol(1e-12);
    let mut lo = (T::one() - T::one() / kf).max(T::zero());
    let mut hi = T::one() + T::one() / kf;
    let (glo, ghi) = (g(lo), g(hi));
    if glo > slack || ghi < -slack {
        return numerical(format!(
            "mollify(k={}): h_k not bracketed: g({lo})={glo}, g({hi})={ghi}",
            m.k
        ));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Sampled sup of `l χ′(l) / χ(l)` (including the quadratic limit 2 at the origin).
fn estimate_growth<T: Real>(m: &Mollified<T>) -> T {
    let mut best = T::lit(2.0);
    let n = 4000;
    let (lo, hi) = (-7.0f64, 7.0f64);
    for i in 0..=n {
        let l = T::lit(10f64.powf(lo + (hi - lo) * i as f64 / n as f64));
        let v = m.value(l);
        if v > T::zero() {
            let r = l * m.slope(l) / v;
            if r.is_finite() {
                best = best.max(r);
            }
        }
    }
    best.max(T::one()) * (T::one() + T::lit(GROWTH_MARGIN))
}

// ---------------------------------------------------------------------------
// conjugation

/// Sampling controls for numeric conjugates.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateGrid {
    /// Dual range `[-h_max, h_max]` covered by the inner l-grid.
    pub h_max: f64,
    /// Number of log-spaced inner l-samples.
    pub samples: usize,
}

impl Default for ConjugateGrid {
    fn default() -> Self {
        Self {
            h_max: 100.0,
            samples: 4096,
        }
    }
}

/// Known closed forms of χ*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm<T> {
    /// χ*(h) = |h|^q / q.
    Power { q: T },
    /// χ*(h) = 0 for |h| <= 1 and +∞ otherwise.
    Indicator,
}

/// The Legendre transform χ* of a Young weight.
#[derive(Clone)]
pub struct ConjugateWeight<T: Real> {
    base: YoungWeight<T>,
    closed: Option<ClosedForm<T>>,
    numeric: Option<Arc<NumericConjugate<T>>>,
}

impl<T: Real> fmt::Debug for ConjugateWeight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConjugateWeight({}*, {:?})", self.base.spec(), self.closed)
    }
}

#[derive(Debug)]
struct NumericConjugate<T> {
    ls: Vec<T>,
    slopes: Vec<T>,
    growth: Option<T>,
}

/// χ* via closed form for power weights, numerically otherwise.
pub fn conjugate<T: Real>(w: &YoungWeight<T>, grid: ConjugateGrid) -> ConjugateWeight<T> {
    if let Some(p) = w.power() {
        let closed = if p == T::one() {
            ClosedForm::Indicator
        } else {
            ClosedForm::Power {
                q: p / (p - T::one()),
            }
        };
        return ConjugateWeight {
            base: w.clone(),
            closed: Some(closed),
            numeric: None,
        };
    }
    let h_max = T::lit(grid.h_max);
    let mut l_max = T::one();
    while w.derivative(l_max) < h_max && l_max < T::lit(1e12) {
        l_max = l_max * T::lit(2.0);
    }
    let l_min = T::lit(1e-8);
    let n = grid.samples.max(2);
    let ratio = (l_max / l_min).ln() / T::from_usize_lossy(n - 1);
    let mut ls = Vec::with_capacity(n + 1);
    ls.push(T::zero());
    for i in 0..n {
        ls.push(l_min * (ratio * T::from_usize_lossy(i)).exp());
    }
    let slopes: Vec<T> = ls.iter().map(|&l| w.derivative(l)).collect();
    let mut worst = T::one();
    let mut bounded = true;
    for &l in ls.iter().skip(1) {
        let v = w.evaluate(l);
        if v <= T::zero() {
            continue;
        }
        let r = l * w.derivative(l) / v;
        if r - T::one() <= T::lit(1e-6) {
            bounded = false;
            break;
        }
        worst = worst.max(r / (r - T::one()));
    }
    let growth = bounded.then(|| worst * (T::one() + T::lit(GROWTH_MARGIN)));
    ConjugateWeight {
        base: w.clone(),
        closed: None,
        numeric: Some(Arc::new(NumericConjugate { ls, slopes, growth })),
    }
}

impl<T: Real> ConjugateWeight<T> {
    pub fn base(&self) -> &YoungWeight<T> {
        &self.base
    }

    pub fn closed_form(&self) -> Option<ClosedForm<T>> {
        self.closed
    }

    /// χ*(h) together with the maximizing `l ≥ 0` (for `|h|`).
    fn solve(&self, h: T) -> (T, T) {
        let a = h.abs();
        match self.closed {
            Some(ClosedForm::Power { q }) => {
                return (a.powf(q) / q, a.powf(q - T::one()));
            }
            Some(ClosedForm::Indicator) => {
                return if a <= T::one() {
                    (T::zero(), T::zero())
                } else {
                    (T::infinity(), T::infinity())
                };
            }
            None => {}
        }
        let nc = self.numeric.as_ref().expect("numeric conjugate");
        let w = &self.base;
        if a == T::zero() {
            return (T::zero(), T::zero());
        }
        let j = nc.slopes.partition_point(|&s| s < a);
        let (mut lo, mut hi) = if j < nc.ls.len() {
            (nc.ls[j.saturating_sub(1)], nc.ls[j])
        } else {
            let mut lo = *nc.ls.last().unwrap();
            let mut hi = lo * T::lit(2.0);
            while w.derivative(hi) < a {
                if hi > T::lit(1e30) {
                    return (T::infinity(), T::infinity());
                }
                lo = hi;
                hi = hi * T::lit(2.0);
            }
            (lo, hi)
        };
        let line = |l: T| l * a - w.evaluate(l);
        let mut best = line(lo).max(line(hi));
        let mut arg = if line(lo) >= line(hi) { lo } else { hi };
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if w.derivative(mid) < a {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::epsilon() * hi {
                break;
            }
        }
        let mid = (lo + hi) * T::lit(0.5);
        if line(mid) >= best {
            best = line(mid);
            arg = mid;
        }
        (best, arg)
    }

    pub fn evaluate(&self, h: T) -> T {
        self.solve(h).0
    }

    /// (χ*)′(h): the maximizing l, signed like h.
    pub fn derivative(&self, h: T) -> T {
        let l = self.solve(h).1;
        if h < T::zero() {
            -l
        } else {
            l
        }
    }

    /// The inner l-grid of a numeric conjugate (empty for closed forms).
    pub fn grid(&self) -> &[T] {
        self.numeric.as_ref().map(|n| n.ls.as_slice()).unwrap_or(&[])
    }

    pub fn chi_one(&self) -> T {
        self.evaluate(T::one())
    }
}

impl<T: Real> WeightFn<T> for ConjugateWeight<T> {
    fn eval(&self, l: T) -> T {
        self.evaluate(l)
    }
    fn chi_one(&self) -> T {
        ConjugateWeight::chi_one(self)
    }
    fn growth(&self) -> Option<T> {
        match self.closed {
            Some(ClosedForm::Power { q }) => Some(q),
            Some(ClosedForm::Indicator) => None,
            None => self.numeric.as_ref().and_then(|n| n.growth),
        }
    }
}

/// `χ(a) + χ*(b) - ab`, nonnegative by the Young inequality.
pub fn young_residual<T: Real>(w: &YoungWeight<T>, c: &ConjugateWeight<T>, a: T, b: T) -> T {
    w.evaluate(a) + c.evaluate(b) - a * b
}

/// `χ(a) + χ*(χ′(a)) - aχ′(a)`, zero where χ is differentiable.
pub fn young_identity_defect<T: Real>(w: &YoungWeight<T>, c: &ConjugateWeight<T>, a: T) -> T {
    let d = w.derivative(a);
    w.evaluate(a) + c.evaluate(d) - a * d
}

// ---------------------------------------------------------------------------
// growth control

/// Outcome of the two-sided growth estimate `ε^p χ(l) ≤ χ(εl) ≤ ε χ(l)`.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub eps: f64,
    pub p: f64,
    pub samples: usize,
    pub max_lower_violation: f64,
    pub max_upper_violation: f64,
    pub passed: bool,
}

impl GrowthReport {
    pub fn max_violation(&self) -> f64 {
        self.max_lower_violation.max(self.max_upper_violation)
    }
}

pub fn check_growth_sandwich<T: Real>(w: &YoungWeight<T>, eps: T, samples: &[T]) -> Result<GrowthReport> {
    if !(eps > T::zero() && eps < T::one()) {
        return domain(format!("eps must lie in (0,1), got {eps}"));
    }
    let p = w.growth_exponent();
    let ep = eps.powf(p);
    let (mut lower, mut upper) = (T::zero(), T::zero());
    let mut n = 0;
    for &l in samples {
        if l <= T::zero() {
            continue;
        }
        n += 1;
        let chi = w.evaluate(l);
        let mid = w.evaluate(eps * l);
        let scale = T::one().max(chi);
        lower = lower.max((ep * chi - mid) / scale);
        upper = upper.max((mid - eps * chi) / scale);
    }
    let tol = T::rel_tol(1e-10);
    Ok(GrowthReport {
        eps: eps.as_f64(),
        p: p.as_f64(),
        samples: n,
        max_lower_violation: lower.as_f64(),
        max_upper_violation: upper.as_f64(),
        passed: lower <= tol && upper <= tol,
    })
}
