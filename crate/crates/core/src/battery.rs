//! Randomized checks of the distance and energy estimates.
//!
//! Each function evaluates one instance of an inequality and returns both
//! sides, so callers decide on slack and aggregate over trials.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measure::DiscreteMeasure;
use crate::metrics::{am_energy, d_chi, i_chi_energy, i_chi_terms, i_energy, primal_average};
use crate::orlicz::gauge_norm;
use crate::random::{random_potential, trial_rng, Roughness};
use crate::scalar::Real;
use crate::toric::{max_potential, rooftop, weak_geodesic, Model, SymplecticPotential};
use crate::weights::{conjugate, ConjugateGrid, WeightFn, YoungWeight};

/// `lhs ≤ rhs`, as evaluated.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bound {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Bound {
    fn new<T: Real>(name: &'static str, lhs: T, rhs: T) -> Self {
        Bound {
            name,
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
        }
    }

    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// Three independent random potentials for one trial.
#[derive(Debug, Clone)]
pub struct Trial<T> {
    pub u0: SymplecticPotential<T>,
    pub u1: SymplecticPotential<T>,
    pub u2: SymplecticPotential<T>,
}

pub fn draw_trial<T: Real>(model: &Model<T>, seed: u64, index: u64, r: &Roughness) -> Trial<T> {
    let mut rng = trial_rng(seed, index);
    Trial {
        u0: random_potential(model, &mut rng, r),
        u1: random_potential(model, &mut rng, r),
        u2: random_potential(model, &mut rng, r),
    }
}

/// `d(u0,u2) ≤ d(u0,u1) + d(u1,u2)`.
pub fn triangle<T: Real, W: WeightFn<T> + ?Sized>(t: &Trial<T>, w: &W) -> Result<Bound> {
    Ok(Bound::new(
        "triangle",
        d_chi(&t.u0, &t.u2, w)?,
        d_chi(&t.u0, &t.u1, w)? + d_chi(&t.u1, &t.u2, w)?,
    ))
}

/// For `u0 ≤ u1`:
/// `max{2^{-3}‖u1-u0‖_{u0}, ‖u1-u0‖_{u1}} ≤ d(u0,u1) ≤ ‖u1-u0‖_{u0}`.
pub fn ordered_sandwich<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<[Bound; 3]> {
    let d = d_chi(u0, u1, w)?;
    let [a, b] = i_chi_terms(u0, u1, w)?;
    Ok([
        Bound::new("ordered_lower_u0", a * T::lit(0.125), d),
        Bound::new("ordered_lower_u1", b, d),
        Bound::new("ordered_upper", d, a),
    ])
}

/// `½(d(u0,P) + d(u1,P)) ≤ d(u0,u1) ≤ 2(d(u0,P) + d(u1,P))`.
pub fn rooftop_decomposition<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<[Bound; 2]> {
    let p = rooftop(u0, u1)?;
    let s = d_chi(u0, &p, w)? + d_chi(u1, &p, w)?;
    let d = d_chi(u0, u1, w)?;
    Ok([
        Bound::new("rooftop_lower", s * T::lit(0.5), d),
        Bound::new("rooftop_upper", d, s * T::lit(2.0)),
    ])
}

/// `(d(u0,u1), d(u0,M) + d(u1,M))` with `M = max(u0,u1)`.
pub fn max_decomposition<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<(f64, f64)> {
    let m = max_potential(u0, u1)?;
    let s = d_chi(u0, &m, w)? + d_chi(u1, &m, w)?;
    Ok((d_chi(u0, u1, w)?.as_f64(), s.as_f64()))
}

/// `½(I(u0,M) + I(M,u1)) ≤ I(u0,u1) ≤ 2(I(u0,M) + I(M,u1))`.
pub fn max_additivity<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<[Bound; 2]> {
    let m = max_potential(u0, u1)?;
    let s = i_chi_energy(u0, &m, w)? + i_chi_energy(&m, u1, w)?;
    let i = i_chi_energy(u0, u1, w)?;
    Ok([
        Bound::new("max_additivity_lower", s * T::lit(0.5), i),
        Bound::new("max_additivity_upper", i, s * T::lit(2.0)),
    ])
}

/// `d(P(u,v), P(u,w)) ≤ d(v,w)`.
pub fn contraction<T: Real, W: WeightFn<T> + ?Sized>(t: &Trial<T>, w: &W) -> Result<Bound> {
    let a = rooftop(&t.u0, &t.u1)?;
    let b = rooftop(&t.u0, &t.u2)?;
    Ok(Bound::new("contraction", d_chi(&a, &b, w)?, d_chi(&t.u1, &t.u2, w)?))
}

/// `𝓘(max(u0,u1), u1) ≤ 𝓘(u0,u1)`.
pub fn i_max_monotone<T: Real>(u0: &SymplecticPotential<T>, u1: &SymplecticPotential<T>) -> Result<Bound> {
    let m = max_potential(u0, u1)?;
    Ok(Bound::new("i_energy_max", i_energy(&m, u1)?, i_energy(u0, u1)?))
}

/// `‖1‖_{χ*,ω}`.
pub fn conjugate_norm_of_one<T: Real>(w: &YoungWeight<T>) -> Result<T> {
    let c = conjugate(w, ConjugateGrid::default());
    gauge_norm(&[T::one()], &c, &DiscreteMeasure::midpoint(T::zero(), T::one(), 1))
}

/// `|AM(u0) - AM(u1)| ≤ ‖1‖_{χ*,ω} d(u0,u1)`.
pub fn am_lipschitz<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &YoungWeight<T>,
    one_norm: T,
) -> Result<Bound> {
    Ok(Bound::new(
        "am_lipschitz",
        (am_energy(u0) - am_energy(u1)).abs(),
        one_norm * d_chi(u0, u1, w)?,
    ))
}

/// Orders a trial as `u ≥ v ≥ w` and returns `d(u,v) ≤ d(u,w)`.
pub fn comparison<T: Real, W: WeightFn<T> + ?Sized>(t: &Trial<T>, w: &W) -> Result<Bound> {
    let low = t.u2.clone();
    let mid = max_potential(&low, &t.u1)?;
    let top = max_potential(&mid, &t.u0)?;
    Ok(Bound::new("comparison", d_chi(&top, &mid, w)?, d_chi(&top, &low, w)?))
}

/// `d(u0, (u0+u1)/2) / d(u0,u1)` with the midpoint formed in primal samples.
pub fn halfway_ratio<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<Option<f64>> {
    let d = d_chi(u0, u1, w)?;
    if d.as_f64() < 1e-12 {
        return Ok(None);
    }
    let mid = primal_average(u0, u1, 4)?;
    Ok(Some((d_chi(u0, &mid, w)? / d).as_f64()))
}

/// `(d(u0,u1), I(u0,u1))`.
pub fn distance_energy_pair<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<(f64, f64)> {
    Ok((d_chi(u0, u1, w)?.as_f64(), i_chi_energy(u0, u1, w)?.as_f64()))
}

/// Smallest `C ≥ 1` with `I/C ≤ d ≤ C I` on every pair.
pub fn fit_equivalence_constant(pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .filter(|(d, i)| *d > 0.0 && *i > 0.0)
        .fold(1.0f64, |c, (d, i)| c.max(d / i).max(i / d))
}

/// A sequence `u_k ↓ u`, `u_k` the point at `t = 2^{-k}` on the geodesic from
/// `u` to `max(u, v) + 0.1`, with the quantities that should all tend to zero.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub d: Vec<f64>,
    /// `‖u_k - u‖_{χ,ω_third}`.
    pub transfer: Vec<f64>,
    /// `I_1(u_k, u)`.
    pub i1: Vec<f64>,
    /// `∫|u_k - u| dω`.
    pub l1: Vec<f64>,
    /// `|AM(u_k) - AM(u)|`.
    pub am_gap: Vec<f64>,
}

fn decays(v: &[f64], slack: f64) -> bool {
    let (Some(first), Some(last)) = (v.first(), v.last()) else {
        return true;
    };
    v.windows(2).all(|p| p[1] <= p[0] + slack) && *last <= first * 0.25 + slack
}

impl ConvergenceReport {
    /// Every column nonincreasing (up to `slack`) and shrunk at least fourfold.
    pub fn all_decay(&self, slack: f64) -> bool {
        [&self.d, &self.transfer, &self.i1, &self.l1, &self.am_gap]
            .iter()
            .all(|v| decays(v, slack))
    }
}

pub fn convergence_family<T: Real, W: WeightFn<T> + ?Sized>(
    u: &SymplecticPotential<T>,
    v: &SymplecticPotential<T>,
    third: &SymplecticPotential<T>,
    w: &W,
    steps: usize,
) -> Result<ConvergenceReport> {
    if steps == 0 {
        return domain("convergence family needs at least one step");
    }
    let top = max_potential(u, v)?.shifted(T::lit(0.1));
    let seg = weak_geodesic(u, &top)?;
    let one = crate::weights::make_power_weight(T::one())?;
    let m = u.model();
    let mu = m.lebesgue();
    let s_third = third.fiber_coords();
    let base_third = u.primal_at(&s_third);
    let base_ref = u.primal_at_reference();
    let am_u = am_energy(u);
    let mut rep = ConvergenceReport {
        d: Vec::new(),
        transfer: Vec::new(),
        i1: Vec::new(),
        l1: Vec::new(),
        am_gap: Vec::new(),
    };
    for k in 1..=steps {
        let uk = seg.at(T::lit(0.5f64.powi(k as i32)));
        rep.d.push(d_chi(&uk, u, w)?.as_f64());
        let diff: Vec<T> = uk
            .primal_at(&s_third)
            .iter()
            .zip(&base_third)
            .map(|(a, b)| *a - *b)
            .collect();
        rep.transfer.push(gauge_norm(&diff, w, &mu)?.as_f64());
        rep.i1.push(i_chi_energy(&uk, u, &one)?.as_f64());
        let l1 = uk
            .primal_at_reference()
            .iter()
            .zip(&base_ref)
            .map(|(a, b)| (*a - *b).abs())
            .sum::<T>()
            / T::from_usize_lossy(m.n());
        rep.l1.push(l1.as_f64());
        rep.am_gap.push((am_energy(&uk) - am_u).abs().as_f64());
    }
    Ok(rep)
}
