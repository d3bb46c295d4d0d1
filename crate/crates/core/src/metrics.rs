//! Energies and Orlicz–Finsler distances of toric potentials.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::measure::DiscreteMeasure;
use crate::orlicz::{gauge_norm, gauge_norm_report, NormReport};
use crate::scalar::Real;
use crate::toric::{legendre, rooftop, Model, SymplecticPotential};
use crate::weights::{make_power_weight, WeightFn, YoungWeight};

/// A named scalar energy with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub name: String,
    pub value: f64,
    pub inputs: Vec<String>,
    pub grid_resolution: usize,
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::from_usize_lossy(v.len())
}

fn check_pair<T: Real>(a: &SymplecticPotential<T>, b: &SymplecticPotential<T>) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        domain("potentials live on different polytope grids")
    }
}

/// `∫ u dω`: u sampled at the reference fiber coordinates against Lebesgue weights.
pub fn reference_integral<T: Real>(u: &SymplecticPotential<T>) -> T {
    mean(&u.primal_at_reference())
}

/// Aubin–Mabuchi energy `½(∫u dω + ∫u dω_u)` by fiber quadrature.
pub fn am_energy<T: Real>(u: &SymplecticPotential<T>) -> T {
    (reference_integral(u) + mean(&u.own_values())) * T::lit(0.5)
}

/// Dual form of the Aubin–Mabuchi energy, `∫_P (0* - u*) dy`.
pub fn am_dual<T: Real>(u: &SymplecticPotential<T>) -> T {
    -mean(u.values())
}

/// `u - AM(u)`.
pub fn renormalize<T: Real>(u: &SymplecticPotential<T>) -> SymplecticPotential<T> {
    u.shifted(-am_dual(u))
}

/// `v - u` composed into the moment coordinates of `u`, with `u` evaluated by
/// its Legendre pairing and `v` by its supremum formula.
pub fn difference_at<T: Real>(base: &SymplecticPotential<T>, other: &SymplecticPotential<T>) -> Vec<T> {
    let s = base.fiber_coords();
    let own = base.own_values();
    s.iter().zip(&own).map(|(x, u)| other.primal(*x) - *u).collect()
}

/// Geodesic tangent `u0* - u1*` on the polytope.
pub fn tangent<T: Real>(u0: &SymplecticPotential<T>, u1: &SymplecticPotential<T>) -> Vec<T> {
    u0.values().iter().zip(u1.values()).map(|(a, b)| *a - *b).collect()
}

/// `d_χ(u0, u1) = ‖u0* - u1*‖_{χ, dy}`.
pub fn d_chi<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<T> {
    check_pair(u0, u1)?;
    gauge_norm(&tangent(u0, u1), w, &u0.model().lebesgue())
}

pub fn d_chi_report<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<NormReport> {
    check_pair(u0, u1)?;
    gauge_norm_report(&tangent(u0, u1), w, &u0.model().lebesgue()).map(|r| r.1)
}

/// `d_p` for the power weight χ_p.
pub fn d_p<T: Real>(u0: &SymplecticPotential<T>, u1: &SymplecticPotential<T>, p: T) -> Result<T> {
    d_chi(u0, u1, &make_power_weight(p)?)
}

/// Fiber cells bounded by `g_ref′` of the polytope cell edges, with the
/// Monge–Ampère mass each cell carries under `u`.
pub fn fiber_cell_masses<T: Real>(u: &SymplecticPotential<T>) -> Vec<T> {
    let m = u.model();
    let len = m.len();
    let mut prev = T::zero();
    let mut out = Vec::with_capacity(m.n());
    for s in m.fiber_edges() {
        let y = u.moment(s);
        out.push((y - prev) / len);
        prev = y;
    }
    out.push((len - prev) / len);
    out
}

/// `d_χ(u0, u1) = ‖u̇_0‖_{χ, ω_{u0}}` evaluated on the fiber side: the initial
/// tangent `-(u1* - u0*)(φ0′(s))` at the reference fiber nodes, weighted by
/// the Monge–Ampère masses of the fiber cells.
pub fn d_chi_fiber<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<T> {
    check_pair(u0, u1)?;
    let m = u0.model();
    let f: Vec<T> = m
        .g1()
        .iter()
        .map(|&s| {
            let y = u0.moment(s);
            u0.w_at(y) - u1.w_at(y)
        })
        .collect();
    let mu = DiscreteMeasure::new(m.g1().to_vec(), fiber_cell_masses(u0))?.into_probability()?;
    gauge_norm(&f, w, &mu)
}

/// `‖u1 - u0‖_{χ,u0} + ‖u1 - u0‖_{χ,u1}`.
pub fn i_chi_energy<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<T> {
    Ok(i_chi_terms(u0, u1, w)?.iter().copied().sum())
}

/// The two summands of `I_χ(u0, u1)`.
pub fn i_chi_terms<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> Result<[T; 2]> {
    check_pair(u0, u1)?;
    let mu = u0.model().lebesgue();
    let a = gauge_norm(&difference_at(u0, u1), w, &mu)?;
    let b: Vec<T> = difference_at(u1, u0).iter().map(|v| -*v).collect();
    Ok([a, gauge_norm(&b, w, &mu)?])
}

/// `𝓘(u0, u1) = ∫(u0 - u1)(dω_{u1} - dω_{u0}) ≥ 0`.
pub fn i_energy<T: Real>(u0: &SymplecticPotential<T>, u1: &SymplecticPotential<T>) -> Result<T> {
    check_pair(u0, u1)?;
    Ok(mean(&difference_at(u1, u0)) + mean(&difference_at(u0, u1)))
}

/// `E_χ̃(u) = ∫ χ̃(u) dω_u` with `χ̃(l) = -χ(l)` for `l ≤ 0` and 0 otherwise.
pub fn e_chi_energy<T: Real>(u: &SymplecticPotential<T>, w: &YoungWeight<T>) -> T {
    let v: Vec<T> = u
        .own_values()
        .iter()
        .map(|x| if *x <= T::zero() { -w.evaluate(*x) } else { T::zero() })
        .collect();
    mean(&v)
}

/// `E_χ̃(u)` on the fiber side, against the cell masses of `ω_u`.
pub fn e_chi_energy_fiber<T: Real>(u: &SymplecticPotential<T>, w: &YoungWeight<T>) -> T {
    let mass = fiber_cell_masses(u);
    u.model()
        .g1()
        .iter()
        .zip(&mass)
        .map(|(s, m)| {
            let x = u.primal(*s);
            let v = if x <= T::zero() { -w.evaluate(x) } else { T::zero() };
            v * *m
        })
        .sum()
}

/// Ricci potential `h` of the reference metric: `Ric ω = ω + i∂∂̄h`.
#[derive(Debug, Clone)]
pub struct RicciPotential<T> {
    /// `h` at the reference fiber coordinates of the nodes.
    pub values: Vec<T>,
    /// `∫(Ric ω - ω)`, zero exactly when `[ω] = c_1`.
    pub cohomology_defect: T,
    offset: T,
}

fn ricci_raw<T: Real>(model: &Model<T>, s: T) -> T {
    // log g″ - (y g′ - g) + g′ at y = Lσ(s), where g′ = s and g″ = 1/ρ(s)
    -model.log_rho(s) - model.phi_ref(s) + s
}

impl<T: Real> RicciPotential<T> {
    /// `h = -log φ_ref″ - φ_ref + s`, normalized so that `∫ e^h dω = 1`.
    pub fn reference(model: &Model<T>) -> Self {
        let raw: Vec<T> = model.g1().iter().map(|&s| ricci_raw(model, s)).collect();
        let top = raw.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
        let offset = top + mean(&raw.iter().map(|h| (*h - top).exp()).collect::<Vec<_>>()).ln();
        let values = raw.iter().map(|h| *h - offset).collect();
        let far = T::lit(40.0);
        let ric = model.dlog_rho(-far) - model.dlog_rho(far);
        RicciPotential {
            values,
            cohomology_defect: ric - model.len(),
            offset,
        }
    }

    /// `h(s)` at an arbitrary fiber coordinate.
    pub fn eval(&self, model: &Model<T>, s: T) -> T {
        ricci_raw(model, s) - self.offset
    }

    /// `h′(s) = 1 - L σ(s) - (1 - 2σ(s))`, identically zero when `L = 2`.
    pub fn derivative(&self, model: &Model<T>, s: T) -> T {
        T::one() - model.moment_ref(s) - model.dlog_rho(s)
    }

    /// `max |h - mean(h)|`.
    pub fn oscillation(&self) -> T {
        let m = mean(&self.values);
        self.values.iter().fold(T::zero(), |a, h| a.max((*h - m).abs()))
    }
}

/// Ding functional `𝓕(u) = -log ∫ e^{-u+h} dω` and `𝓙(u) = ∫ u dω`.
pub fn ding_and_j<T: Real>(u: &SymplecticPotential<T>, h: &[T]) -> Result<(T, T)> {
    let m = u.model();
    if h.len() != m.n() {
        return domain(format!("Ricci potential has {} samples for a grid of {}", h.len(), m.n()));
    }
    let v = u.primal_at_reference();
    let e: Vec<T> = v.iter().zip(h).map(|(a, b)| *b - *a).collect();
    let top = e.iter().fold(T::neg_infinity(), |a, b| a.max(*b));
    let s = mean(&e.iter().map(|x| (*x - top).exp()).collect::<Vec<_>>());
    Ok((-(top + s.ln()), mean(&v)))
}

/// Defects of the Pythagorean identities for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct PythagorasReport {
    pub p: f64,
    /// `d_p(u0,u1)^p`.
    pub lhs: f64,
    /// `d_p(u0,P)^p + d_p(u1,P)^p`.
    pub rhs: f64,
    pub relative_defect: f64,
    /// The same identity with every distance evaluated on the fiber side.
    pub fiber_relative_defect: f64,
    /// For `p = 1`: `|d_1 - (AM(u0) + AM(u1) - 2AM(P))| / d_1` with the fiber-quadrature AM.
    pub am_relative_defect: Option<f64>,
}

pub fn d_p_pythagoras_check<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    p: T,
) -> Result<PythagorasReport> {
    check_pair(u0, u1)?;
    let w = make_power_weight(p)?;
    let pr = rooftop(u0, u1)?;
    let rel = |a: T, b: T| {
        let s = a.abs().max(b.abs());
        if s == T::zero() {
            0.0
        } else {
            ((a - b).abs() / s).as_f64()
        }
    };
    let lhs = d_chi(u0, u1, &w)?.powf(p);
    let rhs = d_chi(u0, &pr, &w)?.powf(p) + d_chi(u1, &pr, &w)?.powf(p);
    let fl = d_chi_fiber(u0, u1, &w)?.powf(p);
    let fr = d_chi_fiber(u0, &pr, &w)?.powf(p) + d_chi_fiber(u1, &pr, &w)?.powf(p);
    let am = if p == T::one() {
        let formula = am_energy(u0) + am_energy(u1) - T::lit(2.0) * am_energy(&pr);
        Some(rel(lhs, formula))
    } else {
        None
    };
    Ok(PythagorasReport {
        p: p.as_f64(),
        lhs: lhs.as_f64(),
        rhs: rhs.as_f64(),
        relative_defect: rel(lhs, rhs),
        fiber_relative_defect: rel(fl, fr),
        am_relative_defect: am,
    })
}

/// Primal midpoint `(u0 + u1)/2`, re-dualized through a discrete Legendre
/// transform over fiber samples refined `refine` times per polytope cell.
pub fn primal_average<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    refine: usize,
) -> Result<SymplecticPotential<T>> {
    check_pair(u0, u1)?;
    let m = u0.model();
    let k = refine.max(1) * m.n();
    let len = m.len();
    let step = len / T::from_usize_lossy(k);
    let s: Vec<T> = (0..k)
        .map(|j| m.g1_at(step * (T::from_usize_lossy(j) + T::lit(0.5))))
        .collect();
    let phi: Vec<T> = s
        .iter()
        .map(|&x| (u0.phi(x).0 + u1.phi(x).0) * T::lit(0.5))
        .collect();
    let psi = legendre(&s, &phi, m.nodes());
    let w = psi.iter().zip(m.g()).map(|(a, b)| *a - *b).collect();
    SymplecticPotential::new(m, w).map(|u| u.convexified())
}
