use serde::Serialize;

use super::{convex_envelope, Model, SymplecticPotential, CONTACT_TOL};
use crate::error::{domain, Result};
use crate::measure::DiscreteMeasure;
use crate::scalar::Real;

fn same_grid<T: Real>(a: &SymplecticPotential<T>, b: &SymplecticPotential<T>) -> Result<()> {
    if a.same_grid(b) {
        Ok(())
    } else {
        domain("potentials live on different polytope grids")
    }
}

/// Rooftop envelope `P(u0, u1)`; dually the pointwise max of symplectic potentials.
pub fn rooftop<T: Real>(u0: &SymplecticPotential<T>, u1: &SymplecticPotential<T>) -> Result<SymplecticPotential<T>> {
    same_grid(u0, u1)?;
    let w = u0.w.iter().zip(&u1.w).map(|(a, b)| a.max(*b)).collect();
    Ok(SymplecticPotential::raw(&u0.model, w))
}

/// The potential with primal values `max(u0, u1)`: the convex envelope of
/// `min(u0*, u1*)`.
pub fn max_potential<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
) -> Result<SymplecticPotential<T>> {
    same_grid(u0, u1)?;
    let m = &u0.model;
    let psi: Vec<T> = (0..m.n())
        .map(|i| m.g[i] + u0.w[i].min(u1.w[i]))
        .collect();
    let hull = convex_envelope(&m.y, &psi);
    let w = hull.iter().zip(&m.g).map(|(a, b)| *a - *b).collect();
    Ok(SymplecticPotential::raw(m, w))
}

/// Monge–Ampère measure of `u` as Lebesgue probability on the polytope,
/// tagged with the fiber coordinates `s_i = (u*)′(y_i)` of its nodes.
#[derive(Debug, Clone)]
pub struct MaPushforward<T> {
    pub measure: DiscreteMeasure<T>,
    pub fiber: Vec<T>,
}

impl<T: Real> MaPushforward<T> {
    /// Samples a function on X, given in fiber coordinates, at the nodes.
    pub fn compose(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.fiber.iter().map(|&s| f(s)).collect()
    }
}

pub fn ma_pushforward<T: Real>(u: &SymplecticPotential<T>) -> MaPushforward<T> {
    MaPushforward {
        measure: u.model.lebesgue(),
        fiber: u.fiber_coords(),
    }
}

/// Dual-linear weak geodesic between two potentials.
#[derive(Debug, Clone)]
pub struct GeodesicSegment<T> {
    u0: SymplecticPotential<T>,
    u1: SymplecticPotential<T>,
}

pub fn weak_geodesic<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
) -> Result<GeodesicSegment<T>> {
    same_grid(u0, u1)?;
    Ok(GeodesicSegment {
        u0: u0.clone(),
        u1: u1.clone(),
    })
}

impl<T: Real> GeodesicSegment<T> {
    pub fn endpoints(&self) -> (&SymplecticPotential<T>, &SymplecticPotential<T>) {
        (&self.u0, &self.u1)
    }

    pub fn model(&self) -> &Model<T> {
        &self.u0.model
    }

    /// `u_t`, with `u_t* = (1-t) u0* + t u1*`.
    pub fn at(&self, t: T) -> SymplecticPotential<T> {
        if t == T::zero() {
            return self.u0.clone();
        }
        if t == T::one() {
            return self.u1.clone();
        }
        let w = self
            .u0
            .w
            .iter()
            .zip(&self.u1.w)
            .map(|(a, b)| (T::one() - t) * *a + t * *b)
            .collect();
        SymplecticPotential::raw(&self.u0.model, w)
    }

    /// `u̇_t` in the moment coordinates of `u_t`: the fixed function `u0* - u1*`.
    pub fn tangent(&self, _t: T) -> Vec<T> {
        self.u0.w.iter().zip(&self.u1.w).map(|(a, b)| *a - *b).collect()
    }
}

/// Outcome of the Monge–Ampère partition identity for a rooftop envelope.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    /// Total variation between `ω_P` and the partitioned right-hand side.
    pub defect: f64,
    /// Number of fiber cells whose contact label changes between neighbours.
    pub switches: usize,
    pub cells: usize,
    /// Mass of the cells classified as neither contact set.
    pub unclassified_mass: f64,
}

fn cell_masses<T: Real>(u: &SymplecticPotential<T>, edges: &[T]) -> Vec<T> {
    let len = u.model.len;
    let mut prev = T::zero();
    let mut out = Vec::with_capacity(edges.len() + 1);
    for &s in edges {
        let y = u.moment(s);
        out.push((y - prev) / len);
        prev = y;
    }
    out.push((len - prev) / len);
    out
}

/// Checks `ω_P = 1_{u0=P} ω_{u0} + 1_{u1=P, u0≠P} ω_{u1}` on the fiber cells
/// bounded by `g_ref′` of the polytope cell edges, each cell labelled by the
/// contact status of its centre.
pub fn ma_partition_check<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
) -> Result<PartitionReport> {
    let p = rooftop(u0, u1)?;
    let m = &u0.model;
    let edges = m.fiber_edges();
    let (mp, m0, m1) = (
        cell_masses(&p, &edges),
        cell_masses(u0, &edges),
        cell_masses(u1, &edges),
    );
    let tol = T::lit(CONTACT_TOL);
    let mut defect = T::zero();
    let mut unclassified = T::zero();
    let mut switches = 0;
    let mut last = None;
    for (j, &s) in m.g1.iter().enumerate() {
        // contact is decided on X: ω_P charges no mass where P < min(u0, u1)
        let vp = p.primal(s);
        let label = if (u0.primal(s) - vp).abs() <= tol {
            0
        } else if (u1.primal(s) - vp).abs() <= tol {
            1
        } else {
            2
        };
        let rhs = match label {
            0 => m0[j],
            1 => m1[j],
            _ => {
                unclassified = unclassified + mp[j];
                T::zero()
            }
        };
        defect = defect + (mp[j] - rhs).abs();
        if let Some(l) = last {
            if l != label {
                switches += 1;
            }
        }
        last = Some(label);
    }
    Ok(PartitionReport {
        defect: defect.as_f64(),
        switches,
        cells: m.n(),
        unclassified_mass: unclassified.as_f64(),
    })
}

/// `sup_s |inf_{t∈[0,1]} (u_t(s) - τt) - P(u0, u1 - τ)(s)|` over the given fiber samples.
pub fn envelope_geodesic_defect<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    tau: T,
    samples: &[T],
) -> Result<T> {
    let geo = weak_geodesic(u0, u1)?;
    let p = rooftop(u0, &u1.shifted(-tau))?;
    let f = |t: T, s: T| geo.at(t).primal(s) - tau * t;
    let mut worst = T::zero();
    for &s in samples {
        // u_t(s) is convex in t: golden-section search on [0, 1]
        let r = T::lit(0.5 * (5f64.sqrt() - 1.0));
        let (mut a, mut b) = (T::zero(), T::one());
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (f(c, s), f(d, s));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c, s);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d, s);
            }
        }
        let inf = fc.min(fd).min(f(T::zero(), s)).min(f(T::one(), s));
        worst = worst.max((inf - p.primal(s)).abs());
    }
    Ok(worst)
}
