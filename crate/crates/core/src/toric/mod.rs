//! S¹-invariant Kähler potentials on ℂP¹ in symplectic coordinates.
//!
//! A potential `u` with Kähler potential `φ = φ_ref + u` in the fiber
//! coordinate `s = log|z|²` is stored through its symplectic potential
//! `ψ = φ*` on the moment interval `P = [0, L]`, as the bounded difference
//! `w = ψ - g_ref` sampled at the half-offset nodes `y_i = (i + 1/2) L / n`.

mod legendre;
mod ops;

use std::sync::Arc;

pub use legendre::{convex_envelope, legendre, legendre_with_argmax, lower_hull};
pub use ops::{
    envelope_geodesic_defect, ma_partition_check, ma_pushforward, max_potential, rooftop,
    weak_geodesic, GeodesicSegment, MaPushforward, PartitionReport,
};

use crate::error::{domain, Result};
use crate::measure::DiscreteMeasure;
use crate::scalar::{sigmoid, softplus, Real};

/// Contact threshold for `|u_i* - max| ` decisions.
pub const CONTACT_TOL: f64 = 1e-9;

fn xlogx<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.ln()
    }
}

/// Reference metric data on a fixed polytope grid.
///
/// `φ_ref(s) = L log(1 + e^s)` is the Fubini–Study potential whose moment
/// interval has length `L`; its Legendre transform is
/// `g_ref(y) = y log y + (L - y) log(L - y) - L log L`.
#[derive(Debug, Clone)]
pub struct ReferenceModel<T> {
    len: T,
    dy: T,
    y: Vec<T>,
    g: Vec<T>,
    g1: Vec<T>,
    g2: Vec<T>,
}

/// Shared handle to a reference model.
pub type Model<T> = Arc<ReferenceModel<T>>;

impl<T: Real> ReferenceModel<T> {
    /// Grid of `n` interior nodes on `[0, len]`.
    pub fn new(n: usize, len: T) -> Result<Model<T>> {
        if n < 4 {
            return domain(format!("polytope grid needs at least 4 nodes, got {n}"));
        }
        if !(len > T::zero()) {
            return domain("polytope length must be positive");
        }
        let dy = len / T::from_usize_lossy(n);
        let y: Vec<T> = (0..n)
            .map(|i| dy * (T::from_usize_lossy(i) + T::lit(0.5)))
            .collect();
        let mut m = ReferenceModel {
            len,
            dy,
            g: Vec::with_capacity(n),
            g1: Vec::with_capacity(n),
            g2: Vec::with_capacity(n),
            y: y.clone(),
        };
        for &yi in &y {
            m.g.push(m.g_at(yi));
            m.g1.push(m.g1_at(yi));
            m.g2.push(m.g2_at(yi));
        }
        Ok(Arc::new(m))
    }

    /// The unit interval model used for metric computations.
    pub fn unit(n: usize) -> Result<Model<T>> {
        Self::new(n, T::one())
    }

    /// The anticanonically scaled model (`L = 2`) used for the Fano functionals.
    pub fn fano(n: usize) -> Result<Model<T>> {
        Self::new(n, T::lit(2.0))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
    pub fn len(&self) -> T {
        self.len
    }
    pub fn dy(&self) -> T {
        self.dy
    }
    pub fn nodes(&self) -> &[T] {
        &self.y
    }
    pub fn g(&self) -> &[T] {
        &self.g
    }
    /// `g_ref′` at the nodes, i.e. the fiber coordinates of the reference metric.
    pub fn g1(&self) -> &[T] {
        &self.g1
    }
    pub fn g2(&self) -> &[T] {
        &self.g2
    }

    pub fn g_at(&self, y: T) -> T {
        let l = self.len;
        xlogx(y) + xlogx(l - y) - xlogx(l)
    }
    pub fn g1_at(&self, y: T) -> T {
        (y / (self.len - y)).ln()
    }
    pub fn g2_at(&self, y: T) -> T {
        self.len / (y * (self.len - y))
    }

    pub fn phi_ref(&self, s: T) -> T {
        self.len * softplus(s)
    }
    /// Moment map of the reference metric, `L σ(s)`.
    pub fn moment_ref(&self, s: T) -> T {
        self.len * sigmoid(s)
    }
    /// `φ_ref″(s) = L σ(s)(1 - σ(s))`.
    pub fn rho(&self, s: T) -> T {
        self.log_rho(s).exp()
    }
    pub fn log_rho(&self, s: T) -> T {
        self.len.ln() - softplus(s) - softplus(-s)
    }
    /// `φ_ref‴ / φ_ref″ = 1 - 2σ(s)`.
    pub fn dlog_rho(&self, s: T) -> T {
        T::one() - T::lit(2.0) * sigmoid(s)
    }

    /// Normalized Lebesgue measure at the polytope nodes.
    pub fn lebesgue(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure::midpoint(T::zero(), self.len, self.n())
    }

    /// Fiber coordinates `g_ref′(jL/n)`, `j = 1..n-1`, of the cell edges.
    pub fn fiber_edges(&self) -> Vec<T> {
        (1..self.n())
            .map(|j| self.g1_at(self.dy * T::from_usize_lossy(j)))
            .collect()
    }
}

/// A Kähler potential stored as `w = u* - g_ref` on the polytope grid.
#[derive(Debug, Clone)]
pub struct SymplecticPotential<T> {
    model: Model<T>,
    w: Vec<T>,
}

impl<T: Real> PartialEq for SymplecticPotential<T> {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.model, &other.model) && self.w == other.w
    }
}

impl<T: Real> SymplecticPotential<T> {
    pub fn new(model: &Model<T>, w: Vec<T>) -> Result<Self> {
        if w.len() != model.n() {
            return domain(format!("{} dual values for a grid of {}", w.len(), model.n()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return domain("dual values must be finite");
        }
        Ok(Self {
            model: model.clone(),
            w,
        })
    }

    pub(crate) fn raw(model: &Model<T>, w: Vec<T>) -> Self {
        debug_assert_eq!(w.len(), model.n());
        Self {
            model: model.clone(),
            w,
        }
    }

    /// The reference potential `u = 0`.
    pub fn zero(model: &Model<T>) -> Self {
        Self::raw(model, vec![T::zero(); model.n()])
    }

    /// The constant potential `u = c` (dual shift by `-c`).
    pub fn constant(model: &Model<T>, c: T) -> Self {
        Self::raw(model, vec![-c; model.n()])
    }

    /// Dual difference sampled from `f(y)`.
    pub fn from_fn(model: &Model<T>, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(model, model.nodes().iter().map(|&y| f(y)).collect())
    }

    pub fn model(&self) -> &Model<T> {
        &self.model
    }
    pub fn values(&self) -> &[T] {
        &self.w
    }
    pub fn into_values(self) -> Vec<T> {
        self.w
    }
    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.model, &other.model)
            || (self.model.n() == other.model.n() && self.model.len == other.model.len)
    }

    /// `u + c`.
    pub fn shifted(&self, c: T) -> Self {
        Self::raw(&self.model, self.w.iter().map(|v| *v - c).collect())
    }

    /// ψ = g_ref + w at the nodes.
    pub fn psi(&self) -> Vec<T> {
        self.w.iter().zip(&self.model.g).map(|(a, b)| *a + *b).collect()
    }

    /// Largest negative part of the second differences of ψ (≤ 1e-9 for valid potentials).
    pub fn convexity_defect(&self) -> T {
        let psi = self.psi();
        psi.windows(3)
            .map(|v| v[0] - T::lit(2.0) * v[1] + v[2])
            .fold(T::zero(), |a, b| a.max(-b))
    }

    pub fn is_valid(&self) -> bool {
        self.convexity_defect() <= T::lit(CONTACT_TOL)
    }

    /// w′ at the nodes: central differences, one-sided at the ends.
    pub fn slopes(&self) -> Vec<T> {
        let n = self.w.len();
        let h = self.model.dy;
        (0..n)
            .map(|i| {
                if i == 0 {
                    (self.w[1] - self.w[0]) / h
                } else if i == n - 1 {
                    (self.w[n - 1] - self.w[n - 2]) / h
                } else {
                    (self.w[i + 1] - self.w[i - 1]) / (h + h)
                }
            })
            .collect()
    }

    /// Fiber coordinates `s_i = ψ′(y_i)` of the nodes under this potential's moment map.
    pub fn fiber_coords(&self) -> Vec<T> {
        self.slopes()
            .iter()
            .zip(&self.model.g1)
            .map(|(a, b)| *a + *b)
            .collect()
    }

    /// `u(s_i)` at its own fiber coordinates, by the same supremum formula
    /// used for every other potential.
    pub fn own_values(&self) -> Vec<T> {
        self.primal_at(&self.fiber_coords())
    }

    /// The Legendre pairing `s_i y_i - ψ_i - φ_ref(s_i)`, a lower bound for
    /// [`own_values`](Self::own_values) that is off by `O(h²)` where `w` bends down.
    pub fn pairing_values(&self) -> Vec<T> {
        let s = self.fiber_coords();
        let m = &self.model;
        (0..self.w.len())
            .map(|i| s[i] * m.y[i] - (m.g[i] + self.w[i]) - m.phi_ref(s[i]))
            .collect()
    }

    /// Piecewise linear interpolant of w, extended by constants to `[0, L]`.
    pub fn w_at(&self, y: T) -> T {
        let (c, ya, wa, b) = self.cell_of_y(y);
        let _ = c;
        wa + b * (y - ya)
    }

    fn cell_of_y(&self, y: T) -> (usize, T, T, T) {
        let x = y / self.model.dy - T::lit(0.5);
        let n = self.w.len();
        let c = if x < T::zero() {
            0
        } else {
            (x.floor().to_usize().unwrap_or(n) + 1).min(n)
        };
        let (ya, wa, b) = self.cell_line(c);
        (c, ya, wa, b)
    }

    /// Cell `c` ∈ `0..=n`: `[0, y_0]`, `[y_{c-1}, y_c]`, ..., `[y_{n-1}, L]`,
    /// returned as the anchor, value and slope of the linear piece of w.
    fn cell_line(&self, c: usize) -> (T, T, T) {
        let n = self.w.len();
        let h = self.model.dy;
        if c == 0 {
            (self.model.y[0], self.w[0], T::zero())
        } else if c == n {
            (self.model.y[n - 1], self.w[n - 1], T::zero())
        } else {
            (self.model.y[c - 1], self.w[c - 1], (self.w[c] - self.w[c - 1]) / h)
        }
    }

    fn cell_bounds(&self, c: usize) -> (T, T) {
        let n = self.w.len();
        let y = &self.model.y;
        if c == 0 {
            (T::zero(), y[0])
        } else if c == n {
            (y[n - 1], self.model.len)
        } else {
            (y[c - 1], y[c])
        }
    }

    /// `sup_{y ∈ cell} (s y - g_ref(y) - w(y))` and its maximizer.
    fn cell_sup(&self, c: usize, s: T) -> (T, T) {
        let (lo, hi) = self.cell_bounds(c);
        let (ya, wa, b) = self.cell_line(c);
        let m = &self.model;
        let y = (m.len * sigmoid(s - b)).max(lo).min(hi);
        (s * y - m.g_at(y) - wa - b * (y - ya), y)
    }

    /// `φ(s) = sup_y (s y - ψ(y))` with its maximizer (the moment map at `s`).
    pub fn phi(&self, s: T) -> (T, T) {
        let n = self.w.len();
        let m = &self.model;
        let h = m.dy;
        // first node whose right secant slope of ψ reaches s
        let (mut lo, mut hi) = (0usize, n - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            let sl = (m.g[mid + 1] + self.w[mid + 1] - m.g[mid] - self.w[mid]) / h;
            if sl < s {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let j = lo;
        let first = j.saturating_sub(2);
        let last = (j + 3).min(n);
        let mut best = (T::neg_infinity(), T::zero());
        for c in first..=last {
            let v = self.cell_sup(c, s);
            if v.0 > best.0 {
                best = v;
            }
        }
        best
    }

    /// The primal potential `u(s) = φ(s) - φ_ref(s)`.
    pub fn primal(&self, s: T) -> T {
        self.phi(s).0 - self.model.phi_ref(s)
    }

    /// The moment map `φ′(s)` of this potential.
    pub fn moment(&self, s: T) -> T {
        self.phi(s).1
    }

    /// `u` at the reference fiber coordinates `g_ref′(y_i)`.
    pub fn primal_at_reference(&self) -> Vec<T> {
        self.model.g1.iter().map(|&s| self.primal(s)).collect()
    }

    /// `u` evaluated at the fiber coordinates of another potential's nodes.
    pub fn primal_at(&self, s: &[T]) -> Vec<T> {
        s.iter().map(|&x| self.primal(x)).collect()
    }

    /// `sup_X u`, attained as `-min_y w` over `[0, L]`.
    pub fn sup(&self) -> T {
        -self.w.iter().fold(T::infinity(), |a, b| a.min(*b))
    }

    /// Even symmetrization `w(y) ← (w(y) + w(L - y)) / 2`.
    pub fn symmetrized(&self) -> Self {
        let n = self.w.len();
        let w = (0..n)
            .map(|i| (self.w[i] + self.w[n - 1 - i]) * T::lit(0.5))
            .collect();
        Self::raw(&self.model, w)
    }

    /// Replaces ψ by the lower convex hull of its node values.
    pub fn convexified(&self) -> Self {
        let psi = self.psi();
        let hull = convex_envelope(&self.model.y, &psi);
        let w = hull.iter().zip(&self.model.g).map(|(a, b)| *a - *b).collect();
        Self::raw(&self.model, w)
    }

    /// CSV with header `y,dual_value` (dual_value = u* - g_ref).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("y,dual_value\n");
        for (y, w) in self.model.y.iter().zip(&self.w) {
            let _ = writeln!(s, "{:.16e},{:.16e}", y.as_f64(), w.as_f64());
        }
        s
    }
}
