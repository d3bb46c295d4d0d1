//! ε-geodesics between toric potentials and χ-lengths of space-time paths.
//!
//! In symplectic coordinates the ε-geodesic equation
//! `(ü - ½|∇u̇|²_{ω_u}) ω_u = ε ω` reduces to
//!
//! ```text
//! ψ_tt + ε ρ(ψ_y) ψ_yy = 0,    ρ = φ_ref″,
//! ```
//!
//! for `ψ_t = u_t*`, with Dirichlet data at `t = 0, 1`. It is discretized on the
//! polytope grid (centred differences, linear ghost nodes at the two ends)
//! times a uniform time grid and solved by damped Newton iteration.

use serde::Serialize;

use crate::banded::BandMatrix;
use crate::error::{domain, numerical, Result};
use crate::metrics::difference_at;
use crate::orlicz::gauge_norm;
use crate::scalar::Real;
use crate::toric::{GeodesicSegment, Model, SymplecticPotential};
use crate::weights::WeightFn;

/// Discretization and stopping parameters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EpsOptions {
    pub time_nodes: usize,
    /// Stop when the max-norm residual falls below this.
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for EpsOptions {
    fn default() -> Self {
        EpsOptions {
            time_nodes: 64,
            tol: 1e-10,
            max_newton: 60,
        }
    }
}

/// Dual deviations `w(t_k, y_i)` of a path of potentials.
#[derive(Debug, Clone)]
pub struct SpaceTimeField<T> {
    model: Model<T>,
    times: Vec<T>,
    rows: Vec<Vec<T>>,
    epsilon: T,
    residual_history: Vec<f64>,
    warnings: Vec<String>,
}

fn uniform_times<T: Real>(k: usize) -> Vec<T> {
    let d = T::from_usize_lossy(k - 1);
    (0..k).map(|i| T::from_usize_lossy(i) / d).collect()
}

impl<T: Real> SpaceTimeField<T> {
    /// Samples the dual-linear geodesic on `time_nodes` uniform times.
    pub fn from_segment(seg: &GeodesicSegment<T>, time_nodes: usize) -> Result<Self> {
        if time_nodes < 3 {
            return domain("a space-time field needs at least 3 time nodes");
        }
        let times = uniform_times(time_nodes);
        let rows = times.iter().map(|&t| seg.at(t).into_values()).collect();
        Ok(SpaceTimeField {
            model: seg.model().clone(),
            times,
            rows,
            epsilon: T::zero(),
            residual_history: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn model(&self) -> &Model<T> {
        &self.model
    }
    pub fn epsilon(&self) -> T {
        self.epsilon
    }
    pub fn times(&self) -> &[T] {
        &self.times
    }
    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
    /// Max-norm residual after each Newton iteration.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn potential(&self, k: usize) -> SymplecticPotential<T> {
        SymplecticPotential::raw(&self.model, self.rows[k].clone())
    }

    fn dt(&self) -> T {
        self.times[1] - self.times[0]
    }

    /// `∂_t u*` at time node `k`; `u̇_t` in the moment coordinates of `u_t` is its negative.
    pub fn tangent(&self, k: usize) -> Vec<T> {
        let r = &self.rows;
        let last = r.len() - 1;
        let two_dt = self.dt() * T::lit(2.0);
        let n = self.model.n();
        (0..n)
            .map(|i| {
                if k == 0 {
                    (T::lit(4.0) * r[1][i] - T::lit(3.0) * r[0][i] - r[2][i]) / two_dt
                } else if k == last {
                    (T::lit(3.0) * r[last][i] - T::lit(4.0) * r[last - 1][i] + r[last - 2][i]) / two_dt
                } else {
                    (r[k + 1][i] - r[k - 1][i]) / two_dt
                }
            })
            .collect()
    }

    /// `‖u̇_t‖_{χ,u_t}` at every time node.
    pub fn speed_profile<W: WeightFn<T> + ?Sized>(&self, w: &W) -> Result<Vec<T>> {
        let mu = self.model.lebesgue();
        (0..self.times.len())
            .map(|k| gauge_norm(&self.tangent(k), w, &mu))
            .collect()
    }

    /// `max_{k,i} |w_ε - w_lin|`; Legendre duality preserves the sup distance.
    pub fn sup_distance(&self, seg: &GeodesicSegment<T>) -> T {
        self.times
            .iter()
            .zip(&self.rows)
            .map(|(&t, row)| {
                let lin = seg.at(t);
                row.iter()
                    .zip(lin.values())
                    .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Most negative second difference in `t` of the primal values at the reference fiber nodes.
    pub fn t_convexity_defect(&self) -> T {
        let prim: Vec<Vec<T>> = (0..self.rows.len())
            .map(|k| self.potential(k).primal_at_reference())
            .collect();
        let mut worst = T::zero();
        for k in 1..prim.len() - 1 {
            for i in 0..self.model.n() {
                let d = prim[k + 1][i] - T::lit(2.0) * prim[k][i] + prim[k - 1][i];
                worst = worst.max(-d);
            }
        }
        worst
    }

    /// Max-norm of the discrete ε-geodesic residual on the interior rows.
    pub fn residual(&self) -> T {
        let disc = Discretization::new(&self.model, self.times.len(), self.epsilon);
        disc.residual(&self.rows)
            .iter()
            .fold(T::zero(), |a, r| a.max(r.abs()))
    }

    /// CSV with header `t,y,dual_value`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("t,y,dual_value\n");
        for (t, row) in self.times.iter().zip(&self.rows) {
            for (y, w) in self.model.nodes().iter().zip(row) {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", t.as_f64(), y.as_f64(), w.as_f64());
            }
        }
        s
    }
}

struct Discretization<'a, T> {
    model: &'a Model<T>,
    m: usize,
    n: usize,
    dt2: T,
    h: T,
    eps: T,
}

/// Spatial stencil at node `i`: `(D1 w, D2 w)` with the coefficient of each neighbour.
struct Stencil<T> {
    d1: T,
    d2: T,
    /// (node, ∂D1/∂w_node, ∂D2/∂w_node)
    taps: [(usize, T, T); 3],
    len: usize,
}

impl<'a, T: Real> Discretization<'a, T> {
    fn new(model: &'a Model<T>, time_nodes: usize, eps: T) -> Self {
        let dt = T::one() / T::from_usize_lossy(time_nodes - 1);
        Discretization {
            model,
            m: time_nodes - 2,
            n: model.n(),
            dt2: dt * dt,
            h: model.dy(),
            eps,
        }
    }

    fn stencil(&self, w: &[T], i: usize) -> Stencil<T> {
        let (h, n) = (self.h, self.n);
        let z = T::zero();
        if i == 0 {
            // ghost w_{-1} = 2 w_0 - w_1
            Stencil {
                d1: (w[1] - w[0]) / h,
                d2: z,
                taps: [(0, -T::one() / h, z), (1, T::one() / h, z), (0, z, z)],
                len: 2,
            }
        } else if i == n - 1 {
            Stencil {
                d1: (w[n - 1] - w[n - 2]) / h,
                d2: z,
                taps: [(n - 2, -T::one() / h, z), (n - 1, T::one() / h, z), (0, z, z)],
                len: 2,
            }
        } else {
            let h2 = h * h;
            let half = T::lit(0.5) / h;
            Stencil {
                d1: (w[i + 1] - w[i - 1]) * half,
                d2: (w[i + 1] - T::lit(2.0) * w[i] + w[i - 1]) / h2,
                taps: [
                    (i - 1, -half, T::one() / h2),
                    (i, z, -T::lit(2.0) / h2),
                    (i + 1, half, T::one() / h2),
                ],
                len: 3,
            }
        }
    }

    fn idx(&self, k: usize, i: usize) -> usize {
        i * self.m + (k - 1)
    }

    fn residual(&self, rows: &[Vec<T>]) -> Vec<T> {
        let mut r = vec![T::zero(); self.n * self.m];
        for k in 1..=self.m {
            for i in 0..self.n {
                let st = self.stencil(&rows[k], i);
                let s = self.model.g1()[i] + st.d1;
                let psi2 = self.model.g2()[i] + st.d2;
                let dtt = (rows[k + 1][i] - T::lit(2.0) * rows[k][i] + rows[k - 1][i]) / self.dt2;
                r[self.idx(k, i)] = dtt + self.eps * self.model.rho(s) * psi2;
            }
        }
        r
    }

    fn jacobian(&self, rows: &[Vec<T>]) -> BandMatrix<T> {
        let mut jac = BandMatrix::zeros(self.n * self.m, self.m);
        let inv = T::one() / self.dt2;
        for k in 1..=self.m {
            for i in 0..self.n {
                let row = self.idx(k, i);
                jac.add(row, row, -T::lit(2.0) * inv);
                if k > 1 {
                    jac.add(row, self.idx(k - 1, i), inv);
                }
                if k < self.m {
                    jac.add(row, self.idx(k + 1, i), inv);
                }
                let st = self.stencil(&rows[k], i);
                let s = self.model.g1()[i] + st.d1;
                let psi2 = self.model.g2()[i] + st.d2;
                let rho = self.model.rho(s);
                let drho = rho * self.model.dlog_rho(s);
                for &(j, c1, c2) in &st.taps[..st.len] {
                    let v = self.eps * (drho * psi2 * c1 + rho * c2);
                    jac.add(row, self.idx(k, j), v);
                }
            }
        }
        jac
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, x| a.max(x.abs()))
}

fn l2<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Solves the ε-geodesic problem between `u0` and `u1`, warm-started from the
/// dual-linear geodesic.
pub fn solve_eps_geodesic<T: Real>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    eps: T,
    opts: &EpsOptions,
) -> Result<SpaceTimeField<T>> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return domain(format!("epsilon must be positive, got {eps}"));
    }
    if !u0.is_valid() || !u1.is_valid() {
        return domain("endpoint potentials must be convex");
    }
    let seg = crate::toric::weak_geodesic(u0, u1)?;
    let mut field = SpaceTimeField::from_segment(&seg, opts.time_nodes)?;
    field.epsilon = eps;
    let model = field.model.clone();
    if eps < model.dy() * model.dy() {
        field.warnings.push(format!(
            "epsilon {eps} is below the squared grid spacing; the smoothing scale is unresolved"
        ));
    }
    let disc = Discretization::new(&model, opts.time_nodes, eps);
    let tol = T::lit(opts.tol);
    let mut r = disc.residual(&field.rows);
    field.residual_history.push(max_abs(&r).as_f64());
    for _ in 0..opts.max_newton {
        if max_abs(&r) <= tol {
            return Ok(field);
        }
        let lu = disc.jacobian(&field.rows).factor()?;
        let minus: Vec<T> = r.iter().map(|x| -*x).collect();
        let step = lu.solve(&minus);
        let norm0 = l2(&r);
        let mut lambda = T::one();
        loop {
            let mut trial = field.rows.clone();
            for k in 1..=disc.m {
                for i in 0..disc.n {
                    trial[k][i] = trial[k][i] + lambda * step[disc.idx(k, i)];
                }
            }
            let rt = disc.residual(&trial);
            let nt = l2(&rt);
            if nt.is_finite() && nt <= (T::one() - T::lit(1e-4) * lambda) * norm0 {
                field.rows = trial;
                r = rt;
                break;
            }
            lambda = lambda * T::lit(0.5);
            if lambda < T::lit(1e-10) {
                // accept the full step once the residual sits at rounding level
                if max_abs(&r) <= tol * T::lit(10.0) {
                    return Ok(field);
                }
                return numerical(format!(
                    "ε-geodesic line search stalled; residual history {:?}",
                    field.residual_history
                ));
            }
        }
        field.residual_history.push(max_abs(&r).as_f64());
    }
    if max_abs(&r) <= tol {
        return Ok(field);
    }
    numerical(format!(
        "ε-geodesic Newton did not converge in {} iterations; residual history {:?}",
        opts.max_newton, field.residual_history
    ))
}

/// `∫₀¹ ‖u̇_t‖_{χ,u_t} dt` by the composite trapezoid rule.
pub fn chi_length<T: Real, W: WeightFn<T> + ?Sized>(field: &SpaceTimeField<T>, w: &W) -> Result<T> {
    let sp = field.speed_profile(w)?;
    let dt = field.dt();
    let inner: T = sp[1..sp.len() - 1].iter().copied().sum();
    Ok(dt * (inner + (sp[0] + sp[sp.len() - 1]) * T::lit(0.5)))
}

/// `∫ χ(u̇_t) dω_{u_t}` at every time node.
pub fn tangent_integral_profile<T: Real, W: WeightFn<T> + ?Sized>(field: &SpaceTimeField<T>, w: &W) -> Vec<T> {
    let n = T::from_usize_lossy(field.model.n());
    (0..field.times.len())
        .map(|k| field.tangent(k).iter().map(|x| w.eval(-*x)).sum::<T>() / n)
        .collect()
}

/// `max{∫χ(min(u1-u0,0)) dω_{u0}, ∫χ(min(u0-u1,0)) dω_{u1}}`, the ε = 0 lower
/// bound for [`tangent_integral_profile`].
pub fn endpoint_difference_bound<T: Real, W: WeightFn<T> + ?Sized>(
    u0: &SymplecticPotential<T>,
    u1: &SymplecticPotential<T>,
    w: &W,
) -> T {
    let n = T::from_usize_lossy(u0.model().n());
    let side = |a: &SymplecticPotential<T>, b: &SymplecticPotential<T>| {
        difference_at(a, b)
            .iter()
            .map(|x| w.eval(x.min(T::zero())))
            .sum::<T>()
            / n
    };
    side(u0, u1).max(side(u1, u0))
}

/// `max |Δ_ω u_t|` over the space-time grid, where `Δ_ω u = 1/(ψ″ ρ(ψ′)) - 1`.
pub fn laplacian_bound_probe<T: Real>(field: &SpaceTimeField<T>) -> T {
    let disc = Discretization::new(&field.model, field.times.len(), field.epsilon);
    let mut worst = T::zero();
    for row in &field.rows {
        for i in 0..disc.n {
            let st = disc.stencil(row, i);
            let s = field.model.g1()[i] + st.d1;
            let psi2 = field.model.g2()[i] + st.d2;
            let lap = if psi2 > T::zero() {
                (-psi2.ln() - field.model.log_rho(s)).exp() - T::one()
            } else {
                T::infinity()
            };
            worst = worst.max(lap.abs());
        }
    }
    worst
}
