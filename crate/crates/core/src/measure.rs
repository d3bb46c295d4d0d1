//! Discrete quadrature measures on an interval.

use std::fmt::Write as _;

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Nonnegative weights attached to sorted nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    total_mass: T,
    probability: bool,
}

impl<T: Real> DiscreteMeasure<T> {
    /// Builds a measure; nodes must be sorted and weights nonnegative.
    pub fn new(nodes: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return domain(format!("{} nodes but {} weights", nodes.len(), weights.len()));
        }
        if nodes.windows(2).any(|w| !(w[0] <= w[1])) {
            return domain("measure nodes must be sorted");
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return domain("measure weights must be finite and nonnegative");
        }
        let total_mass = weights.iter().copied().sum();
        Ok(Self {
            nodes,
            weights,
            total_mass,
            probability: false,
        })
    }

    /// Tags the measure as a probability measure after checking its mass.
    pub fn into_probability(mut self) -> Result<Self> {
        let tol = T::rel_tol(1e-12) * T::from_usize_lossy(self.len().max(1)).sqrt();
        if (self.total_mass - T::one()).abs() > tol {
            return domain(format!("total mass {} is not 1", self.total_mass));
        }
        self.probability = true;
        Ok(self)
    }

    /// Equal weights `1/n` at the half-offset nodes `a + (i + 1/2)(b - a)/n`.
    pub fn midpoint(a: T, b: T, n: usize) -> Self {
        let h = (b - a) / T::from_usize_lossy(n);
        let nodes = (0..n)
            .map(|i| a + h * (T::from_usize_lossy(i) + T::lit(0.5)))
            .collect();
        let w = T::one() / T::from_usize_lossy(n);
        Self {
            nodes,
            weights: vec![w; n],
            total_mass: T::one(),
            probability: true,
        }
    }

    /// Trapezoidal probability weights on `n >= 2` uniform nodes including endpoints.
    pub fn trapezoid(a: T, b: T, n: usize) -> Self {
        assert!(n >= 2, "trapezoid rule needs two nodes");
        let m = T::from_usize_lossy(n - 1);
        let h = (b - a) / m;
        let nodes = (0..n).map(|i| a + h * T::from_usize_lossy(i)).collect();
        let w = T::one() / m;
        let mut weights = vec![w; n];
        weights[0] = w * T::lit(0.5);
        weights[n - 1] = w * T::lit(0.5);
        Self {
            nodes,
            weights,
            total_mass: T::one(),
            probability: true,
        }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }
    pub fn weights(&self) -> &[T] {
        &self.weights
    }
    pub fn total_mass(&self) -> T {
        self.total_mass
    }
    pub fn is_probability(&self) -> bool {
        self.probability
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// CSV with header `node,weight` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node,weight\n");
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let _ = writeln!(s, "{:.16e},{:.16e}", x.as_f64(), w.as_f64());
        }
        s
    }
}

/// Σ f(node_i) weight_i.
pub fn integrate<T: Real>(f: &[T], mu: &DiscreteMeasure<T>) -> Result<T> {
    if f.len() != mu.len() {
        return domain(format!("function has {} samples, measure {} nodes", f.len(), mu.len()));
    }
    Ok(f.iter().zip(&mu.weights).map(|(a, b)| *a * *b).sum())
}

/// Image of `mu` under a strictly monotone map sampled at its nodes.
pub fn pushforward<T: Real>(mu: &DiscreteMeasure<T>, map: &[T]) -> Result<DiscreteMeasure<T>> {
    if map.len() != mu.len() {
        return domain(format!("map has {} samples, measure {} nodes", map.len(), mu.len()));
    }
    let increasing = map.windows(2).all(|w| w[0] < w[1]);
    let decreasing = map.windows(2).all(|w| w[0] > w[1]);
    if !increasing && !decreasing {
        return domain("pushforward map is not strictly monotone on the nodes");
    }
    let (mut nodes, mut weights) = (map.to_vec(), mu.weights.clone());
    if decreasing && !increasing {
        nodes.reverse();
        weights.reverse();
    }
    Ok(DiscreteMeasure {
        nodes,
        weights,
        total_mass: mu.total_mass,
        probability: mu.probability,
    })
}
