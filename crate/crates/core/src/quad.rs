//! Fixed-level tanh-sinh quadrature on finite intervals.

use crate::scalar::Real;

/// Precomputed double-exponential rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct TanhSinh<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> TanhSinh<T> {
    /// Rule with step `h` in the transformed variable, truncated where the
    /// weights drop below machine underflow of the abscissa.
    pub fn new(h: f64) -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let mut k = 0i64;
        loop {
            let t = k as f64 * h;
            let u = half_pi * t.sinh();
            let x = u.tanh();
            let w = h * half_pi * t.cosh() / (u.cosh() * u.cosh());
            if 1.0 - x <= 0.0 || w < 1e-300 {
                break;
            }
            if k == 0 {
                nodes.push(T::lit(0.0));
                weights.push(T::lit(w));
            } else {
                nodes.push(T::lit(x));
                weights.push(T::lit(w));
                nodes.push(T::lit(-x));
                weights.push(T::lit(w));
            }
            k += 1;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        if b <= a {
            return T::zero();
        }
        let c = (a + b) * T::lit(0.5);
        let r = (b - a) * T::lit(0.5);
        let mut s = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s = s + *w * f(c + r * *x);
        }
        s * r
    }

    /// Integral over `[a, b]`, split at `c` when it lies inside.
    pub fn integrate_split<F: FnMut(T) -> T>(&self, a: T, b: T, c: T, mut f: F) -> T {
        if c > a && c < b {
            self.integrate(a, c, &mut f) + self.integrate(c, b, &mut f)
        } else {
            self.integrate(a, b, f)
        }
    }
}

impl<T: Real> Default for TanhSinh<T> {
    fn default() -> Self {
        Self::new(1.0 / 32.0)
    }
}
