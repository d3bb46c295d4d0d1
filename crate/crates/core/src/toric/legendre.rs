//! Discrete Legendre–Fenchel transforms and lower convex hulls.

use crate::scalar::Real;

/// `f*(s_j) = max_i (s_j x_i - f_i)` for ascending `x` and `s`.
///
/// The last maximizer is nondecreasing in `s`, so the scan is organised as
/// divide and conquer over `s` with shrinking candidate ranges.
pub fn legendre<T: Real>(x: &[T], f: &[T], s: &[T]) -> Vec<T> {
    legendre_with_argmax(x, f, s).0
}

/// As [`legendre`], also returning the (last) maximizing index per slope.
pub fn legendre_with_argmax<T: Real>(x: &[T], f: &[T], s: &[T]) -> (Vec<T>, Vec<usize>) {
    assert_eq!(x.len(), f.len());
    let mut val = vec![T::neg_infinity(); s.len()];
    let mut arg = vec![0usize; s.len()];
    if x.is_empty() || s.is_empty() {
        return (val, arg);
    }
    let mut stack = vec![(0usize, s.len(), 0usize, x.len() - 1)];
    while let Some((a, b, lo, hi)) = stack.pop() {
        if a >= b {
            continue;
        }
        let m = (a + b) / 2;
        let sm = s[m];
        let mut best = T::neg_infinity();
        let mut bi = lo;
        for i in lo..=hi {
            let v = sm * x[i] - f[i];
            if v >= best {
                best = v;
                bi = i;
            }
        }
        val[m] = best;
        arg[m] = bi;
        stack.push((a, m, lo, bi));
        stack.push((m + 1, b, bi, hi));
    }
    (val, arg)
}

fn cross<T: Real>(o: (T, T), a: (T, T), b: (T, T)) -> T {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Indices of the lower convex hull vertices of `(x_i, f_i)`, `x` strictly ascending.
pub fn lower_hull<T: Real>(x: &[T], f: &[T]) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            if cross((x[a], f[a]), (x[b], f[b]), (x[i], f[i])) <= T::zero() {
                h.pop();
            } else {
                break;
            }
        }
        h.push(i);
    }
    h
}

/// The lower convex envelope of `(x_i, f_i)` evaluated at every `x_i`.
pub fn convex_envelope<T: Real>(x: &[T], f: &[T]) -> Vec<T> {
    let h = lower_hull(x, f);
    let mut out = Vec::with_capacity(x.len());
    for seg in h.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let slope = (f[b] - f[a]) / (x[b] - x[a]);
        for i in a..b {
            out.push(if i == a { f[a] } else { f[a] + slope * (x[i] - x[a]) });
        }
    }
    if let Some(&last) = h.last() {
        out.push(f[last]);
    }
    out
}
