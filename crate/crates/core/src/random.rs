//! Deterministic random test potentials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{softplus, Real};
use crate::toric::{Model, SymplecticPotential};

/// Shape controls for [`random_potential`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roughness {
    /// Overall scale of the perturbation.
    pub amplitude: f64,
    /// Number of softplus ridges.
    pub bumps: usize,
    /// Ridge widths are drawn from `[min_width, max_width]` (fractions of L).
    pub min_width: f64,
    pub max_width: f64,
    /// Symmetrize under `y ↦ L - y`.
    pub symmetric: bool,
}

impl Default for Roughness {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            bumps: 4,
            min_width: 0.03,
            max_width: 0.3,
            symmetric: false,
        }
    }
}

/// Generator for the `index`-th trial of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Reference dual potential plus a bounded sum of softplus ridges, a linear
/// tilt and a constant, convexified to a valid symplectic potential.
pub fn random_potential<T: Real>(model: &Model<T>, rng: &mut impl Rng, r: &Roughness) -> SymplecticPotential<T> {
    let len = model.len().as_f64();
    let mut terms = Vec::with_capacity(r.bumps);
    for _ in 0..r.bumps {
        let a: f64 = rng.gen_range(-1.0..=1.0);
        let c: f64 = rng.gen_range(0.0..=len);
        let s: f64 = rng.gen_range(r.min_width..=r.max_width.max(r.min_width)) * len;
        terms.push((a, c, s));
    }
    let tilt: f64 = rng.gen_range(-1.0..=1.0);
    let shift: f64 = rng.gen_range(-1.0..=1.0);
    if r.amplitude == 0.0 {
        return SymplecticPotential::zero(model);
    }
    let amp = r.amplitude;
    let w = model
        .nodes()
        .iter()
        .map(|y| {
            let y = y.as_f64();
            let mut v = shift + tilt * (y - 0.5 * len);
            for &(a, c, s) in &terms {
                v += a * s * softplus((y - c) / s);
            }
            T::lit(amp * v)
        })
        .collect();
    let mut u = SymplecticPotential::raw(model, w);
    if r.symmetric {
        u = u.symmetrized();
    }
    u.convexified()
}
