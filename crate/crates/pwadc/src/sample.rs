//! Seeded sampling helpers for the sampling-certified properties.

use ndarray::Array1;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::Polyhedron;
use crate::scalar::{cst, Scalar};

/// Deterministic RNG for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the box `[lo, hi]`.
pub fn sample_box<T: Scalar, R: Rng>(r: &mut R, lo: &Array1<T>, hi: &Array1<T>) -> Array1<T> {
    Array1::from_iter(lo.iter().zip(hi.iter()).map(|(&l, &h)| {
        let t: T = cst(r.gen::<f64>());
        l + (h - l) * t
    }))
}

/// Rejection-sample a point of `p` from its bounding box. `None` after
/// `max_tries` misses (thin or empty sets).
pub fn sample_polyhedron<T: Scalar, R: Rng>(
    r: &mut R,
    p: &Polyhedron<T>,
    tol: T,
    max_tries: usize,
) -> Option<Array1<T>> {
    let (lo, hi) = p.bounding_box();
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    for _ in 0..max_tries {
        let x = sample_box(r, &lo, &hi);
        if p.contains(&x, tol) {
            return Some(x);
        }
    }
    None
}

/// `count` rejection samples from `p`, deterministic in `seed`.
pub fn sample_many<T: Scalar>(p: &Polyhedron<T>, count: usize, seed: u64, tol: T) -> Vec<Array1<T>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        if let Some(x) = sample_polyhedron(&mut r, p, tol, 1000) {
            out.push(x);
        }
    }
    out
}
