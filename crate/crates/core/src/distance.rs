use std::cmp::Ordering;

use crate::error::{Error, Result};

const LANES: usize = 8;

/// Squared Euclidean distance.
///
/// Every ordering decision in the crate (heaps, pruning, the brute-force
/// oracle) goes through this one kernel so that exact and approximate paths
/// agree bit for bit on ties.
#[inline]
pub fn squared_l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for lane in 0..LANES {
            let d = x[lane] - y[lane];
            acc[lane] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    let head = (acc[0] + acc[4]) + (acc[1] + acc[5]) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    head + tail
}

/// Euclidean distance between two vectors of equal dimension.
pub fn distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok((squared_l2(a, b) as f64).sqrt())
}

/// A node id paired with its squared distance to some reference point.
///
/// Ordered by distance, then by id, so every heap and sort in the crate is
/// deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub dist: f32,
    pub id: u32,
}

impl Scored {
    #[inline]
    pub fn new(id: u32, dist: f32) -> Self {
        Scored { dist, id }
    }
}

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.id.cmp(&other.id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(a: &[f32], b: &[f32]) -> f64 {
        let mut sum = 0.0f64;
        for i in 0..a.len() {
            let d = a[i] as f64 - b[i] as f64;
            sum += d * d;
        }
        sum.sqrt()
    }

    #[test]
    fn identity_is_zero() {
        let x = [0.3f32, -1.5, 2.25, 7.0, 0.0];
        assert_eq!(distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn pythagorean_triple() {
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let err = distance(&[1.0, 2.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let d = rng.random_range(1..=128);
            let a: Vec<f32> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f32> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            let got = distance(&a, &b).unwrap();
            let want = naive(&a, &b);
            assert!((got - want).abs() <= 1e-6 * want.max(1e-12), "d={d} got={got} want={want}");
        }
    }

    #[test]
    fn scored_orders_by_distance_then_id() {
        let mut v = vec![Scored::new(3, 1.0), Scored::new(1, 1.0), Scored::new(2, 0.5)];
        v.sort();
        assert_eq!(v.iter().map(|s| s.id).collect::<Vec<_>>(), vec![2, 1, 3]);
    }
}
