//! Seeded synthetic datasets and range-query workloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, RangeQuery};
use crate::error::{Error, Result};

/// Vectors with components uniform in `[0, 1)`, attributes uniform in
/// `[low, high]`.
pub fn gen_synthetic(n: usize, dim: usize, low: f64, high: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("n and d must be at least 1"));
    }
    if !(low <= high) || !low.is_finite() || !high.is_finite() {
        return Err(Error::invalid(format!("bad attribute interval [{low}, {high}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * dim);
    let mut attrs = Vec::with_capacity(n);
    for _ in 0..n {
        values.extend((0..dim).map(|_| rng.random::<f32>()));
        attrs.push(if low == high { low } else { rng.random_range(low..=high) });
    }
    Dataset::from_parts(dim, values, attrs)
}

/// Distribution of range widths, as fractions of the dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WidthSpec {
    Fixed(f64),
    Uniform { min: f64, max: f64 },
    LogUniform { min: f64, max: f64 },
}

impl Default for WidthSpec {
    fn default() -> Self {
        WidthSpec::LogUniform { min: 0.001, max: 1.0 }
    }
}

impl WidthSpec {
    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x <= 1.0;
        let valid = match *self {
            WidthSpec::Fixed(w) => ok(w),
            WidthSpec::Uniform { min, max } | WidthSpec::LogUniform { min, max } => ok(min) && ok(max) && min <= max,
        };
        if valid {
            Ok(())
        } else {
            Err(Error::invalid(format!("width spec {self:?} must lie in (0, 1]")))
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            WidthSpec::Fixed(w) => w,
            WidthSpec::Uniform { min, max } => rng.random_range(min..=max),
            WidthSpec::LogUniform { min, max } => rng.random_range(min.ln()..=max.ln()).exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub seed: u64,
    /// `None` when read back from a file.
    pub width: Option<WidthSpec>,
    pub queries: Vec<RangeQuery>,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }
}

/// Range queries around perturbed base vectors.
///
/// Each query takes a random base vector plus N(0, 0.05) noise, draws a width
/// fraction `w` and covers `round(w * n)` (at least one) consecutive objects
/// of the attribute order, placed uniformly.
pub fn gen_workload(dataset: &Dataset, q_count: usize, k: usize, width: WidthSpec, seed: u64) -> Result<Workload> {
    if dataset.is_empty() {
        return Err(Error::invalid("cannot draw queries from an empty dataset"));
    }
    width.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0f32, 0.05).expect("valid normal");
    let mut sorted = dataset.attributes().to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut queries = Vec::with_capacity(q_count);
    for _ in 0..q_count {
        let base = dataset.vector(rng.random_range(0..n as u32));
        let vector: Vec<f32> = base.iter().map(|&x| x + noise.sample(&mut rng)).collect();
        let count = ((width.draw(&mut rng) * n as f64).round() as usize).clamp(1, n);
        let start = rng.random_range(0..=n - count);
        queries.push(RangeQuery::new(vector, sorted[start], sorted[start + count - 1], k)?);
    }
    Ok(Workload { seed, width: Some(width), queries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::SegmentBoundaries;

    fn count_in(data: &Dataset, q: &RangeQuery) -> usize {
        data.attributes().iter().filter(|&&a| q.contains(a)).count()
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(gen_synthetic(50, 4, 0.0, 10.0, 1).unwrap(), gen_synthetic(50, 4, 0.0, 10.0, 1).unwrap());
        assert_ne!(gen_synthetic(50, 4, 0.0, 10.0, 1).unwrap(), gen_synthetic(50, 4, 0.0, 10.0, 2).unwrap());
        let d = gen_synthetic(100, 3, 0.0, 10_000.0, 1).unwrap();
        let w1 = gen_workload(&d, 10, 5, WidthSpec::default(), 4).unwrap();
        assert_eq!(w1, gen_workload(&d, 10, 5, WidthSpec::default(), 4).unwrap());
    }

    #[test]
    fn values_stay_in_their_intervals() {
        let d = gen_synthetic(1000, 5, 10.0, 20.0, 3).unwrap();
        assert!(d.values().iter().all(|&x| (0.0..1.0).contains(&x)));
        assert!(d.attributes().iter().all(|&a| (10.0..=20.0).contains(&a)));
        assert!(gen_synthetic(0, 5, 0.0, 1.0, 0).is_err());
        assert!(gen_synthetic(5, 5, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn equi_depth_segments_are_balanced() {
        let d = gen_synthetic(10_000, 16, 0.0, 10_000.0, 42).unwrap();
        let b = SegmentBoundaries::build(d.attributes(), 8).unwrap();
        let mut sizes = [0usize; 8];
        for &a in d.attributes() {
            sizes[b.segment_of(a)] += 1;
        }
        for s in sizes {
            assert!((s as f64 - 1250.0).abs() <= 0.05 * 1250.0, "{sizes:?}");
        }
    }

    #[test]
    fn full_width_covers_everything() {
        let d = gen_synthetic(500, 3, 0.0, 100.0, 5).unwrap();
        let w = gen_workload(&d, 20, 10, WidthSpec::Fixed(1.0), 6).unwrap();
        assert!(w.queries.iter().all(|q| count_in(&d, q) == 500));
    }

    #[test]
    fn quarter_width_cardinalities() {
        let d = gen_synthetic(10_000, 4, 0.0, 10_000.0, 7).unwrap();
        let w = gen_workload(&d, 50, 10, WidthSpec::Fixed(0.25), 8).unwrap();
        for q in &w.queries {
            assert!((2375..=2625).contains(&count_in(&d, q)));
            assert_eq!(q.vector.len(), 4);
            assert!(q.low <= q.high);
        }
    }

    #[test]
    fn log_uniform_widths_span_the_range() {
        let d = gen_synthetic(10_000, 2, 0.0, 1.0, 9).unwrap();
        let w = gen_workload(&d, 400, 10, WidthSpec::default(), 10).unwrap();
        let fracs: Vec<f64> = w.queries.iter().map(|q| count_in(&d, q) as f64 / 10_000.0).collect();
        assert!(fracs.iter().all(|&f| (0.0009..=1.0).contains(&f)));
        let small = fracs.iter().filter(|&&f| f < 0.01).count();
        let large = fracs.iter().filter(|&&f| f > 0.1).count();
        // A third of the log-width mass lies in each decade.
        assert!((90..=180).contains(&small), "{small}");
        assert!((90..=180).contains(&large), "{large}");
        assert!(gen_workload(&d, 1, 1, WidthSpec::Fixed(0.0), 0).is_err());
    }
}
