//! Equi-depth attribute segmentation.
//!
//! Segment ids are 0-based here: segment `i` covers `[cut[i-1], cut[i])` with
//! `cut[-1] = -inf` and `cut[S-1] = +inf`, so every real attribute falls into
//! exactly one segment.

use std::ops::RangeInclusive;

use log::info;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentBoundaries {
    cuts: Vec<f64>,
}

impl SegmentBoundaries {
    /// A single segment covering the whole real line.
    pub fn single() -> Self {
        SegmentBoundaries { cuts: Vec::new() }
    }

    /// Boundaries from explicit cut points, which must be finite and strictly
    /// increasing.
    pub fn from_cuts(cuts: Vec<f64>) -> Result<Self> {
        if cuts.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("segment cuts must be finite"));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("segment cuts must be strictly increasing"));
        }
        Ok(SegmentBoundaries { cuts })
    }

    /// Equi-depth boundaries: the i-th cut is the `⌊i·|sample|/S⌋`-th order
    /// statistic of the sorted sample.
    ///
    /// When duplicates make a cut coincide with the previous one (or with the
    /// sample minimum), it moves to the midpoint between the previous distinct
    /// value and the next one. Cuts that cannot be placed are dropped, so the
    /// resulting segment count may be smaller than `segments`.
    pub fn build(sample: &[f64], segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::invalid("segment count must be at least 1"));
        }
        if sample.len() < segments {
            return Err(Error::invalid(format!(
                "sample of {} values cannot fill {segments} segments",
                sample.len()
            )));
        }
        crate::dataset::check_attributes(sample)?;

        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut distinct = sorted.clone();
        distinct.dedup();

        let mut cuts = Vec::with_capacity(segments - 1);
        // Index into `distinct` of the last split; a split at t separates
        // distinct[t-1] from distinct[t].
        let mut last_split = 0usize;
        for i in 1..segments {
            let value = sorted[i * sorted.len() / segments];
            let rank = distinct.partition_point(|&d| d < value);
            if rank > last_split {
                cuts.push(value);
                last_split = rank;
            } else if last_split + 1 < distinct.len() {
                last_split += 1;
                cuts.push(0.5 * (distinct[last_split - 1] + distinct[last_split]));
            }
        }
        if cuts.len() + 1 < segments {
            info!(
                "segment count reduced from {segments} to {} ({} distinct attribute values)",
                cuts.len() + 1,
                distinct.len()
            );
        }
        Ok(SegmentBoundaries { cuts })
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Number of segments S.
    pub fn len(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Segment containing `attribute` (binary search, right-open intervals).
    #[inline]
    pub fn segment_of(&self, attribute: f64) -> usize {
        self.cuts.partition_point(|&c| c <= attribute)
    }

    /// Contiguous run of segments that overlap `[low, high]`.
    pub fn intersecting(&self, low: f64, high: f64) -> RangeInclusive<usize> {
        debug_assert!(low <= high);
        self.segment_of(low)..=self.segment_of(high)
    }

    /// Attribute interval `[start, end)` of a segment.
    pub fn interval(&self, segment: usize) -> (f64, f64) {
        let start = if segment == 0 { f64::NEG_INFINITY } else { self.cuts[segment - 1] };
        let end = self.cuts.get(segment).copied().unwrap_or(f64::INFINITY);
        (start, end)
    }
}
