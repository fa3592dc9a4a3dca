use crate::distance::Scored;
use crate::error::{Error, Result};

/// A dense vector with one numeric attribute and a stable id.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedVector {
    pub id: u32,
    pub values: Vec<f32>,
    pub attribute: f64,
}

impl AttributedVector {
    pub fn new(id: u32, values: Vec<f32>, attribute: f64) -> Self {
        AttributedVector {
            id,
            values,
            attribute,
        }
    }
}

/// Column-oriented store of attributed vectors. Ids are positions, so they
/// are dense and contiguous from 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    dim: usize,
    values: Vec<f32>,
    attributes: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector dimension must be at least 1"));
        }
        Ok(Dataset {
            dim,
            values: Vec::new(),
            attributes: Vec::new(),
        })
    }

    /// Pairs a flat row-major vector buffer with one attribute per row.
    pub fn from_parts(dim: usize, values: Vec<f32>, attributes: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector dimension must be at least 1"));
        }
        if values.len() % dim != 0 {
            return Err(Error::Ingestion(format!(
                "vector buffer of {} floats is not a multiple of dimension {dim}",
                values.len()
            )));
        }
        let rows = values.len() / dim;
        if rows != attributes.len() {
            return Err(Error::Ingestion(format!(
                "{rows} vectors but {} attributes",
                attributes.len()
            )));
        }
        check_attributes(&attributes)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ingestion("vector component is not finite".into()));
        }
        Ok(Dataset {
            dim,
            values,
            attributes,
        })
    }

    /// Appends one object and returns its id.
    pub fn push(&mut self, values: &[f32], attribute: f64) -> Result<u32> {
        if values.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: values.len(),
            });
        }
        if !attribute.is_finite() {
            return Err(Error::Ingestion(format!("attribute {attribute} is not finite")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Ingestion("vector component is not finite".into()));
        }
        let id = u32::try_from(self.attributes.len())
            .ok()
            .filter(|&id| id != u32::MAX)
            .ok_or_else(|| Error::invalid("dataset is full"))?;
        self.values.extend_from_slice(values);
        self.attributes.push(attribute);
        Ok(id)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    #[inline]
    pub fn vector(&self, id: u32) -> &[f32] {
        let start = id as usize * self.dim;
        &self.values[start..start + self.dim]
    }

    #[inline]
    pub fn attribute(&self, id: u32) -> f64 {
        self.attributes[id as usize]
    }

    pub fn attributes(&self) -> &[f64] {
        &self.attributes
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn get(&self, id: u32) -> Option<AttributedVector> {
        ((id as usize) < self.len())
            .then(|| AttributedVector::new(id, self.vector(id).to_vec(), self.attribute(id)))
    }

    pub fn iter(&self) -> impl Iterator<Item = AttributedVector> + '_ {
        (0..self.len() as u32).map(|id| AttributedVector::new(id, self.vector(id).to_vec(), self.attribute(id)))
    }

    /// Copies the rows `range` into a new dataset (ids are renumbered from 0).
    pub fn slice(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            dim: self.dim,
            values: self.values[range.start * self.dim..range.end * self.dim].to_vec(),
            attributes: self.attributes[range].to_vec(),
        }
    }
}

pub(crate) fn check_attributes(attributes: &[f64]) -> Result<()> {
    if let Some((i, a)) = attributes.iter().enumerate().find(|(_, a)| !a.is_finite()) {
        return Err(Error::Ingestion(format!("attribute #{i} ({a}) is not finite")));
    }
    Ok(())
}

/// A k-nearest-neighbor query restricted to attributes in `[low, high]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeQuery {
    pub vector: Vec<f32>,
    pub low: f64,
    pub high: f64,
    pub k: usize,
}

impl RangeQuery {
    pub fn new(vector: Vec<f32>, low: f64, high: f64, k: usize) -> Result<Self> {
        if low.is_nan() || high.is_nan() {
            return Err(Error::invalid("range bounds must not be NaN"));
        }
        if low > high {
            return Err(Error::invalid(format!("empty range: low {low} > high {high}")));
        }
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if vector.is_empty() {
            return Err(Error::invalid("query vector is empty"));
        }
        Ok(RangeQuery {
            vector,
            low,
            high,
            k,
        })
    }

    /// A query whose range admits every finite attribute.
    pub fn unbounded(vector: Vec<f32>, k: usize) -> Result<Self> {
        Self::new(vector, f64::NEG_INFINITY, f64::INFINITY, k)
    }

    #[inline]
    pub fn contains(&self, attribute: f64) -> bool {
        self.low <= attribute && attribute <= self.high
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.vector.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: u32,
    pub distance: f64,
}

/// Ranked answers: ascending distance, ties by ascending id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    entries: Vec<Neighbor>,
}

impl ResultSet {
    pub fn empty() -> Self {
        ResultSet::default()
    }

    /// Sorts squared-distance candidates, keeps the best `k` and converts to
    /// true Euclidean distances.
    pub(crate) fn from_scored(mut scored: Vec<Scored>, k: usize) -> Self {
        scored.sort_unstable();
        scored.truncate(k);
        ResultSet {
            entries: scored
                .into_iter()
                .map(|s| Neighbor {
                    id: s.id,
                    distance: (s.dist as f64).sqrt(),
                })
                .collect(),
        }
    }

    /// Wraps already ranked neighbors (e.g. read back from a ground-truth
    /// file). Fails if they are not in ascending distance order.
    pub fn from_neighbors(entries: Vec<Neighbor>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].distance > w[1].distance) {
            return Err(Error::invalid("neighbors are not sorted by distance"));
        }
        Ok(ResultSet { entries })
    }

    pub fn entries(&self) -> &[Neighbor] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<u32> {
        self.entries.iter().map(|n| n.id).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Neighbor> {
        self.entries.iter()
    }
}

impl<'a> IntoIterator for &'a ResultSet {
    type Item = &'a Neighbor;
    type IntoIter = std::slice::Iter<'a, Neighbor>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverted_range_is_rejected() {
        assert!(RangeQuery::new(vec![0.0], 2.0, 1.0, 1).is_err());
        assert!(RangeQuery::new(vec![0.0], 1.0, 1.0, 1).is_ok());
    }

    #[test]
    fn zero_k_is_rejected() {
        assert!(RangeQuery::new(vec![0.0], 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn non_finite_attribute_is_rejected() {
        let mut ds = Dataset::new(2).unwrap();
        assert!(ds.push(&[0.0, 1.0], f64::NAN).is_err());
        assert!(ds.push(&[0.0, 1.0], f64::INFINITY).is_err());
        assert_eq!(ds.push(&[0.0, 1.0], 3.0).unwrap(), 0);
        assert!(ds.push(&[0.0], 3.0).is_err());
    }

    #[test]
    fn from_parts_checks_counts() {
        let err = Dataset::from_parts(2, vec![0.0; 6], vec![1.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("3 vectors but 2 attributes"));
    }

    #[test]
    fn result_set_orders_ties_by_id() {
        let rs = ResultSet::from_scored(
            vec![Scored::new(9, 4.0), Scored::new(2, 1.0), Scored::new(1, 4.0)],
            3,
        );
        assert_eq!(rs.ids(), vec![2, 1, 9]);
        assert_eq!(rs.entries()[1].distance, 2.0);
    }
}
