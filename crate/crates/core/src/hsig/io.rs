//! Binary index format, all integers and floats little-endian:
//!
//! ```text
//! "HSIG" version:u32 d:u32 n:u32 S:u32 M:u32 efCons:u32 m_L:f64 metric:u8
//! cuts: (S-1) x f64
//! objects: n x (d x f32, attribute:f64)
//! levels: n x u32
//! for layer in 0..=max_level, for each node with level >= layer, by id:
//!     S x u16 chunk lengths, ids:u32 for all chunks, next:u32 (u32::MAX = none),
//!     ceil(total/8) bitmap bytes, bit i of the slot list at byte i/8, bit i%8
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use bitvec::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::distance::{squared_l2, Scored};
use crate::error::{Error, FormatError, Result};
use crate::segmentation::SegmentBoundaries;
use crate::selector::CardinalityView;

use super::{Entry, HsigIndex, HsigNode, HsigParams};

const MAGIC: &[u8; 4] = b"HSIG";
const VERSION: u32 = 1;
const NONE: u32 = u32::MAX;

impl HsigIndex {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Size in bytes of the serialized index.
    pub fn serialized_size(&self) -> u64 {
        let mut counter = Counter(0);
        self.write_to(&mut counter).expect("counting never fails");
        counter.0
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let u32_of = |x: usize| u32::try_from(x).map_err(|_| Error::invalid("value does not fit in u32"));
        w.write_all(MAGIC)?;
        for v in [
            VERSION,
            u32_of(self.dim())?,
            u32_of(self.len())?,
            u32_of(self.segments())?,
            u32_of(self.params.max_degree)?,
            u32_of(self.params.ef_construction)?,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.params.level_mult.to_le_bytes())?;
        w.write_all(&[0u8])?;
        for c in self.boundaries.cuts() {
            w.write_all(&c.to_le_bytes())?;
        }
        for id in 0..self.len() as u32 {
            for x in self.store.vector(id) {
                w.write_all(&x.to_le_bytes())?;
            }
            w.write_all(&self.store.attribute(id).to_le_bytes())?;
        }
        for &l in &self.levels {
            w.write_all(&(l as u32).to_le_bytes())?;
        }
        for layer in 0..self.heads.len() {
            for node in self.nodes.iter().filter_map(|n| n.get(layer)) {
                for j in 0..node.segments() {
                    w.write_all(&(node.chunk_range(j).len() as u16).to_le_bytes())?;
                }
                for s in &node.slots {
                    w.write_all(&s.id.to_le_bytes())?;
                }
                w.write_all(&node.next.unwrap_or(NONE).to_le_bytes())?;
                let mut bytes = vec![0u8; node.slots.len().div_ceil(8)];
                for i in node.mask.iter_ones() {
                    bytes[i / 8] |= 1 << (i % 8);
                }
                w.write_all(&bytes)?;
            }
        }
        Ok(())
    }

    /// Reads an index and verifies every structural invariant.
    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader { inner: r, offset: 0 };
        let mut magic = [0u8; 4];
        r.fill(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format(0, FormatError::BadMagic));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(4, FormatError::UnsupportedVersion(version)));
        }
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        let segments = r.u32()? as usize;
        let max_degree = r.u32()? as usize;
        let ef_construction = r.u32()? as usize;
        let level_mult = r.f64()?;
        let metric = r.u8()?;
        if metric != 0 {
            return Err(r.invalid(format!("unknown metric {metric}")));
        }
        if segments == 0 {
            return Err(r.invalid("segment count is zero".into()));
        }
        let mut cuts = Vec::with_capacity(segments - 1);
        for _ in 1..segments {
            cuts.push(r.f64()?);
        }
        let boundaries = SegmentBoundaries::from_cuts(cuts).map_err(|e| r.invalid(e.to_string()))?;
        let params = HsigParams {
            segments,
            max_degree,
            ef_construction,
            level_mult,
            ..HsigParams::default()
        };
        let mut index = HsigIndex::new(dim, boundaries, params).map_err(|e| r.invalid(e.to_string()))?;

        let mut values = Vec::with_capacity(n.saturating_mul(dim).min(1 << 28));
        let mut attributes = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            for _ in 0..dim {
                values.push(r.f32()?);
            }
            attributes.push(r.f64()?);
        }
        index.store = Dataset::from_parts(dim, values, attributes).map_err(|e| r.invalid(e.to_string()))?;

        let mut levels = Vec::with_capacity(n);
        for _ in 0..n {
            let l = r.u32()?;
            if l as usize > super::MAX_LEVEL {
                return Err(r.invalid(format!("level {l} is too large")));
            }
            levels.push(l as u8);
        }
        let top = levels.iter().max().map_or(0, |&l| l as usize + 1);
        let mut nodes: Vec<Vec<HsigNode>> = levels.iter().map(|&l| Vec::with_capacity(l as usize + 1)).collect();
        for layer in 0..top {
            for id in 0..n {
                if (levels[id] as usize) < layer {
                    continue;
                }
                let mut node = HsigNode::new(segments);
                let mut total = 0usize;
                for j in 0..segments {
                    total += r.u16()? as usize;
                    if total > u16::MAX as usize {
                        return Err(r.invalid(format!("node {id} has too many slots")));
                    }
                    node.ends[j] = total as u16;
                }
                for _ in 0..total {
                    let t = r.u32()?;
                    if t as usize >= n {
                        return Err(r.invalid(format!("node {id} links to missing node {t}")));
                    }
                    let d = squared_l2(index.store.vector(id as u32), index.store.vector(t));
                    node.slots.push(Scored::new(t, d));
                }
                let next = r.u32()?;
                if next != NONE && next as usize >= n {
                    return Err(r.invalid(format!("node {id} has successor {next} out of range")));
                }
                node.next = (next != NONE).then_some(next);
                let mut bytes = vec![0u8; total.div_ceil(8)];
                r.fill(&mut bytes)?;
                let mut mask: BitVec<u8, Lsb0> = BitVec::from_vec(bytes);
                if mask[total..].any() {
                    return Err(r.invalid(format!("node {id} has bitmap padding bits set")));
                }
                mask.truncate(total);
                node.mask = mask;
                nodes[id].push(node);
            }
        }
        let end = r.offset;
        let mut trailing = [0u8; 1];
        if r.inner.read(&mut trailing)? != 0 {
            return Err(Error::format(end, FormatError::Invalid("trailing bytes".into())));
        }

        index.segment = (0..n as u32)
            .map(|id| index.boundaries.segment_of(index.store.attribute(id)) as u16)
            .collect();
        for id in 0..n as u32 {
            let seg = index.segment[id as usize] as usize;
            let level = levels[id as usize] as usize;
            match index.entries[seg] {
                Some(e) if e.level >= level => {}
                _ => index.entries[seg] = Some(Entry { id, level }),
            }
        }
        index.levels = levels;
        index.nodes = nodes;
        index.heads = (0..top)
            .map(|layer| {
                (0..n as u32)
                    .filter(|&id| index.levels[id as usize] as usize >= layer)
                    .min_by(|&a, &b| index.key_cmp(a, b))
            })
            .collect();
        index.view = CardinalityView::from_values(index.store.attributes().to_vec());
        index.rng = ChaCha8Rng::seed_from_u64(index.params.seed ^ n as u64);

        let problems = index.validate();
        if let Some(first) = problems.into_iter().next() {
            return Err(Error::format(end, FormatError::Invalid(first)));
        }
        Ok(index)
    }
}

struct Counter(u64);

impl Write for Counter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0 += buf.len() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.offset += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(Error::format(self.offset, FormatError::Truncated)),
            Err(e) => Err(e.into()),
        }
    }

    fn invalid(&self, msg: String) -> Error {
        Error::format(self.offset, FormatError::Invalid(msg))
    }

    fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b)?;
        Ok(b[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.fill(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }
}
