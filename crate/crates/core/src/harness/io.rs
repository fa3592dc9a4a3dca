//! File formats: fvecs vectors, attribute lists, workloads and cached
//! ground truth.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;

use crate::dataset::{Dataset, Neighbor, RangeQuery, ResultSet};
use crate::error::{Error, FormatError, Result};

use super::synth::Workload;

/// Reads `[i32 d][d x f32]` records; returns the shared dimension (0 for an
/// empty file) and the flattened values.
pub fn read_fvecs(path: impl AsRef<Path>) -> Result<(usize, Vec<f32>)> {
    let mut bytes = Vec::new();
    File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    parse_fvecs(&bytes, path.as_ref())
}

fn parse_fvecs(bytes: &[u8], path: &Path) -> Result<(usize, Vec<f32>)> {
    if bytes.is_empty() {
        warn!("{} is empty", path.display());
        return Ok((0, Vec::new()));
    }
    let mut dim = None;
    let mut values = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let head = bytes
            .get(pos..pos + 4)
            .ok_or(Error::format(pos as u64, FormatError::Truncated))?;
        let d = i32::from_le_bytes(head.try_into().expect("4 bytes"));
        if d <= 0 {
            return Err(Error::format(pos as u64, FormatError::Invalid(format!("dimension {d}"))));
        }
        let d = d as usize;
        if *dim.get_or_insert(d) != d {
            return Err(Error::format(
                pos as u64,
                FormatError::Invalid(format!("dimension {d} differs from {}", dim.unwrap())),
            ));
        }
        let body = bytes
            .get(pos + 4..pos + 4 + 4 * d)
            .ok_or(Error::format(pos as u64, FormatError::Truncated))?;
        values.extend(body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))));
        pos += 4 + 4 * d;
    }
    Ok((dim.unwrap_or(0), values))
}

pub fn write_fvecs(path: impl AsRef<Path>, dim: usize, values: &[f32]) -> Result<()> {
    if dim == 0 || values.len() % dim != 0 {
        return Err(Error::invalid("values do not split into vectors of the given dimension"));
    }
    let mut w = BufWriter::new(File::create(path)?);
    for v in values.chunks_exact(dim) {
        w.write_all(&(dim as i32).to_le_bytes())?;
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn is_binary(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("f64" | "bin"))
}

/// One attribute per line, or packed little-endian f64 when the extension is
/// `.f64` or `.bin`.
pub fn read_attributes(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let values: Vec<f64> = if is_binary(path) {
        let bytes = fs::read(path)?;
        if bytes.len() % 8 != 0 {
            return Err(Error::format((bytes.len() / 8 * 8) as u64, FormatError::Truncated));
        }
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    } else {
        let mut out = Vec::new();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            out.push(
                t.parse()
                    .map_err(|_| Error::Ingestion(format!("line {}: {t:?} is not a number", i + 1)))?,
            );
        }
        out
    };
    crate::dataset::check_attributes(&values)?;
    Ok(values)
}

pub fn write_attributes(path: impl AsRef<Path>, attributes: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    for a in attributes {
        if is_binary(path) {
            w.write_all(&a.to_le_bytes())?;
        } else {
            writeln!(w, "{a}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pairs an fvecs file with an attribute file.
pub fn load_dataset(vectors: impl AsRef<Path>, attributes: impl AsRef<Path>) -> Result<Dataset> {
    let (dim, values) = read_fvecs(vectors)?;
    let attrs = read_attributes(attributes)?;
    let count = if dim == 0 { 0 } else { values.len() / dim };
    if count != attrs.len() {
        return Err(Error::Ingestion(format!("{count} vectors but {} attributes", attrs.len())));
    }
    if dim == 0 {
        return Err(Error::Ingestion("dataset is empty".into()));
    }
    Dataset::from_parts(dim, values, attrs)
}

pub fn save_dataset(dataset: &Dataset, vectors: impl AsRef<Path>, attributes: impl AsRef<Path>) -> Result<()> {
    write_fvecs(vectors, dataset.dim(), dataset.values())?;
    write_attributes(attributes, dataset.attributes())
}

/// Header `q_count d seed`, then one line per query: `l h k` and the `d`
/// query components.
pub fn write_workload(path: impl AsRef<Path>, workload: &Workload) -> Result<()> {
    let dim = workload.queries.first().map_or(0, |q| q.vector.len());
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {dim} {}", workload.queries.len(), workload.seed)?;
    for q in &workload.queries {
        write!(w, "{} {} {}", q.low, q.high, q.k)?;
        for x in &q.vector {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_workload(path: impl AsRef<Path>) -> Result<Workload> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let bad = |msg: String| Error::Ingestion(msg);
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("workload file is empty".into()))?.split_whitespace().collect();
    let [count, dim, seed] = header[..] else {
        return Err(bad("workload header must be `q_count d seed`".into()));
    };
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("{s:?} is not an integer")));
    let (count, dim) = (parse_usize(count)?, parse_usize(dim)?);
    let seed = seed.parse::<u64>().map_err(|_| bad(format!("{seed:?} is not a seed")))?;
    let mut queries = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 + dim {
            return Err(bad(format!("query {i}: expected {} fields, found {}", 3 + dim, f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("query {i}: {s:?} is not a number")));
        let vector = f[3..].iter().map(|s| num(s).map(|x| x as f32)).collect::<Result<Vec<f32>>>()?;
        queries.push(RangeQuery::new(vector, num(f[0])?, num(f[1])?, parse_usize(f[2])?)?);
    }
    if queries.len() != count {
        return Err(bad(format!("header announces {count} queries, file has {}", queries.len())));
    }
    Ok(Workload { seed, width: None, queries })
}

/// One line per query: `id:distance` pairs.
pub fn write_ground_truth(path: impl AsRef<Path>, answers: &[ResultSet]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in answers {
        let row: Vec<String> = r.iter().map(|n| format!("{}:{}", n.id, n.distance)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<ResultSet>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let entries = line
                .split_whitespace()
                .map(|pair| {
                    let parsed = pair
                        .split_once(':')
                        .and_then(|(id, d)| Some(Neighbor { id: id.parse().ok()?, distance: d.parse().ok()? }));
                    parsed.ok_or_else(|| Error::Ingestion(format!("ground truth line {}: bad entry {pair:?}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            ResultSet::from_neighbors(entries)
        })
        .collect()
}
