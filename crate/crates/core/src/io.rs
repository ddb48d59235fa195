//! Binary file formats for datasets and graphs. All integers and floats are
//! little-endian.
//!
//! Dataset (`ANNG`):
//!
//! ```text
//! magic "ANNG" | version u16 = 1 | flags u16 (bit 0: planted) |
//! n u64 | d u32 | n*d f32 row-major |
//! [planted_index u64 | gamma_star f64 | d f32 query]   (if flag bit 0)
//! ```
//!
//! Graph (`ANNGGRPH`): coordinates are not stored; loading a graph requires
//! the dataset it was built over.
//!
//! ```text
//! magic "ANNGGRPH" | version u16 = 1 | alpha f64 | n u64 |
//! per vertex: bucket length u32, then that many u64 neighbor indices |
//! [tombstone count u64, then that many u64 slot indices]   (only if nonzero)
//! ```
//!
//! The tombstone trailer is written only when the graph actually has deleted
//! slots, so graphs without deletions are byte-exact to the base layout; a
//! reader treats end-of-file after the buckets as "no tombstones".

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::Error;
use crate::graph::AlphaGraph;
use crate::instance::{Dataset, Planted, UnitVector};
use crate::Result;

const DATASET_MAGIC: &[u8; 4] = b"ANNG";
const GRAPH_MAGIC: &[u8; 8] = b"ANNGGRPH";
const VERSION: u16 = 1;
const FLAG_PLANTED: u16 = 1;

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

pub fn write_dataset<W: Write>(w: &mut W, ds: &Dataset) -> Result<()> {
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let flags = if ds.planted.is_some() { FLAG_PLANTED } else { 0 };
    w.write_all(&flags.to_le_bytes())?;
    w.write_all(&(ds.len() as u64).to_le_bytes())?;
    w.write_all(&(ds.dim() as u32).to_le_bytes())?;
    for &x in ds.raw_data() {
        w.write_all(&x.to_le_bytes())?;
    }
    if let Some(p) = &ds.planted {
        w.write_all(&(p.planted_index as u64).to_le_bytes())?;
        w.write_all(&p.gamma_star.to_le_bytes())?;
        for &x in p.query.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != DATASET_MAGIC {
        return Err(Error::Format("bad dataset magic".into()));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dataset version {version}")));
    }
    let flags = read_u16(r)?;
    let n = read_u64(r)? as usize;
    let d = read_u32(r)? as usize;
    if n == 0 || d == 0 {
        return Err(Error::Format(format!("degenerate dataset shape {n} x {d}")));
    }
    let total = n
        .checked_mul(d)
        .ok_or_else(|| Error::Format("dataset shape overflows".into()))?;
    let mut data = vec![0f32; total];
    for x in &mut data {
        *x = read_f32(r)?;
    }
    let planted = if flags & FLAG_PLANTED != 0 {
        let planted_index = read_u64(r)? as usize;
        let gamma_star = read_f64(r)?;
        let mut q = vec![0f32; d];
        for x in &mut q {
            *x = read_f32(r)?;
        }
        Some(Planted {
            query: UnitVector::new(q)?,
            planted_index,
            gamma_star,
        })
    } else {
        None
    };
    Dataset::from_raw(d, data, planted)
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&mut w, ds)?;
    w.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(&mut BufReader::new(File::open(path)?))
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

pub fn write_graph<W: Write>(w: &mut W, g: &AlphaGraph) -> Result<()> {
    w.write_all(GRAPH_MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&g.alpha().to_le_bytes())?;
    w.write_all(&(g.slots() as u64).to_le_bytes())?;
    for i in 0..g.slots() {
        let b = g.bucket(i);
        w.write_all(&(b.len() as u32).to_le_bytes())?;
        for &j in b {
            w.write_all(&u64::from(j).to_le_bytes())?;
        }
    }
    let tombstones: Vec<u64> = (0..g.slots())
        .filter(|&i| !g.is_live(i))
        .map(|i| i as u64)
        .collect();
    if !tombstones.is_empty() {
        w.write_all(&(tombstones.len() as u64).to_le_bytes())?;
        for t in tombstones {
            w.write_all(&t.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_graph<R: Read>(r: &mut R, dataset: &Dataset) -> Result<AlphaGraph> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != GRAPH_MAGIC {
        return Err(Error::Format("bad graph magic".into()));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported graph version {version}")));
    }
    let alpha = read_f64(r)?;
    let n = read_u64(r)? as usize;
    let mut buckets = Vec::with_capacity(n);
    for _ in 0..n {
        let len = read_u32(r)? as usize;
        let mut b = Vec::with_capacity(len);
        for _ in 0..len {
            let j = read_u64(r)?;
            let j = u32::try_from(j)
                .map_err(|_| Error::Format(format!("neighbor index {j} exceeds u32")))?;
            b.push(j);
        }
        buckets.push(b);
    }
    // optional tombstone trailer
    let mut live = vec![true; n];
    match read_u64(r) {
        Ok(count) => {
            for _ in 0..count {
                let t = read_u64(r)? as usize;
                if t >= n {
                    return Err(Error::Format(format!("tombstone index {t} out of range")));
                }
                live[t] = false;
            }
        }
        Err(Error::Io(e)) if e.kind() == ErrorKind::UnexpectedEof => {}
        Err(e) => return Err(e),
    }
    AlphaGraph::from_parts(alpha, dataset, buckets, live)
}

pub fn save_graph(path: impl AsRef<Path>, g: &AlphaGraph) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(&mut w, g)?;
    w.flush()?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>, dataset: &Dataset) -> Result<AlphaGraph> {
    read_graph(&mut BufReader::new(File::open(path)?), dataset)
}

fn truncated(e: std::io::Error) -> Error {
    Error::Io(e)
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}
