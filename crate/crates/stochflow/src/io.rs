//! File formats. Every writer goes through [`write_atomic`], so a failed or
//! interrupted run never replaces a finished artifact.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context as _, Result};
use sha2::{Digest, Sha256};
use stochflow_core::field::{KLBasis, StructuredGrid};

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("staging {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// Binary layout shared by the cache files: magic, little-endian payload,
// SHA-256 of everything before it.

struct Encoder(Vec<u8>);

impl Encoder {
    fn new(magic: &[u8; 4]) -> Self {
        Encoder(magic.to_vec())
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for &x in v {
            self.f64(x);
        }
    }

    fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.0);
        self.0.extend_from_slice(&digest);
        self.0
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        ensure!(bytes.len() >= 36, "file truncated");
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        ensure!(Sha256::digest(body).as_slice() == digest, "checksum mismatch");
        ensure!(&body[..4] == magic, "bad magic, expected {:?}", String::from_utf8_lossy(magic));
        Ok(Decoder { buf: body, pos: 4 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        ensure!(self.pos + n <= self.buf.len(), "file truncated");
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into()?))
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        ensure!(n <= (self.buf.len() - self.pos) / 8, "file truncated");
        (0..n).map(|_| self.f64()).collect()
    }

    fn done(&self) -> Result<()> {
        ensure!(self.pos == self.buf.len(), "trailing bytes");
        Ok(())
    }
}

const KLB_MAGIC: &[u8; 4] = b"KLB1";
const VEC_MAGIC: &[u8; 4] = b"VEC1";

/// Serialises a KL basis (`.klb`).
pub fn encode_klb(klb: &KLBasis) -> Vec<u8> {
    let g = klb.grid();
    let mut e = Encoder::new(KLB_MAGIC);
    e.u64(g.nx() as u64);
    e.u64(g.ny() as u64);
    e.f64(g.lx());
    e.f64(g.ly());
    e.f64(klb.total_trace());
    e.f64s(klb.eigenvalues());
    e.f64s(klb.eigenfunctions());
    e.f64s(klb.mean_field());
    e.finish()
}

pub fn decode_klb(bytes: &[u8]) -> Result<KLBasis> {
    let mut d = Decoder::new(bytes, KLB_MAGIC)?;
    let (nx, ny) = (d.u64()? as usize, d.u64()? as usize);
    let (lx, ly) = (d.f64()?, d.f64()?);
    let trace = d.f64()?;
    let grid = StructuredGrid::new(nx, ny, lx, ly)?;
    let klb = KLBasis::from_parts(grid, d.f64s()?, d.f64s()?, d.f64s()?, trace)?;
    d.done()?;
    Ok(klb)
}

pub fn write_klb(path: &Path, klb: &KLBasis) -> Result<()> {
    write_atomic(path, &encode_klb(klb))
}

pub fn read_klb(path: &Path) -> Result<KLBasis> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_klb(&bytes).with_context(|| format!("decoding {}", path.display()))
}

/// A checksummed vector of floats.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut e = Encoder::new(VEC_MAGIC);
    e.f64s(v);
    write_atomic(path, &e.finish())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut d = Decoder::new(&bytes, VEC_MAGIC).with_context(|| format!("decoding {}", path.display()))?;
    let v = d.f64s()?;
    d.done()?;
    Ok(v)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

/// Writes any table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// `pvi,value` series.
pub fn write_series(path: &Path, times: &[f64], values: &[f64]) -> Result<()> {
    ensure!(times.len() == values.len(), "series length mismatch");
    write_table(
        path,
        &["pvi", "value"],
        times.iter().zip(values).map(|(t, v)| vec![t.to_string(), v.to_string()]),
    )
}

pub fn read_series(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    ensure!(r.headers()? == vec!["pvi", "value"], "{}: expected header pvi,value", path.display());
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        t.push(rec[0].parse()?);
        v.push(rec[1].parse()?);
    }
    Ok((t, v))
}

/// Cell field as a header `nx,ny`, the sizes, then `ny` rows of `nx`
/// values starting at the bottom row.
pub fn write_field(path: &Path, grid: &StructuredGrid, values: &[f64]) -> Result<()> {
    ensure!(values.len() == grid.num_cells(), "field length mismatch");
    let rows = std::iter::once(vec![grid.nx().to_string(), grid.ny().to_string()])
        .chain(values.chunks(grid.nx()).map(|r| r.iter().map(f64::to_string).collect()));
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    w.write_record(["nx", "ny"])?;
    for r in rows {
        w.write_record(&r)?;
    }
    write_atomic(path, &w.into_inner()?)
}

pub fn read_field(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    ensure!(r.headers()? == vec!["nx", "ny"], "{}: expected header nx,ny", path.display());
    let mut recs = r.records();
    let Some(sizes) = recs.next() else { bail!("{}: missing sizes", path.display()) };
    let sizes = sizes?;
    let (nx, ny): (usize, usize) = (sizes[0].parse()?, sizes[1].parse()?);
    let mut values = Vec::with_capacity(nx * ny);
    for rec in recs {
        let rec = rec?;
        ensure!(rec.len() == nx, "{}: row of {} values, expected {nx}", path.display(), rec.len());
        for x in rec.iter() {
            values.push(x.parse()?);
        }
    }
    ensure!(values.len() == nx * ny, "{}: {} values, expected {}", path.display(), values.len(), nx * ny);
    Ok((nx, ny, values))
}

/// Legacy VTK structured points with one cell scalar per named field.
pub fn write_vtk(path: &Path, grid: &StructuredGrid, fields: &[(&str, &[f64])]) -> Result<()> {
    use std::fmt::Write as _;
    let mut s = String::new();
    writeln!(s, "# vtk DataFile Version 3.0")?;
    writeln!(s, "stochflow")?;
    writeln!(s, "ASCII")?;
    writeln!(s, "DATASET STRUCTURED_POINTS")?;
    writeln!(s, "DIMENSIONS {} {} 1", grid.nx() + 1, grid.ny() + 1)?;
    writeln!(s, "ORIGIN 0 0 0")?;
    writeln!(s, "SPACING {} {} 1", grid.hx(), grid.hy())?;
    writeln!(s, "CELL_DATA {}", grid.num_cells())?;
    for (name, values) in fields {
        ensure!(values.len() == grid.num_cells(), "field {name}: length mismatch");
        writeln!(s, "SCALARS {name} double 1")?;
        writeln!(s, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(s, "{v}")?;
        }
    }
    write_atomic(path, s.as_bytes())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}
