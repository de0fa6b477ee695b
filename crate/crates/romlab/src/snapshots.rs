//! Snapshot sets and their on-disk container.
//!
//! A `SnapshotSet` bundles the snapshot matrix with the mass and stiffness
//! matrices of the discretization that produced it, so the downstream
//! POD/filter/closure pipeline runs identically on internally generated
//! Burgers data and on externally produced (e.g. 2D) data.
//!
//! On-disk layout, "ROMS" version 1, all integers and floats little-endian:
//!
//! ```text
//! magic "ROMS" (4 bytes) | version u64 | N_h u64 | M u64 | dt f64 | t0 f64
//! | nnz_mass u64 | nnz_stiff u64
//! | mass triplets (row u64, col u64, val f64) * nnz_mass
//! | stiffness triplets * nnz_stiff
//! | Y column-major f64 * (N_h * M)
//! ```

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use nalgebra::DMatrix;
use std::fs;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"ROMS";
pub const FORMAT_VERSION: u64 = 1;

/// Relative tolerance for the symmetry validation of loaded matrices.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Snapshot matrix plus the discretization matrices and time metadata.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    y: DMatrix<f64>,
    mass: SparseSym,
    stiffness: SparseSym,
    dt: f64,
    t0: f64,
    labels: Option<Vec<String>>,
}

impl SnapshotSet {
    /// Validates and bundles the fields. Requires at least two snapshots,
    /// square matrices matching the snapshot dimension, dt > 0, and symmetric
    /// mass/stiffness matrices.
    pub fn new(
        y: DMatrix<f64>,
        mass: SparseSym,
        stiffness: SparseSym,
        dt: f64,
        t0: f64,
    ) -> Result<Self> {
        if y.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "snapshot set needs at least 2 columns, got {}",
                y.ncols()
            )));
        }
        if mass.dim() != y.nrows() || stiffness.dim() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "matrices of dimension {} / {} do not match snapshot dimension {}",
                mass.dim(),
                stiffness.dim(),
                y.nrows()
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
        }
        mass.check_symmetric("mass", SYMMETRY_REL_TOL)?;
        stiffness.check_symmetric("stiffness", SYMMETRY_REL_TOL)?;
        for (j, col) in y.column_iter().enumerate() {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    step: j,
                    context: "snapshot column".into(),
                });
            }
        }
        Ok(Self {
            y,
            mass,
            stiffness,
            dt,
            t0,
            labels: None,
        })
    }

    /// Attaches per-column tags (in-memory only; the file format does not
    /// carry them).
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} snapshot columns",
                labels.len(),
                self.y.ncols()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn snapshots(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn mass(&self) -> &SparseSym {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseSym {
        &self.stiffness
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Spatial dimension N_h.
    pub fn dof_count(&self) -> usize {
        self.y.nrows()
    }

    /// Number of snapshot columns M.
    pub fn snapshot_count(&self) -> usize {
        self.y.ncols()
    }

    /// Exact size in bytes of the version-1 container for this set.
    pub fn file_size(&self) -> u64 {
        let header = 4 + 7 * 8;
        let triplets = 24 * (self.mass.nnz() + self.stiffness.nnz()) as u64;
        let dense = 8 * (self.y.nrows() * self.y.ncols()) as u64;
        header + triplets + dense
    }
}

/// Writes the set to `path` in the version-1 container.
pub fn save_snapshots(set: &SnapshotSet, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(set.y.nrows() as u64).to_le_bytes())?;
    w.write_all(&(set.y.ncols() as u64).to_le_bytes())?;
    w.write_all(&set.dt.to_le_bytes())?;
    w.write_all(&set.t0.to_le_bytes())?;
    w.write_all(&(set.mass.nnz() as u64).to_le_bytes())?;
    w.write_all(&(set.stiffness.nnz() as u64).to_le_bytes())?;
    for m in [&set.mass, &set.stiffness] {
        for (r, c, v) in m.triplets() {
            w.write_all(&(r as u64).to_le_bytes())?;
            w.write_all(&(c as u64).to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for v in set.y.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Truncated(format!(
                "file ends inside {what} (need {n} bytes at offset {})",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn index(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v)
            .map_err(|_| Error::InvalidArgument(format!("{what} = {v} does not fit in usize")))
    }
}

/// Reads and validates a set written by [`save_snapshots`].
pub fn load_snapshots(path: &Path) -> Result<SnapshotSet> {
    let buf = fs::read(path)?;
    let mut c = Cursor { buf: &buf, pos: 0 };

    if c.take(4, "magic")? != MAGIC {
        return Err(Error::BadMagic);
    }
    let version = c.u64("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    let n_h = c.index("N_h")?;
    let m = c.index("M")?;
    let dt = c.f64("dt")?;
    let t0 = c.f64("t0")?;
    let nnz_mass = c.index("nnz_mass")?;
    let nnz_stiff = c.index("nnz_stiff")?;

    // Sanity-check the payload size before allocating anything.
    let need = 24usize
        .checked_mul(nnz_mass + nnz_stiff)
        .and_then(|t| n_h.checked_mul(m).map(|d| (t, d)))
        .and_then(|(t, d)| d.checked_mul(8).map(|db| t + db))
        .ok_or_else(|| Error::InvalidArgument("payload size overflows".into()))?;
    if c.pos + need > buf.len() {
        return Err(Error::Truncated(format!(
            "payload needs {need} bytes, file has {} left",
            buf.len() - c.pos
        )));
    }

    let mut read_matrix = |nnz: usize, name: &str| -> Result<SparseSym> {
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let r = c.index("triplet row")?;
            let col = c.index("triplet col")?;
            let v = c.f64("triplet value")?;
            triplets.push((r, col, v));
        }
        let mat = SparseSym::from_triplets(n_h, &triplets)?;
        mat.check_symmetric(name, SYMMETRY_REL_TOL)?;
        Ok(mat)
    };
    let mass = read_matrix(nnz_mass, "mass")?;
    let stiffness = read_matrix(nnz_stiff, "stiffness")?;

    let mut y = DMatrix::zeros(n_h, m);
    for v in y.as_mut_slice() {
        *v = c.f64("snapshot value")?;
    }

    SnapshotSet::new(y, mass, stiffness, dt, t0)
}
