//! Value-table persistence.
//!
//! Binary layout, little endian throughout:
//!
//! ```text
//! magic      8 bytes  "ECOVT1\0\0"
//! n_d n_v n_vf        3 × u32
//! d axis, v axis, v_f axis   (n_d + n_v + n_vf) × f64
//! discount            f64
//! iterations          u32
//! residual            f64
//! values              n_d·n_v·n_vf × f64, gap outermost, front speed innermost
//! ```

use std::io::Write;
use std::path::Path;

use super::grid::{Grid, ValueTable};
use crate::csvio;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ECOVT1\0\0";

pub fn encode(table: &ValueTable) -> Vec<u8> {
    let g = &table.grid;
    let mut out = Vec::with_capacity(8 + 12 + 8 * (g.d_axis.len() + g.v_axis.len() + g.vf_axis.len() + g.len()) + 20);
    out.extend_from_slice(MAGIC);
    for n in [g.d_axis.len(), g.v_axis.len(), g.vf_axis.len()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for x in g.d_axis.iter().chain(&g.v_axis).chain(&g.vf_axis) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&table.discount.to_le_bytes());
    out.extend_from_slice(&table.iterations.to_le_bytes());
    out.extend_from_slice(&table.residual.to_le_bytes());
    for x in &table.values {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("value table truncated at byte {} (need {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<ValueTable> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Format("not a value table (bad magic)".into()));
    }
    let (n_d, n_v, n_vf) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let n = n_d
        .checked_mul(n_v)
        .and_then(|x| x.checked_mul(n_vf))
        .filter(|&n| n > 0 && n.saturating_mul(8) <= bytes.len())
        .ok_or_else(|| Error::Format(format!("implausible table shape {n_d} × {n_v} × {n_vf}")))?;
    let grid = Grid::new(r.f64s(n_d)?, r.f64s(n_v)?, r.f64s(n_vf)?)
        .map_err(|e| Error::Format(format!("bad axes: {e}")))?;
    let discount = r.f64()?;
    let iterations = r.u32()?;
    let residual = r.f64()?;
    let values = r.f64s(n)?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after value table", bytes.len() - r.pos)));
    }
    ValueTable::new(grid, values, discount, iterations, residual).map_err(|e| Error::Format(e.to_string()))
}

impl ValueTable {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&encode(self)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
    }

    /// Long-format `d,v,vf,value` export.
    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        csvio::write_file(
            path.as_ref(),
            &["d", "v", "vf", "value"],
            (0..self.grid.len()).map(|idx| {
                let s = self.grid.state(idx);
                vec![s.d, s.v, s.v_f, self.values[idx]]
            }),
        )
    }
}
