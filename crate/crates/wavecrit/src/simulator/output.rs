use std::io::{self, Read, Write};

use super::SnapshotRow;
use crate::scalar::Real;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"WCRT";
pub const SNAPSHOT_VERSION: u32 = 1;

/// `t,value` lines with a header.
pub fn write_probe_csv<F: Real, W: Write>(mut w: W, samples: &[(F, F)]) -> io::Result<()> {
    writeln!(w, "t,value")?;
    for (t, v) in samples {
        writeln!(w, "{:e},{:e}", t.f64(), v.f64())?;
    }
    Ok(())
}

/// Little-endian layout: magic, version (u32), field count (u32), h (f64),
/// row count (u64); then per row `u`, point count `m` and `m` records
/// `v, ψ_1 .. ψ_F`, all as f64.
pub fn write_snapshot<F: Real, W: Write>(mut w: W, h: F, fields: usize, rows: &[SnapshotRow<F>]) -> io::Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(fields as u32).to_le_bytes())?;
    w.write_all(&h.f64().to_le_bytes())?;
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    for row in rows {
        w.write_all(&row.u.f64().to_le_bytes())?;
        w.write_all(&(row.v.len() as f64).to_le_bytes())?;
        for (k, v) in row.v.iter().enumerate() {
            w.write_all(&v.f64().to_le_bytes())?;
            for f in 0..fields {
                w.write_all(&row.psi[f][k].f64().to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Inverse of [`write_snapshot`]: `(h, fields, rows)`.
pub fn read_snapshot<R: Read>(mut r: R) -> io::Result<(f64, usize, Vec<SnapshotRow<f64>>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(bad("not a snapshot file"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != SNAPSHOT_VERSION {
        return Err(bad("unsupported snapshot version"));
    }
    r.read_exact(&mut b4)?;
    let fields = u32::from_le_bytes(b4) as usize;
    let h = read_f64(&mut r)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let nrows = u64::from_le_bytes(b8) as usize;
    let mut rows = Vec::with_capacity(nrows);
    for _ in 0..nrows {
        let u = read_f64(&mut r)?;
        let m = read_f64(&mut r)? as usize;
        let mut v = Vec::with_capacity(m);
        let mut psi = vec![Vec::with_capacity(m); fields];
        for _ in 0..m {
            v.push(read_f64(&mut r)?);
            for col in psi.iter_mut() {
                col.push(read_f64(&mut r)?);
            }
        }
        rows.push(SnapshotRow { u, v, psi });
    }
    Ok((h, fields, rows))
}
