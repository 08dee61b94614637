//! Binary layout: `dim: u32`, `n: u64`, `extent: f64`, `origin: f64`,
//! `extension: u8`, then `n^dim` samples as `f64`, all little-endian, row-major.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use super::function::GridFunction;
use super::grid::{Extension, Grid};
use crate::error::{Error, Result};

const HEADER_LEN: usize = 4 + 8 + 8 + 8 + 1;

pub fn encode(f: &GridFunction) -> Vec<u8> {
    let g = &f.grid;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * f.len());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    out.extend_from_slice(&g.extent().to_le_bytes());
    out.extend_from_slice(&g.origin().to_le_bytes());
    out.push(f.extension.code());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<GridFunction> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format("truncated header".into()));
    }
    let dim = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let extent = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let origin = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let extension = Extension::from_code(bytes[28])?;
    let grid = Grid::new(dim, extent, n, origin, extension)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            8 * grid.len()
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    GridFunction::new(grid, values)
}

pub fn write(f: &GridFunction, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode(f))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<GridFunction> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

/// Writes `<stem>.bin` and a `<stem>.json` sidecar holding `meta`.
pub fn write_with_sidecar<M: Serialize>(
    f: &GridFunction,
    dir: &Path,
    stem: &str,
    meta: &M,
) -> Result<()> {
    write(f, &dir.join(format!("{stem}.bin")))?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::centered(2, 1.5, 8, Extension::Periodic).unwrap();
        let f = GridFunction::from_fn(&g, |x| (x[0] * 3.1).sin() * x[1].exp() / 7.0).unwrap();
        let back = decode(&encode(&f)).unwrap();
        assert_eq!(back, f);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write(&f, &p).unwrap();
        assert_eq!(read(&p).unwrap(), f);
    }

    #[test]
    fn rejects_truncated_payload() {
        let g = Grid::centered(1, 1.0, 8, Extension::Zero).unwrap();
        let bytes = encode(&GridFunction::zeros(&g));
        assert!(matches!(
            decode(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode(&bytes[..10]), Err(Error::Format(_))));
    }
}
