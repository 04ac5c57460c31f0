//! `.dtn` on-disk format for DtN records: a JSON header line followed by
//! binary blocks of interleaved (re, im) little-endian 64-bit floats.
//!
//! Block order: the final state over all grid nodes; then one block per face
//! in canonical face order, each laid out time level major, face node minor.

use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::forward::{DtnRecord, ProbeMeta};
use crate::grid::Grid;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DtnHeader {
    magic: String,
    n: usize,
    nx: usize,
    nt: usize,
    t: f64,
    meta: Option<ProbeMeta>,
}

fn write_complex_block(w: &mut impl Write, block: &[Complex64]) -> Result<()> {
    for v in block {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_complex_block(r: &mut impl Read, len: usize) -> Result<Vec<Complex64>> {
    let mut buf = vec![0u8; 16 * len];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

pub fn write_dtn(path: &Path, record: &DtnRecord) -> Result<()> {
    let grid = record.grid;
    let header = DtnHeader {
        magic: "dtn".into(),
        n: grid.dim(),
        nx: grid.nx(),
        nt: grid.nt(),
        t: grid.t_horizon(),
        meta: record.meta.clone(),
    };
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut line =
        serde_json::to_string(&header).map_err(|e| CoreError::Serialization(e.to_string()))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    write_complex_block(&mut w, &record.final_state)?;
    for face_block in &record.trace {
        for level in face_block {
            write_complex_block(&mut w, level)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dtn(path: &Path) -> Result<DtnRecord> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > 1 << 16 {
            return Err(CoreError::Serialization("unterminated .dtn header".into()));
        }
    }
    let header: DtnHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| CoreError::Serialization(format!("bad .dtn header: {e}")))?;
    if header.magic != "dtn" {
        return Err(CoreError::Serialization("missing dtn magic".into()));
    }
    let grid = Grid::new(header.n, header.nx, header.nt, header.t)?;
    let final_state = read_complex_block(&mut r, grid.node_count())?;
    let face_len = grid.nodes_per_axis().pow((grid.dim() - 1) as u32);
    let mut trace = Vec::new();
    for _ in 0..(2 * grid.dim()) {
        let mut levels = Vec::with_capacity(grid.time_levels());
        for _ in 0..grid.time_levels() {
            levels.push(read_complex_block(&mut r, face_len)?);
        }
        trace.push(levels);
    }
    Ok(DtnRecord {
        grid,
        final_state,
        trace,
        meta: header.meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dtn_roundtrip_with_metadata() {
        let grid = Grid::cube(8, 16).unwrap();
        let face_len = grid.nodes_per_axis().pow(2);
        let final_state: Vec<Complex64> = (0..grid.node_count())
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let trace: Vec<Vec<Vec<Complex64>>> = (0..6)
            .map(|f| {
                (0..grid.time_levels())
                    .map(|m| {
                        (0..face_len)
                            .map(|k| Complex64::new((f * m + k) as f64, 0.25))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let record = DtnRecord {
            grid,
            final_state,
            trace,
            meta: Some(ProbeMeta {
                sigma: 8.0,
                xi: vec![0.0, 0.0, std::f64::consts::TAU],
                y: vec![0.0; 3],
                side: 2,
                sign: 1,
            }),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probe.dtn");
        write_dtn(&path, &record).unwrap();
        let back = read_dtn(&path).unwrap();
        assert_eq!(record.final_state, back.final_state);
        assert_eq!(record.trace, back.trace);
        assert_eq!(record.meta, back.meta);
    }
}
