//! `.fld` on-disk format: one JSON header line followed by flat blocks of
//! little-endian 64-bit floats in row-major (axis 0 fastest) node order.

use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::field::{CurlField, ScalarField, ScalarSpaceTimeField, VectorField};
use crate::grid::Grid;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FldHeader {
    pub magic: String,
    pub n: usize,
    pub nx: usize,
    pub nt: usize,
    pub t: f64,
    pub kind: String,
    pub blocks: usize,
}

impl FldHeader {
    fn new(grid: &Grid, kind: &str, blocks: usize) -> Self {
        Self {
            magic: "fld".into(),
            n: grid.dim(),
            nx: grid.nx(),
            nt: grid.nt(),
            t: grid.t_horizon(),
            kind: kind.into(),
            blocks,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.nx, self.nt, self.t)
    }
}

fn write_fld(path: &Path, header: &FldHeader, blocks: &[&[f64]]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let mut line = serde_json::to_string(header)
        .map_err(|e| CoreError::Serialization(e.to_string()))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    for block in blocks {
        for &v in *block {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_fld(path: &Path) -> Result<(FldHeader, Vec<Vec<f64>>)> {
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
            return Err(CoreError::Serialization("unterminated .fld header".into()));
        }
    }
    let header: FldHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| CoreError::Serialization(format!("bad .fld header: {e}")))?;
    if header.magic != "fld" {
        return Err(CoreError::Serialization("missing fld magic".into()));
    }
    let grid = header.grid()?;
    let block_len = match header.kind.as_str() {
        "scalar" | "vector" | "curl" => grid.node_count(),
        "scalar_spacetime" => grid.node_count() * grid.time_levels(),
        other => {
            return Err(CoreError::Serialization(format!(
                "unknown .fld kind `{other}`"
            )))
        }
    };
    let mut blocks = Vec::with_capacity(header.blocks);
    let mut buf = vec![0u8; 8 * block_len];
    for _ in 0..header.blocks {
        r.read_exact(&mut buf)?;
        let block: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        blocks.push(block);
    }
    Ok((header, blocks))
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<()> {
    let header = FldHeader::new(&field.grid, "scalar", 1);
    write_fld(path, &header, &[&field.data])
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let (header, mut blocks) = read_fld(path)?;
    if header.kind != "scalar" || blocks.len() != 1 {
        return Err(CoreError::Serialization(format!(
            "expected scalar field, found `{}`",
            header.kind
        )));
    }
    Ok(ScalarField {
        grid: header.grid()?,
        data: blocks.pop().unwrap(),
    })
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    let header = FldHeader::new(&field.grid, "vector", field.comps.len());
    let refs: Vec<&[f64]> = field.comps.iter().map(|c| &c[..]).collect();
    write_fld(path, &header, &refs)
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    let (header, blocks) = read_fld(path)?;
    let grid = header.grid()?;
    if header.kind != "vector" || blocks.len() != grid.dim() {
        return Err(CoreError::Serialization(format!(
            "expected vector field with {} blocks, found `{}` with {}",
            grid.dim(),
            header.kind,
            blocks.len()
        )));
    }
    let mut field = VectorField {
        grid,
        comps: blocks,
        support: vec![false; grid.node_count()],
    };
    field.recompute_support();
    Ok(field)
}

pub fn write_scalar_spacetime(path: &Path, field: &ScalarSpaceTimeField) -> Result<()> {
    let header = FldHeader::new(&field.grid, "scalar_spacetime", 1);
    write_fld(path, &header, &[&field.data])
}

pub fn read_scalar_spacetime(path: &Path) -> Result<ScalarSpaceTimeField> {
    let (header, mut blocks) = read_fld(path)?;
    if header.kind != "scalar_spacetime" || blocks.len() != 1 {
        return Err(CoreError::Serialization(format!(
            "expected scalar_spacetime field, found `{}`",
            header.kind
        )));
    }
    Ok(ScalarSpaceTimeField {
        grid: header.grid()?,
        data: blocks.pop().unwrap(),
    })
}

pub fn write_curl(path: &Path, field: &CurlField) -> Result<()> {
    let header = FldHeader::new(&field.grid, "curl", field.comps.len());
    let refs: Vec<&[f64]> = field.comps.iter().map(|c| &c[..]).collect();
    write_fld(path, &header, &refs)
}

pub fn read_curl(path: &Path) -> Result<CurlField> {
    let (header, blocks) = read_fld(path)?;
    let grid = header.grid()?;
    let pairs = CurlField::pair_list(grid.dim());
    if header.kind != "curl" || blocks.len() != pairs.len() {
        return Err(CoreError::Serialization(format!(
            "expected curl field with {} blocks, found `{}` with {}",
            pairs.len(),
            header.kind,
            blocks.len()
        )));
    }
    Ok(CurlField {
        grid,
        pairs,
        comps: blocks,
    })
}
