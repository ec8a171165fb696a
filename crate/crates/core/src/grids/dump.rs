//! Binary grid dumps: little-endian `f64`, row-major, with a JSON sidecar.
//!
//! `<stem>.bin` holds the samples and `<stem>.json` the metadata. Spatial
//! fields write `n_p = 0`, `L_p = 0`. Multi-record files (orbitals, complex
//! planes) stack records back to back and list them in `records`/`planes`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Domain, GridFunction, PhaseSpaceGrid, SpatialGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub d: usize,
    #[serde(rename = "L_x")]
    pub l_x: f64,
    #[serde(rename = "L_p")]
    pub l_p: f64,
    pub n_x: usize,
    pub n_p: usize,
    pub field_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planes: Option<Vec<String>>,
}

impl DumpMeta {
    pub fn phase(grid: &PhaseSpaceGrid, field_name: &str) -> Self {
        DumpMeta {
            d: grid.d(),
            l_x: grid.spatial().half_width(),
            l_p: grid.momentum().half_width(),
            n_x: grid.spatial().n(),
            n_p: grid.momentum().n(),
            field_name: field_name.to_string(),
            records: None,
            planes: None,
        }
    }

    pub fn spatial(grid: &SpatialGrid, field_name: &str) -> Self {
        DumpMeta {
            d: grid.d(),
            l_x: grid.half_width(),
            l_p: 0.0,
            n_x: grid.n(),
            n_p: 0,
            field_name: field_name.to_string(),
            records: None,
            planes: None,
        }
    }

    /// Number of samples in one record.
    pub fn record_len(&self) -> usize {
        self.n_x.pow(self.d as u32) * self.n_p.max(1).pow(self.d as u32)
    }

    pub fn total_len(&self) -> usize {
        let planes = self.planes.as_ref().map_or(1, |p| p.len());
        self.record_len() * self.records.unwrap_or(1) * planes
    }
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

pub fn write_dump(stem: &Path, meta: &DumpMeta, data: &[f64]) -> Result<()> {
    if data.len() != meta.total_len() {
        return Err(Error::arg(format!(
            "dump '{}' expects {} samples, got {}",
            meta.field_name,
            meta.total_len(),
            data.len()
        )));
    }
    let (bin, json) = paths(stem);
    let mut bytes = Vec::with_capacity(8 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(bin, bytes)?;
    fs::write(json, serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

pub fn read_dump(stem: &Path) -> Result<(DumpMeta, Vec<f64>)> {
    let (bin, json) = paths(stem);
    let meta: DumpMeta = serde_json::from_str(&fs::read_to_string(json)?)?;
    let bytes = fs::read(bin)?;
    if bytes.len() != 8 * meta.total_len() {
        return Err(Error::arg(format!(
            "dump '{}' has {} bytes, sidecar implies {}",
            meta.field_name,
            bytes.len(),
            8 * meta.total_len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((meta, data))
}

pub fn dump_phase_function(
    stem: &Path,
    f: &GridFunction<PhaseSpaceGrid, f64>,
    field_name: &str,
) -> Result<()> {
    write_dump(stem, &DumpMeta::phase(f.grid(), field_name), f.values())
}

pub fn dump_spatial_function(
    stem: &Path,
    f: &GridFunction<SpatialGrid, f64>,
    field_name: &str,
) -> Result<()> {
    write_dump(stem, &DumpMeta::spatial(f.grid(), field_name), f.values())
}

/// Complex records as stacked real and imaginary planes, one record per
/// function.
pub fn dump_complex_records(
    stem: &Path,
    grid: &SpatialGrid,
    records: &[Vec<Complex64>],
    field_name: &str,
) -> Result<()> {
    let mut meta = DumpMeta::spatial(grid, field_name);
    meta.records = Some(records.len());
    meta.planes = Some(vec!["re".into(), "im".into()]);
    let len = grid.len();
    let mut data = Vec::with_capacity(2 * len * records.len());
    for plane in 0..2 {
        for r in records {
            if r.len() != len {
                return Err(Error::arg("record length does not match grid"));
            }
            data.extend(r.iter().map(|v| if plane == 0 { v.re } else { v.im }));
        }
    }
    write_dump(stem, &meta, &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::make_phase_grid;

    #[test]
    fn round_trip_phase_dump() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_phase_grid(1, 8.0, 4.0, 8, 16).unwrap();
        let f = GridFunction::from_fn(g, |z| z[0] - 2.0 * z[1]);
        let stem = dir.path().join("f_N");
        dump_phase_function(&stem, &f, "f_N").unwrap();
        let (meta, data) = read_dump(&stem).unwrap();
        assert_eq!(meta.n_x, 8);
        assert_eq!(meta.n_p, 16);
        assert_eq!(meta.l_p, 4.0);
        assert_eq!(data, f.values());
        let raw = fs::read_to_string(stem.with_extension("json")).unwrap();
        assert!(raw.contains("\"L_x\""));
        assert!(!raw.contains("records"));
    }

    #[test]
    fn complex_records_stack_planes() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(1, 2.0, 8).unwrap();
        let recs = vec![
            (0..8)
                .map(|j| Complex64::new(j as f64, -1.0))
                .collect::<Vec<_>>(),
            (0..8)
                .map(|j| Complex64::new(0.5, j as f64))
                .collect::<Vec<_>>(),
        ];
        let stem = dir.path().join("orbitals");
        dump_complex_records(&stem, &g, &recs, "orbitals").unwrap();
        let (meta, data) = read_dump(&stem).unwrap();
        assert_eq!(meta.records, Some(2));
        assert_eq!(data.len(), 32);
        assert_eq!(data[3], 3.0);
        assert_eq!(data[16 + 8 + 5], 5.0);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::new(1, 2.0, 8).unwrap();
        let meta = DumpMeta::spatial(&g, "rho");
        assert!(write_dump(&dir.path().join("rho"), &meta, &[1.0; 7]).is_err());
    }
}
