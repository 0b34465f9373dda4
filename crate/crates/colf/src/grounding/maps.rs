//! Similarity and depth grids plus the threshold-centroid reduction.
//!
//! Pixel (row r, col c) samples continuous coordinates (u, v) = (c, r).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const DEPTH_MIN: f64 = 0.1;
pub const DEPTH_MAX: f64 = 10.0;

/// Default similarity threshold.
pub const TAU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapProvenance {
    Synthetic,
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMap {
    pub width: usize,
    pub height: usize,
    /// Row-major scores in [0, 1].
    pub data: Vec<f64>,
    pub provenance: MapProvenance,
}

impl SimilarityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>, provenance: MapProvenance) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch("similarity map size mismatch".into()));
        }
        if data.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
            return Err(Error::Contract("similarity scores must lie in [0, 1]".into()));
        }
        Ok(Self { width, height, data, provenance })
    }

    pub fn zeros(width: usize, height: usize, provenance: MapProvenance) -> Self {
        Self { width, height, data: vec![0.0; width * height], provenance }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.width + c] = v;
    }
}

/// Pixel-wise maximum of several maps (ambiguity fixture: several instances
/// of the same label merged into one map).
pub fn merge_maps(maps: &[SimilarityMap]) -> Result<SimilarityMap> {
    let first = maps.first().ok_or_else(|| Error::Contract("no maps to merge".into()))?;
    let mut out = first.clone();
    for m in &maps[1..] {
        if m.width != out.width || m.height != out.height {
            return Err(Error::DimensionMismatch("merged maps must share shape".into()));
        }
        for (o, v) in out.data.iter_mut().zip(&m.data) {
            *o = o.max(*v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    /// Row-major z-depths (m), clipped to [DEPTH_MIN, DEPTH_MAX] where valid.
    pub data: Vec<f64>,
    pub valid: Vec<bool>,
}

impl DepthMap {
    /// Clip raw sensor depths into range. Non-finite or non-positive raw
    /// values (no return) are marked invalid and never contribute
    /// downstream.
    pub fn from_raw(width: usize, height: usize, raw: &[f64]) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::DimensionMismatch("depth map size mismatch".into()));
        }
        let mut data = Vec::with_capacity(raw.len());
        let mut valid = Vec::with_capacity(raw.len());
        for &d in raw {
            if d.is_finite() && d > 0.0 {
                data.push(d.clamp(DEPTH_MIN, DEPTH_MAX));
                valid.push(true);
            } else {
                data.push(0.0);
                valid.push(false);
            }
        }
        Ok(Self { width, height, data, valid })
    }

    pub fn at(&self, r: usize, c: usize) -> Option<f64> {
        let i = r * self.width + c;
        if self.valid[i] { Some(self.data[i]) } else { None }
    }
}

/// Centroid of the above-threshold region: mean pixel coordinates over
/// {(u, v) : score >= tau}. `None` when the region is empty.
pub fn threshold_centroid(map: &SimilarityMap, tau: f64) -> Result<Option<[f64; 2]>> {
    if !(0.0 < tau && tau < 1.0) {
        return Err(Error::Contract("threshold must lie in (0, 1)".into()));
    }
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut n = 0usize;
    for r in 0..map.height {
        for c in 0..map.width {
            if map.at(r, c) >= tau {
                su += c as f64;
                sv += r as f64;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Ok(None);
    }
    Ok(Some([su / n as f64, sv / n as f64]))
}

/// Median of the valid depths inside the above-threshold region.
pub fn median_region_depth(map: &SimilarityMap, depth: &DepthMap, tau: f64) -> Result<Option<f64>> {
    if map.width != depth.width || map.height != depth.height {
        return Err(Error::DimensionMismatch("similarity/depth shapes must match".into()));
    }
    let mut ds = Vec::new();
    for r in 0..map.height {
        for c in 0..map.width {
            if map.at(r, c) >= tau {
                if let Some(d) = depth.at(r, c) {
                    ds.push(d);
                }
            }
        }
    }
    if ds.is_empty() {
        return Ok(None);
    }
    ds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = ds.len();
    Ok(Some(if n % 2 == 1 { ds[n / 2] } else { 0.5 * (ds[n / 2 - 1] + ds[n / 2]) }))
}

const GRID_MAGIC: &[u8; 8] = b"COLFGRID";

/// Flat binary grid fixture: magic, width/height u32 LE, f64 LE values.
pub fn write_grid(path: &Path, width: usize, height: usize, data: &[f64]) -> Result<()> {
    if data.len() != width * height {
        return Err(Error::DimensionMismatch("grid size mismatch".into()));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(GRID_MAGIC)?;
    f.write_all(&(width as u32).to_le_bytes())?;
    f.write_all(&(height as u32).to_le_bytes())?;
    for v in data {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_grid(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Checkpoint("bad grid magic".into()));
    }
    let mut b4 = [0u8; 4];
    f.read_exact(&mut b4)?;
    let width = u32::from_le_bytes(b4) as usize;
    f.read_exact(&mut b4)?;
    let height = u32::from_le_bytes(b4) as usize;
    let mut data = Vec::with_capacity(width * height);
    let mut b8 = [0u8; 8];
    for _ in 0..width * height {
        f.read_exact(&mut b8)?;
        data.push(f64::from_le_bytes(b8));
    }
    Ok((width, height, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_centroid() {
        let mut m = SimilarityMap::zeros(64, 64, MapProvenance::Synthetic);
        // Pixel (u, v) = (10, 20): column 10, row 20.
        m.set(20, 10, 0.9);
        let c = threshold_centroid(&m, TAU).unwrap().unwrap();
        assert_eq!(c, [10.0, 20.0]);
    }

    #[test]
    fn uniform_below_threshold_is_no_region() {
        let m = SimilarityMap::new(
            32,
            32,
            vec![0.49; 32 * 32],
            MapProvenance::Synthetic,
        )
        .unwrap();
        assert!(threshold_centroid(&m, TAU).unwrap().is_none());
    }

    #[test]
    fn two_blob_midpoint_pathology() {
        // Equal-count blobs at (10,10) and (30,30): one global centroid at
        // their midpoint, matching an exhaustive pixel-mean oracle.
        let mut m = SimilarityMap::zeros(64, 64, MapProvenance::Synthetic);
        for (cu, cv) in [(10i64, 10i64), (30, 30)] {
            for du in -1..=1i64 {
                for dv in -1..=1i64 {
                    m.set((cv + dv) as usize, (cu + du) as usize, 1.0);
                }
            }
        }
        let c = threshold_centroid(&m, TAU).unwrap().unwrap();
        let mut su = 0.0;
        let mut sv = 0.0;
        let mut n = 0.0;
        for r in 0..64 {
            for cc in 0..64 {
                if m.at(r, cc) >= TAU {
                    su += cc as f64;
                    sv += r as f64;
                    n += 1.0;
                }
            }
        }
        assert_eq!(c, [su / n, sv / n]);
        assert_eq!(c, [20.0, 20.0]);
    }

    #[test]
    fn depth_clipping_adversarial() {
        let raw = [f64::NAN, -1.0, 0.0, 0.05, 50.0, 5.0, f64::INFINITY, 0.1];
        let d = DepthMap::from_raw(4, 2, &raw).unwrap();
        assert_eq!(d.at(0, 0), None); // NaN
        assert_eq!(d.at(0, 1), None); // negative
        assert_eq!(d.at(0, 2), None); // no return
        assert_eq!(d.at(0, 3), Some(DEPTH_MIN)); // clipped up
        assert_eq!(d.at(1, 0), Some(DEPTH_MAX)); // clipped down
        assert_eq!(d.at(1, 1), Some(5.0));
        assert_eq!(d.at(1, 2), None); // inf
        assert_eq!(d.at(1, 3), Some(0.1));
        for (i, ok) in d.valid.iter().enumerate() {
            if *ok {
                assert!((DEPTH_MIN..=DEPTH_MAX).contains(&d.data[i]));
            }
        }
    }

    #[test]
    fn median_ignores_invalid_depths() {
        let mut m = SimilarityMap::zeros(3, 1, MapProvenance::Synthetic);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        m.set(0, 2, 1.0);
        let d = DepthMap::from_raw(3, 1, &[2.0, f64::NAN, 4.0]).unwrap();
        assert_eq!(median_region_depth(&m, &d, TAU).unwrap(), Some(3.0));
        let d = DepthMap::from_raw(3, 1, &[f64::NAN; 3]).unwrap();
        assert_eq!(median_region_depth(&m, &d, TAU).unwrap(), None);
    }

    #[test]
    fn score_range_enforced() {
        assert!(SimilarityMap::new(2, 1, vec![0.5, 1.2], MapProvenance::External).is_err());
    }

    #[test]
    fn grid_fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.grid");
        let data = vec![0.25, 0.5, 0.75, 1.0, 0.0, 0.125];
        write_grid(&p, 3, 2, &data).unwrap();
        let (w, h, back) = read_grid(&p).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(back, data);
    }

    #[test]
    fn merged_maps_take_pixel_max() {
        let mut a = SimilarityMap::zeros(4, 4, MapProvenance::Synthetic);
        let mut b = SimilarityMap::zeros(4, 4, MapProvenance::Synthetic);
        a.set(1, 1, 0.8);
        b.set(2, 2, 0.9);
        b.set(1, 1, 0.3);
        let m = merge_maps(&[a, b]).unwrap();
        assert_eq!(m.at(1, 1), 0.8);
        assert_eq!(m.at(2, 2), 0.9);
    }
}
