//! On-disk dataset layout.
//!
//! ```text
//! manifest.json
//! frame_0000.interfered.bin   f32 LE (re, im), chirp after chirp
//! frame_0000.clean.bin
//! frame_0000.json             sampled parameters and interference segments
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{InterferenceSegment, InterfererParams, ObjectParams, RadarFrame, ScenarioConfig};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub seed: u64,
    pub frames: usize,
    pub scenario: ScenarioConfig,
    /// Per-frame object counts.
    pub object_counts: Vec<usize>,
    pub interferer_counts: Vec<usize>,
    pub segment_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub index: usize,
    pub objects: Vec<ObjectParams>,
    pub interferers: Vec<InterfererParams>,
    pub noise_variance: f64,
    pub components: Vec<InterferenceSegment>,
}

fn frame_path(dir: &Path, index: usize, suffix: &str) -> PathBuf {
    dir.join(format!("frame_{index:04}.{suffix}"))
}

/// Writes a matrix row-major as interleaved f32 LE pairs.
pub fn write_matrix(path: &Path, m: &Array2<Complex64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in m.iter() {
        w.write_all(&(v.re as f32).to_le_bytes())?;
        w.write_all(&(v.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<Array2<Complex64>> {
    let bytes = fs::read(path)?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::Format(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            rows * cols * 8
        )));
    }
    let vals: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Array2::from_shape_vec((rows, cols), vals).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let m: DatasetManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Format(format!(
            "dataset version {} is not supported (expected {MANIFEST_VERSION})",
            m.version
        )));
    }
    Ok(m)
}

pub fn write_frame(dir: &Path, index: usize, frame: &RadarFrame) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_matrix(&frame_path(dir, index, "interfered.bin"), &frame.interfered)?;
    write_matrix(&frame_path(dir, index, "clean.bin"), &frame.clean)?;
    let meta = FrameMeta {
        index,
        objects: frame.objects.clone(),
        interferers: frame.interferers.clone(),
        noise_variance: frame.noise_variance,
        components: frame.components.clone(),
    };
    fs::write(frame_path(dir, index, "json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Loads a frame and resynthesizes its interference segments. The noise matrix is
/// not stored and comes back as `None`.
pub fn read_frame(dir: &Path, index: usize, scenario: &ScenarioConfig) -> Result<RadarFrame> {
    let v = &scenario.victim;
    let interfered = read_matrix(&frame_path(dir, index, "interfered.bin"), v.n_slow, v.n_fast)?;
    let clean = read_matrix(&frame_path(dir, index, "clean.bin"), v.n_slow, v.n_fast)?;
    let meta: FrameMeta = serde_json::from_str(&fs::read_to_string(frame_path(dir, index, "json"))?)?;
    let mut components = meta.components;
    for seg in &mut components {
        seg.resynthesize(v)?;
    }
    Ok(RadarFrame {
        interfered,
        clean,
        noise: None,
        components,
        objects: meta.objects,
        interferers: meta.interferers,
        noise_variance: meta.noise_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{synth_frame, VictimParams};

    #[test]
    fn frame_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ScenarioConfig {
            victim: VictimParams {
                n_slow: 8,
                ..VictimParams::default()
            },
            ..ScenarioConfig::default()
        };
        let f = synth_frame(&cfg, 4, 0).unwrap();
        write_frame(dir.path(), 0, &f).unwrap();
        let g = read_frame(dir.path(), 0, &cfg).unwrap();
        assert_eq!(g.components, f.components);
        let err = (&g.interfered - &f.interfered).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = f.interfered.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(err <= 1e-6 * scale);
        assert!(read_frame(dir.path(), 1, &cfg).is_err());
    }
}
