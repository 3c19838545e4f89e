#![allow(dead_code)]

use std::path::{Path, PathBuf};

use oarqa_core::volume::{read_nrrd, LabelPolicy};
use serde_json::Value;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/nrrd")
}

fn variant_name<T: std::fmt::Debug>(v: &T) -> String {
    let s = format!("{v:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string()
}

/// Decodes every fixture listed in `expected.json` and compares it with the
/// reference decoding. Returns the number of files checked.
pub fn check_nrrd_fixtures() -> Result<usize, String> {
    let dir = fixture_dir();
    let text = std::fs::read_to_string(dir.join("expected.json")).map_err(|e| e.to_string())?;
    let expected: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    for (name, exp) in &expected {
        let path = dir.join(name);
        let got = read_nrrd(&path, LabelPolicy::NonzeroIsForeground);
        if exp["ok"] != Value::Bool(true) {
            let want = exp["error"].as_str().unwrap();
            match got {
                Err(e) if variant_name(&e) == want => continue,
                Err(e) => return Err(format!("{name}: expected {want}, got {e:?}")),
                Ok(_) => return Err(format!("{name}: expected {want}, decoded fine")),
            }
        }
        let m = got.map_err(|e| format!("{name}: {e}"))?;
        let g = m.geometry();
        let dims: Vec<usize> = serde_json::from_value(exp["dims"].clone()).unwrap();
        let spacing: Vec<f64> = serde_json::from_value(exp["spacing_mm"].clone()).unwrap();
        if g.dims.to_vec() != dims || g.spacing_mm.to_vec() != spacing {
            return Err(format!("{name}: geometry {g:?}"));
        }
        let want_fg: Vec<usize> = serde_json::from_value(exp["foreground_indices"].clone()).unwrap();
        let fg: Vec<usize> = m.foreground_indices().collect();
        if fg != want_fg {
            return Err(format!("{name}: foreground {fg:?}"));
        }
        if m.foreground_count() != exp["nonzero"].as_u64().unwrap() as usize
            || m.voxels().iter().filter(|&&v| v).count() != m.foreground_count()
        {
            return Err(format!("{name}: foreground_count {}", m.foreground_count()));
        }
        let warnings: Vec<String> = m.warnings().iter().map(variant_name).collect();
        let want_w: Vec<String> = serde_json::from_value(exp["warnings"].clone()).unwrap();
        if warnings != want_w {
            return Err(format!("{name}: warnings {warnings:?}"));
        }
        for (label, key) in [(2, "label_2"), (exp["label_big"].as_i64().unwrap(), "label_big_count")] {
            let n = read_nrrd(&path, LabelPolicy::SpecificLabel(label))
                .map_err(|e| format!("{name}: {e}"))?
                .foreground_count();
            if n != exp[key].as_u64().unwrap() as usize {
                return Err(format!("{name}: label {label} count {n}"));
            }
        }
    }
    Ok(expected.len())
}

use oarqa_core::volume::{GridGeometry, MaskVolume};
use rand::Rng;

/// A random mask: either voxel noise or a union of a few balls and boxes,
/// so that both ragged and smooth surfaces occur.
pub fn random_mask<R: Rng>(rng: &mut R, g: GridGeometry) -> MaskVolume {
    let [nx, ny, nz] = g.dims;
    match rng.gen_range(0..4) {
        0 => {
            let p = rng.gen_range(0.02..0.6);
            MaskVolume::from_fn(g, |_| rng.gen_bool(p))
        }
        1 if rng.gen_bool(0.3) => MaskVolume::empty(g),
        _ => {
            let shapes: Vec<([f64; 3], [f64; 3], bool)> = (0..rng.gen_range(1..4))
                .map(|_| {
                    let c = [
                        rng.gen_range(0.0..nx as f64),
                        rng.gen_range(0.0..ny as f64),
                        rng.gen_range(0.0..nz as f64),
                    ];
                    let r = [rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0)];
                    (c, r, rng.gen_bool(0.5))
                })
                .collect();
            MaskVolume::from_fn(g, |p| {
                shapes.iter().any(|(c, r, ball)| {
                    let d = [0, 1, 2].map(|k| (p[k] as f64 - c[k]) / r[k]);
                    if *ball {
                        d.iter().map(|v| v * v).sum::<f64>() <= 1.0
                    } else {
                        d.iter().all(|v| v.abs() <= 1.0)
                    }
                })
            })
        }
    }
}

pub fn random_geometry<R: Rng>(rng: &mut R, max_dim: usize) -> GridGeometry {
    let dims = [0; 3].map(|_| rng.gen_range(1..=max_dim));
    let spacing = [0; 3].map(|_| rng.gen_range(0.5..=3.0));
    GridGeometry::new(dims, spacing).unwrap()
}

/// `|a - b| <= tol * max(|a|, |b|)`, with equal infinities accepted.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn shifted(m: &MaskVolume, off: [i64; 3]) -> MaskVolume {
    MaskVolume::from_fn(*m.geometry(), |p| {
        m.get_signed([p[0] as i64 - off[0], p[1] as i64 - off[1], p[2] as i64 - off[2]])
    })
}

pub fn rescaled(m: &MaskVolume, s: f64) -> MaskVolume {
    let g = m.geometry();
    let g2 = GridGeometry::new(g.dims, g.spacing_mm.map(|v| v * s)).unwrap();
    MaskVolume::from_voxels(g2, m.voxels().to_vec()).unwrap()
}
