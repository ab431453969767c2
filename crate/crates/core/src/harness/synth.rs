use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, ManifestEntry};
use crate::coding::FeatureSet;
use crate::error::{Error, Result};
use crate::mesh::shapes::{bend, box_mesh, cylinder, icosphere, rigid_transform, rotation};
use crate::mesh::TriangleMesh;

/// Multi-channel Gaussian features. In channel `v` the classes `0..=v` sit at `-s` on
/// the first coordinate and the classes above `v` at `+s`; every coordinate carries
/// independent noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianViewsParams {
    pub classes: usize,
    pub per_class: usize,
    pub channels: usize,
    pub dim: usize,
    /// Half the gap between class means, per channel or broadcast from one value.
    pub separation: Vec<f64>,
    pub noise: f64,
}

impl Default for GaussianViewsParams {
    fn default() -> Self {
        GaussianViewsParams {
            classes: 3,
            per_class: 30,
            channels: 2,
            dim: 30,
            separation: vec![3.0],
            noise: 1.0,
        }
    }
}

pub fn gaussian_views(params: &GaussianViewsParams, seed: u64) -> Result<Vec<FeatureSet>> {
    let p = params;
    if p.classes < 2 || p.per_class < 1 || p.channels < 1 || p.dim < 1 {
        return Err(Error::InvalidArgument(format!("degenerate gaussian views parameters {p:?}")));
    }
    if p.separation.len() != 1 && p.separation.len() != p.channels {
        return Err(Error::InvalidArgument("separation needs one value or one per channel".into()));
    }
    let sep = |v: usize| if p.separation.len() == 1 { p.separation[0] } else { p.separation[v] };
    let n = p.classes * p.per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![DMatrix::zeros(n, p.dim); p.channels];
    for row in 0..n {
        let class = row / p.per_class;
        for (v, x) in data.iter_mut().enumerate() {
            for k in 0..p.dim {
                let noise: f64 = rng.sample(StandardNormal);
                x[(row, k)] = p.noise * noise;
            }
            x[(row, 0)] += if class > v { sep(v) } else { -sep(v) };
        }
    }
    let labels: Vec<String> = (0..n).map(|r| format!("class{}", r / p.per_class)).collect();
    let ids: Vec<String> = (0..n).map(|r| format!("g{:04}", r)).collect();
    data.into_iter()
        .enumerate()
        .map(|(v, x)| FeatureSet::new(format!("view{v}"), x, labels.clone(), ids.clone()))
        .collect()
}

/// Procedural sphere, box and bent-cylinder classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapesParams {
    pub per_class: usize,
    /// Approximate extent of every shape.
    pub scale: f64,
}

impl Default for ShapesParams {
    fn default() -> Self {
        ShapesParams {
            per_class: 8,
            scale: 500.0,
        }
    }
}

/// `(shape id, class label, mesh)` triples; each instance gets its own deformation and a
/// random rigid motion. Every mesh stays under 1500 vertices.
pub fn synthetic_shapes(params: &ShapesParams, seed: u64) -> Result<Vec<(String, String, TriangleMesh)>> {
    if params.per_class < 1 || !(params.scale > 0.0) {
        return Err(Error::InvalidArgument(format!("degenerate shape parameters {params:?}")));
    }
    let s = params.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for class in ["sphere", "box", "cylinder"] {
        for i in 0..params.per_class {
            let mut jitter = || 1.0 + rng.random_range(-0.06..0.06);
            let mesh = match class {
                "sphere" => {
                    let (a, b, c) = (jitter(), jitter(), jitter());
                    icosphere(3, 0.5 * s).map_vertices(|p| [p[0] * a, p[1] * b, p[2] * c])
                }
                "box" => box_mesh(11, [s * jitter(), 0.8 * s * jitter(), 0.6 * s * jitter()]),
                _ => {
                    let (r, h) = (0.12 * s * jitter(), s * jitter());
                    let straight = cylinder(r, h, 24, 24, 3);
                    let angle = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
                    bend(&straight, 0.4 * h, 0.2 * h, angle)
                }
            };
            let axis = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)];
            let rot = rotation(axis, rng.random_range(0.0..std::f64::consts::TAU));
            let shift = [rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s)];
            let mesh = rigid_transform(&mesh, rot, shift);
            debug_assert!(mesh.num_vertices() <= 1500);
            out.push((format!("{class}{i:02}"), class.to_string(), mesh));
        }
    }
    Ok(out)
}

/// Writes the shapes as OFF files plus `manifest.json` under `dir`.
pub fn write_synthetic_shapes(params: &ShapesParams, seed: u64, dir: &Path) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = DatasetManifest {
        seed,
        base_dir: Some(dir.to_path_buf()),
        ..Default::default()
    };
    for (id, label, mesh) in synthetic_shapes(params, seed)? {
        let file = format!("{id}.off");
        std::fs::write(dir.join(&file), mesh.to_off())?;
        manifest.entries.push(ManifestEntry {
            shape_id: id,
            path: file.into(),
            label,
        });
    }
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}
