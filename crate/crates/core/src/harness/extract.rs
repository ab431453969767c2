use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::mesh::{read_mesh, TriangleMesh};
use crate::signatures::{compute_shape_dna, compute_sihks, compute_wks};
use crate::spectral::{build_laplacian, LaplacianOptions};

/// Everything the encoders need from one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSignatures {
    pub shape_id: String,
    pub label: String,
    pub mesh_hash: String,
    pub eigenvalues: Vec<f64>,
    /// Lumped vertex areas.
    pub mass: Vec<f64>,
    pub wks: DMatrix<f64>,
    pub sihks: DMatrix<f64>,
    pub shape_dna: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionFailure {
    pub shape_id: String,
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExtractionStats {
    pub eigensolves: usize,
    pub cache_hits: usize,
    pub failures: Vec<ExtractionFailure>,
}

/// Spectral basis and descriptors for one mesh, without caching.
pub fn compute_signatures(mesh: &TriangleMesh, config: &RunConfig) -> Result<MeshSignatures> {
    let lap = build_laplacian(mesh, LaplacianOptions::default())?;
    let basis = lap.eigs(&config.eigen.options())?;
    let wks = compute_wks(&basis, &config.wks)?;
    let sihks = compute_sihks(&basis, &config.sihks)?;
    let dna = compute_shape_dna(&basis, &config.shape_dna)?;
    Ok(MeshSignatures {
        shape_id: String::new(),
        label: mesh.label.clone().unwrap_or_default(),
        mesh_hash: mesh.content_hash(),
        eigenvalues: basis.eigenvalues.to_vec(),
        mass: lap.mass,
        wks: wks.values,
        sihks: sihks.values,
        shape_dna: dna.values,
    })
}

const MAGIC: &[u8; 8] = b"MFMLSIG1";

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    key: String,
    mesh_hash: String,
    vertices: usize,
    eigenvalues: usize,
    wks_dim: usize,
    sihks_dim: usize,
    shape_dna: usize,
}

/// On-disk signature cache keyed by mesh content hash and extraction parameters.
#[derive(Debug, Clone)]
pub struct SignatureCache {
    pub dir: PathBuf,
}

impl SignatureCache {
    pub fn new(dir: impl Into<PathBuf>) -> SignatureCache {
        SignatureCache { dir: dir.into() }
    }

    pub fn key(mesh_hash: &str, config: &RunConfig) -> String {
        let params = serde_json::json!({
            "eigen": config.eigen,
            "wks": config.wks,
            "sihks": config.sihks,
            "shapeDna": config.shape_dna,
        });
        let mut h = Sha256::new();
        h.update(mesh_hash.as_bytes());
        h.update(params.to_string().as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.sig"))
    }

    pub fn get(&self, key: &str) -> Option<MeshSignatures> {
        let mut bytes = Vec::new();
        std::fs::File::open(self.path(key)).ok()?.read_to_end(&mut bytes).ok()?;
        match decode(&bytes, key) {
            Ok(sig) => Some(sig),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, sig: &MeshSignatures) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let header = CacheHeader {
            key: key.to_string(),
            mesh_hash: sig.mesh_hash.clone(),
            vertices: sig.mass.len(),
            eigenvalues: sig.eigenvalues.len(),
            wks_dim: sig.wks.ncols(),
            sihks_dim: sig.sihks.ncols(),
            shape_dna: sig.shape_dna.len(),
        };
        let head = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(head.len() + 8 * (sig.wks.len() + sig.sihks.len() + sig.mass.len() + 64));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(head.len() as u64).to_le_bytes());
        out.extend_from_slice(&head);
        for block in [
            sig.eigenvalues.as_slice(),
            sig.mass.as_slice(),
            sig.wks.as_slice(),
            sig.sihks.as_slice(),
            sig.shape_dna.as_slice(),
        ] {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        // Written under a unique name and renamed so concurrent readers never see a partial file.
        let tmp = self.dir.join(format!("{key}.{}.tmp", std::process::id()));
        std::fs::File::create(&tmp)?.write_all(&out)?;
        std::fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}

fn decode(bytes: &[u8], key: &str) -> std::result::Result<MeshSignatures, String> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err("bad magic".into());
    }
    let head_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let head_end = 16usize.checked_add(head_len).filter(|&e| e <= bytes.len()).ok_or("truncated header")?;
    let h: CacheHeader = serde_json::from_slice(&bytes[16..head_end]).map_err(|e| e.to_string())?;
    if h.key != key {
        return Err("key mismatch".into());
    }
    let counts = [h.eigenvalues, h.vertices, h.vertices * h.wks_dim, h.vertices * h.sihks_dim, h.shape_dna];
    if bytes.len() - head_end != 8 * counts.iter().sum::<usize>() {
        return Err("payload size mismatch".into());
    }
    let mut values = bytes[head_end..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<f64> { values.by_ref().take(n).collect() };
    let eigenvalues = take(counts[0]);
    let mass = take(counts[1]);
    let wks = DMatrix::from_vec(h.vertices, h.wks_dim, take(counts[2]));
    let sihks = DMatrix::from_vec(h.vertices, h.sihks_dim, take(counts[3]));
    let shape_dna = take(counts[4]);
    Ok(MeshSignatures {
        shape_id: String::new(),
        label: String::new(),
        mesh_hash: h.mesh_hash,
        eigenvalues,
        mass,
        wks,
        sihks,
        shape_dna,
    })
}

/// Extracts signatures for every manifest entry in parallel, reusing the cache when
/// configured. Failed meshes are reported and dropped; more than
/// `max_failure_fraction` failures abort the run.
pub fn extract_all(manifest: &DatasetManifest, config: &RunConfig) -> Result<(Vec<MeshSignatures>, ExtractionStats)> {
    let cache = config.cache_dir.as_ref().map(SignatureCache::new);
    let solves = AtomicUsize::new(0);
    let hits = AtomicUsize::new(0);
    let results: Vec<std::result::Result<MeshSignatures, ExtractionFailure>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let path = manifest.resolve(entry);
            let fail = |e: Error| ExtractionFailure {
                shape_id: entry.shape_id.clone(),
                path: path.clone(),
                message: e.to_string(),
            };
            let mesh = read_mesh(&path).map_err(fail)?;
            let hash = mesh.content_hash();
            let key = SignatureCache::key(&hash, config);
            let cached = cache.as_ref().and_then(|c| c.get(&key));
            let mut sig = match cached {
                Some(sig) => {
                    hits.fetch_add(1, Ordering::Relaxed);
                    sig
                }
                None => {
                    solves.fetch_add(1, Ordering::Relaxed);
                    let sig = compute_signatures(&mesh, config).map_err(fail)?;
                    if let Some(c) = &cache {
                        if let Err(e) = c.put(&key, &sig) {
                            log::warn!("could not cache {}: {e}", entry.shape_id);
                        }
                    }
                    sig
                }
            };
            sig.shape_id = entry.shape_id.clone();
            sig.label = entry.label.clone();
            Ok(sig)
        })
        .collect();
    let mut stats = ExtractionStats {
        eigensolves: solves.into_inner(),
        cache_hits: hits.into_inner(),
        failures: Vec::new(),
    };
    let mut signatures = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(sig) => signatures.push(sig),
            Err(f) => {
                log::warn!("extraction failed for {} ({}): {}", f.shape_id, f.path.display(), f.message);
                stats.failures.push(f);
            }
        }
    }
    let total = manifest.entries.len();
    if stats.failures.len() as f64 > config.max_failure_fraction * total as f64 {
        let names: Vec<String> = stats
            .failures
            .iter()
            .map(|f| format!("{} ({})", f.shape_id, f.message))
            .collect();
        return Err(Error::Data(format!(
            "{} of {total} meshes failed extraction: {}",
            stats.failures.len(),
            names.join("; ")
        )));
    }
    Ok((signatures, stats))
}
