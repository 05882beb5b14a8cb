//! On-disk formats: FVF1 field payloads, JSON manifests with SHA-256
//! payload checksums, and the metrics CSV. Every file is written to a
//! temporary sibling and renamed into place, and a directory's manifest is
//! written last, so an interrupted run never leaves a manifest whose
//! checksums pass.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ensemble::{Ensemble, RunSetup};
use super::estimators::{Moments, ReferenceStats};
use crate::error::{Error, Result};
use crate::field::{Field, State};
use crate::mesh::TorusMesh;

pub const FVF_MAGIC: &[u8; 4] = b"FVF1";
pub const FVF_VERSION: u32 = 1;
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const HEADER_LEN: usize = 20;

/// Decoded FVF1 payload before it is attached to a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct FvfPayload {
    pub d: usize,
    pub n: usize,
    pub components: usize,
    pub values: Vec<f64>,
}

impl FvfPayload {
    pub fn into_field(self, mesh: &Arc<TorusMesh>) -> Result<Field> {
        if self.d != mesh.dim() || self.n != mesh.cells_per_axis() {
            return Err(Error::MeshMismatch {
                expected_d: mesh.dim(),
                expected_n: mesh.cells_per_axis(),
                found_d: self.d,
                found_n: self.n,
            });
        }
        Field::from_values(mesh.clone(), self.components, self.values)
    }
}

pub fn encode_fvf(field: &Field) -> Vec<u8> {
    let mesh = field.mesh();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values().len());
    out.extend_from_slice(FVF_MAGIC);
    for v in [
        FVF_VERSION,
        mesh.dim() as u32,
        mesh.cells_per_axis() as u32,
        field.components() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_fvf(bytes: &[u8], path: &Path) -> Result<FvfPayload> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != FVF_MAGIC {
        return Err(bad("bad magic, not an FVF1 payload".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != FVF_VERSION {
        return Err(bad(format!("unsupported payload version {version}")));
    }
    let (d, n, components) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let count = n
        .checked_pow(d as u32)
        .and_then(|c| c.checked_mul(components))
        .ok_or_else(|| bad("header sizes overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * count {
        return Err(bad(format!(
            "payload holds {} bytes, header implies {}",
            body.len(),
            8 * count
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(FvfPayload {
        d,
        n,
        components,
        values,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Metadata written next to every ensemble or reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub experiment: String,
    pub d: usize,
    pub n: usize,
    pub dt_factor: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub a: f64,
    pub mu: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub final_time: f64,
    pub half_width: f64,
    #[serde(default)]
    pub g: Vec<f64>,
    pub seed: u64,
    pub realisation: u64,
    /// Every attempted sample index, failed ones included.
    pub sample_ids: Vec<u64>,
    pub failed_ids: Vec<u64>,
    /// File name → SHA-256 of its bytes.
    pub payload_checksums: BTreeMap<String, String>,
}

impl Manifest {
    /// True when both manifests describe the same model and discretisation.
    pub fn same_config(&self, other: &Manifest) -> bool {
        self.experiment == other.experiment
            && self.d == other.d
            && self.n == other.n
            && self.dt_factor.to_bits() == other.dt_factor.to_bits()
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.gamma.to_bits() == other.gamma.to_bits()
            && self.a.to_bits() == other.a.to_bits()
            && self.mu.to_bits() == other.mu.to_bits()
            && self.lambda.to_bits() == other.lambda.to_bits()
            && self.final_time.to_bits() == other.final_time.to_bits()
            && self.half_width.to_bits() == other.half_width.to_bits()
            && self.g == other.g
            && self.seed == other.seed
    }

    pub fn check_config(&self, setup: &RunSetup) -> Result<()> {
        let expected = setup.manifest(self.realisation, Vec::new(), Vec::new());
        if self.same_config(&expected) {
            Ok(())
        } else {
            Err(Error::ConfigMismatch)
        }
    }

    fn check_mesh(&self, mesh: &TorusMesh) -> Result<()> {
        if self.d != mesh.dim() || self.n != mesh.cells_per_axis() {
            return Err(Error::MeshMismatch {
                expected_d: mesh.dim(),
                expected_n: mesh.cells_per_axis(),
                found_d: self.d,
                found_n: self.n,
            });
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let manifest: Manifest =
            serde_json::from_slice(&read(&path)?).map_err(|e| Error::Format {
                path: path.clone(),
                reason: e.to_string(),
            })?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(Error::Format {
                path,
                reason: format!("unsupported manifest version {}", manifest.format_version),
            });
        }
        Ok(manifest)
    }

    fn store(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())
    }

    /// Reads a payload named in the manifest after verifying its checksum.
    fn read_payload(&self, dir: &Path, name: &str, sample_id: Option<u64>) -> Result<FvfPayload> {
        let path = dir.join(name);
        let checksum_error = || match sample_id {
            Some(id) => Error::ChecksumMismatch {
                sample_id: id,
                path: path.clone(),
            },
            None => Error::PayloadChecksum(path.clone()),
        };
        let expected = self
            .payload_checksums
            .get(name)
            .ok_or_else(checksum_error)?;
        let bytes = read(&path)?;
        if &sha256_hex(&bytes) != expected {
            return Err(checksum_error());
        }
        decode_fvf(&bytes, &path)
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    // Invalidate any previous contents before touching payloads.
    match fs::remove_file(dir.join(MANIFEST_FILE)) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(dir.join(MANIFEST_FILE), e)),
    }
}

fn write_payload(
    dir: &Path,
    name: &str,
    field: &Field,
    sums: &mut BTreeMap<String, String>,
) -> Result<()> {
    let bytes = encode_fvf(field);
    write_atomic(&dir.join(name), &bytes)?;
    sums.insert(name.to_string(), sha256_hex(&bytes));
    Ok(())
}

pub fn sample_file_name(sample_id: u64) -> String {
    format!("sample_{sample_id:06}.fvf")
}

/// State payload: `1 + d` components per cell, `(ϱ, m₁, …, m_d)`.
pub fn state_to_field(state: &State) -> Field {
    let mesh = state.mesh().clone();
    let d = mesh.dim();
    Field::from_raw(mesh, d + 1, state.to_interleaved())
}

pub fn field_to_state(field: Field) -> Result<State> {
    let mesh = field.mesh().clone();
    if field.components() != mesh.dim() + 1 {
        return Err(Error::param(
            "components",
            "state payloads carry 1 + d components",
        ));
    }
    State::from_interleaved(mesh, field.values())
}

pub fn save_ensemble(ens: &Ensemble, dir: &Path) -> Result<PathBuf> {
    prepare_dir(dir)?;
    let mut manifest = ens.manifest().clone();
    manifest.payload_checksums.clear();
    for (id, state) in ens.sample_ids().iter().zip(ens.states()) {
        write_payload(
            dir,
            &sample_file_name(*id),
            &state_to_field(state),
            &mut manifest.payload_checksums,
        )?;
    }
    manifest.store(dir)?;
    Ok(dir.join(MANIFEST_FILE))
}

pub fn load_ensemble(dir: &Path, mesh: &Arc<TorusMesh>) -> Result<Ensemble> {
    let manifest = Manifest::load(dir)?;
    manifest.check_mesh(mesh)?;
    let mut ids = Vec::new();
    let mut states = Vec::new();
    for &id in &manifest.sample_ids {
        if manifest.failed_ids.contains(&id) {
            continue;
        }
        let payload = manifest.read_payload(dir, &sample_file_name(id), Some(id))?;
        states.push(field_to_state(payload.into_field(mesh)?)?);
        ids.push(id);
    }
    Ensemble::from_parts(manifest, ids, states, Vec::new())
}

const REFERENCE_FILES: [&str; 6] = [
    "mean_rho.fvf",
    "mean_m.fvf",
    "mean_u.fvf",
    "dev_rho.fvf",
    "dev_m.fvf",
    "var_u.fvf",
];

pub fn save_reference(stats: &ReferenceStats, manifest: &Manifest, dir: &Path) -> Result<PathBuf> {
    prepare_dir(dir)?;
    let mut manifest = manifest.clone();
    manifest.payload_checksums.clear();
    let fields = [
        &stats.rho.mean,
        &stats.m.mean,
        &stats.u.mean,
        &stats.rho.spread,
        &stats.m.spread,
        &stats.u.spread,
    ];
    for (name, field) in REFERENCE_FILES.iter().zip(fields) {
        write_payload(dir, name, field, &mut manifest.payload_checksums)?;
    }
    manifest.store(dir)?;
    Ok(dir.join(MANIFEST_FILE))
}

pub fn load_reference(dir: &Path, mesh: &Arc<TorusMesh>) -> Result<(ReferenceStats, Manifest)> {
    let manifest = Manifest::load(dir)?;
    manifest.check_mesh(mesh)?;
    let mut fields = Vec::with_capacity(6);
    for name in REFERENCE_FILES {
        fields.push(manifest.read_payload(dir, name, None)?.into_field(mesh)?);
    }
    let mut it = fields.into_iter();
    let mut next = || it.next().unwrap();
    let (mr, mm, mu, dr, dm, vu) = (next(), next(), next(), next(), next(), next());
    let stats = ReferenceStats {
        rho: Moments {
            mean: mr,
            spread: dr,
        },
        m: Moments {
            mean: mm,
            spread: dm,
        },
        u: Moments {
            mean: mu,
            spread: vu,
        },
        samples: manifest.sample_ids.len() - manifest.failed_ids.len(),
    };
    Ok((stats, manifest))
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub field: String,
    pub metric: String,
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub value: f64,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    write_atomic(path, &bytes)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["experiment", "field", "metric", "p", "N", "M", "S", "value"];
    if header.iter().ne(expected) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
