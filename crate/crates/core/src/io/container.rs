//! Self-describing dataset container: JSON manifest plus raw complex payload.
//!
//! Byte layout:
//!
//! | offset      | size | content                                        |
//! |-------------|------|------------------------------------------------|
//! | 0           | 8    | magic `BSMKCNT1`                               |
//! | 8           | 8    | manifest length `L`, u64 little-endian         |
//! | 16          | L    | UTF-8 JSON manifest                            |
//! | 16 + L      | rest | payload, f64 LE pairs (re, im), row-major      |
//!
//! The payload of steering and HRTF sets is one `[F][C][Q]` block. A filter
//! bank stores `[F][2][M]` blocks: the rendered weights, followed for mixed
//! designs by the LS and MagLS constituents.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{ComplexCube, Ear, FrequencyAxis, HrtfSet, NoiseModel, SourceDistance, SteeringSet};
use crate::design::{AlphaSchedule, BsmFilterBank, Criterion, FovSpec, MixMode, MixedComponents};
use crate::error::{BsmError, Result};
use crate::geometry::{ArrayGeometry, Direction, DirectionGrid};

pub const MAGIC: &[u8; 8] = b"BSMKCNT1";
pub const SCHEMA_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Steering,
    Hrtf,
    Filterbank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum DistanceField {
    Meters(f64),
    Marker(String),
}

impl From<SourceDistance> for DistanceField {
    fn from(d: SourceDistance) -> Self {
        match d {
            SourceDistance::PlaneWave => DistanceField::Marker("planewave".into()),
            SourceDistance::Meters(m) => DistanceField::Meters(m),
        }
    }
}

impl TryFrom<&DistanceField> for SourceDistance {
    type Error = BsmError;

    fn try_from(d: &DistanceField) -> Result<Self> {
        match d {
            DistanceField::Meters(m) if m.is_finite() && *m > 0.0 => Ok(SourceDistance::Meters(*m)),
            DistanceField::Marker(s) if s == "planewave" => Ok(SourceDistance::PlaneWave),
            other => Err(BsmError::Malformed(format!("source_distance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GeometryField {
    positions: Vec<[f64; 3]>,
    labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FovField {
    az_halfwidth_rad: f64,
    el_halfwidth_rad: f64,
    center: [f64; 2],
    beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FilterField {
    criterion: String,
    sigma_s_sq: f64,
    sigma_n_sq: f64,
    fov: Option<FovField>,
    alpha_lo_hz: f64,
    alpha_hi_hz: f64,
    mix_mode: String,
    blocks: Vec<String>,
    unconverged: Vec<(String, usize)>,
    provenance: BTreeMap<String, String>,
}

/// Parsed container manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    schema_version: u32,
    kind: Kind,
    dims: [usize; 3],
    sample_rate: f64,
    fft_size: usize,
    speed_of_sound: f64,
    source_distance: DistanceField,
    grid_name: String,
    /// `[theta, phi]` in radians.
    grid: Vec<[f64; 2]>,
    geometry: Option<GeometryField>,
    convention: String,
    payload_bytes: u64,
    payload_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    filterbank: Option<FilterField>,
    /// Free-form record of how the file was produced.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    provenance: BTreeMap<String, String>,
}

impl Manifest {
    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Steering(SteeringSet),
    Hrtf(HrtfSet),
    FilterBank(Box<BsmFilterBank>),
}

impl Dataset {
    pub fn kind(&self) -> Kind {
        match self {
            Dataset::Steering(_) => Kind::Steering,
            Dataset::Hrtf(_) => Kind::Hrtf,
            Dataset::FilterBank(_) => Kind::Filterbank,
        }
    }
}

fn payload_bytes(blocks: &[&ComplexCube]) -> Vec<u8> {
    let n: usize = blocks.iter().map(|b| b.as_slice().len()).sum();
    let mut out = Vec::with_capacity(n * 16);
    for b in blocks {
        for z in b.as_slice() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn grid_field(grid: &DirectionGrid) -> Vec<[f64; 2]> {
    grid.directions().iter().map(|d| [d.theta(), d.phi()]).collect()
}

fn base_manifest(
    kind: Kind,
    dims: [usize; 3],
    axis: &FrequencyAxis,
    distance: SourceDistance,
    grid: Option<&DirectionGrid>,
    convention: &str,
    payload: &[u8],
) -> Manifest {
    Manifest {
        schema_version: SCHEMA_VERSION,
        kind,
        dims,
        sample_rate: axis.sample_rate(),
        fft_size: axis.fft_size(),
        speed_of_sound: axis.speed_of_sound(),
        source_distance: distance.into(),
        grid_name: grid.map_or(String::new(), |g| g.name().to_string()),
        grid: grid.map_or(Vec::new(), grid_field),
        geometry: None,
        convention: convention.to_string(),
        payload_bytes: payload.len() as u64,
        payload_sha256: sha256_hex(payload),
        filterbank: None,
        provenance: BTreeMap::new(),
    }
}

fn assemble(manifest: &Manifest, payload: &[u8]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec_pretty(manifest)?;
    let mut out = Vec::with_capacity(HEADER_LEN + json.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn encode_steering(set: &SteeringSet) -> Result<Vec<u8>> {
    let (m, payload) = steering_manifest(set);
    assemble(&m, &payload)
}

fn steering_manifest(set: &SteeringSet) -> (Manifest, Vec<u8>) {
    let payload = payload_bytes(&[&set.data]);
    let mut m = base_manifest(
        Kind::Steering,
        set.data.dims(),
        &set.freq_axis,
        set.source_distance,
        Some(&set.grid),
        &set.convention,
        &payload,
    );
    m.geometry = Some(GeometryField {
        positions: set.geometry.positions().to_vec(),
        labels: set.geometry.labels().to_vec(),
    });
    (m, payload)
}

pub fn encode_hrtf(set: &HrtfSet) -> Result<Vec<u8>> {
    let (m, payload) = hrtf_manifest(set);
    assemble(&m, &payload)
}

fn hrtf_manifest(set: &HrtfSet) -> (Manifest, Vec<u8>) {
    let payload = payload_bytes(&[&set.data]);
    let m = base_manifest(
        Kind::Hrtf,
        set.data.dims(),
        &set.freq_axis,
        set.source_distance,
        Some(&set.grid),
        &set.convention,
        &payload,
    );
    (m, payload)
}

pub fn encode_filterbank(bank: &BsmFilterBank) -> Result<Vec<u8>> {
    let (m, payload) = filterbank_manifest(bank);
    assemble(&m, &payload)
}

fn filterbank_manifest(bank: &BsmFilterBank) -> (Manifest, Vec<u8>) {
    let mut blocks = vec![&bank.weights];
    let mut names = vec!["weights".to_string()];
    if let Some(c) = &bank.components {
        blocks.push(&c.ls);
        blocks.push(&c.magls);
        names.push("ls".into());
        names.push("magls".into());
    }
    let payload = payload_bytes(&blocks);
    let mut m = base_manifest(
        Kind::Filterbank,
        bank.weights.dims(),
        &bank.freq_axis,
        bank.source_distance_design,
        None,
        "p_hat = c^H x per bin; weights [F][ear][mic], left ear first",
        &payload,
    );
    m.filterbank = Some(FilterField {
        criterion: bank.criterion.tag().into(),
        sigma_s_sq: bank.noise.sigma_s_sq(),
        sigma_n_sq: bank.noise.sigma_n_sq(),
        fov: bank.fov.map(|f| FovField {
            az_halfwidth_rad: f.az_halfwidth(),
            el_halfwidth_rad: f.el_halfwidth(),
            center: [f.center().theta(), f.center().phi()],
            beta: f.beta(),
        }),
        alpha_lo_hz: bank.alpha.lo_hz(),
        alpha_hi_hz: bank.alpha.hi_hz(),
        mix_mode: bank.mix_mode.tag().into(),
        blocks: names,
        unconverged: bank.unconverged.iter().map(|(e, b)| (e.tag().to_string(), *b)).collect(),
        provenance: bank.provenance.clone(),
    });
    (m, payload)
}

pub fn encode_dataset(d: &Dataset) -> Result<Vec<u8>> {
    encode_dataset_with(d, &BTreeMap::new())
}

/// As [`encode_dataset`], recording `provenance` in the manifest.
pub fn encode_dataset_with(d: &Dataset, provenance: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    let mut m = match d {
        Dataset::Steering(s) => steering_manifest(s),
        Dataset::Hrtf(h) => hrtf_manifest(h),
        Dataset::FilterBank(b) => filterbank_manifest(b),
    };
    m.0.provenance = provenance.clone();
    assemble(&m.0, &m.1)
}

/// Splits a container into its manifest and payload without validating the payload.
pub fn read_manifest(bytes: &[u8]) -> Result<(Manifest, &[u8])> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(BsmError::Malformed("not a dataset container (bad magic)".into()));
    }
    let mut len_bytes = [0u8; 8];
    len_bytes.copy_from_slice(&bytes[8..16]);
    let len = u64::from_le_bytes(len_bytes);
    let rest = &bytes[HEADER_LEN..];
    if len > rest.len() as u64 {
        return Err(BsmError::Malformed(format!(
            "manifest length {len} exceeds file size {}",
            bytes.len()
        )));
    }
    let (json, payload) = rest.split_at(len as usize);
    let value: serde_json::Value =
        serde_json::from_slice(json).map_err(|e| BsmError::Malformed(format!("manifest: {e}")))?;
    let version = value.get("schema_version").and_then(|v| v.as_u64());
    if version != Some(u64::from(SCHEMA_VERSION)) {
        return Err(BsmError::SchemaUnknown(format!("schema_version {version:?}")));
    }
    let kind = value.get("kind").and_then(|v| v.as_str()).unwrap_or_default();
    if !matches!(kind, "steering" | "hrtf" | "filterbank") {
        return Err(BsmError::SchemaUnknown(format!("kind {kind:?}")));
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| BsmError::Malformed(format!("manifest: {e}")))?;
    Ok((manifest, payload))
}

fn decode_block(bytes: &[u8], dims: [usize; 3]) -> Result<ComplexCube> {
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let mut re = [0u8; 8];
            let mut im = [0u8; 8];
            re.copy_from_slice(&c[..8]);
            im.copy_from_slice(&c[8..]);
            Complex64::new(f64::from_le_bytes(re), f64::from_le_bytes(im))
        })
        .collect();
    ComplexCube::from_vec(dims, data)
}

fn block_len(dims: [usize; 3]) -> Option<usize> {
    dims.iter().try_fold(16usize, |acc, &d| acc.checked_mul(d))
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let (m, payload) = read_manifest(bytes)?;
    let nblocks = match (&m.kind, &m.filterbank) {
        (Kind::Filterbank, Some(fb)) => fb.blocks.len(),
        (Kind::Filterbank, None) => return Err(BsmError::Malformed("filterbank section missing".into())),
        _ => 1,
    };
    let block = block_len(m.dims).ok_or_else(|| BsmError::DimsMismatch(format!("dims {:?} overflow", m.dims)))?;
    let expected = block.checked_mul(nblocks);
    if expected != Some(payload.len()) || m.payload_bytes != payload.len() as u64 {
        return Err(BsmError::DimsMismatch(format!(
            "dims {:?} x {nblocks} block(s) need {} payload bytes, found {}",
            m.dims,
            expected.map_or("overflowing".to_string(), |e| e.to_string()),
            payload.len()
        )));
    }
    let actual = sha256_hex(payload);
    if actual != m.payload_sha256 {
        return Err(BsmError::ChecksumMismatch {
            expected: m.payload_sha256.clone(),
            actual,
        });
    }

    let axis = FrequencyAxis::with_speed_of_sound(m.sample_rate, m.fft_size, m.speed_of_sound)?;
    let distance = SourceDistance::try_from(&m.source_distance)?;
    let grid = || -> Result<DirectionGrid> {
        let dirs = m
            .grid
            .iter()
            .map(|&[t, p]| Direction::try_new(t, p))
            .collect::<Result<Vec<_>>>()?;
        DirectionGrid::new(m.grid_name.clone(), dirs)
    };

    match m.kind {
        Kind::Steering => {
            let g = m
                .geometry
                .as_ref()
                .ok_or_else(|| BsmError::Malformed("steering container without geometry".into()))?;
            let geometry = ArrayGeometry::new(g.positions.clone(), g.labels.clone())?;
            let mut set = SteeringSet::new(geometry, grid()?, axis, distance, decode_block(payload, m.dims)?)?;
            set.convention = m.convention;
            Ok(Dataset::Steering(set))
        }
        Kind::Hrtf => {
            let mut set = HrtfSet::new(grid()?, axis, distance, decode_block(payload, m.dims)?)?;
            set.convention = m.convention;
            Ok(Dataset::Hrtf(set))
        }
        Kind::Filterbank => {
            let fb = m.filterbank.as_ref().expect("checked above");
            let [nf, ne, nm] = m.dims;
            if nf != axis.len() || ne != 2 || nm == 0 {
                return Err(BsmError::DimsMismatch(format!(
                    "filterbank dims {:?}, expected [{}, 2, M>0]",
                    m.dims,
                    axis.len()
                )));
            }
            let mut cubes = payload
                .chunks_exact(block)
                .map(|b| decode_block(b, m.dims))
                .collect::<Result<Vec<_>>>()?;
            let components = match fb.blocks.as_slice() {
                [w] if w == "weights" => None,
                [w, l, g] if w == "weights" && l == "ls" && g == "magls" => {
                    let magls = cubes.pop().expect("3 blocks");
                    let ls = cubes.pop().expect("3 blocks");
                    Some(MixedComponents { ls, magls })
                }
                other => return Err(BsmError::Malformed(format!("filterbank blocks {other:?}"))),
            };
            let fov = match &fb.fov {
                Some(f) => Some(FovSpec::new(
                    f.az_halfwidth_rad,
                    f.el_halfwidth_rad,
                    Direction::try_new(f.center[0], f.center[1])?,
                    f.beta,
                )?),
                None => None,
            };
            let unconverged = fb
                .unconverged
                .iter()
                .map(|(e, b)| match e.as_str() {
                    "l" => Ok((Ear::Left, *b)),
                    "r" => Ok((Ear::Right, *b)),
                    other => Err(BsmError::Malformed(format!("ear tag {other:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            let mut bank = BsmFilterBank::zeros(axis, nm, NoiseModel::new(fb.sigma_s_sq, fb.sigma_n_sq)?);
            bank.weights = cubes.pop().expect("weights block");
            bank.criterion = fb.criterion.parse::<Criterion>()?;
            bank.fov = fov;
            bank.source_distance_design = distance;
            bank.alpha = AlphaSchedule::new(fb.alpha_lo_hz, fb.alpha_hi_hz)?;
            bank.mix_mode = fb.mix_mode.parse::<MixMode>()?;
            bank.components = components;
            bank.unconverged = unconverged;
            bank.provenance = fb.provenance.clone();
            Ok(Dataset::FilterBank(Box::new(bank)))
        }
    }
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_dataset(d)?)?;
    Ok(())
}

pub fn save_dataset_with(d: &Dataset, path: impl AsRef<Path>, provenance: &BTreeMap<String, String>) -> Result<()> {
    std::fs::write(path, encode_dataset_with(d, provenance)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    decode_dataset(&std::fs::read(path)?)
}

fn wrong_kind(expected: Kind, got: Kind) -> BsmError {
    BsmError::Incompatible(format!("expected a {expected:?} container, found {got:?}"))
}

pub fn load_steering(path: impl AsRef<Path>) -> Result<SteeringSet> {
    match load_dataset(path)? {
        Dataset::Steering(s) => Ok(s),
        other => Err(wrong_kind(Kind::Steering, other.kind())),
    }
}

pub fn load_hrtf(path: impl AsRef<Path>) -> Result<HrtfSet> {
    match load_dataset(path)? {
        Dataset::Hrtf(h) => Ok(h),
        other => Err(wrong_kind(Kind::Hrtf, other.kind())),
    }
}

pub fn load_filterbank(path: impl AsRef<Path>) -> Result<BsmFilterBank> {
    match load_dataset(path)? {
        Dataset::FilterBank(b) => Ok(*b),
        other => Err(wrong_kind(Kind::Filterbank, other.kind())),
    }
}
