use std::borrow::Cow;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, VectorField};
use crate::scalar::Real;
use crate::solver::{check_uniform_times, MhdState, RunReport, SnapshotSource};

pub const MAGIC: &[u8; 8] = b"MHDSNAP1";
/// Magic, `n` (u64), box length (f64), time (f64), field count (u64).
pub const HEADER_LEN: usize = 40;
pub const FIELD_COUNT: u64 = 6;
pub const METADATA_FILE: &str = "run.json";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub box_length: f64,
    pub time: f64,
    pub fields: u64,
}

impl SnapshotHeader {
    pub fn payload_len(&self) -> usize {
        FIELD_COUNT as usize * self.n.pow(3) * 8
    }
}

fn word(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().unwrap()
}

fn parse_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!("header truncated: {} of {HEADER_LEN} bytes", bytes.len()),
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format { offset: 0, reason: format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..8])) });
    }
    let n = u64::from_le_bytes(word(bytes, 8));
    let box_length = f64::from_le_bytes(word(bytes, 16));
    let time = f64::from_le_bytes(word(bytes, 24));
    let fields = u64::from_le_bytes(word(bytes, 32));
    if n < 8 || n % 2 == 1 || n > 4096 {
        return Err(Error::Format { offset: 8, reason: format!("unsupported grid size {n}") });
    }
    if !(box_length > 0.0 && box_length.is_finite()) {
        return Err(Error::Format { offset: 16, reason: format!("box length {box_length}") });
    }
    if !time.is_finite() {
        return Err(Error::Format { offset: 24, reason: "time is not finite".into() });
    }
    if fields != FIELD_COUNT {
        return Err(Error::Format { offset: 32, reason: format!("field count {fields}, expected {FIELD_COUNT}") });
    }
    Ok(SnapshotHeader { n: n as usize, box_length, time, fields })
}

/// Serializes `state` as f64 little-endian `u1 u2 u3 b1 b2 b3`, x fastest.
pub fn encode_snapshot<T: Real>(state: &MhdState<T>) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + FIELD_COUNT as usize * g.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(g.n() as u64).to_le_bytes());
    out.extend_from_slice(&g.box_length().as_f64().to_le_bytes());
    out.extend_from_slice(&state.time.as_f64().to_le_bytes());
    out.extend_from_slice(&FIELD_COUNT.to_le_bytes());
    for f in [&state.u, &state.b] {
        for c in f.components() {
            for v in c {
                out.extend_from_slice(&v.as_f64().to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<MhdState<f64>> {
    let h = parse_header(bytes)?;
    let expected = HEADER_LEN + h.payload_len();
    if bytes.len() < expected {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!("payload truncated: expected {expected} bytes for n = {}", h.n),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format { offset: expected as u64, reason: format!("{} trailing bytes", bytes.len() - expected) });
    }
    let g = GridSpec::new(h.n, h.box_length).map_err(|e| Error::Format { offset: 8, reason: e.to_string() })?;
    let len = g.len();
    let mut comps = (0..6).map(|c| {
        let at = HEADER_LEN + c * len * 8;
        (0..len).map(|p| f64::from_le_bytes(word(bytes, at + 8 * p))).collect::<Vec<f64>>()
    });
    let mut next3 = || -> Result<VectorField<f64>> {
        let a = comps.next().unwrap();
        let b = comps.next().unwrap();
        let c = comps.next().unwrap();
        VectorField::new(g, [a, b, c])
    };
    let u = next3()?;
    let b = next3()?;
    MhdState::new(u, b, h.time)
}

pub fn write_snapshot<T: Real>(state: &MhdState<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    f.write_all(&encode_snapshot(state))?;
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<MhdState<f64>> {
    decode_snapshot(&fs::read(path)?)
}

/// Reads only the header of a snapshot file and checks the file length.
pub fn read_header(path: impl AsRef<Path>) -> Result<SnapshotHeader> {
    let mut f = fs::File::open(path)?;
    let total = f.metadata()?.len();
    let mut buf = Vec::with_capacity(HEADER_LEN);
    Read::by_ref(&mut f).take(HEADER_LEN as u64).read_to_end(&mut buf)?;
    let h = parse_header(&buf)?;
    let expected = (HEADER_LEN + h.payload_len()) as u64;
    if total != expected {
        return Err(Error::Format {
            offset: total.min(expected),
            reason: format!("file is {total} bytes, expected {expected}"),
        });
    }
    Ok(h)
}

pub fn snapshot_file_name(k: usize) -> String {
    format!("snap_{k:05}.mhdsnap")
}

/// Sidecar written next to the snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub viscosity: f64,
    pub resistivity: f64,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    #[serde(default)]
    pub config: Option<serde_json::Value>,
    #[serde(default)]
    pub report: Option<RunReport>,
}

/// Streams snapshots into a directory and writes the sidecar on `finish`.
pub struct SnapshotWriter {
    dir: PathBuf,
    meta: RunMetadata,
}

impl SnapshotWriter {
    pub fn create(dir: impl AsRef<Path>, viscosity: f64, resistivity: f64) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let meta = RunMetadata { viscosity, resistivity, times: Vec::new(), files: Vec::new(), config: None, report: None };
        Ok(Self { dir, meta })
    }

    pub fn push<T: Real>(&mut self, state: &MhdState<T>) -> Result<()> {
        let name = snapshot_file_name(self.meta.files.len());
        write_snapshot(state, self.dir.join(&name))?;
        self.meta.times.push(state.time.as_f64());
        self.meta.files.push(name);
        Ok(())
    }

    pub fn finish(mut self, config: Option<serde_json::Value>, report: Option<RunReport>) -> Result<RunMetadata> {
        self.meta.config = config;
        self.meta.report = report;
        fs::write(self.dir.join(METADATA_FILE), serde_json::to_string_pretty(&self.meta)?)?;
        Ok(self.meta)
    }
}

/// Snapshot directory read lazily, one file per `load`.
#[derive(Debug, Clone)]
pub struct SnapshotDir {
    dir: PathBuf,
    pub meta: RunMetadata,
    pub header: SnapshotHeader,
}

impl SnapshotDir {
    /// Opens `dir` and checks every file header against the sidecar.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let meta_path = dir.join(METADATA_FILE);
        if !meta_path.exists() {
            return Err(Error::Precondition(format!("{} has no {METADATA_FILE}", dir.display())));
        }
        let meta: RunMetadata = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        if meta.files.is_empty() || meta.files.len() != meta.times.len() {
            return Err(Error::Precondition(format!(
                "{METADATA_FILE} lists {} files and {} times",
                meta.files.len(),
                meta.times.len()
            )));
        }
        let mut first: Option<SnapshotHeader> = None;
        for (name, &t) in meta.files.iter().zip(&meta.times) {
            let h = read_header(dir.join(name))?;
            if h.time != t {
                return Err(Error::Format { offset: 24, reason: format!("{name}: time {} but sidecar says {t}", h.time) });
            }
            if let Some(f) = first {
                if f.n != h.n || f.box_length != h.box_length {
                    return Err(Error::Format { offset: 8, reason: format!("{name}: grid differs from the first snapshot") });
                }
            } else {
                first = Some(h);
            }
        }
        check_uniform_times(&meta.times)?;
        Ok(Self { dir, meta, header: first.unwrap() })
    }

    pub fn path(&self, k: usize) -> PathBuf {
        self.dir.join(&self.meta.files[k])
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        GridSpec::new(self.header.n, self.header.box_length)
    }
}

impl SnapshotSource<f64> for SnapshotDir {
    fn len(&self) -> usize {
        self.meta.files.len()
    }

    fn time(&self, k: usize) -> f64 {
        self.meta.times[k]
    }

    fn viscosity(&self) -> f64 {
        self.meta.viscosity
    }

    fn resistivity(&self) -> f64 {
        self.meta.resistivity
    }

    fn load(&self, k: usize) -> Result<Cow<'_, MhdState<f64>>> {
        Ok(Cow::Owned(read_snapshot(self.path(k))?))
    }
}
