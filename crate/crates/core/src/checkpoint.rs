//! Binary model checkpoints.
//!
//! Layout: an 8-byte magic (`LCNETCKP`), a little-endian u32 format
//! version, a little-endian u32 manifest byte length, the manifest (UTF-8
//! `key=value` lines), then every parameter as little-endian f64 in the
//! canonical flat order (forward cell W_i,W_f,W_g,W_o, U_i..U_o, b_i..b_o;
//! backward cell the same; dense weights row-major; dense bias). Fixed byte
//! order and tensor order make checkpoints portable across platforms, and
//! a save/load round trip is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

use crate::model::ModelParams;
use crate::preprocess::PreprocessConfig;

const MAGIC: &[u8; 8] = b"LCNETCKP";
pub const FORMAT_VERSION: u32 = 1;
/// Manifests are a handful of short lines; anything bigger is corrupt.
const MAX_MANIFEST_LEN: u32 = 1 << 20;
const MAX_HIDDEN_SIZE: usize = 1 << 16;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported checkpoint format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// A trained model plus the preprocessing settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub params: ModelParams,
    /// Padded sequence length the model expects.
    pub sequence_length: usize,
    /// Time divisor used during preprocessing.
    pub time_scale: f64,
    /// Training seed, recorded for provenance.
    pub seed: u64,
}

impl ModelCheckpoint {
    /// Preprocessing configuration matching this model, with an optional
    /// evaluation-time truncation horizon.
    pub fn preprocess_config(&self, horizon_days: Option<f64>) -> PreprocessConfig {
        PreprocessConfig {
            target_len: self.sequence_length,
            time_scale: self.time_scale,
            horizon_days,
        }
    }

    fn manifest(&self) -> String {
        format!(
            "hidden_size={}\nfeature_count={}\nsequence_length={}\nclass_count={}\nseed={}\ntime_scale={}\ncreated_by=lcnet {}\n",
            self.params.hidden_size,
            crate::preprocess::NUM_FEATURES,
            self.sequence_length,
            crate::ingest::NUM_CLASSES,
            self.seed,
            self.time_scale,
            env!("CARGO_PKG_VERSION"),
        )
    }

    pub fn write_to<W: Write>(&self, mut writer: W) -> Result<(), CheckpointError> {
        let manifest = self.manifest();
        writer.write_all(MAGIC)?;
        writer.write_all(&FORMAT_VERSION.to_le_bytes())?;
        writer.write_all(&(manifest.len() as u32).to_le_bytes())?;
        writer.write_all(manifest.as_bytes())?;
        for value in self.params.flatten() {
            writer.write_all(&value.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut reader: R) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        read_exact(&mut reader, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(CheckpointError::Corrupt("bad magic bytes".into()));
        }
        let mut word = [0u8; 4];
        read_exact(&mut reader, &mut word, "format version")?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version { found: version });
        }
        read_exact(&mut reader, &mut word, "manifest length")?;
        let manifest_len = u32::from_le_bytes(word);
        if manifest_len > MAX_MANIFEST_LEN {
            return Err(CheckpointError::Corrupt(format!(
                "manifest length {manifest_len} is implausible"
            )));
        }
        let mut manifest_bytes = vec![0u8; manifest_len as usize];
        read_exact(&mut reader, &mut manifest_bytes, "manifest")?;
        let manifest = String::from_utf8(manifest_bytes)
            .map_err(|_| CheckpointError::Corrupt("manifest is not UTF-8".into()))?;

        let hidden_size = manifest_field(&manifest, "hidden_size")?;
        let feature_count: usize = manifest_field(&manifest, "feature_count")?;
        let sequence_length = manifest_field(&manifest, "sequence_length")?;
        let class_count: usize = manifest_field(&manifest, "class_count")?;
        let seed: u64 = manifest_field(&manifest, "seed")?;
        let time_scale: f64 = manifest_field(&manifest, "time_scale")?;
        if feature_count != crate::preprocess::NUM_FEATURES {
            return Err(CheckpointError::Corrupt(format!(
                "feature_count {feature_count} does not match this build"
            )));
        }
        if class_count != crate::ingest::NUM_CLASSES {
            return Err(CheckpointError::Corrupt(format!(
                "class_count {class_count} does not match this build"
            )));
        }
        if hidden_size == 0 || hidden_size > MAX_HIDDEN_SIZE {
            return Err(CheckpointError::Corrupt(format!(
                "hidden_size {hidden_size} out of range"
            )));
        }
        if sequence_length == 0 {
            return Err(CheckpointError::Corrupt("sequence_length is zero".into()));
        }
        if !(time_scale.is_finite() && time_scale > 0.0) {
            return Err(CheckpointError::Corrupt(format!(
                "time_scale {time_scale} must be positive"
            )));
        }

        let mut params = ModelParams::zeros(hidden_size);
        let count = params.param_count();
        let mut payload = vec![0u8; count * 8];
        read_exact(&mut reader, &mut payload, "parameter payload")?;
        let flat: Vec<f64> = payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        params.unflatten_from(&flat);

        let mut probe = [0u8; 1];
        if reader.read(&mut probe)? != 0 {
            return Err(CheckpointError::Corrupt(
                "trailing bytes after the parameter payload".into(),
            ));
        }

        Ok(ModelCheckpoint {
            params,
            sequence_length,
            time_scale,
            seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.write_to(&mut writer)?;
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_exact<R: Read>(reader: &mut R, buf: &mut [u8], what: &str) -> Result<(), CheckpointError> {
    reader.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            CheckpointError::Corrupt(format!("truncated while reading {what}"))
        } else {
            CheckpointError::Io(e)
        }
    })
}

fn manifest_field<T: std::str::FromStr>(manifest: &str, key: &str) -> Result<T, CheckpointError> {
    let value = manifest
        .lines()
        .find_map(|line| line.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| CheckpointError::Corrupt(format!("manifest is missing {key}")))?;
    value
        .parse()
        .map_err(|_| CheckpointError::Corrupt(format!("manifest {key}={value} is unreadable")))
}
