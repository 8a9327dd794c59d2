//! Append-only store of calibrated parameter sets.
//!
//! One JSON record per line in `records.jsonl` inside the store directory.
//! Writers take an exclusive lock on `records.lock`; readers parse the file
//! as it is and never block.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{
    calibrate, calibrate_tenor, CalibrationOptions, CalibrationResult, CalibrationTarget, FixSet, TenorRules,
};
use crate::error::{Error, Result};
use crate::fx::{Conventions, TenorQuote};
use crate::model::{MarketSlice, Model, ModelKind};

pub const RECORDS_FILE: &str = "records.jsonl";
const LOCK_FILE: &str = "records.lock";

/// Hex SHA-256 of a quote file's bytes.
pub fn quote_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TenorParams {
    pub tenor: String,
    pub expiry: f64,
    pub params: Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoredParams {
    Single(Model),
    PerTenor(Vec<TenorParams>),
}

impl StoredParams {
    fn models(&self) -> Vec<&Model> {
        match self {
            StoredParams::Single(m) => vec![m],
            StoredParams::PerTenor(v) => v.iter().map(|t| &t.params).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub label: String,
    pub rmse: f64,
    pub feller: Option<f64>,
    pub converged: bool,
}

impl Diagnostic {
    pub fn from_result(label: impl Into<String>, r: &CalibrationResult) -> Self {
        Self {
            label: label.into(),
            rmse: r.rmse,
            feller: r.feller,
            converged: r.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    /// Assigned by [`ParamStore::save`].
    #[serde(default)]
    pub id: u64,
    pub model_kind: ModelKind,
    pub params: StoredParams,
    pub timestamp: DateTime<Utc>,
    pub quote_digest: String,
    pub strategy: String,
    pub diagnostics: Vec<Diagnostic>,
    /// Set when the quotes supplied at save time hash differently from
    /// `quote_digest`.
    #[serde(default)]
    pub digest_mismatch: bool,
}

impl ParamRecord {
    pub fn validate(&self) -> Result<()> {
        if self.quote_digest.is_empty() {
            return Err(Error::Domain("record has an empty quote digest".into()));
        }
        let models = self.params.models();
        if models.is_empty() {
            return Err(Error::Domain("record holds no parameters".into()));
        }
        for m in models {
            if m.kind() != self.model_kind {
                return Err(Error::Domain(format!(
                    "record declares {} but holds {} parameters",
                    self.model_kind,
                    m.kind()
                )));
            }
            m.validate()?;
        }
        Ok(())
    }
}

pub struct ParamStore {
    dir: PathBuf,
    write: Mutex<()>,
}

fn storage(context: &str, path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Storage(format!("{context} {}: {e}", path.display()))
}

impl ParamStore {
    /// Opens (creating if needed) the store rooted at `dir`.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| storage("cannot create store directory", &dir, e))?;
        Ok(Self {
            dir,
            write: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS_FILE)
    }

    /// All records in save order.
    pub fn list(&self) -> Result<Vec<ParamRecord>> {
        let path = self.records_path();
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(storage("cannot open", &path, e)),
        };
        let mut out = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| storage("cannot read", &path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ParamRecord =
                serde_json::from_str(&line).map_err(|e| storage(&format!("line {} of", n + 1), &path, e))?;
            out.push(rec);
        }
        Ok(out)
    }

    /// Appends `record` and returns its id. When `current_digest` is given and
    /// differs from the record's digest, the record is stored flagged.
    pub fn save(&self, record: &ParamRecord, current_digest: Option<&str>) -> Result<u64> {
        record.validate()?;
        let _guard = self.write.lock().unwrap_or_else(|p| p.into_inner());
        let lock_path = self.dir.join(LOCK_FILE);
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(|e| storage("cannot open lock", &lock_path, e))?;
        lock.lock().map_err(|e| storage("cannot lock", &lock_path, e))?;

        let id = self.list()?.iter().map(|r| r.id).max().unwrap_or(0) + 1;
        let mut rec = record.clone();
        rec.id = id;
        rec.digest_mismatch = current_digest.is_some_and(|d| d != rec.quote_digest);
        let mut line = serde_json::to_string(&rec).map_err(|e| Error::Storage(format!("cannot encode record: {e}")))?;
        line.push('\n');

        let path = self.records_path();
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| storage("cannot open", &path, e))?;
        file.write_all(line.as_bytes())
            .map_err(|e| storage("cannot append to", &path, e))?;
        file.sync_all().map_err(|e| storage("cannot sync", &path, e))?;
        Ok(id)
    }

    pub fn load(&self, id: u64) -> Result<ParamRecord> {
        self.list()?
            .into_iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::NotFound(format!("record {id} in {}", self.dir.display())))
    }

    /// Most recent record of `kind` at or before `as_of`; later ids win ties.
    pub fn latest(&self, kind: ModelKind, as_of: Option<DateTime<Utc>>) -> Result<ParamRecord> {
        self.list()?
            .into_iter()
            .filter(|r| r.model_kind == kind && as_of.is_none_or(|t| r.timestamp <= t))
            .max_by_key(|r| (r.timestamp, r.id))
            .ok_or_else(|| {
                let when = as_of
                    .map(|t| format!(" at or before {}", t.to_rfc3339()))
                    .unwrap_or_default();
                Error::NotFound(format!("no {kind} record{when} in {}", self.dir.display()))
            })
    }
}

/// What a live recalibration should fit.
#[derive(Debug, Clone, PartialEq)]
pub enum LiveRequest {
    /// One tenor by label, with maturity-scaled mean reversion.
    Tenor { label: String, rules: TenorRules },
    /// All quotes at once.
    Surface {
        kind: ModelKind,
        fix: FixSet,
        init: Option<Model>,
    },
}

/// Recalibrates at valuation time without reading or writing any store.
pub fn live_calibrate(
    quotes: &[(TenorQuote, MarketSlice)],
    conv: &Conventions,
    request: &LiveRequest,
    opts: &CalibrationOptions,
) -> Result<CalibrationResult> {
    if quotes.is_empty() {
        return Err(Error::Domain("no quotes".into()));
    }
    match request {
        LiveRequest::Tenor { label, rules } => {
            let (q, s) = quotes
                .iter()
                .find(|(q, _)| &q.tenor_label == label)
                .ok_or_else(|| Error::NotFound(format!("tenor `{label}`")))?;
            calibrate_tenor(q, s, rules, conv, opts)
        }
        LiveRequest::Surface { kind, fix, init } => {
            let target = CalibrationTarget::from_quotes(quotes, conv)?;
            calibrate(&target, *kind, fix, init.as_ref(), opts)
        }
    }
}
