//! Durable on-disk store of API responses.
//!
//! Layout of a store directory:
//!
//! ```text
//! <dir>/index.tsv                          append-only manifest
//! <dir>/species%2Fmatch%3Fname%3DApis...   one body file per request key
//! ```
//!
//! Manifest lines are `request_key \t filename \t fetched_at [\t note]`;
//! lines starting with `#` are comments. The last line for a key wins. A
//! body is committed with write-then-rename before its manifest line is
//! appended, and a trailing line without a newline is ignored, so a store
//! closed mid-write never yields a torn entry.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};
use percent_encoding::utf8_percent_encode;

use crate::gbif::STRICT;

pub const MANIFEST: &str = "index.tsv";
const MANIFEST_HEADER: &str = "# taxowl cache manifest v1\n";
const MAX_FILENAME: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache store I/O error at {path}: {source}")]
    StoreIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cache store {0} does not exist")]
    Missing(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::StoreIo { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub request_key: String,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
    pub backbone_note: Option<String>,
}

impl CacheEntry {
    /// Entry stamped with the current time.
    pub fn new(request_key: impl Into<String>, body: impl Into<Vec<u8>>) -> Self {
        CacheEntry {
            request_key: request_key.into(),
            body: body.into(),
            fetched_at: Utc::now(),
            backbone_note: None,
        }
    }
}

/// One manifest record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRecord {
    pub request_key: String,
    pub filename: String,
    pub fetched_at: DateTime<Utc>,
    pub note: Option<String>,
}

pub struct CacheStore {
    dir: PathBuf,
    index: RwLock<BTreeMap<String, IndexRecord>>,
    writer: Mutex<()>,
    tmp_counter: AtomicU64,
}

impl CacheStore {
    /// Opens a store, creating the directory and manifest if needed.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let manifest = dir.join(MANIFEST);
        if !manifest.exists() {
            fs::write(&manifest, MANIFEST_HEADER).map_err(io_err(&manifest))?;
        }
        Self::load(dir)
    }

    /// Opens a store that must already exist (fixture replay).
    pub fn open_existing(dir: impl AsRef<Path>) -> Result<Self, CacheError> {
        let dir = dir.as_ref();
        if !dir.join(MANIFEST).is_file() {
            return Err(CacheError::Missing(dir.to_path_buf()));
        }
        Self::load(dir)
    }

    fn load(dir: &Path) -> Result<Self, CacheError> {
        let manifest = dir.join(MANIFEST);
        let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
        Ok(CacheStore {
            dir: dir.to_path_buf(),
            index: RwLock::new(parse_manifest(&text)),
            writer: Mutex::new(()),
            tmp_counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Returns the entry if present and younger than `max_age`
    /// (`None` = never expires).
    pub fn get(&self, request_key: &str, max_age: Option<Duration>) -> Result<Option<CacheEntry>, CacheError> {
        let record = match self.index.read().unwrap().get(request_key) {
            Some(r) => r.clone(),
            None => return Ok(None),
        };
        if let Some(max_age) = max_age {
            let age = Utc::now().signed_duration_since(record.fetched_at);
            let fresh = age.to_std().map(|a| a < max_age).unwrap_or(true);
            if !fresh || max_age.is_zero() {
                return Ok(None);
            }
        }
        let path = self.dir.join(&record.filename);
        let body = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        Ok(Some(CacheEntry {
            request_key: record.request_key,
            body,
            fetched_at: record.fetched_at,
            backbone_note: record.note,
        }))
    }

    /// Stores an entry, replacing any earlier entry for the same key.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), CacheError> {
        let _guard = self.writer.lock().unwrap();
        let filename = entry_filename(&entry.request_key);
        let target = self.dir.join(&filename);
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.tmp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = File::create(&tmp).map_err(io_err(&tmp))?;
            f.write_all(&entry.body).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        fs::rename(&tmp, &target).map_err(io_err(&target))?;

        let record = IndexRecord {
            request_key: entry.request_key.clone(),
            filename,
            fetched_at: entry.fetched_at,
            note: entry.backbone_note.as_deref().map(sanitize).filter(|n| !n.is_empty()),
        };
        let manifest = self.dir.join(MANIFEST);
        let mut f = OpenOptions::new().append(true).create(true).open(&manifest).map_err(io_err(&manifest))?;
        // single write so concurrent appenders never interleave within a line
        f.write_all(format_record(&record).as_bytes()).map_err(io_err(&manifest))?;
        f.sync_data().map_err(io_err(&manifest))?;
        self.index.write().unwrap().insert(record.request_key.clone(), record);
        Ok(())
    }

    /// Manifest records, ordered by request key.
    pub fn records(&self) -> Vec<IndexRecord> {
        self.index.read().unwrap().values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.index.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes every entry and resets the manifest.
    pub fn clear(&self) -> Result<usize, CacheError> {
        let _guard = self.writer.lock().unwrap();
        let mut index = self.index.write().unwrap();
        let removed = index.len();
        for record in index.values() {
            let path = self.dir.join(&record.filename);
            match fs::remove_file(&path) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(io_err(&path)(e)),
            }
        }
        index.clear();
        let manifest = self.dir.join(MANIFEST);
        let tmp = self.dir.join(".tmp-manifest");
        fs::write(&tmp, MANIFEST_HEADER).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &manifest).map_err(io_err(&manifest))?;
        Ok(removed)
    }
}

/// File name of a body: the request key percent-encoded again so that `/`
/// and `?` become file-system safe. Overlong names keep a readable prefix
/// and gain a hash suffix.
pub fn entry_filename(request_key: &str) -> String {
    let encoded = utf8_percent_encode(request_key, STRICT).to_string();
    if encoded.len() <= MAX_FILENAME {
        return encoded;
    }
    let mut cut = MAX_FILENAME - 17;
    while !encoded.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{}-{:016x}", &encoded[..cut], fnv1a(request_key.as_bytes()))
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn sanitize(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ").trim().to_string()
}

fn format_record(r: &IndexRecord) -> String {
    let mut line = format!(
        "{}\t{}\t{}",
        r.request_key,
        r.filename,
        r.fetched_at.to_rfc3339_opts(SecondsFormat::Secs, true)
    );
    if let Some(note) = &r.note {
        line.push('\t');
        line.push_str(note);
    }
    line.push('\n');
    line
}

fn parse_manifest(text: &str) -> BTreeMap<String, IndexRecord> {
    let mut index = BTreeMap::new();
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    for line in complete.lines() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(key), Some(filename), Some(stamp)) = (fields.next(), fields.next(), fields.next()) else {
            continue;
        };
        let Ok(fetched_at) = DateTime::parse_from_rfc3339(stamp) else {
            continue;
        };
        let note = fields.next().map(str::to_string).filter(|n| !n.is_empty());
        index.insert(
            key.to_string(),
            IndexRecord {
                request_key: key.to_string(),
                filename: filename.to_string(),
                fetched_at: fetched_at.with_timezone(&Utc),
                note,
            },
        );
    }
    index
}
