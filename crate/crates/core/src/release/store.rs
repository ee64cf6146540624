//! On-disk release store.
//!
//! ```text
//! state.json            next sequence number
//! manifests/<id>.json   sealed release manifests
//! tombstones/tombstones.jsonl
//! documents/<xx>.jsonl  documents sharded by the first two hex digits of doc_id
//! sources/<digest>.html decoded pages that license evidence refers to
//! indexes/urls.jsonl    source URL -> doc_id
//! signals/log.jsonl     preference signals
//! configs/<hash>.json   pipeline configurations
//! datasheets/<id>.md    datasheets written at assembly
//! runs/                 run reports
//! ```
//!
//! Readers never lock. Mutations go through a [`StoreWriter`], which holds
//! an exclusive lock file for its lifetime.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::manifest::ReleaseManifest;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::hash::is_hex_digest;
use crate::preference::SignalLog;
use crate::provenance::DocumentRecord;
use crate::scanner::SourceSnapshot;

const DIRS: [&str; 9] = [
    "manifests",
    "tombstones",
    "documents",
    "sources",
    "indexes",
    "signals",
    "configs",
    "datasheets",
    "runs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalReason {
    Optout,
    LicenseDispute,
    SensitiveContent,
    Other,
}

impl RemovalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RemovalReason::Optout => "optout",
            RemovalReason::LicenseDispute => "license-dispute",
            RemovalReason::SensitiveContent => "sensitive-content",
            RemovalReason::Other => "other",
        }
    }
}

impl std::str::FromStr for RemovalReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optout" => Ok(RemovalReason::Optout),
            "license-dispute" => Ok(RemovalReason::LicenseDispute),
            "sensitive-content" => Ok(RemovalReason::SensitiveContent),
            "other" => Ok(RemovalReason::Other),
            _ => Err(Error::InvalidArgument(format!("unknown removal reason `{s}`"))),
        }
    }
}

/// Permanent record that a document was removed. Keeps the hash, never the
/// text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tombstone {
    pub doc_id: String,
    pub reason: RemovalReason,
    /// Id of the preference signal that requested the removal.
    pub request_ref: String,
    pub created_at: DateTime<Utc>,
    pub seq: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct StoreState {
    format_version: u32,
    next_seq: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PutReport {
    pub added: usize,
    pub already_present: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct UrlIndexEntry {
    url: String,
    doc_id: String,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Decode(format!("{} line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

/// Writes through a temporary file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn jsonl_bytes<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("serializable");
        out.push(b'\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    /// Creates the layout if missing and opens the store.
    pub fn init(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        for dir in DIRS {
            let p = root.join(dir);
            fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        }
        let state = root.join("state.json");
        if !state.exists() {
            let s = StoreState {
                format_version: 1,
                next_seq: 1,
            };
            write_atomic(&state, &serde_json::to_vec(&s)?)?;
        }
        Ok(Store { root })
    }

    /// Opens an existing store.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        if !root.join("state.json").is_file() {
            return Err(Error::NotFound(format!("no release store at {}", root.display())));
        }
        Ok(Store { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn writer(&self) -> Result<StoreWriter<'_>> {
        let lock = self.root.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(StoreWriter { store: self, lock })
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => Err(Error::Locked(lock)),
            Err(e) => Err(Error::io(&lock, e)),
        }
    }

    fn shard_path(&self, doc_id: &str) -> PathBuf {
        let prefix = doc_id.get(..2).unwrap_or("__");
        self.root.join("documents").join(format!("{prefix}.jsonl"))
    }

    fn source_path(&self, digest: &str) -> PathBuf {
        self.root.join("sources").join(format!("{digest}.html"))
    }

    pub fn document(&self, doc_id: &str) -> Result<Option<DocumentRecord>> {
        if !is_hex_digest(doc_id) {
            return Ok(None);
        }
        let docs: Vec<DocumentRecord> = read_jsonl(&self.shard_path(doc_id))?;
        Ok(docs.into_iter().find(|d| d.doc_id == doc_id))
    }

    /// All stored documents keyed by doc_id.
    pub fn documents(&self) -> Result<BTreeMap<String, DocumentRecord>> {
        let mut out = BTreeMap::new();
        for path in self.list("documents", "jsonl")? {
            for d in read_jsonl::<DocumentRecord>(&path)? {
                out.insert(d.doc_id.clone(), d);
            }
        }
        Ok(out)
    }

    pub fn source(&self, digest: &str) -> Result<Option<String>> {
        if !is_hex_digest(digest) {
            return Ok(None);
        }
        let path = self.source_path(digest);
        match fs::read_to_string(&path) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn url_index(&self) -> Result<BTreeMap<String, BTreeSet<String>>> {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for e in read_jsonl::<UrlIndexEntry>(&self.root.join("indexes/urls.jsonl"))? {
            out.entry(e.url).or_default().insert(e.doc_id);
        }
        Ok(out)
    }

    pub fn tombstones(&self) -> Result<Vec<Tombstone>> {
        read_jsonl(&self.root.join("tombstones/tombstones.jsonl"))
    }

    pub fn tombstone_map(&self) -> Result<BTreeMap<String, Tombstone>> {
        Ok(self.tombstones()?.into_iter().map(|t| (t.doc_id.clone(), t)).collect())
    }

    pub fn signals(&self) -> Result<SignalLog> {
        let path = self.root.join("signals/log.jsonl");
        match File::open(&path) {
            Ok(f) => SignalLog::read_jsonl(BufReader::new(f)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(SignalLog::new()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn config(&self, hash: &str) -> Result<Option<PipelineConfig>> {
        if !is_hex_digest(hash) {
            return Ok(None);
        }
        let path = self.root.join("configs").join(format!("{hash}.json"));
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    /// Files in `dir` with the given extension, sorted by name.
    pub fn list(&self, dir: &str, ext: &str) -> Result<Vec<PathBuf>> {
        let path = self.root.join(dir);
        let entries = match fs::read_dir(&path) {
            Ok(e) => e,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(path, e)),
        };
        let mut out = Vec::new();
        for entry in entries {
            let p = entry.map_err(|e| Error::io(&path, e))?.path();
            if p.extension().is_some_and(|e| e == ext) {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Raw bytes of every manifest file, for integrity checks.
    pub fn manifest_files(&self) -> Result<Vec<(PathBuf, Vec<u8>)>> {
        self.list("manifests", "json")?
            .into_iter()
            .map(|p| fs::read(&p).map(|b| (p.clone(), b)).map_err(|e| Error::io(&p, e)))
            .collect()
    }

    /// Manifests that parse, ordered by sequence number. Integrity is not
    /// checked here.
    pub fn manifests(&self) -> Result<Vec<ReleaseManifest>> {
        let mut out: Vec<ReleaseManifest> = self
            .manifest_files()?
            .into_iter()
            .filter_map(|(_, bytes)| serde_json::from_slice(&bytes).ok())
            .collect();
        out.sort_by_key(|m| m.seq);
        Ok(out)
    }

    /// Finds a release by id or label and verifies it.
    pub fn release(&self, reference: &str) -> Result<ReleaseManifest> {
        let path = self.root.join("manifests").join(format!("{reference}.json"));
        let found = if is_hex_digest(reference) && path.is_file() {
            Some(fs::read(&path).map_err(|e| Error::io(&path, e))?)
        } else {
            self.manifest_files()?.into_iter().find_map(|(_, bytes)| {
                serde_json::from_slice::<ReleaseManifest>(&bytes)
                    .ok()
                    .filter(|m| m.label == reference || m.release_id == reference)
                    .map(|_| bytes)
            })
        };
        let bytes = found.ok_or_else(|| Error::NotFound(format!("release `{reference}`")))?;
        ReleaseManifest::verify_bytes(&bytes)
            .map_err(|p| Error::InvalidState(format!("release `{reference}` fails verification: {}", p.join("; "))))
    }

    fn state(&self) -> Result<StoreState> {
        let path = self.root.join("state.json");
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Exclusive write access to a store. Dropping it releases the lock.
#[derive(Debug)]
pub struct StoreWriter<'a> {
    store: &'a Store,
    lock: PathBuf,
}

impl Drop for StoreWriter<'_> {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

impl<'a> StoreWriter<'a> {
    pub fn store(&self) -> &'a Store {
        self.store
    }

    pub(crate) fn take_seq(&self) -> Result<u64> {
        let mut state = self.store.state()?;
        let seq = state.next_seq;
        state.next_seq += 1;
        write_atomic(&self.store.root.join("state.json"), &serde_json::to_vec(&state)?)?;
        Ok(seq)
    }

    /// Adds documents and their source snapshots. A doc_id already stored is
    /// left untouched, as is a tombstoned one.
    pub fn put_documents(
        &self,
        docs: impl IntoIterator<Item = (DocumentRecord, Option<SourceSnapshot>)>,
    ) -> Result<PutReport> {
        let tombstoned = self.store.tombstone_map()?;
        let mut by_shard: BTreeMap<PathBuf, Vec<(DocumentRecord, Option<SourceSnapshot>)>> = BTreeMap::new();
        let mut report = PutReport::default();
        for (doc, source) in docs {
            if tombstoned.contains_key(&doc.doc_id) {
                return Err(Error::ReleaseRejected {
                    reason: "document was removed and cannot be re-added".into(),
                    doc_ids: vec![doc.doc_id],
                });
            }
            by_shard.entry(self.store.shard_path(&doc.doc_id)).or_default().push((doc, source));
        }
        let mut new_urls = Vec::new();
        for (shard, incoming) in by_shard {
            let mut existing: BTreeMap<String, DocumentRecord> = read_jsonl::<DocumentRecord>(&shard)?
                .into_iter()
                .map(|d| (d.doc_id.clone(), d))
                .collect();
            for (doc, source) in incoming {
                if existing.contains_key(&doc.doc_id) {
                    report.already_present += 1;
                    continue;
                }
                if let Some(src) = source {
                    let path = self.store.source_path(&src.digest);
                    if !path.exists() {
                        write_atomic(&path, src.content.as_bytes())?;
                    }
                }
                new_urls.push(UrlIndexEntry {
                    url: doc.source_url.clone(),
                    doc_id: doc.doc_id.clone(),
                });
                existing.insert(doc.doc_id.clone(), doc);
                report.added += 1;
            }
            let docs: Vec<_> = existing.into_values().collect();
            write_atomic(&shard, &jsonl_bytes(&docs))?;
        }
        if !new_urls.is_empty() {
            let path = self.store.root.join("indexes/urls.jsonl");
            let mut entries: BTreeSet<(String, String)> = read_jsonl::<UrlIndexEntry>(&path)?
                .into_iter()
                .map(|e| (e.url, e.doc_id))
                .collect();
            entries.extend(new_urls.into_iter().map(|e| (e.url, e.doc_id)));
            let entries: Vec<_> = entries.into_iter().map(|(url, doc_id)| UrlIndexEntry { url, doc_id }).collect();
            write_atomic(&path, &jsonl_bytes(&entries))?;
        }
        Ok(report)
    }

    /// Deletes a document's text and any source snapshot no other document
    /// refers to.
    pub(crate) fn delete_document(&self, doc_id: &str) -> Result<()> {
        let shard = self.store.shard_path(doc_id);
        let mut docs: Vec<DocumentRecord> = read_jsonl(&shard)?;
        let Some(pos) = docs.iter().position(|d| d.doc_id == doc_id) else {
            return Ok(());
        };
        let removed = docs.remove(pos);
        write_atomic(&shard, &jsonl_bytes(&docs))?;
        let digests: BTreeSet<&str> = removed
            .licenses
            .iter()
            .map(|l| l.evidence().input_digest.as_str())
            .collect();
        if digests.is_empty() {
            return Ok(());
        }
        let still_used: BTreeSet<String> = self
            .store
            .documents()?
            .values()
            .flat_map(|d| d.licenses.iter().map(|l| l.evidence().input_digest.clone()))
            .collect();
        for digest in digests {
            if !still_used.contains(digest) && is_hex_digest(digest) {
                let path = self.store.source_path(digest);
                match fs::remove_file(&path) {
                    Ok(()) => {}
                    Err(e) if e.kind() == ErrorKind::NotFound => {}
                    Err(e) => return Err(Error::io(path, e)),
                }
            }
        }
        Ok(())
    }

    pub(crate) fn append_tombstone(&self, t: &Tombstone) -> Result<()> {
        let path = self.store.root.join("tombstones/tombstones.jsonl");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let mut line = serde_json::to_vec(t)?;
        line.push(b'\n');
        f.write_all(&line).map_err(|e| Error::io(&path, e))
    }

    /// Appends signals not already in the log. Returns how many were new.
    pub fn append_signals(&self, signals: &SignalLog) -> Result<usize> {
        let existing = self.store.signals()?;
        let fresh: Vec<_> = signals
            .signals()
            .iter()
            .filter(|s| !existing.contains(&s.id()))
            .cloned()
            .collect();
        if fresh.is_empty() {
            return Ok(0);
        }
        let path = self.store.root.join("signals/log.jsonl");
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        f.write_all(&jsonl_bytes(&fresh)).map_err(|e| Error::io(&path, e))?;
        Ok(fresh.len())
    }

    pub fn save_config(&self, config: &PipelineConfig) -> Result<String> {
        let hash = config.hash();
        let path = self.store.root.join("configs").join(format!("{hash}.json"));
        if !path.exists() {
            let mut bytes = serde_json::to_vec_pretty(config)?;
            bytes.push(b'\n');
            write_atomic(&path, &bytes)?;
        }
        Ok(hash)
    }

    pub(crate) fn write_manifest(&self, m: &ReleaseManifest) -> Result<()> {
        let path = self.store.root.join("manifests").join(format!("{}.json", m.release_id));
        if path.exists() {
            return Err(Error::InvalidState(format!("manifest {} already exists", m.release_id)));
        }
        write_atomic(&path, &m.to_bytes())
    }

    pub(crate) fn write_file(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.store.root.join(rel), bytes)
    }
}
