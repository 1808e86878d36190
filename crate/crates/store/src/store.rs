use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicU8, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use tracing::{debug, warn};

use crate::error::StoreError;
use crate::frame::{scan, Mutation, Record};
use crate::key::{validate_id, Namespace, RecordKey};
use crate::Result;

const SEGMENT: &str = "segment-000000.log";
const MANIFEST: &str = "MANIFEST";
const COMMITS: &str = "COMMITS";

const OPEN: u8 = 0;
const CLOSED: u8 = 1;
const FAILED: u8 = 2;

/// Crash injection for tests: the write boundary numbered `fail_at`
/// (counting from zero across every frame write) writes only a prefix of its
/// frame and then fails, poisoning the handle as a crash would.
#[derive(Debug, Clone)]
pub struct FaultPlan {
    seen: Arc<AtomicU64>,
    fail_at: u64,
}

impl FaultPlan {
    pub fn fail_at(boundary: u64) -> Self {
        FaultPlan {
            seen: Arc::new(AtomicU64::new(0)),
            fail_at: boundary,
        }
    }

    /// Counts boundaries without ever failing.
    pub fn count_only() -> Self {
        Self::fail_at(u64::MAX)
    }

    /// Number of write boundaries reached so far (including a failed one).
    pub fn boundaries_seen(&self) -> u64 {
        self.seen.load(Ordering::SeqCst)
    }

    pub fn triggered(&self) -> bool {
        self.boundaries_seen() > self.fail_at
    }

    fn hit(&self) -> bool {
        self.seen.fetch_add(1, Ordering::SeqCst) == self.fail_at
    }
}

#[derive(Debug, Clone)]
pub struct StoreOptions {
    /// fsync after every frame. Tests on tmpfs may turn this off.
    pub sync: bool,
    pub faults: Option<FaultPlan>,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions {
            sync: true,
            faults: None,
        }
    }
}

/// An ordered batch of puts and deletes applied atomically.
#[derive(Debug, Clone, Default)]
pub struct Transaction {
    ops: Vec<(RecordKey, Option<Vec<u8>>)>,
}

impl Transaction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(mut self, key: RecordKey, value: impl Into<Vec<u8>>) -> Self {
        self.ops.push((key, Some(value.into())));
        self
    }

    pub fn delete(mut self, key: RecordKey) -> Self {
        self.ops.push((key, None));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }
}

#[derive(Default)]
struct Index {
    kv: Vec<BTreeMap<String, Vec<u8>>>,
    streams: Vec<BTreeMap<String, Vec<Vec<u8>>>>,
}

struct Inner {
    dir: PathBuf,
    opts: StoreOptions,
    segments: Vec<Mutex<File>>,
    commits: Mutex<File>,
    index: RwLock<Index>,
    next_txn: AtomicU64,
    state: AtomicU8,
}

/// Handle to an open store. Cheap to clone; all clones share one engine.
#[derive(Clone)]
pub struct Store {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store").field("dir", &self.inner.dir).finish()
    }
}

fn open_rw(path: &Path) -> std::io::Result<File> {
    OpenOptions::new().read(true).write(true).create(true).truncate(false).open(path)
}

/// Reads a log file, truncates any torn tail and leaves the cursor at the end.
fn recover_file(path: &Path) -> Result<(File, Vec<Record>)> {
    let mut file = open_rw(path)?;
    let mut data = Vec::new();
    file.read_to_end(&mut data)?;
    let (records, valid) = scan(&data);
    if valid < data.len() {
        warn!(path = %path.display(), dropped = data.len() - valid, "truncating torn tail");
        file.set_len(valid as u64)?;
        file.sync_all()?;
    }
    file.seek(SeekFrom::End(0))?;
    Ok((file, records))
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Store> {
        Self::open_with(dir, StoreOptions::default())
    }

    pub fn open_with(dir: impl AsRef<Path>, opts: StoreOptions) -> Result<Store> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;

        let (commits, commit_records) = recover_file(&dir.join(COMMITS))?;
        let committed: HashSet<u64> = commit_records
            .iter()
            .filter_map(|r| match r {
                Record::Commit { txn } => Some(*txn),
                _ => None,
            })
            .collect();
        let mut max_txn = committed.iter().copied().max().unwrap_or(0);

        let mut index = Index::default();
        let mut segments = Vec::new();
        for ns in Namespace::ALL {
            let ns_dir = dir.join(ns.as_str());
            fs::create_dir_all(&ns_dir)?;
            let manifest = ns_dir.join(MANIFEST);
            if !manifest.exists() {
                fs::write(&manifest, format!("geolab-store 1\nsegment {SEGMENT}\n"))?;
            }
            let (file, records) = recover_file(&ns_dir.join(SEGMENT))?;
            let mut kv = BTreeMap::new();
            let mut streams: BTreeMap<String, Vec<Vec<u8>>> = BTreeMap::new();
            for rec in records {
                match rec {
                    Record::Txn { txn, mutations } => {
                        max_txn = max_txn.max(txn);
                        if !committed.contains(&txn) {
                            debug!(txn, namespace = %ns, "skipping uncommitted transaction");
                            continue;
                        }
                        for m in mutations {
                            match m {
                                Mutation::Put { id, value } => {
                                    kv.insert(id, value);
                                }
                                Mutation::Delete { id } => {
                                    kv.remove(&id);
                                }
                            }
                        }
                    }
                    Record::Append { id, seq, value } => {
                        let stream = streams.entry(id).or_default();
                        if seq as usize == stream.len() {
                            stream.push(value);
                        } else {
                            warn!(namespace = %ns, seq, "ignoring out-of-sequence append");
                        }
                    }
                    Record::Commit { .. } => {}
                }
            }
            index.kv.push(kv);
            index.streams.push(streams);
            segments.push(Mutex::new(file));
        }

        Ok(Store {
            inner: Arc::new(Inner {
                dir,
                opts,
                segments,
                commits: Mutex::new(commits),
                index: RwLock::new(index),
                next_txn: AtomicU64::new(max_txn + 1),
                state: AtomicU8::new(OPEN),
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.inner.dir
    }

    pub fn close(&self) {
        let _ = self
            .inner
            .state
            .compare_exchange(OPEN, CLOSED, Ordering::SeqCst, Ordering::SeqCst);
    }

    pub fn is_open(&self) -> bool {
        self.inner.state.load(Ordering::SeqCst) == OPEN
    }

    fn check_open(&self) -> Result<()> {
        if self.is_open() {
            Ok(())
        } else {
            Err(StoreError::StoreClosed)
        }
    }

    fn write_frame(&self, file: &mut File, rec: &Record) -> Result<()> {
        let bytes = rec.encode();
        let res = (|| -> std::io::Result<()> {
            if let Some(faults) = &self.inner.opts.faults {
                if faults.hit() {
                    file.write_all(&bytes[..bytes.len() / 2])?;
                    file.sync_data()?;
                    return Err(std::io::Error::other("injected crash"));
                }
            }
            file.write_all(&bytes)?;
            if self.inner.opts.sync {
                file.sync_data()?;
            }
            Ok(())
        })();
        if let Err(e) = res {
            self.inner.state.store(FAILED, Ordering::SeqCst);
            return Err(StoreError::IoFailure(e));
        }
        Ok(())
    }

    fn segment(&self, ns: Namespace) -> MutexGuard<'_, File> {
        self.inner.segments[ns.index()]
            .lock()
            .unwrap_or_else(|e| e.into_inner())
    }

    pub fn get(&self, key: &RecordKey) -> Result<Option<Vec<u8>>> {
        self.check_open()?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.kv[key.namespace.index()].get(&key.id).cloned())
    }

    pub fn put(&self, key: RecordKey, value: impl Into<Vec<u8>>) -> Result<()> {
        self.commit(Transaction::new().put(key, value))
    }

    pub fn delete(&self, key: RecordKey) -> Result<()> {
        self.commit(Transaction::new().delete(key))
    }

    /// Ids in `ns` starting with `prefix`, in lexicographic order.
    pub fn list(&self, ns: Namespace, prefix: &str) -> Result<Vec<String>> {
        self.check_open()?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.kv[ns.index()]
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect())
    }

    /// Applies all mutations atomically.
    pub fn commit(&self, txn: Transaction) -> Result<()> {
        self.check_open()?;
        if txn.is_empty() {
            return Ok(());
        }
        let mut grouped: BTreeMap<Namespace, Vec<Mutation>> = BTreeMap::new();
        for (key, value) in txn.ops {
            key.validate()?;
            let m = match value {
                Some(value) => Mutation::Put { id: key.id, value },
                None => Mutation::Delete { id: key.id },
            };
            grouped.entry(key.namespace).or_default().push(m);
        }
        let id = self.inner.next_txn.fetch_add(1, Ordering::SeqCst);

        // Namespace locks are taken in a fixed order so concurrent
        // transactions cannot deadlock.
        let mut guards: Vec<MutexGuard<'_, File>> = grouped.keys().map(|ns| self.segment(*ns)).collect();
        self.check_open()?;
        for (guard, mutations) in guards.iter_mut().zip(grouped.values()) {
            let rec = Record::Txn {
                txn: id,
                mutations: mutations.clone(),
            };
            self.write_frame(guard, &rec)?;
        }
        {
            let mut commits = self.inner.commits.lock().unwrap_or_else(|e| e.into_inner());
            self.write_frame(&mut commits, &Record::Commit { txn: id })?;
        }
        let mut index = self.inner.index.write().unwrap_or_else(|e| e.into_inner());
        for (ns, mutations) in grouped {
            let kv = &mut index.kv[ns.index()];
            for m in mutations {
                match m {
                    Mutation::Put { id, value } => {
                        kv.insert(id, value);
                    }
                    Mutation::Delete { id } => {
                        kv.remove(&id);
                    }
                }
            }
        }
        drop(guards);
        Ok(())
    }

    /// Appends a record to the stream `key`, returning its sequence number.
    /// Sequence numbers are dense from zero per stream.
    pub fn append(&self, key: &RecordKey, record: impl Into<Vec<u8>>) -> Result<u64> {
        self.check_open()?;
        if !key.namespace.appendable() {
            return Err(StoreError::NotAppendable(key.namespace));
        }
        key.validate()?;
        let mut segment = self.segment(key.namespace);
        self.check_open()?;
        let seq = {
            let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
            index.streams[key.namespace.index()]
                .get(&key.id)
                .map_or(0, |s| s.len() as u64)
        };
        let value = record.into();
        let rec = Record::Append {
            id: key.id.clone(),
            seq,
            value,
        };
        self.write_frame(&mut segment, &rec)?;
        let Record::Append { id, value, .. } = rec else { unreachable!() };
        let mut index = self.inner.index.write().unwrap_or_else(|e| e.into_inner());
        index.streams[key.namespace.index()]
            .entry(id)
            .or_default()
            .push(value);
        Ok(seq)
    }

    /// All records of a stream in append order.
    pub fn read_stream(&self, key: &RecordKey) -> Result<Vec<Vec<u8>>> {
        self.check_open()?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.streams[key.namespace.index()]
            .get(&key.id)
            .cloned()
            .unwrap_or_default())
    }

    /// Records of a stream from `from` onwards.
    pub fn read_stream_from(&self, key: &RecordKey, from: u64) -> Result<Vec<Vec<u8>>> {
        self.check_open()?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.streams[key.namespace.index()]
            .get(&key.id)
            .map(|s| s.iter().skip(from as usize).cloned().collect())
            .unwrap_or_default())
    }

    pub fn stream_len(&self, key: &RecordKey) -> Result<u64> {
        self.check_open()?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.streams[key.namespace.index()]
            .get(&key.id)
            .map_or(0, |s| s.len() as u64))
    }

    /// Stream ids in `ns` starting with `prefix`, in lexicographic order.
    pub fn list_streams(&self, ns: Namespace, prefix: &str) -> Result<Vec<String>> {
        self.check_open()?;
        validate_prefix(prefix)?;
        let index = self.inner.index.read().unwrap_or_else(|e| e.into_inner());
        Ok(index.streams[ns.index()]
            .range(prefix.to_string()..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, _)| k.clone())
            .collect())
    }
}

fn validate_prefix(prefix: &str) -> Result<()> {
    if prefix.is_empty() {
        Ok(())
    } else {
        validate_id(prefix)
    }
}
