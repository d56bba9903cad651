//! Append-only JSON-Lines response cache.
//!
//! One JSON object per line keyed by the request hash. Lookups and writes
//! are serialized through a mutex; a key being fetched is marked in-flight
//! so concurrent workers asking for the same key block until the first
//! fetch completes instead of duplicating the backend call.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    key: String,
    model_id: String,
    prompt_sha256: String,
    temperature: f64,
    sample_index: u32,
    text: String,
    timestamp_ms: u128,
}

/// Request fields recorded next to the cached reply.
#[derive(Debug, Clone)]
pub struct RequestSummary {
    pub model_id: String,
    pub prompt_sha256: String,
    pub temperature: f64,
    pub sample_index: u32,
}

struct CacheState {
    entries: HashMap<String, String>,
    in_flight: HashSet<String>,
    file: File,
    hits: u64,
}

pub struct ResponseCache {
    state: Mutex<CacheState>,
    ready: Condvar,
    path: PathBuf,
}

/// Outcome of a cache lookup: either the stored reply or a claim on the key
/// that obliges the caller to fetch and [`ResponseCache::fulfill`].
pub enum Lookup<'a> {
    Hit(String),
    Fetch(FetchClaim<'a>),
}

/// Exclusive permission to fetch one key. Dropping the claim without
/// fulfilling it (fetch error, panic) releases the key so waiters retry.
pub struct FetchClaim<'a> {
    cache: &'a ResponseCache,
    key: String,
    done: bool,
}

impl ResponseCache {
    /// Open (or create) a cache file and load its entries. Unparseable
    /// lines are skipped so a file truncated by a crash stays usable.
    pub fn open(path: impl Into<PathBuf>) -> Result<ResponseCache> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if let Ok(parsed) = serde_json::from_str::<CacheLine>(&line) {
                    entries.insert(parsed.key, parsed.text);
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(ResponseCache {
            state: Mutex::new(CacheState {
                entries,
                in_flight: HashSet::new(),
                file,
                hits: 0,
            }),
            ready: Condvar::new(),
            path,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.state.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of lookups served from the cache so far.
    pub fn hits(&self) -> u64 {
        self.state.lock().unwrap().hits
    }

    /// Look up `key`, blocking while another worker fetches the same key.
    pub fn lookup(&self, key: &str) -> Lookup<'_> {
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(text) = state.entries.get(key).cloned() {
                state.hits += 1;
                return Lookup::Hit(text);
            }
            if state.in_flight.contains(key) {
                state = self.ready.wait(state).unwrap();
            } else {
                state.in_flight.insert(key.to_string());
                return Lookup::Fetch(FetchClaim {
                    cache: self,
                    key: key.to_string(),
                    done: false,
                });
            }
        }
    }

    /// Store the fetched reply and release the claim. The line append and
    /// the map insert happen under the lock, so readers never see one
    /// without the other.
    pub fn fulfill(
        &self,
        mut claim: FetchClaim<'_>,
        summary: &RequestSummary,
        text: &str,
    ) -> Result<()> {
        claim.done = true;
        let line = CacheLine {
            key: claim.key.clone(),
            model_id: summary.model_id.clone(),
            prompt_sha256: summary.prompt_sha256.clone(),
            temperature: summary.temperature,
            sample_index: summary.sample_index,
            text: text.to_string(),
            timestamp_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .unwrap_or_default()
                .as_millis(),
        };
        let serialized = serde_json::to_string(&line)?;
        let mut state = self.state.lock().unwrap();
        state.in_flight.remove(&claim.key);
        state.entries.insert(claim.key.clone(), text.to_string());
        writeln!(state.file, "{serialized}").map_err(|e| Error::io(&self.path, e))?;
        state.file.flush().map_err(|e| Error::io(&self.path, e))?;
        drop(state);
        self.ready.notify_all();
        Ok(())
    }

    fn release(&self, key: &str) {
        let mut state = self.state.lock().unwrap();
        state.in_flight.remove(key);
        drop(state);
        self.ready.notify_all();
    }
}

impl FetchClaim<'_> {
    pub fn key(&self) -> &str {
        &self.key
    }
}

impl Drop for FetchClaim<'_> {
    fn drop(&mut self) {
        if !self.done {
            self.cache.release(&self.key);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_store_reload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = ResponseCache::open(&path).unwrap();
        let summary = RequestSummary {
            model_id: "m".into(),
            prompt_sha256: "abc".into(),
            temperature: 1.0,
            sample_index: 0,
        };
        match cache.lookup("k1") {
            Lookup::Fetch(claim) => cache.fulfill(claim, &summary, "reply text").unwrap(),
            Lookup::Hit(_) => panic!("fresh cache should miss"),
        }
        match cache.lookup("k1") {
            Lookup::Hit(text) => assert_eq!(text, "reply text"),
            Lookup::Fetch(_) => panic!("expected hit"),
        }
        assert_eq!(cache.hits(), 1);

        // a new handle sees the persisted entry
        let reopened = ResponseCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        match reopened.lookup("k1") {
            Lookup::Hit(text) => assert_eq!(text, "reply text"),
            Lookup::Fetch(_) => panic!("expected hit after reload"),
        };
    }

    #[test]
    fn skips_corrupt_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "not json\n").unwrap();
        let cache = ResponseCache::open(&path).unwrap();
        assert!(cache.is_empty());
    }

    #[test]
    fn concurrent_same_key_fetches_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("c.jsonl")).unwrap();
        let fetches = std::sync::atomic::AtomicUsize::new(0);

        std::thread::scope(|scope| {
            for _ in 0..8 {
                scope.spawn(|| match cache.lookup("shared") {
                    Lookup::Hit(text) => assert_eq!(text, "value"),
                    Lookup::Fetch(claim) => {
                        fetches.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(20));
                        let summary = RequestSummary {
                            model_id: "m".into(),
                            prompt_sha256: "h".into(),
                            temperature: 0.0,
                            sample_index: 0,
                        };
                        cache.fulfill(claim, &summary, "value").unwrap();
                    }
                });
            }
        });
        assert_eq!(fetches.load(std::sync::atomic::Ordering::SeqCst), 1);
    }

    #[test]
    fn dropped_claim_unblocks_waiters() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("c.jsonl")).unwrap();
        let claim = match cache.lookup("k") {
            Lookup::Fetch(claim) => claim,
            Lookup::Hit(_) => unreachable!(),
        };
        std::thread::scope(|scope| {
            let waiter = scope.spawn(|| match cache.lookup("k") {
                Lookup::Fetch(claim) => {
                    drop(claim);
                    true
                }
                Lookup::Hit(_) => false,
            });
            std::thread::sleep(std::time::Duration::from_millis(20));
            drop(claim);
            assert!(waiter.join().unwrap());
        });
    }
}
