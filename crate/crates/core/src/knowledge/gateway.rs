//! Query gateway: response cache, retry with backoff, rate limiting, and a
//! cap on concurrent in-flight requests. Every query goes through here.

use super::backend::LlmBackend;
use super::KnowledgeError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

/// Whitespace token count: the budget proxy used everywhere tokens are
/// counted. Exact subword counts are encoder-specific, so context checks
/// scale this by a safety factor.
pub fn whitespace_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Truncates `text` to its first `budget` whitespace tokens.
pub fn truncate_tokens(text: &str, budget: usize) -> String {
    text.split_whitespace()
        .take(budget)
        .collect::<Vec<_>>()
        .join(" ")
}

fn prompt_hash(prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(prompt.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    backend: String,
    hash: String,
    prompt: String,
    response: String,
}

/// Append-only JSON-lines store keyed by (backend id, prompt hash).
struct PromptCache {
    entries: HashMap<(String, String), String>,
    appender: Option<File>,
}

impl PromptCache {
    fn open(path: Option<&Path>) -> Result<Self, KnowledgeError> {
        let mut entries = HashMap::new();
        let appender = match path {
            Some(path) => {
                if path.exists() {
                    let file = File::open(path).map_err(|e| KnowledgeError::Cache {
                        msg: format!("cannot read {}: {e}", path.display()),
                    })?;
                    for line in BufReader::new(file).lines() {
                        let line = line.map_err(|e| KnowledgeError::Cache {
                            msg: e.to_string(),
                        })?;
                        if line.trim().is_empty() {
                            continue;
                        }
                        let record: CacheRecord =
                            serde_json::from_str(&line).map_err(|e| KnowledgeError::Cache {
                                msg: format!("{}: {e}", path.display()),
                            })?;
                        entries.insert((record.backend, record.hash), record.response);
                    }
                }
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent).map_err(|e| KnowledgeError::Cache {
                            msg: format!("cannot create {}: {e}", parent.display()),
                        })?;
                    }
                }
                let file = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| KnowledgeError::Cache {
                        msg: format!("cannot open {}: {e}", path.display()),
                    })?;
                Some(file)
            }
            None => None,
        };
        Ok(Self { entries, appender })
    }

    fn get(&self, backend: &str, hash: &str) -> Option<String> {
        self.entries
            .get(&(backend.to_string(), hash.to_string()))
            .cloned()
    }

    fn put(
        &mut self,
        backend: &str,
        hash: &str,
        prompt: &str,
        response: &str,
    ) -> Result<(), KnowledgeError> {
        if let Some(file) = &mut self.appender {
            let record = CacheRecord {
                backend: backend.to_string(),
                hash: hash.to_string(),
                prompt: prompt.to_string(),
                response: response.to_string(),
            };
            let line = serde_json::to_string(&record).expect("cache record serializes");
            writeln!(file, "{line}").map_err(|e| KnowledgeError::Cache {
                msg: e.to_string(),
            })?;
        }
        self.entries.insert(
            (backend.to_string(), hash.to_string()),
            response.to_string(),
        );
        Ok(())
    }
}

/// Counting semaphore for the in-flight request cap.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(count: usize) -> Self {
        Self {
            free: Mutex::new(count.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
    }

    fn release(&self) {
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
    }
}

/// Gateway tuning knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayConfig {
    /// Maximum attempts per prompt after a retryable failure.
    pub max_retries: u32,
    /// Base backoff; doubles per retry.
    pub backoff_ms: u64,
    /// Minimum interval between provider call starts (0 = unlimited).
    pub min_interval_ms: u64,
    /// Concurrent in-flight request cap.
    pub concurrency: usize,
    /// Safety factor applied to whitespace token counts for context checks.
    pub safety_factor: f64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            max_retries: 3,
            backoff_ms: 250,
            min_interval_ms: 0,
            concurrency: 4,
            safety_factor: 1.3,
        }
    }
}

pub struct Gateway {
    backend: Box<dyn LlmBackend>,
    cache: Mutex<PromptCache>,
    cache_path: Option<PathBuf>,
    last_call: Mutex<Option<Instant>>,
    slots: Slots,
    config: GatewayConfig,
    provider_calls: AtomicU64,
    cache_hits: AtomicU64,
}

impl Gateway {
    pub fn new(
        backend: Box<dyn LlmBackend>,
        cache_path: Option<&Path>,
        config: GatewayConfig,
    ) -> Result<Self, KnowledgeError> {
        Ok(Self {
            backend,
            cache: Mutex::new(PromptCache::open(cache_path)?),
            cache_path: cache_path.map(Path::to_path_buf),
            last_call: Mutex::new(None),
            slots: Slots::new(config.concurrency),
            config,
            provider_calls: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    /// In-memory gateway over a backend, no cache file.
    pub fn in_memory(backend: Box<dyn LlmBackend>) -> Self {
        Self::new(backend, None, GatewayConfig::default()).expect("no cache file to fail on")
    }

    pub fn backend_id(&self) -> &str {
        self.backend.identifier()
    }

    pub fn cache_path(&self) -> Option<&Path> {
        self.cache_path.as_deref()
    }

    /// Number of completed provider invocations (cache hits excluded).
    pub fn provider_calls(&self) -> u64 {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> u64 {
        self.cache_hits.load(Ordering::SeqCst)
    }

    fn pace(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let interval = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_call.lock().unwrap();
        if let Some(at) = *last {
            let elapsed = at.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    /// One prompt → one response. Served from the cache when the same
    /// (backend, prompt) pair has been answered before; otherwise queries the
    /// provider with bounded retries and appends the result to the cache.
    pub fn query(&self, prompt: &str) -> Result<String, KnowledgeError> {
        if prompt.is_empty() {
            return Err(KnowledgeError::EmptyPrompt);
        }
        let estimated =
            (whitespace_tokens(prompt) as f64 * self.config.safety_factor).ceil() as usize;
        if estimated > self.backend.max_context() {
            return Err(KnowledgeError::ContextOverflow {
                estimated,
                max_context: self.backend.max_context(),
            });
        }

        let id = self.backend.identifier().to_string();
        let hash = prompt_hash(prompt);
        if let Some(response) = self.cache.lock().unwrap().get(&id, &hash) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(response);
        }

        self.slots.acquire();
        let result = self.query_uncached(prompt);
        self.slots.release();
        let response = result?;

        self.cache
            .lock()
            .unwrap()
            .put(&id, &hash, prompt, &response)?;
        Ok(response)
    }

    fn query_uncached(&self, prompt: &str) -> Result<String, KnowledgeError> {
        let mut attempt = 0u32;
        loop {
            self.pace();
            self.provider_calls.fetch_add(1, Ordering::SeqCst);
            match self.backend.complete(prompt) {
                Ok(response) => return Ok(response),
                Err(e) if e.retryable() && attempt < self.config.max_retries => {
                    let delay = self.config.backoff_ms.saturating_mul(1 << attempt.min(16));
                    std::thread::sleep(Duration::from_millis(delay));
                    attempt += 1;
                }
                Err(e) => return Err(e.with_retries(attempt)),
            }
        }
    }
}
