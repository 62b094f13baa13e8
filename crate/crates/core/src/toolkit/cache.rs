use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use lru::LruCache;
use serde::{Deserialize, Serialize};

use super::{SearchMode, ToolKind, ToolOutput};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheKey {
    pub kind: ToolKind,
    pub payload: String,
    pub routing: Option<SearchMode>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

type Slot = Arc<OnceLock<ToolOutput>>;

/// LRU map from normalized requests to tool outputs.
///
/// Each key owns a `OnceLock`, so concurrent callers asking for the same key
/// wait for a single execution instead of racing. A capacity of zero
/// disables caching.
pub struct ToolCache {
    slots: Option<Mutex<LruCache<CacheKey, Slot>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl ToolCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            slots: NonZeroUsize::new(capacity).map(|c| Mutex::new(LruCache::new(c))),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn disabled() -> Self {
        Self::new(0)
    }

    /// Return the cached output for `key`, running `exec` on a miss. The
    /// flag is true when the value came from the cache.
    pub fn get_or_execute(&self, key: &CacheKey, exec: impl FnOnce() -> ToolOutput) -> (ToolOutput, bool) {
        let Some(slots) = &self.slots else {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return (exec(), false);
        };
        let slot = {
            let mut map = slots.lock().unwrap_or_else(|e| e.into_inner());
            map.get_or_insert(key.clone(), || Arc::new(OnceLock::new())).clone()
        };
        let mut executed = false;
        let out = slot
            .get_or_init(|| {
                executed = true;
                exec()
            })
            .clone();
        if executed {
            self.misses.fetch_add(1, Ordering::Relaxed);
        } else {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        (out, !executed)
    }

    pub fn len(&self) -> usize {
        self.slots
            .as_ref()
            .map_or(0, |s| s.lock().unwrap_or_else(|e| e.into_inner()).len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        if let Some(slots) = &self.slots {
            slots.lock().unwrap_or_else(|e| e.into_inner()).clear();
        }
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn key(p: &str) -> CacheKey {
        CacheKey {
            kind: ToolKind::Search,
            payload: p.into(),
            routing: None,
        }
    }

    #[test]
    fn second_lookup_hits() {
        let cache = ToolCache::new(4);
        let (_, c1) = cache.get_or_execute(&key("a"), || ToolOutput::ok("x"));
        let (out, c2) = cache.get_or_execute(&key("a"), || panic!("must not run"));
        assert!(!c1 && c2);
        assert_eq!(out.text, "x");
        assert_eq!(cache.stats(), CacheStats { hits: 1, misses: 1 });
    }

    #[test]
    fn lru_evicts_oldest() {
        let cache = ToolCache::new(2);
        for p in ["a", "b", "c"] {
            cache.get_or_execute(&key(p), || ToolOutput::ok(p));
        }
        assert_eq!(cache.len(), 2);
        let (_, cached) = cache.get_or_execute(&key("a"), || ToolOutput::ok("a"));
        assert!(!cached);
    }

    #[test]
    fn concurrent_callers_execute_once() {
        let cache = ToolCache::new(16);
        let runs = AtomicUsize::new(0);
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| {
                    cache.get_or_execute(&key("q"), || {
                        runs.fetch_add(1, Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(20));
                        ToolOutput::ok("r")
                    })
                });
            }
        });
        assert_eq!(runs.load(Ordering::SeqCst), 1);
        assert_eq!(cache.stats().hits, 7);
    }

    #[test]
    fn disabled_cache_always_executes() {
        let cache = ToolCache::disabled();
        let (_, a) = cache.get_or_execute(&key("a"), || ToolOutput::ok("1"));
        let (_, b) = cache.get_or_execute(&key("a"), || ToolOutput::ok("1"));
        assert!(!a && !b);
    }
}
