use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use georoute_core::hyperbolic::{CurvatureFit, GeometryCache, HyperbolicConfig, NoCache};
use georoute_core::{GraphSnapshot, Result};

/// Thread-safe curvature-fit cache keyed by snapshot structure and fit settings.
///
/// Fits are pure functions of the key, so a race that computes one twice is harmless.
#[derive(Debug, Default)]
pub struct SharedCache {
    fits: RwLock<HashMap<u64, Arc<CurvatureFit>>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl SharedCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fits.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(hits, misses)` so far.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }
}

impl GeometryCache for SharedCache {
    fn fit(&self, g: &GraphSnapshot, cfg: &HyperbolicConfig) -> Result<Arc<CurvatureFit>> {
        let key = g.structure_hash() ^ cfg.fit_key();
        if let Some(fit) = self.fits.read().expect("cache lock poisoned").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(fit.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let fit = NoCache.fit(g, cfg)?;
        Ok(self.fits.write().expect("cache lock poisoned").entry(key).or_insert(fit).clone())
    }
}
