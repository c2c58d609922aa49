use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::RateLimit;

#[derive(Debug)]
struct BucketState {
    tokens: f64,
    last: Instant,
}

/// Shared token bucket; one per provider.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    refill_per_sec: f64,
    state: Mutex<BucketState>,
}

impl TokenBucket {
    pub fn new(limit: RateLimit) -> Self {
        Self::starting_at(limit, Instant::now())
    }

    pub fn starting_at(limit: RateLimit, now: Instant) -> Self {
        let capacity = f64::from(limit.capacity.max(1));
        TokenBucket {
            capacity,
            refill_per_sec: limit.refill_per_sec.max(0.0),
            state: Mutex::new(BucketState {
                tokens: capacity,
                last: now,
            }),
        }
    }

    /// Takes a token if one is available at `now`; otherwise returns how long to wait.
    pub fn try_acquire_at(&self, now: Instant) -> Result<(), Duration> {
        let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let elapsed = now.saturating_duration_since(s.last).as_secs_f64();
        s.tokens = (s.tokens + elapsed * self.refill_per_sec).min(self.capacity);
        s.last = now.max(s.last);
        if s.tokens >= 1.0 {
            s.tokens -= 1.0;
            return Ok(());
        }
        if self.refill_per_sec <= 0.0 {
            return Err(Duration::from_secs(1));
        }
        Err(Duration::from_secs_f64(
            (1.0 - s.tokens) / self.refill_per_sec,
        ))
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        while let Err(wait) = self.try_acquire_at(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
}
