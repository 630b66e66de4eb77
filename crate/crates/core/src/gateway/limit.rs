//! Retry policy, token-bucket rate limiting and an in-flight bound.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self {
            max_attempts,
            base_delay_ms: 0,
            max_delay_ms: 0,
        }
    }

    /// Delay before retry number `attempt` (1-based): base * 2^(attempt-1), capped.
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }
}

/// Token bucket refilled continuously at `per_minute / 60` tokens per second,
/// holding at most `per_minute` tokens.
#[derive(Debug)]
pub struct RateLimiter {
    per_minute: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn per_minute(per_minute: u32) -> Self {
        let cap = per_minute.max(1) as f64;
        Self {
            per_minute: cap,
            state: Mutex::new((cap, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut st = self.state.lock().expect("rate limiter poisoned");
                let now = Instant::now();
                let refill = now.duration_since(st.1).as_secs_f64() * self.per_minute / 60.0;
                st.0 = (st.0 + refill).min(self.per_minute);
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - st.0) * 60.0 / self.per_minute)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Counting semaphore bounding concurrent backend calls.
#[derive(Debug)]
pub struct InFlight {
    limit: usize,
    count: Mutex<usize>,
    cv: Condvar,
}

pub struct Permit<'a>(&'a InFlight);

impl InFlight {
    pub fn new(limit: usize) -> Self {
        Self {
            limit: limit.max(1),
            count: Mutex::new(0),
            cv: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> Permit<'_> {
        let mut n = self.count.lock().expect("semaphore poisoned");
        while *n >= self.limit {
            n = self.cv.wait(n).expect("semaphore poisoned");
        }
        *n += 1;
        Permit(self)
    }

    pub fn limit(&self) -> usize {
        self.limit
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.count.lock().expect("semaphore poisoned");
        *n -= 1;
        self.0.cv.notify_one();
    }
}
