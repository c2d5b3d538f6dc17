//! Exponential backoff for transient transport failures.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct RetryPolicy {
    /// Total attempts including the first one.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 4, base_delay_ms: 500, max_delay_ms: 8_000 }
    }
}

impl RetryPolicy {
    pub fn no_delay(max_attempts: u32) -> Self {
        Self { max_attempts, base_delay_ms: 0, max_delay_ms: 0 }
    }

    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u64.checked_shl(retry.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.base_delay_ms.saturating_mul(factor).min(self.max_delay_ms))
    }

    /// Runs `op` until it succeeds, fails with a non-transient error, or the
    /// attempts are used up. Returns the last error and the attempts made.
    pub fn run<T, E>(
        &self,
        mut op: impl FnMut() -> Result<T, E>,
        is_transient: impl Fn(&E) -> bool,
    ) -> Result<T, (E, u32)> {
        let attempts = self.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match op() {
                Ok(value) => return Ok(value),
                Err(err) if attempt < attempts && is_transient(&err) => {
                    log::debug!("transient failure on attempt {attempt}, retrying");
                    thread::sleep(self.delay(attempt));
                    attempt += 1;
                }
                Err(err) => return Err((err, attempt)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delays_double_and_cap() {
        let p = RetryPolicy { max_attempts: 5, base_delay_ms: 100, max_delay_ms: 350 };
        let ms: Vec<u128> = (1..=4).map(|r| p.delay(r).as_millis()).collect();
        assert_eq!(ms, [100, 200, 350, 350]);
    }

    #[test]
    fn retries_transient_then_succeeds() {
        let mut calls = 0;
        let out = RetryPolicy::no_delay(3).run(
            || {
                calls += 1;
                if calls < 3 {
                    Err("busy")
                } else {
                    Ok(calls)
                }
            },
            |_| true,
        );
        assert_eq!(out, Ok(3));
    }

    #[test]
    fn gives_up() {
        let mut calls = 0;
        let out: Result<(), _> = RetryPolicy::no_delay(2).run(
            || {
                calls += 1;
                Err("busy")
            },
            |_| true,
        );
        assert_eq!(out, Err(("busy", 2)));
        assert_eq!(calls, 2);
    }

    #[test]
    fn permanent_errors_not_retried() {
        let mut calls = 0;
        let out: Result<(), _> = RetryPolicy::no_delay(5).run(
            || {
                calls += 1;
                Err("denied")
            },
            |_| false,
        );
        assert_eq!(out, Err(("denied", 1)));
    }
}
