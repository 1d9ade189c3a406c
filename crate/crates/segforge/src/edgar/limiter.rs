use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::clock::Clock;

/// Admits one request every `1/r` seconds. Spacing admissions evenly means
/// no half-open one-second window ever sees more than `r` of them.
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Duration>>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    /// `rps <= 0` disables limiting.
    pub fn new(rps: f64, clock: Arc<dyn Clock>) -> Self {
        let interval = if rps > 0.0 {
            // Round up so float error can never squeeze an extra admission in.
            Duration::from_nanos((1e9 / rps).ceil() as u64)
        } else {
            Duration::ZERO
        };
        RateLimiter { interval, next: Mutex::new(None), clock }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Blocks until the caller may send; returns the admission time.
    pub fn acquire(&self) -> Duration {
        let slot = {
            let mut next = self.next.lock().unwrap();
            let now = self.clock.now();
            let slot = match *next {
                Some(n) if n > now => n,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot
        };
        self.clock.sleep_until(slot);
        slot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgar::clock::FakeClock;

    #[test]
    fn two_per_second_spacing() {
        let clock = Arc::new(FakeClock::new());
        let rl = RateLimiter::new(2.0, clock.clone());
        let times: Vec<Duration> = (0..10).map(|_| rl.acquire()).collect();
        assert_eq!(times[9] - times[0], Duration::from_millis(4500));
        for (i, t) in times.iter().enumerate() {
            let window = times.iter().filter(|u| **u >= *t && **u < *t + Duration::from_secs(1)).count();
            assert!(window <= 2, "window at {i} admitted {window}");
        }
    }

    #[test]
    fn idle_time_is_not_banked() {
        let clock = Arc::new(FakeClock::new());
        let rl = RateLimiter::new(4.0, clock.clone());
        rl.acquire();
        clock.advance(Duration::from_secs(10));
        let a = rl.acquire();
        let b = rl.acquire();
        assert_eq!(b - a, Duration::from_millis(250));
    }
}
