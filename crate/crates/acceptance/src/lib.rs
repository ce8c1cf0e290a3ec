//! Independent reference implementations used to check the platform: a
//! hand-written usage report, a brute-force widget ranker and a vote counter
//! for technique suggestions.

pub mod ranking;
pub mod usage;
pub mod votes;

use std::time::Duration;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub limit: Duration,
    pub detail: String,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        self.passed && self.elapsed < self.limit
    }

    /// `PASS name (0.42s < 5s) detail`
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.2}s < {}s) {}",
            if self.ok() { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.limit.as_secs(),
            self.detail
        )
    }
}

/// Runs `check`, timing it against `limit`.
pub fn judge(name: &'static str, limit_secs: u64, check: impl FnOnce() -> Result<String, String>) -> Verdict {
    let start = std::time::Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let (passed, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    Verdict {
        name,
        passed,
        elapsed,
        limit: Duration::from_secs(limit_secs),
        detail,
    }
}
