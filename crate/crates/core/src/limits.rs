//! Resource limits shared by the solver, the verifier and the harness.

use std::time::{Duration, Instant};

/// Which clock a deadline is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Monotonic wall-clock time.
    Wall,
    /// CPU time consumed by the calling thread.
    ThreadCpu,
}

/// A point in time after which work should stop.
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    clock: Clock,
    start_wall: Instant,
    start_cpu: Duration,
    budget: Option<Duration>,
}

impl Deadline {
    pub fn none() -> Self {
        Deadline { clock: Clock::Wall, start_wall: Instant::now(), start_cpu: Duration::ZERO, budget: None }
    }

    pub fn after(clock: Clock, budget: Duration) -> Self {
        Deadline {
            clock,
            start_wall: Instant::now(),
            start_cpu: if clock == Clock::ThreadCpu { thread_cpu_time() } else { Duration::ZERO },
            budget: Some(budget),
        }
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Time consumed since the deadline was created, on its own clock.
    pub fn elapsed(&self) -> Duration {
        match self.clock {
            Clock::Wall => self.start_wall.elapsed(),
            Clock::ThreadCpu => thread_cpu_time().saturating_sub(self.start_cpu),
        }
    }

    pub fn expired(&self) -> bool {
        match self.budget {
            None => false,
            Some(b) => self.elapsed() >= b,
        }
    }
}

impl Default for Deadline {
    fn default() -> Self {
        Deadline::none()
    }
}

/// CPU time of the calling thread.
pub fn thread_cpu_time() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: ts is a valid out-pointer and the clock id is supported on Linux.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return Duration::ZERO;
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

/// Default BDD node budget.
pub const DEFAULT_NODE_BUDGET: usize = 50_000_000;

/// Limits applied to a single solve or verification job.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub node_budget: usize,
    pub deadline: Deadline,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { node_budget: DEFAULT_NODE_BUDGET, deadline: Deadline::none() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LimitExceeded {
    #[error("BDD node budget exhausted")]
    Nodes,
    #[error("deadline passed")]
    Time,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpu_deadline_advances_with_work() {
        let d = Deadline::after(Clock::ThreadCpu, Duration::from_millis(20));
        let mut x = 0u64;
        while !d.expired() {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1);
        }
        assert!(d.elapsed() >= Duration::from_millis(20));
        std::hint::black_box(x);
    }

    #[test]
    fn unbounded_never_expires() {
        assert!(!Deadline::none().expired());
    }
}
