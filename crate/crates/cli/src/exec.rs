use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};

use cooproute_core::nash::Executor;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "COOPROUTE_THREADS";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{THREADS_VAR} must be a positive integer, got {0:?}")]
pub struct ThreadsError(pub String);

/// Runs jobs on scoped worker threads that pull job indices from a shared
/// counter. Results are returned in job order, so output does not depend on
/// the thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threaded {
    threads: NonZeroUsize,
}

impl Threaded {
    pub fn new(threads: NonZeroUsize) -> Self {
        Self { threads }
    }

    /// Reads `COOPROUTE_THREADS`, defaulting to the available parallelism.
    pub fn from_env() -> Result<Self, ThreadsError> {
        Self::from_value(std::env::var(THREADS_VAR).ok().as_deref())
    }

    pub fn from_value(value: Option<&str>) -> Result<Self, ThreadsError> {
        let threads = match value {
            Some(v) => v.trim().parse::<NonZeroUsize>().map_err(|_| ThreadsError(v.to_string()))?,
            None => std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN),
        };
        Ok(Self { threads })
    }

    pub fn threads(&self) -> usize {
        self.threads.get()
    }
}

impl Executor for Threaded {
    fn map<R, F>(&self, jobs: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        let workers = self.threads.get().min(jobs);
        if workers <= 1 {
            return (0..jobs).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut slots: Vec<Option<R>> = (0..jobs).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    scope.spawn(|| {
                        let mut done = Vec::new();
                        loop {
                            let k = next.fetch_add(1, Ordering::Relaxed);
                            if k >= jobs {
                                break done;
                            }
                            done.push((k, f(k)));
                        }
                    })
                })
                .collect();
            for handle in handles {
                let done = handle.join().unwrap_or_else(|e| std::panic::resume_unwind(e));
                for (k, r) in done {
                    slots[k] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every job index is claimed once")).collect()
    }
}
