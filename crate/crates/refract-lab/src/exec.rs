//! Thread pool executor for the Monte Carlo drivers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use refract_core::mc::Executor;

/// Runs chunks on `workers` scoped threads. Each thread claims the next
/// unclaimed chunk, and results are put back in chunk order, so output does
/// not depend on the worker count.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    workers: usize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    /// One worker per available core.
    pub fn available() -> Self {
        Self::new(thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl Executor for Threaded {
    fn run_chunks<T: Send>(&self, n_chunks: usize, job: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        if self.workers == 1 || n_chunks <= 1 {
            return (0..n_chunks).map(job).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
        thread::scope(|s| {
            for _ in 0..self.workers.min(n_chunks) {
                s.spawn(|| loop {
                    let c = next.fetch_add(1, Ordering::Relaxed);
                    if c >= n_chunks {
                        break;
                    }
                    let r = job(c);
                    slots.lock().expect("no worker panicked holding the lock")[c] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .expect("workers joined")
            .into_iter()
            .map(|r| r.expect("every chunk ran"))
            .collect()
    }
}
