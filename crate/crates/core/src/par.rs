//! Order-preserving data-parallel map.
//!
//! With the `parallel` feature, work runs on a dedicated rayon pool;
//! without it every request degrades to a sequential loop. Results always
//! come back in input order, so callers that merge by position stay
//! deterministic regardless of the worker count.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Threads(usize),
}

impl Parallelism {
    /// `0` means one worker per logical core.
    pub fn from_workers(workers: usize) -> Self {
        let n = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        if n <= 1 {
            Parallelism::Sequential
        } else {
            Parallelism::Threads(n)
        }
    }
}

pub struct WorkerPool {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl WorkerPool {
    pub fn new(parallelism: Parallelism) -> Self {
        match parallelism {
            Parallelism::Sequential => WorkerPool {
                #[cfg(feature = "parallel")]
                pool: None,
            },
            #[cfg(feature = "parallel")]
            Parallelism::Threads(n) => WorkerPool {
                pool: rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| log::warn!("falling back to sequential execution: {e}"))
                    .ok(),
            },
            #[cfg(not(feature = "parallel"))]
            Parallelism::Threads(n) => {
                log::debug!("built without `parallel`; running {n} requested workers sequentially");
                WorkerPool {}
            }
        }
    }

    pub fn sequential() -> Self {
        Self::new(Parallelism::Sequential)
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map(&f).collect());
        }
        items.iter().map(f).collect()
    }
}
