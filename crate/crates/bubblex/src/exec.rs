//! Execution policy: a rayon pool of a chosen width, or plain sequential loops.
//!
//! Without the `parallel` feature every policy runs sequentially.

#[cfg(feature = "parallel")]
use std::sync::Arc;

#[derive(Clone)]
pub struct Exec {
    jobs: usize,
    #[cfg(feature = "parallel")]
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Exec(jobs={})", self.jobs)
    }
}

impl Default for Exec {
    fn default() -> Self {
        Exec::with_jobs(0)
    }
}

impl Exec {
    pub fn sequential() -> Exec {
        Exec::with_jobs(1)
    }

    /// `jobs = 0` means one worker per available core.
    pub fn with_jobs(jobs: usize) -> Exec {
        #[cfg(feature = "parallel")]
        {
            let pool = if jobs == 1 {
                None
            } else {
                rayon::ThreadPoolBuilder::new().num_threads(jobs).build().ok().map(Arc::new)
            };
            Exec { jobs, pool }
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec { jobs }
        }
    }

    /// Reads `BUBBLEX_JOBS`, falling back to all cores.
    pub fn from_env() -> Exec {
        let jobs = std::env::var("BUBBLEX_JOBS").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(0);
        Exec::with_jobs(jobs)
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn is_parallel(&self) -> bool {
        #[cfg(feature = "parallel")]
        {
            self.pool.is_some()
        }
        #[cfg(not(feature = "parallel"))]
        {
            false
        }
    }

    /// Order-preserving map.
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

    /// Order-preserving map that stops at the first error in item order.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let v: Vec<u64> = (0..200).collect();
        let a = Exec::sequential().map(&v, |x| x * x);
        let b = Exec::with_jobs(4).map(&v, |x| x * x);
        assert_eq!(a, b);
        assert!(!Exec::sequential().is_parallel());
    }
}
