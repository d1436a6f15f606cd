//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! `jobs = Some(1)` or a build without the feature runs serially. Output
//! order always matches input order, so results are schedule-independent.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Use the ambient rayon pool (or one sized by the CLI `--jobs` flag).
    Rayon,
}

impl Parallelism {
    pub fn from_jobs(jobs: Option<usize>) -> Parallelism {
        match jobs {
            Some(0) | Some(1) => Parallelism::Sequential,
            _ => Parallelism::Rayon,
        }
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_collect<I, O, F>(par: Parallelism, items: Vec<I>, f: F) -> Vec<O>
where
    I: Send,
    O: Send,
    F: Fn(I) -> O + Sync + Send,
{
    match par {
        Parallelism::Sequential => items.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => items.into_par_iter().map(f).collect(),
        #[cfg(not(feature = "parallel"))]
        Parallelism::Rayon => items.into_iter().map(f).collect(),
    }
}

/// Installs a rayon pool with `jobs` threads for the duration of `f`.
/// Without the `parallel` feature the closure just runs on this thread.
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match jobs {
            Some(n) if n >= 1 => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("rayon pool")
                .install(f),
            _ => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_collect(Parallelism::Sequential, xs.clone(), |x| x * x);
        let par = map_collect(Parallelism::Rayon, xs, |x| x * x);
        assert_eq!(seq, par);
    }
}
