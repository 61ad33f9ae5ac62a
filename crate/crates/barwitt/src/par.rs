//! Parallelism helpers. With the `parallel` feature (default), data-parallel
//! maps run on a rayon pool whose size is bounded by the `BARWITT_THREADS`
//! environment variable; without the feature the same API runs sequentially.

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;
    use std::sync::OnceLock;

    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

    fn pool() -> &'static rayon::ThreadPool {
        POOL.get_or_init(|| {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Ok(v) = std::env::var("BARWITT_THREADS") {
                if let Ok(n) = v.trim().parse::<usize>() {
                    if n >= 1 {
                        builder = builder.num_threads(n);
                    }
                }
            }
            builder.build().expect("failed to build thread pool")
        })
    }

    /// Map a function over items, in parallel when available. Runs on the
    /// ambient pool when called from inside one (see [`with_pool_size`]),
    /// otherwise on the BARWITT_THREADS-bounded global pool.
    pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        if rayon::current_thread_index().is_some() {
            items.into_par_iter().map(f).collect()
        } else {
            pool().install(|| items.into_par_iter().map(f).collect())
        }
    }

    /// Map over index range 0..n.
    pub fn par_map_idx<U, F>(n: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        if rayon::current_thread_index().is_some() {
            (0..n).into_par_iter().map(f).collect()
        } else {
            pool().install(|| (0..n).into_par_iter().map(f).collect())
        }
    }

    /// Run `f` with every `par_map` in it pinned to a fresh pool of exactly
    /// `n` threads; used by the benchmarks to compare pool sizes in one
    /// process.
    pub fn with_pool_size<R, F>(n: usize, f: F) -> R
    where
        R: Send,
        F: FnOnce() -> R + Send,
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build thread pool")
            .install(f)
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn par_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
    where
        F: Fn(T) -> U,
    {
        items.into_iter().map(f).collect()
    }

    pub fn par_map_idx<U, F>(n: usize, f: F) -> Vec<U>
    where
        F: Fn(usize) -> U,
    {
        (0..n).map(f).collect()
    }

    pub fn with_pool_size<R, F>(_n: usize, f: F) -> R
    where
        F: FnOnce() -> R,
    {
        f()
    }
}

pub use imp::{par_map, par_map_idx, with_pool_size};
