//! Data-parallel helpers with a sequential fallback.
//!
//! `threads == 1` always takes the sequential path, so single-worker runs are
//! reproducible bit for bit. `threads == 0` means "all available cores".

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
fn with_pool<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(e) => {
            log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
            job()
        }
    }
}

/// First item (in slice order) for which `f` returns `Some`. The answer does
/// not depend on the number of threads, only the amount of wasted work does.
pub fn find_map_first<T, R, F>(items: &[T], threads: usize, f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads != 1 {
        return with_pool(threads, || items.par_iter().find_map_first(&f));
    }
    let _ = threads;
    items.iter().find_map(f)
}

/// Order-preserving map.
pub fn map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads != 1 {
        return with_pool(threads, || items.par_iter().map(&f).collect());
    }
    let _ = threads;
    items.iter().map(f).collect()
}

/// Whether the crate was built with the `parallel` feature.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
