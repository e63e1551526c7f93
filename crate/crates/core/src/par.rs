//! Order-preserving data-parallel map with a sequential fallback.
//!
//! `workers == 1` always runs on the calling thread. `workers == 0` uses the
//! global rayon pool; any other value runs inside a dedicated pool of that
//! size. Without the `parallel` feature every call is sequential. Results are
//! returned in input order, so callers see identical output for any worker
//! count.

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if workers == 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, workers, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, U, F>(items: &[T], workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if workers == 0 {
        return items.par_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, U, F>(items: &[T], _workers: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// True when parallel execution is compiled in.
pub const fn enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_for_any_worker_count() {
        let xs: Vec<u64> = (0..500).collect();
        let expect: Vec<u64> = xs.iter().map(|x| x * x).collect();
        for w in [0, 1, 2, 7] {
            assert_eq!(map(&xs, w, |x| x * x), expect);
        }
    }
}
