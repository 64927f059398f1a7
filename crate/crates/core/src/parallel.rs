//! Index-ordered parallel map. Results come back in index order whatever the
//! worker count, so merged output does not depend on scheduling.

/// Worker count from `PA_GIANT_WORKERS` if set and valid, else `requested`.
pub fn resolve_workers(requested: usize) -> usize {
    std::env::var("PA_GIANT_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or(requested)
        .max(1)
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(workers: usize, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(_workers: usize, n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_stable() {
        let a = map_indexed(1, 100, |i| i * i);
        let b = map_indexed(4, 100, |i| i * i);
        assert_eq!(a, b);
    }
}
