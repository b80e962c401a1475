//! Worker-pool configuration shared by the replica-parallel experiments.

use rayon::prelude::*;

/// Environment variable read for the number of worker threads.
pub const WORKERS_ENV: &str = "HMC_LAB_WORKERS";

/// Installs the global rayon pool sized from [`WORKERS_ENV`], if set.
/// Calling it more than once is harmless.
pub fn init_from_env() {
    if let Some(n) = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

/// SplitMix64 finalizer; turns a base seed and a replica index into an
/// independent-looking seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f(i)` for every replica index in parallel and returns results in
/// index order, so the output is independent of the worker count.
pub fn map_replicas<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
