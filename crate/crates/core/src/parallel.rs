//! Replica runner: data-parallel over replica indices when the `parallel`
//! feature is on, plain loop otherwise. Results come back ordered by replica
//! index either way, so downstream merges are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn run_replicas<T, F>(replicas: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..replicas).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn run_replicas<T, F>(replicas: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..replicas).map(f).collect()
}

/// Sequential runner, always available; the bench suite compares this against
/// the parallel path on identical workloads.
pub fn run_replicas_seq<T, F>(replicas: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..replicas).map(f).collect()
}
