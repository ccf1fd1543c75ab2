//! Fan-out of independent runs with results that do not depend on the
//! number of worker threads.

use crate::error::{Error, Result};

/// Runs are grouped in blocks of this size; each block is reduced in run
/// order and blocks are combined in block order.
const BLOCK: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Data-parallel over runs; `0` threads means the global pool. Without
    /// the `parallel` feature this behaves like `Sequential`.
    Parallel(usize),
    #[default]
    Auto,
}

impl Exec {
    pub fn with_threads(threads: usize) -> Self {
        match threads {
            1 => Exec::Sequential,
            k => Exec::Parallel(k),
        }
    }

    fn threads(self) -> Option<usize> {
        match self {
            Exec::Sequential => None,
            Exec::Parallel(k) => Some(k),
            Exec::Auto => Some(0),
        }
    }
}

fn wrap(run: u64, e: Error) -> Error {
    match e {
        Error::Run { .. } => e,
        other => Error::Run {
            run,
            source: Box::new(other),
        },
    }
}

fn run_block<T, A, F, G>(
    block: u64,
    runs: u64,
    map: &F,
    init: &dyn Fn() -> A,
    fold: &G,
) -> Result<A>
where
    F: Fn(u64) -> Result<T>,
    G: Fn(&mut A, T),
{
    let mut acc = init();
    let end = ((block + 1) * BLOCK).min(runs);
    for run in block * BLOCK..end {
        let v = map(run).map_err(|e| wrap(run, e))?;
        fold(&mut acc, v);
    }
    Ok(acc)
}

/// `map` every run index in `0..runs`, fold the results of consecutive runs
/// into block accumulators and merge the blocks in order. The first failing
/// run (lowest index) is reported.
pub fn map_fold<T, A, F, G, H>(
    exec: Exec,
    runs: u64,
    map: F,
    init: impl Fn() -> A + Sync,
    fold: G,
    merge: H,
) -> Result<A>
where
    T: Send,
    A: Send,
    F: Fn(u64) -> Result<T> + Sync,
    G: Fn(&mut A, T) + Sync,
    H: Fn(&mut A, A),
{
    let blocks = runs.div_ceil(BLOCK);
    let partials: Vec<Result<A>> = match exec.threads() {
        #[cfg(feature = "parallel")]
        Some(k) => {
            use rayon::prelude::*;
            let work = || {
                (0..blocks)
                    .into_par_iter()
                    .map(|b| run_block(b, runs, &map, &init, &fold))
                    .collect()
            };
            if k == 0 {
                work()
            } else {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                    .install(work)
            }
        }
        _ => (0..blocks)
            .map(|b| run_block(b, runs, &map, &init, &fold))
            .collect(),
    };
    let mut total = init();
    for p in partials {
        merge(&mut total, p?);
    }
    Ok(total)
}

/// Results of every run, in run order.
pub fn map_runs<T, F>(exec: Exec, runs: u64, map: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    map_fold(
        exec,
        runs,
        map,
        Vec::new,
        |acc: &mut Vec<T>, v| acc.push(v),
        |acc, mut part| acc.append(&mut part),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_errors() {
        for exec in [Exec::Sequential, Exec::Parallel(3), Exec::Auto] {
            let v = map_runs(exec, 1000, |r| Ok(r * 2)).unwrap();
            assert_eq!(v, (0..1000).map(|r| r * 2).collect::<Vec<_>>());
            let err = map_runs(exec, 1000, |r| {
                if r == 517 || r == 900 {
                    Err(Error::Estimator("boom".into()))
                } else {
                    Ok(r)
                }
            })
            .unwrap_err();
            assert!(matches!(err, Error::Run { run: 517, .. }));
        }
    }

    #[test]
    fn float_reduction_is_thread_independent() {
        let f = |r: u64| Ok(((r as f64) * 0.37).sin() * 1e-3 + 1.0 / (r as f64 + 1.0));
        let sums: Vec<f64> = [Exec::Sequential, Exec::Parallel(2), Exec::Parallel(5)]
            .iter()
            .map(|&e| map_fold(e, 10_001, f, || 0.0, |a, v| *a += v, |a, b| *a += b).unwrap())
            .collect();
        assert_eq!(sums[0].to_bits(), sums[1].to_bits());
        assert_eq!(sums[0].to_bits(), sums[2].to_bits());
    }
}
