//! Scoped-thread evaluation of the per-block candidates of a sweep.

use std::num::NonZeroUsize;
use std::thread;

use klt_mbi_core::mbi::{BlockCandidate, CandidateEvaluator};
use klt_mbi_core::Result;

pub const THREADS_ENV: &str = "KLT_MBI_THREADS";

/// Worker cap from `KLT_MBI_THREADS`; unset, unparsable or `0` means the
/// available parallelism.
pub fn threads_from_env() -> usize {
    let auto = || thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(0) | None => auto(),
        Some(n) => n,
    }
}

/// Runs candidates on up to `threads` scoped workers; results come back in
/// sensor order, so the winner does not depend on scheduling.
#[derive(Debug, Clone, Copy)]
pub struct Threaded {
    pub threads: usize,
}

impl CandidateEvaluator for Threaded {
    fn evaluate(
        &self,
        sensors: usize,
        eval: &(dyn Fn(usize) -> Result<BlockCandidate> + Sync),
    ) -> Vec<Result<BlockCandidate>> {
        let workers = self.threads.min(sensors);
        if workers <= 1 {
            return (0..sensors).map(eval).collect();
        }
        let mut slots: Vec<Option<Result<BlockCandidate>>> = (0..sensors).map(|_| None).collect();
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    scope.spawn(move || {
                        (w..sensors)
                            .step_by(workers)
                            .map(|j| (j, eval(j)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (j, r) in h.join().expect("candidate worker panicked") {
                    slots[j] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every sensor evaluated")).collect()
    }
}
