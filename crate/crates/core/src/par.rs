//! Deterministic execution helpers shared by all cell loops.
//!
//! Parallel reductions use a fixed chunk size independent of the thread
//! count, so sums associate identically on every run: reruns of the same
//! build produce bit-identical results regardless of work stealing.

/// Fields smaller than this run sequentially even with `parallel` enabled;
/// rayon overhead dominates on 1-d grids.
pub const PAR_MIN_LEN: usize = 1 << 13;

/// Chunk length for ordered reductions.
pub const CHUNK: usize = 1 << 12;

/// Fill `out[i] = f(i)` for all i.
pub fn map_into<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if out.len() >= PAR_MIN_LEN {
            use rayon::prelude::*;
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (j, v) in chunk.iter_mut().enumerate() {
                    *v = f(base + j);
                }
            });
            return;
        }
    }
    map_into_seq(out, f);
}

/// Sequential variant of [`map_into`]; reference path for the benches.
pub fn map_into_seq<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64,
{
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Ordered chunked sum of `f(0) + f(1) + ... + f(len-1)`.
///
/// The chunk boundaries are fixed, so the float association is the same
/// whether the chunks are evaluated in parallel or not.
pub fn sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if len >= PAR_MIN_LEN {
            use rayon::prelude::*;
            let nchunks = len.div_ceil(CHUNK);
            let partials: Vec<f64> = (0..nchunks)
                .into_par_iter()
                .map(|c| {
                    let lo = c * CHUNK;
                    let hi = (lo + CHUNK).min(len);
                    let mut acc = 0.0;
                    for i in lo..hi {
                        acc += f(i);
                    }
                    acc
                })
                .collect();
            return partials.iter().sum();
        }
    }
    sum_seq(len, f)
}

/// Sequential variant of [`sum`] with the same chunked association.
pub fn sum_seq<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    let mut total = 0.0;
    let mut lo = 0;
    while lo < len {
        let hi = (lo + CHUNK).min(len);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        total += acc;
        lo = hi;
    }
    total
}
