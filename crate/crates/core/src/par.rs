//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the helpers fan work out over
//! the rayon global pool. Without it they run the same closures in order.
//! Every helper splits work into independent items whose results are written
//! to fixed positions, so both builds produce bit-identical output.

/// Work below this many scalar multiply-adds stays on the calling thread.
pub const PAR_THRESHOLD: usize = 1 << 15;

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f(row_index, row)` to each `width`-sized chunk of `out`.
///
/// `work` is the approximate cost in multiply-adds; small jobs are run
/// sequentially even when the `parallel` feature is enabled.
pub fn for_each_row<F>(out: &mut [f64], width: usize, work: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if width == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    {
        if work >= PAR_THRESHOLD {
            use rayon::prelude::*;
            out.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
            return;
        }
    }
    let _ = work;
    out.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Number of worker threads the parallel helpers can use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_keeps_order() {
        let v = map_indexed(1000, |i| i * 3);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * 3));
    }

    #[test]
    fn for_each_row_covers_every_row() {
        let mut buf = vec![0.0; 12];
        for_each_row(&mut buf, 4, usize::MAX, |i, row| row.fill(i as f64));
        assert_eq!(buf, vec![0., 0., 0., 0., 1., 1., 1., 1., 2., 2., 2., 2.]);
    }
}
