//! Data-parallel helpers with a sequential fallback.
//!
//! Work is always split over disjoint output chunks and each chunk is
//! reduced in index order, so results are bitwise identical whether the
//! `parallel` feature is on, and at any thread count.

/// Apply `f` to consecutive chunks of `buf`, passing the chunk index.
#[cfg(feature = "parallel")]
pub(crate) fn chunks_mut_indexed<T, F>(buf: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    use rayon::prelude::*;
    buf.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn chunks_mut_indexed<T, F>(buf: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for (i, c) in buf.chunks_mut(chunk).enumerate() {
        f(i, c);
    }
}

/// Reduce each chunk of `src` into one element of `out`.
#[cfg(feature = "parallel")]
pub(crate) fn map_chunks<S, T, F>(src: &[S], chunk: usize, out: &mut [T], f: F)
where
    S: Sync,
    T: Send,
    F: Fn(usize, &[S]) -> T + Sync,
{
    use rayon::prelude::*;
    src.par_chunks(chunk)
        .zip(out.par_iter_mut())
        .enumerate()
        .for_each(|(i, (s, o))| *o = f(i, s));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_chunks<S, T, F>(src: &[S], chunk: usize, out: &mut [T], f: F)
where
    S: Sync,
    T: Send,
    F: Fn(usize, &[S]) -> T + Sync,
{
    for (i, (s, o)) in src.chunks(chunk).zip(out.iter_mut()).enumerate() {
        *o = f(i, s);
    }
}

/// Fill each chunk of `out` from the matching chunk of `src`.
#[cfg(feature = "parallel")]
pub(crate) fn zip_chunks<S, T, F>(src: &[S], out: &mut [T], chunk: usize, f: F)
where
    S: Sync,
    T: Send,
    F: Fn(usize, &[S], &mut [T]) + Sync,
{
    use rayon::prelude::*;
    src.par_chunks(chunk)
        .zip(out.par_chunks_mut(chunk))
        .enumerate()
        .for_each(|(i, (s, o))| f(i, s, o));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn zip_chunks<S, T, F>(src: &[S], out: &mut [T], chunk: usize, f: F)
where
    S: Sync,
    T: Send,
    F: Fn(usize, &[S], &mut [T]) + Sync,
{
    for (i, (s, o)) in src.chunks(chunk).zip(out.chunks_mut(chunk)).enumerate() {
        f(i, s, o);
    }
}
