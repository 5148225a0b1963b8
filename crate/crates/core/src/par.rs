//! Deterministic fan-out helpers.
//!
//! Every reduction here is resolved by an index-lexicographic rule, so the
//! result is the same no matter how rayon chunks the range, and the
//! sequential fallback (built without the `parallel` feature) produces the
//! identical value.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// NaN-free comparison key: NaN sorts above every number.
#[inline]
fn key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

#[inline]
fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if (key(b.0), b.1) < (key(a.0), a.1) {
        b
    } else {
        a
    }
}

/// Index and value of the smallest `eval(i)`; ties go to the smallest index.
pub(crate) fn argmin<F>(len: usize, eval: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..len)
            .into_par_iter()
            .map(|i| (eval(i), i))
            .reduce_with(better)
            .map(|(v, i)| (i, v))
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len)
            .map(|i| (eval(i), i))
            .reduce(better)
            .map(|(v, i)| (i, v))
    }
}

/// Index and value of the largest `eval(i)`; ties go to the smallest index.
pub(crate) fn argmax<F>(len: usize, eval: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> f64 + Sync,
{
    argmin(len, |i| -eval(i)).map(|(i, v)| (i, -v))
}

/// Order-preserving map over a range.
pub(crate) fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// First index (smallest `i`) for which `f(i)` returns `Some`, with its value.
pub(crate) fn find_first<T, F>(len: usize, f: F) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len)
            .into_par_iter()
            .filter_map(|i| f(i).map(|v| (i, v)))
            .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).find_map(|i| f(i).map(|v| (i, v)))
    }
}
