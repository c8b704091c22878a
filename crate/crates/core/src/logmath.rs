//! Log-domain arithmetic for lattice accumulation.
//!
//! All scores live in natural-log space. `f64::NEG_INFINITY` is the
//! zero of the log semiring and propagates absorbingly through both
//! `log_add` and ordinary addition.

/// Log-space sum of two values: `log(exp(a) + exp(b))`.
///
/// Handles the all-`-inf` case without producing NaN.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-space sum over a slice.
pub fn log_sum(values: &[f64]) -> f64 {
    values.iter().fold(f64::NEG_INFINITY, |acc, &v| log_add(acc, v))
}

/// Row-wise log-softmax in place: after the call each row satisfies
/// `log_sum(row) == 0` up to rounding. Rows that are entirely `-inf`
/// are left untouched.
pub fn log_softmax_rows(data: &mut [f64], cols: usize) {
    assert!(cols > 0);
    for row in data.chunks_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            continue;
        }
        let lse = max
            + row
                .iter()
                .map(|&v| (v - max).exp())
                .sum::<f64>()
                .ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
}
