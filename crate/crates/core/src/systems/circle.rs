//! Arithmetic on R/Z.

/// frac(base + steps·α), with steps·α split into an exact high part and its
/// rounding error so the fractional part does not drift with `steps`.
#[inline]
pub(crate) fn rotate(base: f64, steps: u64, alpha: f64) -> f64 {
    if steps == 0 {
        return base;
    }
    let k = steps as f64;
    let hi = k * alpha;
    let lo = k.mul_add(alpha, -hi);
    let v = (base + (hi - hi.floor())) + lo;
    wrap(v)
}

#[inline]
pub(crate) fn wrap(v: f64) -> f64 {
    let w = v - v.floor();
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// Arc-length distance min(|a−b|, 1−|a−b|) on R/Z, in [0, 1/2].
#[inline]
pub(crate) fn arc(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    let d = d - d.floor();
    d.min(1.0 - d)
}
