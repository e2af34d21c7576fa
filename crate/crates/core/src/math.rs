//! Float helpers backed by `libm` so the crate builds without `std`.

pub(crate) const LN_2: f64 = core::f64::consts::LN_2;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

/// `log2(1 + x)` computed as `ln_1p(x) / ln 2`.
#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    ln_1p(x) / LN_2
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    // scaled to avoid overflow for the large slack values seen early in a solve
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * sqrt(ss)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
