// Thin wrappers so the rest of the crate reads like ordinary float code
// without `std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `x mod period`, mapped into `[0, period)`.
#[inline]
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = libm::fmod(x, period);
    let r = if r < 0.0 { r + period } else { r };
    // fmod of a tiny negative number can round up to exactly `period`
    if r >= period {
        0.0
    } else {
        r
    }
}
