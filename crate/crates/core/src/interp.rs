//! Scalar and angular interpolation.

use std::f64::consts::{PI, TAU};

/// Linear interpolation `a + (b - a) * t`. `t` outside `[0, 1]` extrapolates.
///
/// The endpoints are exact: `lerp(a, b, 0) == a` and `lerp(a, b, 1) == b`.
#[inline]
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // a + (b - a) can differ from b by one ulp, and b - a can overflow.
    if t == 0.0 {
        return a;
    }
    if t == 1.0 {
        return b;
    }
    a + (b - a) * t
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut r = angle - TAU * ((angle + PI) / TAU).floor();
    // floor() of a value that rounds onto an integer boundary can leave r one period off.
    if r >= PI {
        r -= TAU;
    } else if r < -PI {
        r += TAU;
    }
    r
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_angle_delta(delta: f64) -> f64 {
    -wrap_angle(-delta)
}

/// Interpolates from `a` towards `b` along the shorter arc, returning an angle in `[-π, π)`.
///
/// When `a` and `b` are exactly opposite the arc is taken in the positive direction.
pub fn lerp_angle(a: f64, b: f64, t: f64) -> f64 {
    let delta = wrap_angle_delta(b - a);
    wrap_angle(a + delta * t)
}
