//! Smooth transition profiles shared by cutoff functions and the sphere
//! partition of unity.

#[inline]
fn bump_tail(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// C-infinity step: 0 for `t <= 0`, 1 for `t >= 1`, and
/// `smooth_step(t) + smooth_step(1 - t) == 1` for all `t`.
#[inline]
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = bump_tail(t);
    let b = bump_tail(1.0 - t);
    a / (a + b)
}

/// Decreasing profile: 1 for `s <= 0`, 0 for `s >= 1`.
#[inline]
pub fn smooth_falloff(s: f64) -> f64 {
    smooth_step(1.0 - s)
}
