//! Shared numeric tolerances.

/// Absolute slack for inequality checks on values of unit scale.
pub const ABS_TOL: f64 = 1e-9;

/// Relative tolerance for homogeneity and symmetry checks.
pub const REL_TOL: f64 = 1e-12;

/// `lhs <= rhs` with [`ABS_TOL`] slack, scaled up for magnitudes above one.
#[inline]
pub fn le(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + slack(rhs)
}

#[inline]
pub fn slack(reference: f64) -> f64 {
    ABS_TOL * reference.abs().max(1.0)
}

#[inline]
pub fn rel_eq(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    let scale = a.abs().max(b.abs());
    (a - b).abs() <= REL_TOL * scale
}
