//! Central numeric policy: every tolerance used by the library in one place.

#[derive(Debug, Clone, Copy)]
pub struct NumericPolicy {
    /// Absolute/relative tolerance for flow round trips and trajectory checks.
    pub flow_tol: f64,
    /// Target relative accuracy of the matrix exponential.
    pub exp_tol: f64,
    /// Tolerance used when snapping a real to a nearby integer multiple
    /// (grid index computations, box membership on boundaries).
    pub snap_tol: f64,
    /// Condition-number bound above which a flow matrix is rejected.
    pub cond_limit: f64,
}

pub const DEFAULT: NumericPolicy = NumericPolicy {
    flow_tol: 1e-9,
    exp_tol: 1e-12,
    snap_tol: 1e-9,
    cond_limit: 1e12,
};

/// floor(x) that treats values within `snap_tol` of an integer as that integer.
pub fn snapped_floor(x: f64, tol: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= tol * x.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// ceil(x) with the same integer snapping.
pub fn snapped_ceil(x: f64, tol: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() <= tol * x.abs().max(1.0) {
        r as i64
    } else {
        x.ceil() as i64
    }
}

/// true if x is within `snap_tol` of an integer.
pub fn is_near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol * x.abs().max(1.0)
}
