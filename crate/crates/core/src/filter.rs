//! Minimum-deviation safety filter for a single half-space.
//!
//! Solves `min |u - u_ref|^2  s.t.  a . u >= b` exactly: either the reference
//! is already feasible, or it is projected orthogonally onto `a . u = b`.

use crate::constraints::ConstraintRow;
use crate::dynamics::ControlInput;
use crate::error::{Error, Result};

/// Absolute tolerance on the constraint slack.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterResult {
    pub u: ControlInput,
    /// Whether the reference had to be projected.
    pub active: bool,
    /// `a . u - b`.
    pub slack: f64,
}

pub fn solve(row: &ConstraintRow, u_ref: &ControlInput) -> Result<FilterResult> {
    let slack_ref = row.slack(&u_ref.0);
    if slack_ref >= 0.0 {
        return Ok(FilterResult { u: *u_ref, active: false, slack: slack_ref });
    }
    let norm_sq = row.a.norm_squared();
    if norm_sq == 0.0 {
        // 0 >= b with b > 0: nothing the input can do.
        return Err(Error::Infeasible { bound: row.b });
    }
    let u = u_ref.0 + row.a * (-slack_ref / norm_sq);
    Ok(FilterResult { u: ControlInput(u), active: true, slack: row.slack(&u) })
}
