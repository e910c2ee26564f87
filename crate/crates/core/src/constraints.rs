//! Half-space constraint builders in input space.
//!
//! Every builder maps the barrier derivatives at a state to one row
//! `a . u >= b`. Four laws are provided:
//!
//! * the fixed-time repeated-root law `(d/dt + cT)^2 h >= 0`, whose equality
//!   solution `(a0 + a1 t) e^{-cT t}` has its single zero at the prescribed
//!   time `T`;
//! * the exponential second-order law `h'' + k2 h' + k1 h >= 0`;
//! * the first-order finite-time bound `h' >= -alpha |h|^p sign(h)` (scalar,
//!   relative degree one only);
//! * the recursive finite-time baseline built on `psi1 = h' + p1 sig(h)^q1`.

use nalgebra::Vector2;

use crate::barrier::BarrierDerivatives;
use crate::error::{Error, Result};

/// Half-space `a . u >= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintRow {
    pub a: Vector2<f64>,
    pub b: f64,
}

impl ConstraintRow {
    pub fn new(a: Vector2<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn slack(&self, u: &Vector2<f64>) -> f64 {
        self.a.dot(u) - self.b
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite()) && self.b.is_finite()
    }
}

/// `sign(x) |x|^q`, zero at the origin.
#[inline]
pub(crate) fn sig_pow(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(q)
    }
}

/// Parameters of the fixed-time law, frozen from the episode's initial
/// barrier value and rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTimeParams {
    prescribed_time: f64,
    rate: f64,
    a0: f64,
    a1: f64,
}

impl FixedTimeParams {
    /// Chooses `c` so that the equality solution vanishes exactly at `t = T`.
    ///
    /// Requires `h0 < 0`: a zero initial value leaves `c` undefined and a
    /// positive one means the state is already safe.
    pub fn init(h0: f64, h_dot0: f64, prescribed_time: f64) -> Result<Self> {
        if !(prescribed_time > 0.0 && prescribed_time.is_finite()) {
            return Err(Error::NonPositiveTime(prescribed_time));
        }
        if h0 == 0.0 {
            return Err(Error::ZeroInitialBarrier);
        }
        if h0 > 0.0 {
            return Err(Error::AlreadySafe(h0));
        }
        let t = prescribed_time;
        let rate = (-h0 - h_dot0 * t) / (h0 * t * t);
        let a0 = h0;
        let a1 = h_dot0 + rate * t * h0;
        Ok(Self { prescribed_time, rate, a0, a1 })
    }

    pub fn prescribed_time(&self) -> f64 {
        self.prescribed_time
    }

    /// The scalar `c`; the repeated root of the operator sits at `-cT`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    /// Decay constant `cT` of the repeated root.
    pub fn root_rate(&self) -> f64 {
        self.rate * self.prescribed_time
    }

    /// Equality-case barrier `(a0 + a1 t) e^{-cT t}`; any admissible
    /// trajectory stays above it.
    pub fn envelope(&self, t: f64) -> f64 {
        (self.a0 + self.a1 * t) * (-self.root_rate() * t).exp()
    }

    /// Time derivative of [`envelope`](Self::envelope).
    pub fn envelope_rate(&self, t: f64) -> f64 {
        let k = self.root_rate();
        (self.a1 - k * (self.a0 + self.a1 * t)) * (-k * t).exp()
    }
}

pub fn fixed_time_row(d: &BarrierDerivatives, p: &FixedTimeParams) -> ConstraintRow {
    let k = p.root_rate();
    ConstraintRow::new(d.lglfh, -(d.lf2h + 2.0 * k * d.h_dot + k * k * d.h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpHocbfParams {
    pub k1: f64,
    pub k2: f64,
}

impl ExpHocbfParams {
    pub fn new(k1: f64, k2: f64) -> Result<Self> {
        for (name, value) in [("k1", k1), ("k2", k2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        Ok(Self { k1, k2 })
    }
}

impl Default for ExpHocbfParams {
    /// Critically damped `(d/dt + 1)^2`.
    fn default() -> Self {
        Self { k1: 1.0, k2: 2.0 }
    }
}

/// Enforces `h'' >= -k1 h - k2 h'`.
pub fn exp_hocbf_row(d: &BarrierDerivatives, p: &ExpHocbfParams) -> ConstraintRow {
    ConstraintRow::new(d.lglfh, -(p.k2 * d.h_dot + p.k1 * d.h + d.lf2h))
}

/// Lower bound on `h'` from the first-order finite-time condition, with
/// `alpha = |h0|^{1-p} / ((1-p) T)`.
pub fn ft_first_order_bound(h: f64, h0: f64, prescribed_time: f64, exponent: f64) -> Result<f64> {
    if !(exponent > 0.0 && exponent < 1.0) {
        return Err(Error::ExponentOutOfRange(exponent));
    }
    if !(prescribed_time > 0.0) {
        return Err(Error::NonPositiveTime(prescribed_time));
    }
    if h0 == 0.0 {
        return Err(Error::ZeroInitialBarrier);
    }
    let alpha = first_order_gain(h0, prescribed_time, exponent);
    Ok(-alpha * sig_pow(h, exponent))
}

pub(crate) fn first_order_gain(h0: f64, prescribed_time: f64, exponent: f64) -> f64 {
    h0.abs().powf(1.0 - exponent) / ((1.0 - exponent) * prescribed_time)
}

/// Gains of the recursive finite-time baseline.
///
/// `eps0` floors `|psi0|` inside the `|psi0|^{q1-1}` factor, which is singular
/// on the barrier boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtBaselineParams {
    pub p1: f64,
    pub p2: f64,
    pub q1: f64,
    pub q2: f64,
    pub eps0: f64,
}

impl FtBaselineParams {
    pub fn new(p1: f64, p2: f64, q1: f64, q2: f64, eps0: f64) -> Result<Self> {
        for (name, value) in [("p1", p1), ("p2", p2), ("eps0", eps0)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        for q in [q1, q2] {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::ExponentOutOfRange(q));
            }
        }
        Ok(Self { p1, p2, q1, q2, eps0 })
    }

    /// Number of gains a user has to pick before the run (`p1`, `q1`, `q2`).
    pub const USER_PARAMETERS: usize = 3;
}

impl Default for FtBaselineParams {
    fn default() -> Self {
        Self { p1: 1.0, p2: 1.0, q1: 0.5, q2: 0.5, eps0: 1e-6 }
    }
}

/// Enforces `psi1' + p2 sig(psi1)^q2 >= 0` with `psi1 = h' + p1 sig(h)^q1`.
pub fn ft_baseline_row(d: &BarrierDerivatives, p: &FtBaselineParams) -> ConstraintRow {
    let psi0 = d.h;
    let psi1 = d.h_dot + p.p1 * sig_pow(psi0, p.q1);
    let chain = p.p1 * p.q1 * psi0.abs().max(p.eps0).powf(p.q1 - 1.0) * d.h_dot;
    ConstraintRow::new(d.lglfh, -(d.lf2h + chain + p.p2 * sig_pow(psi1, p.q2)))
}

/// Two-term settling-time bound `sum psi_{i-1}^{1-q_i} / (p_i (1 - q_i))`.
///
/// `psi1_at_t1` is the first-level value at the (unknown in advance) time the
/// zeroth level settles, which is what makes choosing gains awkward.
pub fn time_bound(p: &FtBaselineParams, psi0_at_0: f64, psi1_at_t1: f64) -> Result<f64> {
    let mut total = 0.0;
    for (psi, gain, q) in [(psi0_at_0, p.p1, p.q1), (psi1_at_t1, p.p2, p.q2)] {
        if q == 1.0 {
            return Err(Error::ExponentOutOfRange(q));
        }
        total += psi.abs().powf(1.0 - q) / (gain * (1.0 - q));
    }
    Ok(total)
}

/// The constraint law an episode runs under, with its frozen parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintLaw {
    FixedTime(FixedTimeParams),
    ExpHocbf(ExpHocbfParams),
    FtBaseline(FtBaselineParams),
}

impl ConstraintLaw {
    pub fn row(&self, d: &BarrierDerivatives) -> ConstraintRow {
        match self {
            ConstraintLaw::FixedTime(p) => fixed_time_row(d, p),
            ConstraintLaw::ExpHocbf(p) => exp_hocbf_row(d, p),
            ConstraintLaw::FtBaseline(p) => ft_baseline_row(d, p),
        }
    }

    /// Real powers (`powf`) evaluated per row; trigonometry of the model is
    /// shared by all laws and not counted.
    pub fn power_evaluations_per_step(&self) -> usize {
        match self {
            ConstraintLaw::FixedTime(_) | ConstraintLaw::ExpHocbf(_) => 0,
            ConstraintLaw::FtBaseline(_) => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn derivs(h: f64, h_dot: f64, lf2h: f64) -> BarrierDerivatives {
        BarrierDerivatives { h, h_dot, lf2h, lglfh: Vector2::new(1.0, -2.0) }
    }

    #[test]
    fn fixed_time_init_examples() {
        let p = FixedTimeParams::init(-1.0, 0.0, 1.0).unwrap();
        assert_eq!((p.rate(), p.a0(), p.a1()), (-1.0, -1.0, 1.0));

        let p = FixedTimeParams::init(-1.0, 2.0, 1.0).unwrap();
        assert_eq!((p.rate(), p.a1()), (1.0, 1.0));
        assert_eq!(p.a0() + p.a1() * 1.0, 0.0);

        let p = FixedTimeParams::init(-4046.0, -900.0, 10.0).unwrap();
        assert_relative_eq!(p.rate(), 13046.0 / -404600.0, max_relative = 1e-15);
        assert_relative_eq!(p.rate(), -0.0322442, epsilon = 1e-7);
        assert_relative_eq!(p.a1(), 4046.0 / 10.0, max_relative = 1e-12);
    }

    #[test]
    fn fixed_time_init_errors() {
        assert_eq!(FixedTimeParams::init(0.0, 1.0, 1.0), Err(Error::ZeroInitialBarrier));
        assert_eq!(FixedTimeParams::init(0.5, 1.0, 1.0), Err(Error::AlreadySafe(0.5)));
        assert_eq!(FixedTimeParams::init(-1.0, 1.0, 0.0), Err(Error::NonPositiveTime(0.0)));
    }

    #[test]
    fn fixed_time_row_point_mass_example() {
        let d = BarrierDerivatives { h: -4046.0, h_dot: -900.0, lf2h: -200.0, lglfh: Vector2::new(90.0, 90.0) };
        let p = FixedTimeParams::init(d.h, d.h_dot, 10.0).unwrap();
        let row = fixed_time_row(&d, &p);
        // cT = 13046 / -40460
        let ct = 13046.0 / -40460.0;
        let expected = -(-200.0 + 2.0 * ct * -900.0 + ct * ct * -4046.0);
        assert_eq!(row.a, Vector2::new(90.0, 90.0));
        assert_relative_eq!(row.b, expected, max_relative = 1e-12);
        assert_relative_eq!(row.b, 40.26, epsilon = 5e-3);
    }

    #[test]
    fn fixed_time_row_degenerate_cases() {
        let p = FixedTimeParams::init(-1.0, 0.0, 1.0).unwrap();
        assert_eq!(fixed_time_row(&derivs(0.0, 0.0, 0.0), &p).b, 0.0);

        // c = 0 when h0 + h_dot0 T = 0: the row is exactly h'' >= 0.
        let p = FixedTimeParams::init(-2.0, 1.0, 2.0).unwrap();
        assert_eq!(p.rate(), 0.0);
        assert_eq!(fixed_time_row(&derivs(-3.0, 5.0, 7.0), &p).b, -7.0);
    }

    #[test]
    fn exp_hocbf_examples() {
        let p = ExpHocbfParams::new(1.0, 2.0).unwrap();
        assert_eq!(exp_hocbf_row(&derivs(-1.0, 0.0, 0.0), &p).b, 1.0);
        assert_eq!(exp_hocbf_row(&derivs(0.0, 0.0, 3.0), &p).b, -3.0);
        let zero = ExpHocbfParams { k1: 0.0, k2: 0.0 };
        assert_eq!(exp_hocbf_row(&derivs(-5.0, 2.0, 3.0), &zero).b, -3.0);
        assert!(ExpHocbfParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn first_order_examples() {
        assert_relative_eq!(first_order_gain(-1.0, 1.0, 0.5), 2.0);
        assert_relative_eq!(ft_first_order_bound(-1.0, -1.0, 1.0, 0.5).unwrap(), 2.0);
        assert_eq!(ft_first_order_bound(0.0, -1.0, 1.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(first_order_gain(-4.0, 2.0, 0.5), 2.0);
        assert_eq!(ft_first_order_bound(-1.0, -1.0, 1.0, 1.0), Err(Error::ExponentOutOfRange(1.0)));
        assert_eq!(ft_first_order_bound(-1.0, -1.0, 1.0, 0.0), Err(Error::ExponentOutOfRange(0.0)));
    }

    #[test]
    fn baseline_on_boundary_uses_floor() {
        let p = FtBaselineParams::default();
        let d = derivs(0.0, 1.0, 0.25);
        let row = ft_baseline_row(&d, &p);
        let expected = -(0.25 + 0.5 * 1e-6f64.powf(-0.5) * 1.0 + 1.0);
        assert_relative_eq!(row.b, expected, max_relative = 1e-12);
    }

    #[test]
    fn baseline_outside_set() {
        let p = FtBaselineParams::default();
        // psi1 = 0 + sig(-1)^0.5 = -1, so the last term is -1.
        let row = ft_baseline_row(&derivs(-1.0, 0.0, 0.0), &p);
        assert_relative_eq!(row.b, 1.0);

        let zero = FtBaselineParams { p1: 0.0, p2: 0.0, ..p };
        assert_eq!(ft_baseline_row(&derivs(-3.0, 2.0, 0.7), &zero).b, -0.7);
    }

    #[test]
    fn time_bound_examples() {
        let p = FtBaselineParams::default();
        assert_relative_eq!(time_bound(&p, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(time_bound(&p, 0.0, 0.0).unwrap(), 0.0);
        let p = FtBaselineParams { p2: 2.0, ..p };
        assert_relative_eq!(time_bound(&p, 4.0, 1.0).unwrap(), 5.0);
        let bad = FtBaselineParams { q1: 1.0, ..FtBaselineParams::default() };
        assert_eq!(time_bound(&bad, 1.0, 1.0), Err(Error::ExponentOutOfRange(1.0)));
    }

    #[test]
    fn baseline_param_validation() {
        assert!(FtBaselineParams::new(1.0, 1.0, 0.5, 0.5, 1e-6).is_ok());
        assert!(FtBaselineParams::new(1.0, 1.0, 1.0, 0.5, 1e-6).is_err());
        assert!(FtBaselineParams::new(-1.0, 1.0, 0.5, 0.5, 1e-6).is_err());
        assert!(FtBaselineParams::new(1.0, 1.0, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn envelope_rate_matches_difference() {
        let p = FixedTimeParams::init(-3.0, 0.7, 2.0).unwrap();
        let t = 0.8;
        let fd = (p.envelope(t + 1e-6) - p.envelope(t - 1e-6)) / 2e-6;
        assert_relative_eq!(fd, p.envelope_rate(t), max_relative = 1e-7);
        assert_relative_eq!(p.envelope(0.0), -3.0);
        assert_relative_eq!(p.envelope_rate(0.0), 0.7, max_relative = 1e-12);
    }
}
