//! Goal-reaching barrier `h(x) = r^2 - |p - c|^2` and its second-order
//! Lie-derivative decomposition for each vehicle model.
//!
//! The input enters only at the second derivative:
//! `h'' = lf2h + lglfh . u`.

use nalgebra::Vector2;

use crate::dynamics::{BicycleGeometry, ControlInput, ModelKind, State};
use crate::error::{Error, Result};

/// Closed disk `{ p : |p - center| <= radius }`, the super-level set `h >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSpec {
    center: Vector2<f64>,
    radius: f64,
}

impl BarrierSpec {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidRadius(radius));
        }
        Ok(Self { center: Vector2::from(center), radius })
    }

    pub fn center(&self) -> Vector2<f64> {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Barrier value only.
    pub fn value(&self, state: &State) -> f64 {
        let d = state.position() - self.center;
        self.radius * self.radius - d.norm_squared()
    }
}

impl Default for BarrierSpec {
    /// Radius-2 goal disk centred at (45, 45).
    fn default() -> Self {
        Self { center: Vector2::new(45.0, 45.0), radius: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierDerivatives {
    pub h: f64,
    pub h_dot: f64,
    /// Drift part of the second derivative.
    pub lf2h: f64,
    /// Coefficient of the input in the second derivative.
    pub lglfh: Vector2<f64>,
}

impl BarrierDerivatives {
    pub fn second_derivative(&self, u: &ControlInput) -> f64 {
        self.lf2h + self.lglfh.dot(&u.0)
    }
}

pub fn evaluate(state: &State, spec: &BarrierSpec, geom: Option<&BicycleGeometry>) -> Result<BarrierDerivatives> {
    let s = &state.values;
    let dx = s[0] - spec.center[0];
    let dy = s[1] - spec.center[1];
    let h = spec.radius * spec.radius - dx * dx - dy * dy;

    let derivs = match state.kind {
        ModelKind::PointMass => {
            let (vx, vy) = (s[2], s[3]);
            BarrierDerivatives {
                h,
                h_dot: -2.0 * (dx * vx + dy * vy),
                lf2h: -2.0 * (vx * vx + vy * vy),
                lglfh: Vector2::new(-2.0 * dx, -2.0 * dy),
            }
        }
        ModelKind::Unicycle | ModelKind::Bicycle => {
            let (sin, cos) = s[2].sin_cos();
            let v = s[3];
            // Components of the offset along and across the heading.
            let along = dx * cos + dy * sin;
            let across = -dx * sin + dy * cos;
            let turn_gain = match state.kind {
                ModelKind::Bicycle => v * v / geom.ok_or(Error::MissingGeometry)?.rear_axle(),
                _ => v,
            };
            BarrierDerivatives {
                h,
                h_dot: -2.0 * v * along,
                lf2h: -2.0 * v * v,
                lglfh: Vector2::new(-2.0 * along, -2.0 * turn_gain * across),
            }
        }
    };
    Ok(derivs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_at_origin() {
        let d = evaluate(&State::new(ModelKind::PointMass, [0.0; 4]), &BarrierSpec::default(), None).unwrap();
        assert_eq!(d.h, -4046.0);
        assert_eq!(d.h_dot, 0.0);
        assert_eq!(d.lf2h, 0.0);
        assert_eq!(d.lglfh, Vector2::new(90.0, 90.0));
    }

    #[test]
    fn point_mass_moving_away() {
        let s = State::new(ModelKind::PointMass, [0.0, 0.0, -10.0, 0.0]);
        let d = evaluate(&s, &BarrierSpec::default(), None).unwrap();
        assert_eq!(d.h_dot, -900.0);
        assert_eq!(d.lf2h, -200.0);
    }

    #[test]
    fn centre_of_goal() {
        for kind in ModelKind::ALL {
            let s = State::new(kind, [45.0, 45.0, 0.3, 2.0]);
            let d = evaluate(&s, &BarrierSpec::default(), Some(&BicycleGeometry::default())).unwrap();
            assert_eq!(d.h, 4.0);
            if kind == ModelKind::PointMass {
                assert_eq!(d.lglfh, Vector2::zeros());
            } else {
                assert_eq!(d.lglfh[0], 0.0);
            }
        }
    }

    #[test]
    fn point_mass_input_row_ignores_velocity() {
        let spec = BarrierSpec::default();
        let a = evaluate(&State::new(ModelKind::PointMass, [3.0, 4.0, 0.0, 0.0]), &spec, None).unwrap();
        let b = evaluate(&State::new(ModelKind::PointMass, [3.0, 4.0, -8.0, 17.0]), &spec, None).unwrap();
        assert_eq!(a.lglfh, b.lglfh);
    }

    #[test]
    fn steered_models_at_rest_lose_steering() {
        let geom = BicycleGeometry::default();
        for kind in [ModelKind::Unicycle, ModelKind::Bicycle] {
            let s = State::new(kind, [3.0, 4.0, 1.1, 0.0]);
            let d = evaluate(&s, &BarrierSpec::default(), Some(&geom)).unwrap();
            assert_eq!(d.lglfh[1], 0.0);
        }
    }

    #[test]
    fn bicycle_requires_geometry() {
        let s = State::new(ModelKind::Bicycle, [0.0; 4]);
        assert_eq!(evaluate(&s, &BarrierSpec::default(), None), Err(Error::MissingGeometry));
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(BarrierSpec::new([0.0, 0.0], 0.0).is_err());
        assert!(BarrierSpec::new([0.0, 0.0], f64::NAN).is_err());
    }
}
