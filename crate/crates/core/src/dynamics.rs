//! Control-affine vehicle models `x' = f(x) + g(x) u`.
//!
//! All three models carry a 4-dimensional state and a 2-dimensional input.
//! Point-mass states are ordered `(x, y, vx, vy)`; unicycle and bicycle states
//! are ordered `(x, y, heading, speed)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix4x2, Vector2, Vector4};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Double integrator in the plane; inputs are `(ux, uy)` accelerations.
    PointMass,
    /// Acceleration-controlled unicycle; inputs are `(a, omega)`.
    Unicycle,
    /// Simplified kinematic bicycle; inputs are `(a, beta)`.
    Bicycle,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::PointMass, ModelKind::Unicycle, ModelKind::Bicycle];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PointMass => "pointmass",
            ModelKind::Unicycle => "unicycle",
            ModelKind::Bicycle => "bicycle",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pointmass" | "point-mass" => Ok(ModelKind::PointMass),
            "unicycle" => Ok(ModelKind::Unicycle),
            "bicycle" => Ok(ModelKind::Bicycle),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

/// Model state tagged with the ordering it must be read in.
///
/// The heading of the steered models is never wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub values: Vector4<f64>,
    pub kind: ModelKind,
}

impl State {
    pub fn new(kind: ModelKind, values: [f64; 4]) -> Self {
        Self { values: Vector4::from(values), kind }
    }

    pub fn position(&self) -> Vector2<f64> {
        Vector2::new(self.values[0], self.values[1])
    }
}

/// Two-channel control input. Magnitudes are unconstrained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInput(pub Vector2<f64>);

impl ControlInput {
    pub fn zero() -> Self {
        Self(Vector2::zeros())
    }

    pub fn new(u1: f64, u2: f64) -> Self {
        Self(Vector2::new(u1, u2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleGeometry {
    rear_axle: f64,
}

impl BicycleGeometry {
    pub fn new(rear_axle: f64) -> Result<Self> {
        if rear_axle > 0.0 && rear_axle.is_finite() {
            Ok(Self { rear_axle })
        } else {
            Err(Error::InvalidGeometry(rear_axle))
        }
    }

    /// Distance from the centre of mass to the rear axle, in metres.
    pub fn rear_axle(&self) -> f64 {
        self.rear_axle
    }
}

impl Default for BicycleGeometry {
    fn default() -> Self {
        Self { rear_axle: 10.0 }
    }
}

/// Drift vector field `f(x)`.
pub fn drift(state: &State) -> Vector4<f64> {
    let s = &state.values;
    match state.kind {
        ModelKind::PointMass => Vector4::new(s[2], s[3], 0.0, 0.0),
        ModelKind::Unicycle | ModelKind::Bicycle => {
            let (sin, cos) = s[2].sin_cos();
            Vector4::new(s[3] * cos, s[3] * sin, 0.0, 0.0)
        }
    }
}

/// Input matrix `g(x)`; the geometry is only consulted for the bicycle.
pub fn input_matrix(state: &State, geom: Option<&BicycleGeometry>) -> Result<Matrix4x2<f64>> {
    let m = match state.kind {
        ModelKind::PointMass => Matrix4x2::new(
            0.0, 0.0, //
            0.0, 0.0, //
            1.0, 0.0, //
            0.0, 1.0,
        ),
        ModelKind::Unicycle => Matrix4x2::new(
            0.0, 0.0, //
            0.0, 0.0, //
            0.0, 1.0, //
            1.0, 0.0,
        ),
        ModelKind::Bicycle => {
            let geom = geom.ok_or(Error::MissingGeometry)?;
            Matrix4x2::new(
                0.0, 0.0, //
                0.0, 0.0, //
                0.0, state.values[3] / geom.rear_axle(), //
                1.0, 0.0,
            )
        }
    };
    Ok(m)
}

/// Full state derivative `f(x) + g(x) u`.
pub fn derivative(state: &State, u: &ControlInput, geom: Option<&BicycleGeometry>) -> Result<Vector4<f64>> {
    Ok(drift(state) + input_matrix(state, geom)? * u.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn drift_examples() {
        let pm = State::new(ModelKind::PointMass, [0.0, 0.0, -10.0, 0.0]);
        assert_eq!(drift(&pm), Vector4::new(-10.0, 0.0, 0.0, 0.0));

        let uni = State::new(ModelKind::Unicycle, [0.0, 0.0, 0.0, -20.0]);
        assert_eq!(drift(&uni), Vector4::new(-20.0, 0.0, 0.0, 0.0));

        let turned = State::new(ModelKind::Unicycle, [0.0, 0.0, FRAC_PI_2, 3.0]);
        let f = drift(&turned);
        assert!(f[0].abs() < 1e-15);
        assert_eq!(f[1], 3.0);
    }

    #[test]
    fn bicycle_steering_gain_scales_with_speed() {
        let s = State::new(ModelKind::Bicycle, [0.0, 0.0, 0.0, -20.0]);
        let g = input_matrix(&s, Some(&BicycleGeometry::new(10.0).unwrap())).unwrap();
        assert_eq!((g[(2, 0)], g[(2, 1)]), (0.0, -2.0));
        assert_eq!((g[(3, 0)], g[(3, 1)]), (1.0, 0.0));
    }

    #[test]
    fn bicycle_needs_geometry() {
        let s = State::new(ModelKind::Bicycle, [0.0; 4]);
        assert_eq!(input_matrix(&s, None), Err(Error::MissingGeometry));
        assert!(BicycleGeometry::new(0.0).is_err());
        assert!(BicycleGeometry::new(-1.0).is_err());
    }

    #[test]
    fn constant_input_matrices() {
        let a = State::new(ModelKind::PointMass, [1.0, 2.0, 3.0, 4.0]);
        let b = State::new(ModelKind::PointMass, [-7.0, 0.5, 9.0, -4.0]);
        assert_eq!(input_matrix(&a, None).unwrap(), input_matrix(&b, None).unwrap());

        let a = State::new(ModelKind::Unicycle, [1.0, 2.0, 3.0, 4.0]);
        let b = State::new(ModelKind::Unicycle, [-7.0, 0.5, 9.0, -4.0]);
        let g = input_matrix(&a, None).unwrap();
        assert_eq!(g, input_matrix(&b, None).unwrap());
        assert_eq!((g[(2, 1)], g[(3, 0)]), (1.0, 1.0));
    }

    #[test]
    fn bicycle_at_rest_loses_steering_column() {
        let s = State::new(ModelKind::Bicycle, [3.0, -1.0, 0.7, 0.0]);
        let g = input_matrix(&s, Some(&BicycleGeometry::default())).unwrap();
        assert!(g.column(1).iter().all(|&x| x == 0.0));
    }
}
