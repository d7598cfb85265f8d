use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::la::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Pressure and velocity of an exact solution at a point.
pub type FieldValue = (C64, [C64; 2]);

/// Plane wave `p = exp(-i k d.x)`, `u = d p`.
pub fn plane_wave(k: f64, d: [f64; 2], x: [f64; 2]) -> FieldValue {
    let p = (-I * k * (d[0] * x[0] + d[1] * x[1])).exp();
    (p, [p * d[0], p * d[1]])
}

/// Two-dimensional paraxial Gaussian beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    /// Waist radius.
    pub waist: f64,
    /// Propagation direction in degrees from the x axis.
    pub angle_deg: f64,
    /// Location of the waist.
    pub focus: [f64; 2],
}

impl Default for GaussianBeam {
    fn default() -> Self {
        Self { waist: 0.1, angle_deg: 45.0, focus: [0.0, 0.0] }
    }
}

impl GaussianBeam {
    pub fn direction(&self) -> [f64; 2] {
        let a = self.angle_deg * PI / 180.0;
        [a.cos(), a.sin()]
    }

    /// Rayleigh range.
    pub fn rayleigh(&self, k: f64) -> f64 {
        0.5 * k * self.waist * self.waist
    }

    /// Axial and transverse coordinates of `x`.
    pub fn local_coords(&self, x: [f64; 2]) -> (f64, f64) {
        let d = self.direction();
        let (dx, dy) = (x[0] - self.focus[0], x[1] - self.focus[1]);
        (d[0] * dx + d[1] * dy, -d[1] * dx + d[0] * dy)
    }

    /// Beam half-width `w(s)` at axial distance `s` from the waist.
    pub fn width(&self, k: f64, s: f64) -> f64 {
        let zr = self.rayleigh(k);
        self.waist * (1.0 + (s / zr).powi(2)).sqrt()
    }

    /// `p = sqrt(q0/q) exp(-i k s - i k r^2 / (2 q))` with `q = s + i z_R`,
    /// and `u = i grad p / k`.
    pub fn eval(&self, k: f64, x: [f64; 2]) -> FieldValue {
        let d = self.direction();
        let (s, r) = self.local_coords(x);
        let q0 = C64::new(0.0, self.rayleigh(k));
        let q = C64::new(s, self.rayleigh(k));
        let p = (q0 / q).sqrt() * (-I * k * s - I * k * r * r / (2.0 * q)).exp();
        let dp_ds = p * (-0.5 / q - I * k + I * k * r * r / (2.0 * q * q));
        let dp_dr = p * (-I * k * r / q);
        let grad = [dp_ds * d[0] - dp_dr * d[1], dp_ds * d[1] + dp_dr * d[0]];
        (p, [I * grad[0] / k, I * grad[1] / k])
    }
}

/// Impedance data `u_0` on the boundary.
#[derive(Clone, Default)]
pub enum BoundaryLoad {
    #[default]
    None,
    /// Data matching the plane wave with unit direction `d`.
    PlaneWave { direction: [f64; 2] },
    /// Beam entering through the faces `x = 0` and `y = 0`.
    GaussianBeam(GaussianBeam),
    /// `u_0(x, n)` for boundary point `x` with outward normal `n`.
    Custom(Arc<dyn Fn([f64; 2], [f64; 2]) -> C64 + Send + Sync>),
}

impl fmt::Debug for BoundaryLoad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => write!(f, "None"),
            Self::PlaneWave { direction } => write!(f, "PlaneWave({direction:?})"),
            Self::GaussianBeam(b) => write!(f, "{b:?}"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoundaryLoad {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::None)
    }

    /// `u_0 = Z^{-1} p - u.n` for the underlying exact field.
    pub fn eval(&self, k: f64, z: f64, x: [f64; 2], n: [f64; 2]) -> C64 {
        let from_field = |(p, u): FieldValue| p / z - (u[0] * n[0] + u[1] * n[1]);
        match self {
            Self::None => C64::new(0.0, 0.0),
            Self::PlaneWave { direction } => from_field(plane_wave(k, *direction, x)),
            Self::GaussianBeam(b) => {
                if n[0] < 0.0 || n[1] < 0.0 {
                    from_field(b.eval(k, x))
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            Self::Custom(f) => f(x, n),
        }
    }

    /// The exact solution when one is known.
    pub fn exact(&self, k: f64, x: [f64; 2]) -> Option<FieldValue> {
        match self {
            Self::PlaneWave { direction } => Some(plane_wave(k, *direction, x)),
            _ => None,
        }
    }
}
