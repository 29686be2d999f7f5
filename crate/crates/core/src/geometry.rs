//! Pseudo-hyperbolic geometry on the unit disk and the upper half-plane.
//!
//! Distances are always evaluated with the formula native to the model the
//! points live in. Quantities that describe how a half-plane point sits
//! relative to the boundary of the disk (gap to the circle, chord to a
//! boundary point, Poisson kernel) are computed from closed forms of the
//! Cayley pull-back so that points far out in the half-plane keep full
//! relative precision.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Points closer than this to the boundary are rejected.
pub const BOUNDARY_EPS: f64 = 1e-12;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Disk,
    HalfPlane,
}

impl Model {
    pub fn is_interior(self, z: Complex64) -> bool {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return false;
        }
        match self {
            Model::Disk => z.norm() < 1.0 - BOUNDARY_EPS,
            Model::HalfPlane => z.im > BOUNDARY_EPS,
        }
    }

    /// Canonical base point: 0 in the disk, i in the half-plane.
    pub fn base_point(self) -> Complex64 {
        match self {
            Model::Disk => Complex64::new(0.0, 0.0),
            Model::HalfPlane => I,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Disk => "disk",
            Model::HalfPlane => "half-plane",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A complex number tagged with the model it is interior to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    value: Complex64,
    model: Model,
}

impl ModelPoint {
    pub fn new(value: Complex64, model: Model) -> Result<Self> {
        if model.is_interior(value) {
            Ok(Self { value, model })
        } else {
            Err(Error::domain(format!(
                "{value} is not interior to the {model} (boundary tolerance {BOUNDARY_EPS:e})"
            )))
        }
    }

    pub fn disk(value: Complex64) -> Result<Self> {
        Self::new(value, Model::Disk)
    }

    pub fn half_plane(value: Complex64) -> Result<Self> {
        Self::new(value, Model::HalfPlane)
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn model(&self) -> Model {
        self.model
    }
}

/// A point on the boundary of one of the models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    /// Unit-modulus point of the disk boundary.
    Circle(Complex64),
    /// Finite point of the real axis.
    Real(f64),
    /// The point at infinity of the half-plane.
    Infinity,
}

impl BoundaryPoint {
    /// The corresponding point of the unit circle under the Cayley transform
    /// (identity for circle points).
    pub fn on_circle(&self) -> Complex64 {
        match *self {
            BoundaryPoint::Circle(z) => z,
            BoundaryPoint::Real(x) => {
                let x = Complex64::new(x, 0.0);
                (x - I) / (x + I)
            }
            BoundaryPoint::Infinity => ONE,
        }
    }

    /// Distance between the circle images of two boundary points.
    pub fn circle_distance(&self, other: &BoundaryPoint) -> f64 {
        (self.on_circle() - other.on_circle()).norm()
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Circle(z) => write!(f, "{z}"),
            BoundaryPoint::Real(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => f.write_str("inf"),
        }
    }
}

/// A linear fractional map z -> (az + b)/(cz + d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    /// Cayley transform z -> (z - i)/(z + i), half-plane onto disk.
    pub fn cayley() -> Self {
        Self::new(ONE, -I, ONE, I)
    }

    /// Maps the disk onto the half-plane sending `zeta` to infinity and 0 to i.
    pub fn disk_to_half_plane(zeta: Complex64) -> Self {
        // z -> i (zeta + z) / (zeta - z)
        Self::new(I, I * zeta, -ONE, zeta)
    }

    /// Half-plane automorphism sending the real point `x0` to infinity.
    pub fn real_point_to_infinity(x0: f64) -> Self {
        // z -> -1 / (z - x0)
        Self::new(
            Complex64::new(0.0, 0.0),
            -ONE,
            ONE,
            Complex64::new(-x0, 0.0),
        )
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        (self.a * self.d - self.b * self.c) / (den * den)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn then(&self, outer: &Mobius) -> Self {
        // outer ∘ self
        Self::new(
            outer.a * self.a + outer.b * self.c,
            outer.a * self.b + outer.b * self.d,
            outer.c * self.a + outer.d * self.c,
            outer.c * self.b + outer.d * self.d,
        )
    }
}

/// Pseudo-hyperbolic distance |z - w| / |1 - conj(z) w| in the disk.
pub fn pd_disk(z: Complex64, w: Complex64) -> f64 {
    let num = (z - w).norm();
    if num == 0.0 {
        return 0.0;
    }
    num / (ONE - z.conj() * w).norm()
}

/// Pseudo-hyperbolic distance |(w - z)/(w - conj(z))| in the half-plane.
pub fn pd_half(z: Complex64, w: Complex64) -> f64 {
    let num = (w - z).norm();
    if num == 0.0 {
        return 0.0;
    }
    num / (w - z.conj()).norm()
}

/// Pseudo-hyperbolic distance in the given model, without validation.
pub fn pd_raw(model: Model, z: Complex64, w: Complex64) -> f64 {
    match model {
        Model::Disk => pd_disk(z, w),
        Model::HalfPlane => pd_half(z, w),
    }
}

pub fn pd(z: &ModelPoint, w: &ModelPoint) -> Result<f64> {
    if z.model != w.model {
        return Err(Error::usage(format!(
            "pseudo-hyperbolic distance between a {} point and a {} point",
            z.model, w.model
        )));
    }
    Ok(pd_raw(z.model, z.value, w.value))
}

/// Hyperbolic distance log((1 + d)/(1 - d)) from a pseudo-hyperbolic one.
pub fn rho(d: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&d) {
        return Err(Error::domain(format!(
            "pseudo-hyperbolic distance {d} outside [0, 1)"
        )));
    }
    Ok(d.ln_1p() - (-d).ln_1p())
}

/// Cayley transform of a half-plane point into the disk.
pub fn cayley(z: &ModelPoint) -> Result<ModelPoint> {
    if z.model != Model::HalfPlane {
        return Err(Error::usage("cayley expects a half-plane point"));
    }
    ModelPoint::disk(cayley_raw(z.value))
}

/// Inverse Cayley transform of a disk point into the half-plane.
pub fn cayley_inv(w: &ModelPoint) -> Result<ModelPoint> {
    if w.model != Model::Disk {
        return Err(Error::usage("inverse cayley expects a disk point"));
    }
    ModelPoint::half_plane(cayley_inv_raw(w.value))
}

pub fn cayley_raw(z: Complex64) -> Complex64 {
    (z - I) / (z + I)
}

pub fn cayley_inv_raw(w: Complex64) -> Complex64 {
    I * (ONE + w) / (ONE - w)
}

/// Poisson kernel at 1: (1 - |w|^2) / |1 - w|^2.
pub fn poisson(w: &ModelPoint) -> Result<f64> {
    poisson_at(w, ONE)
}

/// Poisson kernel at the boundary point `zeta`.
pub fn poisson_at(w: &ModelPoint, zeta: Complex64) -> Result<f64> {
    if w.model != Model::Disk {
        return Err(Error::usage("poisson kernel expects a disk point"));
    }
    if (zeta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("{zeta} is not on the unit circle")));
    }
    let z = w.value;
    Ok((1.0 - z.norm_sqr()) / (zeta - z).norm_sqr())
}

/// Horodisk {w : P_contact(w) > 1/level}, internally tangent at `contact`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horocycle {
    contact: Complex64,
    level: f64,
}

impl Horocycle {
    pub fn new(contact: Complex64, level: f64) -> Result<Self> {
        if !(level > 0.0 && level.is_finite()) {
            return Err(Error::domain(format!(
                "horocycle level {level} must be positive"
            )));
        }
        if (contact.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "{contact} is not on the unit circle"
            )));
        }
        Ok(Self { contact, level })
    }

    pub fn contact(&self) -> Complex64 {
        self.contact
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Membership, evaluated by rotating `w` so the contact point sits at 1.
    pub fn contains(&self, w: &ModelPoint) -> Result<bool> {
        let rotated = ModelPoint::disk(w.value * self.contact.conj())?;
        Ok(poisson(&rotated)? > 1.0 / self.level)
    }

    /// Euclidean center and radius: the level set P = 1/t is the circle of
    /// radius t/(1+t) centred at contact/(1+t).
    pub fn circle(&self) -> (Complex64, f64) {
        let t = self.level;
        (self.contact / (1.0 + t), t / (1.0 + t))
    }
}

/// 1 - |w| for the disk image of `z` (Cayley image for half-plane points).
pub fn boundary_gap(model: Model, z: Complex64) -> f64 {
    match model {
        Model::Disk => (1.0 - z.norm_sqr()) / (1.0 + z.norm()),
        Model::HalfPlane => {
            let s = (z + I).norm_sqr();
            let one_minus_sq = 4.0 * z.im / s;
            let modulus = ((z - I).norm_sqr() / s).sqrt();
            one_minus_sq / (1.0 + modulus)
        }
    }
}

/// 1 - |w|^2 for the disk image of `z`.
pub fn boundary_gap_sq(model: Model, z: Complex64) -> f64 {
    match model {
        Model::Disk => 1.0 - z.norm_sqr(),
        Model::HalfPlane => 4.0 * z.im / (z + I).norm_sqr(),
    }
}

/// zeta - w, with zeta and w both taken in the disk (Cayley images for the
/// half-plane model).
pub fn boundary_offset(model: Model, z: Complex64, zeta: &BoundaryPoint) -> Complex64 {
    match (model, zeta) {
        (Model::Disk, _) => zeta.on_circle() - z,
        (Model::HalfPlane, BoundaryPoint::Infinity) => 2.0 * I / (z + I),
        (Model::HalfPlane, BoundaryPoint::Real(x)) => {
            let x = Complex64::new(*x, 0.0);
            2.0 * I * (x - z) / ((x + I) * (z + I))
        }
        (Model::HalfPlane, BoundaryPoint::Circle(c)) => *c - cayley_raw(z),
    }
}

/// Poisson kernel at `zeta` of the disk image of `z`.
pub fn poisson_raw(model: Model, z: Complex64, zeta: &BoundaryPoint) -> f64 {
    boundary_gap_sq(model, z) / boundary_offset(model, z, zeta).norm_sqr()
}

/// arg(zeta - w) - arg(zeta), wrapped into (-pi, pi].
pub fn approach_angle(model: Model, z: Complex64, zeta: &BoundaryPoint) -> f64 {
    wrap_angle(boundary_offset(model, z, zeta).arg() - zeta.on_circle().arg())
}

pub fn wrap_angle(t: f64) -> f64 {
    let mut t = t % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Points at pseudo-hyperbolic distance `radius` from `center`, `count`
/// of them equally spaced in the disk-model angle.
pub fn pd_circle(model: Model, center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let u = Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / count as f64);
            match model {
                Model::Disk => (u + center) / (ONE + center.conj() * u),
                // (w - c)/(w - conj c) = u  =>  w = (c - u conj c)/(1 - u)
                Model::HalfPlane => (center - u * center.conj()) / (ONE - u),
            }
        })
        .collect()
}

/// (1 - |w_{n+1}|) / |w_{n+1} - w_n|, the quantity bounded below by
/// (1 - a)/(2a) along sequences with steps at most a.
pub fn lb_ratio(w_n: Complex64, w_next: Complex64) -> f64 {
    (1.0 - w_next.norm()) / (w_next - w_n).norm()
}

pub fn lb_bound(a: f64) -> f64 {
    (1.0 - a) / (2.0 * a)
}
