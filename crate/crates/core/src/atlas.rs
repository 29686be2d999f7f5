//! Analytic self-maps: the closed-form parabolic catalogue and user maps.
//!
//! Every catalogue map is a conjugate of a translation by an explicit
//! conformal map built from square roots. Square roots use the branch with
//! non-negative imaginary part (cut along the positive real axis); on the
//! closed upper half-plane this agrees with the principal branch. After each
//! root the intermediate value is checked against the region the conjugating
//! map requires, and a [`Error::Branch`] is raised if it leaves it.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{boundary_gap, cayley_inv_raw, cayley_raw, Mobius, Model, BOUNDARY_EPS};
use crate::taxonomy::{BisbsClass, ForwardClass, Label};

type MapFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Stable identifiers of the catalogue maps.
pub const ATLAS_NAMES: [&str; 6] = [
    "ia_empty",
    "ib_empty",
    "iib_empty",
    "ia_1",
    "iib_1",
    "iib_2",
];

/// Square root with non-negative imaginary part.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let r = w.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// An analytic self-map of the disk or of the upper half-plane.
#[derive(Clone)]
pub struct SelfMap {
    name: String,
    model: Model,
    eval: MapFn,
    deriv: Option<MapFn>,
    inverse: Option<MapFn>,
    label: Option<Label>,
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("name", &self.name)
            .field("model", &self.model)
            .field("closed_form_derivative", &self.deriv.is_some())
            .field("inverse_branch", &self.inverse.is_some())
            .field("label", &self.label)
            .finish()
    }
}

impl SelfMap {
    /// Builds a map without sampling it. Use [`SelfMap::user`] for maps that
    /// have not been checked to be self-maps.
    pub fn new<F>(name: impl Into<String>, model: Model, eval: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            model,
            eval: Arc::new(eval),
            deriv: None,
            inverse: None,
            label: None,
        }
    }

    /// Builds a user-supplied map and samples it on 10^3 interior points.
    /// Violations are logged as a warning; the map is returned regardless.
    pub fn user<F>(name: impl Into<String>, model: Model, eval: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        let map = Self::new(name, model, eval);
        map.warn_on_violations();
        map
    }

    pub fn with_derivative<F>(mut self, deriv: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        self.deriv = Some(Arc::new(deriv));
        self
    }

    pub fn with_inverse<F>(mut self, inverse: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn has_closed_form_derivative(&self) -> bool {
        self.deriv.is_some()
    }

    /// Evaluates the map at an interior point; the result must be interior.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !self.model.is_interior(z) {
            return Err(Error::domain(format!(
                "{} evaluated at {z}, not interior to the {}",
                self.name, self.model
            )));
        }
        let w = (self.eval)(z)?;
        if !self.model.is_interior(w) {
            return Err(Error::range(format!("{} at {z}", self.name), w));
        }
        Ok(w)
    }

    /// Derivative: closed form when supplied, central difference otherwise.
    pub fn deriv(&self, z: Complex64) -> Result<Complex64> {
        match &self.deriv {
            Some(d) => d(z),
            None => self.central_difference(z),
        }
    }

    /// Central difference along the real direction, with step
    /// 1e-6 max(1, |z|) shrunk to stay inside the disk.
    pub fn central_difference(&self, z: Complex64) -> Result<Complex64> {
        let mut h = 1e-6 * z.norm().max(1.0);
        if self.model == Model::Disk {
            h = h.min(0.25 * boundary_gap(Model::Disk, z));
        }
        let h = Complex64::new(h, 0.0);
        Ok((self.eval(z + h)? - self.eval(z - h)?) / (2.0 * h))
    }

    /// Preimage of `w` under the explicit inverse branch.
    pub fn invert(&self, w: Complex64) -> Result<Complex64> {
        let inverse = self
            .inverse
            .as_ref()
            .ok_or_else(|| Error::usage(format!("{} has no explicit inverse branch", self.name)))?;
        if !self.model.is_interior(w) {
            return Err(Error::domain(format!(
                "{w} is not interior to the {}",
                self.model
            )));
        }
        match inverse(w) {
            Ok(z) if self.model.is_interior(z) => Ok(z),
            Ok(_) | Err(Error::Branch(_)) | Err(Error::NoPreimage { .. }) => {
                Err(Error::NoPreimage { target: w })
            }
            Err(e) => Err(e),
        }
    }

    /// 10^3 deterministic interior sample points for the model.
    pub fn sample_points(model: Model) -> Vec<Complex64> {
        let mut pts = Vec::with_capacity(1000);
        match model {
            Model::Disk => {
                for r in 0..25 {
                    let radius = 0.999 * (r as f64 + 0.5) / 25.0;
                    for t in 0..40 {
                        let theta = std::f64::consts::TAU * (t as f64 + 0.25) / 40.0;
                        pts.push(Complex64::from_polar(radius, theta));
                    }
                }
            }
            Model::HalfPlane => {
                for yi in 0..25 {
                    let y = 10f64.powf(-3.0 + 6.0 * yi as f64 / 24.0);
                    for xi in 0..40 {
                        let x = -10.0 + 20.0 * xi as f64 / 39.0;
                        pts.push(Complex64::new(x, y));
                    }
                }
            }
        }
        pts
    }

    /// Sample points whose image is not interior (or fails to evaluate).
    pub fn sample_violations(&self) -> Vec<Complex64> {
        Self::sample_points(self.model)
            .into_iter()
            .filter(|&z| self.eval(z).is_err())
            .collect()
    }

    fn warn_on_violations(&self) {
        let bad = self.sample_violations();
        if !bad.is_empty() {
            let shown: Vec<String> = bad.iter().take(8).map(|z| z.to_string()).collect();
            log::warn!(
                "{}: {} of 1000 samples do not map into the {}: {}{}",
                self.name,
                bad.len(),
                self.model,
                shown.join(", "),
                if bad.len() > 8 { ", ..." } else { "" }
            );
        }
    }

    /// The conjugate z -> -conj(phi(-conj z)) of a half-plane map by the
    /// reflection in the imaginary axis.
    pub fn reflected(&self) -> Result<SelfMap> {
        if self.model != Model::HalfPlane {
            return Err(Error::usage("reflection is defined for half-plane maps"));
        }
        let refl = |z: Complex64| -z.conj();
        let eval = self.eval.clone();
        let mut out = SelfMap::new(format!("{}~", self.name), Model::HalfPlane, move |z| {
            eval(refl(z)).map(refl)
        });
        if let Some(d) = self.deriv.clone() {
            out.deriv = Some(Arc::new(move |z| d(refl(z)).map(|v| v.conj())));
        }
        if let Some(inv) = self.inverse.clone() {
            out.inverse = Some(Arc::new(move |w| inv(refl(w)).map(refl)));
        }
        out.label = self.label;
        Ok(out)
    }

    /// The conjugate T ∘ phi ∘ T^-1 for a Möbius map T from this model onto
    /// `target`.
    pub fn conjugated(&self, name: impl Into<String>, t: Mobius, target: Model) -> SelfMap {
        let t_inv = t.inverse();
        let eval = self.eval.clone();
        let mut out = SelfMap::new(name, target, move |u| {
            eval(t_inv.apply(u)).map(|w| t.apply(w))
        });
        let eval = self.eval.clone();
        let deriv = self.deriv.clone();
        let source = self.model;
        let base = self.clone();
        out.deriv = Some(Arc::new(move |u| {
            let z = t_inv.apply(u);
            let w = eval(z)?;
            let dphi = match &deriv {
                Some(d) => d(z)?,
                None if source.is_interior(z) => base.central_difference(z)?,
                None => return Err(Error::domain(format!("{z} outside the source model"))),
            };
            Ok(t.derivative(w) * dphi * t_inv.derivative(u))
        }));
        if let Some(inv) = self.inverse.clone() {
            out.inverse = Some(Arc::new(move |w| inv(t_inv.apply(w)).map(|z| t.apply(z))));
        }
        out
    }
}

/// Evaluates `m` at `z`.
pub fn eval_map(m: &SelfMap, z: Complex64) -> Result<Complex64> {
    m.eval(z)
}

/// Preimage of `w` under the explicit inverse branch of `m`.
pub fn invert_branch(m: &SelfMap, w: Complex64) -> Result<Complex64> {
    m.invert(w)
}

type Oracle = fn(usize) -> Complex64;

/// A catalogue map with its closed-form orbits and expected label.
#[derive(Debug, Clone)]
pub struct AtlasEntry {
    pub name: &'static str,
    pub map: SelfMap,
    /// Closed-form forward orbit z_n, valid (interior) from
    /// `forward_oracle_start` on.
    pub forward_oracle: Option<Oracle>,
    pub forward_oracle_start: usize,
    /// Closed-form backward sequence w_n with phi(w_{n+1}) = w_n.
    pub backward_oracle: Option<Oracle>,
    pub expected_label: Label,
}

/// Looks up a catalogue map by its stable name.
pub fn atlas(name: &str) -> Result<AtlasEntry> {
    use BisbsClass::*;
    use ForwardClass::*;
    let entry = match name {
        "ia_empty" => AtlasEntry {
            name: "ia_empty",
            map: SelfMap::new(name, Model::HalfPlane, ia_empty_eval)
                .with_derivative(ia_empty_deriv)
                .with_inverse(ia_empty_inverse),
            forward_oracle: Some(|n| {
                let r = sqrt_upper(Complex64::new(n as f64, 1.0)) - ONE;
                r * r
            }),
            forward_oracle_start: 1,
            backward_oracle: None,
            expected_label: Label::new(ParabolicIa, Empty),
        },
        "ib_empty" => AtlasEntry {
            name: "ib_empty",
            map: SelfMap::new(name, Model::HalfPlane, ib_empty_eval)
                .with_derivative(ib_empty_deriv)
                .with_inverse(ib_empty_inverse),
            forward_oracle: Some(|n| {
                let r = Complex64::new(n as f64, 1.0);
                r * r
            }),
            forward_oracle_start: 1,
            backward_oracle: None,
            expected_label: Label::new(ParabolicIb, Empty),
        },
        "iib_empty" => AtlasEntry {
            name: "iib_empty",
            map: SelfMap::new(name, Model::HalfPlane, |z| Ok(z + I))
                .with_derivative(|_| Ok(ONE))
                .with_inverse(|w| {
                    if w.im > 1.0 + BOUNDARY_EPS {
                        Ok(w - I)
                    } else {
                        Err(Error::NoPreimage { target: w })
                    }
                }),
            forward_oracle: Some(|n| Complex64::new(0.0, (n + 1) as f64)),
            forward_oracle_start: 0,
            backward_oracle: None,
            expected_label: Label::new(ParabolicIIb, Empty),
        },
        "ia_1" => AtlasEntry {
            name: "ia_1",
            map: SelfMap::new(name, Model::HalfPlane, |z| Ok(z + ONE))
                .with_derivative(|_| Ok(ONE))
                .with_inverse(|w| Ok(w - ONE)),
            forward_oracle: Some(|n| Complex64::new(n as f64, 1.0)),
            forward_oracle_start: 0,
            backward_oracle: Some(|n| Complex64::new(-(n as f64), 1.0)),
            expected_label: Label::new(ParabolicIa, NonZeroHeight),
        },
        "iib_1" => AtlasEntry {
            name: "iib_1",
            map: SelfMap::new(name, Model::HalfPlane, iib_1_eval)
                .with_derivative(iib_1_deriv)
                .with_inverse(iib_1_inverse),
            forward_oracle: Some(|n| {
                let r = Complex64::new(1.0, (n as f64).sqrt());
                r * r
            }),
            forward_oracle_start: 1,
            backward_oracle: Some(|n| {
                let r = sqrt_upper(Complex64::new(n as f64, 1.0)) + ONE;
                r * r
            }),
            expected_label: Label::new(ParabolicIIb, NonZeroHeight),
        },
        "iib_2" => AtlasEntry {
            name: "iib_2",
            map: SelfMap::new(name, Model::HalfPlane, iib_2_eval)
                .with_derivative(|z| Ok(z / sqrt_upper(z * z - ONE)))
                .with_inverse(|w| Ok(sqrt_upper(w * w + ONE))),
            forward_oracle: Some(|n| Complex64::new(0.0, (n as f64).sqrt())),
            forward_oracle_start: 1,
            backward_oracle: Some(|n| sqrt_upper(Complex64::new(n as f64, 1.0))),
            expected_label: Label::new(ParabolicIIb, ZeroHeight),
        },
        other => {
            return Err(Error::usage(format!(
                "unknown atlas map '{other}'; expected one of {}",
                ATLAS_NAMES.join(", ")
            )))
        }
    };
    let label = entry.expected_label;
    Ok(AtlasEntry {
        map: entry.map.with_label(label),
        ..entry
    })
}

fn branch(what: &str, z: Complex64, v: Complex64) -> Error {
    Error::Branch(format!(
        "{what} left its branch region at input {z} (value {v})"
    ))
}

// [sqrt((sqrt z + 1)^2 + 1) - 1]^2
fn ia_empty_eval(z: Complex64) -> Result<Complex64> {
    let q = z.sqrt() + ONE;
    let r = sqrt_upper(q * q + ONE);
    if r.re <= 1.0 {
        return Err(branch("ia_empty outer root", z, r));
    }
    let s = r - ONE;
    Ok(s * s)
}

fn ia_empty_deriv(z: Complex64) -> Result<Complex64> {
    let sz = z.sqrt();
    let q = sz + ONE;
    let r = sqrt_upper(q * q + ONE);
    Ok((r - ONE) * q / (r * sz))
}

// [sqrt((sqrt w + 1)^2 - 1) - 1]^2, defined where the root has real part > 1
fn ia_empty_inverse(w: Complex64) -> Result<Complex64> {
    let q = w.sqrt() + ONE;
    let r = sqrt_upper(q * q - ONE);
    if r.re <= 1.0 || r.im <= 0.0 {
        return Err(Error::NoPreimage { target: w });
    }
    let s = r - ONE;
    Ok(s * s)
}

fn ib_empty_eval(z: Complex64) -> Result<Complex64> {
    let q = z.sqrt() + ONE;
    Ok(q * q)
}

fn ib_empty_deriv(z: Complex64) -> Result<Complex64> {
    let sz = z.sqrt();
    Ok((sz + ONE) / sz)
}

fn ib_empty_inverse(w: Complex64) -> Result<Complex64> {
    let s = w.sqrt() - ONE;
    if s.re <= 0.0 {
        return Err(Error::NoPreimage { target: w });
    }
    Ok(s * s)
}

// (sqrt((sqrt z - 1)^2 - 1) + 1)^2
fn iib_1_eval(z: Complex64) -> Result<Complex64> {
    let q = z.sqrt() - ONE;
    let r = sqrt_upper(q * q - ONE);
    if r.re <= -1.0 || r.im <= 0.0 {
        return Err(branch("iib_1 outer root", z, r));
    }
    let s = r + ONE;
    Ok(s * s)
}

fn iib_1_deriv(z: Complex64) -> Result<Complex64> {
    let sz = z.sqrt();
    let q = sz - ONE;
    let r = sqrt_upper(q * q - ONE);
    Ok((r + ONE) * q / (r * sz))
}

fn iib_1_inverse(w: Complex64) -> Result<Complex64> {
    let q = w.sqrt() - ONE;
    let r = sqrt_upper(q * q + ONE);
    if r.re <= -1.0 || r.im <= 0.0 {
        return Err(Error::NoPreimage { target: w });
    }
    let s = r + ONE;
    Ok(s * s)
}

fn iib_2_eval(z: Complex64) -> Result<Complex64> {
    let r = sqrt_upper(z * z - ONE);
    if r.im <= 0.0 {
        return Err(branch("iib_2 root", z, r));
    }
    Ok(r)
}

/// Parses a map identifier: an atlas name or one of the parametric families
///
/// * `disk-scale:<c>`       z -> c z on the disk, |c| < 1
/// * `disk-dilation:<k>`    the Cayley conjugate of u -> k u, k > 0
/// * `half-affine:<a>,<b>`  z -> a z + b on the half-plane, a > 0, Im b >= 0
pub fn parse_map(spec: &str) -> Result<SelfMap> {
    let spec = spec.trim();
    if ATLAS_NAMES.contains(&spec) {
        return Ok(atlas(spec)?.map);
    }
    let (family, args) = spec
        .split_once(':')
        .ok_or_else(|| Error::usage(format!("unknown map '{spec}'")))?;
    match family {
        "disk-scale" => {
            let c = crate::parse::parse_complex(args)?;
            disk_scale(c)
        }
        "disk-dilation" => {
            let k: f64 = args
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("bad dilation factor '{args}'")))?;
            disk_dilation(k)
        }
        "half-affine" => {
            let (a, b) = args
                .split_once(',')
                .ok_or_else(|| Error::usage("half-affine expects '<a>,<b>'"))?;
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| Error::usage(format!("bad coefficient '{a}'")))?;
            half_affine(a, crate::parse::parse_complex(b)?)
        }
        _ => Err(Error::usage(format!("unknown map family '{family}'"))),
    }
}

/// z -> c z on the disk.
pub fn disk_scale(c: Complex64) -> Result<SelfMap> {
    if c.norm() > 1.0 + 1e-12 {
        return Err(Error::domain(format!(
            "|{c}| > 1 is not a self-map of the disk"
        )));
    }
    let map = SelfMap::user(format!("disk-scale:{c}"), Model::Disk, move |z| Ok(c * z))
        .with_derivative(move |_| Ok(c));
    Ok(if c.norm() > 0.0 {
        map.with_inverse(move |w| Ok(w / c))
    } else {
        map
    })
}

/// Cayley conjugate of the half-plane dilation u -> k u. For k > 1 the
/// Denjoy-Wolff point is 1 and -1 is a repelling boundary fixed point with
/// multiplier k.
pub fn disk_dilation(k: f64) -> Result<SelfMap> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!(
            "dilation factor {k} must be positive"
        )));
    }
    let kc = Complex64::new(k, 0.0);
    let fwd = move |z: Complex64| cayley_raw(kc * cayley_inv_raw(z));
    let back = move |w: Complex64| cayley_raw(cayley_inv_raw(w) / kc);
    let t = Mobius::new(kc, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), ONE);
    let conj = Mobius::cayley_inv_then(t);
    Ok(
        SelfMap::user(format!("disk-dilation:{k}"), Model::Disk, move |z| {
            Ok(fwd(z))
        })
        .with_derivative(move |z| Ok(conj.derivative(z)))
        .with_inverse(move |w| Ok(back(w))),
    )
}

/// z -> a z + b on the half-plane.
pub fn half_affine(a: f64, b: Complex64) -> Result<SelfMap> {
    if !(a > 0.0 && a.is_finite()) || b.im < 0.0 {
        return Err(Error::domain(format!(
            "z -> {a} z + {b} is not a self-map of the half-plane"
        )));
    }
    let ac = Complex64::new(a, 0.0);
    Ok(
        SelfMap::user(format!("half-affine:{a},{b}"), Model::HalfPlane, move |z| {
            Ok(ac * z + b)
        })
        .with_derivative(move |_| Ok(ac))
        .with_inverse(move |w| Ok((w - b) / ac)),
    )
}

impl Mobius {
    /// cayley ∘ t ∘ cayley^-1 as a single Möbius map.
    pub fn cayley_inv_then(t: Mobius) -> Mobius {
        Mobius::cayley().inverse().then(&t).then(&Mobius::cayley())
    }
}
