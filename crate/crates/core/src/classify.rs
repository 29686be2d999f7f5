//! Denjoy-Wolff point, multiplier and taxonomy label of a self-map, plus the
//! geometric checks on backward orbits (approach angle, multiplier bound).

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::atlas::SelfMap;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::extrapolate::Dyadic;
use crate::geometry::{
    approach_angle, boundary_gap, boundary_offset, cayley_inv_raw, cayley_raw, pd_raw, poisson_raw,
    BoundaryPoint, Mobius, Model, ModelPoint,
};
use crate::iteration::{
    backward_orbit_with, forward_orbit_with, Backward, BackwardOptions, OrbitRecord, EARLY_STOP,
};
use crate::taxonomy::{BisbsClass, ForwardClass};

/// Denjoy-Wolff point: interior fixed point or boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DwPoint {
    Interior(Complex64),
    Boundary(BoundaryPoint),
}

impl DwPoint {
    pub fn is_interior(&self) -> bool {
        matches!(self, DwPoint::Interior(_))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, DwPoint::Boundary(BoundaryPoint::Infinity))
    }
}

impl fmt::Display for DwPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DwPoint::Interior(z) => f.write_str(&crate::parse::format_complex(*z)),
            DwPoint::Boundary(BoundaryPoint::Infinity) => f.write_str("inf"),
            DwPoint::Boundary(BoundaryPoint::Real(x)) => {
                f.write_str(&crate::parse::format_complex(Complex64::new(*x, 0.0)))
            }
            DwPoint::Boundary(BoundaryPoint::Circle(z)) => {
                f.write_str(&crate::parse::format_complex(*z))
            }
        }
    }
}

impl Serialize for DwPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            re: Option<f64>,
            im: Option<f64>,
            at_infinity: bool,
            text: String,
        }
        let (re, im) = match self {
            DwPoint::Interior(z) | DwPoint::Boundary(BoundaryPoint::Circle(z)) => {
                (Some(z.re), Some(z.im))
            }
            DwPoint::Boundary(BoundaryPoint::Real(x)) => (Some(*x), Some(0.0)),
            DwPoint::Boundary(BoundaryPoint::Infinity) => (None, None),
        };
        Repr {
            re,
            im,
            at_infinity: self.is_infinity(),
            text: self.to_string(),
        }
        .serialize(s)
    }
}

/// Denjoy-Wolff point with its multiplier: |phi'| at an interior fixed point,
/// the angular derivative c in (0, 1] at a boundary point.
#[derive(Debug, Clone, Serialize)]
pub struct DenjoyWolff {
    pub point: DwPoint,
    pub multiplier: f64,
    /// Tail of the Julia quotient (1 - |phi(p)|)/(1 - |p|) along the probe orbit.
    pub julia_tail: Vec<(usize, f64)>,
}

fn probe_starts(model: Model) -> [Complex64; 3] {
    match model {
        Model::Disk => [
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.4, 0.3),
            Complex64::new(0.3, -0.5),
        ],
        Model::HalfPlane => [
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 2.0),
            Complex64::new(-2.0, 0.5),
        ],
    }
}

/// Disk image of a point (identity on the disk, Cayley on the half-plane).
fn to_disk(model: Model, z: Complex64) -> Complex64 {
    match model {
        Model::Disk => z,
        Model::HalfPlane => cayley_raw(z),
    }
}

fn from_disk(model: Model, u: Complex64) -> Complex64 {
    match model {
        Model::Disk => u,
        Model::HalfPlane => cayley_inv_raw(u),
    }
}

enum ProbeEnd {
    Interior(Complex64),
    Boundary {
        zeta: Complex64,
        at_infinity: bool,
        quotient: Vec<(usize, f64)>,
    },
    Undecided(Complex64),
}

fn probe(m: &SelfMap, start: Complex64, tol: &Tolerances) -> Result<ProbeEnd> {
    let model = m.model();
    let stop_gap = tol.boundary_stop;
    let z0 = ModelPoint::new(start, model)?;
    let orbit = forward_orbit_with(m, &z0, tol.forward_budget, tol, |_, z| {
        (boundary_gap(model, z) < stop_gap)
            .then(|| format!("{EARLY_STOP} boundary gap below {stop_gap}"))
    })?;
    if let Some(reason) = &orbit.stop {
        return Err(Error::domain(format!(
            "{} forward orbit from {start}: {reason}",
            m.name()
        )));
    }
    let tail = orbit.contiguous_tail();
    let last = tail[tail.len() - 1].z;
    let prev = tail[tail.len().saturating_sub(2)].z;
    let gap = boundary_gap(model, last);
    let u = to_disk(model, last);
    let near_infinity =
        model == Model::HalfPlane && (Complex64::new(1.0, 0.0) - u).norm() < tol.infinity_cutoff;
    if gap < 1e-3 || near_infinity {
        let quotient: Vec<(usize, f64)> = tail
            .windows(2)
            .rev()
            .take(8)
            .map(|w| {
                (
                    w[0].n,
                    boundary_gap(model, w[1].z) / boundary_gap(model, w[0].z),
                )
            })
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        return Ok(ProbeEnd::Boundary {
            zeta: u / u.norm(),
            at_infinity: near_infinity,
            quotient,
        });
    }
    if pd_raw(model, prev, last) < tol.interior_convergence.max(1e-300) * 10.0 {
        return Ok(ProbeEnd::Interior(last));
    }
    let centroid_disk: Complex64 =
        tail.iter().map(|r| to_disk(model, r.z)).sum::<Complex64>() / tail.len() as f64;
    Ok(ProbeEnd::Undecided(from_disk(model, centroid_disk)))
}

/// Newton on phi(z) - z.
fn refine_fixed_point(m: &SelfMap, z: Complex64) -> Option<Complex64> {
    let mut z = z;
    for _ in 0..100 {
        let f = m.eval(z).ok()? - z;
        if f.norm() < 1e-15 * z.norm().max(1.0) {
            return Some(z);
        }
        let d = m.deriv(z).ok()? - 1.0;
        if d.norm() == 0.0 {
            return Some(z);
        }
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = z - lambda * f / d;
            if m.model().is_interior(cand) {
                if let Ok(v) = m.eval(cand) {
                    if (v - cand).norm() < f.norm() {
                        z = cand;
                        moved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !moved {
            return (f.norm() < 1e-9 * z.norm().max(1.0)).then_some(z);
        }
    }
    Some(z)
}

/// Locates the Denjoy-Wolff point by iterating from three starts.
pub fn find_denjoy_wolff(m: &SelfMap) -> Result<DenjoyWolff> {
    find_denjoy_wolff_with(m, &Tolerances::default())
}

pub fn find_denjoy_wolff_with(m: &SelfMap, tol: &Tolerances) -> Result<DenjoyWolff> {
    let model = m.model();
    let mut ends = Vec::new();
    for s in probe_starts(model) {
        ends.push(probe(m, s, tol)?);
    }

    // Elliptic: every orbit converges (or stalls) near one interior point.
    let interior: Vec<Complex64> = ends
        .iter()
        .filter_map(|e| match e {
            ProbeEnd::Interior(z) | ProbeEnd::Undecided(z) => Some(*z),
            ProbeEnd::Boundary { .. } => None,
        })
        .collect();
    if interior.len() == ends.len() {
        let mut fixed = Vec::new();
        for z in interior {
            let p = refine_fixed_point(m, z).ok_or_else(|| {
                Error::Inconsistent(format!(
                    "{}: orbit neither converges nor reaches the boundary",
                    m.name()
                ))
            })?;
            fixed.push(p);
        }
        let p = fixed[0];
        if fixed
            .iter()
            .any(|q| pd_raw(model, p, *q) > tol.limit_agreement)
        {
            return Err(Error::Inconsistent(format!(
                "{}: interior limits {} disagree",
                m.name(),
                fixed
                    .iter()
                    .map(|z| z.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
        let lambda = m.deriv(p)?.norm();
        if (lambda - 1.0).abs() < 1e-9 {
            return Err(Error::EllipticAutomorphism { point: p });
        }
        return Ok(DenjoyWolff {
            point: DwPoint::Interior(p),
            multiplier: lambda,
            julia_tail: Vec::new(),
        });
    }

    let mut boundary = Vec::new();
    for e in ends {
        match e {
            ProbeEnd::Boundary {
                zeta,
                at_infinity,
                quotient,
            } => boundary.push((zeta, at_infinity, quotient)),
            ProbeEnd::Interior(z) | ProbeEnd::Undecided(z) => {
                return Err(Error::Inconsistent(format!(
                    "{}: one orbit stays near {z} while another reaches the boundary",
                    m.name()
                )))
            }
        }
    }
    let (zeta0, inf0, _) = boundary[0].clone();
    for (zeta, inf, _) in &boundary[1..] {
        if *inf != inf0 || (!inf0 && (zeta - zeta0).norm() > 1e-3) {
            return Err(Error::Inconsistent(format!(
                "{}: orbits approach different boundary points",
                m.name()
            )));
        }
    }
    let point = match (model, inf0) {
        (Model::HalfPlane, true) => BoundaryPoint::Infinity,
        (Model::HalfPlane, false) => BoundaryPoint::Real(cayley_inv_raw(zeta0).re),
        (Model::Disk, _) => BoundaryPoint::Circle(zeta0),
    };
    let julia_tail = boundary[0].2.clone();
    let multiplier = julia_tail.last().map_or(f64::NAN, |q| q.1);
    Ok(DenjoyWolff {
        point: DwPoint::Boundary(point),
        multiplier,
        julia_tail,
    })
}

/// The conjugate of `m` on the half-plane with its boundary Denjoy-Wolff
/// point moved to infinity, with the map taking the original model to the
/// normalized half-plane.
pub fn normalize_at_infinity(m: &SelfMap, dw: &BoundaryPoint) -> Result<(SelfMap, Option<Mobius>)> {
    match (m.model(), dw) {
        (Model::HalfPlane, BoundaryPoint::Infinity) => Ok((m.clone(), None)),
        (Model::HalfPlane, BoundaryPoint::Real(x)) => {
            let t = Mobius::real_point_to_infinity(*x);
            Ok((
                m.conjugated(format!("{}@inf", m.name()), t, Model::HalfPlane),
                Some(t),
            ))
        }
        (Model::Disk, BoundaryPoint::Circle(zeta)) => {
            let t = Mobius::disk_to_half_plane(*zeta);
            Ok((
                m.conjugated(format!("{}@inf", m.name()), t, Model::HalfPlane),
                Some(t),
            ))
        }
        _ => Err(Error::usage(
            "boundary point does not belong to the map's model",
        )),
    }
}

/// Value of a limit that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Infinite,
    Unknown,
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Limit::Finite(x) => s.serialize_f64(*x),
            Limit::Infinite => s.serialize_str("inf"),
            Limit::Unknown => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Tail {
    pub quantity: String,
    pub n: usize,
    pub value: f64,
}

/// One threshold comparison made while classifying.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn check(checks: &mut Vec<Check>, name: &str, value: f64, threshold: f64, passed: bool) -> bool {
    checks.push(Check {
        name: name.to_string(),
        value,
        threshold,
        passed,
    });
    passed
}

/// Outcome of one backward attempt made by the classifier.
#[derive(Debug, Clone, Serialize)]
pub struct BisbsAttempt {
    pub start: Complex64,
    pub outcome: String,
    pub steps: usize,
    pub height_class: Option<BisbsClass>,
    pub ell_inf: Option<f64>,
    pub a: Option<f64>,
    pub arg_limit: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub s_inf: Option<f64>,
    #[serde(rename = "L_inf")]
    pub l_inf: Limit,
    pub ell_inf: Option<f64>,
    pub a: Option<f64>,
    pub tails: Vec<Tail>,
    pub checks: Vec<Check>,
    pub bisbs_attempts: Vec<BisbsAttempt>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Calibrated,
    Heuristic,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceFlags {
    pub dw_point: Confidence,
    pub multiplier: Confidence,
    pub forward_class: Confidence,
    pub bisbs_class: Confidence,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub map: String,
    pub model: Model,
    pub dw_point: DwPoint,
    pub multiplier: f64,
    pub forward_class: ForwardClass,
    pub bisbs_class: BisbsClass,
    pub diagnostics: Diagnostics,
    pub confidence: ConfidenceFlags,
    pub tolerances: Tolerances,
}

impl ClassificationReport {
    pub fn label(&self) -> crate::taxonomy::Label {
        crate::taxonomy::Label::new(self.forward_class, self.bisbs_class)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Backward starts used for the BISBS search on the normalized half-plane.
pub const BISBS_STARTS: [(f64, f64); 5] =
    [(0.5, 2.0), (3.0, 1.0), (-1.0, 0.5), (2.0, 3.0), (-3.0, 2.0)];

/// Classifies with default tolerances.
pub fn classify(m: &SelfMap) -> Result<ClassificationReport> {
    classify_with(m, &Tolerances::default())
}

pub fn classify_with(m: &SelfMap, tol: &Tolerances) -> Result<ClassificationReport> {
    classify_from(m, Complex64::new(0.0, 1.0), tol)
}

/// Classifies, running the forward step/height discriminators from
/// `forward_start` (a point of the normalized half-plane).
pub fn classify_from(
    m: &SelfMap,
    forward_start: Complex64,
    tol: &Tolerances,
) -> Result<ClassificationReport> {
    tol.validate()?;
    let dw = find_denjoy_wolff_with(m, tol)?;
    let mut diag = Diagnostics {
        s_inf: None,
        l_inf: Limit::Unknown,
        ell_inf: None,
        a: None,
        tails: dw
            .julia_tail
            .iter()
            .map(|&(n, v)| Tail {
                quantity: "julia_quotient".into(),
                n,
                value: v,
            })
            .collect(),
        checks: Vec::new(),
        bisbs_attempts: Vec::new(),
        notes: Vec::new(),
    };
    let mut report = ClassificationReport {
        map: m.name().to_string(),
        model: m.model(),
        dw_point: dw.point,
        multiplier: dw.multiplier,
        forward_class: ForwardClass::Unknown,
        bisbs_class: BisbsClass::Unknown,
        diagnostics: diag.clone(),
        confidence: ConfidenceFlags {
            dw_point: Confidence::Calibrated,
            multiplier: Confidence::Calibrated,
            forward_class: Confidence::Calibrated,
            bisbs_class: Confidence::Heuristic,
        },
        tolerances: tol.clone(),
    };

    let zeta = match dw.point {
        DwPoint::Interior(_) => {
            report.forward_class = ForwardClass::Elliptic;
            diag.notes
                .push("backward taxonomy applies to parabolic maps only".into());
            report.diagnostics = diag;
            return Ok(report);
        }
        DwPoint::Boundary(b) => b,
    };
    let parabolic = check(
        &mut diag.checks,
        "multiplier_parabolic",
        (dw.multiplier - 1.0).abs(),
        tol.parabolic_tol,
        (dw.multiplier - 1.0).abs() < tol.parabolic_tol,
    );
    if !parabolic {
        report.forward_class = if dw.multiplier > 0.0 && dw.multiplier < 1.0 {
            ForwardClass::Hyperbolic
        } else {
            report.confidence.multiplier = Confidence::Heuristic;
            ForwardClass::Unknown
        };
        diag.notes
            .push("backward taxonomy applies to parabolic maps only".into());
        report.diagnostics = diag;
        return Ok(report);
    }

    let (h, conj) = normalize_at_infinity(m, &zeta)?;
    if conj.is_some() {
        report.confidence.dw_point = Confidence::Heuristic;
        report.confidence.forward_class = Confidence::Heuristic;
        diag.notes.push(format!(
            "map conjugated to the half-plane with the Denjoy-Wolff estimate {} sent to infinity",
            dw.point
        ));
    }

    let (fwd, fwd_ok) = forward_discriminators(&h, forward_start, tol, &mut diag)?;
    report.forward_class = fwd;
    if !fwd_ok {
        report.confidence.forward_class = Confidence::Heuristic;
    }

    let (bisbs, calibrated) = bisbs_discriminator(&h, tol, &mut diag)?;
    report.bisbs_class = bisbs;
    if calibrated && conj.is_none() {
        report.confidence.bisbs_class = Confidence::Calibrated;
    }
    let label = report.label();
    let seen_on_atlas = crate::atlas::ATLAS_NAMES
        .iter()
        .any(|n| crate::atlas::atlas(n).is_ok_and(|e| e.expected_label == label));
    if !seen_on_atlas {
        report.confidence.forward_class = Confidence::Heuristic;
        report.confidence.bisbs_class = Confidence::Heuristic;
        diag.notes
            .push(format!("label {label} has no calibration example in the atlas"));
    }
    report.diagnostics = diag;
    Ok(report)
}

fn push_tails(diag: &mut Diagnostics, quantity: &str, d: &Dyadic) {
    for &(n, v) in d
        .samples
        .iter()
        .rev()
        .take(6)
        .collect::<Vec<_>>()
        .iter()
        .rev()
    {
        diag.tails.push(Tail {
            quantity: quantity.to_string(),
            n: *n,
            value: *v,
        });
    }
}

/// Step class from dyadic steps: Some(true) positive, Some(false) zero.
pub fn step_class(
    steps: &Dyadic,
    tol: &Tolerances,
    checks: &mut Vec<Check>,
    prefix: &str,
) -> Option<bool> {
    let last = steps.last()?;
    let extrapolated = steps.extrapolate()?;
    let ratios = steps.ratios(2);
    if ratios.len() < 2 {
        return None;
    }
    let ratio_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let positive = check(
        checks,
        &format!("{prefix}step_extrapolated_positive"),
        extrapolated,
        tol.step_positive,
        extrapolated > tol.step_positive,
    ) & check(
        checks,
        &format!("{prefix}step_ratio_settled"),
        ratio_min,
        tol.dyadic_ratio,
        ratio_min > tol.dyadic_ratio,
    );
    if positive {
        return Some(true);
    }
    let zero = check(
        checks,
        &format!("{prefix}step_last_small"),
        last,
        tol.step_zero,
        last < tol.step_zero,
    ) & check(
        checks,
        &format!("{prefix}step_ratio_decaying"),
        ratio_max,
        tol.dyadic_ratio,
        ratio_max < tol.dyadic_ratio,
    );
    zero.then_some(false)
}

/// Forward height class from dyadic heights: Some(true) finite, Some(false) infinite.
pub fn forward_height_class(
    heights: &Dyadic,
    tol: &Tolerances,
    checks: &mut Vec<Check>,
) -> Option<bool> {
    let growth = heights.relative_changes(2);
    if growth.len() < 2 {
        return None;
    }
    if check(
        checks,
        "height_growth_finite",
        growth[0],
        tol.height_growth_finite,
        growth[0] < tol.height_growth_finite,
    ) {
        return Some(true);
    }
    let inc = heights.increment_ratio().unwrap_or(f64::NAN);
    if check(
        checks,
        "height_growth_loose",
        growth[0],
        tol.height_growth_loose,
        growth[0] < tol.height_growth_loose,
    ) && check(
        checks,
        "height_increment_ratio",
        inc,
        tol.dyadic_ratio,
        inc < tol.dyadic_ratio,
    ) {
        return Some(true);
    }
    let g = growth[0].min(growth[1]);
    check(
        checks,
        "height_growth_infinite",
        g,
        tol.height_growth_infinite,
        g > tol.height_growth_infinite,
    )
    .then_some(false)
}

/// Backward height class: Some(true) positive limit, Some(false) zero limit.
pub fn backward_height_class(
    heights: &Dyadic,
    tol: &Tolerances,
    checks: &mut Vec<Check>,
    prefix: &str,
) -> Option<bool> {
    let decay: Vec<f64> = heights
        .relative_changes(2)
        .into_iter()
        .map(|g| -g)
        .collect();
    if decay.len() < 2 {
        return None;
    }
    if check(
        checks,
        &format!("{prefix}height_decay_positive"),
        decay[0],
        tol.height_decay_positive,
        decay[0] < tol.height_decay_positive,
    ) {
        return Some(true);
    }
    let inc = heights.increment_ratio().unwrap_or(f64::NAN);
    if check(
        checks,
        &format!("{prefix}height_decay_loose"),
        decay[0],
        tol.height_growth_loose,
        decay[0] < tol.height_growth_loose,
    ) && check(
        checks,
        &format!("{prefix}height_increment_ratio"),
        inc,
        tol.dyadic_ratio,
        inc < tol.dyadic_ratio,
    ) {
        return Some(true);
    }
    let d = decay[0].min(decay[1]);
    check(
        checks,
        &format!("{prefix}height_decay_zero"),
        d,
        tol.height_decay_zero,
        d > tol.height_decay_zero,
    )
    .then_some(false)
}

fn forward_discriminators(
    h: &SelfMap,
    start: Complex64,
    tol: &Tolerances,
    diag: &mut Diagnostics,
) -> Result<(ForwardClass, bool)> {
    let budget = 1usize << (usize::BITS - 1 - tol.forward_budget.leading_zeros());
    let z0 = ModelPoint::half_plane(start)?;
    let orbit = forward_orbit_with(h, &z0, budget, tol, |_, _| None)?;
    if let Some(reason) = &orbit.stop {
        diag.notes
            .push(format!("forward orbit truncated: {reason}"));
    }
    let steps = orbit.dyadic(|r| r.step);
    let heights = orbit.dyadic(|r| Some(r.height));
    push_tails(diag, "step", &steps);
    push_tails(diag, "height", &heights);
    diag.s_inf = steps.extrapolate().map(|s| s.max(0.0));

    let s = step_class(&steps, tol, &mut diag.checks, "");
    let l = forward_height_class(&heights, tol, &mut diag.checks);
    diag.l_inf = match l {
        Some(true) => Limit::Finite(heights.extrapolate().unwrap_or(f64::NAN)),
        Some(false) => Limit::Infinite,
        None => Limit::Unknown,
    };
    let class = match (s, l) {
        (Some(true), Some(true)) => ForwardClass::ParabolicIa,
        (Some(true), Some(false)) => ForwardClass::ParabolicIb,
        (Some(false), Some(true)) => ForwardClass::ParabolicIIa,
        (Some(false), Some(false)) => ForwardClass::ParabolicIIb,
        _ => ForwardClass::ParabolicUnknown,
    };
    Ok((class, s.is_some() && l.is_some()))
}

/// Summary of one backward orbit towards infinity on the normalized map.
pub struct BisbsSummary {
    pub class: Option<bool>,
    pub ell_inf: f64,
    pub a: f64,
    pub arg_limit: f64,
}

/// Height class, height limit, step limit and argument limit of a BISBS.
pub fn summarize_bisbs(
    orbit: &OrbitRecord,
    tol: &Tolerances,
    checks: &mut Vec<Check>,
    prefix: &str,
) -> BisbsSummary {
    let heights = orbit.dyadic(|r| Some(r.height));
    let steps = orbit.dyadic(|r| r.step);
    let class = backward_height_class(&heights, tol, checks, prefix);
    let ell = match class {
        Some(false) => 0.0,
        _ => heights.extrapolate().unwrap_or(f64::NAN).max(0.0),
    };
    let a = steps.extrapolate().unwrap_or(f64::NAN);
    BisbsSummary {
        class,
        ell_inf: ell,
        a,
        arg_limit: orbit.last().map_or(f64::NAN, |w| w.arg()),
    }
}

fn bisbs_discriminator(
    h: &SelfMap,
    tol: &Tolerances,
    diag: &mut Diagnostics,
) -> Result<(BisbsClass, bool)> {
    let opts = BackwardOptions::from_tolerances(tol);
    let mut successes: Vec<(Option<bool>, f64, f64)> = Vec::new();
    for (j, &(re, im)) in BISBS_STARTS.iter().enumerate() {
        let start = Complex64::new(re, im);
        let w0 = ModelPoint::half_plane(start)?;
        let prefix = format!("bisbs{j}_");
        match backward_orbit_with(h, &w0, tol.backward_budget, &opts, tol)? {
            Backward::Failure(e) => diag.bisbs_attempts.push(BisbsAttempt {
                start,
                outcome: "failure".into(),
                steps: e.partial.len().saturating_sub(1),
                height_class: None,
                ell_inf: None,
                a: None,
                arg_limit: None,
                detail: format!("no admissible preimage at level {}: {}", e.level, e.reason),
            }),
            Backward::Orbit(o) => {
                let last = o.last().expect("non-empty orbit");
                let dist = (Complex64::new(1.0, 0.0) - cayley_raw(last)).norm();
                if dist >= tol.infinity_cutoff {
                    diag.bisbs_attempts.push(BisbsAttempt {
                        start,
                        outcome: "other-limit".into(),
                        steps: o.len() - 1,
                        height_class: None,
                        ell_inf: None,
                        a: None,
                        arg_limit: None,
                        detail: format!(
                            "sequence ends at {last}, away from the Denjoy-Wolff point"
                        ),
                    });
                    continue;
                }
                let s = summarize_bisbs(&o, tol, &mut diag.checks, &prefix);
                let class = s.class.map(|p| {
                    if p {
                        BisbsClass::NonZeroHeight
                    } else {
                        BisbsClass::ZeroHeight
                    }
                });
                diag.bisbs_attempts.push(BisbsAttempt {
                    start,
                    outcome: "bisbs".into(),
                    steps: o.len() - 1,
                    height_class: class,
                    ell_inf: Some(s.ell_inf),
                    a: Some(s.a),
                    arg_limit: Some(s.arg_limit),
                    detail: String::new(),
                });
                successes.push((s.class, s.ell_inf, s.a));
            }
        }
    }
    if successes.is_empty() {
        diag.notes.push(
            "no bounded-step backward sequence found from any start; the empty verdict is numerical evidence, not a proof"
                .into(),
        );
        return Ok((BisbsClass::Empty, false));
    }
    let decided: Vec<&(Option<bool>, f64, f64)> =
        successes.iter().filter(|s| s.0.is_some()).collect();
    if let Some(first) = decided.first() {
        diag.ell_inf = Some(first.1);
        diag.a = Some(first.2);
    }
    let any_pos = decided.iter().any(|s| s.0 == Some(true));
    let any_zero = decided.iter().any(|s| s.0 == Some(false));
    Ok(match (any_pos, any_zero) {
        (true, false) => (BisbsClass::NonZeroHeight, true),
        (false, true) => (BisbsClass::ZeroHeight, true),
        (true, true) => {
            diag.notes
                .push("found both non-zero-height and zero-height backward sequences".into());
            (BisbsClass::Unknown, false)
        }
        (false, false) => (BisbsClass::Unknown, false),
    })
}

/// How a backward orbit approaches its boundary limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Approach {
    NonTangential { theta0: f64 },
    Tangential,
    Unknown { reason: String },
}

/// Decides non-tangential versus tangential approach to `zeta` from the tail
/// of the orbit, via r_n = (1 - |w_n|)/|zeta - w_n| in the disk picture.
pub fn approach_geometry(orbit: &OrbitRecord, zeta: &BoundaryPoint) -> Approach {
    approach_geometry_with(orbit, zeta, &Tolerances::default())
}

pub fn approach_geometry_with(
    orbit: &OrbitRecord,
    zeta: &BoundaryPoint,
    tol: &Tolerances,
) -> Approach {
    let model = orbit.model;
    let tail = orbit.contiguous_tail();
    if tail.len() < 8 {
        return Approach::Unknown {
            reason: "orbit tail too short".into(),
        };
    }
    let window = &tail[tail.len() / 2..];
    let r: Vec<f64> = window
        .iter()
        .map(|p| boundary_gap(model, p.z) / boundary_offset(model, p.z, zeta).norm())
        .collect();
    let angles: Vec<f64> = window
        .iter()
        .map(|p| approach_angle(model, p.z, zeta))
        .collect();
    let r_min = r.iter().copied().fold(f64::INFINITY, f64::min);
    let a_min = angles.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if r_min > tol.nontangential_delta && a_max - a_min < tol.angle_oscillation {
        return Approach::NonTangential {
            theta0: *angles.last().expect("non-empty window"),
        };
    }
    let poisson: Vec<f64> = window
        .iter()
        .map(|p| poisson_raw(model, p.z, zeta))
        .collect();
    let non_increasing = poisson.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let r_last = *r.last().expect("non-empty window");
    if non_increasing && r_last < tol.nontangential_delta && r_last < r[0] {
        return Approach::Tangential;
    }
    Approach::Unknown {
        reason: format!(
            "r tail in [{r_min}, {r_last}], angle oscillation {}, Poisson non-increasing: {non_increasing}",
            a_max - a_min
        ),
    }
}

/// Estimate of the multiplier at the boundary limit of a backward orbit,
/// compared against the bound (1 + a)/(1 - a).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MultiplierBound {
    NotApplicable {
        reason: String,
    },
    Estimate {
        zeta: Complex64,
        estimate: f64,
        a: f64,
        bound: f64,
        passed: bool,
    },
}

/// Julia-quotient estimate of phi'(zeta) along a backward orbit converging to
/// a boundary point zeta other than the Denjoy-Wolff point `tau`.
pub fn multiplier_bound_check(orbit: &OrbitRecord, tau: Option<&DwPoint>) -> MultiplierBound {
    multiplier_bound_check_with(orbit, tau, &Tolerances::default())
}

pub fn multiplier_bound_check_with(
    orbit: &OrbitRecord,
    tau: Option<&DwPoint>,
    tol: &Tolerances,
) -> MultiplierBound {
    let model = orbit.model;
    let tail = orbit.contiguous_tail();
    if tail.len() < 3 {
        return MultiplierBound::NotApplicable {
            reason: "orbit too short".into(),
        };
    }
    let a = orbit.steps().into_iter().fold(0.0, f64::max);
    if a < 1e-12 {
        return MultiplierBound::NotApplicable {
            reason: "zero steps: the sequence sits at a fixed point".into(),
        };
    }
    let last = tail[tail.len() - 1].z;
    let u = to_disk(model, last);
    if boundary_gap(model, last) > 1e-2 {
        return MultiplierBound::NotApplicable {
            reason: format!("orbit has not reached the boundary (ends at {last})"),
        };
    }
    let zeta = u / u.norm();
    let same_as_tau = match tau {
        Some(DwPoint::Boundary(b)) => (b.on_circle() - zeta).norm() < 1e-3,
        Some(DwPoint::Interior(_)) | None => false,
    };
    if same_as_tau {
        return MultiplierBound::NotApplicable {
            reason: "orbit tends to the Denjoy-Wolff point".into(),
        };
    }
    let (p, q) = (&tail[tail.len() - 2], &tail[tail.len() - 1]);
    // phi(w_{n+1}) = w_n, so the quotient is gap(w_n) / gap(w_{n+1}).
    let estimate = boundary_gap(model, p.z) / boundary_gap(model, q.z);
    let bound = (1.0 + a) / (1.0 - a);
    MultiplierBound::Estimate {
        zeta,
        estimate,
        a,
        bound,
        passed: estimate <= bound * (1.0 + tol.multiplier_slack),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::{atlas, disk_dilation, disk_scale};
    use crate::iteration::backward_orbit;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn contraction_has_interior_fixed_point() {
        let m = disk_scale(c(0.5, 0.0)).unwrap();
        let dw = find_denjoy_wolff(&m).unwrap();
        assert_eq!(dw.point, DwPoint::Interior(c(0.0, 0.0)));
        assert!((dw.multiplier - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_rejected() {
        let m = disk_scale(Complex64::from_polar(1.0, 1.0)).unwrap();
        assert!(matches!(
            find_denjoy_wolff(&m),
            Err(Error::EllipticAutomorphism { .. })
        ));
    }

    #[test]
    fn translations_are_parabolic_at_infinity() {
        for name in ["ia_1", "iib_2"] {
            let dw = find_denjoy_wolff(&atlas(name).unwrap().map).unwrap();
            assert!(dw.point.is_infinity(), "{name}");
            assert!(
                (dw.multiplier - 1.0).abs() < 1e-2,
                "{name}: {}",
                dw.multiplier
            );
        }
    }

    #[test]
    fn dilation_is_hyperbolic() {
        let m = disk_dilation(2.0).unwrap();
        let r = classify(&m).unwrap();
        assert_eq!(r.forward_class, ForwardClass::Hyperbolic);
        assert!((r.multiplier - 0.5).abs() < 1e-3);
        match r.dw_point {
            DwPoint::Boundary(BoundaryPoint::Circle(z)) => assert!((z - 1.0).norm() < 1e-3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dilation_multiplier_bound_at_repelling_point() {
        let m = disk_dilation(2.0).unwrap();
        let o = backward_orbit(
            &m,
            &ModelPoint::disk(c(0.0, 0.0)).unwrap(),
            20,
            &BackwardOptions::default(),
        )
        .unwrap()
        .into_orbit()
        .unwrap();
        let tau = DwPoint::Boundary(BoundaryPoint::Circle(c(1.0, 0.0)));
        match multiplier_bound_check(&o, Some(&tau)) {
            MultiplierBound::Estimate {
                zeta,
                estimate,
                a,
                bound,
                passed,
            } => {
                assert!((zeta + 1.0).norm() < 1e-9);
                assert!((a - 1.0 / 3.0).abs() < 1e-9);
                assert!((bound - 2.0).abs() < 1e-8);
                assert!(estimate <= 2.0 + 1e-9 && estimate > 1.99, "{estimate}");
                assert!(passed);
            }
            other => panic!("{other:?}"),
        }
        match approach_geometry(&o, &BoundaryPoint::Circle(c(-1.0, 0.0))) {
            Approach::NonTangential { theta0 } => assert!(theta0.abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_and_dw_cases_not_applicable() {
        let m = disk_scale(c(0.5, 0.0)).unwrap();
        let o = backward_orbit(
            &m,
            &ModelPoint::disk(c(0.0, 0.0)).unwrap(),
            10,
            &BackwardOptions::default(),
        )
        .unwrap()
        .into_orbit()
        .unwrap();
        assert!(matches!(
            multiplier_bound_check(&o, None),
            MultiplierBound::NotApplicable { .. }
        ));

        let ia1 = atlas("ia_1").unwrap().map;
        let o = backward_orbit(
            &ia1,
            &ModelPoint::half_plane(c(0.0, 1.0)).unwrap(),
            100_000,
            &BackwardOptions::default(),
        )
        .unwrap()
        .into_orbit()
        .unwrap();
        let tau = DwPoint::Boundary(BoundaryPoint::Infinity);
        assert!(matches!(
            multiplier_bound_check(&o, Some(&tau)),
            MultiplierBound::NotApplicable { .. }
        ));
        assert_eq!(
            approach_geometry(&o, &BoundaryPoint::Infinity),
            Approach::Tangential
        );
    }

    #[test]
    fn dw_point_json() {
        let v = serde_json::to_value(DwPoint::Boundary(BoundaryPoint::Infinity)).unwrap();
        assert_eq!(v["at_infinity"], true);
        assert_eq!(v["text"], "inf");
        assert!(v["re"].is_null());
        assert_eq!(serde_json::to_value(Limit::Infinite).unwrap(), "inf");
    }
}
