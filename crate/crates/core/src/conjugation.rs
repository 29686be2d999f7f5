//! Renormalized iterates approximating the conjugations of a parabolic map
//! to a translation, and the quantitative checks built on them.
//!
//! Forward: sigma_N = M_N ∘ phi_N with M_N(z) = (z - u_N)/v_N, where
//! z_N = u_N + i v_N is a forward orbit; sigma ∘ phi = sigma + b.
//! Backward: psi_N = phi_N ∘ tau_N with tau_N(z) = x_N + y_N z, where
//! w_N = x_N + i y_N is a bounded-step backward orbit; psi(z - b0) = phi(psi(z))
//! with b0 = 2a/sqrt(1 - a^2).

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::atlas::SelfMap;
use crate::classify::{summarize_bisbs, Check};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::extrapolate::{richardson, Dyadic};
use crate::geometry::{Model, ModelPoint};
use crate::iteration::{
    backward_orbit_with, forward_orbit_with, Backward, BackwardOptions, Direction, OrbitRecord,
};

/// Axis-parallel rectangle in the half-plane sampled with a fixed pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub pitch: f64,
}

impl Grid {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, pitch: f64) -> Result<Self> {
        let g = Self {
            re_min,
            re_max,
            im_min,
            im_max,
            pitch,
        };
        if !(pitch > 0.0) || re_max < re_min || im_max < im_min {
            return Err(Error::domain(format!("empty grid {g}")));
        }
        if im_min <= 0.0 {
            return Err(Error::domain(format!(
                "grid {g} is not inside the half-plane"
            )));
        }
        Ok(g)
    }

    pub fn from_tolerances(tol: &Tolerances) -> Result<Self> {
        Self::new(
            tol.grid_re_min,
            tol.grid_re_max,
            tol.grid_im_min,
            tol.grid_im_max,
            tol.grid_pitch,
        )
    }

    fn axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
        let n = ((hi - lo) / pitch + 1e-9).floor() as usize;
        (0..=n).map(|k| lo + k as f64 * pitch).collect()
    }

    /// Sample points, imaginary part outermost.
    pub fn points(&self) -> Vec<Complex64> {
        let xs = Self::axis(self.re_min, self.re_max, self.pitch);
        Self::axis(self.im_min, self.im_max, self.pitch)
            .into_iter()
            .flat_map(|y| xs.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let e = 1e-12;
        z.re >= self.re_min - e
            && z.re <= self.re_max + e
            && z.im >= self.im_min - e
            && z.im <= self.im_max + e
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.re_min, self.re_max, self.im_min, self.im_max, self.pitch
        )
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `re_min,re_max,im_min,im_max[,pitch]` (pitch defaults to 1/32).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                Error::usage(format!(
                    "bad grid '{s}': expected re_min,re_max,im_min,im_max[,pitch]"
                ))
            })?;
        match parts[..] {
            [a, b, c, d] => Grid::new(a, b, c, d, 1.0 / 32.0),
            [a, b, c, d, p] => Grid::new(a, b, c, d, p),
            _ => Err(Error::usage(format!(
                "bad grid '{s}': expected 4 or 5 numbers"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Frame {
    /// z -> (z - u) / v applied after iterating.
    Forward { u: f64, v: f64 },
    /// z -> x + y z applied before iterating.
    Backward { x: f64, y: f64 },
}

/// Evaluates a renormalized iterate anywhere in the half-plane.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    map: SelfMap,
    frame: Frame,
    depth: usize,
    overflow: f64,
}

fn iterate(map: &SelfMap, mut z: Complex64, k: usize, overflow: f64) -> Result<Complex64> {
    for _ in 0..k {
        z = map.eval(z)?;
        if z.norm() > overflow {
            return Err(Error::range("renormalized iterate overflow", z));
        }
    }
    Ok(z)
}

impl FieldEvaluator {
    /// The map whose iterates are renormalized (reflected when the field was
    /// built from a sequence on the negative side).
    pub fn map(&self) -> &SelfMap {
        &self.map
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self.frame {
            Frame::Forward { u, v } => {
                let w = iterate(&self.map, z, self.depth, self.overflow)?;
                Ok((w - u) / v)
            }
            Frame::Backward { x, y } => iterate(
                &self.map,
                Complex64::new(x, 0.0) + y * z,
                self.depth,
                self.overflow,
            ),
        }
    }

    /// Central difference with step `h` along the real direction.
    pub fn derivative(&self, z: Complex64, h: f64) -> Result<Complex64> {
        let h = Complex64::new(h, 0.0);
        Ok((self.eval(z + h)? - self.eval(z - h)?) / (2.0 * h))
    }
}

/// Sampled approximation of sigma or psi at a finite depth.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugationField {
    pub grid: Grid,
    pub points: Vec<Complex64>,
    /// None where the sample was dropped (overflow or evaluation error).
    pub values: Vec<Option<Complex64>>,
    pub depth: usize,
    /// b (forward) or b0 (backward).
    pub constant: f64,
    /// Max functional-equation defect over the retained samples.
    pub residual: f64,
    pub dropped: usize,
    pub direction: Direction,
    /// The backward sequence was reflected in the imaginary axis first.
    pub reflected: bool,
    /// Backward: extrapolated tail of (x_{n+1} - x_n)/y_n; forward: last raw
    /// (u_{N+1} - u_N)/v_N.
    pub cross_check: f64,
    #[serde(skip)]
    evaluator: FieldEvaluator,
}

/// Metadata written next to a field dump.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSidecar {
    pub depth: usize,
    pub constant: f64,
    pub residual: f64,
    pub dropped: usize,
    pub direction: Direction,
    pub reflected: bool,
    pub cross_check: f64,
    pub grid: Grid,
}

impl ConjugationField {
    pub fn evaluator(&self) -> &FieldEvaluator {
        &self.evaluator
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.evaluator.eval(z)
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar {
            depth: self.depth,
            constant: self.constant,
            residual: self.residual,
            dropped: self.dropped,
            direction: self.direction,
            reflected: self.reflected,
            cross_check: self.cross_check,
            grid: self.grid,
        }
    }

    /// Writes `re,im,val_re,val_im`; dropped samples have empty values.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "re,im,val_re,val_im")?;
        for (z, v) in self.points.iter().zip(&self.values) {
            match v {
                Some(v) => writeln!(out, "{},{},{},{}", z.re, z.im, v.re, v.im)?,
                None => writeln!(out, "{},{},,", z.re, z.im)?,
            }
        }
        Ok(())
    }
}

/// Forward renormalization along the orbit of `z0`.
pub fn forward_conjugation(
    m: &SelfMap,
    z0: &ModelPoint,
    depth: usize,
    grid: &Grid,
) -> Result<ConjugationField> {
    forward_conjugation_with(m, z0, depth, grid, &Tolerances::default())
}

pub fn forward_conjugation_with(
    m: &SelfMap,
    z0: &ModelPoint,
    depth: usize,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<ConjugationField> {
    require_half_plane(m)?;
    if depth == 0 {
        return Err(Error::usage("depth must be at least 1"));
    }
    let orbit = forward_orbit_with(m, z0, depth + 1, tol, |_, _| None)?;
    if let Some(reason) = &orbit.stop {
        return Err(Error::domain(format!(
            "forward orbit ended before depth {depth}: {reason}"
        )));
    }
    let z_n = orbit.point(depth).expect("orbit reaches depth");
    let z_next = orbit.point(depth + 1).expect("orbit reaches depth + 1");
    let (u, v) = (z_n.re, z_n.im);
    let raw_b = (z_next.re - u) / v;
    let b_seq = dyadic_ratio_sequence(&orbit, depth, |p, q| (q.re - p.re) / p.im);
    let b = richardson(&b_seq.samples.iter().map(|s| s.1).collect::<Vec<_>>()).unwrap_or(raw_b);

    let evaluator = FieldEvaluator {
        map: m.clone(),
        frame: Frame::Forward { u, v },
        depth,
        overflow: tol.overflow,
    };
    let points = grid.points();
    let samples: Vec<Option<(Complex64, f64)>> = points
        .par_iter()
        .map(|&z| {
            let w = iterate(m, z, depth, tol.overflow).ok()?;
            let w_next = iterate(m, w, 1, tol.overflow).ok()?;
            let sigma = (w - u) / v;
            let defect = ((w_next - w) / v - b).norm();
            Some((sigma, defect))
        })
        .collect();
    Ok(assemble(
        grid,
        points,
        samples,
        depth,
        b,
        Direction::Forward,
        false,
        raw_b,
        evaluator,
    ))
}

/// Values f(w_n, w_{n+1}) at n = 2^j up to `depth`.
fn dyadic_ratio_sequence<F>(orbit: &OrbitRecord, depth: usize, f: F) -> Dyadic
where
    F: Fn(Complex64, Complex64) -> f64,
{
    let mut samples = Vec::new();
    let mut n = 1;
    while n <= depth {
        if let (Some(p), Some(q)) = (orbit.point(n), orbit.point(n + 1)) {
            samples.push((n, f(p, q)));
        }
        n *= 2;
    }
    Dyadic::new(samples)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    grid: &Grid,
    points: Vec<Complex64>,
    samples: Vec<Option<(Complex64, f64)>>,
    depth: usize,
    constant: f64,
    direction: Direction,
    reflected: bool,
    cross_check: f64,
    evaluator: FieldEvaluator,
) -> ConjugationField {
    let dropped = samples.iter().filter(|s| s.is_none()).count();
    let residual = samples.iter().flatten().map(|s| s.1).fold(0.0, f64::max);
    ConjugationField {
        grid: *grid,
        points,
        values: samples.into_iter().map(|s| s.map(|v| v.0)).collect(),
        depth,
        constant,
        residual,
        dropped,
        direction,
        reflected,
        cross_check,
        evaluator,
    }
}

fn require_half_plane(m: &SelfMap) -> Result<()> {
    if m.model() != Model::HalfPlane {
        return Err(Error::usage(format!(
            "{} acts on the disk; conjugation works on the half-plane normalization",
            m.name()
        )));
    }
    Ok(())
}

/// b0 = 2a / sqrt(1 - a^2).
pub fn b0_from_step(a: f64) -> f64 {
    2.0 * a / (1.0 - a * a).sqrt()
}

/// A backward sequence on the positive side: reflects phi and the sequence in
/// the imaginary axis when the sequence heads to the left.
pub fn positive_side(m: &SelfMap, bisbs: &OrbitRecord) -> Result<(SelfMap, OrbitRecord, bool)> {
    let last = bisbs
        .last()
        .ok_or_else(|| Error::usage("empty backward sequence"))?;
    if last.re >= 0.0 {
        return Ok((m.clone(), bisbs.clone(), false));
    }
    let mut reflected = bisbs.clone();
    for r in &mut reflected.rows {
        r.z = -r.z.conj();
        r.arg = r.z.arg();
    }
    Ok((m.reflected()?, reflected, true))
}

/// Backward renormalization along a bounded-step backward sequence.
pub fn backward_conjugation(
    m: &SelfMap,
    bisbs: &OrbitRecord,
    depth: usize,
    grid: &Grid,
) -> Result<ConjugationField> {
    backward_conjugation_with(m, bisbs, depth, grid, &Tolerances::default())
}

pub fn backward_conjugation_with(
    m: &SelfMap,
    bisbs: &OrbitRecord,
    depth: usize,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<ConjugationField> {
    require_half_plane(m)?;
    if bisbs.direction != Direction::Backward || bisbs.model != Model::HalfPlane {
        return Err(Error::usage(
            "backward conjugation needs a half-plane backward sequence",
        ));
    }
    if depth == 0 || bisbs.len() < depth + 2 {
        return Err(Error::usage(format!(
            "backward sequence of length {} too short for depth {depth}",
            bisbs.len()
        )));
    }
    let (map, seq, reflected) = positive_side(m, bisbs)?;
    let w_n = seq
        .point(depth)
        .ok_or_else(|| Error::usage("depth index not retained in the sequence"))?;
    let (x, y) = (w_n.re, w_n.im);

    let a = seq
        .dyadic(|r| r.step)
        .extrapolate()
        .ok_or_else(|| Error::usage("sequence has no steps"))?;
    if !(a < 1.0) {
        return Err(Error::domain(format!("step limit {a} is not below 1")));
    }
    let b0 = b0_from_step(a);
    let dx = dyadic_ratio_sequence(&seq, seq.len() - 2, |p, q| (q.re - p.re) / p.im);
    let cross_check = dx.extrapolate().unwrap_or(f64::NAN);

    let evaluator = FieldEvaluator {
        map: map.clone(),
        frame: Frame::Backward { x, y },
        depth,
        overflow: tol.overflow,
    };
    let points = grid.points();
    let samples: Vec<Option<(Complex64, f64)>> = points
        .par_iter()
        .map(|&z| {
            let psi = evaluator.eval(z).ok()?;
            let shifted = evaluator.eval(z - b0).ok()?;
            let image = map.eval(psi).ok()?;
            Some((psi, (shifted - image).norm()))
        })
        .collect();
    Ok(assemble(
        grid,
        points,
        samples,
        depth,
        b0,
        Direction::Backward,
        reflected,
        cross_check,
        evaluator,
    ))
}

/// Checks on psi at the points zeta_n = i + n b0.
#[derive(Debug, Clone, Serialize)]
pub struct CorReport {
    pub depth: usize,
    /// (n, |psi(zeta_n) - w_n|).
    pub value_errors: Vec<(usize, f64)>,
    /// (n, |psi'(zeta_n)/y_n - 1|).
    pub derivative_ratio_errors: Vec<(usize, f64)>,
    /// (n, |phi'(w_n) - 1|) along the sequence at n = 2^j.
    pub phi_prime_errors: Vec<(usize, f64)>,
    pub skipped: Vec<usize>,
}

/// Compares psi with the sequence at zeta_n = i + n b0 for n = 0, 1, ...
/// while zeta_n stays in the grid, and reports |phi'(w_n) - 1|.
pub fn verify_cor_ratios(
    field: &ConjugationField,
    bisbs: &OrbitRecord,
    m: &SelfMap,
) -> Result<CorReport> {
    if field.direction != Direction::Backward {
        return Err(Error::usage("ratio checks need a backward field"));
    }
    let (_, seq, _) = positive_side(m, bisbs)?;
    let mut value_errors = Vec::new();
    let mut derivative_ratio_errors = Vec::new();
    let mut skipped = Vec::new();
    let max_n = 64.min(seq.len().saturating_sub(1));
    for n in 0..=max_n {
        let zeta = Complex64::new(n as f64 * field.constant, 1.0);
        if !field.grid.contains(zeta) {
            skipped.push(n);
            continue;
        }
        let Some(w) = seq.point(n) else {
            skipped.push(n);
            continue;
        };
        let psi = field.eval(zeta)?;
        value_errors.push((n, (psi - w).norm()));
        let d = field.evaluator.derivative(zeta, field.grid.pitch)?;
        derivative_ratio_errors.push((n, (d / w.im - 1.0).norm()));
    }
    let mut phi_prime_errors = Vec::new();
    let mut n = 1;
    while n < bisbs.len() {
        if let Some(w) = bisbs.point(n) {
            phi_prime_errors.push((n, (m.deriv(w)? - 1.0).norm()));
        }
        n *= 2;
    }
    Ok(CorReport {
        depth: field.depth,
        value_errors,
        derivative_ratio_errors,
        phi_prime_errors,
        skipped,
    })
}

/// Exact step identities and bounds along a half-plane backward sequence.
#[derive(Debug, Clone, Serialize)]
pub struct StepIdentityReport {
    pub steps_checked: usize,
    /// Max |X^2 - (-Y^2 + 2(1+d^2)/(1-d^2) Y - 1)| with X = (x_{n+1}-x_n)/y_n,
    /// Y = y_{n+1}/y_n.
    pub identity_residual: f64,
    /// Largest step on the sequence.
    pub a: f64,
    /// Min of 2d/(1-d^2) - |X| and 2a/(1-a^2) - 2d/(1-d^2).
    pub xstep_slack: f64,
    /// Min of Y - (1-d)/(1+d), (1-d)/(1+d) - (1-a)/(1+a) and 1 - Y.
    pub ystep_slack: f64,
    /// (n, y_{n+1}/y_n) at n = 2^j and the last index.
    pub ratio_tail: Vec<(usize, f64)>,
}

pub fn step_identities(bisbs: &OrbitRecord) -> Result<StepIdentityReport> {
    if bisbs.model != Model::HalfPlane || bisbs.direction != Direction::Backward {
        return Err(Error::usage(
            "step identities need a half-plane backward sequence",
        ));
    }
    let a = bisbs.steps().into_iter().fold(0.0, f64::max);
    let xa = 2.0 * a / (1.0 - a * a);
    let ya = (1.0 - a) / (1.0 + a);
    let mut identity_residual: f64 = 0.0;
    let mut xstep_slack = f64::INFINITY;
    let mut ystep_slack = f64::INFINITY;
    let mut ratio_tail = Vec::new();
    let mut steps_checked = 0;
    for pair in bisbs.rows.windows(2) {
        let (p, q) = (&pair[0], &pair[1]);
        if q.n != p.n + 1 {
            continue;
        }
        let d = p.step.expect("consecutive rows carry a step");
        let x_ratio = (q.z.re - p.z.re) / p.z.im;
        let y_ratio = q.z.im / p.z.im;
        let rhs = -y_ratio * y_ratio + 2.0 * (1.0 + d * d) / (1.0 - d * d) * y_ratio - 1.0;
        let scale = 1.0f64.max(x_ratio * x_ratio);
        identity_residual = identity_residual.max((x_ratio * x_ratio - rhs).abs() / scale);
        let xd = 2.0 * d / (1.0 - d * d);
        xstep_slack = xstep_slack.min(xd - x_ratio.abs()).min(xa - xd);
        let yd = (1.0 - d) / (1.0 + d);
        ystep_slack = ystep_slack
            .min(y_ratio - yd)
            .min(yd - ya)
            .min(1.0 - y_ratio);
        if p.n.is_power_of_two() || q.n + 1 == bisbs.len() {
            ratio_tail.push((p.n, y_ratio));
        }
        steps_checked += 1;
    }
    Ok(StepIdentityReport {
        steps_checked,
        identity_residual,
        a,
        xstep_slack,
        ystep_slack,
        ratio_tail,
    })
}

/// Result of sampling a function on horizontal half-strips.
#[derive(Debug, Clone, Serialize)]
pub struct LateralProfile {
    /// (R, mean over the slice, oscillation over the slice).
    pub slices: Vec<(f64, Complex64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LateralLimit {
    Limit {
        value: Complex64,
        profile: LateralProfile,
    },
    NoLimit {
        profile: LateralProfile,
    },
}

impl LateralLimit {
    pub fn value(&self) -> Option<Complex64> {
        match self {
            LateralLimit::Limit { value, .. } => Some(*value),
            LateralLimit::NoLimit { .. } => None,
        }
    }
}

/// R = 10, 20, 40, ... below 10^6, then 10^6.
pub fn default_r_schedule() -> Vec<f64> {
    let mut r = Vec::new();
    let mut x = 10.0;
    while x < 1e6 {
        r.push(x);
        x *= 2.0;
    }
    r.push(1e6);
    r
}

/// Samples f on the slices {R <= x <= 2R, eps <= y <= 1/eps} (8 x 8
/// points each). The limit exists when the slice oscillation and the change
/// of the slice mean are below `osc_tol (1 + |limit|)` at the last two R.
pub fn lateral_limit<F>(f: F, eps: f64, schedule: &[f64]) -> Result<LateralLimit>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    lateral_limit_with(f, eps, schedule, Tolerances::default().lateral_oscillation)
}

pub fn lateral_limit_with<F>(f: F, eps: f64, schedule: &[f64], osc_tol: f64) -> Result<LateralLimit>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!(
            "strip parameter {eps} not in (0, 1)"
        )));
    }
    if schedule.len() < 2 {
        return Err(Error::usage(
            "lateral limit needs at least two strip positions",
        ));
    }
    let mut slices = Vec::new();
    for &r in schedule {
        let pts: Vec<Complex64> = (0..8)
            .flat_map(|i| {
                let x = r * (1.0 + i as f64 / 7.0);
                // heights spaced geometrically from eps to 1/eps
                (0..8).map(move |j| Complex64::new(x, eps.powf(1.0 - 2.0 * j as f64 / 7.0)))
            })
            .collect();
        let vals: Vec<Complex64> = pts.par_iter().map(|&z| f(z)).collect::<Result<_>>()?;
        let mean = vals.iter().sum::<Complex64>() / vals.len() as f64;
        let mut osc: f64 = 0.0;
        for p in &vals {
            for q in &vals {
                osc = osc.max((p - q).norm());
            }
        }
        slices.push((r, mean, osc));
    }
    let profile = LateralProfile { slices };
    let k = profile.slices.len();
    let (_, m1, o1) = profile.slices[k - 2];
    let (_, m2, o2) = profile.slices[k - 1];
    let scale = osc_tol * (1.0 + m2.norm());
    if o1 < scale && o2 < scale && (m2 - m1).norm() < scale {
        Ok(LateralLimit::Limit { value: m2, profile })
    } else {
        Ok(LateralLimit::NoLimit { profile })
    }
}

/// Outcome of the injectivity probe on Q(R) = {x > R, y > 1}.
#[derive(Debug, Clone, Serialize)]
pub struct InjectivityReport {
    pub evaluated: bool,
    pub samples: usize,
    pub min_re_derivative: f64,
    pub collisions: usize,
    pub note: String,
}

/// Samples a 64 x 64 lattice of Q(R) ∩ grid: Re psi' must be positive and no
/// two samples may map within 1e-9 of each other.
pub fn injectivity_probe(field: &ConjugationField, r: f64) -> Result<InjectivityReport> {
    if field.direction != Direction::Backward {
        return Err(Error::usage("injectivity probe needs a backward field"));
    }
    let g = field.grid;
    let (x0, x1) = (g.re_min.max(r), g.re_max);
    let (y0, y1) = (g.im_min.max(1.0), g.im_max);
    if x0 >= x1 || y0 >= y1 {
        return Ok(InjectivityReport {
            evaluated: false,
            samples: 0,
            min_re_derivative: f64::NAN,
            collisions: 0,
            note: format!("grid {g} does not reach Q({r})"),
        });
    }
    let h = g.pitch.min((x1 - x0) / 128.0).min((y1 - y0) / 128.0);
    let pts: Vec<Complex64> = (0..64)
        .flat_map(|i| {
            let y = y0 + (y1 - y0) * (i as f64 + 0.5) / 64.0;
            (0..64).map(move |j| Complex64::new(x0 + (x1 - x0) * (j as f64 + 0.5) / 64.0, y))
        })
        .collect();
    let evals: Vec<(Complex64, Complex64)> = pts
        .par_iter()
        .map(|&z| Ok((field.eval(z)?, field.evaluator.derivative(z, h)?)))
        .collect::<Result<_>>()?;
    let min_re = evals.iter().map(|e| e.1.re).fold(f64::INFINITY, f64::min);
    let collisions: usize = (0..evals.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..evals.len())
                .filter(|&j| {
                    (evals[i].0 - evals[j].0).norm() < 1e-9 && (pts[i] - pts[j]).norm() > 1e-6
                })
                .count()
        })
        .sum();
    Ok(InjectivityReport {
        evaluated: true,
        samples: pts.len(),
        min_re_derivative: min_re,
        collisions,
        note: String::new(),
    })
}

/// One backward attempt of the non-existence check.
#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceAttempt {
    pub start: Complex64,
    pub found: bool,
    /// Level of failure, or the sequence length when found.
    pub level: usize,
    pub ell_inf: Option<f64>,
    pub non_zero_height: Option<bool>,
    /// Sign of Re w_n at the end of the sequence: +1 (argument to 0) or -1
    /// (argument to pi).
    pub side: Option<i8>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceReport {
    pub attempts: Vec<NonexistenceAttempt>,
    /// Forward orbit side: +1 when arg z_n -> 0, -1 when arg z_n -> pi.
    pub forward_side: i8,
    /// Every start failed.
    pub empty: bool,
    /// Every sequence found has a positive height limit.
    pub heights_positive: bool,
    /// Some sequence found lies on the same side as the forward orbit.
    pub same_side_found: bool,
    pub checks: Vec<Check>,
}

/// Backward starts at decreasing heights used by [`nonexistence_check`].
pub const NONEXISTENCE_STARTS: [f64; 5] = [1.0, 0.5, 0.25, 0.125, 0.0625];

/// Runs the backward search from 5 starts i y, y = 1, 1/2, ..., 1/16, and
/// records whether sequences exist, their heights and argument sides.
pub fn nonexistence_check(m: &SelfMap) -> Result<NonexistenceReport> {
    nonexistence_check_with(m, &Tolerances::default())
}

pub fn nonexistence_check_with(m: &SelfMap, tol: &Tolerances) -> Result<NonexistenceReport> {
    require_half_plane(m)?;
    let fwd = forward_orbit_with(
        m,
        &ModelPoint::half_plane(Complex64::new(0.0, 1.0))?,
        4096,
        tol,
        |_, _| None,
    )?;
    let forward_side = if fwd.last().map_or(0.0, |z| z.re) >= 0.0 {
        1
    } else {
        -1
    };
    let opts = BackwardOptions::from_tolerances(tol);
    let mut attempts = Vec::new();
    let mut checks = Vec::new();
    for (k, &y) in NONEXISTENCE_STARTS.iter().enumerate() {
        let start = Complex64::new(0.0, y);
        match backward_orbit_with(
            m,
            &ModelPoint::half_plane(start)?,
            tol.backward_budget,
            &opts,
            tol,
        )? {
            Backward::Failure(e) => attempts.push(NonexistenceAttempt {
                start,
                found: false,
                level: e.level,
                ell_inf: None,
                non_zero_height: None,
                side: None,
            }),
            Backward::Orbit(o) => {
                let s = summarize_bisbs(&o, tol, &mut checks, &format!("start{k}_"));
                attempts.push(NonexistenceAttempt {
                    start,
                    found: true,
                    level: o.len(),
                    ell_inf: Some(s.ell_inf),
                    non_zero_height: s.class,
                    side: Some(if o.last().map_or(0.0, |w| w.re) >= 0.0 {
                        1
                    } else {
                        -1
                    }),
                });
            }
        }
    }
    let empty = attempts.iter().all(|a| !a.found);
    let heights_positive = attempts
        .iter()
        .filter(|a| a.found)
        .all(|a| a.non_zero_height == Some(true));
    let same_side_found = attempts.iter().any(|a| a.side == Some(forward_side));
    Ok(NonexistenceReport {
        attempts,
        forward_side,
        empty,
        heights_positive,
        same_side_found,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::atlas;
    use crate::iteration::backward_orbit;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bisbs(name: &str, w0: Complex64, n: usize) -> OrbitRecord {
        let m = atlas(name).unwrap().map;
        backward_orbit(
            &m,
            &ModelPoint::half_plane(w0).unwrap(),
            n,
            &BackwardOptions::default(),
        )
        .unwrap()
        .into_orbit()
        .unwrap()
    }

    #[test]
    fn grid_parsing_and_points() {
        let g: Grid = "-1,1,0.5,1.5".parse().unwrap();
        assert_eq!(g.pitch, 1.0 / 32.0);
        assert_eq!(g.points().len(), 65 * 33);
        assert!("-1,1,-0.5,1".parse::<Grid>().is_err());
        assert!("1,2,3".parse::<Grid>().is_err());
    }

    #[test]
    fn unit_translation_forward_field() {
        let m = atlas("ia_1").unwrap().map;
        let g: Grid = "-1,1,0.5,1.5,0.25".parse().unwrap();
        let f = forward_conjugation(&m, &ModelPoint::half_plane(c(0.0, 1.0)).unwrap(), 1024, &g)
            .unwrap();
        assert_eq!(f.constant, 1.0);
        assert!(f.residual < 1e-8);
        assert_eq!(f.dropped, 0);
    }

    #[test]
    fn unit_translation_backward_field() {
        let m = atlas("ia_1").unwrap().map;
        let o = bisbs("ia_1", c(0.0, 1.0), 300);
        let g: Grid = "-1,1,0.5,1.5,0.25".parse().unwrap();
        let f = backward_conjugation(&m, &o, 256, &g).unwrap();
        assert!(f.reflected);
        assert!((f.constant - 1.0).abs() < 1e-12);
        assert!((f.cross_check - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-9);
        let r = verify_cor_ratios(&f, &o, &m).unwrap();
        assert!(r.derivative_ratio_errors.iter().all(|e| e.1 < 1e-6));
        assert!(r.value_errors.iter().all(|e| e.1 < 1e-9));
        assert_eq!(r.value_errors.len(), 2);
    }

    #[test]
    fn step_identity_on_unit_translation() {
        let r = step_identities(&bisbs("ia_1", c(0.0, 1.0), 50)).unwrap();
        assert_eq!(r.steps_checked, 50);
        assert!(r.identity_residual < 1e-14);
        assert!(r.xstep_slack >= -1e-12 && r.ystep_slack >= -1e-12);
    }

    #[test]
    fn lateral_limit_of_translation() {
        let m = atlas("ia_1").unwrap().map;
        let l = lateral_limit(|z| Ok(z - m.eval(z)?), 0.5, &default_r_schedule()).unwrap();
        assert_eq!(l.value(), Some(c(-1.0, 0.0)));
        let osc = lateral_limit(
            |z| Ok(Complex64::new((z.re).sin(), 0.0)),
            0.5,
            &[10.0, 20.0, 40.0],
        )
        .unwrap();
        assert!(osc.value().is_none());
        assert!(lateral_limit(Ok, 1.5, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn injectivity_needs_overlap() {
        let m = atlas("ia_1").unwrap().map;
        let o = bisbs("ia_1", c(0.0, 1.0), 100);
        let g: Grid = "-1,1,0.5,1.5,0.25".parse().unwrap();
        let f = backward_conjugation(&m, &o, 64, &g).unwrap();
        assert!(!injectivity_probe(&f, 100.0).unwrap().evaluated);
        let g: Grid = "100,120,1,3,0.25".parse().unwrap();
        let f = backward_conjugation(&m, &o, 64, &g).unwrap();
        let r = injectivity_probe(&f, 100.0).unwrap();
        assert!(r.evaluated);
        assert_eq!(r.collisions, 0);
        assert!((r.min_re_derivative - 1.0).abs() < 1e-9);
    }
}
