//! Forward orbits, bounded-step backward orbits and their step limits.

use std::collections::VecDeque;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::atlas::SelfMap;
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::extrapolate::Dyadic;
use crate::geometry::{pd_circle, pd_raw, Model, ModelPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// One retained index of an orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub n: usize,
    pub z: Complex64,
    /// Pseudo-hyperbolic distance to the point with index n + 1.
    pub step: Option<f64>,
    /// Im z on the half-plane, 1 - |z| on the disk.
    pub height: f64,
    pub arg: f64,
    /// |phi(w_n) - w_{n-1}| for backward orbits.
    pub residual: Option<f64>,
}

/// An orbit with per-index bookkeeping. Up to `full_storage` indices are kept
/// in full; later indices are kept only at powers of two and in a contiguous
/// tail window.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitRecord {
    pub map: String,
    pub model: Model,
    pub direction: Direction,
    pub rows: Vec<OrbitPoint>,
    /// Why iteration stopped before the requested length, if it did.
    pub stop: Option<String>,
}

pub fn height(model: Model, z: Complex64) -> f64 {
    match model {
        Model::HalfPlane => z.im,
        Model::Disk => 1.0 - z.norm(),
    }
}

impl OrbitRecord {
    /// Number of indices computed (last index + 1).
    pub fn len(&self) -> usize {
        self.rows.last().map_or(0, |r| r.n + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.stop.is_none()
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.rows.iter().map(|r| r.z).collect()
    }

    pub fn first(&self) -> Option<Complex64> {
        self.rows.first().map(|r| r.z)
    }

    pub fn last(&self) -> Option<Complex64> {
        self.rows.last().map(|r| r.z)
    }

    pub fn row(&self, n: usize) -> Option<&OrbitPoint> {
        self.rows
            .binary_search_by_key(&n, |r| r.n)
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn point(&self, n: usize) -> Option<Complex64> {
        self.row(n).map(|r| r.z)
    }

    /// All recorded steps, in index order.
    pub fn steps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.step).collect()
    }

    pub fn heights(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.height).collect()
    }

    /// Longest run of consecutive indices at the end of the record.
    pub fn contiguous_tail(&self) -> &[OrbitPoint] {
        let rows = &self.rows;
        let mut start = rows.len().saturating_sub(1);
        while start > 0 && rows[start - 1].n + 1 == rows[start].n {
            start -= 1;
        }
        &rows[start..]
    }

    /// Samples a per-row quantity at indices N = 2^j.
    pub fn dyadic<F>(&self, f: F) -> Dyadic
    where
        F: Fn(&OrbitPoint) -> Option<f64>,
    {
        let samples = self
            .rows
            .iter()
            .filter(|r| r.n.is_power_of_two())
            .filter_map(|r| f(r).map(|v| (r.n, v)))
            .collect();
        Dyadic::new(samples)
    }

    /// Writes `n,re,im,step,height,arg,residual`, one line per retained index.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,re,im,step,height,arg,residual")?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                r.z.re,
                r.z.im,
                opt(r.step),
                r.height,
                r.arg,
                opt(r.residual)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

struct Recorder {
    model: Model,
    full: usize,
    window: usize,
    rows: Vec<OrbitPoint>,
    tail: VecDeque<OrbitPoint>,
}

impl Recorder {
    fn new(model: Model, tol: &Tolerances) -> Self {
        Self {
            model,
            full: tol.full_storage,
            window: tol.tail_window,
            rows: Vec::new(),
            tail: VecDeque::new(),
        }
    }

    fn row(&self, n: usize, z: Complex64, step: Option<f64>, residual: Option<f64>) -> OrbitPoint {
        OrbitPoint {
            n,
            z,
            step,
            height: height(self.model, z),
            arg: z.arg(),
            residual,
        }
    }

    fn push(&mut self, row: OrbitPoint) {
        if row.n < self.full {
            self.rows.push(row);
            return;
        }
        if row.n.is_power_of_two() {
            self.rows.push(row.clone());
        }
        if self.tail.len() == self.window {
            self.tail.pop_front();
        }
        self.tail.push_back(row);
    }

    fn finish(mut self) -> Vec<OrbitPoint> {
        let last_kept = self.rows.last().map(|r| r.n);
        for r in self.tail {
            if last_kept.is_none_or(|k| r.n > k) || !r.n.is_power_of_two() {
                self.rows.push(r);
            }
        }
        self.rows.sort_by_key(|r| r.n);
        self.rows.dedup_by_key(|r| r.n);
        self.rows
    }
}

fn check_start(m: &SelfMap, z0: &ModelPoint, n: usize) -> Result<()> {
    if z0.model() != m.model() {
        return Err(Error::usage(format!(
            "start point is on the {} but {} acts on the {}",
            z0.model(),
            m.name(),
            m.model()
        )));
    }
    if n == 0 {
        return Err(Error::usage("orbit length must be at least 1"));
    }
    Ok(())
}

/// Forward orbit z_0, ..., z_n with default tolerances.
pub fn forward_orbit(m: &SelfMap, z0: &ModelPoint, n: usize) -> Result<OrbitRecord> {
    forward_orbit_with(m, z0, n, &Tolerances::default(), |_, _| None)
}

/// Forward orbit with an early-stop predicate called on every new point.
pub fn forward_orbit_with<S>(
    m: &SelfMap,
    z0: &ModelPoint,
    n: usize,
    tol: &Tolerances,
    stop_when: S,
) -> Result<OrbitRecord>
where
    S: Fn(usize, Complex64) -> Option<String>,
{
    check_start(m, z0, n)?;
    let model = m.model();
    let mut rec = Recorder::new(model, tol);
    let mut z = z0.value();
    let mut stop = None;
    let mut done = 0;
    for k in 0..n {
        let next = match m.eval(z) {
            Ok(w) if w.re.is_finite() && w.im.is_finite() => w,
            Ok(w) => {
                stop = Some(format!("non-finite value {w} at index {}", k + 1));
                break;
            }
            Err(e) => {
                stop = Some(format!("index {}: {e}", k + 1));
                break;
            }
        };
        let step = pd_raw(model, z, next);
        rec.push(rec.row(k, z, Some(step), None));
        z = next;
        done = k + 1;
        if let Some(reason) = stop_when(k + 1, z) {
            stop = Some(reason);
            break;
        }
    }
    rec.push(rec.row(done, z, None, None));
    Ok(OrbitRecord {
        map: m.name().to_string(),
        model,
        direction: Direction::Forward,
        rows: rec.finish(),
        stop: stop.filter(|s| !s.starts_with(EARLY_STOP)),
    })
}

/// Prefix for stop reasons that end an orbit deliberately rather than by
/// failure (the record is still complete).
pub const EARLY_STOP: &str = "stopped:";

/// Options for the backward search.
#[derive(Debug, Clone)]
pub struct BackwardOptions {
    pub step_bound: f64,
    pub residual_tol: f64,
    pub newton_max_iter: usize,
    pub backtrack_levels: usize,
    /// Skip the Newton fallback (explicit inverse only).
    pub explicit_only: bool,
}

impl BackwardOptions {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        Self {
            step_bound: tol.step_bound,
            residual_tol: tol.residual_tol,
            newton_max_iter: tol.newton_max_iter,
            backtrack_levels: tol.backtrack_levels,
            explicit_only: false,
        }
    }

    pub fn with_step_bound(mut self, bound: f64) -> Self {
        self.step_bound = bound;
        self
    }
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self::from_tolerances(&Tolerances::default())
    }
}

/// Evidence that no bounded-step backward sequence continues from a start.
/// This is numerical evidence, not a proof of absence.
#[derive(Debug, Clone, Serialize)]
pub struct EmptyEvidence {
    /// Deepest index for which no admissible preimage was found.
    pub level: usize,
    /// Smallest step among preimages that exceeded the bound, if any.
    pub best_step: Option<f64>,
    pub reason: String,
    /// The path that reached `level - 1`.
    pub partial: OrbitRecord,
}

#[derive(Debug, Clone)]
pub enum Backward {
    Orbit(OrbitRecord),
    Failure(EmptyEvidence),
}

impl Backward {
    pub fn orbit(&self) -> Option<&OrbitRecord> {
        match self {
            Backward::Orbit(o) => Some(o),
            Backward::Failure(_) => None,
        }
    }

    pub fn into_orbit(self) -> Result<OrbitRecord> {
        match self {
            Backward::Orbit(o) => Ok(o),
            Backward::Failure(e) => Err(Error::NoPreimage {
                target: e.partial.last().unwrap_or_default(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    p: Complex64,
    step: f64,
    residual: f64,
}

struct Level {
    p: Complex64,
    step_in: Option<f64>,
    residual: Option<f64>,
    siblings: Vec<Candidate>,
}

struct Preimages {
    admissible: Vec<Candidate>,
    best_rejected: Option<f64>,
    reason: String,
}

/// Backward orbit w_0, ..., w_n with phi(w_{k+1}) = w_k and every step at
/// most `opts.step_bound`. The explicit inverse branch is tried first; if it
/// fails or overshoots the bound, damped Newton runs from a predictor seed and
/// two rings of seeds. Among admissible preimages the smallest step wins.
/// When a level has no admissible preimage the search backs up through
/// remaining alternatives for up to `backtrack_levels` levels before giving up.
pub fn backward_orbit(
    m: &SelfMap,
    w0: &ModelPoint,
    n: usize,
    opts: &BackwardOptions,
) -> Result<Backward> {
    backward_orbit_with(m, w0, n, opts, &Tolerances::default())
}

/// [`backward_orbit`] with explicit storage settings.
pub fn backward_orbit_with(
    m: &SelfMap,
    w0: &ModelPoint,
    n: usize,
    opts: &BackwardOptions,
    tol: &Tolerances,
) -> Result<Backward> {
    check_start(m, w0, n)?;
    if !(opts.step_bound > 0.0 && opts.step_bound < 1.0) {
        return Err(Error::domain(format!(
            "step bound {} not in (0, 1)",
            opts.step_bound
        )));
    }
    let model = m.model();
    let mut rec = Recorder::new(model, tol);
    let keep = opts.backtrack_levels + 2;
    let mut committed = 0usize;
    let mut stack: Vec<Level> = vec![Level {
        p: w0.value(),
        step_in: None,
        residual: None,
        siblings: Vec::new(),
    }];
    let mut deepest_failure: Option<(usize, Option<f64>, String)> = None;
    let mut deepest_path: Option<(usize, Vec<Level>)> = None;

    while committed + stack.len() - 1 < n {
        let top = stack.len() - 1;
        let target = stack[top].p;
        let prev = (top > 0).then(|| stack[top - 1].p);
        let last_step = stack[top].step_in;
        let found = preimages(m, target, prev, last_step, opts);

        if let Some(first) = found.admissible.first().copied() {
            stack.push(Level {
                p: first.p,
                step_in: Some(first.step),
                residual: Some(first.residual),
                siblings: found.admissible[1..].to_vec(),
            });
            if stack.len() > keep {
                let old = stack.remove(0);
                let step = stack[0].step_in;
                rec.push(rec.row(committed, old.p, step, old.residual));
                committed += 1;
            }
            continue;
        }

        let level = committed + top + 1;
        if deepest_failure.as_ref().is_none_or(|f| level >= f.0) {
            deepest_failure = Some((level, found.best_rejected, found.reason));
            deepest_path = Some((
                committed,
                stack.iter().map(Level::copy_path).collect::<Vec<_>>(),
            ));
        }
        // Back up to the nearest level that still has an untried alternative.
        let mut backed = 0;
        let resumed = loop {
            if backed >= opts.backtrack_levels || stack.len() <= 1 {
                break false;
            }
            let mut dead = stack.pop().expect("non-empty stack");
            backed += 1;
            if !dead.siblings.is_empty() {
                let next = dead.siblings.remove(0);
                stack.push(Level {
                    p: next.p,
                    step_in: Some(next.step),
                    residual: Some(next.residual),
                    siblings: dead.siblings,
                });
                break true;
            }
        };
        if !resumed {
            let (level, best_step, reason) = deepest_failure.expect("failure recorded");
            let path = match deepest_path {
                Some((at, path)) if at == committed => path,
                _ => stack,
            };
            flush(&mut rec, &mut committed, path);
            return Ok(Backward::Failure(EmptyEvidence {
                level,
                best_step,
                reason,
                partial: OrbitRecord {
                    map: m.name().to_string(),
                    model,
                    direction: Direction::Backward,
                    rows: rec.finish(),
                    stop: Some(format!("no admissible preimage at level {level}")),
                },
            }));
        }
    }
    flush(&mut rec, &mut committed, stack);
    Ok(Backward::Orbit(OrbitRecord {
        map: m.name().to_string(),
        model,
        direction: Direction::Backward,
        rows: rec.finish(),
        stop: None,
    }))
}

impl Level {
    fn copy_path(&self) -> Level {
        Level {
            p: self.p,
            step_in: self.step_in,
            residual: self.residual,
            siblings: Vec::new(),
        }
    }
}

fn flush(rec: &mut Recorder, committed: &mut usize, stack: Vec<Level>) {
    let steps: Vec<Option<f64>> = stack
        .iter()
        .skip(1)
        .map(|l| l.step_in)
        .chain([None])
        .collect();
    for (level, step) in stack.into_iter().zip(steps) {
        rec.push(rec.row(*committed, level.p, step, level.residual));
        *committed += 1;
    }
}

fn admissible_tol(opts: &BackwardOptions, target: Complex64) -> f64 {
    opts.residual_tol * target.norm().max(1.0)
}

fn sort_candidates(c: &mut [Candidate]) {
    c.sort_by(|a, b| {
        if (a.step - b.step).abs() <= 1e-12 {
            a.p.norm().total_cmp(&b.p.norm())
        } else {
            a.step.total_cmp(&b.step)
        }
    });
}

fn preimages(
    m: &SelfMap,
    target: Complex64,
    prev: Option<Complex64>,
    last_step: Option<f64>,
    opts: &BackwardOptions,
) -> Preimages {
    let model = m.model();
    let tol = admissible_tol(opts, target);
    let mut rejected: Vec<f64> = Vec::new();
    let mut reason = String::new();

    if m.has_inverse() {
        match m.invert(target) {
            Ok(p) => {
                let step = pd_raw(model, target, p);
                let residual = m
                    .eval(p)
                    .map(|v| (v - target).norm())
                    .unwrap_or(f64::INFINITY);
                if step <= opts.step_bound && residual <= tol {
                    return Preimages {
                        admissible: vec![Candidate { p, step, residual }],
                        best_rejected: None,
                        reason: String::new(),
                    };
                }
                if step > opts.step_bound {
                    rejected.push(step);
                    reason = format!("explicit preimage step {step} exceeds bound");
                } else {
                    reason = format!("explicit preimage residual {residual}");
                }
            }
            Err(e) => reason = e.to_string(),
        }
    }
    if opts.explicit_only {
        return Preimages {
            admissible: Vec::new(),
            best_rejected: rejected.into_iter().reduce(f64::min),
            reason,
        };
    }

    let seeds = newton_seeds(model, target, prev, last_step, opts.step_bound);
    let roots = newton_roots(m, target, &seeds, tol, opts.newton_max_iter);
    let mut admissible = Vec::new();
    for (p, residual) in roots {
        let step = pd_raw(model, target, p);
        if step <= opts.step_bound {
            admissible.push(Candidate { p, step, residual });
        } else {
            rejected.push(step);
        }
    }
    sort_candidates(&mut admissible);
    if admissible.is_empty() {
        let newton = if rejected.is_empty() {
            "Newton found no interior preimage".to_string()
        } else {
            "every Newton preimage exceeds the step bound".to_string()
        };
        reason = if reason.is_empty() {
            newton
        } else {
            format!("{reason}; {newton}")
        };
    }
    Preimages {
        admissible,
        best_rejected: rejected.into_iter().reduce(f64::min),
        reason,
    }
}

fn newton_seeds(
    model: Model,
    target: Complex64,
    prev: Option<Complex64>,
    last_step: Option<f64>,
    step_bound: f64,
) -> Vec<Complex64> {
    let mut seeds = Vec::with_capacity(17);
    let predictor = match (model, prev) {
        (Model::HalfPlane, Some(p)) => {
            let b_hat = (target.re - p.re) / p.im;
            target + b_hat * target.im
        }
        (Model::Disk, Some(p)) => target + (target - p),
        (_, None) => target,
    };
    if model.is_interior(predictor) {
        seeds.push(predictor);
    } else {
        seeds.push(target);
    }
    seeds.extend(pd_circle(model, target, step_bound, 8));
    if let Some(s) = last_step.filter(|&s| s > 0.0 && s < step_bound) {
        seeds.extend(pd_circle(model, target, s, 8));
    }
    seeds.retain(|&s| model.is_interior(s));
    seeds
}

/// Damped Newton on phi(w) - target from one seed.
fn newton(
    m: &SelfMap,
    target: Complex64,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Option<(Complex64, f64)> {
    let model = m.model();
    if !model.is_interior(seed) {
        return None;
    }
    let mut w = seed;
    let mut f = m.eval(w).ok()? - target;
    let mut r = f.norm();
    for _ in 0..max_iter {
        if r < tol {
            return Some((w, r));
        }
        let d = m.deriv(w).ok()?;
        if !(d.norm() > 0.0) || !d.re.is_finite() || !d.im.is_finite() {
            return None;
        }
        let delta = f / d;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = w - lambda * delta;
            if model.is_interior(cand) {
                if let Ok(v) = m.eval(cand) {
                    let fc = v - target;
                    if fc.norm() < r {
                        w = cand;
                        f = fc;
                        r = fc.norm();
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    (r < tol).then_some((w, r))
}

fn newton_roots(
    m: &SelfMap,
    target: Complex64,
    seeds: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> Vec<(Complex64, f64)> {
    let mut roots: Vec<(Complex64, f64)> = Vec::new();
    for &s in seeds {
        if let Some((p, r)) = newton(m, target, s, tol, max_iter) {
            let dup = roots
                .iter()
                .any(|(q, _)| (p - *q).norm() <= 1e-9 * p.norm().max(1.0));
            if !dup {
                roots.push((p, r));
            }
        }
    }
    roots
}

/// Preimage of `target` by damped Newton from each seed (at most 100
/// iterations, residual below 1e-10 max(1, |target|)); returns the root
/// closest to `target` in pseudo-hyperbolic distance.
pub fn newton_preimage(m: &SelfMap, target: Complex64, seeds: &[Complex64]) -> Result<Complex64> {
    let tol = Tolerances::default();
    let roots = newton_roots(
        m,
        target,
        seeds,
        tol.residual_tol * target.norm().max(1.0),
        tol.newton_max_iter,
    );
    roots
        .into_iter()
        .map(|(p, _)| (p, pd_raw(m.model(), target, p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
        .ok_or(Error::NoPreimage { target })
}

/// Limits of the step sequence of an orbit.
#[derive(Debug, Clone, Serialize)]
pub struct StepLimits {
    pub raw_tail: f64,
    pub extrapolated: f64,
    pub dyadic: Dyadic,
    /// a_k (or s_k) for k = 1..=k_max: distance between the last point and
    /// the point k indices earlier.
    pub k_order: Vec<f64>,
}

pub fn step_limits(orbit: &OrbitRecord, k_max: usize) -> Result<StepLimits> {
    let tail = orbit.contiguous_tail();
    if k_max == 0 || tail.len() < 4 * k_max || orbit.len() < 4 * k_max {
        return Err(Error::usage(format!(
            "orbit of length {} too short for k_max = {k_max}",
            orbit.len()
        )));
    }
    let raw_tail = orbit
        .rows
        .iter()
        .rev()
        .find_map(|r| r.step)
        .ok_or_else(|| Error::usage("orbit has no steps"))?;
    let dyadic = orbit.dyadic(|r| r.step);
    let extrapolated = dyadic.extrapolate().unwrap_or(raw_tail);
    let last = tail[tail.len() - 1].z;
    let k_order = (1..=k_max)
        .map(|k| pd_raw(orbit.model, tail[tail.len() - 1 - k].z, last))
        .collect();
    Ok(StepLimits {
        raw_tail,
        extrapolated,
        dyadic,
        k_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::atlas;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hp(re: f64, im: f64) -> ModelPoint {
        ModelPoint::half_plane(c(re, im)).unwrap()
    }

    #[test]
    fn forward_translation() {
        let m = atlas("iib_empty").unwrap().map;
        let o = forward_orbit(&m, &hp(0.0, 1.0), 3).unwrap();
        assert_eq!(
            o.points(),
            vec![c(0.0, 1.0), c(0.0, 2.0), c(0.0, 3.0), c(0.0, 4.0)]
        );
        assert!(o.is_complete());
        assert_eq!(o.rows[3].step, None);
    }

    #[test]
    fn forward_steps_of_unit_translation() {
        let m = atlas("ia_1").unwrap().map;
        let o = forward_orbit(&m, &hp(0.0, 1.0), 50).unwrap();
        for s in o.steps() {
            assert!((s - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_rejects_mismatched_model() {
        let m = atlas("ia_1").unwrap().map;
        let z = ModelPoint::disk(c(0.0, 0.0)).unwrap();
        assert!(matches!(forward_orbit(&m, &z, 3), Err(Error::Usage(_))));
        assert!(matches!(
            forward_orbit(&m, &hp(0.0, 1.0), 0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn forward_truncates_on_range_error() {
        let m = SelfMap::new("down", Model::HalfPlane, |z| Ok(z - c(0.0, 0.4)));
        let o = forward_orbit(&m, &hp(0.0, 1.0), 10).unwrap();
        assert_eq!(o.len(), 3);
        assert!(o.stop.as_deref().unwrap().contains("range error"));
    }

    #[test]
    fn backward_translation() {
        let m = atlas("ia_1").unwrap().map;
        let o = backward_orbit(&m, &hp(0.0, 1.0), 3, &BackwardOptions::default())
            .unwrap()
            .into_orbit()
            .unwrap();
        assert_eq!(
            o.points(),
            vec![c(0.0, 1.0), c(-1.0, 1.0), c(-2.0, 1.0), c(-3.0, 1.0)]
        );
        for s in o.steps() {
            assert!((s - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(o.rows[0].residual, None);
        assert_eq!(o.rows[1].residual, Some(0.0));
    }

    #[test]
    fn backward_failure_level() {
        let m = atlas("iib_empty").unwrap().map;
        match backward_orbit(&m, &hp(0.0, 2.0), 10, &BackwardOptions::default()).unwrap() {
            Backward::Failure(e) => {
                assert_eq!(e.level, 2);
                assert_eq!(e.partial.points(), vec![c(0.0, 2.0), c(0.0, 1.0)]);
            }
            Backward::Orbit(o) => panic!("unexpected orbit {:?}", o.points()),
        }
    }

    #[test]
    fn backward_newton_matches_explicit_inverse() {
        let e = atlas("iib_2").unwrap();
        let newton_only = SelfMap::new("iib_2-newton", Model::HalfPlane, move |z| e.map.eval(z))
            .with_derivative(|z| Ok(z / crate::atlas::sqrt_upper(z * z - 1.0)));
        let w0 = crate::atlas::sqrt_upper(c(0.0, 1.0));
        let o = backward_orbit(
            &newton_only,
            &ModelPoint::half_plane(w0).unwrap(),
            40,
            &BackwardOptions::default(),
        )
        .unwrap()
        .into_orbit()
        .unwrap();
        for r in &o.rows {
            let expected = crate::atlas::sqrt_upper(c(r.n as f64, 1.0));
            assert!(
                (r.z - expected).norm() < 1e-9,
                "n={} {} vs {}",
                r.n,
                r.z,
                expected
            );
        }
    }

    #[test]
    fn newton_examples() {
        let m = atlas("iib_2").unwrap().map;
        let t = crate::atlas::sqrt_upper(c(0.0, 1.0));
        let p = newton_preimage(&m, t, &[t + 0.5]).unwrap();
        assert!((p - crate::atlas::sqrt_upper(c(1.0, 1.0))).norm() < 1e-10);

        let ia1 = atlas("ia_1").unwrap().map;
        assert!(
            (newton_preimage(&ia1, c(0.0, 1.0), &[c(0.0, 2.0)]).unwrap() - c(-1.0, 1.0)).norm()
                < 1e-12
        );

        let p = c(0.3, 0.9);
        let t = m.eval(p).unwrap();
        assert_eq!(newton_preimage(&m, t, &[p]).unwrap(), p);

        let iibe = atlas("iib_empty").unwrap().map;
        assert!(matches!(
            newton_preimage(&iibe, c(0.0, 0.5), &[c(0.0, 0.5)]),
            Err(Error::NoPreimage { .. })
        ));
    }

    #[test]
    fn step_limit_examples() {
        let m = atlas("ia_1").unwrap().map;
        let o = forward_orbit(&m, &hp(0.0, 1.0), 64).unwrap();
        let s = step_limits(&o, 4).unwrap();
        assert!((s.extrapolated - 1.0 / 5f64.sqrt()).abs() < 1e-15);

        let b = backward_orbit(&m, &hp(0.0, 1.0), 64, &BackwardOptions::default())
            .unwrap()
            .into_orbit()
            .unwrap();
        let s = step_limits(&b, 4).unwrap();
        assert!((s.k_order[1] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!(s.k_order.windows(2).all(|w| w[0] <= w[1]));
        assert!(step_limits(&b, 40).is_err());
    }

    #[test]
    fn thinning_keeps_dyadic_indices_and_tail() {
        let tol = Tolerances {
            full_storage: 100,
            tail_window: 16,
            ..Tolerances::default()
        };
        let m = atlas("ia_1").unwrap().map;
        let o = forward_orbit_with(&m, &hp(0.0, 1.0), 1000, &tol, |_, _| None).unwrap();
        assert_eq!(o.len(), 1001);
        assert!(o.row(512).is_some());
        assert!(o.row(300).is_none());
        assert_eq!(o.contiguous_tail().len(), 16);
        assert_eq!(o.point(1000), Some(c(1000.0, 1.0)));
        assert!(o.rows.windows(2).all(|w| w[0].n < w[1].n));
    }

    #[test]
    fn csv_layout() {
        let m = atlas("ia_1").unwrap().map;
        let o = backward_orbit(&m, &hp(0.0, 1.0), 1, &BackwardOptions::default())
            .unwrap()
            .into_orbit()
            .unwrap();
        let csv = o.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,re,im,step,height,arg,residual");
        assert!(lines[1].ends_with(','));
        assert!(lines[2].starts_with("1,-1,1,,1,"));
        assert!(lines[2].ends_with(",0"));
    }
}
