//! Invariant suites: exact metric identities, atlas consistency, and the
//! quantitative statements about parabolic maps.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::atlas::{atlas, disk_dilation, SelfMap, ATLAS_NAMES};
use crate::classify::{classify_with, summarize_bisbs, DwPoint};
use crate::config::Tolerances;
use crate::conjugation::{
    b0_from_step, backward_conjugation_with, default_r_schedule, forward_conjugation_with,
    lateral_limit_with, nonexistence_check_with, step_identities, Grid,
};
use crate::error::{Error, Result};
use crate::geometry::{
    cayley_raw, lb_bound, lb_ratio, pd_disk, pd_half, poisson_raw, rho, BoundaryPoint, Horocycle,
    Model, ModelPoint,
};
use crate::iteration::{backward_orbit_with, Backward, BackwardOptions, OrbitRecord};

const FUZZ_CASES: usize = 10_000;
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Metric,
    Atlas,
    Parabolic,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "metric" => Ok(Suite::Metric),
            "atlas" => Ok(Suite::Atlas),
            "parabolic" => Ok(Suite::Parabolic),
            "all" => Ok(Suite::All),
            _ => Err(Error::usage(format!(
                "unknown suite '{s}'; expected metric, atlas, parabolic or all"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Metric => "metric",
            Suite::Atlas => "atlas",
            Suite::Parabolic => "parabolic",
            Suite::All => "all",
        })
    }
}

/// Outcome of one property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub violations: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub detail: String,
}

impl fmt::Display for PropertyResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: cases={} violations={} worst={:e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.cases,
            self.violations,
            self.worst
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

struct Collector {
    suite: &'static str,
    results: Vec<PropertyResult>,
}

impl Collector {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            results: Vec::new(),
        }
    }

    /// Records a property checked over `cases` cases; `worst` is the largest
    /// violation measure (positive means violated).
    fn fuzz(
        &mut self,
        name: &str,
        cases: usize,
        violations: usize,
        worst: f64,
        detail: impl Into<String>,
    ) {
        self.results.push(PropertyResult {
            suite: self.suite.into(),
            name: name.into(),
            passed: violations == 0 && cases > 0,
            cases,
            violations,
            worst,
            detail: detail.into(),
        });
    }

    fn single(&mut self, name: &str, passed: bool, worst: f64, detail: impl Into<String>) {
        self.fuzz(name, 1, usize::from(!passed), worst, detail);
    }

    fn error(&mut self, name: &str, e: Error) {
        self.results.push(PropertyResult {
            suite: self.suite.into(),
            name: name.into(),
            passed: false,
            cases: 0,
            violations: 1,
            worst: f64::NAN,
            detail: e.to_string(),
        });
    }
}

/// Counts violations of `excess <= 0` and tracks the largest excess.
#[derive(Default)]
struct Tally {
    cases: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            worst: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    fn add(&mut self, excess: f64) {
        self.cases += 1;
        if !(excess <= 0.0) {
            self.violations += 1;
        }
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
    }

    fn record(self, c: &mut Collector, name: &str, detail: &str) {
        c.fuzz(name, self.cases, self.violations, self.worst, detail);
    }
}

fn random_disk(rng: &mut ChaCha8Rng) -> Complex64 {
    let r = rng.gen::<f64>().sqrt() * 0.999;
    Complex64::from_polar(
        r,
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
    )
}

fn random_half(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(
        rng.gen_range(-10.0..10.0),
        10f64.powf(rng.gen_range(-2.0..1.0)),
    )
}

pub fn run_suite(suite: Suite, seed: u64, tol: &Tolerances) -> Vec<PropertyResult> {
    match suite {
        Suite::Metric => metric_suite(seed),
        Suite::Atlas => atlas_suite(seed),
        Suite::Parabolic => parabolic_suite(tol),
        Suite::All => {
            let mut all = metric_suite(seed);
            all.extend(atlas_suite(seed));
            all.extend(parabolic_suite(tol));
            all
        }
    }
}

/// Exact identities of the pseudo-hyperbolic metric and the monotonicity
/// statements of Schwarz-Pick and Julia, fuzzed 10^4 times each.
pub fn metric_suite(seed: u64) -> Vec<PropertyResult> {
    let mut c = Collector::new("metric");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let (z, w) = (random_disk(&mut rng), random_disk(&mut rng));
        let (d1, d2) = (pd_disk(z, w), pd_disk(w, z));
        t.add((d1 - d2).abs().max(pd_disk(z, z)) - SLACK);
        t.add(if (0.0..1.0).contains(&d1) { -1.0 } else { 1.0 });
        let (p, q) = (random_half(&mut rng), random_half(&mut rng));
        t.add((pd_half(p, q) - pd_half(q, p)).abs().max(pd_half(p, p)) - SLACK);
        t.add(if (0.0..1.0).contains(&pd_half(p, q)) {
            -1.0
        } else {
            1.0
        });
    }
    t.record(
        &mut c,
        "pd_symmetric_bounded",
        "d(z,w) = d(w,z), d(z,z) = 0, 0 <= d < 1",
    );

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let (z, w) = (random_half(&mut rng), random_half(&mut rng));
        t.add((pd_disk(cayley_raw(z), cayley_raw(w)) - pd_half(z, w)).abs() - SLACK);
    }
    t.record(
        &mut c,
        "cayley_isometry",
        "|d_disk(a(z), a(w)) - d_half(z, w)|",
    );

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let (z, w) = (random_disk(&mut rng), random_disk(&mut rng));
        let d = pd_disk(z, w);
        let rhs = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr())
            / (Complex64::new(1.0, 0.0) - z.conj() * w).norm_sqr();
        t.add((1.0 - d * d - rhs).abs() - SLACK);
    }
    t.record(
        &mut c,
        "worlds_greatest_identity",
        "1 - d^2 = (1-|z|^2)(1-|w|^2)/|1 - conj(z) w|^2",
    );

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let (a, b, e) = (
            random_disk(&mut rng),
            random_disk(&mut rng),
            random_disk(&mut rng),
        );
        let r = |x, y| rho(pd_disk(x, y)).unwrap_or(f64::INFINITY);
        let (ab, be, ae) = (r(a, b), r(b, e), r(a, e));
        t.add(ae - ab - be - SLACK * (1.0 + ae));
    }
    t.record(&mut c, "rho_triangle", "rho(a, c) <= rho(a, b) + rho(b, c)");

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let w = random_disk(&mut rng);
        let a = rng.gen_range(0.01..0.99);
        let d = a * rng.gen::<f64>();
        let next = crate::geometry::pd_circle(Model::Disk, w, d.max(1e-6), 1)[0];
        let d_actual = pd_disk(w, next);
        if d_actual <= a {
            t.add(lb_bound(a) - lb_ratio(w, next) - SLACK * lb_bound(a));
        }
    }
    t.record(
        &mut c,
        "step_boundary_ratio",
        "(1-|w'|)/|w'-w| >= (1-a)/(2a) when d(w,w') <= a",
    );

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let w = random_disk(&mut rng);
        let zeta = Complex64::from_polar(1.0, rng.gen_range(-3.1..3.1));
        let level = 10f64.powf(rng.gen_range(-2.0..2.0));
        let h = Horocycle::new(zeta, level).expect("valid horocycle");
        let p = poisson_raw(Model::Disk, w, &BoundaryPoint::Circle(zeta));
        let inside = h
            .contains(&ModelPoint::disk(w).expect("interior"))
            .expect("same model");
        // skip points numerically on the horocycle
        if ((p - 1.0 / level) * level).abs() > 1e-9 {
            t.add(if inside == (p > 1.0 / level) {
                -1.0
            } else {
                1.0
            });
        }
    }
    t.record(&mut c, "horocycle_membership", "w in H(t) iff P(w) > 1/t");

    let maps: Vec<SelfMap> = ATLAS_NAMES
        .iter()
        .map(|n| atlas(n).expect("atlas map").map)
        .collect();

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let m = &maps[rng.gen_range(0..maps.len())];
        let (z, w) = (random_half(&mut rng), random_half(&mut rng));
        if let (Ok(fz), Ok(fw)) = (m.eval(z), m.eval(w)) {
            t.add(pd_half(fz, fw) - pd_half(z, w) - SLACK);
        }
    }
    t.record(&mut c, "schwarz_pick_pairs", "d(phi(z), phi(w)) <= d(z, w)");

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let m = &maps[rng.gen_range(0..maps.len())];
        let z = random_half(&mut rng);
        let (Ok(z1), Ok(z2)) = (m.eval(z), m.eval(z).and_then(|z1| m.eval(z1))) else {
            continue;
        };
        t.add(pd_half(z1, z2) - pd_half(z, z1) - SLACK);
    }
    t.record(
        &mut c,
        "schwarz_pick_forward_steps",
        "forward steps non-increasing",
    );

    let inverse_maps: Vec<&SelfMap> = maps.iter().filter(|m| m.has_inverse()).collect();
    let mut t = Tally::new();
    let mut attempts = 0;
    while t.cases < FUZZ_CASES && attempts < 50 * FUZZ_CASES {
        attempts += 1;
        let m = inverse_maps[rng.gen_range(0..inverse_maps.len())];
        let w = random_half(&mut rng);
        let Ok(w1) = m.invert(w) else { continue };
        let Ok(w2) = m.invert(w1) else { continue };
        t.add(pd_half(w, w1) - pd_half(w1, w2) - SLACK);
    }
    t.record(
        &mut c,
        "schwarz_pick_backward_steps",
        "backward steps non-decreasing",
    );

    let mut t = Tally::new();
    for _ in 0..FUZZ_CASES {
        let m = &maps[rng.gen_range(0..maps.len())];
        let z = random_half(&mut rng);
        if let Ok(fz) = m.eval(z) {
            t.add(z.im - fz.im - SLACK);
        }
    }
    t.record(&mut c, "julia_forward_heights", "Im phi(z) >= Im z");

    let mut t = Tally::new();
    let mut attempts = 0;
    while t.cases < FUZZ_CASES && attempts < 50 * FUZZ_CASES {
        attempts += 1;
        let m = inverse_maps[rng.gen_range(0..inverse_maps.len())];
        let w = random_half(&mut rng);
        if let Ok(p) = m.invert(w) {
            t.add(p.im - w.im - SLACK);
        }
    }
    t.record(&mut c, "julia_backward_heights", "Im of a preimage <= Im w");

    c.results
}

/// Oracle consistency, normalization and derivative checks on the atlas.
pub fn atlas_suite(seed: u64) -> Vec<PropertyResult> {
    let mut c = Collector::new("atlas");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa71a5);
    for name in ATLAS_NAMES {
        let e = atlas(name).expect("atlas map");
        let m = &e.map;
        let err = |got: Complex64, want: Complex64| {
            let d = (got - want).norm();
            if want.norm() > 10.0 {
                d / want.norm() - 1e-12
            } else {
                d - 1e-9
            }
        };
        if let Some(f) = e.forward_oracle {
            let mut t = Tally::new();
            for n in e.forward_oracle_start..=1000 {
                t.add(m.eval(f(n)).map_or(f64::INFINITY, |v| err(v, f(n + 1))));
            }
            t.record(
                &mut c,
                &format!("{name}_forward_oracle"),
                "phi(z_n) = z_{n+1}",
            );
        }
        if let Some(b) = e.backward_oracle {
            let mut t = Tally::new();
            for n in 0..=1000 {
                t.add(m.eval(b(n + 1)).map_or(f64::INFINITY, |v| err(v, b(n))));
            }
            t.record(
                &mut c,
                &format!("{name}_backward_oracle"),
                "phi(w_{n+1}) = w_n",
            );
        }

        let q = |y: f64| {
            let z = Complex64::new(0.0, y);
            m.eval(z)
                .map(|v| (v / z - 1.0).norm())
                .unwrap_or(f64::INFINITY)
        };
        let (q6, q12) = (q(1e6), q(1e12));
        c.single(
            &format!("{name}_normalized_at_infinity"),
            q12 < 1e-4 && q12 <= q6,
            q12,
            format!("|phi(iy)/(iy) - 1| is {q6:e} at y = 10^6, {q12:e} at y = 10^12"),
        );

        let mut t = Tally::new();
        for _ in 0..FUZZ_CASES {
            let z = random_half(&mut rng);
            if let Ok(v) = m.eval(z) {
                t.add(z.im - v.im - SLACK);
            }
        }
        t.record(
            &mut c,
            &format!("{name}_julia_inequality"),
            "Im phi(z) >= Im z",
        );

        let mut t = Tally::new();
        for _ in 0..1000 {
            let z = random_half(&mut rng);
            let (Ok(d), Ok(fd)) = (m.deriv(z), m.central_difference(z)) else {
                continue;
            };
            t.add((d - fd).norm() / d.norm().max(1.0) - 1e-5);
        }
        t.record(
            &mut c,
            &format!("{name}_derivative"),
            "closed-form derivative vs central difference",
        );

        let bad = m.sample_violations().len();
        c.fuzz(
            &format!("{name}_self_map"),
            1000,
            bad,
            bad as f64,
            "samples mapped into the half-plane",
        );
    }
    c.results
}

fn bisbs_of(m: &SelfMap, w0: Complex64, n: usize, tol: &Tolerances) -> Result<OrbitRecord> {
    let opts = BackwardOptions::from_tolerances(tol);
    match backward_orbit_with(m, &ModelPoint::half_plane(w0)?, n, &opts, tol)? {
        Backward::Orbit(o) => Ok(o),
        Backward::Failure(e) => Err(Error::domain(format!(
            "{}: no backward sequence from {w0} (level {}: {})",
            m.name(),
            e.level,
            e.reason
        ))),
    }
}

/// Quantitative statements on the parabolic atlas maps.
pub fn parabolic_suite(tol: &Tolerances) -> Vec<PropertyResult> {
    let mut c = Collector::new("parabolic");

    for name in ATLAS_NAMES {
        let e = atlas(name).expect("atlas map");
        match classify_with(&e.map, tol) {
            Ok(r) => {
                let ok = r.label() == e.expected_label;
                c.single(
                    &format!("{name}_label"),
                    ok,
                    f64::from(u8::from(!ok)),
                    format!("got {}, expected {}", r.label(), e.expected_label),
                );
            }
            Err(err) => c.error(&format!("{name}_label"), err),
        }
    }

    let grid = match Grid::from_tolerances(tol) {
        Ok(g) => g,
        Err(err) => {
            c.error("grid", err);
            return c.results;
        }
    };
    for name in ["ia_1", "iib_1", "iib_2"] {
        if let Err(err) = bisbs_properties(&mut c, name, &grid, tol) {
            c.error(&format!("{name}_bisbs"), err);
        }
    }

    for name in ["ia_empty", "ib_empty"] {
        match nonexistence_check_with(&atlas(name).expect("atlas map").map, tol) {
            Ok(r) => {
                let worst = r.attempts.iter().map(|a| a.level).max().unwrap_or(0) as f64;
                c.single(
                    &format!("{name}_no_bisbs"),
                    r.empty,
                    worst,
                    "every backward attempt fails",
                );
            }
            Err(err) => c.error(&format!("{name}_no_bisbs"), err),
        }
    }
    match nonexistence_check_with(&atlas("ia_1").expect("atlas map").map, tol) {
        Ok(r) => c.single(
            "ia_1_bisbs_side",
            !r.same_side_found && r.heights_positive && !r.empty,
            f64::from(r.forward_side),
            "sequences found have positive height and lie opposite the forward orbit",
        ),
        Err(err) => c.error("ia_1_bisbs_side", err),
    }

    let m = atlas("ia_1").expect("atlas map").map;
    let products: Result<Vec<f64>> = [1.0, 3.0]
        .iter()
        .map(|&y| {
            let o = bisbs_of(&m, Complex64::new(0.0, y), 4096, tol)?;
            let s = summarize_bisbs(&o, tol, &mut Vec::new(), "");
            Ok(s.ell_inf * b0_from_step(s.a))
        })
        .collect();
    match products {
        Ok(p) => {
            let d = (p[0] - p[1]).abs();
            c.single(
                "ia_1_height_times_b0",
                d < 1e-3,
                d,
                format!("products {} and {}", p[0], p[1]),
            );
        }
        Err(err) => c.error("ia_1_height_times_b0", err),
    }

    let m = atlas("iib_1").expect("atlas map").map;
    match lateral_limit_with(
        |z| Ok(z - m.eval(z)?),
        tol.lateral_epsilon,
        &default_r_schedule(),
        tol.lateral_oscillation,
    ) {
        Ok(l) => {
            let v = l.value().map_or(f64::INFINITY, |v| (v - 1.0).norm());
            c.single(
                "iib_1_lateral_limit",
                v < 1e-2,
                v,
                "lateral limit of z - phi(z) equals 1",
            );
        }
        Err(err) => c.error("iib_1_lateral_limit", err),
    }

    match hyperbolic_exclusion(tol) {
        Ok((found, bad)) => c.fuzz(
            "hyperbolic_bisbs_avoid_dw",
            found,
            bad,
            bad as f64,
            "backward sequences of a dilation never tend to the Denjoy-Wolff point",
        ),
        Err(err) => c.error("hyperbolic_bisbs_avoid_dw", err),
    }
    c.results
}

fn bisbs_properties(c: &mut Collector, name: &str, grid: &Grid, tol: &Tolerances) -> Result<()> {
    let e = atlas(name)?;
    let m = &e.map;
    let w0 = e.backward_oracle.map_or(Complex64::new(0.0, 1.0), |b| b(0));
    let o = bisbs_of(m, w0, 20_000, tol)?;

    let s = step_identities(&o)?;
    c.single(
        &format!("{name}_step_identity"),
        s.identity_residual < 1e-10,
        s.identity_residual,
        "exact quadratic relation between x and y steps",
    );
    c.single(
        &format!("{name}_step_bounds"),
        s.xstep_slack >= -SLACK && s.ystep_slack >= -SLACK,
        -s.xstep_slack.min(s.ystep_slack),
        "x and y step bounds",
    );

    let n = 10_000;
    let (p, q) = (
        o.point(n).expect("index retained"),
        o.point(n + 1).expect("index retained"),
    );
    let dx = ((q.re - p.re) / p.im).abs();
    let b0 = b0_from_step(o.row(n).and_then(|r| r.step).expect("step"));
    let d = (dx - b0).abs();
    c.single(
        &format!("{name}_b0_law"),
        d < 1e-2,
        d,
        "|x_{n+1} - x_n|/y_n vs 2a/sqrt(1-a^2) at n = 10^4",
    );

    let tail = &o.rows[n..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1].height / w[0].height).collect();
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    c.single(
        &format!("{name}_height_ratios"),
        lo >= 1.0 - 1e-3 && hi <= 1.0 + SLACK,
        1.0 - lo,
        "y_{n+1}/y_n in [1 - 1e-3, 1] for n >= 10^4",
    );

    let args: Vec<f64> = tail.iter().map(|r| r.arg).collect();
    let osc = args.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - args.iter().copied().fold(f64::INFINITY, f64::min);
    let side = args
        .last()
        .map_or(f64::NAN, |a| a.min(std::f64::consts::PI - a));
    c.single(
        &format!("{name}_argument_converges"),
        osc < 1e-2 && side < 0.1,
        osc,
        "Arg w_n settles near 0 or pi",
    );

    let mut t = Tally::new();
    let a = s.a;
    for w in o.rows.windows(2) {
        let (u, v) = (cayley_raw(w[0].z), cayley_raw(w[1].z));
        t.add(lb_bound(a) - lb_ratio(u, v) - SLACK * lb_bound(a));
    }
    t.record(
        c,
        &format!("{name}_boundary_ratio"),
        "(1-|w_{n+1}|)/|w_{n+1}-w_n| >= (1-a)/(2a) in the disk",
    );

    let mut t = Tally::new();
    let p_inf = |z: Complex64| poisson_raw(Model::HalfPlane, z, &BoundaryPoint::Infinity);
    for w in o.rows.windows(2) {
        t.add(p_inf(w[1].z) - p_inf(w[0].z) * (1.0 + SLACK));
    }
    t.record(
        c,
        &format!("{name}_poisson_monotone"),
        "P(w_n) non-increasing at the Denjoy-Wolff point",
    );

    if name == "iib_2" {
        let sum: f64 = o.rows[..n].iter().map(|r| r.height).sum();
        let bound = 0.9 * (n as f64).sqrt();
        c.single(
            "iib_2_height_sum",
            sum > bound,
            bound - sum,
            format!("sum of y_n over n < 10^4 is {sum}"),
        );
        let g = (m.deriv(p)? - 1.0).norm();
        c.single(
            "iib_2_derivative_tends_to_one",
            g < 1e-2,
            g,
            "|phi'(w_n) - 1| at n = 10^4",
        );
    }
    if name == "ia_1" {
        let mut worst: f64 = 0.0;
        let b0 = b0_from_step(a);
        let last = o.rows.len() - 1;
        for k in 1..=8 {
            let ak = pd_half(o.rows[last - k].z, o.rows[last].z);
            let expected = 4.0 / (4.0 + b0 * b0 * (k * k) as f64);
            worst = worst.max((1.0 - ak * ak - expected).abs());
        }
        c.single(
            "ia_1_higher_steps",
            worst < 1e-2,
            worst,
            "1 - a_k^2 = 4/(4 + b0^2 k^2), k <= 8",
        );
    }

    let mut residuals = Vec::new();
    for depth in [256, 4096] {
        let f = forward_conjugation_with(
            m,
            &ModelPoint::half_plane(Complex64::new(0.0, 1.0))?,
            depth,
            grid,
            tol,
        )?;
        let b = backward_conjugation_with(m, &o, depth, grid, tol)?;
        residuals.push((f.residual, b.residual));
    }
    let (f8, b8) = residuals[0];
    let (f12, b12) = residuals[1];
    c.single(
        &format!("{name}_forward_equation"),
        f12 < 1e-2 && (f12 < f8 || f8 == 0.0),
        f12,
        format!("depth 2^8: {f8:e}, 2^12: {f12:e}"),
    );
    c.single(
        &format!("{name}_backward_equation"),
        b12 < 1e-2 && (b12 < b8 || b8 == 0.0),
        b12,
        format!("depth 2^8: {b8:e}, 2^12: {b12:e}"),
    );
    Ok(())
}

/// Backward sequences of the hyperbolic dilation map from 5 starts; returns
/// (sequences found, sequences tending to the Denjoy-Wolff point).
fn hyperbolic_exclusion(tol: &Tolerances) -> Result<(usize, usize)> {
    let m = disk_dilation(2.0)?;
    let tau = DwPoint::Boundary(BoundaryPoint::Circle(Complex64::new(1.0, 0.0)));
    let opts = BackwardOptions::from_tolerances(tol);
    let starts = [
        (0.0, 0.0),
        (0.3, 0.2),
        (-0.2, 0.5),
        (0.6, -0.3),
        (-0.5, -0.5),
    ];
    let (mut found, mut bad) = (0, 0);
    for (re, im) in starts {
        let w0 = ModelPoint::disk(Complex64::new(re, im))?;
        if let Backward::Orbit(o) = backward_orbit_with(&m, &w0, 20, &opts, tol)? {
            found += 1;
            let last = o.last().expect("non-empty");
            if let DwPoint::Boundary(b) = &tau {
                if (last - b.on_circle()).norm() < 0.5 {
                    bad += 1;
                }
            }
        }
    }
    Ok((found, bad))
}
