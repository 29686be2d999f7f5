//! Acceptance criteria, one PASS/FAIL line each. Reference values come from
//! closed forms written out here, not from the library's own oracles.

use std::time::{Duration, Instant};

use bisbs_core::conjugation::{default_r_schedule, lateral_limit_with, nonexistence_check_with};
use bisbs_core::verify::{metric_suite, run_suite, Suite};
use bisbs_core::{
    atlas, backward_conjugation, backward_orbit_with, classify_with, forward_conjugation,
    forward_orbit, Backward, BackwardOptions, Complex64, Grid, ModelPoint, OrbitRecord, SelfMap,
    Tolerances, ATLAS_NAMES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Oracle = fn(usize) -> Complex64;
type Criterion = fn() -> Outcome;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square root in the closed upper half-plane.
fn root(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// |(w - z)/(w - conj z)|
fn pd(z: Complex64, w: Complex64) -> f64 {
    ((w - z) / (w - z.conj())).norm()
}

fn map(name: &str) -> SelfMap {
    atlas(name).expect("atlas map").map
}

fn bisbs(name: &str, w0: Complex64, n: usize) -> OrbitRecord {
    let tol = Tolerances::default();
    let opts = BackwardOptions::from_tolerances(&tol);
    match backward_orbit_with(
        &map(name),
        &ModelPoint::half_plane(w0).unwrap(),
        n,
        &opts,
        &tol,
    )
    .unwrap()
    {
        Backward::Orbit(o) => o,
        Backward::Failure(e) => panic!("{name}: no backward sequence from {w0}: {}", e.reason),
    }
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn atlas_classification() -> Outcome {
    let expected = ["Ia∅", "Ib∅", "IIb∅", "Ia1", "IIb1", "IIb2"];
    let t = Instant::now();
    let tol = Tolerances::default();
    let mut got = Vec::new();
    for name in ATLAS_NAMES {
        got.push(
            classify_with(&map(name), &tol)
                .map_err(|e| e.to_string())?
                .label()
                .to_string(),
        );
    }
    let elapsed = t.elapsed();
    verdict(
        got == expected && elapsed < Duration::from_secs(60),
        format!("labels {} in {:.2?}", got.join(" "), elapsed),
    )
}

fn oracle_orbits() -> Outcome {
    let forward: [(&str, usize, Oracle); 6] = [
        ("ia_empty", 1, |n| {
            let s = root(c(n as f64, 1.0));
            c(n as f64 + 1.0, 1.0) - 2.0 * s
        }),
        ("ib_empty", 1, |n| c(n as f64, 1.0).powu(2)),
        ("iib_empty", 0, |n| c(0.0, n as f64 + 1.0)),
        ("ia_1", 0, |n| c(n as f64, 1.0)),
        ("iib_1", 1, |n| c(1.0 - n as f64, 2.0 * (n as f64).sqrt())),
        ("iib_2", 1, |n| c(0.0, (n as f64).sqrt())),
    ];
    let backward: [(&str, Oracle); 3] = [
        ("ia_1", |n| c(-(n as f64), 1.0)),
        ("iib_1", |n| {
            let s = root(c(n as f64, 1.0));
            c(n as f64 + 1.0, 1.0) + 2.0 * s
        }),
        ("iib_2", |n| root(c(n as f64, 1.0))),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, start, oracle) in forward {
        let z0 = ModelPoint::half_plane(oracle(start)).unwrap();
        let o = forward_orbit(&map(name), &z0, 1000 - start).map_err(|e| e.to_string())?;
        let err = (start..=1000)
            .map(|n| (o.point(n - start).unwrap() - oracle(n)).norm())
            .fold(0.0, f64::max);
        parts.push(format!("{name} fwd {err:.1e}"));
        worst = worst.max(err);
    }
    for (name, oracle) in backward {
        let o = bisbs(name, oracle(0), 1000);
        let err = (0..=1000)
            .map(|n| (o.point(n).unwrap() - oracle(n)).norm())
            .fold(0.0, f64::max);
        parts.push(format!("{name} bwd {err:.1e}"));
        worst = worst.max(err);
    }
    verdict(
        worst < 1e-8,
        format!(
            "max abs error {worst:.2e} for n <= 1000 [{}]",
            parts.join(", ")
        ),
    )
}

fn b0_law() -> Outcome {
    let o = bisbs("ia_1", c(0.0, 1.0), 10_000);
    let mut worst: f64 = 0.0;
    for w in o.rows.windows(2) {
        let (p, q) = (w[0].z, w[1].z);
        let a = pd(p, q);
        worst = worst.max(((q.re - p.re).abs() / p.im - 1.0).abs());
        worst = worst.max((2.0 * a / (1.0 - a * a).sqrt() - 1.0).abs());
    }
    let mut ok = worst < 1e-12;
    let mut detail = format!("ia_1 max deviation {worst:.1e}");
    for (name, w0) in [
        ("iib_1", (root(c(0.0, 1.0)) + 1.0).powu(2)),
        ("iib_2", root(c(0.0, 1.0))),
    ] {
        let o = bisbs(name, w0, 10_001);
        let (p, q, r) = (
            o.point(10_000).unwrap(),
            o.point(10_001).unwrap(),
            o.point(9_999).unwrap(),
        );
        let dx = (q.re - p.re).abs() / p.im;
        let a = pd(p, q).max(pd(r, p));
        let b0 = 2.0 * a / (1.0 - a * a).sqrt();
        let d = (dx - b0).abs();
        ok &= d < 1e-2;
        detail.push_str(&format!(", {name} |dx/y - b0| = {d:.1e}"));
    }
    verdict(ok, detail)
}

fn height_ratios() -> Outcome {
    let o = bisbs("iib_2", root(c(0.0, 1.0)), 20_000);
    let tail = &o.rows[10_000..];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for w in tail.windows(2) {
        let r = w[1].z.im / w[0].z.im;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    verdict(
        lo >= 1.0 - 1e-3 && hi <= 1.0,
        format!(
            "y_(n+1)/y_n in [{lo:.6}, {hi:.6}] for 10^4 <= n < {}",
            o.len() - 1
        ),
    )
}

fn step_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, w0) in [
        ("ia_1", c(0.0, 1.0)),
        ("iib_1", (root(c(0.0, 1.0)) + 1.0).powu(2)),
        ("iib_2", root(c(0.0, 1.0))),
    ] {
        let o = bisbs(name, w0, 10_000);
        for w in o.rows.windows(2) {
            let (p, q) = (w[0].z, w[1].z);
            let d = pd(p, q);
            let x = (q.re - p.re) / p.im;
            let y = q.im / p.im;
            let rhs = -y * y + 2.0 * (1.0 + d * d) / (1.0 - d * d) * y - 1.0;
            worst = worst.max((x * x - rhs).abs() / x.abs().max(1.0).powi(2));
            count += 1;
        }
    }
    let nonempty = count == 30_000;
    verdict(
        worst < 1e-10 && nonempty,
        format!("max residual {worst:.1e} over {count} steps"),
    )
}

fn height_sum() -> Outcome {
    let o = bisbs("iib_2", root(c(0.0, 1.0)), 10_000);
    let sum: f64 = o.rows[..10_000].iter().map(|r| r.z.im).sum();
    let oracle: f64 = (0..10_000).map(|n| root(c(n as f64, 1.0)).im).sum();
    let bound = 0.9 * 100.0;
    verdict(
        sum > bound && (sum - oracle).abs() < 1e-6,
        format!(
            "sum y_n over n < 10^4 = {sum:.4} (closed form {oracle:.4}), 0.9 sqrt(N) = {bound}"
        ),
    )
}

fn conjugation_residuals() -> Outcome {
    let grid = Grid::from_tolerances(&Tolerances::default()).map_err(|e| e.to_string())?;
    // Translation lengths of the forward frame (b) and the backward frame (b0),
    // from the closed-form orbits.
    let cases = [
        ("ia_1", 1.0, c(0.0, 1.0)),
        ("iib_1", 0.0, (root(c(0.0, 1.0)) + 1.0).powu(2)),
        ("iib_2", 0.0, root(c(0.0, 1.0))),
    ];
    let b0 = 1.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, b, w0) in cases {
        let m = map(name);
        let seq = bisbs(name, w0, 8192);
        let mut fwd = Vec::new();
        let mut bwd = Vec::new();
        for depth in [256, 4096] {
            let f = forward_conjugation(
                &m,
                &ModelPoint::half_plane(c(0.0, 1.0)).unwrap(),
                depth,
                &grid,
            )
            .map_err(|e| e.to_string())?;
            let mut r: f64 = 0.0;
            for z in grid.points() {
                let lhs = f.eval(m.eval(z).unwrap()).unwrap() - f.eval(z).unwrap();
                r = r.max((lhs - b).norm());
            }
            fwd.push(r);

            let g = backward_conjugation(&m, &seq, depth, &grid).map_err(|e| e.to_string())?;
            let target = if g.reflected {
                m.reflected().unwrap()
            } else {
                m.clone()
            };
            let mut r: f64 = 0.0;
            for z in grid.points() {
                let lhs = g.eval(z - b0).unwrap();
                let rhs = target.eval(g.eval(z).unwrap()).unwrap();
                r = r.max((lhs - rhs).norm());
            }
            bwd.push(r);
        }
        for (kind, r) in [("sigma", &fwd), ("psi", &bwd)] {
            ok &= r[1] < 1e-2 && (r[1] < r[0] || r[0] == 0.0);
            parts.push(format!("{name} {kind} {:.1e}->{:.1e}", r[0], r[1]));
        }
    }
    verdict(ok, format!("depth 2^8 -> 2^12: {}", parts.join(", ")))
}

fn derivative_tends_to_one() -> Outcome {
    let o = bisbs("iib_2", root(c(0.0, 1.0)), 10_000);
    let w = o.point(10_000).unwrap();
    let closed = w / root(w * w - 1.0);
    let lib = map("iib_2").deriv(w).map_err(|e| e.to_string())?;
    let d = (closed - 1.0).norm();
    verdict(
        d < 1e-2 && (lib - closed).norm() < 1e-12,
        format!("|phi'(w_n) - 1| = {d:.2e} at n = 10^4"),
    )
}

fn nonexistence() -> Outcome {
    let tol = Tolerances::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["ia_empty", "ib_empty"] {
        let r = nonexistence_check_with(&map(name), &tol).map_err(|e| e.to_string())?;
        let levels: Vec<usize> = r.attempts.iter().map(|a| a.level).collect();
        ok &=
            r.empty && r.attempts.len() == 5 && r.attempts.iter().all(|a| !a.found && a.level <= 3);
        parts.push(format!("{name} fails at levels {levels:?}"));
    }
    let r = nonexistence_check_with(&map("ia_1"), &tol).map_err(|e| e.to_string())?;
    let forward = forward_orbit(
        &map("ia_1"),
        &ModelPoint::half_plane(c(0.0, 1.0)).unwrap(),
        1000,
    )
    .map_err(|e| e.to_string())?;
    let forward_side = forward.last().unwrap().re.signum();
    let backward_side = bisbs("ia_1", c(0.0, 1.0), 1000).last().unwrap().re.signum();
    ok &= backward_side == -forward_side && !r.same_side_found && !r.empty;
    parts.push(format!(
        "ia_1 forward side {forward_side:+}, BISBS side {backward_side:+}"
    ));
    verdict(ok, parts.join(", "))
}

fn height_times_b0() -> Outcome {
    let mut products = Vec::new();
    for y in [1.0, 3.0] {
        let o = bisbs("ia_1", c(0.0, y), 4096);
        let last = o.len() - 1;
        let (p, q) = (o.point(last - 1).unwrap(), o.point(last).unwrap());
        let a = pd(p, q);
        products.push((q.im, 2.0 * a / (1.0 - a * a).sqrt()));
    }
    let (p1, p3) = (products[0].0 * products[0].1, products[1].0 * products[1].1);
    let ok = (p1 - p3).abs() < 1e-3
        && (products[0].1 - 1.0).abs() < 1e-9
        && (products[1].1 - 1.0 / 3.0).abs() < 1e-9;
    verdict(
        ok,
        format!(
            "w0 = i: {:.6}*{:.6}, w0 = 3i: {:.6}*{:.6}",
            products[0].0, products[0].1, products[1].0, products[1].1
        ),
    )
}

fn lateral_limit() -> Outcome {
    let m = map("iib_1");
    let tol = Tolerances::default();
    // Direct sweep of the strip x in [R, 2R], eps <= y <= 1/eps at R = 10^6.
    let eps = tol.lateral_epsilon;
    let r = 1e6;
    let mut worst: f64 = 0.0;
    for i in 0..=32 {
        for j in 0..=32 {
            let z = c(
                r * (1.0 + i as f64 / 32.0),
                eps.powf(1.0 - 2.0 * j as f64 / 32.0),
            );
            worst = worst.max((z - m.eval(z).unwrap() - 1.0).norm());
        }
    }
    let lib = lateral_limit_with(
        |z| Ok(z - m.eval(z)?),
        eps,
        &default_r_schedule(),
        tol.lateral_oscillation,
    )
    .map_err(|e| e.to_string())?;
    let v = lib.value().ok_or("no lateral limit reported")?;
    verdict(
        worst < 1e-2 && (v - 1.0).norm() < 1e-2,
        format!(
            "max |z - phi(z) - 1| on the strip at R = 10^6 is {worst:.2e}; reported limit {v:.5}"
        ),
    )
}

fn metric() -> Outcome {
    let t = Instant::now();
    let mut failed = Vec::new();
    let mut names = Vec::new();
    for r in metric_suite(0x5eed) {
        if !r.passed || r.cases < 10_000 {
            failed.push(r.to_string());
        }
        names.push(r.name);
    }
    for needed in [
        "cayley_isometry",
        "worlds_greatest_identity",
        "schwarz_pick_pairs",
        "julia_forward_heights",
    ] {
        if !names.iter().any(|n| n == needed) {
            failed.push(format!("missing {needed}"));
        }
    }

    // Independent spot check of the two identities on the disk.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cay = |z: Complex64| (z - c(0.0, 1.0)) / (z + c(0.0, 1.0));
    let dd = |z: Complex64, w: Complex64| ((z - w) / (1.0 - z.conj() * w)).norm();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let z = c(
            rng.gen_range(-10.0..10.0),
            10f64.powf(rng.gen_range(-3.0..1.0)),
        );
        let w = c(
            rng.gen_range(-10.0..10.0),
            10f64.powf(rng.gen_range(-3.0..1.0)),
        );
        worst = worst.max((dd(cay(z), cay(w)) - pd(z, w)).abs());
        let (u, v) = (cay(z), cay(w));
        let d = dd(u, v);
        let rhs = (1.0 - u.norm_sqr()) * (1.0 - v.norm_sqr()) / (1.0 - u.conj() * v).norm_sqr();
        worst = worst.max((1.0 - d * d - rhs).abs());
    }
    if worst > 1e-12 {
        failed.push(format!("independent identity check {worst:.1e}"));
    }

    let all = run_suite(Suite::All, 0x5eed, &Tolerances::default());
    let elapsed = t.elapsed();
    let bad = all.iter().filter(|r| !r.passed).count();
    if bad > 0 {
        failed.extend(all.iter().filter(|r| !r.passed).map(|r| r.to_string()));
    }
    let ok = failed.is_empty() && elapsed < Duration::from_secs(300);
    let detail = format!("{} properties, full suite in {:.2?}", all.len(), elapsed);
    if ok {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failed.join("; ")))
    }
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("atlas classification", atlas_classification),
        ("oracle orbit equivalence", oracle_orbits),
        ("translation length law", b0_law),
        ("height ratios", height_ratios),
        ("exact step identity", step_identity),
        ("height partial sums", height_sum),
        ("functional-equation residuals", conjugation_residuals),
        ("derivative tends to one", derivative_tends_to_one),
        ("non-existence", nonexistence),
        ("height times translation length", height_times_b0),
        ("lateral limit", lateral_limit),
        ("metric suite", metric),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(d) => println!(
                "PASS criterion {}: {name}: {d} ({:.2?})",
                k + 1,
                t.elapsed()
            ),
            Err(d) => {
                failures += 1;
                println!(
                    "FAIL criterion {}: {name}: {d} ({:.2?})",
                    k + 1,
                    t.elapsed()
                );
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
