use bisbs_core::geometry::{cayley_raw, pd_disk, pd_half};
use bisbs_core::{
    atlas, backward_orbit, classify_from, BackwardOptions, Complex64, Model, ModelPoint, SelfMap,
    Tolerances, ATLAS_NAMES,
};
use proptest::prelude::*;

fn half_plane() -> impl Strategy<Value = Complex64> {
    (-10.0..10.0f64, -3.0..1.0f64).prop_map(|(x, e)| Complex64::new(x, 10f64.powf(e)))
}

fn disk() -> impl Strategy<Value = Complex64> {
    (0.0..0.999f64, -3.2..3.2f64).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn any_atlas_map() -> impl Strategy<Value = SelfMap> {
    (0..ATLAS_NAMES.len()).prop_map(|k| atlas(ATLAS_NAMES[k]).unwrap().map)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn pd_is_symmetric(z in disk(), w in disk()) {
        prop_assert!((pd_disk(z, w) - pd_disk(w, z)).abs() <= 1e-12);
        prop_assert!(pd_disk(z, w) < 1.0);
    }

    #[test]
    fn cayley_is_an_isometry(z in half_plane(), w in half_plane()) {
        prop_assert!((pd_disk(cayley_raw(z), cayley_raw(w)) - pd_half(z, w)).abs() <= 1e-12);
    }

    #[test]
    fn one_minus_pd_squared(z in disk(), w in disk()) {
        let d = pd_disk(z, w);
        let rhs = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / (1.0 - z.conj() * w).norm_sqr();
        prop_assert!((1.0 - d * d - rhs).abs() <= 1e-12);
    }

    #[test]
    fn atlas_maps_contract(m in any_atlas_map(), z in half_plane(), w in half_plane()) {
        if let (Ok(fz), Ok(fw)) = (m.eval(z), m.eval(w)) {
            prop_assert!(pd_half(fz, fw) <= pd_half(z, w) + 1e-12, "{}", m.name());
            prop_assert!(fz.im >= z.im - 1e-12, "{}", m.name());
        }
    }

    #[test]
    fn backward_steps_never_exceed_bound(y in 0.5..4.0f64, x in -2.0..2.0f64) {
        let m = atlas("iib_2").unwrap().map;
        let opts = BackwardOptions::default();
        let w0 = ModelPoint::half_plane(Complex64::new(x, y)).unwrap();
        if let Some(o) = backward_orbit(&m, &w0, 200, &opts).unwrap().orbit() {
            for r in &o.rows {
                prop_assert!(r.step.is_none_or(|s| s <= opts.step_bound));
            }
            for pair in o.rows.windows(2) {
                prop_assert!((m.eval(pair[1].z).unwrap() - pair[0].z).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn classification_independent_of_start() {
    let tol = Tolerances::default();
    for name in ATLAS_NAMES {
        let e = atlas(name).unwrap();
        for z0 in [
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, 0.5),
            Complex64::new(-1.0, 3.0),
        ] {
            let r = classify_from(&e.map, z0, &tol).unwrap();
            assert_eq!(r.label(), e.expected_label, "{name} from {z0}");
        }
    }
}

#[test]
fn user_maps_are_checked() {
    // Not a self-map: z -> z - i leaves the half-plane.
    let bad = SelfMap::user("shift-down", Model::HalfPlane, |z| {
        Ok(z - Complex64::new(0.0, 1.0))
    });
    assert!(!bad.sample_violations().is_empty());
    assert!(bad.eval(Complex64::new(0.0, 0.5)).is_err());
    let good = SelfMap::user("shift", Model::HalfPlane, |z| Ok(z + 2.0));
    assert!(good.sample_violations().is_empty());
}
