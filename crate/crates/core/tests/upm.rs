use gmp_core::upm::{enumerate_family, solve_upm, UpmBranch, UpmInstance};
use proptest::prelude::*;

/// Moments and upper partial variance of a discrete distribution with q = 1.
fn summarize(points: &[(f64, f64)]) -> (UpmInstance, f64) {
    let mass: f64 = points.iter().map(|p| p.1).sum();
    let e = |f: &dyn Fn(f64) -> f64| points.iter().map(|&(x, p)| f(x) * p / mass).sum::<f64>();
    let m1 = e(&|x| x);
    let m2 = e(&|x| x * x);
    let mp = e(&|x| (x - 1.0).max(0.0));
    let mp2 = e(&|x| (x - 1.0).max(0.0).powi(2));
    (
        UpmInstance::new(m1, m2 / (m1 * m1), mp).unwrap(),
        mp2 - mp * mp,
    )
}

fn generating_distribution() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..1.0, 1.05f64..6.0, 0.05f64..1.0), 1..3).prop_map(|pairs| {
        let mut pts = Vec::new();
        for (lo, hi, w) in pairs {
            pts.push((lo, w));
            pts.push((hi, 1.0 - w + 0.05));
        }
        pts
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 400,
        max_global_rejects: 100_000,
        ..ProptestConfig::default()
    })]

    #[test]
    fn solver_certifies_and_beats_generator(pts in generating_distribution()) {
        let (inst, generator_value) = summarize(&pts);
        let r = solve_upm(&inst, None);
        if let Ok(r) = r {
            prop_assert!(r.verification.pass, "{:?} {:?}", inst, r.verification);
            prop_assert!(r.value <= generator_value + 1e-9);
            let z = &r.cert.z;
            let dual = z[0] + z[1] * inst.m1 + z[2] * inst.m2() + z[3] * inst.mplus
                - inst.mplus * inst.mplus;
            prop_assert!((dual - r.value).abs() <= 1e-8 * r.value.abs().max(1.0));
        } else {
            // only the two-point branch may refuse, and only past M1 <= 2/gamma
            prop_assert_eq!(inst.branch(), UpmBranch::TwoPoint);
            prop_assert!(inst.m1 > 2.0 / inst.gamma, "{:?} {:?}", inst, r);
        }
    }

    #[test]
    fn two_point_dual_matches_quadratic_shape(
        u0 in 0.0f64..0.99,
        v0 in 1.01f64..6.0,
        p in 0.02f64..0.98,
    ) {
        let (inst, generator_value) = summarize(&[(u0, 1.0 - p), (v0, p)]);
        prop_assume!(inst.branch() == UpmBranch::TwoPoint);
        let r = solve_upm(&inst, None).unwrap();
        prop_assert!(r.verification.pass, "{:?}", r.verification);
        prop_assert!(r.value <= generator_value + 1e-9);
        let a = r.dist.atoms();
        let (u, v) = (a[0].x, a[1].x);
        prop_assert!((0.0..1.0).contains(&u) && v > 1.0);
        let z = &r.cert.z;
        prop_assert!(z[2] < 0.0);
        let h = |x: f64| z[0] + z[1] * x + z[2] * x * x + z[3] * (x - 1.0).max(0.0)
            - (x - 1.0).max(0.0).powi(2);
        for k in 0..200 {
            let x = 4.0 * v * k as f64 / 199.0;
            let shape = if x < 1.0 { z[2] * (x - u).powi(2) } else { (z[2] - 1.0) * (x - v).powi(2) };
            prop_assert!((h(x) - shape).abs() <= 1e-8 * (1.0 + shape.abs()), "x = {}", x);
        }
    }

    #[test]
    fn family_values_agree(pts in generating_distribution(), extra in prop::collection::vec(0.0f64..20.0, 1..6)) {
        let (inst, _) = summarize(&pts);
        prop_assume!(inst.branch() == UpmBranch::DegenerateFamily);
        let lb = inst.family_lower_bound();
        let v1s: Vec<f64> = extra.iter().map(|e| lb + e).collect();
        let reps = enumerate_family(&inst, &v1s).unwrap();
        for r in &reps {
            prop_assert!(r.verification.pass, "{:?}", r.verification);
            prop_assert!((r.value - reps[0].value).abs() <= 1e-10);
        }
    }
}

#[test]
fn degenerate_dual_is_closed_form() {
    let inst = UpmInstance::new(0.5, 4.0, 0.2).unwrap();
    let r = solve_upm(&inst, None).unwrap();
    assert_eq!(r.cert.z, vec![0.0, -1.0, 1.0, -1.0]);
    for k in 0..100 {
        let x = 0.05 * k as f64;
        let h = -x + x * x - (x - 1.0).max(0.0) - (x - 1.0).max(0.0).powi(2);
        let expected = if x < 1.0 { x * x - x } else { 0.0 };
        assert!((h - expected).abs() < 1e-12);
        assert!(h <= 1e-12);
    }
}
