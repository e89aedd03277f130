use gmp_core::one_t::{boundary_threshold, solve_1t, theta, OneTBranch, OneTInstance};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = OneTInstance> {
    (
        0.05f64..100.0,
        1.001f64..20.0,
        prop::sample::select(vec![1.5, 2.0, 2.5, 3.0, 5.0, std::f64::consts::PI]),
        0.02f64..4.0,
    )
        .prop_map(|(m1, mhat, t, qrel)| {
            let a = mhat.powf(1.0 / (t - 1.0));
            OneTInstance::new(m1, mhat * m1.powf(t), t, qrel * a * m1).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn certified_and_dual_matches(inst in instance()) {
        let r = solve_1t(&inst, 1e-13).unwrap();
        prop_assert!(r.verification.pass, "{:?} {:?}", inst, r.verification);
        let z = &r.cert.z;
        let dual = z[0] + z[1] * inst.m1 + z[2] * inst.mt;
        prop_assert!((dual - r.value).abs() <= 1e-8 * r.value.abs().max(1.0));
    }

    #[test]
    fn interior_support_ordering(inst in instance()) {
        let r = solve_1t(&inst, 1e-13).unwrap();
        if r.branch == OneTBranch::Interior {
            let (mhat, qhat, t) = (inst.mhat(), inst.qhat(), inst.t);
            let v = r.root.unwrap();
            let lo = mhat.powf(1.0 / (t - 1.0)).max(qhat);
            prop_assert!(v > lo && v < t * qhat / (t - 1.0));
            let a = r.dist.atoms();
            let u = a[0].x / inst.m1;
            prop_assert!(u > 0.0 && u < qhat.min(1.0));
            prop_assert!(a[1].x / inst.m1 > qhat.max(1.0));
        }
    }

    #[test]
    fn branch_follows_threshold(inst in instance()) {
        let r = solve_1t(&inst, 1e-12).unwrap();
        let boundary = inst.q <= boundary_threshold(&inst);
        prop_assert_eq!(r.branch == OneTBranch::Boundary, boundary);
    }

    #[test]
    fn theta_endpoint_signs(mhat in 1.001f64..20.0, t in 1.2f64..6.0, qrel in 0.0f64..3.0) {
        let a = mhat.powf(1.0 / (t - 1.0));
        let qhat = (t - 1.0) / t * a * (1.0 + 1e-6 + qrel);
        let c = t * qhat / (t - 1.0);
        prop_assert!(theta(c, mhat, t, qhat).unwrap() > 0.0);
        if qhat > a {
            prop_assert!(theta(qhat, mhat, t, qhat).unwrap() < 0.0);
        }
    }
}

#[test]
fn value_decreases_in_q() {
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let q = 0.05 * k as f64;
        let v = solve_1t(&OneTInstance::new(1.0, 3.0, 2.5, q).unwrap(), 1e-13)
            .unwrap()
            .value;
        assert!(v <= prev + 1e-12, "q = {q}");
        prev = v;
    }
}
