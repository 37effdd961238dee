use num_complex::Complex64 as C;
use pentagon::identities::{
    bfun_flavored, bfun_rp2, bfun_s2s1, bfun_s3b, evaluate_side, negative_control, rel_residual, sample_point,
    variant_scan, verify, FormVariant, Fugacity, IdentityId, ParamPoint, Side,
};
use pentagon::{Error, Nome64, Squashing64};
use proptest::prelude::*;

fn naive(a: C, q: C) -> C {
    let mut v = C::new(1.0, 0.0);
    let mut qj = C::new(1.0, 0.0);
    for _ in 0..4000 {
        v *= 1.0 - a * qj;
        qj *= q;
        if (a * qj).norm() < 1e-20 {
            break;
        }
    }
    v
}

fn rel(a: C, b: C) -> f64 {
    rel_residual(a, b)
}

#[test]
fn bfun_s3b_symmetry_and_stability() {
    let b = Squashing64::real(1.0).unwrap();
    let (x, y) = (C::new(0.1, -0.2), C::new(-0.3, 0.15));
    assert!(rel(bfun_s3b(x, y, &b, 1e-12).unwrap(), bfun_s3b(y, x, &b, 1e-12).unwrap()) < 1e-14);
    let v1 = bfun_s3b(C::new(0.1, 0.0), C::new(0.2, 0.0), &b, 1e-10).unwrap();
    let v2 = bfun_s3b(C::new(0.1, 0.0), C::new(0.2, 0.0), &b, 5e-11).unwrap();
    assert!(rel(v1, v2) < 1e-10);
}

#[test]
fn bfun_s3b_at_zero_second_argument_is_a_pole() {
    let b = Squashing64::real(1.0).unwrap();
    assert!(matches!(bfun_s3b(C::new(0.2, 0.0), C::new(0.0, 0.0), &b, 1e-10), Err(Error::PoleHit(_))));
    let near = bfun_s3b(C::new(0.2, 0.0), C::new(0.0, -1e-3), &b, 1e-10).unwrap().norm();
    let nearer = bfun_s3b(C::new(0.2, 0.0), C::new(0.0, -1e-4), &b, 1e-10).unwrap().norm();
    assert!(nearer > 5.0 * near);
}

#[test]
fn bfun_s2s1_cases() {
    let z = C::from_polar(1.0, 0.7);
    let q0 = Nome64::real(0.0).unwrap();
    assert!(rel(bfun_s2s1(0.0, z, &q0).unwrap(), 1.0 / (1.0 - 1.0 / z)) < 1e-15);
    let q = Nome64::real(0.3).unwrap();
    let v = bfun_s2s1(2.0, z, &q).unwrap();
    let oracle = naive(z * 0.3f64.powf(1.5), C::new(0.3, 0.0)) / naive(0.3 / z, C::new(0.3, 0.0));
    assert!(v.norm().is_finite() && rel(v, oracle) < 1e-13);
}

#[test]
fn bfun_s2s1_reindexing() {
    let q = Nome64::from_polar(0.4, 0.5).unwrap();
    let z = C::from_polar(1.1, -0.8);
    for m in -2..=2 {
        let m = m as f64;
        let shifted = bfun_s2s1(m, z * q.pow(0.5), &q).unwrap();
        let up = bfun_s2s1(m + 1.0, z, &q).unwrap();
        let factor = 1.0 / (1.0 - q.pow(m / 2.0 - 0.5) / z);
        assert!(rel(shifted, up * factor) < 1e-12);
    }
}

#[test]
fn bfun_rp2_cases() {
    let z = C::from_polar(1.3, 0.4);
    let q = Nome64::real(1e-8).unwrap();
    let lead = z.powf(-0.25) * 1e-8f64.powf(-0.125) / (1.0 - 1.0 / z);
    assert!(rel(bfun_rp2(z, 0, &q).unwrap(), lead) < 1e-7);
    let q = Nome64::real(0.4).unwrap();
    let v = bfun_rp2(C::new(1.0, 0.0), 1, &q).unwrap();
    assert!(v.re > 0.0 && v.im.abs() < 1e-15 * v.re);
    let q = Nome64::from_polar(0.45, 2.6).unwrap();
    let a = C::from_polar(1.2, 0.3);
    let q2 = q.value() * q.value();
    let printed = a.powf(-0.5) * q.pow(-0.125) * naive(a * a * q.value(), q2) / naive(1.0 / (a * a), q2);
    assert!(rel(bfun_rp2(a * a, 0, &q).unwrap(), printed) < 1e-12);
}

#[test]
fn bfun_flavored_cases() {
    let q = Nome64::real(0.3).unwrap();
    let (a, b) = (C::new(0.5, 0.1), C::new(0.4, -0.2));
    let qv = C::new(0.3, 0.0);
    let zero = bfun_flavored(a, 0, b, 0, &q).unwrap();
    let oracle = naive(qv / a, qv) * naive(qv / b, qv) * naive(a * b, qv)
        / (naive(a, qv) * naive(b, qv) * naive(qv / (a * b), qv));
    assert!(rel(zero, oracle) < 1e-13);
    assert!(rel(bfun_flavored(a, 1, b, -2, &q).unwrap(), bfun_flavored(b, -2, a, 1, &q).unwrap()) < 1e-14);
    let v = bfun_flavored(C::new(0.5, 0.0), 1, C::new(0.4, 0.0), -1, &q).unwrap();
    assert!(v.norm().is_finite());
}

#[test]
fn samplers_satisfy_constraints_and_are_deterministic() {
    let p = sample_point(IdentityId::S3bFlavored, 7).unwrap();
    assert!(p.balance_defect() < 1e-13);
    let p = sample_point(IdentityId::S2s1Flavored, 1).unwrap();
    assert!(p.balance_defect() < 1e-13);
    if let ParamPoint::S2s1Flavored { q, a, n, m, .. } = &p {
        let prod = a[0].value * a[1].value * a[2].value;
        assert!((prod / q.sqrt() - 1.0).norm() < 1e-13);
        assert_eq!(n.iter().sum::<i64>(), 0);
        assert_eq!(m.iter().sum::<i64>(), 0);
    } else {
        panic!("wrong point type");
    }
    for id in IdentityId::ALL {
        for seed in 0..5 {
            assert_eq!(sample_point(id, seed).unwrap(), sample_point(id, seed).unwrap());
            assert_eq!(sample_point(id, seed).unwrap().identity(), id);
        }
        assert_ne!(sample_point(id, 0).unwrap(), sample_point(id, 1).unwrap());
    }
}

#[test]
fn canonical_forms_verify() {
    for id in IdentityId::ALL {
        for seed in 0..3 {
            let p = sample_point(id, seed).unwrap();
            let r = verify(id, &p, id.canonical_form(), id.default_tol()).unwrap();
            assert!(r.passed, "{id} seed {seed}: {:e}", r.rel_residual);
            assert!(r.diagnostics.lhs.nodes > 0);
        }
    }
}

#[test]
fn raw_and_bform_sides_agree() {
    let cases = [
        (IdentityId::S2s1Sqed, FormVariant::RawCanonical),
        (IdentityId::Rp2s1Sqed, FormVariant::RawAsPrinted),
        (IdentityId::S3bFlavored, FormVariant::RawAsPrinted),
        (IdentityId::S2s1Flavored, FormVariant::RawCanonical),
    ];
    for (id, raw) in cases {
        for seed in 0..2 {
            let p = sample_point(id, seed).unwrap();
            for side in [Side::Lhs, Side::Rhs] {
                let r = evaluate_side(id, side, raw, &p, 1e-11).unwrap().value;
                let b = evaluate_side(id, side, FormVariant::BFormCanonical, &p, 1e-11).unwrap().value;
                assert!(rel(r, b) < 1e-8, "{id} {side} seed {seed}: {r} vs {b}");
            }
        }
    }
}

#[test]
fn printed_rp2_bform_misses_q_to_one_eighth() {
    let id = IdentityId::Rp2s1Sqed;
    let p = sample_point(id, 4).unwrap();
    let ParamPoint::Rp2s1Sqed { q, .. } = p else { unreachable!() };
    let printed = evaluate_side(id, Side::Lhs, FormVariant::BFormAsPrinted, &p, 1e-11).unwrap().value;
    let raw = evaluate_side(id, Side::Lhs, FormVariant::RawAsPrinted, &p, 1e-11).unwrap().value;
    assert!(rel(printed * q.powf(0.125), raw) < 1e-10);
}

#[test]
fn charge_zero_flavored_rhs_reduces_to_nine_ratios() {
    let q = Nome64::from_polar(0.3, 0.4).unwrap();
    let sixth = Fugacity::from_log(q.log() / 6.0);
    let p = ParamPoint::S2s1Flavored { q: q.value(), a: [sixth; 3], bvec: [sixth; 3], n: [0; 3], m: [0; 3] };
    assert!(p.balance_defect() < 1e-14);
    let ab = q.pow(1.0 / 3.0);
    let one = naive(q.value() / ab, q.value()) / naive(ab, q.value());
    for form in [FormVariant::RawAsPrinted, FormVariant::RawCanonical] {
        let v = evaluate_side(IdentityId::S2s1Flavored, Side::Rhs, form, &p, 1e-12).unwrap().value;
        assert!(rel(v, one.powi(9)) < 1e-12);
    }
    let r = verify(IdentityId::S2s1Flavored, &p, FormVariant::BFormCanonical, 1e-6).unwrap();
    assert!(r.passed, "{:e}", r.rel_residual);
}

#[test]
fn sqed_printed_rhs_is_finite() {
    let q = Nome64::from_polar(0.4, 0.9).unwrap();
    let g = C::from_polar(1.0, 0.3) * q.pow(0.25);
    let p = ParamPoint::S2s1Sqed { q: q.value(), alpha: g, w: g, m: 0, n: 0 };
    let v = evaluate_side(IdentityId::S2s1Sqed, Side::Rhs, FormVariant::RawAsPrinted, &p, 1e-10).unwrap().value;
    assert!(v.norm().is_finite() && v.norm() > 0.0);
}

#[test]
fn flavored_rhs_permutation_symmetry() {
    let id = IdentityId::S2s1Flavored;
    for seed in 0..3 {
        let p = sample_point(id, seed).unwrap();
        let ParamPoint::S2s1Flavored { q, a, bvec, n, m } = p.clone() else { unreachable!() };
        let perm = ParamPoint::S2s1Flavored {
            q,
            a: [a[2], a[0], a[1]],
            m: [m[2], m[0], m[1]],
            bvec: [bvec[1], bvec[0], bvec[2]],
            n: [n[1], n[0], n[2]],
        };
        for form in [FormVariant::RawAsPrinted, FormVariant::RawCanonical] {
            let v1 = evaluate_side(id, Side::Rhs, form, &p, 1e-12).unwrap().value;
            let v2 = evaluate_side(id, Side::Rhs, form, &perm, 1e-12).unwrap().value;
            assert!(rel(v1, v2) < 1e-10);
        }
    }
}

#[test]
fn broken_balance_is_detected_and_residual_grows() {
    for id in IdentityId::ALL {
        let p = sample_point(id, 2).unwrap();
        let form = id.canonical_form();
        let rs: Vec<f64> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&e| negative_control(id, &p, form, e, id.default_tol()).unwrap().rel_residual)
            .collect();
        assert!(rs[0] < rs[1] && rs[1] < rs[2], "{id}: {rs:?}");
        assert!(rs[2] > 1e-2, "{id}: {rs:?}");
    }
    let p = sample_point(IdentityId::S3bFlavored, 0).unwrap().perturbed(0.1);
    assert!((p.balance_defect() - 0.1).abs() < 1e-12);
}

#[test]
fn unattainable_tolerance_fails_rather_than_erroring() {
    let id = IdentityId::S3bSqed;
    let p = sample_point(id, 0).unwrap();
    let r = verify(id, &p, FormVariant::RawAsPrinted, 1e-20).unwrap();
    assert!(!r.passed);
    assert_eq!(r.working_tol, id.tolerance_floor());
}

#[test]
fn reports_are_deterministic() {
    let id = IdentityId::S2s1Sqed;
    let p = sample_point(id, 5).unwrap();
    let r1 = verify(id, &p, FormVariant::RawCanonical, 1e-6).unwrap();
    let r2 = verify(id, &p, FormVariant::RawCanonical, 1e-6).unwrap();
    assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
}

#[test]
fn variant_scan_cases() {
    let pts = |id| (0..3).map(|s| sample_point(id, s).unwrap()).collect::<Vec<_>>();
    let single = variant_scan(IdentityId::S3bSqed, &pts(IdentityId::S3bSqed), 1e-5).unwrap();
    assert_eq!(single.len(), 1);
    assert!(single[0].canonical);
    let scan = variant_scan(IdentityId::S2s1Sqed, &pts(IdentityId::S2s1Sqed), 1e-6).unwrap();
    let passing: Vec<_> = scan.iter().filter(|s| s.max_rel_residual.is_some_and(|r| r < 1e-6)).map(|s| s.form).collect();
    assert!(passing.iter().all(|f| matches!(f, FormVariant::RawCanonical | FormVariant::BFormCanonical)));
    assert!(!passing.is_empty() && scan[0].canonical);
    let none = variant_scan(IdentityId::Rp2s1Sqed, &pts(IdentityId::Rp2s1Sqed), 1e-30).unwrap();
    assert!(none.iter().all(|s| !s.canonical));
    assert!(variant_scan(IdentityId::S3bSqed, &pts(IdentityId::S3bSqed)[..2], 1e-5).is_err());
}

#[test]
fn form_resolution_and_point_mismatch() {
    let id = IdentityId::S3bSqed;
    assert_eq!(id.resolve_form("canonical").unwrap(), FormVariant::RawAsPrinted);
    assert!(matches!(id.resolve_form("bform"), Err(Error::UnknownForm { .. })));
    assert_eq!(IdentityId::S2s1Sqed.resolve_form("raw").unwrap(), FormVariant::RawAsPrinted);
    assert_eq!("S2S1_FLAVORED".parse::<IdentityId>().unwrap(), IdentityId::S2s1Flavored);
    let p = sample_point(IdentityId::S2s1Sqed, 0).unwrap();
    assert!(evaluate_side(id, Side::Lhs, FormVariant::RawAsPrinted, &p, 1e-8).is_err());
}

#[test]
fn points_serialize_complex_as_re_im() {
    let p = sample_point(IdentityId::S2s1Sqed, 0).unwrap();
    let v: serde_json::Value = serde_json::to_value(&p).unwrap();
    assert_eq!(v["identity"], "s2s1-sqed");
    assert!(v["alpha"]["re"].is_f64() && v["alpha"]["im"].is_f64());
    let back: ParamPoint = serde_json::from_value(v).unwrap();
    assert_eq!(back, p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flavored_bfun_swap(ar in 0.2f64..0.8, at in -3.0f64..3.0, br in 0.2f64..0.8, bt in -3.0f64..3.0,
                          n in -3i64..=3, m in -3i64..=3, qr in 0.1f64..0.7) {
        let q = Nome64::real(qr).unwrap();
        let (a, b) = (C::from_polar(ar, at), C::from_polar(br, bt));
        let v1 = bfun_flavored(a, n, b, m, &q).unwrap();
        let v2 = bfun_flavored(b, m, a, n, &q).unwrap();
        prop_assert!(rel(v1, v2) < 1e-12);
    }

    #[test]
    fn bfun_s3b_symmetric(xr in -0.5f64..0.5, xi in -0.3f64..0.3, yr in -0.5f64..0.5, yi in -0.3f64..0.3, b in 0.7f64..1.4) {
        let sp = Squashing64::real(b).unwrap();
        let (x, y) = (C::new(xr, xi), C::new(yr, yi));
        prop_assert!(rel(bfun_s3b(x, y, &sp, 1e-11).unwrap(), bfun_s3b(y, x, &sp, 1e-11).unwrap()) < 1e-12);
    }
}

#[test]
fn serialized_names_match_display_names() {
    for f in FormVariant::ALL {
        assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{f}\""));
        assert_eq!(f.name().parse::<FormVariant>().unwrap(), f);
    }
    for id in IdentityId::ALL {
        assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
    }
}
