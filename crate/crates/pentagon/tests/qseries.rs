use num_complex::Complex64 as C;
use pentagon::qseries::{pochhammer_fin, pochhammer_inf, pochhammer_ratio, qpow, Nome, TruncationPolicy};
use pentagon::{Error, Nome64, Policy64};
use proptest::prelude::*;

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

fn naive_inf(a: C, q: C) -> C {
    let mut v = C::new(1.0, 0.0);
    let mut qj = C::new(1.0, 0.0);
    while (a * qj).norm() > 1e-18 {
        v *= 1.0 - a * qj;
        qj *= q;
    }
    v
}

#[test]
fn nome_rejects_unit_modulus() {
    assert!(matches!(Nome64::real(1.0), Err(Error::InvalidNome(_))));
    assert!(matches!(Nome64::new(C::new(0.8, 0.7)), Err(Error::InvalidNome(_))));
    assert!(Nome64::real(0.0).is_ok());
}

#[test]
fn qpow_principal_branch() {
    let q = Nome64::real(0.25).unwrap();
    assert!((qpow(&q, 0.5) - 0.5).norm() < 1e-16);
    assert_eq!(qpow(&q, 0.0), C::new(1.0, 0.0));
    let q = Nome64::new(C::new(0.0, 0.5)).unwrap();
    let r = qpow(&q, 0.5);
    // sqrt(0.5 i) = 0.5 + 0.5 i
    assert!(r.re > 0.0);
    assert!((r - C::new(0.5, 0.5)).norm() < 1e-15);
}

#[test]
fn squared_nome_keeps_branch() {
    let q = Nome64::from_polar(0.5, 2.9).unwrap();
    let q2 = q.squared();
    assert!((q2.pow(0.25) - q.pow(0.5)).norm() < 1e-15);
    assert!((q2.value() - q.value() * q.value()).norm() < 1e-15);
}

#[test]
fn finite_products() {
    let q = Nome64::real(0.5).unwrap();
    assert_eq!(pochhammer_fin(C::new(0.7, 0.2), &q, 0), C::new(1.0, 0.0));
    assert_eq!(pochhammer_fin(C::new(1.0, 0.0), &q, 1), C::new(0.0, 0.0));
    assert!((pochhammer_fin(C::new(0.5, 0.0), &q, 2) - 0.375).norm() < 1e-16);
}

#[test]
fn infinite_products_trivial_and_oracle() {
    let pol = Policy64::default();
    let q = Nome64::real(0.5).unwrap();
    assert_eq!(pochhammer_inf(C::new(0.0, 0.0), &q, &pol).unwrap().value, C::new(1.0, 0.0));
    let q0 = Nome64::real(0.0).unwrap();
    assert!((pochhammer_inf(C::new(0.3, 0.0), &q0, &pol).unwrap().value - 0.7).norm() < 1e-16);
    // 30-digit value of (1/2; 1/2)_∞
    let v = pochhammer_inf(C::new(0.5, 0.0), &q, &pol).unwrap();
    let exact = C::new(0.288_788_095_086_602_4, 0.0);
    assert!(rel(v.value, exact) <= v.tail_bound + 1e-15 && rel(v.value, exact) < 1e-14);
    assert!(rel(v.value, naive_inf(C::new(0.5, 0.0), C::new(0.5, 0.0))) < 1e-14);
}

#[test]
fn truncation_failure_when_budget_too_small() {
    let pol = TruncationPolicy { tol: 1e-14, max_terms: 3 };
    let q = Nome64::real(0.9).unwrap();
    assert!(matches!(pochhammer_inf(C::new(0.5, 0.0), &q, &pol), Err(Error::TruncationFailure { .. })));
    assert!(TruncationPolicy::new(0.0, 5).is_err());
    assert!(TruncationPolicy::new(1e-3, 0).is_err());
}

#[test]
fn ratio_cases() {
    let pol = Policy64::default();
    let q = Nome64::from_polar(0.6, 0.7).unwrap();
    let a = C::new(0.3, -0.8);
    assert!((pochhammer_ratio(&[a], &[a], &q, &pol).unwrap().value - 1.0).norm() < 1e-14);
    let tele = pochhammer_ratio(&[a * q.value()], &[a], &q, &pol).unwrap().value;
    assert!(rel(tele, 1.0 / (1.0 - a)) < 1e-14);
    let q = Nome64::real(0.5).unwrap();
    let r = pochhammer_ratio(&[C::new(0.2, 0.0), C::new(0.3, 0.0)], &[C::new(0.4, 0.0)], &q, &pol).unwrap().value;
    let oracle = naive_inf(C::new(0.2, 0.0), q.value()) * naive_inf(C::new(0.3, 0.0), q.value())
        / naive_inf(C::new(0.4, 0.0), q.value());
    assert!(rel(r, oracle) < 1e-14);
}

#[test]
fn ratio_detects_pole() {
    let q = Nome64::real(0.5).unwrap();
    let d = C::new(4.0, 0.0);
    let r = pochhammer_ratio(&[C::new(0.1, 0.0)], &[d], &q, &Policy64::default());
    assert!(matches!(r, Err(Error::PoleHit(_))));
}

#[test]
fn large_arguments_do_not_overflow() {
    let q = Nome64::from_polar(0.6, 0.3).unwrap();
    let big = q.pow(-140.5);
    let r = pochhammer_ratio(&[big * 1.3], &[big], &q, &Policy64::default()).unwrap();
    assert!(r.value.norm().is_finite() && r.value.norm() > 0.0);
}

#[test]
fn single_precision_product() {
    let q = Nome::<f32>::real(0.5).unwrap();
    let v = pochhammer_inf(num_complex::Complex32::new(0.5, 0.0), &q, &TruncationPolicy { tol: 1e-7, max_terms: 100 })
        .unwrap();
    assert!((v.value.re - 0.288_788_1).abs() < 1e-6);
}

fn nome_strategy(max: f64) -> impl Strategy<Value = Nome64> {
    (0.0..max, -3.1f64..3.1).prop_map(|(r, t)| Nome64::from_polar(r, t).unwrap())
}

fn arg_strategy(max: f64) -> impl Strategy<Value = C> {
    (0.0..max, -3.1f64..3.1).prop_map(|(r, t)| C::from_polar(r, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn recurrence(q in nome_strategy(0.9), a in arg_strategy(2.0)) {
        let pol = Policy64::default();
        let lhs = pochhammer_inf(a, &q, &pol).unwrap().value;
        let rhs = (1.0 - a) * pochhammer_inf(a * q.value(), &q, &pol).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()) + 1e-300);
    }

    #[test]
    fn splitting(q in nome_strategy(0.9), a in arg_strategy(2.0), n in 1usize..=8) {
        let pol = Policy64::default();
        let lhs = pochhammer_inf(a, &q, &pol).unwrap().value;
        let qn = pochhammer_fin(C::new(1.0, 0.0), &q, 0) * q.value().powu(n as u32);
        let rhs = pochhammer_fin(a, &q, n) * pochhammer_inf(a * qn, &q, &pol).unwrap().value;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(rhs.norm()) + 1e-300);
    }

    #[test]
    fn reported_bound_covers_deviation(q in nome_strategy(0.9), a in arg_strategy(2.0)) {
        let loose = TruncationPolicy { tol: 1e-8, max_terms: 1_000_000 };
        let tight = TruncationPolicy { tol: 1e-16, max_terms: 2_000_000 };
        let v = pochhammer_inf(a, &q, &loose).unwrap();
        let w = pochhammer_inf(a, &q, &tight).unwrap();
        let dev = (v.value - w.value).norm() / w.value.norm().max(1e-300);
        prop_assert!(dev <= v.tail_bound * 1.0001 + 1e-14);
    }

    #[test]
    fn qpow_additive(q in nome_strategy(0.95), n1 in -16i32..16, d1 in 1i32..=8, n2 in -16i32..16, d2 in 1i32..=8) {
        let r1 = n1 as f64 / d1 as f64;
        let r2 = n2 as f64 / d2 as f64;
        prop_assume!(q.norm() > 1e-3);
        let lhs = qpow(&q, r1) * qpow(&q, r2);
        let rhs = qpow(&q, r1 + r2);
        prop_assert!((lhs - rhs).norm() <= 1e-13 * rhs.norm());
    }

    #[test]
    fn ratio_equals_quotient(q in nome_strategy(0.8), a in arg_strategy(2.0), b in arg_strategy(0.9), c in arg_strategy(0.9)) {
        let pol = Policy64::default();
        let r = pochhammer_ratio(&[a, b], &[c], &q, &pol).unwrap().value;
        let o = pochhammer_inf(a, &q, &pol).unwrap().value * pochhammer_inf(b, &q, &pol).unwrap().value
            / pochhammer_inf(c, &q, &pol).unwrap().value;
        prop_assert!((r - o).norm() <= 1e-12 * r.norm().max(o.norm()) + 1e-300);
    }
}
