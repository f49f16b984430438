use std::time::Instant;

use proptest::prelude::*;
use ucont_core::coeff::{CoefficientField, TransversalField};
use ucont_core::expr::{parse, Expr, NoProfile, Point};
use ucont_core::ops::{commutator, conjugate_decompose, verify_t_decomposition, Deriv, DiffOperator, WeightSpec};

fn field(rows: &[&[&str]]) -> CoefficientField {
    let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
    CoefficientField::parse(&rows, "0").unwrap()
}

fn transversal(a11: &str, tilde: &[&[&str]]) -> CoefficientField {
    let tilde = tilde.iter().map(|r| r.iter().map(|e| parse(e).unwrap()).collect()).collect();
    TransversalField::new(parse(a11).unwrap(), tilde, Expr::zero()).unwrap().to_field().unwrap()
}

fn configurations() -> Vec<(&'static str, CoefficientField, WeightSpec)> {
    vec![
        ("identity 1-D, quadratic", CoefficientField::identity(1), WeightSpec::quadratic(0.5).unwrap()),
        ("identity 2-D, quadratic", CoefficientField::identity(2), WeightSpec::quadratic(0.25).unwrap()),
        ("identity 3-D, quadratic", CoefficientField::identity(3), WeightSpec::quadratic(1.0).unwrap()),
        ("variable 1-D, quadratic", field(&[&["1 + 1/(10*(1 + x1^2))"]]), WeightSpec::quadratic(0.5).unwrap()),
        ("variable 1-D, scaled time", field(&[&["1 + x1^2/(20*(1 + x1^2))"]]), WeightSpec::scaled_time(2.0, 3.0).unwrap()),
        ("constant diagonal 2-D, scaled time", field(&[&["2", "0"], &["0", "3"]]), WeightSpec::scaled_time(1.0, 2.0).unwrap()),
        ("transversal 2-D, translated", transversal("1 + 1/(10*(1 + x1^2))", &[&["1 + x2^2/(10*(1 + x2^2))"]]), WeightSpec::translated(1.0, 2.0).unwrap()),
        ("variable 2-D, quadratic", field(&[&["1 + x2^2/20", "x1*x2/40"], &["x1*x2/40", "1 + x1^2/20"]]), WeightSpec::quadratic(1.0).unwrap()),
        ("variable 1-D, translated", field(&[&["2 + sin(x1)/4"]]), WeightSpec::translated(0.5, 4.0).unwrap()),
        ("identity 2-D, translated", CoefficientField::identity(2), WeightSpec::translated(2.0, 1.0).unwrap()),
    ]
}

#[test]
fn t_decomposition_is_exact_for_ten_configurations() {
    let start = Instant::now();
    for (name, f, w) in configurations() {
        let rep = verify_t_decomposition(&f, &w).unwrap();
        assert!(rep.exact, "{name}: residuals {:?}", rep.residuals.iter().map(|r| r.to_string()).collect::<Vec<_>>());
        assert!(rep.conjugation_residual.is_zero(), "{name}");
    }
    assert!(start.elapsed().as_secs_f64() < 30.0);
}

#[test]
fn commutator_for_identity_and_quadratic_weight() {
    for n in 1..=3 {
        let beta = 0.75;
        let phi = WeightSpec::quadratic(beta).unwrap().phi(n);
        let c = conjugate_decompose(&CoefficientField::identity(n), &phi);
        let comm = commutator(&c.s, &c.a).unwrap();
        let b = Expr::from_f64(beta);
        let mut want = DiffOperator::zero(n);
        let r2: Expr = (1..=n as u8).map(|i| &Expr::x(i) * &Expr::x(i)).sum();
        for i in 0..n {
            want.add_term(Deriv::dxx(i, i), &Expr::int(-8) * &b);
        }
        want.add_term(Deriv::ID, &(&Expr::int(32) * &b.pow_int(3)) * &r2);
        assert!(comm.equivalent(&want), "n = {n}: {comm}");
        // monomial oracle: apply to x1^k and compare with the closed form
        for k in 0..5 {
            let m = Expr::x(1).pow_int(k);
            assert!((&comm.apply(&m) - &want.apply(&m)).is_zero());
        }
    }
}

#[test]
fn conjugated_parts_are_symmetric_and_antisymmetric() {
    for (name, f, w) in configurations() {
        let c = conjugate_decompose(&f, &w.phi(f.dim()));
        assert!(c.s.adjoint().unwrap().equivalent(&c.s), "{name}: S is not symmetric");
        assert!(c.a.adjoint().unwrap().equivalent(&c.a.neg()), "{name}: A is not antisymmetric");
    }
}

#[test]
fn commutator_is_antisymmetric() {
    for (name, f, w) in configurations().into_iter().take(6) {
        let c = conjugate_decompose(&f, &w.phi(f.dim()));
        let sa = commutator(&c.s, &c.a).unwrap();
        let as_ = commutator(&c.a, &c.s).unwrap();
        assert!(sa.add(&as_).is_zero(), "{name}");
    }
}

#[test]
fn identity_commutator_is_positive_on_monomials() {
    // [S, A] = −8βΔ + 32β³|x|² is nonnegative: ⟨[S,A]f, f⟩ = 8β‖∇f‖² + 32β³‖xf‖²
    let n = 1;
    let phi = WeightSpec::quadratic(0.5).unwrap().phi(n);
    let c = conjugate_decompose(&CoefficientField::identity(n), &phi);
    let comm = commutator(&c.s, &c.a).unwrap();
    let g = parse("exp(-x1^2)").unwrap();
    let cg = comm.apply(&g);
    let h = 0.01;
    let mut acc = 0.0;
    for k in -600..=600 {
        let x = k as f64 * h;
        let p = Point::new(0.0, &[x]);
        acc += (cg.eval(&p, &NoProfile).unwrap() * g.eval(&p, &NoProfile).unwrap().conj()).re * h;
    }
    assert!(acc > 0.0);
}

fn small_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1i64..9).prop_map(|v| v.to_string()),
        Just("x1".to_string()),
        Just("x2".to_string()),
        Just("t".to_string()),
        Just("phi(t)".to_string()),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            inner.clone().prop_map(|a| format!("exp({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            (inner, 1i64..4).prop_map(|(a, k)| format!("({a})^{k}")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_display_round_trip(src in small_expr()) {
        let e = parse(&src).unwrap();
        let again = parse(&e.to_string()).unwrap();
        prop_assert_eq!(e, again);
    }

    #[test]
    fn operator_text_round_trip(src in small_expr(), a in 0usize..2, b in 0usize..2) {
        let mut op = DiffOperator::term(2, Deriv::dxx(a, b), parse(&src).unwrap());
        op.add_term(Deriv::dx(a), parse(&src).unwrap().derivative(ucont_core::expr::Var::X(1)));
        let again = DiffOperator::from_text(2, &op.to_text()).unwrap();
        prop_assert_eq!(op, again);
    }

    #[test]
    fn derivatives_commute(src in small_expr()) {
        use ucont_core::expr::Var;
        let e = parse(&src).unwrap();
        let a = e.derivative(Var::X(1)).derivative(Var::T);
        let b = e.derivative(Var::T).derivative(Var::X(1));
        prop_assert!((&a - &b).is_zero());
    }
}
