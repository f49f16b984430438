use ucont_core::coeff::TransversalField;
use ucont_core::expr::{parse, NoProfile, Point, Var};
use ucont_core::gauge::GaugeReduction;

fn field(a11: &str, v: &str) -> TransversalField {
    TransversalField::new(parse(a11).unwrap(), vec![], parse(v).unwrap()).unwrap()
}

#[test]
fn exponential_coefficient_has_closed_form_map() {
    let g = GaugeReduction::new(&field("exp(2*x1)", "0"), -2.0, 2.0, 41).unwrap();
    for x in [-1.5, -0.3, 0.0, 0.7, 1.9] {
        assert!((g.y_of_x(x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-12);
        assert!((g.psi_of_x(x).unwrap() - x / 2.0).abs() < 1e-12);
        let y = g.y_of_x(x).unwrap();
        assert!((g.x_of_y(y).unwrap() - x).abs() < 1e-12);
    }
    // a11 = e^{2x}: W = −a''/4 + a'²/(16a) = −e^{2x} + e^{2x}/4
    let w = g.modified_potential().eval(&Point::new(0.0, &[0.5]), &NoProfile).unwrap().re;
    assert!((w + 0.75 * 1f64.exp()).abs() < 1e-12);
}

#[test]
fn reduced_operator_matches_conjugated_original() {
    let f = field("1 + x1^2/(4*(1 + x1^2))", "cos(x1)/2");
    let g = GaugeReduction::new(&f, -3.0, 3.0, 61).unwrap();
    assert!(g.reduced().a11().as_constant().is_some());
    let u = parse("exp(-x1^2)*(1 + x1/3)").unwrap();
    let a = f.a11().clone();
    let lu = &(&a * &u.derivative(Var::X(1))).derivative(Var::X(1)) + &(f.potential() * &u);
    let (uc, luc) = (u.compile(), lu.compile());
    let at = |c: &ucont_core::expr::CompiledExpr, x: f64| c.eval_re(&Point::new(0.0, &[x]), &NoProfile);
    let v = |y: f64| {
        let x = g.x_of_y(y).unwrap();
        g.psi_of_x(x).unwrap().exp() * at(&uc, x)
    };
    for x in [-1.2, -0.4, 0.3, 0.9, 1.6] {
        let y = g.y_of_x(x).unwrap();
        let h = 2e-3;
        let d2 = (-v(y + 2.0 * h) + 16.0 * v(y + h) - 30.0 * v(y) + 16.0 * v(y - h) - v(y - 2.0 * h)) / (12.0 * h * h);
        let lhs = g.psi_of_x(x).unwrap().exp() * at(&luc, x);
        let rhs = d2 + g.modified_potential_at(y, &[]).unwrap() * v(y);
        assert!((lhs - rhs).abs() < 1e-7, "x = {x}: {lhs} vs {rhs}");
    }
}

#[test]
fn constant_coefficient_is_rejected() {
    assert!(GaugeReduction::new(&field("2", "0"), -1.0, 1.0, 11).is_err());
    assert!(GaugeReduction::new(&field("1 + x1^2", "0"), 0.5, 1.0, 11).is_err());
}
