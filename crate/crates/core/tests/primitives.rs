use num_complex::Complex64 as C;
use ucont_core::coeff::{CoefficientField, SampleBox, TransversalField};
use ucont_core::evolution::{propagate, DissipationParams, GaussianPacket};
use ucont_core::expr::Expr;
use ucont_core::grid::{Grid, Spectral};
use ucont_core::jet::Jet;
use ucont_core::quad::integrate;
use ucont_core::Error;

#[test]
fn identity_bounds() {
    let f = CoefficientField::identity(2);
    let (lo, hi) = f.ellipticity_bounds(&SampleBox::cube(2, 3.0, 5)).unwrap();
    assert_eq!((lo, hi), (1.0, 1.0));
    assert_eq!(f.decay_smallness(&SampleBox::cube(2, 3.0, 5)), 0.0);
}

#[test]
fn indefinite_is_rejected_with_point() {
    let f = CoefficientField::parse(&[vec!["1", "0"], vec!["0", "x1"]], "0").unwrap();
    match f.ellipticity_bounds(&SampleBox::cube(2, 1.0, 3)) {
        Err(Error::NotPositiveDefinite { point, eigenvalue }) => {
            assert_eq!(point, vec![-1.0, -1.0]);
            assert_eq!(eigenvalue, -1.0);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn asymmetric_is_rejected() {
    assert!(matches!(
        CoefficientField::parse(&[vec!["1", "x1"], vec!["0", "1"]], "0"),
        Err(Error::NotSymmetric { row: 1, col: 2 })
    ));
}

#[test]
fn time_dependent_coefficient_is_rejected() {
    assert!(matches!(CoefficientField::parse(&[vec!["1 + t"]], "0"), Err(Error::Dependency(_))));
    assert!(matches!(CoefficientField::parse(&[vec!["1"]], "x2"), Err(Error::Dependency(_))));
}

#[test]
fn transversal_dependencies() {
    assert!(TransversalField::new(Expr::x(2), vec![vec![Expr::one()]], Expr::zero()).is_err());
    assert!(TransversalField::new(Expr::one(), vec![vec![Expr::x(1)]], Expr::zero()).is_err());
}

#[test]
fn heat_flow_matches_kernel() {
    let g = Grid::cube(1, 20.0, 256).unwrap();
    let p = GaussianPacket::centered(C::new(1.0, 0.0), 1);
    let traj =
        propagate(&p.sample(&g, 0.0), &CoefficientField::identity(1), DissipationParams::heat(), 1.0, 10, 1).unwrap();
    let exact = p.evolve(C::new(1.0, 0.0)).sample(&g, 1.0);
    assert!(traj.last().distance(&exact) < 1e-10);
}

#[test]
fn derivative_of_gaussian() {
    let g = Grid::cube(2, 8.0, 64).unwrap();
    let s = Spectral::new(&g);
    let u: Vec<C> = g.points_iter().map(|x| C::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0)).collect();
    let d = s.derivative(&u, 1);
    for (x, v) in g.points_iter().zip(&d) {
        let exact = -2.0 * x[1] * (-(x[0] * x[0] + x[1] * x[1])).exp();
        assert!((v.re - exact).abs() < 1e-10);
    }
    assert!(s.spectral_tail(&u) < 1e-7);
}

#[test]
fn grid_rejects_bad_extents() {
    assert!(Grid::cube(1, 1.0, 100).is_err());
    assert!(Grid::cube(4, 1.0, 8).is_err());
    assert!(Grid::cube(1, -1.0, 8).is_err());
}

#[test]
fn jet_product_matches_hand_rule() {
    // f = x1 t, g = x1^2 at (t, x1) = (2, 3)
    let f = Jet {
        v: C::new(6.0, 0.0),
        t: C::new(3.0, 0.0),
        x: [C::new(2.0, 0.0), C::default(), C::default()],
        ..Default::default()
    };
    let mut g = Jet { v: C::new(9.0, 0.0), x: [C::new(6.0, 0.0), C::default(), C::default()], ..Default::default() };
    g.xx[0][0] = C::new(2.0, 0.0);
    let h = f.mul(&g); // x1^3 t
    assert_eq!(h.v.re, 54.0);
    assert_eq!(h.t.re, 27.0);
    assert_eq!(h.x[0].re, 54.0);
    assert_eq!(h.xx[0][0].re, 36.0);
}

#[test]
fn gaussian_integral() {
    let v = integrate(|x| (-x * x).exp(), -10.0, 10.0, 1e-15, 1e-14).unwrap();
    assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-13);
}

#[test]
fn endpoint_singularity() {
    let v = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
}
