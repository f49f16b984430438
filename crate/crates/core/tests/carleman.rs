use num_complex::Complex64 as C;
use proptest::prelude::*;
use ucont_core::carleman::*;
use ucont_core::coeff::{CoefficientField, SampleBox, TransversalField};
use ucont_core::expr::{parse, Expr};
use ucont_core::Error;

fn cubic_domain() -> SampleDomain {
    SampleDomain::new(1, 6.0, 96).unwrap()
}

fn translated_domain() -> SampleDomain {
    SampleDomain::new(2, 3.0, 32).unwrap()
}

fn identity_transversal() -> TransversalField {
    TransversalField::new(Expr::one(), vec![vec![Expr::one()]], Expr::zero()).unwrap()
}

fn variable_transversal() -> TransversalField {
    TransversalField::new(Expr::one(), vec![vec![parse("1 + exp(-x2^2)/40").unwrap()]], Expr::zero()).unwrap()
}

fn cubic_samples_pass(field: &CoefficientField, radius: f64, count: u64) {
    let domain = cubic_domain();
    let cutoff = CutoffSpec::new(1.0, radius).unwrap();
    let ops = CarlemanOperators::cubic(field, radius, &SampleBox::cube(1, 6.0, 33)).unwrap();
    let beta1 = cutoff.beta1(ops.lambda, 1.0);
    for seed in 0..count {
        let f = make_test_function(SupportMode::Annulus, &domain, &cutoff, seed).unwrap();
        let rep = carleman_sides_cubic(&f, &ops, beta1, &cutoff, 1.0, domain.nodes).unwrap();
        assert!(!rep.exploratory);
        assert!(rep.passed(1e-6), "seed {seed}: slack {}", rep.slack);
        assert!(rep.direct_gap < 1e-10, "seed {seed}: gap {}", rep.direct_gap);
    }
}

#[test]
fn cubic_regime_identity_at_beta1() {
    cubic_samples_pass(&CoefficientField::identity(1), 2.0, 100);
}

#[test]
fn cubic_regime_variable_field_at_beta1() {
    let f = CoefficientField::parse(&[vec!["1 + exp(-x1^2)/40"]], "0").unwrap();
    assert!(f.decay_smallness(&SampleBox::cube(1, 6.0, 241)) <= 0.05);
    cubic_samples_pass(&f, 2.0, 100);
}

fn sweep(field: SweepField, domain: SampleDomain, seeds: std::ops::Range<u64>) -> SweepReport {
    carleman_sweep(&SweepConfig {
        field,
        radii: vec![2.0, 4.0, 8.0, 16.0],
        beta_factors: vec![],
        seeds: seeds.collect(),
        r0: 1.0,
        domain,
        tolerance: 1e-6,
    })
    .unwrap()
}

#[test]
fn frontier_exponents_separate_the_two_regimes() {
    let cubic = sweep(SweepField::Cubic(CoefficientField::identity(1)), cubic_domain(), 0..48);
    let translated = sweep(SweepField::Translated(identity_transversal()), translated_domain(), 0..48);
    assert!((cubic.frontier_exponent - 3.0).abs() <= 0.2, "cubic {}", cubic.frontier_exponent);
    assert!((translated.frontier_exponent - 2.0).abs() <= 0.2, "translated {}", translated.frontier_exponent);
    assert!(cubic.max_direct_gap < 1e-10 && translated.max_direct_gap < 1e-10);
}

#[test]
fn translated_samples_pass_at_fitted_c0() {
    let field = variable_transversal();
    let calib = sweep(SweepField::Translated(field.clone()), translated_domain(), 1000..1048);
    let c0 = calib.frontier_constant;
    assert!(c0.is_finite() && c0 > 0.0);
    let radius = 4.0;
    let cutoff = CutoffSpec::new(1.0, radius).unwrap();
    let ops = CarlemanOperators::translated(&field, radius, &SampleBox::cube(2, 3.0, 17)).unwrap();
    let domain = translated_domain();
    for seed in 0..100 {
        let f = make_test_function(SupportMode::Translated, &domain, &cutoff, seed).unwrap();
        let rep = carleman_sides_translated(&f, &ops, c0 * radius * radius, &cutoff, c0, domain.nodes).unwrap();
        assert!(rep.passed(1e-6), "seed {seed}: slack {}", rep.slack);
    }
}

#[test]
fn radius_below_one_is_rejected() {
    let err = CutoffSpec::new(1.0, 0.5).unwrap_err();
    assert!(matches!(err, Error::Precondition(ref m) if m.contains("R ≥ 1")));
}

#[test]
fn support_inside_r0_is_rejected() {
    let domain = cubic_domain();
    let cutoff = CutoffSpec::new(1.0, 2.0).unwrap();
    let ops = CarlemanOperators::cubic(&CoefficientField::identity(1), 2.0, &SampleBox::cube(1, 6.0, 33)).unwrap();
    let mut f = make_test_function(SupportMode::Annulus, &domain, &cutoff, 3).unwrap();
    f.center = [0.0; 3];
    assert!(matches!(sides(&ops, &f, &cutoff, 32, 1.0), Err(Error::Support(_))));
    let small = CutoffSpec::new(5.9, 2.0).unwrap();
    assert!(matches!(make_test_function(SupportMode::Annulus, &domain, &small, 0), Err(Error::Support(_))));
}

#[test]
fn too_few_nodes_is_a_resolution_error() {
    assert!(matches!(SampleDomain::new(1, 6.0, 8), Err(Error::Resolution(_))));
}

#[test]
fn cutoff_norms() {
    let c = CutoffSpec::new(1.0, 1.0).unwrap();
    assert!((c.phi_prime_sup() - 45.0).abs() < 1e-12);
    assert!((c.phi_second_sup() - 1108.5125168440816).abs() < 1e-9);
    let (lo, hi) = c.level_interval(1.0);
    assert!((c.phi(lo) - 1.0).abs() < 1e-9 && (c.phi(hi) - 1.0).abs() < 1e-9);
    // finite-difference check of the derivative bounds
    let h = 1e-5;
    let mut d1: f64 = 0.0;
    let mut t = 0.126;
    while t < 0.874 {
        d1 = d1.max(((c.phi(t + h) - c.phi(t - h)) / (2.0 * h)).abs());
        t += 1e-4;
    }
    assert!(d1 <= 45.0 + 1e-4 && d1 > 44.9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn sides_are_quadratically_homogeneous(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.abs() + im.abs() > 0.1);
        let domain = SampleDomain::new(1, 6.0, 48).unwrap();
        let cutoff = CutoffSpec::new(1.0, 2.0).unwrap();
        let ops = CarlemanOperators::cubic(&CoefficientField::identity(1), 2.0, &SampleBox::cube(1, 6.0, 33)).unwrap();
        let f = make_test_function(SupportMode::Annulus, &domain, &cutoff, seed).unwrap();
        let c = C::new(re, im);
        let (a, b) = (sides(&ops, &f, &cutoff, 48, 3.0).unwrap(), sides(&ops, &f.scaled(c), &cutoff, 48, 3.0).unwrap());
        let k = c.norm_sqr();
        for (x, y) in a.q.iter().zip(&b.q) {
            prop_assert!((y - k * x).abs() <= 1e-10 * (k * x.abs()).max(1e-300));
        }
        prop_assert!((b.grad - k * a.grad).abs() <= 1e-10 * k * a.grad);
        prop_assert!((b.frontier(2.0, 1.0) - a.frontier(2.0, 1.0)).abs() <= 1e-8 * a.frontier(2.0, 1.0).max(1.0));
    }
}
