use std::time::Instant;

use num_complex::Complex64 as C;
use ucont_core::carleman::{make_test_function, pairing, CutoffSpec, SampleDomain, SupportMode, TestFunction};
use ucont_core::coeff::CoefficientField;
use ucont_core::ops::{conjugate_decompose, WeightSpec};

fn partner(f: &TestFunction, domain: &SampleDomain, cutoff: &CutoffSpec, seed: u64) -> TestFunction {
    let mut g = make_test_function(SupportMode::Annulus, domain, cutoff, seed).unwrap();
    g.center = f.center;
    g.time_center = f.time_center;
    g.rho = f.rho;
    g.time_halfwidth = f.time_halfwidth;
    g
}

fn worst_defects(field: &CoefficientField, weight: &WeightSpec, domain: SampleDomain, pairs: u64, nodes: usize) -> (f64, f64) {
    let n = field.dim();
    let c = conjugate_decompose(field, &weight.phi(n));
    let (s, a) = (c.s.compile(), c.a.compile());
    let cutoff = CutoffSpec::new(0.5, 2.0).unwrap();
    let (mut ws, mut wa) = (0.0f64, 0.0f64);
    for seed in 0..pairs {
        let f = make_test_function(SupportMode::Annulus, &domain, &cutoff, seed).unwrap();
        let g = partner(&f, &domain, &cutoff, seed + 10_000);
        let (sfg, fsg, scale) = pairing(&s, &f, &g, nodes, &cutoff).unwrap();
        ws = ws.max((sfg - fsg).norm() / scale);
        let (afg, fag, scale) = pairing(&a, &f, &g, nodes, &cutoff).unwrap();
        wa = wa.max((afg + fag).norm() / scale);
        assert!(sfg != C::default());
    }
    (ws, wa)
}

#[test]
fn symmetric_and_antisymmetric_parts_over_random_pairs() {
    let start = Instant::now();
    let f1 = CoefficientField::parse(&[vec!["1 + 1/(10*(1 + x1^2))"]], "0").unwrap();
    let w1 = WeightSpec::scaled_time(1.0, 2.0).unwrap();
    let (s1, a1) = worst_defects(&f1, &w1, SampleDomain::new(1, 4.0, 64).unwrap(), 60, 160);
    let f2 = CoefficientField::parse(&[vec!["1 + x2^2/20", "0"], vec!["0", "1 + x1^2/20"]], "0").unwrap();
    let w2 = WeightSpec::quadratic(0.5).unwrap();
    let (s2, a2) = worst_defects(&f2, &w2, SampleDomain::new(2, 4.0, 32).unwrap(), 40, 64);
    println!("S defects {s1:e} {s2:e}, A defects {a1:e} {a2:e}");
    for d in [s1, a1, s2, a2] {
        assert!(d < 1e-7, "defect {d:e}");
    }
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
