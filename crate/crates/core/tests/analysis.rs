use num_complex::Complex64 as C;
use proptest::prelude::*;
use ucont_core::analysis::*;
use ucont_core::grid::Grid;
use ucont_core::Error;

const RATIOS: [f64; 20] = [
    47.036813449422427,
    49.217913659905699,
    51.241730852241187,
    52.932261389052996,
    54.169088118253779,
    54.950044129398754,
    55.388219293231738,
    55.628949967839735,
    55.771314565608059,
    55.861890194684066,
    55.921681150526368,
    55.96189705133364,
    55.989250401600092,
    56.00798822366017,
    56.020884599102713,
    56.029788607319398,
    56.035949353539346,
    56.040218266894097,
    56.043179270255445,
    56.045234509443905,
];

fn reference_case() -> SubordinationCase {
    SubordinationCase::new(1.5, 10.0, 1.0, log_spaced(0.1, 10.0, 20)).unwrap()
}

#[test]
fn subordination_matches_high_precision_oracle() {
    let rows = subordination_ratio(&reference_case()).unwrap();
    for (row, want) in rows.iter().zip(RATIOS) {
        assert!((row.ratio - want).abs() < 1e-10 * want, "r = {}: {} vs {want}", row.r, row.ratio);
        assert_eq!(row.q, 3.0);
    }
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    assert!((max / min - 1.1915185234583975).abs() < 1e-10);
    // the integral itself is strictly increasing in r
    assert!(rows.windows(2).all(|w| w[1].log_integral > w[0].log_integral));
}

#[test]
fn subordination_small_r_limit() {
    let c = reference_case();
    let lim = c.small_r_limit().unwrap();
    assert!((lim - 31.693839275928909).abs() < 1e-10 * lim);
    let near = SubordinationCase::new(1.5, 10.0, 1.0, vec![1e-6]).unwrap();
    let r = subordination_ratio(&near).unwrap()[0].ratio;
    assert!((r - lim).abs() < 1e-3 * lim);
}

#[test]
fn subordination_large_r_limit() {
    let far = SubordinationCase::new(1.5, 10.0, 1.0, vec![1e3]).unwrap();
    let r = subordination_ratio(&far).unwrap()[0].ratio;
    assert!((r - 56.049912163979287).abs() < 1e-6 * r);
}

#[test]
fn tail_from_lambda0_is_within_factor_two() {
    let c = reference_case();
    for &r in &c.radii {
        let full = c.log_integral(r, 0.0).unwrap();
        let tail = c.log_integral(r, c.lambda0).unwrap();
        assert!(tail <= full && full <= tail + 2f64.ln(), "r = {r}");
    }
}

#[test]
fn inadmissible_kappa_is_rejected() {
    let c = SubordinationCase::new(1.5, 2.0, 1.0, vec![1.0]).unwrap();
    assert!(!c.admissible());
    assert!(matches!(subordination_ratio(&c), Err(Error::Precondition(_))));
    assert!(SubordinationCase::new(2.0, 10.0, 1.0, vec![1.0]).is_err());
}

#[test]
fn normalized_ratios_scale_by_kappa_power() {
    let mut c = reference_case();
    let raw = subordination_ratio(&c).unwrap();
    c.normalize = true;
    let norm = subordination_ratio(&c).unwrap();
    for (a, b) in raw.iter().zip(&norm) {
        assert!((a.ratio / b.ratio - 10f64.powf(1.5)).abs() < 1e-9);
    }
}

#[test]
fn poincare_zero_and_constant() {
    let g = Grid::cube(1, 2.5, 1 << 16).unwrap();
    let zero = poincare_weighted_check(&g, 1.0, |_| (C::default(), [C::default(); 3])).unwrap();
    assert_eq!((zero.lhs, zero.rhs1, zero.rhs2, zero.ratio), (0.0, 0.0, 0.0, 0.0));
    let one = poincare_weighted_check(&g, 1.0, |_| (C::new(1.0, 0.0), [C::default(); 3])).unwrap();
    assert!((one.lhs - 2f64.sqrt()).abs() < 1e-4);
    assert!((one.rhs2 - (16.0f64 / 3.0).sqrt()).abs() < 1e-4);
    assert!((one.ratio - 0.61237243569579452).abs() < 1e-4);
}

#[test]
fn poincare_ball_must_fit() {
    let g = Grid::cube(2, 2.0, 32).unwrap();
    assert!(poincare_weighted_check(&g, 1.0, |_| (C::new(1.0, 0.0), [C::default(); 3])).is_err());
}

#[test]
fn poincare_constants() {
    let want = [2.4008435097522829, 1.5681953122378372, 1.2004217548761414];
    for (n, w) in (1..=3).zip(want) {
        assert!((poincare_constant(n).unwrap() - w).abs() < 1e-14);
    }
}

#[test]
fn poincare_worst_ratio_is_stable_and_bounded() {
    for (dim, points) in [(1, 256), (2, 64)] {
        let s = poincare_sweep(dim, &[0.5, 1.0, 2.0], 200, points, 7).unwrap();
        assert!(s.passed, "{s:?}");
        assert!(s.refinement_change <= 0.05);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn poincare_ratio_is_scale_invariant(seed in 0u64..10_000, re in -5.0f64..5.0, im in -5.0f64..5.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let g = Grid::cube(2, 2.5, 32).unwrap();
        let f = TrigField::random(2, 4, 3.0, seed);
        let c = C::new(re, im);
        let a = poincare_weighted_check(&g, 1.0, |x| f.eval(x)).unwrap();
        let b = poincare_weighted_check(&g, 1.0, |x| {
            let (v, d) = f.eval(x);
            (v * c, [d[0] * c, d[1] * c, d[2] * c])
        }).unwrap();
        prop_assert!((a.ratio - b.ratio).abs() < 1e-12 * a.ratio.max(1e-300));
    }

    #[test]
    fn subordination_integral_is_monotone(r in 0.01f64..5.0, dr in 0.01f64..1.0) {
        let c = reference_case();
        prop_assert!(c.log_integral(r + dr, 1.0).unwrap() > c.log_integral(r, 1.0).unwrap());
    }
}
