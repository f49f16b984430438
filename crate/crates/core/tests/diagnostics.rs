use num_complex::Complex64 as C;
use proptest::prelude::*;
use ucont_core::coeff::{CoefficientField, SampleBox};
use ucont_core::diagnostics::*;
use ucont_core::evolution::{propagate, DissipationParams, GaussianPacket, WaveState};
use ucont_core::grid::Grid;
use ucont_core::Error;

/// Chirped data `s(t) = 1/2 + i(t − 1/2)` keeps `|u(t)| ∝ e^{−|x|²/(8|s|²)}` with rate ≥ 1/4 on `[0, 1]`.
fn chirped() -> GaussianPacket {
    GaussianPacket::new(C::new(0.5, -0.5), vec![0.0], C::new(1.0, 0.0)).unwrap()
}

#[test]
fn free_gaussian_log_convexity() {
    let g = Grid::cube(1, 24.0, 256).unwrap();
    let traj = chirped().trajectory(&g, C::new(0.0, 1.0), 1.0, 64);
    assert_eq!(traj.len(), 65);
    for beta in [0.05, 0.1, 0.2] {
        let c = logconvexity_check(&traj, beta, 0.0, 1.0 + 1e-6).unwrap();
        assert!(c.bound_holds(), "β = {beta}: ratio {}", c.interpolation_ratio);
        assert!(c.min_second_difference >= -1e-3, "β = {beta}: {}", c.min_second_difference);
        // H has a closed form: ∝ (σ(t) − 4β|s|²)^{−1/2} with σ = Re s
        for (t, h) in c.times.iter().zip(&c.h) {
            let s = C::new(0.5, t - 0.5);
            let p = GaussianPacket::new(s, vec![0.0], C::new(1.0, 0.0)).unwrap();
            let amp = (chirped().s / s).sqrt().norm_sqr();
            let want = amp * p.weighted_mass(beta);
            assert!((h - want).abs() < 1e-10 * want, "t = {t}: {h} vs {want}");
        }
    }
}

#[test]
fn variable_coefficient_log_convexity_floor() {
    // a Gaussian bump in A scatters Gaussian-decaying waves; an algebraic bump such as
    // 1/(1 + x²) radiates exponential tails that the weight cannot absorb on a finite box
    let g = Grid::cube(1, 16.0, 256).unwrap();
    let f = CoefficientField::parse(&[vec!["1 + exp(-x1^2/4)/40"]], "0").unwrap();
    assert!(f.decay_smallness(&SampleBox::cube(1, 16.0, 481)) <= 0.05);
    let u0 = chirped().sample(&g, 0.0);
    let traj = propagate(&u0, &f, DissipationParams::schrodinger(), 1.0, 256, 64).unwrap();
    let c = logconvexity_check(&traj, 0.05, 0.0, 1.0).unwrap();
    assert!(c.min_second_difference >= -1e-3, "{}", c.min_second_difference);
}

#[test]
fn derivative_bound_is_finite_and_small() {
    let g = Grid::cube(1, 24.0, 256).unwrap();
    let traj = chirped().trajectory(&g, C::new(0.0, 1.0), 1.0, 64);
    for beta in [0.05, 0.1, 0.2] {
        let r = derivative_bound_check(&traj, beta, 0.0).unwrap();
        assert!(r.is_finite() && r > 0.0 && r < 1.0, "β = {beta}: {r}");
    }
}

#[test]
fn weight_beyond_the_decay_rate_is_caught() {
    let g = Grid::cube(1, 24.0, 256).unwrap();
    let u = chirped().sample(&g, 0.0);
    assert!(matches!(weighted_norm(&u, 0.3, 1.0), Err(Error::BoundaryMass { .. })));
    assert!(weighted_norm(&u, 0.2, 1.0).is_ok());
}

#[test]
fn weighted_norm_of_zero_is_zero() {
    let g = Grid::cube(2, 4.0, 16).unwrap();
    let u = WaveState::from_fn(&g, 0.0, |_| C::default());
    assert_eq!(weighted_norm(&u, 1.0, 1.0).unwrap(), 0.0);
}

#[test]
fn heat_flow_keeps_the_decay_schedule() {
    let g = Grid::cube(1, 40.0, 512).unwrap();
    let p = GaussianPacket::new(C::new(1.0, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap();
    let traj = p.trajectory(&g, C::new(1.0, 0.0), 1.0, 32);
    let s = gaussian_decay_schedule(0.2, DissipationParams::heat(), 1.0, 1.0, 1.0, 1.0, 33).unwrap();
    for (t, a) in s.times.iter().zip(&s.alpha) {
        assert!((a - 0.2 / (1.0 + 0.8 * t)).abs() < 1e-15);
        assert!(1.0 / (4.0 * (1.0 + t)) > *a);
    }
    let ratios = decay_check(&traj, &s, 0.0).unwrap();
    assert!(ratios.iter().all(|r| r.is_finite() && *r <= 1.0 + 1e-12), "{ratios:?}");
}

#[test]
fn complex_dissipation_schedule() {
    let g = Grid::cube(1, 40.0, 512).unwrap();
    let d = DissipationParams::new(1.0, 1.0).unwrap();
    let p = GaussianPacket::new(C::new(1.0, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap();
    let traj = p.trajectory(&g, d.z(), 1.0, 16);
    let s = gaussian_decay_schedule(0.2, d, 1.0, 1.0, 1.0, 1.0, 17).unwrap();
    assert!(decay_check(&traj, &s, 0.0).unwrap().iter().all(|r| *r <= 1.0 + 1e-12));
}

#[test]
fn persistence_threshold_value() {
    assert!((persistence_threshold(1.0, 1.5).unwrap() - 7.542_472_332_656_507).abs() < 1e-12);
    assert!(matches!(persistence_threshold(1.0, 2.0), Err(Error::Precondition(_))));
    assert!(matches!(persistence_threshold(1.0, 1.0), Err(Error::Precondition(_))));
}

#[test]
fn integrated_weight_interpolates() {
    let g = Grid::cube(1, 24.0, 256).unwrap();
    let traj = chirped().trajectory(&g, C::new(0.0, 1.0), 1.0, 16);
    let r = persistence_check(&traj, 0.05, 0.2, 1.5, 2.0).unwrap();
    assert!(r.kappa > r.kappa0);
    assert!(r.interpolation_ratio <= 1.0 + 1e-9, "{}", r.interpolation_ratio);
}

#[test]
fn square_completion_band_holds() {
    let radii: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
    for kappa in [1.0, 2.0, 5.0] {
        let b = square_completion_band(1.0, kappa, &radii).unwrap();
        assert!(b.inside, "κ = {kappa}: {:?}", b.values);
    }
    assert!(square_completion_band(2.0, 1.0, &radii).is_err());
}

#[test]
fn hardy_products_match_the_oracle() {
    let g = Grid::cube(1, 128.0, 16384).unwrap();
    let rows = hardy_sweep(&[1.0, 0.5, 0.1, 0.01], &g).unwrap();
    let oracle = [0.03125, 0.05, 0.061881188118811881, 0.062493750624937506];
    for (r, o) in rows.iter().zip(oracle) {
        assert!((r.product - o).abs() < 1e-8, "s = {}: {}", r.s, r.product);
        assert!(r.product <= 1.0 / 16.0);
    }
    assert!(rows.windows(2).all(|w| w[1].product > w[0].product));
}

#[test]
fn annulus_profile_prefers_quadratic_decay() {
    let g = Grid::cube(1, 16.0, 1024).unwrap();
    let p = GaussianPacket::new(C::new(1.0, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap();
    let traj = propagate(&p.sample(&g, 0.0), &CoefficientField::identity(1), DissipationParams::schrodinger(), 1.0, 64, 64)
        .unwrap();
    let lb = annulus_mass_profile(&traj, &[2.0, 3.0, 4.0, 5.0, 6.0], (0.125, 0.875), 1.0, 0.1).unwrap();
    assert!(lb.hypothesis_met);
    assert_eq!(lb.preferred, Some(2.0));
    let quad = lb.fits.iter().find(|f| f.p == 2.0).unwrap();
    assert!(quad.relative_residual < 0.05);
    assert!(lb.delta.windows(2).all(|w| w[1] < w[0]));
    // a tiny core fails the hypothesis
    let weak = annulus_mass_profile(&traj, &[2.0, 3.0, 4.0, 5.0, 6.0], (0.125, 0.875), 1.0, 10.0).unwrap();
    assert!(!weak.hypothesis_met && weak.preferred.is_none());
}

#[test]
fn coarse_grid_rejects_annulus_profile() {
    let g = Grid::cube(1, 16.0, 128).unwrap();
    let traj = GaussianPacket::new(C::new(1.0, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap().trajectory(&g, C::new(0.0, 1.0), 1.0, 8);
    assert!(matches!(annulus_mass_profile(&traj, &[2.0, 3.0, 4.0], (0.125, 0.875), 1.0, 0.0), Err(Error::Resolution(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weighted_norm_matches_gaussian_closed_form(s in 0.5f64..2.0, chirp in -1.0f64..1.0, frac in 0.0f64..0.6) {
        let p = GaussianPacket::new(C::new(s, chirp), vec![0.0], C::new(1.0, 0.0)).unwrap();
        let beta = frac * p.decay_rate();
        let g = Grid::cube(1, 40.0, 1024).unwrap();
        let w = weighted_norm(&p.sample(&g, 0.0), beta, 1.0).unwrap();
        let want = p.weighted_mass(beta);
        prop_assert!((w - want).abs() < 1e-9 * want);
    }

    #[test]
    fn weighted_norm_is_quadratically_homogeneous(c in 0.1f64..10.0) {
        let g = Grid::cube(1, 20.0, 256).unwrap();
        let u = chirped().sample(&g, 0.0);
        let v = WaveState::from_fn(&g, 0.0, |x| u.values[0] * 0.0 + chirped().value(&x[..1]) * c);
        let (a, b) = (weighted_norm(&u, 0.1, 1.0).unwrap(), weighted_norm(&v, 0.1, 1.0).unwrap());
        prop_assert!((b - c * c * a).abs() < 1e-12 * b);
    }
}
