use num_complex::Complex64 as C;
use proptest::prelude::*;
use ucont_core::coeff::CoefficientField;
use ucont_core::evolution::{
    free_flow_closed_form, harmonic_gaussian, propagate, regularized_flow, DissipationParams, GaussianPacket,
    Propagator, Trajectory, WaveState,
};
use ucont_core::expr::parse;
use ucont_core::grid::{Grid, Spectral};
use ucont_core::Error;

fn packet(s: f64) -> GaussianPacket {
    GaussianPacket::new(C::new(s, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap()
}

#[test]
fn free_flow_matches_kernel_solution() {
    let g = Grid::cube(1, 32.0, 1024).unwrap();
    let p = packet(1.0);
    let traj = propagate(&p.sample(&g, 0.0), &CoefficientField::identity(1), DissipationParams::schrodinger(), 1.0, 8, 1)
        .unwrap();
    let exact = free_flow_closed_form(&p, 1.0).sample(&g, 1.0);
    assert!(traj.last().distance(&exact) < 1e-6);
}

fn harmonic_error(w: f64, steps: usize) -> f64 {
    let g = Grid::cube(1, 16.0, 512).unwrap();
    let s0 = C::new(1.0, 0.0);
    let field = CoefficientField::identity(1).with_potential(parse(&format!("-{w}*x1^2")).unwrap()).unwrap();
    let u0 = WaveState::from_fn(&g, 0.0, |x| harmonic_gaussian(w, s0, 1, 0.0, &x[..1]));
    let traj = propagate(&u0, &field, DissipationParams::schrodinger(), 1.0, steps, 1).unwrap();
    let exact = WaveState::from_fn(&g, 1.0, |x| harmonic_gaussian(w, s0, 1, 1.0, &x[..1]));
    traj.last().distance(&exact)
}

#[test]
fn splitting_is_second_order() {
    for w in [0.5, 1.0] {
        let e: Vec<f64> = [16, 32, 64].iter().map(|&s| harmonic_error(w, s)).collect();
        for pair in e.windows(2) {
            let r = pair[0] / pair[1];
            assert!((3.6..=4.4).contains(&r), "w = {w}: ratio {r}");
        }
    }
}

fn variable_field() -> CoefficientField {
    CoefficientField::parse(&[vec!["1 + 0.08/(1 + x1^2)"]], "0.3*cos(x1)").unwrap()
}

#[test]
fn variable_coefficient_flow_is_time_reversible() {
    let g = Grid::cube(1, 20.0, 256).unwrap();
    let u0 = packet(1.0).sample(&g, 0.0);
    let f = variable_field();
    let fwd = propagate(&u0, &f, DissipationParams::schrodinger(), 0.5, 50, 1).unwrap();
    // conj solves the flow with b → −b, so conj ∘ flow ∘ conj reverses time
    let back = propagate(&WaveState { t: 0.0, ..fwd.last().conj() }, &f, DissipationParams::schrodinger(), 0.5, 50, 1)
        .unwrap()
        .last()
        .conj();
    assert!(back.distance(&u0) < 1e-8);
    assert!((fwd.last().mass() - u0.mass()).abs() < 1e-10 * u0.mass());
}

#[test]
fn regularized_flow_converges_as_epsilon_shrinks() {
    let g = Grid::cube(1, 20.0, 256).unwrap();
    let f = variable_field();
    let u0 = packet(1.0).sample(&g, 0.0);
    let traj = propagate(&u0, &f, DissipationParams::schrodinger(), 1.0, 100, 10).unwrap();
    let d: Vec<f64> =
        [1e-1, 1e-2, 1e-3].iter().map(|&e| regularized_flow(&traj, &f, e, 10).unwrap().last().distance(&traj.last())).collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn semigroup_composition() {
    let g = Grid::cube(1, 20.0, 256).unwrap();
    let f = variable_field();
    let d = DissipationParams::new(0.01, 1.0).unwrap();
    let prop = Propagator::new(&g, &f, d).unwrap();
    let u0 = packet(1.0).sample(&g, 0.0);
    let mut once = u0.values.clone();
    prop.advance(&mut once, 0.01, 60).unwrap();
    let mut twice = u0.values.clone();
    prop.advance(&mut twice, 0.01, 25).unwrap();
    prop.advance(&mut twice, 0.01, 35).unwrap();
    let a = WaveState::new(g.clone(), 0.6, once).unwrap();
    let b = WaveState::new(g, 0.6, twice).unwrap();
    assert!(a.distance(&b) < 1e-7);
}

#[test]
fn heat_flow_dissipates_mass() {
    let g = Grid::cube(1, 20.0, 256).unwrap();
    let f = variable_field().with_potential(parse("0").unwrap()).unwrap();
    let traj = propagate(&packet(0.5).sample(&g, 0.0), &f, DissipationParams::new(1.0, 0.5).unwrap(), 1.0, 40, 20)
        .unwrap();
    let m = traj.masses();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
}

#[test]
fn negative_dissipation_is_rejected() {
    assert!(matches!(DissipationParams::new(-0.1, 1.0), Err(Error::Precondition(_))));
    assert!(matches!(DissipationParams::new(0.0, 0.0), Err(Error::Precondition(_))));
}

#[test]
fn growing_potential_triggers_the_guard() {
    let g = Grid::cube(1, 10.0, 64).unwrap();
    let f = CoefficientField::identity(1).with_potential(parse("40").unwrap()).unwrap();
    let err = propagate(&packet(1.0).sample(&g, 0.0), &f, DissipationParams::heat(), 1.0, 10, 1).unwrap_err();
    assert!(matches!(err, Error::BlowUp { .. }));
}

#[test]
fn under_resolved_data_is_reported() {
    let g = Grid::cube(1, 10.0, 64).unwrap();
    let narrow = GaussianPacket::new(C::new(0.002, 0.0), vec![0.0], C::new(1.0, 0.0)).unwrap();
    let s = Spectral::new(&g);
    assert!(matches!(s.check_resolution(&narrow.sample(&g, 0.0).values, 1e-10), Err(Error::Resolution(_))));
    assert!(s.check_resolution(&packet(1.0).sample(&g, 0.0).values, 1e-10).is_ok());
}

#[test]
fn checkpoint_round_trip() {
    let g = Grid::new(vec![4.0, 6.0], vec![8, 16]).unwrap();
    let p = GaussianPacket::new(C::new(1.0, 0.5), vec![0.0, 0.0], C::new(1.0, 0.0)).unwrap();
    let traj = p.trajectory(&g, C::new(0.0, 1.0), 1.0, 3);
    let dir = std::env::temp_dir().join(format!("ucont-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.bin");
    traj.write_checkpoint(&path).unwrap();
    let back = Trajectory::read_checkpoint(&path).unwrap();
    assert_eq!(back.grid, traj.grid);
    assert_eq!(back.times, traj.times);
    for (a, b) in back.frames.iter().zip(&traj.frames) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < 1e-6);
        }
    }
    std::fs::write(&path, b"UCTX").unwrap();
    assert!(matches!(Trajectory::read_checkpoint(&path), Err(Error::Checkpoint(_))));
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn schrodinger_flow_conserves_mass(s in 0.3f64..2.0, c in -2.0f64..2.0, k in -2.0f64..2.0, amp in 0.0f64..0.2) {
        let g = Grid::cube(1, 20.0, 256).unwrap();
        let f = CoefficientField::parse(&[vec![&format!("1 + {amp}/(1 + x1^2)")]], "0").unwrap();
        let u0 = WaveState::from_fn(&g, 0.0, |x| {
            C::new(-(x[0] - c).powi(2) / (4.0 * s), k * x[0]).exp()
        });
        let traj = propagate(&u0, &f, DissipationParams::schrodinger(), 0.5, 20, 4).unwrap();
        let m0 = u0.mass();
        for m in traj.masses() {
            prop_assert!((m - m0).abs() < 1e-9 * m0);
        }
    }

    #[test]
    fn dissipative_flow_never_gains_mass(a in 0.05f64..1.0, b in -1.0f64..1.0) {
        let g = Grid::cube(1, 16.0, 128).unwrap();
        let f = CoefficientField::parse(&[vec!["1 + 0.1*cos(x1)"]], "0").unwrap();
        let traj = propagate(&packet(1.0).sample(&g, 0.0), &f, DissipationParams::new(a, b).unwrap(), 0.5, 10, 5).unwrap();
        let m = traj.masses();
        prop_assert!(m.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }
}
