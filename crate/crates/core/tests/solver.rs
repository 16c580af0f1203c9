use std::sync::Arc;

use grushin::flow::linear_propagate;
use grushin::grid::{Dealias, GridSpec};
use grushin::solver::{band_datum, Nonlinearity, Solver, SolverConfig};
use grushin::spectral::{Grid, SpectralField};

fn grid() -> Arc<Grid<f64>> {
    Grid::new(GridSpec::new(0.5, 8, 8, Dealias::TWO)).unwrap()
}

fn solver(cfg: SolverConfig) -> Solver<f64> {
    Solver::new(grid(), cfg).unwrap()
}

// room for the cubic interactions of the band η ∈ [1, 2)
fn wide_solver(cfg: SolverConfig) -> Solver<f64> {
    Solver::new(
        Grid::new(GridSpec::new(0.5, 24, 16, Dealias::TWO)).unwrap(),
        cfg,
    )
    .unwrap()
}

fn rel(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

#[test]
fn zero_datum_stays_zero() {
    let s = solver(SolverConfig::default());
    let u0 = SpectralField::zeros(&s.grid);
    let (traj, trace) = s.picard_solve(&u0, None).unwrap();
    assert!(traj.states.iter().all(|u| u.is_zero()));
    assert!(trace.v_norm.iter().all(|&v| v == 0.0));
}

#[test]
fn duhamel_of_zero_is_zero() {
    let s = solver(SolverConfig::default());
    let zero = vec![SpectralField::zeros(&s.grid); s.cfg.n_t];
    let out = s.duhamel_map(&zero, &zero).unwrap();
    assert!(out.iter().all(|u| u.is_zero()));
}

#[test]
fn linear_limit_is_free_flow() {
    let cfg = SolverConfig {
        nonlinearity: Nonlinearity::Off,
        ..SolverConfig::default()
    };
    let s = solver(cfg);
    let u0 = band_datum(&s.grid, 0, 1, 5.0);
    let (traj, _) = s.picard_solve(&u0, None).unwrap();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        assert!(rel(u, &linear_propagate(&u0, *t)) < 1e-12);
    }
    let (ss, _) = s.splitstep_evolve(&u0).unwrap();
    assert!(rel(ss.last(), &linear_propagate(&u0, s.cfg.t_final)) < 1e-12);
}

#[test]
fn splitstep_conserves_mass_per_step() {
    let s = wide_solver(SolverConfig {
        substeps: 4,
        ..SolverConfig::default()
    });
    let u0 = band_datum(&s.grid, 0, 1, 2.0);
    let (traj, _) = s.splitstep_evolve(&u0).unwrap();
    let m0 = u0.sobolev_norm_sq(0.0);
    for w in traj.states.windows(2) {
        let (a, b) = (w[0].sobolev_norm_sq(0.0), w[1].sobolev_norm_sq(0.0));
        assert!((a - b).abs() <= 1e-10 * m0, "{:e}", (a - b) / m0);
    }
}

#[test]
fn splitstep_is_second_order() {
    let base = SolverConfig {
        t_final: 0.1,
        n_t: 3,
        ..SolverConfig::default()
    };
    let run = |substeps| {
        let s = wide_solver(SolverConfig {
            substeps,
            ..base.clone()
        });
        let u0 = band_datum(&s.grid, 0, 1, 5.0);
        s.splitstep_evolve(&u0).unwrap().0.last().clone()
    };
    let reference = run(256);
    let errs: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&n| rel(&run(n), &reference))
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("errors {errs:?} orders {orders:?}");
    assert!(orders.iter().all(|&p| (1.8..=2.2).contains(&p)));
}

// conj(u(−t)) solves the same equation
#[test]
fn time_reversal() {
    let s = solver(SolverConfig::default());
    let u0 = band_datum(&s.grid, 0, 1, 5.0);
    let (fwd, _) = s.picard_solve(&u0, None).unwrap();
    let (back, _) = s.picard_solve(&fwd.last().conj(), None).unwrap();
    let r = rel(&back.last().conj(), &u0);
    println!("reversal defect {r:e}");
    assert!(r < 1e-9);
}

// the Duhamel part is cubic in the amplitude of small data
#[test]
fn duhamel_part_scales_cubically() {
    let s = solver(SolverConfig::default());
    let v_at = |amp| {
        let u0 = band_datum(&s.grid, 0, 1, amp);
        let (traj, _) = s.picard_solve(&u0, None).unwrap();
        traj.last()
            .sub(&linear_propagate(&u0, s.cfg.t_final))
            .unwrap()
            .l2_norm()
    };
    let slope = (v_at(0.02) / v_at(0.01)).log2();
    println!("exponent {slope}");
    assert!((slope - 3.0).abs() < 0.01);
}

#[test]
fn picard_matches_splitstep() {
    let s = solver(SolverConfig::default());
    let u0 = band_datum(&s.grid, 0, 1, 5.0);
    let (traj, mut trace) = s.picard_solve(&u0, None).unwrap();
    let (ss, warnings) = s.splitstep_evolve(&u0).unwrap();
    assert!(warnings.is_empty(), "{warnings:?}");
    assert!(rel(ss.last(), traj.last()) < 1e-6);
    s.diagnostics(&traj, &mut trace).unwrap();
    assert!(trace.mass_drift < 1e-8);
    assert!(trace.energy_drift < 1e-6);
    assert_eq!(trace.sigma, Some(-1.0));
    let ratio = trace.scaling_ratio.unwrap();
    assert!((ratio - 1.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn large_data_reports_non_contraction() {
    let cfg = SolverConfig {
        t_final: 1.0,
        ..SolverConfig::default()
    };
    let s = solver(cfg);
    let u0 = band_datum(&s.grid, 0, 1, 60.0);
    match s.picard_solve(&u0, None) {
        Err(grushin::Error::NonContraction { suggested_t, .. }) => assert!(suggested_t < 1.0),
        other => panic!(
            "expected NonContraction, got {:?}",
            other.map(|r| r.1.picard_residuals)
        ),
    }
}

#[test]
fn randomized_mode_rejects_bad_ell() {
    let cfg = SolverConfig {
        mode: grushin::solver::Mode::Randomized,
        k: 1.0,
        ell: 1.6,
        ..SolverConfig::default()
    };
    assert!(Solver::new(grid(), cfg).is_err());
}
