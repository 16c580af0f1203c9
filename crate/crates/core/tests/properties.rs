use std::sync::Arc;

use grushin::flow::{linear_propagate, randomize, Draw, EnsembleConfig};
use grushin::grid::{Dealias, GridSpec};
use grushin::hermite::hermite_column;
use grushin::io::{read_snapshot, write_snapshot};
use grushin::shift::{shift, shift_field, D1};
use grushin::spectral::{Grid, SpectralField};
use grushin::{Complex, DyadicIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> Arc<Grid<f64>> {
    Grid::new(GridSpec::new(0.5, 8, 8, Dealias::TWO)).unwrap()
}

fn field(g: &Arc<Grid<f64>>, seed: u64, m_top: usize) -> SpectralField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(g, |m, q| {
        if q == 0 || m > m_top {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn dist(a: &SpectralField<f64>, b: &SpectralField<f64>) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recurrence_holds(m in 1usize..400, x in -40.0f64..40.0) {
        let h = hermite_column(m + 1, x);
        let lhs = x * h[m];
        let rhs = (m as f64 / 2.0).sqrt() * h[m - 1] + ((m + 1) as f64 / 2.0).sqrt() * h[m + 1];
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn flow_is_unitary(seed: u64, t in -20.0f64..20.0, k in 0.0f64..3.0, rho in 0.0f64..2.0) {
        let g = grid();
        let u = field(&g, seed, 8);
        let w = linear_propagate(&u, t);
        prop_assert!(close(w.sobolev_norm(k), u.sobolev_norm(k), 1e-12));
        prop_assert!(close(w.x_norm(k, rho), u.x_norm(k, rho), 1e-12));
    }

    #[test]
    fn flow_group_law(seed: u64, s in -5.0f64..5.0, t in -5.0f64..5.0) {
        let u = field(&grid(), seed, 8);
        let two = linear_propagate(&linear_propagate(&u, s), t);
        prop_assert!(dist(&two, &linear_propagate(&u, s + t)) < 1e-12);
    }

    #[test]
    fn flow_commutes_with_projections(seed: u64, t in -5.0f64..5.0, a in 1.0f64..40.0, pick in 0usize..64) {
        let g = grid();
        let u = field(&g, seed, 8);
        let f = |v: &SpectralField<f64>| linear_propagate(v, t);
        let blocks = u.blocks();
        let d = blocks[pick % blocks.len()];
        let packets = u.packets();
        let p = packets[pick % packets.len()];
        prop_assert!(dist(&f(&u.block(d).unwrap()), &f(&u).block(d).unwrap()) < 1e-12);
        prop_assert!(dist(&f(&u.packet_extract(p)), &f(&u).packet_extract(p)) < 1e-12);
        prop_assert!(dist(&f(&u.smooth_project(a)), &f(&u).smooth_project(a)) < 1e-12);
    }

    // a shift moving m to m±1 commutes with the flow up to the phase e^{±2it|η|}
    #[test]
    fn flow_commutes_with_shifts(seed: u64, t in -5.0f64..5.0) {
        let u = field(&grid(), seed, 7);
        for delta in D1 {
            let a = linear_propagate(&shift_field(&u, delta).unwrap(), t);
            let b = shift_field(&linear_propagate(&u, t), delta).unwrap();
            let phase = b.map_diag(|_, q| Complex::from_polar(1.0, 2.0 * f64::from(delta.delta0) * t * u.grid.eta(q).abs()));
            prop_assert!(dist(&a, &phase) < 1e-12);
        }
    }

    #[test]
    fn decompositions_are_orthogonal(seed: u64, k in 0.0f64..3.0) {
        let u = field(&grid(), seed, 8);
        let total = u.sobolev_norm_sq(k);
        let by_block: f64 = u.blocks().iter().map(|&d| u.block(d).unwrap().sobolev_norm_sq(k)).sum();
        let by_packet: f64 = u.packets().iter().map(|&a| u.packet_extract(a).sobolev_norm_sq(k)).sum();
        prop_assert!(close(by_block, total, 1e-12));
        prop_assert!(close(by_packet, total, 1e-12));
    }

    // Lowering or keeping m contracts every H^k. Raising it contracts L² and
    // costs at most the weight ratio ((2m+3)/(2m+1))^{k/2} in H^k.
    #[test]
    fn shifts_contract(seed: u64, k in 0.0f64..3.0, pick in 0usize..64) {
        let u = field(&grid(), seed, 7);
        let blocks = u.blocks();
        let d = blocks[pick % blocks.len()];
        let b = u.block(d).unwrap();
        let raise = ((2 * d.m + 3) as f64 / (2 * d.m + 1) as f64).powf(k / 2.0);
        for delta in D1 {
            let s = shift(&b, delta).unwrap();
            let slack = if delta.delta0 > 0 { raise } else { 1.0 };
            prop_assert!(s.sobolev_norm(k) <= slack * b.sobolev_norm(k) * (1.0 + 1e-12));
            prop_assert!(s.l2_norm() <= b.l2_norm() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn physical_round_trip(seed: u64) {
        let u = field(&grid(), seed, 8);
        let phys = u.synthesize();
        prop_assert!(dist(&phys.analyze(), &u) < 1e-10);
        prop_assert!(close(phys.l2_norm(), u.l2_norm(), 1e-8));
    }

    #[test]
    fn conjugation_is_an_involution(seed: u64, k in 0.0f64..3.0) {
        let u = field(&grid(), seed, 8);
        prop_assert_eq!(&u.conj().conj().coeffs, &u.coeffs);
        prop_assert!(close(u.conj().sobolev_norm(k), u.sobolev_norm(k), 1e-13));
    }

    #[test]
    fn snapshots_round_trip_bitwise(seed: u64) {
        let g = grid();
        let u = field(&g, seed, 8);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &u).unwrap();
        let back = read_snapshot(&mut buf.as_slice()).unwrap().into_field(&g).unwrap();
        prop_assert_eq!(back.coeffs, u.coeffs);
    }

    #[test]
    fn draws_are_keyed(seed: u64, index in 0usize..1000, n in 1usize..20) {
        let cfg = EnsembleConfig::new(seed, 1);
        let keys: Vec<DyadicIndex> = (0..n).map(|i| DyadicIndex::new(i as i32 % 5 - 2, i)).collect();
        let small = Draw::sample(&cfg, index, &keys[..n / 2 + 1]);
        let big = Draw::sample(&cfg, index, &keys);
        prop_assert_eq!(&big, &Draw::sample(&cfg, index, &keys));
        for (k, v) in &small.values {
            prop_assert_eq!(big.values[k], *v);
        }
    }

    #[test]
    fn unit_draw_is_identity(seed: u64, phase in 0.0f64..6.3) {
        let u = field(&grid(), seed, 8);
        let id = Draw::constant(&u.blocks(), Complex::new(1.0, 0.0));
        prop_assert_eq!(randomize(&u, &id).unwrap().coeffs, u.coeffs.clone());
        let rot = Draw::constant(&u.blocks(), Complex::from_polar(1.0, phase));
        prop_assert!(close(randomize(&u, &rot).unwrap().x_norm(1.0, 1.0), u.x_norm(1.0, 1.0), 1e-12));
    }
}
