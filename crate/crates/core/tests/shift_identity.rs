use grushin::grid::{band_exponent, Dealias};
use grushin::shift::{expand_apply, expand_two, factor_of, shift, ShiftIndex, D1};
use grushin::spectral::{Grid, SpectralField};
use grushin::{Complex, GridSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_block(g: &Arc<Grid<f64>>, j: i32, m: usize, rng: &mut ChaCha8Rng) -> SpectralField<f64> {
    SpectralField::from_fn(g, |mm, q| {
        if mm == m && band_exponent(g.spec.eta(q)) == j {
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

#[test]
fn two_factor_expansion_reconstructs() {
    let g = Grid::<f64>::new(GridSpec::new(0.25, 31, 22, Dealias::THREE_HALVES)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..12 {
        let (j1, j2) = (rng.gen_range(-2..=2), rng.gen_range(-2..=2));
        let (m, n) = (rng.gen_range(0..=20), rng.gen_range(0..=20));
        let u = random_block(&g, j1, m, &mut rng);
        let v = random_block(&g, j2, n, &mut rng);
        let lhs = u.multiply(&v).unwrap().apply_resolvent_power(1.0);
        let rhs = expand_apply(&[&u, &v]).unwrap();
        let r = rhs.relative_distance(&lhs, 0.0).unwrap();
        worst = worst.max(r);
        let terms = expand_two(factor_of(&u).unwrap(), factor_of(&v).unwrap());
        let bound = 4.0 * factor_of(&u).unwrap().a.max(factor_of(&v).unwrap().a);
        assert!(terms.iter().all(|t| t.coeff.abs() <= bound));
    }
    println!("worst residual {worst:e}");
    assert!(worst < 1e-8);
}

#[test]
fn shift_contracts_and_identity() {
    let g = Grid::<f64>::new(GridSpec::new(0.25, 12, 10, Dealias::THREE_HALVES)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_block(&g, 0, 4, &mut rng);
    assert_eq!(shift(&u, ShiftIndex::IDENTITY).unwrap().coeffs, u.coeffs);
    for d in D1 {
        let s = shift(&u, d).unwrap();
        for k in [0.0, 1.0, 2.5] {
            assert!(s.sobolev_norm(k) <= u.sobolev_norm(k) * (1.0 + 1e-12));
        }
    }
}
