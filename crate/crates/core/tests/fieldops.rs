use mhd_lab::fieldops::{
    curl, div, grad, laplacian, DivFreeProjector, Grid, Parity, ScalarField, Snapshot, VectorField,
    PROJECTION_TOLERANCE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_scalar(g: &Grid, rng: &mut ChaCha8Rng, parity: Parity) -> ScalarField {
    let data = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarField::from_vec(g, [parity; 3], data).unwrap()
}

fn random_vector(g: &Grid, rng: &mut ChaCha8Rng, parity: Parity) -> VectorField {
    VectorField::new([0, 1, 2].map(|_| random_scalar(g, rng, parity)))
}

fn shape() -> impl Strategy<Value = [usize; 3]> {
    prop_oneof![
        (4usize..40, 4usize..40).prop_map(|(a, b)| [a, b, 1]),
        (4usize..12, 4usize..12, 4usize..12).prop_map(|(a, b, c)| [a, b, c]),
    ]
}

fn parity() -> impl Strategy<Value = Parity> {
    prop_oneof![Just(Parity::Odd), Just(Parity::Even), Just(Parity::Free)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn div_curl_and_curl_grad_vanish(n in shape(), periodic in any::<bool>(), p in parity(), seed in any::<u64>()) {
        let g = Grid::with_periodicity(n, [1.0, 0.7, 1.3], [periodic; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_vector(&g, &mut rng, p);
        let scale = v.max_abs() / g.h_min().powi(2);
        let dc = div(&g, &curl(&g, &v).unwrap()).unwrap().max_abs();
        let cg = curl(&g, &grad(&g, &v.c[1]).unwrap()).unwrap().max_abs();
        prop_assert!(dc <= 1e-13 * scale && cg <= 1e-13 * scale, "{dc} {cg}");
    }

    #[test]
    fn projection_is_divergence_free_and_idempotent(n in shape(), seed in any::<u64>()) {
        let g = Grid::unit_box(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_vector(&g, &mut rng, Parity::Odd);
        let p = DivFreeProjector::new(&g).unwrap();
        let once = p.project(&h).unwrap();
        let twice = p.project(&once).unwrap();
        let norm = once.l2_norm(&g);
        prop_assert!(p.divergence_norm(&once).unwrap() <= PROJECTION_TOLERANCE * norm.max(1e-300));
        prop_assert!((&twice - &once).max_abs() <= 1e-12 * once.max_abs());
        // a projection never lengthens the field
        prop_assert!(norm <= h.l2_norm(&g) * (1.0 + 1e-12));
    }

    #[test]
    fn snapshots_round_trip(n in shape(), t in 0.0f64..10.0, seed in any::<u64>()) {
        let g = Grid::unit_box(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_vector(&g, &mut rng, Parity::Odd);
        let snap = Snapshot::vector(&g, "H", t, &v);
        let mut bytes = Vec::new();
        snap.write_to(&mut bytes).unwrap();
        let back = Snapshot::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(back.to_vector(&g, Parity::Odd).unwrap(), v);
        prop_assert!(back.to_scalar(&g, Parity::Odd).is_err());
    }

    #[test]
    fn periodic_second_differences_have_zero_mean(n in (6usize..30, 6usize..30), seed in any::<u64>()) {
        let g = Grid::torus([n.0, n.1, 1], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_scalar(&g, &mut rng, Parity::Free);
        let l = laplacian(&g, &f).unwrap();
        let dg = div(&g, &grad(&g, &f).unwrap()).unwrap();
        prop_assert!(l.integrate(&g).abs() <= 1e-10 * f.max_abs() / g.h_min().powi(2));
        prop_assert!(dg.integrate(&g).abs() <= 1e-10 * f.max_abs() / g.h_min().powi(2));
    }
}
