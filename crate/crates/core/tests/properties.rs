use henochromatic::dispersion::positive_frequency_residual;
use henochromatic::grid::{read_envelope_csv, write_envelope_csv};
use henochromatic::modes::ModeFamily;
use henochromatic::pulse::NullSampling;
use henochromatic::*;
use ndarray::Array2;
use proptest::prelude::*;

fn envelope(n: usize, extent: f64, re: &[f64], im: &[f64]) -> SampledEnvelope {
    let grid = TransverseGrid::new(n, extent).unwrap();
    let values = Array2::from_shape_fn((n, n), |(i, j)| Complex::new(re[i * n + j], im[i * n + j]));
    SampledEnvelope::new(grid, values, 0.0).unwrap()
}

fn random_envelope() -> impl Strategy<Value = SampledEnvelope> {
    (prop_oneof![Just(8usize), Just(16), Just(32)], 4.0..40.0f64).prop_flat_map(|(n, extent)| {
        (
            prop::collection::vec(-1.0..1.0f64, n * n),
            prop::collection::vec(-1.0..1.0f64, n * n),
        )
            .prop_map(move |(re, im)| envelope(n, extent, &re, &im))
    })
}

fn mode_family() -> impl Strategy<Value = ModeFamily> {
    prop_oneof![
        (0u32..4, 0u32..4).prop_map(|(m, n)| ModeFamily::HermiteGauss { m, n }),
        (-3i32..=3, 0u32..3).prop_map(|(l, p)| ModeFamily::LaguerreGauss { l, p }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_and_round_trip(env in random_envelope()) {
        let amp = forward_transform(&env).unwrap();
        let scale = l2_norm(&env);
        prop_assert!((l2_norm(&amp) - scale).abs() < 1e-12 * scale);
        let back = inverse_transform(&amp, env.station()).unwrap();
        for (a, b) in back.values().iter().zip(env.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn paraxial_propagation_is_unitary_and_composes(
        env in random_envelope(), z1 in -50.0..50.0f64, z2 in -50.0..50.0f64, k in 0.2..5.0f64,
    ) {
        let amp = forward_transform(&env).unwrap();
        let one = propagate_paraxial(&propagate_paraxial(&amp, z1, k).unwrap(), z2, k).unwrap();
        let both = propagate_paraxial(&amp, z1 + z2, k).unwrap();
        prop_assert!((one.norm() - amp.norm()).abs() < 1e-12 * amp.norm());
        for (a, b) in one.values().iter().zip(both.values()) {
            prop_assert!((a - b).norm() < 1e-9 * amp.max_abs());
        }
    }

    #[test]
    fn henochromatic_weight_is_flat(q in 0.0..10.0f64, k in 0.01..10.0f64, c in 0.5..3.0f64) {
        let map = DispersionMap::henochromatic().with_speed_of_light(c).unwrap();
        let w = unitarity_weight(&map, q, k).unwrap();
        prop_assert!((w - c * k).abs() < 1e-13 * c * k);
        // size of the terms that cancel in omega^2/c^2 - q^2 - kappa^2
        let scale = (k + q * q / (4.0 * k)).powi(2);
        prop_assert!(positive_frequency_residual(&map, q, k).unwrap().abs() < 1e-12 * scale);
    }

    #[test]
    fn family_weight_is_flat(alpha in -1.0..2.0f64, beta in 0.2..2.0f64, qk in 0.01..0.99f64, k in 0.1..5.0f64) {
        let map = DispersionMap::family(alpha, beta).unwrap();
        let w = unitarity_weight(&map, qk * k, k).unwrap();
        prop_assert!((w - k / beta).abs() < 1e-12 * k / beta);
        let scale = k * k * (1.0 + (2.0 * alpha.abs()).exp());
        prop_assert!(positive_frequency_residual(&map, qk * k, k).unwrap().abs() < 1e-10 * scale);
    }

    #[test]
    fn paraxial_and_monochromatic_residuals(qk in 0.0..0.999f64, k in 0.1..5.0f64) {
        let q = qk * k;
        let pa = positive_frequency_residual(&DispersionMap::paraxial(), q, k).unwrap();
        prop_assert!((pa + q.powi(4) / (4.0 * k * k)).abs() < 1e-12 * k * k);
        let mc = positive_frequency_residual(&DispersionMap::monochromatic(), q, k).unwrap();
        prop_assert!(mc.abs() < 1e-12 * k * k);
        prop_assert!(DispersionMap::monochromatic().kappa(k * (1.0 + 1e-6 + qk), k).is_err());
    }

    #[test]
    fn quantum_ip_is_scaled_paraxial_ip(
        fa in mode_family(), fb in mode_family(),
        wa in 0.8..1.5f64, wb in 0.8..1.5f64,
        ca in (-1.0..1.0f64, -1.0..1.0f64), j in 0usize..4,
    ) {
        let grid = TransverseGrid::new(64, 24.0).unwrap();
        let comb = CarrierComb::new(1.0, 0.25, 4).unwrap();
        let k = comb.carriers()[j];
        let a = ParaxialBeam::from_mode(&ModeSpec::new(fa, wa, k).unwrap(), &grid).unwrap();
        let b = ParaxialBeam::from_mode(&ModeSpec::new(fb, wb, k).unwrap(), &grid).unwrap();
        let mix = a.superpose(Complex::new(ca.0, ca.1), &b, Complex::new(1.0, 0.0)).unwrap();
        let hc = DispersionMap::henochromatic();
        let consts = PhysicalConstants::default();
        let ratio = 4.0 * std::f64::consts::PI * k / comb.spacing();
        for (x, y) in [(&a, &mix), (&mix, &mix), (&b, &a)] {
            let q = inner_product_spectral(x.spectrum(), k, &hc, y.spectrum(), k, &hc, &comb, &consts).unwrap();
            let p = paraxial_inner_product(x, y).unwrap();
            prop_assert!((q - p * ratio).norm() < 1e-11 * ratio);
        }
    }

    #[test]
    fn comb_lookup_round_trips(k_min in 0.1..10.0f64, dk in 0.001..1.0f64, count in 1usize..64, j in 0usize..64) {
        let comb = CarrierComb::new(k_min, dk, count).unwrap();
        let j = j % count;
        prop_assert_eq!(comb.index_of(comb.carrier(j)).unwrap(), j);
        prop_assert!(comb.index_of(comb.carrier(j) + 0.5 * dk).is_err());
    }

    #[test]
    fn null_decomposition_inverts_synthesis(
        count in 1usize..6, extra in 0usize..4, v in -20.0..20.0f64, seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = TransverseGrid::new(16, 12.0).unwrap();
        let comb = CarrierComb::new(1.0, 0.2, count).unwrap();
        let spectra = (0..count)
            .map(|_| {
                let values = Array2::from_shape_fn((16, 16), |_| {
                    Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                SpectralAmplitude::new(grid.clone(), values).unwrap()
            })
            .collect();
        let spectra = CarrierSpectra::new(comb, spectra).unwrap();
        let us = NullSampling::period_stations(&comb, count + extra);
        let sampling = NullSampling::new(grid, us, vec![v]).unwrap();
        let field = synthesize_multicarrier(&spectra, &DispersionMap::henochromatic(), &sampling).unwrap();
        let back = field.decompose_at(0, &comb).unwrap();
        for (a, b) in back.spectra().iter().zip(spectra.spectra()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn csv_round_trip_is_exact(env in random_envelope(), station in -100.0..100.0f64) {
        let env = env.with_station(station);
        let mut buf = Vec::new();
        write_envelope_csv(&env, &mut buf).unwrap();
        let back: SampledEnvelope = read_envelope_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.station(), station);
        prop_assert_eq!(back.values(), env.values());
        prop_assert!(back.grid() == env.grid());
    }
}
