use elastoray_weinstein::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn config() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    // x0, xi0, envelope shift, envelope width
    (-0.3f64..0.3, 0.5f64..1.4, 0.2f64..0.8, 0.8f64..1.2).prop_map(|(x, k, a, s)| (x, k, a, s))
}

fn setup(x0: f64, xi: f64, a: f64, s: f64, sign: bool) -> (WavePacket, Grid) {
    let xi = if sign { xi } else { -xi };
    let p = WavePacket::new(1, [x0, 0.0], [xi, 0.0]).with_envelope(Envelope::Gaussian {
        sigma: s,
        shift: [a, 0.0],
    });
    let grid = fit_grid(&p, &default_ladder(), [0.0, 0.0]).unwrap();
    (p, grid)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn pairing_is_linear((x0, xi, a, s) in config(), sign: bool, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let (p, grid) = setup(x0, xi, a, s, sign);
        let alpha = C::new(re, im);
        let g = Distribution::Jump { axis: 0, at: x0, amplitude: C::new(1.0, 0.0), modulation: [0.0, 0.0], profile: None };
        for &t in &[64.0, 512.0] {
            let base = pair_packet(&g, &p, t, &grid).unwrap();
            let scaled = pair_packet(&g.clone().scaled(alpha), &p, t, &grid).unwrap();
            prop_assert!((scaled - alpha * base).norm() <= 1e-12 * (alpha * base).norm());
        }
    }

    #[test]
    fn order_ignores_unimodular_factors((x0, xi, a, s) in config(), sign: bool, theta in 0.0f64..6.28) {
        let (p, grid) = setup(x0, xi, a, s, sign);
        let g = Distribution::PointMass { at: [x0, 0.0], weight: C::new(1.0, 0.0) }.applied(Multiplier::AbsPower { exponent: 0.5 });
        let lad = default_ladder();
        let e1 = estimate_order(&g, &p, &lad, &grid).unwrap();
        let e2 = estimate_order(&g.clone().scaled(C::from_polar(1.0, theta)), &p, &lad, &grid).unwrap();
        prop_assert!((e1.order - e2.order).abs() < 1e-10);
    }

    #[test]
    fn symbol_law_remainder_rate((x0, xi, a, s) in config(), sign: bool, which in 0usize..3, jump: bool) {
        let (p, grid) = setup(x0, xi, a, s, sign);
        let op = [Multiplier::AbsPower { exponent: 1.0 }, Multiplier::Laplacian, Multiplier::Derivative { axis: 0 }][which].clone();
        let g = if jump {
            Distribution::Jump { axis: 0, at: x0, amplitude: C::new(1.0, 0.0), modulation: [1.5, 0.0],
                profile: Some(JumpProfile { center: [0.2, 0.0], width: 0.7 }) }
        } else {
            Distribution::PointMass { at: [x0, 0.0], weight: C::new(1.0, 0.0) }
        };
        let r = verify_psido_symbol_law(&g, &p, &op, &default_ladder(), &grid).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn half_wave_phase_law((x0, xi, _a, s) in config(), sign: bool, t in 0.1f64..0.6, c in 0.5f64..1.5) {
        let lad = default_ladder();
        let env = Envelope::Gaussian { sigma: s, shift: [0.0, 0.0] };
        let xi = if sign { xi } else { -xi };
        let a = HalfWave { dim: 1, t, c, sign: if sign { -1.0 } else { 1.0 } };
        let src = WavePacket::new(1, [x0, 0.0], [xi, 0.0]).with_envelope(env.clone());
        let grid = fit_grid(&src, &lad, a.displacement([xi, 0.0])).unwrap();
        let g = Distribution::PointMass { at: [x0, 0.0], weight: C::new(1.0, 0.0) };
        let r = verify_fio_symbol_extraction(&g, &a, [x0, 0.0], [xi, 0.0], &env, &lad, &grid, 1e-3).unwrap();
        prop_assert!(r.passed);
    }
}
