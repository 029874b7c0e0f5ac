use std::f64::consts::PI;

use elastoray_weinstein::*;
use num_complex::Complex64 as C;

const ONE: C = C::new(1.0, 0.0);

fn gaussian_env(sigma: f64, shift: f64) -> Envelope {
    Envelope::Gaussian {
        sigma,
        shift: [shift, 0.0],
    }
}

fn packet_1d(x0: f64, xi0: f64, env: Envelope) -> WavePacket {
    WavePacket::new(1, [x0, 0.0], [xi0, 0.0]).with_envelope(env)
}

#[test]
fn packet_matches_direct_formula() {
    let p = WavePacket::new(2, [0.2, -0.1], [0.7, -0.4]).with_envelope(gaussian_env(0.8, 0.3));
    for &tau in &[64.0f64, 300.0] {
        for x in [[0.21, -0.08], [0.0, 0.0], [0.35, -0.2]] {
            let dx = [x[0] - 0.2, x[1] + 0.1];
            let y = [tau.sqrt() * dx[0], tau.sqrt() * dx[1]];
            let u = (-((y[0] - 0.3).powi(2) + y[1] * y[1]) / (2.0 * 0.64)).exp();
            let direct = tau * C::from_polar(u, -tau * (dx[0] * 0.7 - dx[1] * 0.4));
            assert!((p.eval(x, tau) - direct).norm() <= 1e-12 * direct.norm().max(1e-300));
        }
    }
}

#[test]
fn point_mass_orders() {
    let lad = default_ladder();
    let p1 = packet_1d(0.3, 1.0, Envelope::default());
    let g1 = fit_grid(&p1, &lad, [0.0, 0.0]).unwrap();
    let d1 = Distribution::PointMass { at: [0.3, 0.0], weight: ONE };
    let e = estimate_order(&d1, &p1, &lad, &g1).unwrap();
    assert!((e.order - 0.5).abs() < 0.05);
    assert!((e.pairings[0] - 8.0).norm() < 1e-12);

    let p2 = WavePacket::new(2, [0.0, 0.1], [0.3, 0.2]).with_envelope(gaussian_env(0.5, 0.0));
    let g2 = fit_grid(&p2, &lad, [0.0, 0.0]).unwrap();
    let d2 = Distribution::PointMass { at: [0.0, 0.1], weight: ONE };
    let e = estimate_order(&d2, &p2, &lad, &g2).unwrap();
    assert!((e.order - 1.0).abs() < 0.05);
}

#[test]
fn derivative_of_point_mass_with_odd_envelope() {
    // -d/dx u_tau at x0 is -tau^{n/2} sqrt(tau) u'(0) once u(0) = 0
    let lad = default_ladder();
    let env = Envelope::Hermite { sigma: 1.0, axis: 0 };
    let p = packet_1d(0.0, 0.8, env);
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let d = Distribution::PointMassDerivative {
        at: [0.0, 0.0],
        axis: 0,
        weight: ONE,
    };
    let e = estimate_order(&d, &p, &lad, &grid).unwrap();
    assert!((e.order - 1.0).abs() < 0.05);
    for (t, v) in e.taus.iter().zip(&e.pairings) {
        assert!((v + t).norm() < 1e-12 * t);
        let q = pair_packet_quadrature(&d, &p, *t, &grid).unwrap();
        assert!((q - v).norm() < 1e-9 * v.norm());
    }
}

#[test]
fn smooth_gaussian_has_no_order() {
    let lad = default_ladder();
    let p = packet_1d(0.1, 0.2, Envelope::default());
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let g = Distribution::Gaussian {
        center: [0.0, 0.0],
        width: 0.9,
        amplitude: ONE,
    };
    let e = estimate_order(&g, &p, &lad, &grid).unwrap();
    assert!(e.order < -5.0, "slope {}", e.order);
    for &t in &lad {
        let a = pair_packet(&g, &p, t, &grid).unwrap();
        let b = pair_packet_quadrature(&g, &p, t, &grid).unwrap();
        assert!((a - b).norm() < 1e-12 * t.sqrt());
    }
}

#[test]
fn plane_wave_pairing_matches_gaussian_integral() {
    // tau^{1/2} ∫ e^{ikx} e^{-i tau (x-x0) xi} e^{-tau (x-x0)^2/2} dx
    //   = e^{ik x0} sqrt(2 pi) e^{-(k - tau xi)^2 / (2 tau)}
    let p = packet_1d(0.25, 1.0, Envelope::default());
    let lad = default_ladder();
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let k = 70.0;
    let g = Distribution::PlaneWave { k: [k, 0.0], amplitude: ONE };
    for &t in &lad {
        let oracle = C::from_polar((2.0 * PI).sqrt() * (-(k - t).powi(2) / (2.0 * t)).exp(), k * 0.25);
        let q = pair_packet_quadrature(&g, &p, t, &grid).unwrap();
        let a = pair_packet(&g, &p, t, &grid).unwrap();
        assert!((q - oracle).norm() < 1e-8);
        assert!((a - oracle).norm() < 1e-12);
    }
}

#[test]
fn multipliers_on_sampled_profiles() {
    let grid = Grid::new(1, [0.0, 0.0], 40.0, 1024).unwrap();
    let gauss = Distribution::Gaussian {
        center: [0.4, 0.0],
        width: 1.1,
        amplitude: ONE,
    }
    .sample(&grid)
    .unwrap();
    let s = Distribution::Sampled(gauss.clone());

    let Distribution::Sampled(id) = psido_apply(&s, &Multiplier::Identity).unwrap() else {
        panic!()
    };
    for (a, b) in id.values.iter().zip(&gauss.values) {
        assert!((a - b).norm() < 1e-15);
    }

    let Distribution::Sampled(dg) = psido_apply(&s, &Multiplier::Derivative { axis: 0 }).unwrap() else {
        panic!()
    };
    for (i, v) in dg.values.iter().enumerate() {
        let x = grid.point(i)[0];
        let exact = -(x - 0.4) / 1.21 * (-(x - 0.4).powi(2) / 2.42).exp();
        assert!((v.re - exact).abs() < 1e-10 && v.im.abs() < 1e-10);
    }

    // |D|^2 (e^{ikx - x^2/2}) = (1 - (ik - x)^2) e^{ikx - x^2/2}
    let k = 12.0;
    let wave = Distribution::Sampled(
        Distribution::Gaussian {
            center: [0.0, 0.0],
            width: 1.0,
            amplitude: ONE,
        }
        .applied(Multiplier::Identity)
        .sample(&grid)
        .map(|mut s| {
            for (i, v) in s.values.iter_mut().enumerate() {
                *v *= C::from_polar(1.0, k * grid.point(i)[0]);
            }
            s
        })
        .unwrap(),
    );
    let sq = Multiplier::AbsPower { exponent: 2.0 };
    let Distribution::Sampled(out) = psido_apply(&wave, &sq).unwrap() else {
        panic!()
    };
    let Distribution::Sampled(orig) = wave else { panic!() };
    let (mut miss, mut norm) = (0.0, 0.0);
    for (i, (v, g)) in out.values.iter().zip(&orig.values).enumerate() {
        let x = grid.point(i)[0];
        let z = C::new(-x, k);
        let exact = (ONE - z * z) * g;
        assert!((v - exact).norm() < 1e-9);
        miss += (v - k * k * g).norm_sqr();
        norm += (k * k * g).norm_sqr();
    }
    // relative L2 miss of the leading term is about sqrt(2)/k
    assert!((miss / norm).sqrt() < 0.15);
}

#[test]
fn symbol_law_for_point_masses_has_half_order_remainder() {
    // shifted Gaussian: u'(0)/u(0) = a/sigma^2, so ratio - 1 = i a / (sigma^2 sqrt(tau) xi0)
    let lad = default_ladder();
    let (a, xi) = (0.5, 1.0);
    let p = packet_1d(0.1, xi, gaussian_env(1.0, a));
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let g = Distribution::PointMass { at: [0.1, 0.0], weight: ONE };

    let r = verify_psido_symbol_law(&g, &p, &Multiplier::Identity, &lad, &grid).unwrap();
    assert!(r.exact && r.passed);

    let r = verify_psido_symbol_law(&g, &p, &Multiplier::AbsPower { exponent: 1.0 }, &lad, &grid).unwrap();
    for (t, d) in r.taus.iter().zip(&r.deviations) {
        assert!((d - a / (t.sqrt() * xi)).abs() < 1e-10);
    }
    assert!((r.slope.unwrap() + 0.5).abs() < 0.1);

    let r = verify_psido_symbol_law(&g, &p, &Multiplier::Laplacian, &lad, &grid).unwrap();
    assert!(r.passed);
    assert!(r.deviations[4] < 0.04);
}

#[test]
fn symbol_law_for_modulated_jumps() {
    let lad = default_ladder();
    let p = packet_1d(-0.2, -0.9, gaussian_env(0.9, -0.4));
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let g = Distribution::Jump {
        axis: 0,
        at: -0.2,
        amplitude: C::new(0.3, 1.0),
        modulation: [2.0, 0.0],
        profile: Some(JumpProfile {
            center: [0.1, 0.0],
            width: 0.8,
        }),
    };
    let e = estimate_order(&g, &p, &lad, &grid).unwrap();
    assert!((e.order + 0.5).abs() < 0.1, "jump order {}", e.order);
    for op in [
        Multiplier::AbsPower { exponent: 1.0 },
        Multiplier::Laplacian,
        Multiplier::Derivative { axis: 0 },
        Multiplier::HighPass { radius: 3.0 },
    ] {
        let r = verify_psido_symbol_law(&g, &p, &op, &lad, &grid).unwrap();
        assert!(r.passed, "{op:?}: {:?}", r.deviations);
    }
}

#[test]
fn pullback_law() {
    let lad = default_ladder();
    let env = Envelope::default();
    let jump = |at: f64| Distribution::Jump {
        axis: 0,
        at,
        amplitude: ONE,
        modulation: [0.0, 0.0],
        profile: None,
    };
    let p = packet_1d(0.0, 1.0, env.clone());
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();

    let r = verify_pullback_law(&jump(0.0), &Diffeo::identity(), 1, [0.0, 0.0], [1.0, 0.0], &env, &lad, &grid)
        .unwrap();
    assert!(r.exact && r.differences.iter().all(|d| *d == 0.0));

    let affine = Diffeo::Affine {
        matrix: [[1.3, 0.0], [0.0, 1.0]],
        shift: [0.2, 0.0],
    };
    let g_aff = fit_grid(&packet_1d(0.2, 1.0, env.clone()), &lad, [0.0, 0.0]).unwrap();
    let r = verify_pullback_law(&jump(0.2), &affine, 1, [0.0, 0.0], [1.0, 0.0], &env, &lad, &g_aff).unwrap();
    assert!(r.exact);

    let quad = Diffeo::Quadratic { eps: 0.1 };
    let r = verify_pullback_law(&jump(0.0), &quad, 1, [0.0, 0.0], [1.0, 0.0], &env, &lad, &grid).unwrap();
    assert!((r.leading_order + 0.5).abs() < 0.05);
    assert!(r.passed && r.difference_slope.unwrap() <= r.leading_order - 0.4);
}

#[test]
fn pullback_in_the_plane() {
    let lad = default_ladder();
    let env = gaussian_env(0.5, 0.0);
    let p = WavePacket::new(2, [0.0, 0.0], [0.4, 0.0]).with_envelope(env.clone());
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let g = Distribution::Jump {
        axis: 0,
        at: 0.0,
        amplitude: ONE,
        modulation: [0.0, 0.0],
        profile: Some(JumpProfile {
            center: [0.0, 0.0],
            width: 1.0,
        }),
    };
    let r = verify_pullback_law(&g, &Diffeo::Quadratic { eps: 0.2 }, 2, [0.0, 0.0], [0.4, 0.0], &env, &lad, &grid)
        .unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn half_wave_on_point_mass_in_one_dimension() {
    let lad = default_ladder();
    let env = Envelope::default();
    let a = HalfWave { dim: 1, t: 0.5, c: 1.0, sign: 1.0 };
    let xi = [1.3, 0.0];
    let src = packet_1d(0.0, xi[0], env.clone());
    let grid = fit_grid(&src, &lad, a.displacement(xi)).unwrap();
    let g = Distribution::PointMass { at: [0.0, 0.0], weight: ONE };
    let r = verify_fio_symbol_extraction(&g, &a, [0.0, 0.0], xi, &env, &lad, &grid, 1e-3).unwrap();
    assert!(r.passed && r.exact);
    assert!((r.j_lambda - 1.0).abs() < 1e-10);
    for (t, p) in r.taus.iter().zip(&r.pairings) {
        // tau^{1/2} e^{-i tau t c |xi0|}
        let oracle = C::from_polar(t.sqrt(), -t * 0.5 * 1.3);
        assert!((p - oracle).norm() < 1e-9 * t.sqrt());
    }

    let still = HalfWave { t: 0.0, ..a.clone() };
    let r = verify_fio_symbol_extraction(&g, &still, [0.0, 0.0], xi, &env, &lad, &grid, 1e-3).unwrap();
    assert!(r.exact && (r.limit - 1.0).norm() < 1e-12);

    let wide = fit_grid(&src, &lad, [a.displacement(xi)[0] + 0.4, 0.0]).unwrap();
    let off = off_graph_order(&g, &a, [0.0, 0.0], xi, [0.2, 0.0], &env, &lad, &wide).unwrap();
    assert!(off.order < -5.0, "{}", off.order);
}

#[test]
fn half_wave_in_the_plane_has_constant_symbol() {
    let lad = default_ladder();
    let env = gaussian_env(0.5, 0.0);
    let a = HalfWave { dim: 2, t: 0.3, c: 1.0, sign: -1.0 };
    let xi = [0.3, -0.2];
    let src = WavePacket::new(2, [0.0, 0.0], xi).with_envelope(env.clone());
    let grid = fit_grid(&src, &lad, a.displacement(xi)).unwrap();
    let g = Distribution::PointMass { at: [0.0, 0.0], weight: ONE };
    let r = verify_fio_symbol_extraction(&g, &a, [0.0, 0.0], xi, &env, &lad, &grid, 1e-3).unwrap();
    assert!(r.converged, "{:?}", r.deviation_slope);
    assert!(r.j_lambda > 0.1 && r.j_lambda < 1.0);
    assert!(r.phase_errors[4] < r.phase_errors[0]);
}

#[test]
fn propagator_semigroup_and_group_velocity() {
    let grid = Grid::new(1, [0.0, 0.0], 40.0, 2048).unwrap();
    let xi0 = 10.0;
    let g = Distribution::Sampled(
        grid.sample(|x| C::from_polar((-x[0] * x[0] / 2.0).exp(), xi0 * x[0]))
            .into_iter()
            .collect::<Vec<_>>()
            .pipe(|values| SampledDistribution {
                grid: grid.clone(),
                values,
            }),
    );
    let Distribution::Sampled(same) = fio_propagate_constant_speed(&g, 0.0, 1.0, 1.0).unwrap() else {
        panic!()
    };
    let Distribution::Sampled(orig) = g.clone() else { panic!() };
    assert!(same.values.iter().zip(&orig.values).all(|(a, b)| (a - b).norm() < 1e-15));

    let (t1, t2, c) = (1.5, 2.25, 1.2);
    let one = fio_propagate_constant_speed(&g, t1 + t2, c, 1.0).unwrap();
    let two = fio_propagate_constant_speed(&fio_propagate_constant_speed(&g, t1, c, 1.0).unwrap(), t2, c, 1.0)
        .unwrap();
    let (Distribution::Sampled(one), Distribution::Sampled(two)) = (one, two) else {
        panic!()
    };
    assert!(one.values.iter().zip(&two.values).all(|(a, b)| (a - b).norm() < 1e-12));

    // the packet e^{i xi0 x} moves along +xi0 at speed c
    let mass: f64 = one.values.iter().map(|v| v.norm_sqr()).sum();
    let center: f64 = one
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| grid.point(i)[0] * v.norm_sqr())
        .sum::<f64>()
        / mass;
    assert!((center - (t1 + t2) * c).abs() < grid.spacing);
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}
impl<T> Pipe for T {}

#[test]
fn refinement_changes_pairings_negligibly() {
    let lad = default_ladder();
    let p = packet_1d(0.05, -1.1, gaussian_env(1.0, 0.3));
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let fine = grid.refined();
    let dists = [
        Distribution::Jump {
            axis: 0,
            at: 0.05,
            amplitude: ONE,
            modulation: [0.0, 0.0],
            profile: None,
        },
        Distribution::PointMass { at: [0.05, 0.0], weight: ONE }.applied(Multiplier::Laplacian),
        Distribution::Gaussian {
            center: [0.0, 0.0],
            width: 0.2,
            amplitude: ONE,
        },
    ];
    for d in &dists {
        for &t in &lad {
            let a = pair_packet(d, &p, t, &grid).unwrap();
            let b = pair_packet(d, &p, t, &fine).unwrap();
            assert!((a - b).norm() <= 1e-6 * b.norm() + 1e-300, "{d:?} tau {t}");
        }
    }
}

#[test]
fn errors_are_reported() {
    let lad = default_ladder();
    let p = packet_1d(0.0, 1.0, Envelope::default());
    let coarse = Grid::new(1, [0.0, 0.0], 4.0, 1024).unwrap();
    let g = Distribution::PointMass { at: [0.0, 0.0], weight: ONE };
    assert!(matches!(
        pair_packet(&g, &p, 1024.0, &coarse),
        Err(Error::UnderResolved { .. })
    ));
    let narrow = Grid::new(1, [0.0, 0.0], 1.0, 4096).unwrap();
    assert!(matches!(
        pair_packet(&g, &p, 64.0, &narrow),
        Err(Error::WraparoundRisk { .. })
    ));
    let grid = fit_grid(&p, &lad, [0.0, 0.0]).unwrap();
    let zero = Distribution::PointMass { at: [0.0, 0.0], weight: C::new(0.0, 0.0) };
    assert_eq!(estimate_order(&zero, &p, &lad, &grid), Err(Error::ZeroPairing));
    assert!(matches!(
        estimate_order(&g, &p, &lad[..3], &grid),
        Err(Error::Invalid(_))
    ));
    let edge = Distribution::Sampled(
        Distribution::Gaussian {
            center: [1.8, 0.0],
            width: 0.1,
            amplitude: ONE,
        }
        .sample(&grid)
        .unwrap(),
    );
    assert!(matches!(
        psido_apply(&edge, &Multiplier::Laplacian),
        Err(Error::WraparoundRisk { .. })
    ));
}
